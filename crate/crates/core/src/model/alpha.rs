use super::ModelError;

/// Outcome of a single detector check on a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Judgment {
    Ok,
    Faulty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assessment {
    Ok,
    Transient,
    PermanentOrIntermittent,
}

/// Discriminates transient faults from permanent or intermittent ones.
///
/// Each faulty judgment adds one to the score, each clean judgment multiplies
/// it by `factor`. Gaps in the detector's labels stand for clean judgments that
/// were never reported.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCounter {
    pub value: f64,
    pub factor: f64,
    pub threshold: f64,
    pub last_label: Option<u64>,
}

impl AlphaCounter {
    pub fn new(threshold: f64, factor: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&factor) || !factor.is_finite() {
            return Err(ModelError::BadAlphaParams { threshold, factor });
        }
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(ModelError::BadAlphaParams { threshold, factor });
        }
        Ok(AlphaCounter { value: 0.0, factor, threshold, last_label: None })
    }

    /// One explicit step, ignoring labels.
    pub fn apply(&mut self, j: Judgment) {
        match j {
            Judgment::Ok => self.value *= self.factor,
            Judgment::Faulty => self.value += 1.0,
        }
    }

    /// Labelled update; the labels of one detector must be strictly increasing.
    pub fn update(&mut self, j: Judgment, label: u64) -> Result<Assessment, ModelError> {
        if let Some(last) = self.last_label {
            if label <= last {
                return Err(ModelError::StaleLabel { label, last });
            }
            let gap = label - last;
            if gap > 1 {
                self.decay(gap - 1);
            }
        }
        self.last_label = Some(label);
        self.apply(j);
        Ok(self.assessment())
    }

    fn decay(&mut self, steps: u64) {
        let p = i32::try_from(steps).unwrap_or(i32::MAX);
        self.value *= self.factor.powi(p);
    }

    pub fn assessment(&self) -> Assessment {
        if self.value >= self.threshold {
            Assessment::PermanentOrIntermittent
        } else if self.value > 0.0 {
            Assessment::Transient
        } else {
            Assessment::Ok
        }
    }
}
