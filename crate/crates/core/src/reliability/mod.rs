//! Closed-form reliability of simplex and triple modular redundancy variants,
//! plus a numeric solver for continuous-time Markov chains.

mod markov;

pub use markov::{alpha_chain, spare_chain, Curve, MarkovChain, SPARE_USEFUL};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReliabilityError {
    #[error("failure rate must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("{name} must lie in [0, 1], got {value}")]
    BadProbability { name: &'static str, value: f64 },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("R*T = 1 leaves no failures to model")]
    DegenerateAlpha,
    #[error("no sign change in [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },
    #[error("markov chain: {0}")]
    Chain(String),
}

/// Failure rate, coverage and the alpha-count transient parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityParams {
    pub lambda_fail: f64,
    pub coverage_c: f64,
    /// Probability that a fault is transient.
    pub transient_t: f64,
    /// Probability that recovery from a transient fault succeeds.
    pub recover_r: f64,
}

impl ReliabilityParams {
    pub fn new(lambda_fail: f64) -> Self {
        ReliabilityParams { lambda_fail, coverage_c: 1.0, transient_t: 0.0, recover_r: 0.0 }
    }

    pub fn validate(&self) -> Result<(), ReliabilityError> {
        if !(self.lambda_fail > 0.0) || !self.lambda_fail.is_finite() {
            return Err(ReliabilityError::BadLambda(self.lambda_fail));
        }
        for (name, value) in [("coverage", self.coverage_c), ("T", self.transient_t), ("R", self.recover_r)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ReliabilityError::BadProbability { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Simplex,
    Tmr,
    TmrSpare,
    TmrAlpha,
}

impl std::str::FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "simplex" => Ok(Model::Simplex),
            "tmr" => Ok(Model::Tmr),
            "tmr-spare" => Ok(Model::TmrSpare),
            "tmr-alpha" => Ok(Model::TmrAlpha),
            _ => Err(format!("unknown model '{}'", s)),
        }
    }
}

pub fn tmr(r: f64) -> f64 {
    3.0 * r * r - 2.0 * r * r * r
}

/// TMR with one spare switched in with probability of success `c`.
pub fn tmr_spare(r: f64, c: f64) -> f64 {
    let q = r * (1.0 - r);
    (-3.0 * c * c + 6.0 * c) * q * q + tmr(r)
}

/// TMR whose replicas only fail on faults the alpha-count does not absorb.
pub fn tmr_alpha(simplex_r: f64, recover_r: f64, transient_t: f64) -> f64 {
    let k = 1.0 - recover_r * transient_t;
    3.0 * simplex_r.powf(2.0 * k) - 2.0 * simplex_r.powf(3.0 * k)
}

pub fn evaluate(model: Model, p: &ReliabilityParams, t: f64) -> Result<f64, ReliabilityError> {
    p.validate()?;
    if !(t >= 0.0) {
        return Err(ReliabilityError::NegativeTime(t));
    }
    let lt = p.lambda_fail * t;
    let r = (-lt).exp();
    Ok(match model {
        Model::Simplex => r,
        Model::Tmr => tmr(r),
        Model::TmrSpare => tmr_spare(r, p.coverage_c),
        Model::TmrAlpha => {
            let k = 1.0 - p.recover_r * p.transient_t;
            3.0 * (-2.0 * k * lt).exp() - 2.0 * (-3.0 * k * lt).exp()
        }
    })
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to width `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, ReliabilityError> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(ReliabilityError::NoRoot { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn crosspoint_tmr_simplex() -> f64 {
    0.5
}

/// Simplex reliability below which TMR with a spare stops paying off.
pub fn crosspoint_tmr_spare_simplex(c: f64) -> Result<f64, ReliabilityError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(ReliabilityError::BadProbability { name: "coverage", value: c });
    }
    let f = |r: f64| tmr_spare(r, c) - r;
    // The gain is negative close to 0 and positive at 1/2 for every coverage.
    bisect(f, 1e-6, 0.5, 1e-9)
}

/// Simplex reliability at which the alpha-count TMR curve falls to one half,
/// i.e. where it loses the margin plain TMR has at its own crosspoint.
pub fn crosspoint_tmr_alpha(recover_r: f64, transient_t: f64) -> Result<f64, ReliabilityError> {
    for (name, value) in [("R", recover_r), ("T", transient_t)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(ReliabilityError::BadProbability { name, value });
        }
    }
    let k = 1.0 - recover_r * transient_t;
    if k <= 0.0 {
        return Err(ReliabilityError::DegenerateAlpha);
    }
    Ok(0.5f64.powf(1.0 / k))
}

/// Where the alpha-count TMR curve actually meets the simplex curve.
pub fn intersection_tmr_alpha_simplex(recover_r: f64, transient_t: f64) -> Result<f64, ReliabilityError> {
    crosspoint_tmr_alpha(recover_r, transient_t)?;
    bisect(|r| tmr_alpha(r, recover_r, transient_t) - r, 1e-9, 0.5, 1e-12)
}

/// `(t, value)` samples of a model on `points` evenly spaced times in `[0, t_max]`.
pub fn curve(model: Model, p: &ReliabilityParams, t_max: f64, points: usize) -> Result<Curve, ReliabilityError> {
    let n = points.max(2);
    let t: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
    let values = t.iter().map(|&x| evaluate(model, p, x)).collect::<Result<Vec<_>, _>>()?;
    Ok(Curve { t, values })
}
