use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::VotingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Majority,
    Plurality,
    Median,
    WeightedAverage,
    Consensus,
}

impl Algorithm {
    pub fn from_name(s: &str) -> Option<Algorithm> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "MAJORITY" => Some(Algorithm::Majority),
            "PLURALITY" => Some(Algorithm::Plurality),
            "MEDIAN" => Some(Algorithm::Median),
            "WEIGHTED_AVERAGE" | "AVERAGE" => Some(Algorithm::WeightedAverage),
            "CONSENSUS" => Some(Algorithm::Consensus),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Majority => "MAJORITY",
            Algorithm::Plurality => "PLURALITY",
            Algorithm::Median => "MEDIAN",
            Algorithm::WeightedAverage => "WEIGHTED_AVERAGE",
            Algorithm::Consensus => "CONSENSUS",
        }
    }
}

pub type MetricFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Named distance functions available to voters.
#[derive(Clone)]
pub struct MetricRegistry {
    metrics: BTreeMap<String, MetricFn>,
}

impl fmt::Debug for MetricRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.metrics.keys()).finish()
    }
}

impl Default for MetricRegistry {
    fn default() -> Self {
        let mut r = MetricRegistry { metrics: BTreeMap::new() };
        r.register("bitwise", |a, b| f64::from((a.to_bits() ^ b.to_bits()).count_ones()));
        r.register("abs_num", |a, b| (a - b).abs());
        r
    }
}

impl MetricRegistry {
    pub fn register(&mut self, name: &str, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) {
        self.metrics.insert(name.to_string(), Arc::new(f));
    }

    pub fn get(&self, name: &str) -> Result<MetricFn, VotingError> {
        self.metrics.get(name).cloned().ok_or_else(|| VotingError::UnknownMetric(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.metrics.contains_key(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteParams {
    pub epsilon: f64,
    pub scaling: f64,
}

impl Default for VoteParams {
    fn default() -> Self {
        VoteParams { epsilon: 0.0, scaling: 1.0 }
    }
}

/// Result of one vote over the members' values.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteOutcome {
    pub value: Option<f64>,
    /// Members whose value supports the result.
    pub winners: Vec<usize>,
    /// Members that answered but disagree with the result.
    pub minority: Vec<usize>,
    pub missing: Vec<usize>,
}

impl VoteOutcome {
    pub fn agreed(&self) -> bool {
        self.value.is_some()
    }
}

fn cluster(present: &[(usize, f64)], i: usize, eps: f64, d: &MetricFn) -> Vec<usize> {
    let vi = present[i].1;
    present.iter().filter(|(_, v)| d(vi, *v) <= eps).map(|(k, _)| *k).collect()
}

/// Votes on `values`, indexed by member; `None` marks a missing answer.
pub fn vote(alg: Algorithm, values: &[Option<f64>], metric: &MetricFn, p: VoteParams) -> VoteOutcome {
    let present: Vec<(usize, f64)> = values.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect();
    let missing: Vec<usize> = values.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(i, _)| i).collect();
    let finish = |value: Option<f64>, winners: Vec<usize>| {
        let minority = if value.is_some() {
            present.iter().map(|(i, _)| *i).filter(|i| !winners.contains(i)).collect()
        } else {
            Vec::new()
        };
        VoteOutcome { value, winners: if value.is_some() { winners } else { Vec::new() }, minority, missing: missing.clone() }
    };
    if present.is_empty() {
        return finish(None, Vec::new());
    }
    let n = values.len();
    match alg {
        Algorithm::Majority | Algorithm::Plurality => {
            let clusters: Vec<Vec<usize>> = (0..present.len()).map(|i| cluster(&present, i, p.epsilon, metric)).collect();
            let best = clusters.iter().map(|c| c.len()).max().unwrap_or(0);
            let first = clusters.iter().position(|c| c.len() == best).unwrap();
            if alg == Algorithm::Majority {
                if 2 * best > n {
                    finish(Some(present[first].1), clusters[first].clone())
                } else {
                    finish(None, Vec::new())
                }
            } else {
                let distinct_best = clusters
                    .iter()
                    .filter(|c| c.len() == best)
                    .any(|c| c.iter().any(|m| !clusters[first].contains(m)));
                if distinct_best {
                    finish(None, Vec::new())
                } else {
                    finish(Some(present[first].1), clusters[first].clone())
                }
            }
        }
        Algorithm::Median => {
            let mut alive: Vec<(usize, f64)> = present.clone();
            alive.sort_by(|a, b| a.1.total_cmp(&b.1));
            while alive.len() > 2 {
                let mut worst = (0, 1, f64::NEG_INFINITY);
                for a in 0..alive.len() {
                    for b in a + 1..alive.len() {
                        let dist = metric(alive[a].1, alive[b].1);
                        if dist > worst.2 {
                            worst = (a, b, dist);
                        }
                    }
                }
                alive.remove(worst.1);
                alive.remove(worst.0);
            }
            let (winner, value) = alive[0];
            let winners = present.iter().filter(|(_, v)| metric(value, *v) <= p.epsilon).map(|(i, _)| *i).collect::<Vec<_>>();
            let winners = if winners.contains(&winner) { winners } else { vec![winner] };
            finish(Some(value), winners)
        }
        Algorithm::WeightedAverage => {
            let mean = present.iter().map(|(_, v)| v).sum::<f64>() / present.len() as f64;
            finish(Some(mean * p.scaling), present.iter().map(|(i, _)| *i).collect())
        }
        Algorithm::Consensus => {
            let all_close = present.iter().all(|(_, a)| present.iter().all(|(_, b)| metric(*a, *b) <= p.epsilon));
            if all_close && missing.is_empty() {
                finish(Some(present[0].1), present.iter().map(|(i, _)| *i).collect())
            } else {
                finish(None, Vec::new())
            }
        }
    }
}
