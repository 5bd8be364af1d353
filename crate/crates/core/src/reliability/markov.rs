use super::{ReliabilityError, ReliabilityParams};

/// Sampled values over a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

/// Continuous-time Markov chain given by its transition rates.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    pub states: Vec<String>,
    /// `rates[i][j]` for `i != j`; the diagonal is the negated row sum.
    pub rates: Vec<Vec<f64>>,
    pub initial: String,
}

const RICHARDSON_TOL: f64 = 1e-8;

impl MarkovChain {
    pub fn new(states: &[&str], initial: &str) -> Self {
        let n = states.len();
        MarkovChain {
            states: states.iter().map(|s| s.to_string()).collect(),
            rates: vec![vec![0.0; n]; n],
            initial: initial.to_string(),
        }
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn add_rate(&mut self, from: &str, to: &str, rate: f64) -> Result<(), ReliabilityError> {
        let i = self.index(from).ok_or_else(|| ReliabilityError::Chain(format!("unknown state {}", from)))?;
        let j = self.index(to).ok_or_else(|| ReliabilityError::Chain(format!("unknown state {}", to)))?;
        if i == j {
            return Err(ReliabilityError::Chain("self-loop".into()));
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(ReliabilityError::Chain(format!("bad rate {} for {}->{}", rate, from, to)));
        }
        self.rates[i][j] += rate;
        self.rates[i][i] -= rate;
        Ok(())
    }

    fn check(&self) -> Result<usize, ReliabilityError> {
        let n = self.states.len();
        if self.rates.len() != n || self.rates.iter().any(|r| r.len() != n) {
            return Err(ReliabilityError::Chain("rate matrix is not square".into()));
        }
        for (i, row) in self.rates.iter().enumerate() {
            for (j, &q) in row.iter().enumerate() {
                if i != j && (q < 0.0 || !q.is_finite()) {
                    return Err(ReliabilityError::Chain(format!("negative rate {}->{}", i, j)));
                }
            }
            let sum: f64 = row.iter().sum();
            if sum.abs() > 1e-9 * row.iter().map(|x| x.abs()).sum::<f64>().max(1.0) {
                return Err(ReliabilityError::Chain(format!("row {} does not sum to zero", self.states[i])));
            }
        }
        self.index(&self.initial).ok_or_else(|| ReliabilityError::Chain(format!("unknown initial state {}", self.initial)))
    }

    fn deriv(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in self.rates.iter().enumerate() {
            if p[i] == 0.0 {
                continue;
            }
            for (j, &q) in row.iter().enumerate() {
                out[j] += p[i] * q;
            }
        }
    }

    fn rk4(&self, p: &mut [f64], h: f64, steps: usize) {
        let n = p.len();
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for _ in 0..steps {
            self.deriv(p, &mut k1);
            for i in 0..n {
                tmp[i] = p[i] + 0.5 * h * k1[i];
            }
            self.deriv(&tmp, &mut k2);
            for i in 0..n {
                tmp[i] = p[i] + 0.5 * h * k2[i];
            }
            self.deriv(&tmp, &mut k3);
            for i in 0..n {
                tmp[i] = p[i] + h * k3[i];
            }
            self.deriv(&tmp, &mut k4);
            for i in 0..n {
                p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }

    fn max_rate(&self) -> f64 {
        self.rates.iter().enumerate().map(|(i, r)| -r[i]).fold(0.0, f64::max)
    }

    /// State probabilities at each point of an increasing time grid.
    ///
    /// Steps are halved until halving no longer moves any probability by more
    /// than 1e-8.
    pub fn solve(&self, t_grid: &[f64]) -> Result<Vec<Vec<f64>>, ReliabilityError> {
        let init = self.check()?;
        if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.first().map_or(false, |&t| t < 0.0) {
            return Err(ReliabilityError::Chain("time grid must be non-negative and increasing".into()));
        }
        let n = self.states.len();
        let mut p = vec![0.0; n];
        p[init] = 1.0;
        let mut out = Vec::with_capacity(t_grid.len());
        let mut now = 0.0;
        let base_h = if self.max_rate() > 0.0 { 0.05 / self.max_rate() } else { 1.0 };
        for &t in t_grid {
            let span = t - now;
            if span > 0.0 {
                let mut steps = (span / base_h).ceil().max(1.0) as usize;
                loop {
                    let mut coarse = p.clone();
                    self.rk4(&mut coarse, span / steps as f64, steps);
                    let mut fine = p.clone();
                    self.rk4(&mut fine, span / (2 * steps) as f64, 2 * steps);
                    let diff = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    if diff < RICHARDSON_TOL || steps > 1 << 20 {
                        p = fine;
                        break;
                    }
                    steps *= 2;
                }
            }
            now = t;
            out.push(p.clone());
        }
        Ok(out)
    }

    /// Sum of the named states' probabilities over the grid.
    pub fn sum_curve(&self, t_grid: &[f64], states: &[&str]) -> Result<Curve, ReliabilityError> {
        let idx = states
            .iter()
            .map(|s| self.index(s).ok_or_else(|| ReliabilityError::Chain(format!("unknown state {}", s))))
            .collect::<Result<Vec<_>, _>>()?;
        let probs = self.solve(t_grid)?;
        let values = probs.iter().map(|p| idx.iter().map(|&i| p[i]).sum()).collect();
        Ok(Curve { t: t_grid.to_vec(), values })
    }
}

/// Useful (non-failed) states of [`spare_chain`].
pub const SPARE_USEFUL: [&str; 7] = ["310", "300", "200", "211", "301", "201", "202"];

/// Three replicas plus one spare with imperfect switch-in coverage.
///
/// A state `abc` counts working replicas, working spares and replicas that
/// failed without being detected. `FS` is a safe failure, `FU` an unsafe one.
pub fn spare_chain(p: &ReliabilityParams) -> Result<MarkovChain, ReliabilityError> {
    p.validate()?;
    let (l, c) = (p.lambda_fail, p.coverage_c);
    let mut m = MarkovChain::new(&["310", "300", "200", "211", "301", "201", "202", "FS", "FU"], "310");
    m.add_rate("310", "300", 4.0 * l * c)?;
    m.add_rate("310", "211", 3.0 * l * (1.0 - c))?;
    m.add_rate("310", "301", l * (1.0 - c))?;
    m.add_rate("300", "200", 3.0 * l)?;
    m.add_rate("200", "FS", 2.0 * l)?;
    m.add_rate("211", "201", 3.0 * l * c)?;
    m.add_rate("211", "202", l * (1.0 - c))?;
    m.add_rate("211", "FU", 2.0 * l * (1.0 - c))?;
    m.add_rate("301", "201", 3.0 * l * c)?;
    m.add_rate("301", "202", 3.0 * l * (1.0 - c))?;
    m.add_rate("201", "FU", 2.0 * l)?;
    m.add_rate("202", "FU", 2.0 * l)?;
    Ok(m)
}

/// TMR where only faults that are not recovered as transients count.
pub fn alpha_chain(p: &ReliabilityParams) -> Result<MarkovChain, ReliabilityError> {
    p.validate()?;
    let k = 1.0 - p.recover_r * p.transient_t;
    let mut m = MarkovChain::new(&["3", "2", "F"], "3");
    m.add_rate("3", "2", 3.0 * p.lambda_fail * k)?;
    m.add_rate("2", "F", 2.0 * p.lambda_fail * k)?;
    Ok(m)
}
