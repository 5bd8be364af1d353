use super::PermKind;

/// Steps needed by the identity permutation.
pub fn identity_lambda(n: u64) -> u64 {
    (3 * n * n + 5 * n + 2 * (n / 2)) / 4
}

/// Steps in which four processors act under the identity permutation.
pub fn identity_u4(n: u64) -> u64 {
    (n * n + n % 2).saturating_sub(2 * n) / 4
}

/// Steps needed by the pipelined permutation.
pub fn pipelined_lambda(n: u64) -> u64 {
    3 * n
}

/// Total processor-steps: every one of the `N(N+1)` messages costs one send and one receive.
pub fn utilization_total(n: u64) -> u64 {
    2 * n * (n + 1)
}

/// Predicted figures for one exchange.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub lambda: u64,
    pub utilization: u64,
    pub mu: f64,
    pub epsilon: f64,
}

impl ClosedForm {
    pub fn predict(n: u64, kind: PermKind) -> Option<ClosedForm> {
        let lambda = match kind {
            PermKind::Identity => identity_lambda(n),
            PermKind::Pipelined => pipelined_lambda(n),
            PermKind::PseudoRandom => return None,
        };
        let utilization = utilization_total(n);
        let mu = utilization as f64 / lambda as f64;
        let epsilon = mu / (n + 1) as f64;
        Some(ClosedForm { lambda, utilization, mu, epsilon })
    }
}
