use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    /// An incumbent exists but a limit stopped the search before the gap closed.
    Feasible,
    Infeasible,
    Unbounded,
    /// A limit was hit before any incumbent was found.
    Limit,
}

impl Status {
    pub fn has_solution(self) -> bool {
        matches!(self, Status::Optimal | Status::Feasible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveLimits {
    pub time_limit: Duration,
    pub node_limit: u64,
    /// Relative gap at which the search stops with `Optimal`.
    pub rel_gap: f64,
    /// Absolute gap at which the search stops with `Optimal`; covers objectives near zero.
    pub abs_gap: f64,
    pub int_tol: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(300),
            node_limit: 1_000_000,
            rel_gap: 1e-7,
            abs_gap: 1e-10,
            int_tol: 1e-6,
        }
    }
}

impl SolveLimits {
    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = limit;
        self
    }

    /// Relative gap between an incumbent value and a bound, reported as zero once the
    /// absolute difference is within `abs_gap`.
    pub fn gap(&self, incumbent: f64, bound: f64) -> f64 {
        let diff = (incumbent - bound).max(0.0);
        if diff <= self.abs_gap {
            0.0
        } else {
            diff / incumbent.abs().max(self.abs_gap)
        }
    }

    /// Largest objective value a node may have and still be worth exploring.
    pub fn cutoff(&self, incumbent: f64) -> f64 {
        incumbent - self.abs_gap.max(self.rel_gap * incumbent.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    pub objective: Option<f64>,
    pub best_bound: f64,
    pub values: Option<Vec<f64>>,
    pub gap: Option<f64>,
    pub nodes: u64,
    pub wall_time: Duration,
}

impl SolveResult {
    pub(crate) fn without_solution(status: Status, best_bound: f64, nodes: u64, wall_time: Duration) -> Self {
        Self {
            status,
            objective: None,
            best_bound,
            values: None,
            gap: None,
            nodes,
            wall_time,
        }
    }

    pub fn value(&self, var: crate::VarId) -> Option<f64> {
        self.values.as_ref().map(|v| v[var.0])
    }
}
