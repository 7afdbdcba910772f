use std::time::{Duration, Instant};

use amrsched_solver::{solve_milp, Sense, SolveLimits, SolveResult, SolverError, Status, VarKind};

use crate::domain::Instance;
use crate::formulation::{Formulation, VarRole};

impl Formulation {
    /// Adds the ordering binary and the two disjunctive rows for sessions `a < b`
    /// (gamma indices) sharing charger `m`.
    pub fn add_order_pair(&mut self, inst: &Instance, m: usize, a: usize, b: usize) {
        let (a, b) = (a.min(b), a.max(b));
        if self.pairs.contains(&(m, a, b)) {
            return;
        }
        let sa = self.sets.sessions[m].iter().position(|&t| t == a).expect("session on charger");
        let sb = self.sets.sessions[m].iter().position(|&t| t == b).expect("session on charger");
        let u = self
            .model
            .add_var(format!("u_m{m}_s{sa}_s{sb}"), VarKind::Binary, 0.0, 1.0, 0.0);
        self.roles.push(VarRole::Order { m, a, b });
        let (ta, tb) = (self.sets.gamma[a], self.sets.gamma[b]);
        let (va, vb) = (self.vars.charge[a].clone(), self.vars.charge[b].clone());
        let end_a = self.bigm.end_hi(inst, m, ta.j);
        let end_b = self.bigm.end_hi(inst, m, tb.j);
        let lo_a = self.bigm.start_lo(inst, ta.i, m);
        let lo_b = self.bigm.start_lo(inst, tb.i, m);

        // u = 1: a before b.
        let (m1, m2) = self.bigm.non_overlap(end_a, lo_b);
        self.model.add_row(
            format!("nolapab_m{m}_s{sa}_s{sb}"),
            vec![
                (va.start, 1.0),
                (va.duration, 1.0),
                (vb.start, -1.0),
                (u, m1),
                (va.g, m2),
                (vb.g, m2),
            ],
            Sense::Le,
            m1 + 2.0 * m2,
        );
        let (m1, m2) = self.bigm.non_overlap(end_b, lo_a);
        self.model.add_row(
            format!("nolapba_m{m}_s{sa}_s{sb}"),
            vec![
                (vb.start, 1.0),
                (vb.duration, 1.0),
                (va.start, -1.0),
                (u, -m1),
                (vb.g, m2),
                (va.g, m2),
            ],
            Sense::Le,
            2.0 * m2,
        );
        self.pairs.push((m, a, b));
    }

    /// Active sessions on a common charger whose intervals overlap by more than `tol`.
    pub fn overlapping_pairs(&self, values: &[f64], tol: f64) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (m, sessions) in self.sets.sessions.iter().enumerate() {
            let active: Vec<(usize, f64, f64)> = sessions
                .iter()
                .filter(|&&t| values[self.vars.charge[t].g.0] > 0.5)
                .map(|&t| {
                    let cv = &self.vars.charge[t];
                    let s = values[cv.start.0];
                    (t, s, s + values[cv.duration.0])
                })
                .collect();
            for (x, &(a, sa, ea)) in active.iter().enumerate() {
                for &(b, sb, eb) in &active[x + 1..] {
                    if ea.min(eb) - sa.max(sb) > tol {
                        out.push((m, a.min(b), a.max(b)));
                    }
                }
            }
        }
        out
    }

    /// Solves the model, adding ordering pairs for overlapping sessions and
    /// re-solving until no charger is double-booked.
    pub fn solve(&mut self, inst: &Instance, limits: &SolveLimits) -> Result<SolveResult, SolverError> {
        let started = Instant::now();
        let mut nodes = 0;
        loop {
            let left = limits.time_limit.saturating_sub(started.elapsed());
            let mut res = solve_milp(&self.model, &limits.clone().with_time_limit(left))?;
            nodes += res.nodes;
            res.nodes = nodes;
            res.wall_time = started.elapsed();
            let Some(values) = res.values.as_ref() else {
                return Ok(res);
            };
            if !self.options.charger_capacity {
                return Ok(res);
            }
            let found = self.overlapping_pairs(values, 1e-6);
            if found.is_empty() {
                return Ok(res);
            }
            if res.status != Status::Optimal || started.elapsed() >= limits.time_limit {
                return Ok(SolveResult {
                    status: Status::Limit,
                    objective: None,
                    best_bound: res.best_bound,
                    values: None,
                    gap: None,
                    nodes,
                    wall_time: started.elapsed(),
                });
            }
            for (m, a, b) in found {
                self.add_order_pair(inst, m, a, b);
            }
        }
    }
}

/// Remaining time helper for callers sharing one budget across several solves.
pub fn remaining(limit: Duration, started: Instant) -> Duration {
    limit.saturating_sub(started.elapsed())
}
