use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::error::SolverError;
use crate::lp::{LpEngine, LpOutcome, LpSolution};
use crate::model::{Model, VarId};
use crate::result::{SolveLimits, SolveResult, Status};

/// An open node: the parent's LP value plus the branching fixings leading to it.
struct Node {
    bound: f64,
    seq: u64,
    fixings: Vec<(VarId, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap; the smallest bound (then the oldest node) must come out first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    objective: f64,
    values: Vec<f64>,
}

/// Branch-and-bound over the binary variables of `model`.
///
/// Nodes are selected by best bound; after branching the search plunges into the
/// child on the rounding side of the branching variable while that child remains the
/// best open node (always, before the first incumbent). The branching variable is
/// the most fractional binary, ties broken by the lowest variable id.
pub fn solve_milp(model: &Model, limits: &SolveLimits) -> Result<SolveResult, SolverError> {
    model.validate()?;
    let start = Instant::now();
    let mut engine = LpEngine::new(model, &[]);
    let binaries: Vec<VarId> = model.binaries().collect();

    let root = match engine.solve(&[])? {
        LpOutcome::Optimal(sol) => sol,
        LpOutcome::Infeasible => {
            return Ok(SolveResult::without_solution(Status::Infeasible, f64::INFINITY, 1, start.elapsed()));
        }
        LpOutcome::Unbounded => {
            return Ok(SolveResult::without_solution(
                Status::Unbounded,
                f64::NEG_INFINITY,
                1,
                start.elapsed(),
            ));
        }
    };

    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut seq: u64 = 0;
    let mut incumbent: Option<Incumbent> = None;
    let mut nodes: u64 = 0;
    let mut current: Option<(Vec<(VarId, f64)>, LpSolution)> = Some((Vec::new(), root));
    let mut hit_limit = false;

    loop {
        if nodes >= limits.node_limit || start.elapsed() >= limits.time_limit {
            hit_limit = current.is_some() || !heap.is_empty();
            if let Some((fixings, sol)) = current.take() {
                heap.push(Node {
                    bound: sol.objective,
                    seq,
                    fixings,
                });
            }
            break;
        }
        let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |inc| limits.cutoff(inc.objective));

        let (fixings, sol) = match current.take() {
            Some(c) => c,
            None => {
                let Some(node) = heap.pop() else { break };
                if node.bound >= cutoff {
                    heap.clear();
                    break;
                }
                match engine.solve(&node.fixings)? {
                    LpOutcome::Optimal(sol) => (node.fixings, sol),
                    _ => {
                        nodes += 1;
                        continue;
                    }
                }
            }
        };
        nodes += 1;

        let obj = sol.objective;
        if obj >= cutoff {
            continue;
        }
        let Some((var, frac_value)) = branching_candidate(&binaries, &sol.values, limits.int_tol) else {
            if let Some(inc) = polish(model, &mut engine, sol, &fixings, &binaries)? {
                if incumbent.as_ref().map_or(true, |cur| inc.objective < cur.objective) {
                    incumbent = Some(inc);
                }
            }
            continue;
        };

        let (first, second) = if frac_value >= 0.5 { (1.0, 0.0) } else { (0.0, 1.0) };
        let mut other = fixings.clone();
        other.push((var, second));
        heap.push(Node {
            bound: obj,
            seq,
            fixings: other,
        });
        seq += 1;

        let mut dive = fixings;
        dive.push((var, first));
        if let LpOutcome::Optimal(child) = engine.solve(&dive)? {
            let child_obj = child.objective;
            let best_open = heap.peek().map_or(f64::INFINITY, |n| n.bound);
            if incumbent.is_none() || child_obj <= best_open {
                current = Some((dive, child));
            } else if child_obj < cutoff {
                heap.push(Node {
                    bound: child_obj,
                    seq,
                    fixings: dive,
                });
                seq += 1;
            }
        } else {
            nodes += 1;
        }
    }

    let wall_time = start.elapsed();
    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let res = match incumbent {
        Some(inc) => {
            let bound = if hit_limit {
                open_bound.min(inc.objective)
            } else {
                inc.objective
            };
            let gap = limits.gap(inc.objective, bound);
            let status = if !hit_limit || gap <= limits.rel_gap {
                Status::Optimal
            } else {
                Status::Feasible
            };
            SolveResult {
                status,
                objective: Some(inc.objective),
                best_bound: bound,
                values: Some(inc.values),
                gap: Some(gap),
                nodes,
                wall_time,
            }
        }
        None if hit_limit => SolveResult::without_solution(Status::Limit, open_bound, nodes, wall_time),
        None => SolveResult::without_solution(Status::Infeasible, f64::INFINITY, nodes, wall_time),
    };
    Ok(res)
}

fn branching_candidate(binaries: &[VarId], values: &[f64], int_tol: f64) -> Option<(VarId, f64)> {
    let mut best: Option<(VarId, f64, f64)> = None;
    for &b in binaries {
        let x = values[b.0];
        let frac = (x - x.floor()).min(x.ceil() - x);
        if frac > int_tol && best.map_or(true, |(_, f, _)| frac > f) {
            best = Some((b, frac, x));
        }
    }
    best.map(|(b, _, x)| (b, x))
}

/// Turns an integral LP solution into an incumbent whose binaries are exactly 0/1,
/// re-optimising the continuous part with every binary fixed to its rounded value.
fn polish(
    model: &Model,
    engine: &mut LpEngine,
    sol: LpSolution,
    fixings: &[(VarId, f64)],
    binaries: &[VarId],
) -> Result<Option<Incumbent>, SolverError> {
    let exact = binaries.iter().all(|b| sol.values[b.0] == sol.values[b.0].round());
    let mut values = if exact {
        sol.values
    } else {
        let mut all = fixings.to_vec();
        all.extend(binaries.iter().map(|&b| (b, sol.values[b.0].round())));
        match engine.solve(&all)? {
            LpOutcome::Optimal(s) => s.values,
            _ => return Ok(None),
        }
    };
    for &b in binaries {
        values[b.0] = values[b.0].round();
    }
    Ok(Some(Incumbent {
        objective: model.objective_value(&values),
        values,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    fn knapsack(values: &[f64], weights: &[f64], cap: f64) -> Model {
        let mut m = Model::new();
        let vars: Vec<VarId> = values
            .iter()
            .enumerate()
            .map(|(i, v)| m.add_binary(format!("x{i}"), -v))
            .collect();
        m.add_row("cap", vars.iter().zip(weights).map(|(&v, &w)| (v, w)), Sense::Le, cap);
        m
    }

    fn brute_force_knapsack(values: &[f64], weights: &[f64], cap: f64) -> f64 {
        let n = values.len();
        (0u32..1 << n)
            .filter_map(|mask| {
                let (mut v, mut w) = (0.0, 0.0);
                for i in 0..n {
                    if mask >> i & 1 == 1 {
                        v += values[i];
                        w += weights[i];
                    }
                }
                (w <= cap).then_some(v)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn eight_item_knapsack_matches_enumeration() {
        let values = [10.0, 13.0, 7.0, 8.0, 15.0, 4.0, 9.0, 11.0];
        let weights = [5.0, 7.0, 3.0, 4.0, 8.0, 2.0, 5.0, 6.0];
        let m = knapsack(&values, &weights, 20.0);
        let r = solve_milp(&m, &SolveLimits::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        let best = brute_force_knapsack(&values, &weights, 20.0);
        assert!((r.objective.unwrap() + best).abs() < 1e-9, "{:?} vs {best}", r.objective);
        let v = r.values.unwrap();
        assert!(m.residual(&v) < 1e-9);
        assert_eq!(m.integrality_violation(&v), 0.0);
    }

    #[test]
    fn fixed_binary_needs_no_branching() {
        let mut m = Model::new();
        let b = m.add_var("b", crate::VarKind::Binary, 1.0, 1.0, 2.0);
        let x = m.add_continuous("x", 0.0, 5.0, 1.0);
        m.add_row("r", [(x, 1.0), (b, 1.0)], Sense::Ge, 2.5);
        let r = solve_milp(&m, &SolveLimits::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert_eq!(r.nodes, 1);
        assert!((r.objective.unwrap() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_toy() {
        let mut m = Model::new();
        let x = m.add_binary("x", 1.0);
        m.add_row("a", [(x, 1.0)], Sense::Ge, 1.0);
        m.add_row("b", [(x, 1.0)], Sense::Le, 0.0);
        let r = solve_milp(&m, &SolveLimits::default()).unwrap();
        assert_eq!(r.status, Status::Infeasible);
        assert!(r.values.is_none());
    }

    #[test]
    fn integer_infeasible_but_lp_feasible() {
        // 2x + 2y = 1 has LP solutions but no binary one.
        let mut m = Model::new();
        let x = m.add_binary("x", 1.0);
        let y = m.add_binary("y", 1.0);
        m.add_row("odd", [(x, 2.0), (y, 2.0)], Sense::Eq, 1.0);
        let r = solve_milp(&m, &SolveLimits::default()).unwrap();
        assert_eq!(r.status, Status::Infeasible);
    }

    #[test]
    fn node_limit_without_incumbent_reports_limit() {
        let values = [10.0, 13.0, 7.0, 8.0, 15.0, 4.0, 9.0, 11.0];
        let weights = [5.5, 7.5, 3.5, 4.5, 8.5, 2.5, 5.5, 6.5];
        let m = knapsack(&values, &weights, 20.0);
        let limits = SolveLimits {
            node_limit: 1,
            ..SolveLimits::default()
        };
        let r = solve_milp(&m, &limits).unwrap();
        assert!(matches!(r.status, Status::Limit | Status::Feasible));
        if r.status == Status::Limit {
            assert!(r.values.is_none());
        }
    }

    #[test]
    fn deterministic_results() {
        let values = [3.0, 5.0, 4.0, 6.0, 2.0, 7.0];
        let weights = [2.0, 3.0, 2.5, 4.0, 1.0, 5.0];
        let m = knapsack(&values, &weights, 9.0);
        let a = solve_milp(&m, &SolveLimits::default()).unwrap();
        let b = solve_milp(&m, &SolveLimits::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.values, b.values);
        assert_eq!(a.nodes, b.nodes);
    }
}
