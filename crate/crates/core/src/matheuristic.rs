//! Hierarchical matheuristic: a coordination master over routes and charger
//! reservations, exact per-robot subproblems on the routes it proposes, and
//! pattern cuts fed back to the master.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use amrsched_solver::{solve_lp_with_fixings, solve_milp, Model, Sense, SolveLimits, SolverError, Status, VarId, VarKind};

use crate::baselines::{rule_based, DispatchPolicy};
use crate::domain::{
    objective, ChargeStop, Config, DomainError, FleetSchedule, Instance, Leg, ObjectiveMode, RobotPlan, TaskTiming,
};
use crate::formulation::bigm::window_slack;
use crate::formulation::{
    build, mccormick::mccormick_rows, BuildOptions, CellVars, DecodeError, Formulation, Layer, PartitionGrid,
    RouteArc, Transition,
};

/// One leg of a robot pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternLeg {
    /// `to == n + 1` for the arc into the sink.
    Direct { from: usize, to: usize },
    /// `t` indexes the master's gamma set; `mode` is a position in the robot's mode list.
    Charge {
        t: usize,
        from: usize,
        to: usize,
        charger: usize,
        mode: usize,
    },
}

/// Two consecutive sessions on one charger in the master plan, separated at
/// `point`: the first must end by it and the second may not start before it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Precedence {
    pub charger: usize,
    pub first: usize,
    pub second: usize,
    pub point: f64,
}

/// Route of one robot taken from a master solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub robot: usize,
    pub legs: Vec<PatternLeg>,
    /// Master binaries of the legs, in leg order.
    #[serde(skip)]
    pub arcs: Vec<VarId>,
    /// Separations involving this robot's sessions.
    pub precedences: Vec<Precedence>,
}

impl Pattern {
    /// Number of active transitions.
    pub fn size(&self) -> usize {
        self.legs.len()
    }

    pub fn charges(&self) -> usize {
        self.legs.iter().filter(|l| matches!(l, PatternLeg::Charge { .. })).count()
    }

    fn key(&self) -> (usize, Vec<PatternLeg>) {
        (self.robot, self.legs.clone())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PatternError {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("master arc {0:?} has no variable")]
    UnknownArc(RouteArc),
}

/// Per-robot patterns of a master solution plus the charger separations.
pub fn extract_patterns(form: &Formulation, values: &[f64]) -> Result<Vec<Pattern>, PatternError> {
    let routes = form.routes(values)?;
    let n = form.vars.start.len();
    let mut patterns = Vec::with_capacity(routes.len());
    for (r, route) in routes.iter().enumerate() {
        let mut legs = Vec::with_capacity(route.len());
        let mut arcs = Vec::with_capacity(route.len());
        for &arc in route {
            match arc {
                RouteArc::Direct { i, j } => {
                    let v = if j == n + 1 {
                        form.sets.end.iter().position(|&e| e == (r, i)).map(|x| form.vars.end[x])
                    } else {
                        form.sets.direct.iter().position(|&d| d == (r, i, j)).map(|x| form.vars.direct[x])
                    };
                    arcs.push(v.ok_or(PatternError::UnknownArc(arc))?);
                    legs.push(PatternLeg::Direct { from: i, to: j });
                }
                RouteArc::Charge(t) => {
                    let tr = form.sets.gamma[t];
                    arcs.push(form.vars.charge[t].g);
                    legs.push(PatternLeg::Charge {
                        t,
                        from: tr.i,
                        to: tr.j,
                        charger: tr.m,
                        mode: tr.l,
                    });
                }
            }
        }
        patterns.push(Pattern {
            robot: r,
            legs,
            arcs,
            precedences: Vec::new(),
        });
    }
    for (m, sessions) in form.sets.sessions.iter().enumerate() {
        let mut active: Vec<(f64, usize)> = sessions
            .iter()
            .filter(|&&t| values[form.vars.charge[t].g.0] > 0.5)
            .map(|&t| (values[form.vars.charge[t].start.0], t))
            .collect();
        active.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for w in active.windows(2) {
            let p = Precedence {
                charger: m,
                first: w[0].1,
                second: w[1].1,
                point: w[1].0,
            };
            let (ra, rb) = (form.sets.gamma[p.first].r, form.sets.gamma[p.second].r);
            patterns[ra].precedences.push(p);
            if rb != ra {
                patterns[rb].precedences.push(p);
            }
        }
    }
    Ok(patterns)
}

struct SubCharge {
    t: usize,
    tr: Transition,
    start: VarId,
    queue: VarId,
    duration: VarId,
    post_wait: VarId,
    post_soc: VarId,
    idle: VarId,
    cells: Vec<(usize, usize, CellVars)>,
}

/// Exact model of one robot on a fixed route.
pub struct Subproblem {
    pub model: Model,
    pub robot: usize,
    legs: Vec<PatternLeg>,
    /// `(task, start, tardiness, soc_in)` in route order.
    tasks: Vec<(usize, VarId, VarId, VarId)>,
    charges: Vec<SubCharge>,
}

impl Subproblem {
    /// Partition binaries, grouped by charging transition.
    pub fn cell_groups(&self) -> Vec<Vec<VarId>> {
        self.charges.iter().map(|c| c.cells.iter().map(|(_, _, v)| v.z).collect()).collect()
    }
}

/// Builds the route-conditioned model of `pattern.robot`. The queueing term is
/// priced with `queue_weight`; zero leaves queues unpriced.
pub fn build_subproblem(
    instance: &Instance,
    config: &Config,
    options: &BuildOptions,
    pattern: &Pattern,
    queue_weight: f64,
) -> Subproblem {
    let inst = instance;
    let r = pattern.robot;
    let robot = &inst.robots[r];
    let n = inst.num_tasks();
    let h = inst.horizon;
    let grid = PartitionGrid::uniform(robot.smin, robot.smax, config.p_s, h, config.p_w);
    let mut model = Model::new();
    let mut tasks = Vec::new();
    let mut charges = Vec::new();
    // Ready time and SOC after service at the current node: (var, constant).
    let mut at_time: Option<VarId> = None;
    let mut at_soc: Option<VarId> = None;

    let mut task_vars = |model: &mut Model, k: usize| {
        let task = inst.task(k);
        let t = model.add_continuous(format!("T_k{k}"), task.release, h, 0.0);
        let cap = if options.tardiness_cap { window_slack(task.release, task.due) } else { h };
        let tard = model.add_continuous(format!("tard_k{k}"), 0.0, cap, config.mu);
        model.add_row(format!("due_k{k}"), vec![(t, 1.0), (tard, -1.0)], Sense::Le, task.due);
        let s = model.add_continuous(format!("sin_k{k}"), 0.0, robot.smax, 0.0);
        model.add_row(format!("reserve_k{k}"), vec![(s, 1.0)], Sense::Ge, robot.smin + task.energy);
        tasks.push((k, t, tard, s));
        (t, s)
    };

    for leg in &pattern.legs {
        let (i, j) = match *leg {
            PatternLeg::Direct { from, to } | PatternLeg::Charge { from, to, .. } => (from, to),
        };
        // Terms and constant of `T_i + p_i` and of `S_i - e_i`.
        let ready = |c: f64| -> (Vec<(VarId, f64)>, f64) {
            match at_time {
                Some(v) => (vec![(v, 1.0)], inst.service(i) + c),
                None => (Vec::new(), c),
            }
        };
        let left = |c: f64| -> (Vec<(VarId, f64)>, f64) {
            match at_soc {
                Some(v) => (vec![(v, 1.0)], -inst.energy(i) - c),
                None => (Vec::new(), robot.s0 - c),
            }
        };
        match *leg {
            PatternLeg::Direct { to, .. } if to == n + 1 => {}
            PatternLeg::Direct { .. } => {
                let (tj, sj) = task_vars(&mut model, j);
                let tr = inst.direct(i, j);
                let (mut terms, c) = ready(tr.time);
                for t in &mut terms {
                    t.1 = -t.1;
                }
                terms.push((tj, 1.0));
                model.add_row(format!("dtime_{i}_{j}"), terms, Sense::Ge, c);
                let (mut terms, c) = left(tr.energy);
                for t in &mut terms {
                    t.1 = -t.1;
                }
                terms.push((sj, 1.0));
                model.add_row(format!("dsoc_{i}_{j}"), terms, Sense::Eq, c);
                at_time = Some(tj);
                at_soc = Some(sj);
            }
            PatternLeg::Charge { t, charger: m, mode, .. } => {
                let sfx = format!("{i}_{j}_m{m}_l{mode}");
                let rate = robot.modes[mode].rate;
                let start = model.add_continuous(format!("B_{sfx}"), 0.0, h, 0.0);
                let queue = model.add_continuous(format!("q_{sfx}"), 0.0, h, queue_weight);
                let duration = model.add_continuous(format!("tc_{sfx}"), 0.0, h, robot.modes[mode].aging);
                let post_wait = model.add_continuous(format!("w_{sfx}"), 0.0, h, 0.0);
                let post_soc = model.add_continuous(format!("sb_{sfx}"), 0.0, robot.smax, 0.0);
                let idle = model.add_continuous(format!("ell_{sfx}"), 0.0, robot.smax * h, robot.idle_aging);

                let (terms, c) = ready(inst.to_charger(i, m).time);
                let neg: Vec<(VarId, f64)> = terms.iter().map(|&(v, a)| (v, -a)).collect();
                let mut row = neg.clone();
                row.push((start, 1.0));
                model.add_row(format!("cstart_{sfx}"), row, Sense::Ge, c);
                let mut row = terms;
                row.extend([(queue, 1.0), (start, -1.0)]);
                model.add_row(format!("cqueue_{sfx}"), row, Sense::Eq, -c);
                model.add_row(format!("cend_{sfx}"), vec![(start, 1.0), (duration, 1.0)], Sense::Le, h);

                let (terms, c) = left(inst.to_charger(i, m).energy);
                model.add_row(format!("reach_{sfx}"), terms.clone(), Sense::Ge, robot.smin - c);
                let mut row: Vec<(VarId, f64)> = terms.iter().map(|&(v, a)| (v, -a)).collect();
                row.extend([(post_soc, 1.0), (duration, -rate)]);
                model.add_row(format!("sb_{sfx}"), row, Sense::Eq, c);

                for p in pattern.precedences.iter() {
                    if p.first == t {
                        let row = vec![(start, 1.0), (duration, 1.0)];
                        model.add_row(format!("sepend_{sfx}_s{}", p.second), row, Sense::Le, p.point);
                    } else if p.second == t {
                        model.add_row(format!("sepstart_{sfx}_s{}", p.first), vec![(start, 1.0)], Sense::Ge, p.point);
                    }
                }

                let (tj, sj) = task_vars(&mut model, j);
                let from = inst.from_charger(m, j);
                model.add_row(
                    format!("clink_{sfx}"),
                    vec![(tj, 1.0), (start, -1.0), (duration, -1.0), (post_wait, -1.0)],
                    Sense::Eq,
                    from.time,
                );
                model.add_row(
                    format!("asoc_{sfx}"),
                    vec![(sj, 1.0), (post_soc, -1.0)],
                    Sense::Eq,
                    -from.energy,
                );

                let mut cells = Vec::new();
                let mut sel = Vec::new();
                let mut agg_s = vec![(post_soc, 1.0)];
                let mut agg_w = vec![(post_wait, 1.0)];
                let mut agg_l = vec![(idle, 1.0)];
                for (p, q, cell) in grid.cells() {
                    let cv = CellVars {
                        z: model.add_var(format!("z_{sfx}_p{p}_q{q}"), VarKind::Binary, 0.0, 1.0, 0.0),
                        s: model.add_continuous(format!("sbpq_{sfx}_p{p}_q{q}"), 0.0, cell.s_hi, 0.0),
                        w: model.add_continuous(format!("wpq_{sfx}_p{p}_q{q}"), 0.0, cell.w_hi, 0.0),
                        l: model.add_continuous(format!("lpq_{sfx}_p{p}_q{q}"), 0.0, cell.s_hi * cell.w_hi, 0.0),
                    };
                    sel.push((cv.z, 1.0));
                    agg_s.push((cv.s, -1.0));
                    agg_w.push((cv.w, -1.0));
                    agg_l.push((cv.l, -1.0));
                    mccormick_rows(&mut model, &format!("mc_{sfx}_p{p}_q{q}"), &cell, &cv);
                    cells.push((p, q, cv));
                }
                model.add_row(format!("psel_{sfx}"), sel, Sense::Eq, 1.0);
                model.add_row(format!("aggs_{sfx}"), agg_s, Sense::Eq, 0.0);
                model.add_row(format!("aggw_{sfx}"), agg_w, Sense::Eq, 0.0);
                model.add_row(format!("aggl_{sfx}"), agg_l, Sense::Eq, 0.0);

                charges.push(SubCharge {
                    t,
                    tr: Transition { r, i, j, m, l: mode },
                    start,
                    queue,
                    duration,
                    post_wait,
                    post_soc,
                    idle,
                    cells,
                });
                at_time = Some(tj);
                at_soc = Some(sj);
            }
        }
    }
    Subproblem {
        model,
        robot: r,
        legs: pattern.legs.clone(),
        tasks,
        charges,
    }
}

/// How a subproblem is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubproblemStrategy {
    /// Partition choices enumerated per transition, one LP each, pruned by
    /// single-transition bounds.
    #[default]
    Enumerate,
    /// The whole model handed to branch-and-bound.
    Milp,
}

/// Exact schedule of one robot on its pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub plan: RobotPlan,
    pub tasks: Vec<TaskTiming>,
    /// Charging plus linearized idle aging.
    pub degradation: f64,
    /// Subproblem objective value.
    pub objective: f64,
    /// `(gamma index, p, q)` of the selected cell per charging leg.
    pub cells: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub robot: usize,
    /// `None` when the pattern admits no feasible schedule.
    pub fragment: Option<Fragment>,
    pub lp_solves: usize,
}

impl SubproblemResult {
    pub fn is_feasible(&self) -> bool {
        self.fragment.is_some()
    }
}

/// Solves a subproblem built by [`build_subproblem`].
pub fn solve_subproblem(
    instance: &Instance,
    sub: &Subproblem,
    strategy: SubproblemStrategy,
    limits: &SolveLimits,
) -> Result<SubproblemResult, SolverError> {
    let (values, lp_solves) = match strategy {
        SubproblemStrategy::Enumerate => enumerate(sub)?,
        SubproblemStrategy::Milp => {
            let res = solve_milp(&sub.model, limits)?;
            match res.status {
                Status::Infeasible => (None, 1),
                _ => (res.values, 1),
            }
        }
    };
    let fragment = values.map(|v| fragment(instance, sub, &v));
    Ok(SubproblemResult {
        robot: sub.robot,
        fragment,
        lp_solves,
    })
}

type Fixings = Vec<(VarId, f64)>;

fn lp(model: &Model, fix: &Fixings) -> Result<Option<(f64, Vec<f64>)>, SolverError> {
    let res = solve_lp_with_fixings(model, fix)?;
    Ok(match (res.status, res.objective, res.values) {
        (Status::Optimal, Some(obj), Some(v)) => Some((obj, v)),
        _ => None,
    })
}

/// Fixings choosing cell `pick` of every group.
fn pick_cells(groups: &[Vec<VarId>], picks: &[(usize, usize)]) -> Fixings {
    let mut fix = Vec::new();
    for &(g, pick) in picks {
        fix.extend(groups[g].iter().enumerate().map(|(x, &z)| (z, if x == pick { 1.0 } else { 0.0 })));
    }
    fix
}

fn enumerate(sub: &Subproblem) -> Result<(Option<Vec<f64>>, usize), SolverError> {
    let groups = sub.cell_groups();
    let mut solves = 0;
    if groups.is_empty() {
        return Ok((lp(&sub.model, &Vec::new())?.map(|s| s.1), 1));
    }
    // Bound of each single-transition choice; with one transition it is the leaf itself.
    let mut bounds: Vec<Vec<(usize, f64)>> = Vec::with_capacity(groups.len());
    let mut best: Option<(f64, Vec<f64>)> = None;
    for g in 0..groups.len() {
        let mut feasible = Vec::new();
        for pick in 0..groups[g].len() {
            solves += 1;
            if let Some((obj, v)) = lp(&sub.model, &pick_cells(&groups, &[(g, pick)]))? {
                feasible.push((pick, obj));
                if groups.len() == 1 && best.as_ref().is_none_or(|b| obj < b.0) {
                    best = Some((obj, v));
                }
            }
        }
        if feasible.is_empty() {
            return Ok((None, solves));
        }
        bounds.push(feasible);
    }
    if groups.len() == 1 {
        return Ok((best.map(|b| b.1), solves));
    }
    let mut combos: Vec<(f64, Vec<usize>)> = vec![(f64::NEG_INFINITY, Vec::new())];
    for opts in &bounds {
        let mut next = Vec::with_capacity(combos.len() * opts.len());
        for (lb, picks) in &combos {
            for &(pick, b) in opts {
                let mut p = picks.clone();
                p.push(pick);
                next.push((lb.max(b), p));
            }
        }
        combos = next;
    }
    combos.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    for (lb, picks) in combos {
        if let Some((obj, _)) = &best {
            if lb >= obj - 1e-9 * obj.abs().max(1.0) {
                break;
            }
        }
        let fix = pick_cells(&groups, &picks.iter().copied().enumerate().collect::<Vec<_>>());
        solves += 1;
        if let Some((obj, v)) = lp(&sub.model, &fix)? {
            if best.as_ref().is_none_or(|b| obj < b.0) {
                best = Some((obj, v));
            }
        }
    }
    Ok((best.map(|b| b.1), solves))
}

fn fragment(instance: &Instance, sub: &Subproblem, values: &[f64]) -> Fragment {
    let val = |v: VarId| values[v.0];
    let robot = &instance.robots[sub.robot];
    let mut legs = Vec::with_capacity(sub.legs.len());
    let mut charges = sub.charges.iter();
    let mut cells = Vec::new();
    let mut degradation = 0.0;
    for leg in &sub.legs {
        match *leg {
            PatternLeg::Direct { from, to } => legs.push(Leg::Direct { from, to }),
            PatternLeg::Charge { .. } => {
                let c = charges.next().expect("one charge record per charging leg");
                let (p, q, _) = c
                    .cells
                    .iter()
                    .max_by(|a, b| val(a.2.z).total_cmp(&val(b.2.z)))
                    .expect("grid has cells");
                cells.push((c.t, *p, *q));
                let mode = &robot.modes[c.tr.l];
                degradation += mode.aging * val(c.duration) + robot.idle_aging * val(c.idle);
                legs.push(Leg::Charge(ChargeStop {
                    from: c.tr.i,
                    to: c.tr.j,
                    charger: c.tr.m,
                    mode: mode.id,
                    start: val(c.start),
                    queue: val(c.queue).max(0.0),
                    duration: val(c.duration).max(0.0),
                    post_wait: val(c.post_wait).max(0.0),
                    post_soc: val(c.post_soc),
                    idle_lin: Some(val(c.idle)),
                }));
            }
        }
    }
    let tasks: Vec<TaskTiming> = sub
        .tasks
        .iter()
        .map(|&(k, t, _, s)| TaskTiming {
            task: k,
            robot: sub.robot,
            start: val(t),
            tardiness: (val(t) - instance.task(k).due).max(0.0),
            soc_in: val(s),
        })
        .collect();
    let objective = sub.model.objective_value(values);
    Fragment {
        plan: RobotPlan {
            robot: sub.robot,
            legs,
            degradation,
        },
        tasks,
        degradation,
        objective,
        cells,
    }
}

/// Feedback from one subproblem to the master.
#[derive(Debug, Clone, PartialEq)]
pub enum Cut {
    /// `theta_r >= value - big_m * (N - sum of pattern binaries)`.
    Opt {
        robot: usize,
        arcs: Vec<VarId>,
        value: f64,
        big_m: f64,
    },
    /// `sum of pattern binaries <= N - 1`.
    NoGood { robot: usize, arcs: Vec<VarId> },
}

impl Cut {
    /// Right-hand side of the surrogate bound when `active` of the pattern's
    /// binaries are on; `None` for a no-good cut.
    pub fn theta_bound(&self, active: usize) -> Option<f64> {
        match self {
            Cut::Opt { arcs, value, big_m, .. } => Some(value - big_m * (arcs.len() - active) as f64),
            Cut::NoGood { .. } => None,
        }
    }

    /// Appends the cut as a row of the master model.
    pub fn add_to(&self, master: &mut Formulation, tag: usize) {
        match self {
            Cut::Opt {
                robot,
                arcs,
                value,
                big_m,
            } => {
                let theta = master.vars.degradation[*robot];
                let mut terms = vec![(theta, 1.0)];
                terms.extend(arcs.iter().map(|&v| (v, -big_m)));
                let rhs = value - big_m * arcs.len() as f64;
                master.model.add_row(format!("optcut{tag}_r{robot}"), terms, Sense::Ge, rhs);
            }
            Cut::NoGood { robot, arcs } => {
                let terms: Vec<(VarId, f64)> = arcs.iter().map(|&v| (v, 1.0)).collect();
                let rhs = arcs.len() as f64 - 1.0;
                master.model.add_row(format!("nogood{tag}_r{robot}"), terms, Sense::Le, rhs);
            }
        }
    }
}

/// Optimality cut for a feasible result, exclusion cut otherwise.
pub fn make_cut(pattern: &Pattern, result: &SubproblemResult, big_m: f64) -> Cut {
    match &result.fragment {
        Some(f) => Cut::Opt {
            robot: pattern.robot,
            arcs: pattern.arcs.clone(),
            value: f.degradation.max(0.0),
            big_m,
        },
        None => Cut::NoGood {
            robot: pattern.robot,
            arcs: pattern.arcs.clone(),
        },
    }
}

/// Upper bound on one robot's degradation: every task reached through a
/// charging stop of horizon length at the highest aging rate.
pub fn theta_big_m(instance: &Instance) -> f64 {
    let h = instance.horizon;
    let per = instance
        .robots
        .iter()
        .map(|r| {
            let alpha = r.modes.iter().map(|m| m.aging).fold(0.0, f64::max);
            alpha * h + r.idle_aging * r.smax * h
        })
        .fold(0.0, f64::max);
    per * instance.num_tasks().max(1) as f64
}

/// Builds the master: fleet routing and coarse timing without SOC rows.
pub fn build_master(instance: &Instance, config: &Config, options: &BuildOptions) -> Formulation {
    build(instance, config, options, Layer::Master)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatheuristicSettings {
    pub max_iterations: usize,
    /// Iterations without incumbent improvement before stopping.
    pub stagnation: usize,
    pub time_limit: Duration,
    pub strategy: SubproblemStrategy,
    /// Price queueing in the subproblems with the fleet weight.
    pub price_queue: bool,
    pub build: BuildOptions,
    pub policy: DispatchPolicy,
    pub audit_tol: f64,
}

impl Default for MatheuristicSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            stagnation: 10,
            time_limit: Duration::from_secs(300),
            strategy: SubproblemStrategy::Enumerate,
            price_queue: true,
            build: BuildOptions::default(),
            policy: DispatchPolicy::default(),
            audit_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// No new cut separated the last master solution.
    FixedPoint,
    IterationLimit,
    Stagnation,
    TimeLimit,
    /// The master became infeasible: every route combination is excluded.
    MasterInfeasible,
    /// The incumbent reached zero, the least value any schedule can have.
    ZeroIncumbent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRecord {
    pub robot: usize,
    pub legs: Vec<PatternLeg>,
    pub feasible: bool,
    /// Subproblem degradation when feasible.
    pub degradation: Option<f64>,
    pub lp_solves: usize,
    /// Whether this pattern produced a new cut.
    pub new_cut: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub master_objective: f64,
    pub patterns: Vec<PatternRecord>,
    pub cuts_added: usize,
    /// Surrogate degradation per robot in the master solution.
    pub theta: Vec<f64>,
    /// Objective of the merged schedule of this iteration, when all robots were feasible.
    pub merged_objective: Option<f64>,
    pub incumbent: Option<f64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iterations: Vec<IterationRecord>,
}

impl IterationLog {
    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for it in &self.iterations {
            out.push_str(&serde_json::to_string(it).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct MatheuristicOutcome {
    pub schedule: FleetSchedule,
    /// Exact objective of `schedule`.
    pub objective: f64,
    /// Objective of the dispatching plan the search started from.
    pub initial_objective: Option<f64>,
    pub log: IterationLog,
    pub stop: StopReason,
    pub wall_time: Duration,
}

#[derive(Debug, Error)]
pub enum MatheuristicError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("no feasible fleet plan found after {} iterations", log.iterations.len())]
    NoIncumbent { log: IterationLog },
}

/// Merges per-robot fragments into a fleet schedule.
pub fn merge(instance: &Instance, fragments: &[Fragment]) -> Result<FleetSchedule, DomainError> {
    let mut schedule = FleetSchedule::empty(instance.robots.len());
    for f in fragments {
        schedule.robots[f.plan.robot] = f.plan.clone();
        schedule.tasks.extend(f.tasks.iter().cloned());
    }
    schedule.tasks.sort_by_key(|t| t.task);
    schedule.refresh_degradation(instance)?;
    Ok(schedule)
}

/// Runs the matheuristic with default settings and the given time budget.
pub fn run(
    instance: &Instance,
    config: &Config,
    limits: &SolveLimits,
) -> Result<MatheuristicOutcome, MatheuristicError> {
    let settings = MatheuristicSettings {
        time_limit: limits.time_limit,
        ..Default::default()
    };
    run_with(instance, config, &settings, limits)
}

pub fn run_with(
    instance: &Instance,
    config: &Config,
    settings: &MatheuristicSettings,
    limits: &SolveLimits,
) -> Result<MatheuristicOutcome, MatheuristicError> {
    let started = Instant::now();
    let budget = settings.time_limit;
    let left = || budget.saturating_sub(started.elapsed());
    let eval = |s: &FleetSchedule| objective(instance, s, config, ObjectiveMode::Exact);
    let clean = |s: &FleetSchedule| {
        crate::audit::audit(instance, s, settings.audit_tol).is_ok_and(|rep| rep.is_clean())
    };

    let mut incumbent: Option<(f64, FleetSchedule)> = None;
    if let Ok(plan) = rule_based(instance, &settings.policy) {
        if clean(&plan) {
            incumbent = Some((eval(&plan)?, plan));
        }
    }
    let initial_objective = incumbent.as_ref().map(|i| i.0);

    let mut master = build_master(instance, config, &settings.build);
    let big_m = theta_big_m(instance);
    let queue_weight = if settings.price_queue { config.lambda } else { 0.0 };
    let mut pool: HashMap<(usize, Vec<PatternLeg>), Cut> = HashMap::new();
    let mut log = IterationLog::default();
    let mut since_improvement = 0;
    let mut stop = StopReason::IterationLimit;

    for iteration in 1..=settings.max_iterations {
        if left().is_zero() {
            stop = StopReason::TimeLimit;
            break;
        }
        let res = master.solve(instance, &limits.clone().with_time_limit(left()))?;
        let Some(values) = res.values else {
            stop = if res.status == Status::Infeasible {
                StopReason::MasterInfeasible
            } else {
                StopReason::TimeLimit
            };
            break;
        };
        let patterns = extract_patterns(&master, &values)?;
        let mut records = Vec::with_capacity(patterns.len());
        let mut fragments = Vec::with_capacity(patterns.len());
        let mut new_cuts = Vec::new();
        let mut timed_out = false;
        for pattern in &patterns {
            let sub = build_subproblem(instance, config, &settings.build, pattern, queue_weight);
            let sub_limits = limits.clone().with_time_limit(left());
            let result = solve_subproblem(instance, &sub, settings.strategy, &sub_limits)?;
            if settings.strategy == SubproblemStrategy::Milp && left().is_zero() {
                timed_out = true;
            }
            let key = pattern.key();
            let new_cut = !pool.contains_key(&key);
            if new_cut {
                let cut = make_cut(pattern, &result, big_m);
                new_cuts.push(cut.clone());
                pool.insert(key, cut);
            }
            records.push(PatternRecord {
                robot: pattern.robot,
                legs: pattern.legs.clone(),
                feasible: result.is_feasible(),
                degradation: result.fragment.as_ref().map(|f| f.degradation),
                lp_solves: result.lp_solves,
                new_cut,
            });
            if let Some(f) = result.fragment {
                fragments.push(f);
            }
        }

        let mut merged_objective = None;
        let mut improved = false;
        if fragments.len() == patterns.len() {
            let merged = merge(instance, &fragments)?;
            if clean(&merged) {
                let obj = eval(&merged)?;
                merged_objective = Some(obj);
                if incumbent.as_ref().is_none_or(|i| obj < i.0 - 1e-12) {
                    incumbent = Some((obj, merged));
                    improved = true;
                }
            }
        }
        // A cut the current master point already satisfies leaves that point optimal.
        let binding = new_cuts.iter().any(|cut| match cut {
            Cut::Opt { robot, value, .. } => values[master.vars.degradation[*robot].0] < value - 1e-9,
            Cut::NoGood { .. } => true,
        });
        for (x, cut) in new_cuts.iter().enumerate() {
            cut.add_to(&mut master, log.iterations.len() * patterns.len() + x);
        }
        log.iterations.push(IterationRecord {
            iteration,
            master_objective: res.objective.unwrap_or(f64::NAN),
            patterns: records,
            cuts_added: new_cuts.len(),
            theta: master.vars.degradation.iter().map(|v| values[v.0]).collect(),
            merged_objective,
            incumbent: incumbent.as_ref().map(|i| i.0),
            wall_time: started.elapsed().as_secs_f64(),
        });

        since_improvement = if improved { 0 } else { since_improvement + 1 };
        if incumbent.as_ref().is_some_and(|i| i.0 <= 0.0) {
            stop = StopReason::ZeroIncumbent;
            break;
        }
        if !binding {
            stop = StopReason::FixedPoint;
            break;
        }
        if timed_out || left().is_zero() {
            stop = StopReason::TimeLimit;
            break;
        }
        if since_improvement >= settings.stagnation {
            stop = StopReason::Stagnation;
            break;
        }
    }

    match incumbent {
        Some((objective, schedule)) => Ok(MatheuristicOutcome {
            schedule,
            objective,
            initial_objective,
            log,
            stop,
            wall_time: started.elapsed(),
        }),
        None => Err(MatheuristicError::NoIncumbent { log }),
    }
}
