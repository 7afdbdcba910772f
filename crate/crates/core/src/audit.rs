//! Solver-free verification of a [`FleetSchedule`] against its [`Instance`].
//!
//! Indicator constraints are checked in their implied form on the arcs the
//! schedule actually uses, so no big-M constant enters the check.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    compute_metrics, ChargeStop, DomainError, FleetSchedule, Instance, Leg, Metrics, RobotPlan, TaskTiming,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Every task served by exactly one robot.
    Assignment,
    /// Release times, the horizon, and consistency of reported tardiness.
    TimeWindow,
    /// Start-time arithmetic along direct arcs.
    Sequencing,
    /// Arrival, queueing and departure arithmetic around a charging stop.
    ChargeTiming,
    /// SOC after a task stays above the reserve; SOC never exceeds capacity.
    Reserve,
    /// SOC values recomputed forward from the initial charge.
    SocRecursion,
    /// Two sessions on one charger overlap in time.
    NonOverlap,
    /// Negative durations, waits or queues.
    Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: Family,
    /// Robot, task, charger or leg indices identifying the offending entity.
    pub indices: Vec<usize>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub violations: Vec<Violation>,
    pub max_violation: f64,
    /// Largest `|idle_lin - post_soc * post_wait|` over charging legs that carry a linearized value.
    pub mccormick_gap: f64,
    pub metrics: Metrics,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// Worst magnitude recorded for a family, if any.
    pub fn worst(&self, family: Family) -> Option<f64> {
        self.violations
            .iter()
            .filter(|v| v.family == family)
            .map(|v| v.magnitude)
            .fold(None, |acc, m| Some(acc.map_or(m, |a: f64| a.max(m))))
    }

    /// Families with at least one violation, in enum order.
    pub fn families(&self) -> Vec<Family> {
        let mut f: Vec<Family> = self.violations.iter().map(|v| v.family).collect();
        f.sort();
        f.dedup();
        f
    }

    /// Human-readable summary, one line per violation.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.is_clean() {
            out.push_str("clean\n");
        }
        for v in &self.violations {
            out.push_str(&format!("{:?} {:?} {:.3e}\n", v.family, v.indices, v.magnitude));
        }
        out.push_str(&format!(
            "max violation {:.3e}, mccormick gap {:.3e}, total degradation {:.6e}, max degradation {:.6e}\n",
            self.max_violation, self.mccormick_gap, self.metrics.total_degradation, self.metrics.max_degradation
        ));
        out
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AuditError {
    #[error("task {0} appears more than once")]
    DuplicateTask(usize),
    #[error("robot {robot}: {msg}")]
    BrokenRoute { robot: usize, msg: String },
    #[error("schedule has {found} robot plans, instance has {expected} robots")]
    RobotCount { found: usize, expected: usize },
    #[error("task timing for {task} does not match the routes")]
    Timing { task: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Checks that each plan is a chain from the source to the sink over known
/// tasks, chargers and modes, with each task visited at most once overall.
fn check_structure(inst: &Instance, schedule: &FleetSchedule) -> Result<(), AuditError> {
    let n = inst.num_tasks();
    if schedule.robots.len() != inst.robots.len() {
        return Err(AuditError::RobotCount {
            found: schedule.robots.len(),
            expected: inst.robots.len(),
        });
    }
    let mut seen = vec![false; n + 1];
    for (r, plan) in schedule.robots.iter().enumerate() {
        let broken = |msg: String| AuditError::BrokenRoute { robot: r, msg };
        if plan.robot != r {
            return Err(broken(format!("plan at position {r} names robot {}", plan.robot)));
        }
        if plan.legs.is_empty() {
            continue;
        }
        let mut at = 0;
        for (idx, leg) in plan.legs.iter().enumerate() {
            if leg.from() != at {
                return Err(broken(format!("leg {idx} leaves {} but the robot is at {at}", leg.from())));
            }
            let to = leg.to();
            let last = idx + 1 == plan.legs.len();
            if last != (to == n + 1) || to == 0 || to > n + 1 {
                return Err(broken(format!("leg {idx} ends at node {to}")));
            }
            if let Leg::Charge(c) = leg {
                if to == n + 1 {
                    return Err(broken("a charging leg cannot end at the sink".into()));
                }
                if c.charger >= inst.chargers.len() {
                    return Err(broken(format!("unknown charger {}", c.charger)));
                }
                inst.robots[r].mode(c.mode)?;
            }
            if to <= n {
                if seen[to] {
                    return Err(AuditError::DuplicateTask(to));
                }
                seen[to] = true;
            }
            at = to;
        }
    }
    let mut timed = vec![false; n + 1];
    for t in &schedule.tasks {
        if t.task == 0 || t.task > n || timed[t.task] {
            return Err(AuditError::DuplicateTask(t.task));
        }
        timed[t.task] = true;
        let on_route = schedule
            .robots
            .get(t.robot)
            .is_some_and(|p| p.tasks().any(|k| k == t.task));
        if !on_route {
            return Err(AuditError::Timing { task: t.task });
        }
    }
    if (1..=n).any(|k| seen[k] != timed[k]) {
        let k = (1..=n).find(|&k| seen[k] != timed[k]).unwrap_or(0);
        return Err(AuditError::Timing { task: k });
    }
    Ok(())
}

struct Collector {
    tol: f64,
    out: Vec<Violation>,
}

impl Collector {
    /// Records `magnitude` if it exceeds the tolerance.
    fn check(&mut self, family: Family, indices: Vec<usize>, magnitude: f64) {
        if magnitude > self.tol || magnitude.is_nan() {
            self.out.push(Violation {
                family,
                indices,
                magnitude,
            });
        }
    }
}

/// Audits `schedule` against every constraint family of the fleet model.
pub fn audit(instance: &Instance, schedule: &FleetSchedule, tolerance: f64) -> Result<AuditReport, AuditError> {
    check_structure(instance, schedule)?;
    let inst = instance;
    let n = inst.num_tasks();
    let mut c = Collector {
        tol: tolerance,
        out: Vec::new(),
    };
    let timing: Vec<Option<&TaskTiming>> = (0..=n).map(|k| schedule.timing(k)).collect();
    let start = |k: usize| if k == 0 { 0.0 } else { timing[k].map_or(0.0, |t| t.start) };

    for k in 1..=n {
        match timing[k] {
            None => c.check(Family::Assignment, vec![k], 1.0),
            Some(t) => {
                let task = inst.task(k);
                c.check(Family::TimeWindow, vec![k], task.release - t.start);
                c.check(Family::TimeWindow, vec![k], t.start - inst.horizon);
                let tard = (t.start - task.due).max(0.0);
                c.check(Family::TimeWindow, vec![k], (t.tardiness - tard).abs());
            }
        }
    }

    for (r, plan) in schedule.robots.iter().enumerate() {
        for (idx, leg) in plan.legs.iter().enumerate() {
            let i = leg.from();
            let ready = start(i) + inst.service(i);
            match leg {
                Leg::Direct { to, .. } if *to <= n => {
                    let tau = inst.direct(i, *to).time;
                    c.check(Family::Sequencing, vec![r, i, *to], ready + tau - start(*to));
                }
                Leg::Direct { .. } => {}
                Leg::Charge(s) => {
                    let arrive = ready + inst.to_charger(i, s.charger).time;
                    let ids = vec![r, idx, s.charger];
                    c.check(Family::ChargeTiming, ids.clone(), arrive - s.start);
                    c.check(Family::ChargeTiming, ids.clone(), s.start - arrive - s.queue);
                    let depart = s.start + s.duration + s.post_wait + inst.from_charger(s.charger, s.to).time;
                    c.check(Family::ChargeTiming, ids.clone(), (start(s.to) - depart).abs());
                    c.check(Family::ChargeTiming, ids.clone(), s.start + s.duration - inst.horizon);
                    for v in [s.queue, s.duration, s.post_wait] {
                        c.check(Family::Sign, ids.clone(), -v);
                    }
                }
            }
        }
        check_soc(inst, plan, &timing, &mut c);
    }

    let sessions: Vec<(usize, usize, &ChargeStop)> = schedule
        .robots
        .iter()
        .flat_map(|p| {
            p.legs
                .iter()
                .enumerate()
                .filter_map(move |(idx, l)| l.charge().map(|s| (p.robot, idx, s)))
        })
        .collect();
    for (x, &(ra, la, a)) in sessions.iter().enumerate() {
        for &(rb, lb, b) in &sessions[x + 1..] {
            if a.charger != b.charger {
                continue;
            }
            let overlap = (a.start + a.duration).min(b.start + b.duration) - a.start.max(b.start);
            c.check(Family::NonOverlap, vec![a.charger, ra, la, rb, lb], overlap);
        }
    }

    let mccormick_gap = schedule
        .charges()
        .filter_map(|(_, s)| s.idle_lin.map(|l| (l - s.post_soc * s.post_wait).abs()))
        .fold(0.0, f64::max);
    let max_violation = c.out.iter().map(|v| v.magnitude).fold(0.0, f64::max);
    Ok(AuditReport {
        violations: c.out,
        max_violation,
        mccormick_gap,
        metrics: compute_metrics(inst, schedule)?,
    })
}

/// Recomputes arrival SOC from the initial charge and compares with stored values.
fn check_soc(inst: &Instance, plan: &RobotPlan, timing: &[Option<&TaskTiming>], c: &mut Collector) {
    let n = inst.num_tasks();
    let r = plan.robot;
    let robot = &inst.robots[r];
    let mut soc = robot.s0;
    for (idx, leg) in plan.legs.iter().enumerate() {
        let i = leg.from();
        let after = soc - inst.energy(i);
        if i > 0 {
            c.check(Family::Reserve, vec![r, i], robot.smin - after);
        }
        let arrive = match leg {
            Leg::Direct { to, .. } if *to <= n => after - inst.direct(i, *to).energy,
            Leg::Direct { .. } => break,
            Leg::Charge(s) => {
                let at_charger = after - inst.to_charger(i, s.charger).energy;
                c.check(Family::Reserve, vec![r, idx, s.charger], robot.smin - at_charger);
                let rate = robot.modes[s.mode].rate;
                let post = at_charger + rate * s.duration;
                c.check(Family::SocRecursion, vec![r, idx], (post - s.post_soc).abs());
                c.check(Family::Reserve, vec![r, idx], post - robot.smax);
                post - inst.from_charger(s.charger, s.to).energy
            }
        };
        let j = leg.to();
        if let Some(t) = timing[j] {
            c.check(Family::SocRecursion, vec![r, j], (arrive - t.soc_in).abs());
        }
        c.check(Family::Reserve, vec![r, j], arrive - robot.smax);
        soc = arrive;
    }
}

/// What happens at a point of a SOC series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SocEvent {
    Start,
    TaskArrival(usize),
    TaskDone(usize),
    ChargerArrival(usize),
    ChargeStart(usize),
    ChargeEnd(usize),
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocPoint {
    pub time: f64,
    pub soc: f64,
    pub event: SocEvent,
}

/// Time-stamped SOC of one robot, linear between consecutive points.
///
/// Task start times come from `tasks`; missing entries fall back to the
/// earliest arrival.
pub fn soc_trace(instance: &Instance, robot: usize, legs: &[Leg], tasks: &[TaskTiming]) -> Vec<SocPoint> {
    let inst = instance;
    let n = inst.num_tasks();
    let rb = &inst.robots[robot];
    let mut soc = rb.s0;
    let mut time = 0.0;
    let mut out = vec![SocPoint {
        time,
        soc,
        event: SocEvent::Start,
    }];
    let start_of = |k: usize, earliest: f64| {
        tasks
            .iter()
            .find(|t| t.task == k)
            .map_or(earliest.max(inst.release(k)), |t| t.start)
    };
    for leg in legs {
        let i = leg.from();
        if i > 0 {
            time += inst.service(i);
            soc -= inst.energy(i);
            out.push(SocPoint {
                time,
                soc,
                event: SocEvent::TaskDone(i),
            });
        }
        let j = leg.to();
        match leg {
            Leg::Direct { .. } if j > n => {
                out.push(SocPoint {
                    time,
                    soc,
                    event: SocEvent::End,
                });
                break;
            }
            Leg::Direct { .. } => {
                let tr = inst.direct(i, j);
                time += tr.time;
                soc -= tr.energy;
            }
            Leg::Charge(s) => {
                let tr = inst.to_charger(i, s.charger);
                time += tr.time;
                soc -= tr.energy;
                out.push(SocPoint {
                    time,
                    soc,
                    event: SocEvent::ChargerArrival(s.charger),
                });
                time = time.max(s.start);
                out.push(SocPoint {
                    time,
                    soc,
                    event: SocEvent::ChargeStart(s.charger),
                });
                time += s.duration;
                soc += rb.modes[s.mode].rate * s.duration;
                out.push(SocPoint {
                    time,
                    soc,
                    event: SocEvent::ChargeEnd(s.charger),
                });
                time += s.post_wait;
                let tr = inst.from_charger(s.charger, j);
                time += tr.time;
                soc -= tr.energy;
            }
        }
        // Arrival, then a flat wait until the task starts.
        out.push(SocPoint {
            time,
            soc,
            event: SocEvent::TaskArrival(j),
        });
        time = start_of(j, time);
    }
    out
}
