//! Comparison methods: threshold-charging dispatch and two reduced MILPs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use amrsched_solver::SolveLimits;

use crate::domain::{ChargeStop, Config, DomainError, FleetSchedule, Instance, Leg, Point, TaskTiming};
use crate::formulation::{solve_monolithic, BuildOptions, MilpOutcome, SolveError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispatchPolicy {
    pub charge_threshold: f64,
    pub charge_target: f64,
    /// Charging mode used for every session.
    pub mode: usize,
}

impl Default for DispatchPolicy {
    fn default() -> Self {
        Self {
            charge_threshold: 0.3,
            charge_target: 0.8,
            mode: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DispatchError {
    #[error("task {task} cannot be served by any robot without dropping below its reserve")]
    Unservable { task: usize },
    #[error("policy needs Smin < threshold < target <= Smax for robot {robot}")]
    Policy { robot: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Where an idle robot waits.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Place {
    Node(usize),
    Charger(usize),
}

/// A finished charging session not yet attached to a leg.
#[derive(Debug, Clone, Copy)]
struct Session {
    from: usize,
    charger: usize,
    arrive: f64,
    start: f64,
    duration: f64,
    post_soc: f64,
}

#[derive(Debug, Clone)]
struct RobotState {
    place: Place,
    /// Time at which the robot is idle at `place`.
    free: f64,
    soc: f64,
    /// Last task served, or 0.
    last: usize,
    session: Option<Session>,
    legs: Vec<Leg>,
}

struct Sim<'a> {
    inst: &'a Instance,
    policy: DispatchPolicy,
    robots: Vec<RobotState>,
    charger_free: Vec<f64>,
    timings: Vec<TaskTiming>,
}

impl Sim<'_> {
    fn point(&self, p: Place) -> Point {
        match p {
            Place::Node(i) => self.inst.node_point(i),
            Place::Charger(m) => self.inst.chargers[m].position,
        }
    }

    fn travel(&self, from: Place, to: Point) -> crate::domain::Travel {
        crate::domain::travel(&self.inst.geometry, self.point(from), to).expect("points are in the warehouse")
    }

    /// Energy to reach the nearest charger from task `k`.
    fn reserve_trip(&self, k: usize) -> f64 {
        (0..self.inst.chargers.len())
            .map(|m| self.inst.to_charger(k, m).energy)
            .fold(f64::INFINITY, f64::min)
    }

    /// SOC left after serving `k` from the robot's current place and reaching a charger.
    fn slack(&self, r: usize, k: usize) -> f64 {
        let st = &self.robots[r];
        let reserve = if self.inst.chargers.is_empty() { 0.0 } else { self.reserve_trip(k) };
        st.soc - self.travel(st.place, self.inst.node_point(k)).energy - self.inst.energy(k) - reserve
            - self.inst.robots[r].smin
    }

    /// Sends robot `r`, idle at time `now`, to the charger with the earliest start.
    fn charge(&mut self, r: usize, now: f64) {
        let inst = self.inst;
        let st = &self.robots[r];
        let rate = inst.robots[r].modes[self.policy.mode].rate;
        let mut best: Option<(f64, f64, usize)> = None;
        for m in 0..inst.chargers.len() {
            let tr = self.travel(st.place, inst.chargers[m].position);
            let start = (now + tr.time).max(self.charger_free[m]);
            let key = (start, tr.time, m);
            if best.map_or(true, |b| (key.0, key.1) < (b.0, b.1)) {
                best = Some(key);
            }
        }
        let Some((start, _, m)) = best else { return };
        let tr = self.travel(st.place, inst.chargers[m].position);
        let soc = st.soc - tr.energy;
        let target = self.policy.charge_target.max(soc);
        let duration = (target - soc) / rate;
        let from = st.last;
        let free = st.free;
        self.charger_free[m] = start + duration;
        let st = &mut self.robots[r];
        st.session = Some(Session {
            from,
            charger: m,
            // Idle time before leaving counts as queueing: legs depart on completion.
            arrive: free.min(now) + tr.time,
            start,
            duration,
            post_soc: target,
        });
        st.place = Place::Charger(m);
        st.free = start + duration;
        st.soc = target;
    }

    /// Robot `r`, idle at `now`, serves task `k`.
    fn serve(&mut self, r: usize, k: usize, now: f64) {
        let inst = self.inst;
        let st = &self.robots[r];
        let tr = self.travel(st.place, inst.node_point(k));
        let start = (now + tr.time).max(inst.task(k).release);
        let soc_in = st.soc - tr.energy;
        let leg = match st.session {
            None => Leg::Direct { from: st.last, to: k },
            Some(s) => {
                let end = s.start + s.duration;
                Leg::Charge(ChargeStop {
                    from: s.from,
                    to: k,
                    charger: s.charger,
                    mode: self.policy.mode,
                    start: s.start,
                    queue: s.start - s.arrive,
                    duration: s.duration,
                    post_wait: start - tr.time - end,
                    post_soc: s.post_soc,
                    idle_lin: None,
                })
            }
        };
        self.timings.push(TaskTiming {
            task: k,
            robot: r,
            start,
            tardiness: (start - inst.task(k).due).max(0.0),
            soc_in,
        });
        let st = &mut self.robots[r];
        st.legs.push(leg);
        st.session = None;
        st.place = Place::Node(k);
        st.last = k;
        st.free = start + inst.service(k);
        st.soc = soc_in - inst.energy(k);
    }
}

/// Upper bound on what any robot can do for task `k`: arrive from the best
/// charger at the policy target, or from the depot at the initial SOC.
fn servable(inst: &Instance, policy: &DispatchPolicy, k: usize) -> bool {
    let reserve = (0..inst.chargers.len())
        .map(|m| inst.to_charger(k, m).energy)
        .fold(f64::INFINITY, f64::min);
    let reserve = if reserve.is_finite() { reserve } else { 0.0 };
    inst.robots.iter().any(|r| {
        let from_depot = r.s0 - inst.direct(0, k).energy;
        let from_charger = (0..inst.chargers.len())
            .map(|m| policy.charge_target - inst.from_charger(m, k).energy)
            .fold(f64::NEG_INFINITY, f64::max);
        from_depot.max(from_charger) - inst.energy(k) - reserve >= r.smin
    })
}

/// Nearest-available dispatch with threshold charging, simulated over release
/// and completion events.
pub fn rule_based(instance: &Instance, policy: &DispatchPolicy) -> Result<FleetSchedule, DispatchError> {
    let inst = instance;
    for (r, robot) in inst.robots.iter().enumerate() {
        robot.mode(policy.mode)?;
        if !(robot.smin < policy.charge_threshold
            && policy.charge_threshold < policy.charge_target
            && policy.charge_target <= robot.smax)
        {
            return Err(DispatchError::Policy { robot: r });
        }
    }
    let n = inst.num_tasks();
    if let Some(k) = (1..=n).find(|&k| !servable(inst, policy, k)) {
        return Err(DispatchError::Unservable { task: k });
    }
    let mut sim = Sim {
        inst,
        policy: *policy,
        robots: inst
            .robots
            .iter()
            .map(|r| RobotState {
                place: Place::Node(0),
                free: 0.0,
                soc: r.s0,
                last: 0,
                session: None,
                legs: Vec::new(),
            })
            .collect(),
        charger_free: vec![0.0; inst.chargers.len()],
        timings: Vec::new(),
    };
    let mut done = vec![false; n + 1];
    let mut now = 0.0_f64;
    let mut remaining = n;
    while remaining > 0 {
        let idle: Vec<usize> = (0..sim.robots.len()).filter(|&r| sim.robots[r].free <= now).collect();
        for &r in &idle {
            let st = &sim.robots[r];
            if st.session.is_none() && st.soc < policy.charge_threshold {
                sim.charge(r, now);
            }
        }
        let mut pending: Vec<usize> = (1..=n)
            .filter(|&k| !done[k] && inst.task(k).release <= now)
            .collect();
        pending.sort_by(|&a, &b| inst.task(a).due.total_cmp(&inst.task(b).due).then(a.cmp(&b)));
        let mut stuck = Vec::new();
        for &k in &pending {
            let mut best: Option<(f64, usize)> = None;
            for r in 0..sim.robots.len() {
                if sim.robots[r].free > now {
                    continue;
                }
                if sim.slack(r, k) < 0.0 {
                    stuck.push(r);
                    continue;
                }
                let d = sim.point(sim.robots[r].place).manhattan(inst.node_point(k));
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, r));
                }
            }
            if let Some((_, r)) = best {
                sim.serve(r, k, now);
                done[k] = true;
                remaining -= 1;
            }
        }
        // Idle robots that could not take a waiting task recharge.
        stuck.sort_unstable();
        stuck.dedup();
        for r in stuck {
            let st = &sim.robots[r];
            let topped = st.session.is_some() && st.soc >= policy.charge_target - 1e-12;
            if st.free <= now && !topped && st.soc < policy.charge_target {
                sim.charge(r, now);
            }
        }
        if remaining == 0 {
            break;
        }
        let next_release = (1..=n)
            .filter(|&k| !done[k] && inst.task(k).release > now)
            .map(|k| inst.task(k).release)
            .fold(f64::INFINITY, f64::min);
        let next_free = sim
            .robots
            .iter()
            .map(|s| s.free)
            .filter(|&f| f > now)
            .fold(f64::INFINITY, f64::min);
        let next = next_release.min(next_free);
        if !next.is_finite() {
            let k = (1..=n)
                .filter(|&k| !done[k])
                .min_by(|&a, &b| inst.task(a).due.total_cmp(&inst.task(b).due).then(a.cmp(&b)))
                .unwrap_or(0);
            return Err(DispatchError::Unservable { task: k });
        }
        now = next;
    }
    let mut schedule = FleetSchedule::empty(inst.robots.len());
    for (r, st) in sim.robots.into_iter().enumerate() {
        let mut legs = st.legs;
        if !legs.is_empty() {
            // A session after the last task is not needed by the route and is dropped.
            legs.push(Leg::Direct { from: st.last, to: n + 1 });
        }
        schedule.robots[r].legs = legs;
    }
    sim.timings.sort_by_key(|t| t.task);
    schedule.tasks = sim.timings;
    schedule.refresh_degradation(inst)?;
    Ok(schedule)
}

/// Monolithic model without degradation terms; degradation is evaluated after the fact.
pub fn energy_aware(instance: &Instance, config: &Config, limits: &SolveLimits) -> Result<MilpOutcome, SolveError> {
    let options = BuildOptions {
        degradation_terms: false,
        ..BuildOptions::default()
    };
    solve_monolithic(instance, config, &options, limits).map(|(_, o)| o)
}

/// Result of the charger-unaware baseline.
#[derive(Debug, Clone)]
pub struct UnawareOutcome {
    /// Solver output before repair; sessions may overlap.
    pub planned: MilpOutcome,
    /// Executable schedule after FIFO serialization.
    pub repaired: FleetSchedule,
}

/// Monolithic model without charger capacity, followed by FIFO repair.
pub fn charger_unaware(instance: &Instance, config: &Config, limits: &SolveLimits) -> Result<UnawareOutcome, SolveError> {
    let options = BuildOptions {
        charger_capacity: false,
        ..BuildOptions::default()
    };
    let (_, planned) = solve_monolithic(instance, config, &options, limits)?;
    let repaired = repair_fifo(instance, &planned.schedule).map_err(|e| SolveError::Decode(e.into()))?;
    Ok(UnawareOutcome { planned, repaired })
}

/// Serializes sessions on each charger in order of planned start, delaying later
/// sessions and everything downstream on the same route. Planned times are kept
/// as lower bounds; nothing moves earlier.
pub fn repair_fifo(instance: &Instance, schedule: &FleetSchedule) -> Result<FleetSchedule, DomainError> {
    let inst = instance;
    let n = inst.num_tasks();
    let mut out = schedule.clone();
    let planned_start: Vec<f64> = (0..=n).map(|k| schedule.timing(k).map_or(0.0, |t| t.start)).collect();
    // Sessions as (robot, leg index), in FIFO order of planned start.
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (r, p) in schedule.robots.iter().enumerate() {
        for (idx, l) in p.legs.iter().enumerate() {
            if l.charge().is_some() {
                order.push((r, idx));
            }
        }
    }
    let planned_b = |(r, idx): (usize, usize)| schedule.robots[r].legs[idx].charge().map_or(0.0, |c| c.start);
    order.sort_by(|&a, &b| planned_b(a).total_cmp(&planned_b(b)).then(a.cmp(&b)));
    let mut lower: Vec<Vec<f64>> = schedule
        .robots
        .iter()
        .map(|p| p.legs.iter().map(|l| l.charge().map_or(0.0, |c| c.start)).collect())
        .collect();
    let mut start = planned_start.clone();
    for _ in 0..=order.len() + 1 {
        // Forward pass along each route.
        for (r, p) in out.robots.iter_mut().enumerate() {
            for (idx, leg) in p.legs.iter_mut().enumerate() {
                let i = leg.from();
                let ready = if i == 0 { 0.0 } else { start[i] + inst.service(i) };
                match leg {
                    Leg::Direct { to, .. } if *to <= n => {
                        start[*to] = planned_start[*to].max(ready + inst.direct(i, *to).time);
                    }
                    Leg::Direct { .. } => {}
                    Leg::Charge(c) => {
                        let arrive = ready + inst.to_charger(i, c.charger).time;
                        c.start = lower[r][idx].max(arrive);
                        c.queue = c.start - arrive;
                        let tau = inst.from_charger(c.charger, c.to).time;
                        let t = planned_start[c.to].max(c.start + c.duration + tau);
                        start[c.to] = t;
                        c.post_wait = t - tau - c.start - c.duration;
                        c.idle_lin = None;
                    }
                }
            }
        }
        // FIFO pass per charger.
        let mut changed = false;
        let mut free = vec![f64::NEG_INFINITY; inst.chargers.len()];
        for &(r, idx) in &order {
            let c = out.robots[r].legs[idx].charge().expect("session leg");
            if c.start < free[c.charger] - 1e-12 {
                lower[r][idx] = free[c.charger];
                changed = true;
            }
            let begin = c.start.max(free[c.charger]);
            free[c.charger] = begin + c.duration;
        }
        if !changed {
            break;
        }
    }
    for t in &mut out.tasks {
        t.start = start[t.task];
        t.tardiness = (t.start - inst.task(t.task).due).max(0.0);
    }
    out.refresh_degradation(inst)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::audit;
    use crate::domain::{Charger, Robot, RobotPlan, Task, WarehouseGeometry};

    fn task(id: usize, x: f64, y: f64, release: f64, due: f64, energy: f64) -> Task {
        Task {
            id,
            location: Point { x, y },
            release,
            due,
            service: 5.0,
            energy,
        }
    }

    fn inst(robots: usize, tasks: Vec<Task>) -> Instance {
        Instance {
            geometry: WarehouseGeometry::default(),
            robots: (0..robots).map(Robot::standard).collect(),
            tasks,
            chargers: vec![Charger {
                id: 0,
                position: Point { x: 50.0, y: 0.0 },
            }],
            horizon: 480.0,
        }
    }

    #[test]
    fn adjacent_task_is_served_directly() {
        let i = inst(1, vec![task(1, 1.0, 0.0, 0.0, 30.0, 0.05)]);
        let s = rule_based(&i, &DispatchPolicy::default()).unwrap();
        assert_eq!(
            s.robots[0].legs,
            vec![Leg::Direct { from: 0, to: 1 }, Leg::Direct { from: 1, to: 2 }]
        );
        assert_eq!(s.tasks[0].tardiness, 0.0);
        assert!(audit(&i, &s, 1e-9).unwrap().is_clean());
    }

    #[test]
    fn low_robot_charges_before_next_assignment() {
        let mut i = inst(1, vec![task(1, 50.0, 0.0, 0.0, 30.0, 0.05), task(2, 50.0, 10.0, 40.0, 100.0, 0.05)]);
        i.robots[0].s0 = 0.35;
        let s = rule_based(&i, &DispatchPolicy::default()).unwrap();
        let legs = &s.robots[0].legs;
        assert_eq!(legs.len(), 3);
        let c = legs[1].charge().expect("charging leg between the two tasks");
        assert_eq!((c.from, c.to, c.charger, c.mode), (1, 2, 0, 0));
        // Task 1 leaves SOC just under the threshold; the charger is on the task.
        let soc = 0.35 - 50.0 / 60.0 * 0.002 - 0.05;
        assert!((c.duration - (0.8 - soc) / 0.01).abs() < 1e-9);
        assert!((c.post_soc - 0.8).abs() < 1e-12);
        assert!(audit(&i, &s, 1e-9).unwrap().is_clean(), "{}", audit(&i, &s, 1e-9).unwrap().to_text());
    }

    #[test]
    fn equidistant_robots_go_to_lower_id() {
        let i = inst(2, vec![task(1, 10.0, 10.0, 0.0, 30.0, 0.05)]);
        let s = rule_based(&i, &DispatchPolicy::default()).unwrap();
        assert_eq!(s.tasks[0].robot, 0);
        assert!(s.robots[1].legs.is_empty());
    }

    #[test]
    fn impossible_task_is_named() {
        let i = inst(1, vec![task(1, 1.0, 0.0, 0.0, 30.0, 0.05), task(2, 1.0, 0.0, 0.0, 30.0, 0.9)]);
        assert_eq!(
            rule_based(&i, &DispatchPolicy::default()).unwrap_err(),
            DispatchError::Unservable { task: 2 }
        );
    }

    #[test]
    fn fifo_repair_delays_the_later_session() {
        let i = inst(2, vec![task(1, 50.0, 0.0, 0.0, 200.0, 0.05), task(2, 50.0, 0.0, 0.0, 200.0, 0.05)]);
        let session = |to: usize, start: f64| {
            Leg::Charge(ChargeStop {
                from: 0,
                to,
                charger: 0,
                mode: 0,
                start,
                queue: start - 50.0 / 60.0,
                duration: 10.0,
                post_wait: 0.0,
                post_soc: 0.8 - 50.0 / 60.0 * 0.002 + 0.1,
                idle_lin: None,
            })
        };
        let plan = |r: usize, k: usize, start: f64| RobotPlan {
            robot: r,
            legs: vec![session(k, start), Leg::Direct { from: k, to: 3 }],
            degradation: 0.0,
        };
        let timing = |k: usize, r: usize, start: f64| TaskTiming {
            task: k,
            robot: r,
            start: start + 10.0,
            tardiness: 0.0,
            soc_in: 0.8 - 50.0 / 60.0 * 0.002 + 0.1,
        };
        let s = FleetSchedule {
            robots: vec![plan(0, 1, 1.0), plan(1, 2, 3.0)],
            tasks: vec![timing(1, 0, 1.0), timing(2, 1, 3.0)],
            max_degradation: 0.0,
        };
        let before = audit(&i, &s, 1e-9).unwrap();
        assert!((before.worst(crate::audit::Family::NonOverlap).unwrap() - 8.0).abs() < 1e-9);
        let fixed = repair_fifo(&i, &s).unwrap();
        let c = fixed.robots[1].legs[0].charge().unwrap();
        assert!((c.start - 11.0).abs() < 1e-12);
        assert!(c.queue > s.robots[1].legs[0].charge().unwrap().queue);
        assert!((fixed.timing(2).unwrap().start - 21.0).abs() < 1e-12);
        assert!(audit(&i, &fixed, 1e-9).unwrap().is_clean());
    }
}
