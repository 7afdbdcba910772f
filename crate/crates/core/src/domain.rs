use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Feasibility tolerance used by default for continuous checks.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("point ({x}, {y}) lies outside the {width} x {height} warehouse")]
    OutsideWarehouse { x: f64, y: f64, width: f64, height: f64 },
    #[error("robot {robot} has no charging mode {mode}")]
    UnknownMode { robot: usize, mode: usize },
    #[error("invalid instance: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Point) -> f64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarehouseGeometry {
    pub width_m: f64,
    pub height_m: f64,
    pub depot: Point,
    /// Travel speed in meters per minute.
    pub speed: f64,
    /// SOC fraction drawn per minute of travel.
    pub energy_rate: f64,
}

impl Default for WarehouseGeometry {
    fn default() -> Self {
        Self {
            width_m: 100.0,
            height_m: 50.0,
            depot: Point::new(0.0, 0.0),
            speed: 60.0,
            energy_rate: 0.002,
        }
    }
}

impl WarehouseGeometry {
    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width_m).contains(&p.x) && (0.0..=self.height_m).contains(&p.y)
    }

    fn check(&self, p: Point) -> Result<(), DomainError> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(DomainError::OutsideWarehouse {
                x: p.x,
                y: p.y,
                width: self.width_m,
                height: self.height_m,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Travel {
    /// Minutes.
    pub time: f64,
    /// SOC fraction.
    pub energy: f64,
}

/// Manhattan travel between two points of the warehouse.
pub fn travel(geometry: &WarehouseGeometry, a: Point, b: Point) -> Result<Travel, DomainError> {
    geometry.check(a)?;
    geometry.check(b)?;
    let time = a.manhattan(b) / geometry.speed;
    Ok(Travel {
        time,
        energy: geometry.energy_rate * time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: usize,
    pub location: Point,
    pub release: f64,
    pub due: f64,
    pub service: f64,
    pub energy: f64,
}

impl Task {
    /// Width of the time window, `max(0, b - a)`.
    pub fn window(&self) -> f64 {
        (self.due - self.release).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargingMode {
    pub id: usize,
    pub name: String,
    /// SOC fraction gained per minute.
    pub rate: f64,
    /// Capacity-loss fraction per minute of charging.
    pub aging: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Robot {
    pub id: usize,
    pub s0: f64,
    pub smin: f64,
    pub smax: f64,
    /// Capacity-loss fraction per SOC-minute spent waiting after a charge.
    pub idle_aging: f64,
    pub modes: Vec<ChargingMode>,
}

impl Robot {
    /// Homogeneous robot with the standard and fast charging modes.
    pub fn standard(id: usize) -> Self {
        Self {
            id,
            s0: 0.8,
            smin: 0.1,
            smax: 1.0,
            idle_aging: 3e-5,
            modes: vec![
                ChargingMode {
                    id: 0,
                    name: "standard".into(),
                    rate: 0.01,
                    aging: 5e-5,
                },
                ChargingMode {
                    id: 1,
                    name: "fast".into(),
                    rate: 0.025,
                    aging: 1.5e-4,
                },
            ],
        }
    }

    pub fn mode(&self, id: usize) -> Result<&ChargingMode, DomainError> {
        self.modes
            .get(id)
            .filter(|m| m.id == id)
            .ok_or(DomainError::UnknownMode { robot: self.id, mode: id })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Charger {
    pub id: usize,
    pub position: Point,
}

/// A scheduling instance. Tasks are numbered `1..=K` so that node `0` is the
/// depot source and node `K + 1` the sink; robots, chargers and modes are
/// numbered densely from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub geometry: WarehouseGeometry,
    pub robots: Vec<Robot>,
    pub tasks: Vec<Task>,
    pub chargers: Vec<Charger>,
    pub horizon: f64,
}

impl Instance {
    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn sink(&self) -> usize {
        self.tasks.len() + 1
    }

    /// Task behind node `k` (`1..=K`).
    pub fn task(&self, k: usize) -> &Task {
        &self.tasks[k - 1]
    }

    /// Location of a source or task node.
    pub fn node_point(&self, i: usize) -> Point {
        if i == 0 {
            self.geometry.depot
        } else {
            self.task(i).location
        }
    }

    /// Service duration of node `i`, zero for the source.
    pub fn service(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.task(i).service
        }
    }

    pub fn energy(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.task(i).energy
        }
    }

    pub fn release(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.task(i).release
        }
    }

    fn leg(&self, a: Point, b: Point) -> Travel {
        travel(&self.geometry, a, b).expect("instance points are validated")
    }

    /// Direct travel from node `i` to task `j`.
    pub fn direct(&self, i: usize, j: usize) -> Travel {
        self.leg(self.node_point(i), self.node_point(j))
    }

    /// Travel from node `i` to charger `m`.
    pub fn to_charger(&self, i: usize, m: usize) -> Travel {
        self.leg(self.node_point(i), self.chargers[m].position)
    }

    /// Travel from charger `m` to task `j`.
    pub fn from_charger(&self, m: usize, j: usize) -> Travel {
        self.leg(self.chargers[m].position, self.node_point(j))
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |msg: String| Err(DomainError::Invalid(msg));
        let g = &self.geometry;
        if !(g.width_m > 0.0 && g.height_m > 0.0 && g.speed > 0.0 && g.energy_rate >= 0.0) {
            return bad("geometry needs positive size and speed and a nonnegative energy rate".into());
        }
        g.check(g.depot)?;
        if !(self.horizon > 0.0) {
            return bad(format!("horizon {} must be positive", self.horizon));
        }
        for (idx, r) in self.robots.iter().enumerate() {
            if r.id != idx {
                return bad(format!("robot at position {idx} has id {}", r.id));
            }
            if !(0.0 <= r.smin && r.smin < r.s0 && r.s0 <= r.smax && r.smax <= 1.0) {
                return bad(format!("robot {idx} violates 0 <= Smin < S0 <= Smax <= 1"));
            }
            if !(r.idle_aging > 0.0) || r.modes.is_empty() {
                return bad(format!("robot {idx} needs positive idle aging and at least one mode"));
            }
            for (l, m) in r.modes.iter().enumerate() {
                if m.id != l || !(m.rate > 0.0) || !(m.aging > 0.0) {
                    return bad(format!("robot {idx} mode {l} is malformed"));
                }
            }
        }
        for (idx, t) in self.tasks.iter().enumerate() {
            if t.id != idx + 1 {
                return bad(format!("task at position {idx} has id {}, expected {}", t.id, idx + 1));
            }
            g.check(t.location)?;
            if !(t.release >= 0.0 && t.due >= t.release && t.service > 0.0 && t.energy > 0.0 && t.energy < 1.0) {
                return bad(format!("task {} has an invalid window, duration or energy", t.id));
            }
            if t.due > self.horizon {
                return bad(format!("task {} is due after the horizon", t.id));
            }
        }
        for (idx, c) in self.chargers.iter().enumerate() {
            if c.id != idx {
                return bad(format!("charger at position {idx} has id {}", c.id));
            }
            g.check(c.position)?;
        }
        Ok(())
    }
}

/// Objective weights, partition counts and tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub lambda: f64,
    pub mu: f64,
    pub rho: f64,
    pub p_s: usize,
    pub p_w: usize,
    pub feas_tol: f64,
    pub int_tol: f64,
    pub rel_gap: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            mu: 1.0,
            rho: 0.5,
            p_s: 3,
            p_w: 3,
            feas_tol: FEAS_TOL,
            int_tol: 1e-6,
            rel_gap: 1e-7,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.lambda < 0.0 || self.mu < 0.0 || self.rho < 0.0 {
            return Err(DomainError::Invalid("objective weights must be nonnegative".into()));
        }
        if self.p_s == 0 || self.p_w == 0 {
            return Err(DomainError::Invalid("partition counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Charging stop between node `from` and task `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeStop {
    pub from: usize,
    pub to: usize,
    pub charger: usize,
    pub mode: usize,
    /// Charging start time.
    pub start: f64,
    /// Waiting time at the charger before charging starts.
    pub queue: f64,
    pub duration: f64,
    /// Waiting time after charging, spent at the post-charge SOC.
    pub post_wait: f64,
    pub post_soc: f64,
    /// Linearized value of `post_soc * post_wait` reported by a solver, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idle_lin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum Leg {
    Direct { from: usize, to: usize },
    Charge(ChargeStop),
}

impl Leg {
    pub fn from(&self) -> usize {
        match self {
            Leg::Direct { from, .. } => *from,
            Leg::Charge(c) => c.from,
        }
    }

    pub fn to(&self) -> usize {
        match self {
            Leg::Direct { to, .. } => *to,
            Leg::Charge(c) => c.to,
        }
    }

    pub fn charge(&self) -> Option<&ChargeStop> {
        match self {
            Leg::Charge(c) => Some(c),
            Leg::Direct { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotPlan {
    pub robot: usize,
    /// Ordered legs from the source to the sink; empty for an idle robot.
    pub legs: Vec<Leg>,
    pub degradation: f64,
}

impl RobotPlan {
    pub fn idle(robot: usize) -> Self {
        Self {
            robot,
            legs: Vec::new(),
            degradation: 0.0,
        }
    }

    /// Tasks visited in route order.
    pub fn tasks(&self) -> impl Iterator<Item = usize> + '_ {
        self.legs.iter().skip(1).map(Leg::from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskTiming {
    pub task: usize,
    pub robot: usize,
    pub start: f64,
    pub tardiness: f64,
    pub soc_in: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetSchedule {
    pub robots: Vec<RobotPlan>,
    /// One entry per served task, ordered by task id.
    pub tasks: Vec<TaskTiming>,
    pub max_degradation: f64,
}

impl FleetSchedule {
    pub fn empty(num_robots: usize) -> Self {
        Self {
            robots: (0..num_robots).map(RobotPlan::idle).collect(),
            tasks: Vec::new(),
            max_degradation: 0.0,
        }
    }

    pub fn timing(&self, task: usize) -> Option<&TaskTiming> {
        self.tasks.iter().find(|t| t.task == task)
    }

    pub fn charges(&self) -> impl Iterator<Item = (usize, &ChargeStop)> {
        self.robots
            .iter()
            .flat_map(|p| p.legs.iter().filter_map(move |l| l.charge().map(|c| (p.robot, c))))
    }

    /// Recomputes every robot's degradation and the fleet maximum from the legs.
    pub fn refresh_degradation(&mut self, instance: &Instance) -> Result<(), DomainError> {
        let mut max = 0.0_f64;
        for plan in &mut self.robots {
            plan.degradation = exact_degradation(&instance.robots[plan.robot], &plan.legs)?;
            max = max.max(plan.degradation);
        }
        self.max_degradation = max;
        Ok(())
    }
}

/// Degradation of a robot's route with the idle term taken as the exact product.
pub fn exact_degradation(robot: &Robot, legs: &[Leg]) -> Result<f64, DomainError> {
    let mut total = 0.0;
    for c in legs.iter().filter_map(Leg::charge) {
        let mode = robot.mode(c.mode)?;
        total += mode.aging * c.duration + robot.idle_aging * c.post_soc * c.post_wait;
    }
    Ok(total)
}

/// Degradation using the solver's linearized idle term where present.
pub fn linearized_degradation(robot: &Robot, legs: &[Leg]) -> Result<f64, DomainError> {
    let mut total = 0.0;
    for c in legs.iter().filter_map(Leg::charge) {
        let mode = robot.mode(c.mode)?;
        let idle = c.idle_lin.unwrap_or(c.post_soc * c.post_wait);
        total += mode.aging * c.duration + robot.idle_aging * idle;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveMode {
    Exact,
    Linearized,
}

/// Weighted objective: total degradation, queueing, tardiness and the fleet maximum.
pub fn objective(
    instance: &Instance,
    schedule: &FleetSchedule,
    config: &Config,
    mode: ObjectiveMode,
) -> Result<f64, DomainError> {
    let mut total = 0.0;
    let mut max = 0.0_f64;
    for plan in &schedule.robots {
        let robot = &instance.robots[plan.robot];
        let a = match mode {
            ObjectiveMode::Exact => exact_degradation(robot, &plan.legs)?,
            ObjectiveMode::Linearized => linearized_degradation(robot, &plan.legs)?,
        };
        total += a;
        max = max.max(a);
    }
    let queue: f64 = schedule.charges().map(|(_, c)| c.queue).fold(0.0, |a, b| a + b);
    let tard: f64 = schedule.tasks.iter().map(|t| t.tardiness).fold(0.0, |a, b| a + b);
    Ok(total + config.lambda * queue + config.mu * tard + config.rho * max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metrics {
    pub total_degradation: f64,
    pub max_degradation: f64,
    pub imbalance: f64,
    pub total_tardiness: f64,
    pub throughput: usize,
    pub total_queueing: f64,
    pub solve_time: f64,
    pub gap: Option<f64>,
}

pub fn compute_metrics(instance: &Instance, schedule: &FleetSchedule) -> Result<Metrics, DomainError> {
    let mut degr = Vec::with_capacity(schedule.robots.len());
    for plan in &schedule.robots {
        degr.push(exact_degradation(&instance.robots[plan.robot], &plan.legs)?);
    }
    let total = degr.iter().fold(0.0, |a, b| a + b);
    let max = degr.iter().copied().fold(0.0_f64, f64::max);
    let min = degr.iter().copied().fold(f64::INFINITY, f64::min);
    let min = if min.is_finite() { min } else { 0.0 };
    Ok(Metrics {
        total_degradation: total,
        max_degradation: max,
        imbalance: max - min,
        total_tardiness: schedule.tasks.iter().map(|t| t.tardiness).fold(0.0, |a, b| a + b),
        throughput: schedule.tasks.iter().filter(|t| t.tardiness <= FEAS_TOL).count(),
        total_queueing: schedule.charges().map(|(_, c)| c.queue).fold(0.0, |a, b| a + b),
        solve_time: 0.0,
        gap: None,
    })
}
