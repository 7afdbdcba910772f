//! Big-M constants and arc elimination.
//!
//! Every constant is the largest violation the row can see when its indicator
//! is off, taken over variable bounds that hold for all integer-feasible
//! solutions: `T_k` in `[a_k, T̄_k]`, arrival SOC in `[0, Smax]` (zero when the
//! task is not assigned to the robot) and charging variables at zero when their
//! transition is unselected.

use serde::{Deserialize, Serialize};

use crate::domain::{Instance, Robot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BigMMode {
    #[default]
    Tight,
    Naive,
}

/// Constants for one instance plus the elimination verdicts used by the builder.
#[derive(Debug, Clone, PartialEq)]
pub struct BigMTable {
    pub mode: BigMMode,
    /// Earliest start per node (`0` for the source).
    pub t_lo: Vec<f64>,
    /// Latest start per node under the horizon and, if enabled, the tardiness cap.
    pub t_hi: Vec<f64>,
    /// Time constant shared by every row in naive mode.
    pub naive_t: f64,
    /// SOC constant shared by every row in naive mode.
    pub naive_s: f64,
    pub horizon: f64,
}

/// Slack of a tardiness-capped window: `max(0, b - a)`.
pub fn window_slack(release: f64, due: f64) -> f64 {
    (due - release).max(0.0)
}

/// Window-slack direct-transition constant
/// `max(0, b_j + w_j - a_i - p_i - tau) + w_j` with `w_j = max(0, b_j - a_j)`.
///
/// This value only looks at the successor's window. It is too small whenever
/// the predecessor can start late (see the tests), so the builder uses
/// [`BigMTable::direct_time`] instead.
pub fn window_slack_direct(a_i: f64, p_i: f64, tau: f64, a_j: f64, b_j: f64) -> f64 {
    let w = window_slack(a_j, b_j);
    (b_j + w - a_i - p_i - tau).max(0.0) + w
}

/// Range-based SOC constant `Smax - Smin + max e_k + max e^d`.
pub fn soc_range_constant(robot: &Robot, max_task_energy: f64, max_travel_energy: f64) -> f64 {
    robot.smax - robot.smin + max_task_energy + max_travel_energy
}

/// Largest travel energy of any single hop in the instance (direct, to or from a charger).
pub fn max_travel_energy(instance: &Instance) -> f64 {
    let n = instance.num_tasks();
    let mut e = 0.0_f64;
    for i in 0..=n {
        for j in 1..=n {
            if i != j {
                e = e.max(instance.direct(i, j).energy);
            }
        }
        for m in 0..instance.chargers.len() {
            e = e.max(instance.to_charger(i, m).energy);
            if i > 0 {
                e = e.max(instance.from_charger(m, i).energy);
            }
        }
    }
    e
}

fn max_travel_time(instance: &Instance) -> f64 {
    let n = instance.num_tasks();
    let mut t = 0.0_f64;
    for i in 0..=n {
        for j in 1..=n {
            if i != j {
                t = t.max(instance.direct(i, j).time);
            }
        }
        for m in 0..instance.chargers.len() {
            t = t.max(instance.to_charger(i, m).time);
            if i > 0 {
                t = t.max(instance.from_charger(m, i).time);
            }
        }
    }
    t
}

impl BigMTable {
    pub fn new(instance: &Instance, mode: BigMMode, tardiness_cap: bool) -> Self {
        let h = instance.horizon;
        let mut t_lo = vec![0.0];
        let mut t_hi = vec![0.0];
        for t in &instance.tasks {
            t_lo.push(t.release);
            let hi = if tardiness_cap {
                h.min(t.due + window_slack(t.release, t.due))
            } else {
                h
            };
            t_hi.push(hi);
        }
        let p_max = instance.tasks.iter().map(|t| t.service).fold(0.0, f64::max);
        let e_max = instance.tasks.iter().map(|t| t.energy).fold(0.0, f64::max);
        let s_max = instance.robots.iter().map(|r| r.smax).fold(0.0, f64::max);
        Self {
            mode,
            t_lo,
            t_hi,
            naive_t: h + p_max + max_travel_time(instance),
            naive_s: s_max + e_max + max_travel_energy(instance),
            horizon: h,
        }
    }

    fn pick(&self, tight: f64, naive: f64) -> f64 {
        match self.mode {
            BigMMode::Tight => tight.max(0.0),
            BigMMode::Naive => naive,
        }
    }

    fn time(&self, tight: f64) -> f64 {
        self.pick(tight, self.naive_t)
    }

    fn soc(&self, tight: f64) -> f64 {
        self.pick(tight, self.naive_s)
    }

    /// Latest time the robot can be done with node `i` (zero for the source).
    fn done_hi(&self, inst: &Instance, i: usize) -> f64 {
        self.t_hi[i] + inst.service(i)
    }

    fn done_lo(&self, inst: &Instance, i: usize) -> f64 {
        self.t_lo[i] + inst.service(i)
    }

    /// Whether a direct transition `i -> j` can never meet `j`'s latest start.
    pub fn direct_eliminated(&self, inst: &Instance, i: usize, j: usize) -> bool {
        self.mode == BigMMode::Tight && self.done_lo(inst, i) + inst.direct(i, j).time > self.t_hi[j] + 1e-9
    }

    /// Whether a charging transition `i -> m -> j` can never meet `j`'s latest start.
    pub fn charge_eliminated(&self, inst: &Instance, i: usize, j: usize, m: usize) -> bool {
        self.mode == BigMMode::Tight
            && self.done_lo(inst, i) + inst.to_charger(i, m).time + inst.from_charger(m, j).time
                > self.t_hi[j] + 1e-9
    }

    /// `T_j >= T_i + p_i + tau_ij - M (1 - y)`.
    pub fn direct_time(&self, inst: &Instance, i: usize, j: usize) -> f64 {
        self.time(self.done_hi(inst, i) + inst.direct(i, j).time - self.t_lo[j])
    }

    /// `B >= T_i + p_i + tau_to - M (1 - g)`.
    pub fn charge_start(&self, inst: &Instance, i: usize, m: usize) -> f64 {
        self.time(self.done_hi(inst, i) + inst.to_charger(i, m).time)
    }

    /// `q >= B - (T_i + p_i + tau_to) - M (1 - g)`.
    pub fn queue(&self) -> f64 {
        self.time(0.0)
    }

    /// `T_j >= B + t_c + tau_from + w - M (1 - g)`.
    pub fn link_lower(&self, inst: &Instance, m: usize, j: usize) -> f64 {
        self.time(inst.from_charger(m, j).time - self.t_lo[j])
    }

    /// `T_j <= B + t_c + tau_from + w + M (1 - g)`.
    pub fn link_upper(&self, inst: &Instance, m: usize, j: usize) -> f64 {
        self.time(self.t_hi[j] - inst.from_charger(m, j).time)
    }

    /// Earliest charging start of a selected transition.
    pub fn start_lo(&self, inst: &Instance, i: usize, m: usize) -> f64 {
        self.done_lo(inst, i) + inst.to_charger(i, m).time
    }

    /// Latest charging end of a selected transition (`B + t_c` when `w = 0`).
    pub fn end_hi(&self, inst: &Instance, m: usize, j: usize) -> f64 {
        (self.t_hi[j] - inst.from_charger(m, j).time).max(0.0)
    }

    /// Activation upper bounds `(B, q, t_c, w)` of a charging transition.
    pub fn activation(&self, inst: &Instance, robot: &Robot, i: usize, j: usize, m: usize, rate: f64) -> [f64; 4] {
        let h = self.horizon;
        match self.mode {
            BigMMode::Naive => [h; 4],
            BigMMode::Tight => {
                let end = self.end_hi(inst, m, j);
                let span = (end - self.start_lo(inst, i, m)).max(0.0);
                let full = (robot.smax - robot.smin) / rate;
                [end.min(h), span.min(h), span.min(full).min(h), span.min(h)]
            }
        }
    }

    /// Non-overlap constants for "`a` ends before `b` starts": the multiplier of
    /// `(1 - u)` and of `(2 - g_a - g_b)`.
    pub fn non_overlap(&self, end_hi_a: f64, start_lo_b: f64) -> (f64, f64) {
        match self.mode {
            BigMMode::Naive => (self.naive_t, self.naive_t),
            BigMMode::Tight => ((end_hi_a - start_lo_b).max(0.0), end_hi_a.max(0.0)),
        }
    }

    /// `s_k - e_k >= Smin - M (1 - x)`.
    pub fn reserve(&self, inst: &Instance, robot: &Robot, k: usize) -> f64 {
        self.soc(robot.smin + inst.energy(k))
    }

    /// Arrival SOC bound at node `i` when it is not on the route: `S0` for the source.
    fn soc_hi(robot: &Robot, i: usize) -> f64 {
        if i == 0 {
            robot.s0
        } else {
            robot.smax
        }
    }

    fn soc_lo(robot: &Robot, i: usize) -> f64 {
        if i == 0 {
            robot.s0
        } else {
            0.0
        }
    }

    /// `s_j >= s_i - e_i - e^d - M (1 - y)`.
    pub fn direct_soc_lower(&self, inst: &Instance, robot: &Robot, i: usize, j: usize) -> f64 {
        self.soc(Self::soc_hi(robot, i) - inst.energy(i) - inst.direct(i, j).energy)
    }

    /// `s_j <= s_i - e_i - e^d + M (1 - y)`.
    pub fn direct_soc_upper(&self, inst: &Instance, robot: &Robot, i: usize, j: usize) -> f64 {
        self.soc(robot.smax - Self::soc_lo(robot, i) + inst.energy(i) + inst.direct(i, j).energy)
    }

    /// `s_i - e_i - e_to >= Smin - M (1 - g)`.
    pub fn reach_charger(&self, inst: &Instance, robot: &Robot, i: usize, m: usize) -> f64 {
        self.soc(robot.smin - Self::soc_lo(robot, i) + inst.energy(i) + inst.to_charger(i, m).energy)
    }

    /// `s̄ >= s_i - e_i - e_to + c t_c - M (1 - g)`.
    pub fn post_soc_lower(&self, inst: &Instance, robot: &Robot, i: usize, m: usize) -> f64 {
        self.soc(Self::soc_hi(robot, i) - inst.energy(i) - inst.to_charger(i, m).energy)
    }

    /// `s̄ <= s_i - e_i - e_to + c t_c + M (1 - g)`.
    pub fn post_soc_upper(&self, inst: &Instance, robot: &Robot, i: usize, m: usize) -> f64 {
        self.soc(-Self::soc_lo(robot, i) + inst.energy(i) + inst.to_charger(i, m).energy)
    }

    /// `s_j >= s̄ - e_from - M (1 - g)`.
    pub fn arrival_soc_lower(&self) -> f64 {
        self.soc(0.0)
    }

    /// `s_j <= s̄ - e_from + M (1 - g)`.
    pub fn arrival_soc_upper(&self, inst: &Instance, robot: &Robot, m: usize, j: usize) -> f64 {
        self.soc(robot.smax + inst.from_charger(m, j).energy)
    }
}
