//! The fleet MILP: index sets, big-M constants, the piecewise McCormick system,
//! the model builder and the decoder back to a [`FleetSchedule`](crate::domain::FleetSchedule).

pub mod bigm;
mod build;
mod decode;
mod lazy;
pub mod index;
pub mod mccormick;

use std::time::Duration;

use amrsched_solver::{Model, SolveLimits, SolverError, Status, VarId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Config, FleetSchedule, Instance};

pub use bigm::{BigMMode, BigMTable};
pub use build::{build, build_monolithic};
pub use decode::{DecodeError, RouteArc};
pub use lazy::remaining;
pub use index::{ChargerFilter, IndexSets, Transition};
pub use mccormick::{Cell, CellVars, PartitionGrid};

/// Which model the builder emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    /// The full model with SOC recursion and, optionally, degradation terms.
    Monolithic,
    /// The coordination master: no SOC rows and no McCormick system; degradation
    /// enters through surrogate variables bounded by cuts.
    Master,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildOptions {
    pub degradation_terms: bool,
    pub charger_capacity: bool,
    pub big_m: BigMMode,
    /// Bound `tard_k <= max(0, b_k - a_k)`.
    pub tardiness_cap: bool,
    /// Keep every charger for every transition instead of the nearest few.
    pub full_gamma: bool,
    pub chargers_per_arc: usize,
    /// Robot `r` may start a route only if robot `r - 1` does.
    pub symmetry_breaking: bool,
    /// Add the aggregate route energy balance to the monolithic layer. It is
    /// implied by the SOC recursion but tightens the relaxation.
    pub energy_row: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            degradation_terms: true,
            charger_capacity: true,
            big_m: BigMMode::Tight,
            tardiness_cap: true,
            full_gamma: false,
            chargers_per_arc: 2,
            symmetry_breaking: false,
            energy_row: true,
        }
    }
}

impl BuildOptions {
    pub fn charger_filter(&self, num_chargers: usize) -> ChargerFilter {
        if self.full_gamma {
            ChargerFilter::All
        } else {
            ChargerFilter::Nearest(self.chargers_per_arc.min(num_chargers))
        }
    }
}

/// Semantic role of a model variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarRole {
    Assign { r: usize, k: usize },
    Direct { r: usize, i: usize, j: usize },
    Charge(usize),
    Start(usize),
    Tardiness(usize),
    SocIn { r: usize, k: usize },
    ChargeStart(usize),
    Queue(usize),
    ChargeDuration(usize),
    PostWait(usize),
    PostSoc(usize),
    Idle(usize),
    Cell { t: usize, p: usize, q: usize },
    CellSoc { t: usize, p: usize, q: usize },
    CellWait { t: usize, p: usize, q: usize },
    CellIdle { t: usize, p: usize, q: usize },
    Order { m: usize, a: usize, b: usize },
    Degradation(usize),
    MaxDegradation,
}

/// Variables of one charging transition.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeVars {
    pub g: VarId,
    pub start: VarId,
    pub queue: VarId,
    pub duration: VarId,
    pub post_wait: VarId,
    pub post_soc: Option<VarId>,
    pub idle: Option<VarId>,
    /// `(p, q, vars)` per partition cell.
    pub cells: Vec<(usize, usize, CellVars)>,
}

/// Forward lookup from index-set entries to variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarIndex {
    /// `[r][k - 1]`.
    pub assign: Vec<Vec<VarId>>,
    /// Aligned with `IndexSets::direct`.
    pub direct: Vec<VarId>,
    /// Aligned with `IndexSets::end`.
    pub end: Vec<VarId>,
    /// Aligned with `IndexSets::gamma`.
    pub charge: Vec<ChargeVars>,
    /// `[k - 1]`.
    pub start: Vec<VarId>,
    pub tardiness: Vec<VarId>,
    /// `[r][k - 1]`, monolithic layer only.
    pub soc_in: Vec<Vec<VarId>>,
    /// `A_r` in the monolithic layer, the surrogate in the master.
    pub degradation: Vec<VarId>,
    pub max_degradation: Option<VarId>,
}

/// A built model together with everything needed to extend and decode it.
#[derive(Debug, Clone)]
pub struct Formulation {
    pub layer: Layer,
    pub options: BuildOptions,
    pub model: Model,
    pub sets: IndexSets,
    pub bigm: BigMTable,
    /// Partition grid per robot.
    pub grids: Vec<PartitionGrid>,
    /// Role of every variable, indexed by variable id.
    pub roles: Vec<VarRole>,
    pub vars: VarIndex,
    /// Pre-check findings that do not stop the build.
    pub warnings: Vec<String>,
    /// Session pairs `(m, a, b)` with ordering rows, `a < b` as gamma indices.
    pub pairs: Vec<(usize, usize, usize)>,
}

impl Formulation {
    /// Role of a variable.
    pub fn role(&self, v: VarId) -> VarRole {
        self.roles[v.0]
    }

    /// Number of partition binaries in the model.
    pub fn num_cell_binaries(&self) -> usize {
        self.vars.charge.iter().map(|c| c.cells.len()).sum()
    }
}

/// Result of solving a monolithic model and decoding it.
#[derive(Debug, Clone)]
pub struct MilpOutcome {
    pub schedule: FleetSchedule,
    pub status: Status,
    /// Model objective of the returned solution (linearized idle term).
    pub objective: f64,
    pub best_bound: f64,
    pub gap: Option<f64>,
    pub nodes: u64,
    pub wall_time: Duration,
    pub values: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("no solution: solver stopped with status {0:?}")]
    NoSolution(Status),
}

/// Builds, solves with lazy charger-pair rows, and decodes the monolithic model.
pub fn solve_monolithic(
    instance: &Instance,
    config: &Config,
    options: &BuildOptions,
    limits: &SolveLimits,
) -> Result<(Formulation, MilpOutcome), SolveError> {
    let mut form = build_monolithic(instance, config, options);
    let res = form.solve(instance, limits)?;
    let Some(values) = res.values else {
        return Err(SolveError::NoSolution(res.status));
    };
    let schedule = form.decode(instance, &values)?;
    let outcome = MilpOutcome {
        schedule,
        status: res.status,
        objective: res.objective.unwrap_or(f64::NAN),
        best_bound: res.best_bound,
        gap: res.gap,
        nodes: res.nodes,
        wall_time: res.wall_time,
        values,
    };
    Ok((form, outcome))
}
