use std::ffi::{c_void, CString};
use std::time::Instant;

use highs_sys::*;

use crate::error::SolverError;
use crate::model::{Model, Sense, VarId};
use crate::result::{SolveResult, Status};

/// Primal solution of one LP solve.
#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub objective: f64,
    pub values: Vec<f64>,
}

/// Outcome of one LP solve on the engine.
pub(crate) enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

/// The continuous relaxation of a [`Model`] loaded into the simplex engine.
///
/// The engine keeps its basis between solves, so moving from one node's
/// fixings to a nearby node's re-optimises from a warm start.
pub(crate) struct LpEngine {
    highs: *mut c_void,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Columns whose bounds currently differ from the model's.
    changed: Vec<usize>,
    n_rows: usize,
}

fn set_str(highs: *mut c_void, key: &str, value: &str) {
    let (k, v) = (CString::new(key).unwrap(), CString::new(value).unwrap());
    // SAFETY: `highs` is a live instance and both strings are NUL-terminated.
    unsafe { Highs_setStringOptionValue(highs, k.as_ptr(), v.as_ptr()) };
}

fn set_bool(highs: *mut c_void, key: &str, value: bool) {
    let k = CString::new(key).unwrap();
    // SAFETY: as above.
    unsafe { Highs_setBoolOptionValue(highs, k.as_ptr(), HighsInt::from(value)) };
}

fn set_int(highs: *mut c_void, key: &str, value: i32) {
    let k = CString::new(key).unwrap();
    // SAFETY: as above.
    unsafe { Highs_setIntOptionValue(highs, k.as_ptr(), value) };
}

impl LpEngine {
    pub(crate) fn new(model: &Model, fixings: &[(VarId, f64)]) -> Self {
        let n = model.num_vars();
        let mut cols: Vec<Vec<(i32, f64)>> = vec![Vec::new(); n];
        let mut row_lo = Vec::with_capacity(model.num_rows());
        let mut row_hi = Vec::with_capacity(model.num_rows());
        for (r, row) in model.rows().iter().enumerate() {
            for &(v, c) in &row.terms {
                cols[v.0].push((r as i32, c));
            }
            let (lo, hi) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, row.rhs),
                Sense::Ge => (row.rhs, f64::INFINITY),
                Sense::Eq => (row.rhs, row.rhs),
            };
            row_lo.push(lo);
            row_hi.push(hi);
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut index = Vec::new();
        let mut value = Vec::new();
        for col in &cols {
            start.push(index.len() as i32);
            for &(r, c) in col {
                index.push(r);
                value.push(c);
            }
        }
        let cost: Vec<f64> = model.vars().iter().map(|v| v.obj).collect();
        let lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
        let upper: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();

        // SAFETY: the arrays outlive the call and have the lengths HiGHS expects.
        let highs = unsafe { Highs_create() };
        set_bool(highs, "output_flag", false);
        set_str(highs, "presolve", "off");
        set_str(highs, "solver", "simplex");
        set_int(highs, "threads", 1);
        unsafe {
            Highs_passLp(
                highs,
                n as i32,
                model.num_rows() as i32,
                index.len() as i32,
                kHighsMatrixFormatColwise,
                kHighsObjSenseMinimize,
                0.0,
                cost.as_ptr(),
                lower.as_ptr(),
                upper.as_ptr(),
                row_lo.as_ptr(),
                row_hi.as_ptr(),
                start.as_ptr(),
                index.as_ptr(),
                value.as_ptr(),
            );
        }
        let mut engine = Self {
            highs,
            lower,
            upper,
            changed: Vec::new(),
            n_rows: model.num_rows(),
        };
        engine.apply(fixings);
        // Fixings given at construction are part of this engine's base bounds.
        for &(v, x) in fixings {
            engine.lower[v.0] = x;
            engine.upper[v.0] = x;
        }
        engine.changed.clear();
        engine
    }

    fn numerical(&self, detail: String) -> SolverError {
        SolverError::Numerical {
            rows: self.n_rows,
            cols: self.lower.len(),
            detail,
        }
    }

    /// Restores the base bounds of previously changed columns, then fixes `fixings`.
    fn apply(&mut self, fixings: &[(VarId, f64)]) {
        let mut set: Vec<i32> = Vec::new();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut fixed: Vec<(usize, f64)> = fixings.iter().map(|&(v, x)| (v.0, x)).collect();
        fixed.sort_by_key(|&(c, _)| c);
        fixed.dedup_by_key(|&mut (c, _)| c);
        for &c in &self.changed {
            if fixed.binary_search_by_key(&c, |&(c, _)| c).is_err() {
                set.push(c as i32);
                lo.push(self.lower[c]);
                hi.push(self.upper[c]);
            }
        }
        for &(c, x) in &fixed {
            set.push(c as i32);
            lo.push(x);
            hi.push(x);
        }
        if !set.is_empty() {
            let mut order: Vec<usize> = (0..set.len()).collect();
            order.sort_by_key(|&i| set[i]);
            let set: Vec<i32> = order.iter().map(|&i| set[i]).collect();
            let lo: Vec<f64> = order.iter().map(|&i| lo[i]).collect();
            let hi: Vec<f64> = order.iter().map(|&i| hi[i]).collect();
            // SAFETY: the three arrays have `set.len()` entries with ascending indices.
            unsafe {
                Highs_changeColsBoundsBySet(self.highs, set.len() as i32, set.as_ptr(), lo.as_ptr(), hi.as_ptr());
            }
        }
        self.changed = fixed.into_iter().map(|(c, _)| c).collect();
    }

    /// Solves the relaxation with `fixings` in place of the base bounds.
    pub(crate) fn solve(&mut self, fixings: &[(VarId, f64)]) -> Result<LpOutcome, SolverError> {
        self.apply(fixings);
        if self.lower.is_empty() {
            return Ok(LpOutcome::Optimal(LpSolution {
                objective: 0.0,
                values: Vec::new(),
            }));
        }
        // SAFETY: `self.highs` is live; the output buffers have model dimensions.
        let mut status = unsafe {
            Highs_run(self.highs);
            Highs_getModelStatus(self.highs)
        };
        if status == kHighsModelStatusUnknown || status == kHighsModelStatusSolveError {
            // A warm start occasionally stalls; retry from the slack basis.
            status = unsafe {
                Highs_clearSolver(self.highs);
                Highs_run(self.highs);
                Highs_getModelStatus(self.highs)
            };
        }
        for (presolve, solver) in [("on", "simplex"), ("on", "ipm")] {
            if status != kHighsModelStatusUnknown && status != kHighsModelStatusSolveError {
                break;
            }
            set_str(self.highs, "presolve", presolve);
            set_str(self.highs, "solver", solver);
            status = unsafe {
                Highs_clearSolver(self.highs);
                Highs_run(self.highs);
                Highs_getModelStatus(self.highs)
            };
            set_str(self.highs, "presolve", "off");
            set_str(self.highs, "solver", "simplex");
        }
        match status {
            s if s == kHighsModelStatusOptimal => {
                let mut values = vec![0.0; self.lower.len()];
                let mut col_dual = vec![0.0; self.lower.len()];
                let mut row_value = vec![0.0; self.n_rows];
                let mut row_dual = vec![0.0; self.n_rows];
                let objective = unsafe {
                    Highs_getSolution(
                        self.highs,
                        values.as_mut_ptr(),
                        col_dual.as_mut_ptr(),
                        row_value.as_mut_ptr(),
                        row_dual.as_mut_ptr(),
                    );
                    Highs_getObjectiveValue(self.highs)
                };
                Ok(LpOutcome::Optimal(LpSolution { objective, values }))
            }
            s if s == kHighsModelStatusInfeasible => Ok(LpOutcome::Infeasible),
            s if s == kHighsModelStatusUnbounded || s == kHighsModelStatusUnboundedOrInfeasible => {
                Ok(LpOutcome::Unbounded)
            }
            s => Err(self.numerical(format!("simplex stopped with model status {s}"))),
        }
    }
}

impl Drop for LpEngine {
    fn drop(&mut self) {
        // SAFETY: created in `new` and never shared.
        unsafe { Highs_destroy(self.highs) };
    }
}

/// Solves the continuous relaxation of `model` (binaries treated as `[lower, upper]`).
pub fn solve_lp(model: &Model) -> Result<SolveResult, SolverError> {
    solve_lp_with_fixings(model, &[])
}

/// Like [`solve_lp`] with some variables fixed to given values.
pub fn solve_lp_with_fixings(model: &Model, fixings: &[(VarId, f64)]) -> Result<SolveResult, SolverError> {
    model.validate()?;
    let start = Instant::now();
    let mut engine = LpEngine::new(model, fixings);
    let res = match engine.solve(&[])? {
        LpOutcome::Optimal(sol) => SolveResult {
            status: Status::Optimal,
            objective: Some(sol.objective),
            best_bound: sol.objective,
            values: Some(sol.values),
            gap: Some(0.0),
            nodes: 1,
            wall_time: start.elapsed(),
        },
        LpOutcome::Infeasible => SolveResult::without_solution(Status::Infeasible, f64::INFINITY, 1, start.elapsed()),
        LpOutcome::Unbounded => {
            SolveResult::without_solution(Status::Unbounded, f64::NEG_INFINITY, 1, start.elapsed())
        }
    };
    Ok(res)
}
