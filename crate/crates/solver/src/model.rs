use std::fmt;

use thiserror::Error;

/// Index of a variable inside a [`Model`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Index of a row inside a [`Model`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub obj: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `values` violate this row (zero when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("variable `{name}` has inconsistent bounds [{lower}, {upper}]")]
    InconsistentBounds { name: String, lower: f64, upper: f64 },
    #[error("binary variable `{name}` has bounds [{lower}, {upper}] outside [0, 1]")]
    BinaryBounds { name: String, lower: f64, upper: f64 },
    #[error("row `{row}` references unknown variable {var}")]
    UnknownVariable { row: String, var: usize },
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("value vector has length {got}, model has {expected} variables")]
    ValueLength { expected: usize, got: usize },
}

/// A minimisation MILP over continuous and binary variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    vars: Vec<Var>,
    rows: Vec<Row>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
        obj: f64,
    ) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(Var {
            name: name.into(),
            kind,
            lower,
            upper,
            obj,
        });
        id
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64, obj: f64) -> VarId {
        self.add_var(name, VarKind::Continuous, lower, upper, obj)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, obj: f64) -> VarId {
        self.add_var(name, VarKind::Binary, 0.0, 1.0, obj)
    }

    /// Adds a row. Repeated variables are merged and zero coefficients dropped;
    /// the remaining terms are kept in first-occurrence order.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> RowId {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, c) in terms {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += c,
                None => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        let id = RowId(self.rows.len());
        self.rows.push(Row {
            name: name.into(),
            terms: merged,
            sense,
            rhs,
        });
        id
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn var(&self, id: VarId) -> &Var {
        &self.vars[id.0]
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
    }

    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) {
        let v = &mut self.vars[id.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn set_obj(&mut self, id: VarId, obj: f64) {
        self.vars[id.0].obj = obj;
    }

    /// Looks a variable up by name (linear scan).
    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.vars.iter().zip(values).map(|(v, x)| v.obj * x).sum()
    }

    /// Largest row or bound violation of `values`.
    pub fn residual(&self, values: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        self.rows
            .iter()
            .map(|r| r.violation(values))
            .fold(bounds, f64::max)
    }

    /// Largest distance of a binary variable from the nearest integer.
    pub fn integrality_violation(&self, values: &[f64]) -> f64 {
        self.binaries()
            .map(|v| {
                let x = values[v.0];
                (x - x.round()).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut names = std::collections::HashSet::new();
        for v in &self.vars {
            if !names.insert(v.name.as_str()) {
                return Err(ModelError::DuplicateName(v.name.clone()));
            }
            if v.lower.is_nan() || v.upper.is_nan() || !v.obj.is_finite() {
                return Err(ModelError::NonFinite(v.name.clone()));
            }
            if v.lower > v.upper {
                return Err(ModelError::InconsistentBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(ModelError::BinaryBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(ModelError::NonFinite(r.name.clone()));
            }
            for &(v, c) in &r.terms {
                if v.0 >= self.vars.len() {
                    return Err(ModelError::UnknownVariable {
                        row: r.name.clone(),
                        var: v.0,
                    });
                }
                if !c.is_finite() {
                    return Err(ModelError::NonFinite(r.name.clone()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_row_merges_duplicates_and_drops_zeros() {
        let mut m = Model::new();
        let x = m.add_continuous("x", 0.0, 1.0, 0.0);
        let y = m.add_continuous("y", 0.0, 1.0, 0.0);
        m.add_row("r", [(x, 1.0), (y, 2.0), (x, 3.0), (y, -2.0)], Sense::Le, 1.0);
        assert_eq!(m.rows()[0].terms, vec![(x, 4.0)]);
    }

    #[test]
    fn validate_rejects_bad_bounds() {
        let mut m = Model::new();
        m.add_continuous("x", 2.0, 1.0, 0.0);
        assert!(matches!(m.validate(), Err(ModelError::InconsistentBounds { .. })));

        let mut m = Model::new();
        m.add_var("b", VarKind::Binary, 0.0, 2.0, 0.0);
        assert!(matches!(m.validate(), Err(ModelError::BinaryBounds { .. })));

        let mut m = Model::new();
        m.add_row("r", [(VarId(3), 1.0)], Sense::Le, 0.0);
        assert!(matches!(m.validate(), Err(ModelError::UnknownVariable { .. })));
    }

    #[test]
    fn residual_reports_worst_violation() {
        let mut m = Model::new();
        let x = m.add_continuous("x", 0.0, 10.0, 1.0);
        let y = m.add_continuous("y", 0.0, 10.0, 1.0);
        m.add_row("a", [(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
        m.add_row("b", [(x, 1.0)], Sense::Eq, 1.0);
        assert_eq!(m.residual(&[1.0, 3.0]), 0.0);
        assert_eq!(m.residual(&[1.0, 5.0]), 2.0);
        assert_eq!(m.residual(&[-0.5, 0.0]), 1.5);
        assert_eq!(m.objective_value(&[1.0, 3.0]), 4.0);
    }
}
