//! Piecewise McCormick envelopes for the idle-aging product `s̄ · w`.

use amrsched_solver::{Model, RowId, Sense, VarId};

/// A box `[s_lo, s_hi] x [w_lo, w_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub s_lo: f64,
    pub s_hi: f64,
    pub w_lo: f64,
    pub w_hi: f64,
}

impl Cell {
    pub fn contains(&self, s: f64, w: f64, tol: f64) -> bool {
        s >= self.s_lo - tol && s <= self.s_hi + tol && w >= self.w_lo - tol && w <= self.w_hi + tol
    }

    /// Envelope bounds on `s * w` at a point of the box.
    pub fn envelope(&self, s: f64, w: f64) -> (f64, f64) {
        let lo = (self.s_lo * w + self.w_lo * s - self.s_lo * self.w_lo)
            .max(self.s_hi * w + self.w_hi * s - self.s_hi * self.w_hi);
        let hi = (self.s_hi * w + self.w_lo * s - self.s_hi * self.w_lo)
            .min(self.s_lo * w + self.w_hi * s - self.s_lo * self.w_hi);
        (lo, hi)
    }

    /// Largest distance between the product and any envelope value: a quarter of the area.
    pub fn max_gap(&self) -> f64 {
        (self.s_hi - self.s_lo) * (self.w_hi - self.w_lo) / 4.0
    }
}

/// Equal tiling of `[s_min, s_max]` into `p_s` and `[0, w_max]` into `p_w` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionGrid {
    pub s: Vec<(f64, f64)>,
    pub w: Vec<(f64, f64)>,
}

fn tile(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let step = (hi - lo) / n as f64;
    (0..n)
        .map(|k| {
            let a = if k == 0 { lo } else { lo + step * k as f64 };
            let b = if k + 1 == n { hi } else { lo + step * (k + 1) as f64 };
            (a, b)
        })
        .collect()
}

impl PartitionGrid {
    pub fn uniform(s_min: f64, s_max: f64, p_s: usize, w_max: f64, p_w: usize) -> Self {
        Self {
            s: tile(s_min, s_max, p_s),
            w: tile(0.0, w_max, p_w),
        }
    }

    pub fn cell(&self, p: usize, q: usize) -> Cell {
        Cell {
            s_lo: self.s[p].0,
            s_hi: self.s[p].1,
            w_lo: self.w[q].0,
            w_hi: self.w[q].1,
        }
    }

    /// Cells in `(p, q)` row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, Cell)> + '_ {
        (0..self.s.len()).flat_map(move |p| (0..self.w.len()).map(move |q| (p, q, self.cell(p, q))))
    }

    pub fn len(&self) -> usize {
        self.s.len() * self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Disaggregated variables of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellVars {
    pub z: VarId,
    pub s: VarId,
    pub w: VarId,
    pub l: VarId,
}

/// Adds the z-scaled box bounds and the four envelope rows of one cell.
/// Returns the four bound rows followed by the four envelope rows.
pub fn mccormick_rows(model: &mut Model, name: &str, cell: &Cell, v: &CellVars) -> Vec<RowId> {
    let Cell { s_lo, s_hi, w_lo, w_hi } = *cell;
    let mut rows = Vec::with_capacity(8);
    rows.push(model.add_row(format!("{name}_slo"), [(v.s, 1.0), (v.z, -s_lo)], Sense::Ge, 0.0));
    rows.push(model.add_row(format!("{name}_shi"), [(v.s, 1.0), (v.z, -s_hi)], Sense::Le, 0.0));
    rows.push(model.add_row(format!("{name}_wlo"), [(v.w, 1.0), (v.z, -w_lo)], Sense::Ge, 0.0));
    rows.push(model.add_row(format!("{name}_whi"), [(v.w, 1.0), (v.z, -w_hi)], Sense::Le, 0.0));
    let env = [
        (s_lo, w_lo, Sense::Ge, "mc1"),
        (s_hi, w_hi, Sense::Ge, "mc2"),
        (s_hi, w_lo, Sense::Le, "mc3"),
        (s_lo, w_hi, Sense::Le, "mc4"),
    ];
    for (sa, wa, sense, tag) in env {
        // l - sa*w - wa*s + sa*wa*z  (>= or <=)  0
        rows.push(model.add_row(
            format!("{name}_{tag}"),
            [(v.l, 1.0), (v.w, -sa), (v.s, -wa), (v.z, sa * wa)],
            sense,
            0.0,
        ));
    }
    rows
}
