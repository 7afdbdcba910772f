use std::fmt::Write as _;
use std::path::Path;

use crate::error::SolverError;
use crate::model::{Model, VarKind};

/// Terms written per line before wrapping; keeps lines well under the 560-character
/// limit of common LP readers.
const TERMS_PER_LINE: usize = 8;

/// Formats `v` like C's `%.17g`: 17 significant digits, trailing zeros removed.
pub fn fmt_g17(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) -> bool {
    let mut any = false;
    for (i, (c, name)) in terms.enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
        if i == 0 {
            if sign == "-" {
                out.push_str(" -");
            }
            let _ = write!(out, " {} {}", fmt_g17(mag), name);
        } else {
            let _ = write!(out, " {} {} {}", sign, fmt_g17(mag), name);
        }
        any = true;
    }
    any
}

/// Renders `model` in CPLEX LP format. Variables and rows appear in id order and
/// zero objective coefficients are omitted, so the output is byte-stable.
pub fn write_lp(model: &Model) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    let obj_terms = model
        .vars()
        .iter()
        .filter(|v| v.obj != 0.0)
        .map(|v| (v.obj, v.name.clone()));
    if !write_terms(&mut out, obj_terms) {
        if let Some(v) = model.vars().first() {
            let _ = write!(out, " 0 {}", v.name);
        }
    }
    out.push('\n');

    out.push_str("Subject To\n");
    for row in model.rows() {
        let _ = write!(out, " {}:", row.name);
        let terms = row.terms.iter().map(|&(v, c)| (c, model.var(v).name.clone()));
        if !write_terms(&mut out, terms) {
            if let Some(v) = model.vars().first() {
                let _ = write!(out, " 0 {}", v.name);
            }
        }
        let _ = writeln!(out, " {} {}", row.sense, fmt_g17(row.rhs));
    }

    let mut bounds = String::new();
    for v in model.vars() {
        let (lo, hi) = (v.lower, v.upper);
        let line = match v.kind {
            VarKind::Binary if lo == 0.0 && hi == 1.0 => None,
            _ if lo == hi => Some(format!(" {} = {}", v.name, fmt_g17(lo))),
            VarKind::Continuous if lo == 0.0 && hi == f64::INFINITY => None,
            _ if lo == f64::NEG_INFINITY && hi == f64::INFINITY => Some(format!(" {} free", v.name)),
            _ if hi == f64::INFINITY => Some(format!(" {} >= {}", v.name, fmt_g17(lo))),
            _ if lo == f64::NEG_INFINITY => Some(format!(" -inf <= {} <= {}", v.name, fmt_g17(hi))),
            _ => Some(format!(" {} <= {} <= {}", fmt_g17(lo), v.name, fmt_g17(hi))),
        };
        if let Some(line) = line {
            bounds.push_str(&line);
            bounds.push('\n');
        }
    }
    if !bounds.is_empty() {
        out.push_str("Bounds\n");
        out.push_str(&bounds);
    }

    let binaries: Vec<&str> = model
        .vars()
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for b in binaries {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    out
}

pub fn export_lp_file(model: &Model, path: impl AsRef<Path>) -> Result<(), SolverError> {
    let path = path.as_ref();
    std::fs::write(path, write_lp(model)).map_err(|source| SolverError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    #[test]
    fn g17_formatting() {
        assert_eq!(fmt_g17(3.0), "3");
        assert_eq!(fmt_g17(-2.5), "-2.5");
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(5e-5), "5.0000000000000002e-05");
        assert_eq!(fmt_g17(480.0), "480");
        assert_eq!(fmt_g17(1e20), "1e+20");
        assert_eq!(fmt_g17(123456.75), "123456.75");
        for v in [0.1, 1.0 / 3.0, 2.5e-7, 987654.321, -0.015] {
            assert_eq!(fmt_g17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn one_variable_model_is_five_lines() {
        let mut m = Model::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY, 1.0);
        m.add_row("c0", [(x, 1.0)], Sense::Ge, 3.0);
        let text = write_lp(&m);
        assert_eq!(text, "Minimize\n obj: 1 x\nSubject To\n c0: 1 x >= 3\nEnd\n");
        assert_eq!(text.lines().count(), 5);
        assert_eq!(text, write_lp(&m.clone()));
    }

    #[test]
    fn zero_objective_terms_are_omitted() {
        let mut m = Model::new();
        let x = m.add_continuous("x", 0.0, 4.0, 0.0);
        let y = m.add_binary("y", -2.0);
        m.add_row("link", [(x, 1.0), (y, -4.0)], Sense::Le, 0.0);
        let text = write_lp(&m);
        assert!(text.starts_with("Minimize\n obj: - 2 y\n"), "{text}");
        assert!(text.contains(" 0 <= x <= 4\n"));
        assert!(text.contains("Binaries\n y\n"));
        assert!(text.contains(" link: 1 x - 4 y <= 0\n"));
    }

    #[test]
    fn long_rows_wrap() {
        let mut m = Model::new();
        let vars: Vec<_> = (0..20).map(|i| m.add_continuous(format!("v{i}"), 0.0, 1.0, 0.0)).collect();
        m.add_row("sum", vars.iter().map(|&v| (v, 1.0)), Sense::Le, 1.0);
        let text = write_lp(&m);
        assert!(text.lines().all(|l| l.len() < 200));
    }
}
