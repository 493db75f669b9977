//! CSV serialization of curves and probe reports.

use std::io::Write;

use crate::error::Result;

use super::{HolmstedtRow, KCurve, LorentzTrial};

/// Rounds to 12 significant digits and prints the shortest representation
/// that reads back to the rounded value (`1` prints as `1.0`).
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0.0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded:?}")
}

/// `t,value` rows.
pub fn write_curve_csv<W: Write>(curve: &KCurve, mut out: W) -> Result<()> {
    writeln!(out, "t,value")?;
    for (t, k) in &curve.samples {
        writeln!(out, "{},{}", fmt_num(*t), fmt_num(*k))?;
    }
    Ok(())
}

/// `t,lhs,rhs,ratio` rows.
pub fn write_ratio_csv<W: Write>(rows: &[HolmstedtRow], mut out: W) -> Result<()> {
    writeln!(out, "t,lhs,rhs,ratio")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", fmt_num(r.t), fmt_num(r.lhs), fmt_num(r.rhs), fmt_num(r.ratio))?;
    }
    Ok(())
}

/// `trial,size,ratio` rows.
pub fn write_trials_csv<W: Write>(trials: &[LorentzTrial], mut out: W) -> Result<()> {
    writeln!(out, "trial,size,ratio")?;
    for r in trials {
        writeln!(out, "{},{},{}", r.trial, r.size, fmt_num(r.ratio))?;
    }
    Ok(())
}
