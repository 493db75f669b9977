//! Couples sharing the inner space or the outer exponent.

use crate::error::{Error, Result};
use crate::grid::CoeffField;
use crate::oracle::{check_t, k_scalar_vertex, FunctionalForm};
use crate::par::*;
use crate::spaces::{inner_norm, CouplePair, OuterWeights};

use super::layer::{LayerContribution, LayerSplits};

/// Value of the scalar problem with one value per level, for a given
/// threshold; the levels are `jmin..`. Exact under `cap` nonzero levels,
/// otherwise the best split of levels ordered by `2^{j(s1 - s0)}`.
fn scalar_k(t: f64, values: &[f64], jmin: i32, pair: &CouplePair, cap: usize) -> Result<f64> {
    let nonzero = values.iter().filter(|v| **v > 0.0).count();
    if nonzero <= cap {
        return Ok(k_scalar_vertex(
            t,
            values,
            jmin,
            pair.side0.outer,
            pair.side1.outer,
            FunctionalForm::Sum,
            cap,
        )?
        .value);
    }
    let jmax = jmin + values.len() as i32 - 1;
    let w0 = OuterWeights::new(pair.side0.outer, jmin, jmax);
    let w1 = OuterWeights::new(pair.side1.outer, jmin, jmax);
    let mut order: Vec<usize> = (0..values.len()).filter(|&k| values[k] > 0.0).collect();
    let ds = pair.side1.outer.s - pair.side0.outer.s;
    // Levels where side 1 is cheapest relative to side 0 come first.
    order.sort_by(|&a, &b| (ds * a as f64).total_cmp(&(ds * b as f64)).then(a.cmp(&b)));
    let evaluate = |k: usize, to_one: bool| {
        let mut x = vec![0.0; values.len()];
        let mut y = vec![0.0; values.len()];
        for (rank, &level) in order.iter().enumerate() {
            if (rank < k) == to_one {
                y[level] = values[level];
            } else {
                x[level] = values[level];
            }
        }
        w0.aggregate(&x) + t * w1.aggregate(&y)
    };
    let best = (0..=order.len())
        .into_par_iter()
        .map(|k| evaluate(k, true).min(evaluate(k, false)))
        .collect::<Vec<f64>>();
    Ok(best.into_iter().fold(f64::INFINITY, f64::min))
}

/// K-functional of a couple with a common inner space: the layers collapse
/// to their inner norms and the scalar problem is solved over levels.
pub fn k_same_a(t: f64, field: &CoeffField, pair: &CouplePair, cap: usize) -> Result<f64> {
    check_t(t)?;
    if !pair.same_inner() {
        return Err(Error::InvalidArgument(
            "k_same_a needs identical inner spaces".into(),
        ));
    }
    let values: Vec<f64> = field.layers().iter().map(|l| inner_norm(l, pair.side0.inner)).collect();
    scalar_k(t, &values, field.jmin(), pair, cap)
}

/// Per-layer best prefix splits at the level-adjusted threshold
/// `t 2^{j(s1 - s0)}`, in Sum form.
pub fn layer_contributions(t: f64, field: &CoeffField, pair: &CouplePair) -> Vec<LayerContribution> {
    let ds = pair.side1.outer.s - pair.side0.outer.s;
    let levels: Vec<(i32, &[f64])> = field.levels().collect();
    levels
        .into_par_iter()
        .map(|(j, layer)| {
            let splits = LayerSplits::prefix(layer, pair.side0.inner, pair.side1.inner);
            let tj = (t.log2() + j as f64 * ds).exp2();
            let (i, _) = splits.best(tj, FunctionalForm::Sum);
            let c = splits.candidates()[i];
            LayerContribution {
                j,
                x: c.n0,
                y: c.n1,
                assignment: splits.bits(i),
            }
        })
        .collect()
}

/// K-functional of a couple with a common outer exponent `q`: every layer
/// is split independently and the side values are aggregated per side.
pub fn k_same_q(t: f64, field: &CoeffField, pair: &CouplePair) -> Result<f64> {
    check_t(t)?;
    if pair.side0.outer.q != pair.side1.outer.q {
        return Err(Error::InvalidArgument("k_same_q needs q0 = q1".into()));
    }
    let parts = layer_contributions(t, field, pair);
    let x: Vec<f64> = parts.iter().map(|c| c.x).collect();
    let y: Vec<f64> = parts.iter().map(|c| c.y).collect();
    let w0 = OuterWeights::for_field(pair.side0.outer, field);
    let w1 = OuterWeights::for_field(pair.side1.outer, field);
    Ok(w0.aggregate(&x) + t * w1.aggregate(&y))
}
