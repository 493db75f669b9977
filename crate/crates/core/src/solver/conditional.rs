//! Conditional functional for couples where one side has `q = inf`.
//!
//! `G(s)` is the least side-0 cost among colorings whose side-1 cost is at
//! most `s`. For `q1 = inf` the side-1 cost is a max over levels, so the
//! constraint splits into one constraint per layer and `G` is a step
//! function assembled from per-layer Pareto frontiers.

use crate::error::{Error, Result};
use crate::grid::CoeffField;
use crate::oracle::check_t;
use crate::par::*;
use crate::spaces::CouplePair;

use super::layer::LayerSplits;

/// Step function `s -> G(s)`: equal to `values[k]` on
/// `[breakpoints[k], breakpoints[k + 1])`, with `breakpoints[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalCurve {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

fn aggregate(parts: &[f64], q0: f64) -> f64 {
    if q0.is_infinite() {
        parts.iter().copied().fold(0.0, f64::max)
    } else {
        parts.iter().map(|g| g.powf(q0)).sum::<f64>().powf(1.0 / q0)
    }
}

impl ConditionalCurve {
    /// Builds `G` for a couple with `q1 = inf`.
    pub fn new(field: &CoeffField, pair: &CouplePair) -> Result<Self> {
        if pair.side1.outer.q.is_finite() {
            return Err(Error::InvalidArgument(
                "conditional functional needs q1 = inf".into(),
            ));
        }
        let levels: Vec<(i32, &[f64])> = field.levels().collect();
        let frontiers: Vec<Vec<(f64, f64)>> = levels
            .into_par_iter()
            .map(|(j, layer)| {
                let splits = LayerSplits::auto(layer, pair.side0.inner, pair.side1.inner);
                let w0 = (j as f64 * pair.side0.outer.s).exp2();
                let w1 = (j as f64 * pair.side1.outer.s).exp2();
                splits.frontier(w0, w1)
            })
            .collect();
        let mut breakpoints: Vec<f64> = frontiers.iter().flatten().map(|p| p.1).collect();
        breakpoints.push(0.0);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        // Per layer, the cheapest side-0 cost with side-1 cost <= s is the
        // last frontier point whose b does not exceed s.
        let mut cursor = vec![0usize; frontiers.len()];
        let values = breakpoints
            .iter()
            .map(|&s| {
                let parts: Vec<f64> = frontiers
                    .iter()
                    .zip(cursor.iter_mut())
                    .map(|(front, c)| {
                        while *c + 1 < front.len() && front[*c + 1].1 <= s {
                            *c += 1;
                        }
                        front[*c].0
                    })
                    .collect();
                aggregate(&parts, pair.side0.outer.q)
            })
            .collect();
        Ok(ConditionalCurve {
            breakpoints,
            values,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn interval(&self, s: f64) -> usize {
        self.breakpoints.partition_point(|b| *b <= s).saturating_sub(1)
    }

    /// `G(s)`; `G(inf) = 0`.
    pub fn g(&self, s: f64) -> f64 {
        self.values[self.interval(s)]
    }

    /// Left limit `G(s-)` for `s > 0`.
    pub fn g_left(&self, s: f64) -> f64 {
        let k = self.breakpoints.partition_point(|b| *b < s).saturating_sub(1);
        self.values[k]
    }

    /// `G(s) / s`.
    pub fn tilde(&self, s: f64) -> f64 {
        self.g(s) / s
    }

    /// `H(t) = sup { s : G(s-) >= t s }`.
    pub fn h(&self, t: f64) -> Result<f64> {
        if self.values[0] == 0.0 {
            return Err(Error::Degenerate("conditional threshold of a zero field"));
        }
        let b = &self.breakpoints;
        let g = &self.values;
        // The intervals (b_k, b_{k+1}] meeting the set form a prefix.
        let (mut lo, mut hi) = (0, g.len());
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if g[mid] > t * b[mid] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let last = lo;
        let upper = b.get(last + 1).copied().unwrap_or(f64::INFINITY);
        Ok(upper.min(g[last] / t))
    }
}

/// `G(s)` for a couple with `q1 = inf`.
pub fn g_conditional(s: f64, field: &CoeffField, pair: &CouplePair) -> Result<f64> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::InvalidArgument(format!("s must be nonnegative, got {s}")));
    }
    Ok(ConditionalCurve::new(field, pair)?.g(s))
}

/// `H(t)` for a couple with `q1 = inf`.
pub fn h_threshold(t: f64, field: &CoeffField, pair: &CouplePair) -> Result<f64> {
    check_t(t)?;
    ConditionalCurve::new(field, pair)?.h(t)
}

/// Max-form functional of a couple with exactly one infinite outer
/// exponent: `t H(t)` when `q1 = inf`, by commutation when `q0 = inf`.
pub fn k_q_infinity(t: f64, field: &CoeffField, pair: &CouplePair) -> Result<f64> {
    check_t(t)?;
    let (q0, q1) = (pair.side0.outer.q, pair.side1.outer.q);
    if q0.is_infinite() == q1.is_infinite() {
        return Err(Error::InvalidArgument(
            "k_q_infinity needs exactly one infinite q".into(),
        ));
    }
    if q0.is_infinite() {
        return Ok(t * k_q_infinity(1.0 / t, field, &pair.swapped())?);
    }
    match ConditionalCurve::new(field, pair)?.h(t) {
        Ok(h) => Ok(t * h),
        Err(Error::Degenerate(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{k_vertex_exhaustive, FunctionalForm, DEFAULT_CAP};
    use crate::spaces::{InnerSpace, SpaceSide};
    use proptest::prelude::*;

    fn worked() -> (CoeffField, CouplePair) {
        (
            CoeffField::single_layer(0, vec![3.0, 1.0]).unwrap(),
            "s=0,q=1,A=lp(1);s=0,q=inf,A=lp(1)".parse().unwrap(),
        )
    }

    #[test]
    fn worked_step_curve() {
        let (f, pair) = worked();
        let c = ConditionalCurve::new(&f, &pair).unwrap();
        for (s, g) in [(0.0, 4.0), (0.5, 4.0), (1.0, 3.0), (2.9, 3.0), (3.0, 1.0), (3.5, 1.0), (4.0, 0.0), (9.0, 0.0)] {
            assert_eq!(c.g(s), g, "G({s})");
        }
        assert_eq!(c.g(f64::INFINITY), 0.0);
        assert_eq!(c.h(1.0).unwrap(), 3.0);
        assert_eq!(c.g_left(3.0), 3.0);
        assert_eq!(k_q_infinity(1.0, &f, &pair).unwrap(), 3.0);
        assert_eq!(k_q_infinity(0.5, &f, &pair).unwrap(), 1.5);
    }

    #[test]
    fn h_limits() {
        let (f, pair) = worked();
        assert!(h_threshold(1e6, &f, &pair).unwrap() < 1e-5);
        assert!(h_threshold(1e-6, &f, &pair).unwrap() >= 4.0);
        let z = CoeffField::empty(0, 0).unwrap();
        assert!(matches!(h_threshold(1.0, &z, &pair), Err(Error::Degenerate(_))));
        assert_eq!(k_q_infinity(1.0, &z, &pair).unwrap(), 0.0);
    }

    #[test]
    fn single_coefficient() {
        let f = CoeffField::single_layer(0, vec![2.0]).unwrap();
        let pair: CouplePair = "s=0,q=2,A=lp(1);s=0,q=inf,A=lp(3)".parse().unwrap();
        for t in [0.1, 1.0, 3.0] {
            assert_eq!(k_q_infinity(t, &f, &pair).unwrap(), 2.0 * f64::min(1.0, t));
            assert_eq!(k_q_infinity(t, &f, &pair.swapped()).unwrap(), 2.0 * f64::min(1.0, t));
        }
    }

    fn pair(q0: f64, q1: f64) -> CouplePair {
        CouplePair::new(
            SpaceSide::new(0.4, q0, InnerSpace::Lp(1.0)).unwrap(),
            SpaceSide::new(-0.3, q1, InnerSpace::Lp(2.0)).unwrap(),
        )
        .unwrap()
    }

    fn field() -> impl Strategy<Value = CoeffField> {
        prop::collection::vec(prop::collection::vec(0.0f64..4.0, 1..5), 1..3)
            .prop_map(|layers| CoeffField::new(-1, layers.len() as i32 - 2, layers).unwrap())
    }

    proptest! {
        #[test]
        fn exact_against_oracle(f in field(), q0 in prop::sample::select(vec![0.5, 1.0, 2.0]), t in 0.05f64..20.0) {
            let p = pair(q0, f64::INFINITY);
            let fast = k_q_infinity(t, &f, &p).unwrap();
            let exact = k_vertex_exhaustive(t, &f, &p, FunctionalForm::Max, DEFAULT_CAP).unwrap().value;
            prop_assert!((fast - exact).abs() <= 1e-12 * exact.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn commuted_case_is_exact_commutation(f in field(), t in 0.05f64..20.0) {
            let p = pair(f64::INFINITY, 1.0);
            let a = k_q_infinity(t, &f, &p).unwrap();
            let b = t * k_q_infinity(1.0 / t, &f, &p.swapped()).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn g_and_tilde_nonincreasing(f in field(), q0 in prop::sample::select(vec![0.5, 1.0, 2.0])) {
            let c = ConditionalCurve::new(&f, &pair(q0, f64::INFINITY)).unwrap();
            let v = c.values();
            prop_assert!(v.windows(2).all(|w| w[1] <= w[0]));
            let b = c.breakpoints();
            for k in 2..b.len() {
                prop_assert!(c.tilde(b[k]) <= c.tilde(b[k - 1]));
            }
        }
    }
}
