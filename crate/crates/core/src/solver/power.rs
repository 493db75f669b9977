//! Power-space inversion and couples with distinct finite outer exponents.

use crate::error::{Error, Result};
use crate::grid::CoeffField;
use crate::oracle::check_t;
use crate::par::*;
use crate::spaces::CouplePair;

use super::layer::LayerSplits;

/// Relative tolerance of every root find.
pub const ROOT_TOL: f64 = 1e-9;
const MAX_BISECTIONS: usize = 200;
const MAX_EXPANSIONS: usize = 1100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `rho0 >= rho1`: solve `u^{rho1} g(u)^{rho0 - rho1} = s`.
    Direct,
    /// `rho0 < rho1`: solve `u^{rho0} g(u)^{rho1 - rho0} = s`, where `g` is
    /// the commuted curve `u g(1/u)`.
    Commuted,
}

/// Exponents relating a couple to its power couple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRelation {
    pub rho0: f64,
    pub rho1: f64,
    pub orientation: Orientation,
}

impl PowerRelation {
    /// Relation with the orientation that keeps the inner exponent nonnegative.
    pub fn new(rho0: f64, rho1: f64) -> Result<Self> {
        if !(rho0 > 0.0 && rho0.is_finite() && rho1 > 0.0 && rho1.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "power exponents must be finite and positive, got ({rho0}, {rho1})"
            )));
        }
        let orientation = if rho0 >= rho1 {
            Orientation::Direct
        } else {
            Orientation::Commuted
        };
        Ok(PowerRelation {
            rho0,
            rho1,
            orientation,
        })
    }

    /// Exponents `(a, b)` of the map `u -> u^a g(u)^b`.
    fn exponents(&self) -> (f64, f64) {
        match self.orientation {
            Orientation::Direct => (self.rho1, self.rho0 - self.rho1),
            Orientation::Commuted => (self.rho0, self.rho1 - self.rho0),
        }
    }
}

/// Solves `u^a g(u)^b = s_target` for the exponents of `relation`, with `g`
/// nondecreasing and `g(u)/u` nonincreasing, so the map is increasing.
///
/// The bracket grows by factors of 2 from `u = 1`; bisection then runs on
/// `ln u` until `|map(u) - s| <= tol s`.
pub fn power_root_find(
    g: impl Fn(f64) -> f64,
    relation: &PowerRelation,
    s_target: f64,
    tol: f64,
) -> Result<f64> {
    if !(s_target > 0.0 && s_target.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "root target must be positive and finite, got {s_target}"
        )));
    }
    let (a, b) = relation.exponents();
    let ln_s = s_target.ln();
    let h = |x: f64| -> f64 {
        let gu = g(x.exp());
        let lg = if gu > 0.0 {
            gu.ln()
        } else if b == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        };
        a * x + b * lg - ln_s
    };
    let step = std::f64::consts::LN_2;
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let h0 = h(0.0);
    if h0 == 0.0 {
        return Ok(1.0);
    }
    if h0 < 0.0 {
        let mut found = false;
        for _ in 0..MAX_EXPANSIONS {
            hi += step;
            let v = h(hi);
            if v >= 0.0 {
                found = true;
                break;
            }
            lo = hi;
        }
        if !found {
            return Err(Error::Degenerate("power root target is not bracketable"));
        }
    } else {
        let mut found = false;
        for _ in 0..MAX_EXPANSIONS {
            lo -= step;
            let v = h(lo);
            if v <= 0.0 && v > f64::NEG_INFINITY {
                found = true;
                break;
            }
            if v == f64::NEG_INFINITY {
                return Err(Error::Degenerate("curve vanishes below the root"));
            }
            hi = lo;
        }
        if !found {
            return Err(Error::Degenerate("power root target is not bracketable"));
        }
    }
    // The map's log-slope is at most max(a, a + b), so this width bounds
    // the relative error of both u and map(u).
    let width = tol / (2.0 * a.max(a + b).max(1.0));
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// `K_∞` of the power couple `(A0^{rho0}, A1^{rho1})` at `s`, from the base
/// curve `kappa(τ) = K_∞(τ, A0, A1)`.
pub fn power_k_inf(
    kappa: impl Fn(f64) -> f64,
    relation: &PowerRelation,
    s: f64,
    tol: f64,
) -> Result<f64> {
    match relation.orientation {
        Orientation::Direct => {
            let tau = power_root_find(&kappa, relation, s, tol)?;
            Ok(kappa(tau).powf(relation.rho0))
        }
        Orientation::Commuted => {
            let commuted = |tau: f64| tau * kappa(1.0 / tau);
            let tau = power_root_find(commuted, relation, 1.0 / s, tol)?;
            Ok(s * commuted(tau).powf(relation.rho1))
        }
    }
}

/// Weighted per-layer Max-form base curve `τ -> min_c max(a_c, τ b_c)`.
#[derive(Debug, Clone)]
pub struct LayerCurve {
    /// Pareto frontier `(a, b)`, increasing `b`, decreasing `a`.
    points: Vec<(f64, f64)>,
}

impl LayerCurve {
    pub fn new(splits: &LayerSplits, w0: f64, w1: f64) -> Self {
        LayerCurve {
            points: splits.frontier(w0, w1),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.points.iter().all(|p| p.0 == 0.0 && p.1 == 0.0)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// `K_∞(τ)` over the frontier.
    pub fn k_inf(&self, tau: f64) -> f64 {
        self.points
            .iter()
            .map(|(a, b)| a.max(tau * b))
            .fold(f64::INFINITY, f64::min)
    }

    /// `min_c max(a_c^{rho0}, s b_c^{rho1})`, evaluated directly.
    pub fn power_k_inf_direct(&self, rho0: f64, rho1: f64, s: f64) -> f64 {
        self.points
            .iter()
            .map(|(a, b)| a.powf(rho0).max(s * b.powf(rho1)))
            .fold(f64::INFINITY, f64::min)
    }
}

fn layer_curves(field: &CoeffField, pair: &CouplePair) -> Vec<LayerCurve> {
    let levels: Vec<(i32, &[f64])> = field.levels().collect();
    levels
        .into_par_iter()
        .map(|(j, layer)| {
            let splits = LayerSplits::auto(layer, pair.side0.inner, pair.side1.inner);
            let w0 = (j as f64 * pair.side0.outer.s).exp2();
            let w1 = (j as f64 * pair.side1.outer.s).exp2();
            LayerCurve::new(&splits, w0, w1)
        })
        .filter(|c| !c.is_zero())
        .collect()
}

fn k_diff_q_direct(t: f64, field: &CoeffField, pair: &CouplePair) -> Result<f64> {
    let (q0, q1) = (pair.side0.outer.q, pair.side1.outer.q);
    let curves = layer_curves(field, pair);
    if curves.is_empty() {
        return Ok(0.0);
    }
    let layer_rel = PowerRelation::new(q0, q1)?;
    // Sum over layers of the power-couple functionals: within a factor 2 of
    // the power-couple functional of the whole field.
    let d = |v: f64| -> f64 {
        curves
            .iter()
            .map(|c| {
                power_k_inf(|tau| c.k_inf(tau), &layer_rel, v, ROOT_TOL)
                    .unwrap_or_else(|_| c.power_k_inf_direct(q0, q1, v))
            })
            .sum()
    };
    let outer_rel = PowerRelation::new(1.0 / q0, 1.0 / q1)?;
    let v = power_root_find(d, &outer_rel, t, ROOT_TOL)?;
    Ok(d(v).powf(1.0 / q0))
}

/// Max-form functional of a couple with distinct finite outer exponents,
/// through the power couples of both sides.
pub fn k_diff_q(t: f64, field: &CoeffField, pair: &CouplePair) -> Result<f64> {
    check_t(t)?;
    let (q0, q1) = (pair.side0.outer.q, pair.side1.outer.q);
    if !(q0.is_finite() && q1.is_finite()) || q0 == q1 {
        return Err(Error::InvalidArgument("k_diff_q needs distinct finite q0, q1".into()));
    }
    if field.is_zero() {
        return Ok(0.0);
    }
    if q0 < q1 {
        k_diff_q_direct(t, field, pair)
    } else {
        Ok(t * k_diff_q_direct(1.0 / t, field, &pair.swapped())?)
    }
}
