//! Numeric probes of interpolation identities and equivalences.

use crate::error::{Error, Result};
use crate::grid::{gen_field, CoeffField, Law};
use crate::oracle::FunctionalForm;
use crate::par::*;
use crate::spaces::{inner_norm, CouplePair, InnerSpace, SpaceSide};

use super::{
    default_window, interp_norm, k_curve, truncated_integral, CurveMethod, KCurve, QuadratureSpec,
    ThetaEta,
};

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        1.0
    } else {
        a / b
    }
}

/// Norm of `(A0, A1)_{θ,η}` against `(A1, A0)_{1-θ,η}` on one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Evaluates both sides of the commutation identity from Sum-form oracle
/// curves sampled on the same window.
pub fn commutation_check(
    field: &CoeffField,
    pair: &CouplePair,
    te: ThetaEta,
    spec: &QuadratureSpec,
    cap: usize,
) -> Result<CommutationReport> {
    let method = CurveMethod::Oracle(FunctionalForm::Sum);
    let lhs = interp_norm(&k_curve(field, pair, spec, method, cap)?, te)?.value;
    let swapped_te = ThetaEta::new(1.0 - te.theta, te.eta)?;
    let rhs = interp_norm(&k_curve(field, &pair.swapped(), spec, method, cap)?, swapped_te)?.value;
    Ok(CommutationReport {
        lhs,
        rhs,
        ratio: ratio(lhs, rhs),
    })
}

/// Interpolation norms from the Sum form and another form, with the band
/// their ratio must fall in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KxiReport {
    pub sum_norm: f64,
    pub other_norm: f64,
    /// `other_norm / sum_norm`.
    pub ratio: f64,
    pub lo: f64,
    pub hi: f64,
}

impl KxiReport {
    pub fn within(&self, tol: f64) -> bool {
        self.ratio >= self.lo - tol && self.ratio <= self.hi + tol
    }
}

/// Compares the norm built on `form` (`Xi(ξ)` or `Max`) with the Sum-form
/// norm. For `Xi(ξ)` the band is `[2^{-1/min(1,ξ)}, 2^{1/min(1,ξ)}]`, for
/// `Max` it is `[1/2, 1]`.
pub fn kxi_equivalence_check(
    field: &CoeffField,
    pair: &CouplePair,
    form: FunctionalForm,
    spec: &QuadratureSpec,
    te: ThetaEta,
    cap: usize,
) -> Result<KxiReport> {
    let (lo, hi) = match form {
        FunctionalForm::Xi(xi) => {
            let e = 1.0 / xi.min(1.0);
            (2f64.powf(-e), 2f64.powf(e))
        }
        FunctionalForm::Max => (0.5, 1.0),
        FunctionalForm::Sum => (1.0, 1.0),
    };
    let sum = interp_norm(&k_curve(field, pair, spec, CurveMethod::Oracle(FunctionalForm::Sum), cap)?, te)?.value;
    let other = interp_norm(&k_curve(field, pair, spec, CurveMethod::Oracle(form), cap)?, te)?.value;
    Ok(KxiReport {
        sum_norm: sum,
        other_norm: other,
        ratio: ratio(other, sum),
        lo,
        hi,
    })
}

/// One threshold of the composite-rule comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolmstedtRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolmstedtReport {
    pub rows: Vec<HolmstedtRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl HolmstedtReport {
    /// `max_ratio / min_ratio`.
    pub fn width(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }
}

/// Compares the K-functional of the couple `(E0, E1)` of interpolation
/// spaces `E_i = (A0, A1)_{θ_i, q_i}` with the composite rule assembled
/// from the base K-curve, split at `t^{1/(θ1 - θ0)}`.
///
/// The left side enumerates every coloring of the field; each side's E-norm
/// is an interpolation norm of an oracle curve, cached per subset.
pub fn holmstedt_check(
    field: &CoeffField,
    base_pair: &CouplePair,
    th0: (f64, f64),
    th1: (f64, f64),
    t_grid: &QuadratureSpec,
    cap: usize,
) -> Result<HolmstedtReport> {
    let te0 = ThetaEta::new(th0.0, th0.1)?;
    let te1 = ThetaEta::new(th1.0, th1.1)?;
    if !(te0.theta < te1.theta) {
        return Err(Error::InvalidArgument("holmstedt check needs theta0 < theta1".into()));
    }
    t_grid.validate()?;
    let support = field.support();
    if support.len() > cap {
        return Err(Error::CapExceeded {
            nonzero: support.len(),
            cap,
        });
    }
    let eta = te1.theta - te0.theta;
    let ts = t_grid.points();
    let cut_lo = ts[0].powf(1.0 / eta);
    let cut_hi = ts[ts.len() - 1].powf(1.0 / eta);
    let base = default_window(field, base_pair);
    let window = QuadratureSpec::new(
        base.t_lo.min(cut_lo * 1e-2),
        base.t_hi.max(cut_hi * 1e2),
        base.points_per_decade,
    )?;
    let sum = CurveMethod::Oracle(FunctionalForm::Sum);
    let n = support.len();
    let norms: Vec<(f64, f64)> = (0..1u64 << n)
        .into_par_iter()
        .map(|subset| -> Result<(f64, f64)> {
            let mut part = CoeffField::empty(field.jmin(), field.jmax())?;
            for (i, idx) in support.iter().enumerate() {
                if subset >> i & 1 == 1 {
                    part = part.with_value(*idx, field.get(*idx))?;
                }
            }
            if part.is_zero() {
                return Ok((0.0, 0.0));
            }
            let curve = k_curve(&part, base_pair, &window, sum, cap)?;
            Ok((interp_norm(&curve, te0)?.value, interp_norm(&curve, te1)?.value))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;
    let full = (1u64 << n) - 1;
    let base_curve: KCurve = k_curve(field, base_pair, &window, sum, cap)?;
    let rows: Vec<HolmstedtRow> = ts
        .into_iter()
        .map(|t| {
            // Bit set: coefficient goes to E1.
            let lhs = (0..=full)
                .map(|m| norms[(full ^ m) as usize].0 + t * norms[m as usize].1)
                .fold(f64::INFINITY, f64::min);
            let cut = t.powf(1.0 / eta);
            let rhs = truncated_integral(&base_curve, te0.theta, te0.eta, 0.0, cut)
                + t * truncated_integral(&base_curve, te1.theta, te1.eta, cut, f64::INFINITY);
            HolmstedtRow {
                t,
                lhs,
                rhs,
                ratio: ratio(lhs, rhs),
            }
        })
        .collect();
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(HolmstedtReport {
        rows,
        min_ratio,
        max_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzTrial {
    pub trial: usize,
    pub size: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeStats {
    pub size: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LorentzProbeReport {
    /// The interpolated primary exponent `p`.
    pub p: f64,
    pub trials: Vec<LorentzTrial>,
    pub stats: Vec<SizeStats>,
}

impl LorentzProbeReport {
    /// Largest over smallest ratio across all sizes.
    pub fn spread(&self) -> f64 {
        let max = self.stats.iter().map(|s| s.max).fold(0.0, f64::max);
        let min = self.stats.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// Compares the `(θ, q)` interpolation norm of the Lorentz couple
/// `(ℓ^{p0,q0}, ℓ^{p1,q1})` with the direct `ℓ^{p,q}` norm on random single
/// layers, with `1/p = (1-θ)/p0 + θ/p1`. Curves come from the oracle for
/// sizes up to `cap` and from the fast path above.
#[allow(clippy::too_many_arguments)]
pub fn lorentz_identity_probe(
    (p0, q0): (f64, f64),
    (p1, q1): (f64, f64),
    theta: f64,
    q: f64,
    sizes: &[usize],
    trials: usize,
    seed: u64,
    cap: usize,
) -> Result<LorentzProbeReport> {
    let te = ThetaEta::new(theta, q)?;
    let inner0 = InnerSpace::Lorentz { p: p0, tau: q0 };
    let inner1 = InnerSpace::Lorentz { p: p1, tau: q1 };
    let pair = CouplePair::new(SpaceSide::new(0.0, 1.0, inner0)?, SpaceSide::new(0.0, 1.0, inner1)?)?;
    let inv = |p: f64| if p.is_infinite() { 0.0 } else { 1.0 / p };
    let inv_p = (1.0 - theta) * inv(p0) + theta * inv(p1);
    let p = if inv_p == 0.0 { f64::INFINITY } else { 1.0 / inv_p };
    let target = InnerSpace::Lorentz { p, tau: q };
    target.validate()?;
    let jobs: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|&size| (0..trials).map(move |trial| (size, trial)))
        .collect();
    let results: Vec<Result<LorentzTrial>> = jobs
        .into_par_iter()
        .map(|(size, trial)| {
            let field = gen_field(seed ^ ((size as u64) << 32) ^ trial as u64, (0, 0), size, Law::Uniform)?;
            let method = if size <= cap {
                CurveMethod::Oracle(FunctionalForm::Sum)
            } else {
                CurveMethod::Fast
            };
            let curve = k_curve(&field, &pair, &default_window(&field, &pair), method, cap)?;
            let lhs = interp_norm(&curve, te)?.value;
            let rhs = inner_norm(field.layer(0), target);
            Ok(LorentzTrial {
                trial,
                size,
                ratio: ratio(lhs, rhs),
            })
        })
        .collect();
    let trials: Vec<LorentzTrial> = results.into_iter().collect::<Result<_>>()?;
    let stats = sizes
        .iter()
        .map(|&size| {
            let r: Vec<f64> = trials.iter().filter(|x| x.size == size).map(|x| x.ratio).collect();
            SizeStats {
                size,
                min: r.iter().copied().fold(f64::INFINITY, f64::min),
                max: r.iter().copied().fold(0.0, f64::max),
                mean: r.iter().sum::<f64>() / r.len().max(1) as f64,
            }
        })
        .collect();
    Ok(LorentzProbeReport { p, trials, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::DEFAULT_CAP;

    fn l1() -> CouplePair {
        "A=lp(1);A=lp(1)".parse().unwrap()
    }

    #[test]
    fn commutation_single_coefficient() {
        let f = CoeffField::single_layer(0, vec![1.0]).unwrap();
        let spec = default_window(&f, &l1());
        let r = commutation_check(&f, &l1(), ThetaEta::new(0.3, 1.0).unwrap(), &spec, DEFAULT_CAP).unwrap();
        assert!((r.ratio - 1.0).abs() <= 1e-3, "{r:?}");
        let z = CoeffField::empty(0, 0).unwrap();
        let r = commutation_check(&z, &l1(), ThetaEta::new(0.3, 1.0).unwrap(), &spec, DEFAULT_CAP).unwrap();
        assert_eq!(r.ratio, 1.0);
    }

    #[test]
    fn commutation_error_shrinks_with_density() {
        let f = CoeffField::new(0, 1, vec![vec![2.0, 0.5], vec![1.0]]).unwrap();
        let pair: CouplePair = "s=0,q=1,A=lp(1);s=1,q=2,A=lp(2)".parse().unwrap();
        let te = ThetaEta::new(0.4, 2.0).unwrap();
        let err = |ppd: usize| {
            let spec = QuadratureSpec::centered(3.0, 6.0, ppd).unwrap();
            (commutation_check(&f, &pair, te, &spec, DEFAULT_CAP).unwrap().ratio - 1.0).abs()
        };
        assert!(err(32) <= err(8), "{} vs {}", err(32), err(8));
    }

    #[test]
    fn kxi_forms() {
        let f = CoeffField::new(0, 1, vec![vec![2.0, 0.5], vec![1.0]]).unwrap();
        let pair: CouplePair = "s=0,q=1,A=lp(1);s=1,q=2,A=lp(2)".parse().unwrap();
        let spec = default_window(&f, &pair);
        let te = ThetaEta::new(0.5, 1.0).unwrap();
        let one = kxi_equivalence_check(&f, &pair, FunctionalForm::Xi(1.0), &spec, te, DEFAULT_CAP).unwrap();
        assert_eq!(one.ratio, 1.0);
        let max = kxi_equivalence_check(&f, &pair, FunctionalForm::Max, &spec, te, DEFAULT_CAP).unwrap();
        assert!(max.within(1e-9), "{max:?}");
        for xi in [0.5, 2.0] {
            let r = kxi_equivalence_check(&f, &pair, FunctionalForm::Xi(xi), &spec, te, DEFAULT_CAP).unwrap();
            assert!(r.within(1e-9), "{r:?}");
        }
    }

    #[test]
    fn holmstedt_zero_and_single() {
        let grid = QuadratureSpec::new(0.1, 10.0, 4).unwrap();
        let z = CoeffField::empty(0, 0).unwrap();
        let r = holmstedt_check(&z, &l1(), (0.3, 1.0), (0.7, 1.0), &grid, DEFAULT_CAP).unwrap();
        assert!(r.rows.iter().all(|row| row.lhs == 0.0 && row.rhs == 0.0 && row.ratio == 1.0));
        let f = CoeffField::single_layer(0, vec![1.0]).unwrap();
        let r = holmstedt_check(&f, &l1(), (0.3, 1.0), (0.7, 2.0), &grid, DEFAULT_CAP).unwrap();
        assert!(r.min_ratio > 0.0 && r.max_ratio.is_finite());
        assert!(r.width() < 16.0, "{r:?}");
    }

    #[test]
    fn lorentz_probe_identical_couple() {
        let r = lorentz_identity_probe((2.0, 2.0), (2.0, 2.0), 0.4, 2.0, &[4, 8], 3, 7, DEFAULT_CAP).unwrap();
        assert_eq!(r.p, 2.0);
        assert_eq!(r.trials.len(), 6);
        assert!(r.spread() < 1.05, "{r:?}");
    }

    #[test]
    fn lorentz_probe_single_coefficient_is_scale_free() {
        let a = lorentz_identity_probe((1.0, 1.0), (4.0, 2.0), 0.5, 2.0, &[1], 4, 3, DEFAULT_CAP).unwrap();
        let spread = a.stats[0].max / a.stats[0].min;
        assert!((spread - 1.0).abs() < 1e-9, "{a:?}");
    }
}
