//! K-curves on log-spaced thresholds and real interpolation norms.

mod checks;
mod report;

pub use checks::{
    commutation_check, holmstedt_check, kxi_equivalence_check, lorentz_identity_probe,
    CommutationReport, HolmstedtReport, HolmstedtRow, KxiReport, LorentzProbeReport,
    LorentzTrial, SizeStats,
};
pub use report::{fmt_num, write_curve_csv, write_ratio_csv, write_trials_csv};

use crate::error::{Error, Result};
use crate::grid::CoeffField;
use crate::oracle::{FunctionalForm, VertexOracle};
use crate::par::*;
use crate::solver::k_dispatch;
use crate::spaces::{outer_norm, CouplePair};

/// Log-spaced sampling window for K-curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub t_lo: f64,
    pub t_hi: f64,
    pub points_per_decade: usize,
}

/// Decades on each side of the crossover in [`default_window`].
pub const DEFAULT_HALF_DECADES: f64 = 6.0;
pub const DEFAULT_POINTS_PER_DECADE: usize = 16;

impl QuadratureSpec {
    pub fn new(t_lo: f64, t_hi: f64, points_per_decade: usize) -> Result<Self> {
        let spec = QuadratureSpec {
            t_lo,
            t_hi,
            points_per_decade,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_lo > 0.0 && self.t_lo < self.t_hi && self.t_hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "window needs 0 < tmin < tmax < inf, got [{}, {}]",
                self.t_lo, self.t_hi
            )));
        }
        if self.points_per_decade < 4 {
            return Err(Error::InvalidArgument(format!(
                "points per decade must be at least 4, got {}",
                self.points_per_decade
            )));
        }
        Ok(())
    }

    /// Window of `2 half_decades` decades centered at `center`.
    pub fn centered(center: f64, half_decades: f64, points_per_decade: usize) -> Result<Self> {
        let span = 10f64.powf(half_decades);
        QuadratureSpec::new(center / span, center * span, points_per_decade)
    }

    pub fn decades(&self) -> f64 {
        (self.t_hi / self.t_lo).log10()
    }

    /// Sample points from `t_lo` to `t_hi` inclusive, equally spaced in
    /// `log t` with at least `points_per_decade` points per decade.
    pub fn points(&self) -> Vec<f64> {
        let intervals = (self.decades() * self.points_per_decade as f64).ceil().max(1.0) as usize;
        let (a, b) = (self.t_lo.ln(), self.t_hi.ln());
        (0..=intervals)
            .map(|i| match i {
                0 => self.t_lo,
                i if i == intervals => self.t_hi,
                i => (a + (b - a) * i as f64 / intervals as f64).exp(),
            })
            .collect()
    }
}

/// Crossover `t* = ||f||_{side0} / ||f||_{side1}`, or 1 when undefined.
pub fn crossover(field: &CoeffField, pair: &CouplePair) -> f64 {
    let t = outer_norm(field, &pair.side0) / outer_norm(field, &pair.side1);
    if t > 0.0 && t.is_finite() {
        t
    } else {
        1.0
    }
}

/// Twelve decades around the crossover at sixteen points per decade.
pub fn default_window(field: &CoeffField, pair: &CouplePair) -> QuadratureSpec {
    QuadratureSpec::centered(crossover(field, pair), DEFAULT_HALF_DECADES, DEFAULT_POINTS_PER_DECADE)
        .expect("centered default window is valid")
}

/// How a K-curve is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveMethod {
    /// Exhaustive vertex functional in the given form.
    Oracle(FunctionalForm),
    /// The case dispatch; its form depends on the couple.
    Fast,
}

/// Samples `(t, K(t))` with strictly increasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KCurve {
    pub samples: Vec<(f64, f64)>,
    pub form: FunctionalForm,
}

impl KCurve {
    pub fn new(samples: Vec<(f64, f64)>, form: FunctionalForm) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("a K-curve needs at least two samples".into()));
        }
        if samples.windows(2).any(|w| !(w[0].0 < w[1].0)) || samples[0].0 <= 0.0 {
            return Err(Error::InvalidArgument("K-curve thresholds must increase strictly".into()));
        }
        if samples.iter().any(|s| !(s.1 >= 0.0)) {
            return Err(Error::InvalidArgument("K-curve values must be nonnegative".into()));
        }
        Ok(KCurve { samples, form })
    }

    /// Curve of an explicit function of `t`.
    pub fn from_fn(spec: &QuadratureSpec, form: FunctionalForm, k: impl Fn(f64) -> f64) -> Result<Self> {
        spec.validate()?;
        KCurve::new(spec.points().into_iter().map(|t| (t, k(t))).collect(), form)
    }

    pub fn ts(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.1).collect()
    }

    /// The same curve with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> KCurve {
        KCurve {
            samples: self.samples.iter().map(|(t, k)| (*t, k * factor)).collect(),
            form: self.form,
        }
    }

    /// Log-log interpolation inside the window; outside, the asymptotes
    /// `K ~ c t` below and `K ~ const` above.
    pub fn at(&self, t: f64) -> f64 {
        let s = &self.samples;
        let (t0, k0) = s[0];
        let (tn, kn) = s[s.len() - 1];
        if t <= t0 {
            return k0 * t / t0;
        }
        if t >= tn {
            return kn;
        }
        let i = s.partition_point(|p| p.0 <= t) - 1;
        let (ta, ka) = s[i];
        let (tb, kb) = s[i + 1];
        if ka == 0.0 || kb == 0.0 {
            let w = (t.ln() - ta.ln()) / (tb.ln() - ta.ln());
            return ka + w * (kb - ka);
        }
        let w = (t.ln() - ta.ln()) / (tb.ln() - ta.ln());
        (ka.ln() + w * (kb.ln() - ka.ln())).exp()
    }
}

/// Samples K on the window of `spec`.
pub fn k_curve(
    field: &CoeffField,
    pair: &CouplePair,
    spec: &QuadratureSpec,
    method: CurveMethod,
    cap: usize,
) -> Result<KCurve> {
    spec.validate()?;
    let ts = spec.points();
    match method {
        CurveMethod::Oracle(form) => {
            form.validate()?;
            let oracle = VertexOracle::new(field, pair, cap)?;
            let samples = ts.into_iter().map(|t| (t, oracle.value(t, form))).collect();
            KCurve::new(samples, form)
        }
        CurveMethod::Fast => {
            let form = crate::solver::Case::of(pair).form();
            let values: Vec<Result<f64>> = ts
                .clone()
                .into_par_iter()
                .map(|t| k_dispatch(t, field, pair, cap).map(|d| d.value))
                .collect();
            let samples = ts
                .into_iter()
                .zip(values)
                .map(|(t, v)| v.map(|v| (t, v)))
                .collect::<Result<Vec<_>>>()?;
            KCurve::new(samples, form)
        }
    }
}

/// Interpolation parameters `(θ, η)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaEta {
    pub theta: f64,
    pub eta: f64,
}

impl ThetaEta {
    pub fn new(theta: f64, eta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidArgument(format!("theta must be in (0, 1), got {theta}")));
        }
        if !(eta > 0.0) {
            return Err(Error::InvalidArgument(format!("eta must be in (0, inf], got {eta}")));
        }
        Ok(ThetaEta { theta, eta })
    }
}

/// Tail share above which [`InterpNorm::warning`] is set.
pub const TAIL_WARNING: f64 = 0.01;

/// An interpolation norm with its estimated truncation share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpNorm {
    pub value: f64,
    /// Share of the integral contributed by the tail corrections outside
    /// the window (finite η), or the ratio of the larger endpoint sample to
    /// the sup (η = inf).
    pub tail: f64,
    /// Set when `tail` exceeds [`TAIL_WARNING`].
    pub warning: bool,
}

/// Pieces of `∫ (t^{-θ} K)^η dt/t`: trapezoid in `log t` over the samples
/// plus closed-form tails from the asymptotes `K ~ c t` and `K ~ const`.
#[derive(Debug, Clone, Copy)]
struct PowerIntegral {
    body: f64,
    lower: f64,
    upper: f64,
}

fn weighted(t: f64, k: f64, theta: f64, eta: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        (eta * (k.ln() - theta * t.ln())).exp()
    }
}

fn trapezoid(points: &[(f64, f64)], theta: f64, eta: f64) -> f64 {
    points
        .windows(2)
        .map(|w| {
            let h = w[1].0.ln() - w[0].0.ln();
            0.5 * h * (weighted(w[0].0, w[0].1, theta, eta) + weighted(w[1].0, w[1].1, theta, eta))
        })
        .sum()
}

fn power_integral(samples: &[(f64, f64)], theta: f64, eta: f64) -> PowerIntegral {
    let (t0, k0) = samples[0];
    let (tn, kn) = samples[samples.len() - 1];
    PowerIntegral {
        body: trapezoid(samples, theta, eta),
        lower: weighted(t0, k0, theta, eta) / ((1.0 - theta) * eta),
        upper: weighted(tn, kn, theta, eta) / (theta * eta),
    }
}

/// `(∫ (t^{-θ} K)^η dt/t)^{1/η}`, or `sup t^{-θ} K` for `η = inf`.
pub fn interp_norm(curve: &KCurve, te: ThetaEta) -> Result<InterpNorm> {
    ThetaEta::new(te.theta, te.eta)?;
    let s = &curve.samples;
    if te.eta.is_infinite() {
        let vals: Vec<f64> = s.iter().map(|(t, k)| weighted(*t, *k, te.theta, 1.0)).collect();
        let sup = vals.iter().copied().fold(0.0, f64::max);
        let tail = if sup > 0.0 { vals[0].max(vals[vals.len() - 1]) / sup } else { 0.0 };
        return Ok(InterpNorm {
            value: sup,
            tail,
            warning: tail > TAIL_WARNING,
        });
    }
    let p = power_integral(s, te.theta, te.eta);
    let total = p.body + p.lower + p.upper;
    if total == 0.0 {
        return Ok(InterpNorm {
            value: 0.0,
            tail: 0.0,
            warning: false,
        });
    }
    let tail = (p.lower + p.upper) / total;
    Ok(InterpNorm {
        value: total.powf(1.0 / te.eta),
        tail,
        warning: tail > TAIL_WARNING,
    })
}

/// `(∫_a^b (s^{-θ} K(s))^η ds/s)^{1/η}` with `a` possibly 0 and `b` possibly
/// infinite, reading K from the curve and its asymptotes; for `η = inf`
/// the sup over the same range.
pub fn truncated_integral(curve: &KCurve, theta: f64, eta: f64, a: f64, b: f64) -> f64 {
    let s = &curve.samples;
    let (t0, tn) = (s[0].0, s[s.len() - 1].0);
    let (lo, hi) = (a.max(t0), b.min(tn));
    let mut inside: Vec<(f64, f64)> = Vec::new();
    if lo < hi {
        inside.push((lo, curve.at(lo)));
        inside.extend(s.iter().copied().filter(|p| p.0 > lo && p.0 < hi));
        inside.push((hi, curve.at(hi)));
    }
    if eta.is_infinite() {
        // Below the window s^{-θ}K grows like s^{1-θ}, above it decays, so
        // the sup over the range lies at a sample or at a clipped endpoint.
        let mut best = inside
            .iter()
            .map(|(t, k)| weighted(*t, *k, theta, 1.0))
            .fold(0.0, f64::max);
        if b <= t0 {
            best = weighted(b, curve.at(b), theta, 1.0);
        }
        if a >= tn {
            best = weighted(a, curve.at(a), theta, 1.0);
        }
        return best;
    }
    let mut total = trapezoid(&inside, theta, eta);
    // Closed-form pieces outside the window.
    let below = |x: f64| weighted(x, curve.at(x), theta, eta) / ((1.0 - theta) * eta);
    let above = |x: f64| weighted(x, curve.at(x), theta, eta) / (theta * eta);
    if a < t0 {
        let top = b.min(t0);
        total += below(top) - if a > 0.0 { below(a) } else { 0.0 };
    }
    if b > tn {
        let bottom = a.max(tn);
        total += above(bottom) - if b.is_finite() { above(b) } else { 0.0 };
    }
    total.max(0.0).powf(1.0 / eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::DEFAULT_CAP;
    use approx::assert_relative_eq;

    fn min_curve(spec: &QuadratureSpec) -> KCurve {
        KCurve::from_fn(spec, FunctionalForm::Sum, |t| t.min(1.0)).unwrap()
    }

    #[test]
    fn points_are_log_spaced_and_inclusive() {
        let s = QuadratureSpec::new(0.01, 100.0, 4).unwrap();
        let p = s.points();
        assert_eq!(p.len(), 17);
        assert_eq!(p[0], 0.01);
        assert_eq!(p[16], 100.0);
        assert_relative_eq!(p[8], 1.0, max_relative = 1e-14);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert!(QuadratureSpec::new(1.0, 1.0, 16).is_err());
        assert!(QuadratureSpec::new(0.1, 1.0, 3).is_err());
    }

    #[test]
    fn min_curve_norms() {
        let spec = QuadratureSpec::centered(1.0, 6.0, 16).unwrap();
        let c = min_curve(&spec);
        let n = interp_norm(&c, ThetaEta::new(0.5, 1.0).unwrap()).unwrap();
        assert!((n.value - 4.0).abs() <= 0.04, "{n:?}");
        assert!(n.tail < 0.01 && !n.warning);
        let sup = interp_norm(&c, ThetaEta::new(0.5, f64::INFINITY).unwrap()).unwrap();
        assert_relative_eq!(sup.value, 1.0, max_relative = 1e-12);
        let n2 = interp_norm(&c.scaled(2.0), ThetaEta::new(0.5, 1.0).unwrap()).unwrap();
        assert_relative_eq!(n2.value, 2.0 * n.value, max_relative = 1e-12);
    }

    #[test]
    fn narrow_window_warns() {
        let spec = QuadratureSpec::centered(1.0, 0.5, 16).unwrap();
        let n = interp_norm(&min_curve(&spec), ThetaEta::new(0.5, 1.0).unwrap()).unwrap();
        assert!(n.warning);
        // The tail corrections are exact for this curve.
        assert!((n.value - 4.0).abs() <= 0.04, "{n:?}");
    }

    #[test]
    fn tail_shrinks_as_window_widens() {
        let curve = |h: f64| {
            KCurve::from_fn(&QuadratureSpec::centered(1.0, h, 16).unwrap(), FunctionalForm::Sum, |t| {
                t / (1.0 + t)
            })
            .unwrap()
        };
        let te = ThetaEta::new(0.3, 2.0).unwrap();
        let tails: Vec<f64> = [1.0, 2.0, 4.0, 6.0].iter().map(|h| interp_norm(&curve(*h), te).unwrap().tail).collect();
        assert!(tails.windows(2).all(|w| w[1] < w[0]), "{tails:?}");
    }

    #[test]
    fn truncated_pieces_add_up() {
        let spec = QuadratureSpec::centered(1.0, 4.0, 16).unwrap();
        let c = min_curve(&spec);
        let whole = interp_norm(&c, ThetaEta::new(0.4, 1.0).unwrap()).unwrap().value;
        for cut in [1e-6, 0.3, 1.0, 50.0, 1e6] {
            let lo = truncated_integral(&c, 0.4, 1.0, 0.0, cut);
            let hi = truncated_integral(&c, 0.4, 1.0, cut, f64::INFINITY);
            // An interior cut adds one trapezoid node.
            assert_relative_eq!(lo + hi, whole, max_relative = 1e-3);
        }
        // Exact for min(1, t): ∫_0^x s^{0.6} ds/s = x^{0.6}/0.6 for x <= 1.
        assert_relative_eq!(truncated_integral(&c, 0.4, 1.0, 0.0, 1e-6), 1e-6f64.powf(0.6) / 0.6, max_relative = 1e-9);
    }

    #[test]
    fn curves_from_oracle_and_fast() {
        let f = CoeffField::single_layer(0, vec![1.0]).unwrap();
        let pair: CouplePair = "A=lp(1);A=lp(1)".parse().unwrap();
        let spec = QuadratureSpec::centered(1.0, 1.5, 8).unwrap();
        for method in [CurveMethod::Oracle(FunctionalForm::Sum), CurveMethod::Fast] {
            let c = k_curve(&f, &pair, &spec, method, DEFAULT_CAP).unwrap();
            for (t, k) in &c.samples {
                assert_relative_eq!(*k, t.min(1.0), max_relative = 1e-12);
            }
        }
        let z = CoeffField::empty(0, 1).unwrap();
        let c = k_curve(&z, &pair, &spec, CurveMethod::Oracle(FunctionalForm::Sum), DEFAULT_CAP).unwrap();
        assert!(c.values().iter().all(|v| *v == 0.0));
        assert_eq!(default_window(&z, &pair).t_lo, 1e-6);
    }
}
