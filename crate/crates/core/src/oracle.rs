//! Exhaustive reference functionals on small truncated grids.
//!
//! The vertex functional minimizes the K objective over all two-colorings of
//! the nonzero coefficients. The cuboid functional relaxes each coefficient
//! to a continuous share in `[0, f]`; it is approximated here by coordinate
//! descent and serves as an upper bound on K.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{CoeffField, Side, VertexAssignment};
use crate::par::*;
use crate::spaces::{
    inner_norm, outer_norm, CouplePair, InnerSpace, OuterSpec, OuterWeights, SpaceSide,
};

/// Default limit on nonzero coefficients for exhaustive enumeration.
pub const DEFAULT_CAP: usize = 22;

/// Enumeration cap, overridable through the `KFUNC_CAP` environment variable.
pub fn cap_from_env() -> usize {
    std::env::var("KFUNC_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_CAP)
}

/// How the two side costs `a = N0` and `b = t N1` are combined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalForm {
    /// `a + b`: the K-functional.
    Sum,
    /// `max(a, b)`: K_∞.
    Max,
    /// `(a^xi + b^xi)^(1/xi)`: K_ξ.
    Xi(f64),
}

impl FunctionalForm {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FunctionalForm::Xi(xi) if !(xi > 0.0 && xi.is_finite()) => Err(Error::InvalidArgument(
                format!("xi must be in (0, inf), got {xi}"),
            )),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn combine(&self, a: f64, b: f64) -> f64 {
        match *self {
            FunctionalForm::Sum => a + b,
            FunctionalForm::Max => a.max(b),
            FunctionalForm::Xi(1.0) => a + b,
            FunctionalForm::Xi(xi) => {
                let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
                if hi == 0.0 {
                    return 0.0;
                }
                hi * (1.0 + (lo / hi).powf(xi)).powf(1.0 / xi)
            }
        }
    }
}

impl fmt::Display for FunctionalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalForm::Sum => write!(f, "sum"),
            FunctionalForm::Max => write!(f, "max"),
            FunctionalForm::Xi(xi) => write!(f, "xi:{xi}"),
        }
    }
}

impl FromStr for FunctionalForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let form = match t.as_str() {
            "sum" => FunctionalForm::Sum,
            "max" => FunctionalForm::Max,
            _ => match t.strip_prefix("xi:") {
                Some(v) => FunctionalForm::Xi(v.parse().map_err(|_| {
                    Error::InvalidArgument(format!("bad token `{}`", s.trim()))
                })?),
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "bad token `{}` (expected sum, max or xi:V)",
                        s.trim()
                    )))
                }
            },
        };
        form.validate()?;
        Ok(form)
    }
}

/// A functional value with the assignment that realizes it.
#[derive(Debug, Clone, PartialEq)]
pub struct KResult {
    pub value: f64,
    pub assignment: VertexAssignment,
    pub form: FunctionalForm,
    pub t: f64,
}

pub(crate) fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("t must be positive and finite, got {t}")))
    }
}

/// The K objective of `form` at a fixed vertex assignment.
pub fn objective(
    t: f64,
    field: &CoeffField,
    pair: &CouplePair,
    assignment: &VertexAssignment,
    form: FunctionalForm,
) -> Result<f64> {
    let n0 = outer_norm(&field.restrict(assignment, Side::Zero)?, &pair.side0);
    let n1 = outer_norm(&field.restrict(assignment, Side::One)?, &pair.side1);
    Ok(form.combine(n0, t * n1))
}

/// Per-side outer aggregation over precomputed per-layer terms.
#[derive(Debug, Clone, Copy)]
struct Aggregator {
    q: f64,
}

impl Aggregator {
    /// Per-layer term whose sum (or max, for `q = inf`) is aggregated.
    fn term(&self, weight: f64, norm: f64) -> f64 {
        if norm == 0.0 {
            0.0
        } else if self.q.is_infinite() {
            weight * norm
        } else {
            weight * norm.powf(self.q)
        }
    }

    #[inline]
    fn accumulate(&self, acc: f64, term: f64) -> f64 {
        if self.q.is_infinite() {
            acc.max(term)
        } else {
            acc + term
        }
    }

    #[inline]
    fn finish(&self, acc: f64) -> f64 {
        if self.q.is_infinite() || self.q == 1.0 {
            acc
        } else {
            acc.powf(1.0 / self.q)
        }
    }
}

/// Subset tables for one layer: for every coloring of its nonzero
/// coefficients, the outer term each side contributes.
#[derive(Debug, Clone)]
struct LayerTable {
    /// Positions (gamma) of the nonzero coefficients.
    positions: Vec<usize>,
    offset: u32,
    term0: Vec<f64>,
    term1: Vec<f64>,
}

/// Exhaustive vertex-functional evaluator. Building it enumerates per-layer
/// subset norms once; each `k` call then scans all `2^N` colorings.
#[derive(Debug, Clone)]
pub struct VertexOracle {
    field: CoeffField,
    pair: CouplePair,
    agg0: Aggregator,
    agg1: Aggregator,
    tables: Vec<LayerTable>,
    nonzero: usize,
}

const CHUNK: u64 = 1 << 12;

impl VertexOracle {
    pub fn new(field: &CoeffField, pair: &CouplePair, cap: usize) -> Result<Self> {
        let nonzero = field.nonzero_count();
        if nonzero > cap || nonzero >= 63 {
            return Err(Error::CapExceeded { nonzero, cap });
        }
        let w0 = OuterWeights::for_field(pair.side0.outer, field);
        let w1 = OuterWeights::for_field(pair.side1.outer, field);
        let agg0 = Aggregator { q: pair.side0.outer.q };
        let agg1 = Aggregator { q: pair.side1.outer.q };
        let mut tables = Vec::with_capacity(field.num_levels());
        let mut offset = 0u32;
        for (k, (_, layer)) in field.levels().enumerate() {
            let positions: Vec<usize> = (0..layer.len()).filter(|&g| layer[g] > 0.0).collect();
            let values: Vec<f64> = positions.iter().map(|&g| layer[g]).collect();
            let (ww0, ww1) = (w0.weight(k), w1.weight(k));
            let n = positions.len();
            let (inner0, inner1) = (pair.side0.inner, pair.side1.inner);
            let terms: Vec<(f64, f64)> = (0..1u64 << n)
                .into_par_iter()
                .map(|m| {
                    let (mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n));
                    for (i, v) in values.iter().enumerate() {
                        if m >> i & 1 == 1 {
                            b.push(*v);
                        } else {
                            a.push(*v);
                        }
                    }
                    (
                        agg0.term(ww0, inner_norm(&a, inner0)),
                        agg1.term(ww1, inner_norm(&b, inner1)),
                    )
                })
                .collect();
            let (term0, term1) = terms.into_iter().unzip();
            tables.push(LayerTable {
                positions,
                offset,
                term0,
                term1,
            });
            offset += n as u32;
        }
        Ok(VertexOracle {
            field: field.clone(),
            pair: *pair,
            agg0,
            agg1,
            tables,
            nonzero,
        })
    }

    pub fn nonzero(&self) -> usize {
        self.nonzero
    }

    pub fn field(&self) -> &CoeffField {
        &self.field
    }

    pub fn pair(&self) -> &CouplePair {
        &self.pair
    }

    /// Side norms `(N0, N1)` of the coloring encoded by `mask`; bit `i`
    /// set sends the `i`-th nonzero coefficient (in level, position order)
    /// to side 1.
    #[inline]
    pub fn side_norms(&self, mask: u64) -> (f64, f64) {
        let (mut s0, mut s1) = (0.0, 0.0);
        for table in &self.tables {
            let width = table.positions.len() as u32;
            let local = ((mask >> table.offset) & ((1u64 << width) - 1)) as usize;
            s0 = self.agg0.accumulate(s0, table.term0[local]);
            s1 = self.agg1.accumulate(s1, table.term1[local]);
        }
        (self.agg0.finish(s0), self.agg1.finish(s1))
    }

    #[inline]
    fn eval(&self, mask: u64, t: f64, form: FunctionalForm) -> f64 {
        let (n0, n1) = self.side_norms(mask);
        form.combine(n0, t * n1)
    }

    /// Minimizing mask; ties go to the smallest mask.
    pub fn argmin(&self, t: f64, form: FunctionalForm) -> (f64, u64) {
        let total = 1u64 << self.nonzero;
        let chunks = total.div_ceil(CHUNK);
        let key = |a: &(f64, u64), b: &(f64, u64)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut best = (f64::INFINITY, u64::MAX);
                for mask in c * CHUNK..((c + 1) * CHUNK).min(total) {
                    let v = self.eval(mask, t, form);
                    if v < best.0 {
                        best = (v, mask);
                    }
                }
                best
            })
            .min_by(key)
            .unwrap_or((0.0, 0))
    }

    /// Assignment encoded by `mask`; zero coefficients go to side 0.
    pub fn assignment(&self, mask: u64) -> VertexAssignment {
        let bits = self
            .field
            .layers()
            .iter()
            .zip(&self.tables)
            .map(|(layer, table)| {
                let mut bits = vec![false; layer.len()];
                for (i, &g) in table.positions.iter().enumerate() {
                    bits[g] = mask >> (table.offset + i as u32) & 1 == 1;
                }
                bits
            })
            .collect();
        VertexAssignment::new(self.field.jmin(), bits)
    }

    /// Exact vertex functional at `t`.
    pub fn k(&self, t: f64, form: FunctionalForm) -> Result<KResult> {
        check_t(t)?;
        form.validate()?;
        let (value, mask) = self.argmin(t, form);
        Ok(KResult {
            value,
            assignment: self.assignment(mask),
            form,
            t,
        })
    }

    /// Exact vertex functional at `t`, value only.
    pub fn value(&self, t: f64, form: FunctionalForm) -> f64 {
        self.argmin(t, form).0
    }
}

/// Exact vertex functional by enumeration of all `2^N` colorings.
pub fn k_vertex_exhaustive(
    t: f64,
    field: &CoeffField,
    pair: &CouplePair,
    form: FunctionalForm,
    cap: usize,
) -> Result<KResult> {
    VertexOracle::new(field, pair, cap)?.k(t, form)
}

/// Exact vertex functional of a single layer under inner norms only.
pub fn k_layer_exhaustive(
    t: f64,
    layer: &[f64],
    inner0: InnerSpace,
    inner1: InnerSpace,
    form: FunctionalForm,
    cap: usize,
) -> Result<KResult> {
    let field = CoeffField::single_layer(0, layer.to_vec())?;
    let pair = CouplePair::new(SpaceSide::new(0.0, 1.0, inner0)?, SpaceSide::new(0.0, 1.0, inner1)?)?;
    k_vertex_exhaustive(t, &field, &pair, form, cap)
}

/// Exact vertex functional of the scalar problem with one value `F_j` per
/// level `j = jmin, jmin + 1, ...`.
pub fn k_scalar_vertex(
    t: f64,
    values: &[f64],
    jmin: i32,
    outer0: OuterSpec,
    outer1: OuterSpec,
    form: FunctionalForm,
    cap: usize,
) -> Result<KResult> {
    let field = scalar_field(values, jmin)?;
    let inner = InnerSpace::Lp(1.0);
    let pair = CouplePair::new(
        SpaceSide { outer: outer0, inner },
        SpaceSide { outer: outer1, inner },
    )?;
    k_vertex_exhaustive(t, &field, &pair, form, cap)
}

pub(crate) fn scalar_field(values: &[f64], jmin: i32) -> Result<CoeffField> {
    if values.is_empty() {
        return CoeffField::empty(jmin, jmin);
    }
    let jmax = jmin + values.len() as i32 - 1;
    CoeffField::new(jmin, jmax, values.iter().map(|v| vec![*v]).collect())
}

/// Incremental Sum-form objective over a continuous split `g` (side 0) and
/// `f - g` (side 1), recomputing only the touched layer.
struct CuboidState<'a> {
    field: &'a CoeffField,
    pair: &'a CouplePair,
    t: f64,
    w0: OuterWeights,
    w1: OuterWeights,
    g: Vec<Vec<f64>>,
    norms0: Vec<f64>,
    norms1: Vec<f64>,
}

impl<'a> CuboidState<'a> {
    fn new(field: &'a CoeffField, pair: &'a CouplePair, t: f64, g: Vec<Vec<f64>>) -> Self {
        let mut state = CuboidState {
            field,
            pair,
            t,
            w0: OuterWeights::for_field(pair.side0.outer, field),
            w1: OuterWeights::for_field(pair.side1.outer, field),
            norms0: vec![0.0; g.len()],
            norms1: vec![0.0; g.len()],
            g,
        };
        for k in 0..state.g.len() {
            state.refresh(k);
        }
        state
    }

    fn layer_norms(&self, k: usize) -> (f64, f64) {
        let f = &self.field.layers()[k];
        let g = &self.g[k];
        let rest: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a - b).max(0.0)).collect();
        (
            inner_norm(g, self.pair.side0.inner),
            inner_norm(&rest, self.pair.side1.inner),
        )
    }

    fn refresh(&mut self, k: usize) {
        let (a, b) = self.layer_norms(k);
        self.norms0[k] = a;
        self.norms1[k] = b;
    }

    fn value(&self) -> f64 {
        self.w0.aggregate(&self.norms0) + self.t * self.w1.aggregate(&self.norms1)
    }

    /// One cyclic sweep of grid line searches; returns the new value.
    fn sweep(&mut self, grid_res: usize, mut current: f64) -> f64 {
        for k in 0..self.g.len() {
            for i in 0..self.g[k].len() {
                let f = self.field.layers()[k][i];
                if f == 0.0 {
                    continue;
                }
                let original = self.g[k][i];
                let mut best = (current, original);
                for step in 0..grid_res {
                    let candidate = f * step as f64 / (grid_res - 1) as f64;
                    if candidate == original {
                        continue;
                    }
                    self.g[k][i] = candidate;
                    self.refresh(k);
                    let v = self.value();
                    if v < best.0 {
                        best = (v, candidate);
                    }
                }
                self.g[k][i] = best.1;
                self.refresh(k);
                current = best.0;
            }
        }
        current
    }
}

const DESCENT_SWEEPS: usize = 50;
const DESCENT_SEED: u64 = 0x006b_6675_6e63;

/// Upper bound on the Sum-form cuboid functional by cyclic coordinate
/// descent with grid line searches.
///
/// Restart 0 starts from the exhaustive vertex minimizer when the field is
/// under the default cap, otherwise from the better trivial coloring; the
/// remaining restarts start from seeded random points. The result is the
/// minimum over restarts, so it never exceeds the vertex value and never
/// increases with more restarts.
pub fn k_cuboid_descent(
    t: f64,
    field: &CoeffField,
    pair: &CouplePair,
    restarts: usize,
    grid_res: usize,
) -> Result<f64> {
    check_t(t)?;
    if grid_res < 2 {
        return Err(Error::InvalidArgument("grid_res must be at least 2".into()));
    }
    if field.is_zero() {
        return Ok(0.0);
    }
    let from_assignment = |a: &VertexAssignment| -> Vec<Vec<f64>> {
        field
            .layers()
            .iter()
            .zip(a.bits())
            .map(|(l, b)| l.iter().zip(b).map(|(v, one)| if *one { 0.0 } else { *v }).collect())
            .collect()
    };
    let warm = match VertexOracle::new(field, pair, DEFAULT_CAP) {
        Ok(oracle) => oracle.k(t, FunctionalForm::Sum)?.assignment,
        Err(Error::CapExceeded { .. }) => {
            let zero = VertexAssignment::uniform(field, Side::Zero);
            let one = VertexAssignment::uniform(field, Side::One);
            let v0 = objective(t, field, pair, &zero, FunctionalForm::Sum)?;
            let v1 = objective(t, field, pair, &one, FunctionalForm::Sum)?;
            if v1 < v0 {
                one
            } else {
                zero
            }
        }
        Err(e) => return Err(e),
    };
    let starts = restarts.max(1);
    let run = |r: usize| -> f64 {
        let g = if r == 0 {
            from_assignment(&warm)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(DESCENT_SEED ^ r as u64);
            field
                .layers()
                .iter()
                .map(|l| l.iter().map(|v| v * rng.gen::<f64>()).collect())
                .collect()
        };
        let mut state = CuboidState::new(field, pair, t, g);
        let mut value = state.value();
        for _ in 0..DESCENT_SWEEPS {
            let next = state.sweep(grid_res, value);
            let done = next >= value * (1.0 - 1e-15);
            value = next;
            if done {
                break;
            }
        }
        value
    };
    let values: Vec<f64> = (0..starts).into_par_iter().map(run).collect();
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}
