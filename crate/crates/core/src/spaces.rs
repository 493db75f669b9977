//! Inner quasi-norms on layers and weighted outer norms over levels.
//!
//! Every inner space here is a lattice quasi-norm: it depends only on the
//! magnitudes of the coefficients, is invariant under permutations of a
//! layer and is monotone coefficientwise. Exponents may lie below one, in
//! which case the "norms" are quasi-norms.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::CoeffField;

/// Quasi-norm applied to the coefficients of one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerSpace {
    /// `(sum v^p)^(1/p)`; `p = inf` is the max.
    Lp(f64),
    /// Discrete Lorentz space built from the nonincreasing rearrangement:
    /// `(sum_k (k+1)^(tau/p - 1) f*_k^tau)^(1/tau)`, or
    /// `max_k (k+1)^(1/p) f*_k` when `tau = inf`.
    Lorentz { p: f64, tau: f64 },
    /// Alias of `Lp(inf)`.
    Sup,
}

impl InnerSpace {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && !x.is_nan();
        match *self {
            InnerSpace::Lp(p) if !positive(p) => {
                Err(Error::InvalidSpace(format!("lp exponent must be in (0, inf], got {p}")))
            }
            InnerSpace::Lorentz { p, tau } if !positive(p) || !positive(tau) => Err(
                Error::InvalidSpace(format!("lorentz exponents must be in (0, inf], got ({p}, {tau})")),
            ),
            _ => Ok(()),
        }
    }

    /// Representative used for equality between spaces: `Sup` becomes
    /// `Lp(inf)` and `Lorentz(p, p)` becomes `Lp(p)`.
    pub fn canonical(&self) -> InnerSpace {
        match *self {
            InnerSpace::Sup => InnerSpace::Lp(f64::INFINITY),
            InnerSpace::Lorentz { p, tau } if p == tau => InnerSpace::Lp(p),
            other => other,
        }
    }

    /// Whether the quasi-norm satisfies the triangle inequality with
    /// constant one (all exponents at least one).
    pub fn is_normed(&self) -> bool {
        match *self {
            InnerSpace::Lp(p) => p >= 1.0,
            InnerSpace::Lorentz { p, tau } => p >= 1.0 && tau >= 1.0,
            InnerSpace::Sup => true,
        }
    }
}

impl fmt::Display for InnerSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InnerSpace::Lp(p) => write!(f, "lp({p})"),
            InnerSpace::Lorentz { p, tau } => write!(f, "lorentz({p},{tau})"),
            InnerSpace::Sup => write!(f, "sup"),
        }
    }
}

pub(crate) fn parse_extended(token: &str) -> Option<f64> {
    let t = token.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" => Some(f64::INFINITY),
        _ if t == "∞" => Some(f64::INFINITY),
        lower => lower.parse().ok(),
    }
}

/// Splits at `sep` outside parentheses.
fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

impl FromStr for InnerSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        if lower == "sup" || lower == "linf" {
            return Ok(InnerSpace::Sup);
        }
        let bad = || Error::InvalidSpace(format!("bad token `{t}`"));
        let open = lower.find('(').ok_or_else(bad)?;
        if !lower.ends_with(')') {
            return Err(bad());
        }
        let name = lower[..open].trim();
        let args: Vec<&str> = lower[open + 1..lower.len() - 1].split(',').collect();
        let num = |a: &str| {
            parse_extended(a).ok_or_else(|| Error::InvalidSpace(format!("bad token `{}`", a.trim())))
        };
        let space = match (name, args.as_slice()) {
            ("lp" | "l", [p]) => InnerSpace::Lp(num(p)?),
            ("lorentz", [p, tau]) => InnerSpace::Lorentz {
                p: num(p)?,
                tau: num(tau)?,
            },
            _ => return Err(bad()),
        };
        space.validate()?;
        Ok(space)
    }
}

/// Outer weight exponent `s` and summability `q` over the main grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterSpec {
    pub s: f64,
    pub q: f64,
}

impl OuterSpec {
    pub fn new(s: f64, q: f64) -> Result<Self> {
        let spec = OuterSpec { s, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return Err(Error::InvalidSpace(format!("s must be finite, got {}", self.s)));
        }
        if !(self.q > 0.0) {
            return Err(Error::InvalidSpace(format!("q must be in (0, inf], got {}", self.q)));
        }
        Ok(())
    }
}

/// One side of a couple: the hierarchical space with outer `(s, q)` and
/// inner space `A` on every layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceSide {
    pub outer: OuterSpec,
    pub inner: InnerSpace,
}

impl SpaceSide {
    pub fn new(s: f64, q: f64, inner: InnerSpace) -> Result<Self> {
        let side = SpaceSide {
            outer: OuterSpec { s, q },
            inner,
        };
        side.validate()?;
        Ok(side)
    }

    pub fn validate(&self) -> Result<()> {
        self.outer.validate()?;
        self.inner.validate()
    }

    pub fn is_normed(&self) -> bool {
        self.outer.q >= 1.0 && self.inner.is_normed()
    }
}

impl fmt::Display for SpaceSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s={},q={},A={}", self.outer.s, self.outer.q, self.inner)
    }
}

/// Parses `s=0.5,q=2,A=lp(1.5)` or the positional `0.5,2,lp(1.5)`.
/// Omitted keys default to `s=0`, `q=1`; `A` is required.
impl FromStr for SpaceSide {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut s = None;
        let mut q = None;
        let mut inner = None;
        let mut positional = 0;
        for token in split_top_level(text.trim(), ',') {
            let token = token.trim();
            if token.is_empty() {
                return Err(Error::InvalidSpace(format!("empty token in `{}`", text.trim())));
            }
            let bad = || Error::InvalidSpace(format!("bad token `{token}`"));
            let (key, value) = match token.split_once('=') {
                Some((k, v)) => (k.trim().to_ascii_lowercase(), v.trim()),
                None => {
                    let key = match positional {
                        0 => "s",
                        1 => "q",
                        2 => "a",
                        _ => return Err(bad()),
                    };
                    positional += 1;
                    (key.to_string(), token)
                }
            };
            match key.as_str() {
                "s" => s = Some(parse_extended(value).filter(|v| v.is_finite()).ok_or_else(bad)?),
                "q" => q = Some(parse_extended(value).ok_or_else(bad)?),
                "a" => inner = Some(value.parse::<InnerSpace>()?),
                _ => return Err(bad()),
            }
        }
        let inner = inner.ok_or_else(|| {
            Error::InvalidSpace(format!("missing inner space `A=` in `{}`", text.trim()))
        })?;
        SpaceSide::new(s.unwrap_or(0.0), q.unwrap_or(1.0), inner)
    }
}

/// A couple of hierarchical spaces on the same grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplePair {
    pub side0: SpaceSide,
    pub side1: SpaceSide,
}

impl CouplePair {
    pub fn new(side0: SpaceSide, side1: SpaceSide) -> Result<Self> {
        side0.validate()?;
        side1.validate()?;
        Ok(CouplePair { side0, side1 })
    }

    /// The couple with its sides exchanged.
    pub fn swapped(&self) -> CouplePair {
        CouplePair {
            side0: self.side1,
            side1: self.side0,
        }
    }

    pub fn same_inner(&self) -> bool {
        self.side0.inner.canonical() == self.side1.inner.canonical()
    }

    pub fn is_normed(&self) -> bool {
        self.side0.is_normed() && self.side1.is_normed()
    }
}

impl fmt::Display for CouplePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.side0, self.side1)
    }
}

/// Parses `SIDE;SIDE` with each side in [`SpaceSide`] syntax.
impl FromStr for CouplePair {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let sides = split_top_level(text.trim(), ';');
        if sides.len() != 2 {
            return Err(Error::InvalidSpace(format!(
                "pair needs two sides separated by `;`, got `{}`",
                text.trim()
            )));
        }
        CouplePair::new(sides[0].parse()?, sides[1].parse()?)
    }
}

/// Nonincreasing rearrangement.
pub fn rearrange(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

fn lp_norm(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return max_of(values);
    }
    if p == 1.0 {
        return values.iter().sum();
    }
    let sum: f64 = values.iter().map(|v| v.powf(p)).sum();
    let root = sum.powf(1.0 / p);
    if root.is_finite() && (root > 0.0 || sum == 0.0 && values.iter().all(|v| *v == 0.0)) {
        return root;
    }
    // Over- or underflow in the direct sum: rescale by the largest entry.
    let m = max_of(values);
    if m == 0.0 {
        return 0.0;
    }
    let scaled: f64 = values.iter().map(|v| (v / m).powf(p)).sum();
    m * scaled.powf(1.0 / p)
}

fn lorentz_norm(values: &[f64], p: f64, tau: f64) -> f64 {
    let sorted = rearrange(values);
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    if tau.is_infinite() {
        return sorted
            .iter()
            .enumerate()
            .map(|(k, v)| ((k + 1) as f64).powf(inv_p) * v)
            .fold(0.0, f64::max);
    }
    let exponent = tau * inv_p - 1.0;
    let sum: f64 = sorted
        .iter()
        .enumerate()
        .take_while(|(_, v)| **v > 0.0)
        .map(|(k, v)| ((k + 1) as f64).powf(exponent) * v.powf(tau))
        .sum();
    sum.powf(1.0 / tau)
}

/// Inner quasi-norm of a layer. The empty layer has norm zero.
pub fn inner_norm(values: &[f64], space: InnerSpace) -> f64 {
    match space {
        InnerSpace::Lp(p) => lp_norm(values, p),
        InnerSpace::Sup => max_of(values),
        InnerSpace::Lorentz { p, tau } => lorentz_norm(values, p, tau),
    }
}

/// Level weights of an outer norm on a fixed window, precomputed so the
/// enumeration oracles and [`outer_norm`] share one aggregation routine.
#[derive(Debug, Clone)]
pub struct OuterWeights {
    q: f64,
    /// Base-2 logarithm of each level's weight.
    log2_weights: Vec<f64>,
    weights: Vec<f64>,
}

impl OuterWeights {
    /// Weights `2^{j s q}` (or `2^{j s}` for `q = inf`) for `j` in `jmin..=jmax`.
    pub fn new(outer: OuterSpec, jmin: i32, jmax: i32) -> Self {
        let per_level = if outer.q.is_infinite() { outer.s } else { outer.s * outer.q };
        let log2_weights: Vec<f64> = (jmin..=jmax).map(|j| j as f64 * per_level).collect();
        let weights = log2_weights.iter().map(|e| e.exp2()).collect();
        OuterWeights {
            q: outer.q,
            log2_weights,
            weights,
        }
    }

    pub fn for_field(outer: OuterSpec, field: &CoeffField) -> Self {
        Self::new(outer, field.jmin(), field.jmax())
    }

    /// Weight of the `k`-th level of the window.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Base-2 log of `sum_j w_j n_j^q` computed with a max shift.
    fn log2_power_sum(&self, norms: &[f64]) -> f64 {
        let terms: Vec<f64> = norms
            .iter()
            .zip(&self.log2_weights)
            .filter(|(n, _)| **n > 0.0)
            .map(|(n, e)| e + self.q * n.log2())
            .collect();
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return m;
        }
        m + terms.iter().map(|l| (l - m).exp2()).sum::<f64>().log2()
    }

    /// `sum_j 2^{j s q} n_j^q` for finite `q`: the power-space norm.
    pub fn power_sum(&self, norms: &[f64]) -> f64 {
        debug_assert!(self.q.is_finite());
        debug_assert_eq!(norms.len(), self.weights.len());
        let mut sum = 0.0;
        let mut clean = true;
        for (n, w) in norms.iter().zip(&self.weights) {
            if *n > 0.0 {
                let term = w * n.powf(self.q);
                clean &= term.is_finite() && term > 0.0;
                sum += term;
            }
        }
        if clean && sum.is_finite() {
            sum
        } else {
            self.log2_power_sum(norms).exp2()
        }
    }

    /// Weighted `l^q` aggregation of per-level inner norms.
    pub fn aggregate(&self, norms: &[f64]) -> f64 {
        debug_assert_eq!(norms.len(), self.weights.len());
        if self.q.is_infinite() {
            let mut best = 0.0f64;
            for (k, n) in norms.iter().enumerate() {
                if *n > 0.0 {
                    let term = self.weights[k] * n;
                    let term = if term.is_finite() && term > 0.0 {
                        term
                    } else {
                        (self.log2_weights[k] + n.log2()).exp2()
                    };
                    best = best.max(term);
                }
            }
            return best;
        }
        let sum = self.power_sum(norms);
        let root = if self.q == 1.0 { sum } else { sum.powf(1.0 / self.q) };
        if root.is_finite() && (root > 0.0 || sum == 0.0) {
            root
        } else {
            (self.log2_power_sum(norms) / self.q).exp2()
        }
    }
}

/// Per-level inner norms of a field.
pub fn layer_norms(field: &CoeffField, inner: InnerSpace) -> Vec<f64> {
    field.layers().iter().map(|l| inner_norm(l, inner)).collect()
}

/// Norm of `field` in the hierarchical space `side`:
/// `(sum_j 2^{j s q} ||layer_j||_A^q)^(1/q)`, or the weighted sup for `q = inf`.
pub fn outer_norm(field: &CoeffField, side: &SpaceSide) -> f64 {
    OuterWeights::for_field(side.outer, field).aggregate(&layer_norms(field, side.inner))
}

/// Power-space norm: `outer_norm(field, side)^q`. Undefined for `q = inf`.
pub fn x_norm(field: &CoeffField, side: &SpaceSide) -> Result<f64> {
    if side.outer.q.is_infinite() {
        return Err(Error::PowerSpaceUndefined);
    }
    Ok(OuterWeights::for_field(side.outer, field).power_sum(&layer_norms(field, side.inner)))
}
