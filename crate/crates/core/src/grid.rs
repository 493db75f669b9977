//! Truncated dyadic grids and nonnegative coefficient fields.
//!
//! The full grid is the disjoint union of layers, one per frequency level `j`
//! of the main grid. A [`CoeffField`] stores the magnitudes of a finitely
//! supported coefficient sequence on a window `jmin..=jmax`; everything
//! outside the window is zero.

use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Position of one coefficient: level `j` on the main grid, slot `gamma`
/// within that level's layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicIndex {
    pub j: i32,
    pub gamma: usize,
}

impl fmt::Display for DyadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.j, self.gamma)
    }
}

/// Which side of a couple a coefficient is assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Zero,
    One,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Zero => Side::One,
            Side::One => Side::Zero,
        }
    }
}

/// Nonnegative coefficient magnitudes on the window `jmin..=jmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffField {
    jmin: i32,
    jmax: i32,
    layers: Vec<Vec<f64>>,
}

impl CoeffField {
    /// Builds a field from one layer per level. Values must be finite and
    /// nonnegative; use [`CoeffField::from_signed`] to absolutize.
    pub fn new(jmin: i32, jmax: i32, layers: Vec<Vec<f64>>) -> Result<Self> {
        if jmin > jmax {
            return Err(Error::InvalidField(format!("jmin {jmin} > jmax {jmax}")));
        }
        let expected = (jmax as i64 - jmin as i64 + 1) as usize;
        if layers.len() != expected {
            return Err(Error::InvalidField(format!(
                "window {jmin}..={jmax} needs {expected} layers, got {}",
                layers.len()
            )));
        }
        for (offset, layer) in layers.iter().enumerate() {
            if let Some(bad) = layer.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::InvalidField(format!(
                    "layer {} holds {bad}; magnitudes must be finite and >= 0",
                    jmin + offset as i32
                )));
            }
        }
        Ok(CoeffField { jmin, jmax, layers })
    }

    /// Like [`CoeffField::new`] but maps every value to its absolute value.
    pub fn from_signed(jmin: i32, jmax: i32, mut layers: Vec<Vec<f64>>) -> Result<Self> {
        for v in layers.iter_mut().flatten() {
            *v = v.abs();
        }
        Self::new(jmin, jmax, layers)
    }

    /// A field with a single layer at level `j`.
    pub fn single_layer(j: i32, values: Vec<f64>) -> Result<Self> {
        Self::new(j, j, vec![values])
    }

    /// All-empty layers on the window.
    pub fn empty(jmin: i32, jmax: i32) -> Result<Self> {
        let n = (jmax as i64 - jmin as i64 + 1).max(0) as usize;
        Self::new(jmin, jmax, vec![Vec::new(); n])
    }

    pub fn jmin(&self) -> i32 {
        self.jmin
    }

    pub fn jmax(&self) -> i32 {
        self.jmax
    }

    pub fn num_levels(&self) -> usize {
        self.layers.len()
    }

    /// Layer at level `j`; empty outside the window.
    pub fn layer(&self, j: i32) -> &[f64] {
        if j < self.jmin || j > self.jmax {
            return &[];
        }
        &self.layers[(j - self.jmin) as usize]
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    /// `(j, layer)` pairs in increasing `j`.
    pub fn levels(&self) -> impl Iterator<Item = (i32, &[f64])> + '_ {
        self.layers
            .iter()
            .enumerate()
            .map(move |(k, l)| (self.jmin + k as i32, l.as_slice()))
    }

    pub fn get(&self, idx: DyadicIndex) -> f64 {
        self.layer(idx.j).get(idx.gamma).copied().unwrap_or(0.0)
    }

    /// Total number of stored slots, zeros included.
    pub fn len(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nonzero_count(&self) -> usize {
        self.layers.iter().flatten().filter(|v| **v > 0.0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.nonzero_count() == 0
    }

    /// Indices of the strictly positive coefficients in `(j, gamma)` order.
    pub fn support(&self) -> Vec<DyadicIndex> {
        self.levels()
            .flat_map(|(j, layer)| {
                layer
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v > 0.0)
                    .map(move |(gamma, _)| DyadicIndex { j, gamma })
            })
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor {factor}")));
        }
        let layers = self
            .layers
            .iter()
            .map(|l| l.iter().map(|v| v * factor).collect())
            .collect();
        Self::new(self.jmin, self.jmax, layers)
    }

    /// Returns a copy with one coefficient replaced.
    pub fn with_value(&self, idx: DyadicIndex, value: f64) -> Result<Self> {
        if idx.j < self.jmin || idx.j > self.jmax {
            return Err(Error::InvalidArgument(format!("index {idx} outside window")));
        }
        let mut layers = self.layers.clone();
        let layer = &mut layers[(idx.j - self.jmin) as usize];
        if idx.gamma >= layer.len() {
            layer.resize(idx.gamma + 1, 0.0);
        }
        layer[idx.gamma] = value;
        Self::new(self.jmin, self.jmax, layers)
    }

    /// Keeps the coefficients `assignment` puts on `side` and zeroes the rest.
    pub fn restrict(&self, assignment: &VertexAssignment, side: Side) -> Result<Self> {
        assignment.check_shape(self)?;
        let layers = self
            .layers
            .iter()
            .zip(&assignment.bits)
            .map(|(layer, bits)| {
                layer
                    .iter()
                    .zip(bits)
                    .map(|(&v, &b)| if Side::from_bit(b) == side { v } else { 0.0 })
                    .collect()
            })
            .collect();
        Ok(CoeffField {
            jmin: self.jmin,
            jmax: self.jmax,
            layers,
        })
    }

    /// Coefficientwise sum with a field of identical shape.
    pub fn add(&self, other: &CoeffField) -> Result<Self> {
        if self.jmin != other.jmin || self.jmax != other.jmax {
            return Err(Error::ShapeMismatch("windows differ".into()));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (a, b) in self.layers.iter().zip(&other.layers) {
            if a.len() != b.len() {
                return Err(Error::ShapeMismatch("layer sizes differ".into()));
            }
            layers.push(a.iter().zip(b).map(|(x, y)| x + y).collect());
        }
        Self::new(self.jmin, self.jmax, layers)
    }
}

impl Side {
    pub(crate) fn from_bit(bit: bool) -> Side {
        if bit {
            Side::One
        } else {
            Side::Zero
        }
    }
}

/// A two-coloring of the grid slots: `false` puts a slot in the side-0 set,
/// `true` in the side-1 set. The two sets partition the field's index set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexAssignment {
    jmin: i32,
    bits: Vec<Vec<bool>>,
}

impl VertexAssignment {
    pub fn new(jmin: i32, bits: Vec<Vec<bool>>) -> Self {
        VertexAssignment { jmin, bits }
    }

    /// Every slot of `field` on `side`.
    pub fn uniform(field: &CoeffField, side: Side) -> Self {
        let bit = side == Side::One;
        VertexAssignment {
            jmin: field.jmin,
            bits: field.layers.iter().map(|l| vec![bit; l.len()]).collect(),
        }
    }

    pub fn jmin(&self) -> i32 {
        self.jmin
    }

    pub fn bits(&self) -> &[Vec<bool>] {
        &self.bits
    }

    pub fn layer_bits(&self, j: i32) -> &[bool] {
        let k = j - self.jmin;
        if k < 0 || k as usize >= self.bits.len() {
            return &[];
        }
        &self.bits[k as usize]
    }

    pub fn side_of(&self, idx: DyadicIndex) -> Option<Side> {
        self.layer_bits(idx.j).get(idx.gamma).map(|&b| Side::from_bit(b))
    }

    pub fn set(&mut self, idx: DyadicIndex, side: Side) {
        let k = (idx.j - self.jmin) as usize;
        self.bits[k][idx.gamma] = side == Side::One;
    }

    /// The complementary coloring.
    pub fn flipped(&self) -> Self {
        VertexAssignment {
            jmin: self.jmin,
            bits: self
                .bits
                .iter()
                .map(|l| l.iter().map(|b| !b).collect())
                .collect(),
        }
    }

    pub fn count(&self, side: Side) -> usize {
        let bit = side == Side::One;
        self.bits.iter().flatten().filter(|b| **b == bit).count()
    }

    pub fn check_shape(&self, field: &CoeffField) -> Result<()> {
        if self.jmin != field.jmin || self.bits.len() != field.layers.len() {
            return Err(Error::ShapeMismatch(format!(
                "assignment covers {} levels from {}, field has {} from {}",
                self.bits.len(),
                self.jmin,
                field.layers.len(),
                field.jmin
            )));
        }
        for (k, (bits, layer)) in self.bits.iter().zip(&field.layers).enumerate() {
            if bits.len() != layer.len() {
                return Err(Error::ShapeMismatch(format!(
                    "level {}: {} bits for {} coefficients",
                    field.jmin + k as i32,
                    bits.len(),
                    layer.len()
                )));
            }
        }
        Ok(())
    }
}

/// Smoothness `s`, integrability `p` and ambient dimension `n` of a Besov
/// space whose wavelet coefficients a field represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovWeightSpec {
    pub s: f64,
    pub p: f64,
    pub n: u32,
}

/// Level weight exponent `s + n/2 - n/p`: the Besov norm weights level `j`
/// by `2^{j (s + n/2 - n/p)}` when coefficients carry the L2 wavelet
/// normalization. `p = inf` contributes `n/p = 0`.
pub fn besov_weight_exponent(spec: BesovWeightSpec) -> Result<f64> {
    if !(spec.p > 0.0) || spec.n == 0 || !spec.s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "besov weight needs p > 0, n >= 1, finite s (got s={}, p={}, n={})",
            spec.s, spec.p, spec.n
        )));
    }
    let n = spec.n as f64;
    let n_over_p = if spec.p.is_infinite() { 0.0 } else { n / spec.p };
    Ok(spec.s + n / 2.0 - n_over_p)
}

/// Reads a field in the line-oriented coefficient format:
///
/// ```text
/// # comment
/// jmin jmax
/// j gamma value
/// ```
///
/// Negative values are stored as their absolute value. Each layer's size is
/// one more than the largest `gamma` listed for it; unlisted slots are zero.
pub fn load_field<R: BufRead>(reader: R) -> Result<CoeffField> {
    let mut header: Option<(i32, i32)> = None;
    let mut entries: Vec<(usize, i32, usize, f64)> = Vec::new();

    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match header {
            None => {
                if tokens.len() != 2 {
                    return Err(Error::parse(lineno, "malformed header: expected `jmin jmax`"));
                }
                let jmin: i32 = tokens[0]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("malformed header: `{}`", tokens[0])))?;
                let jmax: i32 = tokens[1]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("malformed header: `{}`", tokens[1])))?;
                if jmin > jmax {
                    return Err(Error::parse(lineno, "malformed header: jmin > jmax"));
                }
                header = Some((jmin, jmax));
            }
            Some(_) => {
                if tokens.len() != 3 {
                    return Err(Error::parse(
                        lineno,
                        format!("expected `j gamma value`, got {} fields", tokens.len()),
                    ));
                }
                let j: i32 = tokens[0]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("non-numeric level `{}`", tokens[0])))?;
                let gamma: usize = tokens[1]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("non-numeric position `{}`", tokens[1])))?;
                let value: f64 = tokens[2]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("non-numeric value `{}`", tokens[2])))?;
                if !value.is_finite() {
                    return Err(Error::parse(lineno, format!("non-finite value `{}`", tokens[2])));
                }
                entries.push((lineno, j, gamma, value));
            }
        }
    }

    let (jmin, jmax) = header.ok_or_else(|| Error::parse(1, "malformed header: missing"))?;
    let levels = (jmax as i64 - jmin as i64 + 1) as usize;
    let mut layers: Vec<Vec<Option<f64>>> = vec![Vec::new(); levels];
    for (lineno, j, gamma, value) in entries {
        if j < jmin || j > jmax {
            return Err(Error::parse(
                lineno,
                format!("index out of declared bounds: level {j} not in {jmin}..={jmax}"),
            ));
        }
        let layer = &mut layers[(j - jmin) as usize];
        if gamma >= layer.len() {
            layer.resize(gamma + 1, None);
        }
        if layer[gamma].is_some() {
            return Err(Error::parse(lineno, format!("duplicate index ({j}, {gamma})")));
        }
        layer[gamma] = Some(value.abs());
    }
    let layers = layers
        .into_iter()
        .map(|l| l.into_iter().map(|v| v.unwrap_or(0.0)).collect())
        .collect();
    CoeffField::new(jmin, jmax, layers)
}

/// Writes `field` in the format read by [`load_field`]. Every slot is
/// written, zeros included, so layer sizes survive a round trip.
pub fn store_field<W: Write>(field: &CoeffField, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", field.jmin, field.jmax)?;
    for (j, layer) in field.levels() {
        for (gamma, v) in layer.iter().enumerate() {
            writeln!(out, "{j} {gamma} {v:?}")?;
        }
    }
    Ok(())
}

/// Distribution of generated magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    /// Independent draws from (0, 1].
    Uniform,
    /// Uniform draws scaled by `2^{-rate |j|}` at level `j`.
    DyadicDecay(f64),
}

impl std::str::FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "uniform" {
            return Ok(Law::Uniform);
        }
        let rate = s
            .strip_prefix("decay:")
            .or_else(|| s.strip_prefix("dyadic-decay:"))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown law `{s}`")))?;
        let rate: f64 = rate
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad decay rate `{rate}`")))?;
        Ok(Law::DyadicDecay(rate))
    }
}

/// Deterministic random field: the same arguments always give the same
/// field, on every platform.
pub fn gen_field(seed: u64, window: (i32, i32), layer_size: usize, law: Law) -> Result<CoeffField> {
    let (jmin, jmax) = window;
    if jmin > jmax {
        return Err(Error::InvalidArgument(format!("window {jmin}..={jmax} is empty")));
    }
    if let Law::DyadicDecay(rate) = law {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("decay rate must be > 0, got {rate}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = (jmin..=jmax)
        .map(|j| {
            let scale = match law {
                Law::Uniform => 1.0,
                Law::DyadicDecay(rate) => (-rate * j.unsigned_abs() as f64).exp2(),
            };
            (0..layer_size)
                .map(|_| (1.0 - rng.gen::<f64>()) * scale)
                .collect()
        })
        .collect();
    CoeffField::new(jmin, jmax, layers)
}
