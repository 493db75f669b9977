//! Candidate two-colorings of a single layer.

use crate::error::Result;
use crate::grid::{CoeffField, VertexAssignment};
use crate::oracle::{check_t, FunctionalForm, KResult};
use crate::spaces::{inner_norm, InnerSpace};

/// Layers with at most this many nonzero coefficients get every coloring
/// as a candidate in [`LayerSplits::auto`].
pub const LAYER_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Choice {
    /// The `k` largest coefficients go to side 0 (`to_one = false`) or side 1.
    Prefix { k: usize, to_one: bool },
    /// Bit `i` set sends the `i`-th nonzero coefficient to side 1.
    Mask(u64),
}

/// A coloring of a layer with the inner norms of both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub n0: f64,
    pub n1: f64,
    choice: Choice,
}

/// A finite family of colorings of one layer, with side norms precomputed
/// so that evaluating any functional at a threshold is a linear scan.
#[derive(Debug, Clone)]
pub struct LayerSplits {
    len: usize,
    /// Nonzero positions; sorted by nonincreasing value for prefix families,
    /// in position order for exhaustive ones.
    order: Vec<usize>,
    candidates: Vec<Candidate>,
}

fn sorted_nonzero(layer: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..layer.len()).filter(|&g| layer[g] > 0.0).collect();
    order.sort_by(|&a, &b| layer[b].total_cmp(&layer[a]).then(a.cmp(&b)));
    order
}

/// Norms of every prefix `sorted[..k]` (`suffix = false`) or suffix
/// `sorted[k..]` of a nonincreasing sequence, for `k = 0..=n`.
fn cut_norms(sorted: &[f64], space: InnerSpace, suffix: bool) -> Vec<f64> {
    let n = sorted.len();
    let direct = || -> Vec<f64> {
        (0..=n)
            .map(|k| {
                let part = if suffix { &sorted[k..] } else { &sorted[..k] };
                inner_norm(part, space)
            })
            .collect()
    };
    let p = match space.canonical() {
        InnerSpace::Lp(p) => p,
        _ => return direct(),
    };
    if p.is_infinite() {
        return (0..=n)
            .map(|k| match (suffix, k) {
                (true, k) if k < n => sorted[k],
                (false, k) if k > 0 => sorted[0],
                _ => 0.0,
            })
            .collect();
    }
    let powers: Vec<f64> = sorted.iter().map(|v| if p == 1.0 { *v } else { v.powf(p) }).collect();
    if powers.iter().any(|x| !x.is_finite() || *x == 0.0) {
        return direct();
    }
    let mut sums = vec![0.0; n + 1];
    if suffix {
        for k in (0..n).rev() {
            sums[k] = sums[k + 1] + powers[k];
        }
    } else {
        for k in 0..n {
            sums[k + 1] = sums[k] + powers[k];
        }
    }
    sums.into_iter()
        .map(|s| if p == 1.0 { s } else { s.powf(1.0 / p) })
        .collect()
}

impl LayerSplits {
    /// All `2(n + 1)` splits that send the `k` largest coefficients to one
    /// side and the rest to the other, for both orientations.
    pub fn prefix(layer: &[f64], inner0: InnerSpace, inner1: InnerSpace) -> Self {
        let order = sorted_nonzero(layer);
        let sorted: Vec<f64> = order.iter().map(|&g| layer[g]).collect();
        let n = sorted.len();
        let (pre0, suf0) = (cut_norms(&sorted, inner0, false), cut_norms(&sorted, inner0, true));
        let (pre1, suf1) = (cut_norms(&sorted, inner1, false), cut_norms(&sorted, inner1, true));
        let mut candidates = Vec::with_capacity(2 * (n + 1));
        for k in 0..=n {
            candidates.push(Candidate {
                n0: pre0[k],
                n1: suf1[k],
                choice: Choice::Prefix { k, to_one: false },
            });
            candidates.push(Candidate {
                n0: suf0[k],
                n1: pre1[k],
                choice: Choice::Prefix { k, to_one: true },
            });
        }
        LayerSplits {
            len: layer.len(),
            order,
            candidates,
        }
    }

    /// Every coloring of the nonzero coefficients. Panics above 63 nonzeros.
    pub fn exhaustive(layer: &[f64], inner0: InnerSpace, inner1: InnerSpace) -> Self {
        let order: Vec<usize> = (0..layer.len()).filter(|&g| layer[g] > 0.0).collect();
        let n = order.len();
        assert!(n < 64, "exhaustive layer family needs fewer than 64 nonzeros");
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let candidates = (0..1u64 << n)
            .map(|m| {
                a.clear();
                b.clear();
                for (i, &g) in order.iter().enumerate() {
                    if m >> i & 1 == 1 {
                        b.push(layer[g]);
                    } else {
                        a.push(layer[g]);
                    }
                }
                Candidate {
                    n0: inner_norm(&a, inner0),
                    n1: inner_norm(&b, inner1),
                    choice: Choice::Mask(m),
                }
            })
            .collect();
        LayerSplits {
            len: layer.len(),
            order,
            candidates,
        }
    }

    /// Exhaustive up to [`LAYER_CAP`] nonzeros, prefix splits above.
    pub fn auto(layer: &[f64], inner0: InnerSpace, inner1: InnerSpace) -> Self {
        if layer.iter().filter(|v| **v > 0.0).count() <= LAYER_CAP {
            Self::exhaustive(layer, inner0, inner1)
        } else {
            Self::prefix(layer, inner0, inner1)
        }
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn is_zero(&self) -> bool {
        self.order.is_empty()
    }

    /// Index and value of the best candidate for `form` at threshold `t`;
    /// ties go to the earliest candidate.
    pub fn best(&self, t: f64, form: FunctionalForm) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.candidates.iter().enumerate() {
            let v = form.combine(c.n0, t * c.n1);
            if v < best.1 {
                best = (i, v);
            }
        }
        best
    }

    /// Side bits of candidate `i` over the whole layer (true = side 1).
    pub fn bits(&self, i: usize) -> Vec<bool> {
        let mut bits = vec![false; self.len];
        match self.candidates[i].choice {
            Choice::Prefix { k, to_one } => {
                for (rank, &g) in self.order.iter().enumerate() {
                    bits[g] = (rank < k) == to_one;
                }
            }
            Choice::Mask(m) => {
                for (i, &g) in self.order.iter().enumerate() {
                    bits[g] = m >> i & 1 == 1;
                }
            }
        }
        bits
    }

    /// Pareto frontier of `(n0, n1)` scaled by `(w0, w1)`: sorted by
    /// increasing `n1` with strictly decreasing `n0`.
    pub fn frontier(&self, w0: f64, w1: f64) -> Vec<(f64, f64)> {
        let mut points: Vec<(f64, f64)> =
            self.candidates.iter().map(|c| (w0 * c.n0, w1 * c.n1)).collect();
        points.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.total_cmp(&y.0)));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for p in points {
            if out.last().map_or(true, |last| p.0 < last.0) {
                out.push(p);
            }
        }
        out
    }
}

/// Per-layer side values chosen by a layer-wise solver.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerContribution {
    pub j: i32,
    /// Side-0 inner norm at the chosen coloring.
    pub x: f64,
    /// Side-1 inner norm at the chosen coloring.
    pub y: f64,
    /// True where the coefficient goes to side 1.
    pub assignment: Vec<bool>,
}

/// Best prefix split of one layer: sort nonincreasingly, then try every
/// "largest k to one side" split in both orientations.
pub fn k_layer_fast(
    t: f64,
    layer: &[f64],
    inner0: InnerSpace,
    inner1: InnerSpace,
    form: FunctionalForm,
) -> Result<KResult> {
    check_t(t)?;
    form.validate()?;
    let field = CoeffField::single_layer(0, layer.to_vec())?;
    let splits = LayerSplits::prefix(field.layer(0), inner0, inner1);
    let (i, value) = splits.best(t, form);
    Ok(KResult {
        value,
        assignment: VertexAssignment::new(0, vec![splits.bits(i)]),
        form,
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{k_layer_exhaustive, DEFAULT_CAP};
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn hunt_on_constant_layer() {
        for m in [1usize, 3, 8] {
            for t in [0.25, 1.0, 2.0, 5.0, 20.0] {
                let r = k_layer_fast(t, &vec![1.0; m], InnerSpace::Lp(1.0), InnerSpace::Sup, FunctionalForm::Sum)
                    .unwrap();
                assert_eq!(r.value, (m as f64).min(t));
            }
        }
    }

    #[test]
    fn decreasing_layer_example() {
        let r = k_layer_fast(1.0, &[4.0, 2.0, 1.0], InnerSpace::Lp(1.0), InnerSpace::Sup, FunctionalForm::Sum)
            .unwrap();
        assert_eq!(r.value, 4.0);
        assert_eq!(r.assignment.bits(), &[vec![true, true, true]]);
    }

    #[test]
    fn single_value() {
        let spaces = [InnerSpace::Lp(0.5), InnerSpace::Lorentz { p: 2.0, tau: 1.0 }, InnerSpace::Sup];
        for a in spaces {
            for b in spaces {
                for t in [0.3, 1.0, 3.0] {
                    let r = k_layer_fast(t, &[2.5], a, b, FunctionalForm::Sum).unwrap();
                    let (w0, w1) = (inner_norm(&[1.0], a), inner_norm(&[1.0], b));
                    approx::assert_relative_eq!(r.value, 2.5 * f64::min(w0, t * w1), max_relative = 1e-15);
                }
            }
        }
    }

    #[test]
    fn frontier_is_pareto() {
        let s = LayerSplits::exhaustive(&[3.0, 1.0], InnerSpace::Lp(1.0), InnerSpace::Lp(1.0));
        assert_eq!(s.frontier(1.0, 1.0), vec![(4.0, 0.0), (3.0, 1.0), (1.0, 3.0), (0.0, 4.0)]);
    }

    fn lp_or_sup() -> impl Strategy<Value = InnerSpace> {
        prop::sample::select(vec![1.0, 1.5, 2.0, 3.0, INF]).prop_map(InnerSpace::Lp)
    }

    proptest! {
        #[test]
        fn prefix_exact_for_sum_lp(
            layer in prop::collection::vec(0.0f64..10.0, 0..10),
            a in lp_or_sup(), b in lp_or_sup(), t in 0.05f64..20.0,
        ) {
            let fast = k_layer_fast(t, &layer, a, b, FunctionalForm::Sum).unwrap().value;
            let exact = k_layer_exhaustive(t, &layer, a, b, FunctionalForm::Sum, DEFAULT_CAP).unwrap().value;
            prop_assert!((fast - exact).abs() <= 1e-12 * exact.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn candidates_report_their_norms(
            layer in prop::collection::vec(0.0f64..10.0, 0..8),
            a in lp_or_sup(), b in lp_or_sup(),
        ) {
            for s in [LayerSplits::prefix(&layer, a, b), LayerSplits::exhaustive(&layer, a, b)] {
                for (i, c) in s.candidates().iter().enumerate() {
                    let bits = s.bits(i);
                    let side0: Vec<f64> = layer.iter().zip(&bits).filter(|x| !*x.1).map(|x| *x.0).collect();
                    let side1: Vec<f64> = layer.iter().zip(&bits).filter(|x| *x.1).map(|x| *x.0).collect();
                    prop_assert!((c.n0 - inner_norm(&side0, a)).abs() <= 1e-12 * c.n0.max(1.0));
                    prop_assert!((c.n1 - inner_norm(&side1, b)).abs() <= 1e-12 * c.n1.max(1.0));
                }
            }
        }
    }
}
