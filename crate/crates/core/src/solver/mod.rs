//! Polynomial-time K-functional evaluation, split into four cases by the
//! shape of the couple.

mod conditional;
mod layer;
mod power;
mod same;

use std::fmt;

pub use conditional::{g_conditional, h_threshold, k_q_infinity, ConditionalCurve};
pub use layer::{k_layer_fast, Candidate, LayerContribution, LayerSplits, LAYER_CAP};
pub use power::{
    k_diff_q, power_k_inf, power_root_find, LayerCurve, Orientation, PowerRelation, ROOT_TOL,
};
pub use same::{k_same_a, k_same_q, layer_contributions};

use crate::error::Result;
use crate::grid::CoeffField;
use crate::oracle::{check_t, FunctionalForm};
use crate::spaces::CouplePair;

/// Which fast path a couple is routed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    /// Same inner space on both sides.
    I,
    /// Same outer exponent `q`, finite or infinite.
    II,
    /// Distinct finite outer exponents.
    III,
    /// Distinct outer exponents, one of them infinite.
    IV,
}

impl Case {
    pub fn of(pair: &CouplePair) -> Case {
        let (q0, q1) = (pair.side0.outer.q, pair.side1.outer.q);
        if pair.same_inner() {
            Case::I
        } else if q0 == q1 {
            Case::II
        } else if q0.is_finite() && q1.is_finite() {
            Case::III
        } else {
            Case::IV
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Case::I => "i",
            Case::II => "ii",
            Case::III => "iii",
            Case::IV => "iv",
        }
    }

    /// The functional form the case computes.
    pub fn form(&self) -> FunctionalForm {
        match self {
            Case::I | Case::II => FunctionalForm::Sum,
            Case::III | Case::IV => FunctionalForm::Max,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Result of [`k_dispatch`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispatch {
    pub case: Case,
    pub form: FunctionalForm,
    pub value: f64,
}

/// Routes `(t, field, pair)` to the fast path for its case. Cases i and ii
/// return the Sum form, cases iii and iv the Max form.
pub fn k_dispatch(t: f64, field: &CoeffField, pair: &CouplePair, cap: usize) -> Result<Dispatch> {
    check_t(t)?;
    let case = Case::of(pair);
    let value = match case {
        Case::I => k_same_a(t, field, pair, cap)?,
        Case::II => k_same_q(t, field, pair)?,
        Case::III => k_diff_q(t, field, pair)?,
        Case::IV => k_q_infinity(t, field, pair)?,
    };
    Ok(Dispatch {
        case,
        form: case.form(),
        value,
    })
}
