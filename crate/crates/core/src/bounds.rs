//! Conditional bound terms and plugin bounds.
//!
//! Every term has the form `θ(x) = g(x) · N(x) / c` with `c = P(Y=1, D=0)`
//! and a numerator `N` built from `π(x) = P(T=1 | D=1, X)` and
//! `μ(x) = P(Y=1 | D=0, X)`:
//!
//! | term          | numerator `N`                 |
//! |---------------|-------------------------------|
//! | upper 1       | `π`                           |
//! | upper 2       | `μ`                           |
//! | upper γ       | `A_γ = γπμ / ((γ−1)μ + 1)`    |
//! | lower 1       | `π + μ − 1`                   |
//! | lower 2       | `0`                           |
//! | lower γ       | `A_{1/γ}`                     |
//!
//! The upper bound averages the pointwise minimum over the upper terms and
//! the lower bound the pointwise maximum over the lower terms. Dividing each
//! term by the weight `w(x) = g(x)μ(x)/c` gives the conditional bound on
//! `P(T=1 | Y(0)=1, D=1, X)`; see [`weighted_form`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::nuisance::{NuisancePoint, ScoredUnits};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TermIndex {
    One,
    Two,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermId {
    pub side: Side,
    pub index: TermIndex,
}

impl TermId {
    pub const fn new(side: Side, index: TermIndex) -> Self {
        Self { side, index }
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::Lower => "l",
            Side::Upper => "u",
        };
        let idx = match self.index {
            TermIndex::One => "1",
            TermIndex::Two => "2",
            TermIndex::Gamma => "3g",
        };
        write!(f, "theta{idx}_{side}")
    }
}

/// Sensitivity parameter: bound on the ratio of treatment propensities
/// between non-needy and needy units at the same covariates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GammaParam {
    Finite(f64),
    /// Arbitrary unmeasured confounding.
    Infinite,
}

impl GammaParam {
    pub fn finite(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma >= 1.0 {
            Ok(Self::Finite(gamma))
        } else if gamma == f64::INFINITY {
            Ok(Self::Infinite)
        } else {
            Err(AuditError::Domain(format!("gamma must be >= 1, got {gamma}")))
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Finite(g) => Some(*g),
            Self::Infinite => None,
        }
    }
}

/// Numerator of a term and its partial derivatives in `π` and `μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermShape {
    pub numerator: f64,
    pub d_pi: f64,
    pub d_mu: f64,
}

/// `A_s(x) = sπμ / ((s−1)μ + 1)` with its partials.
fn tilted(s: f64, mu: f64, pi: f64) -> TermShape {
    let den = (s - 1.0) * mu + 1.0;
    TermShape {
        numerator: s * pi * mu / den,
        d_pi: s * mu / den,
        d_mu: s * pi / (den * den),
    }
}

/// Shape of term `id` at the given nuisance values. `gamma` is only read
/// for the γ-term and must be finite there.
pub fn term_shape(id: TermId, gamma: GammaParam, mu: f64, pi: f64) -> TermShape {
    use {Side::*, TermIndex::*};
    match (id.side, id.index) {
        (Upper, One) => TermShape { numerator: pi, d_pi: 1.0, d_mu: 0.0 },
        (Upper, Two) => TermShape { numerator: mu, d_pi: 0.0, d_mu: 1.0 },
        (Lower, One) => TermShape { numerator: pi + mu - 1.0, d_pi: 1.0, d_mu: 1.0 },
        (Lower, Two) => TermShape { numerator: 0.0, d_pi: 0.0, d_mu: 0.0 },
        (side, Gamma) => {
            let g = gamma.value().expect("gamma term requires a finite gamma");
            let s = if side == Upper { g } else { 1.0 / g };
            tilted(s, mu, pi)
        }
    }
}

/// Term indices present for a side at the given γ, in tie-break order.
pub fn term_ids(side: Side, gamma: GammaParam) -> Vec<TermId> {
    let mut ids = vec![TermId::new(side, TermIndex::One), TermId::new(side, TermIndex::Two)];
    if gamma.value().is_some() {
        ids.push(TermId::new(side, TermIndex::Gamma));
    }
    ids
}

/// Values of every term of one side at one unit, with the selected term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSet {
    pub side: Side,
    pub values: Vec<(TermId, f64)>,
    pub selected: TermId,
    pub gamma: Option<f64>,
}

impl TermSet {
    pub fn value(&self, id: TermId) -> Option<f64> {
        self.values.iter().find(|(t, _)| *t == id).map(|(_, v)| *v)
    }

    pub fn selected_value(&self) -> f64 {
        self.value(self.selected).expect("selected term is present")
    }
}

fn side_terms(side: Side, point: &NuisancePoint, gamma: GammaParam) -> TermSet {
    let values: Vec<(TermId, f64)> = term_ids(side, gamma)
        .into_iter()
        .map(|id| {
            let shape = term_shape(id, gamma, point.mu, point.pi);
            (id, point.g * shape.numerator / point.c)
        })
        .collect();
    let selected = pick(side, &values);
    TermSet {
        side,
        values,
        selected,
        gamma: gamma.value(),
    }
}

fn pick(side: Side, values: &[(TermId, f64)]) -> TermId {
    let mut best = values[0];
    for &cand in &values[1..] {
        let better = match side {
            Side::Upper => cand.1 < best.1,
            Side::Lower => cand.1 > best.1,
        };
        if better {
            best = cand;
        }
    }
    best.0
}

/// Lower and upper term sets at one unit.
pub fn eval_terms(point: &NuisancePoint, gamma: GammaParam) -> (TermSet, TermSet) {
    (
        side_terms(Side::Lower, point, gamma),
        side_terms(Side::Upper, point, gamma),
    )
}

/// Arg-min (upper) or arg-max (lower) over the terms, ties to the lowest index.
pub fn select_term(terms: &TermSet) -> TermId {
    pick(terms.side, &terms.values)
}

/// Covariate-free bounds on the treatment rate among the needy from the
/// marginal treatment rate and the marginal untreated adverse-outcome rate.
pub fn marginal_bounds(p_treat: f64, p_y0: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p_treat) || !(0.0..=1.0).contains(&p_y0) {
        return Err(AuditError::Domain("rates must lie in [0, 1]".into()));
    }
    if p_y0 == 0.0 {
        return Err(AuditError::Domain("adverse-outcome rate is zero".into()));
    }
    let lower = ((p_treat + p_y0 - 1.0) / p_y0).max(0.0);
    let upper = (p_treat / p_y0).min(1.0);
    Ok((lower, upper))
}

/// Mean of the selected plugin term over all units, without clipping.
pub fn plugin_bound_raw(scored: &ScoredUnits, side: Side, gamma: GammaParam) -> f64 {
    let n = scored.len() as f64;
    scored
        .points()
        .iter()
        .map(|p| side_terms(side, p, gamma).selected_value())
        .sum::<f64>()
        / n
}

/// Plugin bound clipped to `[0, 1]`.
pub fn plugin_bound(scored: &ScoredUnits, side: Side, gamma: GammaParam) -> f64 {
    plugin_bound_raw(scored, side, gamma).clamp(0.0, 1.0)
}

/// The same per-unit bound written as `w(x)` times the clipped conditional
/// bound on `P(T=1 | Y(0)=1, D=1, X)`, with `w(x) = g(x)μ(x)/c`.
pub fn weighted_form(point: &NuisancePoint, side: Side, gamma: GammaParam) -> f64 {
    let NuisancePoint { mu, pi, g, c } = *point;
    let w = g * mu / c;
    let conditional = match side {
        Side::Upper => {
            let mut b = (pi / mu).min(1.0);
            if let Some(gm) = gamma.value() {
                b = b.min(gm * pi / ((gm - 1.0) * mu + 1.0));
            }
            b
        }
        Side::Lower => {
            let mut b = ((pi + mu - 1.0) / mu).max(0.0);
            if let Some(gm) = gamma.value() {
                let s = 1.0 / gm;
                b = b.max(s * pi / ((s - 1.0) * mu + 1.0));
            }
            b
        }
    };
    w * conditional
}
