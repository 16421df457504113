//! Influence-function corrections and one-step bound estimators.
//!
//! For a term `θ = g·N/c` the correction at an observation `w = (x, d, t, y)`
//! is
//!
//! ```text
//! λ(w; M) = (1/c)·( 1[d=0]·N + ∂N/∂π · 1[d=1](t−π)·g/(1−g) + ∂N/∂μ · 1[d=0](y−μ) )
//!           − 1[y=1,d=0]·M / c²
//! ```
//!
//! where `M` estimates `E[g·N]`. Writing `1[d=0]·N = g·N + N(1[d=0] − g)`
//! recovers the usual textbook layout. `λ` has mean zero at the true
//! nuisances and the one-step estimate averages `φ = θ + λ`.
//!
//! When the selected term `d̂(x)` varies across units, the centering `M` must
//! be the fold average of `ĝ·N_{d̂(X)}` (the selected numerator), not each
//! term's own average; see [`Centering`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::{eval_terms, term_ids, term_shape, GammaParam, Side, TermId, TermIndex, TermSet};
use crate::data::{AuditFrame, UnitRecord};
use crate::error::{AuditError, Result};
use crate::nuisance::{NuisancePoint, ScoredUnits};

/// How the `E[g·N]` constant inside each correction is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Fold mean of `ĝ·N` for the numerator selected at each unit. This is
    /// the influence function of `E[θ_{d(X)}(X)]` with `d` held fixed.
    #[default]
    Selected,
    /// Fold mean of `ĝ·N_j` for each term `j` separately. Only unbiased when
    /// every unit selects the same term.
    PerTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiValue {
    pub unit: usize,
    pub side: Side,
    pub theta: f64,
    pub phi: f64,
    pub term_used: TermId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub side: Side,
    pub gamma: Option<f64>,
    /// Mean of `phi`, clipped to `[0, 1]`.
    pub psi_hat: f64,
    pub psi_hat_unclipped: f64,
    pub sigma_hat: f64,
    pub n: usize,
    pub phi_values: Vec<PhiValue>,
}

impl BoundEstimate {
    fn from_phis(side: Side, gamma: GammaParam, phi_values: Vec<PhiValue>) -> Self {
        let n = phi_values.len();
        let nf = n as f64;
        let mean = phi_values.iter().map(|p| p.phi).sum::<f64>() / nf;
        let var = phi_values.iter().map(|p| (p.phi - mean).powi(2)).sum::<f64>() / nf;
        Self {
            side,
            gamma: gamma.value(),
            psi_hat: mean.clamp(0.0, 1.0),
            psi_hat_unclipped: mean,
            sigma_hat: var.sqrt(),
            n,
            phi_values,
        }
    }

    /// Standard error `σ̂/√n`.
    pub fn std_error(&self) -> f64 {
        self.sigma_hat / (self.n as f64).sqrt()
    }
}

fn outcome(unit: &UnitRecord) -> f64 {
    f64::from(unit.y.unwrap_or(0))
}

fn needy_pre(unit: &UnitRecord) -> f64 {
    f64::from(u8::from(unit.needy_pre()))
}

/// Correction for term `id` at one observation, centred on `m ≈ E[g·N]`.
pub fn influence(id: TermId, gamma: GammaParam, p: &NuisancePoint, unit: &UnitRecord, m: f64) -> f64 {
    let s = term_shape(id, gamma, p.mu, p.pi);
    let pre = f64::from(u8::from(unit.is_pre()));
    let mut inner = pre * s.numerator;
    if unit.is_post() && s.d_pi != 0.0 {
        inner += s.d_pi * (f64::from(unit.t) - p.pi) * p.g / (1.0 - p.g);
    }
    if unit.is_pre() && s.d_mu != 0.0 {
        inner += s.d_mu * (outcome(unit) - p.mu);
    }
    inner / p.c - needy_pre(unit) * m / (p.c * p.c)
}

/// `m` estimates `E[g·π]`.
pub fn influence_theta1_u(p: &NuisancePoint, unit: &UnitRecord, m: f64) -> f64 {
    influence(TermId::new(Side::Upper, TermIndex::One), GammaParam::Infinite, p, unit, m)
}

/// Written with the ratio `r = E[μ | D=0] / P(Y=1 | D=0)`, which equals one
/// at the true nuisances; the correction is then identically zero.
pub fn influence_theta2_u(p: &NuisancePoint, unit: &UnitRecord, r: f64) -> f64 {
    if !unit.is_pre() {
        return 0.0;
    }
    let y = outcome(unit);
    ((y - p.mu) + (p.mu - r * y)) / p.c
}

/// `m` estimates `E[g·(π + μ − 1)]`.
pub fn influence_theta1_l(p: &NuisancePoint, unit: &UnitRecord, m: f64) -> f64 {
    influence(TermId::new(Side::Lower, TermIndex::One), GammaParam::Infinite, p, unit, m)
}

pub fn influence_theta2_l(_p: &NuisancePoint, _unit: &UnitRecord) -> f64 {
    0.0
}

/// `m` estimates `E[g·A]` with `A = A_γ` (upper) or `A_{1/γ}` (lower).
pub fn influence_theta3(p: &NuisancePoint, unit: &UnitRecord, gamma: f64, side: Side, m: f64) -> f64 {
    influence(TermId::new(side, TermIndex::Gamma), GammaParam::Finite(gamma), p, unit, m)
}

/// `r = (mean of μ̂ over pre units) / (share of y=1 among pre units)` over
/// the given units, as used by [`influence_theta2_u`].
pub fn theta2_u_ratio(frame: &AuditFrame, scored: &ScoredUnits, units: &[usize]) -> f64 {
    let (mut mu_sum, mut y_sum) = (0.0, 0.0);
    for &i in units {
        let r = &frame.records()[i];
        if r.is_pre() {
            mu_sum += scored.point(i).mu;
            y_sum += outcome(r);
        }
    }
    mu_sum / y_sum
}

fn check_alignment(frame: &AuditFrame, scored: &ScoredUnits) -> Result<()> {
    if frame.len() != scored.len() {
        return Err(AuditError::Config(format!(
            "frame has {} records but {} scored units",
            frame.len(),
            scored.len()
        )));
    }
    Ok(())
}

fn g_numerator(id: TermId, gamma: GammaParam, p: &NuisancePoint) -> f64 {
    p.g * term_shape(id, gamma, p.mu, p.pi).numerator
}

/// One-step estimate of the lower or upper bound, centred on the selected
/// numerator.
pub fn onestep_bound(frame: &AuditFrame, scored: &ScoredUnits, side: Side, gamma: GammaParam) -> Result<BoundEstimate> {
    onestep_bound_with(frame, scored, side, gamma, Centering::Selected)
}

pub fn onestep_bound_with(
    frame: &AuditFrame,
    scored: &ScoredUnits,
    side: Side,
    gamma: GammaParam,
    centering: Centering,
) -> Result<BoundEstimate> {
    check_alignment(frame, scored)?;
    let ids = term_ids(side, gamma);
    let mut phis: Vec<Option<PhiValue>> = vec![None; frame.len()];

    for members in scored.fold_members() {
        if members.is_empty() {
            continue;
        }
        let nk = members.len() as f64;
        let sets: Vec<TermSet> = members
            .iter()
            .map(|&i| {
                let (lo, up) = eval_terms(&scored.point(i), gamma);
                if side == Side::Lower { lo } else { up }
            })
            .collect();
        let m_sel = members
            .iter()
            .zip(&sets)
            .map(|(&i, s)| g_numerator(s.selected, gamma, &scored.point(i)))
            .sum::<f64>()
            / nk;
        let m_term: Vec<f64> = ids
            .iter()
            .map(|&id| members.iter().map(|&i| g_numerator(id, gamma, &scored.point(i))).sum::<f64>() / nk)
            .collect();

        for (&i, set) in members.iter().zip(&sets) {
            let m = match centering {
                Centering::Selected => m_sel,
                Centering::PerTerm => m_term[ids.iter().position(|&t| t == set.selected).expect("term present")],
            };
            let p = scored.point(i);
            let theta = set.selected_value();
            let lambda = influence(set.selected, gamma, &p, &frame.records()[i], m);
            phis[i] = Some(PhiValue { unit: i, side, theta, phi: theta + lambda, term_used: set.selected });
        }
    }
    let phis = phis.into_iter().map(|p| p.expect("every unit belongs to a fold")).collect();
    Ok(BoundEstimate::from_phis(side, gamma, phis))
}

/// One-step estimate of a single term's mean, without the min/max.
///
/// The second upper term integrates to `E[g·μ]/P(Y=1, D=0) = 1` for every
/// distribution, so its estimate is the constant 1 with zero spread; the
/// second lower term is identically 0.
pub fn per_term_estimate(frame: &AuditFrame, scored: &ScoredUnits, id: TermId, gamma: GammaParam) -> Result<BoundEstimate> {
    check_alignment(frame, scored)?;
    if id.index == TermIndex::Gamma && gamma.value().is_none() {
        return Err(AuditError::Config("gamma term requested without a finite gamma".into()));
    }
    let n = frame.len();
    let constant = match (id.side, id.index) {
        (Side::Upper, TermIndex::Two) => Some(1.0),
        (Side::Lower, TermIndex::Two) => Some(0.0),
        _ => None,
    };
    let mut phis: Vec<Option<PhiValue>> = vec![None; n];
    for members in scored.fold_members() {
        if members.is_empty() {
            continue;
        }
        let m = members.iter().map(|&i| g_numerator(id, gamma, &scored.point(i))).sum::<f64>() / members.len() as f64;
        for &i in &members {
            let p = scored.point(i);
            let (theta, phi) = match constant {
                Some(v) => (v, v),
                None => {
                    let theta = g_numerator(id, gamma, &p) / p.c;
                    (theta, theta + influence(id, gamma, &p, &frame.records()[i], m))
                }
            };
            phis[i] = Some(PhiValue { unit: i, side: id.side, theta, phi, term_used: id });
        }
    }
    let phis = phis.into_iter().map(|p| p.expect("every unit belongs to a fold")).collect();
    Ok(BoundEstimate::from_phis(id.side, gamma, phis))
}

/// Per-term estimates for every term of one side, in term order.
pub fn per_term_estimates(frame: &AuditFrame, scored: &ScoredUnits, side: Side, gamma: GammaParam) -> Result<Vec<BoundEstimate>> {
    term_ids(side, gamma)
        .into_iter()
        .map(|id| per_term_estimate(frame, scored, id, gamma))
        .collect()
}

fn closed_form_mean(frame: &AuditFrame, scored: &ScoredUnits, f: impl Fn(&UnitRecord, &NuisancePoint) -> f64) -> f64 {
    let n = frame.len() as f64;
    frame
        .records()
        .iter()
        .zip(scored.points())
        .map(|(r, p)| f(r, p) / p.c)
        .sum::<f64>()
        / n
}

fn propensity_piece(r: &UnitRecord, p: &NuisancePoint) -> f64 {
    if r.is_post() {
        (f64::from(r.t) - p.pi) * p.g / (1.0 - p.g)
    } else {
        0.0
    }
}

/// Closed form of the per-term one-step estimate of the first upper term.
/// Matches [`per_term_estimate`] when `c` is the same-sample share of
/// `(y=1, d=0)` rows.
pub fn closed_form_theta1_u(frame: &AuditFrame, scored: &ScoredUnits) -> f64 {
    closed_form_mean(frame, scored, |r, p| {
        let pre = if r.is_pre() { p.pi } else { 0.0 };
        pre + propensity_piece(r, p)
    })
}

/// Closed form for the first lower term.
pub fn closed_form_theta1_l(frame: &AuditFrame, scored: &ScoredUnits) -> f64 {
    closed_form_mean(frame, scored, |r, p| {
        let pre = if r.is_pre() { p.pi + (outcome(r) - 1.0) } else { 0.0 };
        propensity_piece(r, p) + pre
    })
}

/// Closed form for the γ-term on either side.
pub fn closed_form_theta3(frame: &AuditFrame, scored: &ScoredUnits, gamma: f64, side: Side) -> f64 {
    let s = if side == Side::Upper { gamma } else { 1.0 / gamma };
    closed_form_mean(frame, scored, |r, p| {
        let den = (s - 1.0) * p.mu + 1.0;
        if r.is_pre() {
            s * p.pi * p.mu / den + s * p.pi / (den * den) * (outcome(r) - p.mu)
        } else {
            s * p.mu / den * propensity_piece(r, p)
        }
    })
}

/// Write `unit,side,gamma,term_used,phi` rows.
pub fn write_phi_csv(estimates: &[&BoundEstimate], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["unit", "side", "gamma", "term_used", "phi"])?;
    for est in estimates {
        let gamma = est.gamma.map_or_else(|| "inf".to_string(), |g| format!("{g:.6}"));
        for p in &est.phi_values {
            let side = match p.side {
                Side::Lower => "lower",
                Side::Upper => "upper",
            };
            w.write_record([
                p.unit.to_string(),
                side.to_string(),
                gamma.clone(),
                p.term_used.to_string(),
                format!("{:.6}", p.phi),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::plugin_bound_raw;
    use crate::data::make_folds;
    use crate::nuisance::{fit_nuisances, NuisanceConfig};
    use crate::synth::{generate, CovariateSource, SyntheticConfig};
    use proptest::prelude::*;

    fn rec(d: u8, t: u8, y: Option<u8>) -> UnitRecord {
        UnitRecord { x: vec![0.0], d, t, y, g: 0 }
    }

    const P: NuisancePoint = NuisancePoint { mu: 0.6, pi: 0.3, g: 0.4, c: 0.25 };

    #[test]
    fn theta1_u_matches_textbook_layout() {
        let m = 0.11;
        for u in [rec(0, 0, Some(1)), rec(0, 0, Some(0)), rec(1, 1, None), rec(1, 0, None)] {
            let pre = f64::from(u8::from(u.is_pre()));
            let post = 1.0 - pre;
            let yd = f64::from(u8::from(u.needy_pre()));
            let want = (1.0 / P.c)
                * (-yd / P.c * m + P.g * P.pi + post * (f64::from(u.t) - P.pi) * P.g / (1.0 - P.g) + P.pi * (pre - P.g));
            assert!((influence_theta1_u(&P, &u, m) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn theta1_u_scaling_in_c() {
        let m = 0.05;
        let u = rec(0, 0, Some(1));
        let p2 = NuisancePoint { c: 2.0 * P.c, ..P };
        let lin = (P.g * P.pi + P.pi * (1.0 - P.g)) / P.c;
        let quad = -m / (P.c * P.c);
        assert!((influence_theta1_u(&P, &u, m) - (lin + quad)).abs() < 1e-12);
        assert!((influence_theta1_u(&p2, &u, m) - (lin / 2.0 + quad / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn theta2_u_vanishes_off_pre_era_and_at_unit_ratio() {
        assert_eq!(influence_theta2_u(&P, &rec(1, 1, None), 0.7), 0.0);
        assert_eq!(influence_theta2_u(&P, &rec(0, 0, Some(1)), 1.0), 0.0);
        assert_eq!(influence_theta2_u(&P, &rec(0, 0, Some(0)), 1.0), 0.0);
    }

    #[test]
    fn theta1_l_is_theta1_u_plus_pre_piece() {
        let (m_u, m_mu) = (0.1, -0.15);
        for u in [rec(0, 0, Some(1)), rec(0, 0, Some(0)), rec(1, 1, None)] {
            let yd = f64::from(u8::from(u.needy_pre()));
            let pre = f64::from(u8::from(u.is_pre()));
            let extra = (1.0 / P.c) * (-yd / P.c * m_mu + pre * (f64::from(u.y.unwrap_or(0)) - 1.0));
            let got = influence_theta1_l(&P, &u, m_u + m_mu);
            assert!((got - (influence_theta1_u(&P, &u, m_u) + extra)).abs() < 1e-12);
        }
        let u = rec(1, 0, None);
        assert_eq!(influence_theta1_l(&P, &u, 0.3), influence_theta1_u(&P, &u, 0.3));
        assert_eq!(influence_theta2_l(&P, &u), 0.0);
    }

    #[test]
    fn theta3_coincides_at_gamma_one() {
        for u in [rec(0, 0, Some(1)), rec(0, 0, Some(0)), rec(1, 1, None), rec(1, 0, None)] {
            let up = influence_theta3(&P, &u, 1.0, Side::Upper, 0.07);
            let lo = influence_theta3(&P, &u, 1.0, Side::Lower, 0.07);
            assert_eq!(up, lo);
        }
    }

    #[test]
    fn theta3_converges_for_large_gamma() {
        for u in [rec(0, 0, Some(1)), rec(0, 0, Some(0)), rec(1, 1, None), rec(1, 0, None)] {
            let at = |g: f64| {
                let m = P.g * term_shape(TermId::new(Side::Upper, TermIndex::Gamma), GammaParam::Finite(g), P.mu, P.pi).numerator;
                influence_theta3(&P, &u, g, Side::Upper, m)
            };
            assert!((at(1e5) - at(1e6)).abs() < 1e-4);
        }
    }

    fn small_setup(seed: u64) -> (AuditFrame, ScoredUnits) {
        let cfg = SyntheticConfig { n_pre: 600, n_post: 600, seed, ..Default::default() };
        let (frame, _) = generate(&cfg).unwrap();
        let folds = make_folds(&frame, 3, seed).unwrap();
        let nuis = fit_nuisances(&frame, &folds, &NuisanceConfig::default()).unwrap();
        let scored = nuis.score(&frame, &folds).unwrap();
        (frame, scored)
    }

    fn same_sample_scored(frame: &AuditFrame, seed: u64) -> ScoredUnits {
        let needy = frame.records().iter().filter(|r| r.needy_pre()).count();
        let c = needy as f64 / frame.len() as f64;
        let (cfg_seed, scale) = (seed as f64 * 1e-3, 0.1);
        ScoredUnits::from_fn(frame, c, |r| {
            let s = r.x.iter().sum::<f64>();
            (0.7 + scale * (s + cfg_seed).tanh(), 0.3 + scale * s.sin(), 0.5 + scale * s.cos() * 0.5)
        })
    }

    #[test]
    fn per_term_theta2_u_is_exactly_one() {
        for seed in 0..3 {
            let (frame, scored) = small_setup(seed);
            let est = per_term_estimate(&frame, &scored, TermId::new(Side::Upper, TermIndex::Two), GammaParam::Infinite).unwrap();
            assert_eq!(est.psi_hat_unclipped, 1.0);
            assert_eq!(est.sigma_hat, 0.0);
        }
    }

    #[test]
    fn per_term_matches_closed_forms_with_same_sample_c() {
        let (frame, _) = small_setup(4);
        let scored = same_sample_scored(&frame, 4);
        let t1u = per_term_estimate(&frame, &scored, TermId::new(Side::Upper, TermIndex::One), GammaParam::Infinite).unwrap();
        assert!((t1u.psi_hat_unclipped - closed_form_theta1_u(&frame, &scored)).abs() < 1e-12);
        let t1l = per_term_estimate(&frame, &scored, TermId::new(Side::Lower, TermIndex::One), GammaParam::Infinite).unwrap();
        assert!((t1l.psi_hat_unclipped - closed_form_theta1_l(&frame, &scored)).abs() < 1e-12);
        for side in [Side::Lower, Side::Upper] {
            let g = GammaParam::Finite(1.7);
            let est = per_term_estimate(&frame, &scored, TermId::new(side, TermIndex::Gamma), g).unwrap();
            assert!((est.psi_hat_unclipped - closed_form_theta3(&frame, &scored, 1.7, side)).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_identity() {
        let (frame, scored) = small_setup(5);
        for gamma in [GammaParam::Infinite, GammaParam::Finite(1.0), GammaParam::Finite(2.0)] {
            for side in [Side::Lower, Side::Upper] {
                let est = onestep_bound(&frame, &scored, side, gamma).unwrap();
                let plugin = plugin_bound_raw(&scored, side, gamma);
                let mean_lambda = est.phi_values.iter().map(|p| p.phi - p.theta).sum::<f64>() / est.n as f64;
                assert!((est.psi_hat_unclipped - (plugin + mean_lambda)).abs() < 1e-12);
                for p in &est.phi_values {
                    let (lo, up) = eval_terms(&scored.point(p.unit), gamma);
                    let set = if side == Side::Lower { lo } else { up };
                    assert_eq!(p.term_used, set.selected);
                    assert!(p.phi.is_finite());
                }
            }
        }
    }

    #[test]
    fn gamma_one_bounds_coincide() {
        let (frame, scored) = small_setup(6);
        let lo = onestep_bound(&frame, &scored, Side::Lower, GammaParam::Finite(1.0)).unwrap();
        let up = onestep_bound(&frame, &scored, Side::Upper, GammaParam::Finite(1.0)).unwrap();
        assert!((lo.psi_hat_unclipped - up.psi_hat_unclipped).abs() < 1e-12);
    }

    #[test]
    fn constant_selection_makes_centerings_agree() {
        // At γ = 1 every unit selects the γ-term, so both centerings agree.
        let (frame, scored) = small_setup(7);
        let a = onestep_bound_with(&frame, &scored, Side::Upper, GammaParam::Finite(1.0), Centering::Selected).unwrap();
        let b = onestep_bound_with(&frame, &scored, Side::Upper, GammaParam::Finite(1.0), Centering::PerTerm).unwrap();
        assert!((a.psi_hat_unclipped - b.psi_hat_unclipped).abs() < 1e-12);
    }

    #[test]
    fn phi_csv_has_expected_columns() {
        let (frame, scored) = small_setup(8);
        let est = onestep_bound(&frame, &scored, Side::Upper, GammaParam::Finite(1.5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.csv");
        write_phi_csv(&[&est], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("unit,side,gamma,term_used,phi"));
        assert!(lines.next().unwrap().contains(",upper,1.500000,"));
        assert_eq!(text.lines().count(), frame.len() + 1);
    }

    #[test]
    fn misaligned_inputs_are_rejected() {
        let (frame, scored) = small_setup(9);
        let (other, _) = generate(&SyntheticConfig { n_pre: 10, n_post: 10, ..Default::default() }).unwrap();
        assert!(onestep_bound(&other, &scored, Side::Upper, GammaParam::Infinite).is_err());
        let _ = frame;
    }

    fn discrete_cfg(seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            n_pre: 300,
            n_post: 300,
            covariate_source: CovariateSource::Discrete {
                levels: vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 1.0]],
                probs: vec![0.3, 0.4, 0.3],
            },
            gamma_true: 1.5,
            group_offsets: vec![-1.0],
            seed,
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn phi_finite_and_decomposes(seed in 0u64..10_000, gamma in 1.0..4.0f64) {
            let (frame, _) = generate(&discrete_cfg(seed)).unwrap();
            let folds = make_folds(&frame, 2, seed).unwrap();
            let nuis = fit_nuisances(&frame, &folds, &NuisanceConfig::default()).unwrap();
            let scored = nuis.score(&frame, &folds).unwrap();
            for side in [Side::Lower, Side::Upper] {
                let est = onestep_bound(&frame, &scored, side, GammaParam::Finite(gamma)).unwrap();
                prop_assert!(est.phi_values.iter().all(|p| p.phi.is_finite()));
                let plugin = plugin_bound_raw(&scored, side, GammaParam::Finite(gamma));
                let lam = est.phi_values.iter().map(|p| p.phi - p.theta).sum::<f64>() / est.n as f64;
                prop_assert!((est.psi_hat_unclipped - plugin - lam).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&est.psi_hat));
            }
        }
    }
}
