//! Synthetic data with a known confounding strength and latent potential
//! outcomes, plus exact oracles for the quantities being bounded.
//!
//! Randomness: unit `i` draws everything from its own ChaCha8 stream,
//! `ChaCha8Rng::seed_from_u64(seed)` with `set_stream(i)`, in the fixed order
//! covariates, era, group, y0, y1, treatment. Growing `n` therefore never
//! changes earlier units.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bounds::{eval_terms, GammaParam};
use crate::data::{AuditFrame, UnitRecord};
use crate::error::{AuditError, Result};
use crate::logistic::sigmoid;
use crate::nuisance::NuisancePoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateSource {
    /// Independent centred normals with the given standard deviations.
    Gaussian2d { s1: f64, s2: f64 },
    /// Finite support: `levels[j]` is drawn with probability `probs[j]`.
    Discrete { levels: Vec<Vec<f64>>, probs: Vec<f64> },
}

impl CovariateSource {
    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian2d { .. } => 2,
            Self::Discrete { levels, .. } => levels.first().map_or(0, Vec::len),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_pre: usize,
    pub n_post: usize,
    pub covariate_source: CovariateSource,
    pub gamma_true: f64,
    /// Shift of the treatment score per group; group ids are the indices.
    pub group_offsets: Vec<f64>,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_pre: 20_000,
            n_post: 20_000,
            covariate_source: CovariateSource::Gaussian2d { s1: 0.2, s2: 0.1 },
            gamma_true: 1.5,
            group_offsets: vec![-1.0],
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AuditError::Config(m));
        if self.n_pre + self.n_post == 0 {
            return bad("n_pre + n_post must be positive".into());
        }
        if !(self.gamma_true.is_finite() && self.gamma_true >= 1.0) {
            return bad(format!("gamma_true must be finite and >= 1, got {}", self.gamma_true));
        }
        if self.group_offsets.is_empty() || self.group_offsets.iter().any(|o| !o.is_finite()) {
            return bad("group_offsets must be non-empty and finite".into());
        }
        match &self.covariate_source {
            CovariateSource::Gaussian2d { s1, s2 } => {
                if !(*s1 > 0.0 && *s2 > 0.0 && s1.is_finite() && s2.is_finite()) {
                    return bad("gaussian standard deviations must be positive".into());
                }
            }
            CovariateSource::Discrete { levels, probs } => {
                if levels.is_empty() || levels.len() != probs.len() {
                    return bad("discrete source needs one probability per level".into());
                }
                let dim = levels[0].len();
                if dim == 0 || levels.iter().any(|l| l.len() != dim || l.iter().any(|v| !v.is_finite())) {
                    return bad("discrete levels must share a positive dimension".into());
                }
                if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return bad("discrete probabilities must be non-negative and sum to 1".into());
                }
            }
        }
        Ok(())
    }

    /// Share of pre-availability units, which is also `g(x)` for every `x`.
    pub fn pre_share(&self) -> f64 {
        self.n_pre as f64 / (self.n_pre + self.n_post) as f64
    }
}

/// Latent quantities per unit, aligned with the frame's records.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LatentTable {
    pub y0: Vec<u8>,
    pub y1: Vec<u8>,
    /// Bernoulli parameter used for `T`; zero for pre-availability units.
    pub p_treat_used: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub true_rate: f64,
    pub true_psi_l: f64,
    pub true_psi_u: f64,
    pub true_psi_l_gamma: f64,
    pub true_psi_u_gamma: f64,
    pub gamma: f64,
}

fn l1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// `P(Y(0)=1 | x)`.
pub fn baseline_risk(x: &[f64]) -> f64 {
    sigmoid(l1(x) + 2.0)
}

/// Treatment score before confounding is injected.
pub fn treatment_score(x: &[f64], offset: f64) -> f64 {
    sigmoid(l1(x) + offset)
}

/// Per-trial seed derived from a base seed by a SplitMix64 step over
/// `seed ^ (trial · golden)`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn draw_x(source: &CovariateSource, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match source {
        CovariateSource::Gaussian2d { s1, s2 } => {
            let a = Normal::new(0.0, *s1).expect("validated sd");
            let b = Normal::new(0.0, *s2).expect("validated sd");
            vec![a.sample(rng), b.sample(rng)]
        }
        CovariateSource::Discrete { levels, probs } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (l, p) in levels.iter().zip(probs) {
                acc += p;
                if u < acc {
                    return l.clone();
                }
            }
            levels.last().expect("validated").clone()
        }
    }
}

pub fn generate(config: &SyntheticConfig) -> Result<(AuditFrame, LatentTable)> {
    config.validate()?;
    let n = config.n_pre + config.n_post;
    let post_share = config.n_post as f64 / n as f64;
    let groups = config.group_offsets.len();

    let mut records = Vec::with_capacity(n);
    let mut latent = LatentTable {
        y0: Vec::with_capacity(n),
        y1: Vec::with_capacity(n),
        p_treat_used: Vec::with_capacity(n),
    };
    for i in 0..n {
        let mut rng = unit_rng(config.seed, i);
        let x = draw_x(&config.covariate_source, &mut rng);
        let d = u8::from(rng.random::<f64>() < post_share);
        let g = rng.random_range(0..groups);
        let risk = baseline_risk(&x);
        let y0 = u8::from(rng.random::<f64>() < risk);
        let y1 = u8::from(rng.random::<f64>() < risk / 2.0);
        let u_t: f64 = rng.random();

        let (t, y, p_used) = if d == 0 {
            (0, Some(y0), 0.0)
        } else {
            let p = treatment_score(&x, config.group_offsets[g]);
            let p_used = if y0 == 1 { p / config.gamma_true } else { p };
            (u8::from(u_t < p_used), None, p_used)
        };
        records.push(UnitRecord { x, d, t, y, g: g as u32 });
        latent.y0.push(y0);
        latent.y1.push(y1);
        latent.p_treat_used.push(p_used);
    }
    let dim = config.covariate_source.dim();
    Ok((AuditFrame::new(records, dim)?, latent))
}

/// Empirical `P(T=1 | Y(0)=1, D=1)` from the latent outcomes.
pub fn oracle_true_rate(frame: &AuditFrame, latent: &LatentTable) -> Result<f64> {
    if latent.y0.len() != frame.len() {
        return Err(AuditError::Config("latent table does not cover the frame".into()));
    }
    let (mut treated, mut needy) = (0usize, 0usize);
    for (r, &y0) in frame.records().iter().zip(&latent.y0) {
        if r.is_post() && y0 == 1 {
            needy += 1;
            treated += usize::from(r.t == 1);
        }
    }
    if needy == 0 {
        return Err(AuditError::NoNeedyUnits);
    }
    Ok(treated as f64 / needy as f64)
}

/// Exact `(μ, π, g)` at `x`. `group = None` averages the treatment model
/// over the uniformly drawn groups.
pub fn true_nuisance(config: &SyntheticConfig, x: &[f64], group: Option<usize>) -> (f64, f64, f64) {
    let mu = baseline_risk(x);
    let pi_for = |offset: f64| {
        let p = treatment_score(x, offset);
        p * (1.0 - mu) + p / config.gamma_true * mu
    };
    let pi = match group {
        Some(k) => pi_for(config.group_offsets[k]),
        None => {
            config.group_offsets.iter().map(|&o| pi_for(o)).sum::<f64>() / config.group_offsets.len() as f64
        }
    };
    (mu, pi, config.pre_share())
}

fn discrete_support(config: &SyntheticConfig) -> Result<(&[Vec<f64>], &[f64])> {
    match &config.covariate_source {
        CovariateSource::Discrete { levels, probs } => Ok((levels, probs)),
        CovariateSource::Gaussian2d { .. } => Err(AuditError::UnsupportedSource),
    }
}

/// Exact `P(Y=1, D=0)` (the same for every group since groups are drawn
/// independently of everything else).
pub fn population_c(config: &SyntheticConfig) -> Result<f64> {
    config.validate()?;
    let (levels, probs) = discrete_support(config)?;
    Ok(config.pre_share() * levels.iter().zip(probs).map(|(l, q)| q * baseline_risk(l)).sum::<f64>())
}

/// Exact nuisance values at every support point, with their probabilities.
pub fn population_points(
    config: &SyntheticConfig,
    group: Option<usize>,
) -> Result<Vec<(f64, NuisancePoint)>> {
    let c = population_c(config)?;
    let (levels, probs) = discrete_support(config)?;
    Ok(levels
        .iter()
        .zip(probs)
        .map(|(l, &q)| {
            let (mu, pi, g) = true_nuisance(config, l, group);
            (q, NuisancePoint { mu, pi, g, c })
        })
        .collect())
}

/// Population bounds from a weighted list of support points. The truth is
/// not identified from the points alone, so `true_rate` is left at `NaN`.
pub fn bounds_from_points(points: &[(f64, NuisancePoint)], gamma: f64) -> Result<OracleResult> {
    let gp = GammaParam::finite(gamma)?;
    let mut out = OracleResult {
        true_rate: f64::NAN,
        true_psi_l: 0.0,
        true_psi_u: 0.0,
        true_psi_l_gamma: 0.0,
        true_psi_u_gamma: 0.0,
        gamma,
    };
    for (q, p) in points {
        let (lo, up) = eval_terms(p, GammaParam::Infinite);
        out.true_psi_l += q * lo.selected_value();
        out.true_psi_u += q * up.selected_value();
        let (lo, up) = eval_terms(p, gp);
        out.true_psi_l_gamma += q * lo.selected_value();
        out.true_psi_u_gamma += q * up.selected_value();
    }
    Ok(out)
}

/// Exact population bounds and truth for a discrete source, pooled over
/// groups.
pub fn oracle_population_bounds(config: &SyntheticConfig, gamma: f64) -> Result<OracleResult> {
    oracle_population_bounds_for(config, None, gamma)
}

/// As [`oracle_population_bounds`], restricted to one group.
pub fn oracle_population_bounds_for(
    config: &SyntheticConfig,
    group: Option<usize>,
    gamma: f64,
) -> Result<OracleResult> {
    if let Some(k) = group {
        if k >= config.group_offsets.len() {
            return Err(AuditError::GroupNotFound(k as u32));
        }
    }
    let points = population_points(config, group)?;
    let mut out = bounds_from_points(&points, gamma)?;

    let (levels, probs) = discrete_support(config)?;
    let offsets: Vec<f64> = match group {
        Some(k) => vec![config.group_offsets[k]],
        None => config.group_offsets.clone(),
    };
    let (mut num, mut den) = (0.0, 0.0);
    for (l, q) in levels.iter().zip(probs) {
        let mu = baseline_risk(l);
        let p_needy = offsets.iter().map(|&o| treatment_score(l, o)).sum::<f64>()
            / offsets.len() as f64
            / config.gamma_true;
        num += q * mu * p_needy;
        den += q * mu;
    }
    out.true_rate = num / den;
    Ok(out)
}

/// Write the latent columns `y0,y1,p_treat_used`, one row per frame record.
pub fn write_latent(latent: &LatentTable, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["y0", "y1", "p_treat_used"])?;
    for i in 0..latent.y0.len() {
        w.write_record([
            latent.y0[i].to_string(),
            latent.y1[i].to_string(),
            format!("{:.6}", latent.p_treat_used[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}
