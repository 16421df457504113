//! Confidence intervals, multi-group inequity reports and the γ′ benchmark.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bounds::{GammaParam, Side};
use crate::correction::{onestep_bound_with, per_term_estimates, BoundEstimate, Centering};
use crate::data::{make_folds, slice_group, AuditFrame, FoldAssignment};
use crate::error::{AuditError, Result};
use crate::logistic::{fit_logistic, BinaryPredictor};
use crate::nuisance::{fit_nuisances, NuisanceConfig, ScoredUnits};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMode {
    #[default]
    JointMinmax,
    PerTermUnion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub lower_point: f64,
    pub upper_point: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub level: f64,
    pub mode: CiMode,
}

impl IntervalEstimate {
    pub fn contains(&self, v: f64) -> bool {
        self.ci_lo <= v && v <= self.ci_hi
    }

    /// Strictly non-overlapping confidence intervals.
    pub fn disjoint(&self, other: &Self) -> bool {
        self.ci_hi < other.ci_lo || other.ci_hi < self.ci_lo
    }
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AuditError::Domain(format!("quantile level must lie in (0, 1), got {p}")));
    }
    Ok(Normal::standard().inverse_cdf(p))
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(AuditError::Domain(format!("level must lie in (0, 1), got {level}")))
    }
}

fn clip01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Joint interval `[ψ̂ˡ − z·σ̂ˡ/√n, ψ̂ᵘ + z·σ̂ᵘ/√n]` from the min/max
/// estimators, computed on unclipped estimates and clipped afterwards.
pub fn confidence_interval(lower: &BoundEstimate, upper: &BoundEstimate, level: f64) -> Result<IntervalEstimate> {
    check_level(level)?;
    if lower.side != Side::Lower || upper.side != Side::Upper {
        return Err(AuditError::Config("confidence_interval expects (lower, upper) estimates".into()));
    }
    let z = normal_quantile(1.0 - (1.0 - level) / 2.0)?;
    Ok(IntervalEstimate {
        lower_point: lower.psi_hat,
        upper_point: upper.psi_hat,
        ci_lo: clip01(lower.psi_hat_unclipped - z * lower.std_error()),
        ci_hi: clip01(upper.psi_hat_unclipped + z * upper.std_error()),
        level,
        mode: CiMode::JointMinmax,
    })
}

/// Union-bound interval over the separated per-term estimates: each of the
/// `J` terms per side gets a two-sided `1 − α/J` interval, so the combined
/// interval keeps level `1 − α`.
pub fn union_interval(lower_terms: &[BoundEstimate], upper_terms: &[BoundEstimate], level: f64) -> Result<IntervalEstimate> {
    check_level(level)?;
    if lower_terms.is_empty() || upper_terms.is_empty() {
        return Err(AuditError::Config("union interval needs at least one term per side".into()));
    }
    let j = lower_terms.len().max(upper_terms.len()) as f64;
    let z = normal_quantile(1.0 - (1.0 - level) / (2.0 * j))?;
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
    let min = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    Ok(IntervalEstimate {
        lower_point: clip01(max(&mut lower_terms.iter().map(|e| e.psi_hat_unclipped))),
        upper_point: clip01(min(&mut upper_terms.iter().map(|e| e.psi_hat_unclipped))),
        ci_lo: clip01(max(&mut lower_terms.iter().map(|e| e.psi_hat_unclipped - z * e.std_error()))),
        ci_hi: clip01(min(&mut upper_terms.iter().map(|e| e.psi_hat_unclipped + z * e.std_error()))),
        level,
        mode: CiMode::PerTermUnion,
    })
}

/// Interval at one γ from already-scored units.
pub fn interval_at(
    frame: &AuditFrame,
    scored: &ScoredUnits,
    gamma: GammaParam,
    level: f64,
    mode: CiMode,
    centering: Centering,
) -> Result<IntervalEstimate> {
    match mode {
        CiMode::JointMinmax => {
            let lo = onestep_bound_with(frame, scored, Side::Lower, gamma, centering)?;
            let up = onestep_bound_with(frame, scored, Side::Upper, gamma, centering)?;
            confidence_interval(&lo, &up, level)
        }
        CiMode::PerTermUnion => {
            let lo = per_term_estimates(frame, scored, Side::Lower, gamma)?;
            let up = per_term_estimates(frame, scored, Side::Upper, gamma)?;
            union_interval(&lo, &up, level)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub folds: usize,
    pub seed: u64,
    pub nuisance: NuisanceConfig,
    pub level: f64,
    pub mode: CiMode,
    pub centering: Centering,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            nuisance: NuisanceConfig::default(),
            level: 0.95,
            mode: CiMode::JointMinmax,
            centering: Centering::Selected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub gamma: f64,
    pub interval: IntervalEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCurve {
    pub group: u32,
    pub n: usize,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFailure {
    pub group: u32,
    pub error: String,
    pub data_error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub a: u32,
    pub b: u32,
    /// Overlap flag at each grid point.
    pub overlap: Vec<bool>,
    pub gamma_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequityReport {
    pub level: f64,
    pub mode: CiMode,
    pub gamma_grid: Vec<f64>,
    pub curves: Vec<GroupCurve>,
    pub failures: Vec<GroupFailure>,
    pub pairwise: Vec<PairVerdict>,
}

/// `min, min+step, …` up to `max` inclusive (with a small tolerance).
pub fn gamma_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min >= 1.0 && max >= min && step > 0.0 && min.is_finite() && max.is_finite()) {
        return Err(AuditError::Config(format!("invalid gamma grid {min}..{max} step {step}")));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize;
    // Rounded so that e.g. 1.0 + 7·0.01 prints and compares as 1.07.
    Ok((0..=count).map(|i| ((min + i as f64 * step) * 1e9).round() / 1e9).collect())
}

fn audit_one(frame: &AuditFrame, group: u32, grid: &[f64], config: &AuditConfig) -> Result<GroupCurve> {
    let slice = slice_group(frame, group)?;
    let folds = make_folds(&slice, config.folds, config.seed)?;
    let nuis = fit_nuisances(&slice, &folds, &config.nuisance)?;
    let scored = nuis.score(&slice, &folds)?;
    let points = grid
        .iter()
        .map(|&g| {
            let interval = interval_at(&slice, &scored, GammaParam::finite(g)?, config.level, config.mode, config.centering)?;
            Ok(CurvePoint { gamma: g, interval })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupCurve { group, n: slice.len(), points })
}

/// Audit each group separately over the γ grid. A group that fails is
/// listed under `failures`; the remaining groups are still reported.
pub fn audit_groups(frame: &AuditFrame, groups: &[u32], grid: &[f64], config: &AuditConfig) -> Result<InequityReport> {
    check_level(config.level)?;
    if grid.is_empty() || grid.iter().any(|g| !(*g >= 1.0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AuditError::Config("gamma grid must be non-empty, ascending and >= 1".into()));
    }
    let mut curves = Vec::new();
    let mut failures = Vec::new();
    for &g in groups {
        match audit_one(frame, g, grid, config) {
            Ok(c) => curves.push(c),
            Err(e) => failures.push(GroupFailure { group: g, data_error: e.is_data_error(), error: e.to_string() }),
        }
    }
    let mut pairwise = Vec::new();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let (a, b) = (&curves[i], &curves[j]);
            let overlap: Vec<bool> = a
                .points
                .iter()
                .zip(&b.points)
                .map(|(p, q)| !p.interval.disjoint(&q.interval))
                .collect();
            pairwise.push(PairVerdict { a: a.group, b: b.group, gamma_star: star(grid, &overlap), overlap });
        }
    }
    Ok(InequityReport {
        level: config.level,
        mode: config.mode,
        gamma_grid: grid.to_vec(),
        curves,
        failures,
        pairwise,
    })
}

fn star(grid: &[f64], overlap: &[bool]) -> Option<f64> {
    let prefix = overlap.iter().take_while(|o| !**o).count();
    (prefix > 0).then(|| grid[prefix - 1])
}

/// Largest grid γ such that the two groups' intervals are disjoint at every
/// grid point up to and including γ.
pub fn gamma_threshold(report: &InequityReport, g: u32, g_prime: u32) -> Result<Option<f64>> {
    report
        .pairwise
        .iter()
        .find(|p| (p.a, p.b) == (g, g_prime) || (p.a, p.b) == (g_prime, g))
        .map(|p| star(&report.gamma_grid, &p.overlap))
        .ok_or(AuditError::PairNotFound(g, g_prime))
}

impl InequityReport {
    pub fn overlap(&self, g: u32, g_prime: u32, grid_index: usize) -> Result<bool> {
        self.pairwise
            .iter()
            .find(|p| (p.a, p.b) == (g, g_prime) || (p.a, p.b) == (g_prime, g))
            .and_then(|p| p.overlap.get(grid_index).copied())
            .ok_or(AuditError::PairNotFound(g, g_prime))
    }

    /// Long format: `group,gamma,lower,upper,ci_lo,ci_hi`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["group", "gamma", "lower", "upper", "ci_lo", "ci_hi"])?;
        for c in &self.curves {
            for p in &c.points {
                let i = &p.interval;
                w.write_record([
                    c.group.to_string(),
                    format!("{:.6}", p.gamma),
                    format!("{:.6}", i.lower_point),
                    format!("{:.6}", i.upper_point),
                    format!("{:.6}", i.ci_lo),
                    format!("{:.6}", i.ci_hi),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub nuisance: NuisanceConfig,
    /// Use this quantile of the per-row ratios instead of their maximum.
    pub quantile: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityBenchmark {
    pub gamma_prime: f64,
    pub covariate_index: usize,
    pub n_eval: usize,
}

/// `max(r, 1/r)` with `r = P̂(T=1 | Z=0, x) / P̂(T=1 | Z=1, x)`, predictions
/// clipped into `[delta, 1 − delta]`.
pub fn counterfactual_ratio(model: &BinaryPredictor, x: &[f64], z_index: usize, delta: f64) -> f64 {
    let mut x = x.to_vec();
    x[z_index] = 0.0;
    let p0 = model.predict(&x).clamp(delta, 1.0 - delta);
    x[z_index] = 1.0;
    let p1 = model.predict(&x).clamp(delta, 1.0 - delta);
    let r = p0 / p1;
    r.max(1.0 / r)
}

/// Analogue of γ for an observed binary covariate `Z`: the largest ratio
/// between predicted treatment probabilities with `Z` forced to 0 and to 1,
/// over post-availability rows scored out of fold.
pub fn benchmark_gamma_prime(
    frame: &AuditFrame,
    z_index: usize,
    folds: &FoldAssignment,
    config: &BenchmarkConfig,
) -> Result<SensitivityBenchmark> {
    if z_index >= frame.dim() {
        return Err(AuditError::Config(format!("covariate index {z_index} out of range")));
    }
    if folds.assignment.len() != frame.len() {
        return Err(AuditError::Config("fold assignment does not match frame".into()));
    }
    if let Some(q) = config.quantile {
        if !(q > 0.0 && q <= 1.0) {
            return Err(AuditError::Config(format!("quantile must lie in (0, 1], got {q}")));
        }
    }
    let records = frame.records();
    if records.iter().filter(|r| r.is_post()).any(|r| r.x[z_index] != 0.0 && r.x[z_index] != 1.0) {
        return Err(AuditError::NonBinaryCovariate { index: z_index });
    }
    let delta = config.nuisance.clip_delta;
    let mut ratios = Vec::new();
    for k in 0..folds.k {
        let train: Vec<usize> = folds.complement(k).into_iter().filter(|&i| records[i].is_post()).collect();
        let eval: Vec<usize> = folds.members(k).into_iter().filter(|&i| records[i].is_post()).collect();
        if eval.is_empty() {
            continue;
        }
        if train.is_empty() {
            return Err(AuditError::EmptyTrainingStratum { fold: k, stratum: "post-availability (d=1)" });
        }
        let xs: Vec<&[f64]> = train.iter().map(|&i| records[i].x.as_slice()).collect();
        let ts: Vec<u8> = train.iter().map(|&i| records[i].t).collect();
        let model = fit_logistic(&xs, &ts, &config.nuisance.logistic)?;
        ratios.extend(eval.iter().map(|&i| counterfactual_ratio(&model, &records[i].x, z_index, delta)));
    }
    if ratios.is_empty() {
        return Err(AuditError::Config("no post-availability rows to evaluate".into()));
    }
    let gamma_prime = match config.quantile {
        None => ratios.iter().copied().fold(1.0, f64::max),
        Some(q) => {
            ratios.sort_by(f64::total_cmp);
            let idx = ((q * ratios.len() as f64).ceil() as usize).clamp(1, ratios.len()) - 1;
            ratios[idx]
        }
    };
    Ok(SensitivityBenchmark { gamma_prime, covariate_index: z_index, n_eval: ratios.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{TermId, TermIndex};
    use crate::correction::PhiValue;
    use crate::data::UnitRecord;
    use proptest::prelude::*;

    fn est(side: Side, psi: f64, sigma: f64, n: usize) -> BoundEstimate {
        BoundEstimate {
            side,
            gamma: None,
            psi_hat: psi.clamp(0.0, 1.0),
            psi_hat_unclipped: psi,
            sigma_hat: sigma,
            n,
            phi_values: Vec::<PhiValue>::new(),
        }
    }

    /// Φ via its Taylor series, then bisection; independent of statrs.
    fn reference_quantile(p: f64) -> f64 {
        fn cdf(x: f64) -> f64 {
            let mut term = x;
            let mut sum = x;
            for k in 1..200 {
                term *= -x * x / 2.0 / k as f64;
                sum += term / (2 * k + 1) as f64;
            }
            0.5 + sum / (2.0 * std::f64::consts::PI).sqrt()
        }
        let (mut lo, mut hi) = (-8.0, 8.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantiles_match_reference() {
        assert!((normal_quantile(0.975).unwrap() - 1.959964).abs() < 1e-6);
        assert!((normal_quantile(0.9875).unwrap() - 2.241403).abs() < 1e-6);
        for p in [0.9, 0.975, 0.9875, 0.99, 0.995] {
            assert!((normal_quantile(p).unwrap() - reference_quantile(p)).abs() < 1e-9);
        }
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn zero_variance_gives_point_interval() {
        let iv = confidence_interval(&est(Side::Lower, 0.2, 0.0, 100), &est(Side::Upper, 0.6, 0.0, 100), 0.95).unwrap();
        assert_eq!((iv.ci_lo, iv.ci_hi), (0.2, 0.6));
    }

    #[test]
    fn joint_interval_width() {
        let iv = confidence_interval(&est(Side::Lower, 0.3, 1.0, 400), &est(Side::Upper, 0.5, 2.0, 400), 0.95).unwrap();
        assert!((iv.ci_lo - (0.3 - 1.959964 / 20.0)).abs() < 1e-6);
        assert!((iv.ci_hi - (0.5 + 2.0 * 1.959964 / 20.0)).abs() < 1e-6);
        assert!(confidence_interval(&est(Side::Lower, 0.3, 1.0, 4), &est(Side::Upper, 0.5, 1.0, 4), 1.5).is_err());
    }

    #[test]
    fn union_interval_uses_split_alpha() {
        let lo = [est(Side::Lower, 0.1, 1.0, 100), est(Side::Lower, 0.0, 0.0, 100)];
        let up = [est(Side::Upper, 0.7, 1.0, 100), est(Side::Upper, 1.0, 0.0, 100)];
        let iv = union_interval(&lo, &up, 0.95).unwrap();
        // max(0.1 − z′·0.1, 0 − 0) with z′ = 2.241403.
        assert_eq!(iv.ci_lo, 0.0);
        assert!((iv.ci_hi - (0.7 + 0.2241403)).abs() < 1e-6);
        assert_eq!(iv.lower_point, 0.1);
        assert_eq!(iv.upper_point, 0.7);
    }

    fn point(lo: f64, hi: f64) -> IntervalEstimate {
        IntervalEstimate { lower_point: lo, upper_point: hi, ci_lo: lo, ci_hi: hi, level: 0.95, mode: CiMode::JointMinmax }
    }

    fn report(overlap: Vec<bool>, grid: Vec<f64>) -> InequityReport {
        InequityReport {
            level: 0.95,
            mode: CiMode::JointMinmax,
            pairwise: vec![PairVerdict { a: 0, b: 1, gamma_star: star(&grid, &overlap), overlap }],
            gamma_grid: grid,
            curves: vec![],
            failures: vec![],
        }
    }

    #[test]
    fn threshold_on_constructed_reports() {
        let grid: Vec<f64> = (0..=20).map(|i| 1.0 + 0.05 * i as f64).collect();
        let overlap: Vec<bool> = grid.iter().map(|g| *g > 1.1 + 1e-9).collect();
        let r = report(overlap, grid.clone());
        assert_eq!(gamma_threshold(&r, 0, 1).unwrap(), Some(grid[2]));
        assert_eq!(gamma_threshold(&r, 1, 0).unwrap(), Some(grid[2]));
        let r = report(vec![true; grid.len()], grid);
        assert_eq!(gamma_threshold(&r, 0, 1).unwrap(), None);
        assert!(matches!(gamma_threshold(&r, 0, 7), Err(AuditError::PairNotFound(0, 7))));
    }

    #[test]
    fn disjointness_is_strict_and_symmetric() {
        let (a, b) = (point(0.1, 0.3), point(0.3, 0.5));
        assert!(!a.disjoint(&b) && !b.disjoint(&a));
        let c = point(0.31, 0.5);
        assert!(a.disjoint(&c) && c.disjoint(&a));
    }

    #[test]
    fn grid_construction() {
        let g = gamma_grid(1.0, 1.5, 0.01).unwrap();
        assert_eq!(g.len(), 51);
        assert_eq!(g[50], 1.5);
        assert_eq!(g[7], 1.07);
        assert_eq!(gamma_grid(1.0, 1.0, 0.01).unwrap(), vec![1.0]);
        assert!(gamma_grid(0.5, 1.0, 0.1).is_err());
    }

    fn z_frame(beta: f64, n: usize, seed: u64) -> AuditFrame {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut recs = Vec::new();
        for i in 0..n {
            let x0: f64 = rng.random_range(-1.0..1.0);
            let z = f64::from(u8::from(rng.random::<bool>()));
            if i % 10 == 0 {
                recs.push(UnitRecord { x: vec![x0, z], d: 0, t: 0, y: Some(1), g: 0 });
            } else {
                let p = crate::logistic::sigmoid(-0.5 + x0 + beta * z);
                recs.push(UnitRecord { x: vec![x0, z], d: 1, t: u8::from(rng.random::<f64>() < p), y: None, g: 0 });
            }
        }
        AuditFrame::new(recs, 2).unwrap()
    }

    #[test]
    fn zero_coefficient_gives_unit_ratio() {
        let model = BinaryPredictor {
            weights: vec![-0.3, 1.2, 0.0],
            fit_meta: crate::logistic::FitMeta { iterations: 0, objective: 0.0, converged: true },
        };
        for x0 in [-1.0, 0.0, 2.0] {
            assert_eq!(counterfactual_ratio(&model, &[x0, 1.0], 1, 1e-3), 1.0);
        }
        let tilted = BinaryPredictor { weights: vec![-0.3, 1.2, 0.5], ..model };
        assert!(counterfactual_ratio(&tilted, &[0.0, 0.0], 1, 1e-3) < 0.5f64.exp());
    }

    #[test]
    fn benchmark_rejects_non_binary_z() {
        let frame = z_frame(0.0, 200, 1);
        let folds = make_folds(&frame, 2, 0).unwrap();
        let err = benchmark_gamma_prime(&frame, 0, &folds, &BenchmarkConfig::default()).unwrap_err();
        assert!(matches!(err, AuditError::NonBinaryCovariate { index: 0 }));
    }

    #[test]
    fn benchmark_is_at_least_one_and_relabel_invariant() {
        let frame = z_frame(0.8, 2000, 2);
        let folds = make_folds(&frame, 3, 0).unwrap();
        let cfg = BenchmarkConfig::default();
        let a = benchmark_gamma_prime(&frame, 1, &folds, &cfg).unwrap();
        let flipped: Vec<UnitRecord> = frame
            .records()
            .iter()
            .map(|r| UnitRecord { x: vec![r.x[0], 1.0 - r.x[1]], ..r.clone() })
            .collect();
        let flipped = AuditFrame::new(flipped, 2).unwrap();
        let b = benchmark_gamma_prime(&flipped, 1, &folds, &cfg).unwrap();
        assert!(a.gamma_prime >= 1.0);
        assert!((a.gamma_prime - b.gamma_prime).abs() < 1e-6, "{} vs {}", a.gamma_prime, b.gamma_prime);
        assert_eq!(a.n_eval, frame.count_post());
        let q = benchmark_gamma_prime(&frame, 1, &folds, &BenchmarkConfig { quantile: Some(0.5), ..cfg }).unwrap();
        assert!(q.gamma_prime <= a.gamma_prime);
    }

    proptest! {
        #[test]
        fn interval_invariants(l in -0.2..1.2f64, w in 0.0..0.5f64, sl in 0.0..3.0f64, su in 0.0..3.0f64, level in 0.5..0.999f64) {
            let iv = confidence_interval(&est(Side::Lower, l, sl, 500), &est(Side::Upper, l + w, su, 500), level).unwrap();
            prop_assert!(iv.ci_lo <= iv.lower_point && iv.lower_point <= iv.upper_point && iv.upper_point <= iv.ci_hi);
            prop_assert!((0.0..=1.0).contains(&iv.ci_lo) && (0.0..=1.0).contains(&iv.ci_hi));
        }

        #[test]
        fn union_interval_invariants(a in 0.0..0.5f64, b in 0.0..0.5f64, c in 0.5..1.0f64, s in 0.0..2.0f64) {
            let lo = [est(Side::Lower, a, s, 300), est(Side::Lower, b, s, 300)];
            let up = [est(Side::Upper, c, s, 300), est(Side::Upper, 1.0, 0.0, 300)];
            let iv = union_interval(&lo, &up, 0.95).unwrap();
            prop_assert!(iv.ci_lo <= iv.lower_point && iv.lower_point <= iv.upper_point && iv.upper_point <= iv.ci_hi);
        }

        #[test]
        fn threshold_is_prefix_maximum(flags in proptest::collection::vec(any::<bool>(), 1..30)) {
            let grid: Vec<f64> = (0..flags.len()).map(|i| 1.0 + 0.01 * i as f64).collect();
            let r = report(flags.clone(), grid.clone());
            let got = gamma_threshold(&r, 0, 1).unwrap();
            match got {
                None => prop_assert!(flags[0]),
                Some(g) => {
                    let idx = grid.iter().position(|v| *v == g).unwrap();
                    prop_assert!(flags[..=idx].iter().all(|o| !o));
                    prop_assert!(idx + 1 == flags.len() || flags[idx + 1]);
                }
            }
        }
    }

    #[test]
    fn term_ids_are_used_for_union_count() {
        // Without a finite γ each side combines two terms.
        let ids = crate::bounds::term_ids(Side::Upper, GammaParam::Infinite);
        assert_eq!(ids, vec![TermId::new(Side::Upper, TermIndex::One), TermId::new(Side::Upper, TermIndex::Two)]);
    }
}
