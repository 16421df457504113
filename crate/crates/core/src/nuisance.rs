//! Cross-fitted nuisance functions.
//!
//! For each fold `k` three logistic models are fitted on the records outside
//! fold `k`:
//!
//! * `mu`: outcome model `E[Y | D=0, X]`, trained on pre-availability rows;
//! * `pi`: treatment model `E[T | D=1, X]`, trained on post-availability rows;
//! * `g`: era model `P(D=0 | X)`, trained on all rows.
//!
//! together with the scalar `P(Y=1, D=0)` as a plain fraction over the same
//! complement. Units in fold `k` are then scored with the fold-`k` models.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{AuditFrame, FoldAssignment, UnitRecord};
use crate::error::{AuditError, Result};
use crate::logistic::{fit_logistic, BinaryPredictor, LogisticConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nuisance {
    Mu,
    Pi,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuisanceConfig {
    pub logistic: LogisticConfig,
    /// Scored probabilities are clipped into `[clip_delta, 1 - clip_delta]`.
    pub clip_delta: f64,
}

impl Default for NuisanceConfig {
    fn default() -> Self {
        Self {
            logistic: LogisticConfig::default(),
            clip_delta: 1e-3,
        }
    }
}

/// Models trained with fold `fold` held out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldNuisances {
    pub fold: usize,
    pub mu: BinaryPredictor,
    pub pi: BinaryPredictor,
    pub g: BinaryPredictor,
    pub p_y1d0: f64,
    /// Training-set sizes for mu, pi and g.
    pub n_train: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossFitNuisances {
    pub folds: Vec<FoldNuisances>,
    pub clip_delta: f64,
}

/// Nuisance values at one unit, plus the fold-level `P(Y=1, D=0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuisancePoint {
    pub mu: f64,
    pub pi: f64,
    pub g: f64,
    pub c: f64,
}

/// Per-unit nuisance values together with the evaluation fold of each unit.
///
/// Built either from fitted [`CrossFitNuisances`] or from known functions
/// (for oracle studies).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredUnits {
    points: Vec<NuisancePoint>,
    fold: Vec<usize>,
    k: usize,
}

impl ScoredUnits {
    pub fn new(points: Vec<NuisancePoint>, fold: Vec<usize>, k: usize) -> Result<Self> {
        if points.len() != fold.len() || fold.iter().any(|&f| f >= k) {
            return Err(AuditError::Config("inconsistent scored units".into()));
        }
        Ok(Self { points, fold, k })
    }

    /// Score every record with known nuisance functions in a single fold.
    pub fn from_fn(
        frame: &AuditFrame,
        c: f64,
        f: impl Fn(&UnitRecord) -> (f64, f64, f64),
    ) -> Self {
        let points = frame
            .records()
            .iter()
            .map(|r| {
                let (mu, pi, g) = f(r);
                NuisancePoint { mu, pi, g, c }
            })
            .collect::<Vec<_>>();
        let fold = vec![0; points.len()];
        Self { points, fold, k: 1 }
    }

    pub fn points(&self) -> &[NuisancePoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> NuisancePoint {
        self.points[i]
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.fold[i]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Unit indices grouped by evaluation fold, each in frame order.
    pub fn fold_members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &f) in self.fold.iter().enumerate() {
            out[f].push(i);
        }
        out
    }
}

fn clip(p: f64, delta: f64) -> f64 {
    p.clamp(delta, 1.0 - delta)
}

fn features<'a>(rs: &[&'a UnitRecord]) -> Vec<&'a [f64]> {
    rs.iter().map(|r| r.x.as_slice()).collect()
}

pub fn fit_nuisances(
    frame: &AuditFrame,
    folds: &FoldAssignment,
    config: &NuisanceConfig,
) -> Result<CrossFitNuisances> {
    if !(config.clip_delta > 0.0 && config.clip_delta < 0.5) {
        return Err(AuditError::Config(format!(
            "clip_delta must lie in (0, 0.5), got {}",
            config.clip_delta
        )));
    }
    if folds.assignment.len() != frame.len() {
        return Err(AuditError::Config("fold assignment does not match frame".into()));
    }
    let records = frame.records();
    let fitted = (0..folds.k)
        .map(|k| {
            let train = folds.complement(k);
            let pre: Vec<&UnitRecord> = train.iter().map(|&i| &records[i]).filter(|r| r.is_pre()).collect();
            let post: Vec<&UnitRecord> = train.iter().map(|&i| &records[i]).filter(|r| r.is_post()).collect();
            if pre.is_empty() {
                return Err(AuditError::EmptyTrainingStratum { fold: k, stratum: "pre-availability (d=0)" });
            }
            if post.is_empty() {
                return Err(AuditError::EmptyTrainingStratum { fold: k, stratum: "post-availability (d=1)" });
            }
            let needy = pre.iter().filter(|r| r.y == Some(1)).count();
            if needy == 0 {
                return Err(AuditError::EmptyTrainingStratum { fold: k, stratum: "(y=1, d=0)" });
            }

            let mu_labels: Vec<u8> = pre.iter().map(|r| r.y.unwrap_or(0)).collect();
            let pi_labels: Vec<u8> = post.iter().map(|r| r.t).collect();
            let all: Vec<&UnitRecord> = train.iter().map(|&i| &records[i]).collect();
            let g_labels: Vec<u8> = all.iter().map(|r| u8::from(r.is_pre())).collect();

            Ok(FoldNuisances {
                fold: k,
                mu: fit_logistic(&features(&pre), &mu_labels, &config.logistic)?,
                pi: fit_logistic(&features(&post), &pi_labels, &config.logistic)?,
                g: fit_logistic(&features(&all), &g_labels, &config.logistic)?,
                p_y1d0: needy as f64 / train.len() as f64,
                n_train: [pre.len(), post.len(), all.len()],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossFitNuisances {
        folds: fitted,
        clip_delta: config.clip_delta,
    })
}

impl CrossFitNuisances {
    /// Prediction of one nuisance from the models trained without `fold`,
    /// clipped into `[clip_delta, 1 - clip_delta]`.
    pub fn predict_clipped(&self, which: Nuisance, fold: usize, x: &[f64]) -> f64 {
        let f = &self.folds[fold];
        let model = match which {
            Nuisance::Mu => &f.mu,
            Nuisance::Pi => &f.pi,
            Nuisance::G => &f.g,
        };
        clip(model.predict(x), self.clip_delta)
    }

    /// Score each record with the models of its own fold.
    pub fn score(&self, frame: &AuditFrame, folds: &FoldAssignment) -> Result<ScoredUnits> {
        if folds.k != self.folds.len() || folds.assignment.len() != frame.len() {
            return Err(AuditError::Config("folds do not match fitted nuisances".into()));
        }
        let points = frame
            .records()
            .iter()
            .zip(&folds.assignment)
            .map(|(r, &k)| NuisancePoint {
                mu: self.predict_clipped(Nuisance::Mu, k, &r.x),
                pi: self.predict_clipped(Nuisance::Pi, k, &r.x),
                g: self.predict_clipped(Nuisance::G, k, &r.x),
                c: self.folds[k].p_y1d0,
            })
            .collect();
        ScoredUnits::new(points, folds.assignment.clone(), folds.k)
    }

    /// Fitted weights keyed by nuisance name and fold.
    pub fn weights_json(&self) -> serde_json::Value {
        let mut root = serde_json::Map::new();
        for (name, which) in [("mu", Nuisance::Mu), ("pi", Nuisance::Pi), ("g", Nuisance::G)] {
            let per_fold: serde_json::Map<String, serde_json::Value> = self
                .folds
                .iter()
                .map(|f| {
                    let m = match which {
                        Nuisance::Mu => &f.mu,
                        Nuisance::Pi => &f.pi,
                        Nuisance::G => &f.g,
                    };
                    (f.fold.to_string(), serde_json::to_value(m).unwrap_or_default())
                })
                .collect();
            root.insert(name.into(), per_fold.into());
        }
        let c: serde_json::Map<String, serde_json::Value> = self
            .folds
            .iter()
            .map(|f| (f.fold.to_string(), f.p_y1d0.into()))
            .collect();
        root.insert("p_y1d0".into(), c.into());
        root.insert("clip_delta".into(), self.clip_delta.into());
        root.into()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.weights_json())?;
        std::fs::write(path, text)?;
        Ok(())
    }
}
