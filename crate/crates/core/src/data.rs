//! Audit dataset: unit records, era/outcome invariants, group slicing and
//! era-stratified fold assignment.
//!
//! Pre-availability units (`d = 0`) are never treated and carry an observed
//! outcome; post-availability units (`d = 1`) carry a treatment flag but no
//! outcome. Both facts are checked when a frame is built.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

/// One observed unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub x: Vec<f64>,
    /// Era flag: 0 = pre-availability, 1 = post-availability.
    pub d: u8,
    pub t: u8,
    /// Outcome, present iff `d == 0`. 1 = adverse event.
    pub y: Option<u8>,
    pub g: u32,
}

impl UnitRecord {
    pub fn is_pre(&self) -> bool {
        self.d == 0
    }

    pub fn is_post(&self) -> bool {
        self.d == 1
    }

    /// Indicator 1[Y=1, D=0].
    pub fn needy_pre(&self) -> bool {
        self.d == 0 && self.y == Some(1)
    }

    fn check(&self, row: usize, dim: usize) -> Result<()> {
        let fail = |reason: &str| {
            Err(AuditError::Invariant {
                row,
                reason: reason.to_string(),
            })
        };
        if self.x.len() != dim {
            return fail(&format!("expected {dim} covariates, found {}", self.x.len()));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return fail("non-finite covariate");
        }
        if self.d > 1 || self.t > 1 || self.y.is_some_and(|y| y > 1) {
            return fail("d, t and y must be binary");
        }
        match (self.d, self.y) {
            (0, _) if self.t == 1 => fail("d=0 with t=1 (treatment unavailable pre-availability)"),
            (0, None) => fail("d=0 with missing y"),
            (1, Some(_)) => fail("d=1 with present y"),
            _ => Ok(()),
        }
    }
}

/// Validated, immutable collection of unit records.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditFrame {
    records: Vec<UnitRecord>,
    dim: usize,
    groups: BTreeSet<u32>,
}

impl AuditFrame {
    pub fn new(records: Vec<UnitRecord>, dim: usize) -> Result<Self> {
        for (row, r) in records.iter().enumerate() {
            r.check(row, dim)?;
        }
        if !records.iter().any(UnitRecord::needy_pre) {
            return Err(AuditError::EmptyStratum {
                context: "frame".into(),
            });
        }
        if !records.iter().any(UnitRecord::is_post) {
            return Err(AuditError::Invariant {
                row: records.len(),
                reason: "frame has no post-availability (d=1) record".into(),
            });
        }
        let groups = records.iter().map(|r| r.g).collect();
        Ok(Self {
            records,
            dim,
            groups,
        })
    }

    pub fn records(&self) -> &[UnitRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &BTreeSet<u32> {
        &self.groups
    }

    pub fn into_records(self) -> Vec<UnitRecord> {
        self.records
    }

    pub fn count_pre(&self) -> usize {
        self.records.iter().filter(|r| r.is_pre()).count()
    }

    pub fn count_post(&self) -> usize {
        self.records.iter().filter(|r| r.is_post()).count()
    }
}

/// Subframe containing only the records of group `g`, in file order.
pub fn slice_group(frame: &AuditFrame, g: u32) -> Result<AuditFrame> {
    if !frame.groups.contains(&g) {
        return Err(AuditError::GroupNotFound(g));
    }
    let records: Vec<UnitRecord> = frame.records.iter().filter(|r| r.g == g).cloned().collect();
    if !records.iter().any(UnitRecord::needy_pre) {
        return Err(AuditError::EmptyStratum {
            context: format!("group {g}"),
        });
    }
    if !records.iter().any(UnitRecord::is_post) {
        return Err(AuditError::Invariant {
            row: 0,
            reason: format!("group {g} has no post-availability record"),
        });
    }
    Ok(AuditFrame {
        records,
        dim: frame.dim,
        groups: BTreeSet::from([g]),
    })
}

/// Column mapping for delimited input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    /// Covariate columns in order. `None` picks every `x<N>` column, sorted by N.
    pub covariates: Option<Vec<String>>,
    pub d: String,
    pub t: String,
    pub y: String,
    pub g: String,
    pub delimiter: u8,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            covariates: None,
            d: "d".into(),
            t: "t".into(),
            y: "y".into(),
            g: "g".into(),
            delimiter: b',',
        }
    }
}

impl Schema {
    fn covariate_columns(&self, header: &csv::StringRecord) -> Result<Vec<String>> {
        if let Some(cols) = &self.covariates {
            return Ok(cols.clone());
        }
        let mut numbered: Vec<(u32, String)> = header
            .iter()
            .filter_map(|h| {
                let rest = h.strip_prefix('x')?;
                rest.parse::<u32>().ok().map(|n| (n, h.to_string()))
            })
            .collect();
        numbered.sort();
        if numbered.is_empty() {
            return Err(AuditError::Schema("no covariate columns x1..xD".into()));
        }
        Ok(numbered.into_iter().map(|(_, h)| h).collect())
    }
}

fn column(header: &csv::StringRecord, name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| AuditError::Schema(format!("missing column '{name}'")))
}

fn parse_binary(field: &str, name: &str, row: usize) -> Result<u8> {
    match field.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(AuditError::Schema(format!(
            "row {row}: column '{name}' must be 0 or 1, found '{other}'"
        ))),
    }
}

/// Covariate column names that [`load_frame`] would use for this file, in
/// order.
pub fn covariate_names(path: impl AsRef<Path>, schema: &Schema) -> Result<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    schema.covariate_columns(&header)
}

/// Read and validate a delimited table with a header row.
pub fn load_frame(path: impl AsRef<Path>, schema: &Schema) -> Result<AuditFrame> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let cov_cols = schema
        .covariate_columns(&header)?
        .iter()
        .map(|c| column(&header, c))
        .collect::<Result<Vec<_>>>()?;
    let (di, ti, yi, gi) = (
        column(&header, &schema.d)?,
        column(&header, &schema.t)?,
        column(&header, &schema.y)?,
        column(&header, &schema.g)?,
    );

    let mut records = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let x = cov_cols
            .iter()
            .map(|&c| {
                get(c).trim().parse::<f64>().map_err(|_| {
                    AuditError::Schema(format!(
                        "row {row}: covariate '{}' is not a number",
                        &header[c]
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let y = match get(yi).trim() {
            "" => None,
            s => Some(parse_binary(s, &schema.y, row)?),
        };
        let g = get(gi).trim().parse::<u32>().map_err(|_| {
            AuditError::Schema(format!("row {row}: group label must be a nonnegative integer"))
        })?;
        records.push(UnitRecord {
            x,
            d: parse_binary(get(di), &schema.d, row)?,
            t: parse_binary(get(ti), &schema.t, row)?,
            y,
            g,
        });
    }
    AuditFrame::new(records, cov_cols.len())
}

/// Write a frame in the format read by [`load_frame`] with the default schema.
pub fn write_frame(frame: &AuditFrame, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=frame.dim).map(|j| format!("x{j}")).collect();
    header.extend(["d", "t", "y", "g"].map(String::from));
    w.write_record(&header)?;
    for r in &frame.records {
        let mut row: Vec<String> = r.x.iter().map(|v| format!("{v}")).collect();
        row.push(r.d.to_string());
        row.push(r.t.to_string());
        row.push(r.y.map(|y| y.to_string()).unwrap_or_default());
        row.push(r.g.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Era-stratified assignment of records to cross-fitting folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn fold_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    /// Indices of the records in fold `k`, in frame order.
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == k)
            .collect()
    }

    /// Indices of the records outside fold `k`, in frame order.
    pub fn complement(&self, k: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != k)
            .collect()
    }
}

/// Assign records to `k` folds, separately shuffling each era with a seeded
/// ChaCha8 generator and dealing round-robin.
pub fn make_folds(frame: &AuditFrame, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(AuditError::Config(format!("fold count must be >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; frame.len()];
    for (era, name) in [(0u8, "pre-availability"), (1u8, "post-availability")] {
        let mut idx: Vec<usize> = (0..frame.len())
            .filter(|&i| frame.records[i].d == era)
            .collect();
        if idx.len() < k {
            return Err(AuditError::TooFewRecords {
                stratum: name,
                have: idx.len(),
                need: k,
            });
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            assignment[i] = pos % k;
        }
    }
    Ok(FoldAssignment {
        k,
        assignment,
        seed,
    })
}
