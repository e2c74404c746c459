//! Grouped covariate data and the keep/remove bookkeeping shared by every
//! search strategy.
//!
//! Group labels are stored in canonical (lexicographic) order; every
//! vector-valued output indexed by group follows that order.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{MatchError, Result};

/// Column mapping for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub id_column: String,
    pub group_column: String,
    pub covariates: Vec<String>,
    pub delimiter: u8,
}

impl Schema {
    pub fn new(
        id_column: impl Into<String>,
        group_column: impl Into<String>,
        covariates: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Schema {
            id_column: id_column.into(),
            group_column: group_column.into(),
            covariates: covariates.into_iter().map(Into::into).collect(),
            delimiter: b',',
        }
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }
}

/// `N` subjects, each with an id, a group label and `K` covariates.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    ids: Vec<String>,
    groups: Vec<usize>,
    group_labels: Vec<String>,
    group_members: Vec<Vec<usize>>,
    covariate_names: Vec<String>,
    /// Column-major: `columns[k][i]` is covariate `k` of subject `i`.
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    /// Builds and validates a dataset from row-major covariate values.
    pub fn new(
        ids: Vec<String>,
        group_labels_per_row: Vec<String>,
        covariate_names: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = ids.len();
        if group_labels_per_row.len() != n || rows.len() != n {
            return Err(MatchError::InvalidDataset(format!(
                "row count mismatch: {} ids, {} group labels, {} covariate rows",
                n,
                group_labels_per_row.len(),
                rows.len()
            )));
        }
        if n < 2 {
            return Err(MatchError::InvalidDataset(format!(
                "need at least 2 subjects, got {n}"
            )));
        }
        let k = covariate_names.len();
        if k == 0 {
            return Err(MatchError::InvalidDataset(
                "need at least one covariate".into(),
            ));
        }
        let mut seen_names = HashSet::new();
        for name in &covariate_names {
            if !seen_names.insert(name.as_str()) {
                return Err(MatchError::InvalidDataset(format!(
                    "duplicate covariate name `{name}`"
                )));
            }
        }

        let mut seen = HashSet::with_capacity(n);
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(MatchError::InvalidDataset(format!(
                    "duplicate subject id `{id}`"
                )));
            }
        }

        let labels: BTreeSet<&str> = group_labels_per_row.iter().map(String::as_str).collect();
        if labels.len() < 2 {
            return Err(MatchError::InvalidDataset(format!(
                "need at least 2 groups, got {}",
                labels.len()
            )));
        }
        let group_labels: Vec<String> = labels.into_iter().map(str::to_owned).collect();
        let label_index: HashMap<&str, usize> = group_labels
            .iter()
            .enumerate()
            .map(|(g, l)| (l.as_str(), g))
            .collect();

        let groups: Vec<usize> = group_labels_per_row
            .iter()
            .map(|l| label_index[l.as_str()])
            .collect();
        let mut group_members = vec![Vec::new(); group_labels.len()];
        for (i, &g) in groups.iter().enumerate() {
            group_members[g].push(i);
        }

        let mut columns = vec![Vec::with_capacity(n); k];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(MatchError::InvalidDataset(format!(
                    "subject `{}` has {} covariate values, expected {k}",
                    ids[i],
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(MatchError::InvalidDataset(format!(
                        "subject `{}` has non-finite value for `{}`",
                        ids[i], covariate_names[c]
                    )));
                }
                columns[c].push(v);
            }
        }

        Ok(Dataset {
            ids,
            groups,
            group_labels,
            group_members,
            covariate_names,
            columns,
        })
    }

    /// Parses CSV from any reader. Row numbers in errors are 1-based file
    /// lines, so the first data row is line 2.
    pub fn from_reader<R: Read>(reader: R, schema: &Schema) -> Result<Self> {
        if schema.covariates.is_empty() {
            return Err(MatchError::InvalidDataset(
                "schema names no covariate columns".into(),
            ));
        }
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(schema.delimiter)
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| MatchError::Parse {
                row: 1,
                column: String::new(),
                message: e.to_string(),
            })?
            .clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| MatchError::Parse {
                    row: 1,
                    column: name.to_owned(),
                    message: "column not found in header".into(),
                })
        };
        let id_col = find(&schema.id_column)?;
        let group_col = find(&schema.group_column)?;
        let cov_cols = schema
            .covariates
            .iter()
            .map(|c| find(c))
            .collect::<Result<Vec<_>>>()?;

        let mut ids = Vec::new();
        let mut groups = Vec::new();
        let mut rows = Vec::new();
        for (r, record) in rdr.records().enumerate() {
            let line = r + 2;
            let record = record.map_err(|e| MatchError::Parse {
                row: line,
                column: String::new(),
                message: e.to_string(),
            })?;
            let cell = |col: usize, name: &str| -> Result<String> {
                match record.get(col) {
                    Some(v) if !v.is_empty() => Ok(v.to_owned()),
                    _ => Err(MatchError::Parse {
                        row: line,
                        column: name.to_owned(),
                        message: "missing value".into(),
                    }),
                }
            };
            ids.push(cell(id_col, &schema.id_column)?);
            groups.push(cell(group_col, &schema.group_column)?);
            let mut row = Vec::with_capacity(cov_cols.len());
            for (&col, name) in cov_cols.iter().zip(&schema.covariates) {
                let raw = cell(col, name)?;
                let v: f64 = raw.parse().map_err(|_| MatchError::Parse {
                    row: line,
                    column: name.clone(),
                    message: format!("not a number: `{raw}`"),
                })?;
                if !v.is_finite() {
                    return Err(MatchError::Parse {
                        row: line,
                        column: name.clone(),
                        message: format!("non-finite value `{raw}`"),
                    });
                }
                row.push(v);
            }
            rows.push(row);
        }
        Dataset::new(ids, groups, schema.covariates.clone(), rows)
    }

    /// Writes the dataset as CSV with columns `id_column`, `group_column`,
    /// then the covariates in their stored order.
    pub fn to_writer<W: Write>(&self, writer: W, schema: &Schema) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(schema.delimiter)
            .from_writer(writer);
        let write_err = |e: csv::Error| MatchError::InvalidDataset(format!("csv write: {e}"));
        let mut header = vec![schema.id_column.clone(), schema.group_column.clone()];
        header.extend(self.covariate_names.iter().cloned());
        w.write_record(&header).map_err(write_err)?;
        for i in 0..self.len() {
            let mut rec = vec![self.ids[i].clone(), self.group_label_of(i).to_owned()];
            rec.extend(self.columns.iter().map(|col| format!("{}", col[i])));
            w.write_record(&rec).map_err(write_err)?;
        }
        w.flush()
            .map_err(|e| MatchError::InvalidDataset(format!("csv write: {e}")))?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.group_labels.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.columns.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    /// Group index of each subject, in canonical group order.
    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn group_of(&self, i: usize) -> usize {
        self.groups[i]
    }

    pub fn group_label_of(&self, i: usize) -> &str {
        &self.group_labels[self.groups[i]]
    }

    /// Labels in canonical (sorted) order.
    pub fn group_labels(&self) -> &[String] {
        &self.group_labels
    }

    pub fn group_index(&self, label: &str) -> Option<usize> {
        self.group_labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn members(&self, group: usize) -> &[usize] {
        &self.group_members[group]
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.group_members.iter().map(Vec::len).collect()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn covariate_index(&self, name: &str) -> Option<usize> {
        self.covariate_names.iter().position(|c| c == name)
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.columns[k][i]
    }
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| MatchError::io(path, e))?;
    Dataset::from_reader(std::io::BufReader::new(file), schema)
}

pub fn write_dataset(d: &Dataset, path: impl AsRef<Path>, schema: &Schema) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| MatchError::io(path, e))?;
    d.to_writer(std::io::BufWriter::new(file), schema)
}

/// Keep-indicators over a dataset plus per-group kept counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetState {
    keep: Vec<bool>,
    kept_per_group: Vec<usize>,
}

impl SubsetState {
    /// Everyone kept.
    pub fn full(d: &Dataset) -> Self {
        SubsetState {
            keep: vec![true; d.len()],
            kept_per_group: d.group_sizes(),
        }
    }

    pub fn from_keep(d: &Dataset, keep: Vec<bool>) -> Result<Self> {
        if keep.len() != d.len() {
            return Err(MatchError::InvalidDataset(format!(
                "keep vector has length {}, dataset has {} subjects",
                keep.len(),
                d.len()
            )));
        }
        let mut kept_per_group = vec![0; d.n_groups()];
        for (i, &k) in keep.iter().enumerate() {
            if k {
                kept_per_group[d.group_of(i)] += 1;
            }
        }
        Ok(SubsetState {
            keep,
            kept_per_group,
        })
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn is_kept(&self, i: usize) -> bool {
        self.keep[i]
    }

    pub fn kept_count(&self) -> usize {
        self.kept_per_group.iter().sum()
    }

    pub fn kept_per_group(&self) -> &[usize] {
        &self.kept_per_group
    }

    pub fn removed_count(&self) -> usize {
        self.keep.len() - self.kept_count()
    }

    pub fn kept_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.keep
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| k.then_some(i))
    }

    pub fn removed_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.keep
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| (!k).then_some(i))
    }

    /// Marks subject `i` removed; returns false if it already was.
    pub fn remove(&mut self, d: &Dataset, i: usize) -> bool {
        if !self.keep[i] {
            return false;
        }
        self.keep[i] = false;
        self.kept_per_group[d.group_of(i)] -= 1;
        true
    }

    pub fn restore(&mut self, d: &Dataset, i: usize) -> bool {
        if self.keep[i] {
            return false;
        }
        self.keep[i] = true;
        self.kept_per_group[d.group_of(i)] += 1;
        true
    }

    pub fn without(&self, d: &Dataset, removed: &[usize]) -> Self {
        let mut s = self.clone();
        for &i in removed {
            s.remove(d, i);
        }
        s
    }

    /// Every unlocked group keeps at least `min_group_size` members and every
    /// locked group keeps all of its members. `locked` is indexed by group.
    pub fn is_feasible(&self, d: &Dataset, locked: &[bool], min_group_size: usize) -> bool {
        self.kept_per_group
            .iter()
            .enumerate()
            .all(|(g, &kept)| {
                if locked.get(g).copied().unwrap_or(false) {
                    kept == d.members(g).len()
                } else {
                    kept >= min_group_size
                }
            })
    }

    /// Kept ids, sorted.
    pub fn kept_ids(&self, d: &Dataset) -> Vec<String> {
        let mut ids: Vec<String> = self.kept_indices().map(|i| d.id(i).to_owned()).collect();
        ids.sort();
        ids
    }
}

/// Share of kept subjects in each group, in canonical group order.
pub fn group_proportions(d: &Dataset, s: &SubsetState) -> Result<Vec<f64>> {
    if s.len() != d.len() {
        return Err(MatchError::Infeasible(format!(
            "subset has length {}, dataset has {}",
            s.len(),
            d.len()
        )));
    }
    if let Some(g) = s.kept_per_group().iter().position(|&c| c == 0) {
        return Err(MatchError::Infeasible(format!(
            "group `{}` has no kept members",
            d.group_labels()[g]
        )));
    }
    let total = s.kept_count() as f64;
    Ok(s.kept_per_group()
        .iter()
        .map(|&c| c as f64 / total)
        .collect())
}
