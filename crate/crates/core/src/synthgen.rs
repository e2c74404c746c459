//! Synthetic evaluation data: multivariate-normal "basic items" plus a
//! smaller sample of mean-shifted "intruders".

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{MatchError, Result};
use crate::stats::{anderson_darling_p, welch_t_p};

/// Scale the intruder shift is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftScale {
    /// Multiples of the covariate's standard deviation.
    #[default]
    Sd,
    /// Multiples of the covariate's variance.
    Variance,
}

/// How intruders are spread over the groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntruderPlacement {
    /// Group labels are shuffled over all items, independent of intruder
    /// status.
    #[default]
    Shuffled,
    /// All intruders go to the last group; the remaining labels are
    /// shuffled over the basic items.
    LastGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_items: usize,
    pub n_intruders: usize,
    pub n_covariates: usize,
    pub n_shifted_covariates: usize,
    #[serde(default = "default_labels")]
    pub group_labels: Vec<String>,
    #[serde(default = "default_split")]
    pub group_split: Vec<f64>,
    #[serde(default = "default_mean_range")]
    pub mean_range: [f64; 2],
    #[serde(default = "default_variance_factor_range")]
    pub variance_factor_range: [f64; 2],
    #[serde(default = "default_shift_range")]
    pub shift_range: [f64; 2],
    #[serde(default)]
    pub shift_scale: ShiftScale,
    #[serde(default = "default_eigenvalue_range")]
    pub eigenvalue_range: [f64; 2],
    #[serde(default)]
    pub placement: IntruderPlacement,
    /// Accepted range of the smallest between-group p-value over the basic
    /// items alone; `None` disables the check.
    #[serde(default = "default_basic_p")]
    pub basic_p_range: Option<[f64; 2]>,
    /// The smallest between-group p-value over all items must be below this.
    #[serde(default = "default_all_p")]
    pub all_p_below: Option<f64>,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
    pub seed: u64,
}

fn default_labels() -> Vec<String> {
    vec!["A".into(), "B".into()]
}
fn default_split() -> Vec<f64> {
    vec![0.5, 0.5]
}
fn default_mean_range() -> [f64; 2] {
    [1.0, 2.0]
}
fn default_variance_factor_range() -> [f64; 2] {
    [1.0, 10.0]
}
fn default_shift_range() -> [f64; 2] {
    [0.5, 1.0]
}
fn default_eigenvalue_range() -> [f64; 2] {
    [1.0, 10.0]
}
fn default_basic_p() -> Option<[f64; 2]> {
    Some([0.2, 0.5])
}
fn default_all_p() -> Option<f64> {
    Some(0.1)
}
fn default_max_attempts() -> usize {
    20_000
}

impl SyntheticSpec {
    /// Two equal groups with the default ranges and acceptance checks.
    pub fn new(
        n_items: usize,
        n_intruders: usize,
        n_covariates: usize,
        n_shifted_covariates: usize,
        seed: u64,
    ) -> Self {
        SyntheticSpec {
            n_items,
            n_intruders,
            n_covariates,
            n_shifted_covariates,
            group_labels: default_labels(),
            group_split: default_split(),
            mean_range: default_mean_range(),
            variance_factor_range: default_variance_factor_range(),
            shift_range: default_shift_range(),
            shift_scale: ShiftScale::Sd,
            eigenvalue_range: default_eigenvalue_range(),
            placement: IntruderPlacement::Shuffled,
            basic_p_range: default_basic_p(),
            all_p_below: default_all_p(),
            max_attempts: default_max_attempts(),
            seed,
        }
    }

    /// Drops the p-value acceptance checks.
    pub fn unchecked(mut self) -> Self {
        self.basic_p_range = None;
        self.all_p_below = None;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MatchError::InvalidSpec(m));
        if self.n_intruders >= self.n_items {
            return bad(format!(
                "n_intruders ({}) must be below n_items ({})",
                self.n_intruders, self.n_items
            ));
        }
        if self.n_covariates == 0 {
            return bad("n_covariates must be at least 1".into());
        }
        if self.n_shifted_covariates > self.n_covariates {
            return bad(format!(
                "n_shifted_covariates ({}) exceeds n_covariates ({})",
                self.n_shifted_covariates, self.n_covariates
            ));
        }
        if self.group_labels.len() < 2 || self.group_labels.len() != self.group_split.len() {
            return bad("need at least two groups and one split share per group".into());
        }
        let mut labels = self.group_labels.clone();
        labels.sort();
        labels.dedup();
        if labels.len() != self.group_labels.len() {
            return bad("group labels must be distinct".into());
        }
        let total: f64 = self.group_split.iter().sum();
        if self.group_split.iter().any(|&s| !(s > 0.0)) || (total - 1.0).abs() > 1e-9 {
            return bad("group_split shares must be positive and sum to 1".into());
        }
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        for (name, r, positive) in [
            ("mean_range", self.mean_range, true),
            ("variance_factor_range", self.variance_factor_range, true),
            ("shift_range", self.shift_range, false),
            ("eigenvalue_range", self.eigenvalue_range, true),
        ] {
            if !ordered(r) || r[0] < 0.0 || (positive && r[0] <= 0.0) {
                return bad(format!("{name} [{}, {}] is not a valid range", r[0], r[1]));
            }
        }
        if let Some([lo, hi]) = self.basic_p_range {
            if !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi) {
                return bad("basic_p_range must lie inside [0, 1]".into());
            }
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be at least 1".into());
        }
        let sizes = self.group_sizes();
        if sizes.iter().any(|&n| n < 2) {
            return bad(format!("every group needs at least 2 items, got {sizes:?}"));
        }
        if self.placement == IntruderPlacement::LastGroup
            && sizes[sizes.len() - 1] < self.n_intruders
        {
            return bad("the last group cannot hold all intruders".into());
        }
        Ok(())
    }

    /// Items per group, by largest remainder.
    pub fn group_sizes(&self) -> Vec<usize> {
        let n = self.n_items as f64;
        let raw: Vec<f64> = self.group_split.iter().map(|s| s * n).collect();
        let mut sizes: Vec<usize> = raw.iter().map(|x| x.floor() as usize).collect();
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = raw[a] - raw[a].floor();
            let fb = raw[b] - raw[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        let short = self.n_items - sizes.iter().sum::<usize>();
        for &g in order.iter().take(short) {
            sizes[g] += 1;
        }
        sizes
    }
}

/// Parameters a dataset was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub shifted: Vec<usize>,
    pub shifts: Vec<f64>,
    /// Attempts needed to pass the acceptance checks.
    pub attempts: usize,
    pub basic_p: f64,
    pub all_p: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// One flag per row of `dataset`.
    pub intruders: Vec<bool>,
    pub truth: GroundTruth,
}

/// Random symmetric positive-definite matrix `Q diag(λ) Qᵀ` with `λ` drawn
/// uniformly from `eigenvalue_range` and `Q` Haar-distributed.
pub fn random_pd_matrix(dim: usize, eigenvalue_range: [f64; 2], seed: u64) -> DMatrix<f64> {
    random_pd_matrix_with(dim, eigenvalue_range, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_pd_matrix_with<R: Rng + ?Sized>(
    dim: usize,
    eigenvalue_range: [f64; 2],
    rng: &mut R,
) -> DMatrix<f64> {
    let q = random_orthogonal(dim, rng);
    let lambda = DVector::from_fn(dim, |_, _| uniform(rng, eigenvalue_range));
    let m = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    // symmetrize away rounding
    (&m + m.transpose()) * 0.5
}

fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..range[1])
    }
}

/// `n` draws from `N(mean, cov)`, one per row.
pub fn sample_mvn(mean: &DVector<f64>, cov: &DMatrix<f64>, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    sample_mvn_with(mean, cov, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_mvn_with<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    n: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let k = mean.len();
    if cov.nrows() != k || cov.ncols() != k {
        return Err(MatchError::LinearAlgebra(format!(
            "covariance is {}x{}, mean has length {k}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| MatchError::LinearAlgebra("covariance is not positive definite".into()))?;
    let l = chol.l();
    let z = DMatrix::from_fn(k, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut x = (l * z).transpose();
    for mut row in x.row_iter_mut() {
        row += mean.transpose();
    }
    Ok(x)
}

/// Smallest p-value over every covariate of Welch's t (all group pairs)
/// and the k-sample Anderson–Darling test. Undefined tests count as 0.
pub fn min_between_group_p(d: &Dataset, rows: &[usize]) -> f64 {
    let g = d.n_groups();
    let mut min = 1.0f64;
    for k in 0..d.n_covariates() {
        let col = d.column(k);
        let mut samples: Vec<Vec<f64>> = vec![Vec::new(); g];
        for &i in rows {
            samples[d.group_of(i)].push(col[i]);
        }
        for a in 0..g {
            for b in a + 1..g {
                min = min.min(welch_t_p(&samples[a], &samples[b]).unwrap_or(0.0));
            }
        }
        let refs: Vec<&[f64]> = samples.iter().map(Vec::as_slice).collect();
        min = min.min(anderson_darling_p(&refs).unwrap_or(0.0));
    }
    min
}

/// Generates one dataset, regenerating until the p-value acceptance checks
/// pass or `max_attempts` is exhausted.
pub fn generate_dataset(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for attempt in 1..=spec.max_attempts {
        let mut out = draw_once(spec, &mut rng)?;
        let basic: Vec<usize> = (0..spec.n_items).filter(|&i| !out.intruders[i]).collect();
        let all: Vec<usize> = (0..spec.n_items).collect();
        let basic_p = min_between_group_p(&out.dataset, &basic);
        let all_p = min_between_group_p(&out.dataset, &all);
        let basic_ok = spec
            .basic_p_range
            .is_none_or(|[lo, hi]| (lo..=hi).contains(&basic_p));
        let all_ok = spec.all_p_below.is_none_or(|t| all_p < t);
        if basic_ok && all_ok {
            out.truth.attempts = attempt;
            out.truth.basic_p = basic_p;
            out.truth.all_p = all_p;
            return Ok(out);
        }
    }
    Err(MatchError::InvalidSpec(format!(
        "no dataset passed the p-value checks in {} attempts",
        spec.max_attempts
    )))
}

fn draw_once(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<SyntheticData> {
    let k = spec.n_covariates;
    let means: Vec<f64> = (0..k).map(|_| uniform(rng, spec.mean_range)).collect();
    let variances: Vec<f64> = means
        .iter()
        .map(|m| m * uniform(rng, spec.variance_factor_range))
        .collect();

    // Correlation structure from a random PD matrix, rescaled to the
    // target variances.
    let pd = random_pd_matrix_with(k, spec.eigenvalue_range, rng);
    let cov = DMatrix::from_fn(k, k, |i, j| {
        pd[(i, j)] / (pd[(i, i)] * pd[(j, j)]).sqrt() * (variances[i] * variances[j]).sqrt()
    });

    let mut shifted: Vec<usize> = (0..k).collect();
    shifted.shuffle(rng);
    shifted.truncate(spec.n_shifted_covariates);
    shifted.sort_unstable();
    let shifts: Vec<f64> = shifted
        .iter()
        .map(|&c| {
            let scale = match spec.shift_scale {
                ShiftScale::Sd => variances[c].sqrt(),
                ShiftScale::Variance => variances[c],
            };
            uniform(rng, spec.shift_range) * scale
        })
        .collect();
    let mut intruder_mean = DVector::from_vec(means.clone());
    for (&c, &s) in shifted.iter().zip(&shifts) {
        intruder_mean[c] += s;
    }

    let n_basic = spec.n_items - spec.n_intruders;
    let basic = sample_mvn_with(&DVector::from_vec(means.clone()), &cov, n_basic, rng)?;
    let intr = sample_mvn_with(&intruder_mean, &cov, spec.n_intruders, rng)?;

    // Row order is shuffled so intruders do not sit at the end.
    let mut order: Vec<usize> = (0..spec.n_items).collect();
    order.shuffle(rng);
    let is_intruder = |src: usize| src >= n_basic;

    let sizes = spec.group_sizes();
    let last = sizes.len() - 1;
    let mut labels = vec![0usize; spec.n_items];
    match spec.placement {
        IntruderPlacement::Shuffled => {
            let mut pool: Vec<usize> = sizes
                .iter()
                .enumerate()
                .flat_map(|(g, &n)| std::iter::repeat_n(g, n))
                .collect();
            pool.shuffle(rng);
            labels = pool;
        }
        IntruderPlacement::LastGroup => {
            let mut pool: Vec<usize> = sizes
                .iter()
                .enumerate()
                .flat_map(|(g, &n)| {
                    let n = if g == last { n - spec.n_intruders } else { n };
                    std::iter::repeat_n(g, n)
                })
                .collect();
            pool.shuffle(rng);
            let mut it = pool.into_iter();
            for (row, &src) in order.iter().enumerate() {
                labels[row] = if is_intruder(src) { last } else { it.next().expect("sized") };
            }
        }
    }

    let width = spec.n_items.to_string().len();
    let ids: Vec<String> = (0..spec.n_items)
        .map(|i| format!("item{:0width$}", i + 1))
        .collect();
    let row_labels: Vec<String> = labels
        .iter()
        .map(|&g| spec.group_labels[g].clone())
        .collect();
    let rows: Vec<Vec<f64>> = order
        .iter()
        .map(|&src| {
            let m = if is_intruder(src) { &intr } else { &basic };
            let r = if is_intruder(src) { src - n_basic } else { src };
            (0..k).map(|c| m[(r, c)]).collect()
        })
        .collect();
    let names: Vec<String> = (1..=k).map(|c| format!("x{c}")).collect();
    let dataset = Dataset::new(ids, row_labels, names, rows)?;
    let intruders = order.iter().map(|&src| is_intruder(src)).collect();
    Ok(SyntheticData {
        dataset,
        intruders,
        truth: GroundTruth {
            means,
            variances,
            shifted,
            shifts,
            attempts: 1,
            basic_p: f64::NAN,
            all_p: f64::NAN,
        },
    })
}

/// Writes the `id,intruder` sidecar (1 for intruders, 0 otherwise).
pub fn write_truth(d: &Dataset, intruders: &[bool], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| MatchError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut go = || -> std::io::Result<()> {
        writeln!(w, "id,intruder")?;
        for (i, &flag) in intruders.iter().enumerate() {
            writeln!(w, "{},{}", d.id(i), u8::from(flag))?;
        }
        w.flush()
    };
    go().map_err(|e| MatchError::io(path, e))
}

/// Reads a sidecar written by [`write_truth`], in the row order of `d`.
pub fn read_truth(d: &Dataset, path: impl AsRef<Path>) -> Result<Vec<bool>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| MatchError::Parse {
        row: 0,
        column: "intruder".into(),
        message: format!("{}: {e}", path.display()),
    })?;
    let mut flags = vec![None; d.len()];
    let index: std::collections::HashMap<&str, usize> =
        d.ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    for (n, rec) in rdr.records().enumerate() {
        let row = n + 2;
        let rec = rec.map_err(|e| MatchError::Parse {
            row,
            column: "intruder".into(),
            message: e.to_string(),
        })?;
        let (Some(id), Some(flag)) = (rec.get(0), rec.get(1)) else {
            return Err(MatchError::Parse {
                row,
                column: "intruder".into(),
                message: "expected two fields".into(),
            });
        };
        let Some(&i) = index.get(id) else {
            return Err(MatchError::Parse {
                row,
                column: "id".into(),
                message: format!("unknown id {id:?}"),
            });
        };
        flags[i] = Some(match flag.trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(MatchError::Parse {
                    row,
                    column: "intruder".into(),
                    message: format!("expected 0 or 1, got {other:?}"),
                })
            }
        });
    }
    flags
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            f.ok_or_else(|| MatchError::Parse {
                row: 0,
                column: "id".into(),
                message: format!("no truth entry for {}", d.id(i)),
            })
        })
        .collect()
}

/// Independent child seed for `(a, b)` under `master` (SplitMix64 mixing).
pub fn child_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut z = master
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `(covariates, shifted covariates)` combinations with 2 to 4 of each.
const SHAPES: [(usize, usize); 6] = [(2, 2), (3, 2), (3, 3), (4, 2), (4, 3), (4, 4)];

/// The 36 parameter sets of the full evaluation: 3 sizes (100, 150, 200
/// items) × 6 covariate shapes × 2 draws, 10 intruders each. Replicate `r`
/// of set `s` should use `child_seed(master, s, r)` as its seed.
pub fn full_grid(master: u64) -> Vec<SyntheticSpec> {
    grid(&[100, 150, 200], master)
}

/// The 12 parameter sets at 100 items used for quick checks.
pub fn desk_grid(master: u64) -> Vec<SyntheticSpec> {
    grid(&[100], master)
}

fn grid(sizes: &[usize], master: u64) -> Vec<SyntheticSpec> {
    let mut out = Vec::new();
    for &n in sizes {
        for &(k, shifted) in &SHAPES {
            for _ in 0..2 {
                let s = out.len() as u64;
                out.push(SyntheticSpec::new(n, 10, k, shifted, child_seed(master, s, 0)));
            }
        }
    }
    out
}

/// `spec` reseeded for replicate `rep` of parameter set `set`.
pub fn replicate(spec: &SyntheticSpec, master: u64, set: usize, rep: usize) -> SyntheticSpec {
    SyntheticSpec {
        seed: child_seed(master, set as u64, rep as u64 + 1),
        ..spec.clone()
    }
}
