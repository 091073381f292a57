//! Datasets, CSV ingestion, synthetic data and stratified minibatches.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{PaucError, Result};
use crate::metrics::selection_count;

/// Binary-labelled feature matrix. Row `i` carries the stable id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dims: usize,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    pos_ids: Vec<usize>,
    neg_ids: Vec<usize>,
    prior_p: f64,
}

impl Dataset {
    /// Builds a dataset from a row-major `n × dims` feature buffer.
    pub fn new(features: Vec<f64>, dims: usize, labels: Vec<u8>) -> Result<Self> {
        if dims == 0 {
            return Err(PaucError::invalid("feature dimension must be positive"));
        }
        if features.len() != labels.len() * dims {
            return Err(PaucError::DimensionMismatch {
                expected: labels.len() * dims,
                got: features.len(),
            });
        }
        let mut pos_ids = Vec::new();
        let mut neg_ids = Vec::new();
        for (i, &y) in labels.iter().enumerate() {
            match y {
                1 => pos_ids.push(i),
                0 => neg_ids.push(i),
                other => {
                    return Err(PaucError::LabelOutOfRange {
                        row: i,
                        value: other.to_string(),
                    })
                }
            }
        }
        if pos_ids.is_empty() || neg_ids.is_empty() {
            return Err(PaucError::SingleClass {
                n_pos: pos_ids.len(),
                n_neg: neg_ids.len(),
            });
        }
        let prior_p = pos_ids.len() as f64 / labels.len() as f64;
        let feature_names = (0..dims).map(|j| format!("x{j}")).collect();
        Ok(Self {
            features,
            dims,
            labels,
            feature_names,
            pos_ids,
            neg_ids,
            prior_p,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dims {
            return Err(PaucError::DimensionMismatch {
                expected: self.dims,
                got: names.len(),
            });
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn n_pos(&self) -> usize {
        self.pos_ids.len()
    }

    pub fn n_neg(&self) -> usize {
        self.neg_ids.len()
    }

    /// Empirical positive fraction `n_pos / n`.
    pub fn prior_p(&self) -> f64 {
        self.prior_p
    }

    pub fn row(&self, id: usize) -> &[f64] {
        &self.features[id * self.dims..(id + 1) * self.dims]
    }

    pub fn label(&self, id: usize) -> u8 {
        self.labels[id]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn pos_ids(&self) -> &[usize] {
        &self.pos_ids
    }

    pub fn neg_ids(&self) -> &[usize] {
        &self.neg_ids
    }

    /// All ids, positives and negatives, as a single minibatch.
    pub fn full_batch(&self) -> Minibatch {
        Minibatch {
            pos_ids: self.pos_ids.clone(),
            neg_ids: self.neg_ids.clone(),
        }
    }

    /// New dataset made of the given rows, re-numbered `0..ids.len()`.
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(ids.len() * self.dims);
        let mut labels = Vec::with_capacity(ids.len());
        for &id in ids {
            if id >= self.len() {
                return Err(PaucError::invalid(format!("row id {id} out of range")));
            }
            features.extend_from_slice(self.row(id));
            labels.push(self.labels[id]);
        }
        Dataset::new(features, self.dims, labels)?.with_feature_names(self.feature_names.clone())
    }

    /// Writes the dataset as CSV with the feature columns followed by `label_column`.
    pub fn write_csv<W: Write>(&self, writer: W, label_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(label_column);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.dims + 1);
        for id in 0..self.len() {
            record.clear();
            record.extend(self.row(id).iter().map(|v| v.to_string()));
            record.push(self.labels[id].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Loads a comma-separated file with a header row.
///
/// Every column other than `label_column` is a feature. Rows in errors are
/// reported as 1-based file lines (the header is line 1).
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let file = File::open(path.as_ref())?;
    read_csv(file, label_column)
}

pub fn read_csv<R: Read>(reader: R, label_column: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| PaucError::MissingLabelColumn(label_column.to_string()))?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();
    let dims = names.len();
    if dims == 0 {
        return Err(PaucError::invalid("csv has no feature columns"));
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let line = k + 2;
        if record.len() != headers.len() {
            return Err(PaucError::DimensionMismatch {
                expected: headers.len(),
                got: record.len(),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let value: Option<f64> = cell.parse().ok().filter(|v: &f64| v.is_finite());
            if j == label_idx {
                match value {
                    Some(v) if v == 0.0 => labels.push(0),
                    Some(v) if v == 1.0 => labels.push(1),
                    _ => {
                        return Err(PaucError::LabelOutOfRange {
                            row: line,
                            value: cell.to_string(),
                        })
                    }
                }
            } else {
                let v = value.ok_or_else(|| PaucError::Parse {
                    row: line,
                    column: headers[j].trim().to_string(),
                    value: cell.to_string(),
                })?;
                features.push(v);
            }
        }
    }
    Dataset::new(features, dims, labels)?.with_feature_names(names)
}

/// Two Gaussian classes with identity covariance and means `±separation/2 · 1`.
///
/// `round(n · imbalance)` rows are positive; labels are shuffled so classes
/// interleave. The output is a pure function of the arguments.
pub fn generate_synthetic(
    n: usize,
    imbalance: f64,
    dims: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if n < 4 {
        return Err(PaucError::invalid(format!("n must be at least 4, got {n}")));
    }
    if !(imbalance > 0.0 && imbalance < 1.0) {
        return Err(PaucError::invalid(format!(
            "imbalance must lie in (0,1), got {imbalance}"
        )));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(PaucError::invalid(format!(
            "separation must be finite and non-negative, got {separation}"
        )));
    }
    if dims == 0 {
        return Err(PaucError::invalid("dims must be positive"));
    }
    let n_pos = (n as f64 * imbalance).round() as usize;
    if n_pos == 0 || n_pos == n {
        return Err(PaucError::SingleClass {
            n_pos,
            n_neg: n - n_pos,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n_pos)).collect();
    labels.shuffle(&mut rng);

    let half = separation / 2.0;
    let mut features = Vec::with_capacity(n * dims);
    for &y in &labels {
        let mean = if y == 1 { half } else { -half };
        for _ in 0..dims {
            let z: f64 = rng.sample(StandardNormal);
            features.push(mean + z);
        }
    }
    Dataset::new(features, dims, labels)
}

/// Ids drawn for one stochastic step, split by class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Minibatch {
    pub pos_ids: Vec<usize>,
    pub neg_ids: Vec<usize>,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.pos_ids.len() + self.neg_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Positives first, then negatives.
    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.pos_ids.iter().chain(self.neg_ids.iter()).copied()
    }
}

/// Seeded stratified sampler; owns its random state.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Draws `n_pos_b` positives and `n_neg_b` negatives, each without replacement.
    pub fn sample(&mut self, ds: &Dataset, n_pos_b: usize, n_neg_b: usize) -> Result<Minibatch> {
        let pos_ids = draw(&mut self.rng, ds.pos_ids(), n_pos_b, "positive")?;
        let neg_ids = draw(&mut self.rng, ds.neg_ids(), n_neg_b, "negative")?;
        Ok(Minibatch { pos_ids, neg_ids })
    }
}

fn draw(
    rng: &mut ChaCha8Rng,
    pool: &[usize],
    amount: usize,
    class: &'static str,
) -> Result<Vec<usize>> {
    if amount > pool.len() {
        return Err(PaucError::OversizedBatch {
            class,
            requested: amount,
            available: pool.len(),
        });
    }
    Ok(index::sample(rng, pool.len(), amount)
        .into_iter()
        .map(|k| pool[k])
        .collect())
}

pub fn stratified_sample(
    ds: &Dataset,
    n_pos_b: usize,
    n_neg_b: usize,
    sampler: &mut Sampler,
) -> Result<Minibatch> {
    sampler.sample(ds, n_pos_b, n_neg_b)
}

/// Train / validation / test proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.7,
            val_frac: 0.15,
            test_frac: 0.15,
            seed: 0,
        }
    }
}

impl SplitSpec {
    fn fractions(&self) -> Result<[f64; 3]> {
        let f = [self.train_frac, self.val_frac, self.test_frac];
        if f.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(PaucError::invalid(format!(
                "split fractions must be positive, got {f:?}"
            )));
        }
        let total: f64 = f.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(PaucError::invalid(format!(
                "split fractions must sum to 1, got {total}"
            )));
        }
        Ok(f)
    }
}

const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

/// Largest-remainder allocation of `n` items over `fractions`; ties go to the
/// earlier part.
fn allocate(n: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    let mut rema = [0f64; 3];
    for k in 0..3 {
        counts[k] = selection_count(n, fractions[k]);
        rema[k] = n as f64 * fractions[k] - counts[k] as f64;
    }
    let mut left = n - counts.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| rema[j].total_cmp(&rema[i]).then(i.cmp(&j)));
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[k] += 1;
        left -= 1;
    }
    counts
}

/// Stratified split returning the original row ids of each part, in ascending order.
pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<[Vec<usize>; 3]> {
    let fractions = spec.fractions()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    let mut per_class = [[0usize; 3]; 2];
    for (c, pool) in [ds.pos_ids(), ds.neg_ids()].into_iter().enumerate() {
        let mut ids = pool.to_vec();
        ids.shuffle(&mut rng);
        let counts = allocate(ids.len(), &fractions);
        per_class[c] = counts;
        let mut start = 0;
        for k in 0..3 {
            parts[k].extend_from_slice(&ids[start..start + counts[k]]);
            start += counts[k];
        }
    }
    for k in 0..3 {
        if per_class[0][k] == 0 || per_class[1][k] == 0 {
            return Err(PaucError::SplitTooSmall {
                split: SPLIT_NAMES[k],
                n_pos: per_class[0][k],
                n_neg: per_class[1][k],
            });
        }
        parts[k].sort_unstable();
    }
    Ok(parts)
}

/// Stratified train / validation / test split.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let [train, val, test] = split_indices(ds, spec)?;
    Ok((ds.subset(&train)?, ds.subset(&val)?, ds.subset(&test)?))
}
