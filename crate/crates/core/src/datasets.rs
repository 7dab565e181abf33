//! Classification problems: a synthetic hidden-manifold generator, a CSV
//! loader for tabular problems, an IDX loader for digit pairs, plus feature
//! scaling and stratified splitting.

use crate::error::{Error, Result};
use crate::fingerprint::{pca_fit, pca_project};
use crate::rng::{derive_seed, Rng};
use std::io::Read;
use std::path::Path;

/// A binary classification dataset with labels in {-1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub seed: u64,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.features.first().map_or(0, |row| row.len())
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|y| **y > 0.0).count();
        (pos, self.labels.len() - pos)
    }

    fn validate(&self) -> Result<()> {
        if self.features.len() != self.labels.len() {
            return Err(Error::DimensionMismatch(
                "feature and label counts differ".into(),
            ));
        }
        if self.features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("features must be finite".into()));
        }
        let (pos, neg) = self.class_counts();
        if pos == 0 || neg == 0 {
            return Err(Error::Degenerate("dataset is single-class".into()));
        }
        Ok(())
    }

    /// Line-delimited snapshot. Floats use shortest round-trip formatting,
    /// so save/load is exact.
    pub fn save(&self) -> String {
        let mut out = format!(
            "dataset {} seed {} rows {} dims {}\n",
            self.name,
            self.seed,
            self.len(),
            self.dims()
        );
        for (row, label) in self.features.iter().zip(&self.labels) {
            out.push_str(&(*label as i32).to_string());
            for v in row {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dataset snapshot".into()))?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() != 8 || tokens[0] != "dataset" {
            return Err(Error::Parse("malformed dataset header".into()));
        }
        let name = tokens[1].to_string();
        let seed: u64 = tokens[3]
            .parse()
            .map_err(|_| Error::Parse("bad seed".into()))?;
        let rows: usize = tokens[5]
            .parse()
            .map_err(|_| Error::Parse("bad row count".into()))?;
        let dims: usize = tokens[7]
            .parse()
            .map_err(|_| Error::Parse("bad dim count".into()))?;
        let mut features = Vec::with_capacity(rows);
        let mut labels = Vec::with_capacity(rows);
        for line in lines {
            let mut fields = line.split_whitespace();
            let label: f64 = fields
                .next()
                .ok_or_else(|| Error::Parse("empty data line".into()))?
                .parse()
                .map_err(|_| Error::Parse("bad label".into()))?;
            let row: Vec<f64> = fields
                .map(|f| f.parse().map_err(|_| Error::Parse("bad feature".into())))
                .collect::<Result<_>>()?;
            if row.len() != dims {
                return Err(Error::Parse(format!(
                    "expected {dims} features, found {}",
                    row.len()
                )));
            }
            labels.push(label);
            features.push(row);
        }
        if labels.len() != rows {
            return Err(Error::Parse(format!(
                "expected {rows} rows, found {}",
                labels.len()
            )));
        }
        Ok(Dataset {
            name,
            seed,
            features,
            labels,
        })
    }
}

const LATENT_DIM: usize = 6;
const TEACHER_HIDDEN: usize = 8;

/// Synthetic hidden-manifold problem: latent Gaussian points are squashed
/// into `d` observed dimensions through a fixed random linear map and tanh,
/// and labeled by a random single-hidden-layer teacher network on the latent
/// coordinates, thresholded at the sample median so the classes balance to
/// within one point.
pub fn gen_hidden_manifold(d: usize, n: usize, seed: u64) -> Result<Dataset> {
    if d < 1 {
        return Err(Error::InvalidArgument("need at least 1 dimension".into()));
    }
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 samples, got {n}"
        )));
    }
    let mut rng = Rng::new(seed);
    // Fixed draw order: mixing map, teacher weights, then samples.
    let mixing: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..LATENT_DIM).map(|_| rng.normal()).collect())
        .collect();
    let teacher_w1: Vec<Vec<f64>> = (0..TEACHER_HIDDEN)
        .map(|_| (0..LATENT_DIM).map(|_| rng.normal()).collect())
        .collect();
    let teacher_w2: Vec<f64> = (0..TEACHER_HIDDEN).map(|_| rng.normal()).collect();

    let mut features = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    let sqrt_m = (LATENT_DIM as f64).sqrt();
    for _ in 0..n {
        let z: Vec<f64> = (0..LATENT_DIM).map(|_| rng.normal()).collect();
        let x: Vec<f64> = mixing
            .iter()
            .map(|row| {
                let dot: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
                (dot / sqrt_m).tanh()
            })
            .collect();
        let score: f64 = teacher_w1
            .iter()
            .zip(&teacher_w2)
            .map(|(row, w2)| {
                let dot: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
                w2 * dot.tanh()
            })
            .sum();
        features.push(x);
        scores.push(score);
    }

    // Median thresholding via rank: the lower half of scores is negative.
    // Ties resolve by sample index, keeping the labeling deterministic.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));
    let mut labels = vec![1.0f64; n];
    for &idx in order.iter().take(n / 2) {
        labels[idx] = -1.0;
    }

    let ds = Dataset {
        name: format!("hidden-manifold-{d}d"),
        seed,
        features,
        labels,
    };
    ds.validate()?;
    Ok(ds)
}

/// Minimal RFC-4180 reader: quoted fields, doubled-quote escapes, CRLF or
/// LF records, newlines allowed inside quotes.
fn parse_csv(text: &str) -> Vec<Vec<String>> {
    let mut records = Vec::new();
    let mut record: Vec<String> = Vec::new();
    let mut field = String::new();
    let mut in_quotes = false;
    let mut chars = text.chars().peekable();
    let mut any = false;
    while let Some(c) = chars.next() {
        any = true;
        if in_quotes {
            match c {
                '"' => {
                    if chars.peek() == Some(&'"') {
                        chars.next();
                        field.push('"');
                    } else {
                        in_quotes = false;
                    }
                }
                _ => field.push(c),
            }
        } else {
            match c {
                '"' => in_quotes = true,
                ',' => {
                    record.push(std::mem::take(&mut field));
                    any = false;
                }
                '\r' => {}
                '\n' => {
                    record.push(std::mem::take(&mut field));
                    records.push(std::mem::take(&mut record));
                    any = false;
                }
                _ => field.push(c),
            }
        }
    }
    if any || !field.is_empty() || !record.is_empty() {
        record.push(field);
        records.push(record);
    }
    records
}

/// Result of loading a CSV dataset. Records with empty feature or label
/// cells are skipped and reported by record number (the header is record 1).
#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub dataset: Dataset,
    pub rejected_rows: Vec<usize>,
}

pub fn load_csv_dataset(
    path: &Path,
    feature_columns: &[String],
    label_column: &str,
    positive_token: &str,
) -> Result<CsvLoad> {
    let text = std::fs::read_to_string(path)?;
    let records = parse_csv(&text);
    if records.is_empty() {
        return Err(Error::Parse("CSV file has no header".into()));
    }
    let header = &records[0];
    let column_index = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("column {name:?} not found in header")))
    };
    let feature_idx: Vec<usize> = feature_columns
        .iter()
        .map(|c| column_index(c))
        .collect::<Result<_>>()?;
    let label_idx = column_index(label_column)?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut rejected = Vec::new();
    for (record_no, record) in records.iter().enumerate().skip(1) {
        let row_no = record_no + 1;
        if record.len() == 1 && record[0].is_empty() {
            continue; // trailing blank line
        }
        let needed = feature_idx.iter().chain([&label_idx]);
        let mut missing = false;
        for &idx in needed {
            if record.get(idx).map_or(true, |cell| cell.trim().is_empty()) {
                missing = true;
            }
        }
        if missing {
            rejected.push(row_no);
            continue;
        }
        let mut row = Vec::with_capacity(feature_idx.len());
        for (&idx, name) in feature_idx.iter().zip(feature_columns) {
            let cell = record[idx].trim();
            let value: f64 = cell.parse().map_err(|_| Error::CsvCell {
                row: row_no,
                column: name.clone(),
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            row.push(value);
        }
        let label = if record[label_idx].trim() == positive_token {
            1.0
        } else {
            -1.0
        };
        features.push(row);
        labels.push(label);
    }

    let dataset = Dataset {
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "csv".into()),
        seed: 0,
        features,
        labels,
    };
    dataset.validate()?;
    Ok(CsvLoad {
        dataset,
        rejected_rows: rejected,
    })
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(reader: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf)?;
    Ok(u32::from_be_bytes(buf))
}

fn read_idx_images(path: &Path) -> Result<Vec<Vec<u8>>> {
    let mut file = std::fs::File::open(path)?;
    let magic = read_u32_be(&mut file)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Parse(format!(
            "bad image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"
        )));
    }
    let count = read_u32_be(&mut file)? as usize;
    let rows = read_u32_be(&mut file)? as usize;
    let cols = read_u32_be(&mut file)? as usize;
    let mut pixels = Vec::new();
    file.read_to_end(&mut pixels)?;
    if pixels.len() != count * rows * cols {
        return Err(Error::Parse(format!(
            "expected {} pixels, found {}",
            count * rows * cols,
            pixels.len()
        )));
    }
    Ok(pixels.chunks(rows * cols).map(|c| c.to_vec()).collect())
}

fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let mut file = std::fs::File::open(path)?;
    let magic = read_u32_be(&mut file)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Parse(format!(
            "bad label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"
        )));
    }
    let count = read_u32_be(&mut file)? as usize;
    let mut labels = Vec::new();
    file.read_to_end(&mut labels)?;
    if labels.len() != count {
        return Err(Error::Parse(format!(
            "expected {count} labels, found {}",
            labels.len()
        )));
    }
    Ok(labels)
}

/// Load a two-digit subset of an IDX image/label pair, subsample
/// `n_per_class` of each digit, and PCA-reduce the flattened pixels to
/// `out_dim` features. Digit `a` maps to +1, digit `b` to -1.
pub fn load_mnist_pair(
    images_path: &Path,
    labels_path: &Path,
    digit_a: u8,
    digit_b: u8,
    out_dim: usize,
    n_per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    let images = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    if images.len() != labels.len() {
        return Err(Error::Parse(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let select = |digit: u8, stream: u64| -> Result<Vec<usize>> {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == digit)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "digit {digit} does not appear in the label file"
            )));
        }
        if idx.len() < n_per_class {
            return Err(Error::InvalidArgument(format!(
                "digit {digit} has only {} samples, need {n_per_class}",
                idx.len()
            )));
        }
        let mut rng = Rng::new(derive_seed(seed, stream));
        rng.shuffle(&mut idx);
        let mut chosen: Vec<usize> = idx.into_iter().take(n_per_class).collect();
        chosen.sort_unstable();
        Ok(chosen)
    };
    let chosen_a = select(digit_a, 1)?;
    let chosen_b = select(digit_b, 2)?;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(2 * n_per_class);
    let mut raw_labels = Vec::with_capacity(2 * n_per_class);
    for &i in &chosen_a {
        rows.push(images[i].iter().map(|&p| p as f64 / 255.0).collect());
        raw_labels.push(1.0);
    }
    for &i in &chosen_b {
        rows.push(images[i].iter().map(|&p| p as f64 / 255.0).collect());
        raw_labels.push(-1.0);
    }

    let model = pca_fit(&rows, out_dim)?;
    let features = pca_project(&model, &rows)?;
    let ds = Dataset {
        name: format!("mnist-{digit_a}v{digit_b}"),
        seed,
        features,
        labels: raw_labels,
    };
    ds.validate()?;
    Ok(ds)
}

/// Per-feature affine map of the training range onto [0, pi].
#[derive(Debug, Clone)]
pub struct FeatureScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    /// Clamp out-of-range values instead of extrapolating linearly.
    pub clamp: bool,
}

pub const SCALE_TARGET: f64 = std::f64::consts::PI;

pub fn fit_scaler(train: &[Vec<f64>]) -> Result<FeatureScaler> {
    let dims = train
        .first()
        .ok_or_else(|| Error::Degenerate("cannot fit a scaler on no rows".into()))?
        .len();
    let mut mins = vec![f64::INFINITY; dims];
    let mut maxs = vec![f64::NEG_INFINITY; dims];
    for row in train {
        for ((v, min), max) in row.iter().zip(mins.iter_mut()).zip(maxs.iter_mut()) {
            *min = min.min(*v);
            *max = max.max(*v);
        }
    }
    for (d, (min, max)) in mins.iter().zip(&maxs).enumerate() {
        if !(max > min) {
            return Err(Error::Degenerate(format!(
                "feature {d} is constant ({min}); scaling is undefined"
            )));
        }
    }
    Ok(FeatureScaler {
        mins,
        maxs,
        clamp: false,
    })
}

pub fn apply_scaler(scaler: &FeatureScaler, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let dims = scaler.mins.len();
    if rows.iter().any(|r| r.len() != dims) {
        return Err(Error::DimensionMismatch(format!(
            "scaler expects {dims} features"
        )));
    }
    Ok(rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(d, v)| {
                    let scaled =
                        (v - scaler.mins[d]) / (scaler.maxs[d] - scaler.mins[d]) * SCALE_TARGET;
                    if scaler.clamp {
                        scaled.clamp(0.0, SCALE_TARGET)
                    } else {
                        scaled
                    }
                })
                .collect()
        })
        .collect())
}

/// Deterministic stratified split into a training and a test set of the
/// requested sizes. Class proportions are preserved by largest-remainder
/// allocation, and each side receives at least one point per class.
pub fn split_stratified(
    ds: &Dataset,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if n_train + n_test > ds.len() {
        return Err(Error::InvalidArgument(format!(
            "requested {} + {} points from a {}-point dataset",
            n_train,
            n_test,
            ds.len()
        )));
    }
    if n_train < 2 || n_test < 2 {
        return Err(Error::InvalidArgument(
            "train and test each need at least 2 points".into(),
        ));
    }
    let mut pos: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] > 0.0).collect();
    let mut neg: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] <= 0.0).collect();
    Rng::new(derive_seed(seed, 0xA)).shuffle(&mut pos);
    Rng::new(derive_seed(seed, 0xB)).shuffle(&mut neg);

    let allocate = |want: usize, pos_avail: usize, neg_avail: usize| -> Result<(usize, usize)> {
        let total = pos_avail + neg_avail;
        let ideal = want as f64 * pos_avail as f64 / total as f64;
        let mut take_pos = ideal.round() as usize;
        take_pos = take_pos
            .max(want.saturating_sub(neg_avail))
            .min(pos_avail)
            .min(want);
        let mut take_neg = want - take_pos;
        // Keep both classes represented.
        if take_pos == 0 && pos_avail > 0 && take_neg > 1 {
            take_pos = 1;
            take_neg -= 1;
        }
        if take_neg == 0 && neg_avail > 0 && take_pos > 1 {
            take_neg = 1;
            take_pos -= 1;
        }
        if take_pos == 0 || take_neg == 0 || take_neg > neg_avail {
            return Err(Error::Degenerate(
                "cannot keep both classes in each split".into(),
            ));
        }
        Ok((take_pos, take_neg))
    };

    let (train_pos, train_neg) = allocate(n_train, pos.len(), neg.len())?;
    let (test_pos, test_neg) = allocate(n_test, pos.len() - train_pos, neg.len() - train_neg)?;

    let collect = |pos_range: &[usize], neg_range: &[usize], tag: &str| -> Dataset {
        let mut indices: Vec<usize> = pos_range.iter().chain(neg_range).copied().collect();
        indices.sort_unstable();
        Dataset {
            name: format!("{}-{tag}", ds.name),
            seed: ds.seed,
            features: indices.iter().map(|&i| ds.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| ds.labels[i]).collect(),
        }
    };
    let train = collect(&pos[..train_pos], &neg[..train_neg], "train");
    let test = collect(
        &pos[train_pos..train_pos + test_pos],
        &neg[train_neg..train_neg + test_neg],
        "test",
    );
    Ok((train, test))
}
