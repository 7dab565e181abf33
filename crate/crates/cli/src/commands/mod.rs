//! Command implementations and shared pipeline helpers.

pub mod describe;
pub mod evaluate;
pub mod generate;
pub mod report;
pub mod search;

use anyhow::{bail, Context, Result};
use qcmol::chemmap::{circuit_to_molecule, Molecule};
use qcmol::circuit::CircuitGrid;
use qcmol::datasets::{gen_hidden_manifold, load_csv_dataset, load_mnist_pair, Dataset};
use qcmol::molecule::{coulomb_matrix, gershgorin_radii, layout_2d, GershgorinSummary, LayoutParams};
use qcmol::rng::derive_seed;
use std::path::{Path, PathBuf};

pub fn read_circuits(path: &Path) -> Result<Vec<CircuitGrid>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading circuits from {}", path.display()))?;
    let mut grids = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let grid = CircuitGrid::from_line(line)
            .map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), lineno + 1))?;
        let violations = grid.validate();
        if !violations.is_empty() {
            bail!(
                "{}:{}: invalid circuit: {}",
                path.display(),
                lineno + 1,
                violations.join("; ")
            );
        }
        grids.push(grid);
    }
    if grids.is_empty() {
        bail!("{} contains no circuits", path.display());
    }
    Ok(grids)
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

/// Map one circuit to its molecule and Gershgorin summary. The layout seed
/// should already be derived per circuit.
pub fn descriptor_for(
    grid: &CircuitGrid,
    layout_seed: u64,
    bond_scale: f64,
) -> qcmol::Result<(Molecule, GershgorinSummary)> {
    let mol = circuit_to_molecule(grid)?;
    let layout = layout_2d(&mol, &LayoutParams::default(), layout_seed)?;
    let matrix = coulomb_matrix(&mol, &layout.coords, bond_scale)?;
    let summary = gershgorin_radii(&matrix)?;
    Ok((mol, summary))
}

/// Parsed `--dataset` specification.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    HiddenManifold {
        d: usize,
    },
    Csv {
        path: PathBuf,
        features: Vec<String>,
        label: String,
        positive: String,
    },
    Mnist {
        images: PathBuf,
        labels: PathBuf,
        digit_a: u8,
        digit_b: u8,
        dim: usize,
    },
}

impl DatasetSpec {
    /// Spec grammar: `kind` or `kind:key=value;key=value;...`. List values
    /// (CSV feature columns) are comma-separated.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = match spec.split_once(':') {
            Some((k, r)) => (k, r),
            None => (spec, ""),
        };
        let mut pairs = Vec::new();
        if !rest.is_empty() {
            for item in rest.split(';') {
                let (key, value) = item
                    .split_once('=')
                    .with_context(|| format!("dataset option {item:?} is not key=value"))?;
                pairs.push((key.trim().to_string(), value.trim().to_string()));
            }
        }
        let get = |key: &str| -> Option<&str> {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
        };
        let known = |allowed: &[&str]| -> Result<()> {
            for (k, _) in &pairs {
                if !allowed.contains(&k.as_str()) {
                    bail!("unknown dataset option {k:?} for {kind:?}");
                }
            }
            Ok(())
        };
        match kind {
            "hidden-manifold" => {
                known(&["d"])?;
                let d = get("d").unwrap_or("4").parse().context("bad dimension")?;
                Ok(DatasetSpec::HiddenManifold { d })
            }
            "csv" => {
                known(&["path", "features", "label", "positive"])?;
                Ok(DatasetSpec::Csv {
                    path: PathBuf::from(get("path").context("csv spec needs path=")?),
                    features: get("features")
                        .context("csv spec needs features=")?
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .collect(),
                    label: get("label").context("csv spec needs label=")?.to_string(),
                    positive: get("positive")
                        .context("csv spec needs positive=")?
                        .to_string(),
                })
            }
            "mnist" => {
                known(&["images", "labels", "a", "b", "dim"])?;
                Ok(DatasetSpec::Mnist {
                    images: PathBuf::from(get("images").context("mnist spec needs images=")?),
                    labels: PathBuf::from(get("labels").context("mnist spec needs labels=")?),
                    digit_a: get("a").unwrap_or("3").parse().context("bad digit a")?,
                    digit_b: get("b").unwrap_or("5").parse().context("bad digit b")?,
                    dim: get("dim").unwrap_or("5").parse().context("bad dim")?,
                })
            }
            other => bail!("unknown dataset kind {other:?}"),
        }
    }

    /// Build a dataset with at least `total` points available for splitting.
    pub fn build(&self, total: usize, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSpec::HiddenManifold { d } => {
                gen_hidden_manifold(*d, total, derive_seed(seed, 0xDA7A))
                    .map_err(|e| anyhow::anyhow!(e.to_string()))
            }
            DatasetSpec::Csv {
                path,
                features,
                label,
                positive,
            } => {
                let load = load_csv_dataset(path, features, label, positive)
                    .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
                if !load.rejected_rows.is_empty() {
                    let rows: Vec<String> =
                        load.rejected_rows.iter().map(|r| r.to_string()).collect();
                    eprintln!(
                        "warning: skipped {} incomplete record(s): {}",
                        load.rejected_rows.len(),
                        rows.join(",")
                    );
                }
                Ok(load.dataset)
            }
            DatasetSpec::Mnist {
                images,
                labels,
                digit_a,
                digit_b,
                dim,
            } => {
                let per_class = total.div_ceil(2);
                load_mnist_pair(
                    images,
                    labels,
                    *digit_a,
                    *digit_b,
                    *dim,
                    per_class,
                    derive_seed(seed, 0xDA7A),
                )
                .map_err(|e| anyhow::anyhow!(e.to_string()))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DatasetSpec::HiddenManifold { d } => format!("hidden-manifold-{d}d"),
            DatasetSpec::Csv { path, .. } => format!("csv:{}", path.display()),
            DatasetSpec::Mnist {
                digit_a, digit_b, ..
            } => format!("mnist-{digit_a}v{digit_b}"),
        }
    }
}
