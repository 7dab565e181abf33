//! Hashed bonded-path fingerprints and PCA reduction.
//!
//! A fingerprint counts every simple bonded path of 1..=`max_path_len` atoms.
//! Paths are canonicalized (the lexicographically smaller of the two reading
//! directions), hashed with 64-bit FNV-1a and folded modulo the vector width,
//! so identical structures always land in identical buckets regardless of
//! atom numbering, run or platform.

use crate::chemmap::Molecule;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// FNV-1a 64-bit parameters.
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Fixed-width count vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FingerprintVector {
    pub counts: Vec<u32>,
}

impl FingerprintVector {
    pub fn width(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn nonzero(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn to_f64_row(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

/// Token for one atom: atomic number modulo 128, plus its bond degree.
fn atom_token(mol: &Molecule, degrees: &[usize], atom: usize) -> String {
    format!(
        "{}.{}",
        mol.atoms[atom].element.atomic_number() % 128,
        degrees[atom]
    )
}

fn encode_path(mol: &Molecule, degrees: &[usize], path: &[usize]) -> String {
    let forward: Vec<String> = path.iter().map(|&a| atom_token(mol, degrees, a)).collect();
    let forward = forward.join("-");
    let backward: Vec<String> = path
        .iter()
        .rev()
        .map(|&a| atom_token(mol, degrees, a))
        .collect();
    let backward = backward.join("-");
    if forward <= backward {
        forward
    } else {
        backward
    }
}

/// Count-based path fingerprint. Each simple path of 1..=`max_path_len`
/// atoms contributes one count to the bucket selected by hashing its
/// canonical encoding.
pub fn path_fingerprint(
    mol: &Molecule,
    max_path_len: usize,
    width: usize,
) -> Result<FingerprintVector> {
    if max_path_len < 1 {
        return Err(Error::InvalidArgument(
            "max_path_len must be at least 1".into(),
        ));
    }
    if width < 16 {
        return Err(Error::InvalidArgument(format!(
            "fingerprint width must be at least 16, got {width}"
        )));
    }
    let mut counts = vec![0u32; width];
    let degrees = mol.degrees();
    let adj = mol.adjacency();
    let n = mol.atom_count();

    let bump = |path: &[usize], counts: &mut Vec<u32>| {
        let encoding = encode_path(mol, &degrees, path);
        let bucket = (fnv1a64(encoding.as_bytes()) % width as u64) as usize;
        counts[bucket] += 1;
    };

    // Single atoms.
    for atom in 0..n {
        bump(&[atom], &mut counts);
    }
    // Longer paths, depth-first from each start. Every undirected path is
    // visited from both of its endpoints, so only the traversal ending on
    // the higher-numbered atom is counted.
    let mut path = Vec::with_capacity(max_path_len);
    let mut on_path = vec![false; n];
    for start in 0..n {
        path.push(start);
        on_path[start] = true;
        extend_paths(
            &adj,
            &mut path,
            &mut on_path,
            max_path_len,
            &mut |p| {
                if p[0] < p[p.len() - 1] {
                    bump(p, &mut counts);
                }
            },
        );
        on_path[start] = false;
        path.pop();
    }
    Ok(FingerprintVector { counts })
}

fn extend_paths(
    adj: &[Vec<usize>],
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    max_len: usize,
    emit: &mut impl FnMut(&[usize]),
) {
    if path.len() >= max_len {
        return;
    }
    let last = *path.last().unwrap();
    for &next in &adj[last] {
        if on_path[next] {
            continue;
        }
        path.push(next);
        on_path[next] = true;
        emit(path);
        extend_paths(adj, path, on_path, max_len, emit);
        on_path[next] = false;
        path.pop();
    }
}

/// PCA model fitted by thin SVD of the centered data matrix.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` orthonormal rows, each of the data width.
    pub components: Vec<Vec<f64>>,
    /// Leading variances, sorted descending.
    pub variances: Vec<f64>,
}

impl PcaModel {
    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }
}

/// Fit a `k`-component PCA. Component signs are fixed by making each
/// component's largest-magnitude entry positive, so the fit is deterministic.
pub fn pca_fit(data: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "PCA needs at least 2 rows, got {n}"
        )));
    }
    let d = data[0].len();
    if data.iter().any(|row| row.len() != d) {
        return Err(Error::DimensionMismatch("ragged data matrix".into()));
    }
    if k < 1 || k > n.min(d) {
        return Err(Error::InvalidArgument(format!(
            "component count {k} outside 1..={}",
            n.min(d)
        )));
    }
    let mut mean = vec![0.0f64; d];
    for row in data {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |i, j| data[i][j] - mean[j]);
    if centered.iter().all(|v| v.abs() < 1e-300) {
        return Err(Error::Degenerate(
            "all rows identical: total variance is zero".into(),
        ));
    }
    let svd = centered.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Degenerate("SVD did not produce right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut components = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut component: Vec<f64> = v_t.row(idx).iter().copied().collect();
        // Sign convention: largest-magnitude entry positive.
        let lead = component
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| {
                a.abs()
                    .partial_cmp(&b.abs())
                    .unwrap()
                    .then(ib.cmp(&ia))
            })
            .map(|(i, _)| i)
            .unwrap();
        if component[lead] < 0.0 {
            for v in component.iter_mut() {
                *v = -*v;
            }
        }
        components.push(component);
        let sigma = svd.singular_values[idx];
        variances.push(sigma * sigma / (n as f64 - 1.0));
    }
    Ok(PcaModel {
        mean,
        components,
        variances,
    })
}

/// Project rows onto the fitted components: `(rows - mean) . components^T`.
pub fn pca_project(model: &PcaModel, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = model.width();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(format!(
            "rows must have width {d}"
        )));
    }
    Ok(rows
        .iter()
        .map(|row| {
            model
                .components
                .iter()
                .map(|comp| {
                    row.iter()
                        .zip(&model.mean)
                        .zip(comp)
                        .map(|((v, m), c)| (v - m) * c)
                        .sum()
                })
                .collect()
        })
        .collect())
}
