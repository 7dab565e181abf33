//! Exact statevector simulation of the data-encoding feature map, the
//! layered Rz/CNOT ansatz, and the induced kernel.
//!
//! Basis convention: qubit 0 is the most significant bit of the basis index.
//! An Rz on qubit `k` multiplies amplitudes by `exp(-i theta x_k)` where the
//! qubit's bit is 0 and `exp(+i theta x_k)` where it is 1; the angle couples
//! the free parameter to the data component of that qubit. Parameters are
//! consumed in grid scan order: layer-major, then row.

use crate::circuit::{CircuitGrid, GateSlot};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Largest register the dense simulator will allocate (2^24 amplitudes).
const MAX_QUBITS: usize = 24;

pub type StateVector = Vec<Complex64>;

fn qubit_bit(index: usize, qubit: usize, n_qubits: usize) -> usize {
    (index >> (n_qubits - 1 - qubit)) & 1
}

/// Pad or validate a feature vector against the register size.
fn padded_features(x: &[f64], n_qubits: usize) -> Result<Vec<f64>> {
    if x.len() > n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "{} features exceed {} qubits",
            x.len(),
            n_qubits
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("features must be finite".into()));
    }
    let mut padded = x.to_vec();
    padded.resize(n_qubits, 0.0);
    Ok(padded)
}

/// State prepared by the feature map: Hadamards on |0...0> followed by a
/// per-qubit Z phase of the assigned feature. The amplitude of basis state
/// `b` is `2^(-n/2) * prod_k exp(i (-1)^(b_k) x_k)`.
pub fn feature_state(x: &[f64], n_qubits: usize) -> Result<StateVector> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    let x = padded_features(x, n_qubits)?;
    let dim = 1usize << n_qubits;
    let norm = (dim as f64).sqrt().recip();
    let mut state = Vec::with_capacity(dim);
    for b in 0..dim {
        let mut phase = 0.0;
        for (k, xk) in x.iter().enumerate() {
            if qubit_bit(b, k, n_qubits) == 0 {
                phase += xk;
            } else {
                phase -= xk;
            }
        }
        state.push(Complex64::from_polar(norm, phase));
    }
    Ok(state)
}

/// Apply the grid to a state. Layers run left to right; within a layer the
/// gates act on disjoint qubits, applied in row order.
pub fn evolve(
    state: &StateVector,
    grid: &CircuitGrid,
    theta: &[f64],
    x: &[f64],
) -> Result<StateVector> {
    let n_qubits = grid.n_qubits();
    if state.len() != 1 << n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "state has {} amplitudes but the grid acts on {} qubits",
            state.len(),
            n_qubits
        )));
    }
    if theta.len() != grid.count_rz() {
        return Err(Error::DimensionMismatch(format!(
            "theta has {} entries but the grid has {} Rz slots",
            theta.len(),
            grid.count_rz()
        )));
    }
    let x = padded_features(x, n_qubits)?;
    let mut out = state.clone();
    let mut next_theta = 0usize;
    for layer in 0..grid.n_layers() {
        for qubit in 0..n_qubits {
            match grid.slot(qubit, layer) {
                GateSlot::Identity | GateSlot::CnotTarget => {}
                GateSlot::Rz => {
                    let angle = theta[next_theta] * x[qubit];
                    next_theta += 1;
                    let lo = Complex64::from_polar(1.0, -angle);
                    let hi = Complex64::from_polar(1.0, angle);
                    for (b, amp) in out.iter_mut().enumerate() {
                        *amp *= if qubit_bit(b, qubit, n_qubits) == 0 {
                            lo
                        } else {
                            hi
                        };
                    }
                }
                GateSlot::CnotControl { delta } => {
                    let target = (qubit + delta) % n_qubits;
                    let control_mask = 1usize << (n_qubits - 1 - qubit);
                    let target_mask = 1usize << (n_qubits - 1 - target);
                    for b in 0..out.len() {
                        if b & control_mask != 0 && b & target_mask == 0 {
                            out.swap(b, b | target_mask);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn inner_product(a: &StateVector, b: &StateVector) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn encoded_state(x: &[f64], grid: &CircuitGrid, theta: &[f64]) -> Result<StateVector> {
    let state = feature_state(x, grid.n_qubits())?;
    evolve(&state, grid, theta, x)
}

/// Kernel value: squared overlap of the two encoded states.
pub fn kernel_value(x: &[f64], x_other: &[f64], grid: &CircuitGrid, theta: &[f64]) -> Result<f64> {
    let psi = encoded_state(x, grid, theta)?;
    let psi_other = encoded_state(x_other, grid, theta)?;
    Ok(inner_product(&psi_other, &psi).norm_sqr())
}

/// Kernel matrix between two point sets. Encoded states are computed once
/// per point, so the cost is `(|X| + |X'|)` evolutions plus one inner
/// product per pair.
pub fn gram_matrix(
    xs: &[Vec<f64>],
    xs_other: &[Vec<f64>],
    grid: &CircuitGrid,
    theta: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let states: Vec<StateVector> = xs
        .iter()
        .map(|x| encoded_state(x, grid, theta))
        .collect::<Result<_>>()?;
    let same = xs == xs_other;
    let states_other: Vec<StateVector> = if same {
        Vec::new()
    } else {
        xs_other
            .iter()
            .map(|x| encoded_state(x, grid, theta))
            .collect::<Result<_>>()?
    };
    let other = if same { &states } else { &states_other };
    let mut gram = vec![vec![0.0f64; xs_other.len()]; xs.len()];
    for (a, row) in gram.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            if same && b < a {
                continue;
            }
            *cell = inner_product(&other[b], &states[a]).norm_sqr();
        }
    }
    if same {
        for a in 0..xs.len() {
            for b in 0..a {
                gram[a][b] = gram[b][a];
            }
        }
    }
    Ok(gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{sample_circuit, CircuitGrid, GatePolicy};
    use crate::rng::Rng;
    use nalgebra::DMatrix;

    fn rz_policy() -> GatePolicy {
        GatePolicy {
            p_identity: 0.2,
            p_rz: 0.8,
            p_cnot: 0.0,
            delta_max: None,
        }
    }

    /// Independent oracle for Rz-only circuits: the register factorizes, so
    /// the kernel is a product of per-qubit overlaps computed with explicit
    /// 2-component vectors and diagonal 2x2 gates.
    fn rz_only_kernel_oracle(x: &[f64], x_other: &[f64], grid: &CircuitGrid, theta: &[f64]) -> f64 {
        let n = grid.n_qubits();
        let mut pad_a = x.to_vec();
        pad_a.resize(n, 0.0);
        let mut pad_b = x_other.to_vec();
        pad_b.resize(n, 0.0);
        let qubit_state = |features: &[f64]| -> Vec<[Complex64; 2]> {
            let mut states: Vec<[Complex64; 2]> = (0..n)
                .map(|k| {
                    [
                        Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, features[k]),
                        Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, -features[k]),
                    ]
                })
                .collect();
            let mut next = 0usize;
            for layer in 0..grid.n_layers() {
                for qubit in 0..n {
                    if grid.slot(qubit, layer) == GateSlot::Rz {
                        let angle = theta[next] * features[qubit];
                        next += 1;
                        states[qubit][0] *= Complex64::from_polar(1.0, -angle);
                        states[qubit][1] *= Complex64::from_polar(1.0, angle);
                    }
                }
            }
            states
        };
        let sa = qubit_state(&pad_a);
        let sb = qubit_state(&pad_b);
        let mut overlap = Complex64::new(1.0, 0.0);
        for k in 0..n {
            overlap *= sb[k][0].conj() * sa[k][0] + sb[k][1].conj() * sa[k][1];
        }
        overlap.norm_sqr()
    }

    #[test]
    fn feature_state_single_qubit_zero_feature() {
        let state = feature_state(&[0.0], 1).unwrap();
        let expect = std::f64::consts::FRAC_1_SQRT_2;
        assert!((state[0] - Complex64::new(expect, 0.0)).norm() < 1e-15);
        assert!((state[1] - Complex64::new(expect, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn feature_state_two_qubits_zero_features() {
        let state = feature_state(&[0.0, 0.0], 2).unwrap();
        for amp in state {
            assert!((amp - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn feature_state_is_normalized() {
        let mut rng = Rng::new(3);
        for _ in 0..20 {
            let n = 1 + rng.next_below(5) as usize;
            let x: Vec<f64> = (0..n).map(|_| rng.uniform(-4.0, 4.0)).collect();
            let state = feature_state(&x, n).unwrap();
            let norm: f64 = state.iter().map(|a| a.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_grid_leaves_state_unchanged() {
        let grid = CircuitGrid::empty(2, 0).unwrap();
        let state = feature_state(&[0.3, 0.9], 2).unwrap();
        let out = evolve(&state, &grid, &[], &[0.3, 0.9]).unwrap();
        assert_eq!(state, out);
    }

    #[test]
    fn cnot_truth_table() {
        // |10>: control qubit 0 set, target qubit 1 clear.
        let mut grid = CircuitGrid::empty(2, 1).unwrap();
        grid.set_slot(0, 0, GateSlot::CnotControl { delta: 1 });
        grid.set_slot(1, 0, GateSlot::CnotTarget);
        let mut state = vec![Complex64::new(0.0, 0.0); 4];
        state[0b10] = Complex64::new(1.0, 0.0);
        let out = evolve(&state, &grid, &[], &[0.0, 0.0]).unwrap();
        assert!((out[0b11].norm() - 1.0).abs() < 1e-15);
        assert!(out[0b10].norm() < 1e-15);
    }

    #[test]
    fn rz_half_pi_rotates_plus_state_to_orthogonal() {
        let mut grid = CircuitGrid::empty(2, 1).unwrap();
        grid.set_slot(0, 0, GateSlot::Rz);
        // Single-qubit check embedded on qubit 0 of a 2-qubit register with
        // feature 1.0 and theta pi/2; qubit 1 stays idle.
        let state = feature_state(&[1.0, 0.0], 2).unwrap();
        let out = evolve(&state, &grid, &[std::f64::consts::FRAC_PI_2], &[1.0, 0.0]).unwrap();
        let overlap = inner_product(&state, &out).norm_sqr();
        assert!(overlap < 1e-12, "overlap {overlap}");
    }

    #[test]
    fn evolve_preserves_norm() {
        let mut rng = Rng::new(17);
        for seed in 0..20 {
            let grid = sample_circuit(4, 5, &GatePolicy::default(), seed).unwrap();
            let theta: Vec<f64> = (0..grid.count_rz())
                .map(|_| rng.uniform(0.0, std::f64::consts::TAU))
                .collect();
            let x: Vec<f64> = (0..4).map(|_| rng.uniform(0.0, std::f64::consts::PI)).collect();
            let state = feature_state(&x, 4).unwrap();
            let out = evolve(&state, &grid, &theta, &x).unwrap();
            let norm: f64 = out.iter().map(|a| a.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn theta_length_mismatch_is_rejected() {
        let grid = sample_circuit(3, 2, &rz_policy(), 1).unwrap();
        let state = feature_state(&[0.1, 0.2, 0.3], 3).unwrap();
        assert!(evolve(&state, &grid, &[0.5], &[0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn kernel_of_identical_inputs_is_one() {
        let grid = sample_circuit(4, 5, &GatePolicy::default(), 9).unwrap();
        let theta: Vec<f64> = (0..grid.count_rz()).map(|i| 0.3 + 0.1 * i as f64).collect();
        let x = vec![0.4, 1.1, 2.2, 0.7];
        let k = kernel_value(&x, &x, &grid, &theta).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_grid_kernel_is_product_of_cosines() {
        let grid = CircuitGrid::empty(3, 0).unwrap();
        let mut rng = Rng::new(5);
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.uniform(0.0, 3.0)).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.uniform(0.0, 3.0)).collect();
            let k = kernel_value(&x, &y, &grid, &[]).unwrap();
            let expect: f64 = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b).cos().powi(2))
                .product();
            assert!((k - expect).abs() < 1e-12, "{k} vs {expect}");
        }
    }

    #[test]
    fn orthogonal_features_give_zero_kernel() {
        let grid = CircuitGrid::empty(2, 0).unwrap();
        let k = kernel_value(&[0.0], &[std::f64::consts::FRAC_PI_2], &grid, &[]).unwrap();
        assert!(k < 1e-12);
    }

    #[test]
    fn kernel_is_symmetric_and_bounded() {
        let mut rng = Rng::new(29);
        let grid = sample_circuit(4, 4, &GatePolicy::default(), 2).unwrap();
        let theta: Vec<f64> = (0..grid.count_rz())
            .map(|_| rng.uniform(0.0, std::f64::consts::TAU))
            .collect();
        for _ in 0..30 {
            let x: Vec<f64> = (0..4).map(|_| rng.uniform(0.0, std::f64::consts::PI)).collect();
            let y: Vec<f64> = (0..4).map(|_| rng.uniform(0.0, std::f64::consts::PI)).collect();
            let kxy = kernel_value(&x, &y, &grid, &theta).unwrap();
            let kyx = kernel_value(&y, &x, &grid, &theta).unwrap();
            assert!((kxy - kyx).abs() < 1e-12);
            assert!((-1e-12..=1.0 + 1e-12).contains(&kxy));
        }
    }

    #[test]
    fn rz_only_kernel_matches_two_by_two_oracle() {
        let mut rng = Rng::new(41);
        for seed in 0..40 {
            let n = 2 + (seed as usize % 4);
            let grid = sample_circuit(n, 1 + seed as usize % 8, &rz_policy(), seed).unwrap();
            let theta: Vec<f64> = (0..grid.count_rz())
                .map(|_| rng.uniform(0.0, std::f64::consts::TAU))
                .collect();
            let x: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, std::f64::consts::PI)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, std::f64::consts::PI)).collect();
            let k = kernel_value(&x, &y, &grid, &theta).unwrap();
            let oracle = rz_only_kernel_oracle(&x, &y, &grid, &theta);
            assert!((k - oracle).abs() < 1e-10, "seed {seed}: {k} vs {oracle}");
        }
    }

    #[test]
    fn gram_single_point_is_unit() {
        let grid = sample_circuit(2, 2, &GatePolicy::default(), 0).unwrap();
        let theta = vec![0.5; grid.count_rz()];
        let gram = gram_matrix(&[vec![0.3, 0.4]], &[vec![0.3, 0.4]], &grid, &theta).unwrap();
        assert!((gram[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gram_matches_kernel_entrywise_on_empty_grid() {
        let grid = CircuitGrid::empty(2, 0).unwrap();
        let mut rng = Rng::new(3);
        let xs: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..2).map(|_| rng.uniform(0.0, 3.0)).collect())
            .collect();
        let gram = gram_matrix(&xs, &xs, &grid, &[]).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let expect: f64 = xs[a]
                    .iter()
                    .zip(&xs[b])
                    .map(|(p, q)| (p - q).cos().powi(2))
                    .product();
                assert!((gram[a][b] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gram_is_positive_semidefinite() {
        let mut rng = Rng::new(7);
        let grid = sample_circuit(4, 5, &GatePolicy::default(), 77).unwrap();
        let theta: Vec<f64> = (0..grid.count_rz())
            .map(|_| rng.uniform(0.0, std::f64::consts::TAU))
            .collect();
        let xs: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..4).map(|_| rng.uniform(0.0, std::f64::consts::PI)).collect())
            .collect();
        let gram = gram_matrix(&xs, &xs, &grid, &theta).unwrap();
        let m = DMatrix::from_fn(20, 20, |i, j| gram[i][j]);
        let eigen = m.symmetric_eigen();
        let min_eig = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_eig >= -1e-9, "min eigenvalue {min_eig}");
    }
}
