//! Molecular geometry and physics descriptors: hydrogen saturation, 2D
//! force-directed layout, Coulomb matrices and Gershgorin radii.

use crate::chemmap::{Atom, AtomRole, Element, Molecule};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};

/// Minimum admissible distance between two atoms, in layout units.
pub const DISTANCE_FLOOR: f64 = 1e-3;

/// Per-atom 2D positions. One layout unit corresponds to one target bond
/// length.
#[derive(Debug, Clone, PartialEq)]
pub struct Coordinates2D {
    pub points: Vec<[f64; 2]>,
}

impl Coordinates2D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let dx = self.points[i][0] - self.points[j][0];
        let dy = self.points[i][1] - self.points[j][1];
        (dx * dx + dy * dy).sqrt()
    }
}

/// Settings for [`layout_2d`].
#[derive(Debug, Clone)]
pub struct LayoutParams {
    /// Target length of one bond, in layout units.
    pub bond_length: f64,
    /// Terminate once the largest per-atom gradient norm drops below this.
    pub gradient_tol: f64,
    pub max_iterations: usize,
    /// Radius of the seeded perturbation applied to the circular start.
    pub jitter: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            bond_length: 1.0,
            gradient_tol: 1e-4,
            max_iterations: 2000,
            jitter: 0.01,
        }
    }
}

/// Outcome of a stress minimization.
#[derive(Debug, Clone)]
pub struct LayoutResult {
    pub coords: Coordinates2D,
    pub initial_stress: f64,
    pub final_stress: f64,
    pub iterations: usize,
    /// True when the gradient tolerance was reached before the iteration cap.
    pub converged: bool,
}

/// Symmetric Coulomb matrix: `0.5 * Z^2.4` on the diagonal, `Z_i Z_j / r_ij`
/// off it.
#[derive(Debug, Clone, PartialEq)]
pub struct CoulombMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CoulombMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("matrix must be square".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(CoulombMatrix { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Radii of the smallest and largest Gershgorin discs of a Coulomb matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GershgorinSummary {
    pub r_min: f64,
    pub r_max: f64,
}

/// Attach hydrogens until every atom's bond degree equals its valence.
/// Hydrogens are appended after all existing atoms, scanning the heavy atoms
/// in index order, which keeps the stable atom ordering of mapped molecules.
pub fn saturate_hydrogens(mol: &Molecule) -> Result<Molecule> {
    let mut out = mol.clone();
    let degrees = mol.degrees();
    for (i, atom) in mol.atoms.iter().enumerate() {
        let valence = atom.element.valence();
        if degrees[i] > valence {
            return Err(Error::ValenceExceeded {
                atom: i,
                degree: degrees[i],
                valence,
            });
        }
        for _ in degrees[i]..valence {
            let h = out.atoms.len();
            out.atoms.push(Atom {
                element: Element::H,
                role: AtomRole::Hydrogen,
            });
            out.bonds.push((i, h));
        }
    }
    Ok(out)
}

/// All-pairs shortest path distances over the bond graph, by BFS from every
/// atom. Errors when the graph is disconnected.
fn graph_distances(mol: &Molecule) -> Result<Vec<Vec<usize>>> {
    let n = mol.atom_count();
    let adj = mol.adjacency();
    let mut dist = vec![vec![usize::MAX; n]; n];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        dist[start][start] = 0;
        queue.push_back(start);
        while let Some(a) = queue.pop_front() {
            for &b in &adj[a] {
                if dist[start][b] == usize::MAX {
                    dist[start][b] = dist[start][a] + 1;
                    queue.push_back(b);
                }
            }
        }
        if dist[start].iter().any(|&d| d == usize::MAX) {
            return Err(Error::Disconnected);
        }
    }
    Ok(dist)
}

fn stress(points: &[[f64; 2]], targets: &[Vec<f64>], springs: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            let r = (dx * dx + dy * dy).sqrt();
            let stretch = r - targets[i][j];
            total += 0.5 * springs[i][j] * stretch * stretch;
        }
    }
    total
}

fn stress_gradient(
    points: &[[f64; 2]],
    targets: &[Vec<f64>],
    springs: &[Vec<f64>],
) -> Vec<[f64; 2]> {
    let n = points.len();
    let mut grad = vec![[0.0f64; 2]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            let mut r = (dx * dx + dy * dy).sqrt();
            let (ux, uy) = if r < 1e-12 {
                r = 1e-12;
                (1.0, 0.0)
            } else {
                (dx / r, dy / r)
            };
            let pull = springs[i][j] * (r - targets[i][j]);
            grad[i][0] += pull * ux;
            grad[i][1] += pull * uy;
            grad[j][0] -= pull * ux;
            grad[j][1] -= pull * uy;
        }
    }
    grad
}

/// Minimize the spring stress `sum k_ij (||p_i - p_j|| - L0 d_ij)^2 / 2`
/// with `d_ij` the bond-graph distance and `k_ij = 1 / d_ij^2`, by gradient
/// descent with a backtracking line search. The start is a deterministic
/// circle perturbed by seeded jitter, so identical inputs and seed give
/// identical coordinates.
pub fn layout_2d(mol: &Molecule, params: &LayoutParams, seed: u64) -> Result<LayoutResult> {
    let n = mol.atom_count();
    if n == 0 {
        return Err(Error::Degenerate("cannot lay out an empty molecule".into()));
    }
    let dist = graph_distances(mol)?;
    let targets: Vec<Vec<f64>> = dist
        .iter()
        .map(|row| row.iter().map(|&d| params.bond_length * d as f64).collect())
        .collect();
    // Spring constants follow the graph distance, not the scaled length.
    let springs: Vec<Vec<f64>> = dist
        .iter()
        .map(|row| {
            row.iter()
                .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d * d) as f64 })
                .collect()
        })
        .collect();
    let diameter = dist
        .iter()
        .flat_map(|row| row.iter().copied())
        .max()
        .unwrap_or(0);

    for attempt in 0..4 {
        let result = minimize_from_circle(
            n,
            &targets,
            &springs,
            params,
            derive_seed(seed, attempt),
            diameter,
        );
        let ok = min_pair_distance(&result.coords) >= DISTANCE_FLOOR || n < 2;
        if ok {
            return Ok(result);
        }
    }
    Err(Error::Degenerate(
        "layout could not separate all atoms past the distance floor".into(),
    ))
}

fn min_pair_distance(coords: &Coordinates2D) -> f64 {
    let n = coords.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            best = best.min(coords.distance(i, j));
        }
    }
    best
}

fn minimize_from_circle(
    n: usize,
    targets: &[Vec<f64>],
    springs: &[Vec<f64>],
    params: &LayoutParams,
    seed: u64,
    diameter: usize,
) -> LayoutResult {
    let mut rng = Rng::new(seed);
    let radius = (params.bond_length * diameter as f64 / 2.0).max(params.bond_length);
    let mut points: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let angle = std::f64::consts::TAU * i as f64 / n as f64;
            [
                radius * angle.cos() + rng.uniform(-params.jitter, params.jitter),
                radius * angle.sin() + rng.uniform(-params.jitter, params.jitter),
            ]
        })
        .collect();

    let initial_stress = stress(&points, targets, springs);
    let mut current = initial_stress;
    let mut step = 0.1;
    let mut iterations = 0;
    let mut converged = n < 2;

    for _ in 0..params.max_iterations {
        if n < 2 {
            break;
        }
        let grad = stress_gradient(&points, targets, springs);
        let gmax = grad
            .iter()
            .map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt())
            .fold(0.0f64, f64::max);
        if gmax < params.gradient_tol {
            converged = true;
            break;
        }
        let gsq: f64 = grad.iter().map(|g| g[0] * g[0] + g[1] * g[1]).sum();
        let mut accepted = false;
        while step > 1e-16 {
            let candidate: Vec<[f64; 2]> = points
                .iter()
                .zip(&grad)
                .map(|(p, g)| [p[0] - step * g[0], p[1] - step * g[1]])
                .collect();
            let trial = stress(&candidate, targets, springs);
            if trial <= current - 1e-4 * step * gsq {
                points = candidate;
                current = trial;
                step = (step * 1.5).min(10.0);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }

    LayoutResult {
        coords: Coordinates2D { points },
        initial_stress,
        final_stress: current,
        iterations,
        converged,
    }
}

/// Coulomb matrix of a laid-out molecule. `bond_scale` converts layout units
/// to angstroms (default 1.5 in the descriptor pipeline).
pub fn coulomb_matrix(
    mol: &Molecule,
    coords: &Coordinates2D,
    bond_scale: f64,
) -> Result<CoulombMatrix> {
    let n = mol.atom_count();
    if coords.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} atoms but {} coordinates",
            n,
            coords.len()
        )));
    }
    if !(bond_scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bond_scale must be positive, got {bond_scale}"
        )));
    }
    let mut data = vec![0.0f64; n * n];
    for i in 0..n {
        let zi = mol.atoms[i].element.atomic_number() as f64;
        data[i * n + i] = 0.5 * zi.powf(2.4);
        for j in (i + 1)..n {
            let dist = coords.distance(i, j);
            if dist < DISTANCE_FLOOR {
                return Err(Error::CoincidentAtoms {
                    i,
                    j,
                    dist,
                    floor: DISTANCE_FLOOR,
                });
            }
            let zj = mol.atoms[j].element.atomic_number() as f64;
            let value = zi * zj / (bond_scale * dist);
            data[i * n + j] = value;
            data[j * n + i] = value;
        }
    }
    Ok(CoulombMatrix { n, data })
}

/// Row-wise off-diagonal absolute sums, reduced to their minimum and
/// maximum. Cost is quadratic in the atom count.
pub fn gershgorin_radii(matrix: &CoulombMatrix) -> Result<GershgorinSummary> {
    let n = matrix.size();
    if n == 0 {
        return Err(Error::Degenerate("empty matrix".into()));
    }
    let mut r_min = f64::INFINITY;
    let mut r_max = f64::NEG_INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        for j in 0..n {
            if i != j {
                radius += matrix.get(i, j).abs();
            }
        }
        r_min = r_min.min(radius);
        r_max = r_max.max(radius);
    }
    Ok(GershgorinSummary { r_min, r_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemmap::circuit_to_molecule;
    use crate::circuit::{sample_circuit, GatePolicy};
    use nalgebra::DMatrix;

    fn lone_atom(element: Element) -> Molecule {
        Molecule {
            n_qubits: 2,
            atoms: vec![Atom {
                element,
                role: AtomRole::Backbone,
            }],
            bonds: vec![],
        }
    }

    #[test]
    fn lone_carbon_becomes_methane() {
        let sat = saturate_hydrogens(&lone_atom(Element::C)).unwrap();
        assert_eq!(sat.atom_count(), 5);
        assert_eq!(sat.bonds.len(), 4);
        assert!(sat.validate().is_empty());
    }

    #[test]
    fn chain_cn_saturates_by_valence_arithmetic() {
        let mol = Molecule {
            n_qubits: 2,
            atoms: vec![
                Atom {
                    element: Element::C,
                    role: AtomRole::Backbone,
                },
                Atom {
                    element: Element::N,
                    role: AtomRole::Branch { qubit: 0, pos: 0 },
                },
            ],
            bonds: vec![(0, 1)],
        };
        let sat = saturate_hydrogens(&mol).unwrap();
        let h_on_c = sat.bonds.iter().filter(|(a, b)| *a == 0 || *b == 0).count() - 1;
        let h_on_n = sat.bonds.iter().filter(|(a, b)| *a == 1 || *b == 1).count() - 1;
        assert_eq!(h_on_c, 3);
        assert_eq!(h_on_n, 2);
    }

    #[test]
    fn saturation_is_idempotent() {
        let sat = saturate_hydrogens(&lone_atom(Element::C)).unwrap();
        let again = saturate_hydrogens(&sat).unwrap();
        assert_eq!(sat, again);
    }

    #[test]
    fn saturation_rejects_overbonded_atoms() {
        let mut mol = lone_atom(Element::O);
        for _ in 0..3 {
            let h = mol.atoms.len();
            mol.atoms.push(Atom {
                element: Element::H,
                role: AtomRole::Hydrogen,
            });
            mol.bonds.push((0, h));
        }
        assert!(matches!(
            saturate_hydrogens(&mol),
            Err(Error::ValenceExceeded { atom: 0, .. })
        ));
    }

    #[test]
    fn diatomic_layout_hits_exact_spring_minimum() {
        let mol = saturate_hydrogens(&lone_atom(Element::H)).unwrap();
        assert_eq!(mol.atom_count(), 2);
        let result = layout_2d(&mol, &LayoutParams::default(), 3).unwrap();
        let d = result.coords.distance(0, 1);
        assert!((d - 1.0).abs() < 1e-3, "distance {d}");
        assert!(result.final_stress <= result.initial_stress);
    }

    #[test]
    fn three_atom_path_layout_decreases_stress() {
        let mol = Molecule {
            n_qubits: 2,
            atoms: vec![
                Atom {
                    element: Element::O,
                    role: AtomRole::Backbone,
                },
                Atom {
                    element: Element::H,
                    role: AtomRole::Hydrogen,
                },
                Atom {
                    element: Element::H,
                    role: AtomRole::Hydrogen,
                },
            ],
            bonds: vec![(0, 1), (0, 2)],
        };
        let result = layout_2d(&mol, &LayoutParams::default(), 5).unwrap();
        assert!(result.final_stress < result.initial_stress);
        assert!((result.coords.distance(0, 1) - 1.0).abs() < 1e-2);
        assert!((result.coords.distance(0, 2) - 1.0).abs() < 1e-2);
        assert!(result.converged, "gradient tolerance not reached");
    }

    #[test]
    fn layout_honors_the_bond_length_unit() {
        let mol = Molecule {
            n_qubits: 2,
            atoms: vec![
                Atom {
                    element: Element::O,
                    role: AtomRole::Backbone,
                },
                Atom {
                    element: Element::H,
                    role: AtomRole::Hydrogen,
                },
                Atom {
                    element: Element::H,
                    role: AtomRole::Hydrogen,
                },
            ],
            bonds: vec![(0, 1), (0, 2)],
        };
        let params = LayoutParams {
            bond_length: 2.0,
            ..LayoutParams::default()
        };
        let result = layout_2d(&mol, &params, 7).unwrap();
        assert!((result.coords.distance(0, 1) - 2.0).abs() < 2e-2);
        assert!((result.coords.distance(0, 2) - 2.0).abs() < 2e-2);
    }

    #[test]
    fn layout_is_deterministic() {
        let grid = sample_circuit(4, 3, &GatePolicy::default(), 17).unwrap();
        let mol = circuit_to_molecule(&grid).unwrap();
        let a = layout_2d(&mol, &LayoutParams::default(), 9).unwrap();
        let b = layout_2d(&mol, &LayoutParams::default(), 9).unwrap();
        assert_eq!(a.coords, b.coords);
    }

    #[test]
    fn layout_rejects_disconnected_graphs() {
        let mol = Molecule {
            n_qubits: 2,
            atoms: vec![
                Atom {
                    element: Element::H,
                    role: AtomRole::Hydrogen,
                },
                Atom {
                    element: Element::H,
                    role: AtomRole::Hydrogen,
                },
            ],
            bonds: vec![],
        };
        assert!(matches!(
            layout_2d(&mol, &LayoutParams::default(), 0),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn coulomb_diagonal_matches_direct_evaluation() {
        let mol = Molecule {
            n_qubits: 2,
            atoms: vec![
                Atom {
                    element: Element::C,
                    role: AtomRole::Backbone,
                },
                Atom {
                    element: Element::H,
                    role: AtomRole::Hydrogen,
                },
            ],
            bonds: vec![(0, 1)],
        };
        let coords = Coordinates2D {
            points: vec![[0.0, 0.0], [1.0, 0.0]],
        };
        let m = coulomb_matrix(&mol, &coords, 1.09).unwrap();
        // 0.5 * 6^2.4 evaluated directly.
        assert!((m.get(0, 0) - 36.858_105_199_425_94).abs() < 1e-9, "C diagonal {}", m.get(0, 0));
        assert!((m.get(1, 1) - 0.5).abs() < 1e-12, "H diagonal {}", m.get(1, 1));
        // C and H separated by 1.09 angstroms.
        assert!((m.get(0, 1) - 6.0 / 1.09).abs() < 1e-9);
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn coulomb_rejects_coincident_atoms() {
        let mol = saturate_hydrogens(&lone_atom(Element::H)).unwrap();
        let coords = Coordinates2D {
            points: vec![[0.0, 0.0], [1e-5, 0.0]],
        };
        assert!(matches!(
            coulomb_matrix(&mol, &coords, 1.5),
            Err(Error::CoincidentAtoms { .. })
        ));
    }

    #[test]
    fn coulomb_is_rigid_motion_invariant() {
        let grid = sample_circuit(4, 2, &GatePolicy::default(), 23).unwrap();
        let mol = circuit_to_molecule(&grid).unwrap();
        let layout = layout_2d(&mol, &LayoutParams::default(), 1).unwrap();
        let base = coulomb_matrix(&mol, &layout.coords, 1.5).unwrap();
        let angle: f64 = 0.7;
        let (s, c) = angle.sin_cos();
        let moved = Coordinates2D {
            points: layout
                .coords
                .points
                .iter()
                .map(|p| [c * p[0] - s * p[1] + 3.5, s * p[0] + c * p[1] - 1.25])
                .collect(),
        };
        let rotated = coulomb_matrix(&mol, &moved, 1.5).unwrap();
        for i in 0..base.size() {
            for j in 0..base.size() {
                assert!(
                    (base.get(i, j) - rotated.get(i, j)).abs() < 1e-10,
                    "entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn gershgorin_of_diagonal_matrix_is_zero() {
        let m = CoulombMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 5.0]]).unwrap();
        let g = gershgorin_radii(&m).unwrap();
        assert_eq!(g.r_min, 0.0);
        assert_eq!(g.r_max, 0.0);
    }

    #[test]
    fn gershgorin_two_by_two() {
        let m = CoulombMatrix::from_rows(&[vec![36.856, 5.505], vec![5.505, 0.5]]).unwrap();
        let g = gershgorin_radii(&m).unwrap();
        assert!((g.r_min - 5.505).abs() < 1e-12);
        assert!((g.r_max - 5.505).abs() < 1e-12);
    }

    #[test]
    fn gershgorin_matches_row_sum_oracle() {
        // Off-diagonal row sums 3, 7, 4 by construction.
        let m = CoulombMatrix::from_rows(&[
            vec![1.0, 1.0, 2.0],
            vec![1.0, 2.0, 6.0],
            vec![2.0, 2.0, 3.0],
        ])
        .unwrap();
        let g = gershgorin_radii(&m).unwrap();
        assert_eq!(g.r_min, 3.0);
        assert_eq!(g.r_max, 7.0);

        // Independent double-loop oracle over random symmetric matrices.
        let mut rng = crate::rng::Rng::new(4);
        for _ in 0..20 {
            let n = 2 + rng.next_below(6) as usize;
            let mut rows = vec![vec![0.0f64; n]; n];
            for i in 0..n {
                for j in i..n {
                    let v = rng.uniform(-3.0, 3.0);
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
            let m = CoulombMatrix::from_rows(&rows).unwrap();
            let got = gershgorin_radii(&m).unwrap();
            let mut radii = Vec::new();
            for i in 0..n {
                let mut sum = 0.0;
                for j in 0..n {
                    if j != i {
                        sum += rows[i][j].abs();
                    }
                }
                radii.push(sum);
            }
            let expect_min = radii.iter().cloned().fold(f64::INFINITY, f64::min);
            let expect_max = radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(got.r_min, expect_min);
            assert_eq!(got.r_max, expect_max);
        }
    }

    #[test]
    fn gershgorin_rejects_empty_matrix() {
        let m = CoulombMatrix::from_rows(&[]).unwrap();
        assert!(gershgorin_radii(&m).is_err());
    }

    #[test]
    fn eigenvalues_lie_inside_disc_union() {
        // Closed-disc containment against an eigensolver oracle.
        for seed in 0..20 {
            let grid = sample_circuit(4, 1 + seed as usize % 3, &GatePolicy::default(), seed)
                .unwrap();
            let mol = circuit_to_molecule(&grid).unwrap();
            if mol.atom_count() > 40 {
                continue;
            }
            let layout = layout_2d(&mol, &LayoutParams::default(), seed).unwrap();
            let m = coulomb_matrix(&mol, &layout.coords, 1.5).unwrap();
            let g = gershgorin_radii(&m).unwrap();
            let n = m.size();
            let dm = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
            let eigen = dm.symmetric_eigen();
            for &lambda in eigen.eigenvalues.iter() {
                let inside = (0..n).any(|i| {
                    let radius = (0..n)
                        .filter(|&j| j != i)
                        .map(|j| m.get(i, j).abs())
                        .sum::<f64>();
                    (lambda - m.get(i, i)).abs() <= radius + 1e-9
                });
                assert!(inside, "seed {seed}: eigenvalue {lambda} escapes all discs");
            }
            assert!(g.r_min <= g.r_max);
        }
    }
}
