//! Gate grids: representation, random sampling, validation and depth
//! extension of the circuits whose arrangement is being searched.
//!
//! A circuit on `n_qubits` qubits with `n_layers` layers is a dense grid of
//! slots, one per (qubit, layer). Rows are qubits, columns are layers. Slots
//! hold the identity, a parametrized Rz, or one endpoint of a CNOT pair whose
//! control records the qubit offset `delta`; the target row is always
//! `(control + delta) mod n_qubits`.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// One grid slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateSlot {
    Identity,
    Rz,
    /// Control endpoint of a CNOT; the paired target sits `delta` rows below
    /// (wrapping around the qubit register).
    CnotControl { delta: usize },
    CnotTarget,
}

impl GateSlot {
    pub fn code(&self) -> String {
        match self {
            GateSlot::Identity => "I".to_string(),
            GateSlot::Rz => "RZ".to_string(),
            GateSlot::CnotControl { delta } => format!("C{delta}"),
            GateSlot::CnotTarget => "T".to_string(),
        }
    }

    pub fn from_code(code: &str) -> Result<Self> {
        match code {
            "I" => Ok(GateSlot::Identity),
            "RZ" => Ok(GateSlot::Rz),
            "T" => Ok(GateSlot::CnotTarget),
            _ => {
                if let Some(d) = code.strip_prefix('C') {
                    let delta: usize = d
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad slot code {code:?}")))?;
                    if delta == 0 {
                        return Err(Error::Parse("CNOT offset must be positive".into()));
                    }
                    Ok(GateSlot::CnotControl { delta })
                } else {
                    Err(Error::Parse(format!("bad slot code {code:?}")))
                }
            }
        }
    }
}

/// Probabilities of drawing each slot kind while sampling, plus the cap on
/// the CNOT offset.
#[derive(Debug, Clone)]
pub struct GatePolicy {
    pub p_identity: f64,
    pub p_rz: f64,
    pub p_cnot: f64,
    /// Cap on the CNOT offset; `None` means `n_qubits - 1`.
    pub delta_max: Option<usize>,
}

impl Default for GatePolicy {
    fn default() -> Self {
        GatePolicy {
            p_identity: 0.2,
            p_rz: 0.5,
            p_cnot: 0.3,
            delta_max: None,
        }
    }
}

impl GatePolicy {
    pub fn validate(&self) -> Result<()> {
        let probs = [self.p_identity, self.p_rz, self.p_cnot];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p) || !p.is_finite()) {
            return Err(Error::InvalidPolicy(format!(
                "probabilities must lie in [0, 1], got {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPolicy(format!(
                "probabilities must sum to 1, got {sum}"
            )));
        }
        if self.delta_max == Some(0) {
            return Err(Error::InvalidPolicy("delta_max must be at least 1".into()));
        }
        Ok(())
    }

    fn effective_delta_max(&self, n_qubits: usize) -> usize {
        self.delta_max.unwrap_or(n_qubits - 1).min(n_qubits - 1)
    }
}

/// Dense gate grid. Slots are stored layer-major: layer 0 rows 0..n_qubits,
/// then layer 1, and so on. That scan order also defines the order in which
/// Rz slots consume entries of a parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitGrid {
    n_qubits: usize,
    n_layers: usize,
    slots: Vec<GateSlot>,
}

impl CircuitGrid {
    /// All-identity grid.
    pub fn empty(n_qubits: usize, n_layers: usize) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::InvalidCircuit(format!(
                "need at least 2 qubits, got {n_qubits}"
            )));
        }
        Ok(CircuitGrid {
            n_qubits,
            n_layers,
            slots: vec![GateSlot::Identity; n_qubits * n_layers],
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn slot(&self, qubit: usize, layer: usize) -> GateSlot {
        self.slots[layer * self.n_qubits + qubit]
    }

    pub fn set_slot(&mut self, qubit: usize, layer: usize, slot: GateSlot) {
        self.slots[layer * self.n_qubits + qubit] = slot;
    }

    /// Slots of one layer, in row order.
    pub fn layer(&self, layer: usize) -> &[GateSlot] {
        &self.slots[layer * self.n_qubits..(layer + 1) * self.n_qubits]
    }

    /// Number of Rz slots; this is the dimension of the free-parameter
    /// vector of the circuit.
    pub fn count_rz(&self) -> usize {
        self.slots.iter().filter(|s| **s == GateSlot::Rz).count()
    }

    /// Number of CNOT pairs.
    pub fn count_cnot(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| matches!(s, GateSlot::CnotControl { .. }))
            .count()
    }

    /// The atom-contributing gates of one row, reading layers left to right.
    /// Identity and CNOT-target slots are skipped: a target carries no
    /// information beyond its control's offset.
    pub fn row_gate_sequence(&self, qubit: usize) -> Vec<GateSlot> {
        (0..self.n_layers)
            .filter_map(|l| match self.slot(qubit, l) {
                GateSlot::Identity | GateSlot::CnotTarget => None,
                g => Some(g),
            })
            .collect()
    }

    /// Check every structural invariant; returns one human-readable line per
    /// violation, empty when the grid is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        for l in 0..self.n_layers {
            let mut target_of: Vec<Option<usize>> = vec![None; self.n_qubits];
            for q in 0..self.n_qubits {
                if let GateSlot::CnotControl { delta } = self.slot(q, l) {
                    if delta == 0 || delta >= self.n_qubits {
                        violations.push(format!(
                            "control at (row {q}, layer {l}) has offset {delta} outside 1..{}",
                            self.n_qubits - 1
                        ));
                        continue;
                    }
                    let t = (q + delta) % self.n_qubits;
                    if self.slot(t, l) != GateSlot::CnotTarget {
                        violations.push(format!(
                            "control at (row {q}, layer {l}) expects a target at (row {t}, layer {l}), found {}",
                            self.slot(t, l).code()
                        ));
                    } else if let Some(prev) = target_of[t] {
                        violations.push(format!(
                            "target at (row {t}, layer {l}) is claimed by controls at rows {prev} and {q}"
                        ));
                    } else {
                        target_of[t] = Some(q);
                    }
                }
            }
            for q in 0..self.n_qubits {
                if self.slot(q, l) == GateSlot::CnotTarget && target_of[q].is_none() {
                    violations.push(format!(
                        "target at (row {q}, layer {l}) has no partner control"
                    ));
                }
            }
        }
        violations
    }

    /// One-line text form: `n_qubits n_layers <codes layer-major>`.
    /// Round-trips bit-exactly through [`CircuitGrid::from_line`].
    pub fn to_line(&self) -> String {
        let mut parts = Vec::with_capacity(2 + self.slots.len());
        parts.push(self.n_qubits.to_string());
        parts.push(self.n_layers.to_string());
        parts.extend(self.slots.iter().map(|s| s.code()));
        parts.join(" ")
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let mut tokens = line.split_whitespace();
        let n_qubits: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("empty circuit line".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad qubit count".into()))?;
        let n_layers: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing layer count".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad layer count".into()))?;
        let codes: Vec<&str> = tokens.collect();
        if codes.len() != n_qubits * n_layers {
            return Err(Error::Parse(format!(
                "expected {} slot codes, found {}",
                n_qubits * n_layers,
                codes.len()
            )));
        }
        let mut grid = CircuitGrid::empty(n_qubits, n_layers)?;
        for (idx, code) in codes.iter().enumerate() {
            grid.slots[idx] = GateSlot::from_code(code)?;
        }
        Ok(grid)
    }
}

/// Sample one random grid. Each layer is filled scanning rows top to bottom:
/// every still-empty slot draws a kind from `policy`; a drawn CNOT control
/// samples its offset uniformly from `1..=delta_max` and claims the target
/// slot, falling back to Rz when the target slot is already taken.
pub fn sample_circuit(
    n_qubits: usize,
    n_layers: usize,
    policy: &GatePolicy,
    seed: u64,
) -> Result<CircuitGrid> {
    policy.validate()?;
    let mut grid = CircuitGrid::empty(n_qubits, n_layers)?;
    let mut rng = Rng::new(seed);
    for l in 0..n_layers {
        sample_layer(&mut grid, l, policy, &mut rng);
    }
    Ok(grid)
}

fn sample_layer(grid: &mut CircuitGrid, layer: usize, policy: &GatePolicy, rng: &mut Rng) {
    let n = grid.n_qubits();
    // Track which slots of this layer are decided. A slot claimed as a CNOT
    // target counts as decided, and so does a slot already drawn as Identity:
    // wrap-around controls never overwrite earlier rows.
    let mut decided = vec![false; n];
    let delta_max = policy.effective_delta_max(n);
    for q in 0..n {
        if decided[q] {
            continue;
        }
        decided[q] = true;
        let draw = rng.next_f64();
        let slot = if draw < policy.p_identity {
            GateSlot::Identity
        } else if draw < policy.p_identity + policy.p_rz {
            GateSlot::Rz
        } else {
            let delta = 1 + rng.next_below(delta_max as u64) as usize;
            let target = (q + delta) % n;
            if decided[target] {
                GateSlot::Rz
            } else {
                decided[target] = true;
                grid.set_slot(target, layer, GateSlot::CnotTarget);
                GateSlot::CnotControl { delta }
            }
        };
        grid.set_slot(q, layer, slot);
    }
}

/// Append `extra_layers` freshly sampled layers to `grid`. The existing
/// layers are copied bit-identically.
pub fn extend_circuit(
    grid: &CircuitGrid,
    extra_layers: usize,
    policy: &GatePolicy,
    seed: u64,
) -> Result<CircuitGrid> {
    policy.validate()?;
    let violations = grid.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidCircuit(violations.join("; ")));
    }
    let mut extended = CircuitGrid::empty(grid.n_qubits(), grid.n_layers() + extra_layers)?;
    extended.slots[..grid.slots.len()].copy_from_slice(&grid.slots);
    let mut rng = Rng::new(seed);
    for l in grid.n_layers()..extended.n_layers() {
        sample_layer(&mut extended, l, policy, &mut rng);
    }
    Ok(extended)
}
