//! Mapping between gate grids and annotated molecules.
//!
//! Every circuit becomes a molecule built around a carbon backbone chain:
//! qubit `i` is a branch of atoms hanging off its backbone carbon, and each
//! atom of the branch encodes one gate of row `i` read left to right. Rz maps
//! to carbon; a CNOT control with offset 1/2/3/4 maps to N/O/S/P. Identity
//! slots and CNOT targets contribute no atom, so the inverse direction packs
//! the surviving gates back into the earliest layers that can hold them.

use crate::circuit::{CircuitGrid, GateSlot};
use crate::error::{Error, Result};
use crate::molecule::saturate_hydrogens;

/// Chemical elements used by the mapping, with fixed valences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    C,
    N,
    O,
    S,
    P,
    H,
}

impl Element {
    pub fn valence(&self) -> usize {
        match self {
            Element::C => 4,
            Element::N => 3,
            Element::O => 2,
            Element::S => 2,
            Element::P => 3,
            Element::H => 1,
        }
    }

    pub fn atomic_number(&self) -> u32 {
        match self {
            Element::H => 1,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::P => 15,
            Element::S => 16,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::S => "S",
            Element::P => "P",
            Element::H => "H",
        }
    }

    pub fn from_symbol(sym: &str) -> Result<Self> {
        match sym {
            "C" => Ok(Element::C),
            "N" => Ok(Element::N),
            "O" => Ok(Element::O),
            "S" => Ok(Element::S),
            "P" => Ok(Element::P),
            "H" => Ok(Element::H),
            _ => Err(Error::Parse(format!("unknown element symbol {sym:?}"))),
        }
    }

    /// Branch element for a CNOT control with the given offset.
    fn for_cnot_offset(delta: usize) -> Option<Element> {
        match delta {
            1 => Some(Element::N),
            2 => Some(Element::O),
            3 => Some(Element::S),
            4 => Some(Element::P),
            _ => None,
        }
    }

    /// Inverse of [`Element::for_cnot_offset`].
    fn cnot_offset(&self) -> Option<usize> {
        match self {
            Element::N => Some(1),
            Element::O => Some(2),
            Element::S => Some(3),
            Element::P => Some(4),
            _ => None,
        }
    }
}

/// Structural role of an atom inside a mapped molecule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomRole {
    /// Part of the central carbon chain.
    Backbone,
    /// Chain atom encoding gate number `pos` of qubit `qubit`.
    Branch { qubit: usize, pos: usize },
    /// Valence-saturating hydrogen.
    Hydrogen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub role: AtomRole,
}

/// Annotated molecular graph. `n_qubits` records the register size of the
/// originating circuit; without it the inverse mapping could not distinguish
/// e.g. a 2-qubit empty circuit from a 4-qubit one (both are methane).
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub n_qubits: usize,
    pub atoms: Vec<Atom>,
    pub bonds: Vec<(usize, usize)>,
}

impl Molecule {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.bonds
            .iter()
            .filter(|(a, b)| *a == atom || *b == atom)
            .count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.atoms.len()];
        for &(a, b) in &self.bonds {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for &(a, b) in &self.bonds {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.atoms.is_empty() {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.atoms.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(a) = stack.pop() {
            for &b in &adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    count += 1;
                    stack.push(b);
                }
            }
        }
        count == self.atoms.len()
    }

    /// Check the invariants of a saturated molecule; one line per violation.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        let deg = self.degrees();
        for (i, atom) in self.atoms.iter().enumerate() {
            if deg[i] != atom.element.valence() {
                violations.push(format!(
                    "atom {i} ({}) has degree {} but valence {}",
                    atom.element.symbol(),
                    deg[i],
                    atom.element.valence()
                ));
            }
        }
        if !self.is_connected() {
            violations.push("molecular graph is disconnected".into());
        }
        let backbone: Vec<usize> = self
            .atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == AtomRole::Backbone)
            .map(|(i, _)| i)
            .collect();
        for &i in &backbone {
            if self.atoms[i].element != Element::C {
                violations.push(format!("backbone atom {i} is not carbon"));
            }
        }
        // Backbone atoms must form a simple path in index order.
        let backbone_bonds = self
            .bonds
            .iter()
            .filter(|(a, b)| {
                self.atoms[*a].role == AtomRole::Backbone && self.atoms[*b].role == AtomRole::Backbone
            })
            .count();
        if backbone_bonds + 1 != backbone.len() && !backbone.is_empty() {
            violations.push(format!(
                "backbone has {} atoms but {} backbone-backbone bonds",
                backbone.len(),
                backbone_bonds
            ));
        }
        for w in backbone.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !self.bonds.contains(&(a, b)) && !self.bonds.contains(&(b, a)) {
                violations.push(format!("backbone atoms {a} and {b} are not bonded"));
            }
        }
        violations
    }

    /// One-line text form: `q<n> atoms <sym:role,...> bonds <i-j,...>`.
    /// Atom order is stable (backbone, branches by qubit, hydrogens), so
    /// files round-trip byte-exactly.
    pub fn to_line(&self) -> String {
        let atoms: Vec<String> = self
            .atoms
            .iter()
            .map(|a| match a.role {
                AtomRole::Backbone => format!("{}:B", a.element.symbol()),
                AtomRole::Branch { qubit, pos } => {
                    format!("{}:R:{}:{}", a.element.symbol(), qubit, pos)
                }
                AtomRole::Hydrogen => format!("{}:H", a.element.symbol()),
            })
            .collect();
        let bonds: Vec<String> = self.bonds.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        let bond_field = if bonds.is_empty() {
            "none".to_string()
        } else {
            bonds.join(",")
        };
        format!(
            "q{} atoms {} bonds {}",
            self.n_qubits,
            atoms.join(","),
            bond_field
        )
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 5 || tokens[1] != "atoms" || tokens[3] != "bonds" {
            return Err(Error::Parse(format!("malformed molecule line {line:?}")));
        }
        let n_qubits: usize = tokens[0]
            .strip_prefix('q')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("bad qubit field".into()))?;
        let mut atoms = Vec::new();
        for entry in tokens[2].split(',') {
            let parts: Vec<&str> = entry.split(':').collect();
            let element = Element::from_symbol(parts[0])?;
            let role = match parts.get(1) {
                Some(&"B") => AtomRole::Backbone,
                Some(&"H") => AtomRole::Hydrogen,
                Some(&"R") if parts.len() == 4 => AtomRole::Branch {
                    qubit: parts[2]
                        .parse()
                        .map_err(|_| Error::Parse("bad qubit index".into()))?,
                    pos: parts[3]
                        .parse()
                        .map_err(|_| Error::Parse("bad chain position".into()))?,
                },
                _ => return Err(Error::Parse(format!("bad atom entry {entry:?}"))),
            };
            atoms.push(Atom { element, role });
        }
        let mut bonds = Vec::new();
        if tokens[4] != "none" {
            for entry in tokens[4].split(',') {
                let (a, b) = entry
                    .split_once('-')
                    .ok_or_else(|| Error::Parse(format!("bad bond entry {entry:?}")))?;
                let a: usize = a.parse().map_err(|_| Error::Parse("bad bond index".into()))?;
                let b: usize = b.parse().map_err(|_| Error::Parse("bad bond index".into()))?;
                if a >= atoms.len() || b >= atoms.len() {
                    return Err(Error::Parse(format!("bond {a}-{b} out of range")));
                }
                bonds.push((a, b));
            }
        }
        Ok(Molecule {
            n_qubits,
            atoms,
            bonds,
        })
    }
}

/// Number of backbone carbons needed to expose `n_qubits` branches:
/// `max(1, ceil(n_qubits / 2) - 1)`. An odd qubit count uses the next even
/// backbone with one branch slot left for a hydrogen.
pub fn backbone_carbon_count(n_qubits: usize) -> Result<usize> {
    if n_qubits < 2 {
        return Err(Error::InvalidCircuit(format!(
            "need at least 2 qubits, got {n_qubits}"
        )));
    }
    Ok(1.max(n_qubits.div_ceil(2) - 1))
}

/// Branch slots each backbone carbon exposes: a lone carbon offers 4, chain
/// ends 3, interior carbons 2.
fn branch_slots(n_carbons: usize) -> Vec<usize> {
    let mut slots = Vec::new();
    for c in 0..n_carbons {
        let capacity = if n_carbons == 1 {
            4
        } else if c == 0 || c == n_carbons - 1 {
            3
        } else {
            2
        };
        for _ in 0..capacity {
            slots.push(c);
        }
    }
    slots
}

/// Map a valid grid to its saturated molecule.
pub fn circuit_to_molecule(grid: &CircuitGrid) -> Result<Molecule> {
    let violations = grid.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidCircuit(violations.join("; ")));
    }
    let n_qubits = grid.n_qubits();
    let n_carbons = backbone_carbon_count(n_qubits)?;
    let slots = branch_slots(n_carbons);
    debug_assert!(slots.len() >= n_qubits);

    let mut atoms: Vec<Atom> = (0..n_carbons)
        .map(|_| Atom {
            element: Element::C,
            role: AtomRole::Backbone,
        })
        .collect();
    let mut bonds: Vec<(usize, usize)> = (1..n_carbons).map(|c| (c - 1, c)).collect();

    for qubit in 0..n_qubits {
        let mut prev = slots[qubit];
        let mut pos = 0;
        for layer in 0..grid.n_layers() {
            let element = match grid.slot(qubit, layer) {
                GateSlot::Identity | GateSlot::CnotTarget => continue,
                GateSlot::Rz => Element::C,
                GateSlot::CnotControl { delta } => Element::for_cnot_offset(delta)
                    .ok_or(Error::UnmappableOffset {
                        qubit,
                        layer,
                        delta,
                    })?,
            };
            let idx = atoms.len();
            atoms.push(Atom {
                element,
                role: AtomRole::Branch { qubit, pos },
            });
            bonds.push((prev, idx));
            prev = idx;
            pos += 1;
        }
    }

    let skeleton = Molecule {
        n_qubits,
        atoms,
        bonds,
    };
    saturate_hydrogens(&skeleton)
}

/// Inverse mapping. Branch chains are read back into gates and packed
/// greedily: each gate goes to the earliest layer, strictly after the
/// previous gate of its own row, where its slot and (for CNOTs) its target
/// slot are still free. Layers are appended as needed, so packing always
/// terminates.
pub fn molecule_to_circuit(mol: &Molecule) -> Result<CircuitGrid> {
    let n_qubits = mol.n_qubits;
    if n_qubits < 2 {
        return Err(Error::MissingAnnotation(
            "molecule does not record a qubit count".into(),
        ));
    }
    // Gather chains per qubit, ordered by chain position.
    let mut chains: Vec<Vec<(usize, Element)>> = vec![Vec::new(); n_qubits];
    for atom in &mol.atoms {
        if let AtomRole::Branch { qubit, pos } = atom.role {
            if qubit >= n_qubits {
                return Err(Error::MissingAnnotation(format!(
                    "branch annotation names qubit {qubit} but the molecule has {n_qubits}"
                )));
            }
            chains[qubit].push((pos, atom.element));
        }
    }
    for (qubit, chain) in chains.iter_mut().enumerate() {
        chain.sort_by_key(|(pos, _)| *pos);
        for (expect, (pos, _)) in chain.iter().enumerate() {
            if *pos != expect {
                return Err(Error::MissingAnnotation(format!(
                    "qubit {qubit} chain positions are not contiguous"
                )));
            }
        }
    }

    let mut layers: Vec<Vec<GateSlot>> = Vec::new();
    let free = |layers: &mut Vec<Vec<GateSlot>>, layer: usize, qubit: usize| {
        while layers.len() <= layer {
            layers.push(vec![GateSlot::Identity; n_qubits]);
        }
        layers[layer][qubit] == GateSlot::Identity
    };

    for qubit in 0..n_qubits {
        let mut cursor = 0usize;
        for &(_, element) in &chains[qubit] {
            match element.cnot_offset() {
                None => {
                    if element != Element::C {
                        return Err(Error::MissingAnnotation(format!(
                            "branch atom {} cannot encode a gate",
                            element.symbol()
                        )));
                    }
                    let mut l = cursor;
                    while !free(&mut layers, l, qubit) {
                        l += 1;
                    }
                    layers[l][qubit] = GateSlot::Rz;
                    cursor = l + 1;
                }
                Some(delta) => {
                    if delta >= n_qubits {
                        return Err(Error::InvalidCircuit(format!(
                            "CNOT offset {delta} does not fit a {n_qubits}-qubit register"
                        )));
                    }
                    let target = (qubit + delta) % n_qubits;
                    let mut l = cursor;
                    while !(free(&mut layers, l, qubit) && free(&mut layers, l, target)) {
                        l += 1;
                    }
                    layers[l][qubit] = GateSlot::CnotControl { delta };
                    layers[l][target] = GateSlot::CnotTarget;
                    cursor = l + 1;
                }
            }
        }
    }

    let mut grid = CircuitGrid::empty(n_qubits, layers.len())?;
    for (l, layer) in layers.iter().enumerate() {
        for (q, slot) in layer.iter().enumerate() {
            grid.set_slot(q, l, *slot);
        }
    }
    debug_assert!(grid.validate().is_empty());
    Ok(grid)
}
