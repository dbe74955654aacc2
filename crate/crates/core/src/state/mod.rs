//! Unnormalized pure states over tensor products of two-level subsystems.
//!
//! A [`JointState`] holds complex amplitudes over the computational basis of
//! its registered subsystems, big-endian in registration order (the first
//! subsystem is the most significant bit). The norm² of a state is the
//! probability of the branch it represents; explicit renormalization happens
//! only at measurement collapse, so heralded and lossy branches fall out of
//! the bookkeeping without side channels.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub mod density;
pub use density::DensityMatrix;

pub(crate) const NORM_TOL: f64 = 1e-12;

/// What a two-level subsystem physically is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsystemKind {
    Atom,
    PhotonPolarization,
    PathMode,
}

/// A registered two-level subsystem: unique id, kind, and the names of its
/// two basis states (index 0 and index 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    pub id: String,
    pub kind: SubsystemKind,
    pub labels: [String; 2],
}

impl Subsystem {
    pub fn new(id: &str, kind: SubsystemKind, labels: [&str; 2]) -> Self {
        Subsystem {
            id: id.to_string(),
            kind,
            labels: [labels[0].to_string(), labels[1].to_string()],
        }
    }

    /// Atomic qubit encoded in the two ground states: |0⟩ = g−, |1⟩ = g+.
    pub fn atom(id: &str) -> Self {
        Self::new(id, SubsystemKind::Atom, ["g-", "g+"])
    }

    /// Photon polarization: |0⟩ = H, |1⟩ = V.
    pub fn polarization(id: &str) -> Self {
        Self::new(id, SubsystemKind::PhotonPolarization, ["H", "V"])
    }

    /// Spatial path mode: |0⟩ = path 1, |1⟩ = path 2.
    pub fn path(id: &str) -> Self {
        Self::new(id, SubsystemKind::PathMode, ["1", "2"])
    }

    /// Time-bin mode: |0⟩ = short/early (S), |1⟩ = long/late (L).
    pub fn time_bin(id: &str) -> Self {
        Self::new(id, SubsystemKind::PathMode, ["S", "L"])
    }
}

/// Measurement basis for a single subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasBasis {
    Computational,
    /// The ± basis, (|0⟩ ± |1⟩)/√2. Outcome 0 is "+", outcome 1 is "−".
    Hadamard,
}

/// Record of a single-subsystem measurement. `probability` is the absolute
/// branch weight; over the enumerated sibling outcomes these sum to the
/// pre-measurement norm².
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub subsystem: String,
    pub basis: MeasBasis,
    pub outcome: u8,
    pub outcome_label: String,
    pub probability: f64,
}

/// Unnormalized pure state over an ordered list of two-level subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    subsystems: Vec<Subsystem>,
    amps: Vec<Complex64>,
}

impl JointState {
    /// Build a state from explicit amplitudes (big-endian in subsystem
    /// order). The norm² must lie in (0, 1 + 1e-12].
    pub fn from_amplitudes(subsystems: Vec<Subsystem>, amps: Vec<Complex64>) -> Result<Self> {
        for (i, s) in subsystems.iter().enumerate() {
            if subsystems[..i].iter().any(|t| t.id == s.id) {
                return Err(Error::DuplicateSubsystem(s.id.clone()));
            }
        }
        let dim = 1usize << subsystems.len();
        if amps.len() != dim {
            return Err(Error::AmplitudeLength {
                got: amps.len(),
                expected: dim,
            });
        }
        let state = JointState { subsystems, amps };
        let n2 = state.norm2();
        if !(n2 > 0.0 && n2 <= 1.0 + NORM_TOL) {
            return Err(Error::InvalidNorm(n2));
        }
        Ok(state)
    }

    /// Single-subsystem state with amplitudes `[c0, c1]`.
    pub fn single(subsystem: Subsystem, amps: [Complex64; 2]) -> Result<Self> {
        Self::from_amplitudes(vec![subsystem], amps.to_vec())
    }

    /// Single-subsystem basis state.
    pub fn basis(subsystem: Subsystem, value: u8) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 2];
        amps[value as usize] = Complex64::new(1.0, 0.0);
        JointState {
            subsystems: vec![subsystem],
            amps,
        }
    }

    /// Single-subsystem (|0⟩ + |1⟩)/√2.
    pub fn plus(subsystem: Subsystem) -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        JointState {
            subsystems: vec![subsystem],
            amps: vec![h, h],
        }
    }

    /// Tensor product in the given order; amplitudes are the Kronecker
    /// product, so norms multiply.
    pub fn compose(parts: &[JointState]) -> Result<JointState> {
        let mut subsystems = Vec::new();
        for p in parts {
            for s in &p.subsystems {
                if subsystems.iter().any(|t: &Subsystem| t.id == s.id) {
                    return Err(Error::DuplicateSubsystem(s.id.clone()));
                }
                subsystems.push(s.clone());
            }
        }
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for p in parts {
            let mut next = Vec::with_capacity(amps.len() * p.amps.len());
            for a in &amps {
                for b in &p.amps {
                    next.push(a * b);
                }
            }
            amps = next;
        }
        JointState::from_amplitudes(subsystems, amps)
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn n_subsystems(&self) -> usize {
        self.subsystems.len()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm2(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn position(&self, id: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| Error::UnknownSubsystem(id.to_string()))
    }

    /// Bit shift for a subsystem position (big-endian).
    fn shift(&self, pos: usize) -> usize {
        self.subsystems.len() - 1 - pos
    }

    /// Value of subsystem `id` in basis index `index`.
    pub fn bit(&self, index: usize, id: &str) -> Result<u8> {
        let pos = self.position(id)?;
        Ok(((index >> self.shift(pos)) & 1) as u8)
    }

    /// Multiply all amplitudes by a scalar (branch weighting).
    pub fn scaled(&self, z: Complex64) -> JointState {
        JointState {
            subsystems: self.subsystems.clone(),
            amps: self.amps.iter().map(|a| a * z).collect(),
        }
    }

    pub fn renormalized(&self) -> Result<JointState> {
        let n2 = self.norm2();
        if n2 <= 0.0 {
            return Err(Error::ZeroNormState);
        }
        Ok(self.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)))
    }

    /// Apply an arbitrary k-subsystem operator (k ≤ 3) given as a flat
    /// row-major 2^k × 2^k matrix; `ids[0]` is the most significant bit of
    /// the operator index. No unitarity check: weight-carrying maps (herald
    /// filters) go through here.
    pub fn apply_operator(&self, ids: &[&str], matrix: &[Complex64]) -> Result<JointState> {
        let k = ids.len();
        if k == 0 || k > 3 {
            return Err(Error::OperatorArity { got: k, max: 3 });
        }
        let opdim = 1usize << k;
        if matrix.len() != opdim * opdim {
            return Err(Error::OperatorShape {
                got: matrix.len(),
                expected: opdim * opdim,
            });
        }
        let shifts: Vec<usize> = ids
            .iter()
            .map(|id| self.position(id).map(|p| self.shift(p)))
            .collect::<Result<_>>()?;
        for (i, id) in ids.iter().enumerate() {
            if ids[..i].contains(id) {
                return Err(Error::DuplicateSubsystem(id.to_string()));
            }
        }

        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        let target_mask: usize = shifts.iter().map(|s| 1usize << s).sum();
        let mut indices = vec![0usize; opdim];
        for base in 0..self.amps.len() {
            if base & target_mask != 0 {
                continue;
            }
            for (j, slot) in indices.iter_mut().enumerate() {
                let mut idx = base;
                for (b, &sh) in shifts.iter().enumerate() {
                    if (j >> (k - 1 - b)) & 1 == 1 {
                        idx |= 1 << sh;
                    }
                }
                *slot = idx;
            }
            for row in 0..opdim {
                let mut acc = Complex64::new(0.0, 0.0);
                for (col, &idx) in indices.iter().enumerate() {
                    acc += matrix[row * opdim + col] * self.amps[idx];
                }
                out[indices[row]] = acc;
            }
        }
        Ok(JointState {
            subsystems: self.subsystems.clone(),
            amps: out,
        })
    }

    /// Apply a local unitary on at most two subsystems. The matrix is
    /// checked for unitarity to 1e-12; the norm is preserved to the same
    /// tolerance.
    pub fn apply_unitary(&self, ids: &[&str], matrix: &[Complex64]) -> Result<JointState> {
        if ids.len() > 2 {
            return Err(Error::OperatorArity {
                got: ids.len(),
                max: 2,
            });
        }
        let dev = unitarity_deviation(matrix, 1 << ids.len());
        if dev > 1e-12 {
            return Err(Error::NotUnitary(dev));
        }
        self.apply_operator(ids, matrix)
    }

    /// Enumerate both outcomes of measuring one subsystem. Each record
    /// carries the absolute branch probability (they sum to the parent
    /// norm²); each returned state is renormalized. Branches below 1e-14 of
    /// the parent weight are dropped.
    pub fn measure_enumerate(
        &self,
        id: &str,
        basis: MeasBasis,
    ) -> Result<Vec<(MeasurementRecord, JointState)>> {
        let parent = self.norm2();
        if parent <= 0.0 {
            return Err(Error::ZeroNormState);
        }
        let mut out = Vec::with_capacity(2);
        for outcome in 0..2u8 {
            let projected = self.project(id, basis, outcome)?;
            let p = projected.norm2();
            if p > parent * 1e-14 {
                let record = MeasurementRecord {
                    subsystem: id.to_string(),
                    basis,
                    outcome,
                    outcome_label: self.outcome_label(id, basis, outcome)?,
                    probability: p,
                };
                out.push((record, projected.renormalized()?));
            }
        }
        Ok(out)
    }

    /// Sample one measurement outcome with the Born probabilities of the
    /// (renormalized) state.
    pub fn measure_sample<R: Rng + ?Sized>(
        &self,
        id: &str,
        basis: MeasBasis,
        rng: &mut R,
    ) -> Result<(MeasurementRecord, JointState)> {
        let parent = self.norm2();
        if parent <= 0.0 {
            return Err(Error::ZeroNormState);
        }
        let p0 = self.project(id, basis, 0)?.norm2();
        let outcome = if rng.gen::<f64>() * parent < p0 { 0 } else { 1 };
        let projected = self.project(id, basis, outcome)?;
        let record = MeasurementRecord {
            subsystem: id.to_string(),
            basis,
            outcome,
            outcome_label: self.outcome_label(id, basis, outcome)?,
            probability: projected.norm2(),
        };
        Ok((record, projected.renormalized()?))
    }

    fn outcome_label(&self, id: &str, basis: MeasBasis, outcome: u8) -> Result<String> {
        let pos = self.position(id)?;
        Ok(match basis {
            MeasBasis::Computational => self.subsystems[pos].labels[outcome as usize].clone(),
            MeasBasis::Hadamard => if outcome == 0 { "+" } else { "-" }.to_string(),
        })
    }

    /// Unnormalized projection onto one outcome of a single-subsystem
    /// measurement.
    fn project(&self, id: &str, basis: MeasBasis, outcome: u8) -> Result<JointState> {
        let pos = self.position(id)?;
        let sh = self.shift(pos);
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        match basis {
            MeasBasis::Computational => {
                for (i, a) in self.amps.iter().enumerate() {
                    if ((i >> sh) & 1) as u8 == outcome {
                        amps[i] = *a;
                    }
                }
            }
            MeasBasis::Hadamard => {
                let sign = if outcome == 0 { 1.0 } else { -1.0 };
                for i0 in 0..self.amps.len() {
                    if (i0 >> sh) & 1 != 0 {
                        continue;
                    }
                    let i1 = i0 | (1 << sh);
                    let a = (self.amps[i0] + sign * self.amps[i1]) * 0.5;
                    amps[i0] = a;
                    amps[i1] = sign * a;
                }
            }
        }
        Ok(JointState {
            subsystems: self.subsystems.clone(),
            amps,
        })
    }

    /// Remove a subsystem that has collapsed onto a definite computational
    /// value (detector absorption shrinks the vector by one qubit).
    pub fn remove_collapsed(&self, id: &str) -> Result<JointState> {
        let pos = self.position(id)?;
        let sh = self.shift(pos);
        let w1: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| (i >> sh) & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        let total = self.norm2();
        if total <= 0.0 {
            return Err(Error::ZeroNormState);
        }
        let value = if w1 > total / 2.0 { 1u8 } else { 0u8 };
        let off = (total - if value == 1 { w1 } else { total - w1 }).abs();
        if off > total * 1e-10 {
            return Err(Error::NotCollapsed(id.to_string()));
        }
        let mut subsystems = self.subsystems.clone();
        subsystems.remove(pos);
        let mut amps = Vec::with_capacity(self.amps.len() / 2);
        for (i, a) in self.amps.iter().enumerate() {
            if ((i >> sh) & 1) as u8 == value {
                amps.push(*a);
            }
        }
        Ok(JointState { subsystems, amps })
    }

    /// Measure (enumerating) and drop the subsystem from every branch.
    pub fn measure_remove(
        &self,
        id: &str,
        basis: MeasBasis,
    ) -> Result<Vec<(MeasurementRecord, JointState)>> {
        let branches = self.measure_enumerate(id, basis)?;
        branches
            .into_iter()
            .map(|(rec, st)| {
                let st = match basis {
                    MeasBasis::Computational => st.remove_collapsed(id)?,
                    MeasBasis::Hadamard => {
                        // Rotate the ± outcome onto a computational value
                        // first so removal is exact.
                        st.apply_operator(&[id], &hadamard())?
                            .remove_collapsed(id)?
                    }
                };
                Ok((rec, st))
            })
            .collect()
    }

    /// Replace a subsystem's identity (id, kind, labels) without touching
    /// amplitudes. Used when an optical element turns one mode label into
    /// another (e.g. a time bin becoming a spatial path).
    pub fn relabel_subsystem(&self, old_id: &str, replacement: Subsystem) -> Result<JointState> {
        let pos = self.position(old_id)?;
        if replacement.id != old_id && self.subsystems.iter().any(|s| s.id == replacement.id) {
            return Err(Error::DuplicateSubsystem(replacement.id));
        }
        let mut subsystems = self.subsystems.clone();
        subsystems[pos] = replacement;
        Ok(JointState {
            subsystems,
            amps: self.amps.clone(),
        })
    }

    /// Reorder subsystems into the given id order (amplitudes permuted to
    /// match).
    pub fn reorder(&self, ids: &[&str]) -> Result<JointState> {
        if ids.len() != self.subsystems.len() {
            return Err(Error::SubsystemMismatch);
        }
        let positions: Vec<usize> = ids
            .iter()
            .map(|id| self.position(id))
            .collect::<Result<_>>()?;
        {
            let mut seen = vec![false; positions.len()];
            for &p in &positions {
                if seen[p] {
                    return Err(Error::SubsystemMismatch);
                }
                seen[p] = true;
            }
        }
        let n = self.subsystems.len();
        let subsystems: Vec<Subsystem> = positions
            .iter()
            .map(|&p| self.subsystems[p].clone())
            .collect();
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut j = 0usize;
            for (new_pos, &old_pos) in positions.iter().enumerate() {
                let bit = (i >> (n - 1 - old_pos)) & 1;
                j |= bit << (n - 1 - new_pos);
            }
            amps[j] = *a;
        }
        Ok(JointState { subsystems, amps })
    }

    /// ⟨self|other⟩. The other state is reordered to this state's subsystem
    /// order first; the subsystem id sets must match.
    pub fn inner(&self, other: &JointState) -> Result<Complex64> {
        let ids: Vec<&str> = self.subsystems.iter().map(|s| s.id.as_str()).collect();
        let other = if self
            .subsystems
            .iter()
            .zip(&other.subsystems)
            .all(|(a, b)| a.id == b.id)
            && other.subsystems.len() == self.subsystems.len()
        {
            other.clone()
        } else {
            other.reorder(&ids)?
        };
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨reference|self⟩|² / norm²(self) with a normalized reference.
    /// Insensitive to global phase by construction.
    pub fn fidelity(&self, reference: &JointState) -> Result<f64> {
        let n2 = self.norm2();
        if n2 <= 0.0 {
            return Err(Error::ZeroNormState);
        }
        let ip = reference.inner(self)?;
        Ok(ip.norm_sqr() / n2)
    }
}

/// Weighted ensemble of normalized pure states. The weights may sum below
/// one; the deficit is accumulated loss probability.
#[derive(Debug, Clone)]
pub struct MixedEnsemble {
    branches: Vec<(f64, JointState)>,
}

impl MixedEnsemble {
    pub fn new(branches: Vec<(f64, JointState)>) -> Result<Self> {
        let mut total = 0.0;
        for (w, st) in &branches {
            if !(*w > 0.0 && *w <= 1.0 + NORM_TOL) {
                return Err(Error::InvalidWeight(*w));
            }
            let n2 = st.norm2();
            if (n2 - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidNorm(n2));
            }
            total += w;
        }
        if total > 1.0 + NORM_TOL {
            return Err(Error::WeightOverflow(total));
        }
        Ok(MixedEnsemble { branches })
    }

    pub fn branches(&self) -> &[(f64, JointState)] {
        &self.branches
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|(w, _)| w).sum()
    }

    /// Σ wᵢ |⟨ref|ψᵢ⟩|² / Σ wᵢ.
    pub fn fidelity(&self, reference: &JointState) -> Result<f64> {
        let total = self.total_weight();
        if total <= 0.0 {
            return Err(Error::ZeroNormState);
        }
        let mut acc = 0.0;
        for (w, st) in &self.branches {
            acc += w * st.fidelity(reference)?;
        }
        Ok(acc / total)
    }
}

/// Maximum deviation of M†M from the identity.
pub(crate) fn unitarity_deviation(matrix: &[Complex64], dim: usize) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                acc += matrix[k * dim + i].conj() * matrix[k * dim + j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((acc - Complex64::new(target, 0.0)).norm());
        }
    }
    dev
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2×2 identity.
pub fn identity2() -> [Complex64; 4] {
    [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]
}

/// Pauli X.
pub fn pauli_x() -> [Complex64; 4] {
    [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]
}

/// Pauli Z (|0⟩ → |0⟩, |1⟩ → −|1⟩).
pub fn pauli_z() -> [Complex64; 4] {
    [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]
}

/// Hadamard.
pub fn hadamard() -> [Complex64; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]
}

/// Two-atom Bell state (|00⟩ + |11⟩)/√2.
pub fn bell_phi_plus(a: &str, b: &str) -> JointState {
    bell(a, b, true, false)
}

/// (|00⟩ − |11⟩)/√2.
pub fn bell_phi_minus(a: &str, b: &str) -> JointState {
    bell(a, b, true, true)
}

/// (|01⟩ + |10⟩)/√2.
pub fn bell_psi_plus(a: &str, b: &str) -> JointState {
    bell(a, b, false, false)
}

/// (|01⟩ − |10⟩)/√2.
pub fn bell_psi_minus(a: &str, b: &str) -> JointState {
    bell(a, b, false, true)
}

fn bell(a: &str, b: &str, phi: bool, minus: bool) -> JointState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![c(0.0, 0.0); 4];
    let (first, second) = if phi { (0b00, 0b11) } else { (0b01, 0b10) };
    amps[first] = c(h, 0.0);
    amps[second] = c(if minus { -h } else { h }, 0.0);
    JointState {
        subsystems: vec![Subsystem::atom(a), Subsystem::atom(b)],
        amps,
    }
}
