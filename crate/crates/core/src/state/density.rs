//! Exact density-matrix oracle.
//!
//! Protocol evolution is normally tracked branch-wise over pure states; this
//! module provides the ρ = Σ w|ψ⟩⟨ψ| representation so the two routes can be
//! compared entrywise. Dense storage, so it is capped at 12 qubits.

use num_complex::Complex64;

use super::{unitarity_deviation, JointState, MeasBasis, MixedEnsemble, Subsystem};
use crate::error::{Error, Result};

const MAX_QUBITS: usize = 12;

/// Dense density matrix over registered subsystems (row-major, big-endian
/// index convention matching [`JointState`]).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    subsystems: Vec<Subsystem>,
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &JointState) -> Result<Self> {
        Self::from_branches(&[(1.0, state.clone())], state.subsystems())
    }

    pub fn from_ensemble(ensemble: &MixedEnsemble) -> Result<Self> {
        let branches = ensemble.branches();
        if branches.is_empty() {
            return Err(Error::ZeroNormState);
        }
        let subsystems = branches[0].1.subsystems().to_vec();
        Self::from_branches(branches, &subsystems)
    }

    fn from_branches(branches: &[(f64, JointState)], subsystems: &[Subsystem]) -> Result<Self> {
        if subsystems.len() > MAX_QUBITS {
            return Err(Error::DimensionOverflow {
                got: subsystems.len(),
                max: MAX_QUBITS,
            });
        }
        let dim = 1usize << subsystems.len();
        let ids: Vec<&str> = subsystems.iter().map(|s| s.id.as_str()).collect();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (w, st) in branches {
            let st = st.reorder(&ids)?;
            let amps = st.amplitudes();
            for i in 0..dim {
                for j in 0..dim {
                    data[i * dim + j] += w * amps[i] * amps[j].conj();
                }
            }
        }
        Ok(DensityMatrix {
            subsystems: subsystems.to_vec(),
            dim,
            data,
        })
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i).re).sum()
    }

    pub fn max_hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                dev = dev.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        dev
    }

    /// Positive semidefinite up to `tol`: ρ + tol·I must admit a Cholesky
    /// factorization, i.e. the smallest eigenvalue is above −tol.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let n = self.dim;
        let mut a = self.data.clone();
        for i in 0..n {
            a[i * n + i] += Complex64::new(tol, 0.0);
        }
        // In-place complex Cholesky; fails on a non-positive pivot.
        for k in 0..n {
            let mut pivot = a[k * n + k].re;
            for j in 0..k {
                pivot -= a[k * n + j].norm_sqr();
            }
            if pivot.is_nan() || pivot <= 0.0 {
                return false;
            }
            let pivot = pivot.sqrt();
            a[k * n + k] = Complex64::new(pivot, 0.0);
            for i in (k + 1)..n {
                let mut acc = a[i * n + k];
                for j in 0..k {
                    acc -= a[i * n + j] * a[k * n + j].conj();
                }
                a[i * n + k] = acc / pivot;
            }
        }
        true
    }

    fn positions(&self, ids: &[&str]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                self.subsystems
                    .iter()
                    .position(|s| s.id == *id)
                    .ok_or_else(|| Error::UnknownSubsystem(id.to_string()))
            })
            .collect()
    }

    /// ρ → M ρ M† for a k-subsystem operator (k ≤ 3), not necessarily
    /// unitary. The trace change is the branch weight change.
    pub fn apply_operator(&self, ids: &[&str], matrix: &[Complex64]) -> Result<DensityMatrix> {
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
        let n = self.subsystems.len();
        let positions = self.positions(ids)?;
        let shifts: Vec<usize> = positions.iter().map(|&p| n - 1 - p).collect();
        let target_mask: usize = shifts.iter().map(|s| 1usize << s).sum();

        let gather = |base: usize| -> Vec<usize> {
            (0..opdim)
                .map(|j| {
                    let mut idx = base;
                    for (b, &sh) in shifts.iter().enumerate() {
                        if (j >> (k - 1 - b)) & 1 == 1 {
                            idx |= 1 << sh;
                        }
                    }
                    idx
                })
                .collect()
        };

        // Left multiply: rows mix.
        let mut tmp = vec![Complex64::new(0.0, 0.0); self.data.len()];
        for base in 0..self.dim {
            if base & target_mask != 0 {
                continue;
            }
            let rows = gather(base);
            for col in 0..self.dim {
                for (ri, &row_out) in rows.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (rj, &row_in) in rows.iter().enumerate() {
                        acc += matrix[ri * opdim + rj] * self.data[row_in * self.dim + col];
                    }
                    tmp[row_out * self.dim + col] = acc;
                }
            }
        }
        // Right multiply by M†: columns mix with conjugated entries.
        let mut out = vec![Complex64::new(0.0, 0.0); self.data.len()];
        for base in 0..self.dim {
            if base & target_mask != 0 {
                continue;
            }
            let cols = gather(base);
            for row in 0..self.dim {
                for (ci, &col_out) in cols.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (cj, &col_in) in cols.iter().enumerate() {
                        acc += tmp[row * self.dim + col_in] * matrix[ci * opdim + cj].conj();
                    }
                    out[row * self.dim + col_out] = acc;
                }
            }
        }
        Ok(DensityMatrix {
            subsystems: self.subsystems.clone(),
            dim: self.dim,
            data: out,
        })
    }

    /// Unitary conjugation with the same unitarity check as the pure-state
    /// path.
    pub fn apply_unitary(&self, ids: &[&str], matrix: &[Complex64]) -> Result<DensityMatrix> {
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

    /// Unnormalized measurement branches P ρ P for both outcomes; the weight
    /// of each branch is its trace.
    pub fn measure_branches(
        &self,
        id: &str,
        basis: MeasBasis,
    ) -> Result<Vec<(u8, f64, DensityMatrix)>> {
        let mut out = Vec::with_capacity(2);
        for outcome in 0..2u8 {
            let proj = projector(basis, outcome);
            let branch = self.apply_operator(&[id], &proj)?;
            let w = branch.trace();
            out.push((outcome, w, branch));
        }
        Ok(out)
    }

    /// Trace out one subsystem.
    pub fn partial_trace(&self, id: &str) -> Result<DensityMatrix> {
        let pos = self.positions(&[id])?[0];
        let n = self.subsystems.len();
        let sh = n - 1 - pos;
        let new_dim = self.dim / 2;
        let mut subsystems = self.subsystems.clone();
        subsystems.remove(pos);

        let expand = |idx: usize, bit: usize| -> usize {
            let high = (idx >> sh) << (sh + 1);
            let low = idx & ((1 << sh) - 1);
            high | (bit << sh) | low
        };
        let mut data = vec![Complex64::new(0.0, 0.0); new_dim * new_dim];
        for i in 0..new_dim {
            for j in 0..new_dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..2 {
                    acc += self.data[expand(i, b) * self.dim + expand(j, b)];
                }
                data[i * new_dim + j] = acc;
            }
        }
        Ok(DensityMatrix {
            subsystems,
            dim: new_dim,
            data,
        })
    }

    /// Largest entrywise difference against another matrix on the same
    /// subsystem set.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim != other.dim
            || self
                .subsystems
                .iter()
                .zip(&other.subsystems)
                .any(|(a, b)| a.id != b.id)
        {
            return Err(Error::SubsystemMismatch);
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// ⟨ref|ρ|ref⟩ / tr ρ for a normalized reference state.
    pub fn fidelity_pure(&self, reference: &JointState) -> Result<f64> {
        let ids: Vec<&str> = self.subsystems.iter().map(|s| s.id.as_str()).collect();
        let r = reference.reorder(&ids)?;
        let amps = r.amplitudes();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += amps[i].conj() * self.entry(i, j) * amps[j];
            }
        }
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(Error::ZeroNormState);
        }
        Ok(acc.re / tr)
    }

    pub fn scaled(&self, w: f64) -> DensityMatrix {
        DensityMatrix {
            subsystems: self.subsystems.clone(),
            dim: self.dim,
            data: self.data.iter().map(|z| z * w).collect(),
        }
    }

    pub fn add(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        if self.dim != other.dim {
            return Err(Error::SubsystemMismatch);
        }
        Ok(DensityMatrix {
            subsystems: self.subsystems.clone(),
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

fn projector(basis: MeasBasis, outcome: u8) -> [Complex64; 4] {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let half = Complex64::new(0.5, 0.0);
    match (basis, outcome) {
        (MeasBasis::Computational, 0) => [one, z, z, z],
        (MeasBasis::Computational, _) => [z, z, z, one],
        (MeasBasis::Hadamard, 0) => [half, half, half, half],
        (MeasBasis::Hadamard, _) => [half, -half, -half, half],
    }
}
