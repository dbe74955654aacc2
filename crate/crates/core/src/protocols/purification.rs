//! Entanglement purification: two noisy pairs (a1,b1) and (a2,b2) drawn from
//! the rank-two mixture F·|φ+⟩⟨φ+| + (1−F)·|ψ+⟩⟨ψ+| are distilled into one
//! higher-fidelity pair. Each party scatters one photon off its two atoms
//! (the V component off the first, the H component off the second), both
//! photons are measured in the diagonal basis, and runs are kept only on
//! same-sign coincidences (D2D4 or D1D3). A Hadamard plus measurement on
//! the second pair, compared over a classical channel, fixes the sign of
//! the kept pair: differing outcomes trigger σ_z on a1. The kept fidelity
//! is F² / (F² + (1−F)²).

use rand::Rng;

use super::{sample_stage, walk_stages, Detector, HeraldOutcome, Pauli, Stage, StageSample};
use crate::error::{Error, Result};
use crate::scatter::{compute_coefficients, EmitterParams};
use crate::state::{
    bell_phi_plus, bell_psi_plus, hadamard, DensityMatrix, JointState, MeasBasis, MixedEnsemble,
    Subsystem,
};

const POL1: &str = "photon-1";
const POL2: &str = "photon-2";
const A1: &str = "a1";
const B1: &str = "b1";
const A2: &str = "a2";
const B2: &str = "b2";

pub const STAGE_A1: &str = "atom-a1";
pub const STAGE_A2: &str = "atom-a2";
pub const STAGE_B1: &str = "atom-b1";
pub const STAGE_B2: &str = "atom-b2";

/// Which Bell states the two input pairs are in for one mixture branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCase {
    PhiPhi,
    PhiPsi,
    PsiPhi,
    PsiPsi,
}

impl PairCase {
    pub fn all() -> [PairCase; 4] {
        [
            PairCase::PhiPhi,
            PairCase::PhiPsi,
            PairCase::PsiPhi,
            PairCase::PsiPsi,
        ]
    }

    pub fn weight(&self, fidelity: f64) -> f64 {
        let f = fidelity;
        match self {
            PairCase::PhiPhi => f * f,
            PairCase::PhiPsi | PairCase::PsiPhi => f * (1.0 - f),
            PairCase::PsiPsi => (1.0 - f) * (1.0 - f),
        }
    }

    fn pair_states(&self) -> (JointState, JointState) {
        let first = match self {
            PairCase::PhiPhi | PairCase::PhiPsi => bell_phi_plus(A1, B1),
            _ => bell_psi_plus(A1, B1),
        };
        let second = match self {
            PairCase::PhiPhi | PairCase::PsiPhi => bell_phi_plus(A2, B2),
            _ => bell_psi_plus(A2, B2),
        };
        (first, second)
    }
}

fn validate_fidelity(f: f64) -> Result<()> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InvalidFidelity(f));
    }
    Ok(())
}

fn initial_state(case: PairCase) -> JointState {
    let (first, second) = case.pair_states();
    JointState::compose(&[
        JointState::plus(Subsystem::polarization(POL1)),
        JointState::plus(Subsystem::polarization(POL2)),
        first,
        second,
    ])
    .expect("fresh ids")
}

fn stages() -> Vec<Stage> {
    vec![
        Stage::structural(STAGE_A1, &[POL1, A1], super::routed_sign_diagonal(1)),
        Stage::structural(STAGE_A2, &[POL1, A2], super::routed_sign_diagonal(0)),
        Stage::structural(STAGE_B1, &[POL2, B1], super::routed_sign_diagonal(1)),
        Stage::structural(STAGE_B2, &[POL2, B2], super::routed_sign_diagonal(0)),
    ]
}

/// Alice's diagonal-basis outcome (photon 1): + fires D2, − fires D1.
fn alice_detector(outcome: u8) -> Detector {
    if outcome == 0 {
        Detector::D2
    } else {
        Detector::D1
    }
}

/// Bob's diagonal-basis outcome (photon 2): + fires D4, − fires D3.
fn bob_detector(outcome: u8) -> Detector {
    if outcome == 0 {
        Detector::D4
    } else {
        Detector::D3
    }
}

/// Keep rule: same-sign coincidences.
pub fn kept_coincidence(alice: Detector, bob: Detector) -> bool {
    matches!(
        (alice, bob),
        (Detector::D2, Detector::D4) | (Detector::D1, Detector::D3)
    )
}

/// One enumerated branch of a purification run.
#[derive(Debug, Clone)]
pub struct PurifyBranch {
    pub case: PairCase,
    pub herald: HeraldOutcome,
    pub coincidence: Option<(Detector, Detector)>,
    pub kept: bool,
    pub a2_outcome: Option<u8>,
    pub b2_outcome: Option<u8>,
    pub correction: Option<Pauli>,
    pub probability: f64,
    pub state: Option<JointState>,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PurifyEnumeration {
    pub branches: Vec<PurifyBranch>,
    /// Probability that all four scattering events succeed: p_s⁴.
    pub scattering_success_probability: f64,
    /// Probability of keeping the pair given all scattering succeeded:
    /// F² + (1−F)².
    pub conditional_keep_probability: f64,
    /// p_s⁴ · (F² + (1−F)²).
    pub overall_keep_probability: f64,
    /// Fidelity of the kept (a1,b1) ensemble: F² / (F² + (1−F)²).
    pub output_fidelity: f64,
    pub herald_fail_probability: f64,
    pub loss_probability: f64,
    /// Coincidence-discarded probability (opposite-sign clicks).
    pub discard_probability: f64,
    /// Kept branches as a weighted ensemble over (a1, b1).
    pub kept_ensemble: MixedEnsemble,
}

/// Outcome of one sampled purification run.
#[derive(Debug, Clone)]
pub struct PurifyResult {
    pub case: PairCase,
    pub herald: HeraldOutcome,
    pub coincidence: Option<(Detector, Detector)>,
    pub kept: bool,
    pub correction: Option<Pauli>,
    pub final_state: Option<JointState>,
    pub output_fidelity: Option<f64>,
    /// Conditional keep probability of the configured mixture,
    /// F² + (1−F)².
    pub keep_probability: f64,
}

/// Enumerate the purification protocol over the four mixture branches.
pub fn run_purification_enumerate(
    input_fidelity: f64,
    params: &EmitterParams,
) -> Result<PurifyEnumeration> {
    validate_fidelity(input_fidelity)?;
    let coeff = compute_coefficients(params);
    let ps = coeff.success_probability();
    let scattering_success = ps.powi(4);

    let reference = bell_phi_plus(A1, B1);
    let mut branches = Vec::new();
    let mut herald_fail_probability = 0.0;
    let mut loss_probability = 0.0;
    let mut discard_probability = 0.0;
    let mut kept_weight = 0.0;
    let mut kept_fidelity_acc = 0.0;
    let mut kept_branches: Vec<(f64, JointState)> = Vec::new();

    for case in PairCase::all() {
        let case_weight = case.weight(input_fidelity);
        if case_weight == 0.0 {
            continue;
        }
        let walk = walk_stages(&initial_state(case), &stages(), &coeff)?;
        for &(stage, w) in &walk.fails {
            herald_fail_probability += case_weight * w;
            branches.push(PurifyBranch {
                case,
                herald: HeraldOutcome::HeraldFail { stage },
                coincidence: None,
                kept: false,
                a2_outcome: None,
                b2_outcome: None,
                correction: None,
                probability: case_weight * w,
                state: None,
                fidelity: None,
            });
        }
        for &(stage, w) in &walk.losses {
            loss_probability += case_weight * w;
            branches.push(PurifyBranch {
                case,
                herald: HeraldOutcome::Loss { stage },
                coincidence: None,
                kept: false,
                a2_outcome: None,
                b2_outcome: None,
                correction: None,
                probability: case_weight * w,
                state: None,
                fidelity: None,
            });
        }

        for (p1_rec, p1_state) in walk.survivor.measure_remove(POL1, MeasBasis::Hadamard)? {
            let alice = alice_detector(p1_rec.outcome);
            for (p2_rec, p2_state) in p1_state.measure_remove(POL2, MeasBasis::Hadamard)? {
                let bob = bob_detector(p2_rec.outcome);
                let coincidence_weight = case_weight * p1_rec.probability * p2_rec.probability;
                if !kept_coincidence(alice, bob) {
                    discard_probability += coincidence_weight;
                    branches.push(PurifyBranch {
                        case,
                        herald: HeraldOutcome::Detector(alice),
                        coincidence: Some((alice, bob)),
                        kept: false,
                        a2_outcome: None,
                        b2_outcome: None,
                        correction: None,
                        probability: coincidence_weight,
                        state: None,
                        fidelity: None,
                    });
                    continue;
                }
                // Keep: compare the second pair after a Hadamard on each side.
                let rotated = p2_state
                    .apply_unitary(&[A2], &hadamard())?
                    .apply_unitary(&[B2], &hadamard())?;
                for (a2_rec, a2_state) in rotated.measure_remove(A2, MeasBasis::Computational)? {
                    for (b2_rec, b2_state) in
                        a2_state.measure_remove(B2, MeasBasis::Computational)?
                    {
                        let correction = if a2_rec.outcome == b2_rec.outcome {
                            Pauli::I
                        } else {
                            Pauli::Z
                        };
                        let corrected = correction.apply(&b2_state, A1)?;
                        let probability =
                            coincidence_weight * a2_rec.probability * b2_rec.probability;
                        let fidelity = corrected.fidelity(&reference)?;
                        kept_weight += probability;
                        kept_fidelity_acc += probability * fidelity;
                        kept_branches.push((probability, corrected.renormalized()?));
                        branches.push(PurifyBranch {
                            case,
                            herald: HeraldOutcome::Detector(alice),
                            coincidence: Some((alice, bob)),
                            kept: true,
                            a2_outcome: Some(a2_rec.outcome),
                            b2_outcome: Some(b2_rec.outcome),
                            correction: Some(correction),
                            probability,
                            state: Some(corrected),
                            fidelity: Some(fidelity),
                        });
                    }
                }
            }
        }
    }

    Ok(PurifyEnumeration {
        branches,
        scattering_success_probability: scattering_success,
        conditional_keep_probability: if scattering_success > 0.0 {
            kept_weight / scattering_success
        } else {
            0.0
        },
        overall_keep_probability: kept_weight,
        output_fidelity: if kept_weight > 0.0 {
            kept_fidelity_acc / kept_weight
        } else {
            0.0
        },
        herald_fail_probability,
        loss_probability,
        discard_probability,
        kept_ensemble: MixedEnsemble::new(kept_branches)?,
    })
}

/// Density-matrix route through the same circuit: propagate
/// ρ = Σ w |case⟩⟨case| through the stage operators, detector projections,
/// comparison measurements, and corrections. Returns the unnormalized kept
/// density matrix on (a1, b1), its weight, and the kept fidelity.
pub fn run_purification_density(
    input_fidelity: f64,
    params: &EmitterParams,
) -> Result<(DensityMatrix, f64, f64)> {
    validate_fidelity(input_fidelity)?;
    let coeff = compute_coefficients(params);

    let ensemble = MixedEnsemble::new(
        PairCase::all()
            .into_iter()
            .filter(|c| c.weight(input_fidelity) > 0.0)
            .map(|c| (c.weight(input_fidelity), initial_state(c)))
            .collect(),
    )?;
    let mut rho = DensityMatrix::from_ensemble(&ensemble)?;

    // Scattering stages: structure scaled by the success amplitude r.
    for stage in stages() {
        let ids: Vec<&str> = stage.ids.iter().map(|s| s.as_str()).collect();
        let m: Vec<_> = stage
            .matrix
            .as_ref()
            .unwrap()
            .iter()
            .map(|z| z * coeff.r)
            .collect();
        rho = rho.apply_operator(&ids, &m)?;
    }

    let mut kept: Option<DensityMatrix> = None;
    let mut kept_weight = 0.0;
    for (p1_out, _, rho1) in rho.measure_branches(POL1, MeasBasis::Hadamard)? {
        let alice = alice_detector(p1_out);
        for (p2_out, _, rho2) in rho1.measure_branches(POL2, MeasBasis::Hadamard)? {
            let bob = bob_detector(p2_out);
            if !kept_coincidence(alice, bob) {
                continue;
            }
            let reduced = rho2.partial_trace(POL1)?.partial_trace(POL2)?;
            let rotated = reduced
                .apply_unitary(&[A2], &hadamard())?
                .apply_unitary(&[B2], &hadamard())?;
            for (a2_out, _, rho3) in rotated.measure_branches(A2, MeasBasis::Computational)? {
                for (b2_out, w4, rho4) in rho3.measure_branches(B2, MeasBasis::Computational)? {
                    if w4 <= 1e-300 {
                        continue;
                    }
                    let reduced = rho4.partial_trace(A2)?.partial_trace(B2)?;
                    let corrected = if a2_out == b2_out {
                        reduced
                    } else {
                        reduced.apply_unitary(&[A1], &Pauli::Z.matrix())?
                    };
                    kept_weight += corrected.trace();
                    kept = Some(match kept {
                        None => corrected,
                        Some(acc) => acc.add(&corrected)?,
                    });
                }
            }
        }
    }

    let kept = kept.ok_or(Error::ZeroNormState)?;
    let fidelity = kept.fidelity_pure(&bell_phi_plus(A1, B1))?;
    Ok((kept, kept_weight, fidelity))
}

/// Sample one purification run: draw the mixture branch, the four stage
/// outcomes, the coincidence, and the comparison measurements.
pub fn run_purification_trial<R: Rng + ?Sized>(
    input_fidelity: f64,
    params: &EmitterParams,
    rng: &mut R,
) -> Result<PurifyResult> {
    validate_fidelity(input_fidelity)?;
    let coeff = compute_coefficients(params);
    let keep_probability =
        input_fidelity * input_fidelity + (1.0 - input_fidelity) * (1.0 - input_fidelity);

    // Draw the mixture branch.
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut case = PairCase::PsiPsi;
    for c in PairCase::all() {
        acc += c.weight(input_fidelity);
        if u < acc {
            case = c;
            break;
        }
    }

    let mut state = initial_state(case);
    for stage in stages() {
        match sample_stage(&coeff, rng) {
            StageSample::Success => {
                let ids: Vec<&str> = stage.ids.iter().map(|s| s.as_str()).collect();
                state = state.apply_operator(&ids, stage.matrix.as_ref().unwrap())?;
            }
            StageSample::Fail => {
                return Ok(PurifyResult {
                    case,
                    herald: HeraldOutcome::HeraldFail { stage: stage.label },
                    coincidence: None,
                    kept: false,
                    correction: None,
                    final_state: None,
                    output_fidelity: None,
                    keep_probability,
                });
            }
            StageSample::Loss => {
                return Ok(PurifyResult {
                    case,
                    herald: HeraldOutcome::Loss { stage: stage.label },
                    coincidence: None,
                    kept: false,
                    correction: None,
                    final_state: None,
                    output_fidelity: None,
                    keep_probability,
                });
            }
        }
    }

    let (p1_rec, state) = state.measure_sample(POL1, MeasBasis::Hadamard, rng)?;
    let state = state
        .apply_operator(&[POL1], &hadamard())?
        .remove_collapsed(POL1)?;
    let alice = alice_detector(p1_rec.outcome);
    let (p2_rec, state) = state.measure_sample(POL2, MeasBasis::Hadamard, rng)?;
    let state = state
        .apply_operator(&[POL2], &hadamard())?
        .remove_collapsed(POL2)?;
    let bob = bob_detector(p2_rec.outcome);

    if !kept_coincidence(alice, bob) {
        return Ok(PurifyResult {
            case,
            herald: HeraldOutcome::Detector(alice),
            coincidence: Some((alice, bob)),
            kept: false,
            correction: None,
            final_state: None,
            output_fidelity: None,
            keep_probability,
        });
    }

    let state = state
        .apply_unitary(&[A2], &hadamard())?
        .apply_unitary(&[B2], &hadamard())?;
    let (a2_rec, state) = state.measure_sample(A2, MeasBasis::Computational, rng)?;
    let state = state.remove_collapsed(A2)?;
    let (b2_rec, state) = state.measure_sample(B2, MeasBasis::Computational, rng)?;
    let state = state.remove_collapsed(B2)?;
    let correction = if a2_rec.outcome == b2_rec.outcome {
        Pauli::I
    } else {
        Pauli::Z
    };
    let corrected = correction.apply(&state, A1)?;
    let fidelity = corrected.fidelity(&bell_phi_plus(A1, B1))?;
    Ok(PurifyResult {
        case,
        herald: HeraldOutcome::Detector(alice),
        coincidence: Some((alice, bob)),
        kept: true,
        correction: Some(correction),
        final_state: Some(corrected),
        output_fidelity: Some(fidelity),
        keep_probability,
    })
}

/// Closed-form purified fidelity F² / (F² + (1−F)²).
pub fn purified_fidelity(input_fidelity: f64) -> f64 {
    let f2 = input_fidelity * input_fidelity;
    let g2 = (1.0 - input_fidelity) * (1.0 - input_fidelity);
    f2 / (f2 + g2)
}
