//! Entanglement swapping: two Bell pairs (a,c) and (b,d) are converted into
//! one longer-range pair (a,b) by scattering a single photon off the local
//! atoms c and d, detecting it in the diagonal basis (D1 = +, D2 = −), and
//! measuring both local atoms after a Hadamard. The photon's V component is
//! routed through the atom-c block and its H component through the atom-d
//! block; each routed component picks up (−1)^atom. The detector and the
//! two atom outcomes select a Pauli word on atom `a` that always restores
//! |φ+⟩ on the accepted branch.

use rand::Rng;

use super::{
    sample_stage, walk_stages, CorrectionTable, Detector, HeraldOutcome, Pauli, Stage, StageSample,
};
use crate::error::Result;
use crate::scatter::{compute_coefficients, EmitterParams};
use crate::state::{bell_phi_plus, hadamard, JointState, MeasBasis, Subsystem};

const POL: &str = "photon";
const ATOM_A: &str = "a";
const ATOM_B: &str = "b";
const ATOM_C: &str = "c";
const ATOM_D: &str = "d";

pub const STAGE_ATOM_C: &str = "atom-c";
pub const STAGE_ATOM_D: &str = "atom-d";

/// One enumerated branch of a swapping run.
#[derive(Debug, Clone)]
pub struct SwapBranch {
    pub herald: HeraldOutcome,
    pub atom_c: Option<u8>,
    pub atom_d: Option<u8>,
    pub correction: Option<Pauli>,
    pub probability: f64,
    pub state: Option<JointState>,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SwapEnumeration {
    pub branches: Vec<SwapBranch>,
    pub success_probability: f64,
    pub herald_fail_probability: f64,
    pub loss_probability: f64,
    pub post_correction_fidelity: f64,
}

/// Outcome of one sampled swapping run.
#[derive(Debug, Clone)]
pub struct SwapResult {
    pub herald: HeraldOutcome,
    pub atom_c: Option<u8>,
    pub atom_d: Option<u8>,
    pub correction: Option<Pauli>,
    pub final_state: Option<JointState>,
    pub fidelity: Option<f64>,
    pub probability: f64,
}

fn initial_state() -> JointState {
    JointState::compose(&[
        bell_phi_plus(ATOM_A, ATOM_C),
        bell_phi_plus(ATOM_B, ATOM_D),
        JointState::plus(Subsystem::polarization(POL)),
    ])
    .expect("fresh ids")
}

fn stages() -> Vec<Stage> {
    vec![
        Stage::structural(STAGE_ATOM_C, &[POL, ATOM_C], super::routed_sign_diagonal(1)),
        Stage::structural(STAGE_ATOM_D, &[POL, ATOM_D], super::routed_sign_diagonal(0)),
    ]
}

fn detector_for(pm_outcome: u8) -> Detector {
    if pm_outcome == 0 {
        Detector::D1
    } else {
        Detector::D2
    }
}

/// Enumerate every branch of a swapping run with exact probabilities.
pub fn run_swapping_enumerate(params: &EmitterParams) -> Result<SwapEnumeration> {
    let coeff = compute_coefficients(params);
    let walk = walk_stages(&initial_state(), &stages(), &coeff)?;
    let survivor = walk
        .survivor
        .apply_unitary(&[ATOM_C], &hadamard())?
        .apply_unitary(&[ATOM_D], &hadamard())?;

    let reference = bell_phi_plus(ATOM_A, ATOM_B);
    let mut branches = Vec::new();
    let mut success_probability = 0.0;
    let mut fidelity_acc = 0.0;

    for (pm_rec, pm_state) in survivor.measure_remove(POL, MeasBasis::Hadamard)? {
        let detector = detector_for(pm_rec.outcome);
        for (c_rec, c_state) in pm_state.measure_remove(ATOM_C, MeasBasis::Computational)? {
            for (d_rec, d_state) in c_state.measure_remove(ATOM_D, MeasBasis::Computational)? {
                let correction = CorrectionTable::lookup(detector, c_rec.outcome, d_rec.outcome);
                let corrected = correction.apply(&d_state, ATOM_A)?;
                let probability = pm_rec.probability * c_rec.probability * d_rec.probability;
                let fidelity = corrected.fidelity(&reference)?;
                success_probability += probability;
                fidelity_acc += probability * fidelity;
                branches.push(SwapBranch {
                    herald: HeraldOutcome::Detector(detector),
                    atom_c: Some(c_rec.outcome),
                    atom_d: Some(d_rec.outcome),
                    correction: Some(correction),
                    probability,
                    state: Some(corrected),
                    fidelity: Some(fidelity),
                });
            }
        }
    }

    let mut herald_fail_probability = 0.0;
    for (stage, w) in walk.fails {
        herald_fail_probability += w;
        branches.push(SwapBranch {
            herald: HeraldOutcome::HeraldFail { stage },
            atom_c: None,
            atom_d: None,
            correction: None,
            probability: w,
            state: None,
            fidelity: None,
        });
    }
    let mut loss_probability = 0.0;
    for (stage, w) in walk.losses {
        loss_probability += w;
        branches.push(SwapBranch {
            herald: HeraldOutcome::Loss { stage },
            atom_c: None,
            atom_d: None,
            correction: None,
            probability: w,
            state: None,
            fidelity: None,
        });
    }

    Ok(SwapEnumeration {
        post_correction_fidelity: if success_probability > 0.0 {
            fidelity_acc / success_probability
        } else {
            0.0
        },
        branches,
        success_probability,
        herald_fail_probability,
        loss_probability,
    })
}

/// Sample one swapping run.
pub fn run_swapping_trial<R: Rng + ?Sized>(
    params: &EmitterParams,
    rng: &mut R,
) -> Result<SwapResult> {
    let coeff = compute_coefficients(params);
    let mut state = initial_state();
    let ps = coeff.success_probability();
    for (k, stage) in stages().iter().enumerate() {
        match sample_stage(&coeff, rng) {
            StageSample::Success => {
                let ids: Vec<&str> = stage.ids.iter().map(|s| s.as_str()).collect();
                state = state.apply_operator(&ids, stage.matrix.as_ref().unwrap())?;
            }
            StageSample::Fail => {
                return Ok(SwapResult {
                    herald: HeraldOutcome::HeraldFail { stage: stage.label },
                    atom_c: None,
                    atom_d: None,
                    correction: None,
                    final_state: None,
                    fidelity: None,
                    probability: ps.powi(k as i32) * coeff.herald_fail_probability(),
                });
            }
            StageSample::Loss => {
                return Ok(SwapResult {
                    herald: HeraldOutcome::Loss { stage: stage.label },
                    atom_c: None,
                    atom_d: None,
                    correction: None,
                    final_state: None,
                    fidelity: None,
                    probability: ps.powi(k as i32) * coeff.loss,
                });
            }
        }
    }
    let state = state
        .apply_unitary(&[ATOM_C], &hadamard())?
        .apply_unitary(&[ATOM_D], &hadamard())?;

    let (pm_rec, state) = state.measure_sample(POL, MeasBasis::Hadamard, rng)?;
    let state = state
        .apply_operator(&[POL], &hadamard())?
        .remove_collapsed(POL)?;
    let detector = detector_for(pm_rec.outcome);
    let (c_rec, state) = state.measure_sample(ATOM_C, MeasBasis::Computational, rng)?;
    let state = state.remove_collapsed(ATOM_C)?;
    let (d_rec, state) = state.measure_sample(ATOM_D, MeasBasis::Computational, rng)?;
    let state = state.remove_collapsed(ATOM_D)?;

    let correction = CorrectionTable::lookup(detector, c_rec.outcome, d_rec.outcome);
    let corrected = correction.apply(&state, ATOM_A)?;
    let fidelity = corrected.fidelity(&bell_phi_plus(ATOM_A, ATOM_B))?;
    Ok(SwapResult {
        herald: HeraldOutcome::Detector(detector),
        atom_c: Some(c_rec.outcome),
        atom_d: Some(d_rec.outcome),
        correction: Some(correction),
        probability: ps.powi(2) * pm_rec.probability * c_rec.probability * d_rec.probability,
        final_state: Some(corrected),
        fidelity: Some(fidelity),
    })
}
