//! Nonlocal entanglement creation through a collective-noise channel.
//!
//! The photon's H component scatters off atom `a` and is delayed into the
//! late time bin; the V component bypasses into the early bin. Both bins
//! see the same channel noise, the late bin scatters off atom `b`, the
//! waveform corrector filters the early (reference) arm, and the bins merge
//! into two output paths that are measured in the diagonal basis by
//! detectors D1–D4. A D2 or D3 click is corrected by σ_x on atom `b`; every
//! accepted run leaves the atoms in the |φ+⟩ Bell pair.

use num_complex::Complex64;
use rand::Rng;

use super::{sample_stage, Detector, HeraldOutcome, NoiseParams, Pauli, Stage, StageSample};
use crate::error::Result;
use crate::scatter::{compute_coefficients, EmitterParams, SpectralWavepacket};
use crate::state::{bell_phi_plus, JointState, MeasBasis, MixedEnsemble, Subsystem};

const POL: &str = "photon";
const BIN: &str = "bin";
const PATH: &str = "path";
const ATOM_A: &str = "a";
const ATOM_B: &str = "b";

type StageWeights = Vec<(&'static str, f64)>;

pub const STAGE_ATOM_A: &str = "atom-a";
pub const STAGE_ATOM_B: &str = "atom-b";
pub const STAGE_WFC: &str = "wfc";

/// Configuration of one creation run.
#[derive(Debug, Clone)]
pub struct CreationConfig {
    pub params: EmitterParams,
    pub noise: NoiseParams,
    /// Waveform corrector on the reference arm (disable to demonstrate the
    /// fidelity penalty it repairs; monochromatic runs then count one fewer
    /// scattering event).
    pub wfc_enabled: bool,
}

impl CreationConfig {
    pub fn new(params: EmitterParams, noise: NoiseParams) -> Self {
        CreationConfig {
            params,
            noise,
            wfc_enabled: true,
        }
    }

    pub fn without_wfc(mut self) -> Self {
        self.wfc_enabled = false;
        self
    }
}

/// One enumerated branch of the protocol.
#[derive(Debug, Clone)]
pub struct CreationBranch {
    pub herald: HeraldOutcome,
    pub probability: f64,
    pub correction: Pauli,
    /// Post-correction two-atom state (success branches only).
    pub state: Option<JointState>,
    pub fidelity: Option<f64>,
}

/// Full enumeration of a monochromatic creation run.
#[derive(Debug, Clone)]
pub struct CreationEnumeration {
    pub branches: Vec<CreationBranch>,
    pub success_probability: f64,
    pub herald_fail_probability: f64,
    pub loss_probability: f64,
    /// Probability-weighted post-correction fidelity with |φ+⟩ over the
    /// success branches.
    pub post_correction_fidelity: f64,
}

/// Outcome of a single sampled run.
#[derive(Debug, Clone)]
pub struct CreationResult {
    pub herald: HeraldOutcome,
    pub correction: Pauli,
    pub final_state: Option<JointState>,
    pub fidelity: Option<f64>,
    /// Exact probability of the sampled outcome.
    pub probability: f64,
}

/// Photon (|H⟩+|V⟩)/√2, early time bin, both atoms in (|0⟩+|1⟩)/√2.
fn initial_state() -> JointState {
    JointState::compose(&[
        JointState::plus(Subsystem::polarization(POL)),
        JointState::basis(Subsystem::time_bin(BIN), 0),
        JointState::plus(Subsystem::atom(ATOM_A)),
        JointState::plus(Subsystem::atom(ATOM_B)),
    ])
    .expect("fresh ids")
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Operator index over (pol, bin, atom), big-endian in that id order.
fn pba(pol: usize, bin: usize, atom: usize) -> usize {
    pol * 4 + bin * 2 + atom
}

/// Structure of the atom-a block: the H component is flipped to V, delayed
/// into the late bin, and picks up (−1)^a; the V bypass keeps the early bin.
/// Acts on (pol, bin, atom).
fn atom_a_structure() -> Vec<Complex64> {
    let mut m = vec![c(0.0); 64];
    for atom in 0..2usize {
        let sign = if atom == 1 { -1.0 } else { 1.0 };
        let h_early = pba(0, 0, atom);
        let v_late = pba(1, 1, atom);
        let v_early = pba(1, 0, atom);
        let h_late = pba(0, 1, atom);
        m[v_late * 8 + h_early] = c(sign); // |H,S⟩ → ±|V,L⟩
        m[h_early * 8 + v_late] = c(sign); // unitary completion
        m[v_early * 8 + v_early] = c(1.0); // V bypass untouched
        m[h_late * 8 + h_late] = c(1.0);
    }
    m
}

/// Structure of the atom-b block: the late bin has its polarization swapped
/// and picks up (−1)^b; the early bin passes. Acts on (pol, bin, atom).
fn atom_b_structure() -> Vec<Complex64> {
    let mut m = vec![c(0.0); 64];
    for pol in 0..2usize {
        for atom in 0..2usize {
            let sign = if atom == 1 { -1.0 } else { 1.0 };
            let late_in = pba(pol, 1, atom);
            let late_out = pba(1 - pol, 1, atom);
            m[late_out * 8 + late_in] = c(sign);
            let early = pba(pol, 0, atom);
            m[early * 8 + early] = c(1.0);
        }
    }
    m
}

fn stages(cfg: &CreationConfig) -> Vec<Stage> {
    let mut v = vec![
        Stage::structural(STAGE_ATOM_A, &[POL, BIN, ATOM_A], atom_a_structure()),
        Stage::structural(STAGE_ATOM_B, &[POL, BIN, ATOM_B], atom_b_structure()),
    ];
    if cfg.wfc_enabled {
        v.push(Stage::filter_only(STAGE_WFC));
    }
    v
}

/// The interferometer recombination: early-V and late-H exit on path 1,
/// early-H and late-V on path 2, with the bins re-synchronized (zero added
/// phase) so the time-bin label becomes the path label.
fn merge_bins_to_paths(state: &JointState) -> Result<JointState> {
    // Controlled flip on (pol, bin): H flips the bin, V keeps it.
    let mut m = vec![c(0.0); 16];
    m[4] = c(1.0); // |H,S⟩ → |H,2⟩
    m[1] = c(1.0); // |H,L⟩ → |H,1⟩
    m[10] = c(1.0); // |V,S⟩ → |V,1⟩
    m[15] = c(1.0); // |V,L⟩ → |V,2⟩
    let merged = state.apply_unitary(&[POL, BIN], &m)?;
    merged.relabel_subsystem(BIN, Subsystem::path(PATH))
}

fn detector_for(path_outcome: u8, pm_outcome: u8) -> Detector {
    match (path_outcome, pm_outcome) {
        (0, 0) => Detector::D1,
        (0, 1) => Detector::D2,
        (1, 1) => Detector::D3,
        _ => Detector::D4,
    }
}

fn correction_for(detector: Detector) -> Pauli {
    match detector {
        Detector::D2 | Detector::D3 => Pauli::X,
        _ => Pauli::I,
    }
}

/// State of the surviving branch just before detection, with all stage
/// success amplitudes applied. The channel noise acts on the polarization
/// between the atom-a and atom-b stages.
fn survivor_with_noise(cfg: &CreationConfig) -> Result<(JointState, StageWeights, StageWeights)> {
    let coeff = compute_coefficients(&cfg.params);
    let mut survivor = initial_state();
    let mut fails = Vec::new();
    let mut losses = Vec::new();
    let stage_list = stages(cfg);
    for stage in &stage_list {
        if stage.label == STAGE_ATOM_B {
            survivor = super::apply_collective_noise(&survivor, &cfg.noise, POL)?;
        }
        let w = survivor.norm2();
        fails.push((stage.label, w * coeff.herald_fail_probability()));
        losses.push((stage.label, w * coeff.loss));
        let ids: Vec<&str> = stage.ids.iter().map(|s| s.as_str()).collect();
        survivor = match &stage.matrix {
            Some(m) => survivor.apply_operator(&ids, m)?,
            None => survivor,
        }
        .scaled(coeff.r);
    }
    Ok((survivor, fails, losses))
}

/// Enumerate every herald branch of a monochromatic run with its exact
/// probability.
pub fn run_creation_enumerate(cfg: &CreationConfig) -> Result<CreationEnumeration> {
    let (survivor, fails, losses) = survivor_with_noise(cfg)?;
    let merged = merge_bins_to_paths(&survivor)?;

    let mut branches = Vec::new();
    let mut success_probability = 0.0;
    let mut fidelity_acc = 0.0;
    let reference = bell_phi_plus(ATOM_A, ATOM_B);

    for (path_rec, path_state) in merged.measure_remove(PATH, MeasBasis::Computational)? {
        for (pm_rec, pm_state) in path_state.measure_remove(POL, MeasBasis::Hadamard)? {
            let detector = detector_for(path_rec.outcome, pm_rec.outcome);
            let probability = path_rec.probability * pm_rec.probability;
            let correction = correction_for(detector);
            let corrected = correction.apply(&pm_state, ATOM_B)?;
            let fidelity = corrected.fidelity(&reference)?;
            success_probability += probability;
            fidelity_acc += probability * fidelity;
            branches.push(CreationBranch {
                herald: HeraldOutcome::Detector(detector),
                probability,
                correction,
                state: Some(corrected),
                fidelity: Some(fidelity),
            });
        }
    }

    let mut herald_fail_probability = 0.0;
    for (stage, w) in fails {
        herald_fail_probability += w;
        branches.push(CreationBranch {
            herald: HeraldOutcome::HeraldFail { stage },
            probability: w,
            correction: Pauli::I,
            state: None,
            fidelity: None,
        });
    }
    let mut loss_probability = 0.0;
    for (stage, w) in losses {
        loss_probability += w;
        branches.push(CreationBranch {
            herald: HeraldOutcome::Loss { stage },
            probability: w,
            correction: Pauli::I,
            state: None,
            fidelity: None,
        });
    }

    Ok(CreationEnumeration {
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

/// Sample a single monochromatic run.
pub fn run_creation_trial<R: Rng + ?Sized>(
    cfg: &CreationConfig,
    rng: &mut R,
) -> Result<CreationResult> {
    let coeff = compute_coefficients(&cfg.params);
    let mut state = initial_state();
    let stage_list = stages(cfg);
    let n_stages = stage_list.len() as i32;
    for stage in &stage_list {
        if stage.label == STAGE_ATOM_B {
            state = super::apply_collective_noise(&state, &cfg.noise, POL)?;
        }
        match sample_stage(&coeff, rng) {
            StageSample::Success => {
                if let Some(m) = &stage.matrix {
                    let ids: Vec<&str> = stage.ids.iter().map(|s| s.as_str()).collect();
                    state = state.apply_operator(&ids, m)?;
                }
            }
            StageSample::Fail => {
                return Ok(CreationResult {
                    herald: HeraldOutcome::HeraldFail { stage: stage.label },
                    correction: Pauli::I,
                    final_state: None,
                    fidelity: None,
                    probability: stage_prior(cfg, stage.label, &coeff)
                        * coeff.herald_fail_probability(),
                });
            }
            StageSample::Loss => {
                return Ok(CreationResult {
                    herald: HeraldOutcome::Loss { stage: stage.label },
                    correction: Pauli::I,
                    final_state: None,
                    fidelity: None,
                    probability: stage_prior(cfg, stage.label, &coeff) * coeff.loss,
                });
            }
        }
    }
    let merged = merge_bins_to_paths(&state)?;
    let (path_rec, path_state) = merged.measure_sample(PATH, MeasBasis::Computational, rng)?;
    let path_state = path_state.remove_collapsed(PATH)?;
    let (pm_rec, pm_state) = path_state.measure_sample(POL, MeasBasis::Hadamard, rng)?;
    let pm_state = pm_state
        .apply_operator(&[POL], &crate::state::hadamard())?
        .remove_collapsed(POL)?;
    let detector = detector_for(path_rec.outcome, pm_rec.outcome);
    let correction = correction_for(detector);
    let corrected = correction.apply(&pm_state, ATOM_B)?;
    let fidelity = corrected.fidelity(&bell_phi_plus(ATOM_A, ATOM_B))?;
    Ok(CreationResult {
        herald: HeraldOutcome::Detector(detector),
        correction,
        probability: coeff.success_probability().powi(n_stages)
            * path_rec.probability
            * pm_rec.probability,
        final_state: Some(corrected),
        fidelity: Some(fidelity),
    })
}

/// Product of success probabilities of the stages preceding `label`.
fn stage_prior(
    cfg: &CreationConfig,
    label: &'static str,
    coeff: &crate::scatter::ScatterCoefficients,
) -> f64 {
    let mut prior = 1.0;
    for stage in stages(cfg) {
        if stage.label == label {
            return prior;
        }
        prior *= coeff.success_probability();
    }
    prior
}

/// Spectral-mode report: the photon carries a finite-bandwidth wavepacket
/// and the two interferometer arms keep their own filtered envelopes.
#[derive(Debug, Clone)]
pub struct SpectralCreationReport {
    pub success_probability: f64,
    pub herald_fail_probability: f64,
    pub loss_probability: f64,
    /// Weighted post-correction fidelity over detectors and frequency bins.
    pub post_correction_fidelity: f64,
    pub detector_branches: Vec<(Detector, f64, f64)>,
    /// Overlap-definition success probability of a single scattering event
    /// for this wavepacket, |⟨ψ|φ_r⟩|².
    pub overlap_success_probability: f64,
    pub wfc_enabled: bool,
}

/// Enumerate a finite-bandwidth creation run.
///
/// Arm bookkeeping per frequency bin: the scattered (late) arm carries the
/// reflected filter from atom `a` and atom `b`; the reference (early) arm
/// carries atom `b` plus the waveform corrector when enabled. With the
/// corrector the two envelopes match bin-by-bin and the accepted fidelity
/// stays at one; without it the arms differ by one reflected filter and the
/// interferometer misfires on broadband input.
pub fn run_creation_spectral(
    cfg: &CreationConfig,
    wavepacket: &SpectralWavepacket,
) -> Result<SpectralCreationReport> {
    let overlap = crate::scatter::overlap_success_probability(wavepacket, &cfg.params)?;
    let reference = bell_phi_plus(ATOM_A, ATOM_B);

    let mut success_probability = 0.0;
    let mut herald_fail_probability = 0.0;
    let mut loss_probability = 0.0;
    let mut per_detector: Vec<Vec<(f64, JointState)>> = vec![Vec::new(); 4];

    for &(offset, amp) in wavepacket.bins() {
        let w_bin = amp.norm_sqr();
        if w_bin == 0.0 {
            continue;
        }
        let coeff = compute_coefficients(&cfg.params.detuned_by(offset));
        let ps = coeff.success_probability();
        let pf = coeff.herald_fail_probability();
        let r = coeff.r;

        // Arm amplitudes after all stages. Atom a filters the late arm,
        // atom b filters both bins (common path at the receiving node), the
        // corrector filters the early arm only.
        let alpha_early = if cfg.wfc_enabled { r * r } else { r };
        let alpha_late = r * r;

        // Stage-resolved herald accounting: atom a sees the late half, the
        // corrector the early half, atom b everything that survived.
        let w_a_in = 0.5;
        let w_wfc_in = if cfg.wfc_enabled { 0.5 } else { 0.0 };
        let w_b_in = 0.5 * (1.0 + ps)
            - if cfg.wfc_enabled {
                0.5 * (1.0 - ps)
            } else {
                0.0
            };
        for w_in in [w_a_in, w_wfc_in, w_b_in] {
            herald_fail_probability += w_bin * w_in * pf;
            loss_probability += w_bin * w_in * coeff.loss;
        }

        // Structural evolution with per-arm envelope weights.
        let mut state = initial_state();
        state = state.apply_operator(&[POL, BIN, ATOM_A], &atom_a_structure())?;
        state = super::apply_collective_noise(&state, &cfg.noise, POL)?;
        state = state.apply_operator(&[POL, BIN, ATOM_B], &atom_b_structure())?;
        let arm_filter = [
            alpha_early,
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            alpha_late,
        ];
        state = state.apply_operator(&[BIN], &arm_filter)?;
        let merged = merge_bins_to_paths(&state)?;

        for (path_rec, path_state) in merged.measure_remove(PATH, MeasBasis::Computational)? {
            for (pm_rec, pm_state) in path_state.measure_remove(POL, MeasBasis::Hadamard)? {
                let detector = detector_for(path_rec.outcome, pm_rec.outcome);
                let p = w_bin * path_rec.probability * pm_rec.probability;
                let corrected = correction_for(detector).apply(&pm_state, ATOM_B)?;
                success_probability += p;
                per_detector[detector.index()].push((p, corrected));
            }
        }
    }

    let mut detector_branches = Vec::new();
    let mut fidelity_acc = 0.0;
    for (idx, branches) in per_detector.into_iter().enumerate() {
        if branches.is_empty() {
            continue;
        }
        let weight: f64 = branches.iter().map(|(w, _)| w).sum();
        let ensemble = MixedEnsemble::new(branches)?;
        let fidelity = ensemble.fidelity(&reference)?;
        fidelity_acc += weight * fidelity;
        let detector = match idx {
            0 => Detector::D1,
            1 => Detector::D2,
            2 => Detector::D3,
            _ => Detector::D4,
        };
        detector_branches.push((detector, weight, fidelity));
    }

    Ok(SpectralCreationReport {
        success_probability,
        herald_fail_probability,
        loss_probability,
        post_correction_fidelity: if success_probability > 0.0 {
            fidelity_acc / success_probability
        } else {
            0.0
        },
        detector_branches,
        overlap_success_probability: overlap,
        wfc_enabled: cfg.wfc_enabled,
    })
}
