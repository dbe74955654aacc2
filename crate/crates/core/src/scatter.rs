//! Single-photon scattering off a waveguide-coupled emitter.
//!
//! A two-level transition coupled to a one-dimensional waveguide reflects a
//! resonant photon with amplitude `r` and transmits it with amplitude
//! `t = 1 + r`. Both depend only on two dimensionless numbers: the Purcell
//! factor `P` (decay into the guided mode over decay into everything else)
//! and the detuning in units of the guided decay rate. The residual weight
//! `1 - |r|² - |t|²` is emission out of the waveguide and is treated as an
//! undetected loss.

use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Purcell factor. Infinity is a first-class value so perfect-mirror limits
/// stay exact instead of depending on a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Purcell {
    Finite(f64),
    Infinite,
}

impl Purcell {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_infinite() && value > 0.0 {
            return Ok(Purcell::Infinite);
        }
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidPurcell(value));
        }
        Ok(Purcell::Finite(value))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Purcell::Infinite)
    }
}

impl fmt::Display for Purcell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Purcell::Finite(p) => write!(f, "{p}"),
            Purcell::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Purcell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Purcell::Infinite),
            other => {
                let v: f64 = other.parse().map_err(|_| Error::InvalidPurcell(f64::NAN))?;
                Purcell::new(v)
            }
        }
    }
}

/// Emitter working point: Purcell factor and central detuning (in units of
/// the guided decay rate). Only these ratios enter the physics; absolute
/// rates are never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterParams {
    purcell: Purcell,
    detuning: f64,
}

impl EmitterParams {
    pub fn new(purcell: Purcell, detuning: f64) -> Result<Self> {
        if !detuning.is_finite() {
            return Err(Error::InvalidDetuning(detuning));
        }
        Ok(EmitterParams { purcell, detuning })
    }

    pub fn purcell(&self) -> Purcell {
        self.purcell
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    /// Same emitter with the detuning shifted by `offset`. Used to evaluate
    /// the coefficients across the bins of a spectral wavepacket.
    pub fn detuned_by(&self, offset: f64) -> EmitterParams {
        EmitterParams {
            purcell: self.purcell,
            detuning: self.detuning + offset,
        }
    }
}

/// Reflection and transmission amplitudes plus the out-of-waveguide loss
/// weight for one emitter working point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterCoefficients {
    pub r: Complex64,
    pub t: Complex64,
    pub loss: f64,
}

impl ScatterCoefficients {
    /// |r|², the probability that the heralded scattering succeeds.
    pub fn success_probability(&self) -> f64 {
        self.r.norm_sqr()
    }

    /// |t|², the probability of the heralded (polarization-unchanged) failure.
    pub fn herald_fail_probability(&self) -> f64 {
        self.t.norm_sqr()
    }
}

/// Evaluate the scattering amplitudes
/// `r = -1 / (1 + 1/P - 2iΔ)`, `t = 1 + r`.
///
/// For infinite `P` the `1/P` term drops and the loss is exactly zero; the
/// atom is a perfect mirror at zero detuning (`r = -1`).
pub fn compute_coefficients(params: &EmitterParams) -> ScatterCoefficients {
    let delta = params.detuning();
    match params.purcell() {
        Purcell::Infinite => {
            let denom = Complex64::new(1.0, -2.0 * delta);
            let r = -Complex64::new(1.0, 0.0) / denom;
            let t = Complex64::new(1.0, 0.0) + r;
            ScatterCoefficients { r, t, loss: 0.0 }
        }
        Purcell::Finite(p) => {
            let denom = Complex64::new(1.0 + 1.0 / p, -2.0 * delta);
            let r = -Complex64::new(1.0, 0.0) / denom;
            let t = Complex64::new(1.0, 0.0) + r;
            // Closed form for 1 - |r|² - |t|²; never negative by rounding.
            let loss = (2.0 / p) / denom.norm_sqr();
            ScatterCoefficients { r, t, loss }
        }
    }
}

/// Which output of the scattering event to keep when filtering a wavepacket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatterPort {
    Reflected,
    Transmitted,
}

/// Discretized frequency-bin amplitudes of a photon's spatial wavefunction.
/// Bin detunings are offsets relative to the emitter's central detuning.
/// A normalized input photon has Σ|a|² = 1; filtered packets carry norm ≤ 1
/// (the missing weight has been heralded away or lost).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralWavepacket {
    bins: Vec<(f64, Complex64)>,
}

const WP_NORM_TOL: f64 = 1e-9;

impl SpectralWavepacket {
    /// Normalized wavepacket from explicit bins (detuning offset, amplitude).
    pub fn new(bins: Vec<(f64, Complex64)>) -> Result<Self> {
        let wp = Self::from_filtered(bins)?;
        let n2 = wp.norm2();
        if (n2 - 1.0).abs() > WP_NORM_TOL {
            return Err(Error::WavepacketNorm {
                norm2: n2,
                expected: 1.0,
                tol: WP_NORM_TOL,
            });
        }
        Ok(wp)
    }

    /// Wavepacket that may carry norm below one (output of a filter).
    pub fn from_filtered(bins: Vec<(f64, Complex64)>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::EmptyWavepacket);
        }
        if bins.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::UnsortedWavepacket);
        }
        let n2 = bins.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>();
        if n2 > 1.0 + WP_NORM_TOL {
            return Err(Error::WavepacketNorm {
                norm2: n2,
                expected: 1.0,
                tol: WP_NORM_TOL,
            });
        }
        Ok(SpectralWavepacket { bins })
    }

    /// Single-bin (monochromatic) packet at the emitter's central detuning.
    pub fn monochromatic() -> Self {
        SpectralWavepacket {
            bins: vec![(0.0, Complex64::new(1.0, 0.0))],
        }
    }

    /// Gaussian packet with amplitude a(δ) ∝ exp(−δ²/(2σ²)) centered on the
    /// carrier, discretized over ±5σ. The clipped tails carry less than
    /// 1e-10 of the norm, so the renormalized packet is Gaussian to that
    /// accuracy.
    pub fn gaussian(sigma: f64, bin_count: usize) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidDetuning(sigma));
        }
        let n = bin_count.max(1);
        let mut bins = Vec::with_capacity(n);
        if n == 1 {
            bins.push((0.0, Complex64::new(1.0, 0.0)));
            return SpectralWavepacket::new(bins);
        }
        let half = 5.0 * sigma;
        let step = 2.0 * half / (n - 1) as f64;
        for i in 0..n {
            let d = -half + step * i as f64;
            let a = (-d * d / (2.0 * sigma * sigma)).exp();
            bins.push((d, Complex64::new(a, 0.0)));
        }
        let n2: f64 = bins.iter().map(|(_, a)| a.norm_sqr()).sum();
        let scale = 1.0 / n2.sqrt();
        for (_, a) in &mut bins {
            *a *= scale;
        }
        SpectralWavepacket::new(bins)
    }

    pub fn bins(&self) -> &[(f64, Complex64)] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn norm2(&self) -> f64 {
        self.bins.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩ over matching bins. Panics if the grids differ.
    pub fn inner(&self, other: &SpectralWavepacket) -> Complex64 {
        assert_eq!(self.bins.len(), other.bins.len(), "bin grids differ");
        self.bins
            .iter()
            .zip(&other.bins)
            .map(|((d0, a), (d1, b))| {
                assert!((d0 - d1).abs() < 1e-12, "bin grids differ");
                a.conj() * b
            })
            .sum()
    }
}

/// Apply the reflected (`r`) or transmitted (`t`) spectral filter bin by bin.
/// Each bin's total detuning is the central detuning in `params` offset by
/// the bin's own detuning.
pub fn filter_wavepacket(
    wp: &SpectralWavepacket,
    params: &EmitterParams,
    which: ScatterPort,
) -> SpectralWavepacket {
    let bins = wp
        .bins
        .iter()
        .map(|&(d, a)| {
            let c = compute_coefficients(&params.detuned_by(d));
            let f = match which {
                ScatterPort::Reflected => c.r,
                ScatterPort::Transmitted => c.t,
            };
            (d, f * a)
        })
        .collect();
    SpectralWavepacket { bins }
}

/// Overlap-based success probability `p_s = |⟨ψ|φ_r⟩|²` of the heralded
/// scattering event, where `φ_r` is the reflected-filtered packet. For a
/// single-bin packet this equals |r|² exactly. For broadband packets the raw
/// herald probability ⟨φ_r|φ_r⟩ (see [`reflected_norm2`]) is larger; this
/// function implements the overlap definition.
pub fn overlap_success_probability(wp: &SpectralWavepacket, params: &EmitterParams) -> Result<f64> {
    let n2 = wp.norm2();
    if (n2 - 1.0).abs() > WP_NORM_TOL {
        return Err(Error::WavepacketNorm {
            norm2: n2,
            expected: 1.0,
            tol: WP_NORM_TOL,
        });
    }
    let reflected = filter_wavepacket(wp, params, ScatterPort::Reflected);
    Ok(wp.inner(&reflected).norm_sqr())
}

/// Raw norm² of the reflected-filtered packet, ⟨φ_r|φ_r⟩. This is the
/// probability that the herald reports success regardless of how well the
/// output packet overlaps the input one.
pub fn reflected_norm2(wp: &SpectralWavepacket, params: &EmitterParams) -> f64 {
    filter_wavepacket(wp, params, ScatterPort::Reflected).norm2()
}
