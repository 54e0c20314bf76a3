//! Stroboscopic time evolution under a Floquet operator, autocorrelation
//! sequences, and FFT-based spectrum retrieval, with exact overlap weights
//! as the spectral reference.

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::spectrum::{eigenphases, SpectrumError};
use crate::su2::UnitaryOperator;
use crate::CVec;

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("sequence length {len} is not a power of two (enable padding or adjust N)")]
    NonPowerOfTwo { len: usize },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// a_n = ⟨φ(0)|Fⁿ|φ(0)⟩ for n = 1…N.
#[derive(Debug, Clone)]
pub struct AutocorrelationSequence {
    pub values: Vec<Complex64>,
    pub initial_state_tag: String,
    /// max |‖ψ_n‖ − 1| over the evolution.
    pub norm_drift: f64,
}

/// Evolve |φ(0)⟩ by repeated matrix–vector products (never explicit matrix
/// powers) and record the autocorrelation at every step.
pub fn autocorrelation(
    f: &UnitaryOperator,
    phi0: &CVec,
    n_seq: usize,
    initial_state_tag: &str,
) -> AutocorrelationSequence {
    assert!((phi0.norm() - 1.0).abs() < 1e-10, "initial state must be normalized");
    let mut psi = phi0.clone();
    let mut values = Vec::with_capacity(n_seq);
    let mut norm_drift = 0.0f64;
    for _ in 0..n_seq {
        psi = &f.matrix * psi;
        norm_drift = norm_drift.max((psi.norm() - 1.0).abs());
        let a: Complex64 = phi0.iter().zip(psi.iter()).map(|(p, q)| p.conj() * q).sum();
        values.push(a);
    }
    AutocorrelationSequence { values, initial_state_tag: initial_state_tag.to_string(), norm_drift }
}

/// Window applied before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    None,
    Hann,
}

#[derive(Debug, Clone, Copy)]
pub struct FftOptions {
    /// When the sequence length is not a power of two, prepend a₀ = 1 and
    /// zero-pad to the next power of two instead of rejecting.
    pub pad: bool,
    pub window: Window,
}

impl Default for FftOptions {
    fn default() -> Self {
        Self { pad: false, window: Window::None }
    }
}

/// Power spectrum on the phase grid ε_k = 2πk/N.
#[derive(Debug, Clone)]
pub struct PowerSpectrum {
    pub phases: Vec<f64>,
    /// |â_k|² with â_k = (1/N) Σ_n a_n e^{+2πi k n/N} (so that a pure tone
    /// e^{−inε} lands in the bin with phase ε, at unit power).
    pub power: Vec<f64>,
    pub n_seq: usize,
}

impl PowerSpectrum {
    /// Power normalized to unit total (the plotted quantity).
    pub fn normalized(&self) -> Vec<f64> {
        let total: f64 = self.power.iter().sum();
        self.power.iter().map(|p| p / total).collect()
    }

    /// Bin amplitudes |â_k| for amplitude-style output.
    pub fn amplitude(&self) -> Vec<f64> {
        self.power.iter().map(|p| p.sqrt()).collect()
    }
}

/// Discrete Fourier transform of the autocorrelation sequence. Bin k maps
/// to the phase 2πk/N under the e^{−iε} eigenvalue convention.
pub fn fft_spectrum(seq: &AutocorrelationSequence, opts: FftOptions) -> Result<PowerSpectrum, DynamicsError> {
    let mut data: Vec<Complex64> = seq.values.clone();
    if !data.len().is_power_of_two() {
        if !opts.pad {
            return Err(DynamicsError::NonPowerOfTwo { len: data.len() });
        }
        // Prepend a₀ = ⟨φ(0)|φ(0)⟩ = 1, then zero-pad.
        let mut padded = Vec::with_capacity((data.len() + 1).next_power_of_two());
        padded.push(Complex64::new(1.0, 0.0));
        padded.extend_from_slice(&data);
        padded.resize(padded.len().next_power_of_two(), Complex64::new(0.0, 0.0));
        data = padded;
    }
    if let Window::Hann = opts.window {
        let n = data.len() as f64;
        for (i, v) in data.iter_mut().enumerate() {
            let w = 0.5 * (1.0 - (TAU * i as f64 / n).cos());
            *v *= w;
        }
    }
    let n = data.len();
    // Inverse-direction transform puts the e^{−inε} tone at bin ε·N/2π.
    FftPlanner::new().plan_fft_inverse(n).process(&mut data);
    let scale = 1.0 / (n as f64 * n as f64);
    Ok(PowerSpectrum {
        phases: (0..n).map(|k| TAU * k as f64 / n as f64).collect(),
        power: data.iter().map(|v| v.norm_sqr() * scale).collect(),
        n_seq: n,
    })
}

/// Local maxima of the power spectrum above `threshold_factor` × median
/// power. Returns bin indices.
pub fn detect_peaks(spectrum: &PowerSpectrum, threshold_factor: f64) -> Vec<usize> {
    let n = spectrum.power.len();
    if n < 3 {
        return Vec::new();
    }
    let mut sorted = spectrum.power.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[n / 2];
    let threshold = threshold_factor * median;
    (0..n)
        .filter(|&k| {
            let prev = spectrum.power[(k + n - 1) % n];
            let next = spectrum.power[(k + 1) % n];
            spectrum.power[k] > threshold && spectrum.power[k] >= prev && spectrum.power[k] >= next
        })
        .collect()
}

/// Exact spectral reference: eigenphases ε_j with weights w_j = |⟨φ0|ψ_j⟩|²,
/// sorted by ε. The autocorrelation satisfies a_n = Σ_j w_j e^{−inε_j}.
pub fn overlap_weights(f: &UnitaryOperator, phi0: &CVec) -> Result<Vec<(f64, f64)>, SpectrumError> {
    let set = eigenphases(f, true)?;
    let v = set.vectors.as_ref().expect("vectors requested");
    let out = (0..set.len())
        .map(|j| {
            let overlap: Complex64 = (0..v.nrows()).map(|i| phi0[i].conj() * v[(i, j)]).sum();
            (set.phases[j], overlap.norm_sqr())
        })
        .collect();
    Ok(out)
}

/// Rebuild a_n = Σ_j w_j e^{−inε_j} from spectral data.
pub fn resynthesize(weights: &[(f64, f64)], n_seq: usize) -> Vec<Complex64> {
    (1..=n_seq)
        .map(|n| {
            weights
                .iter()
                .map(|&(eps, w)| Complex64::from_polar(w, -(n as f64) * eps))
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{build_floquet, ModelParams};
    use crate::su2::{BasisTag, SpinBasis};
    use crate::CMat;

    fn basis_state(dim: usize, idx: usize) -> CVec {
        CVec::from_fn(dim, |i, _| if i == idx { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    #[test]
    fn identity_autocorrelation_is_one() {
        let u = UnitaryOperator::identity(BasisTag::Full { two_j: 4 });
        let phi0 = basis_state(5, 2);
        let seq = autocorrelation(&u, &phi0, 16, "|m=0⟩");
        for a in &seq.values {
            assert!((a - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
        assert!(seq.norm_drift < 1e-14);
    }

    #[test]
    fn eigenstate_autocorrelation_is_pure_phase() {
        // Diagonal operator: any basis state is an eigenstate.
        let eps = 0.77;
        let n = 4;
        let mut m = CMat::identity(n, n);
        m[(1, 1)] = Complex64::from_polar(1.0, -eps);
        let u = UnitaryOperator::new(BasisTag::Full { two_j: 3 }, m);
        let seq = autocorrelation(&u, &basis_state(n, 1), 32, "eig");
        for (k, a) in seq.values.iter().enumerate() {
            let want = Complex64::from_polar(1.0, -eps * (k as f64 + 1.0));
            assert!((a - want).norm() < 1e-13);
            assert!((a.norm() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn pure_tone_lands_in_single_bin() {
        let eps = TAU * 5.0 / 64.0;
        let values: Vec<Complex64> =
            (1..=64).map(|n| Complex64::from_polar(1.0, -eps * n as f64)).collect();
        let seq = AutocorrelationSequence { values, initial_state_tag: "tone".into(), norm_drift: 0.0 };
        let ps = fft_spectrum(&seq, FftOptions::default()).unwrap();
        let norm = ps.normalized();
        assert!((norm[5] - 1.0).abs() < 1e-12, "bin 5 power {}", norm[5]);
        for (k, p) in norm.iter().enumerate() {
            if k != 5 {
                assert!(*p < 1e-12, "leak at bin {k}: {p}");
            }
        }
    }

    #[test]
    fn non_power_of_two_rejected_or_padded() {
        let values = vec![Complex64::new(1.0, 0.0); 48];
        let seq = AutocorrelationSequence { values, initial_state_tag: "x".into(), norm_drift: 0.0 };
        assert!(matches!(
            fft_spectrum(&seq, FftOptions::default()),
            Err(DynamicsError::NonPowerOfTwo { len: 48 })
        ));
        let ps = fft_spectrum(&seq, FftOptions { pad: true, window: Window::None }).unwrap();
        assert_eq!(ps.power.len(), 64);
    }

    #[test]
    fn parseval_identity() {
        let p = ModelParams::new(20, 1.0, 1.0);
        let f = build_floquet(&p).unwrap();
        let phi0 = basis_state(21, 15);
        let seq = autocorrelation(&f, &phi0, 128, "|m=5⟩");
        let ps = fft_spectrum(&seq, FftOptions::default()).unwrap();
        let lhs: f64 = ps.power.iter().sum();
        let rhs: f64 = seq.values.iter().map(|a| a.norm_sqr()).sum::<f64>() / 128.0;
        assert!((lhs - rhs).abs() < 1e-10, "Parseval: {lhs} vs {rhs}");
    }

    #[test]
    fn overlap_weights_sum_to_one_and_pick_eigenstate() {
        let p = ModelParams::new(10, 1.0, 2.3);
        let f = build_floquet(&p).unwrap();
        // Random-ish normalized state.
        let dim = 11;
        let mut phi0 = CVec::from_fn(dim, |i, _| Complex64::new((i as f64 * 0.913).sin(), (i as f64 * 0.41).cos()));
        let norm = phi0.norm();
        phi0 /= Complex64::new(norm, 0.0);
        let weights = overlap_weights(&f, &phi0).unwrap();
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-10, "Σw = {total}");
        for w in weights.windows(2) {
            assert!(w[0].0 <= w[1].0, "weights sorted by phase");
        }

        // φ0 = eigenstate → weight 1 on that level.
        let set = eigenphases(&f, true).unwrap();
        let v = set.vectors.as_ref().unwrap();
        let ev = CVec::from_fn(dim, |i, _| v[(i, 3)]);
        let weights = overlap_weights(&f, &ev).unwrap();
        assert!((weights[3].1 - 1.0).abs() < 1e-10);
        let rest: f64 = weights.iter().enumerate().filter(|(j, _)| *j != 3).map(|(_, (_, w))| w).sum();
        assert!(rest < 1e-10);
    }

    #[test]
    fn resynthesis_matches_autocorrelation() {
        let p = ModelParams::new(20, 1.0, 1.7);
        let f = build_floquet(&p).unwrap();
        let phi0 = basis_state(21, 14);
        let seq = autocorrelation(&f, &phi0, 128, "|m=4⟩");
        let weights = overlap_weights(&f, &phi0).unwrap();
        let model = resynthesize(&weights, 128);
        let worst = seq
            .values
            .iter()
            .zip(&model)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "resynthesis deviation {worst}");
    }

    #[test]
    fn cauchy_schwarz_bound() {
        let p = ModelParams::new(40, 1.0, 1.0);
        let f = build_floquet(&p).unwrap();
        let seq = autocorrelation(&f, &basis_state(41, 30), 256, "|m=10⟩");
        assert!(seq.values.iter().all(|a| a.norm() <= 1.0 + 1e-12));
        assert!(seq.norm_drift <= 1e-10);
    }
}
