//! Detection: FID synthesis, Fourier spectra, line integrals and state
//! tomography.
//!
//! The detected signal for one spin is s(t) = Tr(rho(t) D) with
//! D = -i sigma_x - sigma_y = -2i |1><0| on the detected spin. With the
//! X readout pulse convention used here that gives s(0) = +1 for a spin in
//! |0> and -1 for |1>, and the J-coupled doublet splits by the partner
//! state: partner |0> contributes the line at -J/2 (the "low" line),
//! partner |1> the line at +J/2.

use crate::error::{Result, SpinSimError};
use crate::experiment::Verdict;
use crate::fit::least_squares;
use crate::linalg::CMatrix;
use crate::noise::{relax, RelaxationParams};
use crate::spin::{
    evolve, free_propagator, hamiltonian, pauli_operator, rf_rotation, Axis, DensityMatrix,
    OperatorMatrix, SpinSystem,
};
use crate::Real;
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::{FftNum, FftPlanner};

/// Acquisition parameters for FID synthesis.
#[derive(Debug, Clone)]
pub struct Acquisition<T> {
    pub n_samples: usize,
    pub dwell_s: T,
    /// Receiver signal-to-noise ratio; `None` means a noiseless receiver.
    pub snr: Option<T>,
}

impl<T: Real> Acquisition<T> {
    /// 4096 points at 0.5 ms dwell (2 kHz sweep width), noiseless.
    pub fn standard() -> Self {
        Self {
            n_samples: 4096,
            dwell_s: T::of(5e-4),
            snr: None,
        }
    }

    pub fn with_snr(mut self, snr: T) -> Self {
        self.snr = Some(snr);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples < 2 || self.dwell_s <= T::zero() {
            return Err(SpinSimError::InvalidConfig(
                "acquisition needs >= 2 samples and a positive dwell time".into(),
            ));
        }
        if let Some(snr) = self.snr {
            if snr <= T::zero() {
                return Err(SpinSimError::InvalidConfig(
                    "receiver SNR must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Readout pulse applied to the detected spin right before acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutPulse {
    None,
    /// pi/2 about x.
    X,
    /// pi/2 about y.
    Y,
}

impl ReadoutPulse {
    pub fn unitary<T: Real>(
        &self,
        system: &SpinSystem<T>,
        spin: &str,
    ) -> Result<Option<OperatorMatrix<T>>> {
        let fp2 = T::FRAC_PI_2();
        Ok(match self {
            ReadoutPulse::None => None,
            ReadoutPulse::X => Some(rf_rotation(system, spin, T::zero(), fp2)?),
            ReadoutPulse::Y => Some(rf_rotation(system, spin, fp2, fp2)?),
        })
    }
}

/// A sampled free-induction decay.
#[derive(Debug, Clone)]
pub struct Fid<T> {
    pub dwell_s: T,
    pub samples: Vec<Complex<T>>,
}

/// A frequency-domain spectrum, frequencies ascending in Hz.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    pub freq_hz: Vec<T>,
    pub values: Vec<Complex<T>>,
}

fn detection_operator<T: Real>(system: &SpinSystem<T>, spin: &str) -> Result<OperatorMatrix<T>> {
    let sx = pauli_operator(system, spin, Axis::X)?;
    let sy = pauli_operator(system, spin, Axis::Y)?;
    let mi = Complex::new(T::zero(), -T::one());
    let m1 = Complex::new(-T::one(), T::zero());
    Ok(OperatorMatrix::general(
        sx.mat().scale(mi).add(&sy.mat().scale(m1)),
    ))
}

/// Synthesize the FID of one spin: apply the readout pulse, then sample
/// Tr(rho(t) D) over the acquisition grid, evolving rho stepwise under the
/// free Hamiltonian (plus relaxation when `relax_params` is given). With
/// an SNR set, i.i.d. Gaussian receiver noise of sigma = 1/SNR is added to
/// both quadratures from the caller's RNG.
pub fn synth_fid<T: Real, R: Rng>(
    system: &SpinSystem<T>,
    rho: &DensityMatrix<T>,
    spin: &str,
    readout: ReadoutPulse,
    acq: &Acquisition<T>,
    relax_params: Option<&RelaxationParams<T>>,
    mut rng: Option<&mut R>,
) -> Result<Fid<T>> {
    acq.validate()?;
    if acq.snr.is_some() && rng.is_none() {
        return Err(SpinSimError::InvalidConfig(
            "receiver noise requires a seeded RNG".into(),
        ));
    }
    let d = detection_operator(system, spin)?;
    let mut state = match readout.unitary(system, spin)? {
        Some(u) => evolve(rho, &u)?,
        None => rho.clone(),
    };
    let h = hamiltonian(system);
    let step = free_propagator(&h, acq.dwell_s)?;
    let noise = match acq.snr {
        Some(snr) => Some(
            Normal::new(0.0, snr.recip().to_f64().unwrap())
                .map_err(|e| SpinSimError::InvalidConfig(format!("receiver noise: {e}")))?,
        ),
        None => None,
    };
    let mut samples = Vec::with_capacity(acq.n_samples);
    for i in 0..acq.n_samples {
        if i > 0 {
            state = evolve(&state, &step)?;
            if let Some(params) = relax_params {
                state = relax(&state, acq.dwell_s, params)?;
            }
        }
        let mut s = state.mat().mul(d.mat()).trace();
        if let (Some(dist), Some(r)) = (&noise, rng.as_deref_mut()) {
            s += Complex::new(T::of(dist.sample(r)), T::of(dist.sample(r)));
        }
        samples.push(s);
    }
    Ok(Fid {
        dwell_s: acq.dwell_s,
        samples,
    })
}

/// Convenience for noiseless synthesis without an RNG in scope.
pub fn synth_fid_noiseless<T: Real>(
    system: &SpinSystem<T>,
    rho: &DensityMatrix<T>,
    spin: &str,
    readout: ReadoutPulse,
    acq: &Acquisition<T>,
    relax_params: Option<&RelaxationParams<T>>,
) -> Result<Fid<T>> {
    if acq.snr.is_some() {
        return Err(SpinSimError::InvalidConfig(
            "acquisition with SNR needs synth_fid with an RNG".into(),
        ));
    }
    synth_fid::<T, rand::rngs::ThreadRng>(system, rho, spin, readout, acq, relax_params, None)
}

/// Discrete Fourier transform of an FID: optional exponential line
/// broadening, zero-fill to the next power of two, forward FFT, shifted so
/// frequencies run from -sweep/2 upward. Values are normalized by the
/// transform length, so the mean value theorem Sum(values) = fid[0] holds.
///
/// With the forward transform a coherence evolving as exp(-i 2 pi f0 t)
/// appears at -f0 on this axis.
pub fn spectrum<T: Real + FftNum>(fid: &Fid<T>, line_broadening_hz: T) -> Result<Spectrum<T>> {
    let n = fid.samples.len();
    if n < 2 || fid.dwell_s <= T::zero() {
        return Err(SpinSimError::InvalidConfig(
            "spectrum needs >= 2 samples and a positive dwell time".into(),
        ));
    }
    if line_broadening_hz < T::zero() {
        return Err(SpinSimError::InvalidConfig(
            "line broadening must be non-negative".into(),
        ));
    }
    let padded = n.next_power_of_two();
    let mut buf: Vec<Complex<T>> = Vec::with_capacity(padded);
    for (i, &s) in fid.samples.iter().enumerate() {
        let t = fid.dwell_s * T::of(i as f64);
        let apod = (-T::PI() * line_broadening_hz * t).exp();
        buf.push(s.scale(apod));
    }
    buf.resize(padded, Complex::new(T::zero(), T::zero()));
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let norm = T::of(padded as f64).recip();
    let df = (T::of(padded as f64) * fid.dwell_s).recip();
    let half = padded / 2;
    let mut freq_hz = Vec::with_capacity(padded);
    let mut values = Vec::with_capacity(padded);
    for i in 0..padded {
        freq_hz.push(T::of(i as f64 - half as f64) * df);
        values.push(buf[(i + half) % padded].scale(norm));
    }
    Ok(Spectrum { freq_hz, values })
}

/// Default number of bins summed on each side of a line center.
pub const LINE_HALF_WINDOW: usize = 5;

/// Integrate the doublet lines at -J/2 ("low") and +J/2 ("high"):
/// complex sums over +-half_window bins around the nearest bin to each
/// center. Errors if the two windows would overlap.
pub fn line_integrals<T: Real>(
    spec: &Spectrum<T>,
    j_hz: T,
    half_window: usize,
) -> Result<(Complex<T>, Complex<T>)> {
    let n = spec.freq_hz.len();
    if n < 2 {
        return Err(SpinSimError::InvalidConfig("empty spectrum".into()));
    }
    let df = spec.freq_hz[1] - spec.freq_hz[0];
    let j = j_hz.abs();
    if j <= T::zero() {
        return Err(SpinSimError::InvalidConfig(
            "line integrals need a nonzero coupling".into(),
        ));
    }
    let window = T::of((2 * half_window) as f64 + 1.0) * df;
    if j <= window {
        return Err(SpinSimError::WindowOverlap {
            separation_hz: j.to_f64().unwrap_or(f64::NAN),
            window_bins: 2 * half_window + 1,
            bin_hz: df.to_f64().unwrap_or(f64::NAN),
        });
    }
    let center_bin = |f: T| -> Result<usize> {
        let idx = ((f - spec.freq_hz[0]) / df).round().to_f64().unwrap() as isize;
        if idx < half_window as isize || idx as usize + half_window >= n {
            return Err(SpinSimError::InvalidConfig(format!(
                "line at {} Hz falls outside the spectrum",
                f
            )));
        }
        Ok(idx as usize)
    };
    let half_j = j * T::of(0.5);
    let sum_window = |c: usize| -> Complex<T> {
        spec.values[c - half_window..=c + half_window]
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |a, &v| a + v)
    };
    let low = sum_window(center_bin(-half_j)?);
    let high = sum_window(center_bin(half_j)?);
    Ok((low, high))
}

/// Constant/balanced decision from the two line integrals of the input
/// spin's doublet. The low line is the work-qubit-|0> subensemble: its
/// real part is positive when the input qubit ends in |0> (constant) and
/// negative when it ends in |1> (balanced). Magnitudes at or below the
/// noise floor are inconclusive.
pub fn classify_spectrum<T: Real>(low: Complex<T>, _high: Complex<T>, noise_floor: T) -> Result<Verdict> {
    if noise_floor < T::zero() {
        return Err(SpinSimError::InvalidConfig(
            "noise floor must be non-negative".into(),
        ));
    }
    if low.re.abs() <= noise_floor {
        return Err(SpinSimError::Inconclusive {
            polarization: low.re.to_f64().unwrap_or(f64::NAN),
            threshold: noise_floor.to_f64().unwrap_or(f64::NAN),
        });
    }
    if low.re > T::zero() {
        Ok(Verdict::Constant)
    } else {
        Ok(Verdict::Balanced)
    }
}

/// The nine readout-pulse pairs used for tomography, in a fixed order.
pub const TOMOGRAPHY_PULSES: [(ReadoutPulse, ReadoutPulse); 9] = [
    (ReadoutPulse::None, ReadoutPulse::None),
    (ReadoutPulse::None, ReadoutPulse::X),
    (ReadoutPulse::None, ReadoutPulse::Y),
    (ReadoutPulse::X, ReadoutPulse::None),
    (ReadoutPulse::X, ReadoutPulse::X),
    (ReadoutPulse::X, ReadoutPulse::Y),
    (ReadoutPulse::Y, ReadoutPulse::None),
    (ReadoutPulse::Y, ReadoutPulse::X),
    (ReadoutPulse::Y, ReadoutPulse::Y),
];

/// The complex doublet amplitudes a detected spin contributes at t = 0:
/// -2i times the two partner-state-resolved |0><1| coherences. Entry 0 is
/// the low (-J/2) line, entry 1 the high line.
fn doublet_amplitudes<T: Real>(rho: &CMatrix<T>, detect: usize) -> [Complex<T>; 2] {
    let m2i = Complex::new(T::zero(), -(T::one() + T::one()));
    match detect {
        // spin A: coherences (00,10) and (01,11)
        0 => [rho.get(0, 2) * m2i, rho.get(1, 3) * m2i],
        // spin B: coherences (00,01) and (10,11)
        _ => [rho.get(0, 1) * m2i, rho.get(2, 3) * m2i],
    }
}

/// One tomography measurement sweep: for each of the nine pulse pairs,
/// rotate the state, then record both doublet amplitudes of both spins.
/// 9 pairs x 2 spins x 2 lines x (re, im) = 72 real numbers.
pub fn tomography_measurements<T: Real>(
    system: &SpinSystem<T>,
    rho: &CMatrix<T>,
) -> Result<Vec<T>> {
    if rho.dim() != 4 || system.n_spins() != 2 {
        return Err(SpinSimError::DimensionMismatch(rho.dim(), 4));
    }
    let label_a = system.spin(0).label.clone();
    let label_b = system.spin(1).label.clone();
    let mut out = Vec::with_capacity(72);
    for (pa, pb) in TOMOGRAPHY_PULSES {
        let mut m = rho.clone();
        if let Some(u) = pa.unitary(system, &label_a)? {
            m = u.mat().mul(&m).mul(&u.mat().adjoint());
        }
        if let Some(u) = pb.unitary(system, &label_b)? {
            m = u.mat().mul(&m).mul(&u.mat().adjoint());
        }
        for detect in 0..2 {
            for amp in doublet_amplitudes(&m, detect) {
                out.push(amp.re);
                out.push(amp.im);
            }
        }
    }
    Ok(out)
}

/// [`tomography_measurements`] with seeded Gaussian receiver noise. The
/// SNR for each spin is interpreted the way spectrometers quote it — that
/// spin's largest peak over the whole sweep against the rms noise of a
/// single spectral bin — so a line *integral* over the standard
/// 2 * LINE_HALF_WINDOW + 1 bin window accumulates sqrt(window) of that
/// bin noise. `None` leaves a spin noiseless.
pub fn tomography_measurements_noisy<T: Real, R: Rng>(
    system: &SpinSystem<T>,
    rho: &CMatrix<T>,
    snr: [Option<T>; 2],
    rng: &mut R,
) -> Result<Vec<T>> {
    let clean = tomography_measurements(system, rho)?;
    // layout: 9 sweeps x [spin0 low re, im, high re, im, spin1 ...]
    let mut sigma = [T::zero(); 2];
    for (detect, s) in sigma.iter_mut().enumerate() {
        let largest = clean
            .chunks(8)
            .flat_map(|sweep| sweep[4 * detect..4 * detect + 4].iter())
            .fold(T::zero(), |a, &v| a.max(v.abs()));
        if let Some(snr) = snr[detect] {
            if snr <= T::zero() {
                return Err(SpinSimError::InvalidConfig(
                    "receiver SNR must be positive".into(),
                ));
            }
            let window = T::of((2 * LINE_HALF_WINDOW + 1) as f64);
            *s = largest / snr * window.sqrt();
        }
    }
    let dist = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(clean
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let detect = (i % 8) / 4;
            v + sigma[detect] * T::of(dist.sample(rng))
        })
        .collect())
}

/// Result of a tomographic reconstruction.
#[derive(Debug, Clone)]
pub struct TomographyResult<T> {
    /// Reconstructed traceless deviation matrix.
    pub deviation: CMatrix<T>,
    /// Coefficients over the 15 non-identity two-spin Pauli products, in
    /// (a, b) lexicographic order with a, b in {I, X, Y, Z} skipping II.
    pub coefficients: Vec<T>,
}

fn pauli_basis<T: Real>() -> Vec<CMatrix<T>> {
    let z = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let singles = [
        CMatrix::identity(2),
        CMatrix::from_rows(&[vec![z, one], vec![one, z]]),
        CMatrix::from_rows(&[vec![z, -i], vec![i, z]]),
        CMatrix::from_rows(&[vec![one, z], vec![z, -one]]),
    ];
    let mut basis = Vec::with_capacity(15);
    for (ai, a) in singles.iter().enumerate() {
        for (bi, b) in singles.iter().enumerate() {
            if ai == 0 && bi == 0 {
                continue;
            }
            basis.push(a.kron(b));
        }
    }
    basis
}

/// Reconstruct the traceless deviation part of a two-spin state from a
/// 72-entry measurement vector by linear least squares over the 15
/// non-identity Pauli products. The design matrix is generated by pushing
/// each basis matrix through [`tomography_measurements`], so reconstruction
/// inverts exactly the map the measurements implement.
pub fn tomography_reconstruct<T: Real>(
    system: &SpinSystem<T>,
    measurements: &[T],
) -> Result<TomographyResult<T>> {
    let basis = pauli_basis::<T>();
    let mut design = vec![vec![T::zero(); basis.len()]; 72];
    for (k, b) in basis.iter().enumerate() {
        let col = tomography_measurements(system, b)?;
        for (row, &v) in design.iter_mut().zip(&col) {
            row[k] = v;
        }
    }
    if measurements.len() != design.len() {
        return Err(SpinSimError::DimensionMismatch(measurements.len(), design.len()));
    }
    let coefficients = least_squares(&design, measurements)?;
    let mut deviation = CMatrix::zeros(4);
    for (b, &c) in basis.iter().zip(&coefficients) {
        deviation = deviation.add(&b.scale(Complex::new(c, T::zero())));
    }
    Ok(TomographyResult {
        deviation: deviation.symmetrize(),
        coefficients,
    })
}

/// Measure and reconstruct in one step.
pub fn tomography<T: Real>(
    system: &SpinSystem<T>,
    rho: &DensityMatrix<T>,
) -> Result<TomographyResult<T>> {
    let dev = rho.deviation_part();
    let m = tomography_measurements(system, &dev)?;
    tomography_reconstruct(system, &m)
}

/// Compare a reconstructed deviation against a reference pattern: the
/// overall amplitude is estimated by Frobenius projection onto the
/// reference, and the error is the relative residual after that
/// normalization. Returns (amplitude, epsilon).
pub fn tomography_error<T: Real>(raw: &CMatrix<T>, reference: &CMatrix<T>) -> Result<(T, T)> {
    raw.check_dims(reference)?;
    let denom = reference.inner(reference);
    if denom <= T::zero() {
        return Err(SpinSimError::InvalidMatrix(
            "tomography reference must be nonzero".into(),
        ));
    }
    let amplitude = reference.inner(raw) / denom;
    if amplitude == T::zero() {
        return Err(SpinSimError::InvalidMatrix(
            "reconstruction is orthogonal to the reference".into(),
        ));
    }
    let scaled = raw.scale(Complex::new(amplitude.recip(), T::zero()));
    let eps = scaled.sub(reference).frobenius_norm() / reference.frobenius_norm();
    Ok((amplitude, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{classify, run_experiment, ExperimentConfig, InputMode};
    use crate::pulse::Oracle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sys() -> SpinSystem<f64> {
        SpinSystem::chloroform()
    }

    #[test]
    fn fid_first_point_is_plus_one_for_ground_state() {
        let s = sys();
        let rho = DensityMatrix::pure(4, 0);
        let acq = Acquisition::standard();
        let fid = synth_fid_noiseless(&s, &rho, "A", ReadoutPulse::X, &acq, None).unwrap();
        assert!((fid.samples[0].re - 1.0).abs() < 1e-12);
        assert!(fid.samples[0].im.abs() < 1e-12);
    }

    #[test]
    fn fid_first_point_is_minus_one_for_flipped_spin() {
        let s = sys();
        let rho = DensityMatrix::pure(4, 2); // |10>, spin A in |1>
        let acq = Acquisition::standard();
        let fid = synth_fid_noiseless(&s, &rho, "A", ReadoutPulse::X, &acq, None).unwrap();
        assert!((fid.samples[0].re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_mean_equals_first_sample() {
        let s = sys();
        let rho = DensityMatrix::pure(4, 0);
        let mut acq = Acquisition::standard();
        acq.n_samples = 1000; // exercises zero-filling
        let fid = synth_fid_noiseless(&s, &rho, "A", ReadoutPulse::X, &acq, None).unwrap();
        let spec = spectrum(&fid, 0.0).unwrap();
        let total = spec
            .values
            .iter()
            .fold(Complex::new(0.0, 0.0), |a, &v| a + v);
        assert!((total - fid.samples[0]).norm() < 1e-9);
    }

    #[test]
    fn ground_state_signal_sits_on_low_line() {
        let s = sys();
        let rho = DensityMatrix::pure(4, 0);
        let acq = Acquisition::standard();
        let fid = synth_fid_noiseless(&s, &rho, "A", ReadoutPulse::X, &acq, None).unwrap();
        let spec = spectrum(&fid, 2.0).unwrap();
        // a one-sided FID integrates to half the t=0 amplitude; the
        // +-5-bin window catches most of that half
        let (low, high) = line_integrals(&spec, 215.0, LINE_HALF_WINDOW).unwrap();
        assert!(low.re > 0.35, "low {low}");
        assert!(high.norm() < 0.1 * low.re, "high {high}");
        // and the peak bin really is near -J/2
        let peak = spec
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap()
            .0;
        assert!((spec.freq_hz[peak] + 107.5).abs() < 1.0);
    }

    #[test]
    fn partner_state_selects_the_high_line() {
        let s = sys();
        let rho = DensityMatrix::pure(4, 1); // |01>, B in |1>
        let acq = Acquisition::standard();
        let fid = synth_fid_noiseless(&s, &rho, "A", ReadoutPulse::X, &acq, None).unwrap();
        let spec = spectrum(&fid, 2.0).unwrap();
        let (low, high) = line_integrals(&spec, 215.0, LINE_HALF_WINDOW).unwrap();
        assert!(high.re > 0.35, "high {high}");
        assert!(low.norm() < 0.1 * high.re);
    }

    #[test]
    fn flipped_spin_inverts_the_line() {
        let s = sys();
        let rho = DensityMatrix::pure(4, 2); // |10>
        let acq = Acquisition::standard();
        let fid = synth_fid_noiseless(&s, &rho, "A", ReadoutPulse::X, &acq, None).unwrap();
        let spec = spectrum(&fid, 2.0).unwrap();
        let (low, _) = line_integrals(&spec, 215.0, LINE_HALF_WINDOW).unwrap();
        assert!(low.re < -0.35, "low {low}");
    }

    #[test]
    fn window_overlap_detected() {
        let s = sys();
        let rho = DensityMatrix::pure(4, 0);
        let mut acq = Acquisition::standard();
        acq.n_samples = 64; // 31 Hz bins; windows around +-107.5 Hz collide
        let fid = synth_fid_noiseless(&s, &rho, "A", ReadoutPulse::X, &acq, None).unwrap();
        let spec = spectrum(&fid, 0.0).unwrap();
        assert!(matches!(
            line_integrals(&spec, 215.0, LINE_HALF_WINDOW),
            Err(SpinSimError::WindowOverlap { .. })
        ));
    }

    #[test]
    fn receiver_noise_is_seeded_and_reproducible() {
        let s = sys();
        let rho = DensityMatrix::pure(4, 0);
        let acq = Acquisition::standard().with_snr(35.0);
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let f1 = synth_fid(&s, &rho, "A", ReadoutPulse::X, &acq, None, Some(&mut r1)).unwrap();
        let f2 = synth_fid(&s, &rho, "A", ReadoutPulse::X, &acq, None, Some(&mut r2)).unwrap();
        assert_eq!(f1.samples, f2.samples);
        let clean = synth_fid_noiseless(&s, &rho, "A", ReadoutPulse::X, &Acquisition::standard(), None)
            .unwrap();
        assert_ne!(f1.samples, clean.samples);
        // noise without an RNG is a configuration error
        assert!(synth_fid::<f64, ChaCha8Rng>(&s, &rho, "A", ReadoutPulse::X, &acq, None, None)
            .is_err());
    }

    #[test]
    fn classify_spectrum_reference_cases() {
        let c = |re| Complex::new(re, 0.0);
        assert_eq!(
            classify_spectrum(c(1.0), c(0.0), 0.1).unwrap(),
            Verdict::Constant
        );
        assert_eq!(
            classify_spectrum(c(-0.9), c(-0.1), 0.1).unwrap(),
            Verdict::Balanced
        );
        assert!(matches!(
            classify_spectrum(c(0.001), c(0.0), 0.1),
            Err(SpinSimError::Inconclusive { .. })
        ));
    }

    #[test]
    fn spectral_and_state_classification_agree() {
        let s = sys();
        for oracle in Oracle::ALL {
            let cfg = ExperimentConfig::<f64>::chloroform_defaults(oracle, InputMode::Thermal);
            let out = run_experiment(&cfg).unwrap();
            let state_verdict = classify(&out).unwrap();
            let fid =
                synth_fid_noiseless(&s, &out, "A", ReadoutPulse::X, &Acquisition::standard(), None)
                    .unwrap();
            let spec = spectrum(&fid, 2.0).unwrap();
            let (low, high) = line_integrals(&spec, 215.0, LINE_HALF_WINDOW).unwrap();
            let spec_verdict = classify_spectrum(low, high, 1e-7).unwrap();
            assert_eq!(state_verdict, spec_verdict, "{oracle:?}");
        }
    }

    #[test]
    fn tomography_round_trips_random_deviations() {
        let s = sys();
        let mut state = 0xfeed5u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) - 0.5
        };
        for _ in 0..100 {
            let g = CMatrix::from_fn(4, |_, _| Complex::new(next(), next()));
            let mut dev = g.symmetrize();
            // remove the trace: tomography only sees the traceless part
            let tr = dev.trace().scale(0.25);
            dev = dev.sub(&CMatrix::identity(4).scale(tr));
            let m = tomography_measurements(&s, &dev).unwrap();
            let rec = tomography_reconstruct(&s, &m).unwrap();
            let err = rec.deviation.sub(&dev).frobenius_norm();
            assert!(err < 1e-8, "residual {err:.3e}");
            let (amp, eps) = tomography_error(&rec.deviation, &dev).unwrap();
            assert!((amp - 1.0).abs() < 1e-8);
            assert!(eps < 1e-6, "eps {eps:.3e}");
        }
    }

    #[test]
    fn tomography_of_pure_dj_output() {
        let s = sys();
        let cfg = ExperimentConfig::<f64>::chloroform_defaults(Oracle::F3, InputMode::Pure00);
        let out = run_experiment(&cfg).unwrap();
        let rec = tomography(&s, &out).unwrap();
        let want = out.deviation_part();
        assert!(rec.deviation.sub(&want).frobenius_norm() < 1e-8);
    }

    #[test]
    fn noisy_tomography_epsilon_scales_with_snr() {
        let s = sys();
        let cfg =
            ExperimentConfig::<f64>::chloroform_defaults(Oracle::F3, InputMode::TemporalAverage);
        let out = run_experiment(&cfg).unwrap();
        let dev = out.deviation_part();
        let mut eps_by_snr = Vec::new();
        for snr in [3500.0, 35.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let m =
                tomography_measurements_noisy(&s, &dev, [Some(4300.0), Some(snr)], &mut rng)
                    .unwrap();
            let rec = tomography_reconstruct(&s, &m).unwrap();
            let (_, eps) = tomography_error(&rec.deviation, &dev).unwrap();
            eps_by_snr.push(eps);
        }
        assert!(eps_by_snr[0] < eps_by_snr[1]);
        assert!(eps_by_snr[1] > 0.02 && eps_by_snr[1] < 0.3, "{eps_by_snr:?}");
    }

    #[test]
    fn tomography_error_normalizes_amplitude() {
        let cfg = ExperimentConfig::<f64>::chloroform_defaults(Oracle::F1, InputMode::Thermal);
        let out = run_experiment(&cfg).unwrap();
        let dev = out.deviation_part();
        let scaled = dev.scale(Complex::new(3.7e-4, 0.0));
        let (amp, eps) = tomography_error(&scaled, &dev).unwrap();
        assert!((amp - 3.7e-4).abs() < 1e-12);
        assert!(eps < 1e-12);
    }
}
