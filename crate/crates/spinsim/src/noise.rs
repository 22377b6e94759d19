//! Phenomenological error channels and the calibration sequences that
//! measure them back from simulated data.
//!
//! Spin errors modeled here: T1/T2 relaxation as per-spin CPTP Kraus maps,
//! and RF-field inhomogeneity as a discrete ensemble of pulse-amplitude
//! scale factors. Receiver noise lives in the readout module.

use crate::error::{Result, SpinSimError};
use crate::experiment::{
    dj_program, prepare_inputs, run_pipeline, temporal_average, ExperimentConfig, InputMode,
};
use crate::fit::{fit_exp_decay, fit_inversion_recovery};
use crate::linalg::CMatrix;
use crate::spin::{
    angular_momentum, embed_single, evolve, free_propagator, hamiltonian, rf_rotation, Axis,
    DensityMatrix, Form, SpinSystem,
};
use crate::Real;
use num_complex::Complex;

/// Per-spin relaxation channel parameters.
#[derive(Debug, Clone)]
pub struct SpinRelax<T> {
    pub t1_s: T,
    pub t2_s: T,
    /// Equilibrium <sigma_z>; the thermal state has eq_z = eps/2, a fully
    /// |0>-polarized equilibrium (used by the calibration sequences) has 1.
    pub eq_z: T,
}

#[derive(Debug, Clone)]
pub struct RelaxationParams<T> {
    pub spins: Vec<SpinRelax<T>>,
}

impl<T: Real> RelaxationParams<T> {
    pub fn new(spins: Vec<SpinRelax<T>>) -> Result<Self> {
        for s in &spins {
            if s.t1_s <= T::zero() || s.t2_s <= T::zero() {
                return Err(SpinSimError::InvalidConfig(
                    "relaxation time constants must be positive".into(),
                ));
            }
            if s.t2_s > T::of(2.0) * s.t1_s {
                return Err(SpinSimError::InvalidConfig(
                    "T2 must not exceed 2*T1".into(),
                ));
            }
        }
        Ok(Self { spins })
    }

    /// T1/T2 from the system, equilibrium at the thermal polarization.
    pub fn thermal(system: &SpinSystem<T>, polarizations: &[T]) -> Result<Self> {
        if polarizations.len() != system.n_spins() {
            return Err(SpinSimError::InvalidConfig(
                "one polarization per spin required".into(),
            ));
        }
        Self::new(
            system
                .spins()
                .iter()
                .zip(polarizations)
                .map(|(s, &eps)| SpinRelax {
                    t1_s: s.t1_s,
                    t2_s: s.t2_s,
                    eq_z: eps * T::of(0.5),
                })
                .collect(),
        )
    }

    /// T1/T2 from the system with a fully polarized |0> equilibrium,
    /// which gives the calibration sequences unit-scale signals.
    pub fn unit_equilibrium(system: &SpinSystem<T>) -> Self {
        Self::new(
            system
                .spins()
                .iter()
                .map(|s| SpinRelax {
                    t1_s: s.t1_s,
                    t2_s: s.t2_s,
                    eq_z: T::one(),
                })
                .collect(),
        )
        .expect("system invariants already hold")
    }

    /// The stationary state of [`relax`]: the product of per-spin
    /// equilibria diag((1+eq_z)/2, (1-eq_z)/2).
    pub fn equilibrium_state(&self) -> DensityMatrix<T> {
        let half = T::of(0.5);
        let mut mat = CMatrix::identity(1);
        for s in &self.spins {
            let p0 = (T::one() + s.eq_z) * half;
            let local = CMatrix::diagonal(&[
                Complex::new(p0, T::zero()),
                Complex::new(T::one() - p0, T::zero()),
            ]);
            mat = mat.kron(&local);
        }
        DensityMatrix::from_parts_unchecked(mat, Form::Full)
    }
}

fn kraus_for_spin<T: Real>(relax: &SpinRelax<T>, duration: T) -> Vec<CMatrix<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let gamma = T::one() - (-duration / relax.t1_s).exp();
    let p0 = (T::one() + relax.eq_z) * T::of(0.5);
    let (sp, sq) = (p0.sqrt(), (T::one() - p0).sqrt());
    let (sg, skeep) = (gamma.sqrt(), (T::one() - gamma).sqrt());
    // generalized amplitude damping toward diag(p0, 1-p0)
    let mut ops = vec![
        CMatrix::from_rows(&[
            vec![Complex::new(sp, T::zero()), zero],
            vec![zero, Complex::new(sp * skeep, T::zero())],
        ]),
        CMatrix::from_rows(&[
            vec![zero, Complex::new(sp * sg, T::zero())],
            vec![zero, zero],
        ]),
        CMatrix::from_rows(&[
            vec![Complex::new(sq * skeep, T::zero()), zero],
            vec![zero, Complex::new(sq, T::zero())],
        ]),
        CMatrix::from_rows(&[
            vec![zero, zero],
            vec![Complex::new(sq * sg, T::zero()), zero],
        ]),
    ];
    // extra pure dephasing so total coherence decay is exp(-t/T2)
    let rate = relax.t2_s.recip() - (T::of(2.0) * relax.t1_s).recip();
    let m = (-duration * rate).exp();
    let q = (T::one() - m) * T::of(0.5);
    let (s_keep, s_flip) = ((T::one() - q).sqrt(), q.sqrt());
    ops.push(CMatrix::diagonal(&[
        Complex::new(s_keep, T::zero()),
        Complex::new(s_keep, T::zero()),
    ]));
    ops.push(CMatrix::diagonal(&[
        Complex::new(s_flip, T::zero()),
        Complex::new(-s_flip, T::zero()),
    ]));
    let _ = one;
    ops
}

/// Apply T1/T2 relaxation for `duration` seconds as a completely positive
/// trace-preserving map: per spin, generalized amplitude damping toward
/// the equilibrium plus pure dephasing so single-spin coherences decay as
/// exp(-t/T2).
pub fn relax<T: Real>(
    rho: &DensityMatrix<T>,
    duration: T,
    params: &RelaxationParams<T>,
) -> Result<DensityMatrix<T>> {
    if duration < T::zero() {
        return Err(SpinSimError::NegativeDuration(
            duration.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let n = params.spins.len();
    if rho.dim() != 1 << n {
        return Err(SpinSimError::DimensionMismatch(rho.dim(), 1 << n));
    }
    if duration == T::zero() {
        return Ok(rho.clone());
    }
    let mut mat = rho.mat().clone();
    for (k, spin) in params.spins.iter().enumerate() {
        let local = kraus_for_spin(spin, duration);
        // the GAD set and the dephasing set are separate channels
        let mut damped = CMatrix::zeros(mat.dim());
        for op in &local[..4] {
            let full = embed_single(n, k, op);
            damped = damped.add(&full.mul(&mat).mul(&full.adjoint()));
        }
        let mut dephased = CMatrix::zeros(mat.dim());
        for op in &local[4..] {
            let full = embed_single(n, k, op);
            dephased = dephased.add(&full.mul(&damped).mul(&full.adjoint()));
        }
        mat = dephased;
    }
    Ok(DensityMatrix::from_parts_unchecked(
        mat.symmetrize(),
        rho.form(),
    ))
}

/// Discrete ensemble of RF amplitude scale factors modeling field
/// inhomogeneity across the sample volume.
#[derive(Debug, Clone)]
pub struct RfInhomogeneityModel<T> {
    /// (scale_factor, weight) pairs sorted by ascending scale factor,
    /// weights normalized to 1.
    points: Vec<(T, T)>,
    pub envelope_time_constant_s: T,
}

impl<T: Real> RfInhomogeneityModel<T> {
    pub fn new(mut points: Vec<(T, T)>, envelope_time_constant_s: T) -> Result<Self> {
        if points.is_empty() {
            return Err(SpinSimError::InvalidConfig(
                "RF distribution must not be empty".into(),
            ));
        }
        if points.iter().any(|&(s, w)| s <= T::zero() || w < T::zero()) {
            return Err(SpinSimError::InvalidConfig(
                "RF scale factors must be positive and weights non-negative".into(),
            ));
        }
        let total: T = points.iter().map(|&(_, w)| w).sum();
        if total <= T::zero() {
            return Err(SpinSimError::InvalidConfig(
                "RF weights must not all vanish".into(),
            ));
        }
        for p in &mut points {
            p.1 = p.1 / total;
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(Self {
            points,
            envelope_time_constant_s,
        })
    }

    /// Ideal single-member distribution (no inhomogeneity).
    pub fn ideal() -> Self {
        Self {
            points: vec![(T::one(), T::one())],
            envelope_time_constant_s: T::infinity(),
        }
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    /// Build a truncated Lorentzian distribution of scale factors centered
    /// on 1 with half-width-at-half-maximum `hwhm`, over +-4 hwhm.
    pub fn lorentzian(n_points: usize, hwhm: T) -> Result<Self> {
        if n_points < 2 || hwhm <= T::zero() {
            return Err(SpinSimError::InvalidConfig(
                "Lorentzian model needs >= 2 points and positive width".into(),
            ));
        }
        let span = T::of(4.0) * hwhm;
        let step = (span + span) / T::of((n_points - 1) as f64);
        let points: Vec<(T, T)> = (0..n_points)
            .map(|i| {
                let x = -span + step * T::of(i as f64);
                let w = (T::one() + (x / hwhm) * (x / hwhm)).recip();
                (T::one() + x, w)
            })
            .collect();
        Self::new(points, T::infinity())
    }
}

/// Simulated nutation experiment: ensemble-averaged transverse signal
/// amplitude sampled at the envelope maxima (pulse widths where the
/// nominal flip angle is pi/2 + k pi). Returns (pulse_width, |amplitude|)
/// pairs.
pub fn nutation_envelope<T: Real>(
    model: &RfInhomogeneityModel<T>,
    pulse_power: T,
    n_maxima: usize,
) -> Vec<(T, T)> {
    (0..n_maxima)
        .map(|k| {
            let theta = T::FRAC_PI_2() + T::PI() * T::of(k as f64);
            let width = theta / pulse_power;
            let signal: T = model
                .points
                .iter()
                .map(|&(s, w)| w * (theta * s).sin())
                .sum();
            (width, signal.abs())
        })
        .collect()
}

/// Fit the exponential time constant of the nutation envelope.
pub fn fit_envelope_time_constant<T: Real>(
    model: &RfInhomogeneityModel<T>,
    pulse_power: T,
    n_maxima: usize,
) -> Result<T> {
    let env = nutation_envelope(model, pulse_power, n_maxima);
    let t: Vec<T> = env.iter().map(|&(w, _)| w).collect();
    let a: Vec<T> = env.iter().map(|&(_, v)| v).collect();
    if a.iter().any(|&v| v <= T::of(1e-12)) {
        return Err(SpinSimError::FitFailure(
            "nutation envelope collapsed to zero".into(),
        ));
    }
    let (_, tau) = fit_exp_decay(&t, &a).map_err(|e| {
        SpinSimError::FitFailure(format!("nutation envelope has no exponential decay: {e}"))
    })?;
    Ok(tau)
}

/// Build an RF-inhomogeneity distribution whose simulated nutation
/// envelope decays with the target time constant (within 10%). The shape
/// is an `n_points`-member Lorentzian over scale factors; only the fitted
/// envelope constant is constrained.
pub fn calibrate_inhomogeneity<T: Real>(
    target_time_constant: T,
    pulse_power: T,
    n_points: usize,
) -> Result<RfInhomogeneityModel<T>> {
    if target_time_constant <= T::zero() || pulse_power <= T::zero() {
        return Err(SpinSimError::InvalidConfig(
            "target time constant and pulse power must be positive".into(),
        ));
    }
    // Lorentzian weights give an exponential envelope with
    // T_env = 1/(pulse_power * hwhm); iterate to absorb truncation and
    // discretization bias.
    // fit over roughly two envelope time constants
    let n_maxima = ((T::of(2.0) * target_time_constant * pulse_power / T::PI())
        .to_f64()
        .unwrap()
        .ceil() as usize)
        .max(4);
    let mut hwhm = (pulse_power * target_time_constant).recip();
    let mut model = RfInhomogeneityModel::lorentzian(n_points, hwhm)?;
    for _ in 0..25 {
        let fitted = fit_envelope_time_constant(&model, pulse_power, n_maxima)?;
        if ((fitted - target_time_constant) / target_time_constant).abs() < T::of(0.02) {
            model.envelope_time_constant_s = fitted;
            return Ok(model);
        }
        hwhm = hwhm * fitted / target_time_constant;
        model = RfInhomogeneityModel::lorentzian(n_points, hwhm)?;
    }
    let fitted = fit_envelope_time_constant(&model, pulse_power, n_maxima)?;
    if ((fitted - target_time_constant) / target_time_constant).abs() < T::of(0.1) {
        model.envelope_time_constant_s = fitted;
        Ok(model)
    } else {
        Err(SpinSimError::FitFailure(format!(
            "calibration did not converge: fitted {fitted} vs target {target_time_constant}"
        )))
    }
}

/// Complete noise configuration for an ensemble run.
#[derive(Debug, Clone)]
pub struct NoiseSettings<T> {
    pub rf: RfInhomogeneityModel<T>,
    pub relax: RelaxationParams<T>,
    /// Finite width attributed to each nominally instantaneous pulse.
    pub pulse_width_s: T,
}

impl<T: Real> NoiseSettings<T> {
    /// Chloroform-scale defaults: 200 us nutation envelope calibrated for the
    /// configured pulse width, relaxation toward the thermal equilibrium.
    pub fn chloroform_defaults(config: &ExperimentConfig<T>) -> Result<Self> {
        let pulse_width = T::of(12.5e-6);
        let pulse_power = T::FRAC_PI_2() / pulse_width;
        Ok(Self {
            rf: calibrate_inhomogeneity(T::of(200e-6), pulse_power, 21)?,
            relax: RelaxationParams::thermal(&config.system, &config.polarizations)?,
            pulse_width_s: pulse_width,
        })
    }
}

/// Run the full experiment once per RF scale factor (every flip angle
/// multiplied by the factor, relaxation applied across each delay and each
/// finite-width pulse) and return the weight-averaged final state.
/// Members are evaluated in ascending scale-factor order so the
/// combination is bit-reproducible.
pub fn ensemble_run<T: Real>(
    config: &ExperimentConfig<T>,
    settings: &NoiseSettings<T>,
) -> Result<DensityMatrix<T>> {
    let program = dj_program::<T>(config.oracle);
    let inputs = prepare_inputs(config)?;
    let dim = config.system.dim();
    let mut member_outputs: Vec<Vec<DensityMatrix<T>>> = vec![Vec::new(); inputs.len()];
    for &(scale, weight) in settings.rf.points() {
        for (slot, rho0) in inputs.iter().enumerate() {
            let out = run_pipeline(
                &config.system,
                &program,
                rho0,
                scale,
                Some((&settings.relax, settings.pulse_width_s)),
            )?;
            let scaled = out.mat().scale(Complex::new(weight, T::zero()));
            member_outputs[slot].push(DensityMatrix::from_parts_unchecked(scaled, Form::Full));
        }
    }
    let averaged: Vec<DensityMatrix<T>> = member_outputs
        .into_iter()
        .map(|outs| {
            let mat = outs
                .iter()
                .fold(CMatrix::zeros(dim), |acc, r| acc.add(r.mat()));
            DensityMatrix::from_parts_unchecked(mat, Form::Full)
        })
        .collect();
    if config.input_mode == InputMode::TemporalAverage {
        let arr: [DensityMatrix<T>; 3] = [
            averaged[0].clone(),
            averaged[1].clone(),
            averaged[2].clone(),
        ];
        let (_, _, effective) = temporal_average(&arr)?;
        Ok(effective)
    } else {
        Ok(averaged.into_iter().next().unwrap())
    }
}

/// Simulated inversion-recovery T1 measurement: pi pulse, variable delay
/// under relaxation, <I_z> readout, least-squares fit of
/// M(t) = M_eq (1 - 2 exp(-t/T1)).
pub fn inversion_recovery<T: Real>(
    system: &SpinSystem<T>,
    spin: &str,
    delays: &[T],
) -> Result<T> {
    if delays.len() < 4 {
        return Err(SpinSimError::FitFailure(
            "inversion recovery needs at least 4 delay points".into(),
        ));
    }
    let params = RelaxationParams::unit_equilibrium(system);
    let eq = params.equilibrium_state();
    let pi_pulse = rf_rotation(system, spin, T::zero(), T::PI())?;
    let iz = angular_momentum(system, spin, Axis::Z)?;
    let h = hamiltonian(system);
    let mut readings = Vec::with_capacity(delays.len());
    for &t in delays {
        let mut rho = evolve(&eq, &pi_pulse)?;
        rho = evolve(&rho, &free_propagator(&h, t)?)?;
        rho = relax(&rho, t, &params)?;
        readings.push(crate::spin::expectation(&rho, &iz)?.re);
    }
    let (_, t1) = fit_inversion_recovery(delays, &readings)?;
    Ok(t1)
}

/// Simulated CPMG T2 measurement: 90deg pulse, then echo trains
/// (delay - 180deg - delay)^n; the transverse magnitude versus total
/// evolved time fits a single exponential whose constant is T2.
pub fn cpmg<T: Real>(
    system: &SpinSystem<T>,
    spin: &str,
    echo_spacing: T,
    echo_counts: &[usize],
) -> Result<T> {
    if echo_counts.len() < 3 {
        return Err(SpinSimError::FitFailure(
            "CPMG needs at least 3 echo counts".into(),
        ));
    }
    let params = RelaxationParams::unit_equilibrium(system);
    let eq = params.equilibrium_state();
    let fp2 = T::FRAC_PI_2();
    let excite = rf_rotation(system, spin, fp2, fp2)?; // 90 about y: z -> x
    let refocus = rf_rotation(system, spin, T::zero(), T::PI())?;
    let ix = angular_momentum(system, spin, Axis::X)?;
    let iy = angular_momentum(system, spin, Axis::Y)?;
    let h = hamiltonian(system);
    let half_delay = free_propagator(&h, echo_spacing)?;
    let mut times = Vec::new();
    let mut amps = Vec::new();
    for &n in echo_counts {
        let mut rho = evolve(&eq, &excite)?;
        for _ in 0..n {
            rho = relax(&evolve(&rho, &half_delay)?, echo_spacing, &params)?;
            rho = evolve(&rho, &refocus)?;
            rho = relax(&evolve(&rho, &half_delay)?, echo_spacing, &params)?;
        }
        let mx = crate::spin::expectation(&rho, &ix)?.re;
        let my = crate::spin::expectation(&rho, &iy)?.re;
        times.push(T::of(2.0 * n as f64) * echo_spacing);
        amps.push((mx * mx + my * my).sqrt());
    }
    let (_, t2) = fit_exp_decay(&times, &amps)?;
    Ok(t2)
}
