//! State preparation, the algorithm pipeline and classification.
//!
//! Covers thermal-state preparation in the high-temperature limit, cyclic
//! population permutation with temporal averaging, assembly of the full
//! pulse program (state preparation pulses, oracle, un-rotation) and the
//! constant/balanced decision rule.

use crate::error::{Result, SpinSimError};
use crate::linalg::CMatrix;
use crate::noise::{relax, RelaxationParams};
use crate::pulse::{parse, Delay, Oracle, PulseEvent, PulseProgram};
use crate::spin::{
    angular_momentum, evolve, free_propagator, hamiltonian, rf_rotation, Axis, DensityMatrix,
    Form, SpinSystem,
};
use crate::Real;
use num_complex::Complex;

/// Populations of |00>, |01>, |10>, |11>.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationVector<T>(pub [T; 4]);

impl<T: Real> PopulationVector<T> {
    /// The temporal-averaging identity: the sum of the three cyclic
    /// permutations decomposes as alpha [1,1,1,1] + delta [1,0,0,0].
    pub fn temporal_average_identity(&self) -> (T, T) {
        let [n00, n01, n10, n11] = self.0;
        let alpha = n01 + n10 + n11;
        let delta = T::of(3.0) * n00 - alpha;
        (alpha, delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    Pure00,
    Thermal,
    TemporalAverage,
}

impl InputMode {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "pure" | "pure_00" => Some(InputMode::Pure00),
            "thermal" => Some(InputMode::Thermal),
            "temporal" | "temporal_average" => Some(InputMode::TemporalAverage),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Constant,
    Balanced,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Constant => "constant",
            Verdict::Balanced => "balanced",
        }
    }
}

/// Everything needed for one algorithm run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig<T> {
    pub system: SpinSystem<T>,
    pub oracle: Oracle,
    pub input_mode: InputMode,
    pub noise_enabled: bool,
    /// Sample temperature (metadata; polarizations carry the physics).
    pub temperature_k: T,
    /// Per-spin hbar omega / kT ratios; must sit in the high-temperature
    /// regime (0, 0.01) where the linearized populations are valid.
    pub polarizations: Vec<T>,
}

impl<T: Real> ExperimentConfig<T> {
    pub fn new(
        system: SpinSystem<T>,
        oracle: Oracle,
        input_mode: InputMode,
        polarizations: Vec<T>,
    ) -> Result<Self> {
        if polarizations.len() != system.n_spins() {
            return Err(SpinSimError::InvalidConfig(
                "one polarization ratio per spin required".into(),
            ));
        }
        for &p in &polarizations {
            if p <= T::zero() || p >= T::of(0.01) {
                return Err(SpinSimError::InvalidConfig(format!(
                    "polarization ratio {p} outside the high-temperature range (0, 0.01)"
                )));
            }
        }
        Ok(Self {
            system,
            oracle,
            input_mode,
            noise_enabled: false,
            temperature_k: T::of(298.0),
            polarizations,
        })
    }

    /// Chloroform-scale defaults: proton/carbon polarization ratio 4:1 with
    /// hbar omega_A / kT = 8.05e-5 (500 MHz proton at 298 K).
    pub fn chloroform_defaults(oracle: Oracle, input_mode: InputMode) -> Self {
        let pa = T::of(8.05e-5);
        Self::new(
            SpinSystem::chloroform(),
            oracle,
            input_mode,
            vec![pa, pa / T::of(4.0)],
        )
        .expect("defaults are valid")
    }
}

/// Thermally equilibrated diagonal state with linearized populations
/// n_i = (1 + sum_k m_k eps_k)/2^N, trace renormalized to exactly 1.
pub fn thermal_state<T: Real>(
    system: &SpinSystem<T>,
    polarizations: &[T],
) -> Result<DensityMatrix<T>> {
    let n = system.n_spins();
    if polarizations.len() != n {
        return Err(SpinSimError::InvalidConfig(
            "one polarization ratio per spin required".into(),
        ));
    }
    for &p in polarizations {
        if p <= T::zero() || p >= T::of(0.01) {
            return Err(SpinSimError::InvalidConfig(format!(
                "polarization ratio {p} outside the high-temperature range (0, 0.01)"
            )));
        }
    }
    let dim = system.dim();
    let mut pops = vec![T::zero(); dim];
    for (state, p) in pops.iter_mut().enumerate() {
        let mut v = T::one();
        for (k, &eps) in polarizations.iter().enumerate() {
            let m = if state >> (n - 1 - k) & 1 == 0 {
                T::of(0.5)
            } else {
                T::of(-0.5)
            };
            v += m * eps;
        }
        *p = v;
    }
    let total: T = pops.iter().copied().sum();
    let entries: Vec<Complex<T>> = pops
        .iter()
        .map(|&p| Complex::new(p / total, T::zero()))
        .collect();
    Ok(DensityMatrix::from_parts_unchecked(
        CMatrix::diagonal(&entries),
        Form::Full,
    ))
}

/// Permutation of diagonal populations that fixes |00>. `perm[i]` is the
/// old index whose population lands at new index `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationPermutation(pub Vec<usize>);

impl PopulationPermutation {
    pub fn identity(dim: usize) -> Self {
        Self((0..dim).collect())
    }

    /// [n00,n01,n10,n11] -> [n00,n11,n01,n10] (cycle 01 -> 10 -> 11 -> 01).
    pub fn cycle_forward() -> Self {
        Self(vec![0, 3, 1, 2])
    }

    /// [n00,n01,n10,n11] -> [n00,n10,n11,n01].
    pub fn cycle_backward() -> Self {
        Self(vec![0, 2, 3, 1])
    }
}

/// Reorder the populations of a diagonal (thermal) state. The |00>
/// population must stay fixed; non-diagonal inputs are rejected since the
/// physical permutation sequences act on populations only.
pub fn permute_populations<T: Real>(
    rho: &DensityMatrix<T>,
    cycle: &PopulationPermutation,
) -> Result<DensityMatrix<T>> {
    let dim = rho.dim();
    if cycle.0.len() != dim || cycle.0[0] != 0 {
        return Err(SpinSimError::InvalidConfig(
            "permutation must cover all states and fix |00>".into(),
        ));
    }
    let mut seen = vec![false; dim];
    for &i in &cycle.0 {
        if i >= dim || seen[i] {
            return Err(SpinSimError::InvalidConfig("not a permutation".into()));
        }
        seen[i] = true;
    }
    if !rho.mat().is_diagonal(T::of(1e-10)) {
        return Err(SpinSimError::InvalidMatrix(
            "population permutation requires a diagonal state".into(),
        ));
    }
    let diag = rho.mat().diag();
    let entries: Vec<Complex<T>> = cycle.0.iter().map(|&i| diag[i]).collect();
    Ok(DensityMatrix::from_parts_unchecked(
        CMatrix::diagonal(&entries),
        rho.form(),
    ))
}

/// Sum three density matrices (the outputs of the three permuted
/// experiments) and decompose the total as a uniform background alpha plus
/// a pure-state-like deviation delta.
///
/// The decomposition is read off the eigenvalues of the sum: for a unitary
/// pipeline the sum is alpha I + delta P with P a rank-1 projector, so the
/// background is the (dim-1)-fold degenerate eigenvalue.
pub fn temporal_average<T: Real>(
    rhos: &[DensityMatrix<T>; 3],
) -> Result<(T, T, DensityMatrix<T>)> {
    rhos[0].mat().check_dims(rhos[1].mat())?;
    rhos[0].mat().check_dims(rhos[2].mat())?;
    let sum = rhos[0].mat().add(rhos[1].mat()).add(rhos[2].mat());
    let dim = sum.dim();
    let (mut w, _) = sum.hermitian_eigen();
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let alpha = w[..dim - 1].iter().copied().sum::<T>() / T::of((dim - 1) as f64);
    let delta = w[dim - 1] - alpha;
    Ok((
        alpha,
        delta,
        DensityMatrix::from_parts_unchecked(sum, Form::Full),
    ))
}

/// The full algorithm program: preparation pulses, oracle body, un-rotation.
pub fn dj_program<T: Real>(oracle: Oracle) -> PulseProgram<T> {
    let prep: PulseProgram<T> = parse("Y(A) Ybar(B)").expect("valid preset");
    let unrotate: PulseProgram<T> = parse("Ybar(A) Y(B)").expect("valid preset");
    prep.concat(&oracle.program()).concat(&unrotate)
}

/// Step a state through a pulse program event by event. With `noise` set,
/// relaxation acts across every delay (for its duration) and every pulse
/// (for the configured finite width), and all flip angles are multiplied by
/// `flip_scale`.
pub fn run_pipeline<T: Real>(
    system: &SpinSystem<T>,
    program: &PulseProgram<T>,
    rho0: &DensityMatrix<T>,
    flip_scale: T,
    noise: Option<(&RelaxationParams<T>, T)>,
) -> Result<DensityMatrix<T>> {
    let h = hamiltonian(system);
    let tau = match system.primary_j() {
        Some(j) if j != T::zero() => Some(program.tau_s.unwrap_or((T::of(2.0) * j.abs()).recip())),
        _ => program.tau_s,
    };
    let mut rho = rho0.clone();
    for ev in program.events() {
        match ev {
            PulseEvent::Delay(d) => {
                let dt = match d {
                    Delay::Literal(s) => *s,
                    Delay::Tau => tau.ok_or(SpinSimError::UnresolvedTau)?,
                    Delay::HalfTau => {
                        tau.ok_or(SpinSimError::UnresolvedTau)? * T::of(0.5)
                    }
                };
                rho = evolve(&rho, &free_propagator(&h, dt)?)?;
                if let Some((params, _)) = noise {
                    rho = relax(&rho, dt, params)?;
                }
            }
            PulseEvent::Pulse { spin, phase, flip } => {
                let u = rf_rotation(system, spin, *phase, *flip * flip_scale)?;
                rho = evolve(&rho, &u)?;
                if let Some((params, width)) = noise {
                    rho = relax(&rho, width, params)?;
                }
            }
        }
    }
    Ok(rho)
}

/// Prepare the input state for a given mode. Temporal averaging needs three
/// separate runs; this returns the three permuted inputs in that case.
pub fn prepare_inputs<T: Real>(config: &ExperimentConfig<T>) -> Result<Vec<DensityMatrix<T>>> {
    match config.input_mode {
        InputMode::Pure00 => Ok(vec![DensityMatrix::pure(config.system.dim(), 0)]),
        InputMode::Thermal => Ok(vec![thermal_state(&config.system, &config.polarizations)?]),
        InputMode::TemporalAverage => {
            let th = thermal_state(&config.system, &config.polarizations)?;
            Ok(vec![
                th.clone(),
                permute_populations(&th, &PopulationPermutation::cycle_forward())?,
                permute_populations(&th, &PopulationPermutation::cycle_backward())?,
            ])
        }
    }
}

/// Run the experiment noiselessly and return the state immediately before
/// readout. For temporal averaging the three post-computation matrices are
/// summed (linearity makes pre- and post-summation equivalent for unitary
/// pipelines; summation stays post-computation to mirror the experiment).
///
/// Noise-enabled configs go through [`crate::noise::ensemble_run`] with the
/// default chloroform-scale noise settings.
pub fn run_experiment<T: Real>(config: &ExperimentConfig<T>) -> Result<DensityMatrix<T>> {
    if config.noise_enabled {
        let settings = crate::noise::NoiseSettings::chloroform_defaults(config)?;
        return crate::noise::ensemble_run(config, &settings);
    }
    let program = dj_program::<T>(config.oracle);
    let inputs = prepare_inputs(config)?;
    let mut outputs = Vec::with_capacity(inputs.len());
    for rho0 in &inputs {
        outputs.push(run_pipeline(&config.system, &program, rho0, T::one(), None)?);
    }
    if outputs.len() == 3 {
        let arr: [DensityMatrix<T>; 3] = [
            outputs[0].clone(),
            outputs[1].clone(),
            outputs[2].clone(),
        ];
        let (_, _, effective) = temporal_average(&arr)?;
        Ok(effective)
    } else {
        Ok(outputs.pop().unwrap())
    }
}

/// Spin-A polarization resolved on the work-qubit-|0> subensemble: the
/// deviation-population difference p(|00>) - p(|10>). This is the quantity
/// the low-frequency proton line integrates to, and the only signal that
/// classifies correctly from a thermal input (the work-qubit-|1>
/// subensemble never flips and would cancel the aggregate <I_zA> exactly).
pub fn work_subspace_polarization<T: Real>(final_state: &DensityMatrix<T>) -> Result<T> {
    if final_state.dim() != 4 {
        return Err(SpinSimError::DimensionMismatch(final_state.dim(), 4));
    }
    let dev = final_state.deviation_part();
    Ok(dev.get(0, 0).re - dev.get(2, 2).re)
}

/// Decide constant vs balanced from the pre-readout state: the sign of the
/// work-subensemble spin-A polarization. Positive means spin A effectively
/// |0> (constant), negative means |1> (balanced). Magnitudes below 5% of
/// the deviation norm are inconclusive (failed run).
pub fn classify<T: Real>(final_state: &DensityMatrix<T>) -> Result<Verdict> {
    let dev = final_state.deviation_part();
    let polarization = work_subspace_polarization(final_state)?;
    let threshold = T::of(0.05) * dev.frobenius_norm();
    if polarization.abs() < threshold || dev.frobenius_norm() == T::zero() {
        return Err(SpinSimError::Inconclusive {
            polarization: polarization.to_f64().unwrap_or(f64::NAN),
            threshold: threshold.to_f64().unwrap_or(f64::NAN),
        });
    }
    if polarization > T::zero() {
        Ok(Verdict::Constant)
    } else {
        Ok(Verdict::Balanced)
    }
}

/// Signal scaling with machine size: the fraction of pure-state signal for
/// N spins with single-spin partition function Z is N Z^-N.
pub fn pure_fraction_scaling<T: Real>(n_qubits: usize, z: T) -> T {
    T::of(n_qubits as f64) * z.powi(-(n_qubits as i32))
}

/// Convenience used by classification helpers and tests: <I_zA> of a state.
pub fn spin_a_polarization<T: Real>(
    system: &SpinSystem<T>,
    rho: &DensityMatrix<T>,
) -> Result<T> {
    let label = system.spin(0).label.clone();
    let iza = angular_momentum(system, &label, Axis::Z)?;
    Ok(crate::spin::expectation(rho, &iza)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = ExperimentConfig<f64>;

    fn cfg(oracle: Oracle, mode: InputMode) -> C {
        C::chloroform_defaults(oracle, mode)
    }

    #[test]
    fn thermal_state_zero_polarization_limit() {
        // ratios must be > 0; tiny values approach the maximally mixed state
        let s = SpinSystem::<f64>::chloroform();
        let rho = thermal_state(&s, &[1e-12, 1e-12]).unwrap();
        for p in rho.populations() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn thermal_state_ordering_and_closed_form() {
        let s = SpinSystem::<f64>::chloroform();
        let eps = 1e-4;
        let rho = thermal_state(&s, &[4.0 * eps, eps]).unwrap();
        let p = rho.populations();
        assert!(p[0] > p[1] && p[1] > p[2] && p[2] > p[3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // n00 - n11 = (eps_A + eps_B)/4 * ... closed form: (5 eps)/4
        let want = 5.0 * eps / 4.0;
        assert!((p[0] - p[3] - want).abs() < 1e-12, "{}", p[0] - p[3]);
        assert!(rho.mat().is_hermitian(1e-14));
    }

    #[test]
    fn thermal_state_rejects_out_of_range() {
        let s = SpinSystem::<f64>::chloroform();
        assert!(thermal_state(&s, &[0.5, 0.1]).is_err());
        assert!(thermal_state(&s, &[0.0, 1e-5]).is_err());
    }

    #[test]
    fn permutation_examples() {
        let s = SpinSystem::<f64>::chloroform();
        let rho = thermal_state(&s, &[4e-4, 1e-4]).unwrap();
        let p0 = rho.populations();
        let id = permute_populations(&rho, &PopulationPermutation::identity(4)).unwrap();
        assert_eq!(id.populations(), p0);
        let fwd = permute_populations(&rho, &PopulationPermutation::cycle_forward()).unwrap();
        assert_eq!(fwd.populations(), vec![p0[0], p0[3], p0[1], p0[2]]);
        // three applications of the 3-cycle = identity
        let mut r = rho.clone();
        for _ in 0..3 {
            r = permute_populations(&r, &PopulationPermutation::cycle_forward()).unwrap();
        }
        assert_eq!(r.populations(), p0);
    }

    #[test]
    fn permutation_rejects_non_diagonal() {
        let s = SpinSystem::<f64>::chloroform();
        let fp2 = std::f64::consts::FRAC_PI_2;
        let y = rf_rotation(&s, "A", fp2, fp2).unwrap();
        let rho = evolve(&DensityMatrix::pure(4, 0), &y).unwrap();
        assert!(permute_populations(&rho, &PopulationPermutation::cycle_forward()).is_err());
    }

    #[test]
    fn temporal_average_identity_and_decomposition() {
        let s = SpinSystem::<f64>::chloroform();
        let th = thermal_state(&s, &[4e-4, 1e-4]).unwrap();
        let p = th.populations();
        let (alpha_ref, delta_ref) =
            PopulationVector([p[0], p[1], p[2], p[3]]).temporal_average_identity();
        let rhos = [
            th.clone(),
            permute_populations(&th, &PopulationPermutation::cycle_forward()).unwrap(),
            permute_populations(&th, &PopulationPermutation::cycle_backward()).unwrap(),
        ];
        let (alpha, delta, eff) = temporal_average(&rhos).unwrap();
        assert!((alpha - alpha_ref).abs() < 1e-14);
        assert!((delta - delta_ref).abs() < 1e-14);
        let e = eff.populations();
        assert!((e[0] - 3.0 * p[0]).abs() < 1e-14);
        for k in 1..4 {
            assert!((e[k] - alpha_ref).abs() < 1e-14);
        }
        assert!(delta > 0.0, "thermal 4:1 polarization has signal");
    }

    #[test]
    fn temporal_average_mixed_input_gives_zero_delta() {
        let mixed = DensityMatrix::<f64>::maximally_mixed(4);
        let rhos = [mixed.clone(), mixed.clone(), mixed];
        let (alpha, delta, _) = temporal_average(&rhos).unwrap();
        assert!((alpha - 0.75).abs() < 1e-14);
        assert!(delta.abs() < 1e-14);
    }

    #[test]
    fn temporal_average_is_linear() {
        let s = SpinSystem::<f64>::chloroform();
        let th = thermal_state(&s, &[4e-4, 1e-4]).unwrap();
        let rhos = [
            th.clone(),
            permute_populations(&th, &PopulationPermutation::cycle_forward()).unwrap(),
            permute_populations(&th, &PopulationPermutation::cycle_backward()).unwrap(),
        ];
        let (a1, d1, _) = temporal_average(&rhos).unwrap();
        let c = 0.37;
        let scaled: [DensityMatrix<f64>; 3] = [
            DensityMatrix::from_parts_unchecked(
                rhos[0].mat().scale(num_complex::Complex::new(c, 0.0)),
                Form::Full,
            ),
            DensityMatrix::from_parts_unchecked(
                rhos[1].mat().scale(num_complex::Complex::new(c, 0.0)),
                Form::Full,
            ),
            DensityMatrix::from_parts_unchecked(
                rhos[2].mat().scale(num_complex::Complex::new(c, 0.0)),
                Form::Full,
            ),
        ];
        let (a2, d2, _) = temporal_average(&scaled).unwrap();
        assert!((a2 - c * a1).abs() < 1e-14);
        assert!((d2 - c * d1).abs() < 1e-14);
    }

    #[test]
    fn dj_program_f1_text() {
        let p: PulseProgram<f64> = dj_program(Oracle::F1);
        assert_eq!(
            p.render().unwrap(),
            "Y(A) Ybar(B) - tau/2 - X(B) X(B) - tau/2 - X(B) X(B) - Ybar(A) Y(B)"
        );
    }

    #[test]
    fn pure_runs_give_expected_populations() {
        for (oracle, want) in [
            (Oracle::F1, [1.0, 0.0, 0.0, 0.0]),
            (Oracle::F2, [1.0, 0.0, 0.0, 0.0]),
            (Oracle::F3, [0.0, 0.0, 1.0, 0.0]),
            (Oracle::F4, [0.0, 0.0, 1.0, 0.0]),
        ] {
            let out = run_experiment(&cfg(oracle, InputMode::Pure00)).unwrap();
            let p = out.populations();
            for (got, want) in p.iter().zip(want) {
                assert!((got - want).abs() < 1e-9, "{:?}: {:?}", oracle, p);
            }
        }
    }

    #[test]
    fn classification_noiseless() {
        for oracle in Oracle::ALL {
            let out = run_experiment(&cfg(oracle, InputMode::Pure00)).unwrap();
            let v = classify(&out).unwrap();
            assert_eq!(
                v,
                if oracle.is_constant() {
                    Verdict::Constant
                } else {
                    Verdict::Balanced
                },
                "{oracle:?}"
            );
        }
    }

    #[test]
    fn thermal_input_classification_and_sign_flip() {
        let f1 = run_experiment(&cfg(Oracle::F1, InputMode::Thermal)).unwrap();
        let f3 = run_experiment(&cfg(Oracle::F3, InputMode::Thermal)).unwrap();
        let m1 = work_subspace_polarization(&f1).unwrap();
        let m3 = work_subspace_polarization(&f3).unwrap();
        assert!(m1 > 0.0 && m3 < 0.0, "m1={m1} m3={m3}");
        assert!((m1 + m3).abs() < 1e-12, "flip is exact");
        assert_eq!(classify(&f1).unwrap(), Verdict::Constant);
        assert_eq!(classify(&f3).unwrap(), Verdict::Balanced);
    }

    #[test]
    fn thermal_aggregate_iz_cancels_for_balanced_oracles() {
        // the work-qubit-|1> subensemble exactly cancels the aggregate
        // spin-A polarization after a balanced oracle; only the
        // line-resolved signal classifies
        let s = SpinSystem::<f64>::chloroform();
        let f3 = run_experiment(&cfg(Oracle::F3, InputMode::Thermal)).unwrap();
        assert!(spin_a_polarization(&s, &f3).unwrap().abs() < 1e-12);
    }

    #[test]
    fn thermal_classification_all_oracles() {
        for oracle in Oracle::ALL {
            let out = run_experiment(&cfg(oracle, InputMode::Thermal)).unwrap();
            let v = classify(&out).unwrap();
            assert_eq!(
                v,
                if oracle.is_constant() {
                    Verdict::Constant
                } else {
                    Verdict::Balanced
                }
            );
        }
    }

    #[test]
    fn maximally_mixed_is_inconclusive() {
        let mixed = DensityMatrix::<f64>::maximally_mixed(4);
        assert!(matches!(
            classify(&mixed),
            Err(SpinSimError::Inconclusive { .. })
        ));
    }

    #[test]
    fn work_qubit_one_failure_mode() {
        // from |01> (work qubit |1>) f1 and f3 give the same spin-A outcome
        let s = SpinSystem::<f64>::chloroform();
        let mut outcomes = Vec::new();
        for oracle in [Oracle::F1, Oracle::F3] {
            let program = dj_program::<f64>(oracle);
            let rho = run_pipeline(&s, &program, &DensityMatrix::pure(4, 1), 1.0, None).unwrap();
            outcomes.push(spin_a_polarization(&s, &rho).unwrap());
        }
        assert!(
            (outcomes[0] - outcomes[1]).abs() < 1e-9,
            "work-qubit-|1> subensemble cannot separate: {outcomes:?}"
        );
    }

    #[test]
    fn input_qubit_one_still_works() {
        // from |10> the outcome still separates constant from balanced
        // deterministically (the labels invert with the known input)
        let s = SpinSystem::<f64>::chloroform();
        for oracle in Oracle::ALL {
            let program = dj_program::<f64>(oracle);
            let rho = run_pipeline(&s, &program, &DensityMatrix::pure(4, 2), 1.0, None).unwrap();
            let m = work_subspace_polarization(&rho).unwrap();
            if oracle.is_constant() {
                assert!(m < -0.5, "{oracle:?}: input |1> stays |1>, m={m}");
            } else {
                assert!(m > 0.5, "{oracle:?}: balanced flips the input qubit, m={m}");
            }
        }
    }

    #[test]
    fn scaling_formula_spot_values() {
        assert_eq!(pure_fraction_scaling(2usize, 2.0f64), 0.5);
        assert!((pure_fraction_scaling(10usize, 2.0f64) - 10.0 / 1024.0).abs() < 1e-15);
        assert_eq!(pure_fraction_scaling(7usize, 1.0f64), 7.0);
    }

    #[test]
    fn pipeline_duration_under_seven_milliseconds() {
        let s = SpinSystem::<f64>::chloroform();
        for oracle in Oracle::ALL {
            let p = dj_program::<f64>(oracle);
            let d = p.duration(&s, Some(15e-6)).unwrap();
            assert!(d < 7e-3, "{oracle:?}: {d}");
        }
    }
}
