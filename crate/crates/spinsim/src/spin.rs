//! Spin systems, operators, Hamiltonians, propagators and density matrices.
//!
//! The simulation frame rotates at each spin's carrier, so Larmor terms
//! enter only as residual offsets (0 when on resonance) and the Hamiltonian
//! is diagonal in the computational basis.

use crate::error::{Result, SpinSimError};
use crate::linalg::CMatrix;
use crate::Real;
use num_complex::Complex;
use serde::Deserialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone)]
pub struct Spin<T> {
    pub label: String,
    /// Rotating-frame residual offset in Hz (0 = on resonance).
    pub offset_hz: T,
    pub t1_s: T,
    pub t2_s: T,
}

/// Static description of a spin system: labels, offsets, J couplings and
/// relaxation time constants.
#[derive(Debug, Clone)]
pub struct SpinSystem<T> {
    spins: Vec<Spin<T>>,
    /// Symmetric coupling matrix in Hz, zero diagonal.
    j_hz: Vec<Vec<T>>,
}

#[derive(Deserialize)]
struct SpinSpec {
    label: String,
    offset_hz: f64,
    t1_s: f64,
    t2_s: f64,
}

#[derive(Deserialize)]
struct SystemSpec {
    spins: Vec<SpinSpec>,
    #[serde(default)]
    j_hz: BTreeMap<String, f64>,
}

impl<T: Real> SpinSystem<T> {
    pub fn new(spins: Vec<Spin<T>>, j_hz: Vec<Vec<T>>) -> Result<Self> {
        let n = spins.len();
        if n == 0 {
            return Err(SpinSimError::InvalidSystem("no spins".into()));
        }
        if j_hz.len() != n || j_hz.iter().any(|r| r.len() != n) {
            return Err(SpinSimError::InvalidSystem(
                "coupling matrix shape does not match spin count".into(),
            ));
        }
        for i in 0..n {
            if j_hz[i][i] != T::zero() {
                return Err(SpinSimError::InvalidSystem(
                    "coupling matrix must have zero diagonal".into(),
                ));
            }
            for j in 0..n {
                if j_hz[i][j] != j_hz[j][i] {
                    return Err(SpinSimError::InvalidSystem(
                        "coupling matrix must be symmetric".into(),
                    ));
                }
            }
        }
        for s in &spins {
            if s.t1_s <= T::zero() || s.t2_s <= T::zero() {
                return Err(SpinSimError::InvalidSystem(format!(
                    "spin {}: time constants must be positive",
                    s.label
                )));
            }
            if s.t2_s > T::of(2.0) * s.t1_s {
                return Err(SpinSimError::InvalidSystem(format!(
                    "spin {}: T2 must not exceed 2*T1",
                    s.label
                )));
            }
        }
        let mut labels: Vec<&str> = spins.iter().map(|s| s.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != n {
            return Err(SpinSimError::InvalidSystem("duplicate spin labels".into()));
        }
        Ok(Self { spins, j_hz })
    }

    /// Load from the fixed JSON schema:
    /// `{ "spins": [{"label":"A","offset_hz":0,"t1_s":19,"t2_s":7}, ...], "j_hz": {"A-B": 215} }`
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SystemSpec = serde_json::from_str(text)
            .map_err(|e| SpinSimError::InvalidConfig(format!("system JSON: {e}")))?;
        let spins: Vec<Spin<T>> = spec
            .spins
            .iter()
            .map(|s| Spin {
                label: s.label.clone(),
                offset_hz: T::of(s.offset_hz),
                t1_s: T::of(s.t1_s),
                t2_s: T::of(s.t2_s),
            })
            .collect();
        let n = spins.len();
        let mut j = vec![vec![T::zero(); n]; n];
        for (key, &val) in &spec.j_hz {
            let mut parts = key.splitn(2, '-');
            let (a, b) = match (parts.next(), parts.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(SpinSimError::InvalidConfig(format!(
                        "j_hz key `{key}` is not of the form LABEL-LABEL"
                    )))
                }
            };
            let ia = spins
                .iter()
                .position(|s| s.label == a)
                .ok_or_else(|| SpinSimError::UnknownSpin(a.to_string()))?;
            let ib = spins
                .iter()
                .position(|s| s.label == b)
                .ok_or_else(|| SpinSimError::UnknownSpin(b.to_string()))?;
            j[ia][ib] = T::of(val);
            j[ib][ia] = T::of(val);
        }
        Self::new(spins, j)
    }

    /// The chloroform benchmark molecule: proton A (T1 19 s, T2 7 s) and carbon B
    /// (T1 25 s, T2 0.3 s) with J = 215 Hz, both on resonance.
    pub fn chloroform() -> Self {
        let spins = vec![
            Spin {
                label: "A".to_string(),
                offset_hz: T::zero(),
                t1_s: T::of(19.0),
                t2_s: T::of(7.0),
            },
            Spin {
                label: "B".to_string(),
                offset_hz: T::zero(),
                t1_s: T::of(25.0),
                t2_s: T::of(0.3),
            },
        ];
        let j = T::of(215.0);
        Self::new(spins, vec![vec![T::zero(), j], vec![j, T::zero()]]).unwrap()
    }

    pub fn n_spins(&self) -> usize {
        self.spins.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.spins.len()
    }

    pub fn spins(&self) -> &[Spin<T>] {
        &self.spins
    }

    pub fn spin(&self, i: usize) -> &Spin<T> {
        &self.spins[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.spins
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| SpinSimError::UnknownSpin(label.to_string()))
    }

    pub fn j(&self, a: usize, b: usize) -> T {
        self.j_hz[a][b]
    }

    /// The single nonzero coupling of a two-spin system, used as the default
    /// basis for the tau delay symbol.
    pub fn primary_j(&self) -> Option<T> {
        let n = self.n_spins();
        for a in 0..n {
            for b in (a + 1)..n {
                if self.j_hz[a][b] != T::zero() {
                    return Some(self.j_hz[a][b]);
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Hermitian,
    Unitary,
    General,
}

/// Dense complex operator on the full spin Hilbert space, tagged with its
/// structural role. Hermitian/unitary tags are validated on construction.
#[derive(Debug, Clone)]
pub struct OperatorMatrix<T> {
    mat: CMatrix<T>,
    role: Role,
}

impl<T: Real> OperatorMatrix<T> {
    pub fn hermitian(mat: CMatrix<T>) -> Result<Self> {
        if !mat.is_hermitian(T::default_tol()) {
            return Err(SpinSimError::InvalidMatrix(
                "matrix tagged hermitian is not Hermitian".into(),
            ));
        }
        Ok(Self {
            mat,
            role: Role::Hermitian,
        })
    }

    pub fn unitary(mat: CMatrix<T>) -> Result<Self> {
        if !mat.is_unitary(T::default_tol()) {
            return Err(SpinSimError::InvalidMatrix(
                "matrix tagged unitary is not unitary".into(),
            ));
        }
        Ok(Self {
            mat,
            role: Role::Unitary,
        })
    }

    pub fn general(mat: CMatrix<T>) -> Self {
        Self {
            mat,
            role: Role::General,
        }
    }

    pub fn mat(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix<T> {
        self.mat
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// Matrix product; the product of unitaries stays tagged unitary.
    pub fn compose(&self, rhs: &Self) -> Self {
        let role = if self.role == Role::Unitary && rhs.role == Role::Unitary {
            Role::Unitary
        } else {
            Role::General
        };
        Self {
            mat: self.mat.mul(&rhs.mat),
            role,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
            role: self.role,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// Physical state: trace 1, positive semidefinite.
    Full,
    /// Traceless deviation from the maximally mixed background.
    Deviation,
}

/// System state as a dense density matrix, either a physical (trace-1)
/// state or a traceless deviation matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix<T> {
    mat: CMatrix<T>,
    form: Form,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(mat: CMatrix<T>, form: Form) -> Result<Self> {
        let tol = T::default_tol();
        if !mat.is_hermitian(tol) {
            return Err(SpinSimError::InvalidMatrix(
                "density matrix must be Hermitian".into(),
            ));
        }
        match form {
            Form::Full => {
                if (mat.trace().re - T::one()).abs() > tol || mat.trace().im.abs() > tol {
                    return Err(SpinSimError::InvalidMatrix(
                        "full-form density matrix must have trace 1".into(),
                    ));
                }
                if mat.min_eigenvalue() < -T::of(1e-10) {
                    return Err(SpinSimError::InvalidMatrix(
                        "full-form density matrix must be positive semidefinite".into(),
                    ));
                }
            }
            Form::Deviation => {
                if mat.trace().norm() > tol {
                    return Err(SpinSimError::InvalidMatrix(
                        "deviation density matrix must be traceless".into(),
                    ));
                }
            }
        }
        Ok(Self { mat, form })
    }

    /// Computational basis state |index>.
    pub fn pure(dim: usize, index: usize) -> Self {
        let mut mat = CMatrix::zeros(dim);
        mat.set(index, index, Complex::new(T::one(), T::zero()));
        Self {
            mat,
            form: Form::Full,
        }
    }

    pub fn from_state_vector(amps: &[Complex<T>]) -> Self {
        let dim = amps.len();
        let mat = CMatrix::from_fn(dim, |i, j| amps[i] * amps[j].conj());
        Self {
            mat,
            form: Form::Full,
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let p = Complex::new(T::one() / T::of(dim as f64), T::zero());
        Self {
            mat: CMatrix::identity(dim).scale(p),
            form: Form::Full,
        }
    }

    /// Construct without invariant validation; for internal pipelines whose
    /// outputs are preserved by construction.
    pub(crate) fn from_parts_unchecked(mat: CMatrix<T>, form: Form) -> Self {
        Self { mat, form }
    }

    pub fn mat(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// Diagonal (populations) as reals.
    pub fn populations(&self) -> Vec<T> {
        self.mat.diag().iter().map(|c| c.re).collect()
    }

    /// rho - Tr(rho) I/dim, the part NMR actually detects.
    pub fn deviation_part(&self) -> CMatrix<T> {
        let dim = self.mat.dim();
        let bg = self
            .mat
            .trace()
            .scale(T::one() / T::of(dim as f64));
        self.mat.sub(&CMatrix::identity(dim).scale(bg))
    }
}

fn pauli<T: Real>(axis: Axis) -> CMatrix<T> {
    let z = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    match axis {
        Axis::X => CMatrix::from_rows(&[vec![z, one], vec![one, z]]),
        Axis::Y => CMatrix::from_rows(&[vec![z, -i], vec![i, z]]),
        Axis::Z => CMatrix::from_rows(&[vec![one, z], vec![z, -one]]),
    }
}

/// Embed a single-spin operator at position `index` by tensoring with
/// identities on every other spin.
pub fn embed_single<T: Real>(n_spins: usize, index: usize, op: &CMatrix<T>) -> CMatrix<T> {
    let mut out = CMatrix::identity(1);
    for k in 0..n_spins {
        let factor = if k == index {
            op.clone()
        } else {
            CMatrix::identity(2)
        };
        out = out.kron(&factor);
    }
    out
}

/// Angular momentum operator (half the Pauli matrix) for one spin,
/// embedded in the full space.
pub fn angular_momentum<T: Real>(
    system: &SpinSystem<T>,
    spin: &str,
    axis: Axis,
) -> Result<OperatorMatrix<T>> {
    let idx = system.index_of(spin)?;
    let half = Complex::new(T::of(0.5), T::zero());
    let op = pauli(axis).scale(half);
    OperatorMatrix::hermitian(embed_single(system.n_spins(), idx, &op))
}

/// Full Pauli matrix for one spin, embedded in the full space.
pub fn pauli_operator<T: Real>(
    system: &SpinSystem<T>,
    spin: &str,
    axis: Axis,
) -> Result<OperatorMatrix<T>> {
    let idx = system.index_of(spin)?;
    OperatorMatrix::hermitian(embed_single(system.n_spins(), idx, &pauli(axis)))
}

/// Rotating-frame Hamiltonian in angular units (rad/s):
/// H = sum_k -2 pi offset_k I_zk + sum_{k<l} 2 pi J_kl I_zk I_zl.
/// Diagonal in the computational basis.
pub fn hamiltonian<T: Real>(system: &SpinSystem<T>) -> OperatorMatrix<T> {
    let n = system.n_spins();
    let dim = system.dim();
    let two_pi = T::of(2.0) * T::PI();
    // m_k = +1/2 for |0> (bit 0), -1/2 for |1>, with spin 0 the most
    // significant bit.
    let m = |state: usize, k: usize| -> T {
        if state >> (n - 1 - k) & 1 == 0 {
            T::of(0.5)
        } else {
            T::of(-0.5)
        }
    };
    let mut entries = vec![Complex::new(T::zero(), T::zero()); dim];
    for (state, e) in entries.iter_mut().enumerate() {
        let mut val = T::zero();
        for k in 0..n {
            val -= two_pi * system.spin(k).offset_hz * m(state, k);
        }
        for k in 0..n {
            for l in (k + 1)..n {
                val += two_pi * system.j(k, l) * m(state, k) * m(state, l);
            }
        }
        *e = Complex::new(val, T::zero());
    }
    OperatorMatrix::hermitian(CMatrix::diagonal(&entries)).expect("diagonal is Hermitian")
}

/// U = exp(-i H t) for Hermitian H and t >= 0.
pub fn free_propagator<T: Real>(h: &OperatorMatrix<T>, duration: T) -> Result<OperatorMatrix<T>> {
    if duration < T::zero() {
        return Err(SpinSimError::NegativeDuration(
            duration.to_f64().unwrap_or(f64::NAN),
        ));
    }
    if h.role() != Role::Hermitian && !h.mat().is_hermitian(T::default_tol()) {
        return Err(SpinSimError::InvalidMatrix(
            "free propagator requires a Hermitian generator".into(),
        ));
    }
    OperatorMatrix::unitary(h.mat().exp_minus_i_hermitian(duration))
}

/// Ideal spin-selective RF rotation:
/// U = exp(-i flip (cos phi I_x + sin phi I_y)) on the addressed spin.
/// With this convention Y (phi = pi/2, flip pi/2) maps
/// |0> -> (|0>+|1>)/sqrt2 and |1> -> (-|0>+|1>)/sqrt2.
pub fn rf_rotation<T: Real>(
    system: &SpinSystem<T>,
    spin: &str,
    phase_axis: T,
    flip_angle: T,
) -> Result<OperatorMatrix<T>> {
    let idx = system.index_of(spin)?;
    let half = flip_angle * T::of(0.5);
    let (c, s) = (half.cos(), half.sin());
    let (cp, sp) = (phase_axis.cos(), phase_axis.sin());
    // cos(f/2) I - i sin(f/2) (cos phi sx + sin phi sy)
    let mi = Complex::new(T::zero(), -T::one());
    let local = CMatrix::identity(2)
        .scale(Complex::new(c, T::zero()))
        .add(
            &pauli(Axis::X)
                .scale(Complex::new(cp * s, T::zero()))
                .add(&pauli(Axis::Y).scale(Complex::new(sp * s, T::zero())))
                .scale(mi),
        );
    OperatorMatrix::unitary(embed_single(system.n_spins(), idx, &local))
}

/// rho -> U rho U†.
pub fn evolve<T: Real>(rho: &DensityMatrix<T>, u: &OperatorMatrix<T>) -> Result<DensityMatrix<T>> {
    rho.mat().check_dims(u.mat())?;
    let mat = u.mat().mul(rho.mat()).mul(&u.mat().adjoint());
    Ok(DensityMatrix {
        mat: mat.symmetrize(),
        form: rho.form(),
    })
}

/// Tr(rho obs).
pub fn expectation<T: Real>(
    rho: &DensityMatrix<T>,
    obs: &OperatorMatrix<T>,
) -> Result<Complex<T>> {
    rho.mat().check_dims(obs.mat())?;
    Ok(rho.mat().mul(obs.mat()).trace())
}
