//! Pulse-sequence notation: parser, IR and compiler.
//!
//! Grammar:
//! ```text
//! program := group ('-' group)*
//! group   := token+
//! token   := rot | delay
//! rot     := axisname '(' spin ')'      axisname in {X, Y, Xbar, Ybar}
//! delay   := 'tau' | 'tau/2' | number ('ms'|'us'|'s')
//! ```
//! Tokens are whitespace-separated and case-sensitive; a lone `-` separates
//! groups (dashes are readability only, the compiled propagator is the same).
//! Pulses are ideal delta-function rotations here; finite-width effects are
//! the noise module's business.

use crate::error::{Result, SpinSimError};
use crate::spin::{free_propagator, hamiltonian, rf_rotation, OperatorMatrix, SpinSystem};
use crate::Real;
use serde::Serialize;

/// Symbolic or literal delay length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Delay<T> {
    Tau,
    HalfTau,
    /// Seconds.
    Literal(T),
}

/// One timed event: a spin-selective rotation or a free-evolution delay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PulseEvent<T> {
    Pulse {
        spin: String,
        /// Phase axis in the x-y plane, radians (X = 0, Y = pi/2).
        phase: T,
        /// Flip angle in radians, (0, 2 pi].
        flip: T,
    },
    Delay(Delay<T>),
}

/// Parsed pulse program: ordered groups of events plus the resolved value
/// of the tau symbol (if set; the compiler defaults it to 1/(2 J)).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseProgram<T> {
    pub groups: Vec<Vec<PulseEvent<T>>>,
    pub tau_s: Option<T>,
}

/// The four one-bit oracle functions of the algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Oracle {
    F1,
    F2,
    F3,
    F4,
}

impl Oracle {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "f1" => Some(Oracle::F1),
            "f2" => Some(Oracle::F2),
            "f3" => Some(Oracle::F3),
            "f4" => Some(Oracle::F4),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Oracle::F1 => "f1",
            Oracle::F2 => "f2",
            Oracle::F3 => "f3",
            Oracle::F4 => "f4",
        }
    }

    /// Pulse-sequence text of the oracle body.
    pub fn preset(&self) -> &'static str {
        match self {
            Oracle::F1 => "tau/2 - X(B) X(B) - tau/2 - X(B) X(B)",
            Oracle::F2 => "tau/2 - X(B) X(B) - tau/2",
            Oracle::F3 => "Y(B) - tau - Ybar(B) X(B) - Ybar(A) Xbar(A) Y(A)",
            Oracle::F4 => "Y(B) - tau - Ybar(B) Xbar(B) - Ybar(A) Xbar(A) Y(A)",
        }
    }

    /// True for f1/f2 (constant functions).
    pub fn is_constant(&self) -> bool {
        matches!(self, Oracle::F1 | Oracle::F2)
    }

    pub fn program<T: Real>(&self) -> PulseProgram<T> {
        parse(self.preset()).expect("preset strings are grammar-valid")
    }

    pub const ALL: [Oracle; 4] = [Oracle::F1, Oracle::F2, Oracle::F3, Oracle::F4];
}

fn axis_phase<T: Real>(name: &str) -> Option<T> {
    let fp2 = T::FRAC_PI_2();
    match name {
        "X" => Some(T::zero()),
        "Y" => Some(fp2),
        "Xbar" => Some(T::PI()),
        "Ybar" => Some(-fp2),
        _ => None,
    }
}

fn parse_err(offset: usize, message: impl Into<String>) -> SpinSimError {
    SpinSimError::Parse {
        offset,
        message: message.into(),
    }
}

fn parse_token<T: Real>(tok: &str, offset: usize) -> Result<PulseEvent<T>> {
    if tok == "tau" {
        return Ok(PulseEvent::Delay(Delay::Tau));
    }
    if tok == "tau/2" {
        return Ok(PulseEvent::Delay(Delay::HalfTau));
    }
    if let Some(open) = tok.find('(') {
        let name = &tok[..open];
        let phase = axis_phase::<T>(name)
            .ok_or_else(|| parse_err(offset, format!("unknown axis name `{name}`")))?;
        if !tok.ends_with(')') {
            return Err(parse_err(offset + tok.len(), "expected `)`"));
        }
        let spin = &tok[open + 1..tok.len() - 1];
        if spin.is_empty() || !spin.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(parse_err(offset + open + 1, format!("bad spin label `{spin}`")));
        }
        return Ok(PulseEvent::Pulse {
            spin: spin.to_string(),
            phase,
            flip: T::FRAC_PI_2(),
        });
    }
    if tok.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        let unit_at = tok
            .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || c == '+'))
            .unwrap_or(tok.len());
        let (num, unit) = tok.split_at(unit_at);
        let value: f64 = num
            .parse()
            .map_err(|_| parse_err(offset, format!("malformed duration `{tok}`")))?;
        let scale = match unit {
            "s" => 1.0,
            "ms" => 1e-3,
            "us" => 1e-6,
            _ => return Err(parse_err(offset + unit_at, format!("unknown unit `{unit}`"))),
        };
        let seconds = value * scale;
        if seconds < 0.0 {
            return Err(parse_err(offset, "negative delay"));
        }
        return Ok(PulseEvent::Delay(Delay::Literal(T::of(seconds))));
    }
    Err(parse_err(offset, format!("unknown token `{tok}`")))
}

/// Parse pulse-sequence text into its IR. Character offsets in errors are
/// byte offsets into `text`.
pub fn parse<T: Real>(text: &str) -> Result<PulseProgram<T>> {
    parse_with_labels(text, None)
}

/// Like [`parse`] but validates spin labels against a system up front, so
/// unknown spins are reported as parse errors with their offset.
pub fn parse_for_system<T: Real>(text: &str, system: &SpinSystem<T>) -> Result<PulseProgram<T>> {
    let labels: Vec<&str> = system.spins().iter().map(|s| s.label.as_str()).collect();
    parse_with_labels(text, Some(&labels))
}

fn parse_with_labels<T: Real>(text: &str, labels: Option<&[&str]>) -> Result<PulseProgram<T>> {
    let mut groups: Vec<Vec<PulseEvent<T>>> = Vec::new();
    let mut current: Vec<PulseEvent<T>> = Vec::new();
    let mut saw_any = false;
    let mut group_open = false;

    let mut pos = 0;
    for raw_line in text.split_inclusive('\n') {
        let line_start = pos;
        pos += raw_line.len();
        let line = raw_line.split('#').next().unwrap_or("");
        let mut offset = 0;
        for tok in line.split_whitespace() {
            let tok_off = line_start + line[offset..].find(tok).map(|p| p + offset).unwrap_or(offset);
            offset = tok_off - line_start + tok.len();
            saw_any = true;
            if tok == "-" {
                if !group_open {
                    return Err(parse_err(tok_off, "empty group before `-`"));
                }
                groups.push(std::mem::take(&mut current));
                group_open = false;
                continue;
            }
            let ev = parse_token::<T>(tok, tok_off)?;
            if let (PulseEvent::Pulse { spin, .. }, Some(labels)) = (&ev, labels) {
                if !labels.contains(&spin.as_str()) {
                    return Err(parse_err(tok_off, format!("unknown spin `{spin}`")));
                }
            }
            current.push(ev);
            group_open = true;
        }
    }
    if saw_any && !group_open {
        return Err(parse_err(text.len(), "trailing `-` with no group"));
    }
    if group_open {
        groups.push(current);
    }
    Ok(PulseProgram {
        groups,
        tau_s: None,
    })
}

impl<T: Real> PulseProgram<T> {
    pub fn empty() -> Self {
        Self {
            groups: Vec::new(),
            tau_s: None,
        }
    }

    pub fn events(&self) -> impl Iterator<Item = &PulseEvent<T>> {
        self.groups.iter().flatten()
    }

    pub fn n_pulses(&self) -> usize {
        self.events()
            .filter(|e| matches!(e, PulseEvent::Pulse { .. }))
            .count()
    }

    /// Concatenate two programs in temporal order (self first).
    pub fn concat(&self, other: &Self) -> Self {
        let mut groups = self.groups.clone();
        groups.extend(other.groups.iter().cloned());
        Self {
            groups,
            tau_s: self.tau_s.or(other.tau_s),
        }
    }

    fn resolve_tau(&self, system: &SpinSystem<T>) -> Result<Option<T>> {
        if let Some(t) = self.tau_s {
            return Ok(Some(t));
        }
        let symbolic = self
            .events()
            .any(|e| matches!(e, PulseEvent::Delay(Delay::Tau | Delay::HalfTau)));
        if !symbolic {
            return Ok(None);
        }
        match system.primary_j() {
            Some(j) if j != T::zero() => Ok(Some((T::of(2.0) * j.abs()).recip())),
            _ => Err(SpinSimError::UnresolvedTau),
        }
    }

    fn delay_seconds(d: &Delay<T>, tau: Option<T>) -> Result<T> {
        match d {
            Delay::Literal(s) => Ok(*s),
            Delay::Tau => tau.ok_or(SpinSimError::UnresolvedTau),
            Delay::HalfTau => tau
                .map(|t| t * T::of(0.5))
                .ok_or(SpinSimError::UnresolvedTau),
        }
    }

    /// Total wall-clock duration in seconds: the sum of resolved delays.
    /// With `pulse_width` set, each ideal pulse additionally contributes that
    /// finite width (noise accounting mode).
    pub fn duration(&self, system: &SpinSystem<T>, pulse_width: Option<T>) -> Result<T> {
        let tau = self.resolve_tau(system)?;
        let mut total = T::zero();
        for ev in self.events() {
            match ev {
                PulseEvent::Delay(d) => total += Self::delay_seconds(d, tau)?,
                PulseEvent::Pulse { .. } => {
                    if let Some(w) = pulse_width {
                        total += w;
                    }
                }
            }
        }
        Ok(total)
    }

    /// Compile into a single propagator: the product of event propagators in
    /// temporal order (leftmost written event acts first on the state).
    pub fn compile(&self, system: &SpinSystem<T>) -> Result<OperatorMatrix<T>> {
        self.compile_scaled(system, T::one())
    }

    /// Compile with every flip angle multiplied by `flip_scale` (RF amplitude
    /// miscalibration model).
    pub fn compile_scaled(&self, system: &SpinSystem<T>, flip_scale: T) -> Result<OperatorMatrix<T>> {
        let tau = self.resolve_tau(system)?;
        let h = hamiltonian(system);
        let mut u = OperatorMatrix::unitary(crate::linalg::CMatrix::identity(system.dim()))
            .expect("identity is unitary");
        for ev in self.events() {
            let step = match ev {
                PulseEvent::Delay(d) => free_propagator(&h, Self::delay_seconds(d, tau)?)?,
                PulseEvent::Pulse { spin, phase, flip } => {
                    rf_rotation(system, spin, *phase, *flip * flip_scale)?
                }
            };
            u = step.compose(&u);
        }
        Ok(u)
    }

    /// Render back to pulse-sequence text. Pulses with phases or flip angles
    /// outside the axis-name grammar cannot be rendered and yield an error.
    pub fn render(&self) -> Result<String> {
        let mut parts: Vec<String> = Vec::new();
        for group in &self.groups {
            let mut toks: Vec<String> = Vec::new();
            for ev in group {
                match ev {
                    PulseEvent::Delay(Delay::Tau) => toks.push("tau".into()),
                    PulseEvent::Delay(Delay::HalfTau) => toks.push("tau/2".into()),
                    PulseEvent::Delay(Delay::Literal(s)) => {
                        // seconds with Rust's shortest-round-trip float
                        // formatting, so parse(render(p)) == p exactly
                        toks.push(format!("{}s", s.to_f64().unwrap()));
                    }
                    PulseEvent::Pulse { spin, phase, flip } => {
                        if (*flip - T::FRAC_PI_2()).abs() > T::of(1e-12) {
                            return Err(SpinSimError::InvalidConfig(
                                "only pi/2 pulses are renderable".into(),
                            ));
                        }
                        let fp2 = T::FRAC_PI_2();
                        let name = if *phase == T::zero() {
                            "X"
                        } else if *phase == fp2 {
                            "Y"
                        } else if *phase == T::PI() {
                            "Xbar"
                        } else if *phase == -fp2 {
                            "Ybar"
                        } else {
                            return Err(SpinSimError::InvalidConfig(
                                "pulse phase not on a named axis".into(),
                            ));
                        };
                        toks.push(format!("{name}({spin})"));
                    }
                }
            }
            parts.push(toks.join(" "));
        }
        Ok(parts.join(" - "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{phase_aligned_distance, CMatrix};
    use crate::spin::SpinSystem;
    use num_complex::Complex;

    type P = PulseProgram<f64>;

    fn sys() -> SpinSystem<f64> {
        SpinSystem::chloroform()
    }

    #[test]
    fn parse_f1_structure() {
        let p: P = parse("tau/2 - X(B) X(B) - tau/2 - X(B) X(B)").unwrap();
        assert_eq!(p.groups.len(), 4);
        assert_eq!(p.groups[0], vec![PulseEvent::Delay(Delay::HalfTau)]);
        assert_eq!(p.groups[1].len(), 2);
        assert!(matches!(&p.groups[1][0], PulseEvent::Pulse { spin, .. } if spin == "B"));
    }

    #[test]
    fn parse_f3_structure() {
        let p: P = parse("Y(B) - tau - Ybar(B) X(B) - Ybar(A) Xbar(A) Y(A)").unwrap();
        assert_eq!(p.groups.len(), 4);
        assert_eq!(p.n_pulses(), 6);
        assert!(matches!(&p.groups[3][1], PulseEvent::Pulse { phase, .. } if *phase == std::f64::consts::PI));
    }

    #[test]
    fn parse_empty_program() {
        let p: P = parse("").unwrap();
        assert!(p.groups.is_empty());
        let u = p.compile(&sys()).unwrap();
        assert!(u.mat().sub(&CMatrix::identity(4)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn parse_literal_delays_and_comments() {
        let p: P = parse("1.5ms - X(A) # readout\n# full-line comment\n2us 3s").unwrap();
        assert_eq!(p.groups.len(), 2);
        let d = p.duration(&sys(), None).unwrap();
        assert!((d - (1.5e-3 + 2e-6 + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let err = parse::<f64>("tau/2 - Q(B)").unwrap_err();
        match err {
            SpinSimError::Parse { offset, .. } => assert_eq!(offset, 8),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse::<f64>("3kg").unwrap_err();
        assert!(matches!(err, SpinSimError::Parse { offset: 1, .. }));
        let err = parse_for_system::<f64>("X(C)", &sys()).unwrap_err();
        assert!(matches!(err, SpinSimError::Parse { offset: 0, .. }));
    }

    #[test]
    fn trailing_dash_rejected() {
        assert!(parse::<f64>("X(A) -").is_err());
        assert!(parse::<f64>("- X(A)").is_err());
    }

    #[test]
    fn duration_examples() {
        let f1: P = Oracle::F1.program();
        let d = f1.duration(&sys(), None).unwrap();
        assert!((d - 1.0 / (2.0 * 215.0)).abs() < 1e-12, "{d}");
        let f3: P = Oracle::F3.program();
        let d3 = f3.duration(&sys(), None).unwrap();
        assert!((d3 - 1.0 / (2.0 * 215.0)).abs() < 1e-12);
        assert!((P::empty().duration(&sys(), None).unwrap()).abs() < 1e-15);
        // finite-width accounting
        let with_pulses = f1.duration(&sys(), Some(12.5e-6)).unwrap();
        assert!((with_pulses - d - 4.0 * 12.5e-6).abs() < 1e-12);
    }

    #[test]
    fn unresolved_tau_when_j_zero() {
        let s = SpinSystem::<f64>::new(
            vec![
                crate::spin::Spin { label: "A".into(), offset_hz: 0.0, t1_s: 1.0, t2_s: 1.0 },
                crate::spin::Spin { label: "B".into(), offset_hz: 0.0, t1_s: 1.0, t2_s: 1.0 },
            ],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        let f1: P = Oracle::F1.program();
        assert!(matches!(f1.compile(&s), Err(SpinSimError::UnresolvedTau)));
    }

    #[test]
    fn f1_compiles_to_identity_up_to_phase() {
        let u = Oracle::F1.program::<f64>().compile(&sys()).unwrap();
        assert!(phase_aligned_distance(u.mat(), &CMatrix::identity(4)) < 1e-9);
    }

    #[test]
    fn f2_compiles_to_b_inversion_up_to_phase() {
        let u = Oracle::F2.program::<f64>().compile(&sys()).unwrap();
        let z = Complex::new(0.0, 0.0);
        let o = Complex::new(1.0, 0.0);
        // I (x) NOT
        let not_b = CMatrix::from_rows(&[
            vec![z, o, z, z],
            vec![o, z, z, z],
            vec![z, z, z, o],
            vec![z, z, o, z],
        ]);
        assert!(phase_aligned_distance(u.mat(), &not_b) < 1e-9);
    }

    #[test]
    fn f3_compiles_to_controlled_not_up_to_phase() {
        let u = Oracle::F3.program::<f64>().compile(&sys()).unwrap();
        let z = Complex::new(0.0, 0.0);
        let o = Complex::new(1.0, 0.0);
        let cnot = CMatrix::from_rows(&[
            vec![o, z, z, z],
            vec![z, o, z, z],
            vec![z, z, z, o],
            vec![z, z, o, z],
        ]);
        assert!(phase_aligned_distance(u.mat(), &cnot) < 1e-9);
    }

    #[test]
    fn f4_is_f3_followed_by_b_inversion() {
        let s = sys();
        let u3 = Oracle::F3.program::<f64>().compile(&s).unwrap();
        let u4 = Oracle::F4.program::<f64>().compile(&s).unwrap();
        let z = Complex::new(0.0, 0.0);
        let o = Complex::new(1.0, 0.0);
        let not_b = CMatrix::from_rows(&[
            vec![z, o, z, z],
            vec![o, z, z, z],
            vec![z, z, z, o],
            vec![z, z, o, z],
        ]);
        let composed = not_b.mul(u3.mat());
        assert!(phase_aligned_distance(u4.mat(), &composed) < 1e-9);
    }

    #[test]
    fn temporal_composition() {
        let s = sys();
        let p1: P = parse("Y(A) - tau/2").unwrap();
        let p2: P = parse("X(B) - tau/2 - Ybar(A)").unwrap();
        let u = p1.concat(&p2).compile(&s).unwrap();
        let want = p2.compile(&s).unwrap().compose(&p1.compile(&s).unwrap());
        assert!(u.mat().sub(want.mat()).frobenius_norm() < 1e-12);
    }

    mod grammar {
        use super::*;
        use proptest::prelude::*;

        fn event_strategy() -> impl Strategy<Value = PulseEvent<f64>> {
            let spin = prop_oneof![Just("A"), Just("B"), Just("C2"), Just("q17")];
            let phase = prop_oneof![
                Just(0.0),
                Just(std::f64::consts::FRAC_PI_2),
                Just(std::f64::consts::PI),
                Just(-std::f64::consts::FRAC_PI_2),
            ];
            prop_oneof![
                Just(PulseEvent::Delay(Delay::Tau)),
                Just(PulseEvent::Delay(Delay::HalfTau)),
                (1e-7..0.5f64).prop_map(|s| PulseEvent::Delay(Delay::Literal(s))),
                (spin, phase).prop_map(|(spin, phase)| PulseEvent::Pulse {
                    spin: spin.to_string(),
                    phase,
                    flip: std::f64::consts::FRAC_PI_2,
                }),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(600))]
            #[test]
            fn render_parse_round_trip(
                groups in prop::collection::vec(
                    prop::collection::vec(event_strategy(), 1..6), 1..6)
            ) {
                let p = PulseProgram { groups, tau_s: None };
                let text = p.render().unwrap();
                let again: PulseProgram<f64> = parse(&text).unwrap();
                prop_assert_eq!(p, again);
            }
        }
    }

    #[test]
    fn render_parse_round_trip_presets() {
        for o in Oracle::ALL {
            let p: P = o.program();
            let text = p.render().unwrap();
            let again: P = parse(&text).unwrap();
            assert_eq!(p, again, "{}", o.name());
        }
    }
}
