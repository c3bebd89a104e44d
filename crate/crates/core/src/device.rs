//! Device parameter records and lab-frame Hamiltonians.

use std::f64::consts::SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::drive::{DriveSignal, UniversalDriveParams};
use crate::error::{Error, Result};
use crate::operator::{boson_ops, embed, pauli, real, Matrix, Operator};
use crate::timedep::TimeDependent;

/// Matrix elements of `sin φ` and `cos φ` in the lowest qubit levels.
///
/// Two-level form: `sin φ = s σx`, `cos φ = c0 + c σz`. Three-level form:
/// `sin φ` has `s1` on 0↔1 and `s2` on 1↔2, `cos φ` is diagonal with
/// `c0 + c − 2c·n` plus `c2` on 0↔2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCoeffs {
    pub s: f64,
    pub c0: f64,
    pub c: f64,
    pub s1: f64,
    pub s2: f64,
    pub c2: f64,
    pub q2: f64,
}

impl PhaseCoeffs {
    /// Harmonic defaults for the higher elements: `s1 = s`, `s2 = √2 s`, `q2 = √2`.
    pub fn two_level(s: f64, c0: f64, c: f64) -> Self {
        Self {
            s,
            c0,
            c,
            s1: s,
            s2: SQRT_2 * s,
            c2: 0.0,
            q2: SQRT_2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.s, self.c0, self.c, self.s1, self.s2, self.c2, self.q2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("phase coefficients must be finite".into()));
        }
        if !(self.s > 0.0 && self.s1 > 0.0 && self.s2 > 0.0) {
            return Err(Error::InvalidParameter("s, s1, s2 must be positive".into()));
        }
        if !(1.0..=SQRT_2 * 1.2).contains(&self.q2) {
            return Err(Error::InvalidParameter(format!(
                "q2 = {} outside [1, 1.2·√2]",
                self.q2
            )));
        }
        Ok(())
    }
}

impl Default for PhaseCoeffs {
    fn default() -> Self {
        Self::two_level(1.0, 0.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitSpec {
    pub omega: f64,
    pub levels: usize,
    /// Two-photon nonlinearity: `E(2) = 2ω − α`.
    #[serde(default)]
    pub alpha2: f64,
    /// Three-photon nonlinearity: `E(3) = 3ω − β`.
    #[serde(default)]
    pub beta3: f64,
    #[serde(default)]
    pub phase_coeffs: PhaseCoeffs,
}

impl QubitSpec {
    pub fn two_level(omega: f64, phase_coeffs: PhaseCoeffs) -> Self {
        Self {
            omega,
            levels: 2,
            alpha2: 0.0,
            beta3: 0.0,
            phase_coeffs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=6).contains(&self.levels) {
            return Err(Error::InvalidParameter(format!(
                "levels = {} outside [2, 6]",
                self.levels
            )));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega = {} must be positive", self.omega)));
        }
        self.phase_coeffs.validate()
    }

    /// Level energies. Beyond the third level the series continues as
    /// `nω − α·C(n,2) − (β − 3α)·C(n,3)`, which reproduces both given
    /// nonlinearities.
    pub fn energies(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|n| level_energy(self.omega, self.alpha2, self.beta3, n))
            .collect()
    }

    /// Bare qubit Hamiltonian: `−(ω/2)σz` for two levels, level energies otherwise.
    pub fn hamiltonian(&self) -> Operator {
        if self.levels == 2 {
            pauli::z() * (-self.omega / 2.0)
        } else {
            Operator::diagonal(&self.energies(), &[self.levels]).expect("valid diagonal")
        }
    }
}

pub(crate) fn level_energy(omega: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    let nf = n as f64;
    let c2 = nf * (nf - 1.0) / 2.0;
    let c3 = nf * (nf - 1.0) * (nf - 2.0) / 6.0;
    nf * omega - alpha * c2 - (beta - 3.0 * alpha) * c3
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSpec {
    pub omega_r: f64,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionCouplerSpec {
    pub alpha_ej: f64,
    pub signal: DriveSignal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacitiveCouplerSpec {
    pub g: f64,
}

/// `(sin φ, cos φ)` on a single qubit of two or three levels.
pub fn phase_operators(q: &QubitSpec) -> Result<(Operator, Operator)> {
    let p = &q.phase_coeffs;
    match q.levels {
        2 => {
            let sin = pauli::x() * p.s;
            let cos = Operator::diagonal(&[p.c0 + p.c, p.c0 - p.c], &[2])?;
            Ok((sin, cos))
        }
        3 => {
            let mut sin = Matrix::zeros(3, 3);
            sin[(0, 1)] = real(p.s1);
            sin[(1, 0)] = real(p.s1);
            sin[(1, 2)] = real(p.s2);
            sin[(2, 1)] = real(p.s2);
            // two-level σz convention rewritten on the number operator:
            // c0 + cσz = (c0 + c) − 2c·n
            let mut cos = Matrix::zeros(3, 3);
            for n in 0..3 {
                cos[(n, n)] = real(p.c0 + p.c - 2.0 * p.c * n as f64);
            }
            cos[(0, 2)] = real(p.c2);
            cos[(2, 0)] = real(p.c2);
            Ok((Operator::new(sin, vec![3])?, Operator::new(cos, vec![3])?))
        }
        l => Err(Error::InvalidParameter(format!(
            "phase_operators supports 2 or 3 levels, got {l}"
        ))),
    }
}

/// Two junction-coupled qubits:
/// `H(t) = H0 − αE_J [A cos F(t) + B sin F(t)]` with
/// `A = cosφ1 cosφ2 + sinφ1 sinφ2` and `B = sinφ1 cosφ2 − cosφ1 sinφ2`.
#[derive(Clone, Debug)]
pub struct JunctionSystem {
    pub h0: Operator,
    pub cos_part: Operator,
    pub sin_part: Operator,
    pub alpha_ej: f64,
    pub signal: DriveSignal,
    dims: Vec<usize>,
}

impl JunctionSystem {
    pub fn new(q1: &QubitSpec, q2: &QubitSpec, c: &JunctionCouplerSpec) -> Result<Self> {
        q1.validate()?;
        q2.validate()?;
        let (s1, c1) = phase_operators(q1)?;
        let (s2, c2) = phase_operators(q2)?;
        let h0 = embed(&q1.hamiltonian(), 0, &[q1.levels, q2.levels])?
            + embed(&q2.hamiltonian(), 1, &[q1.levels, q2.levels])?;
        Self::from_operators(h0, [&s1, &c1], [&s2, &c2], c.alpha_ej, c.signal.clone())
    }

    /// Build from single-qubit `[sin φ, cos φ]` pairs and a static `h0` on
    /// the product space.
    pub fn from_operators(
        h0: Operator,
        phase1: [&Operator; 2],
        phase2: [&Operator; 2],
        alpha_ej: f64,
        signal: DriveSignal,
    ) -> Result<Self> {
        let dims = vec![phase1[0].dim(), phase2[0].dim()];
        if h0.dims() != dims.as_slice() {
            return Err(Error::InvalidDims(format!(
                "h0 dims {:?} do not match qubit dims {dims:?}",
                h0.dims()
            )));
        }
        let sin1 = embed(phase1[0], 0, &dims)?;
        let cos1 = embed(phase1[1], 0, &dims)?;
        let sin2 = embed(phase2[0], 1, &dims)?;
        let cos2 = embed(phase2[1], 1, &dims)?;
        let cos_part = &(&cos1 * &cos2) + &(&sin1 * &sin2);
        let sin_part = &(&sin1 * &cos2) - &(&cos1 * &sin2);
        Ok(Self {
            h0,
            cos_part,
            sin_part,
            alpha_ej,
            signal,
            dims,
        })
    }

    pub fn with_signal(&self, signal: DriveSignal) -> Self {
        Self {
            signal,
            ..self.clone()
        }
    }

    /// The interaction alone at flux `f`.
    pub fn interaction(&self, f: f64) -> Operator {
        let m = self.cos_part.data() * real(-self.alpha_ej * f.cos())
            + self.sin_part.data() * real(-self.alpha_ej * f.sin());
        Operator::new(m, self.dims.clone()).expect("dims fixed at construction")
    }
}

impl TimeDependent for JunctionSystem {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn matrix_at(&self, t: f64) -> Matrix {
        let f = self.signal.evaluate(t);
        let (a, b) = (-self.alpha_ej * f.cos(), -self.alpha_ej * f.sin());
        let mut m = self.h0.data().clone();
        m.zip_zip_apply(self.cos_part.data(), self.sin_part.data(), |h, x, y| {
            *h += x * a + y * b
        });
        m
    }
}

/// Lab-frame `H(t)` of two junction-coupled qubits at time `t`.
pub fn junction_hamiltonian(
    q1: &QubitSpec,
    q2: &QubitSpec,
    c: &JunctionCouplerSpec,
    t: f64,
) -> Result<Operator> {
    Ok(JunctionSystem::new(q1, q2, c)?.at(t))
}

/// Transmon (truncated to `q.levels`) capacitively coupled to a resonator,
/// dims `[q.levels, r.dim]`, with `δ = q.alpha2`.
pub fn dispersive_hamiltonian(
    q: &QubitSpec,
    r: &ResonatorSpec,
    c: &CapacitiveCouplerSpec,
) -> Result<Operator> {
    let dims = [q.levels, r.dim];
    let t = boson_ops(q.levels)?;
    let m = boson_ops(r.dim)?;
    let at = embed(&t.a, 0, &dims)?;
    let at_dag = embed(&t.adag, 0, &dims)?;
    let nt = embed(&t.n, 0, &dims)?;
    let ar = embed(&m.a, 1, &dims)?;
    let ar_dag = embed(&m.adag, 1, &dims)?;
    let nr = embed(&m.n, 1, &dims)?;
    let kerr = &(&at_dag * &at_dag) * &(&at * &at);
    let hop = &(&at_dag * &ar) + &(&ar_dag * &at);
    Ok(nt * q.omega + nr * r.omega_r - kerr * (q.alpha2 / 2.0) + hop * c.g)
}

/// Lowest levels of a Cooper-pair box `4E_C n² − E_J cos φ` and its phase
/// matrix elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmonSolution {
    /// Energies relative to the ground state.
    pub energies: Vec<f64>,
    pub coeffs: PhaseCoeffs,
    /// `2E1 − E2` in the `E(2) = 2ω − α` convention.
    pub alpha: f64,
    pub charge_cutoff: usize,
}

const CHARGE_CUTOFF: usize = 30;
const CUTOFF_TOL: f64 = 1e-8;

struct ChargeBasisResult {
    energies: Vec<f64>,
    sin: DMatrix<f64>,
    cos: DMatrix<f64>,
    charge: DMatrix<f64>,
}

fn solve_charge_basis(ej: f64, ec: f64, cutoff: usize, keep: usize) -> ChargeBasisResult {
    let size = 2 * cutoff + 1;
    let mut h = DMatrix::<f64>::zeros(size, size);
    let mut n_op = DMatrix::<f64>::zeros(size, size);
    let mut cos = DMatrix::<f64>::zeros(size, size);
    // e^{iφ} shifts the charge by one; sin φ is anti-symmetric imaginary, so
    // store its imaginary part here and multiply by i on use.
    let mut sin_im = DMatrix::<f64>::zeros(size, size);
    for k in 0..size {
        let n = k as f64 - cutoff as f64;
        h[(k, k)] = 4.0 * ec * n * n;
        n_op[(k, k)] = n;
        if k + 1 < size {
            h[(k, k + 1)] = -ej / 2.0;
            h[(k + 1, k)] = -ej / 2.0;
            cos[(k, k + 1)] = 0.5;
            cos[(k + 1, k)] = 0.5;
            // sin φ = (e^{iφ} − e^{−iφ})/2i with e^{iφ}|n⟩ = |n+1⟩
            sin_im[(k + 1, k)] = -0.5;
            sin_im[(k, k + 1)] = 0.5;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vecs: Vec<_> = order[..keep]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    let e0 = eig.eigenvalues[order[0]];
    let energies = order[..keep].iter().map(|&i| eig.eigenvalues[i] - e0).collect();
    let project = |op: &DMatrix<f64>| {
        DMatrix::from_fn(keep, keep, |r, c| vecs[r].dot(&(op * &vecs[c])))
    };
    ChargeBasisResult {
        energies,
        sin: project(&sin_im),
        cos: project(&cos),
        charge: project(&n_op),
    }
}

/// Diagonalize a transmon in the charge basis and read off its phase
/// matrix elements. The phases of the eigenstates are fixed so that
/// `⟨k+1|sin φ|k⟩` is real and positive.
pub fn diagonalize_transmon(ej: f64, ec: f64, levels: usize) -> Result<TransmonSolution> {
    if !(ej > 0.0 && ec > 0.0) {
        return Err(Error::InvalidParameter("ej and ec must be positive".into()));
    }
    if ej / ec < 10.0 {
        return Err(Error::InvalidParameter(format!(
            "ej/ec = {} below the transmon regime (>= 10)",
            ej / ec
        )));
    }
    if !(2..=6).contains(&levels) {
        return Err(Error::InvalidParameter(format!("levels = {levels} outside [2, 6]")));
    }
    let keep = levels.max(3);
    let extract = |cutoff: usize| -> (Vec<f64>, PhaseCoeffs) {
        let r = solve_charge_basis(ej, ec, cutoff, keep);
        // Real eigenvectors: sin φ elements are i·sin_im. Give state k the
        // phase needed to make ⟨k+1|sin φ|k⟩ = |sin_im(k+1,k)|; all the
        // elements used below are then real up to these signs.
        let s10 = r.sin[(1, 0)].abs();
        let s21 = r.sin[(2, 1)].abs();
        let cos00 = r.cos[(0, 0)];
        let cos11 = r.cos[(1, 1)];
        // states 0 and 2 carry phases differing by i·i·sign products; the
        // 0↔2 cos element picks up the same sign as the product of the two
        // sin elements it connects through.
        let sign = (r.sin[(1, 0)] * r.sin[(2, 1)]).signum();
        let c2 = -sign * r.cos[(2, 0)];
        let q2 = (r.charge[(2, 1)] / r.charge[(1, 0)]).abs();
        let coeffs = PhaseCoeffs {
            s: s10,
            c0: (cos00 + cos11) / 2.0,
            c: (cos00 - cos11) / 2.0,
            s1: s10,
            s2: s21,
            c2,
            q2,
        };
        (r.energies, coeffs)
    };
    let (energies, coeffs) = extract(CHARGE_CUTOFF);
    let (energies2, coeffs2) = extract(2 * CHARGE_CUTOFF);
    let diff = [
        coeffs.s - coeffs2.s,
        coeffs.c0 - coeffs2.c0,
        coeffs.c - coeffs2.c,
        coeffs.s2 - coeffs2.s2,
        coeffs.c2 - coeffs2.c2,
        coeffs.q2 - coeffs2.q2,
    ]
    .iter()
    .chain(energies.iter().zip(&energies2).map(|(a, b)| a - b).collect::<Vec<_>>().iter())
    .fold(0.0_f64, |acc, d| acc.max(d.abs()));
    let scale = energies.last().copied().unwrap_or(1.0).max(1.0);
    if diff > CUTOFF_TOL * scale {
        return Err(Error::NonConvergence(format!(
            "charge cutoff {CHARGE_CUTOFF} vs {}: change {diff:e}",
            2 * CHARGE_CUTOFF
        )));
    }
    let alpha = 2.0 * energies[1] - energies[2];
    Ok(TransmonSolution {
        energies: energies[..levels].to_vec(),
        coeffs,
        alpha,
        charge_cutoff: CHARGE_CUTOFF,
    })
}

/// Phase coefficients of a transmon with the given junction and charging energies.
pub fn derive_phase_coefficients(ej: f64, ec: f64, levels: usize) -> Result<PhaseCoeffs> {
    Ok(diagonalize_transmon(ej, ec, levels)?.coeffs)
}

/// An effective matrix element that must stay small against every gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleWarning {
    pub element: String,
    pub value: f64,
    pub gap: String,
    pub gap_value: f64,
}

impl fmt::Display for ScaleWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {:e} exceeds 0.1 x {} = {:e}",
            self.element, self.value, self.gap, self.gap_value
        )
    }
}

/// Fraction of the smallest gap above which an element is flagged.
pub const SCALE_RATIO: f64 = 0.1;

/// One warning for every element whose magnitude exceeds
/// [`SCALE_RATIO`] times the smallest gap.
pub fn validate_scales(elements: &[(String, f64)], gaps: &[(String, f64)]) -> Vec<ScaleWarning> {
    let Some((gap_name, gap)) = gaps
        .iter()
        .map(|(n, g)| (n, g.abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
    else {
        return Vec::new();
    };
    elements
        .iter()
        .filter(|(_, v)| v.abs() > SCALE_RATIO * gap)
        .map(|(name, v)| ScaleWarning {
            element: name.clone(),
            value: v.abs(),
            gap: gap_name.clone(),
            gap_value: gap,
        })
        .collect()
}

/// Scale check for the universal coupler: `αE_J` and `αE_J·f` for each
/// amplitude against `ω1/2`, `ω2/2`, `|ω1−ω2|` and `ω1+ω2`.
pub fn universal_scale_warnings(
    p: &UniversalDriveParams,
    alpha_ej: f64,
    omega1: f64,
    omega2: f64,
) -> Vec<ScaleWarning> {
    let mut elements = vec![("alpha_ej".to_string(), alpha_ej)];
    let amps = [p.f_zz, p.f_xy0, p.f_xy2, p.f_xz, p.f_zx];
    for (name, f) in UniversalDriveParams::NAMES.iter().zip(amps) {
        elements.push((format!("alpha_ej*{name}"), alpha_ej * f));
    }
    let gaps = vec![
        ("omega1/2".to_string(), omega1 / 2.0),
        ("omega2/2".to_string(), omega2 / 2.0),
        ("|omega1-omega2|".to_string(), (omega1 - omega2).abs()),
        ("omega1+omega2".to_string(), omega1 + omega2),
    ];
    validate_scales(&elements, &gaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::universal_signal;
    use crate::operator::{kron, pauli};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn qubit(omega: f64, p: PhaseCoeffs) -> QubitSpec {
        QubitSpec::two_level(omega, p)
    }

    #[test]
    fn two_level_phase_operators() {
        let (sin, cos) = phase_operators(&qubit(1.0, PhaseCoeffs::two_level(1.0, 0.5, 0.2))).unwrap();
        assert_eq!(sin, pauli::x());
        assert_abs_diff_eq!(cos.get(0, 0).re, 0.7);
        assert_abs_diff_eq!(cos.get(1, 1).re, 0.3);
    }

    #[test]
    fn three_level_sin_is_harmonic_position() {
        let q = QubitSpec {
            levels: 3,
            ..qubit(1.0, PhaseCoeffs::two_level(1.0, 0.5, 0.2))
        };
        let (sin, cos) = phase_operators(&q).unwrap();
        let b = boson_ops(3).unwrap();
        assert!(sin.max_abs_diff(&(&b.a + &b.adag)) < 1e-15);
        // first two diagonal entries agree with the two-level convention
        assert_abs_diff_eq!(cos.get(0, 0).re, 0.7);
        assert_abs_diff_eq!(cos.get(1, 1).re, 0.3);
        assert!(phase_operators(&QubitSpec { levels: 4, ..q }).is_err());
    }

    #[test]
    fn quarter_flux_leaves_only_sin_part() {
        let p = PhaseCoeffs::two_level(1.0, 0.3, 0.4);
        let (q1, q2) = (qubit(1.0, p), qubit(0.75, p));
        let c = JunctionCouplerSpec {
            alpha_ej: 0.02,
            signal: DriveSignal::constant(PI / 2.0, 1.0),
        };
        let sys = JunctionSystem::new(&q1, &q2, &c).unwrap();
        let (s1, c1) = phase_operators(&q1).unwrap();
        let (s2, c2) = phase_operators(&q2).unwrap();
        let expected = (&kron(&s1, &c2) - &kron(&c1, &s2)) * -0.02;
        let h_int = &sys.at(3.0) - &sys.h0;
        assert!(h_int.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn zero_flux_xx_form() {
        let p = PhaseCoeffs::two_level(1.0, 1.0, 0.0);
        let c = JunctionCouplerSpec {
            alpha_ej: 0.05,
            signal: DriveSignal::constant(0.0, 1.0),
        };
        let h = junction_hamiltonian(&qubit(1.0, p), &qubit(0.75, p), &c, 0.0).unwrap();
        let sys = JunctionSystem::new(&qubit(1.0, p), &qubit(0.75, p), &c).unwrap();
        let expected = (&Operator::identity(&[2, 2]) + &kron(&pauli::x(), &pauli::x())) * -0.05;
        assert!((&h - &sys.h0).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn flux_periodicity() {
        let p = PhaseCoeffs::two_level(0.9, 0.2, 0.7);
        let d = UniversalDriveParams {
            f_zz: 0.02,
            f_xy0: 0.05,
            f_xz: 0.03,
            chi1: 0.4,
            ..Default::default()
        };
        let sig = universal_signal(&d, 1.0, 0.75).unwrap();
        let c = JunctionCouplerSpec { alpha_ej: 0.02, signal: sig.clone() };
        let shifted = JunctionCouplerSpec {
            alpha_ej: 0.02,
            signal: sig.with_offset(sig.offset + 2.0 * PI),
        };
        for t in [0.0, 1.7, 44.0] {
            let a = junction_hamiltonian(&qubit(1.0, p), &qubit(0.75, p), &c, t).unwrap();
            let b = junction_hamiltonian(&qubit(1.0, p), &qubit(0.75, p), &shifted, t).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-14);
        }
    }

    #[test]
    fn dispersive_spectrum_uncoupled() {
        let q = QubitSpec { omega: 1.0, levels: 3, alpha2: 0.2, beta3: 0.0, phase_coeffs: PhaseCoeffs::default() };
        let r = ResonatorSpec { omega_r: 1.5, dim: 5 };
        let h = dispersive_hamiltonian(&q, &r, &CapacitiveCouplerSpec { g: 0.0 }).unwrap();
        assert!(h.is_diagonal());
        for nt in 0..3_usize {
            for nr in 0..5 {
                let e = nt as f64 * 1.0 - 0.2 * (nt * nt.saturating_sub(1)) as f64 / 2.0 + nr as f64 * 1.5;
                assert_abs_diff_eq!(h.get(nt * 5 + nr, nt * 5 + nr).re, e, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn dispersive_hopping_element_and_number_conservation() {
        let q = QubitSpec { omega: 1.0, levels: 3, alpha2: 0.2, beta3: 0.0, phase_coeffs: PhaseCoeffs::default() };
        let r = ResonatorSpec { omega_r: 1.5, dim: 6 };
        let h = dispersive_hamiltonian(&q, &r, &CapacitiveCouplerSpec { g: 0.05 }).unwrap();
        for n in 1..6 {
            // ⟨1,n−1|H|0,n⟩
            assert_abs_diff_eq!(h.get(6 + n - 1, n).re, 0.05 * (n as f64).sqrt(), epsilon = 1e-15);
        }
        let dims = [3, 6];
        let total = &embed(&boson_ops(3).unwrap().n, 0, &dims).unwrap()
            + &embed(&boson_ops(6).unwrap().n, 1, &dims).unwrap();
        assert!(h.commutator(&total).max_norm() < 1e-14);
    }

    #[test]
    fn dispersive_linear_limit_matches_normal_modes() {
        // δ = 0: two coupled oscillators with normal modes ω± = ω̄ ± √(Δ²/4 + g²)
        let (wt, wr, g) = (1.0, 1.3, 0.05);
        let q = QubitSpec { omega: wt, levels: 4, alpha2: 0.0, beta3: 0.0, phase_coeffs: PhaseCoeffs::default() };
        let r = ResonatorSpec { omega_r: wr, dim: 4 };
        let h = dispersive_hamiltonian(&q, &r, &CapacitiveCouplerSpec { g }).unwrap();
        let eig = SymmetricEigen::new(h.data().clone());
        let mut e: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        let split = ((wr - wt) * (wr - wt) / 4.0 + g * g).sqrt();
        let (wm, wp) = ((wt + wr) / 2.0 - split, (wt + wr) / 2.0 + split);
        assert_abs_diff_eq!(e[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], wm, epsilon = 1e-12);
        assert_abs_diff_eq!(e[2], wp, epsilon = 1e-12);
        // two-excitation manifold is complete for both truncations
        assert_abs_diff_eq!(e[3], 2.0 * wm, epsilon = 1e-12);
        assert_abs_diff_eq!(e[4], wm + wp, epsilon = 1e-12);
        assert_abs_diff_eq!(e[5], 2.0 * wp, epsilon = 1e-12);
    }

    #[test]
    fn transmon_bose_enhancement() {
        // q2 → √2 from below as the nonlinearity vanishes
        let mut last = f64::INFINITY;
        for ratio in [50.0, 100.0, 200.0, 400.0, 1600.0] {
            let sol = diagonalize_transmon(ratio, 1.0, 3).unwrap();
            sol.coeffs.validate().unwrap();
            assert!(sol.coeffs.c > 0.0);
            let dev = 1.0 - sol.coeffs.q2 / SQRT_2;
            assert!(dev > 0.0 && dev < last, "ej/ec = {ratio}: q2 = {}", sol.coeffs.q2);
            last = dev;
        }
        // about 2.05% at ej/ec = 100
        let q2 = diagonalize_transmon(100.0, 1.0, 3).unwrap().coeffs.q2;
        assert!((q2 / SQRT_2 - 1.0).abs() < 0.021, "q2 = {q2}");
        assert!(last < 0.01);
    }

    #[test]
    fn transmon_anharmonicity_near_ec() {
        let sol = diagonalize_transmon(50.0, 1.0, 3).unwrap();
        assert!((sol.alpha - 1.0).abs() < 0.15, "alpha = {}", sol.alpha);
    }

    #[test]
    fn transmon_parity() {
        let r = solve_charge_basis(40.0, 1.0, 30, 3);
        assert!(r.sin[(0, 0)].abs() < 1e-12);
        assert!(r.sin[(1, 1)].abs() < 1e-12);
        assert!(r.cos[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn transmon_matches_harmonic_estimates() {
        // deep transmon: ⟨0|cos φ|0⟩ ≈ 1 − φ_zpf²/2 with φ_zpf² = √(2E_C/E_J)
        let (ej, ec) = (400.0, 1.0);
        let sol = diagonalize_transmon(ej, ec, 3).unwrap();
        let zpf2 = (2.0 * ec / ej).sqrt();
        // sin φ ≈ φ − φ³/6 with ⟨1|φ³|0⟩ = 3φ_zpf³
        let s_est = zpf2.sqrt() * (1.0 - zpf2 / 2.0);
        assert!((sol.coeffs.s - s_est).abs() < 0.02 * s_est, "s = {}", sol.coeffs.s);
        // ⟨n+1|(a+a†)³|n⟩ = 3(n+1)^{3/2} gives s2/s1 ≈ √2(1 − φ_zpf²/2)
        let ratio_est = SQRT_2 * (1.0 - zpf2 / 2.0);
        assert!((sol.coeffs.s2 / sol.coeffs.s - ratio_est).abs() < 0.015 * ratio_est);
        assert!(((sol.coeffs.c0 + sol.coeffs.c) - (1.0 - zpf2 / 2.0)).abs() < 0.01);
        assert!(diagonalize_transmon(5.0, 1.0, 3).is_err());
    }

    #[test]
    fn scale_warnings() {
        let small = UniversalDriveParams { f_xy0: 0.05, ..Default::default() };
        assert!(universal_scale_warnings(&small, 0.02, 1.0, 0.75).is_empty());
        let w = validate_scales(
            &[("alpha_ej*f".into(), 0.2)],
            &[("|omega1-omega2|".into(), 0.25), ("omega1+omega2".into(), 1.75)],
        );
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].gap, "|omega1-omega2|");
    }

    #[test]
    fn scale_warnings_monotone_in_amplitude() {
        let mut last = 0;
        for i in 0..20 {
            let f = 0.3 * i as f64 / 19.0;
            let p = UniversalDriveParams { f_xy0: f, f_xz: f / 2.0, ..Default::default() };
            let n = universal_scale_warnings(&p, 0.2, 1.0, 0.75).len();
            assert!(n >= last);
            last = n;
        }
        assert!(last > 0);
    }

    #[test]
    fn level_energies() {
        let q = QubitSpec { omega: 1.0, levels: 5, alpha2: 0.1, beta3: 0.35, phase_coeffs: PhaseCoeffs::default() };
        let e = q.energies();
        assert_abs_diff_eq!(e[2], 2.0 - 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(e[3], 3.0 - 0.35, epsilon = 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn junction_hamiltonian_is_hermitian(t in 0.0f64..500.0, chi in -3.0f64..3.0) {
                let p = PhaseCoeffs::two_level(0.8, 0.1, 0.6);
                let d = UniversalDriveParams {
                    f_zz: 0.01, f_xy0: 0.03, f_xy2: 0.02, f_xz: 0.04, f_zx: 0.05,
                    chi1: chi, chi2: 0.3, psi1: 1.0, psi2: -0.5,
                };
                let c = JunctionCouplerSpec { alpha_ej: 0.02, signal: universal_signal(&d, 1.0, 0.75).unwrap() };
                let h = junction_hamiltonian(&qubit(1.0, p), &qubit(0.75, p), &c, t).unwrap();
                prop_assert!(h.hermiticity_error() <= 1e-12);
            }
        }
    }
}
