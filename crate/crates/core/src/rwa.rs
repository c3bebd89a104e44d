//! Rotating frames, time averaging and Floquet effective Hamiltonians.

use std::f64::consts::PI;

use nalgebra::{DVector, SymmetricEigen};

use crate::device::{JunctionCouplerSpec, JunctionSystem, PhaseCoeffs, QubitSpec};
use crate::drive::{commensurate_period, universal_signal, UniversalDriveParams};
use crate::dynamics::{process_fidelity, propagate, propagate_periodic, PropagateOptions};
use crate::error::{Error, Result};
use crate::operator::{
    embed, matrix_exp, max_abs, pauli, pauli_decompose, real, Matrix, Operator, Pauli, PauliTable,
    C64, HERMITIAN_TOL,
};
use crate::timedep::TimeDependent;

/// Largest commutator norm tolerated between frame generators.
pub const COMMUTE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
enum FrameBasis {
    Diagonal(Vec<f64>),
    Eigen { vectors: Matrix, values: Vec<f64> },
}

/// `U(t) = exp(i Σ_j ω_j G_j t)` for commuting Hermitian generators.
#[derive(Clone, Debug)]
pub struct RotatingFrame {
    generators: Vec<(Operator, f64)>,
    basis: FrameBasis,
    generator: Operator,
}

impl RotatingFrame {
    pub fn new(generators: Vec<(Operator, f64)>) -> Result<Self> {
        let Some((first, _)) = generators.first() else {
            return Err(Error::InvalidParameter("a frame needs at least one generator".into()));
        };
        let dims = first.dims().to_vec();
        for (g, w) in &generators {
            if g.dims() != dims.as_slice() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: g.dim(),
                });
            }
            if !w.is_finite() {
                return Err(Error::NonFinite);
            }
            g.ensure_hermitian()?;
        }
        for (i, (gi, _)) in generators.iter().enumerate() {
            for (gj, _) in &generators[i + 1..] {
                let c = gi.commutator(gj).max_norm();
                if c > COMMUTE_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "frame generators do not commute (‖[G_i, G_j]‖ = {c:e})"
                    )));
                }
            }
        }
        let mut k = Operator::zeros(&dims);
        for (g, w) in &generators {
            k += &(g * *w);
        }
        let basis = if k.is_diagonal() {
            FrameBasis::Diagonal(k.diagonal_values().iter().map(|z| z.re).collect())
        } else {
            let herm = k.hermitian_part().into_data();
            let eig = SymmetricEigen::new(herm);
            FrameBasis::Eigen {
                vectors: eig.eigenvectors,
                values: eig.eigenvalues.iter().copied().collect(),
            }
        };
        Ok(Self {
            generators,
            basis,
            generator: k,
        })
    }

    pub fn generators(&self) -> &[(Operator, f64)] {
        &self.generators
    }

    pub fn dims(&self) -> &[usize] {
        self.generator.dims()
    }

    /// `Σ_j ω_j G_j`.
    pub fn generator(&self) -> &Operator {
        &self.generator
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.generators.iter().map(|(_, w)| *w).collect()
    }

    /// Same generators, opposite frequencies.
    pub fn inverse(&self) -> Self {
        Self::new(self.generators.iter().map(|(g, w)| (g.clone(), -w)).collect())
            .expect("inverse of a valid frame is valid")
    }

    pub fn unitary(&self, t: f64) -> Operator {
        let m = match &self.basis {
            FrameBasis::Diagonal(d) => Matrix::from_diagonal(&DVector::from_iterator(
                d.len(),
                d.iter().map(|&x| C64::from_polar(1.0, x * t)),
            )),
            FrameBasis::Eigen { vectors, values } => {
                let phases = DVector::from_iterator(
                    values.len(),
                    values.iter().map(|&x| C64::from_polar(1.0, x * t)),
                );
                vectors * Matrix::from_diagonal(&phases) * vectors.adjoint()
            }
        };
        Operator::new(m, self.dims().to_vec()).expect("frame dims are consistent")
    }

    /// `U(t) H U(t)† − Σ_j ω_j G_j`.
    pub fn transform(&self, h: &Matrix, t: f64) -> Matrix {
        match &self.basis {
            FrameBasis::Diagonal(d) => {
                let n = d.len();
                let phases: Vec<C64> = d.iter().map(|&x| C64::from_polar(1.0, x * t)).collect();
                let mut m = h.clone();
                for c in 0..n {
                    let pc = phases[c].conj();
                    for r in 0..n {
                        m[(r, c)] *= phases[r] * pc;
                    }
                    m[(c, c)] -= real(d[c]);
                }
                m
            }
            FrameBasis::Eigen { .. } => {
                let u = self.unitary(t).into_data();
                &u * h * u.adjoint() - self.generator.data()
            }
        }
    }
}

/// `t ↦ U(t)H(t)U(t)† − Σ ω_j G_j`.
pub struct Rotated<H> {
    inner: H,
    frame: RotatingFrame,
}

impl<H: TimeDependent> Rotated<H> {
    pub fn inner(&self) -> &H {
        &self.inner
    }

    pub fn frame(&self) -> &RotatingFrame {
        &self.frame
    }
}

impl<H: TimeDependent> TimeDependent for Rotated<H> {
    fn dims(&self) -> &[usize] {
        self.inner.dims()
    }

    fn matrix_at(&self, t: f64) -> Matrix {
        self.frame.transform(&self.inner.matrix_at(t), t)
    }
}

pub fn to_rotating_frame<H: TimeDependent>(h: H, frame: &RotatingFrame) -> Result<Rotated<H>> {
    if h.dims() != frame.dims() {
        return Err(Error::DimensionMismatch {
            expected: frame.generator.dim(),
            found: h.dim(),
        });
    }
    Ok(Rotated {
        inner: h,
        frame: frame.clone(),
    })
}

pub const AVERAGE_TOL: f64 = 1e-10;
const MAX_SAMPLES: usize = 1 << 20;

/// `(1/T)∫₀ᵀ H(t) dt` by composite Simpson quadrature, doubling the number
/// of intervals from `n_samples` until successive estimates agree within
/// [`AVERAGE_TOL`].
pub fn time_average<H: TimeDependent + ?Sized>(h: &H, period: f64, n_samples: usize) -> Result<Operator> {
    if !(period > 0.0) {
        return Err(Error::InvalidParameter(format!("period = {period} must be positive")));
    }
    let mut n = n_samples.max(2);
    n += n % 2;
    let dt = |n: usize| period / n as f64;
    let ends = h.matrix_at(0.0) + h.matrix_at(period);
    let d = h.dim();
    let mut even = Matrix::zeros(d, d);
    let mut odd = Matrix::zeros(d, d);
    for k in 1..n {
        let m = h.matrix_at(k as f64 * dt(n));
        if k % 2 == 0 {
            even += m;
        } else {
            odd += m;
        }
    }
    let simpson = |n: usize, even: &Matrix, odd: &Matrix| {
        (&ends + odd * real(4.0) + even * real(2.0)) * real(dt(n) / 3.0 / period)
    };
    let mut estimate = simpson(n, &even, &odd);
    while n < MAX_SAMPLES {
        let n2 = 2 * n;
        even += &odd;
        odd = Matrix::zeros(d, d);
        for k in (1..n2).step_by(2) {
            odd += h.matrix_at(k as f64 * dt(n2));
        }
        n = n2;
        let next = simpson(n, &even, &odd);
        let diff = max_abs(&(&next - &estimate));
        estimate = next;
        if diff < AVERAGE_TOL {
            return Operator::new(estimate, h.dims().to_vec());
        }
    }
    Err(Error::NonConvergence(format!(
        "time average did not converge within {MAX_SAMPLES} samples"
    )))
}

/// Margin kept between any eigenphase and the branch cut at ±π.
pub const BRANCH_MARGIN: f64 = 1e-6;

/// Eigen-decomposition of a unitary matrix: `(Q, phases)` with
/// `U = Q diag(e^{iθ}) Q†`.
pub fn unitary_eigen(u: &Matrix) -> (Matrix, Vec<f64>) {
    let (q, t) = u.clone().schur().unpack();
    let phases = (0..t.nrows()).map(|k| t[(k, k)].arg()).collect();
    (q, phases)
}

/// `(i/T) log U(T)` from the one-period propagator, eigenphases in `(−π, π]`.
pub fn floquet_from_unitary(u: &Operator, period: f64) -> Result<Operator> {
    let (q, phases) = unitary_eigen(u.data());
    for &p in &phases {
        if PI - p.abs() < BRANCH_MARGIN {
            return Err(Error::BranchCut {
                phase: p,
                margin: BRANCH_MARGIN,
            });
        }
    }
    let diag = DVector::from_iterator(phases.len(), phases.iter().map(|&p| real(-p / period)));
    let hf = &q * Matrix::from_diagonal(&diag) * q.adjoint();
    let hf = (&hf + hf.adjoint()) * real(0.5);
    Operator::new(hf, u.dims().to_vec())
}

/// Floquet effective Hamiltonian of a `period`-periodic Hamiltonian.
pub fn floquet_effective<H: TimeDependent + ?Sized>(h: &H, period: f64, dt: f64) -> Result<Operator> {
    let opts = PropagateOptions::new(dt).with_tol(1e-11);
    let u = propagate(h, 0.0, period, &opts)?;
    floquet_from_unitary(&u, period)
}

/// Two-qubit Pauli table of an effective Hamiltonian.
pub fn extract_cab(h_eff: &Operator) -> Result<PauliTable> {
    if h_eff.hermiticity_error() > HERMITIAN_TOL * h_eff.max_norm().max(1.0) {
        return Err(Error::NotHermitian {
            deviation: h_eff.hermiticity_error(),
        });
    }
    pauli_decompose(&h_eff.hermitian_part())
}

/// Closed-form rotating-frame coefficients of the universal coupler at
/// leading order in each drive amplitude.
///
/// With `E = αE_J`, `C_i = c0_i + c_i σz_i`, `θ0 = χ1 − χ2`, `θ2 = χ1 + χ2`:
///
/// * `−E f_zz C1 C2`
/// * `−E s1 s2 f_xy0 (e^{−iθ0} σ1⁺σ2⁻ + h.c.)`
/// * `−E s1 s2 f_xy2 (e^{−iθ2} σ1⁺σ2⁺ + h.c.)`
/// * `+E s1 f_xz² (cos ψ1 σ1x − sin ψ1 σ1y) C2`
/// * `−E s2 f_zx² C1 (cos ψ2 σ2x − sin ψ2 σ2y)`
pub fn analytic_cab(
    p: &UniversalDriveParams,
    q1: &PhaseCoeffs,
    q2: &PhaseCoeffs,
    alpha_ej: f64,
) -> PauliTable {
    use Pauli::{I, X, Y, Z};
    let e = alpha_ej;
    let mut t = PauliTable::zero();
    let mut add = |a: Pauli, b: Pauli, v: f64| {
        let cur = t.get(a, b);
        t.set(a, b, cur + v);
    };
    // f_zz
    let k = -e * p.f_zz;
    add(I, I, k * q1.c0 * q2.c0);
    add(I, Z, k * q1.c0 * q2.c);
    add(Z, I, k * q1.c * q2.c0);
    add(Z, Z, k * q1.c * q2.c);
    // hopping: (1/2)[cos θ0 (xx + yy) + sin θ0 (xy − yx)]
    let h = -e * q1.s * q2.s * p.f_xy0 / 2.0;
    let th0 = p.chi1 - p.chi2;
    add(X, X, h * th0.cos());
    add(Y, Y, h * th0.cos());
    add(X, Y, h * th0.sin());
    add(Y, X, -h * th0.sin());
    // pump: (1/2)[cos θ2 (xx − yy) − sin θ2 (xy + yx)]
    let m = -e * q1.s * q2.s * p.f_xy2 / 2.0;
    let th2 = p.chi1 + p.chi2;
    add(X, X, m * th2.cos());
    add(Y, Y, -m * th2.cos());
    add(X, Y, -m * th2.sin());
    add(Y, X, -m * th2.sin());
    // xz
    let a = e * q1.s * p.f_xz * p.f_xz;
    let (cx, cy) = (p.psi1.cos(), -p.psi1.sin());
    add(X, I, a * cx * q2.c0);
    add(Y, I, a * cy * q2.c0);
    add(X, Z, a * cx * q2.c);
    add(Y, Z, a * cy * q2.c);
    // zx
    let b = -e * q2.s * p.f_zx * p.f_zx;
    let (dx, dy) = (p.psi2.cos(), -p.psi2.sin());
    add(I, X, b * dx * q1.c0);
    add(I, Y, b * dy * q1.c0);
    add(Z, X, b * dx * q1.c);
    add(Z, Y, b * dy * q1.c);
    t
}

/// Two two-level qubits on a junction coupler driven by the universal signal,
/// viewed in the frame co-rotating with both qubits.
#[derive(Clone, Debug)]
pub struct UniversalCoupler {
    pub q1: QubitSpec,
    pub q2: QubitSpec,
    pub alpha_ej: f64,
}

impl UniversalCoupler {
    pub fn new(omega1: f64, omega2: f64, alpha_ej: f64, p1: PhaseCoeffs, p2: PhaseCoeffs) -> Result<Self> {
        let out = Self {
            q1: QubitSpec::two_level(omega1, p1),
            q2: QubitSpec::two_level(omega2, p2),
            alpha_ej,
        };
        out.q1.validate()?;
        out.q2.validate()?;
        if !(alpha_ej > 0.0) {
            return Err(Error::InvalidParameter("alpha_ej must be positive".into()));
        }
        Ok(out)
    }

    pub fn system(&self, p: &UniversalDriveParams) -> Result<JunctionSystem> {
        let signal = universal_signal(p, self.q1.omega, self.q2.omega)?;
        JunctionSystem::new(
            &self.q1,
            &self.q2,
            &JunctionCouplerSpec {
                alpha_ej: self.alpha_ej,
                signal,
            },
        )
    }

    /// Frame generated by each qubit's bare Hamiltonian, `G_i = −σz_i/2` at `ω_i`.
    pub fn frame(&self) -> Result<RotatingFrame> {
        let dims = [2, 2];
        let gz = pauli::z() * -0.5;
        RotatingFrame::new(vec![
            (embed(&gz, 0, &dims)?, self.q1.omega),
            (embed(&gz, 1, &dims)?, self.q2.omega),
        ])
    }

    pub fn rotating(&self, p: &UniversalDriveParams) -> Result<Rotated<JunctionSystem>> {
        to_rotating_frame(self.system(p)?, &self.frame()?)
    }

    /// Exact common period of the drive tones and the frame.
    pub fn period(&self, p: &UniversalDriveParams) -> Result<f64> {
        let sig = universal_signal(p, self.q1.omega, self.q2.omega)?;
        let mut freqs = sig.frequencies();
        freqs.push(self.q1.omega);
        freqs.push(self.q2.omega);
        Ok(commensurate_period(sig.base_freq, &freqs)?.expect("frame frequencies are nonzero"))
    }

    /// Largest angular frequency present in the rotating-frame Hamiltonian.
    pub fn max_frequency(&self, p: &UniversalDriveParams) -> Result<f64> {
        let sig = universal_signal(p, self.q1.omega, self.q2.omega)?;
        let tone = sig.frequencies().into_iter().fold(0.0_f64, f64::max);
        Ok(self.q1.omega + self.q2.omega + tone)
    }

    /// Quadrature starting size: 64 samples per period of the fastest component.
    pub fn samples(&self, p: &UniversalDriveParams) -> Result<usize> {
        let period = self.period(p)?;
        let cycles = (period * self.max_frequency(p)? / (2.0 * PI)).ceil() as usize;
        Ok(64 * cycles.max(1))
    }

    /// Propagation step: 1/40 of the fastest period.
    pub fn dt(&self, p: &UniversalDriveParams) -> Result<f64> {
        Ok(2.0 * PI / self.max_frequency(p)? / 40.0)
    }

    pub fn average(&self, p: &UniversalDriveParams) -> Result<Operator> {
        let h = self.rotating(p)?;
        time_average(&h, self.period(p)?, self.samples(p)?)
    }

    pub fn floquet(&self, p: &UniversalDriveParams) -> Result<Operator> {
        let h = self.rotating(p)?;
        floquet_effective(&h, self.period(p)?, self.dt(p)?)
    }

    pub fn analytic(&self, p: &UniversalDriveParams) -> PauliTable {
        analytic_cab(p, &self.q1.phase_coeffs, &self.q2.phase_coeffs, self.alpha_ej)
    }

    /// `extract_cab ∘ time_average`.
    pub fn average_cab(&self, p: &UniversalDriveParams) -> Result<PauliTable> {
        extract_cab(&self.average(p)?)
    }

    pub fn floquet_cab(&self, p: &UniversalDriveParams) -> Result<PauliTable> {
        extract_cab(&self.floquet(p)?)
    }

    /// Floquet Hamiltonian expanded to second order in the drive amplitudes.
    ///
    /// Writes `H_F(λ)` for the drive scaled by `λ` and returns
    /// `H_F(0) + λ∂H_F + λ²∂²H_F/2` at `λ = 1`, the derivatives taken by
    /// central differences with step `EXPANSION_STEP`. `H_F(0)` carries the
    /// static coupler dressing of the undriven junction.
    pub fn amplitude_expansion(&self, p: &UniversalDriveParams) -> Result<Operator> {
        let e = EXPANSION_STEP;
        let hf = |l: f64| self.floquet(&p.scaled(l));
        let h0 = hf(0.0)?;
        let (hp, hm) = (hf(e)?, hf(-e)?);
        let (hp2, hm2) = (hf(2.0 * e)?, hf(-2.0 * e)?);
        let first = (&(&(&hp - &hm) * 8.0) - &(&hp2 - &hm2)) * (1.0 / (12.0 * e));
        let second = &(&(&hp + &hm) - &(&h0 * 2.0)) * (1.0 / (2.0 * e * e));
        Ok(&(&h0 + &first) + &second)
    }

    /// Compares lab-frame propagation against `h_eff` over the whole number of
    /// drive periods closest to `|target|·t = π/2`.
    pub fn gate_check(&self, p: &UniversalDriveParams, h_eff: &Operator, target: f64) -> Result<GateCheck> {
        if !(target.abs() > 0.0) {
            return Err(Error::InvalidParameter("target coefficient must be nonzero".into()));
        }
        let period = self.period(p)?;
        let periods = (PI / 2.0 / target.abs() / period).round().max(1.0);
        let time = periods * period;
        let opts = PropagateOptions::new(self.dt(p)?).with_tol(1e-11);
        let lab = propagate_periodic(&self.system(p)?, period, time, &opts)?;
        let eff = matrix_exp(h_eff, C64::new(0.0, -time))?;
        let v = &self.frame()?.unitary(time).adjoint() * &eff;
        let fidelity = process_fidelity(&lab, &v)?;
        Ok(GateCheck {
            time,
            periods: periods as usize,
            fidelity,
        })
    }
}

/// Drive-scale step used by `UniversalCoupler::amplitude_expansion`.
pub const EXPANSION_STEP: f64 = 0.1;

/// Outcome of `UniversalCoupler::gate_check`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateCheck {
    pub time: f64,
    pub periods: usize,
    pub fidelity: f64,
}

impl GateCheck {
    pub fn infidelity(&self) -> f64 {
        1.0 - self.fidelity
    }
}
