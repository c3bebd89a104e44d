//! Arbitrary-axis dispersive readout of a three-level transmon through a
//! capacitively coupled resonator.
//!
//! Sign conventions: the coupling enters the system Hamiltonian as
//! `−g(a_T†a_R + h.c.)`, which makes the first-order dressed states
//! `|0,n⟩ − (g/Δ)√n|1,n−1⟩` exact to that order. Qubit index 0 is the ground
//! state and `σz = diag(1, −1)` on the `{0, 1}` subspace.

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::device::{diagonalize_transmon, phase_operators, PhaseCoeffs, QubitSpec};
use crate::drive::ReadoutDriveCoeffs;
use crate::dynamics::{evolve_state, Integrator};
use crate::error::{Error, Result};
use crate::operator::{boson_ops, c64, embed, kron, pauli, real, Matrix, Operator, C64};
use crate::rwa::{to_rotating_frame, RotatingFrame};
use crate::timedep::Modulated;

/// Largest `|g/Δ|` and `|g/(Δ+δ)|` accepted by the perturbative formulas.
pub const MAX_DISPERSIVE_RATIO: f64 = 0.3;

const QUBIT_LEVELS: usize = 3;

fn check_ratios(g: f64, delta: f64, qubit_delta: f64) -> Result<()> {
    if delta == 0.0 || delta + qubit_delta == 0.0 {
        return Err(Error::Degenerate("Δ and Δ+δ must be nonzero".into()));
    }
    if (g / delta).abs() > MAX_DISPERSIVE_RATIO || (g / (delta + qubit_delta)).abs() > MAX_DISPERSIVE_RATIO {
        return Err(Error::InvalidParameter(format!(
            "g/Δ = {:.3}, g/(Δ+δ) = {:.3} exceed {MAX_DISPERSIVE_RATIO}",
            g / delta,
            g / (delta + qubit_delta)
        )));
    }
    Ok(())
}

/// One component of a first-order dressed state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Amplitude {
    pub qubit: usize,
    pub photons: usize,
    pub value: f64,
}

/// `|0,n⟩̲` and `|1,n⟩̲` to first order in the coupling (unnormalized).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DressedPair {
    pub ground: Vec<Amplitude>,
    pub excited: Vec<Amplitude>,
}

pub fn dressed_states(g: f64, delta: f64, qubit_delta: f64, q2: f64, n: usize) -> Result<DressedPair> {
    check_ratios(g, delta, qubit_delta)?;
    let nf = n as f64;
    let amp = |qubit, photons, value| Amplitude { qubit, photons, value };
    let mut ground = vec![amp(0, n, 1.0)];
    let mut excited = vec![amp(1, n, 1.0)];
    if n > 0 {
        ground.push(amp(1, n - 1, -(g / delta) * nf.sqrt()));
        excited.push(amp(2, n - 1, -(q2 * g / (delta + qubit_delta)) * nf.sqrt()));
    }
    excited.push(amp(0, n + 1, (g / delta) * (nf + 1.0).sqrt()));
    Ok(DressedPair { ground, excited })
}

/// The four drive matrix elements between dressed states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedElements {
    /// `⟨1,n−1|cos φ|0,n⟩̲`
    pub cos_lower: f64,
    /// `⟨1,n+1|cos φ|0,n⟩̲`
    pub cos_upper: f64,
    /// `⟨0,n+1|sin φ|0,n⟩̲`
    pub sin_ground: f64,
    /// `⟨1,n+1|sin φ|1,n⟩̲`
    pub sin_excited: f64,
}

impl DressedElements {
    pub fn to_array(&self) -> [f64; 4] {
        [self.cos_lower, self.cos_upper, self.sin_ground, self.sin_excited]
    }
}

/// `⟨1|cos φ|1⟩ − ⟨0|cos φ|0⟩`: the coefficient `c` of `c0 + c·n` in the
/// number-operator form, `−2c` in the `c0 + cσz` form used by [`PhaseCoeffs`].
pub fn cos_step(q: &PhaseCoeffs) -> f64 {
    -2.0 * q.c
}

pub fn dressed_matrix_elements(
    q: &PhaseCoeffs,
    g: f64,
    delta: f64,
    qubit_delta: f64,
    n: usize,
) -> Result<DressedElements> {
    check_ratios(g, delta, qubit_delta)?;
    let up = (n as f64 + 1.0).sqrt();
    let dd = delta + qubit_delta;
    Ok(DressedElements {
        cos_lower: -cos_step(q) * g * (n as f64).sqrt() / delta,
        cos_upper: -q.q2 * g * q.c2 * up / dd,
        sin_ground: -q.s1 * g * up / delta,
        sin_excited: -q.q2 * q.s2 * g * up / dd + q.s1 * g * up / delta,
    })
}

/// Amplitudes of the three tones of the readout drive
/// `2cos φ[f1 cos((ω_R+ω_T)t + χ) + f2 cos(Δt − χ)] + 2 f3 sin φ cos ω_R t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadoutTones {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    #[serde(default)]
    pub chi: f64,
}

impl From<&ReadoutDriveCoeffs> for ReadoutTones {
    fn from(c: &ReadoutDriveCoeffs) -> Self {
        Self { f1: c.f1, f2: c.f2, f3: c.f3, chi: c.chi }
    }
}

/// `H' = Λ(h·σ)(a + a†) + S(a + a†) + K(k·σ)·i(a − a†)`.
///
/// `conjugate` is `K`, nonzero when the hopping and pump terms differ in
/// strength; it couples the qubit to the other resonator quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReadoutHamiltonian {
    pub lambda: f64,
    pub h: [f64; 3],
    pub spin_independent: f64,
    pub conjugate: f64,
    /// Coefficient of `σ⁺a e^{−iχ} + h.c.`.
    pub hopping: f64,
    /// Coefficient of `σ⁺a† e^{−iχ} + h.c.`.
    pub pump: f64,
    /// Coefficient of `σz(a + a†)`.
    pub z: f64,
    pub chi: f64,
}

impl ReadoutHamiltonian {
    /// The engineered Hamiltonian on `[2, dim]` (qubit, resonator).
    pub fn operator(&self, dim: usize, include_spin_independent: bool) -> Result<Operator> {
        let dims = [2, dim];
        let b = boson_ops(dim)?;
        let a = embed(&b.a, 1, &dims)?;
        let ad = embed(&b.adag, 1, &dims)?;
        let sp = embed(&pauli::raising(), 0, &dims)?;
        let sz = embed(&pauli::z(), 0, &dims)?;
        let ph = C64::from_polar(1.0, -self.chi);
        let hop = (&sp * &a).scaled(ph);
        let pump = (&sp * &ad).scaled(ph);
        let x = &a + &ad;
        let mut h = &(&hop + &hop.adjoint()) * self.hopping;
        h = &h + &(&(&pump + &pump.adjoint()) * self.pump);
        h = &h + &(&(&sz * &x) * self.z);
        if include_spin_independent {
            h = &h + &(&x * self.spin_independent);
        }
        Ok(h)
    }

    /// `h·σ` on the qubit.
    pub fn axis_operator(&self) -> Operator {
        let [hx, hy, hz] = self.h;
        &(&(pauli::x() * hx) + &(pauli::y() * hy)) + &(pauli::z() * hz)
    }
}

/// Single transmon (three levels) and resonator with capacitive coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSystem {
    pub phase_coeffs: PhaseCoeffs,
    pub omega_t: f64,
    pub omega_r: f64,
    /// Transmon nonlinearity `δ`: `E(2) = 2ω_T − δ`.
    pub nonlinearity: f64,
    pub g: f64,
    pub resonator_dim: usize,
}

impl ReadoutSystem {
    /// Transmon at `E_J/E_C = ej_over_ec` with phase coefficients and
    /// nonlinearity taken from its charge-basis spectrum, rescaled so the
    /// qubit frequency is `omega_t`.
    pub fn transmon(ej_over_ec: f64, omega_t: f64, omega_r: f64, g: f64, resonator_dim: usize) -> Result<Self> {
        let sol = diagonalize_transmon(ej_over_ec, 1.0, QUBIT_LEVELS)?;
        let out = Self {
            phase_coeffs: sol.coeffs,
            omega_t,
            omega_r,
            nonlinearity: sol.alpha / sol.energies[1] * omega_t,
            g,
            resonator_dim,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn detuning(&self) -> f64 {
        self.omega_r - self.omega_t
    }

    pub fn dims(&self) -> [usize; 2] {
        [QUBIT_LEVELS, self.resonator_dim]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_t > 0.0 && self.omega_r > 0.0) {
            return Err(Error::InvalidParameter("frequencies must be positive".into()));
        }
        if self.resonator_dim < 8 {
            return Err(Error::InvalidParameter(format!(
                "resonator truncation {} below 8",
                self.resonator_dim
            )));
        }
        self.phase_coeffs.validate()?;
        check_ratios(self.g, self.detuning(), self.nonlinearity)
    }

    fn qubit(&self) -> QubitSpec {
        QubitSpec {
            omega: self.omega_t,
            levels: QUBIT_LEVELS,
            alpha2: self.nonlinearity,
            beta3: 0.0,
            phase_coeffs: self.phase_coeffs,
        }
    }

    /// `ω_T n_T − (δ/2)n_T(n_T−1) + ω_R n_R − g(a_T†a_R + h.c.)`, with the
    /// transmon ladder carrying `q2` on its `1 → 2` step.
    pub fn hamiltonian(&self) -> Result<Operator> {
        let dims = self.dims();
        let q = Operator::diagonal(&self.qubit().energies(), &[QUBIT_LEVELS])?;
        let mut at = Matrix::zeros(QUBIT_LEVELS, QUBIT_LEVELS);
        at[(0, 1)] = real(1.0);
        at[(1, 2)] = real(self.phase_coeffs.q2);
        let at = Operator::new(at, vec![QUBIT_LEVELS])?;
        let r = boson_ops(self.resonator_dim)?;
        let hop = kron(&at.adjoint(), &r.a);
        let coupling = &hop + &hop.adjoint();
        let h = &embed(&q, 0, &dims)? + &embed(&(&r.n * self.omega_r), 1, &dims)?;
        Ok(&h - &(&coupling * self.g))
    }

    /// `(sin φ ⊗ I, cos φ ⊗ I)`.
    pub fn phase_operators(&self) -> Result<(Operator, Operator)> {
        let (s, c) = phase_operators(&self.qubit())?;
        let dims = self.dims();
        Ok((embed(&s, 0, &dims)?, embed(&c, 0, &dims)?))
    }

    /// Resonator charge quadrature `i(a† − a)`.
    pub fn charge(&self) -> Result<Operator> {
        let r = boson_ops(self.resonator_dim)?;
        let q = (&r.adag - &r.a).scaled(c64(0.0, 1.0));
        embed(&q, 1, &self.dims())
    }

    pub fn effective(&self, tones: &ReadoutTones) -> Result<ReadoutHamiltonian> {
        effective_readout_hamiltonian(tones, &self.phase_coeffs, self.g, self.detuning(), self.nonlinearity)
    }

    /// `tones` with `f2` chosen so the hopping and pump terms are equal,
    /// which removes the conjugate-quadrature coupling.
    pub fn balanced(&self, tones: &ReadoutTones) -> Result<ReadoutTones> {
        let unit = ReadoutTones { f2: 1.0, ..*tones };
        let t = readout_terms(&unit, &self.phase_coeffs, self.g, self.detuning(), self.nonlinearity)?;
        if t.hopping == 0.0 {
            return Err(Error::Degenerate("hopping term vanishes; f2 cannot balance the pump".into()));
        }
        Ok(ReadoutTones { f2: t.pump / t.hopping, ..*tones })
    }
}

pub fn effective_readout_hamiltonian(
    tones: &ReadoutTones,
    q: &PhaseCoeffs,
    g: f64,
    delta: f64,
    qubit_delta: f64,
) -> Result<ReadoutHamiltonian> {
    let out = readout_terms(tones, q, g, delta, qubit_delta)?;
    if !(out.lambda > 0.0) {
        return Err(Error::Degenerate("Λ = 0: no measurement axis".into()));
    }
    Ok(out)
}

fn readout_terms(
    tones: &ReadoutTones,
    q: &PhaseCoeffs,
    g: f64,
    delta: f64,
    qubit_delta: f64,
) -> Result<ReadoutHamiltonian> {
    check_ratios(g, delta, qubit_delta)?;
    let dd = delta + qubit_delta;
    let hopping = -cos_step(q) * tones.f2 * g / delta;
    let pump = -q.q2 * g * q.c2 * tones.f1 / dd;
    let spin_independent = -(g * tones.f3 / 2.0) * q.q2 * q.s2 / dd;
    let z = (g * tones.f3 / 2.0) * (q.q2 * q.s2 / dd - 2.0 * q.s1 / delta);
    let mean = 0.5 * (hopping + pump);
    let v = [mean * tones.chi.cos(), -mean * tones.chi.sin(), z];
    let lambda = v[0].hypot(v[1]).hypot(v[2]);
    let h = if lambda > 0.0 { [v[0] / lambda, v[1] / lambda, v[2] / lambda] } else { [0.0; 3] };
    Ok(ReadoutHamiltonian {
        lambda,
        h,
        spin_independent,
        conjugate: 0.5 * (hopping - pump),
        hopping,
        pump,
        z,
        chi: tones.chi,
    })
}

/// Exact eigenbasis of the undriven system, columns ordered like the bare
/// basis `(qubit, photons)` and phased so each bare component is positive.
#[derive(Clone, Debug)]
pub struct DressedBasis {
    pub vectors: Matrix,
    pub energies: Vec<f64>,
    dims: [usize; 2],
}

impl DressedBasis {
    pub fn new(sys: &ReadoutSystem) -> Result<Self> {
        let h = sys.hamiltonian()?;
        let d = h.dim();
        let eig = SymmetricEigen::new(h.data().clone());
        let mut vectors = Matrix::zeros(d, d);
        let mut energies = vec![0.0; d];
        let mut taken = vec![false; d];
        for bare in 0..d {
            let (best, _) = (0..d)
                .filter(|&j| !taken[j])
                .map(|j| (j, eig.eigenvectors[(bare, j)].norm()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("unassigned eigenvector");
            taken[best] = true;
            let col = eig.eigenvectors.column(best);
            let phase = col[bare] / col[bare].norm();
            vectors.set_column(bare, &(col / phase));
            energies[bare] = eig.eigenvalues[best];
        }
        Ok(Self { vectors, energies, dims: sys.dims() })
    }

    pub fn index(&self, qubit: usize, photons: usize) -> usize {
        qubit * self.dims[1] + photons
    }

    pub fn state(&self, qubit: usize, photons: usize) -> DVector<C64> {
        self.vectors.column(self.index(qubit, photons)).into_owned()
    }

    pub fn energy(&self, qubit: usize, photons: usize) -> f64 {
        self.energies[self.index(qubit, photons)]
    }

    /// Dressed qubit frequency `E(1,0) − E(0,0)`.
    pub fn qubit_frequency(&self) -> f64 {
        self.energy(1, 0) - self.energy(0, 0)
    }

    /// Dressed resonator frequency `E(0,1) − E(0,0)`.
    pub fn resonator_frequency(&self) -> f64 {
        self.energy(0, 1) - self.energy(0, 0)
    }

    /// `⟨bra|op|ket⟩` between dressed states.
    pub fn sandwich(&self, op: &Operator, bra: (usize, usize), ket: (usize, usize)) -> f64 {
        op.sandwich(&self.state(bra.0, bra.1), &self.state(ket.0, ket.1)).re
    }
}

/// Exact counterparts of [`dressed_matrix_elements`].
pub fn exact_dressed_elements(sys: &ReadoutSystem, n: usize) -> Result<DressedElements> {
    if n + 2 >= sys.resonator_dim {
        return Err(Error::Truncation(format!("n = {n} too close to the resonator cutoff")));
    }
    let basis = DressedBasis::new(sys)?;
    let (sin, cos) = sys.phase_operators()?;
    Ok(DressedElements {
        cos_lower: if n > 0 { basis.sandwich(&cos, (1, n - 1), (0, n)) } else { 0.0 },
        cos_upper: basis.sandwich(&cos, (1, n + 1), (0, n)),
        sin_ground: basis.sandwich(&sin, (0, n + 1), (0, n)),
        sin_excited: basis.sandwich(&sin, (1, n + 1), (1, n)),
    })
}

/// Samples of a readout run, in the frame rotating at the dressed qubit and
/// resonator frequencies.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReadoutTrajectory {
    pub times: Vec<f64>,
    /// `⟨a + a†⟩`
    pub re_quadrature: Vec<f64>,
    /// `⟨i(a − a†)⟩`, the quadrature driven by `Λ(h·σ)(a + a†)`.
    pub im_quadrature: Vec<f64>,
    pub qubit_z: Vec<f64>,
    pub resonator_n: Vec<f64>,
    /// Population of the prepared `h·σ` eigenstate.
    pub axis_population: Vec<f64>,
}

/// Outcome of preparing both `h·σ` eigenstates and comparing slopes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReadoutReport {
    pub effective: ReadoutHamiltonian,
    pub predicted_slope: f64,
    pub slope_plus: f64,
    pub slope_minus: f64,
    /// Cancellation amplitude for `V Q_R sin ω_R t`.
    pub voltage: f64,
    pub duration: f64,
    /// Largest loss of the prepared eigenstate population over the run.
    pub qnd_deviation: f64,
    pub plus: ReadoutTrajectory,
    pub minus: ReadoutTrajectory,
}

impl ReadoutReport {
    pub fn discrimination(&self) -> f64 {
        self.slope_plus - self.slope_minus
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutRun {
    pub duration: f64,
    pub samples: usize,
    /// Add the computed `V Q_R sin ω_R t` drive.
    #[serde(default = "default_true")]
    pub cancel_spin_independent: bool,
    /// Steps per period of the fastest frequency in the system.
    #[serde(default = "default_steps")]
    pub steps_per_period: usize,
}

fn default_true() -> bool {
    true
}

fn default_steps() -> usize {
    40
}

impl ReadoutRun {
    pub fn new(duration: f64, samples: usize) -> Self {
        Self {
            duration,
            samples,
            cancel_spin_independent: true,
            steps_per_period: default_steps(),
        }
    }
}

/// Eigenvector of `h·σ` with eigenvalue `sign`, as a qubit 2-vector.
pub fn axis_eigenstate(h: [f64; 3], sign: f64) -> DVector<C64> {
    let op = &(&(pauli::x() * h[0]) + &(pauli::y() * h[1])) + &(pauli::z() * h[2]);
    let eig = SymmetricEigen::new(op.data().clone());
    let j = if (eig.eigenvalues[0] - sign).abs() < (eig.eigenvalues[1] - sign).abs() { 0 } else { 1 };
    eig.eigenvectors.column(j).into_owned()
}

/// Full lab-frame simulation of the driven qubit–resonator system from the
/// dressed state `|qubit⟩ ⊗ |0⟩`, `qubit` given on the `{0, 1}` levels.
pub fn simulate_readout(
    sys: &ReadoutSystem,
    tones: &ReadoutTones,
    qubit: &DVector<C64>,
    run: &ReadoutRun,
) -> Result<ReadoutTrajectory> {
    if qubit.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: qubit.len() });
    }
    sys.validate()?;
    if !(run.duration > 0.0) || run.samples < 2 {
        return Err(Error::InvalidParameter("need a positive duration and at least 2 samples".into()));
    }
    let eff = readout_terms(tones, &sys.phase_coeffs, sys.g, sys.detuning(), sys.nonlinearity)?;
    let basis = DressedBasis::new(sys)?;
    let wt = basis.qubit_frequency();
    let wr = basis.resonator_frequency();
    let h0 = sys.hamiltonian()?;
    let (sin, cos) = sys.phase_operators()?;
    let voltage = if run.cancel_spin_independent { 2.0 * eff.spin_independent } else { 0.0 };
    let t = *tones;
    let drive = Modulated {
        h0,
        terms: vec![
            (
                cos,
                Box::new(move |s: f64| {
                    2.0 * (t.f1 * ((wr + wt) * s + t.chi).cos() + t.f2 * ((wr - wt) * s - t.chi).cos())
                }),
            ),
            (sin, Box::new(move |s: f64| 2.0 * t.f3 * (wr * s).cos())),
            (sys.charge()?, Box::new(move |s: f64| voltage * (wr * s).sin())),
        ],
    };

    let qubit = qubit / real(qubit.norm());
    let psi0 = basis.state(0, 0) * qubit[0] + basis.state(1, 0) * qubit[1];
    let times: Vec<f64> = (0..run.samples)
        .map(|k| run.duration * k as f64 / (run.samples - 1) as f64)
        .collect();

    // propagate in the frame of the bare diagonal, where only slow phases remain
    let diag: Vec<f64> = drive.h0.diagonal_values().iter().map(|z| z.re).collect();
    let bare = Operator::diagonal(&diag, &sys.dims())?;
    let frame = RotatingFrame::new(vec![(bare.clone(), 1.0)])?;
    let mut gap = 0.0_f64;
    let off = &drive.h0 - &bare;
    for op in std::iter::once(&off).chain(drive.terms.iter().map(|(o, _)| o)) {
        for r in 0..diag.len() {
            for c in 0..diag.len() {
                if op.get(r, c).norm() > 0.0 {
                    gap = gap.max((diag[r] - diag[c]).abs());
                }
            }
        }
    }
    let max_dt = 2.0 * std::f64::consts::PI / (gap + wr + wt) / run.steps_per_period as f64;
    let rotated = to_rotating_frame(&drive, &frame)?;
    let states = evolve_state(&rotated, &psi0, 0.0, &times, max_dt, Integrator::Magnus4)?;

    let dim = sys.resonator_dim;
    let dressed_adj = basis.vectors.adjoint();
    let mut out = ReadoutTrajectory::default();
    for (&time, psi_i) in times.iter().zip(&states) {
        let c = &dressed_adj * (frame.unitary(time).adjoint().data() * psi_i);
        let amp = |k: usize, n: usize| {
            let phase = (k as f64 * wt + n as f64 * wr) * time;
            c[k * dim + n] * C64::from_polar(1.0, phase)
        };
        let mut a_mean = C64::new(0.0, 0.0);
        let (mut z, mut n_mean, mut pop) = (0.0, 0.0, 0.0);
        for n in 0..dim {
            for k in 0..QUBIT_LEVELS {
                let ck = amp(k, n);
                n_mean += n as f64 * ck.norm_sqr();
                if n + 1 < dim {
                    a_mean += ck.conj() * amp(k, n + 1) * ((n + 1) as f64).sqrt();
                }
            }
            let (c0, c1) = (amp(0, n), amp(1, n));
            z += c0.norm_sqr() - c1.norm_sqr();
            pop += (qubit[0].conj() * c0 + qubit[1].conj() * c1).norm_sqr();
        }
        if n_mean > (dim - 2) as f64 {
            return Err(Error::Truncation(format!(
                "resonator population {n_mean:.3} exceeds {}",
                dim - 2
            )));
        }
        out.times.push(time);
        out.re_quadrature.push(2.0 * a_mean.re);
        out.im_quadrature.push(-2.0 * a_mean.im);
        out.qubit_z.push(z);
        out.resonator_n.push(n_mean);
        out.axis_population.push(pop);
    }
    Ok(out)
}

/// Least-squares slope of `y(t) ≈ a + bt + ct²`.
pub fn initial_slope(t: &[f64], y: &[f64]) -> f64 {
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    let mut r = nalgebra::Vector3::<f64>::zeros();
    for (&ti, &yi) in t.iter().zip(y) {
        let basis = [1.0, ti, ti * ti];
        for i in 0..3 {
            r[i] += basis[i] * yi;
            for j in 0..3 {
                m[(i, j)] += basis[i] * basis[j];
            }
        }
    }
    m.lu().solve(&r).map(|c| c[1]).unwrap_or(f64::NAN)
}

/// Runs both eigenstates and compares the quadrature slopes with `2Λ`.
pub fn readout_discrimination(sys: &ReadoutSystem, tones: &ReadoutTones, run: &ReadoutRun) -> Result<ReadoutReport> {
    let effective = sys.effective(tones)?;
    let plus = simulate_readout(sys, tones, &axis_eigenstate(effective.h, 1.0), run)?;
    let minus = simulate_readout(sys, tones, &axis_eigenstate(effective.h, -1.0), run)?;
    let slope_plus = initial_slope(&plus.times, &plus.im_quadrature);
    let slope_minus = initial_slope(&minus.times, &minus.im_quadrature);
    let qnd_deviation = plus
        .axis_population
        .iter()
        .chain(&minus.axis_population)
        .fold(0.0_f64, |m, p| m.max(1.0 - p));
    Ok(ReadoutReport {
        predicted_slope: 2.0 * effective.lambda,
        voltage: if run.cancel_spin_independent { 2.0 * effective.spin_independent } else { 0.0 },
        effective,
        slope_plus,
        slope_minus,
        duration: run.duration,
        qnd_deviation,
        plus,
        minus,
    })
}
