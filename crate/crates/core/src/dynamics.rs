//! Unitary propagation, Lindblad evolution and steady states.

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{expm, max_abs, real, Matrix, Operator, C64};
use crate::timedep::TimeDependent;

/// One-step propagator scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// `exp(−i H(t+dt/2) dt)`, second order.
    Midpoint,
    /// Two-point Gauss–Legendre Magnus step with the commutator correction,
    /// fourth order.
    #[default]
    Magnus4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagateOptions {
    pub dt: f64,
    /// Step halving stops when successive propagators differ by less than this.
    pub tol: f64,
    pub integrator: Integrator,
    pub max_halvings: u32,
}

impl PropagateOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            tol: 1e-8,
            integrator: Integrator::Magnus4,
            max_halvings: 12,
        }
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6
const MAGNUS_COMM: f64 = 0.144_337_567_297_406_44; // √3/12

fn step_generator<H: TimeDependent + ?Sized>(h: &H, t: f64, dt: f64, integrator: Integrator) -> Matrix {
    match integrator {
        Integrator::Midpoint => h.matrix_at(t + dt / 2.0) * C64::new(0.0, -dt),
        Integrator::Magnus4 => {
            let h1 = h.matrix_at(t + (0.5 - GAUSS_OFFSET) * dt);
            let h2 = h.matrix_at(t + (0.5 + GAUSS_OFFSET) * dt);
            let comm = &h2 * &h1 - &h1 * &h2;
            (&h1 + &h2) * C64::new(0.0, -dt / 2.0) - comm * real(MAGNUS_COMM * dt * dt)
        }
    }
}

/// Time-ordered product over `steps` equal steps from `t0` to `t1`.
pub fn propagate_fixed<H: TimeDependent + ?Sized>(
    h: &H,
    t0: f64,
    t1: f64,
    steps: usize,
    integrator: Integrator,
) -> Matrix {
    let d = h.dim();
    let mut u = Matrix::identity(d, d);
    if steps == 0 || t1 == t0 {
        return u;
    }
    let dt = (t1 - t0) / steps as f64;
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        u = expm(&step_generator(h, t, dt, integrator)) * u;
    }
    u
}

/// State at each of `times` (ascending, starting from `t0`), stepping
/// with at most `max_dt` per step.
pub fn evolve_state<H: TimeDependent + ?Sized>(
    h: &H,
    psi0: &DVector<C64>,
    t0: f64,
    times: &[f64],
    max_dt: f64,
    integrator: Integrator,
) -> Result<Vec<DVector<C64>>> {
    if psi0.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: psi0.len() });
    }
    if !(max_dt > 0.0) {
        return Err(Error::InvalidParameter(format!("max_dt = {max_dt} must be positive")));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut psi = psi0.clone();
    let mut t = t0;
    for &next in times {
        if next < t {
            return Err(Error::InvalidParameter("sample times must be ascending".into()));
        }
        let steps = ((next - t) / max_dt).ceil() as usize;
        if steps > 0 {
            let dt = (next - t) / steps as f64;
            for k in 0..steps {
                psi = expm(&step_generator(h, t + k as f64 * dt, dt, integrator)) * psi;
            }
        }
        t = next;
        out.push(psi.clone());
    }
    Ok(out)
}

/// Propagator `U(t1, t0)` with step halving until two successive
/// refinements agree within `opts.tol` (max-norm).
pub fn propagate<H: TimeDependent + ?Sized>(
    h: &H,
    t0: f64,
    t1: f64,
    opts: &PropagateOptions,
) -> Result<Operator> {
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {} must be positive", opts.dt)));
    }
    let span = t1 - t0;
    let dims = h.dims().to_vec();
    if span == 0.0 {
        return Ok(Operator::identity(&dims));
    }
    let mut steps = ((span.abs() / opts.dt).ceil() as usize).max(1);
    let mut u = propagate_fixed(h, t0, t1, steps, opts.integrator);
    for _ in 0..opts.max_halvings {
        steps *= 2;
        let finer = propagate_fixed(h, t0, t1, steps, opts.integrator);
        let diff = max_abs(&(&finer - &u));
        u = finer;
        if diff < opts.tol {
            return Operator::new(u, dims);
        }
    }
    Err(Error::NonConvergence(format!(
        "propagator did not converge to {:e} after {} halvings",
        opts.tol, opts.max_halvings
    )))
}

/// `U(t, 0)` for a Hamiltonian with period `period`, using
/// `U(nT + r) = U(r)·U(T)ⁿ`.
pub fn propagate_periodic<H: TimeDependent + ?Sized>(
    h: &H,
    period: f64,
    t: f64,
    opts: &PropagateOptions,
) -> Result<Operator> {
    if !(period > 0.0) || t < 0.0 {
        return Err(Error::InvalidParameter("need period > 0 and t >= 0".into()));
    }
    let n = (t / period + 1e-9).floor() as u64;
    let rest = (t - n as f64 * period).max(0.0);
    let one = propagate(h, 0.0, period, opts)?;
    let power = matrix_power(one.data(), n);
    let head = if rest > 1e-12 * period {
        propagate(h, 0.0, rest, opts)?.into_data()
    } else {
        Matrix::identity(h.dim(), h.dim())
    };
    Operator::new(head * power, h.dims().to_vec())
}

pub(crate) fn matrix_power(m: &Matrix, mut n: u64) -> Matrix {
    let mut result = Matrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        n >>= 1;
    }
    result
}

/// `|Tr(U†V)|/d`.
pub fn process_fidelity(u: &Operator, v: &Operator) -> Result<f64> {
    if u.dim() != v.dim() || u.dims() != v.dims() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    let tr = u.data().adjoint() * v.data();
    Ok((tr.trace().norm() / u.dim() as f64).min(1.0))
}

/// Process fidelity restricted to the subspace spanned by the given basis
/// indices: `|Tr(P U† V P)|/|P|`.
pub fn subspace_fidelity(u: &Operator, v: &Operator, basis: &[usize]) -> Result<f64> {
    if u.dims() != v.dims() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    let prod = u.data().adjoint() * v.data();
    let tr: C64 = basis.iter().map(|&k| prod[(k, k)]).sum();
    Ok(tr.norm() / basis.len() as f64)
}

#[derive(Clone, Debug)]
pub struct JumpOperator {
    pub op: Operator,
    pub rate: f64,
}

impl JumpOperator {
    pub fn new(op: Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("jump rate {rate} must be >= 0")));
        }
        Ok(Self { op, rate })
    }
}

pub const DENSITY_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: Matrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(data: Matrix, dims: Vec<usize>) -> Result<Self> {
        let op = Operator::new(data, dims)?;
        let rho = Self {
            dims: op.dims().to_vec(),
            data: op.into_data(),
        };
        rho.validate()?;
        Ok(rho)
    }

    /// Unchecked wrapper, used for intermediate results that are validated
    /// separately.
    pub(crate) fn raw(data: Matrix, dims: Vec<usize>) -> Self {
        Self { data, dims }
    }

    pub fn pure(state: &DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        let norm = state.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let psi = state / real(norm);
        Self::new(&psi * psi.adjoint(), dims)
    }

    /// `|k⟩⟨k|`.
    pub fn basis(k: usize, dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if k >= d {
            return Err(Error::InvalidParameter(format!("basis index {k} out of range {d}")));
        }
        let mut m = Matrix::zeros(d, d);
        m[(k, k)] = real(1.0);
        Self::new(m, dims)
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.data - self.data.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.data + self.data.adjoint()) * real(0.5);
        SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// `Tr(ρ A)`.
    pub fn expect(&self, a: &Operator) -> C64 {
        (&self.data * a.data()).trace()
    }

    pub fn population(&self, k: usize) -> f64 {
        self.data[(k, k)].re
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > DENSITY_TOL {
            return Err(Error::NotHermitian { deviation: herm });
        }
        if (self.trace() - 1.0).abs() > DENSITY_TOL {
            return Err(Error::Unphysical(format!("trace {} != 1", self.trace())));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::Positivity(min));
        }
        Ok(())
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.data - &other.data;
        let herm = (&diff + diff.adjoint()) * real(0.5);
        SymmetricEigen::new(herm).eigenvalues.iter().map(|e| e.abs()).sum::<f64>() / 2.0
    }
}

/// `−i[H,ρ] + Σ_k γ_k (L ρ L† − ½{L†L, ρ})`.
pub fn lindblad_rhs(h: &Matrix, jumps: &[(Matrix, Matrix, f64)], rho: &Matrix) -> Matrix {
    let mut out = (h * rho - rho * h) * C64::new(0.0, -1.0);
    for (l, ldl, rate) in jumps {
        if *rate == 0.0 {
            continue;
        }
        let term = l * rho * l.adjoint() - (ldl * rho + rho * ldl) * real(0.5);
        out += term * real(*rate);
    }
    out
}

fn prepare_jumps(jumps: &[JumpOperator]) -> Vec<(Matrix, Matrix, f64)> {
    jumps
        .iter()
        .map(|j| {
            let l = j.op.data().clone();
            let ldl = l.adjoint() * &l;
            (l, ldl, j.rate)
        })
        .collect()
}

fn check_space(h: &Operator, jumps: &[JumpOperator], dims: &[usize]) -> Result<()> {
    if h.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims.iter().product(),
            found: h.dim(),
        });
    }
    for j in jumps {
        if j.op.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: j.op.dim(),
            });
        }
    }
    Ok(())
}

/// Fourth-order Runge–Kutta integration of the Lindblad equation up to time
/// `t`, calling `observe(t, ρ)` after every step. The trace is never
/// renormalized.
pub fn lindblad_evolve_with(
    h: &Operator,
    jumps: &[JumpOperator],
    rho0: &DensityMatrix,
    t: f64,
    dt: f64,
    mut observe: impl FnMut(f64, &Matrix),
) -> Result<DensityMatrix> {
    check_space(h, jumps, rho0.dims())?;
    if !(dt > 0.0) || t < 0.0 {
        return Err(Error::InvalidParameter("need dt > 0 and t >= 0".into()));
    }
    let prepared = prepare_jumps(jumps);
    let hm = h.data();
    let steps = (t / dt).ceil() as usize;
    let step = if steps > 0 { t / steps as f64 } else { 0.0 };
    let mut rho = rho0.data.clone();
    observe(0.0, &rho);
    for k in 0..steps {
        let k1 = lindblad_rhs(hm, &prepared, &rho);
        let k2 = lindblad_rhs(hm, &prepared, &(&rho + &k1 * real(step / 2.0)));
        let k3 = lindblad_rhs(hm, &prepared, &(&rho + &k2 * real(step / 2.0)));
        let k4 = lindblad_rhs(hm, &prepared, &(&rho + &k3 * real(step)));
        rho += (k1 + k2 * real(2.0) + k3 * real(2.0) + k4) * real(step / 6.0);
        observe((k + 1) as f64 * step, &rho);
    }
    let out = DensityMatrix::raw(rho, rho0.dims.clone());
    let min = out.min_eigenvalue();
    if min < -1e-6 {
        return Err(Error::Positivity(min));
    }
    Ok(out)
}

pub fn lindblad_evolve(
    h: &Operator,
    jumps: &[JumpOperator],
    rho0: &DensityMatrix,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    lindblad_evolve_with(h, jumps, rho0, t, dt, |_, _| {})
}

/// Column-stacking superoperator of the Lindblad generator.
pub fn liouvillian(h: &Operator, jumps: &[JumpOperator]) -> Result<Matrix> {
    check_space(h, jumps, h.dims())?;
    let d = h.dim();
    let id = Matrix::identity(d, d);
    let hm = h.data();
    // vec(AρB) = (Bᵀ ⊗ A) vec(ρ)
    let mut l = (id.kronecker(hm) - hm.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
    for j in jumps {
        if j.rate == 0.0 {
            continue;
        }
        let a = j.op.data();
        let ada = a.adjoint() * a;
        let term = a.conjugate().kronecker(a)
            - (id.kronecker(&ada) + ada.transpose().kronecker(&id)) * real(0.5);
        l += term * real(j.rate);
    }
    Ok(l)
}

/// Steady state from the null vector of the Liouvillian.
pub fn steady_state(h: &Operator, jumps: &[JumpOperator]) -> Result<DensityMatrix> {
    let l = liouvillian(h, jumps)?;
    let d = h.dim();
    let svd = l.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let second = svd.singular_values[order[1]];
    if second <= 1e-8 * svd.singular_values[order[order.len() - 1]].max(1.0) {
        return Err(Error::Degenerate(format!(
            "Liouvillian has more than one steady state (second singular value {second:e})"
        )));
    }
    let null = v_t.row(order[0]).adjoint();
    let mut rho = Matrix::from_fn(d, d, |r, c| null[c * d + r]);
    rho = (&rho + rho.adjoint()) * real(0.5);
    let tr = rho.trace();
    rho /= tr;
    let out = DensityMatrix::raw(rho, h.dims().to_vec());
    let min = out.min_eigenvalue();
    if min < -POSITIVITY_TOL {
        return Err(Error::Positivity(min));
    }
    Ok(out)
}

/// `‖L(ρ)‖_max`.
pub fn lindblad_residual(h: &Operator, jumps: &[JumpOperator], rho: &DensityMatrix) -> f64 {
    max_abs(&lindblad_rhs(h.data(), &prepare_jumps(jumps), rho.data()))
}
