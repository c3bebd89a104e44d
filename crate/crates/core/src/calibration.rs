//! Drive parameters for a target two-qubit interaction.
//!
//! A closed-form seed inverts the first-order coefficient table, then a
//! damped Gauss–Newton loop corrects it against a numerical oracle.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::device::PhaseCoeffs;
use crate::drive::{UniversalDriveParams, MAX_DRIVE_AMPLITUDE};
use crate::error::{Error, Result};
use crate::operator::{Pauli, PauliTable};
use crate::rwa::UniversalCoupler;

fn check_amplitude(name: &str, f: f64) -> Result<()> {
    if !f.is_finite() || f > MAX_DRIVE_AMPLITUDE {
        return Err(Error::Infeasible(format!(
            "{name} = {f:.4} exceeds the small-signal bound {MAX_DRIVE_AMPLITUDE}"
        )));
    }
    Ok(())
}

/// Amplitude and phase for a quadratic channel whose two-body pair equals
/// `scale·f²·(cos ψ, −sin ψ)`.
fn quadratic_channel(name: &str, pair: (f64, f64), scale: f64) -> Result<(f64, f64)> {
    let r = pair.0.hypot(pair.1);
    if r == 0.0 {
        return Ok((0.0, 0.0));
    }
    if scale == 0.0 {
        return Err(Error::Infeasible(format!("{name} has no lever arm")));
    }
    let f = (r / scale.abs()).sqrt();
    check_amplitude(name, f)?;
    let (x, y) = if scale > 0.0 { pair } else { (-pair.0, -pair.1) };
    Ok((f, (-y).atan2(x)))
}

/// Closed-form drive parameters whose first-order coefficient table matches
/// the two-body entries of `target`.
///
/// Amplitudes come out nonnegative except `f_zz`, which carries the sign of
/// the `zz` target.
pub fn synthesize_seed(
    target: &PauliTable,
    q1: &PhaseCoeffs,
    q2: &PhaseCoeffs,
    alpha_ej: f64,
) -> Result<UniversalDriveParams> {
    use Pauli::{X, Y, Z};
    if !(alpha_ej > 0.0) {
        return Err(Error::InvalidParameter("alpha_ej must be positive".into()));
    }
    if target.two_body().iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("target coefficients must be finite".into()));
    }
    let e = alpha_ej;
    let mut p = UniversalDriveParams::default();

    let zz = target.get(Z, Z);
    if zz != 0.0 {
        let lever = e * q1.c * q2.c;
        if lever == 0.0 {
            return Err(Error::Infeasible("zz needs c1·c2 ≠ 0".into()));
        }
        p.f_zz = -zz / lever;
        check_amplitude("f_zz", p.f_zz.abs())?;
    }

    let (xx, yy, xy, yx) = (target.get(X, X), target.get(Y, Y), target.get(X, Y), target.get(Y, X));
    let hop = ((xx + yy) / 2.0, (xy - yx) / 2.0);
    let pump = ((xx - yy) / 2.0, -(xy + yx) / 2.0);
    let lever = e * q1.s * q2.s / 2.0;
    let mut theta0 = 0.0;
    let mut theta2 = 0.0;
    if hop.0 != 0.0 || hop.1 != 0.0 || pump.0 != 0.0 || pump.1 != 0.0 {
        if lever == 0.0 {
            return Err(Error::Infeasible("xy block needs s1·s2 ≠ 0".into()));
        }
        // -lever·f·(cos θ, sin θ) = pair
        let sign = lever.signum();
        p.f_xy0 = hop.0.hypot(hop.1) / lever.abs();
        p.f_xy2 = pump.0.hypot(pump.1) / lever.abs();
        check_amplitude("f_xy0", p.f_xy0)?;
        check_amplitude("f_xy2", p.f_xy2)?;
        if p.f_xy0 > 0.0 {
            theta0 = (-sign * hop.1).atan2(-sign * hop.0);
        }
        if p.f_xy2 > 0.0 {
            theta2 = (-sign * pump.1).atan2(-sign * pump.0);
        }
    }
    p.chi1 = (theta2 + theta0) / 2.0;
    p.chi2 = (theta2 - theta0) / 2.0;

    let (f, psi) = quadratic_channel("f_xz", (target.get(X, Z), target.get(Y, Z)), e * q1.s * q2.c)?;
    p.f_xz = f;
    p.psi1 = psi;
    let (f, psi) = quadratic_channel("f_zx", (target.get(Z, X), target.get(Z, Y)), -e * q2.s * q1.c)?;
    p.f_zx = f;
    p.psi2 = psi;
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    /// Stop once the max-norm two-body residual falls below this.
    pub tol: f64,
    pub max_iterations: usize,
    /// Central-difference step per parameter.
    pub fd_step: f64,
    /// Initial Levenberg–Marquardt damping.
    pub damping: f64,
}

impl RefineOptions {
    /// `tol = 1e-4·αE_J`, 50 iterations, step `1e-4`.
    pub fn for_coupling(alpha_ej: f64) -> Self {
        Self {
            tol: 1e-4 * alpha_ej.abs(),
            max_iterations: 50,
            fd_step: 1e-4,
            damping: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: UniversalDriveParams,
    pub seed: UniversalDriveParams,
    pub target: PauliTable,
    /// Oracle table at `params`, single-qubit entries included.
    pub achieved: PauliTable,
    /// Max-norm two-body error against the oracle.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual of the seed followed by every accepted step.
    pub residual_history: Vec<f64>,
}

impl CalibrationResult {
    /// Single-qubit entries of the achieved table, labelled `"xI"` ... `"Iz"`.
    pub fn single_qubit_terms(&self) -> Vec<(String, f64)> {
        use Pauli::{I, X, Y, Z};
        let mut out = Vec::new();
        for a in [X, Y, Z] {
            out.push((format!("{}I", a.label()), self.achieved.get(a, I)));
        }
        for b in [X, Y, Z] {
            out.push((format!("I{}", b.label()), self.achieved.get(I, b)));
        }
        out
    }
}

/// Damped Gauss–Newton on the nine drive parameters against `oracle`.
///
/// A step is accepted only when it lowers the max-norm residual; otherwise
/// the damping grows and the step is retried. Returns the best point found,
/// with `converged = false` when the tolerance was not reached.
pub fn refine<F>(
    seed: &UniversalDriveParams,
    target: &PauliTable,
    oracle: F,
    opts: &RefineOptions,
) -> Result<CalibrationResult>
where
    F: Fn(&UniversalDriveParams) -> Result<PauliTable>,
{
    let residuals = |t: &PauliTable| -> DVector<f64> {
        DVector::from_iterator(9, t.two_body().iter().zip(target.two_body()).map(|(a, b)| a - b))
    };
    let mut x = seed.to_vec();
    let mut table = oracle(seed)?;
    let mut r = residuals(&table);
    let mut best = r.amax();
    let mut history = vec![best];
    let mut mu = opts.damping;
    let mut iterations = 0;
    while best >= opts.tol && iterations < opts.max_iterations {
        iterations += 1;
        let mut jac = DMatrix::zeros(9, 9);
        for k in 0..9 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += opts.fd_step;
            xm[k] -= opts.fd_step;
            let tp = oracle(&UniversalDriveParams::from_vec(&xp))?;
            let tm = oracle(&UniversalDriveParams::from_vec(&xm))?;
            let col = (residuals(&tp) - residuals(&tm)) / (2.0 * opts.fd_step);
            jac.set_column(k, &col);
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let scale = jtj.diagonal().amax().max(f64::MIN_POSITIVE);
        let mut accepted = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..9 {
                a[(i, i)] += mu * scale;
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&-&g)) else {
                mu *= 10.0;
                continue;
            };
            let mut trial = x;
            for i in 0..9 {
                trial[i] += step[i];
            }
            let p = UniversalDriveParams::from_vec(&trial);
            let t = oracle(&p)?;
            let rt = residuals(&t);
            if rt.amax() < best {
                x = trial;
                table = t;
                r = rt;
                best = r.amax();
                history.push(best);
                mu = (mu / 10.0).max(1e-12);
                accepted = true;
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    Ok(CalibrationResult {
        params: UniversalDriveParams::from_vec(&x),
        seed: *seed,
        target: *target,
        achieved: table,
        residual: best,
        iterations,
        converged: best < opts.tol,
        residual_history: history,
    })
}

/// Seed plus refinement against the time-averaged coefficient table of
/// `coupler`.
pub fn calibrate(coupler: &UniversalCoupler, target: &PauliTable) -> Result<CalibrationResult> {
    let seed = synthesize_seed(
        target,
        &coupler.q1.phase_coeffs,
        &coupler.q2.phase_coeffs,
        coupler.alpha_ej,
    )?;
    refine(
        &seed,
        target,
        |p| coupler.average_cab(p),
        &RefineOptions::for_coupling(coupler.alpha_ej),
    )
}
