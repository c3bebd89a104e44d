//! Invariant suite run by `selfcheck`: unitarity, Hermiticity, Lindblad
//! trace and positivity, frame round trips and cheap oracle cross-checks.
//!
//! Every check is deterministic; the report holds no timings.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cooling::{pair_hamiltonian, pair_jumps, CoolingSpec, CouplingKind};
use crate::device::PhaseCoeffs;
use crate::drive::UniversalDriveParams;
use crate::dynamics::{lindblad_evolve_with, lindblad_residual, propagate, steady_state, DensityMatrix, PropagateOptions};
use crate::error::Result;
use crate::multilevel::{effective_multilevel_hamiltonian, multilevel_frame, multilevel_system, MultilevelSpec};
use crate::operator::{Matrix, Operator, Pauli};
use crate::readout::{ReadoutSystem, ReadoutTones};
use crate::rwa::{RotatingFrame, UniversalCoupler};
use crate::timedep::TimeDependent;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub unitarity: f64,
    pub hermiticity: f64,
    /// Trace drift per unit time.
    pub trace_drift: f64,
    /// Most negative eigenvalue tolerated, as a magnitude.
    pub positivity: f64,
    pub frame_round_trip: f64,
    /// Relative agreement between independent coefficient oracles.
    pub oracle_relative: f64,
    pub steady_state_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitarity: 1e-8,
            hermiticity: 1e-12,
            trace_drift: 1e-8,
            positivity: 1e-8,
            frame_round_trip: 1e-10,
            oracle_relative: 0.03,
            steady_state_residual: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SelfcheckReport {
    pub checks: Vec<Check>,
}

impl SelfcheckReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    fn push(&mut self, name: &str, value: Result<f64>, tolerance: f64) {
        let (value, passed) = match value {
            Ok(v) => (v, v <= tolerance),
            Err(_) => (f64::NAN, false),
        };
        self.checks.push(Check {
            name: name.to_string(),
            value,
            tolerance,
            passed,
        });
    }
}

impl fmt::Display for SelfcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {:<40} {:.3e} (tol {:.1e})", c.name, c.value, c.tolerance)?;
        }
        let failed = self.failures().len();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

fn unitarity_error(u: &Operator) -> f64 {
    (&(u * &u.adjoint()) - &Operator::identity(u.dims())).max_norm()
}

fn round_trip(frame: &RotatingFrame, h: &Matrix, t: f64) -> f64 {
    let back = frame.inverse().transform(&frame.transform(h, t), t);
    crate::operator::max_abs(&(back - h))
}

fn criterion_coupler() -> Result<UniversalCoupler> {
    let p = PhaseCoeffs::two_level(1.0, 0.0, 1.0);
    UniversalCoupler::new(1.0, 0.75, 0.02, p, p)
}

fn all_channels() -> UniversalDriveParams {
    UniversalDriveParams {
        f_zz: 0.05,
        f_xy0: 0.05,
        f_xy2: 0.04,
        f_xz: 0.05,
        f_zx: 0.05,
        chi1: 0.3,
        chi2: -0.2,
        psi1: 0.7,
        psi2: -0.4,
    }
}

fn multilevel_spec() -> MultilevelSpec {
    MultilevelSpec::kerr(1.0, 1.25, 0.05, 0.0625, 0.0125, [0.1; 4])
}

fn cooling_spec() -> CoolingSpec {
    CoolingSpec {
        omega: 1.0,
        omega_s: 1.0,
        g: 0.05,
        gamma_s: 0.2,
        kappa: 0.01,
        temperature: 0.3,
        coupling_kind: CouplingKind::Exchange,
        shadow_thermal: true,
    }
}

/// Runs the suite at the default tolerances.
pub fn selfcheck() -> SelfcheckReport {
    selfcheck_with(&Tolerances::default())
}

pub fn selfcheck_with(tol: &Tolerances) -> SelfcheckReport {
    let mut r = SelfcheckReport::default();
    let coupler = criterion_coupler();
    let drive = all_channels();
    let ml = multilevel_spec();

    r.push(
        "unitarity: universal one-period propagator",
        coupler.as_ref().map_err(Clone::clone).and_then(|c| {
            let u = propagate(&c.system(&drive)?, 0.0, c.period(&drive)?, &PropagateOptions::new(c.dt(&drive)?))?;
            Ok(unitarity_error(&u))
        }),
        tol.unitarity,
    );
    r.push(
        "unitarity: multilevel tone-period propagator",
        (|| {
            let t = 2.0 * std::f64::consts::PI / ml.delta();
            let u = propagate(&multilevel_system(&ml)?, 0.0, t, &PropagateOptions::new(0.02))?;
            Ok(unitarity_error(&u))
        })(),
        tol.unitarity,
    );
    r.push(
        "unitarity: frame unitary",
        multilevel_frame(&ml).map(|f| unitarity_error(&f.unitary(1234.5))),
        tol.unitarity,
    );

    r.push(
        "hermiticity: time-averaged coupler",
        coupler.as_ref().map_err(Clone::clone).and_then(|c| Ok(c.average(&drive)?.hermiticity_error())),
        tol.hermiticity,
    );
    r.push(
        "hermiticity: Floquet coupler",
        coupler.as_ref().map_err(Clone::clone).and_then(|c| Ok(c.floquet(&drive)?.hermiticity_error())),
        tol.hermiticity,
    );
    r.push(
        "hermiticity: readout effective operator",
        (|| {
            let sys = ReadoutSystem::transmon(50.0, 1.0, 1.5, 0.05, 8)?;
            let tones = ReadoutTones {
                f1: 0.05,
                f2: 0.04,
                f3: 0.02,
                chi: 0.4,
            };
            Ok(sys.effective(&tones)?.operator(8, true)?.hermiticity_error())
        })(),
        tol.hermiticity,
    );
    r.push(
        "hermiticity: multilevel effective",
        effective_multilevel_hamiltonian(&ml).map(|h| h.hermiticity_error()),
        tol.hermiticity,
    );

    let spec = cooling_spec();
    let lindblad = (|| {
        let h = pair_hamiltonian(&spec)?;
        let jumps = pair_jumps(&spec)?;
        let rho0 = DensityMatrix::basis(2, h.dims().to_vec())?;
        let (mut drift, mut min_eig) = (0.0_f64, 0.0_f64);
        let dims = h.dims().to_vec();
        lindblad_evolve_with(&h, &jumps, &rho0, 20.0, 0.02, |t, rho| {
            if t > 0.0 {
                drift = drift.max((rho.trace().re - 1.0).abs() / t);
            }
            let m = DensityMatrix::raw(rho.clone(), dims.clone()).min_eigenvalue();
            min_eig = min_eig.min(m);
        })?;
        let ss = steady_state(&h, &jumps)?;
        Ok((drift, min_eig, ss.min_eigenvalue(), lindblad_residual(&h, &jumps, &ss)))
    })();
    let part = |f: fn(&(f64, f64, f64, f64)) -> f64| lindblad.as_ref().map(f).map_err(Clone::clone);
    r.push("lindblad: trace drift per unit time", part(|x| x.0), tol.trace_drift);
    r.push("lindblad: negative eigenvalue along trajectory", part(|x| (-x.1).max(0.0)), tol.positivity);
    r.push("lindblad: negative eigenvalue of steady state", part(|x| (-x.2).max(0.0)), tol.positivity);
    r.push("lindblad: steady-state residual", part(|x| x.3), tol.steady_state_residual);

    r.push(
        "frame round trip: universal coupler",
        coupler.as_ref().map_err(Clone::clone).and_then(|c| {
            let h = c.system(&drive)?.matrix_at(0.37);
            Ok(round_trip(&c.frame()?, &h, 91.3))
        }),
        tol.frame_round_trip,
    );
    r.push(
        "frame round trip: multilevel",
        (|| {
            let h = multilevel_system(&ml)?.matrix_at(2.9);
            Ok(round_trip(&multilevel_frame(&ml)?, &h, 517.2))
        })(),
        tol.frame_round_trip,
    );

    let zz_only = UniversalDriveParams {
        f_zz: 0.05,
        ..Default::default()
    };
    let zz = |t: &crate::operator::PauliTable| t.get(Pauli::Z, Pauli::Z);
    r.push(
        "oracle: time average vs Floquet (zz)",
        coupler.as_ref().map_err(Clone::clone).and_then(|c| {
            let (a, b) = (zz(&c.average_cab(&zz_only)?), zz(&c.floquet_cab(&zz_only)?));
            Ok((a / b - 1.0).abs())
        }),
        tol.oracle_relative,
    );
    r.push(
        "oracle: time average vs closed form (zz)",
        coupler.as_ref().map_err(Clone::clone).and_then(|c| {
            let (a, b) = (zz(&c.average_cab(&zz_only)?), zz(&c.analytic(&zz_only)));
            Ok((a / b - 1.0).abs())
        }),
        tol.oracle_relative,
    );
    r
}
