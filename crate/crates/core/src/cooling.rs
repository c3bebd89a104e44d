//! Passive cooling of a primary qubit through a lossy shadow qubit.

use serde::{Deserialize, Serialize};

use crate::device::{validate_scales, ScaleWarning};
use crate::dynamics::{steady_state, JumpOperator};
use crate::error::{Error, Result};
use crate::operator::{embed, kron, pauli, Operator};

/// Shadow occupation is set to zero beyond this `ω_S/T`.
pub const SHADOW_CUTOFF: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    Exchange,
    Xx,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoolingSpec {
    pub omega: f64,
    pub omega_s: f64,
    pub g: f64,
    pub gamma_s: f64,
    pub kappa: f64,
    pub temperature: f64,
    pub coupling_kind: CouplingKind,
    /// Include thermal excitation of the shadow qubit at `e^{−ω_S/T}`.
    #[serde(default = "default_true")]
    pub shadow_thermal: bool,
}

fn default_true() -> bool {
    true
}

impl CoolingSpec {
    pub fn detuning(&self) -> f64 {
        self.omega_s - self.omega
    }

    /// Checks the hard invariants; returns scale warnings for `g`.
    pub fn validate(&self) -> Result<Vec<ScaleWarning>> {
        let vals = [self.omega, self.omega_s, self.g, self.gamma_s, self.kappa, self.temperature];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("cooling parameters must be finite".into()));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter("omega must be positive".into()));
        }
        if !(self.detuning() > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega_s - omega = {} must be positive",
                self.detuning()
            )));
        }
        if !(self.gamma_s > 0.0) || !(self.kappa > 0.0) {
            return Err(Error::InvalidParameter("gamma_s and kappa must be positive".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidParameter("temperature must be positive".into()));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParameter("g must be nonnegative".into()));
        }
        Ok(validate_scales(
            &[("g".into(), self.g)],
            &[("omega".into(), self.omega), ("delta".into(), self.detuning())],
        ))
    }

    pub fn with_temperature(&self, temperature: f64) -> Self {
        Self { temperature, ..self.clone() }
    }

    pub fn with_kind(&self, coupling_kind: CouplingKind) -> Self {
        Self { coupling_kind, ..self.clone() }
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }
}

/// Temperature at which `e^{−ω/T}` equals `n_th`.
pub fn temperature_for_occupation(omega: f64, n_th: f64) -> Result<f64> {
    if !(n_th > 0.0 && n_th < 1.0) {
        return Err(Error::InvalidParameter(format!("n_th = {n_th} must lie in (0, 1)")));
    }
    Ok(omega / -n_th.ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalRates {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub n_th: f64,
}

/// `Γ⁺ = κN`, `Γ⁻ = κ(1+N)` with `N = e^{−ω/T}`.
pub fn thermal_rates(kappa: f64, omega: f64, temperature: f64) -> Result<ThermalRates> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter("temperature must be positive".into()));
    }
    let n_th = (-omega / temperature).exp();
    Ok(ThermalRates {
        gamma_plus: kappa * n_th,
        gamma_minus: kappa * (1.0 + n_th),
        n_th,
    })
}

/// `4g²Γ_S/(4g² + Γ_S²)`.
pub fn induced_decay_rate(g: f64, gamma_s: f64) -> f64 {
    let den = 4.0 * g * g + gamma_s * gamma_s;
    if den == 0.0 {
        return 0.0;
    }
    4.0 * g * g * gamma_s / den
}

/// Excitation rate from the off-resonant double excitation of an xx coupling.
pub fn xx_error_rate(g: f64, gamma_s: f64, omega: f64) -> f64 {
    g * g * gamma_s / (4.0 * omega * omega)
}

fn t_eff(omega: f64, ratio: f64) -> f64 {
    if ratio <= 0.0 {
        0.0
    } else {
        omega / -ratio.ln()
    }
}

/// Closed-form `(ρ⁺, T_eff)` with `ρ⁺ = e^{−ω/T_eff}`.
pub fn effective_excitation(spec: &CoolingSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let r = thermal_rates(spec.kappa, spec.omega, spec.temperature)?;
    let mut num = spec.kappa * r.n_th;
    if spec.coupling_kind == CouplingKind::Xx {
        num += xx_error_rate(spec.g, spec.gamma_s, spec.omega);
    }
    let rho = num / (spec.kappa + induced_decay_rate(spec.g, spec.gamma_s));
    if rho >= 1.0 {
        return Err(Error::Unphysical(format!("effective Boltzmann factor {rho} >= 1")));
    }
    Ok((rho, t_eff(spec.omega, rho)))
}

/// Thermal occupation of the shadow qubit, zero when disabled or negligible.
pub fn shadow_occupation(spec: &CoolingSpec) -> f64 {
    let x = spec.omega_s / spec.temperature;
    if !spec.shadow_thermal || x > SHADOW_CUTOFF {
        0.0
    } else {
        (-x).exp()
    }
}

/// Rotating-frame Hamiltonian of one primary (slot 0) and shadow (slot 1) pair.
pub fn pair_hamiltonian(spec: &CoolingSpec) -> Result<Operator> {
    let dims = [2, 2];
    let z = pauli::z();
    let mut h = &(&embed(&z, 0, &dims)? + &embed(&z, 1, &dims)?) * (-spec.omega / 2.0);
    let coupling = match spec.coupling_kind {
        CouplingKind::Exchange => {
            let hop = kron(&pauli::raising(), &pauli::lowering());
            &hop + &hop.adjoint()
        }
        CouplingKind::Xx => kron(&pauli::x(), &pauli::x()),
    };
    h = &h + &(&coupling * spec.g);
    Ok(h)
}

/// Thermal jumps on the primary, decay (and optional excitation) on the shadow.
pub fn pair_jumps(spec: &CoolingSpec) -> Result<Vec<JumpOperator>> {
    let dims = [2, 2];
    let r = thermal_rates(spec.kappa, spec.omega, spec.temperature)?;
    let ns = shadow_occupation(spec);
    let lower = pauli::lowering();
    let raise = pauli::raising();
    let mut jumps = vec![
        JumpOperator::new(embed(&lower, 0, &dims)?, r.gamma_minus)?,
        JumpOperator::new(embed(&lower, 1, &dims)?, spec.gamma_s * (1.0 + ns))?,
    ];
    if r.gamma_plus > 0.0 {
        jumps.push(JumpOperator::new(embed(&raise, 0, &dims)?, r.gamma_plus)?);
    }
    if ns > 0.0 {
        jumps.push(JumpOperator::new(embed(&raise, 1, &dims)?, spec.gamma_s * ns)?);
    }
    Ok(jumps)
}

/// Steady state of the primary–shadow pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoolingSteadyState {
    /// Primary excited-state probability.
    pub excitation: f64,
    /// `p1/p0`, the Boltzmann factor `e^{−ω/T_eff}`.
    pub rho_plus: f64,
    pub t_eff: f64,
    pub shadow_excitation: f64,
    /// Uncoupled value of `p1/p0`, `N/(1+N)`.
    pub thermal_rho_plus: f64,
}

impl CoolingSteadyState {
    pub fn is_hotter_than_thermal(&self) -> bool {
        self.rho_plus > self.thermal_rho_plus
    }
}

pub fn simulate_cooling(spec: &CoolingSpec) -> Result<CoolingSteadyState> {
    spec.validate()?;
    let h = pair_hamiltonian(spec)?;
    let rho = steady_state(&h, &pair_jumps(spec)?)?;
    // basis index = 2·primary + shadow
    let excitation = rho.population(2) + rho.population(3);
    let shadow_excitation = rho.population(1) + rho.population(3);
    let rho_plus = excitation / (1.0 - excitation);
    let r = thermal_rates(spec.kappa, spec.omega, spec.temperature)?;
    Ok(CoolingSteadyState {
        excitation,
        rho_plus,
        t_eff: t_eff(spec.omega, rho_plus),
        shadow_excitation,
        thermal_rho_plus: r.gamma_plus / r.gamma_minus,
    })
}

/// One sweep row: closed form next to the Lindblad steady state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoolingRecord {
    pub rho_plus_analytic: f64,
    pub rho_plus_lindblad: f64,
    pub t_eff_analytic: f64,
    pub t_eff_lindblad: f64,
    pub excitation_lindblad: f64,
}

pub fn cooling_record(spec: &CoolingSpec) -> Result<CoolingRecord> {
    let (rho_plus_analytic, t_eff_analytic) = effective_excitation(spec)?;
    let ss = simulate_cooling(spec)?;
    Ok(CoolingRecord {
        rho_plus_analytic,
        rho_plus_lindblad: ss.rho_plus,
        t_eff_analytic,
        t_eff_lindblad: ss.t_eff,
        excitation_lindblad: ss.excitation,
    })
}

/// Temperature below which xx coupling heats the primary qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeatingCrossover {
    pub temperature: f64,
    /// Temperature just below the crossover where both steady states were checked.
    pub probe_temperature: f64,
    pub xx: CoolingSteadyState,
    pub exchange: CoolingSteadyState,
    pub iterations: usize,
}

impl HeatingCrossover {
    /// xx hotter than thermal while exchange stays colder.
    pub fn separates(&self) -> bool {
        self.xx.is_hotter_than_thermal() && !self.exchange.is_hotter_than_thermal()
    }
}

/// Bisects `ln(ρ⁺_xx/ρ⁺_thermal)` over `[t_lo, t_hi]`, which must bracket a sign change.
pub fn heating_crossover(spec: &CoolingSpec, t_lo: f64, t_hi: f64, rel_tol: f64) -> Result<HeatingCrossover> {
    if !(t_lo > 0.0 && t_hi > t_lo) {
        return Err(Error::InvalidParameter("need 0 < t_lo < t_hi".into()));
    }
    let xx = spec.with_kind(CouplingKind::Xx);
    let margin = |t: f64| -> Result<f64> {
        let s = simulate_cooling(&xx.with_temperature(t))?;
        Ok((s.rho_plus / s.thermal_rho_plus).ln())
    };
    let (mut lo, mut hi) = (t_lo, t_hi);
    if !(margin(lo)? > 0.0 && margin(hi)? < 0.0) {
        return Err(Error::Infeasible(format!(
            "xx coupling does not change from heating to cooling on [{t_lo}, {t_hi}]"
        )));
    }
    let mut iterations = 0;
    while hi - lo > rel_tol * hi && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(HeatingCrossover {
        temperature: 0.5 * (lo + hi),
        probe_temperature: lo,
        xx: simulate_cooling(&xx.with_temperature(lo))?,
        exchange: simulate_cooling(&spec.with_kind(CouplingKind::Exchange).with_temperature(lo))?,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example(g: f64) -> CoolingSpec {
        CoolingSpec {
            omega: 1.0,
            omega_s: 8.0,
            g,
            gamma_s: 0.02,
            kappa: 1e-4,
            temperature: temperature_for_occupation(1.0, 0.05).unwrap(),
            coupling_kind: CouplingKind::Exchange,
            shadow_thermal: true,
        }
    }

    #[test]
    fn rates() {
        let r = thermal_rates(0.3, 1.0, 1.0 / 3.0).unwrap();
        assert_relative_eq!(r.n_th, (-3.0_f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(r.gamma_minus - r.gamma_plus, 0.3, max_relative = 1e-14);
        let cold = thermal_rates(0.3, 1.0, 1e-4).unwrap();
        assert_eq!(cold.gamma_plus, 0.0);
        assert_eq!(cold.gamma_minus, 0.3);
        assert!(thermal_rates(0.3, 1.0, 0.0).is_err());
    }

    #[test]
    fn induced_rate() {
        assert_eq!(induced_decay_rate(0.0, 0.02), 0.0);
        assert_eq!(induced_decay_rate(0.0, 0.0), 0.0);
        assert_relative_eq!(induced_decay_rate(0.01, 0.02), 0.01, max_relative = 1e-14);
        // maximal over Γ_S at Γ_S = 2g
        let g = 0.01;
        let peak = induced_decay_rate(g, 2.0 * g);
        assert_relative_eq!(peak, g, max_relative = 1e-14);
        for gs in [0.015, 0.019, 0.021, 0.03] {
            assert!(induced_decay_rate(g, gs) < peak);
        }
        assert_relative_eq!(induced_decay_rate(1e-4, 1.0), 4e-8, max_relative = 1e-7);
    }

    #[test]
    fn closed_form_examples() {
        let (rho, t) = effective_excitation(&example(0.0)).unwrap();
        assert_relative_eq!(rho, 0.05, max_relative = 1e-12);
        assert_relative_eq!(t, example(0.0).temperature, max_relative = 1e-12);
        let (rho, _) = effective_excitation(&example(0.01)).unwrap();
        assert_relative_eq!(rho, 1e-4 * 0.05 / (1e-4 + 0.01), max_relative = 1e-12);
        assert!((rho - 4.95e-4).abs() < 1e-6);
        assert!(0.05 / rho > 99.0);
    }

    #[test]
    fn closed_form_xx_heats_when_cold() {
        let s = example(0.05).with_kind(CouplingKind::Xx).with_temperature(1.0 / 12.0);
        let (_, t) = effective_excitation(&s).unwrap();
        assert!(t > s.temperature);
    }

    #[test]
    fn decoupled_steady_state_is_thermal() {
        let s = simulate_cooling(&example(0.0)).unwrap();
        let r = thermal_rates(1e-4, 1.0, example(0.0).temperature).unwrap();
        assert_relative_eq!(s.excitation, r.gamma_plus / (r.gamma_plus + r.gamma_minus), max_relative = 1e-8);
        assert_relative_eq!(s.rho_plus, s.thermal_rho_plus, max_relative = 1e-8);
    }

    #[test]
    fn exchange_matches_closed_form() {
        let spec = example(0.01);
        let rec = cooling_record(&spec).unwrap();
        assert!((rec.rho_plus_lindblad / rec.rho_plus_analytic - 1.0).abs() < 0.15, "{rec:?}");
    }

    #[test]
    fn excitation_non_increasing_in_g() {
        let base = example(0.0);
        let mut last = f64::INFINITY;
        for k in 0..8 {
            let g = base.gamma_s / 2.0 * k as f64 / 7.0;
            let e = simulate_cooling(&base.with_g(g)).unwrap().excitation;
            assert!(e <= last * (1.0 + 1e-9), "g = {g}: {e} > {last}");
            last = e;
        }
    }

    #[test]
    fn shadow_occupation_cutoff() {
        let mut s = example(0.01);
        assert_eq!(shadow_occupation(&s), 0.0);
        s.omega_s = 1.5;
        assert!(shadow_occupation(&s) > 0.0);
        s.shadow_thermal = false;
        assert_eq!(shadow_occupation(&s), 0.0);
    }

    #[test]
    fn crossover_exists() {
        let base = example(0.05);
        let c = heating_crossover(&base, 1.0 / 15.0, 0.5, 1e-6).unwrap();
        assert!(c.separates(), "{c:?}");
        assert!(c.temperature > 1.0 / 15.0 && c.temperature < 0.5);
    }

    #[test]
    fn invalid_specs() {
        let mut s = example(0.01);
        s.omega_s = 0.5;
        assert!(s.validate().is_err());
        let mut s = example(0.01);
        s.kappa = 0.0;
        assert!(s.validate().is_err());
        let mut s = example(0.01);
        s.omega_s = 1.05;
        assert!(!s.validate().unwrap().is_empty());
    }
}
