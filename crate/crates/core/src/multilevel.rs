//! Two driven transmons mapped onto a linear two-site boson model.
//!
//! The rotating frame absorbs each site's two-photon nonlinearity, and the
//! multi-tone junction drive restores number-conserving hopping at the
//! harmonic `√n` matrix elements. What remains on the diagonal is the
//! three-photon term.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::device::{level_energy, validate_scales, JunctionSystem, ScaleWarning};
use crate::drive::{commensurate_period, multilevel_signal_detuned, DriveSignal};
use crate::dynamics::{propagate, propagate_periodic, subspace_fidelity, PropagateOptions};
use crate::error::{Error, Result};
use crate::operator::{boson_ops, embed, matrix_exp, Operator, C64};
use crate::rwa::{floquet_from_unitary, time_average, to_rotating_frame, RotatingFrame};

/// Zero-point phase amplitude used when a spec does not set one.
pub const DEFAULT_SIN_AMPLITUDE: f64 = 0.3;

/// Junction phase operators in the harmonic truncation:
/// `sin φ = s(a + a†)`, `cos φ = c0 + c·n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderPhase {
    pub s: f64,
    pub c0: f64,
    pub c: f64,
}

impl LadderPhase {
    /// Second-order expansion of a harmonic phase with zero-point amplitude `s`.
    pub fn harmonic(s: f64) -> Self {
        Self {
            s,
            c0: 1.0 - s * s / 2.0,
            c: -s * s,
        }
    }
}

impl Default for LadderPhase {
    fn default() -> Self {
        Self::harmonic(DEFAULT_SIN_AMPLITUDE)
    }
}

fn default_levels() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilevelSpec {
    pub omega1: f64,
    pub omega2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    pub alpha_ej: f64,
    /// Tone amplitudes `k0..k3`.
    pub k: [f64; 4],
    #[serde(default)]
    pub phase: LadderPhase,
    /// Offsets of the `k1` and `k2` tones from `Δ + α1` and `Δ − α2`.
    #[serde(default)]
    pub detune: [f64; 2],
}

impl MultilevelSpec {
    /// Kerr-like sites (`β = 3α`) with default phase amplitudes and
    /// `alpha_ej` set so that `αE_J s² = coupling`.
    pub fn kerr(omega1: f64, omega2: f64, alpha1: f64, alpha2: f64, coupling: f64, k: [f64; 4]) -> Self {
        let phase = LadderPhase::default();
        Self {
            omega1,
            omega2,
            alpha1,
            alpha2,
            beta1: 3.0 * alpha1,
            beta2: 3.0 * alpha2,
            levels: 4,
            alpha_ej: coupling / (phase.s * phase.s),
            k,
            phase,
            detune: [0.0; 2],
        }
    }

    pub fn delta(&self) -> f64 {
        self.omega2 - self.omega1
    }

    pub fn alpha12(&self) -> f64 {
        self.alpha1 - self.alpha2
    }

    /// `αE_J s²`, the hopping scale per unit tone amplitude.
    pub fn coupling(&self) -> f64 {
        self.alpha_ej * self.phase.s * self.phase.s
    }

    pub fn dims(&self) -> [usize; 2] {
        [self.levels, self.levels]
    }

    pub fn with_k(&self, k: [f64; 4]) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn with_detune(&self, detune: [f64; 2]) -> Self {
        Self {
            detune,
            ..self.clone()
        }
    }

    /// Nonlinearities absorbed by the frame, following the tones actually
    /// driven.
    pub fn frame_alphas(&self) -> [f64; 2] {
        [self.alpha1 + self.detune[0], self.alpha2 + self.detune[1]]
    }

    pub fn signal(&self) -> Result<DriveSignal> {
        multilevel_signal_detuned(self.k, self.delta(), self.alpha1, self.alpha2, self.detune)
    }

    /// The five tone frequencies `Δ, Δ+α1, Δ−α2, Δ+α12, Δ−α12` (with detuning).
    pub fn tones(&self) -> [f64; 5] {
        let (d, a12) = (self.delta(), self.alpha12());
        [
            d,
            d + self.alpha1 + self.detune[0],
            d - self.alpha2 - self.detune[1],
            d + a12,
            d - a12,
        ]
    }

    /// Smallest separation between two tones or between a tone and zero.
    pub fn min_spacing(&self) -> f64 {
        let t = self.tones();
        let mut gap = t.iter().fold(f64::INFINITY, |m, f| m.min(f.abs()));
        for (i, a) in t.iter().enumerate() {
            for b in &t[i + 1..] {
                gap = gap.min((a.abs() - b.abs()).abs());
            }
        }
        gap
    }

    pub fn validate(&self) -> Result<Vec<ScaleWarning>> {
        let all = [
            self.omega1,
            self.omega2,
            self.alpha1,
            self.alpha2,
            self.beta1,
            self.beta2,
            self.alpha_ej,
            self.phase.s,
            self.phase.c0,
            self.phase.c,
            self.detune[0],
            self.detune[1],
        ];
        if all.iter().chain(self.k.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("multilevel parameters must be finite".into()));
        }
        if !(3..=8).contains(&self.levels) {
            return Err(Error::InvalidParameter(format!(
                "levels = {} outside 3..=8",
                self.levels
            )));
        }
        if self.delta() == 0.0 {
            return Err(Error::InvalidParameter("omega2 − omega1 must be nonzero".into()));
        }
        self.signal()?;
        let elements = vec![(
            "alpha_ej s^2 max|k|".to_string(),
            self.coupling() * self.k.iter().fold(0.0_f64, |m, k| m.max(k.abs())),
        )];
        let gaps = vec![("min tone spacing".to_string(), self.min_spacing())];
        Ok(validate_scales(&elements, &gaps))
    }
}

/// Index of `|n1 n2⟩` in the product basis.
pub fn basis_index(levels: usize, n1: usize, n2: usize) -> usize {
    n1 * levels + n2
}

fn projector(levels: usize, k: usize) -> Operator {
    Operator::projector_element(levels, k, k)
}

fn site(op: &Operator, slot: usize, levels: usize) -> Operator {
    embed(op, slot, &[levels, levels]).expect("site operator matches truncation")
}

/// `n1 + n2`.
pub fn total_number(levels: usize) -> Result<Operator> {
    let b = boson_ops(levels)?;
    Ok(&site(&b.n, 0, levels) + &site(&b.n, 1, levels))
}

/// Bare diagonal Hamiltonian of the two sites.
pub fn bare_hamiltonian(spec: &MultilevelSpec) -> Result<Operator> {
    let l = spec.levels;
    let mut d = Vec::with_capacity(l * l);
    for n1 in 0..l {
        for n2 in 0..l {
            d.push(
                level_energy(spec.omega1, spec.alpha1, spec.beta1, n1)
                    + level_energy(spec.omega2, spec.alpha2, spec.beta2, n2),
            );
        }
    }
    Operator::diagonal(&d, &spec.dims())
}

/// Lab-frame driven junction system.
pub fn multilevel_system(spec: &MultilevelSpec) -> Result<JunctionSystem> {
    spec.validate()?;
    let l = spec.levels;
    let b = boson_ops(l)?;
    let sin = &(&b.a + &b.adag) * spec.phase.s;
    let cos = &(&Operator::identity(&[l]) * spec.phase.c0) + &(&b.n * spec.phase.c);
    JunctionSystem::from_operators(
        bare_hamiltonian(spec)?,
        [&sin, &cos],
        [&sin, &cos],
        spec.alpha_ej,
        spec.signal()?,
    )
}

/// Frame generated by `−α1 P1² + Δ n2 − α2 P2²`, with `P_i²` the projector
/// on level 2 of site `i`.
pub fn multilevel_frame(spec: &MultilevelSpec) -> Result<RotatingFrame> {
    if spec.levels < 3 {
        return Err(Error::InvalidParameter("the multilevel frame needs levels >= 3".into()));
    }
    let l = spec.levels;
    let [a1, a2] = spec.frame_alphas();
    let b = boson_ops(l)?;
    RotatingFrame::new(vec![
        (site(&projector(l, 2), 0, l), -a1),
        (site(&b.n, 1, l), spec.delta()),
        (site(&projector(l, 2), 1, l), -a2),
    ])
}

/// Frame used for averaging: `multilevel_frame` plus `ω1(n1 + n2)`, so that
/// number-changing terms rotate at `2ω1` and average out.
fn averaging_frame(spec: &MultilevelSpec) -> Result<RotatingFrame> {
    let mut g = multilevel_frame(spec)?.generators().to_vec();
    g.push((total_number(spec.levels)?, spec.omega1));
    RotatingFrame::new(g)
}

/// Exact common period of the tones and every frame frequency.
pub fn multilevel_period(spec: &MultilevelSpec) -> Result<f64> {
    let mut freqs = spec.tones().to_vec();
    freqs.extend(spec.frame_alphas());
    freqs.push(spec.delta());
    freqs.push(spec.omega1);
    let base = spec.delta().abs();
    Ok(commensurate_period(base, &freqs)?.expect("Δ is nonzero"))
}

fn max_frequency(spec: &MultilevelSpec) -> f64 {
    let tone = spec.tones().iter().fold(0.0_f64, |m, f| m.max(f.abs()));
    2.0 * (spec.omega1.abs() + spec.omega2.abs()) + tone
}

/// Time-averaged Hamiltonian in the `multilevel_frame`, with the
/// `ω1(n1 + n2)` drift restored on the diagonal.
pub fn effective_multilevel_hamiltonian(spec: &MultilevelSpec) -> Result<Operator> {
    let frame = averaging_frame(spec)?;
    let h = to_rotating_frame(multilevel_system(spec)?, &frame)?;
    let period = multilevel_period(spec)?;
    let cycles = (period * max_frequency(spec) / (2.0 * PI)).ceil() as usize;
    let avg = time_average(&h, period, 64 * cycles.max(1))?;
    Ok(&avg + &(&total_number(spec.levels)? * spec.omega1))
}

/// Diagonal that `multilevel_frame` leaves on the bare Hamiltonian:
/// `H0 − (−α1 P1² + Δ n2 − α2 P2²)`.
pub fn frame_diagonal(spec: &MultilevelSpec) -> Result<Operator> {
    Ok(&bare_hamiltonian(spec)? - multilevel_frame(spec)?.generator())
}

/// `ω1(n1 + n2) − β1 P1³ − β2 P2³`.
pub fn target_diagonal(spec: &MultilevelSpec) -> Result<Operator> {
    let l = spec.levels;
    let mut d = vec![0.0; l * l];
    for n1 in 0..l {
        for n2 in 0..l {
            let mut e = spec.omega1 * (n1 + n2) as f64;
            if n1 == 3 {
                e -= spec.beta1;
            }
            if n2 == 3 {
                e -= spec.beta2;
            }
            d[basis_index(l, n1, n2)] = e;
        }
    }
    Operator::diagonal(&d, &spec.dims())
}

/// Floquet Hamiltonian beyond first order, expressed in the
/// `multilevel_frame` like `effective_multilevel_hamiltonian`.
///
/// Over the common period of the tones and every bare level energy the
/// interaction picture of the bare Hamiltonian returns to the identity, so
/// the lab-frame one-period propagator is also the interaction-picture one.
/// Its logarithm has quasi-energies near zero, far from the branch cut, and
/// the frame-leftover diagonal is added back.
pub fn floquet_multilevel_hamiltonian(spec: &MultilevelSpec) -> Result<Operator> {
    let period = bare_period(spec)?;
    let u = propagate(&multilevel_system(spec)?, 0.0, period, &propagation_options(spec))?;
    let hf = floquet_from_unitary(&u, period)?;
    Ok(&hf + &frame_diagonal(spec)?)
}

fn propagation_options(spec: &MultilevelSpec) -> PropagateOptions {
    PropagateOptions::new(2.0 * PI / max_frequency(spec) / 40.0).with_tol(1e-10)
}

fn bare_period(spec: &MultilevelSpec) -> Result<f64> {
    let mut freqs = spec.tones().to_vec();
    let h0 = bare_hamiltonian(spec)?;
    freqs.extend(h0.diagonal_values().iter().map(|z| z.re));
    freqs.extend(spec.frame_alphas());
    commensurate_period(spec.delta().abs(), &freqs)?
        .ok_or_else(|| Error::Degenerate("no nonzero frequency".into()))
}

/// Residual two-photon nonlinearity read off an effective Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suppression {
    pub residual_alpha1: f64,
    pub residual_alpha2: f64,
    /// `|residual|/|bare|` per site.
    pub ratio_to_bare: [f64; 2],
}

impl Suppression {
    pub fn worst_ratio(&self) -> f64 {
        self.ratio_to_bare[0].max(self.ratio_to_bare[1])
    }
}

/// `α_res = −(E(2) − 2E(1) + E(0))` per site, from the diagonal of `h_eff`
/// with the other site empty.
pub fn residual_nonlinearity(spec: &MultilevelSpec, h_eff: &Operator) -> Suppression {
    let l = spec.levels;
    let e = |n1, n2| h_eff.get(basis_index(l, n1, n2), basis_index(l, n1, n2)).re;
    let r1 = -(e(2, 0) - 2.0 * e(1, 0) + e(0, 0));
    let r2 = -(e(0, 2) - 2.0 * e(0, 1) + e(0, 0));
    let ratio = |r: f64, a: f64| if a == 0.0 { r.abs() } else { (r / a).abs() };
    Suppression {
        residual_alpha1: r1,
        residual_alpha2: r2,
        ratio_to_bare: [ratio(r1, spec.alpha1), ratio(r2, spec.alpha2)],
    }
}

pub fn nonlinearity_suppression(spec: &MultilevelSpec) -> Result<Suppression> {
    Ok(residual_nonlinearity(spec, &effective_multilevel_hamiltonian(spec)?))
}

/// `⟨11|H|02⟩ / ⟨01|H|10⟩`.
pub fn hopping_ratio(spec: &MultilevelSpec, h_eff: &Operator) -> Result<f64> {
    let l = spec.levels;
    let one = h_eff.get(basis_index(l, 0, 1), basis_index(l, 1, 0));
    let two = h_eff.get(basis_index(l, 1, 1), basis_index(l, 0, 2));
    if one.norm() == 0.0 {
        return Err(Error::Degenerate("single-photon hopping vanishes".into()));
    }
    Ok((two / one).re)
}

/// `‖[H, n1 + n2]‖_max`.
pub fn number_violation(spec: &MultilevelSpec, h: &Operator) -> Result<f64> {
    Ok(h.commutator(&total_number(spec.levels)?).max_norm())
}

/// Basis indices with at most `max` photons in total.
pub fn excitation_subspace(levels: usize, max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for n1 in 0..levels {
        for n2 in 0..levels {
            if n1 + n2 <= max {
                out.push(basis_index(levels, n1, n2));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsCheck {
    pub time: f64,
    pub periods: usize,
    pub fidelity: f64,
}

/// Lab-frame propagation against `h_eff` on the ≤2-photon subspace over the
/// whole number of drive periods closest to one hopping period `π/|J|`.
pub fn dynamics_check(spec: &MultilevelSpec, h_eff: &Operator) -> Result<DynamicsCheck> {
    let l = spec.levels;
    let j = h_eff.get(basis_index(l, 0, 1), basis_index(l, 1, 0)).norm();
    if j == 0.0 {
        return Err(Error::Degenerate("single-photon hopping vanishes".into()));
    }
    let period = multilevel_period(spec)?;
    let periods = (PI / j / period).round().max(1.0);
    let time = periods * period;
    let opts = propagation_options(spec);
    let lab = propagate_periodic(&multilevel_system(spec)?, period, time, &opts)?;
    let eff = matrix_exp(h_eff, C64::new(0.0, -time))?;
    let v = &multilevel_frame(spec)?.unitary(time).adjoint() * &eff;
    let fidelity = subspace_fidelity(&lab, &v, &excitation_subspace(l, 2))?;
    Ok(DynamicsCheck {
        time,
        periods: periods as usize,
        fidelity,
    })
}

/// One labelled matrix element of an effective Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixElement {
    pub bra: String,
    pub ket: String,
    pub re: f64,
    pub im: f64,
}

/// Nonzero elements of `h` labelled by occupation, e.g. `"11"` and `"02"`.
pub fn matrix_element_table(h: &Operator, levels: usize, threshold: f64) -> Vec<MatrixElement> {
    let label = |k: usize| format!("{}{}", k / levels, k % levels);
    let mut out = Vec::new();
    for r in 0..h.dim() {
        for c in 0..h.dim() {
            let z = h.get(r, c);
            if z.norm() > threshold {
                out.push(MatrixElement {
                    bra: label(r),
                    ket: label(c),
                    re: z.re,
                    im: z.im,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn spec(k: [f64; 4]) -> MultilevelSpec {
        MultilevelSpec::kerr(1.0, 1.25, 0.05, 0.0625, 0.0125, k)
    }

    #[test]
    fn frame_leaves_three_photon_diagonal() {
        let s = spec([0.1; 4]);
        let d = frame_diagonal(&s).unwrap();
        assert!(d.max_abs_diff(&target_diagonal(&s).unwrap()) < 1e-14);
        let l = s.levels;
        assert!((d.get(basis_index(l, 3, 0), basis_index(l, 3, 0)).re - (3.0 - s.beta1)).abs() < 1e-14);
    }

    #[test]
    fn trivial_frame_is_identity() {
        let mut s = spec([0.0; 4]);
        s.alpha1 = 0.0;
        s.alpha2 = 0.0;
        s.omega2 = s.omega1;
        let f = multilevel_frame(&s).unwrap();
        let u = f.unitary(3.7);
        assert!(u.max_abs_diff(&Operator::identity(&s.dims())) < 1e-15);
    }

    #[test]
    fn tuned_tones_give_harmonic_hopping() {
        let s = spec([0.1; 4]);
        let h = effective_multilevel_hamiltonian(&s).unwrap();
        assert!(h.is_hermitian());
        let r = hopping_ratio(&s, &h).unwrap();
        assert!((r / SQRT_2 - 1.0).abs() < 0.1, "ratio {r}");
        assert!(number_violation(&s, &h).unwrap() <= 1e-3 * s.coupling());
        let sup = residual_nonlinearity(&s, &h);
        assert!(sup.worst_ratio() < 0.05);
        let target = target_diagonal(&s).unwrap();
        for i in 0..h.dim() {
            assert!((h.get(i, i).re - target.get(i, i).re).abs() < 1e-6);
        }
    }

    #[test]
    fn single_tone_only_moves_one_photon() {
        let s = spec([0.1, 0.0, 0.0, 0.0]);
        let h = effective_multilevel_hamiltonian(&s).unwrap();
        let l = s.levels;
        let el = |a: (usize, usize), b: (usize, usize)| h.get(basis_index(l, a.0, a.1), basis_index(l, b.0, b.1)).norm();
        let one = el((0, 1), (1, 0));
        let k: f64 = 0.1;
        let bessel_j1 = k / 2.0 - k.powi(3) / 16.0 + k.powi(5) / 384.0;
        assert!((one - s.coupling() * bessel_j1).abs() < 1e-6 * one);
        assert!(el((1, 1), (0, 2)) < 1e-6 * one);
        assert!(el((1, 1), (2, 0)) < 1e-6 * one);
    }

    #[test]
    fn undriven_pair_has_no_residual() {
        let mut s = spec([0.0; 4]);
        s.alpha_ej = 0.0;
        let sup = nonlinearity_suppression(&s).unwrap();
        assert!(sup.residual_alpha1.abs() < 1e-14 && sup.residual_alpha2.abs() < 1e-14);
    }

    #[test]
    fn detuning_restores_the_two_photon_term() {
        let s = spec([0.1; 4]);
        let eps = [s.delta() / 20.0, s.delta() / 10.0];
        let r: Vec<f64> = eps
            .iter()
            .map(|&e| nonlinearity_suppression(&s.with_detune([e, 0.0])).unwrap().residual_alpha1)
            .collect();
        assert!(r[1].abs() > r[0].abs());
        for (ri, e) in r.iter().zip(eps) {
            assert!((ri + e).abs() < 1e-6, "{ri} vs {e}");
        }
    }

    #[test]
    fn coincident_tones_are_rejected() {
        let mut s = spec([0.1; 4]);
        s.alpha2 = s.alpha1;
        assert!(matches!(s.validate(), Err(Error::Degenerate(_))));
        let mut s = spec([0.1; 4]);
        s.omega2 = s.omega1;
        assert!(s.validate().is_err());
    }

    #[test]
    fn element_table_labels_occupations() {
        let s = spec([0.1; 4]);
        let h = effective_multilevel_hamiltonian(&s).unwrap();
        let t = matrix_element_table(&h, s.levels, 1e-9);
        assert!(t.iter().any(|e| e.bra == "01" && e.ket == "10"));
        assert!(t.iter().any(|e| e.bra == "33" && e.ket == "33"));
    }
}
