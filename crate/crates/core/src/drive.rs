//! Multi-tone drive signals.
//!
//! A [`DriveSignal`] is a constant offset plus continuous-wave tones whose
//! frequencies are exact rational multiples of a base angular frequency, so
//! the commensurate period of any combination of tones (and rotating frames)
//! is known exactly.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest denominator accepted when snapping a frequency ratio to a rational.
pub const MAX_DENOMINATOR: i64 = 64;
/// Largest change in a frequency ratio tolerated by snapping.
pub const SNAP_TOLERANCE: f64 = 1e-9;

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

pub(crate) fn lcm(a: i64, b: i64) -> i64 {
    if a == 0 || b == 0 {
        0
    } else {
        (a / gcd(a, b) * b).abs()
    }
}

/// Snap `x` to the rational with the smallest denominator `≤ 64` lying within
/// [`SNAP_TOLERANCE`].
pub fn snap_rational(x: f64) -> Result<(i64, i64)> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite frequency ratio {x}")));
    }
    for den in 1..=MAX_DENOMINATOR {
        let num = (x * den as f64).round();
        if (num / den as f64 - x).abs() <= SNAP_TOLERANCE {
            let num = num as i64;
            let g = gcd(num, den).max(1);
            return Ok((num / g, den / g));
        }
    }
    Err(Error::InvalidParameter(format!(
        "frequency ratio {x} is not a rational with denominator <= {MAX_DENOMINATOR}"
    )))
}

/// Exact commensurate period of angular frequencies given relative to `base`.
///
/// Zero frequencies are ignored; returns `None` when every frequency is zero.
pub fn commensurate_period(base: f64, freqs: &[f64]) -> Result<Option<f64>> {
    if !(base > 0.0) {
        return Err(Error::InvalidParameter(format!("base frequency must be positive, got {base}")));
    }
    let mut ratios = Vec::with_capacity(freqs.len());
    for &f in freqs {
        let (n, d) = snap_rational(f / base)?;
        if n != 0 {
            ratios.push((n.abs(), d));
        }
    }
    Ok(period_from_ratios(base, &ratios))
}

fn period_from_ratios(base: f64, ratios: &[(i64, i64)]) -> Option<f64> {
    if ratios.is_empty() {
        return None;
    }
    let l = ratios.iter().fold(1, |acc, &(_, d)| lcm(acc, d));
    let g = ratios.iter().fold(0, |acc, &(n, d)| gcd(acc, n * (l / d)));
    Some(2.0 * PI * l as f64 / (base * g as f64))
}

mod exact_f64 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        // Rust's Display for f64 is the shortest string that round-trips exactly.
        s.serialize_str(&format!("{v}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        s.parse::<f64>().map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    #[serde(rename = "amp", with = "exact_f64")]
    pub amplitude: f64,
    #[serde(rename = "num")]
    pub freq_num: i64,
    #[serde(rename = "den")]
    pub freq_den: i64,
    #[serde(with = "exact_f64")]
    pub phase: f64,
}

impl Tone {
    pub fn new(amplitude: f64, freq_num: i64, freq_den: i64, phase: f64) -> Result<Self> {
        if freq_den < 1 {
            return Err(Error::InvalidParameter(format!("tone denominator must be >= 1, got {freq_den}")));
        }
        let g = gcd(freq_num, freq_den).max(1);
        Ok(Self {
            amplitude,
            freq_num: freq_num / g,
            freq_den: freq_den / g,
            phase,
        })
    }

    /// Tone at angular frequency `freq`, snapped to a rational multiple of `base`.
    pub fn at_frequency(amplitude: f64, freq: f64, base: f64, phase: f64) -> Result<Self> {
        let (n, d) = snap_rational(freq / base)?;
        // keep frequencies nonnegative: cos(-wt + p) = cos(wt - p)
        if n < 0 {
            Self::new(amplitude, -n, d, -phase)
        } else {
            Self::new(amplitude, n, d, phase)
        }
    }

    pub fn ratio(&self) -> f64 {
        self.freq_num as f64 / self.freq_den as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSignal {
    #[serde(with = "exact_f64")]
    pub offset: f64,
    #[serde(with = "exact_f64")]
    pub base_freq: f64,
    pub tones: Vec<Tone>,
}

impl DriveSignal {
    pub fn constant(offset: f64, base_freq: f64) -> Self {
        Self {
            offset,
            base_freq,
            tones: Vec::new(),
        }
    }

    pub fn tone_frequency(&self, tone: &Tone) -> f64 {
        self.base_freq * tone.ratio()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.tones.iter().map(|t| self.tone_frequency(t)).collect()
    }

    /// `offset + Σ amplitude·cos(freq·t + phase)`.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.tones.iter().fold(self.offset, |acc, tone| {
            acc + tone.amplitude * (self.tone_frequency(tone) * t + tone.phase).cos()
        })
    }

    /// Exact period from the rational tone frequencies; `None` for a constant signal.
    pub fn period(&self) -> Option<f64> {
        let ratios: Vec<(i64, i64)> = self
            .tones
            .iter()
            .filter(|t| t.freq_num != 0)
            .map(|t| (t.freq_num.abs(), t.freq_den))
            .collect();
        period_from_ratios(self.base_freq, &ratios)
    }

    pub fn with_offset(&self, offset: f64) -> Self {
        let mut out = self.clone();
        out.offset = offset;
        out
    }

    fn push_tone(&mut self, amplitude: f64, freq: f64, phase: f64) -> Result<()> {
        if amplitude != 0.0 {
            self.tones.push(Tone::at_frequency(amplitude, freq, self.base_freq, phase)?);
        }
        Ok(())
    }
}

/// Amplitudes and phases of the universal two-qubit flux signal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniversalDriveParams {
    pub f_zz: f64,
    pub f_xy0: f64,
    pub f_xy2: f64,
    pub f_xz: f64,
    pub f_zx: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub psi1: f64,
    pub psi2: f64,
}

/// Amplitude bound of the small-signal validity regime.
pub const MAX_DRIVE_AMPLITUDE: f64 = 0.3;

impl UniversalDriveParams {
    pub fn to_vec(&self) -> [f64; 9] {
        [
            self.f_zz, self.f_xy0, self.f_xy2, self.f_xz, self.f_zx, self.chi1, self.chi2,
            self.psi1, self.psi2,
        ]
    }

    pub fn from_vec(v: &[f64; 9]) -> Self {
        Self {
            f_zz: v[0],
            f_xy0: v[1],
            f_xy2: v[2],
            f_xz: v[3],
            f_zx: v[4],
            chi1: v[5],
            chi2: v[6],
            psi1: v[7],
            psi2: v[8],
        }
    }

    pub const NAMES: [&'static str; 9] = [
        "f_zz", "f_xy0", "f_xy2", "f_xz", "f_zx", "chi1", "chi2", "psi1", "psi2",
    ];

    /// Every amplitude scaled by `s`; phases untouched.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            f_zz: self.f_zz * s,
            f_xy0: self.f_xy0 * s,
            f_xy2: self.f_xy2 * s,
            f_xz: self.f_xz * s,
            f_zx: self.f_zx * s,
            ..*self
        }
    }

    /// Bring amplitudes to the nonnegative convention by shifting phases.
    ///
    /// `f_zz` is a static offset with no phase to absorb a sign, so it keeps
    /// its sign.
    pub fn canonical(&self) -> Self {
        let mut p = *self;
        if p.f_xy0 < 0.0 {
            // shift χ1−χ2 by π, leave χ1+χ2 alone
            p.f_xy0 = -p.f_xy0;
            p.chi1 += PI / 2.0;
            p.chi2 -= PI / 2.0;
        }
        if p.f_xy2 < 0.0 {
            p.f_xy2 = -p.f_xy2;
            p.chi1 += PI / 2.0;
            p.chi2 += PI / 2.0;
        }
        if p.f_xz < 0.0 {
            p.f_xz = -p.f_xz;
            p.psi1 += 2.0 * PI;
        }
        if p.f_zx < 0.0 {
            p.f_zx = -p.f_zx;
            p.psi2 += 2.0 * PI;
        }
        p.chi1 = wrap_angle(p.chi1);
        p.chi2 = wrap_angle(p.chi2);
        p.psi1 = p.psi1.rem_euclid(4.0 * PI);
        p.psi2 = p.psi2.rem_euclid(4.0 * PI);
        p
    }

    pub fn validate(&self) -> Result<()> {
        let amps = [
            ("f_zz", self.f_zz.abs()),
            ("f_xy0", self.f_xy0),
            ("f_xy2", self.f_xy2),
            ("f_xz", self.f_xz),
            ("f_zx", self.f_zx),
        ];
        for (name, v) in amps {
            if !(0.0..=MAX_DRIVE_AMPLITUDE).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} outside [0, {MAX_DRIVE_AMPLITUDE}]"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// The universal flux signal `F(t)` for qubits at `omega1`, `omega2`.
///
/// Offset `π/2 − f_zz`; tones `−2f_xy2` at `ω1+ω2`, `−2f_xy0` at `ω1−ω2`,
/// `2√2 f_xz` at `ω1/2` and `2√2 f_zx` at `ω2/2`. The base frequency is
/// `omega1`.
pub fn universal_signal(p: &UniversalDriveParams, omega1: f64, omega2: f64) -> Result<DriveSignal> {
    if !(omega1 > 0.0 && omega2 > 0.0) {
        return Err(Error::InvalidParameter("qubit frequencies must be positive".into()));
    }
    if (omega1 - omega2).abs() <= SNAP_TOLERANCE * omega1 {
        return Err(Error::Degenerate(
            "omega1 == omega2: the frequency-converting tone is degenerate".into(),
        ));
    }
    // both qubit frequencies must be commensurate with the base
    snap_rational(omega2 / omega1)?;
    let mut sig = DriveSignal::constant(PI / 2.0 - p.f_zz, omega1);
    sig.push_tone(-2.0 * p.f_xy2, omega1 + omega2, p.chi1 + p.chi2)?;
    sig.push_tone(-2.0 * p.f_xy0, omega1 - omega2, p.chi1 - p.chi2)?;
    sig.push_tone(2.0 * SQRT_2 * p.f_xz, omega1 / 2.0, p.psi1 / 2.0)?;
    sig.push_tone(2.0 * SQRT_2 * p.f_zx, omega2 / 2.0, p.psi2 / 2.0)?;
    Ok(sig)
}

/// Split-transmon flux-drive amplitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitTransmonDriveParams {
    pub ej1: f64,
    pub ej2: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub chi: f64,
}

/// Coefficients of `H_d = 2cosφ(f1 cos[(ω_R+ω_T)t+χ] + f2 cos[Δt−χ]) + 2 f3 sinφ cos ω_R t`
/// obtained from a split-transmon flux signal, with the terms that are kept
/// out of `H_d` reported alongside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutDriveCoeffs {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub chi: f64,
    /// Static addition to the `cos φ` coefficient, `(E_J1+E_J2)(k1²+k2²+k3²)/4`.
    /// It shifts the qubit frequency and must be absorbed by the frame.
    pub static_cos_shift: f64,
    /// Amplitude of the dropped `cos φ · cos 2ω_R t` term, `(E_J1+E_J2)k3²/4`.
    pub dropped_double_freq: f64,
}

/// Split-transmon flux signal `Φ(t)` and the `H_d` coefficients it produces.
///
/// Expanding `−E_J1 cos(φ − Φ/2) − E_J2 cos(φ + Φ/2)` to second order in the
/// `k`'s gives `f1 = (E_J1+E_J2)k1²/8`, `f2 = (E_J1+E_J2)k2²/8` and
/// `f3 = −(E_J1−E_J2)k3/2`.
pub fn readout_flux_signal(
    p: &SplitTransmonDriveParams,
    omega_r: f64,
    omega_t: f64,
) -> Result<(DriveSignal, ReadoutDriveCoeffs)> {
    if (omega_r - omega_t).abs() <= SNAP_TOLERANCE * omega_t.abs().max(1.0) {
        return Err(Error::Degenerate("omega_r == omega_t".into()));
    }
    if !(omega_t > 0.0 && omega_r > 0.0) {
        return Err(Error::InvalidParameter("frequencies must be positive".into()));
    }
    let mut sig = DriveSignal::constant(0.0, omega_t);
    sig.push_tone(2.0 * p.k1, (omega_r + omega_t) / 2.0, p.chi / 2.0)?;
    sig.push_tone(2.0 * p.k2, (omega_r - omega_t) / 2.0, -p.chi / 2.0)?;
    sig.push_tone(2.0 * p.k3, omega_r, 0.0)?;
    let esum = p.ej1 + p.ej2;
    let coeffs = ReadoutDriveCoeffs {
        f1: esum * p.k1 * p.k1 / 8.0,
        f2: esum * p.k2 * p.k2 / 8.0,
        f3: -(p.ej1 - p.ej2) * p.k3 / 2.0,
        chi: p.chi,
        static_cos_shift: esum * (p.k1 * p.k1 + p.k2 * p.k2 + p.k3 * p.k3) / 4.0,
        dropped_double_freq: esum * p.k3 * p.k3 / 4.0,
    };
    Ok((sig, coeffs))
}

/// Exchange-coupling modulation `2g cos Δt` for the cooling protocol.
pub fn cooling_coupling_signal(g: f64, delta: f64) -> Result<DriveSignal> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("detuning must be positive, got {delta}")));
    }
    let mut sig = DriveSignal::constant(0.0, delta);
    sig.push_tone(2.0 * g, delta, 0.0)?;
    Ok(sig)
}

/// Multilevel hopping signal
/// `π/2 + k0 cos Δt + k1 cos(Δ+α1)t + k2 cos(Δ−α2)t + k3[cos(Δ+α12)t + cos(Δ−α12)t]`
/// with `α12 = α1 − α2`; the base frequency is `Δ`.
pub fn multilevel_signal(
    k: [f64; 4],
    delta: f64,
    alpha1: f64,
    alpha2: f64,
) -> Result<DriveSignal> {
    multilevel_signal_detuned(k, delta, alpha1, alpha2, [0.0; 2])
}

/// As [`multilevel_signal`], with the `k1` and `k2` tones moved by `detune[0]`
/// and `−detune[1]` (i.e. tuned to `Δ + (α1 + ε1)` and `Δ − (α2 + ε2)`).
pub fn multilevel_signal_detuned(
    k: [f64; 4],
    delta: f64,
    alpha1: f64,
    alpha2: f64,
    detune: [f64; 2],
) -> Result<DriveSignal> {
    if delta == 0.0 {
        return Err(Error::InvalidParameter("delta must be nonzero".into()));
    }
    let alpha12 = alpha1 - alpha2;
    let freqs = [
        delta,
        delta + alpha1 + detune[0],
        delta - alpha2 - detune[1],
        delta + alpha12,
        delta - alpha12,
    ];
    let scale = freqs.iter().fold(0.0_f64, |a, f| a.max(f.abs()));
    for (i, fi) in freqs.iter().enumerate() {
        if fi.abs() <= 1e-12 * scale {
            return Err(Error::Degenerate(format!("tone {i} has zero frequency")));
        }
        for (j, fj) in freqs.iter().enumerate().skip(i + 1) {
            if (fi.abs() - fj.abs()).abs() <= 1e-12 * scale {
                return Err(Error::Degenerate(format!(
                    "tones {i} and {j} coincide at frequency {fi}"
                )));
            }
        }
    }
    let mut sig = DriveSignal::constant(PI / 2.0, delta.abs());
    let amps = [k[0], k[1], k[2], k[3], k[3]];
    for (a, f) in amps.iter().zip(freqs.iter()) {
        sig.push_tone(*a, *f, 0.0)?;
    }
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> UniversalDriveParams {
        UniversalDriveParams::default()
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_rational(0.75).unwrap(), (3, 4));
        assert_eq!(snap_rational(-1.5).unwrap(), (-3, 2));
        assert!(snap_rational(std::f64::consts::E).is_err());
        assert!(snap_rational(0.75 + 1e-6).is_err());
    }

    #[test]
    fn zero_drive_is_quarter_flux() {
        let s = universal_signal(&params(), 1.0, 0.75).unwrap();
        assert!(s.tones.is_empty());
        assert_eq!(s.evaluate(3.7), PI / 2.0);
        assert_eq!(s.period(), None);
    }

    #[test]
    fn zz_only_offset() {
        let p = UniversalDriveParams { f_zz: 0.1, ..params() };
        let s = universal_signal(&p, 1.0, 0.75).unwrap();
        assert!(s.tones.is_empty());
        assert_abs_diff_eq!(s.evaluate(12.0), PI / 2.0 - 0.1, epsilon = 1e-15);
    }

    #[test]
    fn xz_only_single_tone() {
        let p = UniversalDriveParams { f_xz: 0.05, ..params() };
        let s = universal_signal(&p, 1.0, 0.75).unwrap();
        assert_eq!(s.tones.len(), 1);
        assert_abs_diff_eq!(s.tones[0].amplitude, 0.1 * SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.tone_frequency(&s.tones[0]), 0.5, epsilon = 1e-15);
        assert_eq!(s.tones[0].phase, 0.0);
    }

    #[test]
    fn degenerate_qubits_rejected() {
        assert!(matches!(
            universal_signal(&params(), 1.0, 1.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn universal_period_is_commensurate() {
        let p = UniversalDriveParams {
            f_zz: 0.01,
            f_xy0: 0.02,
            f_xy2: 0.03,
            f_xz: 0.04,
            f_zx: 0.05,
            chi1: 0.3,
            chi2: -0.2,
            psi1: 1.0,
            psi2: 2.0,
        };
        let s = universal_signal(&p, 1.0, 0.75).unwrap();
        // frequencies 7/4, 1/4, 1/2, 3/8 → fundamental 1/8
        assert_abs_diff_eq!(s.period().unwrap(), 16.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn negative_difference_frequency_flips_phase() {
        let p = UniversalDriveParams { f_xy0: 0.1, chi1: 0.4, chi2: 0.1, ..params() };
        let s = universal_signal(&p, 0.75, 1.0).unwrap();
        for t in [0.0_f64, 1.3, 7.9] {
            let direct = PI / 2.0 - 0.2 * ((0.75 - 1.0) * t + 0.3).cos();
            assert_abs_diff_eq!(s.evaluate(t), direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn cooling_signal() {
        let zero = cooling_coupling_signal(0.0, 0.5).unwrap();
        assert_eq!(zero.evaluate(1.0), 0.0);
        let s = cooling_coupling_signal(0.01, 0.5).unwrap();
        assert_abs_diff_eq!(s.evaluate(PI / 0.5), -0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(s.period().unwrap(), 2.0 * PI / 0.5, epsilon = 1e-14);
    }

    #[test]
    fn multilevel_signal_shapes() {
        let only_k0 = multilevel_signal([0.1, 0.0, 0.0, 0.0], 0.25, 0.05, 0.0625).unwrap();
        assert_eq!(only_k0.tones.len(), 1);
        assert_abs_diff_eq!(only_k0.tone_frequency(&only_k0.tones[0]), 0.25);

        let k = [0.1, 0.2, 0.3, 0.05];
        let s = multilevel_signal(k, 0.25, 0.05, 0.0625).unwrap();
        assert_abs_diff_eq!(
            s.evaluate(0.0),
            PI / 2.0 + 0.1 + 0.2 + 0.3 + 2.0 * 0.05,
            epsilon = 1e-14
        );
        assert!(matches!(
            multilevel_signal(k, 0.25, 0.05, 0.05),
            Err(Error::Degenerate(_))
        ));
        // Δ − α2 = 0
        assert!(multilevel_signal(k, 0.25, 0.2, 0.25).is_err());
    }

    #[test]
    fn evaluate_basics() {
        let s = DriveSignal::constant(0.3, 1.0);
        assert_eq!(s.evaluate(5.0), 0.3);

        let mut a = DriveSignal::constant(0.0, 2.0);
        a.tones.push(Tone::new(0.7, 3, 2, 0.2).unwrap());
        let period = a.period().unwrap();
        assert_abs_diff_eq!(a.evaluate(period), a.evaluate(0.0), epsilon = 1e-12);

        let mut b = DriveSignal::constant(0.0, 2.0);
        b.tones.push(Tone::new(-0.4, 5, 4, 1.1).unwrap());
        let mut ab = a.clone();
        ab.tones.extend(b.tones.clone());
        for t in [0.0, 0.7, 3.3] {
            assert_abs_diff_eq!(ab.evaluate(t), a.evaluate(t) + b.evaluate(t), epsilon = 1e-15);
        }
    }

    /// Fourier component `(1/T)∫ f(t)·2cos(ωt + φ) dt` by the trapezoid rule,
    /// which is exact for trigonometric polynomials sampled finely enough.
    fn fourier_cos(f: impl Fn(f64) -> f64, omega: f64, phase: f64, period: f64) -> f64 {
        let n = 20_000;
        let dt = period / n as f64;
        (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                f(t) * 2.0 * (omega * t + phase).cos()
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn readout_coefficients_match_fourier_oracle() {
        let (wr, wt) = (1.5, 1.0);
        let p = SplitTransmonDriveParams { ej1: 30.0, ej2: 20.0, k1: 0.04, k2: 0.03, k3: 0.02, chi: 0.7 };
        let (sig, c) = readout_flux_signal(&p, wr, wt).unwrap();
        let period = sig.period().unwrap();
        // H_d = −(E1+E2) cosφ cos(Φ/2) − (E1−E2) sinφ sin(Φ/2)
        let cos_part = |t: f64| -(p.ej1 + p.ej2) * (sig.evaluate(t) / 2.0).cos();
        let sin_part = |t: f64| -(p.ej1 - p.ej2) * (sig.evaluate(t) / 2.0).sin();
        let f1 = fourier_cos(cos_part, wr + wt, p.chi, period) / 2.0;
        let f2 = fourier_cos(cos_part, wr - wt, -p.chi, period) / 2.0;
        let f3 = fourier_cos(sin_part, wr, 0.0, period) / 2.0;
        let dc = fourier_cos(cos_part, 0.0, 0.0, period) / 2.0;
        assert!((f1 / c.f1 - 1.0).abs() < 5e-3, "f1 {f1} vs {}", c.f1);
        assert!((f2 / c.f2 - 1.0).abs() < 5e-3, "f2 {f2} vs {}", c.f2);
        assert!((f3 / c.f3 - 1.0).abs() < 5e-3, "f3 {f3} vs {}", c.f3);
        let expected_dc = -(p.ej1 + p.ej2) + c.static_cos_shift;
        assert!((dc - expected_dc).abs() < 1e-4 * (p.ej1 + p.ej2));
    }

    #[test]
    fn readout_zero_drive_and_balanced_junctions() {
        let p = SplitTransmonDriveParams { ej1: 10.0, ej2: 10.0, k1: 0.0, k2: 0.0, k3: 0.1, chi: 0.0 };
        let (_, c) = readout_flux_signal(&p, 1.5, 1.0).unwrap();
        assert_eq!(c.f3, 0.0);
        assert_eq!((c.f1, c.f2), (0.0, 0.0));
        assert!(c.dropped_double_freq > 0.0);

        let zero = SplitTransmonDriveParams { k3: 0.0, ..p };
        let (sig, c) = readout_flux_signal(&zero, 1.5, 1.0).unwrap();
        assert!(sig.tones.is_empty());
        assert_eq!((c.f1, c.f2, c.f3, c.static_cos_shift), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn readout_k_scaling() {
        let base = SplitTransmonDriveParams { ej1: 12.0, ej2: 8.0, k1: 0.02, k2: 0.03, k3: 0.04, chi: 0.1 };
        let double = SplitTransmonDriveParams { k1: 0.04, k2: 0.06, k3: 0.08, ..base };
        let (_, a) = readout_flux_signal(&base, 1.5, 1.0).unwrap();
        let (_, b) = readout_flux_signal(&double, 1.5, 1.0).unwrap();
        assert_abs_diff_eq!(b.f1 / a.f1, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.f2 / a.f2, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.f3 / a.f3, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn serialization_roundtrip_is_exact() {
        let p = UniversalDriveParams { f_xy0: 0.1 / 3.0, chi1: 0.123456789, ..params() };
        let s = universal_signal(&p, 1.0, 0.75).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"amp\":\""));
        let back: DriveSignal = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn canonical_preserves_signal() {
        let p = UniversalDriveParams {
            f_zz: -0.02,
            f_xy0: -0.03,
            f_xy2: -0.01,
            f_xz: -0.04,
            f_zx: 0.02,
            chi1: 0.3,
            chi2: 1.0,
            psi1: 0.5,
            psi2: -0.7,
        };
        let c = p.canonical();
        assert!(c.f_xy0 >= 0.0 && c.f_xy2 >= 0.0 && c.f_xz >= 0.0 && c.f_zx >= 0.0);
        let a = universal_signal(&p, 1.0, 0.75).unwrap();
        let b = universal_signal(&c, 1.0, 0.75).unwrap();
        for t in [0.0, 0.9, 4.4, 17.0] {
            assert_abs_diff_eq!(a.evaluate(t), b.evaluate(t), epsilon = 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn evaluate_is_periodic(
                amps in proptest::array::uniform4(-0.3f64..0.3),
                phases in proptest::array::uniform2(-3.0f64..3.0),
                t in 0.0f64..200.0,
            ) {
                let p = UniversalDriveParams {
                    f_zz: amps[0], f_xy0: amps[1].abs(), f_xy2: amps[2].abs(), f_xz: amps[3].abs(),
                    f_zx: 0.1, chi1: phases[0], chi2: phases[1], psi1: 0.4, psi2: -1.0,
                };
                let s = universal_signal(&p, 1.0, 0.75).unwrap();
                let period = s.period().unwrap();
                prop_assert!((s.evaluate(t + period) - s.evaluate(t)).abs() <= 1e-10);
            }
        }
    }
}
