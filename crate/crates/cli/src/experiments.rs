//! One function per experiment kind, each turning a typed document into a
//! result record, a CSV table and the validity warnings seen on the way.

use serde_json::{json, Map, Value};

use fluxcouple::calibration::calibrate;
use fluxcouple::cooling::{cooling_record, simulate_cooling, temperature_for_occupation, CoolingSpec};
use fluxcouple::device::universal_scale_warnings;
use fluxcouple::drive::UniversalDriveParams;
use fluxcouple::multilevel::{
    dynamics_check, effective_multilevel_hamiltonian, floquet_multilevel_hamiltonian, hopping_ratio,
    matrix_element_table, number_violation, residual_nonlinearity, LadderPhase, MultilevelSpec,
};
use fluxcouple::operator::{pauli_decompose, Pauli, PauliTable};
use fluxcouple::readout::{
    dressed_matrix_elements, exact_dressed_elements, readout_discrimination, ReadoutRun, ReadoutSystem,
    ReadoutTones,
};
use fluxcouple::rwa::UniversalCoupler;
use fluxcouple::{Error, Result};

use crate::config::*;
use crate::format::{Cell, Table};

pub struct Outcome {
    pub result: Value,
    pub table: Table,
    pub warnings: Vec<String>,
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result records always serialize")
}

fn label(a: Pauli, b: Pauli) -> String {
    PauliTable::label(a, b)
}

/// All fifteen entries except `II`, keyed by label.
fn pauli_map(t: &PauliTable) -> Value {
    let mut m = Map::new();
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            if (a, b) != (Pauli::I, Pauli::I) {
                m.insert(label(a, b), json!(t.get(a, b)));
            }
        }
    }
    Value::Object(m)
}

fn two_body_labels() -> Vec<(Pauli, Pauli)> {
    Pauli::XYZ
        .iter()
        .flat_map(|&a| Pauli::XYZ.iter().map(move |&b| (a, b)))
        .collect()
}

fn parse_label(s: &str) -> Option<(Pauli, Pauli)> {
    let p = |c: char| match c {
        'I' | 'i' => Some(Pauli::I),
        'x' | 'X' => Some(Pauli::X),
        'y' | 'Y' => Some(Pauli::Y),
        'z' | 'Z' => Some(Pauli::Z),
        _ => None,
    };
    let mut chars = s.chars();
    match (chars.next(), chars.next(), chars.next()) {
        (Some(a), Some(b), None) => Some((p(a)?, p(b)?)),
        _ => None,
    }
}

fn coupler(d: &CouplerDevice) -> Result<UniversalCoupler> {
    UniversalCoupler::new(d.omega1, d.omega2, d.alpha_ej, d.q1.coeffs(), d.q2.coeffs())
}

fn coupler_warnings(d: &CouplerDevice, p: &UniversalDriveParams) -> Vec<String> {
    universal_scale_warnings(p, d.alpha_ej, d.omega1, d.omega2)
        .iter()
        .map(ToString::to_string)
        .collect()
}

pub fn extract(doc: &ExtractDoc) -> Result<Outcome> {
    let p = doc.drive;
    p.validate()?;
    let c = coupler(&doc.device)?;
    let analytic = c.analytic(&p);
    let average = c.average_cab(&p)?;
    let floquet = if doc.options.floquet { Some(c.floquet_cab(&p)?) } else { None };

    let mut columns = vec!["label", "analytic", "average"];
    if floquet.is_some() {
        columns.push("floquet");
    }
    let mut table = Table::new(&columns);
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            if (a, b) == (Pauli::I, Pauli::I) {
                continue;
            }
            let mut row: Vec<Cell> = vec![label(a, b).into(), analytic.get(a, b).into(), average.get(a, b).into()];
            if let Some(f) = &floquet {
                row.push(f.get(a, b).into());
            }
            table.push(row);
        }
    }

    let mut result = json!({
        "analytic": pauli_map(&analytic),
        "average": pauli_map(&average),
        "two_body_deviation": {"average": analytic.two_body_max_abs_diff(&average)},
    });
    if let Some(f) = &floquet {
        result["floquet"] = pauli_map(f);
        result["two_body_deviation"]["floquet"] = json!(analytic.two_body_max_abs_diff(f));
    }
    Ok(Outcome {
        result,
        table,
        warnings: coupler_warnings(&doc.device, &p),
    })
}

pub fn evolve(doc: &EvolveDoc) -> Result<Outcome> {
    let p = doc.drive;
    p.validate()?;
    let c = coupler(&doc.device)?;
    let (a, b) = match &doc.options.target {
        Some(s) => parse_label(s)
            .filter(|(a, b)| *a != Pauli::I && *b != Pauli::I)
            .ok_or_else(|| Error::InvalidParameter(format!("target `{s}` is not a two-body label")))?,
        None => {
            let t = c.analytic(&p);
            two_body_labels()
                .into_iter()
                .max_by(|x, y| t.get(x.0, x.1).abs().total_cmp(&t.get(y.0, y.1).abs()))
                .expect("nine labels")
        }
    };
    let h = match doc.options.effective {
        EffectiveModel::Expansion => c.amplitude_expansion(&p)?,
        EffectiveModel::Average => c.average(&p)?,
        EffectiveModel::Floquet => c.floquet(&p)?,
    };
    let table_eff = pauli_decompose(&h)?;
    let coefficient = table_eff.get(a, b);
    let g = c.gate_check(&p, &h, coefficient)?;

    let mut table = Table::new(&["target", "coefficient", "time", "periods", "fidelity", "infidelity"]);
    table.push(vec![
        label(a, b).into(),
        coefficient.into(),
        g.time.into(),
        g.periods.into(),
        g.fidelity.into(),
        g.infidelity().into(),
    ]);
    Ok(Outcome {
        result: json!({
            "target": label(a, b),
            "coefficient": coefficient,
            "time": g.time,
            "periods": g.periods,
            "fidelity": g.fidelity,
            "infidelity": g.infidelity(),
            "effective": pauli_map(&table_eff),
        }),
        table,
        warnings: coupler_warnings(&doc.device, &p),
    })
}

pub fn calibrate_target(doc: &CalibrateDoc) -> Result<Outcome> {
    let mut target = PauliTable::zero();
    for (name, value) in &doc.drive.target {
        match parse_label(name) {
            Some((a, b)) if a != Pauli::I && b != Pauli::I => target.set(a, b, *value),
            _ => {
                return Err(Error::InvalidParameter(format!("target label `{name}` is not a two-body label")));
            }
        }
    }
    let c = coupler(&doc.device)?;
    let r = calibrate(&c, &target)?;

    let mut table = Table::new(&["iteration", "residual"]);
    for (i, res) in r.residual_history.iter().enumerate() {
        table.push(vec![i.into(), (*res).into()]);
    }
    let single: Map<String, Value> = r.single_qubit_terms().into_iter().map(|(k, v)| (k, json!(v))).collect();
    let mut warnings = coupler_warnings(&doc.device, &r.params);
    if !r.converged {
        warnings.push(format!("refinement stopped at residual {:e} without converging", r.residual));
    }
    Ok(Outcome {
        result: json!({
            "params": to_value(&r.params),
            "seed": to_value(&r.seed),
            "target": pauli_map(&r.target),
            "achieved": pauli_map(&r.achieved),
            "single_qubit_terms": single,
            "residual": r.residual,
            "iterations": r.iterations,
            "converged": r.converged,
            "residual_history": r.residual_history,
        }),
        table,
        warnings,
    })
}

pub fn cool(doc: &CoolDoc) -> Result<Outcome> {
    let d = &doc.device;
    let temperature = match (d.temperature, d.n_th) {
        (Some(t), None) => t,
        (None, Some(n)) => temperature_for_occupation(d.omega, n)?,
        _ => {
            return Err(Error::InvalidParameter(
                "exactly one of device.temperature and device.n_th must be set".into(),
            ))
        }
    };
    let spec = CoolingSpec {
        omega: d.omega,
        omega_s: d.omega_s,
        g: doc.drive.g,
        gamma_s: d.gamma_s,
        kappa: d.kappa,
        temperature,
        coupling_kind: doc.drive.coupling_kind,
        shadow_thermal: d.shadow_thermal,
    };
    let warnings = spec.validate()?.iter().map(ToString::to_string).collect();
    let record = cooling_record(&spec)?;
    let steady = simulate_cooling(&spec)?;

    let mut table = Table::new(&[
        "temperature",
        "g",
        "rho_plus_analytic",
        "rho_plus_lindblad",
        "t_eff_analytic",
        "t_eff_lindblad",
        "excitation_lindblad",
        "thermal_rho_plus",
    ]);
    table.push(vec![
        temperature.into(),
        spec.g.into(),
        record.rho_plus_analytic.into(),
        record.rho_plus_lindblad.into(),
        record.t_eff_analytic.into(),
        record.t_eff_lindblad.into(),
        record.excitation_lindblad.into(),
        steady.thermal_rho_plus.into(),
    ]);
    Ok(Outcome {
        result: json!({
            "spec": to_value(&spec),
            "record": to_value(&record),
            "steady_state": to_value(&steady),
            "hotter_than_thermal": steady.is_hotter_than_thermal(),
        }),
        table,
        warnings,
    })
}

pub fn readout(doc: &ReadoutDoc) -> Result<Outcome> {
    let d = &doc.device;
    let sys = ReadoutSystem::transmon(d.ej_over_ec, d.omega_t, d.omega_r, d.g, d.resonator_dim)?;
    let requested = ReadoutTones {
        f1: doc.drive.f1,
        f2: doc.drive.f2,
        f3: doc.drive.f3,
        chi: doc.drive.chi,
    };
    let tones = if doc.drive.balanced { sys.balanced(&requested)? } else { requested };
    let effective = sys.effective(&tones)?;
    let o = &doc.options;
    let duration = match o.duration {
        Some(t) => t,
        None if effective.lambda != 0.0 => 1.0 / (4.0 * effective.lambda.abs()),
        None => return Err(Error::Degenerate("Λ vanishes; set options.duration".into())),
    };
    let run = ReadoutRun {
        duration,
        samples: o.samples,
        cancel_spin_independent: o.cancel_spin_independent,
        steps_per_period: o.steps_per_period,
    };
    let report = readout_discrimination(&sys, &tones, &run)?;

    let q = &sys.phase_coeffs;
    let formula = [
        dressed_matrix_elements(q, sys.g, sys.detuning(), sys.nonlinearity, 0)?,
        dressed_matrix_elements(q, sys.g, sys.detuning(), sys.nonlinearity, 1)?,
    ];
    let exact = [exact_dressed_elements(&sys, 0)?, exact_dressed_elements(&sys, 1)?];

    let mut warnings = Vec::new();
    let ratio = (sys.g / sys.detuning()).abs();
    if ratio > 0.1 {
        warnings.push(format!("|g/Δ| = {ratio:e} exceeds 0.1; dispersive expansion is marginal"));
    }

    let mut table = Table::new(&[
        "time",
        "re_plus",
        "im_plus",
        "z_plus",
        "axis_plus",
        "re_minus",
        "im_minus",
        "z_minus",
        "axis_minus",
    ]);
    let (p, m) = (&report.plus, &report.minus);
    for i in 0..p.times.len() {
        table.push(vec![
            p.times[i].into(),
            p.re_quadrature[i].into(),
            p.im_quadrature[i].into(),
            p.qubit_z[i].into(),
            p.axis_population[i].into(),
            m.re_quadrature[i].into(),
            m.im_quadrature[i].into(),
            m.qubit_z[i].into(),
            m.axis_population[i].into(),
        ]);
    }
    Ok(Outcome {
        result: json!({
            "system": to_value(&sys),
            "tones": to_value(&tones),
            "effective": to_value(&effective),
            "elements": {
                "formula": [to_value(&formula[0]), to_value(&formula[1])],
                "exact": [to_value(&exact[0]), to_value(&exact[1])],
            },
            "predicted_slope": report.predicted_slope,
            "slope_plus": report.slope_plus,
            "slope_minus": report.slope_minus,
            "discrimination": report.discrimination(),
            "voltage": report.voltage,
            "duration": report.duration,
            "qnd_deviation": report.qnd_deviation,
        }),
        table,
        warnings,
    })
}

pub fn multilevel(doc: &MultilevelDoc) -> Result<Outcome> {
    let d = &doc.device;
    let phase = LadderPhase::harmonic(d.s);
    let spec = MultilevelSpec {
        levels: d.levels,
        phase,
        alpha_ej: d.coupling / (d.s * d.s),
        ..MultilevelSpec::kerr(d.omega1, d.omega2, d.alpha1, d.alpha2, d.coupling, doc.drive.k)
    }
    .with_detune(doc.drive.detune);
    let warnings = spec.validate()?.iter().map(ToString::to_string).collect();
    let o = &doc.options;
    let h = match o.method {
        MultilevelMethod::Floquet => floquet_multilevel_hamiltonian(&spec)?,
        MultilevelMethod::Average => effective_multilevel_hamiltonian(&spec)?,
    };
    let suppression = residual_nonlinearity(&spec, &h);
    let ratio = hopping_ratio(&spec, &h)?;
    let violation = number_violation(&spec, &h)?;
    let elements = matrix_element_table(&h, spec.levels, o.threshold);

    let mut table = Table::new(&["bra", "ket", "re", "im"]);
    for e in &elements {
        table.push(vec![e.bra.as_str().into(), e.ket.as_str().into(), e.re.into(), e.im.into()]);
    }
    let mut result = json!({
        "spec": to_value(&spec),
        "suppression": to_value(&suppression),
        "worst_ratio": suppression.worst_ratio(),
        "hopping_ratio": ratio,
        "number_violation": violation,
        "elements": to_value(&elements),
    });
    if o.dynamics {
        result["dynamics"] = to_value(&dynamics_check(&spec, &h)?);
    }
    Ok(Outcome { result, table, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_parse() {
        assert_eq!(parse_label("zz"), Some((Pauli::Z, Pauli::Z)));
        assert_eq!(parse_label("XI"), Some((Pauli::X, Pauli::I)));
        assert_eq!(parse_label("zzz"), None);
        assert_eq!(parse_label("qz"), None);
    }

    #[test]
    fn pauli_map_skips_identity() {
        let m = pauli_map(&PauliTable::zero());
        assert_eq!(m.as_object().unwrap().len(), 15);
        assert!(m.get("II").is_none());
    }
}
