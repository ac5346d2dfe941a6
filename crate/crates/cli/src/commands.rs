use std::io::Write;

use rtscatter::analytic::{resonances_in_range, scattering_amplitudes};
use rtscatter::bohm::closed_form_transmission;
use rtscatter::error::{Error, Result};
use rtscatter::kostin::{cross_validate, SolverConfig};
use rtscatter::output::{self, Format, Header, SweepTable};
use rtscatter::problem::{PhysicalConstants, ScatteringProblem, SquareWell};
use rtscatter::scan::{find_resonances, sweep as run_sweep, MethodSet, ResonanceSource, SweepSpec};
use rtscatter::validation::{run_criterion, run_suite, Tolerances, ValidationConfig, ValidationReport};
use serde_json::Value;

use crate::record::Record;
use crate::{AnalyticArgs, RecordFormat, SolveArgs, SolverArgs, SweepArgs, TableFormat, ValidateArgs, WellArgs};

fn well_of(w: &WellArgs) -> Result<(SquareWell, PhysicalConstants)> {
    Ok((SquareWell::new(w.depth, w.width)?, PhysicalConstants::new(w.hbar, w.mass)?))
}

fn solver_of(s: &SolverArgs, width: f64) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::for_width(width);
    if let Some(h) = s.step {
        cfg.step = h;
    }
    cfg.newton_tol = s.newton_tol;
    cfg.max_newton_iters = s.max_newton_iters;
    cfg.validate(width)?;
    Ok(cfg)
}

fn emit(out: &mut dyn Write, text: &str, path: Option<&std::path::Path>) -> Result<()> {
    match path {
        Some(p) => output::write_file(p, text),
        None => out.write_all(text.as_bytes()).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

pub fn analytic(a: &AnalyticArgs, out: &mut dyn Write) -> Result<u8> {
    let (well, consts) = well_of(&a.well)?;
    let p = ScatteringProblem::new(well, a.energy, 0.0, consts)?;
    let wn = p.wave_numbers();
    let c = scattering_amplitudes(&wn, well.width());
    let e_max = a.e_max.unwrap_or(2.0 * a.energy);
    let res = resonances_in_range(&well, &consts, 0.0, e_max);

    let mut h = Header::new();
    h.push("table", "analytic");
    h.push("depth", well.depth());
    h.push("width", well.width());
    h.push("hbar", consts.hbar());
    h.push("mass", consts.mass());
    h.push("energy", a.energy);

    let mut r = Record::default();
    r.num("k", wn.k)
        .num("q", wn.q)
        .num("n", wn.n)
        .num("r2", c.refl_prob)
        .num("t2", c.trans_prob)
        .num("entry_phase", c.entry_phase())
        .num("exit_phase", c.exit_phase());
    let orders: Vec<String> = res.iter().map(|x| format!("{}:{}", x.order, x.energy)).collect();
    match a.format {
        RecordFormat::Json => {
            let list = res
                .iter()
                .map(|x| serde_json::json!({"order": x.order, "energy": x.energy}))
                .collect();
            r.value("resonances", Value::Array(list));
        }
        _ => {
            r.text("resonances", orders.join(" "));
        }
    }
    emit(out, &r.render(&h, a.format), None)?;
    Ok(0)
}

pub fn solve(a: &SolveArgs, out: &mut dyn Write) -> Result<u8> {
    let (well, consts) = well_of(&a.well)?;
    let p = ScatteringProblem::new(well, a.energy, a.nu, consts)?;
    let cfg = solver_of(&a.solver, well.width())?;
    let wn = p.wave_numbers();
    let an = scattering_amplitudes(&wn, well.width());
    let cv = cross_validate(&p, &cfg)?;
    let header = Header::for_problem(&p, &cfg);

    let mut r = Record::default();
    r.num("k", wn.k).num("q", wn.q).num("n", wn.n);
    r.num("t2_analytic", an.trans_prob).num("r2_analytic", an.refl_prob);
    let mut warnings = Vec::new();
    match closed_form_transmission(&p) {
        Ok(cf) => {
            r.num("t2_closed_form", cf.trans_prob)
                .num("t2_closed_form_alt", cf.trans_prob_alt)
                .num("s_at_0", cf.s_at_0)
                .num("s_at_l", cf.s_at_l)
                .num("beta_at_0", cf.beta_at_0)
                .num("expansion_parameter", cf.expansion_parameter);
            warnings.extend(cf.warnings);
        }
        Err(e) => {
            r.text("t2_closed_form", format!("unavailable ({e})"));
        }
    }
    for (tag, s) in [("complex", &cv.complex), ("hydro", &cv.hydro)] {
        r.num(&format!("t2_{tag}"), s.trans_prob)
            .num(&format!("r2_{tag}"), s.refl_prob)
            .num(&format!("s0_{tag}"), s.entry_phase())
            .num(&format!("sl_{tag}"), s.exit_phase())
            .num(&format!("flux_{tag}"), s.fields.flux_const)
            .num(&format!("flux_deficit_{tag}"), s.flux_deficit)
            .int(&format!("newton_iters_{tag}"), s.newton_iters as u64)
            .num(&format!("residual_{tag}"), s.max_residual);
    }
    r.num("t2_diff", cv.trans_prob_diff)
        .num("rho_rel_diff", cv.rho_rel_diff)
        .num("phase_rel_diff", cv.phase_rel_diff)
        .text("cross_validation", if cv.passed { "pass" } else { "fail" });
    if let Some(msg) = cv.failure_summary() {
        warnings.push(msg);
    }
    r.text("warnings", warnings.join("; "));
    emit(out, &r.render(&header, a.format), None)?;

    if let Some(path) = &a.profile {
        output::write_file(path, &output::profile_csv(&header, &cv.complex)?)?;
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(if cv.passed { 0 } else { 1 })
}

fn spec_of(a: &SweepArgs) -> Result<(SweepSpec, SolverConfig)> {
    let (well, constants) = well_of(&a.well)?;
    if a.points < 2 {
        return Err(Error::InvalidConfig(format!("--points must be at least 2, got {}", a.points)));
    }
    let spec = SweepSpec {
        well,
        constants,
        energies: SweepSpec::linspace(a.e_min, a.e_max, a.points),
        nu_values: a.nu.clone(),
        methods: MethodSet::parse(&a.methods)?,
    };
    spec.validate()?;
    let cfg = solver_of(&a.solver, well.width())?;
    Ok((spec, cfg))
}

pub fn sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<u8> {
    let (spec, cfg) = spec_of(a)?;
    let rows = run_sweep(&spec, &cfg)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let table = SweepTable {
        header: Header::for_sweep(&spec, &cfg),
        rows,
    };
    let format = match a.format {
        TableFormat::Csv => Format::Csv,
        TableFormat::Json => Format::Json,
    };
    emit(out, &table.render(format)?, a.output.as_deref())?;
    if failed > 0 {
        eprintln!("warning: {failed} rows carry solver errors");
    }
    Ok(0)
}

pub fn resonances(a: &SweepArgs, out: &mut dyn Write) -> Result<u8> {
    let (spec, cfg) = spec_of(a)?;
    let scan = find_resonances(&spec, &cfg)?;
    let mut header = Header::for_sweep(&spec, &cfg);
    header.entries[1].1 = "resonances".into();
    header.push("degenerate", scan.degenerate);

    let text = match a.format {
        TableFormat::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({
                "header": header,
                "hits": scan.hits,
            }))
            .map_err(|e| Error::Format(e.to_string()))?;
            s.push('\n');
            s
        }
        TableFormat::Csv => {
            let mut s = String::new();
            for (k, v) in &header.entries {
                s.push_str(&format!("# {k}: {v}\n"));
            }
            s.push_str("energy,nu,order,t2,source\n");
            for h in &scan.hits {
                let order = h.order.map(|o| o.to_string()).unwrap_or_default();
                let source = match h.source {
                    ResonanceSource::Analytic => "analytic",
                    ResonanceSource::Numeric => "numeric",
                };
                s.push_str(&format!("{:.16e},{:.16e},{order},{:.16e},{source}\n", h.energy, h.nu, h.t2));
            }
            s
        }
    };
    emit(out, &text, a.output.as_deref())?;
    if scan.degenerate {
        eprintln!("warning: transmission is flat over the grid; no resonances reported");
    }
    Ok(0)
}

pub fn validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<u8> {
    let cfg = ValidationConfig {
        step_divisor: a.step_divisor,
        oracle_refinement: a.oracle_refinement,
        newton_tol: a.newton_tol,
        max_newton_iters: a.max_newton_iters,
        random_cases: a.cases,
        seed: a.seed,
        tol: Tolerances {
            resonance_analytic: a.tol_resonance_analytic,
            resonance_numeric: a.tol_resonance_numeric,
            equivalence_t2: a.tol_equivalence,
            flux_numeric: a.tol_flux_numeric,
            flux_analytic: a.tol_flux_analytic,
            collapse: a.tol_collapse,
            order_ratio_min: a.order_ratio_min,
            order_ratio_max: a.order_ratio_max,
            resonance_nu_factor: a.resonance_nu_factor,
            conservation: a.tol_conservation,
            flux_identity: a.tol_flux_identity,
            agreement: a.tol_agreement,
            step_ratio: a.step_ratio,
        },
        profile_dir: a.profile_dir.clone(),
        ..ValidationConfig::default()
    };
    let report = match a.only {
        Some(id) => {
            let r = run_criterion(id, &cfg)
                .ok_or_else(|| Error::InvalidConfig(format!("no criterion {id} (expected 1-9)")))?;
            ValidationReport { results: vec![r] }
        }
        None => run_suite(&cfg)?,
    };
    emit(out, &format!("{report}\n"), None)?;
    Ok(report.failed() as u8)
}
