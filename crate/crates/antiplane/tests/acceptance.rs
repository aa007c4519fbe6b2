//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::time::{Duration, Instant};

use antiplane::suites::{
    lemma2_grid, lemma2_report, mms_reports, oracle_report, tresca_reports, MMS_LEVELS,
};
use antiplane::{run_solve, RunConfig};
use antiplane_core::friction::{check_four_term_bound, FrictionBound, FrictionLaw, HeatGeneration};
use antiplane_core::mesh::{generate_rect_mesh, TaggingRule};
use antiplane_core::spaces::{build_space, estimate_trace_constant, SpaceKind, TraceOptions, TraceQuadrature};
use antiplane_core::stepper::TimeGrid;
use antiplane_core::verify::{decoupling_study, gate_study, structural_invariants, temperature_cross_check, GateStudyOptions};

const SEED: u64 = 20;

type Check = Result<(bool, String), String>;

struct Line {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

fn criterion(id: u32, title: &'static str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> Line {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(limit) = limit {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!("; over the {}s limit", limit.as_secs()));
        }
    }
    Line {
        id,
        title,
        passed,
        detail,
        elapsed,
    }
}

fn structural() -> Check {
    let r = structural_invariants(16, 1000, SEED).map_err(|e| e.to_string())?;
    let exact = r.asymmetry.iter().all(|(_, a)| *a == 0.0);
    let ok = exact && r.viscous_ratio >= 1.0 - 1e-12 && r.conduction_ratio >= 1.0 - 1e-12;
    Ok((
        ok,
        format!(
            "asymmetry {:?}, min xᵀA_αx/(α*‖x‖²) {:.4}, min xᵀK̃x/(m_K‖x‖²) {:.4}",
            r.asymmetry.iter().map(|(n, a)| format!("{n}={a:.0e}")).collect::<Vec<_>>(),
            r.viscous_ratio,
            r.conduction_ratio
        ),
    ))
}

fn four_term() -> Check {
    let mesh = generate_rect_mesh(1.0, 1.0, 8, 8, &TaggingRule::standard()).map_err(|e| e.to_string())?;
    let v = build_space(&mesh, SpaceKind::V).map_err(|e| e.to_string())?;
    let opts = TraceOptions {
        quadrature: TraceQuadrature::Lumped,
        ..Default::default()
    };
    let c = estimate_trace_constant(&mesh, &v, &opts).map_err(|e| e.to_string())?.value;
    let mut worst: f64 = 0.0;
    for bound in [
        FrictionBound::AffineSaturating { a: 0.5, b: 2.0 },
        FrictionBound::LinearCapped { a: 0.1, b: 1.5, r_max: 1.0 },
    ] {
        let law = FrictionLaw::new(bound, HeatGeneration::None).map_err(|e| e.to_string())?;
        let r = check_four_term_bound(&mesh, &v, &law, c, 1000, SEED);
        worst = worst.max(r.max_ratio);
    }
    Ok((worst <= 1.0 + 1e-9, format!("max ratio {worst:.6} over 2×1000 quadruples, c = {c:.6}")))
}

fn oracles() -> Check {
    let r = oracle_report(SEED).map_err(|e| e.to_string())?;
    let worst = r.cases.iter().map(|c| c.ssn_vs_uzawa).fold(0.0, f64::max);
    let grid = r.cases.iter().filter(|c| c.ssn_vs_grid.is_some()).count();
    Ok((
        r.passed(),
        format!(
            "{} cases ({} with grid scan), max |ssn - uzawa| {:.2e} vs {:.0e}",
            r.cases.len(),
            grid,
            worst,
            10.0 * r.tol
        ),
    ))
}

fn tresca() -> Check {
    let r = tresca_reports(SEED).map_err(|e| e.to_string())?;
    let worst = r.frictionless_error.iter().copied().fold(0.0, f64::max);
    Ok((
        r.passed,
        format!(
            "{} problems, corrections between {} and {}, frictionless relative error {:.1e}",
            r.corrections.len(),
            r.corrections.iter().min().unwrap_or(&0),
            r.corrections.iter().max().unwrap_or(&0),
            worst
        ),
    ))
}

fn gate() -> Check {
    let s = gate_study(&GateStudyOptions {
        seed: SEED,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let asserted: Vec<_> = s.points.iter().filter(|p| p.asserted).collect();
    let slack = asserted
        .iter()
        .filter_map(|p| p.max_ratio.map(|r| p.bound + 0.1 - r))
        .fold(f64::INFINITY, f64::min);
    let uniq = asserted.iter().filter_map(|p| p.uniqueness).fold(0.0, f64::max);
    Ok((
        s.passed(),
        format!(
            "Z0 = {:.4}, {} guaranteed points converge, min bound slack {:.3}, max uniqueness gap {:.1e}",
            s.z0,
            asserted.len(),
            slack,
            uniq
        ),
    ))
}

fn decoupling() -> Check {
    let grid = TimeGrid::new(1.0, 10).map_err(|e| e.to_string())?;
    let r = decoupling_study(8, grid).map_err(|e| e.to_string())?;
    Ok((r.passed(), format!("max relative {:.2e} over {} steps", r.max_relative, r.steps)))
}

fn temperature() -> Check {
    let r = temperature_cross_check(8, 1.0, 8, 3).map_err(|e| e.to_string())?;
    Ok((
        r.passed(),
        format!(
            "steps {:?}, differences {:?}, order {:.3}",
            r.steps,
            r.differences.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>(),
            r.order
        ),
    ))
}

fn mms() -> Check {
    let workers = antiplane::threads::workers_from_env()?;
    let reports = mms_reports(&MMS_LEVELS, workers).map_err(|e| e.to_string())?;
    let detail = reports
        .iter()
        .map(|r| format!("{}: u {:.3}, φ {:.3}, θ {:.3}", r.case, r.rate_u, r.rate_phi, r.rate_theta))
        .collect::<Vec<_>>()
        .join("; ");
    Ok((reports.iter().all(|r| r.passed()), format!("levels {MMS_LEVELS:?}; {detail}")))
}

fn lemma2() -> Check {
    let workers = antiplane::threads::workers_from_env()?;
    let r = lemma2_report(&[4, 8], lemma2_grid(), workers).map_err(|e| e.to_string())?;
    let ratios: Vec<String> = r.runs.iter().map(|x| format!("nx {}: {:.4e}", x.nx, x.ratio)).collect();
    Ok((r.passed(), format!("{}, variation {:.3}", ratios.join(", "), r.variation)))
}

const DETERMINISM_CONFIG: &str = r#"
seed = 9

[mesh]
kind = "rect"
width = 2.0
nx = 8
ny = 4

[material]
e = 0.4
beta = 1.5
thermal_expansion = [0.3, 0.1]

[friction]
family = "affine"
a = 0.2
b = 0.3
heat = "frictional_power"

[time]
t_final = 1.0
steps = 8

[data]
f2 = { kind = "ramp", rate = 1.0 }
theta_r = { kind = "constant", value = 0.1 }
"#;

fn determinism() -> Check {
    let cfg = RunConfig::parse(DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
    let stop = AtomicBool::new(false);
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let mut buf = Vec::new();
        run_solve(&cfg, DETERMINISM_CONFIG, Path::new("."), &mut buf, &stop).map_err(|e| e.to_string())?;
        outputs.push(buf);
    }
    let same = outputs[0] == outputs[1];
    Ok((same && !outputs[0].is_empty(), format!("{} bytes, identical: {same}", outputs[0].len())))
}

fn main() -> ExitCode {
    // single worker throughout: the determinism criterion is stated for it
    std::env::set_var(antiplane::threads::THREADS_VAR, "0");
    let s = |x| Some(Duration::from_secs(x));
    let lines = [
        criterion(1, "structural invariants", s(10), structural),
        criterion(2, "four-term Lipschitz bound", s(30), four_term),
        criterion(3, "oracle equivalence", s(60), oracles),
        criterion(4, "Tresca reduction", None, tresca),
        criterion(5, "gate behaviour", None, gate),
        criterion(6, "decoupling identity", None, decoupling),
        criterion(7, "temperature integrator cross-check", s(120), temperature),
        criterion(8, "manufactured-solution convergence", s(300), mms),
        criterion(9, "temperature stability constant", None, lemma2),
        criterion(10, "determinism", None, determinism),
    ];
    let mut failed = 0;
    for l in &lines {
        println!(
            "criterion {:>2} {} {}: {} ({:.2}s)",
            l.id,
            if l.passed { "PASS" } else { "FAIL" },
            l.title,
            l.detail,
            l.elapsed.as_secs_f64()
        );
        failed += usize::from(!l.passed);
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
