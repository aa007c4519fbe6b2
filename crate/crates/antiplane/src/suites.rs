//! Verification suites behind `antiplane verify`.

use std::fmt::Write as _;

use antiplane_core::stepper::TimeGrid;
use antiplane_core::verify::lemma2::bundled_pair;
use antiplane_core::verify::{
    decoupling_study, gate_study, lemma2_measure, mms_level, oracle_suite, structural_invariants, surrogate_set,
    temperature_cross_check, tresca_reduction, ConvergenceReport, DecouplingReport, GateStudy, GateStudyOptions,
    InvariantReport, Lemma2Report, MmsCase, OracleReport, SweepFamily, TemperatureCrossCheck, TrescaReport,
};
use antiplane_core::vi_solver::SolverOptions;
use antiplane_core::Error as CoreError;
use clap::ValueEnum;

use crate::error::{solver, CliError};
use crate::threads::par_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Mms,
    Oracles,
    Gate,
    Lemma2,
    Invariants,
}

/// Human-readable lines plus a CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub summary: Vec<String>,
    pub csv: String,
    pub passed: bool,
}

pub const MMS_LEVELS: [usize; 4] = [4, 8, 16, 32];
pub const ORACLE_TOL: f64 = 1e-8;
pub const RANDOM_SURROGATES: usize = 50;

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

/// Both manufactured cases, levels spread over the workers.
pub fn mms_reports(levels: &[usize], workers: usize) -> Result<Vec<ConvergenceReport>, CoreError> {
    let cases = [MmsCase::polynomial(), MmsCase::trigonometric()];
    let jobs: Vec<(usize, usize)> = (0..cases.len()).flat_map(|c| levels.iter().map(move |&n| (c, n))).collect();
    let mut results = par_map(&jobs, workers, |&(c, n)| mms_level(&cases[c], n)).into_iter();
    cases
        .iter()
        .map(|case| {
            let lv = results.by_ref().take(levels.len()).collect::<Result<Vec<_>, _>>()?;
            ConvergenceReport::from_levels(case.name, lv, 0.9)
        })
        .collect()
}

/// Surrogates plus the loaded mesh family, constant bound `0.8` and `0.3`.
pub fn tresca_reports(seed: u64) -> Result<TrescaReport, CoreError> {
    let set = surrogate_set(RANDOM_SURROGATES, seed);
    let ops = set.iter().map(|s| s.operators()).collect::<Result<Vec<_>, _>>()?;
    let probs = set.iter().zip(&ops).map(|(s, o)| s.problem(o)).collect::<Result<Vec<_>, _>>()?;
    let family = SweepFamily::new(6, 3, 0.1, seed)?;
    let mesh_probs = family.problems()?;
    let mut list: Vec<_> = probs.iter().map(|p| (p, 0.8)).collect();
    list.extend(mesh_probs.iter().map(|p| (p, 0.3)));
    tresca_reduction(&list, &SolverOptions::default())
}

pub fn oracle_report(seed: u64) -> Result<OracleReport, CoreError> {
    oracle_suite(&surrogate_set(RANDOM_SURROGATES, seed), ORACLE_TOL)
}

pub fn lemma2_report(levels: &[usize], grid: TimeGrid, workers: usize) -> Result<Lemma2Report, CoreError> {
    let pair = bundled_pair();
    let runs = par_map(levels, workers, |&nx| lemma2_measure(nx, grid, &pair));
    Ok(Lemma2Report::from_runs(runs.into_iter().collect::<Result<Vec<_>, _>>()?))
}

pub fn lemma2_grid() -> TimeGrid {
    TimeGrid::new(1.0, 10).expect("valid grid")
}

pub fn invariant_reports(seed: u64) -> Result<(InvariantReport, DecouplingReport, TemperatureCrossCheck), CoreError> {
    let inv = structural_invariants(16, 1000, seed)?;
    let dec = decoupling_study(8, TimeGrid::new(1.0, 10)?)?;
    let temp = temperature_cross_check(8, 1.0, 8, 3)?;
    Ok((inv, dec, temp))
}

fn mms_suite(workers: usize) -> Result<SuiteReport, CoreError> {
    let reports = mms_reports(&MMS_LEVELS, workers)?;
    let mut summary = Vec::new();
    let mut csv = String::from("case,nx,h,steps,err_u,err_phi,err_theta\n");
    for r in &reports {
        for l in &r.levels {
            let _ = writeln!(
                csv,
                "{},{},{:.12e},{},{:.12e},{:.12e},{:.12e}",
                r.case, l.nx, l.h, l.steps, l.err_u, l.err_phi, l.err_theta
            );
        }
        summary.push(format!(
            "{}: rate u {:.3}, phi {:.3}, theta {:.3} (threshold {}) {}",
            r.case,
            r.rate_u,
            r.rate_phi,
            r.rate_theta,
            r.threshold,
            mark(r.passed())
        ));
    }
    Ok(SuiteReport {
        suite: Suite::Mms,
        summary,
        csv,
        passed: reports.iter().all(ConvergenceReport::passed),
    })
}

fn oracles_suite(seed: u64) -> Result<SuiteReport, CoreError> {
    let rep = oracle_report(seed)?;
    let tresca = tresca_reports(seed)?;
    let mut csv = String::from("case,dofs,ssn_vs_uzawa,ssn_vs_grid,grid_resolution,ssn_vs_exact,passed\n");
    let opt = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:.12e}"));
    for c in &rep.cases {
        let _ = writeln!(
            csv,
            "{},{},{:.12e},{},{},{},{}",
            c.name,
            c.dofs,
            c.ssn_vs_uzawa,
            opt(c.ssn_vs_grid.map(|g| g.0)),
            opt(c.ssn_vs_grid.map(|g| g.1)),
            opt(c.ssn_vs_exact),
            c.passed
        );
    }
    let worst = rep.cases.iter().map(|c| c.ssn_vs_uzawa).fold(0.0, f64::max);
    let failed = rep.cases.iter().filter(|c| !c.passed).count();
    let max_fr = tresca.frictionless_error.iter().copied().fold(0.0, f64::max);
    let summary = vec![
        format!(
            "oracle agreement: {} cases, {} failed, max |ssn - uzawa| {:.3e} (tolerance {:.1e}) {}",
            rep.cases.len(),
            failed,
            worst,
            10.0 * rep.tol,
            mark(rep.passed())
        ),
        format!(
            "tresca reduction: {} problems, max corrections {}, frictionless error {:.3e} {}",
            tresca.corrections.len(),
            tresca.corrections.iter().copied().max().unwrap_or(0),
            max_fr,
            mark(tresca.passed)
        ),
    ];
    Ok(SuiteReport {
        suite: Suite::Oracles,
        summary,
        csv,
        passed: rep.passed() && tresca.passed,
    })
}

fn gate_csv(study: &GateStudy) -> String {
    let mut csv = String::from("factor,lipschitz,load,converged,corrections,max_ratio,bound,uniqueness,asserted,passed\n");
    let opt = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:.12e}"));
    for p in &study.points {
        let _ = writeln!(
            csv,
            "{},{:.12e},{},{},{},{},{:.12e},{},{},{}",
            p.factor,
            p.lipschitz,
            p.load,
            p.converged,
            p.corrections.map_or_else(String::new, |c| c.to_string()),
            opt(p.max_ratio),
            p.bound,
            opt(p.uniqueness),
            p.asserted,
            p.passed
        );
    }
    csv
}

fn gate_suite(seed: u64) -> Result<SuiteReport, CoreError> {
    let study = gate_study(&GateStudyOptions {
        seed,
        ..Default::default()
    })?;
    let mut summary = vec![format!(
        "alpha* {:.6}, c {:.6}, Z0 {:.6}",
        study.alpha_min, study.trace_constant, study.z0
    )];
    let mut factors: Vec<f64> = study.points.iter().map(|p| p.factor).collect();
    factors.dedup();
    for f in factors {
        let pts: Vec<_> = study.points.iter().filter(|p| p.factor == f).collect();
        let ratio = pts.iter().filter_map(|p| p.max_ratio).fold(0.0, f64::max);
        let outer = pts.iter().filter_map(|p| p.corrections).max().unwrap_or(0);
        let conv = pts.iter().filter(|p| p.converged).count();
        let tag = if pts[0].asserted { mark(pts.iter().all(|p| p.passed)) } else { "recorded" };
        summary.push(format!(
            "L/Z0 = {f}: converged {conv}/{}, max corrections {outer}, max ratio {ratio:.3} (bound {:.3}) {tag}",
            pts.len(),
            pts[0].bound
        ));
    }
    Ok(SuiteReport {
        suite: Suite::Gate,
        summary,
        csv: gate_csv(&study),
        passed: study.passed(),
    })
}

fn lemma2_suite(workers: usize) -> Result<SuiteReport, CoreError> {
    let rep = lemma2_report(&[4, 8], lemma2_grid(), workers)?;
    let mut csv = String::from("nx,steps,ratio,sup_lhs,sup_rhs\n");
    let mut summary = Vec::new();
    for r in &rep.runs {
        let _ = writeln!(csv, "{},{},{:.12e},{:.12e},{:.12e}", r.nx, r.steps, r.ratio, r.sup_lhs, r.sup_rhs);
        summary.push(format!("nx {}: ratio {:.6e}", r.nx, r.ratio));
    }
    summary.push(format!("variation {:.3} (limit 2) {}", rep.variation, mark(rep.passed())));
    Ok(SuiteReport {
        suite: Suite::Lemma2,
        summary,
        csv,
        passed: rep.passed(),
    })
}

fn invariants_suite(seed: u64) -> Result<SuiteReport, CoreError> {
    let (inv, dec, temp) = invariant_reports(seed)?;
    let mut csv = String::from("check,value\n");
    for (name, a) in &inv.asymmetry {
        let _ = writeln!(csv, "asymmetry {name},{a:.12e}");
    }
    let _ = writeln!(csv, "viscous ratio,{:.12e}", inv.viscous_ratio);
    let _ = writeln!(csv, "conduction ratio,{:.12e}", inv.conduction_ratio);
    let _ = writeln!(csv, "four-term max ratio,{:.12e}", inv.four_term.max_ratio);
    let _ = writeln!(csv, "decoupling max relative,{:.12e}", dec.max_relative);
    for (n, d) in temp.steps.iter().zip(&temp.differences) {
        let _ = writeln!(csv, "temperature difference N={n},{d:.12e}");
    }
    let _ = writeln!(csv, "temperature order,{:.12e}", temp.order);
    let max_asym = inv.asymmetry.iter().map(|a| a.1).fold(0.0, f64::max);
    let structural = max_asym <= 1e-14 && inv.viscous_ratio >= 1.0 - 1e-12 && inv.conduction_ratio >= 1.0 - 1e-12;
    let summary = vec![
        format!(
            "symmetry/ellipticity: max asymmetry {max_asym:.1e}, min ratios {:.6} / {:.6} {}",
            inv.viscous_ratio,
            inv.conduction_ratio,
            mark(structural)
        ),
        format!(
            "four-term bound: max ratio {:.6} over {} samples {}",
            inv.four_term.max_ratio,
            inv.four_term.samples,
            mark(inv.four_term.passed)
        ),
        format!("decoupling: max relative {:.3e} {}", dec.max_relative, mark(dec.passed())),
        format!(
            "temperature integrators: differences {:?}, order {:.3} {}",
            temp.differences.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>(),
            temp.order,
            mark(temp.passed())
        ),
    ];
    Ok(SuiteReport {
        suite: Suite::Invariants,
        summary,
        csv,
        passed: inv.passed() && dec.passed() && temp.passed(),
    })
}

pub fn run_suite(suite: Suite, seed: u64, workers: usize) -> Result<SuiteReport, CliError> {
    match suite {
        Suite::Mms => mms_suite(workers),
        Suite::Oracles => oracles_suite(seed),
        Suite::Gate => gate_suite(seed),
        Suite::Lemma2 => lemma2_suite(workers),
        Suite::Invariants => invariants_suite(seed),
    }
    .map_err(solver)
}
