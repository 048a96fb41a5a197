//! Command-line front end: `fig2 | fig3 | fig4 | run | verify`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::intensity::{
    enhancement_ratio_for, prepared_seed, uniform_times, write_write_traces, IntensityTrace, StokesChannel,
    DEFAULT_QUAD_TOL, NORMALIZATION,
};
use crate::io::{format_number, RunManifest, Table};
use crate::oracle::{self, convergence_study, max_relative_deviation};
use crate::params::{build_params, fig4_config, parse_config, ModelParams, HISTORY_TOL};
use crate::spinwave::{self, flipped_density, flipped_profile, map_geometry, Geometry};

pub const SMOKE_CONFIG: &str = include_str!("../configs/smoke_constant.conf");

/// Largest analytic-versus-oracle deviation accepted by `verify`.
pub const VERIFY_TOLERANCE: f64 = 0.02;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "coherent-raman", version, about = "Stokes intensities of write-write Raman scattering")]
pub struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Points of the uniform time grid on [0, T₂].
    #[arg(long, global = true, default_value_t = 201)]
    pub time_points: usize,
    /// Relative tolerance of the intensity quadratures.
    #[arg(long, global = true, default_value_t = DEFAULT_QUAD_TOL)]
    pub quad_tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Flipped-atom density along the cell for constant write pulses.
    Fig2(Fig2Args),
    /// Counter/co ratio of the additional intensities against kernel strength.
    Fig3(Fig3Args),
    /// URS and ERS traces for Gaussian pulses, co- and counter-propagating.
    Fig4,
    /// Traces and prepared density for an arbitrary configuration.
    Run,
    /// Compare the analytic evaluator with the direct integrator.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct Fig2Args {
    #[arg(long, value_delimiter = ',', default_values_t = [6.0, 8.0])]
    pub zeta1: Vec<f64>,
    /// Damping `2c Re Γ_S₁ / (χ₁² L)`.
    #[arg(long, default_value_t = 0.2)]
    pub a: f64,
    #[arg(long, default_value_t = 101)]
    pub z_points: usize,
}

#[derive(Debug, Args)]
pub struct Fig3Args {
    #[arg(long, value_delimiter = ',', default_values_t = [6.0, 8.0])]
    pub zeta1: Vec<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub a: f64,
    /// Explicit strengths; defaults to 0.1, 0.2, …, 10.
    #[arg(long, value_delimiter = ',')]
    pub strengths: Option<Vec<f64>>,
    /// Report co/counter instead of counter/co.
    #[arg(long)]
    pub swap: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 128)]
    pub cells: usize,
    /// Oracle time step in units of T₂.
    #[arg(long, default_value_t = 5e-4)]
    pub dt: f64,
    /// Also run a convergence study (cells 32, 64, 128; three steps).
    #[arg(long)]
    pub convergence: bool,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Verification(_) => EXIT_VERIFICATION,
        Error::Io { .. } => EXIT_CONFIG,
        e if e.is_config() => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Parse arguments, run, report errors on stderr and return the exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(path: Option<&Path>, fallback: impl FnOnce() -> Result<Vec<(String, String)>>) -> Result<Vec<(String, String)>> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(parse_config(&text)?.into_iter().collect())
        }
        None => fallback(),
    }
}

fn params_from(entries: &[(String, String)]) -> Result<ModelParams> {
    build_params(&entries.iter().cloned().collect())
}

pub fn run(cli: &Cli) -> Result<()> {
    if !(cli.quad_tol > 0.0) {
        return Err(Error::out_of_range("quad-tol", format!("{} must be > 0", cli.quad_tol)));
    }
    if cli.time_points < 2 {
        return Err(Error::out_of_range("time-points", "need at least 2"));
    }
    fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let start = Instant::now();
    let mut manifest = match &cli.command {
        Command::Fig2(a) => cmd_fig2(cli, a)?,
        Command::Fig3(a) => cmd_fig3(cli, a)?,
        Command::Fig4 => cmd_fig4(cli)?,
        Command::Run => cmd_run(cli)?,
        Command::Verify(a) => {
            let (manifest, failure) = cmd_verify(cli, a)?;
            let mut manifest = manifest;
            manifest.wall_clock_s = start.elapsed().as_secs_f64();
            manifest.write(&cli.out)?;
            return match failure {
                Some(msg) => Err(Error::Verification(msg)),
                None => Ok(()),
            };
        }
    };
    manifest.wall_clock_s = start.elapsed().as_secs_f64();
    manifest.write(&cli.out)?;
    Ok(())
}

fn label(x: f64) -> String {
    format!("{x}")
}

fn write_table(cli: &Cli, manifest: &mut RunManifest, name: &str, table: &Table) -> Result<()> {
    let path = cli.out.join(name);
    table.write(&path)?;
    println!("wrote {}", path.display());
    manifest.outputs.push(path);
    Ok(())
}

pub fn fig2_table(args: &Fig2Args) -> Result<Table> {
    if args.z_points < 2 {
        return Err(Error::out_of_range("z-points", "need at least 2"));
    }
    if args.zeta1.iter().any(|&z| !(z >= 0.0)) || !(args.a >= 0.0) {
        return Err(Error::out_of_range("zeta1/a", "must be >= 0"));
    }
    let z = uniform_times(args.z_points, 1.0);
    let columns: Vec<Vec<f64>> = args
        .zeta1
        .iter()
        .map(|&zeta| z.par_iter().map(|&zz| flipped_density(zz, zeta, args.a)).collect())
        .collect();
    let mut table = Table::new(
        std::iter::once("z_norm".to_string()).chain(args.zeta1.iter().map(|&v| format!("n_zeta{}", label(v)))),
    );
    for (i, &zz) in z.iter().enumerate() {
        let row: Vec<f64> = std::iter::once(zz).chain(columns.iter().map(|c| c[i])).collect();
        table.push_numbers(&row);
    }
    Ok(table)
}

fn cmd_fig2(cli: &Cli, args: &Fig2Args) -> Result<RunManifest> {
    let mut manifest = RunManifest::new("fig2");
    manifest.tolerances.push(("flipped_density".into(), spinwave::FLIPPED_DENSITY_TOL));
    manifest.extra.push(("a".into(), label(args.a)));
    write_table(cli, &mut manifest, "fig2.csv", &fig2_table(args)?)?;
    Ok(manifest)
}

pub fn default_strengths() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 10.0).collect()
}

pub fn fig3_table(args: &Fig3Args) -> Result<Table> {
    let strengths = args.strengths.clone().unwrap_or_else(default_strengths);
    if strengths.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::out_of_range("strengths", "must be > 0"));
    }
    let profiles: Vec<_> = args.zeta1.iter().map(|&z| flipped_profile(z, args.a)).collect();
    let mut table = Table::new(
        std::iter::once("strength".to_string()).chain(args.zeta1.iter().map(|&v| format!("ratio_zeta{}", label(v)))),
    );
    for &s in &strengths {
        let ratios: Result<Vec<f64>> = profiles
            .iter()
            .map(|p| enhancement_ratio_for(p, s).map(|r| if args.swap { 1.0 / r } else { r }))
            .collect();
        match ratios {
            Ok(r) => {
                let row: Vec<f64> = std::iter::once(s).chain(r).collect();
                table.push_numbers(&row);
            }
            Err(e @ Error::RatioUnderflow { .. }) => eprintln!("warning: row omitted: {e}"),
            Err(e) => return Err(e),
        }
    }
    Ok(table)
}

fn cmd_fig3(cli: &Cli, args: &Fig3Args) -> Result<RunManifest> {
    let mut manifest = RunManifest::new("fig3");
    manifest.tolerances.push(("flipped_density".into(), spinwave::FLIPPED_DENSITY_TOL));
    manifest.extra.push(("a".into(), label(args.a)));
    manifest.extra.push(("swap".into(), args.swap.to_string()));
    write_table(cli, &mut manifest, "fig3.csv", &fig3_table(args)?)?;
    Ok(manifest)
}

fn base_manifest(name: &str, cli: &Cli, config: &[(String, String)]) -> RunManifest {
    let mut manifest = RunManifest::new(name);
    manifest.config = config.to_vec();
    manifest.tolerances = vec![
        ("intensity_relative".into(), cli.quad_tol),
        ("history".into(), HISTORY_TOL),
        ("six_term_inner".into(), spinwave::INNER_TOL),
        ("six_term_outer".into(), spinwave::OUTER_TOL),
    ];
    manifest.extra.push(("time_points".into(), cli.time_points.to_string()));
    manifest.extra.push(("normalization".into(), NORMALIZATION.into()));
    manifest
}

fn fig4_default() -> Result<Vec<(String, String)>> {
    Ok(fig4_config().into_iter().collect())
}

/// The two write-write tables (co and counter) for a parameter set.
pub fn fig4_tables(params: &ModelParams, time_points: usize, tol: f64) -> Result<(Table, Table, bool)> {
    let times = uniform_times(time_points, 1.0);
    let traces = write_write_traces(params, &times, tol)?;
    let table = |ers: &IntensityTrace| {
        let mut t = Table::new(["t_norm", "urs", "ers_total", "vacuum_part", "seed_part"]);
        for i in 0..times.len() {
            t.push_numbers(&[times[i], traces.urs.total[i], ers.total[i], ers.vacuum_part[i], ers.seed_part[i]]);
        }
        t
    };
    let inverted = traces.urs.population_inverted || traces.co.population_inverted;
    Ok((table(&traces.co), table(&traces.counter), inverted))
}

fn note_inversion(manifest: &mut RunManifest, inverted: bool) {
    if inverted {
        eprintln!("warning: population difference crosses zero; kernels use the J-Bessel continuation");
    }
    manifest.extra.push(("population_inverted".into(), inverted.to_string()));
}

fn cmd_fig4(cli: &Cli) -> Result<RunManifest> {
    let config = load_config(cli.config.as_deref(), fig4_default)?;
    let params = params_from(&config)?;
    let mut manifest = base_manifest("fig4", cli, &config);
    let (co, counter, inverted) = fig4_tables(&params, cli.time_points, cli.quad_tol)?;
    note_inversion(&mut manifest, inverted);
    write_table(cli, &mut manifest, "fig4_co.csv", &co)?;
    write_table(cli, &mut manifest, "fig4_counter.csv", &counter)?;
    Ok(manifest)
}

pub fn trace_table(trace: &IntensityTrace) -> Table {
    let mut t = Table::new(["t_norm", "total", "vacuum_part", "seed_part", "geometry"]);
    for i in 0..trace.len() {
        let mut row: Vec<String> = [trace.times[i], trace.total[i], trace.vacuum_part[i], trace.seed_part[i]]
            .iter()
            .map(|&x| format_number(x))
            .collect();
        row.push(trace.geometry_label().to_string());
        t.push(row);
    }
    t
}

fn cmd_run(cli: &Cli) -> Result<RunManifest> {
    let config = load_config(cli.config.as_deref(), fig4_default)?;
    let params = params_from(&config)?;
    let mut manifest = base_manifest("run", cli, &config);
    let times = uniform_times(cli.time_points, 1.0);
    let traces = write_write_traces(&params, &times, cli.quad_tol)?;
    note_inversion(&mut manifest, traces.urs.population_inverted || traces.co.population_inverted);
    write_table(cli, &mut manifest, "run_urs.csv", &trace_table(&traces.urs))?;
    write_table(cli, &mut manifest, "run_co.csv", &trace_table(&traces.co))?;
    write_table(cli, &mut manifest, "run_counter.csv", &trace_table(&traces.counter))?;

    let seed = prepared_seed(&params)?;
    let mut density = Table::new(["z_norm", "density"]);
    for z in uniform_times(101, 1.0) {
        density.push_numbers(&[z, seed.density(z)]);
    }
    write_table(cli, &mut manifest, "run_density.csv", &density)?;
    Ok(manifest)
}

/// One analytic-versus-oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub scenario: String,
    pub deviation: f64,
}

pub fn verify_scenarios(params: &ModelParams, cells: usize, dt: f64, time_points: usize, tol: f64) -> Result<Vec<VerifyRow>> {
    let times = uniform_times(time_points, 1.0);
    let seed = prepared_seed(params)?;
    let urs = StokesChannel::for_params(params, 1.0)?.with_tolerance(tol);
    let ers = StokesChannel::for_params(params, params.w0)?.with_tolerance(tol);
    let cases = [
        ("urs", &urs, None),
        ("ers_co", &ers, Some(map_geometry(&seed, Geometry::Co)?)),
        ("ers_counter", &ers, Some(map_geometry(&seed, Geometry::Counter)?)),
    ];
    cases
        .into_par_iter()
        .map(|(name, stokes, initial)| {
            let analytic = stokes.trace(&times, initial.as_ref())?;
            let direct = oracle::simulate(stokes.history(), initial.as_ref(), cells, dt, &times)?;
            Ok(VerifyRow {
                scenario: name.to_string(),
                deviation: max_relative_deviation(&direct, &analytic),
            })
        })
        .collect()
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> Result<(RunManifest, Option<String>)> {
    let config = load_config(cli.config.as_deref(), || Ok(parse_config(SMOKE_CONFIG)?.into_iter().collect()))?;
    let params = params_from(&config)?;
    let mut manifest = base_manifest("verify", cli, &config);
    manifest.extra.push(("cells".into(), args.cells.to_string()));
    manifest.extra.push(("dt".into(), format!("{:e}", args.dt)));

    let rows = verify_scenarios(&params, args.cells, args.dt, cli.time_points, cli.quad_tol)?;
    let mut table = Table::new(["scenario", "cells", "dt", "max_rel_deviation", "pass"]);
    let mut failures = Vec::new();
    for row in &rows {
        let pass = row.deviation <= VERIFY_TOLERANCE;
        println!(
            "{:<12} max relative deviation {:.3e} {}",
            row.scenario,
            row.deviation,
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failures.push(format!("{} deviates by {:.3e}", row.scenario, row.deviation));
        }
        table.push(vec![
            row.scenario.clone(),
            args.cells.to_string(),
            format_number(args.dt),
            format_number(row.deviation),
            pass.to_string(),
        ]);
    }

    if args.convergence {
        let times = uniform_times(cli.time_points, 1.0);
        let stokes = StokesChannel::for_params(&params, 1.0)?.with_tolerance(cli.quad_tol);
        let analytic = stokes.trace(&times, None)?;
        let dts = [2.0 * args.dt, args.dt, 0.5 * args.dt];
        let report = convergence_study(stokes.history(), None, &analytic, &[32, 64, 128], &dts)?;
        let mut conv = Table::new(["kind", "cells", "dt", "max_rel_error"]);
        for (kind, entries) in [("spatial", &report.spatial), ("temporal", &report.temporal)] {
            for e in entries.iter() {
                conv.push(vec![
                    kind.into(),
                    e.cells.to_string(),
                    format_number(e.dt),
                    format_number(e.max_rel_error),
                ]);
            }
        }
        println!(
            "convergence: spatial orders {:?}, temporal orders {:?}, monotone {}",
            report.spatial_orders, report.temporal_orders, report.monotone
        );
        if !report.monotone || report.min_order() < 1.0 {
            failures.push(format!("convergence order {:.2} (monotone {})", report.min_order(), report.monotone));
        }
        write_table(cli, &mut manifest, "verify_convergence.csv", &conv)?;
    }
    write_table(cli, &mut manifest, "verify.csv", &table)?;
    let failure = (!failures.is_empty()).then(|| failures.join("; "));
    manifest.extra.push(("verdict".into(), if failure.is_some() { "fail" } else { "pass" }.into()));
    Ok((manifest, failure))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::MissingKey("w0".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::GridTooCoarse("x".into())), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::Verification("x".into())), EXIT_VERIFICATION);
    }

    #[test]
    fn smoke_config_is_valid() {
        let p = build_params(&parse_config(SMOKE_CONFIG).unwrap()).unwrap();
        assert_eq!(p.pulse_shape, crate::params::PulseKind::ConstantStep);
    }

    #[test]
    fn fig2_headers_follow_zeta_values() {
        let t = fig2_table(&Fig2Args {
            zeta1: vec![6.0, 7.5],
            a: 0.2,
            z_points: 3,
        })
        .unwrap();
        assert_eq!(t.header, ["z_norm", "n_zeta6", "n_zeta7.5"]);
        assert_eq!(t.rows.len(), 3);
    }
}
