//! Cross-check of the analytic intensity against a direct integration of the
//! discretized spin-wave correlation matrix, with a convergence study.

use coherent_raman::intensity::{prepared_seed, uniform_times, StokesChannel};
use coherent_raman::oracle::{convergence_study, max_relative_deviation, simulate};
use coherent_raman::params::{build_params, parse_config};
use coherent_raman::cli::SMOKE_CONFIG;

fn main() -> coherent_raman::Result<()> {
    let params = build_params(&parse_config(SMOKE_CONFIG)?)?;
    let stokes = StokesChannel::for_params(&params, params.w0)?;
    let seed = prepared_seed(&params)?;
    let times = uniform_times(41, 1.0);

    for (name, initial) in [("urs", None), ("co", Some(seed.clone())), ("counter", Some(seed.reflect()))] {
        let analytic = stokes.trace(&times, initial.as_ref())?;
        let direct = simulate(stokes.history(), initial.as_ref(), 128, 1.0 / 2000.0, &times)?;
        println!("{name:<8} max relative deviation {:.3e}", max_relative_deviation(&direct, &analytic));
    }

    let analytic = stokes.trace(&times, None)?;
    let report = convergence_study(stokes.history(), None, &analytic, &[32, 64, 128], &[1e-3, 5e-4, 2.5e-4])?;
    for e in &report.spatial {
        println!("M = {:>4}  error {:.3e}", e.cells, e.max_rel_error);
    }
    println!("spatial orders {:?}", report.spatial_orders);
    Ok(())
}
