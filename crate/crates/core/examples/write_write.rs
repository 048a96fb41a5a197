//! Two Gaussian write pulses: URS, and ERS seeded by the spin wave of the
//! first pulse in co- and counter-propagating geometry.

use coherent_raman::intensity::{uniform_times, write_write_traces, DEFAULT_QUAD_TOL};
use coherent_raman::params::ModelParams;

fn main() -> coherent_raman::Result<()> {
    let params = ModelParams::fig4();
    let times = uniform_times(21, 1.0);
    let traces = write_write_traces(&params, &times, DEFAULT_QUAD_TOL)?;
    println!("{:>5} {:>14} {:>14} {:>14}", "t", "urs", "ers co", "ers counter");
    for i in 0..times.len() {
        println!(
            "{:>5.2} {:>14.6e} {:>14.6e} {:>14.6e}",
            times[i], traces.urs.total[i], traces.co.total[i], traces.counter.total[i]
        );
    }
    let peak = traces.counter.peak_index();
    println!(
        "\ncounter/urs at the peak: {:.3}",
        traces.counter.total[peak] / traces.urs.total[peak]
    );
    Ok(())
}
