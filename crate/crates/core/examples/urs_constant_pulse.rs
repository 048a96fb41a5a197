//! Usual Raman scattering for a flat-top pulse: the Green's-function trace
//! against its closed form, with and without depletion of the population.

use coherent_raman::intensity::{uniform_times, urs_constant_closed_form, StokesChannel};
use coherent_raman::params::{Channel, Population};

fn main() -> coherent_raman::Result<()> {
    let (gain, spin, pump) = (6.0, 0.3, 0.3);
    let channel = Channel::constant(gain, spin, pump);
    let depleting = StokesChannel::new(channel, Population::Depleting { w0: 1.0 })?;
    let frozen = StokesChannel::new(channel, Population::Undepleted)?;
    let times = uniform_times(11, 1.0);
    let trace = depleting.trace(&times, None)?;
    let reference = frozen.trace(&times, None)?;
    println!("{:>5} {:>16} {:>16} {:>16}", "t", "trace", "closed form", "no depletion");
    for (i, t) in times.iter().enumerate() {
        let closed = urs_constant_closed_form(*t, gain, spin + pump, pump, 1.0, 1e-12)?;
        println!("{t:>5.2} {:>16.10e} {closed:>16.10e} {:>16.10e}", trace.total[i], reference.total[i]);
    }
    Ok(())
}
