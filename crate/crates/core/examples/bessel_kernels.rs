//! Modified Bessel functions and the propagation kernels built from them.

use coherent_raman::kernels::{bessel_difference, kernel_ge, kernel_gs, kernel_h, KernelArgs};
use coherent_raman::specfun::{bessel_i, entire_i0, entire_i1};

fn main() -> coherent_raman::Result<()> {
    for (n, x) in [(0, 1.0), (1, 2.0), (0, 50.0), (1, 700.0)] {
        let plain = bessel_i(n, x, false)?;
        let scaled = bessel_i(n, x, true)?;
        println!("I_{n}({x}) = {:.16e}   e^-x I_{n}({x}) = {:.16e}", plain.value, scaled.value);
    }

    // The kernels depend on p_diff and dz only through x = p_diff dz, and
    // continue smoothly through x = 0 into the oscillatory regime.
    println!("\n{:>8} {:>14} {:>14} {:>14}", "x", "I0(2sqrt x)", "I1/sqrt x", "B(x)");
    for x in [-4.0, -1.0, 0.0, 0.5, 2.0, 8.0] {
        println!("{x:>8} {:>14.8} {:>14.8} {:>14.8}", entire_i0(x), entire_i1(x), bessel_difference(x));
    }

    let args = KernelArgs::from_differences(3.0, 0.4);
    println!(
        "\nH = {:.10}  G_S = {:.10}  G_e = {:.10}",
        kernel_h(&args),
        kernel_gs(&args),
        kernel_ge(&args)
    );
    Ok(())
}
