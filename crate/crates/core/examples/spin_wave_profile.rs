//! Flipped-atom density left by a flat-top first write pulse, printed as a
//! coarse text plot for two gains.

use coherent_raman::spinwave::flipped_density;

fn main() {
    let a = 0.2;
    for zeta1 in [6.0, 8.0] {
        println!("zeta1 = {zeta1}, a = {a}");
        let peak = flipped_density(1.0, zeta1, a);
        for k in 0..=10 {
            let z = k as f64 / 10.0;
            let n = flipped_density(z, zeta1, a);
            let bar = "#".repeat((50.0 * n / peak).round() as usize);
            println!("  z = {z:.1} {n:>10.4} {bar}");
        }
    }
}
