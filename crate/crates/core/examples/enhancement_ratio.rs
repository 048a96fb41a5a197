//! Counter- over co-propagating enhancement as a function of kernel strength.

use coherent_raman::intensity::enhancement_ratio;

fn main() -> coherent_raman::Result<()> {
    println!("{:>9} {:>12} {:>12}", "strength", "zeta1 = 6", "zeta1 = 8");
    for s in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
        println!(
            "{s:>9} {:>12.6} {:>12.6}",
            enhancement_ratio(s, 6.0, 0.2)?,
            enhancement_ratio(s, 8.0, 0.2)?
        );
    }
    Ok(())
}
