//! Drive the command-line front end from code and read back its CSV output.

use coherent_raman::cli::main_entry;
use coherent_raman::io::Table;

fn main() -> coherent_raman::Result<()> {
    let out = std::env::temp_dir().join("coherent-raman-example");
    let code = main_entry(["coherent-raman", "--out", out.to_str().unwrap(), "fig3", "--strengths", "0.5,1,2"]);
    assert_eq!(code, 0);
    let path = out.join("fig3.csv");
    let text = std::fs::read_to_string(&path).expect("fig3.csv was written");
    let table = Table::parse(&text)?;
    println!("{:?}", table.header);
    println!("{:?}", table.column("ratio_zeta6"));
    Ok(())
}
