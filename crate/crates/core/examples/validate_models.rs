//! Print the validation table: analytical examples against closed forms and
//! their market-problem encodings against the analytical answers.

use zonal_market::validate::{render_table, run_checks, ValidationSettings};

fn main() {
    let checks = run_checks(&ValidationSettings::default());
    print!("{}", render_table(&checks));
    let failed = checks.iter().filter(|c| !c.passed()).count();
    println!("{} checks, {failed} failed", checks.len());
}
