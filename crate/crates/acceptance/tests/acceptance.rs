//! Runs every acceptance criterion and prints one line per criterion.

use kinesim_acceptance::{criteria, evaluate};

fn main() {
    let mut failed = 0;
    for c in criteria() {
        let report = evaluate(&c);
        println!("{report}");
        failed += usize::from(!report.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
