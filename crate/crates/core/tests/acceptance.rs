//! Acceptance criteria, one line each. Failures are reported, never fatal.

use kssim::ksctl::run_criteria;

fn main() {
    let results = run_criteria(&[]);
    for r in &results {
        println!("{}", r.line());
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
}
