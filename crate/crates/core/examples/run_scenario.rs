//! Runs the cohomology group of a scenario file through the library API and prints the report.

use sympdef::suite::{self, RunFlags, Subcommand};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "scenarios/t2.json".into());
    let raw = std::fs::read_to_string(&path).expect("readable scenario");
    let sc = suite::parse_scenario(&raw).expect("valid scenario");
    let report = suite::run(Subcommand::Cohomology, &sc, &raw, &RunFlags::default());
    print!("{}", report.to_json());
}
