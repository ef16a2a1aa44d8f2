//! Runs both shipped scenarios and prints one line per acceptance criterion.
//! Tolerances are pinned here, independently of the scenario files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::Value;
use sympdef::suite::{self, Check, Report, RunFlags, Subcommand};

/// (check name, tolerance). A check missing from this table fails.
const PINNED: &[(&str, f64)] = &[
    ("exterior/d_squared", 0.0),
    ("exterior/cartan", 0.0),
    ("exterior/schouten_jacobi", 0.0),
    ("exterior/pullback_d", 0.0),
    ("cohomology/relative_dims", 0.0),
    ("cohomology/absolute_dims", 0.0),
    ("cohomology/les_rank", 0.0),
    ("iso/i_after_j", 0.0),
    ("iso/j_after_i", 0.0),
    ("iso/j_extension", 0.0),
    ("moser/residual", 1e-6),
    ("moser/l_drift", 1e-8),
    ("moser/monotone_ladder", 0.0),
    ("f_map/constant_exact", 0.0),
    ("f_map/trig_identity", 1e-12),
    ("f_map/singular_rejected", 0.0),
    ("mc/f_residual", 1e-8),
    ("mc/mc_residual", 1e-6),
    ("mc/relative_residual", 1e-8),
    ("koszul/lambda1_squared", 0.0),
    ("koszul/graded_symmetry", 0.0),
    ("koszul/jacobi", 0.0),
    ("koszul/leibniz", 0.0),
    ("koszul/one_form_formula", 0.0),
    ("koszul/relative_closure", 0.0),
    ("gauge/isotopy_residual", 1e-5),
    ("gauge/l_drift", 1e-8),
    ("gauge/mc_residual", 1e-10),
    ("gauge/linearization", 1e-6),
    ("vdata/delta_square", 0.0),
    ("vdata/jacobi", 0.0),
    ("vdata/strict_mc_transport", 0.0),
    ("classify/exact_round_trip", 0.0),
    ("classify/numeric_agreement", 1e-8),
    ("witness/equivalent_gap", 1e-6),
    ("witness/tau_residual", 1e-5),
    ("witness/tau_l_drift", 1e-8),
    ("witness/residual", 1e-5),
    ("witness/l_residual", 1e-5),
    ("witness/far_rejected", 0.0),
    ("diagram/first_square", 1e-6),
    ("diagram/first_coords", 1e-6),
    ("diagram/second_square", 0.0),
    ("gronwall/position_excess", 1e-9),
    ("gronwall/c1_excess", 1e-6),
    ("first_order/cocycle_residual", 1e-5),
    ("first_order/omega_derivative", 1e-5),
    ("first_order/sigma_derivative", 1e-5),
    ("first_order/isotopy_class", 1e-5),
    ("phi_l/graph_miss", 1e-10),
];

const CRITERIA: &[(u8, &str, &[&str])] = &[
    (1, "exterior calculus identities", &["exterior"]),
    (2, "relative and absolute cohomology of the torus pair", &["cohomology"]),
    (3, "cone cohomology matches relative cohomology", &["iso"]),
    (4, "relative Moser flow", &["moser"]),
    (5, "F-map and Maurer-Cartan correspondence", &["f_map", "mc"]),
    (6, "Koszul bracket identities", &["koszul"]),
    (7, "gauge equivalence realized by an isotopy", &["gauge"]),
    (8, "derived brackets from V-data", &["vdata"]),
    (9, "classification and equivalence witnesses", &["classify", "witness"]),
    (10, "comparison diagram commutes", &["diagram"]),
    (11, "Gronwall bounds for the cutoff flow", &["gronwall"]),
    (12, "first-order prolongation of cone cocycles", &["first_order"]),
];

fn scenario(name: &str) -> (String, suite::Scenario) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    let raw = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let sc = suite::parse_scenario(&raw).unwrap_or_else(|e| panic!("{name}: {e}"));
    (raw, sc)
}

fn run_all(name: &str) -> Report {
    let (raw, sc) = scenario(name);
    suite::run(Subcommand::All, &sc, &raw, &RunFlags::default())
}

fn dims(r: &Report, key: &str) -> Vec<u64> {
    r.sections["cohomology"]["dims"][key]
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_u64).collect())
        .unwrap_or_default()
}

/// A check passes only against its pinned tolerance, never the scenario's.
fn pinned_pass(c: &Check) -> Result<(), String> {
    let tol = PINNED
        .iter()
        .find(|(n, _)| *n == c.name)
        .map(|(_, t)| *t)
        .ok_or_else(|| format!("{} has no pinned tolerance", c.name))?;
    if c.value.is_finite() && c.value <= tol {
        Ok(())
    } else {
        Err(format!("{} = {:e} > {:e}", c.name, c.value, tol))
    }
}

fn main() {
    let reports = [("t2", run_all("t2.json")), ("t4", run_all("t4.json"))];
    let mut by_group: BTreeMap<&str, Vec<(String, Result<(), String>)>> = BTreeMap::new();
    let mut stray = Vec::new();
    for (tag, r) in &reports {
        for e in &r.errors {
            stray.push(format!("{tag}: error in {}: {}", e.group, e.message));
        }
        for c in &r.checks {
            let group = c.name.split('/').next().unwrap_or("");
            let res = pinned_pass(c).map_err(|m| format!("{tag}: {m}"));
            match PINNED.iter().find(|(n, _)| *n == c.name) {
                Some(_) => by_group.entry(group).or_default().push((format!("{tag} {}", c.name), res)),
                None => stray.push(format!("{tag}: {}", res.unwrap_err())),
            }
        }
    }

    // cohomology oracles, independent of the scenario's own expectations
    let oracle: [(&str, &[u64], &[u64]); 2] = [("t2", &[0, 1, 1], &[1, 2, 1]), ("t4", &[0, 2, 5, 4, 1], &[1, 4, 6, 4, 1])];
    let mut dims_ok = Vec::new();
    for ((tag, rel, abs), (_, r)) in oracle.iter().zip(&reports) {
        let (got_rel, got_abs) = (dims(r, "relative"), dims(r, "absolute"));
        let res = if got_rel == *rel && got_abs == *abs {
            Ok(())
        } else {
            Err(format!("{tag}: dims {got_rel:?} / {got_abs:?}"))
        };
        dims_ok.push((format!("{tag} dims"), res));
    }
    by_group.entry("cohomology").or_default().extend(dims_ok);

    let mut failed = Vec::new();
    for (id, title, groups) in CRITERIA {
        let rows: Vec<_> = groups.iter().flat_map(|g| by_group.get(g).into_iter().flatten()).collect();
        let bad: Vec<&String> = rows.iter().filter_map(|(_, r)| r.as_ref().err()).collect();
        let ok = !rows.is_empty() && bad.is_empty();
        println!(
            "criterion {id:>2} {} {title} ({} checks){}",
            if ok { "PASS" } else { "FAIL" },
            rows.len(),
            if bad.is_empty() { String::new() } else { format!(": {}", bad.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("; ")) }
        );
        if !ok {
            failed.push(*id);
        }
    }
    for (name, r) in by_group.get("phi_l").into_iter().flatten() {
        println!("extra        {} {name}", if r.is_ok() { "PASS" } else { "FAIL" });
        if let Err(m) = r {
            stray.push(m.clone());
        }
    }
    for s in &stray {
        println!("unassigned: {s}");
    }
    if !(failed.is_empty() && stray.is_empty()) {
        println!("acceptance FAILED: criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance ok: 12/12 criteria");
}
