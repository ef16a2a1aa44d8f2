//! Scenario files, check groups and JSON reports.
//!
//! A scenario fixes the torus, budgets, step counts and the inputs of every check group.
//! Each group appends named checks `value ≤ tolerance`; the report is deterministic for a
//! fixed scenario, seed and tool version (timings are opt-in).

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::chart::{self, Section};
use crate::cochain::{ComplexKind, Engine};
use crate::coeff::{parse_rational, PiPoly, Rational};
use crate::derived::{self, abelian, shifted, EndData, TorusData, VData};
use crate::error::{Error, Result};
use crate::exterior::{TrigForm, TrigMultiVector};
use crate::flows;
use crate::json::{form_from_value, form_to_value, numeric_form_to_value, round_sig};
use crate::koszul::{Koszul, TimePoly};
use crate::moduli::{Moduli, ModuliOptions};
use crate::random::{self, Shape};
use crate::symplectic::{default_grid, ConstantSymplectic};
use crate::torus::TorusModel;

pub const SCHEMA: &str = "sympdef-report/1";

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n: usize,
    #[serde(default = "default_budget")]
    pub budget: i64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Verification grid per axis on `M`; defaults to 32 on `T²` and 12 on `T⁴`.
    #[serde(default)]
    pub grid: Option<usize>,
    /// Per-check tolerance overrides keyed by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub cohomology: Option<CohomologySpec>,
    #[serde(default)]
    pub classify: Option<ClassifySpec>,
    #[serde(default)]
    pub witness: Option<WitnessSpec>,
    #[serde(default)]
    pub moser: Option<MoserSpec>,
    #[serde(default)]
    pub gronwall: Option<GronwallSpec>,
    #[serde(default)]
    pub phi_l: Option<PhiLSpec>,
    #[serde(default)]
    pub mc_check: Option<McCheckSpec>,
    #[serde(default)]
    pub gauge: Option<GaugeSpec>,
    #[serde(default)]
    pub vdata_jacobi: Option<VDataSpec>,
    #[serde(default)]
    pub diagram: Option<DiagramSpec>,
    #[serde(default)]
    pub prolong: Option<ProlongSpec>,
}

fn default_budget() -> i64 {
    2
}
fn default_steps() -> usize {
    1000
}
fn default_samples() -> usize {
    100
}
fn default_guard() -> f64 {
    1.0
}
fn one() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohomologySpec {
    /// Expected relative dimensions in degrees `0..=2n`.
    #[serde(default)]
    pub relative: Option<Vec<usize>>,
    #[serde(default)]
    pub absolute: Option<Vec<usize>>,
    /// Random inputs per exterior identity.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySpec {
    /// Coordinate vectors in the stored basis of `H²(M,L)`, as exact rationals.
    pub classes: Vec<Vec<String>>,
    #[serde(default = "default_guard")]
    pub guard: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessSpec {
    pub class: Vec<String>,
    pub amplitude: f64,
    #[serde(default = "one")]
    pub isotopies: usize,
    /// Offset of the first coordinate for the inequivalent pair.
    pub gap: String,
    #[serde(default = "default_guard")]
    pub guard: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoserSpec {
    /// Starting form; defaults to `ω_can`.
    #[serde(default)]
    pub omega: Option<Value>,
    /// Relative primitive `β`; the target is `ω + dβ`.
    pub primitive: Value,
    /// Step ladder; defaults to `steps/4, steps/2, steps`.
    #[serde(default)]
    pub ladder: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GronwallSpec {
    pub sections: usize,
    pub bound: f64,
    #[serde(default)]
    pub grid: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiLSpec {
    pub section: Value,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantF {
    pub beta: Value,
    pub f: Value,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McCheckSpec {
    #[serde(default)]
    pub constant: Vec<ConstantF>,
    #[serde(default)]
    pub trig: Vec<Value>,
    /// Inputs that must be rejected; defaults to `β = ω`.
    #[serde(default)]
    pub singular: Option<Vec<Value>>,
    /// Classes realized and mapped to MC elements.
    #[serde(default)]
    pub classes: Vec<Vec<String>>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub beta0: Value,
    /// Each path is `α_t = Σ_j t^j α_j`, given as the list of `α_j`.
    pub paths: Vec<Vec<Value>>,
    #[serde(default)]
    pub grid: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VDataSpec {
    #[serde(default = "default_arity")]
    pub max_arity: usize,
    #[serde(default = "default_vsamples")]
    pub samples: usize,
    /// Constant relative 2-forms for the strict-morphism MC transport.
    #[serde(default)]
    pub constant: Vec<Value>,
}

fn default_arity() -> usize {
    3
}
fn default_vsamples() -> usize {
    6
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramSpec {
    pub section: Value,
    pub w: Value,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProlongCase {
    pub eta: Value,
    pub beta: Value,
    #[serde(default)]
    pub extension: Option<Value>,
    /// The path comes from an isotopy, so its class must vanish.
    #[serde(default)]
    pub isotopy: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProlongSpec {
    pub cases: Vec<ProlongCase>,
}

/// Parses a scenario, reporting syntax errors with line and column.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    if !(1..=2).contains(&sc.n) {
        return Err(Error::Scenario(format!("n = {} is not supported (1 or 2)", sc.n)));
    }
    if sc.steps == 0 {
        return Err(Error::Scenario("steps must be positive".into()));
    }
    Ok(sc)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Cohomology,
    Classify,
    Witness,
    Moser,
    Gronwall,
    McCheck,
    Gauge,
    VdataJacobi,
    Diagram,
    Prolong,
    PhiL,
    All,
}

impl Subcommand {
    pub const GROUPS: [Subcommand; 11] = [
        Subcommand::Cohomology,
        Subcommand::Classify,
        Subcommand::Witness,
        Subcommand::Moser,
        Subcommand::Gronwall,
        Subcommand::McCheck,
        Subcommand::Gauge,
        Subcommand::VdataJacobi,
        Subcommand::Diagram,
        Subcommand::Prolong,
        Subcommand::PhiL,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Cohomology => "cohomology",
            Subcommand::Classify => "classify",
            Subcommand::Witness => "witness",
            Subcommand::Moser => "moser",
            Subcommand::Gronwall => "gronwall",
            Subcommand::McCheck => "mc-check",
            Subcommand::Gauge => "gauge",
            Subcommand::VdataJacobi => "vdata-jacobi",
            Subcommand::Diagram => "diagram",
            Subcommand::Prolong => "prolong",
            Subcommand::PhiL => "phi-l",
            Subcommand::All => "all",
        }
    }

    fn present(&self, sc: &Scenario) -> bool {
        match self {
            Subcommand::Cohomology => sc.cohomology.is_some(),
            Subcommand::Classify => sc.classify.is_some(),
            Subcommand::Witness => sc.witness.is_some(),
            Subcommand::Moser => sc.moser.is_some(),
            Subcommand::Gronwall => sc.gronwall.is_some(),
            Subcommand::McCheck => sc.mc_check.is_some(),
            Subcommand::Gauge => sc.gauge.is_some(),
            Subcommand::VdataJacobi => sc.vdata_jacobi.is_some(),
            Subcommand::Diagram => sc.diagram.is_some(),
            Subcommand::Prolong => sc.prolong.is_some(),
            Subcommand::PhiL => sc.phi_l.is_some(),
            Subcommand::All => true,
        }
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunFlags {
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub dump_grid: bool,
    pub max_arity: Option<usize>,
    pub timings: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupError {
    pub group: String,
    /// `"input"` for scenario problems, `"internal"` otherwise.
    pub kind: &'static str,
    pub message: String,
}

/// Errors caused by the scenario rather than by a computation.
pub fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse { .. } | Error::Scenario(_) | Error::ArityCap { .. } | Error::NotCocycle(_) | Error::Precondition(_)
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub subcommand: &'static str,
    pub scenario_sha256: String,
    pub n: usize,
    pub seed: u64,
    pub steps: usize,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub errors: Vec<GroupError>,
    pub sections: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl Report {
    /// A report for a scenario that could not be read.
    pub fn unreadable(sub: Subcommand, raw: &str, e: &Error) -> Report {
        Report {
            schema: SCHEMA,
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand: sub.name(),
            scenario_sha256: sha256_hex(raw.as_bytes()),
            n: 0,
            seed: 0,
            steps: 0,
            pass: false,
            checks: Vec::new(),
            errors: vec![GroupError {
                group: "scenario".into(),
                kind: if is_input_error(e) { "input" } else { "internal" },
                message: e.to_string(),
            }],
            sections: BTreeMap::new(),
            timings: None,
        }
    }

    /// `0` pass, `1` failed check, `2` scenario error, `3` internal error.
    pub fn exit_code(&self) -> i32 {
        if self.errors.iter().any(|e| e.kind == "input") {
            2
        } else if !self.errors.is_empty() {
            3
        } else if self.pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Ctx<'a> {
    sc: &'a Scenario,
    model: TorusModel,
    seed: u64,
    steps: usize,
    grid: usize,
    dump: bool,
    max_arity: Option<usize>,
    moduli: OnceLock<Moduli>,
}

impl Ctx<'_> {
    fn moduli(&self) -> &Moduli {
        self.moduli.get_or_init(|| {
            let mut opts = ModuliOptions::for_model(&self.model);
            opts.steps = self.steps;
            Moduli::with_options(self.model, self.sc.budget, opts)
        })
    }

    fn form(&self, v: &Value, degree: usize) -> Result<TrigForm> {
        form_from_value(v, self.model.dim(), Some(degree), false)
    }

    fn section(&self, v: &Value) -> Result<Section> {
        Section::new(self.model, form_from_value(v, self.model.n, Some(1), true)?)
    }

    fn classes(&self, c: &[String]) -> Result<Vec<Rational>> {
        let want = self.moduli().basis().len();
        if c.len() != want {
            return Err(Error::Scenario(format!("class has {} coordinates, H²(M,L) has dimension {want}", c.len())));
        }
        c.iter()
            .map(|s| parse_rational(s).ok_or_else(|| Error::Scenario(format!("bad rational {s:?}"))))
            .collect()
    }
}

#[derive(Default)]
struct Outcome {
    checks: Vec<Check>,
    sections: BTreeMap<String, Value>,
}

impl Outcome {
    fn check(&mut self, sc: &Scenario, name: &str, value: f64, tolerance: f64) {
        let tolerance = sc.tolerances.get(name).copied().unwrap_or(tolerance);
        let value = round_sig(value);
        self.checks.push(Check {
            name: name.to_string(),
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }

    fn section(&mut self, key: &str, group: &str, v: Value) {
        let entry = self.sections.entry(key.to_string()).or_insert_with(|| json!({}));
        entry[group] = v;
    }
}

fn f64s(v: &[f64]) -> Value {
    json!(v.iter().map(|x| round_sig(*x)).collect::<Vec<_>>())
}

fn bool_gap(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        1.0
    }
}

/// Runs a subcommand on a parsed scenario; `raw` is the scenario text for hashing.
pub fn run(sub: Subcommand, sc: &Scenario, raw: &str, flags: &RunFlags) -> Report {
    let model = TorusModel::new(sc.n);
    let ctx = Ctx {
        sc,
        model,
        seed: flags.seed.unwrap_or(sc.seed),
        steps: flags.steps.unwrap_or(sc.steps),
        grid: sc.grid.unwrap_or_else(|| default_grid(model.dim())),
        dump: flags.dump_grid,
        max_arity: flags.max_arity,
        moduli: OnceLock::new(),
    };
    let groups: Vec<Subcommand> = match sub {
        Subcommand::All => Subcommand::GROUPS.iter().copied().filter(|g| g.present(sc)).collect(),
        g => vec![g],
    };
    let mut out = Outcome::default();
    let mut errors = Vec::new();
    let mut timings = BTreeMap::new();
    for g in groups {
        let start = Instant::now();
        let r = if !g.present(sc) {
            Err(Error::Scenario(format!("scenario has no \"{}\" section", g.name().replace('-', "_"))))
        } else {
            run_group(g, &ctx, &mut out)
        };
        if let Err(e) = r {
            errors.push(GroupError {
                group: g.name().to_string(),
                kind: if is_input_error(&e) { "input" } else { "internal" },
                message: e.to_string(),
            });
        }
        timings.insert(g.name().to_string(), start.elapsed().as_secs_f64());
    }
    let pass = errors.is_empty() && !out.checks.is_empty() && out.checks.iter().all(|c| c.pass);
    Report {
        schema: SCHEMA,
        tool_version: env!("CARGO_PKG_VERSION"),
        subcommand: sub.name(),
        scenario_sha256: sha256_hex(raw.as_bytes()),
        n: sc.n,
        seed: ctx.seed,
        steps: ctx.steps,
        pass,
        checks: out.checks,
        errors,
        sections: out.sections,
        timings: flags.timings.then_some(timings),
    }
}

fn run_group(g: Subcommand, ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    match g {
        Subcommand::Cohomology => cohomology(ctx, out),
        Subcommand::Classify => classify(ctx, out),
        Subcommand::Witness => witness(ctx, out),
        Subcommand::Moser => moser(ctx, out),
        Subcommand::Gronwall => gronwall(ctx, out),
        Subcommand::McCheck => mc_check(ctx, out),
        Subcommand::Gauge => gauge(ctx, out),
        Subcommand::VdataJacobi => vdata(ctx, out),
        Subcommand::Diagram => diagram(ctx, out),
        Subcommand::Prolong => prolong(ctx, out),
        Subcommand::PhiL => phi_l(ctx, out),
        Subcommand::All => unreachable!("expanded by run"),
    }
}

fn sign_of(odd: bool) -> i32 {
    if odd {
        -1
    } else {
        1
    }
}

fn signed<K: crate::exterior::Kind>(x: &crate::exterior::AltField<K>, s: i32) -> crate::exterior::AltField<K> {
    if s < 0 {
        x.neg()
    } else {
        x.clone()
    }
}

/// Sum of fields that may have mismatched degrees only when zero; returns the total term count.
fn residual_terms<K: crate::exterior::Kind>(parts: &[crate::exterior::AltField<K>]) -> usize {
    let nonzero: Vec<_> = parts.iter().filter(|p| !p.is_zero()).collect();
    let Some(first) = nonzero.first() else { return 0 };
    let mut acc = (*first).clone();
    for p in &nonzero[1..] {
        if p.degree() != acc.degree() {
            return p.num_terms().max(acc.num_terms());
        }
        acc = acc.add(p);
    }
    acc.num_terms()
}

/// A random integer matrix of determinant one.
fn unimodular<R: Rng>(r: &mut R, dim: usize) -> Vec<Vec<i64>> {
    let mut a: Vec<Vec<i64>> = (0..dim).map(|i| (0..dim).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..3 {
        let i = r.gen_range(0..dim);
        let j = r.gen_range(0..dim);
        if i == j {
            continue;
        }
        let c = r.gen_range(-1..=1);
        for row in a.iter_mut() {
            row[j] += c * row[i];
        }
    }
    a
}

fn exterior(ctx: &Ctx, samples: usize, out: &mut Outcome) -> Result<()> {
    let dim = ctx.model.dim();
    let mut r = random::rng(ctx.seed ^ 0xe7);
    let sh = Shape::default();
    let (mut dd, mut cartan, mut jacobi, mut pull) = (0usize, 0usize, 0usize, 0usize);
    for _ in 0..samples {
        let k = r.gen_range(0..=dim);
        let w: TrigForm = random::field(&mut r, dim, k, 2, sh);
        dd += w.exterior_derivative().exterior_derivative().num_terms();

        let k = r.gen_range(1..=dim);
        let w: TrigForm = random::field(&mut r, dim, k, 2, sh);
        let x: TrigMultiVector = random::field(&mut r, dim, 1, 2, sh);
        let lie = w.lie_derivative(&x)?;
        let dw = w.exterior_derivative();
        let mut parts = vec![lie, w.contract(&x).exterior_derivative().neg()];
        if dw.degree() <= dim {
            parts.push(dw.contract(&x).neg());
        }
        cartan += residual_terms(&parts);

        let (p, q, s) = (r.gen_range(1..=2), r.gen_range(1..=2), r.gen_range(1..=2));
        let a: TrigMultiVector = random::field(&mut r, dim, p, 2, sh);
        let b: TrigMultiVector = random::field(&mut r, dim, q, 2, sh);
        let c: TrigMultiVector = random::field(&mut r, dim, s, 2, sh);
        let odd = ((p - 1) * (q - 1)) % 2 == 1;
        jacobi += residual_terms(&[
            a.schouten(&b.schouten(&c)),
            a.schouten(&b).schouten(&c).neg(),
            signed(&b.schouten(&a.schouten(&c)), -sign_of(odd)),
        ]);

        let k = r.gen_range(0..dim);
        let w: TrigForm = random::field(&mut r, dim, k, 2, sh);
        let a = if r.gen_bool(0.5) {
            unimodular(&mut r, dim)
        } else {
            ctx.model.inclusion_matrix()
        };
        let lhs = w.exterior_derivative().pullback_affine(&a, None)?;
        let rhs = w.pullback_affine(&a, None)?.exterior_derivative();
        pull += residual_terms(&[lhs, rhs.neg()]);
    }
    let sc = ctx.sc;
    out.check(sc, "exterior/d_squared", dd as f64, 0.0);
    out.check(sc, "exterior/cartan", cartan as f64, 0.0);
    out.check(sc, "exterior/schouten_jacobi", jacobi as f64, 0.0);
    out.check(sc, "exterior/pullback_d", pull as f64, 0.0);
    out.section("residuals", "exterior", json!({ "samples": samples }));
    Ok(())
}

fn cohomology(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let spec = ctx.sc.cohomology.as_ref().expect("present");
    let sc = ctx.sc;
    exterior(ctx, spec.samples, out)?;
    let engine = Engine::new(ctx.model, sc.budget);
    let rel = engine.dims(ComplexKind::Relative);
    let abs = engine.dims(ComplexKind::Absolute);
    if let Some(want) = &spec.relative {
        out.check(sc, "cohomology/relative_dims", bool_gap(*want == rel), 0.0);
    }
    if let Some(want) = &spec.absolute {
        out.check(sc, "cohomology/absolute_dims", bool_gap(*want == abs), 0.0);
    }
    let les: Vec<usize> = (0..rel.len()).map(|k| engine.les_relative_dim(k)).collect::<Result<_>>()?;
    let les_gap = les.iter().zip(&rel).filter(|(a, b)| a != b).count();
    out.check(sc, "cohomology/les_rank", les_gap as f64, 0.0);

    // I and J on full bases of H²
    let d2 = engine.cohomology(ComplexKind::Relative, 2).dim;
    let c2 = engine.cohomology(ComplexKind::Cone, 2).dim;
    let unit = |kind, dim: usize, i: usize| crate::cochain::CohomologyClass {
        kind,
        degree: 2,
        coords: (0..dim).map(|j| PiPoly::int(i64::from(i == j))).collect(),
    };
    let mut ij = 0usize;
    for i in 0..c2 {
        let e = unit(ComplexKind::Cone, c2, i);
        ij += usize::from(engine.iso_i(&engine.iso_j(&e)?)? != e);
    }
    let mut ji = 0usize;
    for i in 0..d2 {
        let e = unit(ComplexKind::Relative, d2, i);
        ji += usize::from(engine.iso_j(&engine.iso_i(&e)?)? != e);
    }
    // J with a second extension: add a relative form restricting to zero
    let mut r = random::rng(ctx.seed ^ 0x1f);
    let mut ext_gap = 0usize;
    for i in 0..c2 {
        let e = engine.combine(ComplexKind::Cone, &unit(ComplexKind::Cone, c2, i));
        let canonical = engine.iso_j_element(&e, |b| ctx.model.extend(b))?;
        let extra = random::relative_form(&mut r, &ctx.model, 1, 2, Shape::default());
        let other = engine.iso_j_element(&e, |b| ctx.model.extend(b).add(&extra))?;
        ext_gap += usize::from(canonical != other);
    }
    out.check(sc, "iso/i_after_j", ij as f64, 0.0);
    out.check(sc, "iso/j_after_i", ji as f64, 0.0);
    out.check(sc, "iso/j_extension", ext_gap as f64, 0.0);
    let basis: Vec<Value> = engine
        .cohomology(ComplexKind::Relative, 2)
        .reps
        .iter()
        .map(|r| form_to_value(&r.a))
        .collect();
    out.section(
        "cohomology",
        "dims",
        json!({
            "relative": rel,
            "absolute": abs,
            "lagrangian": engine.dims(ComplexKind::Lagrangian),
            "les_relative": les,
            "h2_relative_basis": basis,
        }),
    );
    Ok(())
}

fn classify(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let spec = ctx.sc.classify.as_ref().expect("present");
    let m = ctx.moduli();
    let sc = ctx.sc;
    let mut mismatches = 0usize;
    let mut agreement: f64 = 0.0;
    let mut rows = Vec::new();
    for c in &spec.classes {
        let target = ctx.classes(c)?;
        let p = m.realize_rational(&target, spec.guard)?;
        let k = m.classify_pair(&p)?;
        let exact: Vec<PiPoly> = k.exact.as_ref().map(|e| e.coords.clone()).unwrap_or_default();
        let want: Vec<PiPoly> = target.iter().cloned().map(PiPoly::rational).collect();
        mismatches += usize::from(exact != want);
        agreement = agreement.max(k.agreement.unwrap_or(f64::INFINITY));
        rows.push(json!({
            "target": c,
            "exact": exact.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            "numeric": f64s(&k.numeric),
            "w_norm": round_sig(k.w_norm),
        }));
    }
    out.check(sc, "classify/exact_round_trip", mismatches as f64, 0.0);
    out.check(sc, "classify/numeric_agreement", agreement, 1e-8);
    out.section("coordinates", "classify", json!(rows));
    Ok(())
}

fn witness(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let spec = ctx.sc.witness.as_ref().expect("present");
    let m = ctx.moduli();
    let sc = ctx.sc;
    let class = ctx.classes(&spec.class)?;
    let p1 = m.realize_rational(&class, spec.guard)?;
    let k1 = m.classify_pair(&p1)?;
    let mut r = random::rng(ctx.seed);
    let (mut gap, mut tau_res, mut tau_drift, mut res, mut l_res): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut rows = Vec::new();
    let mut last = None;
    for _ in 0..spec.isotopies {
        let (rho, gamma) = m.random_isotopy(&mut r, spec.amplitude);
        let p2 = m.transport(&p1, &rho, gamma)?;
        let k2 = m.classify_pair(&p2)?;
        let g = k1.coords.iter().zip(&k2.coords).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        gap = gap.max(g);
        let tau = m.tau_check(&p1, &rho, &p2)?;
        tau_res = tau_res.max(tau.residual);
        tau_drift = tau_drift.max(tau.l_drift);
        let w = m.equivalence_witness(&p1, &p2)?;
        res = res.max(w.residual);
        l_res = l_res.max(w.l_residual);
        rows.push(json!({
            "coordinates": f64s(&k2.coords),
            "route": w.route,
            "residual": round_sig(w.residual),
            "l_residual": round_sig(w.l_residual),
            "moser_residual": round_sig(w.moser_residual),
            "chart_log": w.chart_log.iter().map(|s| json!([round_sig(s.t), round_sig(s.bound)])).collect::<Vec<_>>(),
        }));
        last = Some(p2);
    }
    out.check(sc, "witness/equivalent_gap", gap, 1e-6);
    out.check(sc, "witness/tau_residual", tau_res, 1e-5);
    out.check(sc, "witness/tau_l_drift", tau_drift, 1e-8);
    out.check(sc, "witness/residual", res, 1e-5);
    out.check(sc, "witness/l_residual", l_res, 1e-5);
    let offset = parse_rational(&spec.gap).ok_or_else(|| Error::Scenario(format!("bad gap {:?}", spec.gap)))?;
    let mut far_class = class.clone();
    far_class[0] += offset;
    let far = m.realize_rational(&far_class, spec.guard)?;
    let kf = m.classify_pair(&far)?;
    let measured = kf.coords.iter().zip(&k1.coords).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let other = last.unwrap_or(p1);
    let rejected = matches!(m.equivalence_witness(&far, &other), Err(Error::NoSolution(_)));
    out.check(sc, "witness/far_rejected", bool_gap(rejected && measured >= 0.1 - 1e-9), 0.0);
    out.section(
        "witness",
        "pairs",
        json!({
            "class": f64s(&k1.coords),
            "equivalent": rows,
            "far_gap": round_sig(measured),
            "far_rejected": rejected,
        }),
    );
    Ok(())
}

fn moser(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let spec = ctx.sc.moser.as_ref().expect("present");
    let sc = ctx.sc;
    let model = ctx.model;
    let w1: TrigForm = match &spec.omega {
        Some(v) => ctx.form(v, 2)?,
        None => model.omega_can(),
    };
    let beta = ctx.form(&spec.primitive, 1)?;
    let w2 = w1.add(&beta.exterior_derivative());
    let ladder = spec
        .ladder
        .clone()
        .unwrap_or_else(|| vec![ctx.steps / 4, ctx.steps / 2, ctx.steps]);
    let per_axis = ctx.grid.min(16);
    let mut residuals = Vec::new();
    let mut last = None;
    for &s in &ladder {
        let r = flows::moser_solve(&model, &w1, &w2, &beta, s.max(1), per_axis)?;
        residuals.push(r.residual);
        last = Some(r);
    }
    let r = last.ok_or_else(|| Error::Scenario("empty ladder".into()))?;
    let violations = residuals.windows(2).filter(|w| w[1] >= w[0]).count();
    out.check(sc, "moser/residual", r.residual, 1e-6);
    out.check(sc, "moser/l_drift", r.l_drift, 1e-8);
    out.check(sc, "moser/monotone_ladder", violations as f64, 0.0);
    let mut summary = json!({
        "ladder": ladder,
        "residuals": f64s(&residuals),
        "l_drift": round_sig(r.l_drift),
        "min_det": round_sig(r.flow.min_det()),
    });
    if ctx.dump {
        summary["grid"] = dump(&r.flow);
    }
    out.section("residuals", "moser", summary);
    Ok(())
}

fn dump(f: &flows::FlowResult) -> Value {
    json!(f
        .points
        .iter()
        .zip(&f.images)
        .map(|(p, q)| json!({ "point": f64s(p), "image": f64s(q) }))
        .collect::<Vec<_>>())
}

fn gronwall(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let spec = ctx.sc.gronwall.as_ref().expect("present");
    let sc = ctx.sc;
    let mut r = random::rng(ctx.seed ^ 0x9a);
    let per_axis = spec.grid.unwrap_or(if ctx.model.n == 1 { 12 } else { 4 });
    let (mut pos, mut jac): (f64, f64) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut rows = Vec::new();
    for _ in 0..spec.sections {
        let s = Section::new(ctx.model, random::section(&mut r, &ctx.model, spec.bound, Shape::default()))?;
        let g = flows::gronwall_check(&s, ctx.steps, per_axis)?;
        pos = pos.max(g.position - g.position_bound);
        jac = jac.max(g.jacobian - g.jacobian_bound);
        rows.push(json!({
            "x_norm": round_sig(g.x_norm),
            "position": round_sig(g.position),
            "jacobian": round_sig(g.jacobian),
            "jacobian_bound": round_sig(g.jacobian_bound),
        }));
    }
    out.check(sc, "gronwall/position_excess", pos, 1e-9);
    out.check(sc, "gronwall/c1_excess", jac, 1e-6);
    out.section("residuals", "gronwall", json!(rows));
    Ok(())
}

fn phi_l(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let spec = ctx.sc.phi_l.as_ref().expect("present");
    let s = ctx.section(&spec.section)?;
    let n = ctx.model.n;
    let f = flows::phi_l(&s, ctx.steps, &flows::l_points(n, ctx.grid.min(32)))?;
    let cs = s.compile();
    let mut miss: f64 = 0.0;
    for (p, q) in f.points.iter().zip(&f.images) {
        let v = cs.value(&p[..n]);
        for i in 0..n {
            miss = miss.max((q[i] - p[i]).abs()).max((q[n + i] - v[i]).abs());
        }
    }
    out.check(ctx.sc, "phi_l/graph_miss", miss, 1e-10);
    let mut summary = json!({ "in_chart": chart::in_chart(&s), "bound": round_sig(s.bound()) });
    if ctx.dump {
        summary["grid"] = dump(&f);
    }
    out.section("residuals", "phi_l", summary);
    Ok(())
}

fn mc_check(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let spec = ctx.sc.mc_check.as_ref().expect("present");
    let sc = ctx.sc;
    let base = ConstantSymplectic::canonical(&ctx.model);
    let k = Koszul::canonical(ctx.model);
    let dim = ctx.model.dim();

    let mut exact_gap = 0usize;
    for c in &spec.constant {
        let beta = ctx.form(&c.beta, 2)?;
        let want = ctx.form(&c.f, 2)?;
        exact_gap += usize::from(base.f_map_exact(&beta)? != want);
        exact_gap += usize::from(base.f_inverse_exact(&want)? != beta);
    }
    out.check(sc, "f_map/constant_exact", exact_gap as f64, 0.0);
    let mut trig: f64 = 0.0;
    for v in &spec.trig {
        trig = trig.max(base.poisson_identity_residual(&ctx.form(v, 2)?, ctx.grid)?);
    }
    out.check(sc, "f_map/trig_identity", trig, 1e-12);
    let singular = match &spec.singular {
        Some(list) => list.iter().map(|v| ctx.form(v, 2)).collect::<Result<Vec<_>>>()?,
        None => vec![base.form.clone()],
    };
    let accepted = singular
        .iter()
        .filter(|b| !matches!(base.f_map(b, ctx.grid), Err(Error::Singular { .. })))
        .count();
    out.check(sc, "f_map/singular_rejected", accepted as f64, 0.0);

    // dgL[1]a axioms on random forms
    let mut r = random::rng(ctx.seed ^ 0x5c);
    let sh = Shape::default();
    let (mut sq, mut sym, mut jac, mut leib, mut one, mut rel) = (0usize, 0usize, 0usize, 0usize, 0usize, 0usize);
    for _ in 0..spec.samples {
        let (pa, pb, pc) = (r.gen_range(0..=dim.min(3)), r.gen_range(0..=dim.min(3)), r.gen_range(0..=dim.min(3)));
        let a: TrigForm = random::field(&mut r, dim, pa, 2, sh);
        let b: TrigForm = random::field(&mut r, dim, pb, 2, sh);
        let c: TrigForm = random::field(&mut r, dim, pc, 2, sh);
        sq += k.lambda1(&k.lambda1(&a)).num_terms();
        sym += residual_terms(&[k.lambda2(&a, &b), signed(&k.lambda2(&b, &a), -sign_of(pa * pb % 2 == 1))]);
        let (sa, sb, sc2) = (pa % 2, pb % 2, pc % 2);
        jac += residual_terms(&[
            k.lambda2(&k.lambda2(&a, &b), &c),
            signed(&k.lambda2(&k.lambda2(&a, &c), &b), sign_of(sb * sc2 % 2 == 1)),
            signed(&k.lambda2(&k.lambda2(&b, &c), &a), sign_of(sa * (sb + sc2) % 2 == 1)),
        ]);
        leib += residual_terms(&[
            k.lambda1(&k.lambda2(&a, &b)),
            k.lambda2(&k.lambda1(&a), &b),
            signed(&k.lambda2(&a, &k.lambda1(&b)), sign_of(sa == 1)),
        ]);
        let x: TrigForm = random::field(&mut r, dim, 1, 2, sh);
        let y: TrigForm = random::field(&mut r, dim, 1, 2, sh);
        one += residual_terms(&[k.bracket(&x, &y), k.one_form_bracket(&x, &y)?.neg()]);
        let (da, db) = (r.gen_range(0..=2), r.gen_range(0..=2));
        let u = random::relative_form(&mut r, &ctx.model, da, 2, sh);
        let v = random::relative_form(&mut r, &ctx.model, db, 2, sh);
        rel += ctx.model.restrict(&k.lambda1(&u)).num_terms();
        rel += ctx.model.restrict(&k.lambda2(&u, &v)).num_terms();
    }
    out.check(sc, "koszul/lambda1_squared", sq as f64, 0.0);
    out.check(sc, "koszul/graded_symmetry", sym as f64, 0.0);
    out.check(sc, "koszul/jacobi", jac as f64, 0.0);
    out.check(sc, "koszul/leibniz", leib as f64, 0.0);
    out.check(sc, "koszul/one_form_formula", one as f64, 0.0);
    out.check(sc, "koszul/relative_closure", rel as f64, 0.0);

    if !spec.classes.is_empty() {
        let m = ctx.moduli();
        let (mut fr, mut mr, mut rr): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let mut rows = Vec::new();
        for c in &spec.classes {
            let p = m.realize_rational(&ctx.classes(c)?, 1.0)?;
            let mc = m.to_mc_class(&p)?;
            fr = fr.max(mc.f_residual);
            mr = mr.max(mc.mc_residual);
            rr = rr.max(mc.relative_residual);
            rows.push(json!({
                "beta": match &mc.exact { Some(b) => form_to_value(b), None => numeric_form_to_value(&mc.beta) },
                "w_norm": round_sig(mc.w_norm),
                "in_W": mc.w_norm < 1.0,
                "F_residual": round_sig(mc.f_residual),
            }));
        }
        out.check(sc, "mc/f_residual", fr, 1e-8);
        out.check(sc, "mc/mc_residual", mr, 1e-6);
        out.check(sc, "mc/relative_residual", rr, 1e-8);
        out.section("residuals", "mc", json!(rows));
    }
    out.section("residuals", "koszul", json!({ "samples": spec.samples }));
    Ok(())
}

fn gauge(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let spec = ctx.sc.gauge.as_ref().expect("present");
    let sc = ctx.sc;
    let k = Koszul::canonical(ctx.model);
    let beta0 = ctx.form(&spec.beta0, 2)?;
    let per_axis = spec.grid.unwrap_or(if ctx.model.n == 1 { 12 } else { 4 });
    let (mut res, mut drift, mut mc, mut lin): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut rows = Vec::new();
    for path in &spec.paths {
        let coeffs = path.iter().map(|v| ctx.form(v, 1)).collect::<Result<Vec<_>>>()?;
        if coeffs.is_empty() {
            return Err(Error::Scenario("empty gauge path".into()));
        }
        let alpha = TimePoly { coeffs };
        let iso = k.gauge_vs_isotopy(&beta0, &alpha, ctx.steps, per_axis)?;
        res = res.max(iso.residual);
        drift = drift.max(iso.l_drift);
        mc = mc.max(iso.max_mc_residual);
        lin = lin.max(k.gauge_linearization_residual(&beta0, &alpha, 1e-4)?);
        rows.push(json!({
            "end": numeric_form_to_value(&iso.end),
            "residual": round_sig(iso.residual),
            "l_drift": round_sig(iso.l_drift),
        }));
    }
    out.check(sc, "gauge/isotopy_residual", res, 1e-5);
    out.check(sc, "gauge/l_drift", drift, 1e-8);
    out.check(sc, "gauge/mc_residual", mc, 1e-10);
    out.check(sc, "gauge/linearization", lin, 1e-6);
    out.section("residuals", "gauge", json!(rows));
    Ok(())
}

fn vdata(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let spec = ctx.sc.vdata_jacobi.as_ref().expect("present");
    let sc = ctx.sc;
    let max_arity = ctx.max_arity.unwrap_or(spec.max_arity);
    const CAP: usize = 6;
    if max_arity > CAP {
        return Err(Error::ArityCap { got: max_arity, cap: CAP });
    }
    let mut table = BTreeMap::new();

    // toy V-data in End(W)
    let v = EndData::standard();
    let mut delta_sq = usize::from(!v.bracket(&v.delta(), &v.delta()).is_empty());
    let x = v.add(&v.unit(0, 1, crate::coeff::rat_int(1)), &v.unit(2, 3, crate::coeff::rat(1, 2)));
    let y = v.unit(1, 1, crate::coeff::rat_int(3));
    let toy = [
        shifted(&v, x),
        shifted(&v, y),
        abelian(&v, v.unit(0, 2, crate::coeff::rat_int(1))),
        abelian(&v, v.unit(1, 3, crate::coeff::rat_int(2))),
    ];
    let mut jac = vec![0usize; max_arity + 1];
    for n in 1..=max_arity {
        for s in 0..toy.len() {
            let args: Vec<_> = (0..n).map(|i| toy[(s + i) % toy.len()].clone()).collect();
            jac[n] += usize::from(!derived::jacobi_sum(&v, &args).is_zero());
        }
    }

    // the torus V-data of the zero section
    let t = TorusData::new(ctx.model);
    delta_sq += usize::from(!t.bracket(&t.delta(), &t.delta()).is_zero());
    let dim = ctx.model.dim();
    let mut r = random::rng(ctx.seed ^ 0x3d);
    let sh = Shape::default();
    for _ in 0..spec.samples {
        let mut inputs = Vec::new();
        for _ in 0..max_arity {
            if r.gen_bool(0.5) {
                let d = r.gen_range(0..3);
                inputs.push(shifted(&t, random::field(&mut r, dim, d, 2, sh)));
            } else {
                let d = r.gen_range(0..2);
                let e: TrigMultiVector = random::field(&mut r, dim, d, 2, sh);
                inputs.push(abelian(&t, t.project(&e)));
            }
        }
        for n in 1..=max_arity {
            jac[n] += usize::from(!derived::jacobi_sum(&t, &inputs[..n]).is_zero());
        }
    }
    for (n, c) in jac.iter().enumerate().skip(1) {
        table.insert(format!("arity_{n}"), *c);
    }
    out.check(sc, "vdata/delta_square", delta_sq as f64, 0.0);
    out.check(sc, "vdata/jacobi", jac.iter().sum::<usize>() as f64, 0.0);

    // strict morphism: MC residuals correspond
    let k = Koszul::canonical(ctx.model);
    let mut transport = 0usize;
    let mut constants = Vec::new();
    for v in &spec.constant {
        constants.push(ctx.form(v, 2)?);
    }
    for _ in 0..spec.samples {
        constants.push(random::relative_form(&mut r, &ctx.model, 2, 2, sh));
    }
    for beta in &constants {
        let image = t.strict_morphism(&k, beta)?;
        let lhs = derived::mc_residual(&t, &image, max_arity.max(2), |e, q| e.scale(q));
        let res = k.mc_residual(beta);
        let rhs = if res.is_zero() { None } else { Some(k.transport(&res)) };
        transport += usize::from(lhs.a.is_some() || lhs.x != rhs);
    }
    out.check(sc, "vdata/strict_mc_transport", transport as f64, 0.0);
    out.section("residuals", "vdata", json!({ "max_arity": max_arity, "jacobi_failures": table }));
    Ok(())
}

fn diagram(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let spec = ctx.sc.diagram.as_ref().expect("present");
    let m = ctx.moduli();
    let s = ctx.section(&spec.section)?;
    let w = ctx.form(&spec.w, 2)?;
    let d = m.diagram_check(&s, &w)?;
    let sc = ctx.sc;
    out.check(sc, "diagram/first_square", d.first_square, 1e-6);
    out.check(sc, "diagram/first_coords", d.first_coords, 1e-6);
    out.check(sc, "diagram/second_square", bool_gap(d.second_square_exact), 0.0);
    out.section(
        "coordinates",
        "diagram",
        json!({ "relative": f64s(&d.relative), "absolute": f64s(&d.absolute) }),
    );
    Ok(())
}

fn prolong(ctx: &Ctx, out: &mut Outcome) -> Result<()> {
    let spec = ctx.sc.prolong.as_ref().expect("present");
    let m = ctx.moduli();
    let sc = ctx.sc;
    let (mut cocycle, mut jz, mut we, mut se): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut rows = Vec::new();
    for c in &spec.cases {
        let eta = ctx.form(&c.eta, 2)?;
        let beta = form_from_value(&c.beta, ctx.model.n, Some(1), true)?;
        let ext = c.extension.as_ref().map(|v| ctx.form(v, 1)).transpose()?;
        let p = m.prolong_cocycle(&eta, &beta, ext.as_ref())?;
        cocycle = cocycle.max(p.cocycle_residual);
        we = we.max(p.omega_error);
        se = se.max(p.sigma_error);
        if c.isotopy {
            jz = jz.max(p.j_coords.iter().map(|x| x.abs()).fold(0.0, f64::max));
        }
        rows.push(json!({
            "epsilon": round_sig(p.epsilon),
            "j_coords": f64s(&p.j_coords),
            "cocycle_residual": round_sig(p.cocycle_residual),
            "path": p.samples.iter().map(|s| json!([round_sig(s.t), round_sig(s.w_norm), round_sig(s.chart_bound)])).collect::<Vec<_>>(),
        }));
    }
    out.check(sc, "first_order/cocycle_residual", cocycle, 1e-5);
    out.check(sc, "first_order/omega_derivative", we, 1e-5);
    out.check(sc, "first_order/sigma_derivative", se, 1e-5);
    out.check(sc, "first_order/isotopy_class", jz, 1e-5);
    out.section("coordinates", "prolong", json!(rows));
    Ok(())
}
