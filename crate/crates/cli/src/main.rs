//! Command line for the surface catalog and the signed-count engine.
//!
//! Exit codes: 0 success, 1 validation or parse failure, 2 no rule or
//! registry entry resolves the requested value, 3 a verification or
//! reproduction check found a mismatch.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_traits::Zero;

use wsurg_core::catalog::{builtin as builtin_catalog, Catalog};
use wsurg_core::combinatorics::{u_sequence, verify_inverse_matrix};
use wsurg_core::engine::{Engine, FTag, InvariantKey, Prov, VanishingPolicy, WValue};
use wsurg_core::lattice::Mod2Class;
use wsurg_core::oracle;
use wsurg_core::registry::{builtin_registry, closed_form_conic, Registry};
use wsurg_core::relative::{reduce_relative, RelSphereV, RelativeKey};
use wsurg_core::Error;

#[derive(Parser)]
#[command(name = "wsurg", version, about = "Real surface models and signed curve counts")]
struct Cli {
    /// Extra catalog file (JSON); defaults to $WSURG_CATALOG when set.
    #[arg(long, global = true)]
    catalog: Option<String>,
    /// Registry file (JSON) replacing the built-in value registry.
    #[arg(long, global = true)]
    registry: Option<String>,
    /// Output format.
    #[arg(long, global = true, default_value = "table", value_parser = ["table", "json"])]
    format: String,
    /// Cap on the length of every expansion tail.
    #[arg(long, global = true, default_value_t = 64)]
    max_k: u32,
    /// Disable the adjunction vanishing filter (the cap still applies).
    #[arg(long, global = true)]
    no_adjunction: bool,
    /// Print the derivation tree of every computed value.
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve one signed count.
    Compute(ComputeArgs),
    /// Re-derive a published table and compare cell by cell.
    Reproduce(ReproduceArgs),
    /// Run the identity and structural verification sweeps.
    Verify(VerifyArgs),
    /// Floor-diagram oracle for plane counts.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Inspect the surface catalog.
    #[command(subcommand)]
    Catalog(CatalogCmd),
}

#[derive(Args)]
struct ComputeArgs {
    /// Catalog id of the surface.
    #[arg(long)]
    surface: String,
    /// Class expression over the surface basis (aliases: c1, F, ...).
    #[arg(long)]
    class: String,
    /// Number of conjugate point pairs.
    #[arg(long, default_value_t = 0)]
    s: u32,
    /// Comma-separated component labels carrying the real points.
    #[arg(long = "L")]
    l: String,
    /// Weight: `zero`, `rest`, a comma-separated component list, or
    /// `explicit:0101...` over the basis.
    #[arg(long = "F", default_value = "zero")]
    f: String,
}

#[derive(Args)]
struct ReproduceArgs {
    /// One of: cubic, conic, delpezzo1, reductions.
    scenario: String,
    #[arg(long, default_value_t = 5)]
    max_n: u32,
    #[arg(long, default_value_t = 6)]
    max_b: i64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 8)]
    max_m: i64,
    #[arg(long = "max-K", default_value_t = 10)]
    max_big_k: usize,
    #[arg(long, default_value_t = 30)]
    max_i: u32,
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Totals for one degree.
    Count {
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        bound: Option<u32>,
    },
    /// Every diagram of one degree with markings and multiplicities.
    Diagrams {
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        bound: Option<u32>,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// List surface ids with real parts.
    List,
    /// Dump one surface as JSON.
    Show { id: String },
    /// Dump the whole catalog as JSON.
    Export,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::UnknownValue(_) => 2u8,
                _ => 1u8,
            })
        }
    }
}

fn load_engine(cli: &Cli) -> Result<Engine, Error> {
    let mut catalog = builtin_catalog();
    let path = cli
        .catalog
        .clone()
        .or_else(|| std::env::var("WSURG_CATALOG").ok().filter(|p| !p.is_empty()));
    if let Some(path) = path {
        let text = std::fs::read_to_string(&path)?;
        let n = catalog.load_json(&text)?;
        eprintln!("loaded {n} surface(s) from {path}");
    }
    let catalog = Arc::new(catalog);
    let registry = match &cli.registry {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Registry::from_json(&catalog, &text)?
        }
        None => builtin_registry(&catalog),
    };
    let policy = VanishingPolicy {
        use_adjunction: !cli.no_adjunction,
        max_k: cli.max_k,
        ..Default::default()
    };
    Ok(Engine::new(catalog, Arc::new(registry), policy))
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Compute(args) => cmd_compute(cli, args),
        Command::Reproduce(args) => cmd_reproduce(cli, args),
        Command::Verify(args) => cmd_verify(cli, args),
        Command::Oracle(cmd) => cmd_oracle(cli, cmd),
        Command::Catalog(cmd) => cmd_catalog(cli, cmd),
    }
}

fn parse_f(engine: &Engine, surface: &str, spec: &str) -> Result<FTag, Error> {
    let model = engine.catalog().get(surface)?;
    Ok(match spec {
        "zero" | "0" => FTag::Zero,
        "rest" => FTag::Components(BTreeSet::new()), // filled by caller
        other => {
            if let Some(bits) = other.strip_prefix("explicit:") {
                let bits: Vec<bool> = bits
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(Error::Parse(format!("bad explicit weight `{other}`"))),
                    })
                    .collect::<Result<_, _>>()?;
                if bits.len() != model.lattice.rank() {
                    return Err(Error::Parse(format!(
                        "explicit weight needs {} bits",
                        model.lattice.rank()
                    )));
                }
                FTag::Explicit(Mod2Class { bits })
            } else {
                FTag::Components(other.split(',').map(|s| s.trim().to_string()).collect())
            }
        }
    })
}

fn print_trace(value: &WValue, indent: usize) {
    let pad = "  ".repeat(indent);
    match value.prov.as_ref() {
        Prov::Registry { citation, quote } => {
            println!("{pad}= {}  [registry: {citation}; {quote}]", value.value);
        }
        Prov::Vanishing { reason } => {
            println!("{pad}= 0  [vanishing: {reason}]");
        }
        Prov::EulerCount { surface, chi } => {
            println!(
                "{pad}= {}  [Euler count on {surface}: 1 - chi, chi = {chi}]",
                value.value
            );
        }
        Prov::Combination { rule, citation, terms } => {
            println!("{pad}= {}  [{rule}: {citation}]", value.value);
            for (coeff, child) in terms {
                println!("{pad}  x {coeff}:");
                print_trace(child, indent + 2);
            }
        }
    }
}

fn cmd_compute(cli: &Cli, args: &ComputeArgs) -> Result<ExitCode, Error> {
    let engine = load_engine(cli)?;
    let model = engine.catalog().get(&args.surface)?.clone();
    let d = model.parse_class(&args.class)?;
    let l: BTreeSet<String> = args.l.split(',').map(|s| s.trim().to_string()).collect();
    let mut f = parse_f(&engine, &args.surface, &args.f)?;
    if args.f == "rest" {
        f = FTag::Components(
            model.components.iter().map(|c| c.label.clone()).filter(|x| !l.contains(x)).collect(),
        );
    }
    let key =
        InvariantKey { surface: args.surface.clone(), l, f, d, s: args.s }.normalized();
    let out = engine.compute(&key)?;
    if cli.format == "json" {
        let doc = serde_json::json!({
            "surface": key.surface,
            "l": key.l.iter().cloned().collect::<Vec<_>>(),
            "f": key.f.describe(),
            "class": model.lattice.render_class(&key.d),
            "s": key.s,
            "value": out.value.to_string(),
            "trace": out.to_json(),
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        println!("{} = {}", key.describe(engine.catalog()), out.value);
        if cli.trace {
            print_trace(&out, 1);
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Collected mismatches of a reproduction or verification run.
struct Mismatches(Vec<String>);

impl Mismatches {
    fn new() -> Self {
        Mismatches(Vec::new())
    }

    fn check(&mut self, label: &str, got: &BigInt, want: &BigInt) {
        if got != want {
            self.0.push(format!("{label}: engine {got}, expected {want}"));
        }
    }

    fn finish(self, what: &str) -> ExitCode {
        if self.0.is_empty() {
            println!("{what}: all cells agree");
            ExitCode::SUCCESS
        } else {
            for line in &self.0 {
                eprintln!("mismatch {line}");
            }
            eprintln!("{what}: {} mismatch(es)", self.0.len());
            ExitCode::from(3)
        }
    }
}

fn rest_tag(engine: &Engine, surface: &str, l: &str) -> Result<FTag, Error> {
    let model = engine.catalog().get(surface)?;
    Ok(FTag::Components(
        model.components.iter().map(|c| c.label.clone()).filter(|x| x != l).collect(),
    ))
}

fn cmd_reproduce(cli: &Cli, args: &ReproduceArgs) -> Result<ExitCode, Error> {
    let engine = load_engine(cli)?;
    match args.scenario.as_str() {
        "cubic" => reproduce_cubic(cli, &engine),
        "conic" => reproduce_conic(cli, &engine, args.max_n, args.max_b),
        "delpezzo1" => reproduce_delpezzo1(cli, &engine),
        "reductions" => reproduce_reductions(cli, &engine),
        other => Err(Error::Validation(format!(
            "unknown scenario `{other}` (expected cubic, conic, delpezzo1, reductions)"
        ))),
    }
}

fn reproduce_cubic(cli: &Cli, engine: &Engine) -> Result<ExitCode, Error> {
    let model = engine.catalog().get("cubic-Y")?.clone();
    let mut mism = Mismatches::new();
    let twisted = FTag::Components(BTreeSet::from(["S".to_string()]));
    println!("two-component cubic, constraints on the plane component");
    println!("{:<26}{:>8}{:>8}{:>8}", "class / weight", "s=0", "s=1", "s=2");
    let rows: [(&str, FTag, Vec<Option<i64>>); 4] = [
        ("c1, weight 0", FTag::Zero, vec![Some(4), Some(3), None]),
        ("c1, weight [S]", twisted.clone(), vec![Some(0), Some(-1), None]),
        ("2c1, weight 0", FTag::Zero, vec![Some(160), Some(64), Some(24)]),
        ("2c1, weight [S]", twisted, vec![Some(0), Some(0), Some(24)]),
    ];
    for (label, f, expected) in rows {
        let class = if label.starts_with("2c1") { "2*c1" } else { "c1" };
        let d = model.parse_class(class)?;
        let mut cells = Vec::new();
        for (s, want) in expected.iter().enumerate() {
            match want {
                None => cells.push("-".to_string()),
                Some(want) => {
                    let key = InvariantKey::new("cubic-Y", &["RP2"], f.clone(), d.clone(), s as u32);
                    let got = engine.compute(&key)?;
                    if cli.trace {
                        println!("-- {label} s={s}");
                        print_trace(&got, 1);
                    }
                    mism.check(&format!("{label} s={s}"), &got.value, &BigInt::from(*want));
                    cells.push(got.value.to_string());
                }
            }
        }
        println!("{label:<26}{:>8}{:>8}{:>8}", cells[0], cells[1], cells[2]);
    }
    println!("(the anticanonical rows stop at s = 1: s = 2 exceeds the constraint budget)");
    Ok(mism.finish("cubic"))
}

fn reproduce_conic(cli: &Cli, engine: &Engine, max_n: u32, max_b: i64) -> Result<ExitCode, Error> {
    let mut mism = Mismatches::new();
    for n in 2..=max_n {
        let id = format!("X{n}");
        let model = engine.catalog().get(&id)?.clone();
        let fiber = model.parse_class("F")?;
        let full = rest_tag(engine, &id, "S1")?;
        println!("{id}: classes c1 + b*F against the closed form");
        for b in (n as i64 - 3)..=max_b {
            let d = model.c1.add(&fiber.scale_i64(b));
            for s in 0..=(b - n as i64 + 3).max(-1) {
                if s < 0 {
                    continue;
                }
                for (f, tag, full_weight) in
                    [(FTag::Zero, "0", false), (full.clone(), "rest", true)]
                {
                    let key = InvariantKey::new(&id, &["S1"], f, d.clone(), s as u32);
                    let got = engine.compute(&key)?;
                    let want = closed_form_conic(n, b, s, full_weight)?;
                    if cli.trace {
                        println!("-- {id} b={b} s={s} weight {tag}: {}", got.value);
                    }
                    mism.check(&format!("{id} b={b} s={s} weight {tag}"), &got.value, &want);
                }
            }
        }
    }
    println!("grid n=2..{max_n}, b up to {max_b} checked cell by cell");
    Ok(mism.finish("conic"))
}

fn reproduce_delpezzo1(cli: &Cli, engine: &Engine) -> Result<ExitCode, Error> {
    let mut mism = Mismatches::new();
    let table: [(&str, &str, i64); 7] = [
        ("Y5", "P", 30),
        ("Y4", "P", 18),
        ("Y3", "P", 10),
        ("Y2", "P", 6),
        ("Y1", "P", 6),
        ("Y1p", "S", 6),
        ("Y1pp", "P", 6),
    ];
    println!("degree-1 chain: W(2c1, 0) with the full complementary weight");
    for (id, l, want) in table {
        let model = engine.catalog().get(id)?.clone();
        let key = InvariantKey::new(id, &[l], rest_tag(engine, id, l)?, model.parse_class("2*c1")?, 0);
        let got = engine.compute(&key)?;
        if cli.trace {
            println!("-- {id}");
            print_trace(&got, 1);
        }
        mism.check(id, &got.value, &BigInt::from(want));
        println!("{id:<8}{}", got.value);
    }
    // the middle model through each of its three arrows
    for (surface, l, target) in [("Y2", "P", "Y1"), ("Y2", "S", "Y1p"), ("Y2-alt", "P", "Y1pp")] {
        let model = engine.catalog().get(surface)?.clone();
        let key = InvariantKey::new(
            surface,
            &[l],
            rest_tag(engine, surface, l)?,
            model.parse_class("2*c1")?,
            0,
        );
        let got = engine.compute_via(&key, target, None)?;
        mism.check(&format!("{surface} via {target}"), &got.value, &BigInt::from(6));
        println!("{surface} via the arrow to {target}: {}", got.value);
    }
    Ok(mism.finish("delpezzo1"))
}

fn reproduce_reductions(cli: &Cli, engine: &Engine) -> Result<ExitCode, Error> {
    let catalog = engine.catalog();
    println!("reduction plans");
    println!();
    println!("[spheres] a two-component cubic with every off-constraint component a sphere:");
    println!("  cubic-Y --(surgery along S = 2D-E1-...-E6)--> cubic-X, a plane blown up in");
    println!("  three conjugate pairs; every weight over cubic-Y rewrites to plane data.");
    println!();
    println!("[two components] the minimal degree-1 chain walks down to two components:");
    for rec in catalog.surgeries() {
        if rec.source.starts_with('Y') && rec.source != "Y2" && rec.source != "Y2-alt" {
            println!("  {} --(along {})--> {}", rec.source,
                catalog.get(&rec.target)?.lattice.render_class(&rec.sphere), rec.target);
        }
    }
    println!();
    println!("[relative] a weight over a disconnected real part, capped across a surgery:");
    let y1 = catalog.get("Y1")?.clone();
    let base = InvariantKey::new("Y1", &["P"], FTag::Zero, y1.parse_class("2*c1")?, 0);
    let key = RelativeKey {
        base,
        u: vec![],
        v: vec![RelSphereV { cls: y1.parse_class("F-Et2-Et3")?, circle_on: "K".into() }],
        l0: BTreeSet::from(["K".to_string()]),
        assert_v_boundary: true,
    };
    let out = reduce_relative(engine, &key)?;
    if cli.trace {
        print_trace(&out, 1);
    }
    println!("  relative count on Y1 with one capped circle = {}", out.value);
    let absolute = InvariantKey::new(
        "Y2",
        &["P"],
        rest_tag(engine, "Y2", "P")?,
        catalog.get("Y2")?.parse_class("2*c1")?,
        0,
    );
    let check = engine.compute(&absolute)?;
    let mut mism = Mismatches::new();
    mism.check("relative reduction vs absolute value", &out.value, &check.value);
    Ok(mism.finish("reductions"))
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> Result<ExitCode, Error> {
    let engine = load_engine(cli)?;
    let mut failures = Vec::new();
    for m in 0..=args.max_m {
        for k in 1..=args.max_big_k {
            if !verify_inverse_matrix(m, k) {
                failures.push(format!("relation matrix inverse fails at m={m} K={k}"));
            }
        }
    }
    println!(
        "relation-matrix inverses: m <= {}, K <= {} checked",
        args.max_m, args.max_big_k
    );
    for i in 0..=args.max_i {
        if u_sequence(i) != BigInt::from(i + 1) {
            failures.push(format!("telescoping sequence fails at i={i}"));
        }
    }
    println!("telescoping sequence: i <= {} checked", args.max_i);
    // structural suite over every record of the active catalog
    let catalog = engine.catalog();
    for rec in catalog.surgeries() {
        let ctx = format!("record {} -> {}", rec.source, rec.target);
        let source = catalog.get(&rec.source)?;
        let target = catalog.get(&rec.target)?;
        let lat = &target.lattice;
        if lat.self_pairing(&rec.sphere)? != BigInt::from(-2) {
            failures.push(format!("{ctx}: sphere square"));
        }
        if !target.c1_degree(&rec.sphere)?.is_zero() {
            failures.push(format!("{ctx}: sphere degree"));
        }
        if source.euler_char() != target.euler_char() + 2 {
            failures.push(format!("{ctx}: Euler characteristic jump"));
        }
        let refl = lat.reflection_matrix(&rec.sphere)?;
        if &target.involution.matrix().mul(&refl) != source.involution.matrix() {
            failures.push(format!("{ctx}: composed involution"));
        }
        let anti_t = target.involution.eigenlattice(-1);
        let anti_s = source.involution.eigenlattice(-1);
        if anti_t.len() != anti_s.len() + 1 {
            failures.push(format!("{ctx}: eigenlattice ranks"));
        }
        if anti_s.iter().any(|v| !lat.pair(v, &rec.sphere).unwrap().is_zero()) {
            failures.push(format!("{ctx}: orthogonality to the sphere"));
        }
    }
    println!("structural suite: {} surgery records checked", catalog.surgeries().len());
    if let Err(e) = catalog.validate() {
        failures.push(format!("catalog validation: {e}"));
    }
    if failures.is_empty() {
        println!("verify: all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &failures {
            eprintln!("failed: {f}");
        }
        Ok(ExitCode::from(3))
    }
}

fn cmd_oracle(cli: &Cli, cmd: &OracleCmd) -> Result<ExitCode, Error> {
    match cmd {
        OracleCmd::Count { degree, bound } => {
            let totals = oracle::totals(*degree, *bound)?;
            if cli.format == "json" {
                println!("{}", serde_json::to_string_pretty(&totals)?);
            } else {
                println!(
                    "degree {}: complex {}, real {}, {} diagram(s); recursion value {}",
                    totals.degree,
                    totals.complex_total,
                    totals.real_total,
                    totals.diagram_count,
                    oracle::kontsevich_nd(*degree)
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        OracleCmd::Diagrams { degree, bound } => {
            let diagrams = oracle::enumerate_diagrams(*degree, *bound)?;
            if cli.format == "json" {
                println!("{}", serde_json::to_string_pretty(&diagrams)?);
            } else {
                for (i, c) in diagrams.iter().enumerate() {
                    let edges: Vec<String> = c
                        .diagram
                        .edges
                        .iter()
                        .map(|e| format!("{}->{} w{}", e.upper, e.lower, e.weight))
                        .collect();
                    println!(
                        "#{i}: edges [{}], ends {:?}, markings {}, complex {}, real {}",
                        edges.join(", "),
                        c.diagram.ends,
                        c.markings,
                        c.complex_mult,
                        c.real_mult
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_catalog(cli: &Cli, cmd: &CatalogCmd) -> Result<ExitCode, Error> {
    let engine = load_engine(cli)?;
    let catalog: &Catalog = engine.catalog();
    match cmd {
        CatalogCmd::List => {
            for id in catalog.ids() {
                let model = catalog.get(id)?;
                let comps: Vec<String> = model
                    .components
                    .iter()
                    .map(|c| format!("{}:{}", c.label, c.topo.descriptor()))
                    .collect();
                println!(
                    "{id:<22} rank {:<3} chi {:<4} [{}]",
                    model.lattice.rank(),
                    model.euler_char(),
                    comps.join(", ")
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        CatalogCmd::Show { id } => {
            let model = catalog.get(id)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&wsurg_core::catalog::surface_to_doc(model))?
            );
            Ok(ExitCode::SUCCESS)
        }
        CatalogCmd::Export => {
            println!("{}", serde_json::to_string_pretty(&catalog.to_json())?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
