//! `lutensor`: batch front end for the lutensor library.
//!
//! Every subcommand prints one JSON document with sorted keys (or a LaTeX
//! fragment under `--latex`). Exit codes: 0 pass, 1 failed check, 2 usage
//! error, 3 budget exceeded. Size caps come from `LUTENSOR_CAPS`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use lutensor::ensembles::{gaussian_scaling, melonic_fixed_point, wishart_scaling, Coupling};
use lutensor::invariants::{
    enumerate_classes, gram_invertible, gram_leading, gram_matrix, k_mixed, k_pure, Flavor, InvariantClass,
    PermTuple,
};
use lutensor::mc::{self, Config, Ensemble};
use lutensor::melonic::{degree, is_melonic, order_of_dominance, Scaling};
use lutensor::paired::{diagonal_table, first_order_classes, freeness_check, independent_table};
use lutensor::perm::Perm;
use lutensor::poly::{LaurentPoly, RatFunc};
use lutensor::transforms::{
    asymptotic_cumulant_melonic, asymptotic_cumulant_wishart_mixed, asymptotic_moment_from_cumulants_melonic,
    asymptotic_moment_from_cumulants_wishart_mixed, finite_cumulant, finite_moment_from_cumulants, Table,
    TableValue,
};
use lutensor::{par, Error};
use num_rational::BigRational;
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lutensor", version, about = "Exact combinatorics of local-unitary-invariant random tensors")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Emit LaTeX instead of JSON where a table or polynomial is printed.
    #[arg(long, global = true)]
    latex: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List invariant classes with their connectivity, degree and order of dominance.
    Enumerate(EnumerateArgs),
    /// Convert a moment table to cumulants or back.
    Transform(TransformArgs),
    /// Exact moments of the complex Gaussian tensor.
    Gaussian(EnsembleArgs),
    /// Exact moments of the Wishart tensor.
    Wishart(EnsembleArgs),
    /// Gram matrix of the invariants of one degree.
    Gram(GramArgs),
    /// Asymptotic freeness of a labeled moment table.
    FreenessCheck(FreenessArgs),
    /// Monte Carlo estimates against the exact moments.
    McVerify(McArgs),
    /// Melonic fixed point of the covariance under a perturbation.
    FixedPoint(FixedPointArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long = "D", alias = "d")]
    d: usize,
    #[arg(long, default_value = "pure")]
    flavor: Flavor,
    /// Only connected classes (purely connected for the pure flavor).
    #[arg(long)]
    connected: bool,
    /// Only melonic classes; for the mixed flavor `(σ, id)` must be melonic.
    #[arg(long)]
    melonic: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    ToCumulants,
    ToMoments,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Regime {
    /// Exact in `N`; values are rational functions.
    Finite,
    /// Large-`N` pure melonic cumulants; values are rationals.
    Melonic,
    /// Large-`N` mixed cumulants under Wishart scaling; values are rationals.
    Wishart,
}

#[derive(Args)]
struct TransformArgs {
    /// Table JSON file, `-` for stdin.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    direction: Direction,
    #[arg(long, value_enum)]
    regime: Regime,
    /// Also run the inverse and require the input back.
    #[arg(long)]
    check: bool,
    /// Write the output table here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EnsembleArgs {
    /// A class in text form, e.g. `flavor=pure;D=3;n=2;c1=(1 2);c2=(1 2);c3=(1)(2)`.
    #[arg(long, conflicts_with = "table")]
    class: Option<String>,
    /// Emit a moment table of every class up to `--n-max` instead.
    #[arg(long)]
    table: bool,
    #[arg(long, default_value_t = 2)]
    n_max: usize,
    #[arg(long = "D", alias = "d", default_value_t = 3)]
    d: usize,
    /// Large-`N` values on first-order classes instead of exact polynomials.
    #[arg(long)]
    asymptotic: bool,
}

#[derive(Args)]
struct GramArgs {
    #[arg(long)]
    n: usize,
    #[arg(long = "D", alias = "d")]
    d: usize,
    #[arg(long, default_value = "pure")]
    flavor: Flavor,
}

#[derive(Clone, Copy, ValueEnum)]
#[allow(clippy::enum_variant_names)]
enum Demo {
    /// Two independent Gaussian tensors.
    GaussianPair,
    /// Two independent Wishart tensors.
    WishartPair,
    /// One Gaussian tensor under two labels.
    SelfPair,
}

#[derive(Args)]
struct FreenessArgs {
    #[arg(long, conflicts_with = "table")]
    demo: Option<Demo>,
    /// Labeled asymptotic moment table JSON.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    labels: u8,
    #[arg(long, default_value_t = 3)]
    n_max: usize,
    #[arg(long = "D", alias = "d", default_value_t = 3)]
    d: usize,
}

#[derive(Args)]
struct McArgs {
    /// Flat `key = value` run file; flags below override nothing and are
    /// used only without it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "N", default_value_t = 6)]
    dim: usize,
    #[arg(long = "D", alias = "d", default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "gaussian")]
    ensemble: String,
    /// All classes up to this degree.
    #[arg(long, default_value_t = 2)]
    classes: usize,
    /// Also run the microscopic cumulant check on every class.
    #[arg(long)]
    microscopic: bool,
}

#[derive(Args)]
struct FixedPointArgs {
    /// `label:z:class[:zeta]`, e.g. `q:1/10:flavor=pure;D=3;n=2;c1=(1 2);c2=(1 2);c3=(1)(2)`.
    #[arg(long = "coupling", required = true)]
    couplings: Vec<String>,
    #[arg(long, default_value_t = 4)]
    order: usize,
}

enum Failure {
    Check(Value),
    Usage(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::Budget { .. } => Failure::Budget(e.to_string()),
            Error::Missing(_) => Failure::Check(json!({ "error": e.to_string(), "pass": false })),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<String, Failure>;

fn print_json(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

/// Prints `v` and fails unless its `pass` field is true.
fn verdict(v: Value) -> Outcome {
    if v["pass"] == json!(true) {
        Ok(print_json(&v))
    } else {
        Err(Failure::Check(v))
    }
}

fn read_json(path: &PathBuf) -> Result<Value, Failure> {
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| Failure::Usage(e.to_string()))?
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn latex_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = format!("\\begin{{tabular}}{{{}}}\n\\hline\n", "l".repeat(header.len()));
    out += &format!("{} \\\\\n\\hline\n", header.join(" & "));
    for r in rows {
        out += &format!("{} \\\\\n", r.join(" & "));
    }
    out + "\\hline\n\\end{tabular}"
}

fn latex_tuple(s: &PermTuple) -> String {
    let parts: Vec<String> = s.perms().iter().map(Perm::to_string).collect();
    format!("$({})$", parts.join(", "))
}

fn omega_of(c: &InvariantClass) -> usize {
    match c.flavor {
        Flavor::Pure => degree(&c.rep),
        Flavor::Mixed => degree(&c.rep.extended(&Perm::identity(c.n()))),
    }
}

fn melonic_of(c: &InvariantClass) -> bool {
    match c.flavor {
        Flavor::Pure => is_melonic(&c.rep),
        Flavor::Mixed => is_melonic(&c.rep.extended(&Perm::identity(c.n()))),
    }
}

fn enumerate(a: &EnumerateArgs, latex: bool) -> Outcome {
    let mut rows = Vec::new();
    for c in enumerate_classes(a.n, a.d, a.flavor, a.connected)? {
        if a.melonic && !melonic_of(&c) {
            continue;
        }
        let scaling = match c.flavor {
            Flavor::Pure => Scaling::PureGaussian,
            Flavor::Mixed => Scaling::WishartMixed,
        };
        rows.push((
            c.clone(),
            k_mixed(&c.rep),
            k_pure(&c.rep),
            omega_of(&c),
            order_of_dominance(&c.rep, scaling)?,
        ));
    }
    if latex {
        let body: Vec<Vec<String>> = rows
            .iter()
            .map(|(c, km, kp, w, o)| vec![latex_tuple(&c.rep), km.to_string(), kp.to_string(), w.to_string(), o.to_string()])
            .collect();
        return Ok(latex_table(&["$\\sigma$", "$K_m$", "$K_p$", "$\\omega$", "order"], &body));
    }
    match a.format {
        Format::Json => Ok(print_json(&Value::Array(
            rows.iter()
                .map(|(c, km, kp, w, o)| {
                    json!({ "class": c.to_text(), "K_m": km, "K_p": kp, "omega": w, "dominance": o })
                })
                .collect(),
        ))),
        Format::Csv => {
            let mut out = String::from("class,K_m,K_p,omega,dominance");
            for (c, km, kp, w, o) in &rows {
                out += &format!("\n{},{km},{kp},{w},{o}", c.to_text());
            }
            Ok(out)
        }
    }
}

/// Applies one direction of a transform to every class of `input` it is
/// defined on; the rest are listed as skipped.
fn apply<R: TableValue>(
    input: &Table<R>,
    f: &dyn Fn(&Table<R>, &PermTuple) -> lutensor::Result<R>,
    applies: &dyn Fn(&InvariantClass) -> bool,
) -> Result<(Table<R>, Vec<String>), Failure> {
    let mut out = Table::new(input.flavor());
    let mut skipped = Vec::new();
    for (c, w, _) in input.entries() {
        if !w.is_empty() {
            return Err(Failure::Usage("labeled tables are handled by freeness-check".into()));
        }
        if !applies(c) {
            skipped.push(c.to_text());
            continue;
        }
        match f(input, &c.rep) {
            Ok(v) => out.insert_class(c.clone(), v)?,
            Err(Error::Missing(m)) => {
                return Err(Failure::Check(json!({
                    "error": "table is not closed",
                    "missing": m,
                    "class": c.to_text(),
                    "pass": false,
                })))
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((out, skipped))
}

type Op<R> = Box<dyn Fn(&Table<R>, &PermTuple) -> lutensor::Result<R>>;

fn run_transform<R: TableValue>(
    a: &TransformArgs,
    input: Table<R>,
    forward: Op<R>,
    inverse: Op<R>,
    applies: &dyn Fn(&InvariantClass) -> bool,
) -> Outcome {
    let (out, skipped) = apply(&input, &*forward, applies)?;
    let mut report = json!({ "table": out.to_json(), "skipped": skipped, "pass": true });
    if a.check {
        let (back, _) = apply(&out, &*inverse, applies)?;
        let mismatched: Vec<String> = out
            .entries()
            .map(|(c, _, _)| c)
            .filter(|c| back.get(&c.rep).ok() != input.get(&c.rep).ok())
            .map(InvariantClass::to_text)
            .collect();
        report["round_trip"] = json!({ "mismatched": mismatched });
        report["pass"] = json!(mismatched.is_empty());
    }
    if let Some(path) = &a.output {
        std::fs::write(path, print_json(&out.to_json())).map_err(|e| Failure::Usage(e.to_string()))?;
        report.as_object_mut().expect("object").remove("table");
    }
    verdict(report)
}

fn first_order(c: &InvariantClass) -> bool {
    first_order_classes(c.n(), c.d(), c.flavor)
        .map(|v| v.contains(&c.rep))
        .unwrap_or(false)
}

fn transform(a: &TransformArgs) -> Outcome {
    let v = read_json(&a.input)?;
    let forward_first = a.direction == Direction::ToCumulants;
    match a.regime {
        Regime::Finite => {
            let t = Table::<RatFunc>::from_json(&v)?;
            let (f, g): (Op<RatFunc>, Op<RatFunc>) = (
                Box::new(finite_cumulant),
                Box::new(finite_moment_from_cumulants),
            );
            let (f, g) = if forward_first { (f, g) } else { (g, f) };
            run_transform(a, t, f, g, &|_| true)
        }
        Regime::Melonic | Regime::Wishart => {
            let t = Table::<BigRational>::from_json(&v)?;
            let want = if a.regime == Regime::Melonic { Flavor::Pure } else { Flavor::Mixed };
            if t.flavor() != want {
                return Err(Failure::Usage(format!("the {} regime needs a {want} table", regime_name(a.regime))));
            }
            let (f, g): (Op<BigRational>, Op<BigRational>) = if a.regime == Regime::Melonic {
                (
                    Box::new(asymptotic_cumulant_melonic),
                    Box::new(asymptotic_moment_from_cumulants_melonic),
                )
            } else {
                (
                    Box::new(asymptotic_cumulant_wishart_mixed),
                    Box::new(asymptotic_moment_from_cumulants_wishart_mixed),
                )
            };
            let (f, g) = if forward_first { (f, g) } else { (g, f) };
            run_transform(a, t, f, g, &first_order)
        }
    }
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Finite => "finite",
        Regime::Melonic => "melonic",
        Regime::Wishart => "wishart",
    }
}

fn parse_class(text: &str, flavor: Flavor) -> Result<InvariantClass, Failure> {
    let c = InvariantClass::parse(text)?;
    if c.flavor != flavor {
        return Err(Failure::Usage(format!("expected a {flavor} class")));
    }
    Ok(c)
}

fn ensemble(a: &EnsembleArgs, ens: Ensemble, latex: bool) -> Outcome {
    let flavor = ens.flavor();
    if let Some(text) = &a.class {
        let c = parse_class(text, flavor)?;
        let moment = mc::exact_moment(&c.rep, ens)?;
        let poly: LaurentPoly = moment.to_laurent().expect("Wick sums are Laurent polynomials");
        if latex {
            return Ok(poly.to_latex());
        }
        let report = match ens {
            Ensemble::Gaussian { .. } => gaussian_scaling(&c.rep)?,
            Ensemble::Wishart => wishart_scaling(&c.rep)?,
        };
        return Ok(print_json(&json!({
            "class": c.to_text(),
            "moment": poly.to_string(),
            "scaling": report,
        })));
    }
    if !a.table {
        return Err(Failure::Usage("give --class or --table".into()));
    }
    if a.asymptotic {
        let mut t = Table::<BigRational>::new(flavor);
        for n in 1..=a.n_max {
            for s in first_order_classes(n, a.d, flavor)? {
                let r = match ens {
                    Ensemble::Gaussian { .. } => gaussian_scaling(&s)?,
                    Ensemble::Wishart => wishart_scaling(&s)?,
                };
                t.insert(&s, BigRational::from_integer(r.asymptotic_moment))?;
            }
        }
        return Ok(print_json(&t.to_json()));
    }
    Ok(print_json(&mc::exact_table(a.n_max, a.d, ens)?.to_json()))
}

fn gram(a: &GramArgs, latex: bool) -> Outcome {
    let classes = enumerate_classes(a.n, a.d, a.flavor, false)?;
    let m = gram_matrix(&classes)?;
    let mut leading = Vec::new();
    for x in &classes {
        let mut row = Vec::new();
        for y in &classes {
            row.push(gram_leading(x, y)?);
        }
        leading.push(row);
    }
    if latex {
        let rows: Vec<String> = leading
            .iter()
            .map(|r| {
                r.iter()
                    .map(|(e, c)| format!("{c} N^{{{e}}}"))
                    .collect::<Vec<_>>()
                    .join(" & ")
            })
            .collect();
        return Ok(format!("\\begin{{pmatrix}}\n{}\n\\end{{pmatrix}}", rows.join(" \\\\\n")));
    }
    let (invertible, det) = gram_invertible(&classes)?;
    Ok(print_json(&json!({
        "classes": classes.iter().map(InvariantClass::to_text).collect::<Vec<_>>(),
        "gram": m.iter().map(|r| r.iter().map(LaurentPoly::to_string).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "leading": leading
            .iter()
            .map(|r| r.iter().map(|(e, c)| json!({ "exponent": e, "coefficient": c.to_string() })).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "invertible": invertible,
        "determinant": det.to_string(),
    })))
}

fn freeness(a: &FreenessArgs) -> Outcome {
    let table = match (a.demo, &a.table) {
        (Some(Demo::GaussianPair), _) => independent_table(Flavor::Pure, a.d, a.n_max, a.labels)?,
        (Some(Demo::WishartPair), _) => independent_table(Flavor::Mixed, a.d, a.n_max, a.labels)?,
        (Some(Demo::SelfPair), _) => diagonal_table(Flavor::Pure, a.d, a.n_max, a.labels)?,
        (None, Some(path)) => Table::<BigRational>::from_json(&read_json(path)?)?,
        (None, None) => return Err(Failure::Usage("give --demo or --table".into())),
    };
    let r = freeness_check(&table, a.labels, a.n_max)?;
    let mut v = serde_json::to_value(&r).expect("reports serialize");
    v["pass"] = json!(r.free && r.agree);
    verdict(v)
}

fn mc_verify(a: &McArgs) -> Outcome {
    let text = match &a.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => format!(
            "N = {}\nD = {}\nsamples = {}\nseed = {}\nensemble = {}\nclasses = {}\n",
            a.dim, a.d, a.samples, a.seed, a.ensemble, a.classes
        ),
    };
    let cfg: Config = text.parse()?;
    let mut report = mc::verify(&cfg)?;
    let reps: Vec<PermTuple> = cfg.classes.iter().map(|c| c.rep.clone()).collect();
    let residual = mc::lu_residual(&reps, &cfg.run)?;
    let lu_pass = cfg.run.dim > 8 || residual < 1e-9;
    report["lu_residual"] = json!({ "value": residual, "pass": lu_pass });
    let mut pass = report["pass"] == json!(true) && lu_pass;
    if a.microscopic {
        let mut rows = Vec::new();
        for s in reps.iter().filter(|s| s.n() <= cfg.run.dim) {
            let r = mc::check_microscopic_cumulant(s, &cfg.run, cfg.sigmas)?;
            pass &= r.pass;
            rows.push(serde_json::to_value(&r).expect("reports serialize"));
        }
        report["microscopic"] = Value::Array(rows);
    }
    report["pass"] = json!(pass);
    verdict(report)
}

fn parse_coupling(text: &str) -> Result<Coupling, Failure> {
    let mut parts = text.splitn(3, ':');
    let (Some(label), Some(z), Some(rest)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Failure::Usage(format!("coupling `{text}` is not label:z:class[:zeta]")));
    };
    let (class, zeta) = match rest.rsplit_once(':') {
        Some((c, z)) => (c, Some(z.trim().parse::<i64>().map_err(|_| Failure::Usage(format!("bad zeta `{z}`")))?)),
        None => (rest, None),
    };
    let z: BigRational = z.trim().parse().map_err(|_| Failure::Usage(format!("bad coupling value `{z}`")))?;
    Ok(Coupling {
        label: label.to_string(),
        class: parse_class(class, Flavor::Pure)?.rep,
        z,
        zeta,
    })
}

fn fixed_point(a: &FixedPointArgs, latex: bool) -> Outcome {
    let couplings = a.couplings.iter().map(|c| parse_coupling(c)).collect::<Result<Vec<_>, _>>()?;
    let fp = melonic_fixed_point(&couplings, a.order)?;
    if latex {
        return Ok(format!("G = {}", fp.series));
    }
    Ok(print_json(&json!({
        "kept": fp.labels,
        "dropped": fp.dropped,
        "order": a.order,
        "series": fp.series.to_string(),
        "value": fp.value().to_string(),
    })))
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Enumerate(a) => enumerate(a, cli.latex),
        Command::Transform(a) => transform(a),
        Command::Gaussian(a) => ensemble(a, Ensemble::Gaussian { covariance: 1.0 }, cli.latex),
        Command::Wishart(a) => ensemble(a, Ensemble::Wishart, cli.latex),
        Command::Gram(a) => gram(a, cli.latex),
        Command::FreenessCheck(a) => freeness(a),
        Command::McVerify(a) => mc_verify(a),
        Command::FixedPoint(a) => fixed_point(a, cli.latex),
    }
}

fn emit(text: &str) {
    // a closed pipe downstream is not an error of ours
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match par::with_threads(cli.threads, || run(&cli)) {
        Ok(out) => {
            emit(&out);
            ExitCode::SUCCESS
        }
        Err(Failure::Check(v)) => {
            emit(&print_json(&v));
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
