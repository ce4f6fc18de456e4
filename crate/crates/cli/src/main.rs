//! `fermisum`: command-line front end for fermionic sums, one-dimensional
//! sums, Q-system checks, verification suites and table regeneration.
//!
//! Exit codes: 0 success, 1 a theorem or golden check failed, 2 usage or
//! input error, 3 the instance is outside what the engine supports.

mod emit;
mod schema;
mod suites;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use fermisum::characters::{chi_q_weights, explicit_neighbor_factors, qsystem_residual, ChiProvider};
use fermisum::crystals::parse_crystal_shorthand;
use fermisum::fermionic::{fermionic_m, fermionic_m_l, fermionic_n_l, FermionicResult, SumOptions, TensorSpec};
use fermisum::onedsum::{one_d_sum, B0Policy, PathSumSpec, Restriction};
use fermisum::qseries::LaurentPolyQ;
use fermisum::root_data::{algebra_data, AlgebraData, AlgebraId};
use fermisum::verifier::{dominant_cone, spec_from_crystals};
use serde_json::{json, Value};

use suites::{Suite, SuiteOptions};

const CRYSTAL_HELP: &str = "\
Crystal shorthand: whitespace-separated ordered factors ALG:r,s[xCOUNT],
for example \"C2:1,2 C2:2,1x3 C2:1,1x2\" is B(1,2) ⊗ B(2,1)^⊗3 ⊗ B(1,1)^⊗2.

Polynomials are printed with non-negative powers of q, lowest first.
Exit codes: 0 success, 1 theorem or golden check failed, 2 usage error,
3 unsupported instance.";

#[derive(Parser, Debug)]
#[command(name = "fermisum", version, about = "Fermionic formulas and one-dimensional sums", after_help = CRYSTAL_HELP)]
struct Cli {
    /// Worker threads for data-parallel sums (output does not depend on it).
    #[arg(long, global = true, env = "FERMISUM_JOBS")]
    jobs: Option<usize>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Latex,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Form {
    /// Unrestricted sum `M(W, λ)`.
    #[value(name = "M")]
    M,
    /// Level-restricted `M_l(W)` at `λ = 0`.
    #[value(name = "Ml")]
    Ml,
    /// `N_l(W, λ)`, or `N_∞` without `--level`.
    #[value(name = "Nl")]
    Nl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TableSet {
    /// Decomposition of a single W(r, s).
    #[value(name = "A", alias = "a")]
    A,
    /// The worked C2 example: X, X_2 and X_1 at λ = 0.
    #[value(name = "B", alias = "b")]
    B,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a fermionic sum for a tensor product given as JSON.
    Fermionic {
        /// JSON file `{"algebra":"C2","factors":[{"a":1,"s":2,"count":1}]}`.
        #[arg(long)]
        spec: PathBuf,
        /// Weight in fundamental-weight coordinates, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        /// Level `l` for the restricted sums.
        #[arg(long)]
        level: Option<i64>,
        /// Which sum; defaults to M, or Ml when `--level` is given.
        #[arg(long, value_enum)]
        form: Option<Form>,
        /// Include the contributing configurations.
        #[arg(long)]
        ledger: bool,
    },
    /// Evaluate a one-dimensional sum over paths.
    Onedsum {
        /// Ordered crystal factors in shorthand.
        #[arg(long)]
        crystals: String,
        /// Weight in fundamental-weight coordinates, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        /// Restrict to paths with ε_0 at most this level.
        #[arg(long)]
        level: Option<i64>,
        /// Include the contributing paths (always on for CSV).
        #[arg(long)]
        ledger: bool,
    },
    /// Q-system solutions and residuals.
    Qsystem {
        /// Algebra of type A, B, C or D.
        #[arg(long)]
        algebra: String,
        /// Largest j.
        #[arg(long, default_value_t = 4)]
        max_j: i64,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Seed for the random instances.
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Random instances per algebra family.
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// Include the slowest exceptional tables.
        #[arg(long)]
        full: bool,
    },
    /// Regenerate published tables.
    Tables {
        #[arg(long, value_enum)]
        appendix: TableSet,
        /// Algebra for the single-module decompositions.
        #[arg(long)]
        algebra: Option<String>,
        /// Node r of W(r, s).
        #[arg(long)]
        r: Option<usize>,
        /// Length s of W(r, s).
        #[arg(long, default_value_t = 1)]
        s: i64,
    },
}

/// Bad arguments or input, reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Text written to the output plus whether a gating check failed.
struct Rendered {
    body: String,
    failed: bool,
}

impl Rendered {
    fn ok(body: String) -> Self {
        Rendered { body, failed: false }
    }
}

fn parse_lambda(text: Option<&str>, rank: usize) -> anyhow::Result<Vec<i64>> {
    let Some(text) = text else { return Ok(vec![0; rank]) };
    let lam: Vec<i64> = text
        .split(',')
        .map(|x| x.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--lambda '{text}': expected comma-separated integers")))?;
    if lam.len() != rank {
        return Err(usage(format!("--lambda has {} entries, the algebra has rank {rank}", lam.len())));
    }
    Ok(lam)
}

fn parse_algebra(text: &str) -> anyhow::Result<AlgebraId> {
    text.parse().map_err(|e: fermisum::Error| usage(format!("--algebra: {e}")))
}

fn run_fermionic(
    cli: &Cli,
    spec_path: &PathBuf,
    lambda: Option<&str>,
    level: Option<i64>,
    form: Option<Form>,
    ledger: bool,
    parallel: bool,
) -> anyhow::Result<Rendered> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| usage(format!("cannot read {}: {e}", spec_path.display())))?;
    schema::validate(schema::TENSOR_SPEC, "tensor spec", &text)?;
    let spec = TensorSpec::from_json_str(&text)?;
    let data = algebra_data(spec.algebra());
    let lam = parse_lambda(lambda, data.rank())?;
    let form = form.unwrap_or(if level.is_some() { Form::Ml } else { Form::M });
    let opts = SumOptions { ledger: ledger || cli.format == Format::Csv, parallel };
    let res: FermionicResult = match (form, level) {
        (Form::M, None) => fermionic_m(&data, &spec, &lam, opts)?,
        (Form::M, Some(_)) => return Err(usage("--form M takes no --level; use Ml or Nl")),
        (Form::Ml, Some(l)) => {
            if lam.iter().any(|&x| x != 0) {
                return Err(usage("--form Ml is defined at λ = 0 only"));
            }
            fermionic_m_l(&data, &spec, l, opts)?
        }
        (Form::Ml, None) => return Err(usage("--form Ml needs --level")),
        (Form::Nl, l) => fermionic_n_l(&data, &spec, &lam, l, opts)?,
    };
    let value = res.value.invert_q();
    let form_name = match form {
        Form::M => "M",
        Form::Ml => "Ml",
        Form::Nl => "Nl",
    };
    let rows: Vec<(String, String, LaurentPolyQ)> = res
        .ledger
        .iter()
        .flatten()
        .map(|r| (format!("{:?}", r.m.m), format!("{:?}", r.p), r.contribution.invert_q()))
        .collect();
    let body = match cli.format {
        Format::Text => {
            let mut s = format!("{value}\n");
            if ledger {
                for (m, p, c) in &rows {
                    s.push_str(&format!("m={m} p={p} {c}\n"));
                }
                s.push_str(&format!(
                    "{} contributing of {} constrained configurations\n",
                    res.configuration_count, res.total_configurations
                ));
            }
            s
        }
        Format::Latex => format!("{}\n", emit::latex_poly(&value)),
        Format::Csv => emit::csv_table(
            &["m", "p", "contribution"],
            &rows.iter().map(|(m, p, c)| vec![m.clone(), p.clone(), c.to_string()]).collect::<Vec<_>>(),
        ),
        Format::Json => {
            let mut v = json!({
                "spec": spec.to_json(),
                "lambda": lam,
                "form": form_name,
                "level": level,
                "polynomial": emit::poly_json(&value),
                "contributing_configurations": res.configuration_count,
                "constrained_configurations": res.total_configurations.to_string(),
            });
            if ledger {
                v["ledger"] = rows
                    .iter()
                    .map(|(m, p, c)| json!({"m": m, "p": p, "contribution": emit::poly_json(c)}))
                    .collect();
            }
            pretty(&v)
        }
    };
    Ok(Rendered::ok(body))
}

fn run_onedsum(
    cli: &Cli,
    crystals: &str,
    lambda: Option<&str>,
    level: Option<i64>,
    ledger: bool,
) -> anyhow::Result<Rendered> {
    let factors = parse_crystal_shorthand(crystals)?;
    let rank = factors.first().map(|f| f.rank()).ok_or_else(|| usage("--crystals is empty"))?;
    let lam = parse_lambda(lambda, rank)?;
    let restriction = match level {
        None => Restriction::Classical(lam.clone()),
        Some(l) => Restriction::Level(l, lam.clone()),
    };
    let want_ledger = ledger || cli.format == Format::Csv;
    let res = one_d_sum(&PathSumSpec { factors, b0: B0Policy::Automatic, restriction }, want_ledger)?;
    let value = res.normalized().invert_q();
    let paths = res.ledger.clone().unwrap_or_default();
    let body = match cli.format {
        Format::Text => {
            let mut s = format!("{value}\n");
            if ledger {
                for p in &paths {
                    s.push_str(&format!("{}  -E={} ε0={}\n", p.label, p.minus_e, p.eps0));
                }
            }
            s
        }
        Format::Latex => format!("{}\n", emit::latex_poly(&value)),
        Format::Csv => emit::csv_table(
            &["path", "minus_e", "eps0"],
            &paths
                .iter()
                .map(|p| vec![p.label.clone(), p.minus_e.to_string(), p.eps0.to_string()])
                .collect::<Vec<_>>(),
        ),
        Format::Json => {
            let mut v = json!({
                "crystals": crystals,
                "lambda": lam,
                "level": level,
                "c": res.c,
                "polynomial": emit::poly_json(&value),
            });
            if ledger {
                v["ledger"] = paths
                    .iter()
                    .map(|p| json!({"path": p.label, "minus_e": p.minus_e, "eps0": p.eps0}))
                    .collect();
            }
            pretty(&v)
        }
    };
    Ok(Rendered::ok(body))
}

fn run_qsystem(cli: &Cli, algebra: &str, max_j: i64) -> anyhow::Result<Rendered> {
    if max_j < 1 {
        return Err(usage("--max-j must be at least 1"));
    }
    let data = algebra_data(parse_algebra(algebra)?);
    let chi = ChiProvider::new(&data)?;
    let mut entries = Vec::new();
    let mut failed = false;
    for a in 1..=data.rank() {
        for j in 1..=max_j {
            let mut dec: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
            for w in chi_q_weights(&data, a, j)? {
                *dec.entry(w).or_insert(0) += 1;
            }
            let mut dec: Vec<(Vec<i64>, u64)> = dec.into_iter().collect();
            dec.sort_by(|x, y| height(&data, &y.0).cmp(&height(&data, &x.0)).then_with(|| y.0.cmp(&x.0)));
            let residual = qsystem_residual(&data, a, j, &chi)?;
            failed |= !residual.is_zero();
            let branch = explicit_neighbor_factors(&data, a, j).map(|(l, _)| l);
            entries.push((a, j, dec, residual.is_zero(), branch));
        }
    }
    let body = match cli.format {
        Format::Text => {
            let mut s = String::new();
            for (a, j, dec, zero, branch) in &entries {
                let terms: Vec<String> = dec
                    .iter()
                    .map(|(w, c)| if *c == 1 { emit::text_weight(w) } else { format!("{c}{}", emit::text_weight(w)) })
                    .collect();
                let branch = branch.map(|b| format!(" [{b}]")).unwrap_or_default();
                let res = if *zero { "residual 0" } else { "residual NON-ZERO" };
                s.push_str(&format!("Q({a})_{j} = {}  {res}{branch}\n", terms.join(" + ")));
            }
            s
        }
        Format::Latex => {
            let mut s = String::from("\\begin{align*}\n");
            for (i, (a, j, dec, _, _)) in entries.iter().enumerate() {
                let terms: Vec<String> = dec
                    .iter()
                    .map(|(w, c)| if *c == 1 { emit::latex_weight(w) } else { format!("{c}\\,{}", emit::latex_weight(w)) })
                    .collect();
                let end = if i + 1 == entries.len() { "" } else { " \\\\" };
                s.push_str(&format!("Q^{{({a})}}_{{{j}}} &= {}{end}\n", terms.join(" + ")));
            }
            s.push_str("\\end{align*}\n");
            s
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = entries
                .iter()
                .flat_map(|(a, j, dec, zero, _)| {
                    dec.iter().map(move |(w, c)| {
                        vec![a.to_string(), j.to_string(), join(w), c.to_string(), zero.to_string()]
                    })
                })
                .collect();
            emit::csv_table(&["a", "j", "lambda", "multiplicity", "residual_zero"], &rows)
        }
        Format::Json => {
            let v: Vec<Value> = entries
                .iter()
                .map(|(a, j, dec, zero, branch)| {
                    json!({
                        "a": a,
                        "j": j,
                        "decomposition": dec.iter().map(|(w, c)| json!({"lambda": w, "mult": c})).collect::<Vec<_>>(),
                        "residual_zero": zero,
                        "branch": branch,
                    })
                })
                .collect();
            pretty(&json!({"algebra": data.id.to_string(), "entries": v}))
        }
    };
    Ok(Rendered { body, failed })
}

fn height(data: &AlgebraData, w: &[i64]) -> fermisum::root_data::Rat {
    data.to_root_coords(w).into_iter().sum()
}

fn join(w: &[i64]) -> String {
    w.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn run_verify(cli: &Cli, suite: Suite, opts: SuiteOptions) -> anyhow::Result<Rendered> {
    let reports = suites::run(suite, opts)?;
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let gating_failed = reports.iter().filter(|r| !r.passed() && r.gating()).count();
    let body = match cli.format {
        Format::Json => {
            let body = pretty(&json!({
                "suite": suite.name(),
                "summary": {"total": reports.len(), "failed": failed, "gating_failed": gating_failed},
                "checks": reports,
            }));
            schema::validate(schema::CHECK_REPORT, "verify report", &body)
                .map_err(|e| fermisum::Error::Internal(e.0))?;
            body
        }
        Format::Csv => emit::csv_table(
            &["name", "instance", "kind", "status", "difference"],
            &reports
                .iter()
                .map(|r| {
                    vec![
                        r.name.clone(),
                        r.instance.clone(),
                        enum_name(&r.kind),
                        enum_name(&r.status),
                        r.witness.as_ref().map(|w| w.difference.clone()).unwrap_or_default(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
        Format::Text | Format::Latex => {
            let mut s = String::new();
            for r in &reports {
                s.push_str(&format!("{:<28} {:<24} {}\n", r.name, enum_name(&r.status), r.instance));
                if let Some(w) = r.witness.as_ref().filter(|_| !r.passed()) {
                    s.push_str(&format!("    left  {}\n    right {}\n    diff  {}\n", w.left, w.right, w.difference));
                }
            }
            s.push_str(&format!(
                "suite {}: {} checks, {failed} failed, {gating_failed} gating failures\n",
                suite.name(),
                reports.len()
            ));
            s
        }
    };
    Ok(Rendered { body, failed: gating_failed > 0 })
}

fn enum_name<T: serde::Serialize>(x: &T) -> String {
    serde_json::to_value(x).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn run_tables(
    cli: &Cli,
    appendix: TableSet,
    algebra: Option<&str>,
    r: Option<usize>,
    s: i64,
    parallel: bool,
) -> anyhow::Result<Rendered> {
    match appendix {
        TableSet::B => table_b(cli, parallel),
        TableSet::A => {
            let alg = parse_algebra(algebra.ok_or_else(|| usage("--appendix A needs --algebra"))?)?;
            let r = r.ok_or_else(|| usage("--appendix A needs --r"))?;
            table_a(cli, alg, r, s, parallel)
        }
    }
}

fn table_a(cli: &Cli, alg: AlgebraId, r: usize, s: i64, parallel: bool) -> anyhow::Result<Rendered> {
    let data = algebra_data(alg);
    let spec = TensorSpec::new(alg).with(r, s, 1).map_err(|e| usage(e.to_string()))?;
    let opts = SumOptions { ledger: false, parallel };
    let mut rows = Vec::new();
    let mut cone = dominant_cone(&data, &spec.top_weight());
    cone.sort_by(|x, y| height(&data, y).cmp(&height(&data, x)).then_with(|| y.cmp(x)));
    for lam in cone {
        let p = fermionic_m(&data, &spec, &lam, opts)?.value.invert_q();
        if !p.is_zero() {
            rows.push((lam, p));
        }
    }
    let heading = format!("W^{{({r})}}_{{{s}}}");
    let body = match cli.format {
        Format::Latex => emit::latex_decomposition(&heading, &rows),
        Format::Text => rows.iter().map(|(l, p)| format!("{}: {p}\n", emit::text_weight(l))).collect(),
        Format::Csv => emit::csv_table(
            &["lambda", "exponent", "coefficient"],
            &rows
                .iter()
                .flat_map(|(l, p)| emit::poly_rows(p).into_iter().map(move |mut row| {
                    row.insert(0, join(l));
                    row
                }))
                .collect::<Vec<_>>(),
        ),
        Format::Json => pretty(&json!({
            "algebra": alg.to_string(),
            "r": r,
            "s": s,
            "rows": rows.iter().map(|(l, p)| json!({"lambda": l, "polynomial": emit::poly_json(p)})).collect::<Vec<_>>(),
        })),
    };
    Ok(Rendered::ok(body))
}

fn table_b(cli: &Cli, parallel: bool) -> anyhow::Result<Rendered> {
    let factors = parse_crystal_shorthand(suites::WORKED_EXAMPLE)?;
    let spec = spec_from_crystals(&factors)?;
    let data = algebra_data(spec.algebra());
    let opts = SumOptions { ledger: false, parallel };
    let mut rows: Vec<(&str, LaurentPolyQ)> = Vec::new();
    let mut failed = false;
    for (name, printed) in suites::worked_example_printed() {
        let (restriction, m) = match name {
            "X" => (Restriction::Classical(vec![0, 0]), fermionic_m(&data, &spec, &[0, 0], opts)?),
            "X_2" => (Restriction::Level(2, vec![0, 0]), fermionic_m_l(&data, &spec, 2, opts)?),
            _ => (Restriction::Level(1, vec![0, 0]), fermionic_m_l(&data, &spec, 1, opts)?),
        };
        let x = one_d_sum(&PathSumSpec { factors: factors.clone(), b0: B0Policy::Automatic, restriction }, false)?;
        let x = x.normalized().invert_q();
        failed |= x != printed || m.value.invert_q() != x;
        rows.push((name, x));
    }
    let body = match cli.format {
        Format::Text => rows.iter().map(|(n, p)| format!("{n} = {p}\n")).collect(),
        Format::Latex => rows
            .iter()
            .map(|(n, p)| {
                let name = match n.split_once('_') {
                    Some((x, l)) => format!("{x}_{{{l}}}"),
                    None => n.to_string(),
                };
                format!("{name} = {}\n", emit::latex_poly(p))
            })
            .collect(),
        Format::Csv => emit::csv_table(
            &["name", "exponent", "coefficient"],
            &rows
                .iter()
                .flat_map(|(n, p)| emit::poly_rows(p).into_iter().map(move |mut row| {
                    row.insert(0, n.to_string());
                    row
                }))
                .collect::<Vec<_>>(),
        ),
        Format::Json => pretty(&json!({
            "crystals": suites::WORKED_EXAMPLE,
            "lambda": [0, 0],
            "polynomials": rows.iter().map(|(n, p)| (n.to_string(), emit::poly_json(p))).collect::<serde_json::Map<_, _>>(),
        })),
    };
    Ok(Rendered { body, failed })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn dispatch(cli: &Cli) -> anyhow::Result<Rendered> {
    let jobs = cli.jobs.unwrap_or(1);
    if jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .context("starting the worker pool")?;
    let parallel = jobs > 1;
    match &cli.command {
        Command::Fermionic { spec, lambda, level, form, ledger } => {
            run_fermionic(cli, spec, lambda.as_deref(), *level, *form, *ledger, parallel)
        }
        Command::Onedsum { crystals, lambda, level, ledger } => {
            run_onedsum(cli, crystals, lambda.as_deref(), *level, *ledger)
        }
        Command::Qsystem { algebra, max_j } => run_qsystem(cli, algebra, *max_j),
        Command::Verify { suite, seed, samples, full } => {
            run_verify(cli, *suite, SuiteOptions { seed: *seed, samples: *samples, full: *full, parallel })
        }
        Command::Tables { appendix, algebra, r, s } => {
            run_tables(cli, *appendix, algebra.as_deref(), *r, *s, parallel)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<fermisum::Error>() {
        Some(fermisum::Error::Unsupported(_)) => 3,
        Some(fermisum::Error::Parse(_) | fermisum::Error::Invalid(_)) => 2,
        Some(fermisum::Error::Internal(_)) => 1,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(out) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, &out.body),
                None => std::io::stdout().write_all(out.body.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: writing output: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(if out.failed { 1 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
