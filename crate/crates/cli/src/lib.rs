//! The `wmms` command line. All logic lives here so it can be driven from
//! tests; `main` only forwards the process arguments.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use wmms_core::canonical::solve_12wmms;
use wmms_core::generate::{example_table1, gen_canonical, gen_random, CanonicalMode, RandomSpec};
use wmms_core::io::{grouped_to_json, instance_to_json, parse_instance, to_pretty, AllocationFile};
use wmms_core::lower_bound::{gen_lower_bound, verify_lower_bound};
use wmms_core::lp::solve_polytime;
use wmms_core::model::{share_ratio, validate_instance, Allocation, Instance};
use wmms_core::oracle::verify_alpha;
use wmms_core::rational::{format_rational, parse_rational, Rational};
use wmms_core::wmms::{estimate_wmms, exact_profile};
use wmms_core::{Error, DEFAULT_BUDGET};

/// Environment variable overriding the search budget.
pub const BUDGET_VAR: &str = "WMMS_BUDGET";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "wmms", version, about = "Weighted maximin share allocation of chores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute every agent's WMMS.
    Wmms(WmmsArgs),
    /// Allocate all items and report per-agent ratios.
    Solve(SolveArgs),
    /// Check an allocation against alpha times each WMMS.
    Verify(VerifyArgs),
    /// Write a generated instance.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Debug, Args)]
struct WmmsArgs {
    instance: PathBuf,
    /// Exhaustive search (the default).
    #[arg(long, conflicts_with = "estimate")]
    exact: bool,
    /// Upper estimate within a factor 1 + eps.
    #[arg(long)]
    estimate: bool,
    #[arg(long, default_value = "1/10")]
    eps: String,
    /// Also print a defining partition per agent (exact mode).
    #[arg(long)]
    partitions: bool,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Canonical12,
    Lp,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Canonical12 => "canonical12",
            Method::Lp => "lp",
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, default_value = "1/100")]
    eps: String,
    #[arg(long, default_value = "12")]
    alpha_max: String,
    /// Recorded in the metadata; both methods are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Allocation file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    instance: PathBuf,
    allocation: PathBuf,
    /// Defaults to the allocation's reported `max_ratio`.
    #[arg(long)]
    alpha: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TilingMode {
    Pipeline,
    Tiling,
    Independent,
}

#[derive(Debug, Subcommand)]
enum GenCommand {
    /// Two agents, weights (1 - eps, eps), two items of cost 1/2.
    Table1 {
        #[arg(long)]
        eps: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.0)]
        zero_prob: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Canonical {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "tiling")]
        mode: TilingMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The hardness family, group-compressed, with its share check.
    Lowerbound {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let mut out = Outcome {
        code: EXIT_OK,
        stdout: String::new(),
        stderr: String::new(),
    };
    let result = match budget() {
        Ok(budget) => match cli.command {
            Command::Wmms(a) => cmd_wmms(&a, budget, &mut out),
            Command::Solve(a) => cmd_solve(&a, budget, &mut out),
            Command::Verify(a) => cmd_verify(&a, budget, &mut out),
            Command::Gen(g) => cmd_gen(&g, budget, &mut out),
        },
        Err(e) => Err(e),
    };
    if let Err(e) = result {
        out.code = exit_code(&e);
        let _ = writeln!(out.stderr, "error: {e:#}");
    }
    out
}

fn exit_code(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded { .. }) => EXIT_BUDGET,
        _ => EXIT_INPUT,
    }
}

fn budget() -> anyhow::Result<u64> {
    match std::env::var(BUDGET_VAR) {
        Ok(text) => text
            .trim()
            .parse()
            .with_context(|| format!("{BUDGET_VAR} is not a count: `{text}`")),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn rational(text: &str, what: &str) -> anyhow::Result<Rational> {
    parse_rational(text).with_context(|| format!("bad {what}"))
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_instance(path: &Path, out: &mut Outcome) -> anyhow::Result<Instance> {
    let inst = parse_instance(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    let report = validate_instance(&inst);
    if !report.is_valid() {
        let list: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        bail!("invalid instance: {}", list.join("; "));
    }
    for w in &report.warnings {
        let _ = writeln!(out.stderr, "warning: {w}");
    }
    Ok(inst)
}

fn emit(text: &str, path: Option<&Path>, out: &mut Outcome) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            out.stdout.push_str(text);
            Ok(())
        }
    }
}

fn fmt_opt(r: &Option<Rational>) -> Value {
    r.as_ref().map_or(Value::Null, |r| Value::String(format_rational(r)))
}

fn cmd_wmms(a: &WmmsArgs, budget: u64, out: &mut Outcome) -> anyhow::Result<()> {
    let inst = load_instance(&a.instance, out)?;
    let (source, values, partitions) = if a.estimate {
        let eps = rational(&a.eps, "--eps")?;
        let mut values = Vec::with_capacity(inst.n());
        let mut exhaustive = true;
        for i in 0..inst.n() {
            let est = estimate_wmms(&inst, i, &eps, budget)?;
            exhaustive &= est.exhaustive;
            values.push(est.value);
        }
        let source = if exhaustive { "estimate" } else { "estimate-ffd" };
        (source, values, None)
    } else {
        let profile = exact_profile(&inst, budget)?;
        ("exact", profile.values, a.partitions.then_some(profile.partitions))
    };
    if a.json {
        let mut agents = Vec::new();
        for (i, v) in values.iter().enumerate() {
            let mut entry = Map::new();
            entry.insert("id".into(), json!(inst.agents[i].id));
            entry.insert("wmms".into(), json!(format_rational(v)));
            if let Some(p) = &partitions {
                let bundles: Vec<Vec<&str>> = p[i]
                    .iter()
                    .map(|b| b.iter().map(|&e| inst.items[e].as_str()).collect())
                    .collect();
                entry.insert("partition".into(), json!(bundles));
            }
            agents.push(Value::Object(entry));
        }
        out.stdout
            .push_str(&to_pretty(&json!({ "source": source, "agents": agents })));
    } else {
        let _ = writeln!(out.stdout, "source: {source}");
        let _ = writeln!(out.stdout, "{:<12} {:>12} {:>16}", "agent", "weight", "wmms");
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(
                out.stdout,
                "{:<12} {:>12} {:>16}",
                inst.agents[i].id,
                format_rational(inst.weight(i)),
                format_rational(v)
            );
            if let Some(p) = &partitions {
                let bundles: Vec<String> = p[i]
                    .iter()
                    .map(|b| {
                        format!(
                            "{{{}}}",
                            b.iter().map(|&e| inst.items[e].as_str()).collect::<Vec<_>>().join(",")
                        )
                    })
                    .collect();
                let _ = writeln!(out.stdout, "  partition: {}", bundles.join(" "));
            }
        }
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs, budget: u64, out: &mut Outcome) -> anyhow::Result<()> {
    let inst = load_instance(&a.instance, out)?;
    let eps = rational(&a.eps, "--eps")?;
    let alpha_max = rational(&a.alpha_max, "--alpha-max")?;
    let mut extra = Map::new();
    let (allocation, estimates): (Allocation, Option<Vec<Rational>>) = match a.method {
        Method::Canonical12 => {
            let solved = solve_12wmms(&inst, budget)?;
            (solved.allocation, None)
        }
        Method::Lp => {
            let sol = solve_polytime(&inst, &eps, Some(&alpha_max), budget)?;
            extra.insert("alpha".into(), json!(format_rational(&sol.alpha)));
            extra.insert("guarantee".into(), json!(format_rational(&sol.guarantee)));
            extra.insert(
                "estimates".into(),
                json!(sol.estimates.iter().map(format_rational).collect::<Vec<_>>()),
            );
            (sol.allocation, Some(sol.estimates))
        }
    };
    let (source, shares) = match exact_profile(&inst, budget) {
        Ok(p) => ("exact", p.values),
        Err(Error::BudgetExceeded { .. }) if estimates.is_some() => ("estimate", estimates.expect("checked")),
        Err(e) => return Err(e.into()),
    };
    let costs = allocation.agent_costs(&inst);
    let ratios: Vec<Option<Rational>> = costs.iter().zip(&shares).map(|(c, s)| share_ratio(c, s)).collect();
    let max_ratio = ratios
        .iter()
        .cloned()
        .collect::<Option<Vec<_>>>()
        .map(|r| r.into_iter().max().unwrap_or_default());

    let mut metadata = Map::new();
    metadata.insert("method".into(), json!(a.method.name()));
    metadata.insert(
        "flags".into(),
        json!({ "eps": format_rational(&eps), "alpha_max": format_rational(&alpha_max), "seed": a.seed }),
    );
    metadata.insert("wmms_source".into(), json!(source));
    let per_agent: Map<String, Value> = inst
        .agents
        .iter()
        .enumerate()
        .map(|(i, ag)| {
            (
                ag.id.clone(),
                json!({
                    "cost": format_rational(&costs[i]),
                    "wmms": format_rational(&shares[i]),
                    "ratio": fmt_opt(&ratios[i]),
                }),
            )
        })
        .collect();
    metadata.insert("agents".into(), Value::Object(per_agent));
    metadata.insert("max_ratio".into(), fmt_opt(&max_ratio));
    metadata.extend(extra);
    let file = AllocationFile::new(&inst, &allocation, Value::Object(metadata));
    emit(&file.to_json(), a.out.as_deref(), out)?;

    let report = if a.out.is_some() {
        &mut out.stdout
    } else {
        &mut out.stderr
    };
    let _ = writeln!(report, "method: {}  wmms: {source}", a.method.name());
    let _ = writeln!(report, "{:<12} {:>14} {:>14} {:>10}", "agent", "cost", "wmms", "ratio");
    for (i, ag) in inst.agents.iter().enumerate() {
        let ratio = ratios[i].as_ref().map_or("unbounded".to_string(), format_rational);
        let _ = writeln!(
            report,
            "{:<12} {:>14} {:>14} {:>10}",
            ag.id,
            format_rational(&costs[i]),
            format_rational(&shares[i]),
            ratio
        );
    }
    let _ = writeln!(
        report,
        "max ratio: {}",
        max_ratio.as_ref().map_or("unbounded".to_string(), format_rational)
    );
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, budget: u64, out: &mut Outcome) -> anyhow::Result<()> {
    let inst = load_instance(&a.instance, out)?;
    let file =
        AllocationFile::parse(&read(&a.allocation)?).with_context(|| format!("in {}", a.allocation.display()))?;
    let alloc = file.to_allocation(&inst)?;
    let alpha = match &a.alpha {
        Some(text) => rational(text, "--alpha")?,
        None => match file.metadata.get("max_ratio").and_then(Value::as_str) {
            Some(text) => rational(text, "max_ratio in the allocation metadata")?,
            None => bail!("no --alpha given and the allocation reports no max_ratio"),
        },
    };
    let use_estimates = file.metadata.get("wmms_source").and_then(Value::as_str) == Some("estimate");
    let shares = if use_estimates {
        let eps = file
            .metadata
            .pointer("/flags/eps")
            .and_then(Value::as_str)
            .ok_or_else(|| anyhow!("estimated shares without a recorded eps"))?;
        let eps = rational(eps, "recorded eps")?;
        (0..inst.n())
            .map(|i| estimate_wmms(&inst, i, &eps, budget).map(|e| e.value))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        exact_profile(&inst, budget)?.values
    };
    let report = verify_alpha(&inst, &alloc, &shares, &alpha)?;
    let _ = writeln!(out.stdout, "alpha: {}", format_rational(&alpha));
    let _ = writeln!(
        out.stdout,
        "{:<12} {:>14} {:>14} {:>10}  result",
        "agent", "cost", "wmms", "ratio"
    );
    for (ag, check) in inst.agents.iter().zip(&report.agents) {
        let ratio = check.ratio.as_ref().map_or("unbounded".to_string(), format_rational);
        let _ = writeln!(
            out.stdout,
            "{:<12} {:>14} {:>14} {:>10}  {}",
            ag.id,
            format_rational(&check.cost),
            format_rational(&check.wmms),
            ratio,
            if check.pass { "pass" } else { "FAIL" }
        );
    }
    let _ = writeln!(out.stdout, "{}", if report.pass { "PASS" } else { "FAIL" });
    if !report.pass {
        out.code = EXIT_FAIL;
    }
    Ok(())
}

fn cmd_gen(g: &GenCommand, budget: u64, out: &mut Outcome) -> anyhow::Result<()> {
    match g {
        GenCommand::Table1 { eps, out: path } => {
            let inst = example_table1(&rational(eps, "--eps")?)?;
            emit(&instance_to_json(&inst), path.as_deref(), out)
        }
        GenCommand::Random {
            seed,
            n,
            m,
            zero_prob,
            out: path,
        } => {
            let spec = RandomSpec {
                zero_probability: *zero_prob,
                ..RandomSpec::default()
            };
            let inst = gen_random(*seed, *n, *m, &spec)?;
            emit(&instance_to_json(&inst), path.as_deref(), out)
        }
        GenCommand::Canonical {
            seed,
            n,
            m,
            mode,
            out: path,
        } => {
            let mode = match mode {
                TilingMode::Pipeline => CanonicalMode::Pipeline,
                TilingMode::Tiling => CanonicalMode::Tiling,
                TilingMode::Independent => CanonicalMode::IndependentTiling,
            };
            let (c, _) = gen_canonical(*seed, *n, *m, mode, budget)?;
            emit(&instance_to_json(c.instance()), path.as_deref(), out)
        }
        GenCommand::Lowerbound { k, out: path } => {
            let lb = gen_lower_bound(*k)?;
            let report = verify_lower_bound(&lb.grouped, &lb.certificates)?;
            emit(&grouped_to_json(&lb.grouped), path.as_deref(), out)?;
            let log = if path.is_some() {
                &mut out.stdout
            } else {
                &mut out.stderr
            };
            let _ = writeln!(
                log,
                "k = {k}: {} agents, {} items, chain bound {}",
                lb.grouped.agent_count(),
                lb.grouped.items.len(),
                if lb.chain_holds {
                    "holds"
                } else {
                    "does not hold (T_i sizes checked directly)"
                }
            );
            for c in &report.groups {
                let _ = writeln!(
                    log,
                    "group {}: w = {}  proportional = {}  certificate = {}  {}",
                    c.group + 1,
                    format_rational(&c.weight),
                    format_rational(&c.lower),
                    format_rational(&c.upper),
                    if c.pass { "closed" } else { "OPEN" }
                );
            }
            if !report.pass {
                out.code = EXIT_FAIL;
            }
            Ok(())
        }
    }
}
