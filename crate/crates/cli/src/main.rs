use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use tropsdp_core::bench::{benchmark, gen_random, phase_diagram, GenSpec, SweepOptions, BENCH_HEADER, DEFAULT_GRID, PHASE_HEADER};
use tropsdp_core::certify::{certificate_at_margin, verify_game_certificate, verify_pencil_certificate};
use tropsdp_core::exact::{solve_tmsdfp, Status, DEFAULT_POLICY_CAP};
use tropsdp_core::game::DEFAULT_DOMINION_CAP;
use tropsdp_core::io::{game_to_json, parse_game, parse_pencil, pencil_to_json, SCHEMAS};
use tropsdp_core::pencil::{NormalizeOutcome, Reduction};
use tropsdp_core::pipeline::{check_pencil, prepare, Prepared};
use tropsdp_core::shapley::Ergodicity;
use tropsdp_core::{
    affine_feasibility, analyze, chain_from_policies, format_rational, game_value_bruteforce,
    lift_description, metzlerize, normalize, parse_rational, Certificate, FeasibilityOptions, GameValue, Rational,
    StochGame, Verdict,
};

const EXIT_INFEASIBLE: u8 = 10;
const EXIT_INDETERMINATE: u8 = 20;

#[derive(Parser)]
#[command(name = "tropsdp", version, about = "Tropical Metzler semidefinite feasibility via stochastic mean payoff games")]
struct Cli {
    /// Worker threads for policy enumeration and sweeps.
    #[arg(long, global = true, env = "TROPSDP_THREADS")]
    threads: Option<usize>,
    /// Print the JSON and CSV formats and exit.
    #[arg(long)]
    schema: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Value iteration on a pencil, with a certificate.
    Check {
        input: String,
        #[command(flatten)]
        iter: IterArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exact game value and margin by policy enumeration.
    Exact {
        input: String,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// The game of a pencil, after normalization.
    Game {
        input: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exact value of a game file.
    SolveGame {
        input: String,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Metzler pencil whose spectrahedron projects onto the input's.
    Metzlerize {
        input: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Enforce the game assumptions, reporting each elimination.
    Normalize {
        input: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Random dense Metzler pencil.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Denominator of the modulus grid.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Feasible ratio of random instances over a grid of sizes (CSV).
    Phase {
        /// Values of n: "10", "2,5,8" or "2..40".
        #[arg(long)]
        n: String,
        #[arg(long)]
        m: String,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Timing table of value iteration on random instances (CSV).
    Bench {
        /// Sizes as "n:m" pairs, e.g. "50:10,1000:100".
        #[arg(long)]
        sizes: String,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Produce a certificate for a pencil, or check one with --check.
    Certify {
        /// Pencil to certify.
        input: Option<String>,
        /// Certificate file to verify.
        #[arg(long, requires = "target")]
        check: Option<String>,
        #[arg(long, group = "target")]
        pencil: Option<String>,
        #[arg(long, group = "target")]
        game: Option<String>,
        /// Positive margin for the certificate; the default certifies at
        /// the margin found by value iteration.
        #[arg(long)]
        lambda: Option<String>,
        #[command(flatten)]
        iter: IterArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Feasibility of an affine pencil (matrix 1 is the constant term).
    Affine {
        input: String,
        /// 1-based variables without a sign constraint, e.g. "2,3".
        #[arg(long, value_delimiter = ',')]
        sign_free: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_DOMINION_CAP)]
        cap: usize,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args)]
struct OutArg {
    /// Output file, `-` for stdout.
    #[arg(short, long, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct IterArgs {
    /// Precision, as "p/q" or a decimal.
    #[arg(long, default_value = "1/100000000")]
    eps: String,
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: u64,
    /// Run value iteration in exact rationals.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Print the optimal policies in words on stderr.
    #[arg(long)]
    policies: bool,
    /// Write the Markov chain analysis of the optimal pair to this file.
    #[arg(long)]
    dump_chain: Option<PathBuf>,
    /// Largest number of policy pairs to enumerate.
    #[arg(long, default_value_t = DEFAULT_POLICY_CAP)]
    cap: u128,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value = "1/100000000")]
    eps: String,
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: u64,
    #[arg(long)]
    exact: bool,
    /// Zero the time column so that output is reproducible.
    #[arg(long)]
    no_timing: bool,
}

impl IterArgs {
    fn options(&self) -> Result<FeasibilityOptions> {
        if self.max_iters == 0 {
            bail!("--max-iters must be at least 1");
        }
        Ok(FeasibilityOptions { epsilon: epsilon(&self.eps)?, max_iters: self.max_iters, exact: self.exact })
    }
}

impl SweepArgs {
    fn options(&self) -> Result<SweepOptions> {
        if self.max_iters == 0 {
            bail!("--max-iters must be at least 1");
        }
        if self.samples == 0 {
            bail!("--samples must be at least 1");
        }
        Ok(SweepOptions {
            samples: self.samples,
            epsilon: epsilon(&self.eps)?,
            max_iters: self.max_iters,
            seed: self.seed,
            grid: self.grid,
            exact: self.exact,
            timing: !self.no_timing,
        })
    }
}

fn epsilon(text: &str) -> Result<Rational> {
    let eps = parse_rational(text).with_context(|| format!("bad --eps {text:?}"))?;
    if eps <= Rational::from_integer(0.into()) {
        bail!("--eps must be positive");
    }
    Ok(eps)
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text).context("reading stdin")?;
        Ok(text)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn write_output(path: &str, text: &str) -> Result<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    if path == "-" {
        io::stdout().write_all(text.as_bytes()).context("writing stdout")
    } else {
        fs::write(path, text).with_context(|| format!("writing {path}"))
    }
}

fn write_json(path: &str, value: &Value) -> Result<()> {
    write_output(path, &serde_json::to_string_pretty(value)?)
}

fn load_pencil(path: &str) -> Result<tropsdp_core::Pencil> {
    parse_pencil(&read_input(path)?).with_context(|| format!("parsing pencil {path}"))
}

fn load_game(path: &str) -> Result<StochGame> {
    parse_game(&read_input(path)?).with_context(|| format!("parsing game {path}"))
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|k| k + 1).collect()
}

fn reduction_json(r: &Reduction) -> Value {
    match r {
        Reduction::NegativeDiagonal { row, variables } => {
            json!({"rule": "negative_diagonal", "row": row + 1, "variables": one_based(variables)})
        }
        Reduction::EmptyRow { row } => json!({"rule": "empty_row", "row": row + 1}),
        Reduction::UnboundedOffDiagonal { row, variables } => {
            json!({"rule": "unbounded_off_diagonal", "row": row + 1, "variables": one_based(variables)})
        }
    }
}

fn trace_json(trace: &[Reduction]) -> Value {
    Value::Array(trace.iter().map(reduction_json).collect())
}

fn parse_list(text: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("empty range {text:?}");
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().with_context(|| format!("bad size {s:?}"))).collect()
}

fn parse_sizes(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let (n, m) = s.split_once(':').ok_or_else(|| anyhow!("size {s:?} is not n:m"))?;
            Ok((n.trim().parse()?, m.trim().parse()?))
        })
        .collect()
}

fn cpu_model() -> String {
    fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown".into())
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Feasible => 0,
        Verdict::Infeasible => EXIT_INFEASIBLE,
        Verdict::Indeterminate => EXIT_INDETERMINATE,
    }
}

fn solve_outputs(g: &StochGame, value: &GameValue, args: &SolveArgs) -> Result<()> {
    if args.policies {
        for line in value.optimal_pair.describe(g) {
            eprintln!("{line}");
        }
    }
    if let Some(path) = &args.dump_chain {
        let chain = chain_from_policies(g, &value.optimal_pair)?;
        let dump = serde_json::to_string_pretty(&analyze(&chain).to_json())?;
        fs::write(path, dump + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    if cli.schema {
        print!("{SCHEMAS}");
        return Ok(0);
    }
    let Some(command) = cli.command else {
        bail!("no subcommand given; see --help");
    };
    match command {
        Command::Check { input, iter, out } => {
            let p = load_pencil(&input)?;
            let check = check_pencil(&p, &iter.options()?)?;
            let mut value = serde_json::to_value(&check.report)?;
            value["ergodicity"] = serde_json::to_value(check.ergodicity)?;
            value["reductions"] = trace_json(&check.trace);
            value["certificate"] = serde_json::to_value(&check.certificate)?;
            write_json(&out.output, &value)?;
            if check.report.verdict == Verdict::Indeterminate {
                eprintln!("iteration cap reached: degenerate or near-degenerate instance, try `tropsdp exact`");
            } else if check.ergodicity == Ergodicity::Unknown && check.report.iterations > 0 {
                eprintln!("verdict assumes the game value does not depend on the initial state");
            }
            Ok(verdict_code(check.report.verdict))
        }
        Command::Exact { input, solve, out } => {
            let p = load_pencil(&input)?;
            let sol = solve_tmsdfp(&p, solve.cap)?;
            let value = match (&sol.value, &sol.game) {
                (Some(v), Some(g)) => {
                    solve_outputs(g, v, &solve)?;
                    v.to_json(g)
                }
                _ => Value::Null,
            };
            let status = match sol.status {
                Status::Nontrivial => "nontrivial",
                Status::Trivial => "trivial",
            };
            write_json(
                &out.output,
                &json!({
                    "status": status,
                    "margin": sol.margin.to_json(),
                    "value": value,
                    "variables": one_based(&sol.variables),
                    "reductions": trace_json(&sol.trace),
                }),
            )?;
            Ok(if sol.status == Status::Nontrivial { 0 } else { EXIT_INFEASIBLE })
        }
        Command::Game { input, out } => {
            let p = load_pencil(&input)?;
            match prepare(&p)?.prepared {
                Prepared::Game { reduced, game } => {
                    if reduced.variables.len() != p.n() || reduced.rows.len() != p.m() {
                        eprintln!(
                            "normalization kept variables {:?} and rows {:?}",
                            one_based(&reduced.variables),
                            one_based(&reduced.rows)
                        );
                    }
                    write_output(&out.output, &game_to_json(&game))?;
                    Ok(0)
                }
                Prepared::Nontrivial { variable } => {
                    bail!("matrix {} has no negative entry: the problem is feasible and has no game", variable + 1)
                }
                Prepared::Trivial => bail!("normalization eliminates every variable: the problem is infeasible"),
            }
        }
        Command::SolveGame { input, solve, out } => {
            let g = load_game(&input)?;
            let value = game_value_bruteforce(&g, solve.cap)?;
            solve_outputs(&g, &value, &solve)?;
            write_json(&out.output, &value.to_json(&g))?;
            let nonneg = value.max_chi() >= &Rational::from_integer(0.into());
            Ok(if nonneg { 0 } else { EXIT_INFEASIBLE })
        }
        Command::Metzlerize { input, out } => {
            let p = load_pencil(&input)?;
            let lift = metzlerize(&p);
            write_output(&out.output, &pencil_to_json(&lift.pencil))?;
            Ok(0)
        }
        Command::Normalize { input, out } => {
            let p = load_pencil(&input)?;
            let norm = normalize(&p)?;
            let mut value = json!({"reductions": trace_json(&norm.trace)});
            match norm.outcome {
                NormalizeOutcome::Nontrivial { variable } => {
                    value["outcome"] = "nontrivial".into();
                    value["variable"] = (variable + 1).into();
                }
                NormalizeOutcome::Trivial => value["outcome"] = "trivial".into(),
                NormalizeOutcome::Reduced(reduced) => {
                    value["outcome"] = "reduced".into();
                    value["variables"] = json!(one_based(&reduced.variables));
                    value["rows"] = json!(one_based(&reduced.rows));
                    value["pencil"] = serde_json::from_str(&pencil_to_json(&reduced.pencil))?;
                }
            }
            write_json(&out.output, &value)?;
            Ok(0)
        }
        Command::Gen { n, m, seed, grid, out } => {
            let inst = gen_random(&GenSpec { n, m, seed, grid })?;
            write_output(&out.output, &pencil_to_json(&inst.to_pencil()))?;
            Ok(0)
        }
        Command::Phase { n, m, sweep, out } => {
            let rows = phase_diagram(&parse_list(&n)?, &parse_list(&m)?, &sweep.options()?)?;
            let mut csv = String::from(PHASE_HEADER);
            for row in rows {
                csv.push('\n');
                csv.push_str(&row.csv_line());
            }
            write_output(&out.output, &csv)?;
            Ok(0)
        }
        Command::Bench { sizes, sweep, out } => {
            let opts = sweep.options()?;
            let rows = benchmark(&parse_sizes(&sizes)?, &opts)?;
            let mut csv = format!(
                "# cpu: {}\n# threads: {}\n# epsilon: {}, median of 3 runs per instance\n{BENCH_HEADER}",
                cpu_model(),
                rayon::current_num_threads(),
                format_rational(&opts.epsilon)
            );
            for row in rows {
                csv.push('\n');
                csv.push_str(&row.csv_line());
            }
            write_output(&out.output, &csv)?;
            Ok(0)
        }
        Command::Certify { input, check, pencil, game, lambda, iter, out } => {
            if let Some(cert_path) = check {
                let cert: Certificate =
                    serde_json::from_str(&read_input(&cert_path)?).context("parsing certificate")?;
                let result = match (pencil, game) {
                    (Some(p), _) => verify_pencil_certificate(&load_pencil(&p)?, &cert)?,
                    (_, Some(g)) => verify_game_certificate(&load_game(&g)?, &cert)?,
                    _ => bail!("--check needs --pencil or --game"),
                };
                write_json(&out.output, &serde_json::to_value(&result)?)?;
                if !result.valid {
                    eprintln!("certificate rejected: {}", result.reason);
                    return Ok(1);
                }
                return Ok(0);
            }
            let input = input.ok_or_else(|| anyhow!("certify needs a pencil, or --check with --pencil/--game"))?;
            let p = load_pencil(&input)?;
            let opts = iter.options()?;
            let Some(lambda) = lambda else {
                let checked = check_pencil(&p, &opts)?;
                write_json(&out.output, &serde_json::to_value(&checked.certificate)?)?;
                return Ok(verdict_code(checked.report.verdict));
            };
            let lambda = parse_rational(&lambda).context("bad --lambda")?;
            let prep = prepare(&p)?;
            let Prepared::Game { reduced, game } = prep.prepared else {
                bail!("normalization decides this pencil without a game; use `tropsdp check`");
            };
            let Some(cert) = certificate_at_margin(&game, &lambda, &opts)? else {
                eprintln!("no point found with margin {}", format_rational(&lambda));
                write_json(&out.output, &Value::Null)?;
                return Ok(EXIT_INFEASIBLE);
            };
            let cert = Certificate { vector: reduced.lift_point(p.n(), &cert.vector), ..cert };
            let lift = lift_description(&p, &cert.vector, &lambda)?;
            write_json(
                &out.output,
                &json!({
                    "certificate": cert,
                    "lift": lift.describe(),
                    "threshold": {"base": lift.threshold.base, "exponent": format_rational(&lift.threshold.exponent)},
                }),
            )?;
            Ok(0)
        }
        Command::Affine { input, sign_free, cap, out } => {
            let p = load_pencil(&input)?;
            if sign_free.contains(&0) {
                bail!("--sign-free indices are 1-based");
            }
            let sign_free: BTreeSet<usize> = sign_free.iter().map(|k| k - 1).collect();
            let outcome = affine_feasibility(&p, &sign_free, cap)?;
            let dominions: Vec<Vec<usize>> = outcome.winning_dominions.iter().map(|d| one_based(d)).collect();
            write_json(&out.output, &json!({"feasible": outcome.feasible, "winning_dominions": dominions}))?;
            Ok(if outcome.feasible { 0 } else { EXIT_INFEASIBLE })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
