use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qsat_core::classical::{parse_dimacs, solve_classical};
use qsat_core::field::{from_sc, Sc};
use qsat_core::instance::random::{random_instance, RandomSpec, RankDist};
use qsat_core::instance::{parse_instance, parse_ksat, write_instance, write_ksat, KSatInstance, QSatInstance};
use qsat_core::oracle::{brute_satisfiable, min_eigenvalue_float, verify_state};
use qsat_core::reduction::{emit_hamiltonian, parse_circuit};
use qsat_core::solver::{solve, Outcome};
use qsat_core::Scalar;

/// Exact quantum 2-SAT solver and circuit-to-4-SAT reducer.
#[derive(Parser)]
#[command(name = "qsat", version)]
struct Cli {
    /// Print machine-readable JSON instead of a summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a 2-local instance and find a satisfying state.
    Solve {
        instance: PathBuf,
        /// Write the satisfying state (or the unsat verdict) here.
        #[arg(long)]
        assignment: Option<PathBuf>,
        /// Write the reduction transcript here.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Check exactly that a state is annihilated by every constraint.
    Verify { instance: PathBuf, state: PathBuf },
    /// Brute-force nullity or smallest eigenvalue of the summed projectors.
    Oracle {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
    },
    /// Compile a verifier circuit to a k-local instance.
    Reduce {
        circuit: PathBuf,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(4..=5))]
        k: u8,
        #[arg(short, long)]
        output: PathBuf,
        /// Merge terms with identical support into one span.
        #[arg(long)]
        merge: bool,
    },
    /// Solve a classical 2-CNF in DIMACS format.
    Classical { cnf: PathBuf },
    /// Generate a seeded random 2-local instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        pairs: usize,
        /// `uniform`, a single rank, or weights like `1:6,2:2,3:1,4:0.25`.
        #[arg(long, default_value = "uniform")]
        rank_dist: RankDist,
        #[arg(long)]
        seed: u64,
        /// Draw every pair from covectors orthogonal to a hidden product state.
        #[arg(long)]
        planted: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

enum Loaded {
    Two(QSatInstance),
    K(KSatInstance),
}

impl Loaded {
    fn n(&self) -> usize {
        match self {
            Loaded::Two(i) => i.n(),
            Loaded::K(i) => i.n(),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json(path: &Path) -> Result<Value> {
    serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// k-SAT files are recognised by their `"k"` field.
fn load_instance(path: &Path) -> Result<Loaded> {
    let text = read(path)?;
    let is_k = serde_json::from_str::<Value>(&text)
        .with_context(|| format!("parsing {}", path.display()))?
        .get("k")
        .is_some();
    let ctx = || format!("loading {}", path.display());
    Ok(if is_k {
        Loaded::K(parse_ksat(&text).with_context(ctx)?.0)
    } else {
        Loaded::Two(parse_instance(&text).with_context(ctx)?)
    })
}

fn load_two(path: &Path) -> Result<QSatInstance> {
    match load_instance(path)? {
        Loaded::Two(i) => Ok(i),
        Loaded::K(_) => bail!("{} is a k-local instance; solve needs a 2-local one", path.display()),
    }
}

enum StateArg {
    Outcome(Outcome),
    Dense(Vec<Scalar>),
}

/// Either a solver assignment file or `{"amplitudes": [...]}`.
fn load_state(path: &Path) -> Result<StateArg> {
    let v = read_json(path)?;
    if let Some(a) = v.get("amplitudes") {
        let amps: Vec<Sc> =
            serde_json::from_value(a.clone()).with_context(|| format!("amplitudes in {}", path.display()))?;
        return Ok(StateArg::Dense(from_sc(amps)));
    }
    Ok(StateArg::Outcome(
        Outcome::from_json(&v).with_context(|| format!("loading state {}", path.display()))?,
    ))
}

fn print(cli_json: bool, summary: &str, data: Value) {
    if cli_json {
        println!("{data}");
    } else {
        println!("{summary}");
    }
}

fn code(ok: bool) -> u8 {
    if ok {
        0
    } else {
        1
    }
}

fn run(cli: Cli) -> Result<u8> {
    let js = cli.json;
    match cli.command {
        Command::Solve {
            instance,
            assignment,
            transcript,
        } => {
            let inst = load_two(&instance)?;
            let res = solve(&inst);
            let out = res.outcome.to_json();
            if let Some(p) = assignment {
                write(&p, &format!("{out:#}\n"))?;
            }
            if let Some(p) = transcript {
                write(&p, &format!("{:#}\n", res.transcript.to_json()))?;
            }
            let sat = res.outcome.is_sat();
            let s = res.stats;
            let data = json!({
                "outcome": out,
                "stats": {
                    "reductions": s.reductions,
                    "closure_rounds": s.closure_rounds,
                    "combine_attempts": s.combine_attempts,
                    "max_round_attempts": s.max_round_attempts,
                },
            });
            print(js, if sat { "SAT" } else { "UNSAT" }, data);
            Ok(code(sat))
        }
        Command::Verify { instance, state } => {
            let inst = load_instance(&instance)?;
            let st = load_state(&state)?;
            if let StateArg::Outcome(Outcome::Unsat) = st {
                bail!("{} holds an unsat verdict, not a state", state.display());
            }
            if let StateArg::Outcome(o) = &st {
                if outcome_n(o) != inst.n() {
                    bail!("state has {} qubits, instance has {}", outcome_n(o), inst.n());
                }
            }
            let ok = match (&inst, st) {
                (Loaded::Two(i), StateArg::Outcome(o)) => o.annihilates(i),
                (Loaded::Two(i), StateArg::Dense(psi)) => verify_state(i, &psi)?,
                (Loaded::K(i), StateArg::Outcome(o)) => verify_state(i, &o.dense_state().expect("sat outcome"))?,
                (Loaded::K(i), StateArg::Dense(psi)) => verify_state(i, &psi)?,
            };
            print(
                js,
                if ok { "VERIFIED" } else { "NOT VERIFIED" },
                json!({"verified": ok}),
            );
            Ok(code(ok))
        }
        Command::Oracle { instance, mode } => {
            let inst = load_instance(&instance)?;
            match mode {
                Mode::Exact => {
                    let d = match &inst {
                        Loaded::Two(i) => brute_satisfiable(i)?,
                        Loaded::K(i) => brute_satisfiable(i)?,
                    };
                    let nullity = d.nullity();
                    print(
                        js,
                        &format!("nullity {nullity}"),
                        json!({"n": inst.n(), "nullity": nullity, "sat": d.is_sat()}),
                    );
                    Ok(code(d.is_sat()))
                }
                Mode::Float => {
                    let lam = match &inst {
                        Loaded::Two(i) => min_eigenvalue_float(i)?,
                        Loaded::K(i) => min_eigenvalue_float(i)?,
                    };
                    print(
                        js,
                        &format!("lambda_min {lam:.6e}"),
                        json!({"n": inst.n(), "lambda_min": lam}),
                    );
                    Ok(0)
                }
            }
        }
        Command::Reduce {
            circuit,
            k,
            output,
            merge,
        } => {
            let c = parse_circuit(&read(&circuit)?).with_context(|| format!("loading {}", circuit.display()))?;
            let e = emit_hamiltonian(&c, k as usize)?;
            let mut header = e.header();
            let inst = if merge {
                header["merged"] = json!(true);
                header.as_object_mut().expect("header is an object").remove("terms");
                e.instance.merged()
            } else {
                e.instance.clone()
            };
            write(&output, &write_ksat(&inst, Some(header)))?;
            let terms = inst.terms().len();
            print(
                js,
                &format!(
                    "L {} N {} qubits {} terms {} -> {}",
                    e.l,
                    e.n,
                    e.instance.n(),
                    terms,
                    output.display()
                ),
                json!({"L": e.l, "N": e.n, "qubits": e.instance.n(), "k": k, "terms": terms}),
            );
            Ok(0)
        }
        Command::Classical { cnf } => {
            let f = parse_dimacs(&read(&cnf)?).with_context(|| format!("loading {}", cnf.display()))?;
            let res = solve_classical(&f);
            match &res.assignment {
                Some(x) => {
                    let lits: Vec<String> = x
                        .iter()
                        .enumerate()
                        .map(|(i, &b)| if b { format!("{}", i + 1) } else { format!("-{}", i + 1) })
                        .collect();
                    let summary = format!("SAT\nv {} 0", lits.join(" "));
                    print(js, &summary, json!({"status": "sat", "assignment": x}));
                }
                None => print(js, "UNSAT", json!({"status": "unsat"})),
            }
            Ok(code(res.assignment.is_some()))
        }
        Command::Gen {
            n,
            pairs,
            rank_dist,
            seed,
            planted,
            output,
        } => {
            let max = n * n.saturating_sub(1) / 2;
            if pairs > max {
                bail!("{pairs} pairs requested but only {max} exist on {n} qubits");
            }
            let spec = RandomSpec::new(n, pairs, seed).with_ranks(rank_dist).planted(planted);
            let text = write_instance(&random_instance(&spec));
            match output {
                Some(p) => write(&p, &text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
    }
}

fn outcome_n(o: &Outcome) -> usize {
    match o {
        Outcome::Unsat => 0,
        Outcome::SatProduct(s) => s.len(),
        Outcome::SatState(f) => f.n(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
