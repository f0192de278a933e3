use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lbdd::bench::{self, BenchConfig};
use lbdd::generate::{generate, CapacityPolicy, CostMode, GeneratorConfig, PenaltyPolicy};
use lbdd::io::{
    parse_allotment, parse_events, parse_instance, render_event, render_instance, render_result,
    Event, Verdict,
};
use lbdd::oracle::{exhaustive_solve_limited, OracleError};
use lbdd::{
    reduce_no_overload, solve, solve_hard_capacity, verify_optimal, Allotment, CenterPenalty,
    Certificate, Engine, ExtCost, Mode, ProblemInstance,
};

/// Exhaustive cross-checks in `dynamic --check-each` are skipped above this
/// many enumeration leaves.
const CHECK_EACH_LIMIT: u64 = 200_000;

#[derive(Parser)]
#[command(
    name = "lbdd",
    version,
    about = "Optimal demand allotment with overload penalties"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the result document.
    Solve {
        instance: PathBuf,
        /// Treat every capacity as a hard limit; demands that do not fit
        /// are left unassigned.
        #[arg(long)]
        hard_capacity: bool,
        /// Check the result for negative loops; exit 3 if one is found.
        #[arg(long)]
        certify: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check an allotment (a result document) for optimality.
    Verify {
        instance: PathBuf,
        allotment: PathBuf,
    },
    /// Load an instance, then apply an event stream, printing the objective
    /// after each event.
    Dynamic {
        instance: PathBuf,
        events: PathBuf,
        /// Certify the state after every event, and compare it with
        /// exhaustive enumeration when that is small enough.
        #[arg(long)]
        check_each: bool,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long, short)]
        centers: usize,
        #[arg(long, short)]
        demands: usize,
        /// `uniform:<max_cost>` or `planar:<width>`.
        #[arg(long, default_value = "uniform:100")]
        costs: CostMode,
        /// `tight`, `balanced`, `loose` or `fixed:<c>`.
        #[arg(long, default_value = "balanced")]
        capacity: CapacityPolicy,
        /// `constant:<v>`, `linear:<base>:<step>`, `table` or `mixed`.
        #[arg(long, default_value = "mixed")]
        penalty: PenaltyPolicy,
        #[arg(long)]
        hard_capacity: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Time whole solves over a grid of center and demand counts.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "4")]
        centers: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000")]
        demands: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long, default_value = "uniform:1000")]
        costs: CostMode,
        #[arg(long, default_value = "tight")]
        capacity: CapacityPolicy,
        #[arg(long, default_value = "mixed")]
        penalty: PenaltyPolicy,
    },
}

enum Failure {
    /// Bad input, validation or IO error.
    Input(String),
    /// A result failed its optimality check.
    Certificate(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        match self {
            Failure::Input(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
            Failure::Certificate(m) => {
                eprintln!("certificate failure: {m}");
                ExitCode::from(3)
            }
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<ProblemInstance, Failure> {
    parse_instance(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn as_hard(instance: &ProblemInstance) -> ProblemInstance {
    let mut hard = instance.clone();
    hard.mode = Mode::HardCapacity;
    for c in &mut hard.centers {
        c.penalty = CenterPenalty::Infinite;
    }
    hard
}

fn certify(instance: &ProblemInstance, allotment: &Allotment) -> Result<Verdict, Failure> {
    match verify_optimal(instance, allotment).map_err(input)? {
        Certificate::Optimal => Ok(Verdict::Optimal),
        Certificate::NotOptimal(lp) => Err(Failure::Certificate(format!("negative loop {lp}"))),
    }
}

fn cmd_solve(
    path: &Path,
    hard_capacity: bool,
    check: bool,
    output: Option<&Path>,
) -> Result<(), Failure> {
    let mut instance = load_instance(path)?;
    if hard_capacity && instance.mode != Mode::HardCapacity {
        instance = as_hard(&instance);
    }
    let text = if instance.mode == Mode::HardCapacity {
        let sol = solve_hard_capacity(&instance).map_err(input)?;
        let verdict = if check {
            let reduced = reduce_no_overload(&instance).map_err(input)?;
            let overflow = instance.center_count();
            let mut a = Allotment::new(reduced.center_count(), instance.demand_count());
            for (d, c) in sol.assignment.iter().enumerate() {
                a.assign(d, c.unwrap_or(overflow));
            }
            certify(&reduced, &a)?
        } else {
            Verdict::Unchecked
        };
        render_result(
            &instance,
            &sol.assignment,
            ExtCost::Finite(sol.objective),
            verdict,
        )
    } else {
        let sol = solve(&instance).map_err(input)?;
        let verdict = if check {
            certify(&instance, &sol.allotment)?
        } else {
            Verdict::Unchecked
        };
        let assignment: Vec<_> = (0..instance.demand_count())
            .map(|d| sol.allotment.center_of(d))
            .collect();
        render_result(&instance, &assignment, sol.objective, verdict)
    };
    emit(&text, output)
}

fn cmd_verify(instance_path: &Path, allotment_path: &Path) -> Result<(), Failure> {
    let instance = load_instance(instance_path)?;
    if instance.mode == Mode::HardCapacity {
        return Err(Failure::Input(
            "verify expects an overload_allowed instance".into(),
        ));
    }
    let allotment = parse_allotment(
        &read(allotment_path)?,
        instance.center_count(),
        instance.demand_count(),
    )
    .map_err(|e| Failure::Input(format!("{}: {e}", allotment_path.display())))?;
    match verify_optimal(&instance, &allotment).map_err(input)? {
        Certificate::Optimal => {
            println!("OPTIMAL");
            Ok(())
        }
        Certificate::NotOptimal(lp) => {
            println!("NOT_OPTIMAL");
            println!("{lp}");
            Err(Failure::Certificate(format!(
                "negative loop of cost {}",
                lp.cost()
            )))
        }
    }
}

/// The engine state as a standalone instance and a complete allotment over
/// its active demands.
fn snapshot(engine: &Engine) -> (ProblemInstance, Allotment) {
    let instance = engine.current_instance();
    let mut allotment = Allotment::new(instance.center_count(), instance.demand_count());
    for (slot, d) in engine.active_demands().into_iter().enumerate() {
        allotment.assign(
            slot,
            engine
                .allotment()
                .center_of(d)
                .expect("active demand is placed"),
        );
    }
    (instance, allotment)
}

fn check_state(engine: &Engine) -> Result<(), Failure> {
    let (instance, allotment) = snapshot(engine);
    certify(&instance, &allotment)?;
    match exhaustive_solve_limited(&instance, CHECK_EACH_LIMIT) {
        Ok(best) if engine.objective() != ExtCost::Finite(best.objective) => {
            Err(Failure::Certificate(format!(
                "objective {} differs from enumerated optimum {}",
                engine.objective(),
                best.objective
            )))
        }
        Ok(_) | Err(OracleError::TooLarge { .. }) => Ok(()),
        Err(e) => Err(Failure::Certificate(e.to_string())),
    }
}

fn cmd_dynamic(instance_path: &Path, events_path: &Path, check_each: bool) -> Result<(), Failure> {
    let instance = load_instance(instance_path)?;
    let events = parse_events(&read(events_path)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", events_path.display())))?;
    let mut engine = Engine::new(&instance);
    for d in 0..instance.demand_count() {
        engine.insert_demand(instance.cost.row(d)).map_err(input)?;
    }
    println!("initial objective {}", engine.objective());
    if check_each {
        check_state(&engine)?;
    }
    for (line, event) in &events {
        let result = match event {
            Event::Insert(row) => engine.insert_demand(row).map(|d| format!(" demand {d}")),
            Event::Remove(d) => engine.remove_demand(*d).map(|_| String::new()),
            Event::Capacity(c, delta) => engine.change_capacity(*c, *delta).map(|_| String::new()),
            Event::Shift(c, dir) => engine.shift_penalty(*c, *dir).map(|_| String::new()),
        };
        let note = result
            .map_err(|e| Failure::Input(format!("{}: line {line}: {e}", events_path.display())))?;
        println!(
            "{}{note} objective {}",
            render_event(event),
            engine.objective()
        );
        if check_each {
            check_state(&engine)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            instance,
            hard_capacity,
            certify,
            output,
        } => cmd_solve(&instance, hard_capacity, certify, output.as_deref()),
        Command::Verify {
            instance,
            allotment,
        } => cmd_verify(&instance, &allotment),
        Command::Dynamic {
            instance,
            events,
            check_each,
        } => cmd_dynamic(&instance, &events, check_each),
        Command::Gen {
            centers,
            demands,
            costs,
            capacity,
            penalty,
            hard_capacity,
            seed,
            output,
        } => {
            if centers == 0 {
                return Err(Failure::Input("need at least one center".into()));
            }
            let instance = generate(&GeneratorConfig {
                centers,
                demands,
                costs,
                capacity,
                penalty,
                mode: if hard_capacity {
                    Mode::HardCapacity
                } else {
                    Mode::OverloadAllowed
                },
                seed,
            });
            emit(&render_instance(&instance), output.as_deref())
        }
        Command::Bench {
            centers,
            demands,
            seed,
            repetitions,
            costs,
            capacity,
            penalty,
        } => {
            if centers.contains(&0) {
                return Err(Failure::Input("center counts must be positive".into()));
            }
            let rows = bench::run(&BenchConfig {
                centers,
                demands,
                seed,
                repetitions,
                costs,
                capacity,
                penalty,
            });
            print!("{}", bench::render_rows(&rows));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
