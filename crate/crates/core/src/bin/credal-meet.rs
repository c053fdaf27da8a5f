use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use credal_meet::credal::{CredalMatrix, CredalModel, Selection};
use credal_meet::error::Error;
use credal_meet::io::{
    load_model, ChoiceEntry, ClassificationEntry, Diagnostics, ModelFile, ResultFile,
    SelectionFile, ValueEntry,
};
use credal_meet::meeting::{
    build_product_space, meet, Belief, JointModel, JointSelection, MeetConfig, MeetingResult,
    ProductMode, ProductSpace,
};
use credal_meet::precise::{precise_hitting, simulate_hitting, TransitionMatrix};
use credal_meet::reachability::{classify, Classification};
use credal_meet::selfcheck::run_selfcheck;
use credal_meet::solver::{SolverOptions, SolverRegistry, DEFAULT_SOLVER};
use credal_meet::{ExtendedValue, Sense, StateSet};

const EXIT_VALIDATION: u8 = 1;
const EXIT_NONCONVERGENCE: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

/// Upper and lower expected hitting and meeting times for imprecise Markov
/// chains.
#[derive(Parser, Debug)]
#[command(name = "credal-meet", version)]
struct Cli {
    /// Also write the result as JSON to this file.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,

    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = "CREDAL_MEET_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model file and list every problem found.
    Validate { model: PathBuf },
    /// Split states into target, finite, absorbing and unsafe.
    Classify {
        model: PathBuf,
        /// Target states (comma separated). Required unless --agents is given.
        #[arg(long, value_delimiter = ',')]
        target: Vec<String>,
        #[arg(long, default_value = "upper")]
        sense: SenseArg,
        /// Classify the joint chain of this many agents, with the diagonal as target.
        #[arg(long)]
        agents: Option<usize>,
        #[arg(long, default_value = "quotient")]
        mode: ModeArg,
    },
    /// Upper or lower expected hitting times of a target set.
    Hit {
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<String>,
        #[arg(long, default_value = "upper")]
        sense: SenseArg,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Expected meeting times of several agents sharing the model.
    Meet {
        model: PathBuf,
        #[arg(long, default_value_t = 2)]
        agents: usize,
        #[arg(long, default_value = "vacuous")]
        belief: BeliefArg,
        #[arg(long, default_value = "upper")]
        sense: SenseArg,
        /// Weight of the vacuous component for --belief mixture.
        #[arg(long)]
        epsilon: Option<f64>,
        /// JSON selection file for degenerate and mixture beliefs.
        #[arg(long, value_name = "FILE")]
        selection: Option<PathBuf>,
        #[arg(long, default_value = "quotient")]
        mode: ModeArg,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Monte Carlo estimate of a hitting time under one selection.
    Simulate {
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<String>,
        #[arg(long)]
        start: String,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Paths still running after this many steps are censored.
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
        /// JSON selection file; unlisted states use vertex 0.
        #[arg(long, value_name = "FILE")]
        selection: Option<PathBuf>,
    },
    /// Run the built-in worked examples.
    Selfcheck,
    /// List the registered hitting-time solvers.
    Solvers,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, default_value = DEFAULT_SOLVER)]
    solver: String,
    /// Convergence tolerance (solver default if omitted).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            record_history: false,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SenseArg {
    Upper,
    Lower,
}

impl From<SenseArg> for Sense {
    fn from(s: SenseArg) -> Sense {
        match s {
            SenseArg::Upper => Sense::Upper,
            SenseArg::Lower => Sense::Lower,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Full,
    Quotient,
}

impl From<ModeArg> for ProductMode {
    fn from(m: ModeArg) -> ProductMode {
        match m {
            ModeArg::Full => ProductMode::Full,
            ModeArg::Quotient => ProductMode::Quotient,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BeliefArg {
    Degenerate,
    Vacuous,
    Mixture,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
            Error::Singular(_) => EXIT_INTERNAL,
            Error::InvalidArgument(_)
            | Error::UnknownSolver(_)
            | Error::UnknownState(_)
            | Error::EmptyTarget => EXIT_USAGE,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Anything that goes wrong while reading a model is a validation failure.
fn read_model(path: &Path) -> CliResult<CredalMatrix> {
    load_model(path).map_err(|e| Failure {
        code: EXIT_VALIDATION,
        message: e.to_string(),
    })
}

fn read_selection(path: &Path) -> CliResult<SelectionFile> {
    SelectionFile::load(path).map_err(|e| Failure {
        code: EXIT_VALIDATION,
        message: e.to_string(),
    })
}

fn target_set(model: &CredalMatrix, labels: &[String]) -> CliResult<StateSet> {
    if labels.is_empty() {
        return Err(Failure::usage("--target needs at least one state"));
    }
    let indices = labels
        .iter()
        .map(|l| model.space().index_of(l))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StateSet::from_indices(model.len(), indices))
}

fn fmt_value(v: ExtendedValue) -> String {
    if v.is_finite() {
        format!("{:.6}", v.get())
    } else {
        "inf".to_string()
    }
}

fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect();
        println!("{}", padded.join("  ").trim_end());
    };
    line(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    for row in rows {
        line(row);
    }
}

fn print_classification<M: CredalModel + ?Sized>(model: &M, c: &Classification) {
    let names = |s: &StateSet| {
        let v: Vec<String> = s.iter().map(|x| model.state_label(x)).collect();
        if v.is_empty() {
            "-".to_string()
        } else {
            v.join(" ")
        }
    };
    println!("sense      {}", c.sense);
    println!("target     {}", names(&c.target));
    println!("finite     {}", names(&c.finite));
    println!("absorbing  {}", names(&c.absorbing));
    println!("unsafe     {}", names(&c.unsafe_states));
}

fn emit(json: &Option<PathBuf>, file: ResultFile) -> CliResult {
    if let Some(path) = json {
        file.write(path).map_err(|e| Failure {
            code: EXIT_VALIDATION,
            message: format!("{}: {e}", path.display()),
        })?;
    }
    Ok(())
}

fn validate(path: &Path, json: &Option<PathBuf>) -> CliResult {
    let file = ModelFile::load(path).map_err(|e| Failure {
        code: EXIT_VALIDATION,
        message: e.to_string(),
    })?;
    match file.to_matrix() {
        Ok(model) => {
            let vertices: usize = model.rows().iter().map(|r| r.len()).sum();
            println!(
                "ok: {} states, {} vertices{}",
                model.len(),
                vertices,
                if model.is_precise() { " (precise)" } else { "" }
            );
            emit(
                json,
                ResultFile::new("validate", &model).parameter("model", path.display()),
            )
        }
        Err(Error::Validation(violations)) => {
            for v in &violations {
                println!("{v}");
            }
            if let Some(out) = json {
                // No valid model to hash; record the violations only.
                let text = serde_json::json!({
                    "schema_version": credal_meet::io::SCHEMA_VERSION,
                    "command": "validate",
                    "violations": violations,
                });
                std::fs::write(out, format!("{text:#}\n")).map_err(Error::from)?;
            }
            Err(Failure {
                code: EXIT_VALIDATION,
                message: format!("{} violation(s)", violations.len()),
            })
        }
        Err(e) => Err(Failure {
            code: EXIT_VALIDATION,
            message: e.to_string(),
        }),
    }
}

fn joint_labels(space: &ProductSpace) -> impl Fn(usize) -> Vec<String> + '_ {
    move |i| space.tuple_labels(i)
}

fn classify_cmd(
    path: &Path,
    target: &[String],
    sense: Sense,
    agents: Option<usize>,
    mode: ProductMode,
    json: &Option<PathBuf>,
) -> CliResult {
    let model = read_model(path)?;
    let mut file = ResultFile::new("classify", &model)
        .parameter("model", path.display())
        .parameter("sense", sense);
    match agents {
        Some(m) => {
            if !target.is_empty() {
                return Err(Failure::usage(
                    "--target and --agents are exclusive; with --agents the target is the diagonal",
                ));
            }
            let space = build_product_space(model.space(), m, mode)?;
            let joint = JointModel::new(&model, &space)?;
            let c = classify(&joint, space.diagonal(), sense)?;
            print_classification(&joint, &c);
            file = file.parameter("agents", m).parameter("mode", mode);
            file.classification = Some(ClassificationEntry::new(&c, joint_labels(&space)));
        }
        None => {
            let target = target_set(&model, target)?;
            let c = classify(&model, &target, sense)?;
            print_classification(&model, &c);
            file = file.parameter("target", labels_of(&model, &target));
            file.classification = Some(ClassificationEntry::new(&c, |x| {
                vec![model.space().label(x).to_string()]
            }));
        }
    }
    emit(json, file)
}

fn labels_of(model: &CredalMatrix, set: &StateSet) -> String {
    set.iter()
        .map(|x| model.space().label(x))
        .collect::<Vec<_>>()
        .join(",")
}

fn hit(
    path: &Path,
    target: &[String],
    sense: Sense,
    solver_args: &SolverArgs,
    json: &Option<PathBuf>,
) -> CliResult {
    let model = read_model(path)?;
    let target = target_set(&model, target)?;
    let registry = SolverRegistry::builtin();
    let solver = registry.get(&solver_args.solver)?;
    let r = solver.solve(&model, &target, sense, &solver_args.options())?;

    let rows: Vec<Vec<String>> = (0..model.len())
        .map(|x| {
            vec![
                model.space().label(x).to_string(),
                fmt_value(r.values[x]),
                r.selection.choice(x).to_string(),
            ]
        })
        .collect();
    print_table(&["state", &format!("{sense} h"), "vertex"], &rows);
    println!(
        "{}: {} iteration(s), residual {:.3e}",
        r.solver, r.iterations, r.residual
    );

    let mut file = ResultFile::new("hit", &model)
        .parameter("model", path.display())
        .parameter("target", labels_of(&model, &target))
        .parameter("sense", sense)
        .parameter("solver", r.solver);
    file = with_tuning(file, solver_args);
    file.values = (0..model.len())
        .map(|x| ValueEntry {
            state: vec![model.space().label(x).to_string()],
            value: r.values[x],
        })
        .collect();
    file.selections = SelectionFile::from_selection(&model, &r.selection).choices;
    file.classification = Some(ClassificationEntry::new(&r.classification, |x| {
        vec![model.space().label(x).to_string()]
    }));
    file.diagnostics = Some(Diagnostics {
        solver: r.solver.to_string(),
        iterations: r.iterations,
        residual: r.residual,
    });
    emit(json, file)
}

fn with_tuning(mut file: ResultFile, args: &SolverArgs) -> ResultFile {
    if let Some(tol) = args.tol {
        file = file.parameter("tol", tol);
    }
    if let Some(max_iter) = args.max_iter {
        file = file.parameter("max_iter", max_iter);
    }
    file
}

#[allow(clippy::too_many_arguments)]
fn meet_cmd(
    path: &Path,
    agents: usize,
    belief: BeliefArg,
    sense: Sense,
    epsilon: Option<f64>,
    selection: Option<&Path>,
    mode: ProductMode,
    solver_args: &SolverArgs,
    json: &Option<PathBuf>,
) -> CliResult {
    let model = read_model(path)?;
    // Validate the agent count and size before reading a selection against it.
    let space = build_product_space(model.space(), agents, mode)?;
    let joint_selection = match selection {
        Some(p) => read_selection(p)?.to_joint(&space)?,
        None => JointSelection::new(),
    };
    if selection.is_some() && matches!(belief, BeliefArg::Vacuous) {
        return Err(Failure::usage(
            "--selection has no effect with --belief vacuous",
        ));
    }
    let belief_value = match belief {
        BeliefArg::Degenerate => Belief::Degenerate(joint_selection),
        BeliefArg::Vacuous => Belief::Vacuous(sense),
        BeliefArg::Mixture => Belief::Mixture {
            epsilon: epsilon
                .ok_or_else(|| Failure::usage("--belief mixture requires --epsilon"))?,
            selection: joint_selection,
            sense,
        },
    };
    if epsilon.is_some() && !matches!(belief, BeliefArg::Mixture) {
        return Err(Failure::usage("--epsilon only applies to --belief mixture"));
    }
    SolverRegistry::builtin().get(&solver_args.solver)?;
    let config = MeetConfig {
        mode,
        solver: solver_args.solver.clone(),
        options: solver_args.options(),
    };
    let r = meet(&model, agents, &belief_value, &config)?;
    print_meeting(&model, &r);

    let mut file = ResultFile::new("meet", &model)
        .parameter("model", path.display())
        .parameter("agents", agents)
        .parameter("belief", r.belief)
        .parameter("mode", mode)
        .parameter("solver", r.solver);
    if !matches!(belief, BeliefArg::Degenerate) {
        file = file.parameter("sense", sense);
    }
    if let Some(e) = r.epsilon {
        file = file.parameter("epsilon", e);
    }
    if let Some(p) = selection {
        file = file.parameter("selection", p.display());
    }
    file = with_tuning(file, solver_args);
    file.values = (0..r.space.len())
        .map(|i| ValueEntry {
            state: r.space.tuple_labels(i),
            value: r.values[i],
        })
        .collect();
    file.selections = SelectionFile::from_joint(&r.space, &r.selection).choices;
    file.classification = Some(ClassificationEntry::new(
        &r.classification,
        joint_labels(&r.space),
    ));
    file.diagnostics = Some(Diagnostics {
        solver: r.solver.to_string(),
        iterations: r.iterations,
        residual: r.residual,
    });
    emit(json, file)
}

fn print_meeting(model: &CredalMatrix, r: &MeetingResult) {
    let title = match r.epsilon {
        Some(e) => format!("{} (epsilon {e})", r.belief),
        None => r.belief.to_string(),
    };
    println!("{title} meeting times, {} mode", r.space.mode());
    if let Some(matrix) = r.matrix() {
        let labels = model.space().labels();
        let mut header = vec![""];
        header.extend(labels.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = (0..labels.len())
            .map(|x| {
                let mut row = vec![labels[x].clone()];
                row.extend((0..labels.len()).map(|y| fmt_value(matrix.get(x, y))));
                row
            })
            .collect();
        print_table(&header, &rows);
    } else {
        let rows: Vec<Vec<String>> = (0..r.space.len())
            .map(|i| vec![r.space.label(i), fmt_value(r.values[i])])
            .collect();
        print_table(&["state", "m"], &rows);
    }
    println!(
        "{}: {} iteration(s), residual {:.3e}",
        r.solver, r.iterations, r.residual
    );
}

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(
    path: &Path,
    target: &[String],
    start: &str,
    trials: usize,
    seed: u64,
    horizon: u64,
    selection: Option<&Path>,
    json: &Option<PathBuf>,
) -> CliResult {
    let model = read_model(path)?;
    let target_set = target_set(&model, target)?;
    let start_index = model.space().index_of(start)?;
    let chosen = match selection {
        Some(p) => read_selection(p)?.to_selection(&model)?,
        None => Selection::lowest(model.len()),
    };
    let chain = TransitionMatrix::from_selection(&model, &chosen)?;
    let stats = simulate_hitting(&chain, &target_set, start_index, trials, horizon, seed)?;
    let exact = precise_hitting(&chain, &target_set)?[start_index];

    println!("trials    {}", stats.trials);
    println!("hits      {}", stats.hits);
    println!("censored  {}", stats.censored);
    match (stats.mean, stats.half_width(3.0)) {
        (Some(mean), Some(w)) => println!("mean      {mean:.6} ± {w:.6} (3 sigma)"),
        _ => println!("mean      -"),
    }
    if let Some(var) = stats.variance {
        println!("variance  {var:.6}");
    }
    println!("exact     {}", fmt_value(exact));

    let mut file = ResultFile::new("simulate", &model)
        .parameter("model", path.display())
        .parameter("target", labels_of(&model, &target_set))
        .parameter("start", start)
        .parameter("trials", trials)
        .parameter("seed", seed)
        .parameter("horizon", horizon);
    if let Some(p) = selection {
        file = file.parameter("selection", p.display());
    }
    file.values = vec![ValueEntry {
        state: vec![start.to_string()],
        value: exact,
    }];
    file.selections = (0..model.len())
        .map(|x| ChoiceEntry {
            state: vec![model.space().label(x).to_string()],
            vertices: vec![chosen.choice(x)],
        })
        .collect();
    file.simulation = Some(stats);
    emit(json, file)
}

fn selfcheck() -> CliResult {
    let checks = run_selfcheck();
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        println!(
            "[{}] {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if failed > 0 {
        return Err(Failure {
            code: EXIT_VALIDATION,
            message: format!("{failed} of {} checks failed", checks.len()),
        });
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure {
                code: EXIT_INTERNAL,
                message: e.to_string(),
            })?;
    }
    let json = &cli.json;
    match &cli.command {
        Command::Validate { model } => validate(model, json),
        Command::Classify {
            model,
            target,
            sense,
            agents,
            mode,
        } => classify_cmd(
            model,
            target,
            (*sense).into(),
            *agents,
            (*mode).into(),
            json,
        ),
        Command::Hit {
            model,
            target,
            sense,
            solver,
        } => hit(model, target, (*sense).into(), solver, json),
        Command::Meet {
            model,
            agents,
            belief,
            sense,
            epsilon,
            selection,
            mode,
            solver,
        } => meet_cmd(
            model,
            *agents,
            *belief,
            (*sense).into(),
            *epsilon,
            selection.as_deref(),
            (*mode).into(),
            solver,
            json,
        ),
        Command::Simulate {
            model,
            target,
            start,
            trials,
            seed,
            horizon,
            selection,
        } => simulate_cmd(
            model,
            target,
            start,
            *trials,
            *seed,
            *horizon,
            selection.as_deref(),
            json,
        ),
        Command::Selfcheck => selfcheck(),
        Command::Solvers => {
            for s in SolverRegistry::builtin().iter() {
                let marker = if s.name() == DEFAULT_SOLVER {
                    " (default)"
                } else {
                    ""
                };
                println!("{}{marker}: {}", s.name(), s.description());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
