//! `stergm`: fit, compare and simulate separable temporal ERGMs.
//!
//! Exit codes: 0 on success, 1 on user or input errors, 2 when the data are
//! statistically degenerate for the requested model (an MLE does not exist,
//! the optimizer did not converge, or the information matrix is singular).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Deserialize;

use stergm::graph::Decision;
use stergm::inference::{
    fit_per_time_compiled, lr_test, InferenceError, maximize_compiled, Existence, FitConfig, FitResult, WaldTest,
};
use stergm::io::fit_doc::{FitDocument, PerTimeEntry};
use stergm::io::panel_doc::{parse_panel, serialize_panel};
use stergm::io::terms::parse_terms;
use stergm::likelihood::{CompiledPanel, ThetaVector};
use stergm::simulate::{simulate_panel, AttributeSource, SimConfig, WealthRule};
use stergm::stats::{eval_vector, ModelSpec};

const EXIT_INPUT: u8 = 1;
const EXIT_DEGENERATE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "stergm", version, about = "Exact-likelihood separable temporal ERGMs")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "STERGM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model by maximum likelihood.
    Fit(FitArgs),
    /// Likelihood-ratio test between two fit documents.
    Lrtest(LrArgs),
    /// Simulate a panel of games.
    Simulate(SimArgs),
    /// Per-transition observed statistics as CSV.
    Stats(StatsArgs),
}

#[derive(clap::Args, Debug)]
struct FitArgs {
    /// Panel document (stergm-panel/1).
    #[arg(long)]
    data: PathBuf,
    /// Formation terms, e.g. "edges,triangles".
    #[arg(long, default_value = "")]
    formation: String,
    /// Persistence terms.
    #[arg(long, default_value = "")]
    persistence: String,
    /// Also fit each target time separately.
    #[arg(long)]
    by_time: bool,
    /// Gradient infinity-norm tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Write the fit document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct LrArgs {
    /// Fit document of the reduced model.
    reduced: PathBuf,
    /// Fit document of the full model.
    full: PathBuf,
}

#[derive(clap::Args, Debug)]
struct SimArgs {
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    games: usize,
    #[arg(long, default_value_t = 7)]
    transitions: usize,
    #[arg(long, default_value_t = 5)]
    initial_ties: usize,
    /// JSON parameters: {"formation": [...], "persistence": [...]} or a fit
    /// document. Defaults to all zeros.
    #[arg(long)]
    theta_file: Option<PathBuf>,
    #[arg(long, default_value = "")]
    formation: String,
    #[arg(long, default_value = "")]
    persistence: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// bernoulli:P, constant:C|D|N, or replay:PANEL.json
    #[arg(long, default_value = "bernoulli:0.5")]
    attr_source: String,
    #[arg(long, default_value_t = 50)]
    cost: i64,
    #[arg(long, default_value_t = 100)]
    benefit: i64,
    #[arg(long, default_value_t = 500)]
    initial_wealth: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "")]
    formation: String,
    #[arg(long, default_value = "")]
    persistence: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_INPUT);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    let result = match cli.command {
        Command::Fit(a) => run_fit(a),
        Command::Lrtest(a) => run_lrtest(a).map(|_| 0),
        Command::Simulate(a) => run_simulate(a).map(|_| 0),
        Command::Stats(a) => run_stats(a).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_spec(formation: &str, persistence: &str) -> Result<ModelSpec> {
    let f = parse_terms(formation).map_err(|e| anyhow!("--formation: {e}"))?;
    let p = parse_terms(persistence).map_err(|e| anyhow!("--persistence: {e}"))?;
    Ok(ModelSpec::new(f, p))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn fmt_num(v: f64, width: usize, prec: usize) -> String {
    format!("{v:>width$.prec$}")
}

/// Coefficient table: estimate, SE, z, p and stars per term.
fn fit_table(fit: &FitResult, wald: &[Option<WaldTest>]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:<34} {:>10} {:>9} {:>8} {:>7}",
        "side", "term", "estimate", "se", "z", "p"
    );
    for (k, (side, term)) in fit.spec.labels().into_iter().enumerate() {
        let est = match (fit.theta[k], fit.existence_flags[k]) {
            (Some(v), _) => fmt_num(v, 10, 4),
            (None, Existence::AtLowerBoundary) => format!("{:>10}", "-Inf"),
            (None, _) => format!("{:>10}", "+Inf"),
        };
        let se = fit.se[k].map_or(format!("{:>9}", "-"), |v| fmt_num(v, 9, 4));
        let (z, p, stars) = match &wald[k] {
            Some(w) => (fmt_num(w.z, 8, 3), fmt_num(w.p_value, 7, 3), w.stars.clone()),
            None => (format!("{:>8}", "-"), format!("{:>7}", "-"), String::new()),
        };
        let _ = writeln!(s, "{:<12} {:<34} {est} {se} {z} {p} {stars}", side.to_string(), term.to_string());
    }
    for (k, (side, term)) in fit.spec.labels().into_iter().enumerate() {
        match fit.existence_flags[k] {
            Existence::Ok => {}
            Existence::AtLowerBoundary => {
                let _ = writeln!(s, "note: {side} {term}: observed total at its minimum; the MLE is -Inf");
            }
            Existence::AtUpperBoundary => {
                let _ = writeln!(s, "note: {side} {term}: observed total at its maximum; the MLE is +Inf");
            }
        }
    }
    let _ = writeln!(
        s,
        "Residual deviance: {:.2} on {} parameters ({} transitions)",
        fit.residual_deviance, fit.n_params, fit.transitions
    );
    let _ = writeln!(s, "Log-likelihood: {:.4}", fit.loglik);
    let _ = writeln!(
        s,
        "Converged: {} ({:?}, {} iterations, gradient norm {:.2e})",
        fit.converged, fit.status, fit.iterations, fit.gradient_norm
    );
    if fit.fisher_singular {
        let _ = writeln!(s, "note: the information matrix is singular; standard errors are withheld");
    }
    let _ = writeln!(s, "Significance: 0.05 *, 0.01 **, 0.001 ***");
    s
}

fn run_fit(args: FitArgs) -> Result<u8> {
    let spec = load_spec(&args.formation, &args.persistence)?;
    let panel = parse_panel(&read_file(&args.data)?).map_err(|e| anyhow!("{}: {e}", args.data.display()))?;
    let config = FitConfig {
        grad_tol: args.tol,
        max_iters: args.max_iters,
        ..FitConfig::default()
    };
    config.validate(&spec)?;
    let compiled = CompiledPanel::with_budget(&panel, &spec, config.budget)?;
    let fit = maximize_compiled(&compiled, &config)?;
    let per_time = args.by_time.then(|| {
        fit_per_time_compiled(&compiled, &config)
            .iter()
            .map(|(t, r)| PerTimeEntry::new(*t, r))
            .collect::<Vec<_>>()
    });
    let doc = FitDocument::new(fit, per_time);

    let mut table = fit_table(&doc.fit, &doc.wald);
    if let Some(per) = &doc.per_time {
        for entry in per {
            let _ = writeln!(table, "\n== transitions into t = {} ==", entry.t);
            match (&entry.fit, &entry.wald, &entry.error) {
                (Some(f), Some(w), _) => table.push_str(&fit_table(f, w)),
                (_, _, Some(e)) => {
                    let _ = writeln!(table, "error: {e}");
                }
                _ => {}
            }
        }
    }
    // the table goes to stdout when the document goes to a file, and to
    // stderr when the document itself is on stdout
    if args.out.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    emit(&args.out, &doc.to_json())?;
    Ok(if doc.fit.is_clean() { 0 } else { EXIT_DEGENERATE })
}

fn read_fit_doc(path: &Path) -> Result<FitDocument> {
    let text = String::from_utf8(read_file(path)?).with_context(|| format!("{} is not UTF-8", path.display()))?;
    FitDocument::from_json(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn run_lrtest(args: LrArgs) -> Result<()> {
    let mut reduced = read_fit_doc(&args.reduced)?;
    let mut full = read_fit_doc(&args.full)?;
    // accept the two documents in either order
    let lr = match lr_test(&reduced.fit, &full.fit) {
        Err(InferenceError::NotNested) if lr_test(&full.fit, &reduced.fit).is_ok() => {
            std::mem::swap(&mut reduced, &mut full);
            lr_test(&reduced.fit, &full.fit)?
        }
        other => other?,
    };
    if lr.df == 0 {
        bail!("the two models have the same number of parameters; nothing to test");
    }
    println!("Model      Residual deviance");
    println!("reduced    {:.2}", reduced.fit.residual_deviance);
    println!("full       {:.2}", full.fit.residual_deviance);
    println!("Deviance (df), p: {:.2} ({}), {:.3}", lr.deviance, lr.df, lr.p_value);
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ThetaInput {
    Theta(ThetaVector),
    Fit(Box<FitDocument>),
}

fn load_theta(path: &Path, spec: &ModelSpec) -> Result<ThetaVector> {
    let text = read_file(path)?;
    let theta = match serde_json::from_slice::<ThetaInput>(&text)
        .map_err(|_| anyhow!("{}: expected {{\"formation\": [...], \"persistence\": [...]}} or a fit document", path.display()))?
    {
        ThetaInput::Theta(t) => t,
        ThetaInput::Fit(doc) => doc
            .fit
            .theta_hat()
            .ok_or_else(|| anyhow!("{}: the fit has parameters without finite estimates", path.display()))?,
    };
    theta.validate(spec).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok(theta)
}

fn parse_attr_source(text: &str, games: usize) -> Result<AttributeSource> {
    let (kind, arg) = text.split_once(':').unwrap_or((text, ""));
    match kind {
        "bernoulli" => {
            let p: f64 = arg.parse().map_err(|_| anyhow!("--attr-source: `{arg}` is not a probability"))?;
            Ok(AttributeSource::BernoulliRule { p_cooperate: p })
        }
        "constant" => Decision::from_code(arg)
            .map(AttributeSource::Constant)
            .ok_or_else(|| anyhow!("--attr-source: `{arg}` is not one of C, D, N")),
        "replay" => {
            let panel = parse_panel(&read_file(Path::new(arg))?).map_err(|e| anyhow!("{arg}: {e}"))?;
            if panel.games().len() < games {
                bail!("{arg}: {} games to replay, {games} requested", panel.games().len());
            }
            match AttributeSource::replay_from_panel(&panel) {
                AttributeSource::Replay(mut all) => {
                    all.truncate(games);
                    Ok(AttributeSource::Replay(all))
                }
                other => Ok(other),
            }
        }
        _ => bail!("--attr-source: expected bernoulli:P, constant:C|D|N or replay:PATH, found `{text}`"),
    }
}

fn run_simulate(args: SimArgs) -> Result<()> {
    let spec = load_spec(&args.formation, &args.persistence)?;
    let theta = match &args.theta_file {
        Some(path) => load_theta(path, &spec)?,
        None => ThetaVector::zeros(&spec),
    };
    let config = SimConfig {
        n: args.n,
        initial_ties: args.initial_ties,
        transitions: args.transitions,
        games: args.games,
        seed: args.seed,
        theta,
        spec,
        attribute_source: parse_attr_source(&args.attr_source, args.games)?,
    };
    let rule = WealthRule {
        cooperate_cost_per_neighbor: args.cost,
        benefit_per_cooperating_neighbor: args.benefit,
        initial_wealth: args.initial_wealth,
    };
    if rule.cooperate_cost_per_neighbor < 0 || rule.benefit_per_cooperating_neighbor < 0 {
        bail!("--cost and --benefit must be non-negative");
    }
    let panel = simulate_panel(&config, &rule)?;
    emit(&args.out, &serialize_panel(&panel))
}

fn run_stats(args: StatsArgs) -> Result<()> {
    let spec = load_spec(&args.formation, &args.persistence)?;
    let panel = parse_panel(&read_file(&args.data)?).map_err(|e| anyhow!("{}: {e}", args.data.display()))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["game", "t", "side", "term", "value"])?;
    for game in panel.games() {
        for tv in game.transitions() {
            for (side, terms, graph) in [
                ("formation", &spec.formation, tv.y_plus()),
                ("persistence", &spec.persistence, tv.y_minus()),
            ] {
                let values = eval_vector(terms, &graph, tv.attrs)?;
                for (term, v) in terms.iter().zip(values.values()) {
                    w.write_record([game.id(), &tv.t.to_string(), side, &term.to_string(), &v.to_string()])?;
                }
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    emit(&args.out, &String::from_utf8(bytes)?)
}
