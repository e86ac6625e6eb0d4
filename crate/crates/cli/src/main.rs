//! ipdr: learning matches between information-constrained strategy classes
//! in the iterated prisoner's dilemma, from single trajectories up to
//! round-robin tournaments, as reproducible file artifacts.

mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use ipd_replicator::analysis::classify_outcome;
use ipd_replicator::dynamics::{integrate_match, Mode};
use ipd_replicator::experiments::{
    derive_sample_seeds, draw_class_strategy, run_class_tournament, run_generosity_experiment,
    run_match_ensemble, run_one_sided_learning, run_submodularity_sweep,
};
use ipd_replicator::game::{ClassStrategy, InformationClass};

use config::{parse_f64_list, parse_payoff, RunConfig};

const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "ipdr",
    version,
    about = "Replicator learning in the iterated prisoner's dilemma"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one learning match; write trajectory.csv and outcome.json.
    Simulate(CommonArgs),
    /// Seeded ensemble of matches; write census.csv and census.json.
    Ensemble(CommonArgs),
    /// Round-robin censuses over a class list; write tournament.json and
    /// one CSV per matchup.
    Tournament(CommonArgs),
    /// One-sided learning curves of the memory-one and reactive classes
    /// against a fixed opponent; write curves.csv and fig2.json.
    Fig2(CommonArgs),
    /// Generosity follow-up on harvested exploitation equilibria; write
    /// generosity.csv and fig5.json.
    Fig5(CommonArgs),
    /// Rerun the four-class tournament under several payoff matrices;
    /// write sweep.json.
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Information class of the x seat, e.g. 1234.
    #[arg(long)]
    class_x: Option<String>,
    /// Information class of the y seat.
    #[arg(long)]
    class_y: Option<String>,
    /// Tournament entrants: comma-separated codes or "all13".
    #[arg(long)]
    classes: Option<String>,
    /// Payoff matrix as T,R,P,S.
    #[arg(long)]
    payoff: Option<String>,
    /// Sweep matrices: semicolon-separated T,R,P,S quadruples.
    #[arg(long)]
    payoffs: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    /// Master seed; all per-sample seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Clip margin keeping strategies inside (0, 1).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Census labelling threshold.
    #[arg(long)]
    delta: Option<f64>,
    /// Learning mode: mutual or one-sided.
    #[arg(long)]
    mode: Option<String>,
    /// Fixed opponent block probabilities (on class-y), comma separated.
    #[arg(long)]
    fixed_opponent: Option<String>,
    /// Exploitation equilibria to harvest for the generosity follow-up.
    #[arg(long)]
    n_equilibria: Option<usize>,
    /// Worker threads; 0 means one per core. Output never depends on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Flat key=value config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, String> {
        let mut rc = RunConfig::default();
        if let Some(path) = &self.config {
            rc.apply_file(path)?;
        }
        if let Some(v) = &self.class_x {
            rc.class_x = v.clone();
        }
        if let Some(v) = &self.class_y {
            rc.class_y = v.clone();
        }
        if let Some(v) = &self.classes {
            rc.classes = v.clone();
        }
        if let Some(v) = &self.payoff {
            rc.payoff = parse_payoff(v)?;
        }
        if let Some(v) = &self.payoffs {
            rc.payoffs = v.clone();
        }
        if let Some(v) = self.samples {
            rc.samples = v;
        }
        if let Some(v) = self.seed {
            rc.seed = v;
        }
        if let Some(v) = self.dt {
            rc.dt = v;
        }
        if let Some(v) = self.t_max {
            rc.t_max = v;
        }
        if let Some(v) = self.epsilon {
            rc.epsilon = v;
        }
        if let Some(v) = self.delta {
            rc.delta = v;
        }
        if let Some(v) = &self.mode {
            rc.set_key("mode", v)?;
        }
        if let Some(v) = &self.fixed_opponent {
            rc.fixed_opponent = parse_f64_list("fixed-opponent", v)?;
        }
        if let Some(v) = self.n_equilibria {
            rc.n_equilibria = v;
        }
        if let Some(v) = self.jobs {
            rc.jobs = v;
        }
        Ok(rc)
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(message) = run(&cli) {
        eprintln!("error: {message}");
        std::process::exit(1);
    }
}

fn run(cli: &Cli) -> Result<(), String> {
    let (args, name): (&CommonArgs, &str) = match &cli.command {
        Command::Simulate(a) => (a, "simulate"),
        Command::Ensemble(a) => (a, "ensemble"),
        Command::Tournament(a) => (a, "tournament"),
        Command::Fig2(a) => (a, "fig2"),
        Command::Fig5(a) => (a, "fig5"),
        Command::Sweep(a) => (a, "sweep"),
    };
    let mut rc = args.resolve()?;
    // Presets pin the fields that define them, so the echoed config names
    // the run actually performed.
    match name {
        "fig2" => rc.mode = "one-sided".to_string(),
        "fig5" => {
            rc.class_x = "1212".to_string();
            rc.class_y = "1212".to_string();
            rc.mode = "mutual".to_string();
        }
        _ => {}
    }

    // Validate the run's identity (classes, payoff ordering, numerics)
    // before touching the filesystem.
    rc.ensemble_spec()?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| format!("cannot create {}: {e}", args.out.display()))?;
    write_text(&args.out.join("resolved.config"), &rc.to_flat())?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(rc.jobs)
        .build()
        .map_err(|e| format!("thread pool: {e}"))?;
    pool.install(|| dispatch(name, &rc, &args.out))
}

fn dispatch(name: &str, rc: &RunConfig, out: &Path) -> Result<(), String> {
    match name {
        "simulate" => cmd_simulate(rc, out),
        "ensemble" => cmd_ensemble(rc, out),
        "tournament" => cmd_tournament(rc, out),
        "fig2" => cmd_fig2(rc, out),
        "fig5" => cmd_fig5(rc, out),
        "sweep" => cmd_sweep(rc, out),
        _ => unreachable!("dispatch covers every subcommand"),
    }
}

fn core_err(e: ipd_replicator::Error) -> String {
    e.to_string()
}

fn cmd_simulate(rc: &RunConfig, out: &Path) -> Result<(), String> {
    let mut spec = rc.ensemble_spec()?;
    spec.samples = 1;
    let (seed_x, seed_y) = derive_sample_seeds(&spec)[0];
    let cfg = spec.config.clone();
    let init_x = draw_class_strategy(&cfg.class_x, seed_x);
    let init_y = match cfg.mode {
        Mode::Mutual => draw_class_strategy(&cfg.class_y, seed_y),
        Mode::OneSidedX => ClassStrategy::new(cfg.class_y.clone(), rc.fixed_opponent.clone())
            .map_err(core_err)?,
    };
    let traj = integrate_match(&init_x, &init_y, &cfg).map_err(core_err)?;
    let label = classify_outcome(traj.window_distribution(), rc.delta).map_err(core_err)?;
    let (u, v) = traj.window_mean_payoffs();

    write_bytes(&out.join("trajectory.csv"), |w| traj.write_csv(w))?;
    let doc = json!({
        "artifact_version": ARTIFACT_VERSION,
        "command": "simulate",
        "config": rc,
        "seed_x": seed_x,
        "seed_y": seed_y,
        "init_x": init_x,
        "init_y": init_y,
        "terminal_x": traj.terminal_x(),
        "terminal_y": traj.terminal_y(),
        "u": u,
        "v": v,
        "p_avg": traj.window_distribution().probs(),
        "label": label,
        "attractor": traj.label(),
    });
    write_json(&out.join("outcome.json"), &doc)
}

fn cmd_ensemble(rc: &RunConfig, out: &Path) -> Result<(), String> {
    let spec = rc.ensemble_spec()?;
    let census = run_match_ensemble(&spec).map_err(core_err)?;
    write_bytes(&out.join("census.csv"), |w| census.write_csv(w))?;
    let doc = json!({
        "artifact_version": ARTIFACT_VERSION,
        "command": "ensemble",
        "config": rc,
        "census": census.summary(),
    });
    write_json(&out.join("census.json"), &doc)
}

fn cmd_tournament(rc: &RunConfig, out: &Path) -> Result<(), String> {
    let classes = rc.class_list()?;
    let spec = rc.ensemble_spec()?;
    let report = run_class_tournament(&classes, &spec).map_err(core_err)?;
    let n = classes.len();
    for i in 0..n {
        for j in i..n {
            let name = format!(
                "cell_{}_vs_{}.csv",
                classes[i].code(),
                classes[j].code()
            );
            write_bytes(&out.join(name), |w| report.census(i, j).write_csv(w))?;
        }
    }
    let doc = json!({
        "artifact_version": ARTIFACT_VERSION,
        "command": "tournament",
        "config": rc,
        "tournament": report.summary(),
    });
    write_json(&out.join("tournament.json"), &doc)
}

fn cmd_fig2(rc: &RunConfig, out: &Path) -> Result<(), String> {
    let spec = rc.ensemble_spec()?;
    let learners = vec![
        InformationClass::full(),
        InformationClass::from_code("1212").map_err(core_err)?,
    ];
    let opponent = ClassStrategy::new(spec.config.class_y.clone(), rc.fixed_opponent.clone())
        .map_err(core_err)?;
    let report = run_one_sided_learning(&spec, &learners, &opponent, &rc.resolved_times())
        .map_err(core_err)?;
    write_bytes(&out.join("curves.csv"), |w| report.write_csv(w))?;
    let doc = json!({
        "artifact_version": ARTIFACT_VERSION,
        "command": "fig2",
        "config": rc,
        "report": report,
    });
    write_json(&out.join("fig2.json"), &doc)
}

fn cmd_fig5(rc: &RunConfig, out: &Path) -> Result<(), String> {
    let spec = rc.ensemble_spec()?;
    let report = run_generosity_experiment(rc.n_equilibria, &spec).map_err(core_err)?;
    write_bytes(&out.join("generosity.csv"), |w| report.write_csv(w))?;
    let doc = json!({
        "artifact_version": ARTIFACT_VERSION,
        "command": "fig5",
        "config": rc,
        "mean_delta_u": report.mean_delta_u(),
        "mean_delta_v": report.mean_delta_v(),
        "report": report,
    });
    write_json(&out.join("fig5.json"), &doc)
}

fn cmd_sweep(rc: &RunConfig, out: &Path) -> Result<(), String> {
    let matrices = rc.sweep_matrices()?;
    let spec = rc.ensemble_spec()?;
    let entries = run_submodularity_sweep(&matrices, &spec).map_err(core_err)?;
    let rows: Vec<serde_json::Value> = entries
        .iter()
        .map(|e| {
            json!({
                "payoff": e.payoff,
                "submodular": e.submodular,
                "exploitation_samples": e.exploitation_samples,
                "alternating_samples": e.alternating_samples,
                "tournament": e.tournament.summary(),
            })
        })
        .collect();
    let doc = json!({
        "artifact_version": ARTIFACT_VERSION,
        "command": "sweep",
        "config": rc,
        "entries": rows,
    });
    write_json(&out.join("sweep.json"), &doc)
}

fn write_text(path: &Path, content: &str) -> Result<(), String> {
    std::fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn write_json(path: &Path, doc: &serde_json::Value) -> Result<(), String> {
    let mut body = serde_json::to_string_pretty(doc)
        .map_err(|e| format!("cannot serialize {}: {e}", path.display()))?;
    body.push('\n');
    write_text(path, &body)
}

fn write_bytes<F>(path: &Path, fill: F) -> Result<(), String>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    fill(&mut buf).map_err(|e| format!("cannot format {}: {e}", path.display()))?;
    std::fs::write(path, buf).map_err(|e| format!("cannot write {}: {e}", path.display()))
}
