//! Seeded ensembles of learning matches and the experiment protocols built
//! on them: outcome censuses, one-sided learning curves against a fixed
//! opponent, the generosity follow-up on harvested exploitation equilibria,
//! round-robin class tournaments, and payoff-matrix sweeps.
//!
//! Determinism contract: every sample's initial conditions derive from
//! (master seed, class pair, sample index, seat) alone. Parallelism only
//! distributes independent samples and results are collected back in index
//! order, so reports are bitwise reproducible at any thread count.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{classify_outcome, is_submodular, OutcomeLabel, Seat, OUTCOME_LABELS};
use crate::dynamics::{integrate_match, AttractorLabel, LearningConfig, Mode};
use crate::error::{Error, Result};
use crate::game::{ClassStrategy, InformationClass, PayoffMatrix, N_OUTCOMES};
use crate::sig12;

/// Census labelling threshold used when a spec does not override it.
pub const DEFAULT_DELTA: f64 = 0.05;

/// One batch of learning matches: shared numerics, a sample budget, and the
/// master seed everything else derives from.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSpec {
    pub config: LearningConfig,
    pub samples: usize,
    pub master_seed: u64,
    /// Threshold handed to `classify_outcome` when labelling samples.
    pub delta: f64,
}

impl EnsembleSpec {
    pub fn new(config: LearningConfig, samples: usize, master_seed: u64) -> Self {
        Self {
            config,
            samples,
            master_seed,
            delta: DEFAULT_DELTA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.samples == 0 {
            return Err(Error::InvalidInput(
                "sample count must be at least 1".to_string(),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidInput(format!(
                "delta must lie in (0, 0.5), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Seed derivation

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. Fixed here so seed derivation never shifts under
/// dependency upgrades.
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over bytes, used to fold the class-pair identity into the seeds.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Per-sample, per-seat RNG seeds: mix(master ^ pair_tag + counter * GOLDEN)
/// with counter = 2 * sample + seat + 1. Swapping the class pair and handing
/// the swapped seed pairs to `ensemble_with_seeds` reproduces every match
/// with the seats exchanged.
pub fn derive_sample_seeds(spec: &EnsembleSpec) -> Vec<(u64, u64)> {
    let pair = format!(
        "{}|{}",
        spec.config.class_x.code(),
        spec.config.class_y.code()
    );
    let base = spec.master_seed ^ fnv1a64(pair.as_bytes());
    (0..spec.samples as u64)
        .map(|i| {
            let sx = splitmix64(base.wrapping_add((2 * i + 1).wrapping_mul(GOLDEN)));
            let sy = splitmix64(base.wrapping_add((2 * i + 2).wrapping_mul(GOLDEN)));
            (sx, sy)
        })
        .collect()
}

/// Uniform draw on the class's block-probability cube.
pub fn draw_class_strategy(class: &InformationClass, seed: u64) -> ClassStrategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..class.n_blocks()).map(|_| rng.gen::<f64>()).collect();
    ClassStrategy::new(class.clone(), values).expect("uniform draws lie in [0, 1)")
}

// ---------------------------------------------------------------------------
// Match ensembles and censuses

/// One learning match inside an ensemble, reduced to its census row.
#[derive(Debug, Clone, Serialize)]
pub struct SampleResult {
    pub sample_id: usize,
    pub seed_x: u64,
    pub seed_y: u64,
    pub init_x: ClassStrategy,
    pub init_y: ClassStrategy,
    pub terminal_x: ClassStrategy,
    pub terminal_y: ClassStrategy,
    /// Trailing-window mean payoffs.
    pub u: f64,
    pub v: f64,
    /// Trailing-window outcome distribution.
    pub p_avg: [f64; N_OUTCOMES],
    pub label: OutcomeLabel,
    pub attractor: AttractorLabel,
}

fn label_index(label: OutcomeLabel) -> usize {
    OUTCOME_LABELS
        .iter()
        .position(|&l| l == label)
        .expect("every label appears in OUTCOME_LABELS")
}

/// Outcome census of one ensemble. Label counts always sum to the sample
/// count; means run over all samples.
#[derive(Debug, Clone)]
pub struct CensusReport {
    spec: EnsembleSpec,
    samples: Vec<SampleResult>,
    label_counts: [usize; OUTCOME_LABELS.len()],
    mean_u: f64,
    mean_v: f64,
}

/// Aggregate view of a census for JSON output (per-sample rows go to CSV).
#[derive(Debug, Clone, Serialize)]
pub struct CensusSummary {
    pub spec: EnsembleSpec,
    pub samples: usize,
    pub label_counts: BTreeMap<String, usize>,
    pub mean_u: f64,
    pub mean_v: f64,
    pub exploit_by_x: usize,
    pub exploit_by_y: usize,
}

impl CensusReport {
    fn from_samples(spec: EnsembleSpec, samples: Vec<SampleResult>) -> Self {
        let mut label_counts = [0usize; OUTCOME_LABELS.len()];
        let mut sum_u = 0.0;
        let mut sum_v = 0.0;
        for s in &samples {
            label_counts[label_index(s.label)] += 1;
            sum_u += s.u;
            sum_v += s.v;
        }
        let n = samples.len().max(1) as f64;
        Self {
            spec,
            samples,
            label_counts,
            mean_u: sum_u / n,
            mean_v: sum_v / n,
        }
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[SampleResult] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, label: OutcomeLabel) -> usize {
        self.label_counts[label_index(label)]
    }

    pub fn mean_u(&self) -> f64 {
        self.mean_u
    }

    pub fn mean_v(&self) -> f64 {
        self.mean_v
    }

    /// (samples where the x seat exploits, samples where the y seat does).
    pub fn exploitation_directions(&self) -> (usize, usize) {
        (
            self.count(OutcomeLabel::ExploitByX),
            self.count(OutcomeLabel::ExploitByY),
        )
    }

    pub fn summary(&self) -> CensusSummary {
        let label_counts = OUTCOME_LABELS
            .iter()
            .map(|&l| (l.as_str().to_string(), self.count(l)))
            .collect();
        let (ex, ey) = self.exploitation_directions();
        CensusSummary {
            spec: self.spec.clone(),
            samples: self.samples.len(),
            label_counts,
            mean_u: self.mean_u,
            mean_v: self.mean_v,
            exploit_by_x: ex,
            exploit_by_y: ey,
        }
    }

    /// Census without the samples whose focal payoff lies on the u = value
    /// edge (within tol). That edge cluster is degenerate, existing only
    /// when R = (T + P) / 2, so some summaries drop it; nothing here applies
    /// this filter by default.
    pub fn excluding_u_edge(&self, value: f64, tol: f64) -> CensusReport {
        let kept: Vec<SampleResult> = self
            .samples
            .iter()
            .filter(|s| (s.u - value).abs() > tol)
            .cloned()
            .collect();
        let mut spec = self.spec.clone();
        spec.samples = kept.len();
        CensusReport::from_samples(spec, kept)
    }

    /// Per-sample rows, 12 significant digits.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut header = vec![
            "sample_id".to_string(),
            "seed_x".to_string(),
            "seed_y".to_string(),
        ];
        let block_cols = |prefix: &str, class: &InformationClass| {
            class
                .block_names()
                .into_iter()
                .map(|b| format!("{prefix}{b}"))
                .collect::<Vec<_>>()
        };
        header.extend(block_cols("init_x", &self.spec.config.class_x));
        header.extend(block_cols("init_y", &self.spec.config.class_y));
        header.extend(block_cols("term_x", &self.spec.config.class_x));
        header.extend(block_cols("term_y", &self.spec.config.class_y));
        header.extend(
            ["u", "v", "p_cc", "p_cd", "p_dc", "p_dd", "label", "attractor"]
                .map(str::to_string),
        );
        writeln!(w, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = vec![
                s.sample_id.to_string(),
                s.seed_x.to_string(),
                s.seed_y.to_string(),
            ];
            for strat in [&s.init_x, &s.init_y, &s.terminal_x, &s.terminal_y] {
                row.extend(strat.probs().iter().map(|&p| sig12(p)));
            }
            row.push(sig12(s.u));
            row.push(sig12(s.v));
            row.extend(s.p_avg.iter().map(|&p| sig12(p)));
            row.push(s.label.as_str().to_string());
            row.push(s.attractor.as_str().to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn sample_from_inits(
    spec: &EnsembleSpec,
    sample_id: usize,
    seed_x: u64,
    seed_y: u64,
    init_x: ClassStrategy,
    init_y: ClassStrategy,
) -> Result<SampleResult> {
    let traj = integrate_match(&init_x, &init_y, &spec.config)?;
    let (u, v) = traj.window_mean_payoffs();
    let label = classify_outcome(traj.window_distribution(), spec.delta)?;
    Ok(SampleResult {
        sample_id,
        seed_x,
        seed_y,
        init_x,
        init_y,
        terminal_x: traj.terminal_x(),
        terminal_y: traj.terminal_y(),
        u,
        v,
        p_avg: *traj.window_distribution().probs(),
        label,
        attractor: traj.label(),
    })
}

/// Mutual-learning ensemble with explicit per-sample seed pairs. The usual
/// entry point is `run_match_ensemble`; this one exists so callers can
/// replay an ensemble with seats exchanged (swap each pair and the classes)
/// or reproduce single samples.
pub fn ensemble_with_seeds(spec: &EnsembleSpec, seeds: &[(u64, u64)]) -> Result<CensusReport> {
    spec.validate()?;
    if spec.config.mode != Mode::Mutual {
        return Err(Error::InvalidInput(
            "match ensembles require mutual learning mode".to_string(),
        ));
    }
    if seeds.len() != spec.samples {
        return Err(Error::InvalidInput(format!(
            "got {} seed pairs for {} samples",
            seeds.len(),
            spec.samples
        )));
    }
    let samples: Result<Vec<SampleResult>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &(sx, sy))| {
            let init_x = draw_class_strategy(&spec.config.class_x, sx);
            let init_y = draw_class_strategy(&spec.config.class_y, sy);
            sample_from_inits(spec, i, sx, sy, init_x, init_y)
        })
        .collect();
    Ok(CensusReport::from_samples(spec.clone(), samples?))
}

/// Runs the ensemble: seeded uniform initial conditions on each class's
/// cube, one learning match per sample, census of the outcomes.
pub fn run_match_ensemble(spec: &EnsembleSpec) -> Result<CensusReport> {
    let seeds = derive_sample_seeds(spec);
    ensemble_with_seeds(spec, &seeds)
}

// ---------------------------------------------------------------------------
// One-sided learning curves

/// Mean payoff over matched samples as a function of time, one curve per
/// learner class, all against the same fixed opponent.
#[derive(Debug, Clone, Serialize)]
pub struct OneSidedReport {
    pub spec: EnsembleSpec,
    pub fixed_opponent: ClassStrategy,
    pub learners: Vec<InformationClass>,
    /// Requested times snapped to the stored sample grid.
    pub times: Vec<f64>,
    /// `mean_payoff[l][k]`: learner `l`'s mean payoff at `times[k]`.
    pub mean_payoff: Vec<Vec<f64>>,
    /// `terminal_payoff[l][s]`: learner `l`'s trailing-window payoff in
    /// sample `s`. Samples are matched across learners.
    pub terminal_payoff: Vec<Vec<f64>>,
}

impl OneSidedReport {
    /// Curves as CSV: time column, then one mean-payoff column per learner.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut header = vec!["time".to_string()];
        header.extend(self.learners.iter().map(|c| format!("mean_u_{}", c.code())));
        writeln!(w, "{}", header.join(","))?;
        for (k, &t) in self.times.iter().enumerate() {
            let mut row = vec![sig12(t)];
            row.extend(self.mean_payoff.iter().map(|curve| sig12(curve[k])));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn nearest_grid_index(grid: &[f64], t: f64) -> usize {
    let i = grid.partition_point(|&s| s < t);
    if i == 0 {
        return 0;
    }
    if i >= grid.len() {
        return grid.len() - 1;
    }
    if (grid[i] - t).abs() < (t - grid[i - 1]).abs() {
        i
    } else {
        i - 1
    }
}

/// One-sided ensemble: each sample draws one initial condition on the
/// coarsest learner class and embeds it into every other learner, so the
/// learners start from the same strategy and differ only in which
/// directions they can move. The opponent stays fixed throughout.
///
/// `spec.config`'s classes are overridden per learner; its numerics,
/// sample count, and master seed apply unchanged. Mode must be one-sided.
pub fn run_one_sided_learning(
    spec: &EnsembleSpec,
    learners: &[InformationClass],
    fixed_opponent: &ClassStrategy,
    sample_times: &[f64],
) -> Result<OneSidedReport> {
    spec.validate()?;
    if spec.config.mode != Mode::OneSidedX {
        return Err(Error::InvalidInput(
            "one-sided learning requires one-sided mode".to_string(),
        ));
    }
    if learners.is_empty() {
        return Err(Error::InvalidInput("no learner classes given".to_string()));
    }
    let coarsest = learners
        .iter()
        .find(|c| learners.iter().all(|l| l.refines(c)))
        .ok_or_else(|| {
            Error::InvalidInput(
                "matched initial conditions need a learner class every other learner refines"
                    .to_string(),
            )
        })?
        .clone();
    for &t in sample_times {
        if !(t >= 0.0 && t <= spec.config.t_max) {
            return Err(Error::InvalidInput(format!(
                "sample time {t} outside [0, {}]",
                spec.config.t_max
            )));
        }
    }

    let mut seed_spec = spec.clone();
    seed_spec.config.class_x = coarsest.clone();
    seed_spec.config.class_y = fixed_opponent.class().clone();
    let seeds = derive_sample_seeds(&seed_spec);

    let grid = spec.config.sample_grid();
    let indices: Vec<usize> = sample_times
        .iter()
        .map(|&t| nearest_grid_index(&grid, t))
        .collect();
    let times: Vec<f64> = indices.iter().map(|&i| grid[i]).collect();

    // Per sample: payoff at each requested time and the terminal window
    // mean, for every learner.
    type SampleCurves = (Vec<Vec<f64>>, Vec<f64>);
    let per_sample: Result<Vec<SampleCurves>> = seeds
        .par_iter()
        .map(|&(seed, _)| {
            let base = draw_class_strategy(&coarsest, seed).embed();
            let mut at_times = Vec::with_capacity(learners.len());
            let mut terminal = Vec::with_capacity(learners.len());
            for learner in learners {
                let init = ClassStrategy::from_embedded(learner.clone(), base.probs())?;
                let mut cfg = seed_spec.config.clone();
                cfg.class_x = learner.clone();
                let traj = integrate_match(&init, fixed_opponent, &cfg)?;
                at_times.push(indices.iter().map(|&i| traj.u_samples()[i]).collect());
                terminal.push(traj.window_mean_payoffs().0);
            }
            Ok((at_times, terminal))
        })
        .collect();
    let per_sample = per_sample?;

    let n = per_sample.len() as f64;
    let mut mean_payoff = vec![vec![0.0; indices.len()]; learners.len()];
    let mut terminal_payoff = vec![Vec::with_capacity(per_sample.len()); learners.len()];
    for (at_times, terminal) in &per_sample {
        for (l, curve) in at_times.iter().enumerate() {
            for (k, &p) in curve.iter().enumerate() {
                mean_payoff[l][k] += p / n;
            }
            terminal_payoff[l].push(terminal[l]);
        }
    }

    Ok(OneSidedReport {
        spec: spec.clone(),
        fixed_opponent: fixed_opponent.clone(),
        learners: learners.to_vec(),
        times,
        mean_payoff,
        terminal_payoff,
    })
}

// ---------------------------------------------------------------------------
// Generosity follow-up

/// One harvested exploitation equilibrium and its one-sided follow-up.
/// Payoffs are exploiter-focal: `u_*` is the exploiting seat's payoff,
/// `v_*` the exploited seat's.
#[derive(Debug, Clone, Serialize)]
pub struct GenerosityEntry {
    pub sample_id: usize,
    pub exploiter: Seat,
    pub u_before: f64,
    pub v_before: f64,
    pub u_after: f64,
    pub v_after: f64,
    /// Memory-one strategy the exploiter continues learning from (its
    /// harvested reactive strategy, embedded).
    pub learner_initial: ClassStrategy,
    /// Memory-one strategy the exploiter settles on.
    pub learner_terminal: ClassStrategy,
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerosityReport {
    pub spec: EnsembleSpec,
    pub entries: Vec<GenerosityEntry>,
}

impl GenerosityReport {
    pub fn mean_delta_u(&self) -> f64 {
        let n = self.entries.len().max(1) as f64;
        self.entries.iter().map(|e| e.u_after - e.u_before).sum::<f64>() / n
    }

    pub fn mean_delta_v(&self) -> f64 {
        let n = self.entries.len().max(1) as f64;
        self.entries.iter().map(|e| e.v_after - e.v_before).sum::<f64>() / n
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "sample_id,exploiter,u_before,v_before,u_after,v_after,init_x1,init_x2,init_x3,init_x4,x1,x2,x3,x4"
        )?;
        for e in &self.entries {
            let seat = match e.exploiter {
                Seat::X => "x",
                Seat::Y => "y",
            };
            let mut row = vec![e.sample_id.to_string(), seat.to_string()];
            row.extend([e.u_before, e.v_before, e.u_after, e.v_after].map(sig12));
            row.extend(e.learner_initial.probs().iter().map(|&p| sig12(p)));
            row.extend(e.learner_terminal.probs().iter().map(|&p| sig12(p)));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Harvests up to `n_equilibria` exploitation-labelled endpoints from a
/// reactive self-play ensemble, then lets each exploiter continue learning
/// with the full memory-one repertoire while its victim stays frozen.
/// Reports the payoff pair before and after; empty when the ensemble
/// produced no exploitation samples.
pub fn run_generosity_experiment(
    n_equilibria: usize,
    spec: &EnsembleSpec,
) -> Result<GenerosityReport> {
    spec.validate()?;
    for (name, class) in [("x", &spec.config.class_x), ("y", &spec.config.class_y)] {
        if class.code() != "1212" {
            return Err(Error::InvalidInput(format!(
                "generosity harvest runs on reactive self-play, got class {} in seat {name}",
                class.code()
            )));
        }
    }
    if !is_submodular(&spec.config.payoff) {
        return Err(Error::InvalidInput(format!(
            "exploitation equilibria need a submodular payoff matrix, got {}",
            spec.config.payoff
        )));
    }
    let census = run_match_ensemble(spec)?;
    let harvested: Vec<&SampleResult> = census
        .samples()
        .iter()
        .filter(|s| matches!(s.label, OutcomeLabel::ExploitByX | OutcomeLabel::ExploitByY))
        .take(n_equilibria)
        .collect();

    let entries: Result<Vec<GenerosityEntry>> = harvested
        .par_iter()
        .map(|s| {
            let (exploiter, exploiter_term, victim_term) = match s.label {
                OutcomeLabel::ExploitByX => (Seat::X, &s.terminal_x, &s.terminal_y),
                _ => (Seat::Y, &s.terminal_y, &s.terminal_x),
            };
            let learner_init = ClassStrategy::from_embedded(
                InformationClass::full(),
                exploiter_term.embed().probs(),
            )?;
            let mut cfg = spec.config.clone();
            cfg.class_x = InformationClass::full();
            cfg.class_y = victim_term.class().clone();
            cfg.mode = Mode::OneSidedX;
            let traj = integrate_match(&learner_init, victim_term, &cfg)?;
            // "Before" is the payoff at the exact strategies the one-sided
            // phase starts from, so the learner's payoff gain is a clean
            // monotonicity statement.
            let (u_after, v_after) = traj.window_mean_payoffs();
            Ok(GenerosityEntry {
                sample_id: s.sample_id,
                exploiter,
                u_before: traj.u_samples()[0],
                v_before: traj.v_samples()[0],
                u_after,
                v_after,
                learner_initial: traj.initial_x(),
                learner_terminal: traj.terminal_x(),
            })
        })
        .collect();

    Ok(GenerosityReport {
        spec: spec.clone(),
        entries: entries?,
    })
}

// ---------------------------------------------------------------------------
// Class tournaments

/// Round-robin over a class list: one census per unordered pair (self-play
/// included), plus derived matrices indexed `[row][col]` by class position.
#[derive(Debug, Clone)]
pub struct TournamentReport {
    classes: Vec<InformationClass>,
    /// Upper triangle, row-major: pair (i, j) with i <= j sits at
    /// `i * n - i * (i - 1) / 2 + (j - i)`.
    cells: Vec<CensusReport>,
    mean_payoff: Vec<Vec<f64>>,
    payoff_diff: Vec<Vec<f64>>,
    exploit_counts: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TournamentCellSummary {
    pub class_x: String,
    pub class_y: String,
    pub census: CensusSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct TournamentSummary {
    pub classes: Vec<String>,
    pub mean_payoff: Vec<Vec<f64>>,
    pub payoff_diff: Vec<Vec<f64>>,
    pub exploit_counts: Vec<Vec<usize>>,
    pub cells: Vec<TournamentCellSummary>,
}

impl TournamentReport {
    pub fn classes(&self) -> &[InformationClass] {
        &self.classes
    }

    pub fn cells(&self) -> &[CensusReport] {
        &self.cells
    }

    fn cell_index(&self, i: usize, j: usize) -> usize {
        let n = self.classes.len();
        i * (2 * n - i + 1) / 2 + (j - i)
    }

    /// Census of the (i, j) matchup. For i <= j class i sat in seat x; for
    /// i > j this returns the (j, i) census, so read seats accordingly.
    pub fn census(&self, i: usize, j: usize) -> &CensusReport {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        &self.cells[self.cell_index(a, b)]
    }

    /// `mean_payoff()[i][j]`: class i's mean payoff against class j
    /// (diagonal: both seats averaged).
    pub fn mean_payoff(&self) -> &[Vec<f64>] {
        &self.mean_payoff
    }

    /// Antisymmetric `mean_payoff[i][j] - mean_payoff[j][i]`.
    pub fn payoff_diff(&self) -> &[Vec<f64>] {
        &self.payoff_diff
    }

    /// `exploit_counts()[i][j]`: samples of the (i, j) matchup labelled as
    /// class i exploiting class j (diagonal: both directions summed).
    pub fn exploit_counts(&self) -> &[Vec<usize>] {
        &self.exploit_counts
    }

    pub fn summary(&self) -> TournamentSummary {
        let n = self.classes.len();
        let mut cells = Vec::with_capacity(self.cells.len());
        for i in 0..n {
            for j in i..n {
                cells.push(TournamentCellSummary {
                    class_x: self.classes[i].code().to_string(),
                    class_y: self.classes[j].code().to_string(),
                    census: self.census(i, j).summary(),
                });
            }
        }
        TournamentSummary {
            classes: self.classes.iter().map(|c| c.code().to_string()).collect(),
            mean_payoff: self.mean_payoff.clone(),
            payoff_diff: self.payoff_diff.clone(),
            exploit_counts: self.exploit_counts.clone(),
            cells,
        }
    }
}

/// Runs every unordered pair (self-play included) as its own ensemble.
/// Seeds derive per pair from the same master seed, so adding a class to
/// the list never changes existing matchups.
pub fn run_class_tournament(
    classes: &[InformationClass],
    spec: &EnsembleSpec,
) -> Result<TournamentReport> {
    spec.validate()?;
    if classes.is_empty() {
        return Err(Error::InvalidInput("no tournament classes".to_string()));
    }
    for (i, a) in classes.iter().enumerate() {
        for b in &classes[..i] {
            if a.code() == b.code() {
                return Err(Error::InvalidInput(format!(
                    "class {} listed twice",
                    a.code()
                )));
            }
        }
    }
    if spec.config.mode != Mode::Mutual {
        return Err(Error::InvalidInput(
            "tournaments require mutual learning mode".to_string(),
        ));
    }

    let n = classes.len();
    let mut cells = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let mut pair_spec = spec.clone();
            pair_spec.config.class_x = classes[i].clone();
            pair_spec.config.class_y = classes[j].clone();
            cells.push(run_match_ensemble(&pair_spec)?);
        }
    }

    let mut report = TournamentReport {
        classes: classes.to_vec(),
        cells,
        mean_payoff: vec![vec![0.0; n]; n],
        payoff_diff: vec![vec![0.0; n]; n],
        exploit_counts: vec![vec![0; n]; n],
    };
    for i in 0..n {
        for j in 0..n {
            let census = report.census(i, j);
            let (ex, ey) = census.exploitation_directions();
            (report.mean_payoff[i][j], report.exploit_counts[i][j]) = match i.cmp(&j) {
                std::cmp::Ordering::Less => (census.mean_u(), ex),
                std::cmp::Ordering::Greater => (census.mean_v(), ey),
                std::cmp::Ordering::Equal => {
                    (0.5 * (census.mean_u() + census.mean_v()), ex + ey)
                }
            };
        }
    }
    for i in 0..n {
        for j in 0..n {
            report.payoff_diff[i][j] = report.mean_payoff[i][j] - report.mean_payoff[j][i];
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Payoff-matrix sweep

/// Tournament of the four one- and two-block opponent-referencing classes
/// under one payoff matrix, with the exploitation and alternating totals
/// pulled out.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub payoff: PayoffMatrix,
    pub submodular: bool,
    pub exploitation_samples: usize,
    pub alternating_samples: usize,
    pub tournament: TournamentReport,
}

/// Reruns the {1234, 1214, 1232, 1212} tournament under each payoff matrix.
/// Exploitation and alternating outcomes are expected exactly when the
/// matrix is submodular (2R > T + S keeps alternation unprofitable;
/// submodularity drives the oscillatory regime).
pub fn run_submodularity_sweep(
    matrices: &[PayoffMatrix],
    spec: &EnsembleSpec,
) -> Result<Vec<SweepEntry>> {
    let classes: Vec<InformationClass> = ["1234", "1214", "1232", "1212"]
        .iter()
        .map(|c| InformationClass::from_code(c))
        .collect::<Result<_>>()?;
    matrices
        .iter()
        .map(|pm| {
            let mut entry_spec = spec.clone();
            entry_spec.config.payoff = *pm;
            let tournament = run_class_tournament(&classes, &entry_spec)?;
            let exploitation_samples = tournament
                .cells()
                .iter()
                .map(|c| {
                    let (ex, ey) = c.exploitation_directions();
                    ex + ey
                })
                .sum();
            let alternating_samples = tournament
                .cells()
                .iter()
                .map(|c| c.count(OutcomeLabel::Alternating))
                .sum();
            Ok(SweepEntry {
                payoff: *pm,
                submodular: is_submodular(pm),
                exploitation_samples,
                alternating_samples,
                tournament,
            })
        })
        .collect()
}
