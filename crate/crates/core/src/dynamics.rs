//! Coupled learning dynamics: every strategy component climbs its payoff
//! gradient at a rate damped by the replicator factor x(1-x), both players
//! adapting at once (or one seat frozen in one-sided mode). Components tied
//! to the same information-class block share one parameter, whose velocity
//! is the sum of its members' component velocities.
//!
//! Integration is fixed-step RK4 with post-step projection onto
//! [eps, 1-eps]. Trajectories store every `stride`-th step plus the final
//! one; once per-step motion stalls below `freeze_speed` for long enough,
//! the state is held constant for the remaining horizon (the ODE is
//! autonomous, so a bitwise-repeated state can never move again).

use serde::Serialize;

use crate::equilibrium::{stationary_arrays, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::game::{ClassStrategy, InformationClass, MemoryOneStrategy, PayoffMatrix, N_OUTCOMES};
use crate::gradients::payoff_rates_and_stationary;
use crate::sig12;

/// Which seats adapt during a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Mutual,
    /// Only the x seat learns; y keeps its initial strategy.
    OneSidedX,
}

/// Terminal behaviour over the trailing window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttractorLabel {
    FixedPoint,
    LimitCycle,
    Undecided,
}

impl AttractorLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            AttractorLabel::FixedPoint => "fixed_point",
            AttractorLabel::LimitCycle => "limit_cycle",
            AttractorLabel::Undecided => "undecided",
        }
    }
}

impl std::fmt::Display for AttractorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything a single match needs: who plays, the game, and the numerics.
#[derive(Debug, Clone, Serialize)]
pub struct LearningConfig {
    pub class_x: InformationClass,
    pub class_y: InformationClass,
    pub payoff: PayoffMatrix,
    pub mode: Mode,
    pub dt: f64,
    pub t_max: f64,
    /// Strategy components are projected onto [epsilon, 1 - epsilon] after
    /// every step.
    pub epsilon: f64,
    /// Length (time units) of the trailing window used for attractor
    /// detection and time averages.
    pub window: f64,
    pub fp_tol: f64,
    pub cycle_tol: f64,
    pub drift_tol: f64,
    /// One stored sample every this many steps.
    pub stride: usize,
    /// Displacement speed below which a step counts as stalled; after
    /// `freeze_steps` consecutive stalled steps the state is held constant
    /// for the rest of the horizon. Zero disables the shortcut (a bitwise-
    /// unchanged state still freezes, which is exact).
    pub freeze_speed: f64,
    pub freeze_steps: usize,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            class_x: InformationClass::full(),
            class_y: InformationClass::full(),
            payoff: PayoffMatrix::standard(),
            mode: Mode::Mutual,
            dt: 0.01,
            t_max: 1e4,
            epsilon: 1e-4,
            window: 1e3,
            fp_tol: 1e-8,
            cycle_tol: 1e-3,
            drift_tol: 0.02,
            stride: 10,
            freeze_speed: 1e-12,
            freeze_steps: 1000,
        }
    }
}

impl LearningConfig {
    /// Defaults with the given class pair.
    pub fn new(class_x: InformationClass, class_y: InformationClass) -> Self {
        Self {
            class_x,
            class_y,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive and finite, got {}", self.dt));
        }
        if !(self.t_max > self.dt) || !self.t_max.is_finite() {
            return bad(format!("t_max must exceed dt, got {}", self.t_max));
        }
        if self.t_max / self.dt > 2e9 {
            return bad(format!(
                "t_max/dt = {:.3e} steps is beyond any reasonable budget",
                self.t_max / self.dt
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad(format!("epsilon must lie in (0, 0.5), got {}", self.epsilon));
        }
        if !(self.window > 0.0 && self.window < self.t_max) {
            return bad(format!(
                "window must lie in (0, t_max), got {} with t_max {}",
                self.window, self.t_max
            ));
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".to_string());
        }
        for (name, v) in [
            ("fp_tol", self.fp_tol),
            ("cycle_tol", self.cycle_tol),
            ("drift_tol", self.drift_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.freeze_speed >= 0.0) || !self.freeze_speed.is_finite() {
            return bad(format!(
                "freeze_speed must be nonnegative, got {}",
                self.freeze_speed
            ));
        }
        if self.freeze_steps == 0 {
            return bad("freeze_steps must be at least 1".to_string());
        }
        Ok(())
    }

    fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// Times at which `integrate_match` stores samples under this config:
    /// every `stride`-th step plus the horizon. Matches `Trajectory::times`
    /// exactly, so callers can resolve indices before running anything.
    pub fn sample_grid(&self) -> Vec<f64> {
        let n_steps = self.n_steps();
        let mut grid: Vec<f64> = (0..n_steps)
            .step_by(self.stride)
            .map(|k| k as f64 * self.dt)
            .collect();
        grid.push(n_steps as f64 * self.dt);
        grid
    }
}

type State = [f64; 2 * N_OUTCOMES];

fn dot4(a: &[f64; N_OUTCOMES], b: &[f64; N_OUTCOMES]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

struct MatchContext {
    pm: PayoffMatrix,
    block_x: [usize; N_OUTCOMES],
    block_y: [usize; N_OUTCOMES],
    one_sided: bool,
}

/// Velocity of the 8-component state plus the stationary distribution at
/// that state. Stage inputs may overshoot [0,1] by rounding; they are
/// clamped here, while the [eps, 1-eps] projection applies only to
/// accepted steps.
fn field(ctx: &MatchContext, s: &State) -> Result<(State, [f64; N_OUTCOMES])> {
    let xa: [f64; N_OUTCOMES] = std::array::from_fn(|i| s[i].clamp(0.0, 1.0));
    let ya: [f64; N_OUTCOMES] = std::array::from_fn(|i| s[N_OUTCOMES + i].clamp(0.0, 1.0));
    let (xr, yr, p) = payoff_rates_and_stationary(&xa, &ya, &ctx.pm)?;
    let mut bx = [0.0; N_OUTCOMES];
    let mut by = [0.0; N_OUTCOMES];
    for n in 0..N_OUTCOMES {
        bx[ctx.block_x[n]] += xa[n] * (1.0 - xa[n]) * xr[n];
        if !ctx.one_sided {
            by[ctx.block_y[n]] += ya[n] * (1.0 - ya[n]) * yr[n];
        }
    }
    let mut vel = [0.0; 2 * N_OUTCOMES];
    for n in 0..N_OUTCOMES {
        vel[n] = bx[ctx.block_x[n]];
        vel[N_OUTCOMES + n] = by[ctx.block_y[n]];
    }
    Ok((vel, p))
}

/// Per-component learning velocities (x_dot, y_dot) for unconstrained
/// memory-one play: x_dot[n] = x_n (1 - x_n) d(p . u)/d x_n, and the seat-
/// symmetric expression for y.
pub fn memory_one_velocity(
    x: &MemoryOneStrategy,
    y: &MemoryOneStrategy,
    pm: &PayoffMatrix,
) -> Result<([f64; N_OUTCOMES], [f64; N_OUTCOMES])> {
    let (xr, yr, _) = payoff_rates_and_stationary(x.probs(), y.probs(), pm)?;
    let xa = x.probs();
    let ya = y.probs();
    Ok((
        std::array::from_fn(|n| xa[n] * (1.0 - xa[n]) * xr[n]),
        std::array::from_fn(|n| ya[n] * (1.0 - ya[n]) * yr[n]),
    ))
}

/// Block-parameter velocities: each block moves at the sum of its members'
/// memory-one component velocities, evaluated at the embedded strategies.
pub fn class_velocity(
    sx: &ClassStrategy,
    sy: &ClassStrategy,
    pm: &PayoffMatrix,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (xdot, ydot) = memory_one_velocity(&sx.embed(), &sy.embed(), pm)?;
    let sum_blocks = |class: &InformationClass, dot: &[f64; N_OUTCOMES]| {
        class
            .blocks()
            .iter()
            .map(|members| members.iter().map(|&i| dot[i]).sum())
            .collect()
    };
    Ok((
        sum_blocks(sx.class(), &xdot),
        sum_blocks(sy.class(), &ydot),
    ))
}

/// Window summary over the trailing samples: per-component mean, min-max
/// amplitude, and the absolute difference between the means of the window's
/// two halves (a drift measure), plus the largest per-step displacement
/// speed seen at window samples. Components order x1..x4 then y1..y4.
#[derive(Debug, Clone, Copy)]
pub struct WindowStats {
    pub mean: [f64; 2 * N_OUTCOMES],
    pub amplitude: [f64; 2 * N_OUTCOMES],
    pub drift: [f64; 2 * N_OUTCOMES],
    pub max_speed: f64,
}

/// Sampled time series of one match.
#[derive(Debug, Clone)]
pub struct Trajectory {
    config: LearningConfig,
    times: Vec<f64>,
    x: Vec<[f64; N_OUTCOMES]>,
    y: Vec<[f64; N_OUTCOMES]>,
    u: Vec<f64>,
    v: Vec<f64>,
    p: Vec<[f64; N_OUTCOMES]>,
    speeds: Vec<f64>,
    window_start: usize,
    label: AttractorLabel,
    window_distribution: OutcomeDistribution,
}

fn window_start_index(times: &[f64], window: f64) -> usize {
    let end = *times.last().unwrap_or(&0.0);
    let cutoff = end - window - 1e-9;
    times.partition_point(|&t| t < cutoff)
}

impl Trajectory {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        config: LearningConfig,
        times: Vec<f64>,
        x: Vec<[f64; N_OUTCOMES]>,
        y: Vec<[f64; N_OUTCOMES]>,
        u: Vec<f64>,
        v: Vec<f64>,
        p: Vec<[f64; N_OUTCOMES]>,
        speeds: Vec<f64>,
    ) -> Result<Self> {
        let n = times.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty trajectory".to_string()));
        }
        for (name, len) in [
            ("x", x.len()),
            ("y", y.len()),
            ("u", u.len()),
            ("v", v.len()),
            ("p", p.len()),
            ("speeds", speeds.len()),
        ] {
            if len != n {
                return Err(Error::InvalidInput(format!(
                    "trajectory column {name} has {len} samples, expected {n}"
                )));
            }
        }
        let window_start = window_start_index(&times, config.window);
        let count = (n - window_start) as f64;
        let mut mean = [0.0; N_OUTCOMES];
        for pi in &p[window_start..] {
            for c in 0..N_OUTCOMES {
                mean[c] += pi[c];
            }
        }
        for c in &mut mean {
            *c /= count;
        }
        let window_distribution = OutcomeDistribution::new(mean)?;
        let mut traj = Self {
            config,
            times,
            x,
            y,
            u,
            v,
            p,
            speeds,
            window_start,
            label: AttractorLabel::Undecided,
            window_distribution,
        };
        traj.label = detect_attractor(&traj, &traj.config);
        Ok(traj)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Embedded memory-one x strategy per sample.
    pub fn x_samples(&self) -> &[[f64; N_OUTCOMES]] {
        &self.x
    }

    pub fn y_samples(&self) -> &[[f64; N_OUTCOMES]] {
        &self.y
    }

    /// Focal expected payoff per sample.
    pub fn u_samples(&self) -> &[f64] {
        &self.u
    }

    pub fn v_samples(&self) -> &[f64] {
        &self.v
    }

    /// Stationary outcome distribution per sample.
    pub fn p_samples(&self) -> &[[f64; N_OUTCOMES]] {
        &self.p
    }

    /// Per-step displacement speed (max component |delta|/dt) at each
    /// sample; the first sample has no preceding step and reads infinity.
    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn label(&self) -> AttractorLabel {
        self.label
    }

    pub fn config(&self) -> &LearningConfig {
        &self.config
    }

    /// Index of the first sample inside the trailing window.
    pub fn window_start(&self) -> usize {
        self.window_start
    }

    /// Time-averaged outcome distribution over the trailing window.
    pub fn window_distribution(&self) -> &OutcomeDistribution {
        &self.window_distribution
    }

    /// Mean payoffs (u, v) over the trailing window.
    pub fn window_mean_payoffs(&self) -> (f64, f64) {
        let lo = self.window_start;
        let count = (self.len() - lo) as f64;
        let su: f64 = self.u[lo..].iter().sum();
        let sv: f64 = self.v[lo..].iter().sum();
        (su / count, sv / count)
    }

    pub fn initial_x(&self) -> ClassStrategy {
        ClassStrategy::from_embedded(self.config.class_x.clone(), &self.x[0])
            .expect("stored samples are valid probabilities")
    }

    pub fn initial_y(&self) -> ClassStrategy {
        ClassStrategy::from_embedded(self.config.class_y.clone(), &self.y[0])
            .expect("stored samples are valid probabilities")
    }

    pub fn terminal_x(&self) -> ClassStrategy {
        ClassStrategy::from_embedded(self.config.class_x.clone(), self.x.last().unwrap())
            .expect("stored samples are valid probabilities")
    }

    pub fn terminal_y(&self) -> ClassStrategy {
        ClassStrategy::from_embedded(self.config.class_y.clone(), self.y.last().unwrap())
            .expect("stored samples are valid probabilities")
    }

    /// Index of the sample nearest to time `t`.
    pub fn index_at_time(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s < t);
        if i == 0 {
            return 0;
        }
        if i >= self.len() {
            return self.len() - 1;
        }
        if (self.times[i] - t).abs() < (t - self.times[i - 1]).abs() {
            i
        } else {
            i - 1
        }
    }

    /// Stats over the stored trailing window.
    pub fn window_stats(&self) -> Option<WindowStats> {
        self.stats_from(self.window_start)
    }

    /// Stats over the trailing `window` time units (recomputed start).
    pub fn window_stats_for(&self, window: f64) -> Option<WindowStats> {
        self.stats_from(window_start_index(&self.times, window))
    }

    fn stats_from(&self, lo: usize) -> Option<WindowStats> {
        let n = self.len();
        if n - lo < 2 {
            return None;
        }
        let mid = lo + (n - lo) / 2;
        let mut mean = [0.0; 2 * N_OUTCOMES];
        let mut half = [[0.0; 2 * N_OUTCOMES]; 2];
        let mut min = [f64::INFINITY; 2 * N_OUTCOMES];
        let mut max = [f64::NEG_INFINITY; 2 * N_OUTCOMES];
        let mut max_speed = 0.0f64;
        for i in lo..n {
            for c in 0..2 * N_OUTCOMES {
                let value = if c < N_OUTCOMES {
                    self.x[i][c]
                } else {
                    self.y[i][c - N_OUTCOMES]
                };
                mean[c] += value;
                half[usize::from(i >= mid)][c] += value;
                min[c] = min[c].min(value);
                max[c] = max[c].max(value);
            }
            max_speed = max_speed.max(self.speeds[i]);
        }
        let count = (n - lo) as f64;
        let counts = [(mid - lo) as f64, (n - mid) as f64];
        for c in 0..2 * N_OUTCOMES {
            mean[c] /= count;
        }
        Some(WindowStats {
            mean,
            amplitude: std::array::from_fn(|c| max[c] - min[c]),
            drift: std::array::from_fn(|c| (half[1][c] / counts[1] - half[0][c] / counts[0]).abs()),
            max_speed,
        })
    }

    /// CSV rows time, x-blocks, y-blocks, u, v; block columns are named by
    /// class digits (a "1212" x seat yields columns x13, x24).
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut header = vec!["time".to_string()];
        for name in self.config.class_x.block_names() {
            header.push(format!("x{name}"));
        }
        for name in self.config.class_y.block_names() {
            header.push(format!("y{name}"));
        }
        header.push("u".to_string());
        header.push("v".to_string());
        writeln!(w, "{}", header.join(","))?;
        let x_leads: Vec<usize> = self.config.class_x.blocks().iter().map(|m| m[0]).collect();
        let y_leads: Vec<usize> = self.config.class_y.blocks().iter().map(|m| m[0]).collect();
        let mut row = String::new();
        for i in 0..self.len() {
            row.clear();
            row.push_str(&sig12(self.times[i]));
            for &lead in &x_leads {
                row.push(',');
                row.push_str(&sig12(self.x[i][lead]));
            }
            for &lead in &y_leads {
                row.push(',');
                row.push_str(&sig12(self.y[i][lead]));
            }
            row.push(',');
            row.push_str(&sig12(self.u[i]));
            row.push(',');
            row.push_str(&sig12(self.v[i]));
            writeln!(w, "{row}")?;
        }
        Ok(())
    }
}

/// Labels the trailing window: a fixed point if nothing moves faster than
/// `fp_tol`; a limit cycle if some component oscillates with amplitude
/// above `cycle_tol` while no component's window mean drifts more than
/// `drift_tol`; otherwise undecided.
pub fn detect_attractor(traj: &Trajectory, cfg: &LearningConfig) -> AttractorLabel {
    let Some(stats) = traj.window_stats_for(cfg.window) else {
        return AttractorLabel::Undecided;
    };
    if stats.max_speed < cfg.fp_tol {
        return AttractorLabel::FixedPoint;
    }
    let max_amplitude = stats.amplitude.iter().fold(0.0f64, |a, &b| a.max(b));
    let max_drift = stats.drift.iter().fold(0.0f64, |a, &b| a.max(b));
    if max_amplitude > cfg.cycle_tol && max_drift < cfg.drift_tol {
        AttractorLabel::LimitCycle
    } else {
        AttractorLabel::Undecided
    }
}

fn add_scaled(s: &State, k: &State, h: f64) -> State {
    std::array::from_fn(|i| s[i] + h * k[i])
}

/// Integrates one match from the given initial strategies (clipped to
/// [eps, 1-eps] on entry) and returns the sampled trajectory, labeled.
pub fn integrate_match(
    init_x: &ClassStrategy,
    init_y: &ClassStrategy,
    cfg: &LearningConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if init_x.class() != &cfg.class_x || init_y.class() != &cfg.class_y {
        return Err(Error::InvalidInput(format!(
            "initial strategies are on classes ({}, {}) but the config names ({}, {})",
            init_x.class(),
            init_y.class(),
            cfg.class_x,
            cfg.class_y
        )));
    }
    let ctx = MatchContext {
        pm: cfg.payoff,
        block_x: std::array::from_fn(|n| cfg.class_x.block_of(n)),
        block_y: std::array::from_fn(|n| cfg.class_y.block_of(n)),
        one_sided: cfg.mode == Mode::OneSidedX,
    };
    let u_vec = cfg.payoff.focal_payoffs();
    let v_vec = cfg.payoff.opponent_payoffs();
    let eps = cfg.epsilon;
    let dt = cfg.dt;
    let n_steps = cfg.n_steps();

    let mut s: State = [0.0; 2 * N_OUTCOMES];
    s[..N_OUTCOMES].copy_from_slice(init_x.clipped(eps).embed().probs());
    s[N_OUTCOMES..].copy_from_slice(init_y.clipped(eps).embed().probs());

    let capacity = n_steps / cfg.stride + 2;
    let mut times = Vec::with_capacity(capacity);
    let mut xs: Vec<[f64; N_OUTCOMES]> = Vec::with_capacity(capacity);
    let mut ys: Vec<[f64; N_OUTCOMES]> = Vec::with_capacity(capacity);
    let mut us = Vec::with_capacity(capacity);
    let mut vs = Vec::with_capacity(capacity);
    let mut ps: Vec<[f64; N_OUTCOMES]> = Vec::with_capacity(capacity);
    let mut speeds = Vec::with_capacity(capacity);
    let push = |k: usize,
                    s: &State,
                    p: &[f64; N_OUTCOMES],
                    speed: f64,
                    times: &mut Vec<f64>,
                    xs: &mut Vec<[f64; N_OUTCOMES]>,
                    ys: &mut Vec<[f64; N_OUTCOMES]>,
                    us: &mut Vec<f64>,
                    vs: &mut Vec<f64>,
                    ps: &mut Vec<[f64; N_OUTCOMES]>,
                    speeds: &mut Vec<f64>| {
        times.push(k as f64 * dt);
        xs.push(std::array::from_fn(|i| s[i]));
        ys.push(std::array::from_fn(|i| s[N_OUTCOMES + i]));
        us.push(dot4(p, &u_vec));
        vs.push(dot4(p, &v_vec));
        ps.push(*p);
        speeds.push(speed);
    };

    let mut last_speed = f64::INFINITY;
    let mut quiet_steps = 0usize;
    let mut k = 0usize;
    while k < n_steps {
        let (k1, p1) = field(&ctx, &s)?;
        if k % cfg.stride == 0 {
            push(
                k, &s, &p1, last_speed, &mut times, &mut xs, &mut ys, &mut us, &mut vs, &mut ps,
                &mut speeds,
            );
        }
        let (k2, _) = field(&ctx, &add_scaled(&s, &k1, 0.5 * dt))?;
        let (k3, _) = field(&ctx, &add_scaled(&s, &k2, 0.5 * dt))?;
        let (k4, _) = field(&ctx, &add_scaled(&s, &k3, dt))?;
        let mut disp = 0.0f64;
        for c in 0..2 * N_OUTCOMES {
            let next =
                s[c] + dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            if !next.is_finite() {
                return Err(Error::NonFiniteState {
                    time: (k + 1) as f64 * dt,
                });
            }
            let next = next.clamp(eps, 1.0 - eps);
            disp = disp.max((next - s[c]).abs());
            s[c] = next;
        }
        last_speed = disp / dt;
        k += 1;
        if disp == 0.0 {
            break;
        }
        if cfg.freeze_speed > 0.0 && last_speed < cfg.freeze_speed {
            quiet_steps += 1;
            if quiet_steps >= cfg.freeze_steps {
                break;
            }
        } else {
            quiet_steps = 0;
        }
    }

    // Constant fill to the horizon (no-op when the loop ran to completion),
    // then the final sample.
    let xa: [f64; N_OUTCOMES] = std::array::from_fn(|i| s[i]);
    let ya: [f64; N_OUTCOMES] = std::array::from_fn(|i| s[N_OUTCOMES + i]);
    let p_end = stationary_arrays(&xa, &ya)?;
    for fill in k..n_steps {
        if fill % cfg.stride == 0 {
            push(
                fill, &s, &p_end, last_speed, &mut times, &mut xs, &mut ys, &mut us, &mut vs,
                &mut ps, &mut speeds,
            );
        }
    }
    push(
        n_steps, &s, &p_end, last_speed, &mut times, &mut xs, &mut ys, &mut us, &mut vs, &mut ps,
        &mut speeds,
    );

    Trajectory::from_parts(cfg.clone(), times, xs, ys, us, vs, ps, speeds)
}
