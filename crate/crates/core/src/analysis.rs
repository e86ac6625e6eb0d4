//! Equilibrium classification and the reduced two-variable system that
//! governs the exploitation regime.
//!
//! When one player pins x2 = x4 = 0 while the opponent pins y2 = 0, y3 = 1
//! (all up to the clip margin), the full eight-component flow collapses to
//! a predator-prey system in (x3, y4) with a conserved quantity H, a single
//! interior fixed point, and closed orbits around it. The helpers here
//! expose that subsystem, the outcome labeling used by every census, and
//! the structural test for exploitation trajectories.

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::equilibrium::OutcomeDistribution;
use crate::error::{Error, Result};
use crate::game::{PayoffMatrix, N_OUTCOMES, SEAT_SWAP};
pub use crate::gradients::Seat;

/// Time-averaged equilibrium character of one match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLabel {
    MutualCooperation,
    MutualDefection,
    Alternating,
    ExploitByX,
    ExploitByY,
    Other,
}

pub const OUTCOME_LABELS: [OutcomeLabel; 6] = [
    OutcomeLabel::MutualCooperation,
    OutcomeLabel::MutualDefection,
    OutcomeLabel::Alternating,
    OutcomeLabel::ExploitByX,
    OutcomeLabel::ExploitByY,
    OutcomeLabel::Other,
];

impl OutcomeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeLabel::MutualCooperation => "mutual_cooperation",
            OutcomeLabel::MutualDefection => "mutual_defection",
            OutcomeLabel::Alternating => "alternating",
            OutcomeLabel::ExploitByX => "exploit_by_x",
            OutcomeLabel::ExploitByY => "exploit_by_y",
            OutcomeLabel::Other => "other",
        }
    }
}

impl std::fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Labels a time-averaged distribution. The checks run in a fixed order
/// (cooperation, defection, alternating, exploitation by either seat), so
/// exactly one label applies.
pub fn classify_outcome(p_avg: &OutcomeDistribution, delta: f64) -> Result<OutcomeLabel> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidInput(format!(
            "classification threshold must lie in (0, 0.5), got {delta}"
        )));
    }
    let p = p_avg.probs();
    let label = if p[0] > 1.0 - delta {
        OutcomeLabel::MutualCooperation
    } else if p[3] > 1.0 - delta {
        OutcomeLabel::MutualDefection
    } else if (p[1] - 0.5).abs() < delta && (p[2] - 0.5).abs() < delta {
        OutcomeLabel::Alternating
    } else if p[2] - p[1] > delta {
        OutcomeLabel::ExploitByX
    } else if p[1] - p[2] > delta {
        OutcomeLabel::ExploitByY
    } else {
        OutcomeLabel::Other
    };
    Ok(label)
}

/// Point of the reduced (x3, y4) subsystem, carrying the conserved quantity
/// evaluated at construction time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LVState {
    x3: f64,
    y4: f64,
    h: f64,
}

impl LVState {
    pub fn new(x3: f64, y4: f64, pm: &PayoffMatrix) -> Result<Self> {
        if !(x3 > 0.0 && x3 < 1.0 && y4 > 0.0 && y4 < 1.0) {
            return Err(Error::InvariantDomain(format!(
                "reduced state must be interior, got x3 = {x3}, y4 = {y4}"
            )));
        }
        let h = invariant_raw(x3, y4, pm);
        if !h.is_finite() {
            return Err(Error::InvariantDomain(format!(
                "conserved quantity is not finite at x3 = {x3}, y4 = {y4}"
            )));
        }
        Ok(Self { x3, y4, h })
    }

    pub fn x3(&self) -> f64 {
        self.x3
    }

    pub fn y4(&self) -> f64 {
        self.y4
    }

    /// Conserved quantity at this point.
    pub fn h(&self) -> f64 {
        self.h
    }
}

fn invariant_raw(x3: f64, y4: f64, pm: &PayoffMatrix) -> f64 {
    let (t, r, p, s) = (pm.t(), pm.r(), pm.p(), pm.s());
    let _ = r;
    -(p - s) * (x3.ln() + 2.0 * (1.0 - y4).ln()) + (t - p) * x3 - (t - s) * y4
}

fn lv_rhs(x3: f64, y4: f64, pm: &PayoffMatrix) -> Result<(f64, f64)> {
    let (t, p, s) = (pm.t(), pm.p(), pm.s());
    let k = 1.0 + y4 - x3 + y4 * x3;
    if k * k < 1e-12 {
        return Err(Error::DegenerateState(format!(
            "shared factor denominator vanishes at x3 = {x3}, y4 = {y4}"
        )));
    }
    let f = y4 * (1.0 - x3) / (k * k);
    let x3_dot = x3 * ((t - 2.0 * p + s) - (t - s) * y4) * f;
    let y4_dot = (1.0 - y4) * ((t - p) * x3 - (p - s)) * f;
    Ok((x3_dot, y4_dot))
}

/// Right-hand side of the reduced subsystem, shared positive factor
/// y4 (1 - x3) / (1 + y4 - x3 + y4 x3)^2 included.
pub fn lv_velocity(state: &LVState, pm: &PayoffMatrix) -> Result<(f64, f64)> {
    lv_rhs(state.x3, state.y4, pm)
}

/// The unique interior rest point of the reduced subsystem and the payoffs
/// received there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LVFixedPoint {
    pub x3: f64,
    pub y4: f64,
    pub u: f64,
    pub v: f64,
}

/// Fixed point ((P-S)/(T-P), (T-2P+S)/(T-S)) with payoffs ((T+S)/2, P).
/// Fails when either coordinate leaves (0, 1), which is how a payoff matrix
/// without an interior rest point announces itself.
pub fn lv_fixed_point(pm: &PayoffMatrix) -> Result<LVFixedPoint> {
    let (t, p, s) = (pm.t(), pm.p(), pm.s());
    let x3 = (p - s) / (t - p);
    let y4 = (t - 2.0 * p + s) / (t - s);
    if !(x3 > 0.0 && x3 < 1.0 && y4 > 0.0 && y4 < 1.0) {
        return Err(Error::BoundaryFixedPoint { x3, y4 });
    }
    Ok(LVFixedPoint {
        x3,
        y4,
        u: (t + s) / 2.0,
        v: p,
    })
}

/// H = -(P-S)(ln x3 + 2 ln(1-y4)) + (T-P) x3 - (T-S) y4, constant along
/// orbits of the reduced flow.
pub fn lv_invariant(state: &LVState, pm: &PayoffMatrix) -> Result<f64> {
    if !(state.x3 > 0.0) || !(state.y4 < 1.0) {
        return Err(Error::InvariantDomain(format!(
            "logarithms need x3 > 0 and y4 < 1, got x3 = {}, y4 = {}",
            state.x3, state.y4
        )));
    }
    Ok(invariant_raw(state.x3, state.y4, pm))
}

/// Plain fixed-step RK4 on the reduced system; every step is returned with
/// its own recomputed conserved quantity, so drift is directly visible.
pub fn integrate_lv(
    start: &LVState,
    pm: &PayoffMatrix,
    dt: f64,
    t_max: f64,
) -> Result<Vec<LVState>> {
    if !(dt > 0.0) || !dt.is_finite() || !(t_max > dt) || t_max / dt > 2e8 {
        return Err(Error::InvalidInput(format!(
            "bad reduced-system integration span: dt = {dt}, t_max = {t_max}"
        )));
    }
    let n = (t_max / dt).round() as usize;
    let mut out = Vec::with_capacity(n + 1);
    let (mut x3, mut y4) = (start.x3, start.y4);
    out.push(*start);
    for step in 0..n {
        let (k1x, k1y) = lv_rhs(x3, y4, pm)?;
        let (k2x, k2y) = lv_rhs(x3 + 0.5 * dt * k1x, y4 + 0.5 * dt * k1y, pm)?;
        let (k3x, k3y) = lv_rhs(x3 + 0.5 * dt * k2x, y4 + 0.5 * dt * k2y, pm)?;
        let (k4x, k4y) = lv_rhs(x3 + dt * k3x, y4 + dt * k3y, pm)?;
        x3 += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y4 += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        if !(x3 > 0.0 && x3 < 1.0 && y4 > 0.0 && y4 < 1.0) {
            return Err(Error::NonFiniteState {
                time: (step + 1) as f64 * dt,
            });
        }
        out.push(LVState::new(x3, y4, pm)?);
    }
    Ok(out)
}

/// True iff T - R - P + S > 0, the condition under which mutual learning
/// can sustain exploitation.
pub fn is_submodular(pm: &PayoffMatrix) -> bool {
    pm.t() - pm.r() - pm.p() + pm.s() > 0.0
}

/// Euclidean distance from (u, v) to the feasible payoff region, the convex
/// hull of (R,R), (S,T), (T,S), (P,P); zero inside.
pub fn payoff_region_distance(u: f64, v: f64, pm: &PayoffMatrix) -> f64 {
    let pts = [
        (pm.r(), pm.r()),
        (pm.s(), pm.t()),
        (pm.t(), pm.s()),
        (pm.p(), pm.p()),
    ];
    let hull = convex_hull(&pts);
    let closing = [hull[hull.len() - 1], hull[0]];
    let mut is_inside = true;
    let mut best = f64::INFINITY;
    for edge in hull.windows(2).chain(std::iter::once(closing.as_slice())) {
        let (ax, ay) = edge[0];
        let (bx, by) = edge[1];
        let cross = (bx - ax) * (v - ay) - (by - ay) * (u - ax);
        if cross < 0.0 {
            is_inside = false;
        }
        best = best.min(segment_distance(u, v, ax, ay, bx, by));
    }
    if is_inside {
        0.0
    } else {
        best
    }
}

/// Counterclockwise hull of up to four points (monotone chain).
fn convex_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = pts.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

/// Tests whether a trajectory's trailing window realizes the exploitation
/// structure, in either orientation: the exploiter holds its after-CD and
/// after-DD components at the clip margin with its after-DC component
/// oscillating, the exploited player holds after-CD at the margin and
/// after-DC at one with its after-DD component oscillating, both after-CC
/// components near-stationary, and the time-averaged distribution matching
/// the normalized (0, y4 x3, y4, 1 - x3) pattern with p_DC > p_CD from the
/// exploiter's seat. Returns the exploiting seat, or None.
pub fn check_exploitation_structure(traj: &Trajectory, tol: f64) -> Option<Seat> {
    let stats = traj.window_stats()?;
    [Seat::X, Seat::Y]
        .into_iter()
        .find(|&seat| structure_holds(traj, &stats.mean, &stats.amplitude, tol, seat))
}

fn structure_holds(
    traj: &Trajectory,
    mean: &[f64; 2 * N_OUTCOMES],
    amplitude: &[f64; 2 * N_OUTCOMES],
    tol: f64,
    exploiter: Seat,
) -> bool {
    let cfg = traj.config();
    let eps = cfg.epsilon;
    let (e, o) = match exploiter {
        Seat::X => (0, N_OUTCOMES),
        Seat::Y => (N_OUTCOMES, 0),
    };
    let low = eps + tol;
    let pinned = mean[e + 1] <= low
        && mean[e + 3] <= low
        && mean[o + 1] <= low
        && mean[o + 2] >= 1.0 - low;
    if !pinned {
        return false;
    }
    let oscillating = amplitude[e + 2] > cfg.cycle_tol && amplitude[o + 3] > cfg.cycle_tol;
    let neutral_still = amplitude[e] <= tol && amplitude[o] <= tol;
    if !oscillating || !neutral_still {
        return false;
    }

    // Window average of the instantaneous normalized pattern, compared to
    // the stored window-averaged distribution in the exploiter's seat view.
    let lo = traj.window_start();
    let n = traj.len();
    let mut pattern = [0.0f64; N_OUTCOMES];
    for i in lo..n {
        let (e3, o4) = match exploiter {
            Seat::X => (traj.x_samples()[i][2], traj.y_samples()[i][3]),
            Seat::Y => (traj.y_samples()[i][2], traj.x_samples()[i][3]),
        };
        let k = 1.0 + o4 - e3 + o4 * e3;
        pattern[1] += o4 * e3 / k;
        pattern[2] += o4 / k;
        pattern[3] += (1.0 - e3) / k;
    }
    let count = (n - lo) as f64;
    for entry in &mut pattern {
        *entry /= count;
    }
    let p_avg = traj.window_distribution().probs();
    let seen: [f64; N_OUTCOMES] = match exploiter {
        Seat::X => *p_avg,
        Seat::Y => std::array::from_fn(|i| p_avg[SEAT_SWAP[i]]),
    };
    let matches = (0..N_OUTCOMES).all(|i| (pattern[i] - seen[i]).abs() <= tol);
    matches && seen[2] > seen[1]
}
