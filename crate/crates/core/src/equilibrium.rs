//! Per-round outcome process of a fixed strategy pair: the column-stochastic
//! transition matrix over the four outcomes, its stationary distribution
//! (closed form, power iteration, Monte Carlo), and expected payoffs.
//!
//! The three stationary routes are kept independent so each can serve as an
//! oracle for the others.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{MemoryOneStrategy, PayoffMatrix, N_OUTCOMES, SEAT_SWAP};

/// L1 convergence tolerance for power iteration.
pub const POWER_TOL: f64 = 1e-13;

/// Iteration cap for power iteration.
pub const POWER_MAX_ITER: u64 = 1_000_000;

/// |k| below this means the closed-form normalization is degenerate.
const DEGENERACY_TOL: f64 = 1e-12;

/// Column-stochastic transition matrix over outcomes; entry (next, prev).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    m: [[f64; N_OUTCOMES]; N_OUTCOMES],
}

impl TransitionMatrix {
    pub fn entry(&self, next: usize, prev: usize) -> f64 {
        self.m[next][prev]
    }

    pub fn rows(&self) -> &[[f64; N_OUTCOMES]; N_OUTCOMES] {
        &self.m
    }

    /// Matrix-vector product M v (one step of the outcome distribution).
    pub fn apply(&self, v: &[f64; N_OUTCOMES]) -> [f64; N_OUTCOMES] {
        let mut out = [0.0; N_OUTCOMES];
        for next in 0..N_OUTCOMES {
            let row = &self.m[next];
            out[next] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
        out
    }
}

pub(crate) fn transition_matrix_arrays(
    x: &[f64; N_OUTCOMES],
    y: &[f64; N_OUTCOMES],
) -> TransitionMatrix {
    let mut m = [[0.0; N_OUTCOMES]; N_OUTCOMES];
    for prev in 0..N_OUTCOMES {
        // The opponent reads the previous outcome from its own seat.
        let a = x[prev];
        let b = y[SEAT_SWAP[prev]];
        m[0][prev] = a * b;
        m[1][prev] = a * (1.0 - b);
        m[2][prev] = (1.0 - a) * b;
        m[3][prev] = (1.0 - a) * (1.0 - b);
    }
    TransitionMatrix { m }
}

/// Transition matrix of the outcome chain for the pair (x, y).
pub fn transition_matrix(x: &MemoryOneStrategy, y: &MemoryOneStrategy) -> TransitionMatrix {
    transition_matrix_arrays(x.probs(), y.probs())
}

/// Probability of each outcome; non-negative, sums to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    p: [f64; N_OUTCOMES],
}

impl OutcomeDistribution {
    pub fn new(p: [f64; N_OUTCOMES]) -> Result<Self> {
        let mut q = p;
        for (index, v) in q.iter_mut().enumerate() {
            if !v.is_finite() || *v < -1e-9 || *v > 1.0 + 1e-9 {
                return Err(Error::ProbabilityRange {
                    index,
                    value: p[index],
                });
            }
            *v = v.clamp(0.0, 1.0);
        }
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::DegenerateStationary { k: sum });
        }
        for v in &mut q {
            *v /= sum;
        }
        Ok(Self { p: q })
    }

    pub fn probs(&self) -> &[f64; N_OUTCOMES] {
        &self.p
    }

    pub fn get(&self, outcome: usize) -> f64 {
        self.p[outcome]
    }

    /// The same distribution seen from the opposite seat (CD and DC swap).
    pub fn seat_swapped(&self) -> Self {
        Self {
            p: [self.p[0], self.p[2], self.p[1], self.p[3]],
        }
    }
}

/// Unnormalized stationary components and their sum k.
pub(crate) fn closed_form_raw(
    x: &[f64; N_OUTCOMES],
    y: &[f64; N_OUTCOMES],
) -> ([f64; N_OUTCOMES], f64) {
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    let (y1, y2, y3, y4) = (y[0], y[1], y[2], y[3]);
    let p_cc =
        (x4 + (x3 - x4) * y2) * (y4 + (y3 - y4) * x2) - x3 * y3 * (x2 - x4) * (y2 - y4);
    let p_cd = (x4 + (x3 - x4) * y4) * ((1.0 - y2) - (y1 - y2) * x1)
        - x4 * (1.0 - y1) * (x1 - x3) * (y2 - y4);
    let p_dc = ((1.0 - x2) - (x1 - x2) * y1) * (y4 + (y3 - y4) * x4)
        - (1.0 - x1) * y4 * (x2 - x4) * (y1 - y3);
    let p_dd = ((1.0 - x2) - (x1 - x2) * y3) * ((1.0 - y2) - (y1 - y2) * x3)
        - (1.0 - x2) * (1.0 - y2) * (x1 - x3) * (y1 - y3);
    let k = p_cc + p_cd + p_dc + p_dd;
    ([p_cc, p_cd, p_dc, p_dd], k)
}

pub(crate) fn stationary_closed_form_arrays(
    x: &[f64; N_OUTCOMES],
    y: &[f64; N_OUTCOMES],
) -> Result<[f64; N_OUTCOMES]> {
    let (terms, k) = closed_form_raw(x, y);
    if !k.is_finite() || k.abs() < DEGENERACY_TOL {
        return Err(Error::DegenerateStationary { k });
    }
    let mut p = [0.0; N_OUTCOMES];
    for i in 0..N_OUTCOMES {
        p[i] = terms[i] / k;
        if !p[i].is_finite() || p[i] < -1e-9 || p[i] > 1.0 + 1e-9 {
            return Err(Error::DegenerateStationary { k });
        }
        p[i] = p[i].clamp(0.0, 1.0);
    }
    let sum: f64 = p.iter().sum();
    for v in &mut p {
        *v /= sum;
    }
    Ok(p)
}

/// Stationary distribution in closed form. Fails when the normalization is
/// degenerate (reducible or periodic chains, e.g. deterministic strategies);
/// callers then fall back to [`stationary_power_iteration`].
pub fn stationary_closed_form(
    x: &MemoryOneStrategy,
    y: &MemoryOneStrategy,
) -> Result<OutcomeDistribution> {
    let p = stationary_closed_form_arrays(x.probs(), y.probs())?;
    OutcomeDistribution::new(p)
}

pub(crate) fn stationary_power_iteration_arrays(
    m: &TransitionMatrix,
    tol: f64,
    max_iter: u64,
) -> Result<[f64; N_OUTCOMES]> {
    let mut p = [0.25; N_OUTCOMES];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let next = m.apply(&p);
        residual = (0..N_OUTCOMES).map(|i| (next[i] - p[i]).abs()).sum();
        p = next;
        if residual < tol {
            // One renormalization guards against drift of the L1 norm.
            let sum: f64 = p.iter().sum();
            for v in &mut p {
                *v /= sum;
            }
            return Ok(p);
        }
    }
    Err(Error::PowerIterationDiverged { max_iter, residual })
}

/// Stationary distribution by repeated application of M from the uniform
/// distribution, stopping when the L1 step falls below `tol`.
pub fn stationary_power_iteration(
    m: &TransitionMatrix,
    tol: f64,
    max_iter: u64,
) -> Result<OutcomeDistribution> {
    OutcomeDistribution::new(stationary_power_iteration_arrays(m, tol, max_iter)?)
}

pub(crate) fn stationary_arrays(
    x: &[f64; N_OUTCOMES],
    y: &[f64; N_OUTCOMES],
) -> Result<[f64; N_OUTCOMES]> {
    match stationary_closed_form_arrays(x, y) {
        Ok(p) => Ok(p),
        Err(_) => stationary_power_iteration_arrays(
            &transition_matrix_arrays(x, y),
            POWER_TOL,
            POWER_MAX_ITER,
        ),
    }
}

/// Closed form with automatic power-iteration fallback on degeneracy.
pub fn stationary_distribution(
    x: &MemoryOneStrategy,
    y: &MemoryOneStrategy,
) -> Result<OutcomeDistribution> {
    OutcomeDistribution::new(stationary_arrays(x.probs(), y.probs())?)
}

/// Cooperation threshold against a raw u64 draw; exact for p = 0 and p = 1.
fn coop_threshold(p: f64) -> u128 {
    (p * 18446744073709551616.0) as u128
}

/// Simulates the repeated game for `rounds` counted rounds after `burn_in`
/// uncounted ones and returns empirical outcome frequencies.
///
/// Deterministic given `seed` (ChaCha8 stream; two draws per round, focal
/// player first). History starts from one uncounted fair-coin round.
pub fn simulate_repeated_game(
    x: &MemoryOneStrategy,
    y: &MemoryOneStrategy,
    seed: u64,
    rounds: u64,
    burn_in: u64,
) -> OutcomeDistribution {
    assert!(rounds > 0, "need at least one counted round");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tx: [u128; N_OUTCOMES] = std::array::from_fn(|i| coop_threshold(x.get(i)));
    let ty: [u128; N_OUTCOMES] = std::array::from_fn(|i| coop_threshold(y.get(SEAT_SWAP[i])));
    let half = coop_threshold(0.5);
    let a0 = (rng.next_u64() as u128) < half;
    let b0 = (rng.next_u64() as u128) < half;
    let mut state = match (a0, b0) {
        (true, true) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (false, false) => 3,
    };
    let mut counts = [0u64; N_OUTCOMES];
    for round in 0..(burn_in + rounds) {
        let a = (rng.next_u64() as u128) < tx[state];
        let b = (rng.next_u64() as u128) < ty[state];
        state = ((!a as usize) << 1) | (!b as usize);
        if round >= burn_in {
            counts[state] += 1;
        }
    }
    let total = rounds as f64;
    OutcomeDistribution::new(std::array::from_fn(|i| counts[i] as f64 / total))
        .expect("frequencies form a distribution")
}

/// Expected per-round payoffs (focal, opponent) under an outcome distribution.
pub fn expected_payoffs(p: &OutcomeDistribution, pm: &PayoffMatrix) -> (f64, f64) {
    let u = pm.focal_payoffs();
    let v = pm.opponent_payoffs();
    let probs = p.probs();
    let dot = |w: &[f64; N_OUTCOMES]| probs[0] * w[0] + probs[1] * w[1] + probs[2] * w[2] + probs[3] * w[3];
    (dot(&u), dot(&v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn strat(p: [f64; 4]) -> MemoryOneStrategy {
        MemoryOneStrategy::new(p).unwrap()
    }

    fn seeded_interior_pair(rng: &mut ChaCha8Rng) -> (MemoryOneStrategy, MemoryOneStrategy) {
        let draw = |rng: &mut ChaCha8Rng| {
            strat(std::array::from_fn(|_| rng.gen_range(0.05..0.95)))
        };
        (draw(rng), draw(rng))
    }

    #[test]
    #[ignore]
    fn bench_monte_carlo_throughput() {
        let x = strat([0.7, 0.2, 0.6, 0.4]);
        let y = strat([0.3, 0.8, 0.5, 0.6]);
        let start = std::time::Instant::now();
        let p = simulate_repeated_game(&x, &y, 1, 1_000_000, 0);
        println!(
            "1e6 rounds: {:.3} s ({:?})",
            start.elapsed().as_secs_f64(),
            p.probs()
        );
    }

    #[test]
    fn transition_matrix_is_column_stochastic() {
        let x = strat([0.3, 0.8, 0.2, 0.7]);
        let y = strat([0.6, 0.1, 0.9, 0.4]);
        let m = transition_matrix(&x, &y);
        for prev in 0..4 {
            let col: f64 = (0..4).map(|next| m.entry(next, prev)).sum();
            assert!((col - 1.0).abs() < 1e-15);
            for next in 0..4 {
                assert!(m.entry(next, prev) >= 0.0);
            }
        }
    }

    #[test]
    fn transition_matrix_uses_opponent_seat_view() {
        let x = strat([0.3, 0.8, 0.2, 0.7]);
        let y = strat([0.6, 0.1, 0.9, 0.4]);
        let m = transition_matrix(&x, &y);
        // Previous outcome CD: focal reacts with x2, opponent sees DC and
        // reacts with y3.
        assert!((m.entry(0, 1) - 0.8 * 0.9).abs() < 1e-15);
        assert!((m.entry(1, 1) - 0.8 * 0.1).abs() < 1e-15);
        assert!((m.entry(2, 1) - 0.2 * 0.9).abs() < 1e-15);
        assert!((m.entry(3, 1) - 0.2 * 0.1).abs() < 1e-15);
    }

    #[test]
    fn power_iteration_all_cooperate_absorbs() {
        let allc = strat([1.0; 4]);
        let m = transition_matrix(&allc, &allc);
        let p = stationary_power_iteration(&m, POWER_TOL, POWER_MAX_ITER).unwrap();
        assert!((p.get(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_on_exploitation_boundary() {
        // x3 = 0.5, y4 = 0.5 on the boundary pattern gives (0, 0.2, 0.4, 0.4)
        // independent of the free components x1 and y1.
        for (x1, y1) in [(0.3, 0.7), (0.9, 0.2)] {
            let x = strat([x1, 0.0, 0.5, 0.0]);
            let y = strat([y1, 0.0, 1.0, 0.5]);
            let p = stationary_closed_form(&x, &y).unwrap();
            let expect = [0.0, 0.2, 0.4, 0.4];
            for i in 0..4 {
                assert!(
                    (p.get(i) - expect[i]).abs() < 1e-12,
                    "component {i}: {} vs {}",
                    p.get(i),
                    expect[i]
                );
            }
        }
    }

    #[test]
    fn closed_form_matches_power_iteration_on_random_interior_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        for _ in 0..100 {
            let (x, y) = seeded_interior_pair(&mut rng);
            let a = stationary_closed_form(&x, &y).unwrap();
            let m = transition_matrix(&x, &y);
            let b = stationary_power_iteration(&m, POWER_TOL, POWER_MAX_ITER).unwrap();
            for i in 0..4 {
                assert!(
                    (a.get(i) - b.get(i)).abs() < 1e-10,
                    "{:?} vs {:?}",
                    a.probs(),
                    b.probs()
                );
            }
        }
    }

    #[test]
    fn closed_form_is_stationary_under_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        for _ in 0..100 {
            let (x, y) = seeded_interior_pair(&mut rng);
            let p = stationary_closed_form(&x, &y).unwrap();
            let m = transition_matrix(&x, &y);
            let mp = m.apply(p.probs());
            for i in 0..4 {
                assert!((mp[i] - p.get(i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stationary_is_seat_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
        for _ in 0..50 {
            let (x, y) = seeded_interior_pair(&mut rng);
            let p_xy = stationary_closed_form(&x, &y).unwrap();
            let p_yx = stationary_closed_form(&y, &x).unwrap();
            let swapped = p_xy.seat_swapped();
            for i in 0..4 {
                assert!((p_yx.get(i) - swapped.get(i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_rejects_tit_for_tat_pair() {
        let tft = strat([1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            stationary_closed_form(&tft, &tft),
            Err(Error::DegenerateStationary { .. })
        ));
    }

    #[test]
    fn fallback_handles_degenerate_closed_form() {
        let tft = strat([1.0, 0.0, 1.0, 0.0]);
        // The TFT/TFT chain preserves the uniform start of power iteration.
        let p = stationary_distribution(&tft, &tft).unwrap();
        for i in 0..4 {
            assert!((p.get(i) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_uniform_strategies_give_uniform_outcomes() {
        let x = strat([0.5; 4]);
        let y = strat([0.5; 4]);
        let p = simulate_repeated_game(&x, &y, 42, 1_000_000, 10_000);
        for i in 0..4 {
            assert!((p.get(i) - 0.25).abs() < 0.005, "{:?}", p.probs());
        }
    }

    #[test]
    fn monte_carlo_all_defect_reaches_mutual_defection() {
        let eps = 1e-4;
        let alld = strat([eps; 4]);
        let p = simulate_repeated_game(&alld, &alld, 7, 1_000_000, 10_000);
        assert!(p.get(3) >= 0.99);
    }

    #[test]
    fn monte_carlo_is_deterministic_given_seed() {
        let x = strat([0.3, 0.8, 0.2, 0.7]);
        let y = strat([0.6, 0.1, 0.9, 0.4]);
        let a = simulate_repeated_game(&x, &y, 99, 100_000, 1000);
        let b = simulate_repeated_game(&x, &y, 99, 100_000, 1000);
        assert_eq!(a.probs(), b.probs());
        let c = simulate_repeated_game(&x, &y, 100, 100_000, 1000);
        assert_ne!(a.probs(), c.probs());
    }

    #[test]
    fn expected_payoffs_examples() {
        let pm = PayoffMatrix::standard();
        let uniform = OutcomeDistribution::new([0.25; 4]).unwrap();
        let (u, v) = expected_payoffs(&uniform, &pm);
        assert!((u - 2.25).abs() < 1e-15);
        assert!((v - 2.25).abs() < 1e-15);

        let exploit = OutcomeDistribution::new([0.0, 0.2, 0.4, 0.4]).unwrap();
        let (u, v) = expected_payoffs(&exploit, &pm);
        assert!((u - 2.4).abs() < 1e-12);
        assert!((v - 1.4).abs() < 1e-12);
    }

    #[test]
    fn payoffs_stay_within_bounds() {
        let pm = PayoffMatrix::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
        for _ in 0..100 {
            let p = {
                let raw: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
                let sum: f64 = raw.iter().sum();
                OutcomeDistribution::new(std::array::from_fn(|i| raw[i] / sum)).unwrap()
            };
            let (u, v) = expected_payoffs(&p, &pm);
            assert!(u >= pm.s() - 1e-12 && u <= pm.t() + 1e-12);
            assert!(v >= pm.s() - 1e-12 && v <= pm.t() + 1e-12);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn interior() -> impl Strategy<Value = [f64; 4]> {
            proptest::array::uniform4(0.01f64..0.99)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn closed_form_agrees_with_power_iteration(xa in interior(), ya in interior()) {
                let x = strat(xa);
                let y = strat(ya);
                let a = stationary_closed_form(&x, &y).unwrap();
                let m = transition_matrix(&x, &y);
                let b = stationary_power_iteration(&m, POWER_TOL, POWER_MAX_ITER).unwrap();
                for i in 0..4 {
                    prop_assert!((a.get(i) - b.get(i)).abs() < 1e-9);
                }
            }

            #[test]
            fn distribution_sums_to_one(xa in interior(), ya in interior()) {
                let x = strat(xa);
                let y = strat(ya);
                let p = stationary_closed_form(&x, &y).unwrap();
                let sum: f64 = p.probs().iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(p.probs().iter().all(|&v| v >= 0.0));
            }
        }
    }
}
