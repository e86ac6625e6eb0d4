//! Sensitivity of the stationary outcome distribution to a single strategy
//! component, computed three independent ways: a rank-completed linear
//! solve, a truncated propagation series, and central finite differences.
//!
//! Perturbing component n of the focal player changes only column n of the
//! transition matrix, by p_n(C) - p_n(D) where p_n(C) (resp. D) is the
//! next-outcome distribution after the focal player cooperates (defects) in
//! reaction to outcome n. The stationary response solves
//! (I - M) dp = p_e[n] * (p_n(C) - p_n(D)) subject to sum(dp) = 0.

use serde::Serialize;

use crate::equilibrium::{stationary_arrays, transition_matrix_arrays, TransitionMatrix};
use crate::error::{Error, Result};
use crate::game::{MemoryOneStrategy, PayoffMatrix, N_OUTCOMES, SEAT_SWAP};

/// Series terms are dropped once their L1 norm falls below this.
pub const SERIES_TOL: f64 = 1e-12;

/// Which player's strategy component is perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Seat {
    X,
    Y,
}

/// The 4-vector d p_e / d component for one strategy component; sums to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumGradient {
    pub seat: Seat,
    pub component: usize,
    pub d_p: [f64; N_OUTCOMES],
}

/// Truncation report for the series route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTail {
    /// Number of propagation terms actually summed (beyond t = 0).
    pub terms: usize,
    /// L1 norm of the last term added, scaled like the gradient.
    pub last_term_l1: f64,
}

/// Affected column and unscaled perturbation vector for one component.
fn perturbation(
    x: &[f64; N_OUTCOMES],
    y: &[f64; N_OUTCOMES],
    seat: Seat,
    component: usize,
) -> (usize, [f64; N_OUTCOMES]) {
    match seat {
        Seat::X => {
            let b = y[SEAT_SWAP[component]];
            (component, [b, 1.0 - b, -b, -(1.0 - b)])
        }
        Seat::Y => {
            // Component n of the opponent reacts to focal outcome SEAT_SWAP[n].
            let col = SEAT_SWAP[component];
            let a = x[col];
            (col, [a, -a, 1.0 - a, -(1.0 - a)])
        }
    }
}

/// Rows 0..3 of (I - M) with the last row replaced by the zero-sum
/// constraint. Nonsingular whenever the chain has a unique stationary
/// distribution.
fn sum_constrained_system(m: &TransitionMatrix) -> [[f64; N_OUTCOMES]; N_OUTCOMES] {
    let mut a = [[0.0; N_OUTCOMES]; N_OUTCOMES];
    for r in 0..N_OUTCOMES - 1 {
        for c in 0..N_OUTCOMES {
            a[r][c] = f64::from(u8::from(r == c)) - m.entry(r, c);
        }
    }
    a[N_OUTCOMES - 1] = [1.0; N_OUTCOMES];
    a
}

fn transpose(a: &[[f64; N_OUTCOMES]; N_OUTCOMES]) -> [[f64; N_OUTCOMES]; N_OUTCOMES] {
    let mut t = [[0.0; N_OUTCOMES]; N_OUTCOMES];
    for r in 0..N_OUTCOMES {
        for c in 0..N_OUTCOMES {
            t[c][r] = a[r][c];
        }
    }
    t
}

/// Gaussian elimination with partial pivoting; K right-hand sides.
fn gauss_solve<const K: usize>(
    mut a: [[f64; N_OUTCOMES]; N_OUTCOMES],
    mut b: [[f64; N_OUTCOMES]; K],
) -> Result<[[f64; N_OUTCOMES]; K]> {
    for col in 0..N_OUTCOMES {
        let mut pivot = col;
        for r in col + 1..N_OUTCOMES {
            if a[r][col].abs() > a[pivot][col].abs() {
                pivot = r;
            }
        }
        if a[pivot][col].abs() < 1e-30 {
            return Err(Error::SingularSystem);
        }
        if pivot != col {
            a.swap(pivot, col);
            for rhs in &mut b {
                rhs.swap(pivot, col);
            }
        }
        for r in col + 1..N_OUTCOMES {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..N_OUTCOMES {
                a[r][c] -= f * a[col][c];
            }
            for rhs in &mut b {
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut out = [[0.0; N_OUTCOMES]; K];
    for (k, rhs) in b.iter().enumerate() {
        for r in (0..N_OUTCOMES).rev() {
            let mut v = rhs[r];
            for c in r + 1..N_OUTCOMES {
                v -= a[r][c] * out[k][c];
            }
            out[k][r] = v / a[r][r];
            if !out[k][r].is_finite() {
                return Err(Error::SingularSystem);
            }
        }
    }
    Ok(out)
}

fn check_component(component: usize) -> Result<()> {
    if component >= N_OUTCOMES {
        return Err(Error::ComponentIndex(component));
    }
    Ok(())
}

pub(crate) fn gradient_linear_solve_arrays(
    x: &[f64; N_OUTCOMES],
    y: &[f64; N_OUTCOMES],
    seat: Seat,
    component: usize,
) -> Result<[f64; N_OUTCOMES]> {
    let p = stationary_arrays(x, y)?;
    let m = transition_matrix_arrays(x, y);
    let (col, delta) = perturbation(x, y, seat, component);
    let scale = p[col];
    let rhs = [[delta[0] * scale, delta[1] * scale, delta[2] * scale, 0.0]];
    let a = sum_constrained_system(&m);
    let [d_p] = gauss_solve(a, rhs)?;
    Ok(d_p)
}

/// Exact gradient via the sum-constrained linear system.
pub fn gradient_linear_solve(
    x: &MemoryOneStrategy,
    y: &MemoryOneStrategy,
    seat: Seat,
    component: usize,
) -> Result<EquilibriumGradient> {
    check_component(component)?;
    let d_p = gradient_linear_solve_arrays(x.probs(), y.probs(), seat, component)?;
    Ok(EquilibriumGradient {
        seat,
        component,
        d_p,
    })
}

/// Gradient as the truncated series p_e[n] * sum_t M^t (p_n(C) - p_n(D)),
/// stopped at `max_terms` or when a term's L1 norm falls below
/// [`SERIES_TOL`], whichever comes first.
pub fn gradient_series(
    x: &MemoryOneStrategy,
    y: &MemoryOneStrategy,
    seat: Seat,
    component: usize,
    max_terms: usize,
) -> Result<(EquilibriumGradient, SeriesTail)> {
    check_component(component)?;
    let xa = x.probs();
    let ya = y.probs();
    let p = stationary_arrays(xa, ya)?;
    let m = transition_matrix_arrays(xa, ya);
    let (col, delta) = perturbation(xa, ya, seat, component);
    let scale = p[col];

    let mut term = delta;
    let mut sum = delta;
    let mut terms = 0;
    let mut last_l1: f64 = delta.iter().map(|v| v.abs()).sum();
    for _ in 0..max_terms {
        term = m.apply(&term);
        for i in 0..N_OUTCOMES {
            sum[i] += term[i];
        }
        terms += 1;
        last_l1 = term.iter().map(|v| v.abs()).sum();
        if last_l1 * scale.abs() < SERIES_TOL {
            break;
        }
    }
    let d_p = std::array::from_fn(|i| sum[i] * scale);
    Ok((
        EquilibriumGradient {
            seat,
            component,
            d_p,
        },
        SeriesTail {
            terms,
            last_term_l1: last_l1 * scale.abs(),
        },
    ))
}

/// Central finite difference of the closed-form stationary distribution.
pub fn gradient_finite_difference(
    x: &MemoryOneStrategy,
    y: &MemoryOneStrategy,
    seat: Seat,
    component: usize,
    step: f64,
) -> Result<EquilibriumGradient> {
    check_component(component)?;
    let mut xa = *x.probs();
    let mut ya = *y.probs();
    {
        let v = match seat {
            Seat::X => &mut xa[component],
            Seat::Y => &mut ya[component],
        };
        let value = *v;
        if !(step > 0.0) || value - step < 0.0 || value + step > 1.0 {
            return Err(Error::StepOutOfRange {
                component,
                value,
                step,
            });
        }
    }
    let eval = |xa: &[f64; N_OUTCOMES], ya: &[f64; N_OUTCOMES]| stationary_arrays(xa, ya);
    let (plus, minus) = match seat {
        Seat::X => {
            let mut hi = xa;
            let mut lo = xa;
            hi[component] += step;
            lo[component] -= step;
            (eval(&hi, &ya)?, eval(&lo, &ya)?)
        }
        Seat::Y => {
            let mut hi = ya;
            let mut lo = ya;
            hi[component] += step;
            lo[component] -= step;
            (eval(&xa, &hi)?, eval(&xa, &lo)?)
        }
    };
    let d_p = std::array::from_fn(|i| (plus[i] - minus[i]) / (2.0 * step));
    Ok(EquilibriumGradient {
        seat,
        component,
        d_p,
    })
}

/// Payoff-weighted gradients for every component of both players in one
/// factorization: returns (d(p_e . u)/d x_n, d(p_e . v)/d y_n) for n = 0..4,
/// where u and v are the focal and opponent payoff vectors.
///
/// Uses the adjoint of the sum-constrained system, so the cost is one 4x4
/// elimination with two right-hand sides rather than eight solves.
pub fn payoff_gradient_rates(
    x: &[f64; N_OUTCOMES],
    y: &[f64; N_OUTCOMES],
    pm: &PayoffMatrix,
) -> Result<([f64; N_OUTCOMES], [f64; N_OUTCOMES])> {
    let (xr, yr, _) = payoff_rates_and_stationary(x, y, pm)?;
    Ok((xr, yr))
}

/// Same as [`payoff_gradient_rates`] but also hands back the stationary
/// distribution computed along the way, for callers that need payoffs at
/// the same state (the ODE integrator samples both per step).
pub(crate) fn payoff_rates_and_stationary(
    x: &[f64; N_OUTCOMES],
    y: &[f64; N_OUTCOMES],
    pm: &PayoffMatrix,
) -> Result<([f64; N_OUTCOMES], [f64; N_OUTCOMES], [f64; N_OUTCOMES])> {
    let p = stationary_arrays(x, y)?;
    let m = transition_matrix_arrays(x, y);
    let at = transpose(&sum_constrained_system(&m));
    let [wu, wv] = gauss_solve(at, [pm.focal_payoffs(), pm.opponent_payoffs()])?;
    let mut x_rates = [0.0; N_OUTCOMES];
    let mut y_rates = [0.0; N_OUTCOMES];
    for n in 0..N_OUTCOMES {
        // Dot of the adjoint solution with the perturbation vector, whose
        // last entry is replaced by the zero-sum constraint value 0.
        let b = y[SEAT_SWAP[n]];
        x_rates[n] = p[n] * (b * (wu[0] - wu[2]) + (1.0 - b) * wu[1]);
        let col = SEAT_SWAP[n];
        let a = x[col];
        y_rates[n] = p[col] * (a * (wv[0] - wv[1]) + (1.0 - a) * wv[2]);
    }
    Ok((x_rates, y_rates, p))
}
