//! Greedy strategies read off a converged value function, and simulation
//! of the resulting play.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::game::GameInstance;
use crate::metrics::{hilbert_or_inf, Matrix};
use crate::shapley::{step_gauge_image, ImageTableau};

/// Default Hilbert distance confirming a periodic tail.
pub const CYCLE_TOL: f64 = 1e-8;
/// Longest action period searched for.
const MAX_PERIOD: usize = 6;

/// Greedy pair at an arbitrary state, using `I_h^+ v` at the exact image.
/// Ties go to the lowest index.
pub fn optimal_actions(g: &GameInstance, t: &ImageTableau, v: &[f64], x: &[f64]) -> Result<(usize, usize)> {
    let mut best = (f64::INFINITY, 0, 0);
    for a in 0..g.n_min() {
        let mut worst = (f64::NEG_INFINITY, 0);
        for b in 0..g.n_max() {
            let (gauge, y) = step_gauge_image(x, g.pair(a, b), g.e_star())?;
            let val = gauge + t.interp_plus(v, &y)?;
            if val > worst.0 {
                worst = (val, b);
            }
        }
        if worst.0 < best.0 {
            best = (worst.0, a, worst.1);
        }
    }
    Ok((best.1, best.2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cycle {
    pub start: usize,
    pub period: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<(usize, usize)>,
    pub gauges: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub cycle: Option<Cycle>,
    pub limit_point: Option<Vec<f64>>,
}

impl Trajectory {
    /// Concatenated labels, e.g. `α3β1α2β2`.
    pub fn move_string(&self, g: &GameInstance) -> String {
        self.actions
            .iter()
            .map(|&(a, b)| format!("{}{}", g.min_label(a), g.max_label(b)))
            .collect()
    }

    /// `cumulative[k−1] / k`, the empirical growth exponent over `k` turns.
    pub fn mean_payoff(&self) -> f64 {
        self.cumulative.last().map_or(0.0, |c| c / self.cumulative.len() as f64)
    }
}

/// Smallest period `q` such that the actions are `q`-periodic from some
/// point on, with at least two full periods at the end and the last state
/// within `tol` of the one `q` turns earlier. Returns the earliest start.
fn detect_cycle(actions: &[(usize, usize)], states: &[Vec<f64>], tol: f64) -> Option<Cycle> {
    let n = actions.len();
    for q in 1..=MAX_PERIOD.min(n / 2) {
        let mut start = n - q;
        while start > 0 && actions[start - 1] == actions[start - 1 + q] {
            start -= 1;
        }
        if n - start < 2 * q {
            continue;
        }
        if hilbert_or_inf(&states[n], &states[n - q]) < tol {
            return Some(Cycle { start, period: q });
        }
    }
    None
}

pub fn simulate(
    g: &GameInstance,
    t: &ImageTableau,
    v: &[f64],
    x0: &[f64],
    steps: usize,
    cycle_tol: f64,
) -> Result<Trajectory> {
    let mut states = vec![x0.to_vec()];
    let mut actions = Vec::with_capacity(steps);
    let mut gauges = Vec::with_capacity(steps);
    let mut cumulative = Vec::with_capacity(steps);
    let mut total = 0.0;
    for _ in 0..steps {
        let x = states.last().unwrap();
        let (a, b) = optimal_actions(g, t, v, x)?;
        let (gauge, y) = step_gauge_image(x, g.pair(a, b), g.e_star())?;
        total += gauge;
        actions.push((a, b));
        gauges.push(gauge);
        cumulative.push(total);
        states.push(y);
    }
    let cycle = detect_cycle(&actions, &states, cycle_tol);
    let limit_point = cycle.map(|_| states.last().unwrap().clone());
    Ok(Trajectory {
        states,
        actions,
        gauges,
        cumulative,
        cycle,
        limit_point,
    })
}

/// Independent trajectories from several starts, in parallel.
pub fn simulate_many(
    g: &GameInstance,
    t: &ImageTableau,
    v: &[f64],
    starts: &[Vec<f64>],
    steps: usize,
    cycle_tol: f64,
) -> Result<Vec<Trajectory>> {
    starts
        .par_iter()
        .map(|x0| simulate(g, t, v, x0, steps, cycle_tol))
        .collect()
}

/// Whether `Hil(x, x·M) ≤ tol`.
pub fn check_projective_fixed_point(x: &[f64], m: &Matrix, e_star: &[f64], tol: f64) -> bool {
    match step_gauge_image(x, m, e_star) {
        Ok((_, y)) => hilbert_or_inf(x, &y) <= tol,
        Err(_) => false,
    }
}
