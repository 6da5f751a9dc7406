//! Lipschitz dependence of the growth rate on the matrices: seeded
//! multiplicative perturbations and the comparison against the
//! Hausdorff-Thompson distance.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{hausdorff_thompson, thompson_mat, Matrix, MatrixSet};
use crate::shapley::TableauMode;
use crate::solver::{rvi_km_solve, Discretization, SolveOptions};

/// Multiplies every positive entry by an independent `exp(u)`,
/// `u ~ U[−ε, ε]`. Zero entries stay zero, so the support is unchanged and
/// each matrix moves by at most `ε` in Thompson distance.
pub fn perturb_matrices(ms: &[Matrix], epsilon: f64, seed: u64) -> Result<Vec<Matrix>> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParam(format!("epsilon {epsilon} must be nonnegative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(ms
        .iter()
        .map(|m| {
            m.map(|c| {
                if c > 0.0 && epsilon > 0.0 {
                    c * rng.random_range(-epsilon..=epsilon).exp()
                } else {
                    c
                }
            })
        })
        .collect())
}

pub fn perturb_set(s: &MatrixSet, epsilon: f64, seed: u64) -> Result<MatrixSet> {
    MatrixSet::new(perturb_matrices(s.matrices(), epsilon, seed)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct Trial {
    pub seed: u64,
    pub lambda: f64,
    pub lambda_perturbed: f64,
    pub delta_lambda: f64,
    /// Hausdorff-Thompson distance between the two pair sets.
    pub hausdorff: f64,
    /// `max_p d_T(M_p, M′_p)` over matched action pairs.
    pub matched: f64,
    pub ratio: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub epsilon: f64,
    pub seed: u64,
    pub resolution: usize,
    pub stop: f64,
    pub slack: f64,
    pub lambda: f64,
    pub trials: Vec<Trial>,
    pub max_ratio: f64,
    pub all_within_bound: bool,
}

fn ratio(delta: f64, dist: f64) -> f64 {
    if dist > 0.0 {
        delta / dist
    } else if delta == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Solves `trials` perturbed copies of the game on the lattice of `disc`
/// and checks `|Δλ| ≤ δ_H + 5·stop` for each.
pub fn lipschitz_experiment(
    disc: &Discretization,
    epsilon: f64,
    trials: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<LipschitzReport> {
    let base = rvi_km_solve(disc, opts)?;
    let stop = base.stop;
    let slack = 5.0 * stop;
    let resolution = disc.grid.resolution();
    let original = disc.game.pair_set();
    let results: Vec<Trial> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial_seed = seed.wrapping_add(t);
            let pairs = perturb_matrices(disc.game.pairs(), epsilon, trial_seed)?;
            let game = disc.game.with_pairs(pairs)?.validate()?;
            let hausdorff = hausdorff_thompson(original, game.pair_set())?;
            let matched = original
                .matrices()
                .iter()
                .zip(game.pairs())
                .map(|(a, b)| thompson_mat(a, b))
                .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))?;
            let pert = Discretization::new(game, resolution)?;
            let res = rvi_km_solve(&pert, &SolveOptions { stop: Some(stop), v0: None })?;
            let delta = (res.lambda - base.lambda).abs();
            Ok(Trial {
                seed: trial_seed,
                lambda: base.lambda,
                lambda_perturbed: res.lambda,
                delta_lambda: delta,
                hausdorff,
                matched,
                ratio: ratio(delta, hausdorff),
                within_bound: delta <= hausdorff + slack,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LipschitzReport {
        epsilon,
        seed,
        resolution,
        stop,
        slack,
        lambda: base.lambda,
        max_ratio: results.iter().map(|t| t.ratio).fold(0.0, f64::max),
        all_within_bound: results.iter().all(|t| t.within_bound),
        trials: results,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub factor: f64,
    pub lambda: f64,
    pub lambda_scaled: f64,
    pub delta_lambda: f64,
    pub distance: f64,
    pub stop: f64,
    /// `|Δλ − log c| ≤ 2·stop`.
    pub tight: bool,
}

/// Replaces the minimizer's matrices by `c·A`. Normalized images are
/// unchanged, so the same cone and grid are reused.
pub fn scaling_experiment(disc: &Discretization, c: f64, opts: &SolveOptions) -> Result<ScalingReport> {
    let base = rvi_km_solve(disc, opts)?;
    let game = disc.game.scaled(c)?.validate()?;
    let distance = hausdorff_thompson(disc.game.pair_set(), game.pair_set())?;
    let scaled = disc.rebuild_for(game, TableauMode::default())?;
    let res = rvi_km_solve(&scaled, &SolveOptions { stop: Some(base.stop), v0: None })?;
    let delta = res.lambda - base.lambda;
    Ok(ScalingReport {
        factor: c,
        lambda: base.lambda,
        lambda_scaled: res.lambda,
        delta_lambda: delta,
        distance,
        stop: base.stop,
        tight: (delta - c.ln()).abs() <= 2.0 * base.stop,
    })
}
