//! Relative value iteration with Krasnoselskii-Mann damping, the plain
//! value-iteration cross-check, and eigenvector certificates.

use std::time::Instant;

use serde::Serialize;

use crate::cone::{build_invariant_cone, ConeOptions, InvariantCone};
use crate::error::{Error, Result};
use crate::game::ValidatedGame;
use crate::grid::{generate_grid, Grid};
use crate::shapley::{hilbert_seminorm, ImageTableau, TableauMode, ValueFunction};

/// Default slack added to certificate margins.
pub const CERT_TOL: f64 = 1e-9;
/// Extra iterations tolerated beyond the theoretical cap before bailing out.
pub const CAP_MARGIN: usize = 10;

/// Everything needed to evaluate `F̂` on one grid.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub game: ValidatedGame,
    pub cone: InvariantCone,
    pub grid: Grid,
    pub tableau: ImageTableau,
}

impl Discretization {
    pub fn new(game: ValidatedGame, resolution: usize) -> Result<Self> {
        Self::with_options(game, resolution, &ConeOptions::default(), TableauMode::default())
    }

    pub fn with_options(
        game: ValidatedGame,
        resolution: usize,
        cone_opts: &ConeOptions,
        mode: TableauMode,
    ) -> Result<Self> {
        let cone = build_invariant_cone(&game, cone_opts)?;
        Self::with_cone(game, cone, resolution, mode)
    }

    pub fn with_cone(game: ValidatedGame, cone: InvariantCone, resolution: usize, mode: TableauMode) -> Result<Self> {
        let grid = generate_grid(&game, &cone, resolution)?;
        let tableau = ImageTableau::build(&game, &grid, mode)?;
        Ok(Discretization {
            game,
            cone,
            grid,
            tableau,
        })
    }

    /// Same cone and grid, different matrices (which must share the cone).
    pub fn rebuild_for(&self, game: ValidatedGame, mode: TableauMode) -> Result<Self> {
        let tableau = ImageTableau::build(&game, &self.grid, mode)?;
        Ok(Discretization {
            game,
            cone: self.cone.clone(),
            grid: self.grid.clone(),
            tableau,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Stopping threshold on `‖v_{k+1} − v_k‖_H`; defaults to the lattice
    /// step `1/m`.
    pub stop: Option<f64>,
    /// Starting point; defaults to `v₀ = 0`.
    pub v0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    /// `λ_k = [F̂ v_k](x̄)`, the additive eigenvalue estimate.
    pub lambda: f64,
    /// `[λ_k − 3h′, λ_k + 2h′]` with `h′ = max(stop, h_cert)`.
    pub interval: [f64; 2],
    pub iterations: usize,
    pub residual_inf: f64,
    pub residual_sup: f64,
    pub stop: f64,
    pub h_cert: f64,
    pub h_used: f64,
    pub grid_points: usize,
    pub wall_time: f64,
    /// `‖v_{k+1} − v_k‖_H` for `k = 1, 2, ...`.
    pub diffs: Vec<f64>,
    pub m_minus: f64,
    pub m_plus: f64,
    #[serde(skip)]
    pub value: ValueFunction,
}

impl SolveResult {
    /// Multiplicative growth rate `exp(λ)`.
    pub fn growth_rate(&self) -> f64 {
        self.lambda.exp()
    }

    /// `⌈(4/π)((M⁺ − M⁻)/stop)²⌉`.
    pub fn iteration_bound(&self) -> usize {
        iteration_bound(self.m_plus - self.m_minus, self.stop)
    }

    /// First `k` (1-based) violating `‖v_{k+1} − v_k‖_H ≤ 2(M⁺ − M⁻)/√(πk)`.
    pub fn rate_violation(&self) -> Option<usize> {
        let spread = self.m_plus - self.m_minus;
        self.diffs
            .iter()
            .enumerate()
            .map(|(i, d)| (i + 1, d))
            .find(|&(k, d)| *d > 2.0 * spread / (std::f64::consts::PI * k as f64).sqrt() + 1e-12)
            .map(|(k, _)| k)
    }
}

pub fn iteration_bound(spread: f64, stop: f64) -> usize {
    (4.0 / std::f64::consts::PI * (spread / stop).powi(2)).ceil() as usize
}

pub fn rvi_km_solve(disc: &Discretization, opts: &SolveOptions) -> Result<SolveResult> {
    let start = Instant::now();
    let t = &disc.tableau;
    let n = t.n_points();
    let base = t.base_index();
    let stop = opts.stop.unwrap_or_else(|| disc.grid.mesh());
    if !(stop > 0.0) {
        return Err(Error::InvalidParam(format!("stop threshold {stop} must be positive")));
    }
    let mut v = match &opts.v0 {
        Some(v0) if v0.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v0.len(),
            })
        }
        Some(v0) => v0.clone(),
        None => vec![0.0; n],
    };
    let (m_minus, m_plus) = t.bounds_m();
    let cap = iteration_bound(m_plus - m_minus, stop) + CAP_MARGIN;

    let mut fv = t.eval_f_hat(&v)?;
    let mut diffs = Vec::new();
    loop {
        let lambda = fv[base];
        let next: Vec<f64> = fv.iter().zip(&v).map(|(f, x)| 0.5 * (f - lambda + x)).collect();
        let step: Vec<f64> = next.iter().zip(&v).map(|(a, b)| a - b).collect();
        let diff = hilbert_seminorm(&step);
        diffs.push(diff);
        if diff <= stop {
            let r: Vec<f64> = fv.iter().zip(&v).map(|(f, x)| f - lambda - x).collect();
            let h_cert = disc.grid.h_cert();
            let h_used = stop.max(h_cert);
            return Ok(SolveResult {
                lambda,
                interval: [lambda - 3.0 * h_used, lambda + 2.0 * h_used],
                iterations: diffs.len(),
                residual_inf: r.iter().copied().fold(f64::INFINITY, f64::min),
                residual_sup: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                stop,
                h_cert,
                h_used,
                grid_points: n,
                wall_time: start.elapsed().as_secs_f64(),
                diffs,
                m_minus,
                m_plus,
                value: ValueFunction { values: v, base_index: base }.normalized(),
            });
        }
        if diffs.len() >= cap {
            return Err(Error::IterationCap { cap });
        }
        v = next;
        fv = t.eval_f_hat(&v)?;
    }
}

/// Undamped `w_{k+1} = F̂ w_k` from zero; returns the windowed slope
/// `(w_K(x̄) − w_{K−K/2}(x̄)) / (K/2)`.
pub fn value_iteration_oracle(t: &ImageTableau, k_max: usize) -> Result<f64> {
    if k_max < 10 {
        return Err(Error::InvalidParam(format!("k_max {k_max} must be at least 10")));
    }
    let window = k_max / 2;
    let base = t.base_index();
    let mut w = vec![0.0; t.n_points()];
    let mut at_base = Vec::with_capacity(k_max + 1);
    at_base.push(0.0);
    for _ in 0..k_max {
        w = t.eval_f_hat(&w)?;
        // subtracting a constant keeps magnitudes small without changing
        // differences at the base point
        let shift = w[base];
        at_base.push(at_base.last().unwrap() + shift);
        w.iter_mut().for_each(|x| *x -= shift);
    }
    Ok((at_base[k_max] - at_base[k_max - window]) / window as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertResult {
    /// `max (F̂v − λ − v)`.
    pub max_residual: f64,
    /// `min (F̂v − λ − v)`.
    pub min_residual: f64,
    /// Certified `ρ ≤ λ + max r + tol`.
    pub upper: f64,
    /// Certified `ρ ≥ λ + min r − h − tol`.
    pub lower: f64,
    /// `max r ≤ tol`: `v` is a sub-eigenvector for `λ`.
    pub sub_eigenvector: bool,
    /// `min r ≥ −tol`: `v` is a super-eigenvector for `λ`.
    pub super_eigenvector: bool,
}

pub fn certify_subeigenvector(disc: &Discretization, v: &ValueFunction, lambda: f64, tol: f64) -> Result<CertResult> {
    v.check_grid_lipschitz(disc.grid.points(), tol)?;
    let fv = disc.tableau.eval_f_hat(&v.values)?;
    let r: Vec<f64> = fv.iter().zip(&v.values).map(|(f, x)| f - lambda - x).collect();
    let max_r = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_r = r.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CertResult {
        max_residual: max_r,
        min_residual: min_r,
        upper: lambda + max_r + tol,
        lower: lambda + min_r - disc.grid.h_cert() - tol,
        sub_eigenvector: max_r <= tol,
        super_eigenvector: min_r >= -tol,
    })
}
