//! Discretized Shapley operator `F̂ = R_h F I_h^+` on a grid of the simplex.
//!
//! For each grid point `x_i` and action pair `(a, b)` the tableau stores the
//! gauge `log⟨x_i M_ab, e*⟩` and the normalized image `ŷ`. One evaluation is
//!
//! ```text
//! [F̂ v]_i = min_a max_b ( gauge(i,a,b) + min_j ( v_j + Funk(ŷ, y_j) ) )
//! ```
//!
//! where the inner minimum is the McShane-Whitney extension `I_h^+ v(ŷ)`.
//! Funk distances are evaluated from stored logarithms, either from a dense
//! precomputed table or on the fly when the table would not fit the memory
//! budget. Grid points with zero coordinates give `+∞` entries, which never
//! win a minimum.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::ValidatedGame;
use crate::grid::Grid;
use crate::metrics::{dot, funk_or_inf, normalize, row_times, Matrix};

/// `(gauge, image)` of one step `x ↦ xM`.
pub fn step_gauge_image(x: &[f64], m: &Matrix, e_star: &[f64]) -> Result<(f64, Vec<f64>)> {
    let y = row_times(x, m);
    let s = dot(&y, e_star);
    if !(s > 0.0) {
        return Err(Error::DegenerateImage);
    }
    Ok((s.ln(), y.iter().map(|c| c / s).collect()))
}

/// `I_h^+ v(x) = min_j [v_j + Funk(x, y_j)]` over an explicit point list.
pub fn interp_plus(points: &[Vec<f64>], values: &[f64], x: &[f64]) -> Result<f64> {
    let best = points
        .iter()
        .zip(values)
        .map(|(y, v)| v + funk_or_inf(x, y))
        .fold(f64::INFINITY, f64::min);
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::NoFiniteDistance)
    }
}

/// `I_h^- v(x) = max_j [v_j − Funk(y_j, x)]`.
pub fn interp_minus(points: &[Vec<f64>], values: &[f64], x: &[f64]) -> Result<f64> {
    let best = points
        .iter()
        .zip(values)
        .map(|(y, v)| v - funk_or_inf(y, x))
        .fold(f64::NEG_INFINITY, f64::max);
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::NoFiniteDistance)
    }
}

/// `max u − min u`.
pub fn hilbert_seminorm(u: &[f64]) -> f64 {
    let (lo, hi) = u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}

/// Values on the grid, indexed like the grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub values: Vec<f64>,
    pub base_index: usize,
}

impl ValueFunction {
    pub fn zeros(n: usize, base_index: usize) -> Self {
        ValueFunction {
            values: vec![0.0; n],
            base_index,
        }
    }

    /// Shifts so that the value at the base point is zero.
    pub fn normalized(mut self) -> Self {
        let c = self.values[self.base_index];
        self.values.iter_mut().for_each(|v| *v -= c);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks `v_i − v_j ≤ Funk(x_i, x_j) + tol` for every pair with a
    /// finite right-hand side.
    pub fn check_grid_lipschitz(&self, points: &[Vec<f64>], tol: f64) -> Result<()> {
        let v = &self.values;
        let violation = (0..points.len()).into_par_iter().find_map_first(|i| {
            (0..points.len()).find_map(|j| {
                let bound = funk_or_inf(&points[i], &points[j]);
                let gap = v[i] - v[j];
                (gap > bound + tol).then_some(Error::NotLipschitz { i, j, gap, bound })
            })
        });
        match violation {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Storage policy for the Funk rows of the tableau.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TableauMode {
    /// Dense rows when they fit in the given number of bytes.
    Auto { budget_bytes: usize },
    Dense,
    OnTheFly,
}

impl Default for TableauMode {
    fn default() -> Self {
        TableauMode::Auto {
            budget_bytes: 256 << 20,
        }
    }
}

/// Gauges, images and Funk rows for every (grid point, action pair).
#[derive(Debug, Clone)]
pub struct ImageTableau {
    n_points: usize,
    n_min: usize,
    n_max: usize,
    dim: usize,
    base_index: usize,
    in_cone: Vec<usize>,
    gauge: Vec<f64>,
    images: Vec<f64>,
    log_images: Vec<f64>,
    /// Structure of arrays: `log_grid[k][j] = ln y_j[k]`.
    log_grid: Vec<Vec<f64>>,
    dense: Option<Vec<f64>>,
}

/// `min_j (v_j + max_k (li_k − lg_k[j]))` with `0/0` coordinates ignored.
#[inline]
fn interp_kernel(li: &[f64], log_grid: &[Vec<f64>], v: &[f64]) -> f64 {
    let n = v.len();
    let mut best = f64::INFINITY;
    match li.len() {
        3 => {
            let (g0, g1, g2) = (&log_grid[0][..n], &log_grid[1][..n], &log_grid[2][..n]);
            let (l0, l1, l2) = (li[0], li[1], li[2]);
            for j in 0..n {
                let mut m = f64::NEG_INFINITY;
                let t = l0 - g0[j];
                m = if t > m { t } else { m };
                let t = l1 - g1[j];
                m = if t > m { t } else { m };
                let t = l2 - g2[j];
                m = if t > m { t } else { m };
                let s = v[j] + m;
                best = if s < best { s } else { best };
            }
        }
        _ => {
            for (j, vj) in v.iter().enumerate() {
                let mut m = f64::NEG_INFINITY;
                for (lk, gk) in li.iter().zip(log_grid) {
                    let t = lk - gk[j];
                    m = if t > m { t } else { m };
                }
                let s = vj + m;
                best = if s < best { s } else { best };
            }
        }
    }
    best
}

#[inline]
fn funk_from_logs(li: &[f64], log_grid: &[Vec<f64>], j: usize) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for (lk, gk) in li.iter().zip(log_grid) {
        let t = lk - gk[j];
        m = if t > m { t } else { m };
    }
    m
}

impl ImageTableau {
    pub fn build(g: &ValidatedGame, grid: &Grid, mode: TableauMode) -> Result<Self> {
        Self::from_points(g, grid.points(), grid.base_index(), Some(grid.in_cone_mask()), mode)
    }

    /// Tableau over an arbitrary point list on `Δ`. Without a mask every
    /// point counts as lying in the cone for [`bounds_m`](Self::bounds_m).
    pub fn from_points(
        g: &ValidatedGame,
        points: &[Vec<f64>],
        base_index: usize,
        in_cone_mask: Option<&[bool]>,
        mode: TableauMode,
    ) -> Result<Self> {
        let n = points.len();
        let d = g.dim();
        let np = g.n_pairs();
        if base_index >= n {
            return Err(Error::InvalidParam(format!("base index {base_index} out of range")));
        }
        let rows: Vec<(f64, Vec<f64>)> = points
            .par_iter()
            .flat_map_iter(|x| g.pairs().iter().map(move |m| step_gauge_image(x, m, g.e_star())))
            .collect::<Result<_>>()?;
        let gauge: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let images: Vec<f64> = rows.iter().flat_map(|r| r.1.iter().copied()).collect();
        let log_images: Vec<f64> = images.iter().map(|c| c.ln()).collect();
        let log_grid: Vec<Vec<f64>> = (0..d)
            .map(|k| points.iter().map(|p| p[k].ln()).collect())
            .collect();
        let in_cone = match in_cone_mask {
            Some(mask) => (0..n).filter(|&i| mask[i]).collect(),
            None => (0..n).collect(),
        };
        let mut t = ImageTableau {
            n_points: n,
            n_min: g.n_min(),
            n_max: g.n_max(),
            dim: d,
            base_index,
            in_cone,
            gauge,
            images,
            log_images,
            log_grid,
            dense: None,
        };
        let dense_bytes = n.saturating_mul(n).saturating_mul(np).saturating_mul(8);
        let use_dense = match mode {
            TableauMode::Dense => true,
            TableauMode::OnTheFly => false,
            TableauMode::Auto { budget_bytes } => dense_bytes <= budget_bytes,
        };
        if use_dense {
            let table: Vec<f64> = (0..n * np)
                .into_par_iter()
                .flat_map_iter(|r| {
                    let li = &t.log_images[r * d..(r + 1) * d];
                    let lg = &t.log_grid;
                    (0..n).map(move |j| funk_from_logs(li, lg, j))
                })
                .collect();
            t.dense = Some(table);
        }
        Ok(t)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_pairs(&self) -> usize {
        self.n_min * self.n_max
    }

    pub fn base_index(&self) -> usize {
        self.base_index
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    fn row(&self, i: usize, a: usize, b: usize) -> usize {
        i * self.n_pairs() + a * self.n_max + b
    }

    pub fn gauge(&self, i: usize, a: usize, b: usize) -> f64 {
        self.gauge[self.row(i, a, b)]
    }

    pub fn image(&self, i: usize, a: usize, b: usize) -> &[f64] {
        let r = self.row(i, a, b);
        &self.images[r * self.dim..(r + 1) * self.dim]
    }

    /// `Funk(ŷ(i,a,b), y_j)`, possibly `+∞`.
    pub fn funk_entry(&self, i: usize, a: usize, b: usize, j: usize) -> f64 {
        let r = self.row(i, a, b);
        match &self.dense {
            Some(t) => t[r * self.n_points + j],
            None => funk_from_logs(&self.log_images[r * self.dim..(r + 1) * self.dim], &self.log_grid, j),
        }
    }

    fn interp_row(&self, r: usize, v: &[f64]) -> f64 {
        match &self.dense {
            Some(t) => {
                let row = &t[r * self.n_points..(r + 1) * self.n_points];
                row.iter()
                    .zip(v)
                    .map(|(f, vj)| vj + f)
                    .fold(f64::INFINITY, |a, b| if b < a { b } else { a })
            }
            None => interp_kernel(&self.log_images[r * self.dim..(r + 1) * self.dim], &self.log_grid, v),
        }
    }

    /// `I_h^+ v` at an arbitrary point of `Δ`.
    pub fn interp_plus(&self, v: &[f64], x: &[f64]) -> Result<f64> {
        let lx: Vec<f64> = x.iter().map(|c| c.ln()).collect();
        let r = interp_kernel(&lx, &self.log_grid, v);
        if r.is_finite() {
            Ok(r)
        } else {
            Err(Error::NoFiniteDistance)
        }
    }

    /// Min-max value and the greedy action pair at grid point `i`; ties go
    /// to the lowest index.
    fn point_value(&self, i: usize, v: &[f64]) -> (f64, usize, usize) {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..self.n_min {
            let mut worst = (f64::NEG_INFINITY, 0);
            for b in 0..self.n_max {
                let r = self.row(i, a, b);
                let val = self.gauge[r] + self.interp_row(r, v);
                if val > worst.0 {
                    worst = (val, b);
                }
            }
            if worst.0 < best.0 {
                best = (worst.0, a, worst.1);
            }
        }
        best
    }

    /// One evaluation of `F̂`.
    pub fn eval_f_hat(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let out: Vec<f64> = (0..self.n_points)
            .into_par_iter()
            .map(|i| self.point_value(i, v).0)
            .collect();
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::NoFiniteDistance);
        }
        Ok(out)
    }

    /// `F̂ v` together with the greedy pair `(a, b)` at every grid point.
    pub fn eval_f_hat_with_policy(&self, v: &[f64]) -> Result<(Vec<f64>, Vec<(usize, usize)>)> {
        self.check_len(v)?;
        let res: Vec<(f64, usize, usize)> = (0..self.n_points)
            .into_par_iter()
            .map(|i| self.point_value(i, v))
            .collect();
        if res.iter().any(|x| !x.0.is_finite()) {
            return Err(Error::NoFiniteDistance);
        }
        Ok(res.into_iter().map(|(x, a, b)| (x, (a, b))).unzip())
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_points {
            return Err(Error::DimensionMismatch {
                expected: self.n_points,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `(M⁻, M⁺)` bracketing every finite `Funk(x_i M_ab, y_j)`.
    ///
    /// `M⁻` ranges over all grid points `x_i, y_j`; `M⁺` over all `x_i` and
    /// the in-cone `y_j`. Then `M⁻ ≤ [F̂0]_i ≤ M⁺`, because any in-cone
    /// target bounds the inner minimum from above.
    pub fn bounds_m(&self) -> (f64, f64) {
        let cone = &self.in_cone;
        let np = self.n_pairs();
        let zeros = vec![0.0; self.n_points];
        let (lo, hi) = (0..self.n_points)
            .into_par_iter()
            .map(|i| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in 0..np {
                    let r = i * np + p;
                    lo = lo.min(self.gauge[r] + self.interp_row(r, &zeros));
                    let li = &self.log_images[r * self.dim..(r + 1) * self.dim];
                    for &j in cone {
                        let f = match &self.dense {
                            Some(t) => t[r * self.n_points + j],
                            None => funk_from_logs(li, &self.log_grid, j),
                        };
                        if f.is_finite() {
                            hi = hi.max(self.gauge[r] + f);
                        }
                    }
                }
                (lo, hi)
            })
            .reduce(
                || (f64::INFINITY, f64::NEG_INFINITY),
                |a, b| (a.0.min(b.0), a.1.max(b.1)),
            );
        (lo, hi)
    }
}

/// Convenience: `(gauge, image)` of a normalized point.
pub fn normalized_image(x: &[f64], m: &Matrix, e_star: &[f64]) -> Result<(f64, Vec<f64>)> {
    step_gauge_image(&normalize(x, e_star), m, e_star)
}
