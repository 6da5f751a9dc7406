//! Certified invariant cone `K` for a validated game.
//!
//! `K` is generated by the rows of all products of `p` pair matrices, where
//! `p` is the positivity depth. Every such row is strictly positive, and
//! `e_j · P · M` is a nonnegative combination of rows of other length-`p`
//! products, so `K` is invariant under every `x ↦ xM_ab` and its section
//! `X = K ∩ Δ` stays away from the boundary of the simplex.
//!
//! Applying the dynamics once more to the generators gives a smaller cone
//! with the same two properties. [`ConeOptions::refine_rounds`] controls how
//! many such rounds are taken; each round raises the coordinate lower
//! bounds `κ_i`, which in turn shrinks the certified covering radius of a
//! grid.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::ValidatedGame;
use crate::metrics::{hilbert_or_inf, normalize, row_times, Matrix};

const DEDUP_HILBERT: f64 = 1e-12;
const PRUNE_TOL: f64 = 1e-12;
const INVARIANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ConeOptions {
    /// Upper bound on the number of rows enumerated at the positivity depth.
    pub max_generators: usize,
    /// Maximum number of refinement rounds applied after the base cone.
    pub refine_rounds: usize,
    /// Refinement stops early once no coordinate bound `κ_i` improves by
    /// more than this relative amount in a round.
    pub refine_tol: f64,
}

impl Default for ConeOptions {
    fn default() -> Self {
        ConeOptions {
            max_generators: 1_000_000,
            refine_rounds: 24,
            refine_tol: 1e-4,
        }
    }
}

impl ConeOptions {
    /// The cone generated by length-`p` products only, with no refinement.
    pub fn base_only() -> Self {
        ConeOptions {
            refine_rounds: 0,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct InvariantCone {
    generators: Vec<Vec<f64>>,
    e_star: Vec<f64>,
    positivity_depth: usize,
    depth: usize,
    raw_count: usize,
    kappa: Vec<f64>,
}

impl InvariantCone {
    /// Extreme generators of `X`, each normalized to `⟨g, e*⟩ = 1`, in
    /// lexicographic order of the generating action sequence.
    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn e_star(&self) -> &[f64] {
        &self.e_star
    }

    pub fn dim(&self) -> usize {
        self.e_star.len()
    }

    pub fn positivity_depth(&self) -> usize {
        self.positivity_depth
    }

    /// Length of the products whose rows generate this cone: every point
    /// of the simplex lands in `K` after this many steps.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of rows enumerated before deduplication and pruning.
    pub fn raw_count(&self) -> usize {
        self.raw_count
    }

    /// Per-coordinate lower bounds on `X`: `κ_i = min_g g_i`.
    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Lower bound on the coordinates of `X` rescaled to sum one. Equal to
    /// [`kappa_min`](Self::kappa_min) when `e*` is the all-ones vector.
    pub fn simplex_kappa_min(&self) -> f64 {
        self.generators
            .iter()
            .map(|g| {
                let s: f64 = g.iter().sum();
                g.iter().map(|c| c / s).fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Average of the generators.
    pub fn barycenter(&self) -> Vec<f64> {
        let n = self.generators.len() as f64;
        let mut c = vec![0.0; self.dim()];
        for g in &self.generators {
            for (ci, gi) in c.iter_mut().zip(g) {
                *ci += gi / n;
            }
        }
        c
    }

    /// Membership in the relaxed slab `{x ∈ Δ : x_i ≥ κ_i}`, a superset of `X`.
    pub fn slab_contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter().zip(&self.kappa).all(|(xi, ki)| *xi >= ki - tol)
    }
}

/// L1 distance from `x` to the convex hull of `points`.
pub fn hull_residual(points: &[Vec<f64>], x: &[f64]) -> Result<f64> {
    let d = x.len();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mu: Vec<_> = points
        .iter()
        .map(|_| lp.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    let slack: Vec<_> = (0..2 * d)
        .map(|_| lp.add_var(1.0, (0.0, f64::INFINITY)))
        .collect();
    for i in 0..d {
        let mut expr: Vec<_> = mu.iter().zip(points).map(|(&v, p)| (v, p[i])).collect();
        expr.push((slack[2 * i], 1.0));
        expr.push((slack[2 * i + 1], -1.0));
        lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, x[i]);
    }
    let ones: Vec<_> = mu.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    let outcome = lp.solve().map_err(|e| Error::Lp(e.to_string()))?;
    let sol = outcome
        .into_solution()
        .map_err(|_| Error::Lp("solve interrupted".into()))?;
    Ok(sol.objective().max(0.0))
}

/// Whether `x` (normalized to `⟨x, e*⟩ = 1`) lies within `tol` (L1) of `X`.
pub fn cone_contains(k: &InvariantCone, x: &[f64], tol: f64) -> bool {
    if !k.slab_contains(x, tol) {
        return false;
    }
    hull_residual(&k.generators, x).is_ok_and(|r| r <= tol)
}

fn dedup(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if !kept.iter().any(|q| hilbert_or_inf(q, &p) < DEDUP_HILBERT) {
            kept.push(p);
        }
    }
    kept
}

/// Keeps only the extreme points of the convex hull, preserving order.
fn prune_to_extreme(points: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let mut keep = vec![false; points.len()];
    let mut hull: Vec<Vec<f64>> = Vec::new();
    for (k, p) in points.iter().enumerate() {
        if hull.is_empty() || hull_residual(&hull, p)? > PRUNE_TOL {
            hull.push(p.clone());
            keep[k] = true;
        }
    }
    // points accepted early may be interior to the final hull
    loop {
        let mut removed = false;
        let idx: Vec<usize> = (0..points.len()).filter(|&k| keep[k]).collect();
        for &k in &idx {
            let others: Vec<Vec<f64>> = idx
                .iter()
                .filter(|&&j| j != k && keep[j])
                .map(|&j| points[j].clone())
                .collect();
            if !others.is_empty() && hull_residual(&others, &points[k])? <= PRUNE_TOL {
                keep[k] = false;
                removed = true;
            }
        }
        if !removed {
            break;
        }
    }
    Ok(points
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect())
}

fn coordinate_minima(gens: &[Vec<f64>], d: usize) -> Vec<f64> {
    (0..d)
        .map(|i| gens.iter().map(|g| g[i]).fold(f64::INFINITY, f64::min))
        .collect()
}

fn images(gens: &[Vec<f64>], pairs: &[Matrix], e_star: &[f64]) -> Vec<Vec<f64>> {
    gens.iter()
        .flat_map(|g| pairs.iter().map(move |m| normalize(&row_times(g, m), e_star)))
        .collect()
}

/// Rows of every product of `depth` pair matrices, lexicographic in the
/// action-index sequence, then by row.
fn product_rows(pairs: &[Matrix], depth: usize, e_star: &[f64]) -> Vec<Vec<f64>> {
    let n = pairs.len();
    let d = e_star.len();
    let total = n.pow(depth as u32);
    (0..total)
        .into_par_iter()
        .flat_map_iter(|s| {
            let mut digits = vec![0; depth];
            let mut rest = s;
            for k in (0..depth).rev() {
                digits[k] = rest % n;
                rest /= n;
            }
            let mut prod = pairs[digits[0]].clone();
            for &k in &digits[1..] {
                prod = &prod * &pairs[k];
            }
            (0..d)
                .map(|j| {
                    let row: Vec<f64> = prod.row(j).iter().copied().collect();
                    normalize(&row, e_star)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Checks that every normalized image `g·M` of a generator stays in the cone.
pub fn check_invariance(k: &InvariantCone, pairs: &[Matrix], tol: f64) -> Result<()> {
    for (gi, g) in k.generators.iter().enumerate() {
        for (pi, m) in pairs.iter().enumerate() {
            let y = normalize(&row_times(g, m), &k.e_star);
            if !cone_contains(k, &y, tol) {
                return Err(Error::ConeNotInvariant(format!(
                    "image of generator {gi} under pair {pi} leaves the cone"
                )));
            }
        }
    }
    Ok(())
}

fn from_generators(g: &ValidatedGame, gens: &[Vec<f64>]) -> Result<InvariantCone> {
    let e = g.e_star();
    let mut normed = Vec::with_capacity(gens.len());
    for v in gens {
        if v.len() != g.dim() || v.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::ConeNotInvariant(
                "generators must be strictly positive vectors of the game dimension".into(),
            ));
        }
        normed.push(normalize(v, e));
    }
    let raw_count = normed.len();
    let generators = prune_to_extreme(dedup(normed))?;
    let cone = InvariantCone {
        kappa: coordinate_minima(&generators, g.dim()),
        generators,
        e_star: e.to_vec(),
        positivity_depth: g.depth(),
        depth: g.depth(),
        raw_count,
    };
    check_invariance(&cone, g.pairs(), INVARIANCE_TOL)?;
    Ok(cone)
}

pub fn build_invariant_cone(g: &ValidatedGame, opts: &ConeOptions) -> Result<InvariantCone> {
    if let Some(gens) = g.cone_generators() {
        return from_generators(g, gens);
    }
    let p = g.depth();
    let d = g.dim();
    let needed = (g.n_pairs() as u128)
        .checked_pow(p as u32)
        .and_then(|c| c.checked_mul(d as u128))
        .unwrap_or(u128::MAX);
    if needed > opts.max_generators as u128 {
        return Err(Error::DepthOverflow {
            needed,
            cap: opts.max_generators,
        });
    }
    let rows = product_rows(g.pairs(), p, g.e_star());
    let raw_count = rows.len();
    let mut gens = prune_to_extreme(dedup(rows))?;
    let mut kappa = coordinate_minima(&gens, d);
    let mut depth = p;
    for _ in 0..opts.refine_rounds {
        let next = prune_to_extreme(dedup(images(&gens, g.pairs(), g.e_star())))?;
        let next_kappa = coordinate_minima(&next, d);
        // κ_min alone can stall for a round while another coordinate moves
        let gain = next_kappa
            .iter()
            .zip(&kappa)
            .map(|(new, old)| (new - old) / old)
            .fold(f64::NEG_INFINITY, f64::max);
        gens = next;
        kappa = next_kappa;
        depth += 1;
        if gain <= opts.refine_tol {
            break;
        }
    }
    Ok(InvariantCone {
        generators: gens,
        e_star: g.e_star().to_vec(),
        positivity_depth: p,
        depth,
        raw_count,
        kappa,
    })
}
