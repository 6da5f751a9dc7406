//! Barycentric lattice on the simplex `Δ = {x ≥ 0 : ⟨x, e*⟩ = 1}`.
//!
//! The grid covers all of `Δ`; the covering radius is certified only for
//! the invariant body `X = K ∩ Δ`, which is what the error bounds need.
//!
//! Certification: any `x ∈ X`, rescaled to sum one, has coordinates
//! `x_i ≥ κ`. Largest-remainder rounding of `m·x` gives a lattice point `u`
//! with `|x_i − u_i| < δ = 1/m` in each coordinate, so
//! `x_i/u_i < κ/(κ−δ)` and `u_i/x_i < (κ+δ)/κ`. Hence
//! `Hil(x, u) < log((κ+δ)/(κ−δ))` whenever `δ < κ`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::cone::{cone_contains, InvariantCone};
use crate::error::{Error, Result};
use crate::game::ValidatedGame;
use crate::metrics::normalize;

const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Grid {
    points: Vec<Vec<f64>>,
    lattice: Vec<Vec<u32>>,
    resolution: usize,
    h_cert: f64,
    base_index: usize,
    in_cone: Vec<bool>,
}

impl Grid {
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Integer lattice coordinates `k` with `Σk = m`.
    pub fn lattice(&self) -> &[Vec<u32>] {
        &self.lattice
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Lattice step `1/m`.
    pub fn mesh(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    /// Certified Hilbert covering radius of `X` by the grid points.
    pub fn h_cert(&self) -> f64 {
        self.h_cert
    }

    pub fn base_index(&self) -> usize {
        self.base_index
    }

    pub fn in_cone_mask(&self) -> &[bool] {
        &self.in_cone
    }

    pub fn in_cone_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.in_cone[i]).collect()
    }
}

/// `C(m + d − 1, d − 1)`.
pub fn lattice_count(m: usize, d: usize) -> u128 {
    let (n, k) = ((m + d - 1) as u128, (d - 1) as u128);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Smallest resolution whose lattice has at least `n` points.
pub fn resolution_for_points(n: usize, d: usize) -> usize {
    let mut m = 2;
    while lattice_count(m, d) < n as u128 {
        m += 1;
    }
    m
}

/// All compositions of `m` into `d` nonnegative parts, colexicographic
/// (last coordinate most significant).
pub fn lattice_points(m: usize, d: usize) -> Vec<Vec<u32>> {
    if d == 1 {
        return vec![vec![m as u32]];
    }
    let mut out = Vec::with_capacity(lattice_count(m, d) as usize);
    for last in 0..=m {
        for mut head in lattice_points(m - last, d - 1) {
            head.push(last as u32);
            out.push(head);
        }
    }
    out
}

/// Covering radius bound `log((κ+δ)/(κ−δ))` with `δ = 1/m`.
pub fn covering_radius(resolution: usize, kappa: f64) -> Result<f64> {
    let delta = 1.0 / resolution as f64;
    if !(delta < kappa) {
        return Err(Error::ResolutionTooCoarse(format!(
            "lattice step 1/{resolution} = {delta:.4} must be below the cone's coordinate bound {kappa:.4}"
        )));
    }
    Ok(((kappa + delta) / (kappa - delta)).ln())
}

/// Largest-remainder rounding of `x` (rescaled to sum one) to the lattice
/// `{k : Σk = m}`; ties go to the lowest coordinate.
pub fn round_to_lattice(x: &[f64], m: usize) -> Vec<u32> {
    let s: f64 = x.iter().sum();
    let scaled: Vec<f64> = x.iter().map(|c| c / s * m as f64).collect();
    let mut k: Vec<u32> = scaled.iter().map(|c| c.floor() as u32).collect();
    let short = m.saturating_sub(k.iter().sum::<u32>() as usize);
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (scaled[a] - scaled[a].floor(), scaled[b] - scaled[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(short) {
        k[i] += 1;
    }
    k
}

pub fn certify_covering(resolution: usize, k: &InvariantCone) -> Result<f64> {
    covering_radius(resolution, k.simplex_kappa_min())
}

pub fn generate_grid(g: &ValidatedGame, k: &InvariantCone, m: usize) -> Result<Grid> {
    if m < 2 {
        return Err(Error::InvalidParam(format!("resolution {m} must be at least 2")));
    }
    let d = g.dim();
    let lattice = lattice_points(m, d);
    let points: Vec<Vec<f64>> = lattice
        .iter()
        .map(|kv| {
            let u: Vec<f64> = kv.iter().map(|&c| c as f64 / m as f64).collect();
            normalize(&u, g.e_star())
        })
        .collect();
    let mut in_cone: Vec<bool> = points
        .par_iter()
        .map(|p| cone_contains(k, p, MEMBERSHIP_TOL))
        .collect();
    // A thin cone may contain no lattice point; the roundings of its
    // generators are the grid points the covering argument pairs with them.
    let index: HashMap<&[u32], usize> = lattice.iter().enumerate().map(|(i, kv)| (kv.as_slice(), i)).collect();
    for gen in k.generators() {
        in_cone[index[round_to_lattice(gen, m).as_slice()]] = true;
    }
    let center = k.barycenter();
    let base_index = (0..points.len())
        .filter(|&i| in_cone[i])
        .map(|i| {
            let d2: f64 = points[i].iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
            (i, d2)
        })
        .fold(None, |best: Option<(usize, f64)>, (i, d2)| match best {
            Some((_, b)) if b <= d2 => best,
            _ => Some((i, d2)),
        })
        .map(|(i, _)| i)
        .expect("generator roundings are always marked");
    let h_cert = certify_covering(m, k)?;
    Ok(Grid {
        points,
        lattice,
        resolution: m,
        h_cert,
        base_index,
        in_cone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{build_invariant_cone, ConeOptions};
    use crate::game::GameInstance;
    use crate::metrics::hilbert_or_inf;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn point_counts() {
        assert_eq!(lattice_count(80, 3), 3321);
        assert_eq!(lattice_count(100, 3), 5151);
        assert_eq!(lattice_count(130, 3), 8646);
        assert_eq!(lattice_count(160, 3), 13041);
        assert_eq!(lattice_points(4, 2).len(), 5);
        for (m, d) in [(7, 3), (5, 4), (3, 5)] {
            assert_eq!(lattice_points(m, d).len() as u128, lattice_count(m, d));
        }
        assert_eq!(resolution_for_points(8646, 3), 130);
        assert_eq!(resolution_for_points(8647, 3), 131);
    }

    #[test]
    fn colex_order() {
        let pts = lattice_points(2, 3);
        assert_eq!(pts[0], vec![2, 0, 0]);
        assert_eq!(pts[1], vec![1, 1, 0]);
        assert_eq!(pts[2], vec![0, 2, 0]);
        assert_eq!(pts[3], vec![1, 0, 1]);
        assert_eq!(pts.last().unwrap(), &vec![0, 0, 2]);
    }

    #[test]
    fn covering_formula() {
        // κ = 0.2, m = 130
        let h = covering_radius(130, 0.2).unwrap();
        let delta: f64 = 1.0 / 130.0;
        assert!((h - ((0.2 + delta) / (0.2 - delta)).ln()).abs() < 1e-15);
        assert!((h - 0.0769612).abs() < 1e-6);
        assert!(matches!(covering_radius(10, 0.1), Err(Error::ResolutionTooCoarse(_))));
        let mut last = f64::INFINITY;
        for m in [20, 40, 80, 160, 320, 10_000] {
            let h = covering_radius(m, 0.1).unwrap();
            assert!(h < last && h > 0.0);
            last = h;
        }
        assert!(last < 2.1e-3);
    }

    #[test]
    fn leslie_grid_and_empirical_covering() {
        let g = GameInstance::leslie_benchmark().validate().unwrap();
        let k = build_invariant_cone(&g, &ConeOptions::default()).unwrap();
        let grid = generate_grid(&g, &k, 40).unwrap();
        assert_eq!(grid.len(), 861);
        assert!(grid.in_cone_mask()[grid.base_index()]);
        for (p, kv) in grid.points().iter().zip(grid.lattice()) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(kv.iter().sum::<u32>(), 40);
            for (x, &c) in p.iter().zip(kv) {
                assert!((x - c as f64 / 40.0).abs() < 1e-15);
            }
        }
        // sample X by random convex combinations of the generators
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gens = k.generators();
        for _ in 0..10_000 {
            let w: Vec<f64> = (0..gens.len()).map(|_| -rng.random_range(1e-12f64..1.0).ln()).collect();
            let s: f64 = w.iter().sum();
            let mut x = vec![0.0; 3];
            for (wi, gv) in w.iter().zip(gens) {
                for (xi, gi) in x.iter_mut().zip(gv) {
                    *xi += wi / s * gi;
                }
            }
            let nearest = grid
                .points()
                .iter()
                .map(|p| hilbert_or_inf(&x, p))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= grid.h_cert(), "{nearest} > {}", grid.h_cert());
        }
    }

    #[test]
    fn rounding_is_within_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = x.iter().sum();
            let m = rng.random_range(2..200usize);
            let k = round_to_lattice(&x, m);
            assert_eq!(k.iter().sum::<u32>() as usize, m);
            for (xi, &ki) in x.iter().zip(&k) {
                assert!((xi / s - ki as f64 / m as f64).abs() < 1.0 / m as f64);
            }
        }
        assert_eq!(round_to_lattice(&[0.5, 0.5], 3), vec![2, 1]);
    }

    #[test]
    fn thin_cone_still_has_marked_points() {
        let g = GameInstance::product(
            vec![crate::metrics::Matrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 2.0, 1.0, 1.0, 5.0, 1.0])],
            vec![crate::metrics::Matrix::identity(3, 3)],
        )
        .unwrap()
        .validate()
        .unwrap();
        let k = build_invariant_cone(&g, &ConeOptions::default()).unwrap();
        let grid = generate_grid(&g, &k, 41).unwrap();
        assert!(grid.in_cone_mask()[grid.base_index()]);
        assert!(!grid.in_cone_indices().is_empty());
    }

    #[test]
    fn non_uniform_e_star() {
        let g = GameInstance::leslie_benchmark()
            .with_e_star(vec![1.0, 2.0, 0.5])
            .unwrap()
            .validate()
            .unwrap();
        let k = build_invariant_cone(&g, &ConeOptions::default()).unwrap();
        let grid = generate_grid(&g, &k, 30).unwrap();
        for p in grid.points() {
            let s = p[0] + 2.0 * p[1] + 0.5 * p[2];
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_tiny_resolution() {
        let g = GameInstance::leslie_benchmark().validate().unwrap();
        let k = build_invariant_cone(&g, &ConeOptions::default()).unwrap();
        assert!(matches!(generate_grid(&g, &k, 1), Err(Error::InvalidParam(_))));
        assert!(matches!(generate_grid(&g, &k, 5), Err(Error::ResolutionTooCoarse(_))));
    }
}
