//! Game instances: dimension, dual weight `e*`, and the two players' finite
//! action sets, stored through the per-pair matrices `M_ab` that drive the
//! dynamics `x ↦ x M_ab`.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Matrix, MatrixSet, SupportPattern};

/// Survival rates `alpha` (minimizer) and fertility rates `beta`
/// (maximizer) of a three-age Leslie model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeslieParams {
    pub alpha: [f64; 2],
    pub beta: [f64; 3],
}

impl LeslieParams {
    pub fn validate(&self) -> Result<()> {
        for &a in &self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::InvalidParam(format!(
                    "survival rate {a} must lie in (0, 1)"
                )));
            }
        }
        for &b in &self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidParam(format!(
                    "fertility rate {b} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// The transposed Leslie matrix `[[β¹, α¹, 0], [β², 0, α²], [β³, 0, 0]]`.
pub fn build_leslie(params: &LeslieParams) -> Result<Matrix> {
    params.validate()?;
    let [a1, a2] = params.alpha;
    let [b1, b2, b3] = params.beta;
    Ok(Matrix::from_row_slice(
        3,
        3,
        &[b1, a1, 0.0, b2, 0.0, a2, b3, 0.0, 0.0],
    ))
}

/// Smallest `p ≥ 1` with an all-true `p`-th boolean power, searched up to
/// Wielandt's bound `(d-1)² + 1`.
pub fn positivity_depth(pattern: &SupportPattern) -> Result<usize> {
    let d = pattern.dim();
    let cap = (d - 1) * (d - 1) + 1;
    let mut power = pattern.clone();
    for p in 1..=cap {
        if power.is_all_true() {
            return Ok(p);
        }
        power = power.compose(pattern);
    }
    Err(Error::NotPrimitive { cap })
}

/// How the per-pair matrices were specified.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionModel {
    /// `M_ab = A_a · B_b`.
    Product {
        set_min: Vec<Matrix>,
        set_max: Vec<Matrix>,
    },
    /// `M_ab = L(α_a, β_b)`: the minimizer picks survival rates, the
    /// maximizer picks fertility rates.
    Leslie { alphas: Vec<[f64; 2]>, betas: Vec<[f64; 3]> },
    /// Explicit per-pair matrices.
    Pairs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    dim: usize,
    e_star: Vec<f64>,
    model: ActionModel,
    n_min: usize,
    n_max: usize,
    pairs: Vec<Matrix>,
    cone_generators: Option<Vec<Vec<f64>>>,
}

fn check_square(m: &Matrix, d: usize, what: &str) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::Validation(format!(
            "{what} is {}x{}, expected {d}x{d}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

impl GameInstance {
    /// Leslie game of the population-dynamics benchmark.
    pub fn leslie_benchmark() -> Self {
        Self::leslie(
            vec![[0.9, 0.6], [0.6, 0.9], [0.7, 0.7]],
            vec![[0.2, 1.4, 1.4], [0.2, 1.7, 1.0], [0.2, 1.0, 1.7]],
        )
        .expect("benchmark parameters are valid")
    }

    pub fn product(set_min: Vec<Matrix>, set_max: Vec<Matrix>) -> Result<Self> {
        let d = set_min
            .first()
            .or(set_max.first())
            .map(|m| m.nrows())
            .ok_or_else(|| Error::Validation("empty action sets".into()))?;
        if set_min.is_empty() || set_max.is_empty() {
            return Err(Error::Validation("both action sets must be non-empty".into()));
        }
        for (k, m) in set_min.iter().enumerate() {
            check_square(m, d, &format!("A[{k}]"))?;
        }
        for (k, m) in set_max.iter().enumerate() {
            check_square(m, d, &format!("B[{k}]"))?;
        }
        let pairs = set_min
            .iter()
            .flat_map(|a| set_max.iter().map(move |b| a * b))
            .collect();
        Ok(GameInstance {
            dim: d,
            e_star: vec![1.0; d],
            n_min: set_min.len(),
            n_max: set_max.len(),
            model: ActionModel::Product { set_min, set_max },
            pairs,
            cone_generators: None,
        })
    }

    pub fn leslie(alphas: Vec<[f64; 2]>, betas: Vec<[f64; 3]>) -> Result<Self> {
        if alphas.is_empty() || betas.is_empty() {
            return Err(Error::Validation("both action sets must be non-empty".into()));
        }
        let mut pairs = Vec::with_capacity(alphas.len() * betas.len());
        for &alpha in &alphas {
            for &beta in &betas {
                pairs.push(build_leslie(&LeslieParams { alpha, beta })?);
            }
        }
        Ok(GameInstance {
            dim: 3,
            e_star: vec![1.0; 3],
            n_min: alphas.len(),
            n_max: betas.len(),
            model: ActionModel::Leslie { alphas, betas },
            pairs,
            cone_generators: None,
        })
    }

    /// Explicit per-pair matrices, row-major in `(a, b)`: `pairs[a * n_max + b]`.
    pub fn from_pairs(n_min: usize, n_max: usize, pairs: Vec<Matrix>) -> Result<Self> {
        if n_min == 0 || n_max == 0 || pairs.len() != n_min * n_max {
            return Err(Error::Validation(format!(
                "expected {n_min}x{n_max} pair matrices, got {}",
                pairs.len()
            )));
        }
        let d = pairs[0].nrows();
        for (k, m) in pairs.iter().enumerate() {
            check_square(m, d, &format!("pair[{k}]"))?;
        }
        Ok(GameInstance {
            dim: d,
            e_star: vec![1.0; d],
            model: ActionModel::Pairs,
            n_min,
            n_max,
            pairs,
            cone_generators: None,
        })
    }

    pub fn with_e_star(mut self, e_star: Vec<f64>) -> Result<Self> {
        if e_star.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: e_star.len(),
            });
        }
        self.e_star = e_star;
        Ok(self)
    }

    /// Overrides the computed invariant cone with user-supplied generators.
    pub fn with_cone_generators(mut self, generators: Vec<Vec<f64>>) -> Self {
        self.cone_generators = Some(generators);
        self
    }

    /// Every pair matrix multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParam(format!("scale {c} must be positive")));
        }
        let mut g = match &self.model {
            ActionModel::Product { set_min, set_max } => GameInstance::product(
                set_min.iter().map(|a| a * c).collect(),
                set_max.clone(),
            )?,
            _ => GameInstance::from_pairs(
                self.n_min,
                self.n_max,
                self.pairs.iter().map(|m| m * c).collect(),
            )?,
        };
        g.e_star = self.e_star.clone();
        g.cone_generators = self.cone_generators.clone();
        Ok(g)
    }

    /// Replaces the pair matrices, keeping action counts and `e*`.
    pub fn with_pairs(&self, pairs: Vec<Matrix>) -> Result<Self> {
        let mut g = GameInstance::from_pairs(self.n_min, self.n_max, pairs)?;
        g.e_star = self.e_star.clone();
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn e_star(&self) -> &[f64] {
        &self.e_star
    }

    pub fn model(&self) -> &ActionModel {
        &self.model
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[Matrix] {
        &self.pairs
    }

    pub fn pair(&self, a: usize, b: usize) -> &Matrix {
        &self.pairs[a * self.n_max + b]
    }

    pub fn pair_index(&self, a: usize, b: usize) -> usize {
        a * self.n_max + b
    }

    pub fn cone_generators(&self) -> Option<&[Vec<f64>]> {
        self.cone_generators.as_deref()
    }

    pub fn is_leslie(&self) -> bool {
        matches!(self.model, ActionModel::Leslie { .. })
    }

    pub fn min_label(&self, a: usize) -> String {
        if self.is_leslie() {
            format!("α{}", a + 1)
        } else {
            format!("A{}", a + 1)
        }
    }

    pub fn max_label(&self, b: usize) -> String {
        if self.is_leslie() {
            format!("β{}", b + 1)
        } else {
            format!("B{}", b + 1)
        }
    }

    pub fn validate(self) -> Result<ValidatedGame> {
        let report = validate_game(&self);
        match (report.is_valid(), report.depth) {
            (true, Some(depth)) => {
                let pair_set = MatrixSet::new(self.pairs.clone())?;
                Ok(ValidatedGame {
                    game: self,
                    depth,
                    pair_set,
                })
            }
            _ => Err(Error::Validation(report.violations.join("; "))),
        }
    }
}

/// Outcome of [`validate_game`]: every violated condition, and the
/// positivity depth when it could be computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub depth: Option<usize>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_matrix(m: &Matrix, what: &str, out: &mut Vec<String>) {
    if m.iter().any(|c| !c.is_finite() || *c < 0.0) {
        out.push(format!("{what} has a negative or non-finite entry"));
    }
    if let Some(i) = SupportPattern::of(m).zero_row() {
        out.push(format!("{what} has a zero row {i}"));
    }
}

fn check_common_support(ms: &[Matrix], what: &str, out: &mut Vec<String>) -> Option<SupportPattern> {
    let first = SupportPattern::of(ms.first()?);
    if let Some(k) = ms.iter().position(|m| SupportPattern::of(m) != first) {
        out.push(format!(
            "{what} supports differ ({what}[{k}] is not in the part of {what}[0])"
        ));
        return None;
    }
    Some(first)
}

/// Checks nonnegativity, absence of zero rows, a common part for each
/// action set and for the pair matrices, and finiteness of the positivity
/// depth.
pub fn validate_game(g: &GameInstance) -> ValidationReport {
    let mut violations = Vec::new();
    if g.e_star.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        violations.push("e_star must have finite positive coordinates".into());
    }
    if let ActionModel::Product { set_min, set_max } = &g.model {
        for (k, m) in set_min.iter().enumerate() {
            check_matrix(m, &format!("A[{k}]"), &mut violations);
        }
        for (k, m) in set_max.iter().enumerate() {
            check_matrix(m, &format!("B[{k}]"), &mut violations);
        }
        check_common_support(set_min, "A", &mut violations);
        check_common_support(set_max, "B", &mut violations);
    }
    for (k, m) in g.pairs.iter().enumerate() {
        check_matrix(m, &format!("pair[{k}]"), &mut violations);
    }
    let mut depth = None;
    match check_common_support(&g.pairs, "pair", &mut violations) {
        Some(pattern) if pattern.zero_row().is_none() => match positivity_depth(&pattern) {
            Ok(p) => depth = Some(p),
            Err(e) => violations.push(e.to_string()),
        },
        _ => {}
    }
    if let Some(gens) = &g.cone_generators {
        if gens.is_empty() || gens.iter().any(|v| v.len() != g.dim) {
            violations.push("cone generators must be non-empty vectors of the game dimension".into());
        }
    }
    ValidationReport { violations, depth }
}

/// A game that passed [`validate_game`]; the only form the solver accepts.
#[derive(Debug, Clone)]
pub struct ValidatedGame {
    game: GameInstance,
    depth: usize,
    pair_set: MatrixSet,
}

impl ValidatedGame {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn pair_set(&self) -> &MatrixSet {
        &self.pair_set
    }

    pub fn game(&self) -> &GameInstance {
        &self.game
    }

    pub fn into_inner(self) -> GameInstance {
        self.game
    }
}

impl Deref for ValidatedGame {
    type Target = GameInstance;
    fn deref(&self) -> &GameInstance {
        &self.game
    }
}
