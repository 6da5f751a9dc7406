//! File formats: game descriptions (JSON), solve results (JSON), the
//! eigenfunction table (CSV) and trajectories (JSON).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameInstance;
use crate::metrics::{Matrix, MatrixSet};
use crate::solver::SolveResult;
use crate::strategies::{Cycle, Trajectory};

/// A matrix given either as nested rows or as a flat row-major list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum MatrixDef {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixDef {
    fn into_matrix(self, dim: Option<usize>, what: &str) -> Result<Matrix> {
        match self {
            MatrixDef::Rows(rows) => {
                let d = rows.len();
                if let Some(k) = rows.iter().position(|r| r.len() != d) {
                    return Err(Error::Validation(format!("{what}: row {k} has {} entries, expected {d}", rows[k].len())));
                }
                Ok(Matrix::from_fn(d, d, |i, j| rows[i][j]))
            }
            MatrixDef::Flat(v) => {
                let d = dim.unwrap_or_else(|| (v.len() as f64).sqrt().round() as usize);
                if d * d != v.len() {
                    return Err(Error::Validation(format!("{what}: {} entries is not a {d}x{d} matrix", v.len())));
                }
                Ok(Matrix::from_row_slice(d, d, &v))
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeslieDef {
    alphas: Vec<[f64; 2]>,
    betas: Vec<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairsDef {
    n_min: usize,
    n_max: usize,
    matrices: Vec<MatrixDef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConeDef {
    generators: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    dimension: Option<usize>,
    e_star: Option<Vec<f64>>,
    #[serde(rename = "A")]
    a: Option<Vec<MatrixDef>>,
    #[serde(rename = "B")]
    b: Option<Vec<MatrixDef>>,
    leslie: Option<LeslieDef>,
    pairs: Option<PairsDef>,
    cone: Option<ConeDef>,
}

fn matrices(defs: Vec<MatrixDef>, dim: Option<usize>, name: &str) -> Result<Vec<Matrix>> {
    defs
        .into_iter()
        .enumerate()
        .map(|(k, s)| s.into_matrix(dim, &format!("{name}[{k}]")))
        .collect()
}

/// Parses a game description. Exactly one of `A`/`B`, `leslie` or `pairs`
/// must be present. The result is not yet validated.
pub fn parse_game(text: &str) -> Result<GameInstance> {
    let f: GameFile = serde_json::from_str(text)?;
    let schemas = [f.a.is_some() || f.b.is_some(), f.leslie.is_some(), f.pairs.is_some()];
    if schemas.iter().filter(|&&s| s).count() != 1 {
        return Err(Error::Validation(
            "exactly one of \"A\"/\"B\", \"leslie\" or \"pairs\" must be given".into(),
        ));
    }
    let mut g = if let Some(l) = f.leslie {
        GameInstance::leslie(l.alphas, l.betas)?
    } else if let Some(p) = f.pairs {
        GameInstance::from_pairs(p.n_min, p.n_max, matrices(p.matrices, f.dimension, "pairs")?)?
    } else {
        let a = f.a.ok_or_else(|| Error::Validation("missing \"A\"".into()))?;
        let b = f.b.ok_or_else(|| Error::Validation("missing \"B\"".into()))?;
        GameInstance::product(matrices(a, f.dimension, "A")?, matrices(b, f.dimension, "B")?)?
    };
    if let Some(d) = f.dimension {
        if d != g.dim() {
            return Err(Error::DimensionMismatch { expected: d, got: g.dim() });
        }
    }
    if let Some(e) = f.e_star {
        g = g.with_e_star(e)?;
    }
    if let Some(c) = f.cone {
        g = g.with_cone_generators(c.generators);
    }
    Ok(g)
}

pub fn read_game(path: &std::path::Path) -> Result<GameInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_game(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetFile {
    matrices: Vec<MatrixDef>,
}

/// A bare matrix set `{"matrices": [...]}`, or the pair set of a game file.
pub fn parse_matrix_set(text: &str) -> Result<MatrixSet> {
    match serde_json::from_str::<SetFile>(text) {
        Ok(s) => MatrixSet::new(matrices(s.matrices, None, "matrices")?),
        Err(_) => MatrixSet::new(parse_game(text)?.pairs().to_vec()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultJson {
    pub lambda: f64,
    pub growth_rate: f64,
    pub interval: [f64; 2],
    pub iterations: usize,
    pub h: f64,
    pub h_cert: f64,
    pub stop: f64,
    pub resolution: usize,
    pub grid_points: usize,
    pub residual: [f64; 2],
    pub m_bounds: [f64; 2],
    pub wall_time_s: f64,
}

impl ResultJson {
    pub fn new(r: &SolveResult, resolution: usize) -> Self {
        ResultJson {
            lambda: r.lambda,
            growth_rate: r.growth_rate(),
            interval: r.interval,
            iterations: r.iterations,
            h: r.h_used,
            h_cert: r.h_cert,
            stop: r.stop,
            resolution,
            grid_points: r.grid_points,
            residual: [r.residual_inf, r.residual_sup],
            m_bounds: [r.m_minus, r.m_plus],
            wall_time_s: r.wall_time,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// Plain decimal with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (11 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenfunction {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub base_index: Option<usize>,
    pub resolution: Option<usize>,
}

pub fn write_eigenfunction_csv(points: &[Vec<f64>], values: &[f64], base_index: usize, resolution: usize) -> String {
    let d = points.first().map_or(0, Vec::len);
    let mut out = format!("# base_index={base_index}\n# resolution={resolution}\n");
    let header: Vec<String> = (1..=d).map(|k| format!("x{k}")).chain(["v".to_string()]).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (p, v) in points.iter().zip(values) {
        let row: Vec<String> = p.iter().chain(std::iter::once(v)).map(|&c| format_sig12(c)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_eigenfunction_csv(text: &str) -> Result<Eigenfunction> {
    let mut base_index = None;
    let mut resolution = None;
    let mut header: Option<usize> = None;
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        let at = |msg: String| Error::Parse(format!("line {}: {msg}", ln + 1));
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.trim().split_once('=') {
                let n = v.trim().parse::<usize>().map_err(|e| at(format!("{k}: {e}")))?;
                match k.trim() {
                    "base_index" => base_index = Some(n),
                    "resolution" => resolution = Some(n),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        match header {
            None => {
                let d = cols.len().saturating_sub(1);
                let ok = d > 0
                    && cols.last() == Some(&"v")
                    && cols[..d].iter().enumerate().all(|(k, c)| *c == format!("x{}", k + 1));
                if !ok {
                    return Err(at(format!("expected header x1,...,xd,v, found {line:?}")));
                }
                header = Some(d);
            }
            Some(d) => {
                if cols.len() != d + 1 {
                    return Err(at(format!("expected {} columns, found {}", d + 1, cols.len())));
                }
                let nums = cols
                    .iter()
                    .map(|c| c.parse::<f64>().map_err(|e| at(format!("{c:?}: {e}"))))
                    .collect::<Result<Vec<f64>>>()?;
                values.push(nums[d]);
                points.push(nums[..d].to_vec());
            }
        }
    }
    if header.is_none() {
        return Err(Error::Parse("missing header line".into()));
    }
    Ok(Eigenfunction {
        points,
        values,
        base_index,
        resolution,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryJson {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<[String; 2]>,
    pub action_indices: Vec<[usize; 2]>,
    pub moves: String,
    pub gauges: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub cycle: Option<Cycle>,
    pub limit_point: Option<Vec<f64>>,
}

impl TrajectoryJson {
    pub fn new(t: &Trajectory, g: &GameInstance) -> Self {
        TrajectoryJson {
            states: t.states.clone(),
            actions: t.actions.iter().map(|&(a, b)| [g.min_label(a), g.max_label(b)]).collect(),
            action_indices: t.actions.iter().map(|&(a, b)| [a, b]).collect(),
            moves: t.move_string(g),
            gauges: t.gauges.clone(),
            cumulative: t.cumulative.clone(),
            cycle: t.cycle,
            limit_point: t.limit_point.clone(),
        }
    }
}
