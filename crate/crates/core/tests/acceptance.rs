//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
//! if any fails. Thresholds are pinned below.

use std::time::Instant;

use cosra::game::{GameInstance, LeslieParams};
use cosra::metrics::{hilbert_or_inf, normalize, row_times, Matrix};
use cosra::shapley::{hilbert_seminorm, interp_plus, ImageTableau, TableauMode};
use cosra::solver::{rvi_km_solve, Discretization, SolveOptions, SolveResult};
use cosra::strategies::{simulate_many, CYCLE_TOL};
use cosra::continuity::{lipschitz_experiment, scaling_experiment};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Leslie benchmark reference rows: (resolution, points, growth rate, iterations).
const TABLE: [(usize, usize, f64, usize); 2] = [(130, 8646, 1.3147, 12), (80, 3321, 1.3158, 10)];
const VALUE_TOL: f64 = 0.02;
const ITER_TOL: usize = 5;
const RUNTIME_LIMIT_S: f64 = 300.0;

const PERRON_GAMES: usize = 20;
const PERRON_RESOLUTION: usize = 40;
const PERRON_ORACLE_TOL: f64 = 1e-10;

const ONE_PLAYER_RESOLUTION: usize = 20;
const ONE_PLAYER_HORIZON: usize = 12;
const ONE_PLAYER_SLACK: f64 = 0.01;

const OPERATOR_RESOLUTION: usize = 20;
const OPERATOR_PAIRS: usize = 100;
const OPERATOR_TOL: f64 = 1e-12;

const LIPSCHITZ_RESOLUTION: usize = 40;
const LIPSCHITZ_EPSILONS: [f64; 2] = [0.01, 0.05];
const LIPSCHITZ_TRIALS: usize = 10;
const SCALE_FACTOR: f64 = 1.5;

const TURNPIKE_STARTS: usize = 20;
const TURNPIKE_STEPS: usize = 60;
const TURNPIKE_TOL: f64 = 1e-2;
const X_STAR: [f64; 3] = [0.5619, 0.2590, 0.1790];
const MOVES: &str = "α3β1α2β1α2β2α2β1α2β2α2β2α2β1α2β1";
const MOVE_TAIL: &str = "α2β2";

struct Suite {
    lines: Vec<(bool, String)>,
    runs: Vec<(String, SolveResult)>,
}

impl Suite {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        let line = format!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((pass, line));
    }

    fn solve(&mut self, label: String, disc: &Discretization, opts: &SolveOptions) -> SolveResult {
        let res = rvi_km_solve(disc, opts).unwrap_or_else(|e| panic!("{label}: {e}"));
        self.runs.push((label, res.clone()));
        res
    }
}

fn leslie() -> GameInstance {
    GameInstance::leslie_benchmark()
}

fn table1(s: &mut Suite) -> Vec<(usize, SolveResult, Discretization)> {
    let mut kept = Vec::new();
    for (m, points, value, iters) in TABLE {
        let t0 = Instant::now();
        let disc = Discretization::new(leslie().validate().unwrap(), m).unwrap();
        let res = s.solve(format!("leslie m={m}"), &disc, &SolveOptions::default());
        let secs = t0.elapsed().as_secs_f64();
        let g = res.growth_rate();
        let pass = res.grid_points == points
            && (g - value).abs() <= VALUE_TOL
            && res.iterations.abs_diff(iters) <= ITER_TOL
            && secs < RUNTIME_LIMIT_S;
        s.record(
            &format!("leslie benchmark m={m}"),
            pass,
            format!(
                "points {} (want {points}), exp(λ) = {g:.4} (want {value} ± {VALUE_TOL}), λ = {:.4}, \
                 iterations {} (want {iters} ± {ITER_TOL}), {secs:.1} s (limit {RUNTIME_LIMIT_S} s)",
                res.grid_points, res.lambda, res.iterations
            ),
        );
        kept.push((m, res, disc));
    }
    kept
}

/// Perron root by power iteration until successive estimates agree to `tol`.
fn power_iteration(m: &Matrix, tol: f64) -> f64 {
    let d = m.nrows();
    let mut x = vec![1.0 / d as f64; d];
    let mut last = f64::INFINITY;
    loop {
        let y = row_times(&x, m);
        let s: f64 = y.iter().sum();
        x = y.iter().map(|c| c / s).collect();
        if (s - last).abs() < tol * 1e-3 {
            return s;
        }
        last = s;
    }
}

fn perron(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();
    let mut worst_margin = f64::INFINITY;
    for k in 0..PERRON_GAMES {
        let m = Matrix::from_fn(3, 3, |_, _| rng.random_range(0.5..2.0));
        let rho = power_iteration(&m, PERRON_ORACLE_TOL).ln();
        let g = GameInstance::product(vec![m], vec![Matrix::identity(3, 3)]).unwrap().validate().unwrap();
        let disc = Discretization::new(g, PERRON_RESOLUTION).unwrap();
        let res = s.solve(format!("perron #{k}"), &disc, &SolveOptions::default());
        let margin = (rho - res.interval[0]).min(res.interval[1] - rho);
        worst_margin = worst_margin.min(margin);
        if margin < 0.0 {
            failures.push(k);
        }
    }
    s.record(
        "perron oracle",
        failures.is_empty(),
        format!("{PERRON_GAMES} random positive 3x3 games at m={PERRON_RESOLUTION}; failing {failures:?}; smallest margin {worst_margin:.3e}"),
    );
}

/// `(1/k) log ⟨x P, e*⟩` optimized over all length-`k` products `P`.
fn brute_force(pairs: &[Matrix], x: &[f64], e: &[f64], k: usize, maximize: bool) -> f64 {
    fn rec(pairs: &[Matrix], x: &[f64], e: &[f64], left: usize, maximize: bool) -> f64 {
        if left == 0 {
            return x.iter().zip(e).map(|(a, b)| a * b).sum::<f64>().ln();
        }
        let vals = pairs.iter().map(|m| {
            let y = row_times(x, m);
            let s: f64 = y.iter().zip(e).map(|(a, b)| a * b).sum();
            let yn: Vec<f64> = y.iter().map(|c| c / s).collect();
            s.ln() + rec(pairs, &yn, e, left - 1, maximize)
        });
        if maximize {
            vals.fold(f64::NEG_INFINITY, f64::max)
        } else {
            vals.fold(f64::INFINITY, f64::min)
        }
    }
    rec(pairs, x, e, k, maximize) / k as f64
}

fn one_player(s: &mut Suite) {
    let alphas = vec![[0.9, 0.6], [0.6, 0.9], [0.7, 0.7]];
    let betas = vec![[0.2, 1.4, 1.4], [0.2, 1.7, 1.0], [0.2, 1.0, 1.7]];
    let cases = [
        ("minimizer only (B = {β1})", GameInstance::leslie(alphas.clone(), vec![betas[0]]).unwrap(), false),
        ("maximizer only (A = {α1})", GameInstance::leslie(vec![alphas[0]], betas.clone()).unwrap(), true),
    ];
    for (name, g, maximize) in cases {
        let disc = Discretization::new(g.validate().unwrap(), ONE_PLAYER_RESOLUTION).unwrap();
        let res = s.solve(format!("one-player {name}"), &disc, &SolveOptions::default());
        let x0 = disc.grid.point(disc.grid.base_index()).to_vec();
        let est = brute_force(disc.game.pairs(), &x0, disc.game.e_star(), ONE_PLAYER_HORIZON, maximize);
        let tol = 3.0 * res.h_used + ONE_PLAYER_SLACK;
        let gap = (res.lambda - est).abs();
        s.record(
            &format!("one-player degeneration, {name}"),
            gap <= tol,
            format!("λ = {:.4}, length-{ONE_PLAYER_HORIZON} brute force {est:.4}, |Δ| = {gap:.4} ≤ 3h + {ONE_PLAYER_SLACK} = {tol:.4}", res.lambda),
        );
    }
}

fn sandwich(s: &mut Suite, fine: &[(usize, SolveResult, Discretization)]) {
    let disc = Discretization::new(leslie().validate().unwrap(), 40).unwrap();
    let coarse = s.solve("leslie m=40".into(), &disc, &SolveOptions::default());
    let by_m = |m: usize| &fine.iter().find(|(k, _, _)| *k == m).unwrap().1;
    for (outer, inner) in [(&coarse, by_m(80)), (by_m(80), by_m(130))] {
        let pass = outer.interval[0] <= inner.lambda && inner.lambda <= outer.interval[1];
        s.record(
            &format!("sandwich {} ⊃ λ({})", outer.grid_points, inner.grid_points),
            pass,
            format!("[{:.4}, {:.4}] ∋ {:.4}", outer.interval[0], outer.interval[1], inner.lambda),
        );
    }
}

fn rate_and_cap(s: &mut Suite) {
    let mut rate_bad = Vec::new();
    let mut cap_bad = Vec::new();
    for (label, r) in &s.runs {
        if let Some(k) = r.rate_violation() {
            rate_bad.push(format!("{label} at k={k}"));
        }
        if r.iterations > r.iteration_bound() {
            cap_bad.push(label.clone());
        }
    }
    let n = s.runs.len();
    s.record("KM rate bound", rate_bad.is_empty(), format!("{n} runs checked; violations {rate_bad:?}"));
    s.record("iteration cap", cap_bad.is_empty(), format!("{n} runs checked; violations {cap_bad:?}"));
}

fn operator_suite(s: &mut Suite) {
    let disc = Discretization::with_options(
        leslie().validate().unwrap(),
        OPERATOR_RESOLUTION,
        &Default::default(),
        TableauMode::Dense,
    )
    .unwrap();
    let t: &ImageTableau = &disc.tableau;
    let pts = disc.grid.points();
    let n = pts.len();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let lipschitz = |rng: &mut ChaCha8Rng, scale: f64| -> Vec<f64> {
        let noise: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
        pts.iter().map(|x| interp_plus(pts, &noise, x).unwrap()).collect()
    };
    let (mut mono, mut homog, mut nonexp, mut trip) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..OPERATOR_PAIRS {
        let v = lipschitz(&mut rng, 1.0);
        let bump: Vec<f64> = v.iter().map(|x| x + rng.random_range(0.0..0.5)).collect();
        let w: Vec<f64> = pts.iter().map(|x| interp_plus(pts, &bump, x).unwrap()).collect();
        let fv = t.eval_f_hat(&v).unwrap();
        let fw = t.eval_f_hat(&w).unwrap();
        for i in 0..n {
            mono = mono.max(v[i] - w[i]).max(fv[i] - fw[i]);
        }
        let c = rng.random_range(-5.0..5.0);
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let fs = t.eval_f_hat(&shifted).unwrap();
        for i in 0..n {
            homog = homog.max((fs[i] - fv[i] - c).abs());
        }
        let u = lipschitz(&mut rng, 2.0);
        let fu = t.eval_f_hat(&u).unwrap();
        let d_in: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a - b).collect();
        let d_out: Vec<f64> = fv.iter().zip(&fu).map(|(a, b)| a - b).collect();
        nonexp = nonexp.max(hilbert_seminorm(&d_out) - hilbert_seminorm(&d_in));
        for (x, vx) in pts.iter().zip(&u) {
            trip = trip.max((interp_plus(pts, &u, x).unwrap() - vx).abs());
        }
    }
    let detail = format!(
        "{OPERATOR_PAIRS} random pairs on {n} points: monotonicity excess {mono:.2e}, \
         homogeneity error {homog:.2e}, seminorm expansion {nonexp:.2e}, round-trip error {trip:.2e} (tol {OPERATOR_TOL:.0e})"
    );
    let pass = mono <= OPERATOR_TOL && homog <= OPERATOR_TOL && nonexp <= OPERATOR_TOL && trip <= OPERATOR_TOL;
    s.record("operator properties", pass, detail);
}

fn lipschitz(s: &mut Suite) {
    let disc = Discretization::new(leslie().validate().unwrap(), LIPSCHITZ_RESOLUTION).unwrap();
    let opts = SolveOptions::default();
    for (k, eps) in LIPSCHITZ_EPSILONS.into_iter().enumerate() {
        let rep = lipschitz_experiment(&disc, eps, LIPSCHITZ_TRIALS, 1000 * (k as u64 + 1), &opts).unwrap();
        let worst = rep
            .trials
            .iter()
            .map(|t| t.delta_lambda - t.hausdorff)
            .fold(f64::NEG_INFINITY, f64::max);
        s.record(
            &format!("Lipschitz bound ε={eps}"),
            rep.all_within_bound && rep.trials.len() == LIPSCHITZ_TRIALS,
            format!(
                "{} trials, max |Δλ| − δ_H = {worst:.4} ≤ 5·stop = {:.4}; max ratio |Δλ|/δ_H = {:.3}",
                rep.trials.len(),
                rep.slack,
                rep.max_ratio
            ),
        );
    }
    let sc = scaling_experiment(&disc, SCALE_FACTOR, &opts).unwrap();
    s.record(
        "Lipschitz tightness (scaling)",
        sc.tight,
        format!(
            "c = {SCALE_FACTOR}: Δλ = {:.6}, log c = {:.6}, |Δλ − log c| = {:.2e} ≤ 2·stop = {:.4}; δ_H = {:.6}",
            sc.delta_lambda,
            SCALE_FACTOR.ln(),
            (sc.delta_lambda - SCALE_FACTOR.ln()).abs(),
            2.0 * sc.stop,
            sc.distance
        ),
    );
}

fn turnpike(s: &mut Suite, fine: &[(usize, SolveResult, Discretization)]) {
    let (m, res, disc) = fine.iter().find(|(m, _, _)| *m == 130).unwrap();
    let v = &res.value.values;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let starts: Vec<Vec<f64>> = (0..TURNPIKE_STARTS)
        .map(|_| {
            let w: Vec<f64> = (0..3).map(|_| -rng.random_range(1e-9f64..1.0).ln()).collect();
            normalize(&w, &[1.0; 3])
        })
        .collect();
    let trs = simulate_many(&disc.game, &disc.tableau, v, &starts, TURNPIKE_STEPS, CYCLE_TOL).unwrap();
    let dist: Vec<f64> = trs.iter().map(|t| hilbert_or_inf(t.states.last().unwrap(), &X_STAR)).collect();
    let worst = dist.iter().copied().fold(0.0, f64::max);
    s.record(
        "turnpike convergence",
        worst <= TURNPIKE_TOL,
        format!("{TURNPIKE_STARTS} random starts, {TURNPIKE_STEPS} steps at m={m}: max Hilbert distance to x* {worst:.2e} (tol {TURNPIKE_TOL:.0e})"),
    );

    let center = vec![1.0 / 3.0; 3];
    let tr = &simulate_many(&disc.game, &disc.tableau, v, &[center], TURNPIKE_STEPS, CYCLE_TOL).unwrap()[0];
    let moves = tr.move_string(&disc.game);
    let got: Vec<char> = moves.chars().collect();
    let want: Vec<char> = MOVES.chars().collect();
    // each half-move is a Greek letter followed by one digit
    let matched = got.chunks(2).zip(want.chunks(2)).take_while(|(a, b)| a == b).count();
    let prefix_len = MOVES.chars().count() / 2;
    let tail_ok = moves.ends_with(&MOVE_TAIL.repeat(10))
        && tr.cycle.is_some_and(|c| c.period == 1)
        && tr.actions.last() == Some(&(1, 1));
    let l22 = cosra::game::build_leslie(&LeslieParams {
        alpha: [0.6, 0.9],
        beta: [0.2, 1.7, 1.0],
    })
    .unwrap();
    let fixed = cosra::strategies::check_projective_fixed_point(tr.limit_point.as_deref().unwrap_or(&[1.0, 0.0, 0.0]), &l22, &[1.0; 3], 1e-6);
    let shown: String = moves.chars().take(2 * prefix_len + 8).collect();
    s.record(
        "turnpike move string",
        matched == prefix_len && tail_ok && fixed,
        format!(
            "first {matched}/{prefix_len} half-moves match; got {shown}… want {MOVES}({MOVE_TAIL})^ω; \
             tail (α2β2) {}; limit is a fixed point of L(α2,β2): {fixed}",
            if tail_ok { "present" } else { "absent" }
        ),
    );
}

fn main() {
    let t0 = Instant::now();
    let mut s = Suite {
        lines: Vec::new(),
        runs: Vec::new(),
    };
    let fine = table1(&mut s);
    perron(&mut s);
    one_player(&mut s);
    sandwich(&mut s, &fine);
    operator_suite(&mut s);
    lipschitz(&mut s);
    turnpike(&mut s, &fine);
    rate_and_cap(&mut s);
    let failed = s.lines.iter().filter(|(p, _)| !p).count();
    println!(
        "acceptance: {} passed, {failed} failed ({:.1} s)",
        s.lines.len() - failed,
        t0.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
