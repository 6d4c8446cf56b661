//! Principal eigenvalues of `F[u] + h·∇u|∇u|^α + (V+λ)|u|^α u = 0` with zero
//! boundary data.
//!
//! Two independent routes are provided and are meant to be cross-checked:
//! inverse power iteration ([`eigen_up`], [`eigen_down`]) and bisection on
//! the solvability of the forced problem ([`eigen_bisect`]). Unbounded strips
//! are handled by exhaustion with truncated strips ([`eigen_exhaust`]).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{build_grid, Domain, Grid, GridError, ScalarField};
use crate::operator::{residual, EvalContext, OperatorSpec};
use crate::solver::{solve_dirichlet, solve_dirichlet_from, SolveConfig, SolveError, SolveStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("iterate lost interior positivity at iteration {iteration}")]
    NotPositive { iteration: usize },
    #[error("eigenvalue iteration did not settle after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("inner solve ended with {status:?} at iteration {iteration}")]
    InnerSolve {
        iteration: usize,
        status: SolveStatus,
    },
    #[error("both ends of [{lo}, {hi}] classify as {verdict:?}")]
    BracketInvalid { lo: f64, hi: f64, verdict: Verdict },
    #[error("eigenvalue increased by {increase:e} from L = {from} to L = {to}")]
    NotMonotone { from: f64, to: f64, increase: f64 },
    #[error("the shifted problem diverged: lambda is not below the threshold")]
    Diverged,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenConfig {
    /// Inner Dirichlet solves. `epsilon` here is the regularization relative to
    /// the sup-normalized eigenfunction.
    pub solve: SolveConfig,
    /// Stop when `|λ_k − λ_{k−1}| ≤ tol_lambda·λ_k`.
    pub tol_lambda: f64,
    pub max_iters: usize,
    /// Positivity probe point; defaults to the center of the interior nodes.
    pub probe: Option<[f64; 2]>,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            solve: SolveConfig {
                tol_res: 1e-10,
                tol_step: 1e-12,
                ..SolveConfig::relaxation()
            },
            tol_lambda: 1e-8,
            max_iters: 5000,
            probe: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda: f64,
    /// Sup-normalized positive eigenfunction (inf-normalized negative for `eigen_down`).
    pub eigenfunction: ScalarField,
    /// Max pointwise defect of the eigen-equation at the returned pair.
    pub residual_norm: f64,
    /// Eigenvalue estimate after each outer iteration.
    pub trace: Vec<f64>,
    pub inner_sweeps: usize,
    /// Eigenfunction value at the positivity probe node.
    pub probe_value: f64,
}

/// Positive bubble vanishing on the bounding box of the boundary layer.
fn initial_bubble(grid: &Arc<Grid>) -> ScalarField {
    let h = grid.h();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for &k in grid.interior() {
        let p = grid.position(k);
        for d in 0..2 {
            lo[d] = lo[d].min(p[d] - h);
            hi[d] = hi[d].max(p[d] + h);
        }
    }
    let c = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let r = [(hi[0] - lo[0]) / 2.0, (hi[1] - lo[1]) / 2.0];
    let mut v = vec![0.0; grid.len()];
    for &k in grid.interior() {
        let p = grid.position(k);
        v[k] = (1.0 - ((p[0] - c[0]) / r[0]).powi(2)) * (1.0 - ((p[1] - c[1]) / r[1]).powi(2));
    }
    let s = v.iter().cloned().fold(0.0, f64::max);
    ScalarField::from_values(grid.clone(), v.into_iter().map(|x| x / s).collect())
}

fn interior_center(grid: &Grid) -> [f64; 2] {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &k in grid.interior() {
        let p = grid.position(k);
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0]
}

/// Principal eigenvalue with a positive eigenfunction, by inverse power iteration.
///
/// Each step solves `F[w] + h·∇w|∇w|^α + V|w|^α w = −û^{1+α}` with `w = 0` on the
/// boundary, then sets `λ = (sup w)^{−(1+α)}` and `û = w / sup w`. The inner
/// solve is warm-started from the previous `w`, and its regularization is
/// `ε·sup w_prev` so that a fixed point solves the eigen-equation for `û`
/// with regularization `ε` exactly.
pub fn eigen_up(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    cfg: &EigenConfig,
) -> Result<EigenResult, EigenError> {
    spec.validate().map_err(SolveError::from)?;
    cfg.solve.validate()?;
    if !(cfg.tol_lambda > 0.0) || cfg.max_iters == 0 {
        return Err(EigenError::InvalidInput(
            "tol_lambda and max_iters must be positive".into(),
        ));
    }
    let alpha = spec.alpha;
    let eps0 = cfg.solve.epsilon_for(grid);
    let probe = grid.nearest_interior(cfg.probe.unwrap_or_else(|| interior_center(grid)));
    let zero = ScalarField::zeros(grid.clone());

    let mut u_hat = initial_bubble(grid);
    let mut w = zero.clone();
    let mut scale = 1.0;
    let mut trace = Vec::new();
    let mut sweeps = 0;
    for iteration in 1..=cfg.max_iters {
        let rhs = u_hat.map(|v| -v.abs().powf(1.0 + alpha));
        let inner = SolveConfig {
            epsilon: Some(eps0 * scale),
            ..cfg.solve
        };
        let out = solve_dirichlet_from(spec, &rhs, &zero, 0.0, &inner, &w)?;
        sweeps += out.sweeps;
        if out.status != SolveStatus::Converged {
            return Err(EigenError::InnerSolve {
                iteration,
                status: out.status,
            });
        }
        w = out.field;
        if grid.interior().iter().any(|&k| !(w.get(k) > 0.0)) {
            return Err(EigenError::NotPositive { iteration });
        }
        scale = grid
            .interior()
            .iter()
            .map(|&k| w.get(k))
            .fold(0.0, f64::max);
        let lambda = scale.powf(-(1.0 + alpha));
        u_hat = w.scaled(1.0 / scale);
        let prev = trace.last().copied();
        trace.push(lambda);
        if let Some(prev) = prev {
            if (lambda - prev).abs() <= cfg.tol_lambda * lambda.abs() {
                let ctx = EvalContext::new(eps0, lambda);
                let res = residual(spec, &ctx, &u_hat, &zero).sup_abs();
                return Ok(EigenResult {
                    lambda,
                    probe_value: u_hat.get(probe),
                    eigenfunction: u_hat,
                    residual_norm: res,
                    trace,
                    inner_sweeps: sweeps,
                });
            }
        }
    }
    Err(EigenError::NoConvergence {
        iterations: cfg.max_iters,
    })
}

/// Principal eigenvalue with a negative eigenfunction.
///
/// Runs [`eigen_up`] on the dual operator `G(p, M) = −F(p, −M)` and returns
/// `ψ = −φ`; the residual is re-evaluated for `ψ` against the original operator.
pub fn eigen_down(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    cfg: &EigenConfig,
) -> Result<EigenResult, EigenError> {
    let up = eigen_up(&spec.dual(), grid, cfg)?;
    let psi = up.eigenfunction.scaled(-1.0);
    let ctx = EvalContext::new(cfg.solve.epsilon_for(grid), up.lambda);
    let res = residual(spec, &ctx, &psi, &ScalarField::zeros(grid.clone())).sup_abs();
    Ok(EigenResult {
        lambda: up.lambda,
        eigenfunction: psi,
        residual_norm: res,
        trace: up.trace,
        inner_sweeps: up.inner_sweeps,
        probe_value: -up.probe_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// A positive solution (or a positive strict supersolution) exists.
    Below,
    /// The iteration blew up, or a positive strict subsolution was found.
    Above,
    /// Neither happened within the sweep budget: the trial sits at the threshold
    /// to within the solver's resolution.
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BisectConfig {
    pub solve: SolveConfig,
    /// Stop when the bracket width is at most `tol_rel` times its midpoint.
    pub tol_rel: f64,
    /// Sweeps between sign-certificate checks.
    pub check_period: usize,
}

impl Default for BisectConfig {
    fn default() -> Self {
        BisectConfig {
            solve: SolveConfig {
                max_sweeps: 200_000,
                ..SolveConfig::relaxation()
            },
            tol_rel: 1e-3,
            check_period: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectTrial {
    pub lambda: f64,
    pub verdict: Verdict,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectResult {
    pub lambda: f64,
    pub lo: f64,
    pub hi: f64,
    pub trials: Vec<BisectTrial>,
}

/// Classifies `lambda` against the threshold by solving with `f ≡ −1`, `g = 0`.
///
/// Besides convergence and blow-up, the running iterate is checked every
/// `check_period` sweeps for a sign certificate: if `u > 0` in the interior and
/// `E[u] = F[u] + h·∇u|∇u|^α + (V+λ)|u|^α u` has one strict sign at every
/// interior node, `u` is a positive strict super- (`E < 0`) or sub- (`E > 0`)
/// solution, which places `lambda` below or above the threshold.
pub fn classify_shift(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    cfg: &BisectConfig,
    lambda: f64,
) -> Result<(Verdict, usize), EigenError> {
    let mut f = ScalarField::zeros(grid.clone());
    for &k in grid.interior() {
        f.values_mut()[k] = -1.0;
    }
    let zero = ScalarField::zeros(grid.clone());
    let ctx = EvalContext::new(cfg.solve.epsilon_for(grid), lambda);
    let mut u = zero.clone();
    let mut total = 0;
    let period = cfg.check_period.max(1);
    while total < cfg.solve.max_sweeps {
        let chunk = SolveConfig {
            max_sweeps: period.min(cfg.solve.max_sweeps - total),
            ..cfg.solve
        };
        let out = solve_dirichlet_from(spec, &f, &zero, lambda, &chunk, &u)?;
        total += out.sweeps;
        let positive = grid.interior().iter().all(|&k| out.field.get(k) > 0.0);
        match out.status {
            SolveStatus::Converged => {
                let v = if positive {
                    Verdict::Below
                } else {
                    Verdict::Above
                };
                return Ok((v, total));
            }
            SolveStatus::Diverged => return Ok((Verdict::Above, total)),
            SolveStatus::MaxSweeps => {}
        }
        if positive {
            // E[u] = R[u] + f with R the residual against the forcing.
            let r = residual(spec, &ctx, &out.field, &f);
            let mut all_neg = true;
            let mut all_pos = true;
            for &k in grid.interior() {
                let e = r.get(k) + f.get(k);
                all_neg &= e < 0.0;
                all_pos &= e > 0.0;
            }
            if all_neg {
                return Ok((Verdict::Below, total));
            }
            if all_pos {
                return Ok((Verdict::Above, total));
            }
        }
        u = out.field;
    }
    Ok((Verdict::Unresolved, total))
}

/// Threshold of solvability in `lambda` by bisection over `range`.
///
/// An `Unresolved` trial ends the search and returns that trial's `lambda`.
pub fn eigen_bisect(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    cfg: &BisectConfig,
    range: [f64; 2],
) -> Result<BisectResult, EigenError> {
    let [mut lo, mut hi] = range;
    if !(lo < hi) || !(cfg.tol_rel > 0.0) {
        return Err(EigenError::InvalidInput(format!("bad range {range:?}")));
    }
    let mut trials = Vec::new();
    let run = |lambda: f64, trials: &mut Vec<BisectTrial>| -> Result<Verdict, EigenError> {
        let (verdict, sweeps) = classify_shift(spec, grid, cfg, lambda)?;
        trials.push(BisectTrial {
            lambda,
            verdict,
            sweeps,
        });
        Ok(verdict)
    };
    let v_lo = run(lo, &mut trials)?;
    let v_hi = run(hi, &mut trials)?;
    if v_lo != Verdict::Below || v_hi != Verdict::Above {
        let verdict = if v_lo == v_hi {
            v_lo
        } else {
            Verdict::Unresolved
        };
        return Err(EigenError::BracketInvalid { lo, hi, verdict });
    }
    while hi - lo > cfg.tol_rel * 0.5 * (lo + hi).abs() {
        let mid = 0.5 * (lo + hi);
        match run(mid, &mut trials)? {
            Verdict::Below => lo = mid,
            Verdict::Above => hi = mid,
            Verdict::Unresolved => {
                return Ok(BisectResult {
                    lambda: mid,
                    lo,
                    hi,
                    trials,
                })
            }
        }
    }
    Ok(BisectResult {
        lambda: 0.5 * (lo + hi),
        lo,
        hi,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionPoint {
    pub length: f64,
    pub lambda: f64,
    pub residual: f64,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionResult {
    pub width: f64,
    pub points: Vec<ExhaustionPoint>,
    /// Limit from the least-squares fit `λ(L) = λ∞ + c/L²` on the last three points.
    pub lambda_inf: f64,
    /// True when the sequence is non-increasing without any tolerance.
    pub strictly_monotone: bool,
    /// `λ∞ · width^{2+α}`.
    pub product: f64,
}

/// Doubling schedule `first, 2·first, …` with `count` entries.
pub fn doubling_schedule(first: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| first * 2f64.powi(i as i32)).collect()
}

/// Least-squares fit of `y = a + b·t`; returns `(a, b)`.
fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|v| (v - mt).powi(2)).sum();
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mt, b)
}

/// Principal eigenvalue of the strip `[0, width] × ℝ` by exhaustion.
///
/// Each truncation `[0, width] × [−L/2, L/2]` is solved with [`eigen_up`] at
/// spacing `h`. The sequence must not increase by more than `tol_monotone`.
pub fn eigen_exhaust(
    spec: &OperatorSpec,
    width: f64,
    schedule: &[f64],
    h: f64,
    cfg: &EigenConfig,
    tol_monotone: f64,
) -> Result<ExhaustionResult, EigenError> {
    if schedule.is_empty() || schedule.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(EigenError::InvalidInput(
            "schedule must be strictly increasing".into(),
        ));
    }
    let mut points: Vec<ExhaustionPoint> = Vec::new();
    for &length in schedule {
        let grid = Arc::new(build_grid(&Domain::strip(width, length), h)?);
        let r = eigen_up(spec, &grid, cfg)?;
        if let Some(prev) = points.last() {
            let increase = r.lambda - prev.lambda;
            if increase > tol_monotone {
                return Err(EigenError::NotMonotone {
                    from: prev.length,
                    to: length,
                    increase,
                });
            }
        }
        points.push(ExhaustionPoint {
            length,
            lambda: r.lambda,
            residual: r.residual_norm,
            sweeps: r.inner_sweeps,
        });
    }
    let tail = &points[points.len().saturating_sub(3)..];
    let lambda_inf = if tail.len() >= 2 {
        let t: Vec<f64> = tail.iter().map(|p| p.length.powi(-2)).collect();
        let y: Vec<f64> = tail.iter().map(|p| p.lambda).collect();
        linear_fit(&t, &y).0
    } else {
        tail[0].lambda
    };
    let strictly_monotone = points.windows(2).all(|w| w[1].lambda <= w[0].lambda);
    Ok(ExhaustionResult {
        width,
        product: lambda_inf * width.powf(2.0 + spec.alpha),
        points,
        lambda_inf,
        strictly_monotone,
    })
}

#[derive(Debug, Clone)]
pub struct BelowReport {
    pub field: ScalarField,
    /// `sup v / |f|∞^{1/(1+α)}`.
    pub ratio: f64,
    pub sweeps: usize,
    pub final_residual: f64,
}

/// Solves the shifted problem with `f ≤ 0`, `g = 0` for `lambda` below the
/// threshold and returns the positive solution.
///
/// Callers pick `lambda` with a margin below the principal eigenvalue (for
/// instance `0.9·λ̄` from [`eigen_up`]).
pub fn solve_below(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    cfg: &SolveConfig,
    lambda: f64,
    f: &ScalarField,
) -> Result<BelowReport, EigenError> {
    let f_inf = grid
        .interior()
        .iter()
        .map(|&k| f.get(k).abs())
        .fold(0.0, f64::max);
    if grid.interior().iter().any(|&k| f.get(k) > 0.0) || f_inf == 0.0 {
        return Err(EigenError::InvalidInput(
            "forcing must be <= 0 and not identically 0".into(),
        ));
    }
    let zero = ScalarField::zeros(grid.clone());
    let out = solve_dirichlet(spec, grid, f, &zero, lambda, cfg)?;
    match out.status {
        SolveStatus::Converged => {}
        SolveStatus::Diverged => return Err(EigenError::Diverged),
        SolveStatus::MaxSweeps => {
            return Err(EigenError::NoConvergence {
                iterations: out.sweeps,
            })
        }
    }
    if grid.interior().iter().any(|&k| !(out.field.get(k) > 0.0)) {
        return Err(EigenError::NotPositive {
            iteration: out.sweeps,
        });
    }
    let sup = out.field.sup_abs();
    Ok(BelowReport {
        ratio: sup / f_inf.powf(1.0 / (1.0 + spec.alpha)),
        field: out.field,
        sweeps: out.sweeps,
        final_residual: out.final_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample_field;
    use crate::operator::OperatorKind;

    fn square(h: f64) -> Arc<Grid> {
        Arc::new(build_grid(&Domain::unit_square(), h).unwrap())
    }

    /// Discrete Dirichlet Laplacian eigenvalue on the unit square with spacing `h`.
    fn discrete_square_lambda(h: f64) -> f64 {
        2.0 * 4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2)
    }

    #[test]
    fn square_laplacian_matches_discrete_oracle() {
        let h = 1.0 / 16.0;
        let r = eigen_up(
            &OperatorSpec::laplacian(0.0),
            &square(h),
            &EigenConfig::default(),
        )
        .unwrap();
        assert!(
            (r.lambda - discrete_square_lambda(h)).abs() < 1e-6 * r.lambda,
            "{}",
            r.lambda
        );
        assert!(r.residual_norm < 1e-6);
        assert!(r.probe_value > 0.0);
        let g = r.eigenfunction.grid().clone();
        let sup = g
            .interior()
            .iter()
            .map(|&k| r.eigenfunction.get(k))
            .fold(0.0, f64::max);
        assert!((sup - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_case_up_equals_down() {
        let g = square(1.0 / 16.0);
        let spec = OperatorSpec::new(OperatorKind::PucciPlus, 0.0, 1.5, 1.5).unwrap();
        let up = eigen_up(&spec, &g, &EigenConfig::default()).unwrap();
        let down = eigen_down(&spec, &g, &EigenConfig::default()).unwrap();
        assert!((up.lambda - down.lambda).abs() < 1e-7 * up.lambda);
        assert!(g
            .interior()
            .iter()
            .all(|&k| down.eigenfunction.get(k) < 0.0));
        assert!(down.residual_norm < 1e-6);
    }

    #[test]
    fn pucci_up_is_below_down() {
        let g = square(1.0 / 16.0);
        let spec = OperatorSpec::new(OperatorKind::PucciPlus, 0.0, 1.0, 2.0).unwrap();
        let up = eigen_up(&spec, &g, &EigenConfig::default()).unwrap();
        let down = eigen_down(&spec, &g, &EigenConfig::default()).unwrap();
        // M⁺ ≥ a·Tr pointwise, so every positive supersolution of M⁺ is one of
        // a·Δ: λ̄(M⁺) ≤ a·λ(Δ). Dually M⁻ ≤ A·Tr gives λ̲(M⁺) = λ̄(M⁻) ≥ A·λ(Δ).
        let lap = discrete_square_lambda(1.0 / 16.0);
        assert!(up.lambda <= lap * (1.0 + 1e-7), "{}", up.lambda);
        assert!(down.lambda >= 2.0 * lap * (1.0 - 1e-7), "{}", down.lambda);
    }

    #[test]
    fn eigenfunction_ray_invariance() {
        let g = square(1.0 / 16.0);
        for alpha in [-0.5, 1.0] {
            let spec = OperatorSpec::new(OperatorKind::PucciMinus, alpha, 1.0, 2.0).unwrap();
            let r = eigen_up(&spec, &g, &EigenConfig::default()).unwrap();
            let zero = ScalarField::zeros(g.clone());
            let t: f64 = 4.0;
            let base = residual(
                &spec,
                &EvalContext::new(g.h(), r.lambda),
                &r.eigenfunction,
                &zero,
            );
            let scaled = residual(
                &spec,
                &EvalContext::new(g.h() * t, r.lambda),
                &r.eigenfunction.scaled(t),
                &zero,
            );
            for &k in g.interior() {
                let expect = t.powf(1.0 + alpha) * base.get(k);
                assert!((scaled.get(k) - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn domain_monotonicity() {
        let small = Arc::new(build_grid(&Domain::disc([0.5, 0.5], 0.4), 1.0 / 16.0).unwrap());
        let big = square(1.0 / 16.0);
        let spec = OperatorSpec::new(OperatorKind::PucciPlus, 0.0, 1.0, 2.0).unwrap();
        let l_small = eigen_up(&spec, &small, &EigenConfig::default())
            .unwrap()
            .lambda;
        let l_big = eigen_up(&spec, &big, &EigenConfig::default())
            .unwrap()
            .lambda;
        assert!(l_small >= l_big);
    }

    #[test]
    fn bisection_on_square() {
        let h = 1.0 / 16.0;
        let g = square(h);
        let lap = OperatorSpec::laplacian(0.0);
        let r = eigen_bisect(&lap, &g, &BisectConfig::default(), [10.0, 30.0]).unwrap();
        let exact = discrete_square_lambda(h);
        assert!(
            (r.lambda - exact).abs() <= 2e-3 * exact,
            "{} vs {exact}",
            r.lambda
        );
        assert!(matches!(
            eigen_bisect(&lap, &g, &BisectConfig::default(), [0.0, 1.0]),
            Err(EigenError::BracketInvalid {
                verdict: Verdict::Below,
                ..
            })
        ));
    }

    #[test]
    fn classify_shift_sides() {
        let g = square(1.0 / 16.0);
        let lap = OperatorSpec::laplacian(0.0);
        let cfg = BisectConfig::default();
        assert_eq!(
            classify_shift(&lap, &g, &cfg, 15.0).unwrap().0,
            Verdict::Below
        );
        assert_eq!(
            classify_shift(&lap, &g, &cfg, 25.0).unwrap().0,
            Verdict::Above
        );
    }

    #[test]
    fn short_exhaustion_is_monotone() {
        let lap = OperatorSpec::laplacian(0.0);
        let r = eigen_exhaust(
            &lap,
            1.0,
            &[2.0, 4.0, 8.0],
            1.0 / 16.0,
            &EigenConfig::default(),
            1e-3,
        )
        .unwrap();
        assert!(r.strictly_monotone);
        // Separable truncation error: λ(L) = λ∞ + π²/L² up to discretization.
        assert!((r.lambda_inf - std::f64::consts::PI.powi(2)).abs() < 0.02 * r.lambda_inf);
        assert!(
            eigen_exhaust(&lap, 1.0, &[4.0, 2.0], 0.125, &EigenConfig::default(), 1e-3).is_err()
        );
    }

    #[test]
    fn linear_fit_recovers_line() {
        let (a, b) = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
        assert_eq!(doubling_schedule(4.0, 3), vec![4.0, 8.0, 16.0]);
    }

    #[test]
    fn solve_below_examples() {
        let g = square(1.0 / 16.0);
        let lap = OperatorSpec::laplacian(0.0);
        let f = sample_field(&g, |x, y| {
            if (x - 0.5).abs() <= 0.25 && (y - 0.5).abs() <= 0.25 {
                -1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let cfg = SolveConfig {
            tol_res: 1e-11,
            tol_step: 1e-13,
            ..SolveConfig::relaxation()
        };
        let v = solve_below(&lap, &g, &cfg, 0.0, &f).unwrap();
        assert!(g.interior().iter().all(|&k| v.field.get(k) > 0.0));
        let v2 = solve_below(&lap, &g, &cfg, 0.0, &f.scaled(2.0)).unwrap();
        for &k in g.interior() {
            assert!((v2.field.get(k) - 2.0 * v.field.get(k)).abs() < 3e-10);
        }
        // Closer to the threshold the solution grows.
        let near = solve_below(&lap, &g, &cfg, 18.0, &f).unwrap();
        assert!(near.field.sup_abs() > v.field.sup_abs());
        assert!(matches!(
            solve_below(&lap, &g, &cfg, 0.0, &f.scaled(-1.0)),
            Err(EigenError::InvalidInput(_))
        ));
        assert!(matches!(
            solve_below(&lap, &g, &cfg, 40.0, &f),
            Err(EigenError::Diverged)
        ));
    }
}
