//! Empirical Harnack constants, oscillation decay and Liouville trends measured
//! on computed solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{
    build_grid, sample_field, sup_inf_count, Domain, Grid, GridError, NodeClass, ScalarField,
};
use crate::operator::OperatorSpec;
use crate::solver::{solve_dirichlet, SolveConfig, SolveError, SolveStatus};

#[derive(Debug, Error)]
pub enum HarnackError {
    #[error("field is not positive on the inner set (inf = {inf})")]
    NonPositive { inf: f64 },
    #[error("ball of radius {radius} holds only {count} nodes")]
    InsufficientNodes { radius: f64, count: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Discrete sup, inf and ratio of a positive field over an inner set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub sup: f64,
    pub inf: f64,
    /// `sup/inf`, or `+∞` when `inf ≤ 0`.
    pub ratio: f64,
    /// `sup/(inf + |f|∞^{1/(1+α)})`; equals `ratio` when `f = 0`.
    pub k_rhs: f64,
    pub nodes: usize,
}

fn ratio_of(sup: f64, inf: f64) -> f64 {
    if inf > 0.0 {
        sup / inf
    } else {
        f64::INFINITY
    }
}

/// Exact discrete sup/inf over the nodes of `field` lying in the closed `inner` set.
pub fn harnack_ratio(field: &ScalarField, inner: &Domain) -> Result<HarnackReport, HarnackError> {
    let (sup, inf, nodes) = sup_inf_count(field, inner);
    if nodes == 0 {
        return Err(GridError::EmptyMask.into());
    }
    if !(inf > 0.0) {
        return Err(HarnackError::NonPositive { inf });
    }
    let ratio = ratio_of(sup, inf);
    Ok(HarnackReport {
        sup,
        inf,
        ratio,
        k_rhs: ratio,
        nodes,
    })
}

/// Nonnegative trigonometric boundary data
/// `g(θ) = c₀ + Σₙ aₙ cos nθ + bₙ sin nθ` with `c₀ = Σ(|aₙ| + |bₙ|)`,
/// where `θ` is the polar angle about `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigData {
    pub center: [f64; 2],
    pub c0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigData {
    /// Random coefficients `aₙ, bₙ ∈ [−1/n, 1/n]`, `n = 1..=modes`.
    pub fn random(center: [f64; 2], modes: usize, rng: &mut impl Rng) -> Self {
        let mut cos = Vec::with_capacity(modes);
        let mut sin = Vec::with_capacity(modes);
        for n in 1..=modes {
            let s = 1.0 / n as f64;
            cos.push(rng.gen_range(-s..=s));
            sin.push(rng.gen_range(-s..=s));
        }
        let c0 = cos
            .iter()
            .chain(&sin)
            .map(|c| c.abs())
            .sum::<f64>()
            .max(1e-3);
        TrigData {
            center,
            c0,
            cos,
            sin,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let th = (y - self.center[1]).atan2(x - self.center[0]);
        let mut g = self.c0;
        for (n, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let k = (n + 1) as f64;
            g += a * (k * th).cos() + b * (k * th).sin();
        }
        g
    }
}

/// Settings shared by the Harnack measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnackConfig {
    pub h: f64,
    pub modes: usize,
    pub seed: u64,
    pub solve: SolveConfig,
}

impl Default for HarnackConfig {
    fn default() -> Self {
        HarnackConfig {
            h: 1.0 / 32.0,
            modes: 4,
            seed: 0,
            solve: SolveConfig::relaxation(),
        }
    }
}

/// Per-trial generator: one ChaCha stream per trial index, so trials can run
/// in any order and a subset can be replayed.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Configuration for the problem whose solution is `t·u`: the regularization
/// scales like the gradient and the residual tolerance like `t^{1+α}`.
pub fn scaled_config(cfg: &SolveConfig, grid: &Grid, alpha: f64, t: f64) -> SolveConfig {
    SolveConfig {
        epsilon: Some(cfg.epsilon_for(grid) * t),
        tol_res: cfg.tol_res * t.powf(1.0 + alpha),
        tol_step: cfg.tol_step * t,
        ..*cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub status: SolveStatus,
    pub sup: f64,
    pub inf: f64,
    /// `sup/inf` for [`measure_k`], `sup/(inf + |f|∞^{1/(1+α)})` for [`measure_k_rhs`].
    pub value: f64,
    pub f_inf: f64,
    /// Largest relative change of `value` over the rescaled re-solves.
    pub scale_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KReport {
    pub trials: usize,
    pub seed: u64,
    /// Running max over all successful trials.
    pub k_emp: f64,
    /// Running max over the first half of the trials.
    pub k_half: f64,
    /// `|k_emp − k_half| ≤ 0.1·k_emp`.
    pub stable: bool,
    pub failures: usize,
    pub max_scale_defect: f64,
    pub records: Vec<TrialRecord>,
}

fn summarize(records: Vec<TrialRecord>, seed: u64) -> KReport {
    let trials = records.len();
    let ok = |r: &&TrialRecord| r.status == SolveStatus::Converged;
    let k_emp = records
        .iter()
        .filter(ok)
        .map(|r| r.value)
        .fold(0.0, f64::max);
    let k_half = records[..trials / 2]
        .iter()
        .filter(ok)
        .map(|r| r.value)
        .fold(0.0, f64::max);
    let failures = records
        .iter()
        .filter(|r| r.status != SolveStatus::Converged)
        .count();
    let max_scale_defect = records
        .iter()
        .filter(ok)
        .map(|r| r.scale_defect)
        .fold(0.0, f64::max);
    KReport {
        trials,
        seed,
        k_emp,
        k_half,
        stable: k_emp.is_finite() && (k_emp - k_half).abs() <= 0.1 * k_emp,
        failures,
        max_scale_defect,
        records,
    }
}

fn check_inner(outer: &Domain, inner: &Domain, grid: &Grid) -> Result<(), HarnackError> {
    let bb = inner.bbox();
    let ob = outer.bbox();
    if bb.min[0] < ob.min[0]
        || bb.min[1] < ob.min[1]
        || bb.max[0] > ob.max[0]
        || bb.max[1] > ob.max[1]
    {
        return Err(HarnackError::InvalidInput(
            "inner set leaves the outer domain".into(),
        ));
    }
    for k in 0..grid.len() {
        if grid.class(k) == NodeClass::Boundary && inner.contains_closed(grid.position(k)) {
            return Err(HarnackError::InvalidInput(
                "inner set touches the boundary layer".into(),
            ));
        }
    }
    Ok(())
}

/// One Dirichlet solve plus its rescaled copies; returns the trial record.
#[allow(clippy::too_many_arguments)]
fn run_trial(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    inner: &Domain,
    f: &ScalarField,
    g: &ScalarField,
    cfg: &SolveConfig,
    trial: usize,
    scales: &[f64],
) -> Result<TrialRecord, HarnackError> {
    let alpha = spec.alpha;
    let f_inf = f.sup_abs();
    let f_term = f_inf.powf(1.0 / (1.0 + alpha));
    let measure = |u: &ScalarField, f_term: f64| {
        let (sup, inf, _) = sup_inf_count(u, inner);
        (
            sup,
            inf,
            if inf > 0.0 {
                sup / (inf + f_term)
            } else {
                f64::INFINITY
            },
        )
    };
    let out = solve_dirichlet(spec, grid, f, g, 0.0, cfg)?;
    let (sup, inf, value) = measure(&out.field, f_term);
    let mut rec = TrialRecord {
        trial,
        status: out.status,
        sup,
        inf,
        value,
        f_inf,
        scale_defect: 0.0,
    };
    if out.status != SolveStatus::Converged {
        return Ok(rec);
    }
    for &t in scales {
        let ft = f.scaled(t.powf(1.0 + alpha));
        let gt = g.scaled(t);
        let st = solve_dirichlet(
            spec,
            grid,
            &ft,
            &gt,
            0.0,
            &scaled_config(cfg, grid, alpha, t),
        )?;
        if st.status != SolveStatus::Converged {
            rec.status = st.status;
            return Ok(rec);
        }
        let (_, _, vt) = measure(&st.field, ft.sup_abs().powf(1.0 / (1.0 + alpha)));
        rec.scale_defect = rec.scale_defect.max((vt - value).abs() / value);
    }
    Ok(rec)
}

/// Empirical Harnack constant for `F[u] + h·∇u|∇u|^α + V|u|^α u = 0`.
///
/// Each trial draws nonnegative trigonometric boundary data, solves, and records
/// `sup/inf` over `inner`. Every trial is also re-solved with data scaled by
/// each `t` in `scales` to measure the homogeneity defect.
pub fn measure_k(
    spec: &OperatorSpec,
    outer: &Domain,
    inner: &Domain,
    trials: usize,
    scales: &[f64],
    cfg: &HarnackConfig,
) -> Result<KReport, HarnackError> {
    measure(spec, outer, inner, trials, scales, cfg, None)
}

/// Right-hand-side version: each trial also draws `f ≤ 0` with
/// `|f|∞ ≤ f_max` and records `sup/(inf + |f|∞^{1/(1+α)})`.
pub fn measure_k_rhs(
    spec: &OperatorSpec,
    outer: &Domain,
    inner: &Domain,
    trials: usize,
    f_max: f64,
    scales: &[f64],
    cfg: &HarnackConfig,
) -> Result<KReport, HarnackError> {
    if !(f_max >= 0.0) {
        return Err(HarnackError::InvalidInput(format!("f_max = {f_max}")));
    }
    measure(spec, outer, inner, trials, scales, cfg, Some(f_max))
}

fn measure(
    spec: &OperatorSpec,
    outer: &Domain,
    inner: &Domain,
    trials: usize,
    scales: &[f64],
    cfg: &HarnackConfig,
    f_max: Option<f64>,
) -> Result<KReport, HarnackError> {
    if trials < 2 {
        return Err(HarnackError::InvalidInput(
            "need at least two trials".into(),
        ));
    }
    if scales.iter().any(|&t| !(t > 0.0)) {
        return Err(HarnackError::InvalidInput("scales must be positive".into()));
    }
    let grid = Arc::new(build_grid(outer, cfg.h)?);
    check_inner(outer, inner, &grid)?;
    if grid.interior().iter().any(|&k| {
        let [x, y] = grid.position(k);
        spec.potential.eval(x, y) > 0.0
    }) {
        return Err(HarnackError::InvalidInput(
            "the potential must be nonpositive".into(),
        ));
    }
    let bb = outer.bbox();
    let center = [(bb.min[0] + bb.max[0]) / 2.0, (bb.min[1] + bb.max[1]) / 2.0];
    let records = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            let data = TrigData::random(center, cfg.modes, &mut rng);
            let g = sample_field(&grid, |x, y| data.eval(x, y))?;
            let f = match f_max {
                None => ScalarField::zeros(grid.clone()),
                Some(fm) => {
                    let amp = fm * rng.gen::<f64>();
                    let (kx, ky, ph): (f64, f64, f64) = (
                        rng.gen_range(-PI..PI),
                        rng.gen_range(-PI..PI),
                        rng.gen_range(0.0..2.0 * PI),
                    );
                    sample_field(&grid, |x, y| {
                        -amp * (0.75 + 0.25 * (kx * x + ky * y + ph).sin())
                    })?
                }
            };
            run_trial(spec, &grid, inner, &f, &g, &cfg.solve, trial, scales)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(records, cfg.seed))
}

/// Oscillations over shrinking balls and the fitted Hölder exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationTrace {
    pub radii: Vec<f64>,
    pub oscillations: Vec<f64>,
    pub counts: Vec<usize>,
    /// Least-squares slope of `log osc` against `log R`.
    pub slope: f64,
    pub r_squared: f64,
    /// The slope, claimed only when `r_squared ≥ 0.9`.
    pub beta: Option<f64>,
}

/// Measures `osc(R) = sup − inf` over `B(center, R)` for `R = R₀·4^{−j}`.
///
/// The caller is responsible for `B(center, 4R₀)` lying inside the field's domain.
pub fn oscillation_decay(
    field: &ScalarField,
    center: [f64; 2],
    r0: f64,
    levels: usize,
) -> Result<OscillationTrace, HarnackError> {
    if levels < 2 || !(r0 > 0.0) {
        return Err(HarnackError::InvalidInput(format!(
            "r0 {r0}, levels {levels}"
        )));
    }
    let mut radii = Vec::with_capacity(levels);
    let mut oscillations = Vec::with_capacity(levels);
    let mut counts = Vec::with_capacity(levels);
    for j in 0..levels {
        let r = r0 * 0.25f64.powi(j as i32);
        let (sup, inf, count) = sup_inf_count(field, &Domain::disc(center, r));
        if count < 4 {
            return Err(HarnackError::InsufficientNodes { radius: r, count });
        }
        radii.push(r);
        oscillations.push(sup - inf);
        counts.push(count);
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = oscillations
        .iter()
        .map(|o| o.max(f64::MIN_POSITIVE).ln())
        .collect();
    let (slope, r_squared) = linear_fit(&xs, &ys);
    Ok(OscillationTrace {
        radii,
        oscillations,
        counts,
        slope,
        r_squared,
        beta: (r_squared >= 0.9).then_some(slope),
    })
}

/// Least-squares slope and coefficient of determination.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, r2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleEntry {
    pub box_size: f64,
    pub status: SolveStatus,
    pub sup: f64,
    pub inf: f64,
    pub oscillation: f64,
    /// Harmonic-function bound `4ρ(M−m)/(ρ²−1)` with `ρ = L/2`, where `m, M`
    /// bound the boundary data. Only a theorem for the Laplacian.
    pub harmonic_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleReport {
    pub entries: Vec<LiouvilleEntry>,
    /// Oscillations are non-increasing in `L` up to `tol`.
    pub non_increasing: bool,
    pub tol: f64,
}

/// Solves `F[u] = 0` on boxes `[−L/2, L/2]²` with the fixed boundary pattern
/// `data` and records the oscillation over the unit ball at the origin.
pub fn liouville_probe(
    spec: &OperatorSpec,
    box_sizes: &[f64],
    data: &(dyn Fn(f64, f64) -> f64 + Sync),
    h: f64,
    cfg: &SolveConfig,
) -> Result<LiouvilleReport, HarnackError> {
    if !spec.drift.is_zero() || !spec.potential.is_zero() {
        return Err(HarnackError::InvalidInput(
            "the probe requires h = V = 0".into(),
        ));
    }
    if box_sizes.iter().any(|&l| !(l > 2.0)) {
        return Err(HarnackError::InvalidInput(
            "boxes must contain the unit ball".into(),
        ));
    }
    let ball = Domain::disc([0.0, 0.0], 1.0);
    let entries = box_sizes
        .par_iter()
        .map(|&l| {
            let grid = Arc::new(build_grid(
                &Domain::rectangle([-l / 2.0, l / 2.0], [-l / 2.0, l / 2.0]),
                h,
            )?);
            let g = sample_field(&grid, data)?;
            let (mut gmax, mut gmin) = (f64::NEG_INFINITY, f64::INFINITY);
            for &k in grid.boundary() {
                gmax = gmax.max(g.get(k));
                gmin = gmin.min(g.get(k));
            }
            let f = ScalarField::zeros(grid.clone());
            let out = solve_dirichlet(spec, &grid, &f, &g, 0.0, cfg)?;
            let (sup, inf, _) = sup_inf_count(&out.field, &ball);
            let rho = l / 2.0;
            Ok(LiouvilleEntry {
                box_size: l,
                status: out.status,
                sup,
                inf,
                oscillation: sup - inf,
                harmonic_bound: 4.0 * rho * (gmax - gmin) / (rho * rho - 1.0),
            })
        })
        .collect::<Result<Vec<_>, HarnackError>>()?;
    let tol = 10.0 * cfg.tol_step.max(cfg.tol_res * h * h);
    let non_increasing = entries
        .windows(2)
        .all(|w| w[1].oscillation <= w[0].oscillation + tol);
    Ok(LiouvilleReport {
        entries,
        non_increasing,
        tol,
    })
}
