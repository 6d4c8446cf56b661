//! Explicit barrier functions and pointwise checks of their differential inequalities.
//!
//! * The exponential ellipse barrier
//!   `v = (e^{−γσ²} − e^{−γ}) / (e^{−γ/4} − e^{−γ})` on an ellipse segment,
//!   with `σ²(x) = ⟨B(x−x₀), x−x₀⟩`, `B = diag(1/b², 1/c²)`.
//! * The strip supersolution `u(x) = sin^γ(x₁π/(4M) + π/8)`.
//! * The power barrier `w = C₁ρ̃^q`, `q = (α+2)/(α+1)`, `ρ̃ = |x − anchor|`, and
//!   the sector geometry that lets it be combined with ellipse barriers.
//!
//! Checks evaluate the analytic derivatives at quasi-random points and take
//! the worst case over the Pucci class: `M⁻` where a subsolution is needed and
//! `M⁺` where a supersolution is needed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cut, Domain};
use crate::operator::{pucci, Sign, Sym2};
use crate::sampling::halton_2d;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error("point ({0}, {1}) lies outside the closed ellipse")]
    OutsideDomain(f64, f64),
    #[error("invalid barrier parameters: {0}")]
    InvalidSpec(String),
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Exponential barrier on an ellipse segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub center: [f64; 2],
    pub b: f64,
    pub c: f64,
    pub gamma: f64,
    pub cut: Cut,
}

impl BarrierSpec {
    pub fn validate(&self) -> Result<(), BarrierError> {
        if !(self.b > 0.0 && self.c > 0.0 && self.gamma > 0.0) {
            return Err(BarrierError::InvalidSpec(format!("{self:?}")));
        }
        Ok(())
    }

    /// Unit disc segment `x₁ > 1/2`.
    pub fn unit(gamma: f64) -> Self {
        BarrierSpec {
            center: [0.0, 0.0],
            b: 1.0,
            c: 1.0,
            gamma,
            cut: Cut::RIGHT,
        }
    }

    /// `E₁`: center `(−5/2, √3/4)`, semi-axes 3 and 1/2, kept part `x₁ ≥ −1`.
    pub fn e1(gamma: f64) -> Self {
        BarrierSpec {
            center: [-2.5, SQRT3 / 4.0],
            b: 3.0,
            c: 0.5,
            gamma,
            cut: Cut::RIGHT,
        }
    }

    /// `E₂`: mirror image of `E₁` in the x₂ axis.
    pub fn e2(gamma: f64) -> Self {
        BarrierSpec {
            center: [2.5, SQRT3 / 4.0],
            cut: Cut::LEFT,
            ..BarrierSpec::e1(gamma)
        }
    }

    /// `E₃`: center `(0, 1+√3/2)`, semi-axes 1/2 and `2+√3/2`, lower part.
    pub fn e3(gamma: f64) -> Self {
        BarrierSpec {
            center: [0.0, 1.0 + SQRT3 / 2.0],
            b: 0.5,
            c: 2.0 + SQRT3 / 2.0,
            gamma,
            cut: Cut::BELOW,
        }
    }

    /// Same geometry with the cut on the opposite side.
    pub fn mirrored(&self) -> Self {
        BarrierSpec {
            cut: Cut {
                axis: self.cut.axis,
                side: -self.cut.side,
            },
            ..*self
        }
    }

    pub fn scaled(&self, rho0: f64) -> Self {
        BarrierSpec {
            center: [self.center[0] * rho0, self.center[1] * rho0],
            b: self.b * rho0,
            c: self.c * rho0,
            ..*self
        }
    }

    pub fn domain(&self) -> Domain {
        Domain::ellipse_segment(self.center, self.b, self.c, self.cut)
    }

    fn semi(&self) -> [f64; 2] {
        [self.b, self.c]
    }

    /// Quasi-random offsets `x − x₀` filling the cut region `1/4 < σ² ≤ 1`.
    ///
    /// Points are drawn in normalized coordinates: the coordinate along the cut
    /// axis runs over `(1/2, 1)` and the other fills the chord. Mirrored specs
    /// get exactly mirrored offsets.
    fn sample_offsets(&self, n: usize, seed: u64) -> Vec<[f64; 2]> {
        let k = self.cut.axis;
        let s = f64::from(self.cut.side);
        let semi = self.semi();
        halton_2d(n, seed)
            .into_iter()
            .map(|[u1, u2]| {
                let t = 0.5 + 0.5 * u1;
                let w = (2.0 * u2 - 1.0) * (1.0 - t * t).sqrt();
                let mut d = [0.0; 2];
                d[k] = s * t * semi[k];
                d[1 - k] = w * semi[1 - k];
                d
            })
            .collect()
    }
}

/// Ellipticity bounds and lower-order sizes of an operator class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub alpha: f64,
    pub a: f64,
    pub big_a: f64,
    pub h_inf: f64,
    pub v_inf: f64,
}

impl ClassParams {
    pub fn new(alpha: f64, a: f64, big_a: f64) -> Self {
        ClassParams {
            alpha,
            a,
            big_a,
            h_inf: 0.0,
            v_inf: 0.0,
        }
    }
}

/// Exponent γ making the ellipse barrier a strict subsolution for the whole class.
///
/// Returns the largest of `4(A+a)/a·(1+b²/c²)`, `4|h|∞Mb²/(ma)` and
/// `(4|V|∞b²/(am))^{1/(2+α)}`, with `m = min(b^{−α}, 2^α(1/b²+1/c²)^{α/2})`
/// and `M = 2^{1+α}(1/b²+1/c²)^{(1+α)/2}`.
pub fn gamma_constant(
    a: f64,
    big_a: f64,
    alpha: f64,
    b: f64,
    c: f64,
    h_inf: f64,
    v_inf: f64,
) -> f64 {
    let s = 1.0 / (b * b) + 1.0 / (c * c);
    let m = b.powf(-alpha).min(2f64.powf(alpha) * s.powf(alpha / 2.0));
    let big_m = 2f64.powf(1.0 + alpha) * s.powf((1.0 + alpha) / 2.0);
    let t1 = 4.0 * (big_a + a) / a * (1.0 + b * b / (c * c));
    let t2 = 4.0 * h_inf * big_m * b * b / (m * a);
    let t3 = (4.0 * v_inf * b * b / (a * m)).powf(1.0 / (2.0 + alpha));
    t1.max(t2).max(t3)
}

/// Value, gradient and Hessian at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierValue {
    pub v: f64,
    pub grad: [f64; 2],
    pub hess: Sym2,
}

/// Pieces of the ellipse barrier at offset `d = x − x₀`, written as
/// `v = ṽ·r`, `∇v = ṽ·g`, `D²v = ṽ·H` so the common factor
/// `ṽ = e^{−γσ²}/(e^{−γ/4} − e^{−γ})` can be kept apart.
struct Factored {
    sigma2: f64,
    v_tilde: f64,
    ratio: f64,
    g: [f64; 2],
    big_h: Sym2,
}

fn factored(spec: &BarrierSpec, d: [f64; 2]) -> Factored {
    let gam = spec.gamma;
    let bd = [d[0] / (spec.b * spec.b), d[1] / (spec.c * spec.c)];
    let sigma2 = d[0] * bd[0] + d[1] * bd[1];
    let denom = -(-0.75 * gam).exp_m1();
    let v_tilde = (-gam * (sigma2 - 0.25)).exp() / denom;
    // v/ṽ = 1 − e^{−γ(1−σ²)}
    let ratio = -(-gam * (1.0 - sigma2)).exp_m1();
    let g = [-2.0 * gam * bd[0], -2.0 * gam * bd[1]];
    let big_h = Sym2::new(
        2.0 * gam * (2.0 * gam * bd[0] * bd[0] - 1.0 / (spec.b * spec.b)),
        2.0 * gam * 2.0 * gam * bd[0] * bd[1],
        2.0 * gam * (2.0 * gam * bd[1] * bd[1] - 1.0 / (spec.c * spec.c)),
    );
    Factored {
        sigma2,
        v_tilde,
        ratio,
        g,
        big_h,
    }
}

/// Analytic value, gradient and Hessian of the ellipse barrier.
pub fn barrier_eval(spec: &BarrierSpec, x: [f64; 2]) -> Result<BarrierValue, BarrierError> {
    let d = [x[0] - spec.center[0], x[1] - spec.center[1]];
    let f = factored(spec, d);
    if f.sigma2 > 1.0 + 1e-12 {
        return Err(BarrierError::OutsideDomain(x[0], x[1]));
    }
    Ok(BarrierValue {
        v: f.v_tilde * f.ratio,
        grad: [f.v_tilde * f.g[0], f.v_tilde * f.g[1]],
        hess: f.big_h.scale(f.v_tilde),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub gamma: f64,
    pub samples: usize,
    pub seed: u64,
    /// Minimum over samples of
    /// `|∇v|^α(a·Tr(D²v)⁺ − A·Tr(D²v)⁻) − |h|∞|∇v|^{1+α} − |V|∞v^{1+α}`.
    pub min_residual: f64,
    /// The same minimum with the positive factor `ṽ^{1+α}` divided out; it
    /// carries the sign without underflowing near `σ = 1` for large γ.
    pub margin: f64,
    pub worst_offset: [f64; 2],
    pub pass: bool,
}

/// Samples the strict-subsolution inequality of the ellipse barrier over the cut region.
pub fn verify_lemma1(
    params: &ClassParams,
    spec: &BarrierSpec,
    n_samples: usize,
    seed: u64,
) -> Lemma1Report {
    let alpha = params.alpha;
    let evals: Vec<(f64, f64, [f64; 2])> = spec
        .sample_offsets(n_samples, seed)
        .into_par_iter()
        .map(|d| {
            let f = factored(spec, d);
            let gn = f.g[0].hypot(f.g[1]);
            let scaled = gn.powf(alpha) * pucci(&f.big_h, params.a, params.big_a, Sign::Minus)
                - params.h_inf * gn.powf(1.0 + alpha)
                - params.v_inf * f.ratio.powf(1.0 + alpha);
            (f.v_tilde.powf(1.0 + alpha) * scaled, scaled, d)
        })
        .collect();
    let mut min_residual = f64::INFINITY;
    let mut margin = f64::INFINITY;
    let mut worst_offset = [0.0; 2];
    for (r, s, d) in evals {
        min_residual = min_residual.min(r);
        if s < margin {
            margin = s;
            worst_offset = d;
        }
    }
    Lemma1Report {
        gamma: spec.gamma,
        samples: n_samples,
        seed,
        min_residual,
        margin,
        worst_offset,
        pass: margin > 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripReport {
    /// Largest `C` with `F[u] + C/M^{2+α}·u^{1+α} ≤ 0` at every sample.
    pub c: f64,
    /// `x₁/M` at which the minimum is attained.
    pub worst_t: f64,
    pub pass: bool,
}

/// Value and first two derivatives of `sin^γ(x₁π/(4M) + π/8)` in `x₁`.
pub fn strip_profile(x1: f64, m_width: f64, gamma_exp: f64) -> (f64, f64, f64) {
    let k = std::f64::consts::PI / (4.0 * m_width);
    let th = k * x1 + std::f64::consts::PI / 8.0;
    let (s, c) = th.sin_cos();
    let u = s.powf(gamma_exp);
    let du = gamma_exp * s.powf(gamma_exp - 1.0) * c * k;
    let d2u = gamma_exp * k * k * s.powf(gamma_exp - 2.0) * (gamma_exp - 1.0 - gamma_exp * s * s);
    (u, du, d2u)
}

/// Largest constant `C` for which the strip profile is a supersolution of
/// `F[u] + C/M^{2+α} u^{1+α} ≤ 0` for every `F` in the class.
///
/// The worst case is `|u′|^α M⁺(u″)`, i.e. `A` on positive and `a` on
/// negative curvature. Samples are the midpoints `x₁/M = (i + 1/2)/n`.
pub fn verify_strip_supersolution(
    alpha: f64,
    a: f64,
    big_a: f64,
    m_width: f64,
    gamma_exp: f64,
    n_samples: usize,
) -> Result<StripReport, BarrierError> {
    if !(gamma_exp > 0.0 && gamma_exp < 1.0) || !(m_width > 0.0) || n_samples == 0 {
        return Err(BarrierError::InvalidSpec(format!(
            "gamma_exp {gamma_exp}, M {m_width}"
        )));
    }
    let mut c = f64::INFINITY;
    let mut worst_t = 0.0;
    for i in 0..n_samples {
        let t = (i as f64 + 0.5) / n_samples as f64;
        let (u, du, d2u) = strip_profile(t * m_width, m_width, gamma_exp);
        let curv = if d2u > 0.0 { big_a * d2u } else { a * d2u };
        let f = du.abs().powf(alpha) * curv;
        let ci = -f * m_width.powf(2.0 + alpha) / u.powf(1.0 + alpha);
        if ci < c {
            c = ci;
            worst_t = t;
        }
    }
    Ok(StripReport {
        c,
        worst_t,
        pass: c > 0.0,
    })
}

/// `Cx = (x₁, x₂ + 3)`, the gradient direction of the power barrier at `ρ₀ = 1`.
fn c_dir(x: [f64; 2]) -> [f64; 2] {
    [x[0], x[1] + 3.0]
}

fn cosine(u: [f64; 2], v: [f64; 2]) -> f64 {
    (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    pub delta: f64,
    pub min_cos: f64,
    /// Largest `|X₂|/|X₁|` over `X = B₁x, B₂x` with `x ∈ E₁∩E₂`.
    pub max_slope_b: f64,
    pub quoted_slope_b: f64,
    /// Smallest `(Cx)₂/|(Cx)₁|` over sampled points.
    pub min_slope_c: f64,
    pub quoted_slope_c: f64,
    pub samples_e12: usize,
    pub samples_e3: usize,
    pub pass: bool,
}

/// Measures the angle between the ellipse-barrier gradients `B_ix` and the
/// power-barrier gradient `Cx` at the normalized scale `ρ₀ = 1`.
///
/// `B₁x, B₂x` are sampled on `E₁∩E₂` and `B₃x` on `E₃`; `δ = sqrt(1 + min cos)`.
/// Passes when `min cos > −1 + 10⁻³`.
pub fn verify_sectors(n_samples: usize, seed: u64) -> SectorReport {
    let e1 = BarrierSpec::e1(1.0);
    let e2 = BarrierSpec::e2(1.0);
    let e3 = BarrierSpec::e3(1.0);
    let b_of = |s: &BarrierSpec, x: [f64; 2]| {
        let d = [x[0] - s.center[0], x[1] - s.center[1]];
        [-d[0] / (s.b * s.b), -d[1] / (s.c * s.c)]
    };
    let lens = Domain::intersection(e1.domain(), e2.domain());
    let lo = [-0.5, SQRT3 / 4.0 - 0.5];
    let pts12: Vec<[f64; 2]> = halton_2d(n_samples, seed)
        .into_iter()
        .map(|[u, v]| [lo[0] + u, lo[1] + v])
        .filter(|&x| lens.contains_open(x))
        .collect();
    let pts3: Vec<[f64; 2]> = e3
        .sample_offsets(n_samples, seed ^ 0x5eed)
        .into_iter()
        .map(|d| [e3.center[0] + d[0], e3.center[1] + d[1]])
        .collect();

    let mut min_cos = f64::INFINITY;
    let mut max_slope_b = 0.0f64;
    let mut min_slope_c = f64::INFINITY;
    for &x in &pts12 {
        for s in [&e1, &e2] {
            let bx = b_of(s, x);
            min_cos = min_cos.min(cosine(bx, c_dir(x)));
            max_slope_b = max_slope_b.max(bx[1].abs() / bx[0].abs());
        }
        let cx = c_dir(x);
        if cx[0] != 0.0 {
            min_slope_c = min_slope_c.min(cx[1] / cx[0].abs());
        }
    }
    for &x in &pts3 {
        min_cos = min_cos.min(cosine(b_of(&e3, x), c_dir(x)));
    }
    SectorReport {
        delta: (1.0 + min_cos).max(0.0).sqrt(),
        min_cos,
        max_slope_b,
        quoted_slope_b: 6.0 * 11f64.sqrt() / 5.0,
        min_slope_c,
        quoted_slope_c: (SQRT3 + 12.0) / 2.0,
        samples_e12: pts12.len(),
        samples_e3: pts3.len(),
        pass: min_cos > -1.0 + 1e-3,
    }
}

/// `q = (α+2)/(α+1)`.
pub fn power_q(alpha: f64) -> f64 {
    (alpha + 2.0) / (alpha + 1.0)
}

/// `C₁ = (|f|∞ 2^{|α−2|/2+1} / (δ^α a q^{2+α}))^{1/(1+α)}`.
pub fn power_c1(alpha: f64, a: f64, delta: f64, f_inf: f64) -> f64 {
    let q = power_q(alpha);
    (f_inf * 2f64.powf((alpha - 2.0).abs() / 2.0 + 1.0)
        / (delta.powf(alpha) * a * q.powf(2.0 + alpha)))
    .powf(1.0 / (1.0 + alpha))
}

/// Power barrier `w = C₁|x − anchor|^q` on the `ρ₀`-scaled `E₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBarrierSpec {
    pub c1: f64,
    pub q: f64,
    pub anchor: [f64; 2],
    pub rho0: f64,
}

impl PowerBarrierSpec {
    pub fn new(alpha: f64, a: f64, delta: f64, f_inf: f64, rho0: f64) -> Self {
        PowerBarrierSpec {
            c1: power_c1(alpha, a, delta, f_inf),
            q: power_q(alpha),
            anchor: [0.0, -3.0 * rho0],
            rho0,
        }
    }

    /// Upper bound on `ρ̃` over the scaled `E₃`, from its bounding box.
    pub fn rho_max(&self) -> f64 {
        let bb = BarrierSpec::e3(1.0).scaled(self.rho0).domain().bbox();
        let dx = bb.max[0].abs().max(bb.min[0].abs()) - self.anchor[0];
        let dy = (bb.max[1] - self.anchor[1])
            .abs()
            .max((bb.min[1] - self.anchor[1]).abs());
        dx.hypot(dy)
    }

    pub fn eval(&self, x: [f64; 2]) -> BarrierValue {
        let d = [x[0] - self.anchor[0], x[1] - self.anchor[1]];
        let r = d[0].hypot(d[1]);
        let q = self.q;
        let s = self.c1 * q * r.powf(q - 2.0);
        let (ux, uy) = (d[0] / r, d[1] / r);
        BarrierValue {
            v: self.c1 * r.powf(q),
            grad: [s * d[0], s * d[1]],
            hess: Sym2::new(
                s * (1.0 + (q - 2.0) * ux * ux),
                s * (q - 2.0) * ux * uy,
                s * (1.0 + (q - 2.0) * uy * uy),
            ),
        }
    }
}

/// Largest `|h|∞` for which the power-barrier inequality holds on the scaled `E₃`.
///
/// With `C₁` as in [`power_c1`] the principal term equals `2|f|∞` identically,
/// so the drift term may use up `|f|∞`: `|h|∞ 2^{α+|α−2|/2+1} ρ̃ ≤ δ^α a q`.
pub fn max_power_drift(alpha: f64, a: f64, delta: f64, rho0: f64) -> f64 {
    let spec = PowerBarrierSpec::new(alpha, a, delta, 1.0, rho0);
    delta.powf(alpha) * a * spec.q
        / (2f64.powf(alpha + (alpha - 2.0).abs() / 2.0 + 1.0) * spec.rho_max())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub c1: f64,
    pub q: f64,
    pub rho0: f64,
    /// Minimum over samples of `LHS − |f|∞` with `|f|∞ = 1`.
    pub min_margin: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Samples `δ^α 2^{−|α−2|/2} |∇w|^α M⁻(D²w) − |h|∞ 2^α |∇w|^{1+α} ≥ 1` on the
/// `ρ₀`-scaled `E₃` using the analytic derivatives of `w`.
pub fn verify_lem1_power(
    alpha: f64,
    a: f64,
    h_inf: f64,
    delta: f64,
    rho0: f64,
    n_samples: usize,
    seed: u64,
) -> PowerReport {
    let spec = PowerBarrierSpec::new(alpha, a, delta, 1.0, rho0);
    let e3 = BarrierSpec::e3(1.0).scaled(rho0);
    // The principal part is tested against M⁻ with A = a: M⁻ only sees `a`
    // here because both Hessian eigenvalues of w are positive.
    let lead = delta.powf(alpha) * 2f64.powf(-(alpha - 2.0).abs() / 2.0);
    let min_margin = e3
        .sample_offsets(n_samples, seed)
        .into_par_iter()
        .map(|d| {
            let x = [e3.center[0] + d[0], e3.center[1] + d[1]];
            let w = spec.eval(x);
            let gn = w.grad[0].hypot(w.grad[1]);
            lead * gn.powf(alpha) * pucci(&w.hess, a, a, Sign::Minus)
                - h_inf * 2f64.powf(alpha) * gn.powf(1.0 + alpha)
                - 1.0
        })
        .reduce(|| f64::INFINITY, f64::min);
    PowerReport {
        c1: spec.c1,
        q: spec.q,
        rho0,
        min_margin,
        samples: n_samples,
        pass: min_margin >= 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_constant(1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0), 16.0);
        assert_eq!(gamma_constant(1.0, 1.0, 0.0, 3.0, 0.5, 0.0, 0.0), 296.0);
        // Only the potential term: with α = 0, m = 1 and b = 1 it is (4 V)^{1/2},
        // which dominates once V is large.
        let g = gamma_constant(1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1e4);
        assert!((g - (4.0f64 * 1e4).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn gamma_is_monotone_in_inputs() {
        let base = gamma_constant(1.0, 2.0, 0.5, 1.0, 1.0, 1.0, 1.0);
        assert!(gamma_constant(1.0, 2.0, 0.5, 1.0, 1.0, 50.0, 1.0) >= base);
        assert!(gamma_constant(1.0, 2.0, 0.5, 1.0, 1.0, 1.0, 1e6) >= base);
        assert!(gamma_constant(1.0, 2.0, 0.5, 2.0, 1.0, 1.0, 1.0) >= base);
    }

    #[test]
    fn barrier_boundary_values() {
        let s = BarrierSpec::unit(16.0);
        assert!(barrier_eval(&s, [1.0, 0.0]).unwrap().v.abs() < 1e-15);
        let th: f64 = 0.3;
        assert!(barrier_eval(&s, [th.cos(), th.sin()]).unwrap().v.abs() < 1e-14);
        assert!((barrier_eval(&s, [0.5, 0.0]).unwrap().v - 1.0).abs() < 1e-14);
        assert!(matches!(
            barrier_eval(&s, [1.2, 0.0]),
            Err(BarrierError::OutsideDomain(..))
        ));
        let inside = barrier_eval(&s, [0.7, 0.2]).unwrap().v;
        assert!(inside > 0.0 && inside < 1.0);
    }

    #[test]
    fn barrier_derivatives_match_finite_differences() {
        let s = BarrierSpec::e1(4.0);
        let step = 1e-4;
        for d in s.sample_offsets(100, 3) {
            let x = [s.center[0] + 0.9 * d[0], s.center[1] + 0.9 * d[1]];
            let at = |dx: f64, dy: f64| barrier_eval(&s, [x[0] + dx, x[1] + dy]).unwrap();
            let c = at(0.0, 0.0);
            let gx = (at(step, 0.0).v - at(-step, 0.0).v) / (2.0 * step);
            let gy = (at(0.0, step).v - at(0.0, -step).v) / (2.0 * step);
            let scale = 1.0 + c.grad[0].abs() + c.grad[1].abs();
            assert!((gx - c.grad[0]).abs() < 1e-5 * scale && (gy - c.grad[1]).abs() < 1e-5 * scale);
            let hxx = (at(step, 0.0).grad[0] - at(-step, 0.0).grad[0]) / (2.0 * step);
            let hxy = (at(0.0, step).grad[0] - at(0.0, -step).grad[0]) / (2.0 * step);
            let hyy = (at(0.0, step).grad[1] - at(0.0, -step).grad[1]) / (2.0 * step);
            let hs = 1.0 + c.hess.xx.abs() + c.hess.xy.abs() + c.hess.yy.abs();
            assert!((hxx - c.hess.xx).abs() < 1e-5 * hs);
            assert!((hxy - c.hess.xy).abs() < 1e-5 * hs);
            assert!((hyy - c.hess.yy).abs() < 1e-5 * hs);
        }
    }

    #[test]
    fn lemma1_examples() {
        let lin = ClassParams::new(0.0, 1.0, 1.0);
        let r = verify_lemma1(&lin, &BarrierSpec::unit(16.0), 20_000, 1);
        assert!(r.pass && r.min_residual > 0.0);
        let low = verify_lemma1(&lin, &BarrierSpec::unit(0.1), 20_000, 1);
        assert!(!low.pass);
        let mirrored = verify_lemma1(&lin, &BarrierSpec::unit(16.0).mirrored(), 20_000, 1);
        assert_eq!(mirrored.min_residual, r.min_residual);
        assert_eq!(mirrored.margin, r.margin);
    }

    #[test]
    fn lemma1_margin_grows_with_gamma() {
        let p = ClassParams::new(0.5, 1.0, 2.0);
        let g = gamma_constant(1.0, 2.0, 0.5, 3.0, 0.5, 0.0, 0.0);
        let m: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|k| verify_lemma1(&p, &BarrierSpec::e1(k * g), 5000, 2).margin)
            .collect();
        assert!(m[0] > 0.0 && m[0] <= m[1] && m[1] <= m[2], "{m:?}");
    }

    #[test]
    fn strip_profile_examples() {
        let r = verify_strip_supersolution(0.0, 1.0, 1.0, 1.0, 0.5, 2000).unwrap();
        assert!(r.pass && r.c > 0.0);
        let r2 = verify_strip_supersolution(0.0, 1.0, 1.0, 2.0, 0.5, 2000).unwrap();
        assert!((r.c - r2.c).abs() <= 1e-12 * r.c);
        let pi = std::f64::consts::PI;
        for i in 0..100 {
            let x1 = (i as f64 + 0.5) / 100.0;
            let th = x1 * pi / 4.0 + pi / 8.0;
            assert!(th > pi / 8.0 && th < 3.0 * pi / 8.0);
            assert!(strip_profile(x1, 1.0, 0.5).0 > 0.0);
        }
        assert!(verify_strip_supersolution(0.0, 1.0, 1.0, 1.0, 1.0, 10).is_err());
    }

    #[test]
    fn strip_profile_derivatives() {
        let step = 1e-5;
        for &x in &[0.1, 0.5, 0.9] {
            let (_, du, d2u) = strip_profile(x, 1.5, 0.25);
            let up = strip_profile(x + step, 1.5, 0.25);
            let dn = strip_profile(x - step, 1.5, 0.25);
            assert!(((up.0 - dn.0) / (2.0 * step) - du).abs() < 1e-7);
            assert!(((up.1 - dn.1) / (2.0 * step) - d2u).abs() < 1e-7);
        }
    }

    #[test]
    fn sectors_examples() {
        let r = verify_sectors(50_000, 5);
        assert!(r.pass && r.delta > 0.0);
        assert!(r.max_slope_b <= r.quoted_slope_b * (1.0 + 1e-12));
        assert!((r.quoted_slope_b - 3.98).abs() < 0.01 && (r.quoted_slope_c - 6.866).abs() < 0.001);
    }

    /// Infimum of `(x₂+3)/|x₁|` over the lens, by a dense scan of its lower
    /// boundary (the upper boundary only gives larger ratios).
    fn lens_c_slope_by_boundary_scan() -> f64 {
        let n = 2_000_000;
        let mut best = f64::INFINITY;
        for i in 1..=n {
            let x1 = 0.5 * i as f64 / n as f64;
            let r = 1.0 - (x1 + 2.5).powi(2) / 9.0;
            if r < 0.0 {
                continue;
            }
            let x2 = SQRT3 / 4.0 - 0.5 * r.sqrt();
            best = best.min((x2 + 3.0) / x1);
        }
        best
    }

    #[test]
    fn cx_sector_slope_matches_boundary_scan() {
        let r = verify_sectors(100_000, 5);
        let inf = lens_c_slope_by_boundary_scan();
        assert!(
            r.min_slope_c >= inf * (1.0 - 1e-9),
            "{} vs {inf}",
            r.min_slope_c
        );
        assert!(r.min_slope_c <= inf * 1.002, "{} vs {inf}", r.min_slope_c);
        // The lower boundary dips below the corner height just before x₁ = 1/2,
        // so the corner value is not the infimum.
        assert!(inf < r.quoted_slope_c);
    }

    #[test]
    fn power_barrier_examples() {
        assert_eq!(power_q(0.0), 2.0);
        assert_eq!(power_q(1.0), 1.5);
        let c = power_c1(0.5, 1.0, 0.3, 1.0);
        let c2 = power_c1(0.5, 1.0, 0.3, 2.0);
        assert!((c2 / c - 2f64.powf(1.0 / 1.5)).abs() < 1e-12);
        let delta = verify_sectors(20_000, 1).delta;
        let hmax = max_power_drift(1.0, 1.0, delta, 0.25);
        let r = verify_lem1_power(1.0, 1.0, 0.5 * hmax, delta, 0.25, 20_000, 1);
        assert!(r.pass, "{r:?}");
        // A drift well beyond the bound breaks the inequality somewhere.
        assert!(!verify_lem1_power(1.0, 1.0, 3.0 * hmax, delta, 0.25, 20_000, 1).pass);
    }

    #[test]
    fn power_barrier_derivatives() {
        let s = PowerBarrierSpec::new(0.5, 1.0, 0.3, 1.0, 0.25);
        let x = [0.05, -0.1];
        let step = 1e-5;
        let c = s.eval(x);
        let gx = (s.eval([x[0] + step, x[1]]).v - s.eval([x[0] - step, x[1]]).v) / (2.0 * step);
        assert!((gx - c.grad[0]).abs() < 1e-6);
        let hxy = (s.eval([x[0], x[1] + step]).grad[0] - s.eval([x[0], x[1] - step]).grad[0])
            / (2.0 * step);
        assert!((hxy - c.hess.xy).abs() < 1e-5);
    }
}
