//! Pointwise evaluation of
//! `F(∇u, D²u) + h(x)·∇u |∇u|^α + (V(x) + λ)|u|^α u − f`
//! for the Pucci extremal operators and the weighted Laplacian, plus sampled
//! validators for the homogeneity, ellipticity and drift-monotonicity hypotheses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ScalarFn, VectorFn};
use crate::grid::{BBox, NodeClass, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("invalid operator: {0}")]
    InvalidSpec(String),
    #[error("homogeneity violated: relative defect {defect:e} at {witness:?}")]
    H1Violation { defect: f64, witness: Vec<f64> },
    #[error("ellipticity violated: defect {defect:e} at {witness:?}")]
    H2Violation { defect: f64, witness: Vec<f64> },
    #[error("drift monotonicity violated: (h(x)-h(y))·(x-y) = {defect:e} at {witness:?}")]
    H5Violation { defect: f64, witness: Vec<f64> },
}

/// Symmetric 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };
    pub const IDENTITY: Sym2 = Sym2 {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Sym2 {
            xx: a,
            xy: 0.0,
            yy: b,
        }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let r = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        (mean - r, mean + r)
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Pucci extremal operator on a symmetric 2×2 matrix.
///
/// `Plus` gives `A·Tr(M⁺) − a·Tr(M⁻)`, `Minus` gives `a·Tr(M⁺) − A·Tr(M⁻)`.
pub fn pucci(m: &Sym2, a: f64, big_a: f64, sign: Sign) -> f64 {
    let (l1, l2) = m.eigenvalues();
    let (up, down) = match sign {
        Sign::Plus => (big_a, a),
        Sign::Minus => (a, big_a),
    };
    [l1, l2]
        .iter()
        .map(|&l| if l > 0.0 { up * l } else { down * l })
        .sum()
}

/// Regularized gradient weight `(|p|² + ε²)^{α/2}`. With `ε = 0` this is `|p|^α`.
pub fn grad_weight(p: [f64; 2], alpha: f64, epsilon: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    let s = p[0] * p[0] + p[1] * p[1] + epsilon * epsilon;
    s.powf(0.5 * alpha)
}

/// `|u|^α u`, written so that `u = 0` gives 0 for every `α > −1`.
pub fn signed_power(u: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        u
    } else {
        u.signum() * u.abs().powf(1.0 + alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    PucciPlus,
    PucciMinus,
    WeightedLaplacian,
}

impl OperatorKind {
    /// The kind of `G(M) = −F(−M)`.
    pub fn dual(self) -> Self {
        match self {
            OperatorKind::PucciPlus => OperatorKind::PucciMinus,
            OperatorKind::PucciMinus => OperatorKind::PucciPlus,
            OperatorKind::WeightedLaplacian => OperatorKind::WeightedLaplacian,
        }
    }
}

/// The constant-coefficient second-order part: kind, exponent and ellipticity bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Principal {
    pub kind: OperatorKind,
    pub alpha: f64,
    pub a: f64,
    pub big_a: f64,
}

impl Principal {
    /// The unweighted second-order value `F(M)` (Pucci value or `a·Tr M`).
    #[inline]
    pub fn eval(&self, m: &Sym2) -> f64 {
        match self.kind {
            OperatorKind::PucciPlus => pucci(m, self.a, self.big_a, Sign::Plus),
            OperatorKind::PucciMinus => pucci(m, self.a, self.big_a, Sign::Minus),
            OperatorKind::WeightedLaplacian => self.a * m.trace(),
        }
    }

    /// `F(M)` together with `d/dt F(M + t·I)` at `t = 0` (one-sided where an
    /// eigenvalue vanishes).
    #[inline]
    pub fn eval_with_shift_slope(&self, m: &Sym2) -> (f64, f64) {
        let (up, down) = match self.kind {
            OperatorKind::PucciPlus => (self.big_a, self.a),
            OperatorKind::PucciMinus => (self.a, self.big_a),
            OperatorKind::WeightedLaplacian => return (self.a * m.trace(), 2.0 * self.a),
        };
        let (l1, l2) = m.eigenvalues();
        let mut v = 0.0;
        let mut d = 0.0;
        for l in [l1, l2] {
            let c = if l > 0.0 { up } else { down };
            v += c * l;
            d += c;
        }
        (v, d)
    }
}

/// Full operator: principal part plus drift `h(x)` and potential `V(x)`.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub alpha: f64,
    pub a: f64,
    pub big_a: f64,
    pub drift: VectorFn,
    pub potential: ScalarFn,
}

impl OperatorSpec {
    /// Operator without drift or potential; fails on invalid parameters.
    pub fn new(kind: OperatorKind, alpha: f64, a: f64, big_a: f64) -> Result<Self, OperatorError> {
        let spec = OperatorSpec {
            kind,
            alpha,
            a,
            big_a,
            drift: VectorFn::zero(),
            potential: ScalarFn::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `a = A = 1` weighted Laplacian with exponent `alpha`.
    pub fn laplacian(alpha: f64) -> Self {
        OperatorSpec::new(OperatorKind::WeightedLaplacian, alpha, 1.0, 1.0)
            .expect("valid laplacian")
    }

    pub fn with_drift(mut self, drift: VectorFn) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_potential(mut self, potential: ScalarFn) -> Self {
        self.potential = potential;
        self
    }

    pub fn validate(&self) -> Result<(), OperatorError> {
        let bad = |m: String| Err(OperatorError::InvalidSpec(m));
        if !(self.alpha > -1.0 && self.alpha.is_finite()) {
            return bad(format!("alpha = {} must exceed -1", self.alpha));
        }
        if !(self.a > 0.0 && self.big_a >= self.a && self.big_a.is_finite()) {
            return bad(format!(
                "need 0 < a <= A, got a = {}, A = {}",
                self.a, self.big_a
            ));
        }
        if self.kind == OperatorKind::WeightedLaplacian && self.a != self.big_a {
            return bad(format!(
                "weighted_laplacian needs a = A, got {} and {}",
                self.a, self.big_a
            ));
        }
        Ok(())
    }

    pub fn principal(&self) -> Principal {
        Principal {
            kind: self.kind,
            alpha: self.alpha,
            a: self.a,
            big_a: self.big_a,
        }
    }

    /// Operator of `G(x, p, M) = −F(x, p, −M)` with the lower-order terms kept.
    ///
    /// If `φ > 0` solves `F[φ] + h·∇φ|∇φ|^α + (V+λ)φ^{1+α} = 0` for the dual, then
    /// `ψ = −φ` solves the same equation for the original operator: the drift
    /// and zeroth-order terms are odd in `u` and keep their sign.
    pub fn dual(&self) -> OperatorSpec {
        OperatorSpec {
            kind: self.kind.dual(),
            ..self.clone()
        }
    }

    /// `|p|^α`-weighted principal part with ε = 0, as used by the validators.
    fn homogeneous(&self, p: [f64; 2], m: &Sym2) -> f64 {
        grad_weight(p, self.alpha, 0.0) * self.principal().eval(m)
    }
}

/// Regularization scale and spectral shift for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalContext {
    pub epsilon: f64,
    pub lambda: f64,
}

impl EvalContext {
    pub fn new(epsilon: f64, lambda: f64) -> Self {
        assert!(epsilon > 0.0, "epsilon must be positive");
        EvalContext { epsilon, lambda }
    }
}

/// Evaluates `W·F(M) + W·h(x)·p + (V(x)+λ)|u|^α u − f` with `W = (|p|²+ε²)^{α/2}`.
pub fn eval_operator(
    spec: &OperatorSpec,
    ctx: &EvalContext,
    x: [f64; 2],
    p: [f64; 2],
    m: &Sym2,
    u: f64,
    f: f64,
) -> f64 {
    let h = spec.drift.eval(x[0], x[1]);
    let v = spec.potential.eval(x[0], x[1]);
    eval_local(&spec.principal(), ctx, h, v, p, m, u, f)
}

/// [`eval_operator`] with the drift and potential already evaluated at the point.
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn eval_local(
    pr: &Principal,
    ctx: &EvalContext,
    h: [f64; 2],
    v: f64,
    p: [f64; 2],
    m: &Sym2,
    u: f64,
    f: f64,
) -> f64 {
    let w = grad_weight(p, pr.alpha, ctx.epsilon);
    w * (pr.eval(m) + h[0] * p[0] + h[1] * p[1]) + (v + ctx.lambda) * signed_power(u, pr.alpha) - f
}

/// Centered gradient and Hessian at flat index `k` of a row-major array with `nx` columns.
#[inline]
pub(crate) fn stencil(u: &[f64], nx: usize, h: f64, k: usize) -> ([f64; 2], Sym2) {
    let c = u[k];
    let (e, w, n, s) = (u[k + 1], u[k - 1], u[k + nx], u[k - nx]);
    let inv2h = 0.5 / h;
    let invh2 = 1.0 / (h * h);
    let p = [(e - w) * inv2h, (n - s) * inv2h];
    let xy = (u[k + nx + 1] - u[k - nx + 1] - u[k + nx - 1] + u[k - nx - 1]) * 0.25 * invh2;
    let m = Sym2::new((e + w - 2.0 * c) * invh2, xy, (n + s - 2.0 * c) * invh2);
    (p, m)
}

/// Discrete gradient and Hessian of `field` at an interior node.
///
/// Returns `None` when `node` is not interior.
pub fn discrete_derivatives(field: &ScalarField, node: usize) -> Option<([f64; 2], Sym2)> {
    let g = field.grid();
    if node >= g.len() || g.class(node) != NodeClass::Interior {
        return None;
    }
    Some(stencil(field.values(), g.dims().0, g.h(), node))
}

/// Pointwise operator defect at interior nodes; other nodes carry 0.
pub fn residual(
    spec: &OperatorSpec,
    ctx: &EvalContext,
    field: &ScalarField,
    rhs: &ScalarField,
) -> ScalarField {
    assert!(field.same_grid(rhs), "field and rhs must share a grid");
    let g = field.grid();
    let (nx, _) = g.dims();
    let pr = spec.principal();
    let mut out = vec![0.0; g.len()];
    for &k in g.interior() {
        let x = g.position(k);
        let (p, m) = stencil(field.values(), nx, g.h(), k);
        let hv = spec.drift.eval(x[0], x[1]);
        let v = spec.potential.eval(x[0], x[1]);
        out[k] = eval_local(&pr, ctx, hv, v, p, &m, field.get(k), rhs.get(k));
    }
    ScalarField::from_values(g.clone(), out)
}

/// Outcome of a sampled hypothesis check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub hypothesis: String,
    pub samples: usize,
    pub seed: u64,
    /// False when the hypothesis is recorded but not machine-checked.
    pub checked: bool,
    pub max_defect: f64,
    /// Sample at which `max_defect` was attained.
    pub witness: Vec<f64>,
    pub note: Option<String>,
}

fn random_sym(rng: &mut ChaCha8Rng) -> Sym2 {
    Sym2::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

fn random_gradient(rng: &mut ChaCha8Rng) -> [f64; 2] {
    let r = rng.gen_range(0.1..2.0);
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    [r * th.cos(), r * th.sin()]
}

/// Checks `F(tp, μX) = |t|^α μ F(p, X)` on random samples, with ε = 0.
///
/// The defect is relative to `|t|^α μ |p|^α A (|λ₁(X)| + |λ₂(X)|)`, the natural
/// size of either side, so cancellations inside `F` do not inflate it.
pub fn check_h1(
    spec: &OperatorSpec,
    samples: usize,
    seed: u64,
) -> Result<HypothesisReport, OperatorError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut witness = Vec::new();
    for _ in 0..samples.max(1) {
        let p = random_gradient(&mut rng);
        let m = random_sym(&mut rng);
        let t = rng.gen_range(0.1..3.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
        let mu = rng.gen_range(0.0..3.0);
        let lhs = spec.homogeneous([t * p[0], t * p[1]], &m.scale(mu));
        let factor = t.abs().powf(spec.alpha) * mu;
        let rhs = factor * spec.homogeneous(p, &m);
        let (l1, l2) = m.eigenvalues();
        let size = factor * grad_weight(p, spec.alpha, 0.0) * spec.big_a * (l1.abs() + l2.abs());
        let defect = if size > 0.0 {
            (lhs - rhs).abs() / size
        } else {
            (lhs - rhs).abs()
        };
        if defect > worst || witness.is_empty() {
            worst = worst.max(defect);
            witness = vec![p[0], p[1], m.xx, m.xy, m.yy, t, mu];
        }
    }
    if worst > 1e-12 {
        return Err(OperatorError::H1Violation {
            defect: worst,
            witness,
        });
    }
    Ok(HypothesisReport {
        hypothesis: "H1".into(),
        samples,
        seed,
        checked: true,
        max_defect: worst,
        witness,
        note: None,
    })
}

/// Checks `a|p|^α tr N ≤ F(p, M+N) − F(p, M) ≤ A|p|^α tr N` for random `M` and `N = GᵀG`.
pub fn check_h2(
    spec: &OperatorSpec,
    samples: usize,
    seed: u64,
) -> Result<HypothesisReport, OperatorError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut witness = Vec::new();
    for _ in 0..samples.max(1) {
        let p = random_gradient(&mut rng);
        let m = random_sym(&mut rng);
        let g: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        // N = GᵀG with G = [[g0, g1], [g2, g3]].
        let n = Sym2::new(
            g[0] * g[0] + g[2] * g[2],
            g[0] * g[1] + g[2] * g[3],
            g[1] * g[1] + g[3] * g[3],
        );
        let diff = spec.homogeneous(p, &m.add(&n)) - spec.homogeneous(p, &m);
        let w = grad_weight(p, spec.alpha, 0.0) * n.trace();
        let defect = (spec.a * w - diff).max(diff - spec.big_a * w).max(0.0);
        if defect > worst || witness.is_empty() {
            worst = worst.max(defect);
            witness = vec![p[0], p[1], m.xx, m.xy, m.yy, n.xx, n.xy, n.yy];
        }
    }
    if worst > 1e-10 {
        return Err(OperatorError::H2Violation {
            defect: worst,
            witness,
        });
    }
    Ok(HypothesisReport {
        hypothesis: "H2".into(),
        samples,
        seed,
        checked: true,
        max_defect: worst,
        witness,
        note: None,
    })
}

/// Checks `(h(x) − h(y))·(x − y) ≤ 0` on random pairs in `bbox` when `α > 0`.
///
/// For `α ≤ 0` the condition is Hölder continuity of `h`, which sampling
/// cannot certify; the report then has `checked = false`.
pub fn check_h5(
    drift: &VectorFn,
    alpha: f64,
    pairs: usize,
    bbox: &BBox,
    seed: u64,
) -> Result<HypothesisReport, OperatorError> {
    if alpha <= 0.0 {
        return Ok(HypothesisReport {
            hypothesis: "H5".into(),
            samples: 0,
            seed,
            checked: false,
            max_defect: 0.0,
            witness: Vec::new(),
            note: Some("alpha <= 0: Hölder continuity of the drift is accepted as declared".into()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| {
        [
            rng.gen_range(bbox.min[0]..=bbox.max[0]),
            rng.gen_range(bbox.min[1]..=bbox.max[1]),
        ]
    };
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    for _ in 0..pairs.max(1) {
        let x = point(&mut rng);
        let y = point(&mut rng);
        let hx = drift.eval(x[0], x[1]);
        let hy = drift.eval(y[0], y[1]);
        let ip = (hx[0] - hy[0]) * (x[0] - y[0]) + (hx[1] - hy[1]) * (x[1] - y[1]);
        if ip > worst {
            worst = ip;
            witness = vec![x[0], x[1], y[0], y[1]];
        }
    }
    if worst > 1e-12 {
        return Err(OperatorError::H5Violation {
            defect: worst,
            witness,
        });
    }
    Ok(HypothesisReport {
        hypothesis: "H5".into(),
        samples: pairs,
        seed,
        checked: true,
        max_defect: worst.max(0.0),
        witness,
        note: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, sample_field, Domain};
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn pucci_examples() {
        assert_eq!(pucci(&Sym2::IDENTITY, 1.0, 2.0, Sign::Plus), 4.0);
        assert_eq!(pucci(&Sym2::diag(1.0, -1.0), 1.0, 2.0, Sign::Plus), 1.0);
        assert_eq!(pucci(&Sym2::diag(1.0, -1.0), 1.0, 2.0, Sign::Minus), -1.0);
    }

    #[test]
    fn grad_weight_examples() {
        assert!((grad_weight([3.0, 4.0], 1.0, 1e-12) - 5.0).abs() < 1e-9);
        assert!((grad_weight([0.0, 0.0], -0.5, 0.1) - 0.1f64.powf(-0.5)).abs() < 1e-12);
        assert!((grad_weight([0.0, 0.0], -0.5, 0.1) - 3.1623).abs() < 1e-4);
        assert_eq!(grad_weight([7.0, -2.0], 0.0, 0.3), 1.0);
    }

    #[test]
    fn eval_operator_examples() {
        let lap = OperatorSpec::laplacian(0.0);
        let ctx = EvalContext::new(1e-12, 0.0);
        assert_eq!(
            eval_operator(
                &lap,
                &ctx,
                [0.0, 0.0],
                [0.3, 0.1],
                &Sym2::IDENTITY,
                0.0,
                0.0
            ),
            2.0
        );

        let pp = OperatorSpec::new(OperatorKind::PucciPlus, 1.0, 1.0, 2.0).unwrap();
        let v = eval_operator(
            &pp,
            &ctx,
            [0.0, 0.0],
            [2.0, 0.0],
            &Sym2::diag(1.0, -1.0),
            0.0,
            0.0,
        );
        assert!((v - 2.0).abs() < 1e-9);

        let ctx3 = EvalContext::new(1e-12, 3.0);
        assert_eq!(
            eval_operator(&lap, &ctx3, [0.0, 0.0], [0.0, 0.0], &Sym2::ZERO, 1.0, 0.0),
            3.0
        );
    }

    #[test]
    fn spec_validation() {
        assert!(OperatorSpec::new(OperatorKind::PucciPlus, -1.0, 1.0, 2.0).is_err());
        assert!(OperatorSpec::new(OperatorKind::PucciPlus, 0.0, 2.0, 1.0).is_err());
        assert!(OperatorSpec::new(OperatorKind::PucciPlus, 0.0, 0.0, 1.0).is_err());
        assert!(OperatorSpec::new(OperatorKind::WeightedLaplacian, 0.0, 1.0, 2.0).is_err());
        assert!(OperatorSpec::new(OperatorKind::PucciMinus, 0.5, 1.0, 3.0).is_ok());
    }

    #[test]
    fn derivatives_exact_on_quadratics() {
        let g = Arc::new(build_grid(&Domain::unit_square(), 0.125).unwrap());
        let sq = sample_field(&g, |x, _| x * x).unwrap();
        let xy = sample_field(&g, |x, y| x * y).unwrap();
        let lin = sample_field(&g, |x, y| 0.5 + 2.0 * x - 3.0 * y).unwrap();
        for &k in g.interior() {
            let (_, m) = discrete_derivatives(&sq, k).unwrap();
            assert!((m.xx - 2.0).abs() < 1e-9 && m.xy.abs() < 1e-9 && m.yy.abs() < 1e-9);
            let (_, m) = discrete_derivatives(&xy, k).unwrap();
            assert!((m.xy - 1.0).abs() < 1e-9 && m.xx.abs() < 1e-9);
            let (p, m) = discrete_derivatives(&lin, k).unwrap();
            assert!((p[0] - 2.0).abs() < 1e-9 && (p[1] + 3.0).abs() < 1e-9);
            assert!(m.xx.abs() < 1e-9 && m.xy.abs() < 1e-9 && m.yy.abs() < 1e-9);
        }
        assert!(discrete_derivatives(&sq, g.boundary()[0]).is_none());
    }

    #[test]
    fn residual_examples() {
        let g = Arc::new(build_grid(&Domain::unit_square(), 0.0625).unwrap());
        let lap = OperatorSpec::laplacian(0.0);
        let ctx = EvalContext::new(g.h(), 0.0);
        let harm = sample_field(&g, |x, y| x * x - y * y).unwrap();
        let zero = ScalarField::zeros(g.clone());
        let r = residual(&lap, &ctx, &harm, &zero);
        assert!(r.sup_abs() < 1e-9);
        let sq = sample_field(&g, |x, _| x * x).unwrap();
        let two = ScalarField::constant(g.clone(), 2.0);
        assert!(residual(&lap, &ctx, &sq, &two).sup_abs() < 1e-9);
        for &k in g.boundary() {
            assert_eq!(r.get(k), 0.0);
        }
    }

    #[test]
    fn hypothesis_checks_pass_on_the_family() {
        for kind in [
            OperatorKind::PucciPlus,
            OperatorKind::PucciMinus,
            OperatorKind::WeightedLaplacian,
        ] {
            for alpha in [-0.5, 0.0, 1.0] {
                let big_a = if kind == OperatorKind::WeightedLaplacian {
                    1.0
                } else {
                    2.0
                };
                let s = OperatorSpec::new(kind, alpha, 1.0, big_a).unwrap();
                assert!(check_h1(&s, 500, 3).unwrap().max_defect <= 1e-12);
                assert!(check_h2(&s, 500, 4).unwrap().max_defect <= 1e-10);
            }
        }
    }

    #[test]
    fn h1_scale_factor_is_observed() {
        let s = OperatorSpec::new(OperatorKind::PucciPlus, 1.0, 1.0, 2.0).unwrap();
        let p = [0.3, -0.7];
        let m = Sym2::new(0.4, -0.9, 0.1);
        let lhs = s.homogeneous([-3.0 * p[0], -3.0 * p[1]], &m.scale(2.0));
        assert!((lhs - 6.0 * s.homogeneous(p, &m)).abs() < 1e-12);
        let l = OperatorSpec::laplacian(0.0);
        assert!((l.homogeneous(p, &m.scale(5.0)) - 5.0 * l.homogeneous(p, &m)).abs() < 1e-12);
    }

    #[test]
    fn h2_linear_case_is_exact() {
        let s = OperatorSpec::new(OperatorKind::PucciPlus, 0.7, 1.5, 1.5).unwrap();
        let p = [0.2, 0.9];
        let m = Sym2::new(-0.3, 0.8, 0.5);
        let n = Sym2::new(0.5, 0.1, 0.3);
        let diff = s.homogeneous(p, &m.add(&n)) - s.homogeneous(p, &m);
        let expect = 1.5 * grad_weight(p, 0.7, 0.0) * n.trace();
        assert!((diff - expect).abs() < 1e-12);
        assert_eq!(
            s.homogeneous(p, &m.add(&Sym2::ZERO)) - s.homogeneous(p, &m),
            0.0
        );
    }

    #[test]
    fn h2_identity_increment_lies_between_a_and_big_a_times_two() {
        // Brute force over eigenvalue sign patterns: each eigenvalue moves by
        // one and contributes a slope between a and A, so the increment is in [2a, 2A].
        let s = OperatorSpec::new(OperatorKind::PucciPlus, 0.0, 1.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let m = random_sym(&mut rng).scale(3.0);
            let d =
                s.homogeneous([1.0, 0.0], &m.add(&Sym2::IDENTITY)) - s.homogeneous([1.0, 0.0], &m);
            assert!((2.0 - 1e-12..=4.0 + 1e-12).contains(&d), "{d}");
        }
    }

    #[test]
    fn h5_examples() {
        let bb = BBox {
            min: [-1.0, -1.0],
            max: [1.0, 1.0],
        };
        assert!(check_h5(&VectorFn::parse("-x", "-y").unwrap(), 1.0, 1000, &bb, 1).is_ok());
        let c = check_h5(&VectorFn::constant([2.0, -1.0]), 1.0, 1000, &bb, 1).unwrap();
        assert_eq!(c.max_defect, 0.0);
        assert!(matches!(
            check_h5(&VectorFn::parse("x", "y").unwrap(), 1.0, 1000, &bb, 1),
            Err(OperatorError::H5Violation { .. })
        ));
        assert!(
            !check_h5(&VectorFn::parse("x", "y").unwrap(), -0.5, 10, &bb, 1)
                .unwrap()
                .checked
        );
    }

    fn sym() -> impl Strategy<Value = Sym2> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b, c)| Sym2::new(a, b, c))
    }

    proptest! {
        #[test]
        fn pucci_duality(m in sym(), a in 0.1..2.0f64, extra in 0.0..3.0f64) {
            let big_a = a + extra;
            let lhs = pucci(&m.scale(-1.0), a, big_a, Sign::Plus);
            let rhs = -pucci(&m, a, big_a, Sign::Minus);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn pucci_is_monotone(m in sym(), g in prop::array::uniform4(-2.0..2.0f64), a in 0.1..2.0f64) {
            let n = Sym2::new(g[0] * g[0] + g[2] * g[2], g[0] * g[1] + g[2] * g[3], g[1] * g[1] + g[3] * g[3]);
            for sign in [Sign::Plus, Sign::Minus] {
                let before = pucci(&m, a, 2.0 * a, sign);
                let after = pucci(&m.add(&n), a, 2.0 * a, sign);
                prop_assert!(after >= before - 1e-12 * (1.0 + before.abs()));
            }
        }

        #[test]
        fn linear_unit_case_is_trace_minus_f(m in sym(), p in prop::array::uniform2(-3.0..3.0f64), f in -3.0..3.0f64, u in -2.0..2.0f64) {
            let lap = OperatorSpec::laplacian(0.0);
            let v = eval_operator(&lap, &EvalContext::new(0.1, 0.0), [0.0, 0.0], p, &m, u, f);
            prop_assert!((v - (m.trace() - f)).abs() < 1e-12);
        }

        #[test]
        fn grad_weight_is_continuous(p in prop::array::uniform2(-2.0..2.0f64), alpha in -0.99..3.0f64, eps in 0.01..1.0f64) {
            let q = [p[0] + 1e-9, p[1] - 1e-9];
            let (a, b) = (grad_weight(p, alpha, eps), grad_weight(q, alpha, eps));
            prop_assert!(a.is_finite() && a > 0.0);
            prop_assert!((a - b).abs() <= 1e-6 * a);
        }

        #[test]
        fn derivatives_exact_on_degree_two(c in prop::array::uniform6(-2.0..2.0f64)) {
            let g = Arc::new(build_grid(&Domain::rectangle([-1.0, 1.0], [-1.0, 1.0]), 0.25).unwrap());
            let f = sample_field(&g, |x, y| c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y).unwrap();
            for &k in g.interior() {
                let [x, y] = g.position(k);
                let (p, m) = discrete_derivatives(&f, k).unwrap();
                prop_assert!((p[0] - (c[1] + 2.0 * c[3] * x + c[4] * y)).abs() < 1e-9);
                prop_assert!((p[1] - (c[2] + c[4] * x + 2.0 * c[5] * y)).abs() < 1e-9);
                prop_assert!((m.xx - 2.0 * c[3]).abs() < 1e-9);
                prop_assert!((m.xy - c[4]).abs() < 1e-9);
                prop_assert!((m.yy - 2.0 * c[5]).abs() < 1e-9);
            }
        }
    }
}
