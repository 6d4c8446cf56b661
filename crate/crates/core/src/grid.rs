//! Uniform 2D lattices built from closed-form domains, and fields living on them.
//!
//! The lattice is anchored at integer multiples of the spacing, so grids built
//! from different domains with the same `h` share node positions. A node is
//! interior when it lies strictly inside the domain and its four axis
//! neighbors lie in the closed domain. Boundary nodes are the non-interior
//! nodes within one diagonal step of an interior node.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack used by the point predicates, so lattice points that sit
/// exactly on a boundary curve are classified consistently.
const PREDICATE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("no lattice point is interior at spacing h = {h}")]
    EmptyInterior { h: f64 },
    #[error("invalid spacing h = {0}")]
    InvalidSpacing(f64),
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),
    #[error("domain bounding box is empty or unbounded")]
    UnboundedDomain,
    #[error("function returned a non-finite value at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("mask contains no node of the grid")]
    EmptyMask,
    #[error("fields live on different grids")]
    GridMismatch,
}

/// Which half of an ellipse segment is kept.
///
/// With `axis = 0, side = 1` the segment is `x₁ − x₀₁ > b/2`; in general the
/// threshold is half the semi-axis along `axis`, on the side given by the sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cut {
    pub axis: usize,
    pub side: i8,
}

impl Cut {
    pub const RIGHT: Cut = Cut { axis: 0, side: 1 };
    pub const LEFT: Cut = Cut { axis: 0, side: -1 };
    pub const ABOVE: Cut = Cut { axis: 1, side: 1 };
    pub const BELOW: Cut = Cut { axis: 1, side: -1 };
}

/// Closed-form planar domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Rectangle {
        x: [f64; 2],
        y: [f64; 2],
    },
    Disc {
        center: [f64; 2],
        radius: f64,
    },
    /// `[0, width] × [−length/2, length/2]`, a truncation of the strip `[0, width] × ℝ`.
    StripTruncated {
        width: f64,
        length: f64,
    },
    EllipseSegment {
        center: [f64; 2],
        /// Semi-axis along x₁.
        b: f64,
        /// Semi-axis along x₂.
        c: f64,
        cut: Cut,
    },
    Union {
        a: Box<Domain>,
        b: Box<Domain>,
    },
    Intersection {
        a: Box<Domain>,
        b: Box<Domain>,
    },
    Difference {
        a: Box<Domain>,
        b: Box<Domain>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl BBox {
    fn is_empty(&self) -> bool {
        !(self.min[0] <= self.max[0] && self.min[1] <= self.max[1])
    }

    fn scale(&self) -> f64 {
        let w = (self.max[0] - self.min[0]).max(self.max[1] - self.min[1]);
        let m = self.min[0]
            .abs()
            .max(self.min[1].abs())
            .max(self.max[0].abs())
            .max(self.max[1].abs());
        w.max(m).max(1.0)
    }
}

impl Domain {
    pub fn rectangle(x: [f64; 2], y: [f64; 2]) -> Self {
        Domain::Rectangle { x, y }
    }

    pub fn unit_square() -> Self {
        Domain::Rectangle {
            x: [0.0, 1.0],
            y: [0.0, 1.0],
        }
    }

    pub fn disc(center: [f64; 2], radius: f64) -> Self {
        Domain::Disc { center, radius }
    }

    pub fn strip(width: f64, length: f64) -> Self {
        Domain::StripTruncated { width, length }
    }

    pub fn ellipse_segment(center: [f64; 2], b: f64, c: f64, cut: Cut) -> Self {
        Domain::EllipseSegment { center, b, c, cut }
    }

    pub fn union(a: Domain, b: Domain) -> Self {
        Domain::Union {
            a: Box::new(a),
            b: Box::new(b),
        }
    }

    pub fn intersection(a: Domain, b: Domain) -> Self {
        Domain::Intersection {
            a: Box::new(a),
            b: Box::new(b),
        }
    }

    pub fn difference(a: Domain, b: Domain) -> Self {
        Domain::Difference {
            a: Box::new(a),
            b: Box::new(b),
        }
    }

    /// Checks that every primitive has positive measure.
    pub fn validate(&self) -> Result<(), GridError> {
        let bad = |msg: String| Err(GridError::DegenerateDomain(msg));
        match self {
            Domain::Rectangle { x, y } => {
                if !(x[0] < x[1] && y[0] < y[1]) || !x.iter().chain(y).all(|v| v.is_finite()) {
                    return bad(format!("rectangle {x:?} × {y:?}"));
                }
            }
            Domain::Disc { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) || !center.iter().all(|v| v.is_finite()) {
                    return bad(format!("disc radius {radius}"));
                }
            }
            Domain::StripTruncated { width, length } => {
                if !(*width > 0.0 && *length > 0.0 && width.is_finite() && length.is_finite()) {
                    return bad(format!("strip width {width}, length {length}"));
                }
            }
            Domain::EllipseSegment { center, b, c, cut } => {
                if !(*b > 0.0 && *c > 0.0 && b.is_finite() && c.is_finite())
                    || !center.iter().all(|v| v.is_finite())
                {
                    return bad(format!("ellipse semi-axes {b}, {c}"));
                }
                if cut.axis > 1 || !(cut.side == 1 || cut.side == -1) {
                    return bad(format!("ellipse cut {cut:?}"));
                }
            }
            Domain::Union { a, b }
            | Domain::Intersection { a, b }
            | Domain::Difference { a, b } => {
                a.validate()?;
                b.validate()?;
            }
        }
        Ok(())
    }

    pub fn bbox(&self) -> BBox {
        match self {
            Domain::Rectangle { x, y } => BBox {
                min: [x[0], y[0]],
                max: [x[1], y[1]],
            },
            Domain::Disc { center, radius } => BBox {
                min: [center[0] - radius, center[1] - radius],
                max: [center[0] + radius, center[1] + radius],
            },
            Domain::StripTruncated { width, length } => BBox {
                min: [0.0, -length / 2.0],
                max: [*width, length / 2.0],
            },
            Domain::EllipseSegment { center, b, c, cut } => {
                let semi = [*b, *c];
                let mut min = [center[0] - b, center[1] - c];
                let mut max = [center[0] + b, center[1] + c];
                let k = cut.axis;
                if cut.side > 0 {
                    min[k] = center[k] + semi[k] / 2.0;
                } else {
                    max[k] = center[k] - semi[k] / 2.0;
                }
                BBox { min, max }
            }
            Domain::Union { a, b } => {
                let (p, q) = (a.bbox(), b.bbox());
                BBox {
                    min: [p.min[0].min(q.min[0]), p.min[1].min(q.min[1])],
                    max: [p.max[0].max(q.max[0]), p.max[1].max(q.max[1])],
                }
            }
            Domain::Intersection { a, b } => {
                let (p, q) = (a.bbox(), b.bbox());
                BBox {
                    min: [p.min[0].max(q.min[0]), p.min[1].max(q.min[1])],
                    max: [p.max[0].min(q.max[0]), p.max[1].min(q.max[1])],
                }
            }
            Domain::Difference { a, .. } => a.bbox(),
        }
    }

    /// Point strictly inside the domain.
    pub fn contains_open(&self, p: [f64; 2]) -> bool {
        self.classify(p, self.bbox().scale() * PREDICATE_TOL, true)
    }

    /// Point in the closure of the domain.
    pub fn contains_closed(&self, p: [f64; 2]) -> bool {
        self.classify(p, self.bbox().scale() * PREDICATE_TOL, false)
    }

    fn classify(&self, p: [f64; 2], tol: f64, open: bool) -> bool {
        // `inside(s)` reads "s > 0" for the open set and "s ≥ 0" for the closed one,
        // where s is a signed margin that is positive inside.
        let inside = |s: f64| if open { s > tol } else { s >= -tol };
        match self {
            Domain::Rectangle { x, y } => {
                inside(p[0] - x[0])
                    && inside(x[1] - p[0])
                    && inside(p[1] - y[0])
                    && inside(y[1] - p[1])
            }
            Domain::Disc { center, radius } => {
                let d = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                inside(radius - d)
            }
            Domain::StripTruncated { width, length } => {
                inside(p[0]) && inside(width - p[0]) && inside(length / 2.0 - p[1].abs())
            }
            Domain::EllipseSegment { center, b, c, cut } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                let sigma2 = (dx / b).powi(2) + (dy / c).powi(2);
                let semi = [*b, *c];
                let d = [dx, dy][cut.axis] * f64::from(cut.side);
                inside(1.0 - sigma2) && inside(d - semi[cut.axis] / 2.0)
            }
            Domain::Union { a, b } => a.classify(p, tol, open) || b.classify(p, tol, open),
            Domain::Intersection { a, b } => a.classify(p, tol, open) && b.classify(p, tol, open),
            Domain::Difference { a, b } => a.classify(p, tol, open) && !b.classify(p, tol, !open),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

/// Uniform lattice with per-node classification.
///
/// Node `(i, j)` sits at `((i0 + i)·h, (j0 + j)·h)` and has flat index `j·nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    h: f64,
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    class: Vec<NodeClass>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

impl Grid {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of node (0, 0).
    pub fn origin(&self) -> [f64; 2] {
        [self.i0 as f64 * self.h, self.j0 as f64 * self.h]
    }

    /// Global lattice coordinates of a node: its position divided by `h`.
    pub fn lattice_coords(&self, idx: usize) -> (i64, i64) {
        (
            self.i0 + (idx % self.nx) as i64,
            self.j0 + (idx / self.nx) as i64,
        )
    }

    pub fn position(&self, idx: usize) -> [f64; 2] {
        let (gi, gj) = self.lattice_coords(idx);
        [gi as f64 * self.h, gj as f64 * self.h]
    }

    pub fn class(&self, idx: usize) -> NodeClass {
        self.class[idx]
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.class
    }

    /// Interior node indices in increasing (row-major) order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Index of the node at global lattice coordinates, if it is in the array.
    pub fn index_of(&self, gi: i64, gj: i64) -> Option<usize> {
        let i = gi - self.i0;
        let j = gj - self.j0;
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            return None;
        }
        Some(j as usize * self.nx + i as usize)
    }

    /// Interior node closest to `p` (ties broken by lowest index).
    pub fn nearest_interior(&self, p: [f64; 2]) -> usize {
        let mut best = self.interior[0];
        let mut best_d = f64::INFINITY;
        for &k in &self.interior {
            let q = self.position(k);
            let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }
}

/// Builds the lattice grid of `domain` with spacing `h`.
pub fn build_grid(domain: &Domain, h: f64) -> Result<Grid, GridError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(GridError::InvalidSpacing(h));
    }
    domain.validate()?;
    let bb = domain.bbox();
    if bb.is_empty() || !bb.min.iter().chain(&bb.max).all(|v| v.is_finite()) {
        return Err(GridError::UnboundedDomain);
    }
    // One padding layer beyond the box keeps every stencil inside the array.
    let i0 = (bb.min[0] / h).floor() as i64 - 1;
    let j0 = (bb.min[1] / h).floor() as i64 - 1;
    let i1 = (bb.max[0] / h).ceil() as i64 + 1;
    let j1 = (bb.max[1] / h).ceil() as i64 + 1;
    let nx = (i1 - i0 + 1) as usize;
    let ny = (j1 - j0 + 1) as usize;

    let scale = bb.scale() * PREDICATE_TOL;
    let pos = |i: usize, j: usize| [(i0 + i as i64) as f64 * h, (j0 + j as i64) as f64 * h];
    let open: Vec<bool> = (0..nx * ny)
        .map(|k| domain.classify(pos(k % nx, k / nx), scale, true))
        .collect();
    let closed: Vec<bool> = (0..nx * ny)
        .map(|k| domain.classify(pos(k % nx, k / nx), scale, false))
        .collect();

    let mut class = vec![NodeClass::Exterior; nx * ny];
    let mut interior = Vec::new();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            if open[k] && closed[k - 1] && closed[k + 1] && closed[k - nx] && closed[k + nx] {
                class[k] = NodeClass::Interior;
                interior.push(k);
            }
        }
    }
    if interior.is_empty() {
        return Err(GridError::EmptyInterior { h });
    }
    for &k in &interior {
        let (i, j) = (k % nx, k / nx);
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let n = (j as i64 + dj) as usize * nx + (i as i64 + di) as usize;
                if class[n] == NodeClass::Exterior {
                    class[n] = NodeClass::Boundary;
                }
            }
        }
    }
    let boundary = (0..nx * ny)
        .filter(|&k| class[k] == NodeClass::Boundary)
        .collect();
    Ok(Grid {
        h,
        i0,
        j0,
        nx,
        ny,
        class,
        interior,
        boundary,
    })
}

/// Real values over every node of a grid. Exterior nodes carry 0.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        ScalarField {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let mut f = ScalarField::zeros(grid);
        for k in 0..f.values.len() {
            if f.grid.class[k] != NodeClass::Exterior {
                f.values[k] = c;
            }
        }
        f
    }

    /// Wraps raw node values; `values.len()` must equal the node count.
    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            grid.len(),
            "value count must match node count"
        );
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn scaled(&self, t: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * t).collect(),
        }
    }

    /// Applies `op` to every interior and boundary node value.
    pub fn map(&self, op: impl Fn(f64) -> f64) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(&self.grid.class)
            .map(|(&v, &c)| if c == NodeClass::Exterior { 0.0 } else { op(v) })
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Max of |value| over interior and boundary nodes.
    pub fn sup_abs(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.grid.class)
            .filter(|(_, &c)| c != NodeClass::Exterior)
            .fold(0.0f64, |m, (v, _)| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }
}

/// Samples `f` at every interior and boundary node.
pub fn sample_field(
    grid: &Arc<Grid>,
    f: impl Fn(f64, f64) -> f64,
) -> Result<ScalarField, GridError> {
    let mut values = vec![0.0; grid.len()];
    for (k, v) in values.iter_mut().enumerate() {
        if grid.class[k] == NodeClass::Exterior {
            continue;
        }
        let [x, y] = grid.position(k);
        let s = f(x, y);
        if !s.is_finite() {
            return Err(GridError::NonFinite { x, y });
        }
        *v = s;
    }
    Ok(ScalarField {
        grid: grid.clone(),
        values,
    })
}

/// Exact max and min of the field over non-exterior nodes lying in the closed mask.
pub fn sup_inf(field: &ScalarField, mask: &Domain) -> Result<(f64, f64), GridError> {
    let (sup, inf, count) = sup_inf_count(field, mask);
    if count == 0 {
        return Err(GridError::EmptyMask);
    }
    Ok((sup, inf))
}

/// Like [`sup_inf`] but also returns how many nodes the mask selected.
pub fn sup_inf_count(field: &ScalarField, mask: &Domain) -> (f64, f64, usize) {
    let grid = &field.grid;
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    let mut count = 0;
    for k in 0..grid.len() {
        if grid.class[k] == NodeClass::Exterior || !mask.contains_closed(grid.position(k)) {
            continue;
        }
        let v = field.values[k];
        sup = sup.max(v);
        inf = inf.min(v);
        count += 1;
    }
    (sup, inf, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_square_half_spacing_has_one_interior_node() {
        let g = build_grid(&Domain::unit_square(), 0.5).unwrap();
        assert_eq!(g.interior().len(), 1);
        assert_eq!(g.position(g.interior()[0]), [0.5, 0.5]);
        // All eight neighbors of the single interior node are boundary.
        assert_eq!(g.boundary().len(), 8);
    }

    #[test]
    fn disc_interior_matches_brute_force_scan() {
        let h = 0.25;
        let g = build_grid(&Domain::disc([0.0, 0.0], 1.0), h).unwrap();
        let inside_closed = |i: i64, j: i64| ((i * i + j * j) as f64) <= 16.0 + 1e-9;
        let inside_open = |i: i64, j: i64| ((i * i + j * j) as f64) < 16.0 - 1e-9;
        let mut expected = 0;
        for j in -6..=6 {
            for i in -6..=6 {
                if inside_open(i, j)
                    && inside_closed(i + 1, j)
                    && inside_closed(i - 1, j)
                    && inside_closed(i, j + 1)
                    && inside_closed(i, j - 1)
                {
                    expected += 1;
                }
            }
        }
        assert_eq!(g.interior().len(), expected);
    }

    #[test]
    fn strip_interior_nodes_lie_strictly_inside_width() {
        let g = build_grid(&Domain::strip(1.0, 8.0), 0.1).unwrap();
        for &k in g.interior() {
            let [x, _] = g.position(k);
            assert!(x > 0.0 && x < 1.0);
        }
    }

    #[test]
    fn coarse_spacing_gives_empty_interior() {
        assert_eq!(
            build_grid(&Domain::unit_square(), 1.0).unwrap_err(),
            GridError::EmptyInterior { h: 1.0 }
        );
    }

    #[test]
    fn degenerate_primitives_are_rejected() {
        assert!(build_grid(&Domain::disc([0.0, 0.0], 0.0), 0.1).is_err());
        assert!(build_grid(&Domain::rectangle([1.0, 0.0], [0.0, 1.0]), 0.1).is_err());
        assert!(build_grid(&Domain::unit_square(), -0.1).is_err());
    }

    #[test]
    fn boundary_nodes_touch_interior_and_interior_stencils_stay_in_array() {
        let g = build_grid(&Domain::disc([0.3, -0.2], 0.7), 0.05).unwrap();
        let (nx, _) = g.dims();
        for &k in g.interior() {
            for n in [
                k - 1,
                k + 1,
                k - nx,
                k + nx,
                k - nx - 1,
                k - nx + 1,
                k + nx - 1,
                k + nx + 1,
            ] {
                assert_ne!(g.class(n), NodeClass::Exterior);
            }
        }
        for &k in g.boundary() {
            let (i, j) = (k % nx, k / nx);
            let touches = (-1i64..=1).any(|dj| {
                (-1i64..=1).any(|di| {
                    let n = (j as i64 + dj) as usize * nx + (i as i64 + di) as usize;
                    g.class(n) == NodeClass::Interior
                })
            });
            assert!(touches);
        }
    }

    #[test]
    fn ellipse_segment_keeps_only_the_cut_side() {
        let d = Domain::ellipse_segment([0.0, 0.0], 1.0, 1.0, Cut::RIGHT);
        assert!(d.contains_open([0.75, 0.0]));
        assert!(!d.contains_open([0.25, 0.0]));
        assert!(!d.contains_closed([1.1, 0.0]));
        let m = Domain::ellipse_segment([0.0, 0.0], 1.0, 1.0, Cut::LEFT);
        assert!(m.contains_open([-0.75, 0.0]));
        let below = Domain::ellipse_segment([0.0, 0.0], 1.0, 2.0, Cut::BELOW);
        assert!(below.contains_open([0.0, -1.5]));
        assert!(!below.contains_open([0.0, -0.5]));
    }

    #[test]
    fn mask_algebra() {
        let a = Domain::unit_square();
        let b = Domain::disc([1.0, 0.5], 0.5);
        let g_a = build_grid(&a, 0.05).unwrap();
        let g_i = build_grid(&Domain::intersection(a.clone(), b.clone()), 0.05).unwrap();
        let g_b = build_grid(&b, 0.05).unwrap();
        for &k in g_i.interior() {
            let (gi, gj) = g_i.lattice_coords(k);
            let ka = g_a.index_of(gi, gj).unwrap();
            let kb = g_b.index_of(gi, gj).unwrap();
            assert_eq!(g_a.class(ka), NodeClass::Interior);
            assert_eq!(g_b.class(kb), NodeClass::Interior);
        }
        let diff = Domain::difference(a.clone(), b.clone());
        assert!(diff.contains_open([0.2, 0.5]));
        assert!(!diff.contains_open([0.9, 0.5]));
        // The circle itself belongs to the closure of the difference.
        assert!(diff.contains_closed([0.5, 0.5]));
        let u = Domain::union(a, Domain::disc([2.0, 0.5], 0.3));
        assert!(u.contains_open([2.0, 0.5]) && u.contains_open([0.5, 0.5]));
        assert!(!u.contains_open([1.5, 0.5]));
    }

    #[test]
    fn sample_field_examples() {
        let g = Arc::new(build_grid(&Domain::unit_square(), 0.25).unwrap());
        let one = sample_field(&g, |_, _| 1.0).unwrap();
        for &k in g.interior().iter().chain(g.boundary()) {
            assert_eq!(one.get(k), 1.0);
        }
        let x = sample_field(&g, |x, _| x).unwrap();
        let k = g.index_of(2, 2).unwrap();
        assert_eq!(x.get(k), 0.5);
        assert!(matches!(
            sample_field(&g, |x, _| 1.0 / (x - 0.5)),
            Err(GridError::NonFinite { .. })
        ));

        let s = Arc::new(build_grid(&Domain::strip(1.0, 4.0), 0.05).unwrap());
        let u = sample_field(&s, |x, _| {
            (x * std::f64::consts::PI / 4.0 + std::f64::consts::PI / 8.0)
                .sin()
                .sqrt()
        })
        .unwrap();
        for &k in s.interior() {
            assert!(u.get(k) > 0.0 && u.get(k) < 1.0);
        }
    }

    #[test]
    fn sup_inf_examples() {
        let g = Arc::new(build_grid(&Domain::unit_square(), 0.05).unwrap());
        let five = ScalarField::constant(g.clone(), 5.0);
        assert_eq!(
            sup_inf(&five, &Domain::disc([0.5, 0.5], 0.2)).unwrap(),
            (5.0, 5.0)
        );
        let x = sample_field(&g, |x, _| x).unwrap();
        let mask = Domain::disc([0.5, 0.5], 0.25);
        let (s, i) = sup_inf(&x, &mask).unwrap();
        // Brute-force scan over the lattice points of the mask.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..=20 {
            for i in 0..=20 {
                let (px, py) = (i as f64 * 0.05, j as f64 * 0.05);
                if (px - 0.5).powi(2) + (py - 0.5).powi(2) <= 0.0625 + 1e-12 {
                    lo = lo.min(px);
                    hi = hi.max(px);
                }
            }
        }
        assert!((s - hi).abs() < 1e-12 && (i - lo).abs() < 1e-12);
        assert!((s - i - 0.5).abs() <= 0.05);
        assert_eq!(
            sup_inf(&x, &Domain::disc([5.0, 5.0], 0.1)).unwrap_err(),
            GridError::EmptyMask
        );
    }

    fn convex_domain() -> impl Strategy<Value = Domain> {
        prop_oneof![
            (-1.0..1.0f64, -1.0..1.0f64, 0.3..2.0f64, 0.3..2.0f64)
                .prop_map(|(x, y, w, hgt)| Domain::rectangle([x, x + w], [y, y + hgt])),
            (-1.0..1.0f64, -1.0..1.0f64, 0.3..1.5f64).prop_map(|(x, y, r)| Domain::disc([x, y], r)),
            (0.3..2.0f64, 0.5..4.0f64).prop_map(|(w, l)| Domain::strip(w, l)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn build_grid_is_deterministic(d in convex_domain(), k in 3u32..6) {
            let h = 0.5f64.powi(k as i32);
            prop_assert_eq!(build_grid(&d, h), build_grid(&d, h));
        }

        #[test]
        fn refinement_keeps_interior_points(d in convex_domain(), k in 2u32..5) {
            let h = 0.5f64.powi(k as i32);
            if let (Ok(coarse), Ok(fine)) = (build_grid(&d, h), build_grid(&d, h / 2.0)) {
                for &n in coarse.interior() {
                    let (gi, gj) = coarse.lattice_coords(n);
                    let m = fine.index_of(2 * gi, 2 * gj).unwrap();
                    prop_assert_eq!(fine.class(m), NodeClass::Interior);
                }
            }
        }

        #[test]
        fn sup_is_at_least_inf(seed in 0u64..1000) {
            let g = Arc::new(build_grid(&Domain::unit_square(), 0.1).unwrap());
            let s = seed as f64;
            let f = sample_field(&g, |x, y| (s * x + y * y).sin()).unwrap();
            let (hi, lo) = sup_inf(&f, &Domain::unit_square()).unwrap();
            prop_assert!(hi >= lo);
        }
    }
}
