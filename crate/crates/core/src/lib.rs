//! Numerical laboratory for fully nonlinear elliptic operators of the form
//! `F(∇u, D²u) + h(x)·∇u|∇u|^α + V(x)|u|^α u`, with `F` a Pucci extremal
//! operator or a weighted Laplacian.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod cli;
pub mod eigen;
pub mod expr;
pub mod grid;
pub mod harnack;
pub mod io;
pub mod operator;
pub mod sampling;
pub mod solver;
