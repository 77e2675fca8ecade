//! Three-point Gauss-Legendre rule, exact for polynomials of degree <= 5.
//!
//! Every integrand that arises from products of piecewise-linear data and the
//! (at most cubic) adjoint functions has degree <= 4 on a merged-grid segment.

const NODE: f64 = 0.774_596_669_241_483_4; // sqrt(3/5)
const W_OUTER: f64 = 5.0 / 9.0;
const W_CENTER: f64 = 8.0 / 9.0;

/// Nodes and weights of the rule mapped onto `[a, b]`.
#[inline]
pub fn gl3(a: f64, b: f64) -> [(f64, f64); 3] {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    [
        (c - r * NODE, r * W_OUTER),
        (c, r * W_CENTER),
        (c + r * NODE, r * W_OUTER),
    ]
}
