//! Built-in systems: the Ornstein–Uhlenbeck family, a planar limit cycle with
//! an explicit stationary density, and the enzyme substrate-competition
//! networks shipped as DSL sources.

use nalgebra::DMatrix;

use crate::dynamics::FnField;

/// Substrate competition: two substrates share one enzyme.
pub const ENZYME_SOURCE: &str = include_str!("../models/enzyme.crn");
/// Same network with `P1` and `P2` merged into a single product `P`.
pub const ENZYME_MERGED_SOURCE: &str = include_str!("../models/enzyme_merged.crn");
/// Same network with substrate interconversion `S1 <-> S2 @ ka, kb`.
pub const ENZYME_INTERCONVERSION_SOURCE: &str = include_str!("../models/enzyme_interconversion.crn");

/// `f(x) = -x` in `n` dimensions; with `sigma = Id` the stationary shape is `S = I/2`.
pub fn ou(n: usize) -> FnField {
    FnField::linear(-DMatrix::identity(n, n))
}

/// `x' = y + x(1 - r²)`, `y' = -x + y(1 - r²)`, `z' = -z`.
pub fn limit_cycle() -> FnField {
    FnField::new(3, |s, out| {
        let (x, y, z) = (s[0], s[1], s[2]);
        let g = 1.0 - x * x - y * y;
        out[0] = y + x * g;
        out[1] = -x + y * g;
        out[2] = -z;
    })
    .with_jacobian(|s| {
        let (x, y) = (s[0], s[1]);
        let g = 1.0 - x * x - y * y;
        DMatrix::from_row_slice(
            3,
            3,
            &[
                g - 2.0 * x * x,
                1.0 - 2.0 * x * y,
                0.0,
                -1.0 - 2.0 * x * y,
                g - 2.0 * y * y,
                0.0,
                0.0,
                0.0,
                -1.0,
            ],
        )
    })
}

/// Potential of the gradient part of [`limit_cycle`]:
/// `V = z²/2 + (1 - x² - y²)²/4`.
pub fn limit_cycle_potential(s: &[f64]) -> f64 {
    let g = 1.0 - s[0] * s[0] - s[1] * s[1];
    0.5 * s[2] * s[2] + 0.25 * g * g
}

/// Unnormalized stationary density of [`limit_cycle`] under `eps dW` with
/// unit noise, `exp(-2 V / eps²)`. The rotational part is divergence free and
/// orthogonal to `∇V`, so it leaves the Gibbs density of `-∇V` unchanged.
pub fn limit_cycle_density(eps: f64) -> impl Fn(&[f64]) -> f64 + Sync + Send {
    let scale = 2.0 / (eps * eps);
    move |s: &[f64]| (-scale * limit_cycle_potential(s)).exp()
}

/// A quadrature box holding all but a negligible part of
/// [`limit_cycle_density`] at `eps`.
pub fn limit_cycle_box(eps: f64) -> Vec<(f64, f64)> {
    // (1 - r²)² / (2 eps²) and z² / eps² both exceed ~40 outside the box
    let r = (1.0 + 9.0 * eps).sqrt();
    let z = 6.5 * eps;
    vec![(-r, r), (-r, r), (-z, z)]
}
