//! Wasserstein, functional and uniform robustness at a stable equilibrium.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::VectorField;
use crate::lyapunov::{solve_lyapunov, LyapunovError};
use crate::mc::SampleEnsemble;
use crate::numeric::pairwise_sum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RobustnessError {
    #[error("covariance shape is not positive definite")]
    NotPositiveDefinite,
    #[error("ensemble was sampled at eps = {found}, requested eps = {requested}")]
    EpsMismatch { requested: f64, found: f64 },
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("region radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("no grid point had a nonvanishing Lyapunov gradient")]
    DegenerateGrid,
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
}

/// `R_w = sqrt(2 / tr(S^-1))`.
pub fn wasserstein_robustness(s: &DMatrix<f64>) -> Result<f64, RobustnessError> {
    let chol = nalgebra::Cholesky::new(s.clone()).ok_or(RobustnessError::NotPositiveDefinite)?;
    let trace = chol.inverse().trace();
    if !(trace > 0.0 && trace.is_finite()) {
        return Err(RobustnessError::NotPositiveDefinite);
    }
    Ok((2.0 / trace).sqrt())
}

/// A performance function: 1 on the attractor, strictly between 0 and 1 elsewhere.
pub trait PerformanceFunction: Sync {
    fn eval(&self, x: &[f64]) -> f64;
    fn center(&self) -> &[f64];
}

/// `p(x) = exp(-(x - x0)^T W (x - x0))` with `W` positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPerformance {
    center: Vec<f64>,
    weight: DMatrix<f64>,
}

impl GaussianPerformance {
    /// The default `p(x) = exp(-|x - x0|^2)`.
    pub fn standard(x0: &[f64]) -> Self {
        let n = x0.len();
        Self {
            center: x0.to_vec(),
            weight: DMatrix::identity(n, n),
        }
    }

    pub fn with_weight(x0: &[f64], weight: DMatrix<f64>) -> Result<Self, RobustnessError> {
        if weight.nrows() != x0.len() || weight.ncols() != x0.len() {
            return Err(RobustnessError::Dimension {
                expected: x0.len(),
                found: weight.nrows(),
            });
        }
        if nalgebra::Cholesky::new(weight.clone()).is_none() {
            return Err(RobustnessError::NotPositiveDefinite);
        }
        Ok(Self {
            center: x0.to_vec(),
            weight,
        })
    }

    /// `E[p(X)]` for `X ~ N(x0, eps^2 S)`, i.e. `det(I + 2 eps^2 S W)^(-1/2)`.
    pub fn gaussian_expectation(&self, s: &DMatrix<f64>, eps: f64) -> f64 {
        let n = self.center.len();
        let m = DMatrix::identity(n, n) + s * &self.weight * (2.0 * eps * eps);
        m.determinant().powf(-0.5)
    }
}

impl PerformanceFunction for GaussianPerformance {
    fn eval(&self, x: &[f64]) -> f64 {
        let d = DVector::from_iterator(x.len(), x.iter().zip(&self.center).map(|(a, b)| a - b));
        (-(d.transpose() * &self.weight * &d)[(0, 0)]).exp()
    }
    fn center(&self) -> &[f64] {
        &self.center
    }
}

/// Constant performance `p = 1`; the degenerate case where `R_f = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitPerformance(pub Vec<f64>);

impl PerformanceFunction for UnitPerformance {
    fn eval(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn center(&self) -> &[f64] {
        &self.0
    }
}

/// Spot-checks `p(x0) = 1` and `0 < p(x) < 1` at the given points away from `x0`.
pub fn check_performance(p: &dyn PerformanceFunction, points: &[Vec<f64>]) -> bool {
    let x0 = p.center();
    if (p.eval(x0) - 1.0).abs() > 1e-12 {
        return false;
    }
    points.iter().filter(|x| x.as_slice() != x0).all(|x| {
        let v = p.eval(x);
        v > 0.0 && v < 1.0
    })
}

/// Functional robustness `R_f(eps)` as the ensemble mean of `p`.
pub fn functional_robustness(
    ens: &SampleEnsemble,
    p: &(impl PerformanceFunction + ?Sized),
    eps: f64,
) -> Result<f64, RobustnessError> {
    if (ens.eps - eps).abs() > 1e-12 * eps.abs().max(1.0) {
        return Err(RobustnessError::EpsMismatch {
            requested: eps,
            found: ens.eps,
        });
    }
    if ens.is_empty() {
        return Err(RobustnessError::EmptyEnsemble);
    }
    if p.center().len() != ens.dim {
        return Err(RobustnessError::Dimension {
            expected: ens.dim,
            found: p.center().len(),
        });
    }
    let values: Vec<f64> = ens.rows().map(|x| p.eval(x)).collect();
    Ok(pairwise_sum(&values) / values.len() as f64)
}

/// Closed-form `R_f(eps)` under the Gaussian shape.
pub fn functional_robustness_gaussian(s: &DMatrix<f64>, eps: f64, p: &GaussianPerformance) -> f64 {
    p.gaussian_expectation(s, eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSquareDisplacement {
    /// `V(eps) = E|X - x0|^2`.
    pub v: f64,
    /// `V(eps) / eps^2`.
    pub v_over_eps2: f64,
}

pub fn mean_square_displacement(ens: &SampleEnsemble, x0: &[f64]) -> Result<MeanSquareDisplacement, RobustnessError> {
    if ens.is_empty() {
        return Err(RobustnessError::EmptyEnsemble);
    }
    if x0.len() != ens.dim {
        return Err(RobustnessError::Dimension {
            expected: ens.dim,
            found: x0.len(),
        });
    }
    let d2: Vec<f64> = ens
        .rows()
        .map(|x| x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect();
    let v = pairwise_sum(&d2) / d2.len() as f64;
    let v_over_eps2 = if ens.eps > 0.0 { v / (ens.eps * ens.eps) } else { f64::NAN };
    Ok(MeanSquareDisplacement { v, v_over_eps2 })
}

/// A differentiable Lyapunov function.
pub trait LyapunovFunction: Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// `U(x) = (x - x0)^T P (x - x0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLyapunov {
    pub x0: Vec<f64>,
    pub p: DMatrix<f64>,
}

impl QuadraticLyapunov {
    /// `P` solving `J^T P + P J = -I`, the canonical choice at a stable equilibrium.
    pub fn for_jacobian(x0: &[f64], j: &DMatrix<f64>) -> Result<Self, RobustnessError> {
        let n = x0.len();
        let p = solve_lyapunov(&j.transpose(), &DMatrix::identity(n, n))?;
        Ok(Self { x0: x0.to_vec(), p })
    }

    /// `U(x) = |x - x0|^2 / 2`.
    pub fn half_norm(x0: &[f64]) -> Self {
        let n = x0.len();
        Self {
            x0: x0.to_vec(),
            p: DMatrix::identity(n, n) * 0.5,
        }
    }
}

impl LyapunovFunction for QuadraticLyapunov {
    fn value(&self, x: &[f64]) -> f64 {
        let d = DVector::from_iterator(x.len(), x.iter().zip(&self.x0).map(|(a, b)| a - b));
        (d.transpose() * &self.p * &d)[(0, 0)]
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = DVector::from_iterator(x.len(), x.iter().zip(&self.x0).map(|(a, b)| a - b));
        let ps = &self.p + self.p.transpose();
        (ps * d).iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformIndex {
    pub alpha: f64,
    pub radius: f64,
    pub points_evaluated: usize,
    pub points_skipped: usize,
}

/// Number of radial levels in the shell grid.
const RADIAL_LEVELS: usize = 10;

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut c = 2u64;
    while primes.len() < n {
        if primes.iter().all(|p| !c.is_multiple_of(*p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// Deterministic unit directions: `±1` in one dimension, equally spaced angles
/// in two, Halton points pushed through the normal quantile otherwise.
pub fn direction_set(n: usize, count: usize) -> Vec<Vec<f64>> {
    use statrs::distribution::{ContinuousCDF, Normal};
    match n {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count.max(1))
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / count.max(1) as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let normal = Normal::new(0.0, 1.0).expect("standard normal");
            let primes = first_primes(n);
            (1..=count.max(1) as u64)
                .filter_map(|i| {
                    let v: Vec<f64> = primes
                        .iter()
                        .map(|&p| normal.inverse_cdf(radical_inverse(i, p)))
                        .collect();
                    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    (norm > 1e-12).then(|| v.iter().map(|a| a / norm).collect())
                })
                .collect()
        }
    }
}

/// Estimates the uniform-robustness index
/// `min -(∇U·f) / (|∇U| |x - x0|)` over the shell `[0.1 r, r]` around `x0`,
/// clipped below at zero.
pub fn uniform_robustness_index<F: VectorField + ?Sized>(
    field: &F,
    x0: &[f64],
    u: &dyn LyapunovFunction,
    radius: f64,
    grid_density: usize,
) -> Result<UniformIndex, RobustnessError> {
    let n = field.dim();
    if x0.len() != n {
        return Err(RobustnessError::Dimension {
            expected: n,
            found: x0.len(),
        });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(RobustnessError::BadRadius(radius));
    }
    let levels = RADIAL_LEVELS.min(grid_density.max(1));
    let dirs = direction_set(n, (grid_density / levels).max(1));
    let mut x = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut evaluated = 0;
    let mut skipped = 0;
    for l in 0..levels {
        let rho = if levels == 1 {
            radius
        } else {
            0.1 * radius + 0.9 * radius * l as f64 / (levels - 1) as f64
        };
        for d in &dirs {
            for i in 0..n {
                x[i] = x0[i] + rho * d[i];
            }
            let g = u.gradient(&x);
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(gnorm > 1e-300) {
                skipped += 1;
                continue;
            }
            field.eval_into(&x, &mut f);
            let push = -g.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>() / (gnorm * rho);
            best = best.min(push);
            evaluated += 1;
        }
    }
    if evaluated == 0 {
        return Err(RobustnessError::DegenerateGrid);
    }
    if skipped > 0 {
        log::warn!("Lyapunov gradient vanished at {skipped} grid points; skipped");
    }
    Ok(UniformIndex {
        alpha: best.max(0.0),
        radius,
        points_evaluated: evaluated,
        points_skipped: skipped,
    })
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalPoint {
    pub eps: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub wasserstein: f64,
    pub functional: Vec<FunctionalPoint>,
    pub uniform_index: UniformIndex,
}
