//! Vector fields, equilibria and linear stability.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Maximum damped-Newton iterations.
pub const MAX_NEWTON_ITERATIONS: usize = 200;
/// Default residual tolerance `||f(x0)||_inf` for [`find_equilibrium`].
pub const DEFAULT_EQUILIBRIUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("damped Newton did not converge after {iterations} iterations (||f||_inf = {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Newton step at iteration {iteration}; try perturbing the initial point")]
    SingularStep { iteration: usize },
    #[error("eigenvalue computation failed for the {0}x{0} Jacobian")]
    EigenFailure(usize),
    #[error("dimension mismatch: field has dimension {expected}, point has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

/// A drift field `f: R^n -> R^n`.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `f(x)` into `out`. Both slices have length [`dim`](Self::dim).
    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }

    /// Analytic Jacobian, if the field has one.
    fn analytic_jacobian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Whether the state space is the closed positive orthant.
    fn nonnegative_domain(&self) -> bool {
        false
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn analytic_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        (**self).analytic_jacobian(x)
    }
    fn nonnegative_domain(&self) -> bool {
        (**self).nonnegative_domain()
    }
}

impl<T: VectorField + ?Sized> VectorField for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn analytic_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        (**self).analytic_jacobian(x)
    }
    fn nonnegative_domain(&self) -> bool {
        (**self).nonnegative_domain()
    }
}

type EvalFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type JacFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A field assembled from closures.
pub struct FnField {
    dim: usize,
    eval: Box<EvalFn>,
    jac: Option<Box<JacFn>>,
}

impl FnField {
    pub fn new(dim: usize, eval: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Box::new(eval),
            jac: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jac = Some(Box::new(jac));
        self
    }

    /// Linear field `f(x) = M x`.
    pub fn linear(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "linear field needs a square matrix");
        let n = m.nrows();
        let m_eval = m.clone();
        Self::new(n, move |x, out| {
            for i in 0..n {
                out[i] = (0..n).map(|j| m_eval[(i, j)] * x[j]).sum();
            }
        })
        .with_jacobian(move |_| m.clone())
    }
}

impl VectorField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.eval)(x, out)
    }
    fn analytic_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        self.jac.as_ref().map(|j| j(x))
    }
}

/// `f + delta * g`, used for persistence probes.
pub struct PerturbedField<F, G> {
    pub base: F,
    pub perturbation: G,
    pub delta: f64,
}

impl<F: VectorField, G: VectorField> VectorField for PerturbedField<F, G> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.base.eval_into(x, out);
        if self.delta != 0.0 {
            let g = self.perturbation.eval(x);
            for (o, gi) in out.iter_mut().zip(g) {
                *o += self.delta * gi;
            }
        }
    }

    fn analytic_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let jf = self.base.analytic_jacobian(x)?;
        if self.delta == 0.0 {
            return Some(jf);
        }
        let jg = self.perturbation.analytic_jacobian(x)?;
        Some(jf + jg * self.delta)
    }

    fn nonnegative_domain(&self) -> bool {
        self.base.nonnegative_domain()
    }
}

/// Central finite-difference Jacobian with per-coordinate step
/// `h = max(1e-6, 1e-6 |x_i|)`.
pub fn finite_difference_jacobian<F: VectorField + ?Sized>(field: &F, x: &[f64]) -> DMatrix<f64> {
    let n = field.dim();
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let h = (1e-6 * x[j].abs()).max(1e-6);
        xp[j] = x[j] + h;
        field.eval_into(&xp, &mut fp);
        xp[j] = x[j] - h;
        field.eval_into(&xp, &mut fm);
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Jacobian of `field` at `x`: analytic when available, else finite differences.
pub fn jacobian<F: VectorField + ?Sized>(field: &F, x: &[f64]) -> DMatrix<f64> {
    field
        .analytic_jacobian(x)
        .unwrap_or_else(|| finite_difference_jacobian(field, x))
}

/// Largest real part among the eigenvalues of `j`.
pub fn spectral_abscissa(j: &DMatrix<f64>) -> Result<f64, DynamicsError> {
    assert!(j.is_square(), "spectral abscissa needs a square matrix");
    let n = j.nrows();
    if n == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    if j.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::EigenFailure(n));
    }
    let schur = nalgebra::linalg::Schur::try_new(j.clone(), f64::EPSILON, 10_000)
        .ok_or(DynamicsError::EigenFailure(n))?;
    schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .reduce(f64::max)
        .ok_or(DynamicsError::EigenFailure(n))
}

/// An equilibrium with its linearization.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub point: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub spectral_abscissa: f64,
    /// `||f(x0)||_inf` at return.
    pub residual: f64,
    pub iterations: usize,
}

impl Equilibrium {
    pub fn is_stable(&self) -> bool {
        self.spectral_abscissa < 0.0
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Locates a zero of `field` near `x_init` by damped Newton with Armijo
/// backtracking on `||f||^2`.
pub fn find_equilibrium<F: VectorField + ?Sized>(
    field: &F,
    x_init: &[f64],
    tol: f64,
) -> Result<Equilibrium, DynamicsError> {
    let n = field.dim();
    if x_init.len() != n {
        return Err(DynamicsError::DimensionMismatch {
            expected: n,
            found: x_init.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(DynamicsError::BadTolerance(tol));
    }

    let mut x = x_init.to_vec();
    let mut fx = field.eval(&x);
    let mut trial = vec![0.0; n];
    let mut f_trial = vec![0.0; n];

    for iteration in 0..=MAX_NEWTON_ITERATIONS {
        let residual = inf_norm(&fx);
        if residual <= tol {
            let jac = jacobian(field, &x);
            let spectral_abscissa = spectral_abscissa(&jac)?;
            return Ok(Equilibrium {
                point: x,
                jacobian: jac,
                spectral_abscissa,
                residual,
                iterations: iteration,
            });
        }
        if iteration == MAX_NEWTON_ITERATIONS || !residual.is_finite() {
            break;
        }

        let jac = jacobian(field, &x);
        let rhs = -DVector::from_column_slice(&fx);
        let step = jac
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or(DynamicsError::SingularStep { iteration })?;

        let merit = fx.iter().map(|v| v * v).sum::<f64>();
        let mut lambda = 1.0;
        loop {
            for i in 0..n {
                trial[i] = x[i] + lambda * step[i];
            }
            field.eval_into(&trial, &mut f_trial);
            let m: f64 = f_trial.iter().map(|v| v * v).sum();
            // Armijo: the Newton direction has directional derivative -2 * merit
            if m.is_finite() && m <= (1.0 - 1e-4 * 2.0 * lambda) * merit {
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                // accept the tiny step rather than stall; the iteration cap bounds this
                if !m.is_finite() {
                    return Err(DynamicsError::NoConvergence {
                        iterations: iteration,
                        residual,
                    });
                }
                break;
            }
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut fx, &mut f_trial);
    }

    Err(DynamicsError::NoConvergence {
        iterations: MAX_NEWTON_ITERATIONS,
        residual: inf_norm(&fx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn neg_identity(n: usize) -> FnField {
        FnField::new(n, |x, out| {
            for (o, xi) in out.iter_mut().zip(x) {
                *o = -xi;
            }
        })
    }

    #[test]
    fn linear_contraction_equilibrium() {
        let eq = find_equilibrium(&neg_identity(2), &[3.0, -2.0], 1e-10).unwrap();
        assert_abs_diff_eq!(eq.point[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(eq.point[1], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(eq.spectral_abscissa, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn affine_equilibrium() {
        let f = FnField::new(1, |x, out| out[0] = -2.0 * x[0] + 1.0);
        let eq = find_equilibrium(&f, &[0.0], 1e-10).unwrap();
        assert_abs_diff_eq!(eq.point[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn finite_difference_fallback() {
        let j = jacobian(&neg_identity(3), &[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(j, -DMatrix::identity(3, 3), epsilon = 1e-8);

        let rot = FnField::new(2, |x, out| {
            out[0] = x[1];
            out[1] = -x[0];
        });
        let j = jacobian(&rot, &[0.3, -0.1]);
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_abs_diff_eq!(j, expected, epsilon = 1e-8);
    }

    #[test]
    fn spectral_abscissa_examples() {
        assert_abs_diff_eq!(
            spectral_abscissa(&-DMatrix::<f64>::identity(3, 3)).unwrap(),
            -1.0,
            epsilon = 1e-14
        );
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_abs_diff_eq!(spectral_abscissa(&rot).unwrap(), 0.0, epsilon = 1e-14);
        let bad = DMatrix::from_element(2, 2, f64::NAN);
        assert!(spectral_abscissa(&bad).is_err());
    }

    #[test]
    fn singular_step_reported() {
        // f(x) = x^2 + 1 has no root; Newton hits f'(0) = 0 at x = 0
        let f = FnField::new(1, |x, out| out[0] = x[0] * x[0] + 1.0)
            .with_jacobian(|x| DMatrix::from_element(1, 1, 2.0 * x[0]));
        assert!(matches!(
            find_equilibrium(&f, &[0.0], 1e-10),
            Err(DynamicsError::SingularStep { iteration: 0 })
        ));
        let err = find_equilibrium(&f, &[1.0], 1e-10).unwrap_err();
        assert!(matches!(
            err,
            DynamicsError::NoConvergence { .. } | DynamicsError::SingularStep { .. }
        ));
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            find_equilibrium(&neg_identity(2), &[1.0], 1e-10),
            Err(DynamicsError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            find_equilibrium(&neg_identity(1), &[1.0], 0.0),
            Err(DynamicsError::BadTolerance(_))
        ));
    }
}
