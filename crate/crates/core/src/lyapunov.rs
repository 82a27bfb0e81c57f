//! Continuous Lyapunov equation `S J^T + J S + A = 0`, noise models and
//! principal-submatrix log-determinants.
//!
//! The solve uses the column-stacked Kronecker-sum form
//! `(I ⊗ J + J ⊗ I) vec(S) = -vec(A)` followed by one round of iterative
//! refinement; every returned solution carries its residual.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dynamics::{self, DynamicsError, Equilibrium};
use crate::index_set::IndexSet;

/// Largest dimension the dense Kronecker solve accepts.
pub const MAX_DENSE_DIM: usize = 40;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error("Jacobian is not stable (spectral abscissa {0:.6e} >= 0); no stationary Gaussian shape")]
    Unstable(f64),
    #[error("dimension mismatch: J is {j}x{j}, A is {a_rows}x{a_cols}")]
    Dimension { j: usize, a_rows: usize, a_cols: usize },
    #[error("dimension {0} exceeds the dense solver limit of {MAX_DENSE_DIM}")]
    TooLarge(usize),
    #[error("Kronecker system is singular")]
    Singular,
    #[error("principal submatrix on {0} is not positive definite")]
    NotPositiveDefinite(IndexSet),
    #[error("noise covariance sigma*sigma^T is singular at the equilibrium")]
    SingularNoise,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Noise matrix `sigma(x)`, `n x m` with `m >= n`.
pub trait NoiseModel: Send + Sync {
    fn dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn sigma(&self, x: &[f64]) -> DMatrix<f64>;

    /// Writes `sigma(x) * dw` into `out`.
    fn apply(&self, x: &[f64], dw: &[f64], out: &mut [f64]) {
        let s = self.sigma(x);
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..s.ncols()).map(|j| s[(i, j)] * dw[j]).sum();
        }
    }

    /// `A(x) = sigma(x) sigma(x)^T`.
    fn diffusion(&self, x: &[f64]) -> DMatrix<f64> {
        let s = self.sigma(x);
        &s * s.transpose()
    }

    fn describe(&self) -> String;
}

/// `sigma = Id`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityNoise(pub usize);

impl NoiseModel for IdentityNoise {
    fn dim(&self) -> usize {
        self.0
    }
    fn noise_dim(&self) -> usize {
        self.0
    }
    fn sigma(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.0, self.0)
    }
    fn apply(&self, _x: &[f64], dw: &[f64], out: &mut [f64]) {
        out.copy_from_slice(dw);
    }
    fn diffusion(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.0, self.0)
    }
    fn describe(&self) -> String {
        "identity".into()
    }
}

/// A state-independent noise matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantNoise(pub DMatrix<f64>);

impl ConstantNoise {
    pub fn diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn scalar(n: usize, c: f64) -> Self {
        Self(DMatrix::identity(n, n) * c)
    }
}

impl NoiseModel for ConstantNoise {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn noise_dim(&self) -> usize {
        self.0.ncols()
    }
    fn sigma(&self, _x: &[f64]) -> DMatrix<f64> {
        self.0.clone()
    }
    fn describe(&self) -> String {
        format!("constant:{:?}", self.0.as_slice())
    }
}

fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `||S J^T + J S + A||_inf`.
pub fn lyapunov_residual(j: &DMatrix<f64>, a: &DMatrix<f64>, s: &DMatrix<f64>) -> f64 {
    norm_inf(&(s * j.transpose() + j * s + a))
}

/// Residual tolerance `1e-10 (1 + ||A||_inf)`.
pub fn residual_tolerance(a: &DMatrix<f64>) -> f64 {
    1e-10 * (1.0 + norm_inf(a))
}

fn kronecker_sum(j: &DMatrix<f64>) -> DMatrix<f64> {
    let n = j.nrows();
    let mut k = DMatrix::zeros(n * n, n * n);
    // vec index of S[(r, c)] is c * n + r
    for c in 0..n {
        for r in 0..n {
            let row = c * n + r;
            // (J S)[(r, c)] = sum_m J[(r, m)] S[(m, c)]
            for m in 0..n {
                k[(row, c * n + m)] += j[(r, m)];
            }
            // (S J^T)[(r, c)] = sum_m S[(r, m)] J[(c, m)]
            for m in 0..n {
                k[(row, m * n + r)] += j[(c, m)];
            }
        }
    }
    k
}

/// Solves `S J^T + J S + A = 0` for symmetric `S`.
pub fn solve_lyapunov(j: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>, LyapunovError> {
    let n = j.nrows();
    if !j.is_square() || a.nrows() != n || a.ncols() != n {
        return Err(LyapunovError::Dimension {
            j: n,
            a_rows: a.nrows(),
            a_cols: a.ncols(),
        });
    }
    if n > MAX_DENSE_DIM {
        return Err(LyapunovError::TooLarge(n));
    }
    let abscissa = dynamics::spectral_abscissa(j)?;
    if abscissa >= 0.0 {
        return Err(LyapunovError::Unstable(abscissa));
    }

    let k = kronecker_sum(j);
    let lu = k.clone().lu();
    let rhs = -DVector::from_column_slice(a.as_slice());
    let mut v = lu.solve(&rhs).ok_or(LyapunovError::Singular)?;
    // one step of iterative refinement
    let r = &rhs - &k * &v;
    if let Some(dv) = lu.solve(&r) {
        v += dv;
    }
    let s = DMatrix::from_column_slice(n, n, v.as_slice());
    let s = (&s + s.transpose()) * 0.5;

    let residual = lyapunov_residual(j, a, &s);
    let tol = residual_tolerance(a);
    if !(residual <= tol) {
        let d = lu.u().diagonal();
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), x| {
            (lo.min(x.abs()), hi.max(x.abs()))
        });
        log::warn!(
            "ill-conditioned Lyapunov solve: residual {residual:.3e} > {tol:.3e}, condition estimate {:.3e}",
            hi / lo
        );
    }
    Ok(s)
}

/// Log-determinant of the principal submatrix `S(idx)`; zero for the empty set.
pub fn principal_logdet(s: &DMatrix<f64>, idx: &IndexSet) -> Result<f64, LyapunovError> {
    if idx.is_empty() {
        return Ok(0.0);
    }
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |r, c| s[(idx.as_slice()[r], idx.as_slice()[c])]);
    let chol = nalgebra::Cholesky::new(sub)
        .ok_or_else(|| LyapunovError::NotPositiveDefinite(idx.clone()))?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    if logdet.is_finite() {
        Ok(logdet)
    } else {
        Err(LyapunovError::NotPositiveDefinite(idx.clone()))
    }
}

/// Small-noise Gaussian shape of the stationary measure at a stable equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryShape {
    pub x0: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    /// Solution of `S J^T + J S + A = 0`; `eps^2 S` is the stationary covariance.
    pub s: DMatrix<f64>,
    pub residual: f64,
    pub spectral_abscissa: f64,
}

impl StationaryShape {
    pub fn from_parts(x0: Vec<f64>, j: DMatrix<f64>, a: DMatrix<f64>) -> Result<Self, LyapunovError> {
        let spectral_abscissa = dynamics::spectral_abscissa(&j)?;
        let s = solve_lyapunov(&j, &a)?;
        let residual = lyapunov_residual(&j, &a, &s);
        Ok(Self {
            x0,
            jacobian: j,
            diffusion: a,
            s,
            residual,
            spectral_abscissa,
        })
    }

    /// Builds the shape at `eq` under `noise`, checking `sigma sigma^T` is
    /// nonsingular there.
    pub fn at_equilibrium(eq: &Equilibrium, noise: &dyn NoiseModel) -> Result<Self, LyapunovError> {
        let a = noise.diffusion(&eq.point);
        if a.nrows() != eq.point.len() || a.ncols() != eq.point.len() {
            return Err(LyapunovError::Dimension {
                j: eq.point.len(),
                a_rows: a.nrows(),
                a_cols: a.ncols(),
            });
        }
        if nalgebra::Cholesky::new(a.clone()).is_none() {
            return Err(LyapunovError::SingularNoise);
        }
        if !eq.is_stable() {
            return Err(LyapunovError::Unstable(eq.spectral_abscissa));
        }
        Self::from_parts(eq.point.clone(), eq.jacobian.clone(), a)
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_case() {
        for n in 1..6 {
            let j = -DMatrix::<f64>::identity(n, n);
            let a = DMatrix::<f64>::identity(n, n);
            let s = solve_lyapunov(&j, &a).unwrap();
            assert_abs_diff_eq!(s, DMatrix::identity(n, n) * 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn scalar_balance() {
        let s = solve_lyapunov(&DMatrix::from_element(1, 1, -4.0), &DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_abs_diff_eq!(s[(0, 0)], 1.0 / 8.0, epsilon = 1e-15);
    }

    #[test]
    fn non_normal_residual() {
        let j = DMatrix::from_row_slice(3, 3, &[-1.0, 5.0, 0.0, 0.0, -2.0, 3.0, -0.5, 0.0, -3.0]);
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5]);
        let s = solve_lyapunov(&j, &a).unwrap();
        assert!(lyapunov_residual(&j, &a, &s) <= residual_tolerance(&a));
        assert_eq!(s, s.transpose());
    }

    #[test]
    fn refuses_unstable() {
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let err = solve_lyapunov(&j, &DMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, LyapunovError::Unstable(a) if a.abs() < 1e-12));
        assert!(err.to_string().contains("spectral abscissa"));
    }

    #[test]
    fn logdet_conventions() {
        let s = DMatrix::<f64>::identity(4, 4);
        assert_eq!(principal_logdet(&s, &IndexSet::empty()).unwrap(), 0.0);
        assert_abs_diff_eq!(principal_logdet(&s, &IndexSet::from([0, 2])).unwrap(), 0.0);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(principal_logdet(&bad, &IndexSet::from([0])).is_ok());
        match principal_logdet(&bad, &IndexSet::from([0, 1])) {
            Err(LyapunovError::NotPositiveDefinite(idx)) => assert_eq!(idx, IndexSet::from([0, 1])),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn noise_models() {
        let id = IdentityNoise(2);
        let mut out = [0.0; 2];
        id.apply(&[0.0, 0.0], &[1.5, -2.0], &mut out);
        assert_eq!(out, [1.5, -2.0]);
        let c = ConstantNoise(DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 2.0, 0.0]));
        c.apply(&[0.0, 0.0], &[1.0, 1.0, 1.0], &mut out);
        assert_eq!(out, [2.0, 2.0]);
        assert_eq!(c.diffusion(&[0.0, 0.0]), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]));
    }
}
