//! LMMSE soft-interference cancellation over the 2N window with joint
//! extraction of the center symbol pair.
//!
//! With z = r - H s_bar (center-pair means excluded from the cancellation),
//! Sigma = diag(soft variances, center pair at the prior variance) and
//! C = H Sigma H^H + sigma^2 I, the estimator is
//!
//!   w = C^{-1} H e_c sigma_c^2 ,   shat = w^H z ,
//!   M = sigma_c^2 (H e_c)^H C^{-1} (H e_c)   (2x2, Hermitian PSD).
//!
//! Reducing each polarization to the scalar model shat = m s + eta with
//! m = M_kk (real) absorbs the cross-polarization term into the noise:
//! var(eta) = sigma_c^2 m (1 - m). Those scalars drive the bit-metric
//! demapper; the 2x2 M and eta covariance remain available on the output.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

/// Scalar equivalent channel of one polarization after equalization.
#[derive(Debug, Clone, Copy)]
pub struct EquivalentModel {
    /// Real coupling coefficient (0..1).
    pub m: f64,
    /// Total variance of the complex residual noise.
    pub eta_var: f64,
}

/// Full LMMSE output for one time index.
#[derive(Debug, Clone)]
pub struct LmmseOutput {
    pub shat_x: Complex64,
    pub shat_y: Complex64,
    pub model_x: EquivalentModel,
    pub model_y: EquivalentModel,
    /// 2x2 coupling matrix of the center pair.
    pub coupling: Matrix2<Complex64>,
    /// 2x2 covariance of the equivalent noise eta.
    pub eta_cov: Matrix2<Complex64>,
    /// The Hermitian solve needed a ridge to go through.
    pub regularized: bool,
}

/// Precomputed solve for one window position, reusable across a stride.
#[derive(Debug, Clone)]
pub struct LmmseFilter {
    /// w^H rows for the two outputs (2 x 2N).
    w_adj: DMatrix<Complex64>,
    pub coupling: Matrix2<Complex64>,
    pub eta_cov: Matrix2<Complex64>,
    pub model_x: EquivalentModel,
    pub model_y: EquivalentModel,
    pub regularized: bool,
}

impl LmmseFilter {
    /// Builds the filter from the channel estimate, the window's soft
    /// variances (center pair overridden by the prior variance), and the
    /// additive noise variance.
    pub fn design(
        h: &DMatrix<Complex64>,
        variances: &[f64],
        center_x: usize,
        center_y: usize,
        prior_var: f64,
        noise_var: f64,
    ) -> Result<Self> {
        let dim = h.nrows();
        if variances.len() != dim {
            return Err(Error::Dimension("variance vector length".into()));
        }
        if !(noise_var > 0.0) {
            return Err(Error::Numerical(format!(
                "noise variance {noise_var} must be positive"
            )));
        }
        // C = H Sigma H^H + sigma^2 I, Sigma diagonal
        let mut h_scaled = h.clone();
        for j in 0..dim {
            let v = if j == center_x || j == center_y {
                prior_var
            } else {
                variances[j].max(0.0)
            };
            let s = Complex64::new(v, 0.0);
            for i in 0..dim {
                h_scaled[(i, j)] *= s;
            }
        }
        let mut c = &h_scaled * h.adjoint();
        for i in 0..dim {
            c[(i, i)] += Complex64::new(noise_var, 0.0);
        }
        // a = H e_c: the two center columns
        let a = DMatrix::from_fn(dim, 2, |i, j| {
            h[(i, if j == 0 { center_x } else { center_y })]
        });
        let (solved, regularized) = match nalgebra::linalg::Cholesky::new(c.clone()) {
            Some(chol) => (chol.solve(&a), false),
            None => {
                for i in 0..dim {
                    c[(i, i)] += Complex64::new(1e-9, 0.0);
                }
                let chol = nalgebra::linalg::Cholesky::new(c).ok_or_else(|| {
                    Error::Numerical("lmmse covariance not positive definite".into())
                })?;
                (chol.solve(&a), true)
            }
        };
        // M = sigma_c^2 A^H C^{-1} A
        let m_full = a.adjoint() * &solved * Complex64::new(prior_var, 0.0);
        let coupling = Matrix2::new(
            m_full[(0, 0)],
            m_full[(0, 1)],
            m_full[(1, 0)],
            m_full[(1, 1)],
        );
        // eta covariance: sigma_c^2 (M - M M^H)
        let mm = coupling * coupling.adjoint();
        let eta_cov = (coupling - mm) * Complex64::new(prior_var, 0.0);
        let scalar = |k: usize| -> EquivalentModel {
            let m = coupling[(k, k)].re.clamp(0.0, 1.0 - 1e-12);
            EquivalentModel {
                m,
                eta_var: (prior_var * m * (1.0 - m)).max(1e-300),
            }
        };
        // w^H = sigma_c^2 (C^{-1} A)^H
        let w_adj = solved.adjoint() * Complex64::new(prior_var, 0.0);
        Ok(Self {
            w_adj,
            coupling,
            eta_cov,
            model_x: scalar(0),
            model_y: scalar(1),
            regularized,
        })
    }

    /// Applies the filter to the cancelled observation z = r - H s_bar
    /// (center means already excluded from s_bar).
    pub fn apply(&self, z: &DVector<Complex64>) -> (Complex64, Complex64) {
        let out = &self.w_adj * z;
        (out[0], out[1])
    }
}

/// One-shot equalization of a window: soft-interference cancellation plus
/// center-pair LMMSE extraction.
///
/// `means`/`variances` describe the window's soft symbols in window order;
/// the center-pair means are excluded from the cancellation internally.
pub fn lmmse_equalize(
    r_window: &DVector<Complex64>,
    h: &DMatrix<Complex64>,
    means: &DVector<Complex64>,
    variances: &[f64],
    center_x: usize,
    center_y: usize,
    prior_var: f64,
    noise_var: f64,
) -> Result<LmmseOutput> {
    let filter = LmmseFilter::design(h, variances, center_x, center_y, prior_var, noise_var)?;
    let z = cancelled_observation(r_window, h, means, center_x, center_y);
    let (shat_x, shat_y) = filter.apply(&z);
    Ok(LmmseOutput {
        shat_x,
        shat_y,
        model_x: filter.model_x,
        model_y: filter.model_y,
        coupling: filter.coupling,
        eta_cov: filter.eta_cov,
        regularized: filter.regularized,
    })
}

/// z = r - H s_bar with the center-pair means zeroed.
pub fn cancelled_observation(
    r_window: &DVector<Complex64>,
    h: &DMatrix<Complex64>,
    means: &DVector<Complex64>,
    center_x: usize,
    center_y: usize,
) -> DVector<Complex64> {
    let mut masked = means.clone();
    masked[center_x] = Complex64::new(0.0, 0.0);
    masked[center_y] = Complex64::new(0.0, 0.0);
    r_window - h * masked
}
