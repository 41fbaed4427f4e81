//! Exponentially weighted recursive least squares for the interference
//! matrix H in r_i = H_i s_i, shared inverse-correlation state across all
//! output rows (the regressor is common).

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// RLS state: channel estimate H (2N x 2N) and inverse correlation P.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub h: DMatrix<Complex64>,
    pub p: DMatrix<Complex64>,
    delta: f64,
}

impl ChannelEstimate {
    /// Identity-centered start: H = I, P = I/delta.
    pub fn new(dim: usize, delta: f64) -> Self {
        Self {
            h: DMatrix::identity(dim, dim),
            p: DMatrix::identity(dim, dim) * Complex64::new(1.0 / delta, 0.0),
            delta,
        }
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// Drops the correlation memory (fresh P) but keeps H; the documented
    /// recovery action after a divergence signal.
    pub fn reset_correlation(&mut self) {
        let dim = self.dim();
        self.p = DMatrix::identity(dim, dim) * Complex64::new(1.0 / self.delta, 0.0);
    }
}

/// One RLS update with the regression r = H s_bar:
/// k = P s / (lambda + s^H P s), H_row += (r - H s)_row k^H, P = (P - k s^H P)/lambda.
///
/// Signals divergence (caller resets P and continues) when the update goes
/// non-finite or P loses positive diagonal.
pub fn rls_update(
    est: &mut ChannelEstimate,
    r: &DVector<Complex64>,
    s_bar: &DVector<Complex64>,
    lambda: f64,
) -> Result<()> {
    let dim = est.dim();
    if r.len() != dim || s_bar.len() != dim {
        return Err(Error::Dimension(format!(
            "rls vectors must have length {dim}"
        )));
    }
    let ps = &est.p * s_bar;
    let denom = lambda + (s_bar.adjoint() * &ps)[(0, 0)].re;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::Numerical(format!("rls denominator {denom}")));
    }
    let k = &ps / Complex64::new(denom, 0.0);
    // innovation per row: e = r - H s
    let e = r - &est.h * s_bar;
    // H += e k^H
    est.h.gerc(Complex64::new(1.0, 0.0), &e, &k, Complex64::new(1.0, 0.0));
    // P = (P - k (P s)^H) / lambda, then re-symmetrize
    let psh = ps.adjoint();
    for i in 0..dim {
        for j in 0..dim {
            let v = (est.p[(i, j)] - k[i] * psh[(0, j)]) / lambda;
            est.p[(i, j)] = v;
        }
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let v = (est.p[(i, j)] + est.p[(j, i)].conj()) * 0.5;
            est.p[(i, j)] = v;
            est.p[(j, i)] = v.conj();
        }
        est.p[(i, i)] = Complex64::new(est.p[(i, i)].re, 0.0);
    }
    let finite = est.h.iter().all(|v| v.re.is_finite() && v.im.is_finite())
        && est.p.iter().all(|v| v.re.is_finite() && v.im.is_finite());
    let pd = (0..dim).all(|i| est.p[(i, i)].re > 0.0);
    if !finite || !pd {
        return Err(Error::Numerical("rls update diverged".into()));
    }
    Ok(())
}
