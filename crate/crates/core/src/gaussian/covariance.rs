use alloc::format;

use crate::{Error, Matrix, Result};

/// Covariance blocks of a jointly Gaussian triple `(A, B, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTripleCovariance {
    pub ab: Matrix,
    pub bb: Matrix,
    pub bc: Matrix,
    pub ac: Matrix,
}

impl GaussianTripleCovariance {
    fn check_dims(&self) -> Result<()> {
        let (na, nb, nc) = (self.ab.rows(), self.bb.rows(), self.bc.cols());
        let ok = self.bb.cols() == nb && self.ab.cols() == nb && self.bc.rows() == nb && self.ac.rows() == na && self.ac.cols() == nc;
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!(
                "non-conformable blocks: AB {}x{}, BB {}x{}, BC {}x{}, AC {}x{}",
                self.ab.rows(),
                self.ab.cols(),
                self.bb.rows(),
                self.bb.cols(),
                self.bc.rows(),
                self.bc.cols(),
                self.ac.rows(),
                self.ac.cols()
            )))
        }
    }
}

/// `A − B − C` is a Markov chain iff `Σ_AC = Σ_AB Σ_BB⁻¹ Σ_BC`; checked
/// entrywise to within `tol`.
pub fn check_gaussian_markov(cov: &GaussianTripleCovariance, tol: f64) -> Result<bool> {
    if !(tol >= 0.0) {
        return Err(Error::arg("tolerance must be nonnegative"));
    }
    cov.check_dims()?;
    let inv = cov.bb.inverse().map_err(|e| match e {
        Error::Singular(m) => Error::arg(format!("Σ_BB is singular: {m}")),
        other => other,
    })?;
    let predicted = cov.ab.mul(&inv)?.mul(&cov.bc)?;
    Ok(predicted.max_abs_diff(&cov.ac) <= tol)
}
