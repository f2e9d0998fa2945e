use crate::Real;

/// Named numerical thresholds used across the pipeline.
///
/// Every field is positive. `structure` and `sigma` are relative: the
/// structure residual of `M` is compared with `structure * max(1, |M|_F^2)`
/// and `sigma_min(A_E)` with `sigma * |T^E|_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Group-membership residual (relative to the squared norm).
    pub structure: T,
    /// Distance of `|lambda - E|` from 2 below which a channel is parabolic.
    pub parabolic: T,
    /// Invertibility threshold for the hyperbolic block, relative to `|T^E|_F`.
    pub sigma: T,
    /// Invertibility threshold for the transmission block of a scattering matrix.
    pub inv: T,
    /// Relative singularity threshold for the Lippmann-Schwinger system.
    pub singular: T,
    /// Relative Hermiticity tolerance for input matrices.
    pub hermitian: T,
    /// Singular values of the lower-left block of an S-transfer matrix at or
    /// below this value are treated as exact zeros of `sqrt(Q - 1)`.
    pub completion: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            structure: crate::real(1e-9),
            parabolic: crate::real(1e-8),
            sigma: crate::real(1e-8),
            inv: crate::real(1e-10),
            singular: crate::real(1e-10),
            hermitian: crate::real(1e-10),
            completion: crate::real(1e-12),
        }
    }
}

impl<T: Real> Tolerances<T> {
    pub const NAMES: [&'static str; 7] = [
        "structure",
        "parabolic",
        "sigma",
        "inv",
        "singular",
        "hermitian",
        "completion",
    ];

    /// Override a tolerance by name. Returns `false` for an unknown name or a
    /// non-positive value.
    pub fn set(&mut self, name: &str, value: T) -> bool {
        if value <= T::zero() {
            return false;
        }
        let slot = match name {
            "structure" => &mut self.structure,
            "parabolic" => &mut self.parabolic,
            "sigma" => &mut self.sigma,
            "inv" => &mut self.inv,
            "singular" => &mut self.singular,
            "hermitian" => &mut self.hermitian,
            "completion" => &mut self.completion,
            _ => return false,
        };
        *slot = value;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_by_name() {
        let mut tol = Tolerances::<f64>::default();
        assert!(tol.set("sigma", 1e-6));
        assert_eq!(tol.sigma, 1e-6);
        assert!(!tol.set("sigma", -1.0));
        assert!(!tol.set("bogus", 1.0));
        assert_eq!(tol.structure, 1e-9);
    }
}
