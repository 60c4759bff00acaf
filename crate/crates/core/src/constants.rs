use crate::scalar::Real;

/// Speed of light in vacuum, m/s (exact by definition of the metre).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Speed of light in the requested scalar type.
#[inline]
pub fn speed_of_light<T: Real>() -> T {
    T::lit(SPEED_OF_LIGHT)
}

/// Conversion from a Gaussian standard deviation to its FWHM, `2√(2 ln 2)`.
pub fn gaussian_fwhm_factor<T: Real>() -> T {
    (T::lit(8.0) * T::LN_2()).sqrt()
}
