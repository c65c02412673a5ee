use num_complex::Complex64;
use std::f64::consts::PI;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Principal argument in `(-π, π]`; the negative real axis maps to `+π`
/// regardless of the sign of a zero imaginary part.
pub fn arg0(z: Complex64) -> f64 {
    if z.im == 0.0 && z.re < 0.0 {
        return PI;
    }
    let a = z.im.atan2(z.re);
    if a <= -PI + 1e-15 {
        PI
    } else {
        a
    }
}

/// Principal logarithm `Ln|z| + i Arg_0 z`, with `Ln z = Ln|z| + iπ` on `R_-`.
pub fn ln0(z: Complex64) -> Complex64 {
    Complex64::new(z.norm().ln(), arg0(z))
}

/// A complex number stored as `mantissa · e^{log_scale}`.
///
/// Used wherever exponential polynomials are evaluated far from the real
/// axis; the phase is carried entirely by the mantissa.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn new(mantissa: Complex64, log_scale: f64) -> Self {
        Scaled {
            mantissa,
            log_scale,
        }
        .normalized()
    }

    pub fn from_complex(z: Complex64) -> Self {
        Scaled::new(z, 0.0)
    }

    pub fn zero() -> Self {
        Scaled {
            mantissa: Complex64::new(0.0, 0.0),
            log_scale: 0.0,
        }
    }

    fn normalized(self) -> Self {
        let n = self.mantissa.norm();
        if n == 0.0 || !n.is_finite() {
            return self;
        }
        let l = n.ln();
        Scaled {
            mantissa: self.mantissa / n,
            log_scale: self.log_scale + l,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.norm() == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.mantissa.re.is_finite() && self.mantissa.im.is_finite() && self.log_scale.is_finite()
    }

    /// Natural log of the modulus (`-∞` for zero).
    pub fn ln_norm(&self) -> f64 {
        let n = self.mantissa.norm();
        if n == 0.0 {
            f64::NEG_INFINITY
        } else {
            n.ln() + self.log_scale
        }
    }

    pub fn arg(&self) -> f64 {
        self.mantissa.im.atan2(self.mantissa.re)
    }

    /// Plain value; overflows to infinity when the scale exceeds the f64 range.
    pub fn to_complex(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }

    pub fn mul(&self, other: &Scaled) -> Scaled {
        Scaled::new(
            self.mantissa * other.mantissa,
            self.log_scale + other.log_scale,
        )
    }

    /// `self / other` as a plain complex number (used for Newton steps).
    pub fn ratio(&self, other: &Scaled) -> Complex64 {
        self.mantissa / other.mantissa * (self.log_scale - other.log_scale).exp()
    }
}
