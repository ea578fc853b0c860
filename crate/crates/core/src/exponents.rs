//! Intersection exponent `xi` and the derived exponents `eta = xi + d - 2`
//! and `delta = d - eta`.

use serde::Serialize;

use crate::error::{invalid, Result};

pub const XI_2D: f64 = 1.25;
/// Numerical estimate; the exact three-dimensional value is unknown.
pub const XI_3D_DEFAULT: f64 = 0.58;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub d: usize,
    pub xi: f64,
}

impl Exponents {
    /// Known value for `d = 2`, default estimate for `d = 3`.
    pub fn for_dim(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Self { d, xi: XI_2D }),
            3 => Ok(Self { d, xi: XI_3D_DEFAULT }),
            _ => Err(invalid("d", format!("{d} is not supported (use 2 or 3)"))),
        }
    }

    /// Explicit `xi`; only `d = 3` accepts a value other than 5/4.
    pub fn with_xi(d: usize, xi: f64) -> Result<Self> {
        let base = Self::for_dim(d)?;
        if !(xi > 0.0 && xi < 2.0) {
            return Err(invalid("xi", format!("{xi} is outside (0, 2)")));
        }
        if d == 2 && xi != XI_2D {
            return Err(invalid("xi", "the two-dimensional exponent is fixed at 5/4"));
        }
        Ok(Self { xi, ..base })
    }

    pub fn eta(&self) -> f64 {
        self.xi + self.d as f64 - 2.0
    }

    pub fn delta(&self) -> f64 {
        self.d as f64 - self.eta()
    }

    /// Growth exponent `2 - xi` of the cut-point count in the radius.
    pub fn count_growth(&self) -> f64 {
        2.0 - self.xi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_values() {
        let e2 = Exponents::for_dim(2).unwrap();
        assert_eq!(e2.eta(), 1.25);
        assert_eq!(e2.delta(), 0.75);
        let e3 = Exponents::for_dim(3).unwrap();
        assert!((e3.eta() - 1.58).abs() < 1e-12);
        assert!((e3.delta() - 1.42).abs() < 1e-12);
        assert!(Exponents::for_dim(4).is_err());
        assert!(Exponents::with_xi(2, 1.0).is_err());
        assert_eq!(Exponents::with_xi(3, 0.6).unwrap().xi, 0.6);
    }
}
