//! Scalar types used to evaluate constraint components: plain `f64` for values and a
//! single-tangent dual number for forward-mode derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::Result;

pub trait Number:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    fn value(&self) -> f64;
    /// Applies a univariate function given its value and derivative at `self.value()`.
    fn lift(&self, value: f64, derivative: f64) -> Self;
    fn is_finite(&self) -> bool;

    /// Euclidean norm. At the origin the zero subgradient is used.
    fn norm(args: &[Self]) -> Result<Self> {
        let mut acc = Self::constant(0.0);
        for a in args {
            acc = acc + a.clone() * a.clone();
        }
        let v = acc.value();
        if v == 0.0 {
            return Ok(Self::constant(0.0));
        }
        let s = v.sqrt();
        Ok(acc.lift(s, 0.5 / s))
    }
}

impl Number for f64 {
    #[inline]
    fn constant(c: f64) -> Self {
        c
    }

    #[inline]
    fn value(&self) -> f64 {
        *self
    }

    #[inline]
    fn lift(&self, value: f64, _derivative: f64) -> Self {
        value
    }

    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// `value + tangent·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub tangent: f64,
}

impl Dual {
    pub fn new(value: f64, tangent: f64) -> Self {
        Self { value, tangent }
    }

    pub fn variable(value: f64) -> Self {
        Self { value, tangent: 1.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.value + rhs.value, self.tangent + rhs.tangent)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.value - rhs.value, self.tangent - rhs.tangent)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(
            self.value * rhs.value,
            self.tangent * rhs.value + self.value * rhs.tangent,
        )
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let q = self.value / rhs.value;
        Dual::new(q, (self.tangent - q * rhs.tangent) / rhs.value)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.value, -self.tangent)
    }
}

impl Number for Dual {
    fn constant(c: f64) -> Self {
        Dual::new(c, 0.0)
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn lift(&self, value: f64, derivative: f64) -> Self {
        // a zero tangent stays zero even where the derivative is unbounded
        let tangent = if self.tangent == 0.0 { 0.0 } else { derivative * self.tangent };
        Dual::new(value, tangent)
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.tangent.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::variable(3.0);
        let c = Dual::constant(2.0);
        let y = x * x * c;
        assert_eq!(y, Dual::new(18.0, 12.0));
        let q = c / x;
        assert!((q.tangent + 2.0 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn norm_derivative() {
        let a = Dual::new(3.0, 1.0);
        let b = Dual::new(4.0, 0.0);
        let n = Dual::norm(&[a, b]).unwrap();
        assert_eq!(n.value, 5.0);
        assert!((n.tangent - 0.6).abs() < 1e-15);
        let zero = Dual::norm(&[Dual::new(0.0, 1.0)]).unwrap();
        assert_eq!(zero, Dual::new(0.0, 0.0));
    }
}
