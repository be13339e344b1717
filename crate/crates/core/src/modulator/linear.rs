//! Exact symbolic form of the linearized loop.
//!
//! Transfer functions are ratios of polynomials in `z^-1` whose
//! coefficients are themselves integer polynomials in `a = k_DCO/fs`, so
//! composing blocks and comparing results involves no rounding.

use std::fmt::Debug;

pub trait Ring: Clone + PartialEq + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }
}

impl Ring for i64 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
}

/// Polynomial with coefficients lowest power first, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T>(Vec<T>);

impl<T: Ring> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(Ring::is_zero) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The indeterminate itself.
    pub fn var() -> Self {
        Self::new(vec![T::zero(), T::one()])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.0
    }

    pub fn coeff(&self, i: usize) -> T {
        self.0.get(i).cloned().unwrap_or_else(T::zero)
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::one(), |acc, _| acc.mul(self))
    }
}

impl<T: Ring> Ring for Poly<T> {
    fn zero() -> Self {
        Poly(Vec::new())
    }
    fn one() -> Self {
        Poly(vec![T::one()])
    }
    fn add(&self, rhs: &Self) -> Self {
        let n = self.0.len().max(rhs.0.len());
        Self::new((0..n).map(|i| self.coeff(i).add(&rhs.coeff(i))).collect())
    }
    fn mul(&self, rhs: &Self) -> Self {
        if self.0.is_empty() || rhs.0.is_empty() {
            return Self::zero();
        }
        let mut out = vec![T::zero(); self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Self::new(out)
    }
    fn neg(&self) -> Self {
        Poly(self.0.iter().map(Ring::neg).collect())
    }
}

impl Poly<i64> {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rational<T> {
    pub num: Poly<T>,
    pub den: Poly<T>,
}

impl<T: Ring> Rational<T> {
    pub fn new(num: Poly<T>, den: Poly<T>) -> Self {
        Self { num, den }
    }

    pub fn series(&self, rhs: &Self) -> Self {
        Self::new(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }

    /// `1 / (1 + self)`: error-to-output of a unity negative feedback loop.
    pub fn sensitivity(&self) -> Self {
        Self::new(self.den.clone(), self.den.add(&self.num))
    }

    /// Same rational function (cross-multiplied polynomials agree).
    pub fn equivalent(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

/// Coefficient ring: integer polynomials in `a = k_DCO/fs`.
pub type Coeff = Poly<i64>;
/// Polynomials in `z^-1` over [`Coeff`].
pub type ZPoly = Poly<Coeff>;

fn zc(coeffs: &[&[i64]]) -> ZPoly {
    Poly::new(coeffs.iter().map(|c| Poly::new(c.to_vec())).collect())
}

/// Loop blocks: the DCO integrates the subtractor output for one period and
/// is sampled, `a z^-1 / (1 - z^-1)`; quantization noise adds at the
/// sampler; unity feedback; first difference `1 - z^-1` at the output.
pub fn ntf_from_blocks() -> Rational<Coeff> {
    let a_zinv = zc(&[&[], &[0, 1]]);
    let integrator = Rational::new(a_zinv, zc(&[&[1], &[-1]]));
    let difference = Rational::new(zc(&[&[1], &[-1]]), zc(&[&[1]]));
    integrator.sensitivity().series(&difference)
}

/// `(1 - z^-1)^2 / (1 - (1 - a) z^-1)`.
pub fn ntf_closed_form() -> Rational<Coeff> {
    Rational::new(zc(&[&[1], &[-2], &[1]]), zc(&[&[1], &[-1, 1]]))
}

/// Numeric `(num, den)` coefficients in `z^-1` for a given `a`.
pub fn evaluate(tf: &Rational<Coeff>, a: f64) -> (Vec<f64>, Vec<f64>) {
    let f = |p: &ZPoly| p.coeffs().iter().map(|c| c.eval(a)).collect();
    (f(&tf.num), f(&tf.den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_reduce_to_closed_form() {
        let derived = ntf_from_blocks();
        let closed = ntf_closed_form();
        assert!(derived.equivalent(&closed));
        // Here the reduction is already in lowest terms.
        assert_eq!(derived, closed);
    }

    #[test]
    fn wrong_pole_is_detected() {
        let wrong = Rational::new(zc(&[&[1], &[-2], &[1]]), zc(&[&[1], &[-1, 2]]));
        assert!(!ntf_from_blocks().equivalent(&wrong));
    }

    #[test]
    fn numeric_evaluation() {
        let (num, den) = evaluate(&ntf_closed_form(), 0.390_625);
        assert_eq!(num, vec![1.0, -2.0, 1.0]);
        assert!((den[1] + 0.609_375).abs() < 1e-15);
    }

    #[test]
    fn poly_arithmetic() {
        let x = Poly::<i64>::var();
        let p = x.add(&Poly::one()).pow(3);
        assert_eq!(p.coeffs(), &[1, 3, 3, 1]);
        assert!(p.sub(&p).is_zero());
    }
}
