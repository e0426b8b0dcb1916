use std::ops::{Add, Mul, Neg, Sub};

use crate::error::Result;
use crate::scalar::jet::Jet;
use crate::scalar::ScalarField;

/// Complex-valued field with real and imaginary [`ScalarField`] parts.
#[derive(Clone, Debug, PartialEq)]
pub struct CScalarField {
    pub re: ScalarField,
    pub im: ScalarField,
}

impl CScalarField {
    pub fn new(re: ScalarField, im: ScalarField) -> CScalarField {
        CScalarField { re, im }
    }

    pub fn real(re: ScalarField) -> CScalarField {
        let n = re.nvars();
        CScalarField::new(re, ScalarField::zero(n))
    }

    pub fn jet(&self, point: &[f64], order: usize) -> Result<CJet> {
        Ok(CJet::new(self.re.jet(point, order)?, self.im.jet(point, order)?))
    }

    pub fn value(&self, point: &[f64]) -> Result<(f64, f64)> {
        Ok((self.re.value(point)?, self.im.value(point)?))
    }
}

impl Add for &CScalarField {
    type Output = CScalarField;
    fn add(self, rhs: &CScalarField) -> CScalarField {
        CScalarField::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &CScalarField {
    type Output = CScalarField;
    fn sub(self, rhs: &CScalarField) -> CScalarField {
        CScalarField::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &CScalarField {
    type Output = CScalarField;
    fn mul(self, rhs: &CScalarField) -> CScalarField {
        CScalarField::new(
            &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        )
    }
}

impl Neg for &CScalarField {
    type Output = CScalarField;
    fn neg(self) -> CScalarField {
        CScalarField::new(-&self.re, -&self.im)
    }
}

/// Pointwise complex jet.
#[derive(Clone, Debug, PartialEq)]
pub struct CJet {
    pub re: Jet,
    pub im: Jet,
}

impl CJet {
    pub fn new(re: Jet, im: Jet) -> CJet {
        CJet { re, im }
    }

    pub fn real(re: Jet) -> CJet {
        let im = re.scale(0.0);
        CJet { re, im }
    }

    /// Multiplication by i.
    pub fn times_i(&self) -> CJet {
        CJet::new(-&self.im, self.re.clone())
    }

    pub fn scale(&self, s: f64) -> CJet {
        CJet::new(self.re.scale(s), self.im.scale(s))
    }

    pub fn partial(&self, var: usize) -> CJet {
        CJet::new(self.re.partial(var), self.im.partial(var))
    }

    pub fn value(&self) -> (f64, f64) {
        (self.re.value(), self.im.value())
    }

    pub fn truncate(&self, order: usize) -> CJet {
        CJet::new(self.re.truncate(order), self.im.truncate(order))
    }

    pub fn real_jet_mul(&self, r: &Jet) -> CJet {
        CJet::new(&self.re * r, &self.im * r)
    }
}

impl Add for &CJet {
    type Output = CJet;
    fn add(self, rhs: &CJet) -> CJet {
        CJet::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &CJet {
    type Output = CJet;
    fn sub(self, rhs: &CJet) -> CJet {
        CJet::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &CJet {
    type Output = CJet;
    fn mul(self, rhs: &CJet) -> CJet {
        CJet::new(
            &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        )
    }
}
