//! Truncated multivariate Taylor polynomials.
//!
//! A [`Jet`] of order `n` in `k` variables stores the Taylor coefficients
//! `F_α = ∂^α F / α!` for every multi-index with `|α| ≤ n`. Coefficients are
//! laid out in graded order, so the coefficients of a lower-order truncation
//! are a prefix of the full vector. Arithmetic on jets is exact up to the
//! truncation order; differentiating a jet lowers its order by one.

use std::ops::{Add, Mul, Neg, Sub};

use once_cell::sync::OnceCell;

use crate::error::{Error, Result};

/// Largest number of independent variables a jet may carry.
pub const MAX_VARS: usize = 4;
/// Largest truncation order supported by the precomputed tables.
pub const MAX_ORDER: usize = 8;

struct Layout {
    degree: Vec<usize>,
    /// `counts[o]` = number of monomials of total degree ≤ o.
    counts: Vec<usize>,
    monomials: Vec<[u8; MAX_VARS]>,
    /// `sum[i * len + j]` = index of monomial_i + monomial_j (usize::MAX when too large).
    sum: Vec<usize>,
    /// `shift[i * MAX_VARS + v]` = index of monomial_i + e_v.
    shift: Vec<usize>,
}

impl Layout {
    fn build(nvars: usize) -> Layout {
        let mut monomials: Vec<[u8; MAX_VARS]> = Vec::new();
        let mut degree = Vec::new();
        let mut counts = Vec::new();
        for deg in 0..=MAX_ORDER {
            let mut level = Vec::new();
            enumerate(nvars, deg, 0, [0; MAX_VARS], &mut level);
            // lexicographic with the first variable most significant
            level.sort_by(|a, b| b.cmp(a));
            for m in level {
                monomials.push(m);
                degree.push(deg);
            }
            counts.push(monomials.len());
        }
        let len = monomials.len();
        let find = |m: &[u8; MAX_VARS]| monomials.iter().position(|x| x == m);
        let mut sum = vec![usize::MAX; len * len];
        for i in 0..len {
            for j in 0..len {
                if degree[i] + degree[j] > MAX_ORDER {
                    continue;
                }
                let mut m = monomials[i];
                for v in 0..MAX_VARS {
                    m[v] += monomials[j][v];
                }
                sum[i * len + j] = find(&m).expect("monomial present");
            }
        }
        let mut shift = vec![usize::MAX; len * MAX_VARS];
        for i in 0..len {
            if degree[i] == MAX_ORDER {
                continue;
            }
            for v in 0..nvars {
                let mut m = monomials[i];
                m[v] += 1;
                shift[i * MAX_VARS + v] = find(&m).expect("monomial present");
            }
        }
        Layout {
            degree,
            counts,
            monomials,
            sum,
            shift,
        }
    }
}

fn enumerate(nvars: usize, rem: usize, var: usize, cur: [u8; MAX_VARS], out: &mut Vec<[u8; MAX_VARS]>) {
    if nvars == 0 {
        if rem == 0 {
            out.push(cur);
        }
        return;
    }
    if var == nvars - 1 {
        let mut m = cur;
        m[var] = rem as u8;
        out.push(m);
        return;
    }
    for e in 0..=rem {
        let mut m = cur;
        m[var] = e as u8;
        enumerate(nvars, rem - e, var + 1, m, out);
    }
}

static LAYOUTS: [OnceCell<Layout>; MAX_VARS + 1] = [
    OnceCell::new(),
    OnceCell::new(),
    OnceCell::new(),
    OnceCell::new(),
    OnceCell::new(),
];

fn layout(nvars: usize) -> &'static Layout {
    LAYOUTS[nvars].get_or_init(|| Layout::build(nvars))
}

/// Number of Taylor coefficients of a jet in `nvars` variables truncated at `order`.
pub fn coefficient_count(nvars: usize, order: usize) -> usize {
    layout(nvars).counts[order]
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    nvars: usize,
    order: usize,
    coef: Vec<f64>,
}

fn check_dims(nvars: usize, order: usize) -> Result<()> {
    if nvars > MAX_VARS {
        return Err(Error::IndexOutOfRange {
            index: nvars,
            limit: MAX_VARS,
        });
    }
    if order > MAX_ORDER {
        return Err(Error::OrderTooHigh {
            requested: order,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: f64) -> Result<Jet> {
        check_dims(nvars, order)?;
        let mut coef = vec![0.0; coefficient_count(nvars, order)];
        coef[0] = value;
        Ok(Jet { nvars, order, coef })
    }

    /// The coordinate function `u_var` expanded around `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Result<Jet> {
        if var >= nvars {
            return Err(Error::IndexOutOfRange {
                index: var,
                limit: nvars,
            });
        }
        let mut j = Jet::constant(nvars, order, value)?;
        if order >= 1 {
            // degree-one monomials follow the constant term in variable order
            j.coef[1 + var] = 1.0;
        }
        Ok(j)
    }

    /// Builds a jet from raw Taylor coefficients in graded layout.
    pub fn from_coefficients(nvars: usize, order: usize, coef: Vec<f64>) -> Result<Jet> {
        check_dims(nvars, order)?;
        let n = coefficient_count(nvars, order);
        if coef.len() != n {
            return Err(Error::InvalidStructure(format!(
                "expected {n} jet coefficients, got {}",
                coef.len()
            )));
        }
        Ok(Jet { nvars, order, coef })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn value(&self) -> f64 {
        self.coef[0]
    }

    /// First partial derivative ∂F/∂u_var at the expansion point.
    pub fn first(&self, var: usize) -> f64 {
        if self.order < 1 || var >= self.nvars {
            return 0.0;
        }
        self.coef[1 + var]
    }

    /// Second partial derivative ∂²F/∂u_i∂u_j at the expansion point.
    pub fn second(&self, i: usize, j: usize) -> f64 {
        if self.order < 2 || i >= self.nvars || j >= self.nvars {
            return 0.0;
        }
        let l = layout(self.nvars);
        let len = l.monomials.len();
        let idx = l.sum[(1 + i) * len + (1 + j)];
        let c = self.coef[idx];
        if i == j {
            2.0 * c
        } else {
            c
        }
    }

    /// Mixed partial ∂^α F for an arbitrary multi-index (α! · coefficient).
    pub fn derivative(&self, multi: &[u8]) -> f64 {
        let l = layout(self.nvars);
        let mut m = [0u8; MAX_VARS];
        m[..multi.len()].copy_from_slice(multi);
        let deg: usize = m.iter().map(|&e| e as usize).sum();
        if deg > self.order {
            return 0.0;
        }
        let idx = l.monomials[..self.coef.len()]
            .iter()
            .position(|x| *x == m)
            .expect("monomial within order");
        let fact: f64 = m.iter().map(|&e| factorial(e as usize)).product();
        self.coef[idx] * fact
    }

    pub fn is_constant(&self) -> bool {
        self.coef[1..].iter().all(|&c| c == 0.0)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            nvars: self.nvars,
            order,
            coef: self.coef[..coefficient_count(self.nvars, order)].to_vec(),
        }
    }

    /// ∂F/∂u_var as a jet of one lower order. A jet of order 0 yields an
    /// order-0 zero (its derivative information is exhausted).
    pub fn partial(&self, var: usize) -> Jet {
        let out_order = self.order.saturating_sub(1);
        let n = coefficient_count(self.nvars, out_order);
        let mut coef = vec![0.0; n];
        if self.order == 0 || var >= self.nvars {
            return Jet {
                nvars: self.nvars,
                order: out_order,
                coef,
            };
        }
        let l = layout(self.nvars);
        for (i, c) in coef.iter_mut().enumerate() {
            let up = l.shift[i * MAX_VARS + var];
            let e = l.monomials[up][var] as f64;
            *c = e * self.coef[up];
        }
        Jet {
            nvars: self.nvars,
            order: out_order,
            coef,
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            nvars: self.nvars,
            order: self.order,
            coef: self.coef.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coef[0] += s;
        out
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        assert_eq!(self.nvars, other.nvars, "jet variable count mismatch");
        let order = self.order.min(other.order);
        let n = coefficient_count(self.nvars, order);
        Jet {
            nvars: self.nvars,
            order,
            coef: (0..n).map(|i| f(self.coef[i], other.coef[i])).collect(),
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        assert_eq!(self.nvars, other.nvars, "jet variable count mismatch");
        let order = self.order.min(other.order);
        let l = layout(self.nvars);
        let len = l.monomials.len();
        let n = l.counts[order];
        let mut coef = vec![0.0; n];
        for i in 0..n {
            let a = self.coef[i];
            if a == 0.0 {
                continue;
            }
            let rem = l.counts[order - l.degree[i]];
            let row = &l.sum[i * len..i * len + rem];
            for (j, &k) in row.iter().enumerate() {
                coef[k] += a * other.coef[j];
            }
        }
        Jet {
            nvars: self.nvars,
            order,
            coef,
        }
    }

    /// Evaluates `Σ_n c_n (F − F₀)^n`, i.e. composes a univariate function with
    /// Taylor coefficients `c` (at `F₀`) with this jet.
    pub fn compose(&self, c: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.coef[0] = 0.0;
        let top = self.order.min(c.len().saturating_sub(1));
        let mut acc = Jet {
            nvars: self.nvars,
            order: self.order,
            coef: vec![0.0; self.coef.len()],
        };
        acc.coef[0] = c.get(top).copied().unwrap_or(0.0);
        for n in (0..top).rev() {
            acc = acc.product(&delta);
            acc.coef[0] += c[n];
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet> {
        let v = self.value();
        if v == 0.0 || !v.is_finite() {
            return Err(Error::Domain(format!("division by {v}")));
        }
        let c: Vec<f64> = (0..=self.order)
            .map(|n| {
                let s = if n % 2 == 0 { 1.0 } else { -1.0 };
                s / v.powi(n as i32 + 1)
            })
            .collect();
        Ok(self.compose(&c))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        Ok(self * &other.recip()?)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let c: Vec<f64> = (0..=self.order).map(|n| e / factorial(n)).collect();
        self.compose(&c)
    }

    pub fn ln(&self) -> Result<Jet> {
        let v = self.value();
        if v <= 0.0 {
            return Err(Error::Domain(format!("log of non-positive value {v}")));
        }
        let mut c = vec![v.ln()];
        for n in 1..=self.order {
            let s = if n % 2 == 1 { 1.0 } else { -1.0 };
            c.push(s / (n as f64 * v.powi(n as i32)));
        }
        Ok(self.compose(&c))
    }

    pub fn sin(&self) -> Jet {
        let v = self.value();
        let (s, co) = v.sin_cos();
        let cyc = [s, co, -s, -co];
        let c: Vec<f64> = (0..=self.order).map(|n| cyc[n % 4] / factorial(n)).collect();
        self.compose(&c)
    }

    pub fn cos(&self) -> Jet {
        let v = self.value();
        let (s, co) = v.sin_cos();
        let cyc = [co, -s, -co, s];
        let c: Vec<f64> = (0..=self.order).map(|n| cyc[n % 4] / factorial(n)).collect();
        self.compose(&c)
    }

    pub fn sinh(&self) -> Jet {
        let (a, b) = (self.exp(), self.neg().exp());
        (&a - &b).scale(0.5)
    }

    pub fn cosh(&self) -> Jet {
        let (a, b) = (self.exp(), self.neg().exp());
        (&a + &b).scale(0.5)
    }

    /// `F^p` for a real exponent; integer exponents allow any base.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        if p == 0.0 {
            return Jet::constant(self.nvars, self.order, 1.0);
        }
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            return self.powi(p as i32);
        }
        let v = self.value();
        if v <= 0.0 {
            return Err(Error::Domain(format!(
                "non-integer power {p} of non-positive value {v}"
            )));
        }
        let mut c = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for n in 0..=self.order {
            c.push(binom * v.powf(p - n as f64));
            binom *= (p - n as f64) / (n as f64 + 1.0);
        }
        Ok(self.compose(&c))
    }

    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut acc = Jet::constant(self.nvars, self.order, 1.0)?;
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        Ok(acc)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        if self.value() <= 0.0 {
            return Err(Error::Domain(format!("sqrt of non-positive value {}", self.value())));
        }
        self.powf(0.5)
    }

    /// |F|; undefined (for derivatives) where F vanishes.
    pub fn abs(&self) -> Result<Jet> {
        let v = self.value();
        if v == 0.0 {
            return Err(Error::Domain("abs is not differentiable at 0".into()));
        }
        Ok(if v < 0.0 { self.neg() } else { self.clone() })
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coef.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'a>(items: impl IntoIterator<Item = &'a Jet>) -> Option<Jet> {
    let mut it = items.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, j| &acc + j))
}
