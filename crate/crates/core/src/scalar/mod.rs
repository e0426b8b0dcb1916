//! Scalar fields over a small set of independent variables (the k-set).
//!
//! A [`ScalarField`] is an immutable expression tree evaluated into
//! truncated Taylor [`Jet`]s, so every partial derivative is exact up to the
//! requested order. Finite differences only appear in test oracles.

mod complex;
mod expr;
mod implicit;
mod jet;
mod parse;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use complex::{CJet, CScalarField};
pub use expr::{Func, JetSource};
pub use implicit::solve_implicit_w;
pub use jet::{coefficient_count, sum as jet_sum, Jet, MAX_ORDER, MAX_VARS};

use crate::error::{Error, Result};
use expr::{Node, Printer};

/// Maximum k-set size.
pub const MAX_KSET: usize = 3;

/// Ordered names of the independent variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KSet {
    names: Vec<String>,
}

impl KSet {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<KSet> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        if names.len() > MAX_KSET {
            return Err(Error::InvalidKSet(format!(
                "{} variables given, at most {MAX_KSET} supported",
                names.len()
            )));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::InvalidKSet("empty variable name".into()));
            }
            if !n.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
                || !n.chars().all(|c| c.is_alphanumeric() || c == '_')
            {
                return Err(Error::InvalidKSet(format!("`{n}` is not an identifier")));
            }
            if names[..i].contains(n) {
                return Err(Error::InvalidKSet(format!("duplicate variable `{n}`")));
            }
        }
        Ok(KSet { names })
    }

    pub fn empty() -> KSet {
        KSet { names: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }
}

/// A real function of the k-set variables with exact partial derivatives.
#[derive(Clone)]
pub struct ScalarField {
    nvars: usize,
    node: Arc<Node>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.nvars).map(|i| format!("u{i}")).collect();
        match (Printer { names: &names }).print(&self.node) {
            Ok(s) => write!(f, "ScalarField({s})"),
            Err(_) => write!(f, "ScalarField(<computed>)"),
        }
    }
}

impl PartialEq for ScalarField {
    /// Structural equality of the expression trees.
    fn eq(&self, other: &ScalarField) -> bool {
        self.nvars == other.nvars && self.node == other.node
    }
}

impl ScalarField {
    fn wrap(nvars: usize, node: Arc<Node>) -> ScalarField {
        ScalarField { nvars, node }
    }

    pub fn constant(nvars: usize, value: f64) -> ScalarField {
        ScalarField::wrap(nvars, Arc::new(Node::Const(value)))
    }

    pub fn zero(nvars: usize) -> ScalarField {
        ScalarField::constant(nvars, 0.0)
    }

    pub fn variable(nvars: usize, index: usize) -> Result<ScalarField> {
        if index >= nvars {
            return Err(Error::IndexOutOfRange { index, limit: nvars });
        }
        Ok(ScalarField::wrap(nvars, Arc::new(Node::Var(index))))
    }

    /// Parses a closed-form expression over the given k-set.
    pub fn parse(kset: &KSet, src: &str) -> Result<ScalarField> {
        let node = parse::parse(src, kset.names())?;
        Ok(ScalarField::wrap(kset.len(), node))
    }

    /// Wraps arbitrary jet-producing code as a field.
    pub fn computed(nvars: usize, source: Arc<dyn JetSource>) -> ScalarField {
        ScalarField::wrap(nvars, Arc::new(Node::Computed(source)))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// True when the field is structurally a constant.
    pub fn is_constant(&self) -> bool {
        self.node.as_const().is_some()
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.node.as_const()
    }

    /// True when the field is built only from closed-form pieces.
    pub fn is_closed_form(&self) -> bool {
        !self.node.has_computed()
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.nvars {
            return Err(Error::InvalidStructure(format!(
                "point has {} coordinates, field expects {}",
                point.len(),
                self.nvars
            )));
        }
        Ok(())
    }

    /// Taylor jet of the field at `point`, truncated at `order`.
    pub fn jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        self.check_point(point)?;
        if order + self.node.depth_extra() > MAX_ORDER {
            return Err(Error::OrderTooHigh {
                requested: order + self.node.depth_extra(),
                max: MAX_ORDER,
            });
        }
        let j = self.node.eval(point, order)?;
        if !j.value().is_finite() {
            return Err(Error::Domain(format!("non-finite value at {point:?}")));
        }
        Ok(j)
    }

    pub fn value(&self, point: &[f64]) -> Result<f64> {
        Ok(self.jet(point, 0)?.value())
    }

    pub fn partial(&self, point: &[f64], var: usize) -> Result<f64> {
        self.check_var(var)?;
        Ok(self.jet(point, 1)?.first(var))
    }

    pub fn second_partial(&self, point: &[f64], i: usize, j: usize) -> Result<f64> {
        self.check_var(i)?;
        self.check_var(j)?;
        Ok(self.jet(point, 2)?.second(i, j))
    }

    fn check_var(&self, var: usize) -> Result<()> {
        if var >= self.nvars {
            return Err(Error::IndexOutOfRange {
                index: var,
                limit: self.nvars,
            });
        }
        Ok(())
    }

    /// The field `∂F/∂u_var`; its partials are F's higher partials.
    pub fn lift_partial(&self, var: usize) -> Result<ScalarField> {
        self.check_var(var)?;
        Ok(ScalarField::wrap(self.nvars, Node::partial(self.node.clone(), var)))
    }

    /// Same as [`lift_partial`](Self::lift_partial) for an index known to be valid.
    pub(crate) fn d(&self, var: usize) -> ScalarField {
        ScalarField::wrap(self.nvars, Node::partial(self.node.clone(), var))
    }

    /// Restricts evaluation to `lo < u_var < hi`; outside, evaluation fails.
    pub fn restrict(&self, var: usize, lo: f64, hi: f64) -> Result<ScalarField> {
        self.check_var(var)?;
        Ok(ScalarField::wrap(
            self.nvars,
            Arc::new(Node::Restrict {
                inner: self.node.clone(),
                var,
                lo,
                hi,
            }),
        ))
    }

    /// Text form in the expression grammar, using the k-set's names.
    pub fn to_expr_string(&self, kset: &KSet) -> Result<String> {
        (Printer { names: kset.names() }).print(&self.node)
    }

    /// Re-expresses the field over another k-set: variable `i` becomes `map[i]`.
    pub fn reindex(&self, map: &[usize], nvars: usize) -> Result<ScalarField> {
        if let Some(m) = map.iter().copied().max() {
            if m >= nvars {
                return Err(Error::IndexOutOfRange { index: m, limit: nvars });
            }
        }
        Ok(ScalarField::wrap(nvars, self.node.reindex(map)?))
    }

    /// Re-expresses the field over `to`, matching variables by name.
    pub fn rebind(&self, from: &KSet, to: &KSet) -> Result<ScalarField> {
        if let Some(m) = self.node.max_var() {
            if m >= from.len() {
                return Err(Error::IndexOutOfRange {
                    index: m,
                    limit: from.len(),
                });
            }
        }
        let map = from
            .names()
            .iter()
            .map(|n| to.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        self.reindex(&map, to.len())
    }

    pub fn apply(&self, f: Func) -> ScalarField {
        ScalarField::wrap(self.nvars, Node::call(f, self.node.clone()))
    }

    pub fn exp(&self) -> ScalarField {
        self.apply(Func::Exp)
    }

    pub fn ln(&self) -> ScalarField {
        self.apply(Func::Ln)
    }

    pub fn abs(&self) -> ScalarField {
        self.apply(Func::Abs)
    }

    pub fn powf(&self, p: f64) -> ScalarField {
        ScalarField::wrap(self.nvars, Node::pow(self.node.clone(), Arc::new(Node::Const(p))))
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self * &ScalarField::constant(self.nvars, s)
    }

    fn binary(&self, rhs: &ScalarField, op: fn(Arc<Node>, Arc<Node>) -> Arc<Node>) -> ScalarField {
        assert_eq!(self.nvars, rhs.nvars, "scalar fields over different k-sets");
        ScalarField::wrap(self.nvars, op(self.node.clone(), rhs.node.clone()))
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        ScalarField::wrap(self.nvars, Node::neg(self.node.clone()))
    }
}

impl Neg for ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        -&self
    }
}

macro_rules! field_op {
    ($tr:ident, $m:ident, $node:path) => {
        impl $tr for &ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: &ScalarField) -> ScalarField {
                self.binary(rhs, $node)
            }
        }
        impl $tr for ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: ScalarField) -> ScalarField {
                self.binary(&rhs, $node)
            }
        }
        impl $tr<&ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: &ScalarField) -> ScalarField {
                self.binary(rhs, $node)
            }
        }
        impl $tr<f64> for &ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: f64) -> ScalarField {
                self.binary(&ScalarField::constant(self.nvars, rhs), $node)
            }
        }
        impl $tr<f64> for ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: f64) -> ScalarField {
                self.binary(&ScalarField::constant(self.nvars, rhs), $node)
            }
        }
    };
}

field_op!(Add, add, Node::add);
field_op!(Sub, sub, Node::sub);
field_op!(Mul, mul, Node::mul);
field_op!(Div, div, Node::div);

/// Sum of fields over `nvars` variables (zero for an empty iterator).
pub fn field_sum(nvars: usize, items: impl IntoIterator<Item = ScalarField>) -> ScalarField {
    items.into_iter().fold(ScalarField::zero(nvars), |acc, f| &acc + &f)
}

/// Builds a closed-form field from text; shorthand for [`ScalarField::parse`].
pub fn make_closed_form(kset: &KSet, expr: &str) -> Result<ScalarField> {
    ScalarField::parse(kset, expr)
}

/// `Σ_i (∂F/∂u_i)·D_i`, the derivative of `F` along a vector field whose
/// action on the k-set variables is `D_i = X(u_i)`.
pub fn chain_rule(f: &ScalarField, d: &[ScalarField]) -> ScalarField {
    field_sum(f.nvars(), d.iter().enumerate().map(|(i, di)| &f.d(i) * di))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn kset(v: &[&str]) -> KSet {
        KSet::new(v).unwrap()
    }

    #[test]
    fn kset_validation() {
        assert!(KSet::new(&["a", "a"]).is_err());
        assert!(KSet::new(&[""]).is_err());
        assert!(KSet::new(&["a", "b", "c", "d"]).is_err());
        assert!(KSet::new(&["1x"]).is_err());
        assert_eq!(kset(&["tau", "x"]).index_of("x").unwrap(), 1);
        assert!(matches!(kset(&["tau"]).index_of("y"), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn identity_and_exponential() {
        let k = kset(&["tau"]);
        let f = make_closed_form(&k, "tau").unwrap();
        assert_eq!(f.value(&[2.0]).unwrap(), 2.0);
        assert_eq!(f.partial(&[2.0], 0).unwrap(), 1.0);
        let g = make_closed_form(&k, "e^tau").unwrap();
        assert_abs_diff_eq!(g.value(&[0.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.partial(&[0.0], 0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn lift_partial_examples() {
        let k = kset(&["tau"]);
        let sq = make_closed_form(&k, "tau^2").unwrap();
        let d = sq.lift_partial(0).unwrap();
        assert_abs_diff_eq!(d.value(&[1.5]).unwrap(), 3.0);
        assert!(sq.lift_partial(1).is_err());
        let c = ScalarField::constant(1, 4.0);
        assert!(c.lift_partial(0).unwrap().is_constant());
        assert_eq!(c.lift_partial(0).unwrap().constant_value(), Some(0.0));

        // log|sech²(x)| differentiated twice is −2 sech²(x): −2 at x = 0
        let kx = kset(&["x"]);
        let l = make_closed_form(&kx, "log(abs(sech(x)^2))").unwrap();
        let dd = l.lift_partial(0).unwrap().lift_partial(0).unwrap();
        assert_abs_diff_eq!(dd.value(&[0.0]).unwrap(), -2.0, epsilon = 1e-14);
    }

    #[test]
    fn round_trip_text() {
        let k = kset(&["tau", "x"]);
        for src in [
            "-(x^2) + 3*tau/(1 - x)",
            "exp(-tau/2)*sech(0.5*x + 0.1)^2",
            "tau^(-0.5)",
            "-tan(tanroot(tau, -0.7853981633974483))",
            "diff(sin(tau*x), x)",
            "restrict(log(tau), tau, 0, inf)",
            "2^-x",
        ] {
            let f = make_closed_form(&k, src).unwrap();
            let text = f.to_expr_string(&k).unwrap();
            let g = make_closed_form(&k, &text).unwrap();
            let p = [0.3, 0.4];
            assert_abs_diff_eq!(f.value(&p).unwrap(), g.value(&p).unwrap(), epsilon = 1e-14);
        }
    }

    #[test]
    fn restricted_field_reports_domain_error() {
        let k = kset(&["tau"]);
        let f = make_closed_form(&k, "tau^(-0.5)")
            .unwrap()
            .restrict(0, 0.0, f64::INFINITY)
            .unwrap();
        assert!(f.value(&[0.5]).is_ok());
        assert!(matches!(f.value(&[-0.5]), Err(Error::Domain(_))));
    }

    #[test]
    fn rebind_by_name() {
        let fiber = kset(&["x", "y"]);
        let total = kset(&["tau", "x", "y"]);
        let f = make_closed_form(&fiber, "x - 2*y").unwrap();
        let g = f.rebind(&fiber, &total).unwrap();
        assert_eq!(g.value(&[9.0, 1.0, 2.0]).unwrap(), -3.0);
    }
}
