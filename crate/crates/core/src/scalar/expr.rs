//! Expression trees backing [`ScalarField`](super::ScalarField).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::implicit::implicit_series;
use crate::scalar::jet::{Jet, MAX_ORDER};

/// Elementary functions of one argument understood by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sec,
    Csc,
    Cot,
    Sinh,
    Cosh,
    Tanh,
    Sech,
    Csch,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sec => "sec",
            Func::Csc => "csc",
            Func::Cot => "cot",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sech => "sech",
            Func::Csch => "csch",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sec" => Func::Sec,
            "csc" => Func::Csc,
            "cot" => Func::Cot,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "sech" => Func::Sech,
            "csch" => Func::Csch,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub(crate) fn apply(self, x: &Jet) -> Result<Jet> {
        match self {
            Func::Exp => Ok(x.exp()),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Tan => x.sin().div(&x.cos()),
            Func::Sec => x.cos().recip(),
            Func::Csc => x.sin().recip(),
            Func::Cot => x.cos().div(&x.sin()),
            Func::Sinh => Ok(x.sinh()),
            Func::Cosh => Ok(x.cosh()),
            Func::Tanh => x.sinh().div(&x.cosh()),
            Func::Sech => x.cosh().recip(),
            Func::Csch => x.sinh().recip(),
            Func::Abs => x.abs(),
        }
    }
}

/// A field whose jets are produced by arbitrary code (e.g. a linear solve).
pub trait JetSource: Send + Sync + fmt::Debug {
    fn eval(&self, point: &[f64], order: usize) -> Result<Jet>;
}

#[derive(Clone, Debug)]
pub(crate) enum Node {
    Const(f64),
    Var(usize),
    Neg(Arc<Node>),
    Add(Arc<Node>, Arc<Node>),
    Sub(Arc<Node>, Arc<Node>),
    Mul(Arc<Node>, Arc<Node>),
    Div(Arc<Node>, Arc<Node>),
    Pow(Arc<Node>, Arc<Node>),
    Call(Func, Arc<Node>),
    TanRoot {
        arg: Arc<Node>,
        seed: f64,
    },
    Partial {
        inner: Arc<Node>,
        var: usize,
    },
    Restrict {
        inner: Arc<Node>,
        var: usize,
        lo: f64,
        hi: f64,
    },
    Computed(Arc<dyn JetSource>),
}

impl PartialEq for Node {
    fn eq(&self, other: &Node) -> bool {
        use Node::*;
        match (self, other) {
            (Const(a), Const(b)) => a == b,
            (Var(a), Var(b)) => a == b,
            (Neg(a), Neg(b)) => a == b,
            (Add(a, b), Add(c, d))
            | (Sub(a, b), Sub(c, d))
            | (Mul(a, b), Mul(c, d))
            | (Div(a, b), Div(c, d))
            | (Pow(a, b), Pow(c, d)) => a == c && b == d,
            (Call(f, a), Call(g, b)) => f == g && a == b,
            (TanRoot { arg: a, seed: s }, TanRoot { arg: b, seed: t }) => a == b && s == t,
            (Partial { inner: a, var: v }, Partial { inner: b, var: w }) => a == b && v == w,
            (
                Restrict {
                    inner: a,
                    var: v,
                    lo: l1,
                    hi: h1,
                },
                Restrict {
                    inner: b,
                    var: w,
                    lo: l2,
                    hi: h2,
                },
            ) => a == b && v == w && l1 == l2 && h1 == h2,
            (Computed(a), Computed(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Node {
    pub(crate) fn as_const(&self) -> Option<f64> {
        match self {
            Node::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub(crate) fn neg(a: Arc<Node>) -> Arc<Node> {
        match &*a {
            Node::Const(v) => Arc::new(Node::Const(-v)),
            Node::Neg(inner) => inner.clone(),
            _ => Arc::new(Node::Neg(a)),
        }
    }

    pub(crate) fn add(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Arc::new(Node::Const(x + y)),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Arc::new(Node::Add(a, b)),
        }
    }

    pub(crate) fn sub(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Arc::new(Node::Const(x - y)),
            (Some(x), _) if x == 0.0 => Node::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Arc::new(Node::Sub(a, b)),
        }
    }

    pub(crate) fn mul(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Arc::new(Node::Const(x * y)),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Arc::new(Node::Const(0.0)),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Node::neg(b),
            (_, Some(y)) if y == -1.0 => Node::neg(a),
            _ => Arc::new(Node::Mul(a, b)),
        }
    }

    pub(crate) fn div(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Arc::new(Node::Const(x / y)),
            (Some(x), _) if x == 0.0 => Arc::new(Node::Const(0.0)),
            (_, Some(y)) if y == 1.0 => a,
            _ => Arc::new(Node::Div(a, b)),
        }
    }

    pub(crate) fn pow(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if x > 0.0 || y.fract() == 0.0 => Arc::new(Node::Const(x.powf(y))),
            (_, Some(y)) if y == 1.0 => a,
            (_, Some(y)) if y == 0.0 => Arc::new(Node::Const(1.0)),
            _ => Arc::new(Node::Pow(a, b)),
        }
    }

    pub(crate) fn call(f: Func, a: Arc<Node>) -> Arc<Node> {
        if let Some(x) = a.as_const() {
            if let Ok(j) = Jet::constant(0, 0, x).and_then(|j| f.apply(&j)) {
                return Arc::new(Node::Const(j.value()));
            }
        }
        Arc::new(Node::Call(f, a))
    }

    pub(crate) fn partial(a: Arc<Node>, var: usize) -> Arc<Node> {
        match &*a {
            Node::Const(_) => Arc::new(Node::Const(0.0)),
            Node::Var(v) => Arc::new(Node::Const(if *v == var { 1.0 } else { 0.0 })),
            _ => Arc::new(Node::Partial { inner: a, var }),
        }
    }

    /// Largest extra jet order requested below this node (nested partials).
    pub(crate) fn depth_extra(&self) -> usize {
        use Node::*;
        match self {
            Const(_) | Var(_) | Computed(_) => 0,
            Neg(a) | Call(_, a) | TanRoot { arg: a, .. } | Restrict { inner: a, .. } => a.depth_extra(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.depth_extra().max(b.depth_extra()),
            Partial { inner, .. } => 1 + inner.depth_extra(),
        }
    }

    pub(crate) fn has_computed(&self) -> bool {
        use Node::*;
        match self {
            Computed(_) => true,
            Const(_) | Var(_) => false,
            Neg(a) | Call(_, a) | TanRoot { arg: a, .. } | Restrict { inner: a, .. } | Partial { inner: a, .. } => {
                a.has_computed()
            }
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.has_computed() || b.has_computed(),
        }
    }

    pub(crate) fn max_var(&self) -> Option<usize> {
        use Node::*;
        match self {
            Var(v) => Some(*v),
            Partial { inner, var } => Some(inner.max_var().map_or(*var, |m| m.max(*var))),
            Restrict { inner, var, .. } => Some(inner.max_var().map_or(*var, |m| m.max(*var))),
            Const(_) | Computed(_) => None,
            Neg(a) | Call(_, a) | TanRoot { arg: a, .. } => a.max_var(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub(crate) fn reindex(&self, map: &[usize]) -> Result<Arc<Node>> {
        use Node::*;
        let r = |n: &Arc<Node>| n.reindex(map);
        let mv = |v: usize| {
            map.get(v).copied().ok_or(Error::IndexOutOfRange {
                index: v,
                limit: map.len(),
            })
        };
        Ok(Arc::new(match self {
            Const(v) => Const(*v),
            Var(v) => Var(mv(*v)?),
            Neg(a) => Neg(r(a)?),
            Add(a, b) => Add(r(a)?, r(b)?),
            Sub(a, b) => Sub(r(a)?, r(b)?),
            Mul(a, b) => Mul(r(a)?, r(b)?),
            Div(a, b) => Div(r(a)?, r(b)?),
            Pow(a, b) => Pow(r(a)?, r(b)?),
            Call(f, a) => Call(*f, r(a)?),
            TanRoot { arg, seed } => TanRoot {
                arg: r(arg)?,
                seed: *seed,
            },
            Partial { inner, var } => Partial {
                inner: r(inner)?,
                var: mv(*var)?,
            },
            Restrict { inner, var, lo, hi } => Restrict {
                inner: r(inner)?,
                var: mv(*var)?,
                lo: *lo,
                hi: *hi,
            },
            Computed(_) => return Err(Error::NotSerializable("computed fields cannot be re-indexed".into())),
        }))
    }

    pub(crate) fn eval(&self, point: &[f64], order: usize) -> Result<Jet> {
        use Node::*;
        let nv = point.len();
        match self {
            Const(v) => Jet::constant(nv, order, *v),
            Var(i) => Jet::variable(nv, order, *i, point[*i]),
            Neg(a) => Ok(-a.eval(point, order)?),
            Add(a, b) => Ok(&a.eval(point, order)? + &b.eval(point, order)?),
            Sub(a, b) => Ok(&a.eval(point, order)? - &b.eval(point, order)?),
            Mul(a, b) => Ok(&a.eval(point, order)? * &b.eval(point, order)?),
            Div(a, b) => a.eval(point, order)?.div(&b.eval(point, order)?),
            Pow(a, b) => {
                let base = a.eval(point, order)?;
                if let Some(p) = b.as_const() {
                    base.powf(p)
                } else {
                    let e = b.eval(point, order)?;
                    if e.is_constant() {
                        base.powf(e.value())
                    } else {
                        Ok((&base.ln()? * &e).exp())
                    }
                }
            }
            Call(f, a) => f.apply(&a.eval(point, order)?),
            TanRoot { arg, seed } => {
                let t = arg.eval(point, order)?;
                let series = implicit_series(t.value(), *seed, order)?;
                Ok(t.compose(&series))
            }
            Partial { inner, var } => {
                if order + 1 > MAX_ORDER {
                    return Err(Error::OrderTooHigh {
                        requested: order + 1,
                        max: MAX_ORDER,
                    });
                }
                Ok(inner.eval(point, order + 1)?.partial(*var))
            }
            Restrict { inner, var, lo, hi } => {
                let x = point[*var];
                if !(x > *lo && x < *hi) {
                    return Err(Error::Domain(format!(
                        "variable #{var} = {x} outside the admissible range ({lo}, {hi})"
                    )));
                }
                inner.eval(point, order)
            }
            Computed(src) => {
                let j = src.eval(point, order)?;
                Ok(j.truncate(order))
            }
        }
    }
}

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn fmt_const(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

pub(crate) struct Printer<'a> {
    pub names: &'a [String],
}

impl Printer<'_> {
    fn prec(node: &Node) -> u8 {
        match node {
            Node::Const(v) if *v < 0.0 => PREC_NEG,
            Node::Add(..) | Node::Sub(..) => PREC_ADD,
            Node::Mul(..) | Node::Div(..) => PREC_MUL,
            Node::Neg(_) => PREC_NEG,
            Node::Pow(..) => PREC_POW,
            _ => PREC_ATOM,
        }
    }

    fn wrap(&self, node: &Node, min: u8) -> Result<String> {
        let s = self.print(node)?;
        Ok(if Printer::prec(node) < min { format!("({s})") } else { s })
    }

    fn name(&self, v: usize) -> Result<&str> {
        self.names.get(v).map(|s| s.as_str()).ok_or(Error::IndexOutOfRange {
            index: v,
            limit: self.names.len(),
        })
    }

    pub fn print(&self, node: &Node) -> Result<String> {
        use Node::*;
        Ok(match node {
            Const(v) => fmt_const(*v),
            Var(v) => self.name(*v)?.to_string(),
            Neg(a) => format!("-{}", self.wrap(a, PREC_POW)?),
            Add(a, b) => format!("{} + {}", self.wrap(a, PREC_ADD)?, self.wrap(b, PREC_MUL)?),
            Sub(a, b) => format!("{} - {}", self.wrap(a, PREC_ADD)?, self.wrap(b, PREC_MUL)?),
            Mul(a, b) => format!("{}*{}", self.wrap(a, PREC_MUL)?, self.wrap(b, PREC_NEG + 1)?),
            Div(a, b) => format!("{}/{}", self.wrap(a, PREC_MUL)?, self.wrap(b, PREC_NEG + 1)?),
            Pow(a, b) => format!("{}^{}", self.wrap(a, PREC_ATOM)?, self.wrap(b, PREC_ATOM)?),
            Call(f, a) => format!("{}({})", f.name(), self.print(a)?),
            TanRoot { arg, seed } => format!("tanroot({}, {})", self.print(arg)?, fmt_const(*seed)),
            Partial { inner, var } => format!("diff({}, {})", self.print(inner)?, self.name(*var)?),
            Restrict { inner, var, lo, hi } => format!(
                "restrict({}, {}, {}, {})",
                self.print(inner)?,
                self.name(*var)?,
                fmt_const(*lo),
                fmt_const(*hi)
            ),
            Computed(_) => return Err(Error::NotSerializable("computed field has no text form".into())),
        })
    }
}
