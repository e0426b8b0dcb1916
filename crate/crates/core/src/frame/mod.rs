//! k-dependent frames: metric components, bracket coefficients and the
//! derivative table of a frame, together with the connection and curvature
//! they determine.
//!
//! Everything downstream of [`FrameStructure`] is computed pointwise on Taylor
//! jets. A frame evaluated at order `p` yields Γ exactly at order `p − 1` and
//! the curvature tensor at order `p − 2`.

mod checks;
mod connection;
mod curvature;

use std::sync::Arc;

pub use checks::{consistency_suite, curvature_identities, permutation_invariance, twist, Roles};
pub use connection::{connection_jets, koszul_connection, ConnectionTable, GammaJets};
pub use curvature::{
    curvature, curvature_jets, sectional_curvature, sectional_from_jets, CurvatureJets, CurvatureTensor,
};

use crate::error::{Error, Result};
use crate::scalar::{chain_rule, Jet, KSet, ScalarField};

/// Threshold on `|det g|` below which the metric counts as singular.
pub const SINGULAR_METRIC: f64 = 1e-10;
/// Threshold on the plane denominator in sectional curvature.
pub const DEGENERATE_PLANE: f64 = 1e-12;

/// Metric components `g_ab`, brackets `[e_a, e_b] = C_ab^c e_c` and the
/// derivative table `D_a^i = e_a(u_i)` of an `n`-frame (`n` is 3 or 4).
#[derive(Clone, Debug, PartialEq)]
pub struct FrameStructure {
    kset: KSet,
    names: Vec<String>,
    g: Vec<ScalarField>,
    c: Vec<ScalarField>,
    d: Vec<ScalarField>,
}

/// Incremental construction of a [`FrameStructure`]. Unset entries are zero.
#[derive(Clone, Debug)]
pub struct FrameBuilder {
    s: FrameStructure,
}

impl FrameBuilder {
    /// Sets `g_ab = g_ba = field`.
    pub fn metric(mut self, a: usize, b: usize, field: ScalarField) -> Result<FrameBuilder> {
        self.s.check_index(a)?;
        self.s.check_index(b)?;
        self.s.check_field(&field)?;
        let n = self.s.n();
        self.s.g[a * n + b] = field.clone();
        self.s.g[b * n + a] = field;
        Ok(self)
    }

    /// Sets `C_ab^c = field` and `C_ba^c = −field`.
    pub fn bracket(mut self, a: usize, b: usize, c: usize, field: ScalarField) -> Result<FrameBuilder> {
        self.s.set_bracket(a, b, c, field)?;
        Ok(self)
    }

    /// Sets `D_a^i = e_a(u_i)`.
    pub fn derivative(mut self, a: usize, i: usize, field: ScalarField) -> Result<FrameBuilder> {
        self.s.set_derivative(a, i, field)?;
        Ok(self)
    }

    pub fn build(self) -> Result<FrameStructure> {
        Ok(self.s)
    }
}

impl FrameStructure {
    pub fn builder<S: AsRef<str>>(kset: &KSet, names: &[S]) -> Result<FrameBuilder> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        let n = names.len();
        if n != 3 && n != 4 {
            return Err(Error::InvalidStructure(format!("frames have 3 or 4 fields, got {n}")));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidStructure("empty frame name".into()));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidStructure(format!("duplicate frame name `{name}`")));
            }
        }
        let k = kset.len();
        let z = ScalarField::zero(k);
        Ok(FrameBuilder {
            s: FrameStructure {
                kset: kset.clone(),
                names,
                g: vec![z.clone(); n * n],
                c: vec![z.clone(); n * n * n],
                d: vec![z; n * k],
            },
        })
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn kset(&self) -> &KSet {
        &self.kset
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::InvalidStructure(format!("no frame field named `{name}`")))
    }

    pub fn g(&self, a: usize, b: usize) -> &ScalarField {
        &self.g[a * self.n() + b]
    }

    pub fn c(&self, a: usize, b: usize, c: usize) -> &ScalarField {
        let n = self.n();
        &self.c[(a * n + b) * n + c]
    }

    pub fn d(&self, a: usize, i: usize) -> &ScalarField {
        &self.d[a * self.kset.len() + i]
    }

    fn check_index(&self, a: usize) -> Result<()> {
        if a >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: a,
                limit: self.n(),
            });
        }
        Ok(())
    }

    fn check_field(&self, f: &ScalarField) -> Result<()> {
        if f.nvars() != self.kset.len() {
            return Err(Error::InvalidStructure(format!(
                "field over {} variables used in a frame over {}",
                f.nvars(),
                self.kset.len()
            )));
        }
        Ok(())
    }

    fn set_bracket(&mut self, a: usize, b: usize, c: usize, field: ScalarField) -> Result<()> {
        self.check_index(a)?;
        self.check_index(b)?;
        self.check_index(c)?;
        self.check_field(&field)?;
        if a == b {
            if field.constant_value() == Some(0.0) {
                return Ok(());
            }
            return Err(Error::InvalidStructure(format!(
                "bracket [{0},{0}] must vanish",
                self.names[a]
            )));
        }
        let n = self.n();
        self.c[(b * n + a) * n + c] = -&field;
        self.c[(a * n + b) * n + c] = field;
        Ok(())
    }

    fn set_derivative(&mut self, a: usize, i: usize, field: ScalarField) -> Result<()> {
        self.check_index(a)?;
        if i >= self.kset.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                limit: self.kset.len(),
            });
        }
        self.check_field(&field)?;
        let k = self.kset.len();
        self.d[a * k + i] = field;
        Ok(())
    }

    /// Copy with a different metric on the same frame (brackets and derivative table kept).
    pub fn with_metric(&self, g: Vec<ScalarField>) -> Result<FrameStructure> {
        let n = self.n();
        if g.len() != n * n {
            return Err(Error::InvalidStructure(format!("metric needs {} components", n * n)));
        }
        let mut out = self.clone();
        for f in &g {
            out.check_field(f)?;
        }
        out.g = g;
        Ok(out)
    }

    pub fn with_metric_component(&self, a: usize, b: usize, field: ScalarField) -> Result<FrameStructure> {
        FrameBuilder { s: self.clone() }.metric(a, b, field)?.build()
    }

    pub fn with_bracket(&self, a: usize, b: usize, c: usize, field: ScalarField) -> Result<FrameStructure> {
        let mut out = self.clone();
        out.set_bracket(a, b, c, field)?;
        Ok(out)
    }

    pub fn with_derivative(&self, a: usize, i: usize, field: ScalarField) -> Result<FrameStructure> {
        let mut out = self.clone();
        out.set_derivative(a, i, field)?;
        Ok(out)
    }

    /// Relabels the frame: new field `i` is old field `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<FrameStructure> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParameters(format!(
                "{perm:?} is not a permutation of 0..{n}"
            )));
        }
        let k = self.kset.len();
        let mut out = self.clone();
        out.names = perm.iter().map(|&p| self.names[p].clone()).collect();
        for a in 0..n {
            for b in 0..n {
                out.g[a * n + b] = self.g(perm[a], perm[b]).clone();
                for c in 0..n {
                    out.c[(a * n + b) * n + c] = self.c(perm[a], perm[b], perm[c]).clone();
                }
            }
            for i in 0..k {
                out.d[a * k + i] = self.d(perm[a], i).clone();
            }
        }
        Ok(out)
    }

    /// `e_a(F) = Σ_i (∂F/∂u_i) D_a^i`.
    pub fn directional_derivative(&self, a: usize, f: &ScalarField) -> Result<ScalarField> {
        self.check_index(a)?;
        self.check_field(f)?;
        let k = self.kset.len();
        Ok(chain_rule(f, &self.d[a * k..(a + 1) * k]))
    }

    /// Constant-coefficient vector field `Σ v_a e_a` applied to `F`.
    pub fn vector_derivative(&self, v: &[f64], f: &ScalarField) -> Result<ScalarField> {
        let mut out = ScalarField::zero(self.kset.len());
        for (a, &va) in v.iter().enumerate() {
            if va != 0.0 {
                out = &out + &self.directional_derivative(a, f)?.scale(va);
            }
        }
        Ok(out)
    }

    /// All structure functions as jets of the given order at `point`.
    pub fn jets(&self, point: &[f64], order: usize) -> Result<FrameJets> {
        let ev = |fs: &[ScalarField]| fs.iter().map(|f| f.jet(point, order)).collect::<Result<Vec<_>>>();
        Ok(FrameJets {
            n: self.n(),
            k: self.kset.len(),
            order,
            g: ev(&self.g)?,
            c: ev(&self.c)?,
            d: ev(&self.d)?,
        })
    }

    /// Structure as shared pointer, for computed-field views.
    pub(crate) fn shared(&self) -> Arc<FrameStructure> {
        Arc::new(self.clone())
    }
}

/// Pointwise jets of a [`FrameStructure`].
#[derive(Clone, Debug)]
pub struct FrameJets {
    pub n: usize,
    pub k: usize,
    pub order: usize,
    g: Vec<Jet>,
    c: Vec<Jet>,
    d: Vec<Jet>,
}

impl FrameJets {
    pub fn g(&self, a: usize, b: usize) -> &Jet {
        &self.g[a * self.n + b]
    }

    pub fn c(&self, a: usize, b: usize, c: usize) -> &Jet {
        &self.c[(a * self.n + b) * self.n + c]
    }

    pub fn d(&self, a: usize, i: usize) -> &Jet {
        &self.d[a * self.k + i]
    }

    /// Zero jet of the given order over the k-set variables.
    pub fn zero(&self, order: usize) -> Jet {
        Jet::constant(self.k, order, 0.0).expect("order within bounds")
    }

    /// Directional derivative `e_a(J)`; the result has one order less than `J`.
    pub fn dir(&self, a: usize, j: &Jet) -> Jet {
        let out = j.order().saturating_sub(1);
        (0..self.k).fold(self.zero(out), |acc, i| &acc + &(&j.partial(i) * self.d(a, i)))
    }

    /// Metric value matrix at the expansion point.
    pub fn metric_values(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |a, b| self.g(a, b).value())
    }

    /// Inverse metric as jets, by Gauss–Jordan elimination with partial pivoting.
    pub fn inverse_metric(&self, point: &[f64]) -> Result<Vec<Jet>> {
        invert_jets(self.n, &self.g, point)
    }
}

/// Inverse of an `n × n` jet matrix (row-major).
pub fn invert_jets(n: usize, m: &[Jet], point: &[f64]) -> Result<Vec<Jet>> {
    let det = nalgebra::DMatrix::from_fn(n, n, |a, b| m[a * n + b].value()).determinant();
    if !(det.abs() >= SINGULAR_METRIC) {
        return Err(Error::SingularMetric {
            point: point.to_vec(),
            det: det.abs(),
        });
    }
    let nv = m[0].nvars();
    let order = m.iter().map(Jet::order).min().unwrap_or(0);
    let mut a: Vec<Jet> = m.to_vec();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|i| Jet::constant(nv, order, if i / n == i % n { 1.0 } else { 0.0 }).expect("valid order"))
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r * n + col].value().abs().total_cmp(&a[s * n + col].value().abs()))
            .expect("nonempty range");
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
                inv.swap(pivot * n + j, col * n + j);
            }
        }
        let p = a[col * n + col].recip()?;
        for j in 0..n {
            a[col * n + j] = &a[col * n + j] * &p;
            inv[col * n + j] = &inv[col * n + j] * &p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r * n + col].clone();
            if factor.max_abs_coefficient() == 0.0 {
                continue;
            }
            for j in 0..n {
                a[r * n + j] = &a[r * n + j] - &(&factor * &a[col * n + j]);
                inv[r * n + j] = &inv[r * n + j] - &(&factor * &inv[col * n + j]);
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::make_closed_form;
    use approx::assert_abs_diff_eq;

    fn warped_like() -> FrameStructure {
        let k = KSet::new(&["tau"]).unwrap();
        let f = |s: &str| make_closed_form(&k, s).unwrap();
        FrameStructure::builder(&k, &["k", "T", "x", "y"])
            .unwrap()
            .metric(0, 1, f("1"))
            .unwrap()
            .metric(1, 1, f("-1"))
            .unwrap()
            .metric(2, 2, f("1"))
            .unwrap()
            .metric(3, 3, f("1"))
            .unwrap()
            .derivative(0, 0, f("1"))
            .unwrap()
            .derivative(1, 0, f("-1"))
            .unwrap()
            .build()
            .unwrap()
    }

    #[test]
    fn directional_derivative_through_table() {
        let s = warped_like();
        let k = s.kset().clone();
        let tau = make_closed_form(&k, "tau").unwrap();
        let dk = s.directional_derivative(0, &tau).unwrap();
        assert_eq!(dk.value(&[0.3]).unwrap(), 1.0);
        let c = ScalarField::constant(1, 2.5);
        assert!(s.directional_derivative(0, &c).unwrap().is_constant());
        assert!(s.directional_derivative(4, &tau).is_err());
    }

    #[test]
    fn builder_enforces_antisymmetry_and_names() {
        let k = KSet::new(&["x"]).unwrap();
        let one = ScalarField::constant(1, 1.0);
        let s = FrameStructure::builder(&k, &["a", "b", "c"])
            .unwrap()
            .bracket(0, 1, 2, one.clone())
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(s.c(1, 0, 2).value(&[0.0]).unwrap(), -1.0);
        assert!(FrameStructure::builder(&k, &["a", "a", "c"]).is_err());
        assert!(FrameStructure::builder(&k, &["a", "b"]).is_err());
        assert!(FrameStructure::builder(&k, &["a", "b", "c"])
            .unwrap()
            .bracket(1, 1, 0, one)
            .is_err());
    }

    #[test]
    fn jet_inverse_of_nondiagonal_metric() {
        let k = KSet::new(&["tau"]).unwrap();
        let s = warped_like()
            .with_metric_component(2, 2, make_closed_form(&k, "exp(tau)").unwrap())
            .unwrap();
        let fj = s.jets(&[0.4], 2).unwrap();
        let inv = fj.inverse_metric(&[0.4]).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = fj.zero(2);
                for c in 0..4 {
                    acc = &acc + &(fj.g(a, c) * &inv[c * 4 + b]);
                }
                let want = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(acc.value(), want, epsilon = 1e-14);
                assert_abs_diff_eq!(acc.first(0), 0.0, epsilon = 1e-14);
                assert_abs_diff_eq!(acc.second(0, 0), 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn singular_metric_rejected() {
        let k = KSet::new(&["tau"]).unwrap();
        let s = FrameStructure::builder(&k, &["k", "T", "x", "y"])
            .unwrap()
            .build()
            .unwrap();
        let fj = s.jets(&[0.0], 1).unwrap();
        assert!(matches!(fj.inverse_metric(&[0.0]), Err(Error::SingularMetric { .. })));
    }
}
