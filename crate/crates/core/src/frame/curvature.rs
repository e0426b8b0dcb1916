use std::sync::Arc;

use crate::error::{Error, Result};
use crate::frame::{connection_jets, ConnectionTable, FrameJets, FrameStructure, GammaJets, DEGENERATE_PLANE};
use crate::scalar::{Jet, JetSource, ScalarField};

/// Pointwise curvature `R(e_a, e_b) e_c = R_abc^d e_d`, Ricci and scalar curvature.
#[derive(Clone, Debug)]
pub struct CurvatureJets {
    pub n: usize,
    pub order: usize,
    r: Vec<Jet>,
    ricci: Vec<Jet>,
    scalar: Jet,
}

impl CurvatureJets {
    pub fn r(&self, a: usize, b: usize, c: usize, d: usize) -> &Jet {
        let n = self.n;
        &self.r[((a * n + b) * n + c) * n + d]
    }

    /// `R(e_a, e_b, e_c, e_d) = g(R(e_a, e_b) e_c, e_d)`.
    pub fn lowered(&self, fj: &FrameJets, a: usize, b: usize, c: usize, d: usize) -> Jet {
        (0..self.n).fold(fj.zero(self.order), |acc, e| &acc + &(self.r(a, b, c, e) * fj.g(e, d)))
    }

    /// `Ric_bc = R_abc^a`.
    pub fn ricci(&self, b: usize, c: usize) -> &Jet {
        &self.ricci[b * self.n + c]
    }

    pub fn scalar(&self) -> &Jet {
        &self.scalar
    }

    /// Largest absolute value among all tensor components.
    pub fn max_abs(&self) -> f64 {
        self.r.iter().map(|j| j.value().abs()).fold(0.0, f64::max)
    }
}

/// `R_abc^e = e_a Γ_bc^e − e_b Γ_ac^e + Γ_bc^d Γ_ad^e − Γ_ac^d Γ_bd^e − C_ab^d Γ_dc^e`,
/// of order `gj.order − 1`.
pub fn curvature_jets(fj: &FrameJets, gj: &GammaJets, point: &[f64]) -> Result<CurvatureJets> {
    let n = fj.n;
    let order = gj.order.saturating_sub(1);
    let mut r = Vec::with_capacity(n * n * n * n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for e in 0..n {
                    let mut acc = &fj.dir(a, gj.get(b, c, e)) - &fj.dir(b, gj.get(a, c, e));
                    for d in 0..n {
                        let t = &(&(gj.get(b, c, d) * gj.get(a, d, e)) - &(gj.get(a, c, d) * gj.get(b, d, e)))
                            - &(fj.c(a, b, d) * gj.get(d, c, e));
                        acc = &acc + &t;
                    }
                    r.push(acc);
                }
            }
        }
    }
    let mut ricci = Vec::with_capacity(n * n);
    for b in 0..n {
        for c in 0..n {
            let mut acc = fj.zero(order);
            for a in 0..n {
                acc = &acc + &r[((a * n + b) * n + c) * n + a];
            }
            ricci.push(acc);
        }
    }
    let ginv = fj.inverse_metric(point)?;
    let mut scalar = fj.zero(order);
    for b in 0..n {
        for c in 0..n {
            scalar = &scalar + &(&ginv[b * n + c] * &ricci[b * n + c]);
        }
    }
    Ok(CurvatureJets {
        n,
        order,
        r,
        ricci,
        scalar,
    })
}

/// Curvature of a frame structure's Levi-Civita connection.
#[derive(Clone, Debug)]
pub struct CurvatureTensor {
    frame: Arc<FrameStructure>,
}

#[derive(Clone, Copy, Debug)]
enum Component {
    Riemann(usize, usize, usize, usize),
    Ricci(usize, usize),
    Scalar,
    Sectional(usize, usize),
}

#[derive(Debug)]
struct CurvatureComponent {
    frame: Arc<FrameStructure>,
    which: Component,
}

impl JetSource for CurvatureComponent {
    fn eval(&self, point: &[f64], order: usize) -> Result<Jet> {
        let fj = self.frame.jets(point, order + 2)?;
        let gj = connection_jets(&fj, point)?;
        let cj = curvature_jets(&fj, &gj, point)?;
        Ok(match self.which {
            Component::Riemann(a, b, c, d) => cj.r(a, b, c, d).clone(),
            Component::Ricci(a, b) => cj.ricci(a, b).clone(),
            Component::Scalar => cj.scalar().clone(),
            Component::Sectional(a, b) => sectional_from_jets(&fj, &cj, a, b)?,
        })
    }
}

impl CurvatureTensor {
    pub fn frame(&self) -> &FrameStructure {
        &self.frame
    }

    /// Frame jets, connection and curvature at `point`; curvature exact up to `order`.
    pub fn at(&self, point: &[f64], order: usize) -> Result<(FrameJets, GammaJets, CurvatureJets)> {
        let fj = self.frame.jets(point, order + 2)?;
        let gj = connection_jets(&fj, point)?;
        let cj = curvature_jets(&fj, &gj, point)?;
        Ok((fj, gj, cj))
    }

    fn view(&self, which: Component) -> ScalarField {
        ScalarField::computed(
            self.frame.kset().len(),
            Arc::new(CurvatureComponent {
                frame: self.frame.clone(),
                which,
            }),
        )
    }

    fn check(&self, idx: &[usize]) -> Result<()> {
        let n = self.frame.n();
        match idx.iter().find(|&&i| i >= n) {
            Some(&i) => Err(Error::IndexOutOfRange { index: i, limit: n }),
            None => Ok(()),
        }
    }

    /// `R_abc^d` as a field.
    pub fn r(&self, a: usize, b: usize, c: usize, d: usize) -> Result<ScalarField> {
        self.check(&[a, b, c, d])?;
        Ok(self.view(Component::Riemann(a, b, c, d)))
    }

    pub fn ricci(&self, a: usize, b: usize) -> Result<ScalarField> {
        self.check(&[a, b])?;
        Ok(self.view(Component::Ricci(a, b)))
    }

    pub fn scalar(&self) -> ScalarField {
        self.view(Component::Scalar)
    }
}

/// Curvature tensor of `Γ`'s frame.
pub fn curvature(conn: &ConnectionTable) -> CurvatureTensor {
    CurvatureTensor {
        frame: conn.frame().shared(),
    }
}

/// `K(e_a, e_b) = R(e_a, e_b, e_b, e_a) / (g_aa g_bb − g_ab²)` from pointwise jets.
pub fn sectional_from_jets(fj: &FrameJets, cj: &CurvatureJets, a: usize, b: usize) -> Result<Jet> {
    let order = cj.order;
    let denom = &(&fj.g(a, a).truncate(order) * fj.g(b, b)) - &(fj.g(a, b) * fj.g(a, b));
    if !(denom.value().abs() >= DEGENERATE_PLANE) {
        return Err(Error::DegeneratePlane {
            a,
            b,
            denom: denom.value().abs(),
        });
    }
    cj.lowered(fj, a, b, b, a).div(&denom)
}

/// Sectional curvature of the plane `span(e_a, e_b)` as a field.
pub fn sectional_curvature(r: &CurvatureTensor, a: usize, b: usize) -> Result<ScalarField> {
    r.check(&[a, b])?;
    if a == b {
        return Err(Error::DegeneratePlane { a, b, denom: 0.0 });
    }
    Ok(r.view(Component::Sectional(a, b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{make_closed_form, KSet};
    use approx::assert_abs_diff_eq;

    fn sphere() -> FrameStructure {
        let k = KSet::new(&["th"]).unwrap();
        let f = |s: &str| make_closed_form(&k, s).unwrap();
        FrameStructure::builder(&k, &["e1", "e2", "e3"])
            .unwrap()
            .metric(0, 0, f("1"))
            .unwrap()
            .metric(1, 1, f("1"))
            .unwrap()
            .metric(2, 2, f("1"))
            .unwrap()
            .bracket(0, 1, 1, f("-cot(th)"))
            .unwrap()
            .derivative(0, 0, f("1"))
            .unwrap()
            .build()
            .unwrap()
    }

    #[test]
    fn unit_sphere_has_curvature_one() {
        let s = sphere();
        let r = curvature(&ConnectionTable::new(&s));
        let k = sectional_curvature(&r, 0, 1).unwrap();
        for th in [0.4, 1.0, 2.0] {
            assert_abs_diff_eq!(k.value(&[th]).unwrap(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.scalar().value(&[th]).unwrap(), 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.ricci(0, 0).unwrap().value(&[th]).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(
            sectional_curvature(&r, 0, 2).unwrap().value(&[0.7]).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn null_plane_is_degenerate() {
        let k = KSet::new(&["u"]).unwrap();
        let one = ScalarField::constant(1, 1.0);
        let s = FrameStructure::builder(&k, &["k", "T", "x", "y"])
            .unwrap()
            .metric(0, 1, one.clone())
            .unwrap()
            .metric(2, 2, one.clone())
            .unwrap()
            .metric(3, 3, one)
            .unwrap()
            .build()
            .unwrap();
        let r = curvature(&ConnectionTable::new(&s));
        let kx = sectional_curvature(&r, 0, 2).unwrap();
        assert!(matches!(kx.value(&[0.0]), Err(Error::DegeneratePlane { .. })));
        assert!(sectional_curvature(&r, 1, 1).is_err());
    }
}
