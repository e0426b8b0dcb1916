use std::sync::Arc;

use crate::error::{Error, Result};
use crate::frame::{FrameJets, FrameStructure, SINGULAR_METRIC};
use crate::grid::Grid;
use crate::scalar::{Jet, JetSource, ScalarField};

/// Frame Christoffel coefficients at a point: `∇_{e_a} e_b = Γ_ab^c e_c`.
#[derive(Clone, Debug)]
pub struct GammaJets {
    pub n: usize,
    pub order: usize,
    gamma: Vec<Jet>,
}

impl GammaJets {
    pub fn get(&self, a: usize, b: usize, c: usize) -> &Jet {
        &self.gamma[(a * self.n + b) * self.n + c]
    }

    /// Vector `∇_{e_a} e_b` as its coefficient values.
    pub fn values(&self, a: usize, b: usize) -> Vec<f64> {
        (0..self.n).map(|c| self.get(a, b, c).value()).collect()
    }
}

/// Solves the Koszul identity
/// `2 g(∇_a e_b, e_c) = e_a g_bc + e_b g_ac − e_c g_ab + g([a,b],c) − g([a,c],b) − g([b,c],a)`
/// against the metric. The result has order `fj.order − 1`.
pub fn connection_jets(fj: &FrameJets, point: &[f64]) -> Result<GammaJets> {
    let n = fj.n;
    let ginv = fj.inverse_metric(point)?;
    let order = fj.order.saturating_sub(1);
    let mut koszul = Vec::with_capacity(n * n * n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut k = &(&fj.dir(a, fj.g(b, c)) + &fj.dir(b, fj.g(a, c))) - &fj.dir(c, fj.g(a, b));
                for e in 0..n {
                    let t = &(&(fj.c(a, b, e) * fj.g(e, c)) - &(fj.c(a, c, e) * fj.g(e, b)))
                        - &(fj.c(b, c, e) * fj.g(e, a));
                    k = &k + &t;
                }
                koszul.push(k);
            }
        }
    }
    let mut gamma = Vec::with_capacity(n * n * n);
    for a in 0..n {
        for b in 0..n {
            for d in 0..n {
                let mut acc = fj.zero(order);
                for c in 0..n {
                    acc = &acc + &(&ginv[d * n + c] * &koszul[(a * n + b) * n + c]);
                }
                gamma.push(acc.scale(0.5));
            }
        }
    }
    Ok(GammaJets { n, order, gamma })
}

/// Levi-Civita connection of a frame structure.
#[derive(Clone, Debug)]
pub struct ConnectionTable {
    frame: Arc<FrameStructure>,
}

#[derive(Debug)]
struct GammaComponent {
    frame: Arc<FrameStructure>,
    index: (usize, usize, usize),
}

impl JetSource for GammaComponent {
    fn eval(&self, point: &[f64], order: usize) -> Result<Jet> {
        let fj = self.frame.jets(point, order + 1)?;
        let (a, b, c) = self.index;
        Ok(connection_jets(&fj, point)?.get(a, b, c).clone())
    }
}

impl ConnectionTable {
    /// Connection of `s` without checking nondegeneracy; singular points fail on evaluation.
    pub fn new(s: &FrameStructure) -> ConnectionTable {
        ConnectionTable { frame: s.shared() }
    }

    pub fn frame(&self) -> &FrameStructure {
        &self.frame
    }

    /// All coefficients at `point`, exact up to `order`.
    pub fn at(&self, point: &[f64], order: usize) -> Result<GammaJets> {
        connection_jets(&self.frame.jets(point, order + 1)?, point)
    }

    /// `Γ_ab^c` as a scalar field.
    pub fn gamma(&self, a: usize, b: usize, c: usize) -> Result<ScalarField> {
        let n = self.frame.n();
        if a >= n || b >= n || c >= n {
            return Err(Error::IndexOutOfRange {
                index: a.max(b).max(c),
                limit: n,
            });
        }
        Ok(ScalarField::computed(
            self.frame.kset().len(),
            Arc::new(GammaComponent {
                frame: self.frame.clone(),
                index: (a, b, c),
            }),
        ))
    }
}

/// Levi-Civita connection, after confirming `|det g| > 1e-10` on every grid point.
pub fn koszul_connection(s: &FrameStructure, grid: &Grid) -> Result<ConnectionTable> {
    grid.map(|p| {
        let det = s.jets(p, 0)?.metric_values().determinant();
        if !(det.abs() >= SINGULAR_METRIC) {
            return Err(Error::SingularMetric {
                point: p.to_vec(),
                det: det.abs(),
            });
        }
        Ok(())
    })?;
    Ok(ConnectionTable::new(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{make_closed_form, KSet};
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_torus_frame_has_zero_connection() {
        let k = KSet::new(&["x"]).unwrap();
        let mut b = FrameStructure::builder(&k, &["e0", "e1", "e2", "e3"]).unwrap();
        for a in 0..4 {
            b = b.metric(a, a, ScalarField::constant(1, 1.0 + a as f64)).unwrap();
        }
        let s = b.build().unwrap();
        let grid = Grid::uniform(&k, -1.0, 1.0, 3).unwrap();
        let conn = koszul_connection(&s, &grid).unwrap();
        let gj = conn.at(&[0.2], 1).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    assert_eq!(gj.get(a, b, c).max_abs_coefficient(), 0.0);
                }
            }
        }
    }

    #[test]
    fn round_sphere_frame() {
        // orthonormal frame e1 = ∂θ, e2 = (1/sin θ)∂φ on S², as a 3-frame with a flat third leg:
        // [e1, e2] = −cot θ e2, ∇_{e2} e2 = −cot θ e1
        let k = KSet::new(&["th"]).unwrap();
        let f = |s: &str| make_closed_form(&k, s).unwrap();
        let s = FrameStructure::builder(&k, &["e1", "e2", "e3"])
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
            .unwrap();
        let conn = ConnectionTable::new(&s);
        let th = 0.9;
        let gj = conn.at(&[th], 1).unwrap();
        assert_abs_diff_eq!(gj.get(1, 1, 0).value(), -1.0 / th.tan(), epsilon = 1e-14);
        assert_abs_diff_eq!(gj.get(1, 0, 1).value(), 1.0 / th.tan(), epsilon = 1e-14);
        let g = conn.gamma(1, 1, 0).unwrap();
        assert_abs_diff_eq!(g.value(&[th]).unwrap(), -1.0 / th.tan(), epsilon = 1e-14);
        assert_abs_diff_eq!(g.partial(&[th], 0).unwrap(), 1.0 / th.sin().powi(2), epsilon = 1e-13);
    }
}
