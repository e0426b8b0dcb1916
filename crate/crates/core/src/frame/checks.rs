use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{connection_jets, curvature_jets, FrameStructure, SINGULAR_METRIC};
use crate::grid::Grid;
use crate::report::{MaxResidual, VerificationReport};
use crate::scalar::{field_sum, ScalarField};

pub const STRUCTURE_TOL: f64 = 1e-8;
pub const IDENTITY_TOL: f64 = 1e-7;
pub const PERMUTATION_TOL: f64 = 1e-12;

/// Frame indices playing the parts of `k, T, x, y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub k: usize,
    pub t: usize,
    pub x: usize,
    pub y: usize,
}

impl Default for Roles {
    fn default() -> Roles {
        Roles { k: 0, t: 1, x: 2, y: 3 }
    }
}

impl Roles {
    pub fn from_names(s: &FrameStructure, k: &str, t: &str, x: &str, y: &str) -> Result<Roles> {
        let r = Roles {
            k: s.index_of(k)?,
            t: s.index_of(t)?,
            x: s.index_of(x)?,
            y: s.index_of(y)?,
        };
        let mut v = [r.k, r.t, r.x, r.y];
        v.sort_unstable();
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidStructure(
                "roles must name four distinct frame fields".into(),
            ));
        }
        Ok(r)
    }

    pub fn as_array(&self) -> [usize; 4] {
        [self.k, self.t, self.x, self.y]
    }

    /// Complex structure on frame indices: `J k = T, J T = −k, J x = y, J y = −x`,
    /// returned as (sign, image index).
    pub fn j(&self, a: usize) -> (f64, usize) {
        if a == self.k {
            (1.0, self.t)
        } else if a == self.t {
            (-1.0, self.k)
        } else if a == self.x {
            (1.0, self.y)
        } else {
            (-1.0, self.x)
        }
    }
}

fn check_orthonormal_h(s: &FrameStructure, roles: &Roles, grid: &Grid) -> Result<()> {
    let (x, y) = (roles.x, roles.y);
    let worst = grid.map(|p| {
        let r = (s.g(x, x).value(p)? - 1.0)
            .abs()
            .max((s.g(y, y).value(p)? - 1.0).abs())
            .max(s.g(x, y).value(p)?.abs());
        Ok(r)
    })?;
    let residual = worst.into_iter().fold(0.0, f64::max);
    if !(residual <= STRUCTURE_TOL) {
        return Err(Error::NotOrthonormal { x, y, residual });
    }
    Ok(())
}

/// Twist `ι = g(k, [x, y]) = Σ_c C_xy^c g_ck`, after checking that `x, y` are orthonormal on the grid.
pub fn twist(s: &FrameStructure, roles: &Roles, grid: &Grid) -> Result<ScalarField> {
    check_orthonormal_h(s, roles, grid)?;
    let n = s.n();
    Ok(field_sum(
        s.kset().len(),
        (0..n).map(|c| s.c(roles.x, roles.y, c) * s.g(c, roles.k)),
    ))
}

#[derive(Default)]
struct StructureResiduals {
    symmetry: MaxResidual,
    antisymmetry: MaxResidual,
    det: (f64, Vec<f64>),
    jacobi: MaxResidual,
    integrability: MaxResidual,
    torsion: MaxResidual,
    compatibility: MaxResidual,
}

fn structure_residuals(s: &FrameStructure, p: &[f64]) -> Result<StructureResiduals> {
    let n = s.n();
    let fj = s.jets(p, 1)?;
    let mut out = StructureResiduals::default();
    for a in 0..n {
        for b in 0..n {
            out.symmetry.update(fj.g(a, b).value() - fj.g(b, a).value(), p);
            for c in 0..n {
                out.antisymmetry
                    .update(fj.c(a, b, c).value() + fj.c(b, a, c).value(), p);
            }
        }
    }
    let det = fj.metric_values().determinant().abs();
    out.det = (det, p.to_vec());
    // Σ_cyc [[a,b],c], with [[a,b],c]^e = Σ_d C_ab^d C_dc^e − e_c(C_ab^e)
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for e in 0..n {
                    let mut acc = 0.0;
                    for (u, v, w) in [(a, b, c), (b, c, a), (c, a, b)] {
                        for d in 0..n {
                            acc += fj.c(u, v, d).value() * fj.c(d, w, e).value();
                        }
                        acc -= fj.dir(w, fj.c(u, v, e)).value();
                    }
                    out.jacobi.update(acc, p);
                }
            }
        }
    }
    // e_a(e_b u_i) − e_b(e_a u_i) = [e_a, e_b] u_i
    for a in 0..n {
        for b in 0..n {
            for i in 0..fj.k {
                let mut r = fj.dir(a, fj.d(b, i)).value() - fj.dir(b, fj.d(a, i)).value();
                for c in 0..n {
                    r -= fj.c(a, b, c).value() * fj.d(c, i).value();
                }
                out.integrability.update(r, p);
            }
        }
    }
    if det < SINGULAR_METRIC {
        return Ok(out);
    }
    let gj = connection_jets(&fj, p)?;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let t = gj.get(a, b, c).value() - gj.get(b, a, c).value() - fj.c(a, b, c).value();
                out.torsion.update(t, p);
                let mut m = fj.dir(a, fj.g(b, c)).value();
                for d in 0..n {
                    m -= gj.get(a, b, d).value() * fj.g(d, c).value() + gj.get(a, c, d).value() * fj.g(b, d).value();
                }
                out.compatibility.update(m, p);
            }
        }
    }
    Ok(out)
}

/// Symmetry, antisymmetry, nondegeneracy, Jacobi (with derivative terms),
/// derivative-table integrability, torsion and metric compatibility.
pub fn consistency_suite(s: &FrameStructure, grid: &Grid) -> VerificationReport {
    let mut rep = VerificationReport::new("consistency").with_grid(grid);
    let ids = [
        "metric_symmetry",
        "bracket_antisymmetry",
        "nondegeneracy",
        "jacobi",
        "derivative_integrability",
        "torsion",
        "metric_compatibility",
    ];
    let per_point = match grid.map(|p| structure_residuals(s, p)) {
        Ok(v) => v,
        Err(e) => {
            for id in ids {
                rep.error(id, STRUCTURE_TOL, &e);
            }
            return rep;
        }
    };
    let mut total = StructureResiduals {
        det: (f64::INFINITY, Vec::new()),
        ..Default::default()
    };
    for r in &per_point {
        total.symmetry.merge(&r.symmetry);
        total.antisymmetry.merge(&r.antisymmetry);
        total.jacobi.merge(&r.jacobi);
        total.integrability.merge(&r.integrability);
        total.torsion.merge(&r.torsion);
        total.compatibility.merge(&r.compatibility);
        if !(r.det.0 >= total.det.0) {
            total.det = r.det.clone();
        }
    }
    rep.at_most(ids[0], &total.symmetry, STRUCTURE_TOL);
    rep.at_most(ids[1], &total.antisymmetry, STRUCTURE_TOL);
    rep.at_least(ids[2], total.det.0, SINGULAR_METRIC, Some(total.det.1.clone()));
    rep.at_most(ids[3], &total.jacobi, STRUCTURE_TOL);
    rep.at_most(ids[4], &total.integrability, STRUCTURE_TOL);
    if total.det.0 >= SINGULAR_METRIC {
        rep.at_most(ids[5], &total.torsion, STRUCTURE_TOL);
        rep.at_most(ids[6], &total.compatibility, STRUCTURE_TOL);
    } else {
        rep.not_applicable(ids[5], "metric is singular on the grid");
        rep.not_applicable(ids[6], "metric is singular on the grid");
    }
    rep
}

/// Algebraic identities of the curvature tensor on the grid.
pub fn curvature_identities(s: &FrameStructure, grid: &Grid) -> VerificationReport {
    let mut rep = VerificationReport::new("curvature_identities").with_grid(grid);
    let n = s.n();
    let result = grid.map(|p| {
        let fj = s.jets(p, 2)?;
        let gj = connection_jets(&fj, p)?;
        let cj = curvature_jets(&fj, &gj, p)?;
        let mut res = [
            MaxResidual::new(),
            MaxResidual::new(),
            MaxResidual::new(),
            MaxResidual::new(),
        ];
        let low: Vec<f64> = (0..n * n * n * n)
            .map(|i| {
                cj.lowered(&fj, i / (n * n * n), (i / (n * n)) % n, (i / n) % n, i % n)
                    .value()
            })
            .collect();
        let l = |a: usize, b: usize, c: usize, d: usize| low[((a * n + b) * n + c) * n + d];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        res[0].update(cj.r(a, b, c, d).value() + cj.r(b, a, c, d).value(), p);
                        res[1].update(l(a, b, c, d) - l(c, d, a, b), p);
                        let bianchi = cj.r(a, b, c, d).value() + cj.r(b, c, a, d).value() + cj.r(c, a, b, d).value();
                        res[2].update(bianchi, p);
                    }
                }
                res[3].update(cj.ricci(a, b).value() - cj.ricci(b, a).value(), p);
            }
        }
        Ok(res)
    });
    let ids = [
        "riemann_antisymmetry",
        "pair_symmetry",
        "first_bianchi",
        "ricci_symmetry",
    ];
    match result {
        Ok(per_point) => {
            for (i, id) in ids.iter().enumerate() {
                let mut m = MaxResidual::new();
                for r in &per_point {
                    m.merge(&r[i]);
                }
                rep.at_most(id, &m, IDENTITY_TOL);
            }
        }
        Err(e) => {
            for id in ids {
                rep.error(id, IDENTITY_TOL, &e);
            }
        }
    }
    rep
}

/// Koszul output of the relabeled structure against the relabeled original output.
pub fn permutation_invariance(s: &FrameStructure, perm: &[usize], grid: &Grid) -> Result<VerificationReport> {
    let t = s.permute(perm)?;
    let n = s.n();
    let per_point = grid.map(|p| {
        let g1 = connection_jets(&s.jets(p, 1)?, p)?;
        let g2 = connection_jets(&t.jets(p, 1)?, p)?;
        let mut m = MaxResidual::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    m.update(g2.get(a, b, c).value() - g1.get(perm[a], perm[b], perm[c]).value(), p);
                }
            }
        }
        Ok(m)
    })?;
    let mut m = MaxResidual::new();
    for r in &per_point {
        m.merge(r);
    }
    let mut rep = VerificationReport::new("permutation_invariance").with_grid(grid);
    rep.at_most("koszul_relabeling", &m, PERMUTATION_TOL);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{make_closed_form, KSet};

    fn flat() -> (FrameStructure, Grid) {
        let k = KSet::new(&["x"]).unwrap();
        let mut b = FrameStructure::builder(&k, &["k", "T", "x", "y"]).unwrap();
        for a in 0..4 {
            b = b.metric(a, a, ScalarField::constant(1, 1.0)).unwrap();
        }
        (b.build().unwrap(), Grid::uniform(&k, -1.0, 1.0, 5).unwrap())
    }

    #[test]
    fn flat_frame_passes() {
        let (s, g) = flat();
        let rep = consistency_suite(&s, &g);
        assert!(rep.passed, "{rep}");
        assert!(curvature_identities(&s, &g).passed);
    }

    #[test]
    fn inconsistent_derivative_table_flagged() {
        // e_k(x) = 1 and e_T(x) = x with [k, T] = 0: e_k e_T x = 1 but e_T e_k x = 0
        let (s, g) = flat();
        let k = s.kset().clone();
        let s = s
            .with_derivative(0, 0, ScalarField::constant(1, 1.0))
            .unwrap()
            .with_derivative(1, 0, make_closed_form(&k, "x").unwrap())
            .unwrap();
        let rep = consistency_suite(&s, &g);
        assert!(!rep.check("derivative_integrability").unwrap().passed());
    }

    #[test]
    fn twist_requires_orthonormal_h() {
        let (s, g) = flat();
        let k = s.kset().clone();
        let s = s.with_bracket(2, 3, 0, make_closed_form(&k, "-2").unwrap()).unwrap();
        assert_eq!(twist(&s, &Roles::default(), &g).unwrap().value(&[0.3]).unwrap(), -2.0);
        let bad = s.with_metric_component(2, 2, ScalarField::constant(1, 2.0)).unwrap();
        assert!(matches!(
            twist(&bad, &Roles::default(), &g),
            Err(Error::NotOrthonormal { .. })
        ));
    }
}
