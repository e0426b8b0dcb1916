//! Central Kähler metrics: Ricci eigenstructure, the conformal scalar curvature of
//! `e^{−τ} gK`, and the Liouville criterion for constant conformal scalar curvature.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::{connection_jets, curvature_jets, FrameJets, FrameStructure, GammaJets};
use crate::grid::Grid;
use crate::kahler::{AdmissibleData, Case, KahlerMetric};
use crate::report::{Samples, VerificationReport};
use crate::scalar::{Jet, JetSource, ScalarField};

pub const CENTRAL_TOL: f64 = 1e-8;
pub const CONFORMAL_TOL: f64 = 1e-7;
pub const LIOUVILLE_TOL: f64 = 1e-7;
const EIGEN_SAMPLES: usize = 5;

/// `max − min ≤ 1e-7 (1 + |mean|)`.
pub fn is_constant_on_grid(values: &[f64]) -> bool {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    hi - lo <= CONFORMAL_TOL * (1.0 + mean.abs())
}

fn ricci_matrix(fj: &FrameJets, point: &[f64]) -> Result<(DMatrix<f64>, f64)> {
    let gj = connection_jets(fj, point)?;
    let cj = curvature_jets(fj, &gj, point)?;
    Ok((
        DMatrix::from_fn(4, 4, |a, b| cj.ricci(a, b).value()),
        cj.scalar().value(),
    ))
}

/// Eigenvalues of `gK⁻¹ Ric`, ascending. Uses the symmetric generalized problem
/// when `gK` is positive definite and the real parts of the general spectrum otherwise.
pub fn endomorphism_eigenvalues(g: &DMatrix<f64>, ric: &DMatrix<f64>) -> Result<Vec<f64>> {
    let mut ev: Vec<f64> = match g.clone().cholesky() {
        Some(ch) => {
            let l = ch.l();
            let linv = l
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Domain("Cholesky factor not invertible".into()))?;
            let m = &linv * ric * linv.transpose();
            let sym = (&m + m.transpose()) * 0.5;
            nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
        }
        None => {
            let ginv = g
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Domain("singular metric".into()))?;
            (&ginv * ric).complex_eigenvalues().iter().map(|z| z.re).collect()
        }
    };
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[derive(Debug)]
struct CentralCurvatureView {
    frame: Arc<FrameStructure>,
}

impl JetSource for CentralCurvatureView {
    fn eval(&self, point: &[f64], order: usize) -> Result<Jet> {
        if order > 0 {
            return Err(Error::OrderTooHigh {
                requested: order,
                max: 0,
            });
        }
        let fj = self.frame.jets(point, 2)?;
        let (ric, _) = ricci_matrix(&fj, point)?;
        let g = fj.metric_values();
        let ginv = g.try_inverse().ok_or_else(|| Error::SingularMetric {
            point: point.to_vec(),
            det: 0.0,
        })?;
        Jet::constant(fj.k, 0, (ginv * ric).determinant())
    }
}

/// `det(gK⁻¹ Ric)` as a field (values only).
pub fn central_curvature(km: &KahlerMetric) -> ScalarField {
    ScalarField::computed(
        km.frame().kset().len(),
        Arc::new(CentralCurvatureView {
            frame: km.frame().shared(),
        }),
    )
}

/// Eigenvalues of the Ricci endomorphism of `gK` at `point`.
pub fn ricci_eigenvalues(km: &KahlerMetric, point: &[f64]) -> Result<Vec<f64>> {
    let fj = km.frame().jets(point, 2)?;
    let (ric, _) = ricci_matrix(&fj, point)?;
    endomorphism_eigenvalues(&fj.metric_values(), &ric)
}

/// `gK`-Laplacian of `φ` as the Hessian trace `g^{ab}(e_a e_b φ − Γ_ab^c e_c φ)`.
pub fn laplacian_hessian(fj: &FrameJets, gj: &GammaJets, phi: &Jet, point: &[f64]) -> Result<Jet> {
    let ginv = fj.inverse_metric(point)?;
    let n = fj.n;
    let d1: Vec<Jet> = (0..n).map(|a| fj.dir(a, phi)).collect();
    let order = phi.order().saturating_sub(2);
    let mut out = fj.zero(order);
    for a in 0..n {
        for b in 0..n {
            let mut h = fj.dir(a, &d1[b]);
            for (c, dc) in d1.iter().enumerate() {
                h = &h - &(gj.get(a, b, c) * dc);
            }
            out = &out + &(&ginv[a * n + b] * &h);
        }
    }
    Ok(out)
}

/// `gK`-orthonormal frame by Gram–Schmidt on the standard frame, as jet coefficients.
fn orthonormal_frame(fj: &FrameJets, order: usize) -> Result<Vec<Vec<Jet>>> {
    let n = fj.n;
    let inner = |u: &[Jet], v: &[Jet]| -> Jet {
        let mut acc = fj.zero(order);
        for a in 0..n {
            for b in 0..n {
                acc = &acc + &(&(&u[a] * &v[b]) * fj.g(a, b));
            }
        }
        acc
    };
    let mut out: Vec<Vec<Jet>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v: Vec<Jet> = (0..n)
            .map(|a| Jet::constant(fj.k, order, if a == i { 1.0 } else { 0.0 }))
            .collect::<Result<_>>()?;
        for e in &out {
            let p = inner(&v, e);
            v = v.iter().zip(e).map(|(vi, ei)| vi - &(&p * ei)).collect();
        }
        let norm2 = inner(&v, &v);
        if !(norm2.value() > 0.0) {
            return Err(Error::Domain("gK is not positive definite at this point".into()));
        }
        let inv = norm2.sqrt()?.recip()?;
        out.push(v.iter().map(|c| c * &inv).collect());
    }
    Ok(out)
}

/// Laplacian value as `Σ_i (E_i E_i φ − (∇_{E_i} E_i) φ)` over a `gK`-orthonormal frame.
pub fn laplacian_orthonormal(fj: &FrameJets, gj: &GammaJets, phi: &Jet) -> Result<f64> {
    let n = fj.n;
    let frame = orthonormal_frame(fj, fj.order)?;
    let d1: Vec<Jet> = (0..n).map(|a| fj.dir(a, phi)).collect();
    let mut out = 0.0;
    for m in &frame {
        let apply = |f: &Jet| -> Jet {
            (0..n).fold(fj.zero(f.order().saturating_sub(1)), |acc, a| {
                &acc + &(&m[a] * &fj.dir(a, f))
            })
        };
        out += apply(&apply(phi)).value();
        // (∇_E E)^b = Σ_a m_a (e_a m_b + Σ_c m_c Γ_ac^b)
        for b in 0..n {
            let mut coeff = 0.0;
            for a in 0..n {
                let mut inner = fj.dir(a, &m[b]).value();
                for c in 0..n {
                    inner += m[c].value() * gj.get(a, c, b).value();
                }
                coeff += m[a].value() * inner;
            }
            out -= coeff * d1[b].value();
        }
    }
    Ok(out)
}

/// Pointwise pieces of `s̃ = s_K u² + 6uΔu − 12|∇u|²` with `u = e^{τ/2}`.
#[derive(Clone, Debug, Serialize)]
pub struct ConformalTerms {
    pub scalar: f64,
    pub u: f64,
    pub laplacian_u: f64,
    pub laplacian_u_orthonormal: f64,
    pub grad_u_sq: f64,
    pub laplacian_tau: f64,
    pub laplacian_tau_orthonormal: f64,
}

impl ConformalTerms {
    pub fn s_tilde(&self) -> f64 {
        self.scalar * self.u * self.u + 6.0 * self.u * self.laplacian_u - 12.0 * self.grad_u_sq
    }

    pub fn s_tilde_orthonormal(&self) -> f64 {
        self.scalar * self.u * self.u + 6.0 * self.u * self.laplacian_u_orthonormal - 12.0 * self.grad_u_sq
    }
}

pub fn conformal_terms(km: &KahlerMetric, point: &[f64]) -> Result<ConformalTerms> {
    let a = km.data();
    let nv = a.kset().len();
    let fj = km.frame().jets(point, 2)?;
    let gj = connection_jets(&fj, point)?;
    let cj = curvature_jets(&fj, &gj, point)?;
    let tau = Jet::variable(nv, 2, a.tau, point[a.tau])?;
    let u = tau.scale(0.5).exp();
    let ginv = fj.inverse_metric(point)?;
    let du: Vec<f64> = (0..4).map(|i| fj.dir(i, &u).value()).collect();
    let mut grad = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            grad += ginv[i * 4 + j].value() * du[i] * du[j];
        }
    }
    Ok(ConformalTerms {
        scalar: cj.scalar().value(),
        u: u.value(),
        laplacian_u: laplacian_hessian(&fj, &gj, &u, point)?.value(),
        laplacian_u_orthonormal: laplacian_orthonormal(&fj, &gj, &u)?,
        grad_u_sq: grad,
        laplacian_tau: laplacian_hessian(&fj, &gj, &tau, point)?.value(),
        laplacian_tau_orthonormal: laplacian_orthonormal(&fj, &gj, &tau)?,
    })
}

#[derive(Debug)]
struct ConformalView {
    km: KahlerMetric,
}

impl JetSource for ConformalView {
    fn eval(&self, point: &[f64], order: usize) -> Result<Jet> {
        if order > 0 {
            return Err(Error::OrderTooHigh {
                requested: order,
                max: 0,
            });
        }
        Jet::constant(
            self.km.frame().kset().len(),
            0,
            conformal_terms(&self.km, point)?.s_tilde(),
        )
    }
}

/// Scalar curvature of `e^{−τ} gK` by the conformal change formula (values only).
pub fn conformal_scalar(km: &KahlerMetric) -> ScalarField {
    ScalarField::computed(km.frame().kset().len(), Arc::new(ConformalView { km: km.clone() }))
}

/// `(∂_x² + ∂_y²) log|ι| − c ι` over plane variables `x, y` of `ι`'s k-set.
pub fn liouville_residual(iota: &ScalarField, x: usize, y: usize, c: f64) -> Result<ScalarField> {
    let n = iota.nvars();
    if x >= n || y >= n {
        return Err(Error::IndexOutOfRange {
            index: x.max(y),
            limit: n,
        });
    }
    let l = iota.abs().ln();
    let lap = &l.d(x).d(x) + &l.d(y).d(y);
    Ok(&lap - &iota.scale(c))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeConstant {
    Constant(f64),
    Nonconstant,
}

#[derive(Clone, Debug, Serialize)]
pub struct CentralReport {
    #[serde(skip)]
    pub central_curvature: ScalarField,
    pub q: Option<f64>,
    #[serde(skip)]
    pub s_tilde: ScalarField,
    pub s_tilde_value: Option<f64>,
    pub pde_constant_c: PdeConstant,
    pub csc: bool,
    pub verdicts_agree: bool,
}

/// Liouville operator `(d_x d_x + d_y d_y) log|ι|` and `ι` on the grid, with frame
/// directions `x, y` acting on the twist.
fn liouville_samples(a: &AdmissibleData, grid: &Grid) -> Result<Vec<(f64, f64)>> {
    let iota = a.twist();
    let lap = a.h_laplacian(&iota.abs().ln());
    grid.map(|p| Ok((lap.value(p)?, iota.value(p)?)))
}

/// Least-squares `c` in `Δ log|ι| = c ι` and the worst residual after the fit.
pub fn fit_liouville(samples: &[(f64, f64)]) -> (f64, f64) {
    let num: f64 = samples.iter().map(|(l, i)| l * i).sum();
    let den: f64 = samples.iter().map(|(_, i)| i * i).sum();
    let c = if den > 0.0 { num / den } else { f64::NAN };
    let res = samples.iter().map(|(l, i)| (l - c * i).abs()).fold(0.0, f64::max);
    (c, res)
}

fn require_central(km: &KahlerMetric, rep: &mut VerificationReport) -> bool {
    if !matches!(km.data().case, Case::Central) {
        rep.not_applicable("central_case", "central analysis needs central-case data");
        return false;
    }
    true
}

fn iota_is_constant(a: &AdmissibleData, grid: &Grid) -> Result<Option<f64>> {
    let iota = a.twist();
    if let Some(v) = iota.constant_value() {
        return Ok(Some(v));
    }
    let vals = grid.map(|p| {
        let j = iota.jet(p, 1)?;
        Ok((j.value(), (0..j.nvars()).map(|i| j.first(i).abs()).fold(0.0, f64::max)))
    })?;
    let grad = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    let values: Vec<f64> = vals.iter().map(|v| v.0).collect();
    Ok((grad <= CENTRAL_TOL && is_constant_on_grid(&values)).then(|| values[0]))
}

/// Constancy of `s̃` and solvability of the Liouville equation, which must agree.
pub fn csc_verdict(km: &KahlerMetric, grid: &Grid) -> Result<CentralReport> {
    let a = km.data();
    let s_vals = grid.map(|p| Ok(conformal_terms(km, p)?.s_tilde()))?;
    let csc = is_constant_on_grid(&s_vals);
    let (c, res) = fit_liouville(&liouville_samples(a, grid)?);
    let pde = if res <= LIOUVILLE_TOL && c.is_finite() {
        PdeConstant::Constant(c)
    } else {
        PdeConstant::Nonconstant
    };
    let q = iota_is_constant(a, grid)?.map(|_| a.constants.q());
    Ok(CentralReport {
        central_curvature: central_curvature(km),
        q,
        s_tilde: conformal_scalar(km),
        s_tilde_value: csc.then(|| s_vals.iter().sum::<f64>() / s_vals.len() as f64),
        verdicts_agree: csc == matches!(pde, PdeConstant::Constant(_)),
        pde_constant_c: pde,
        csc,
    })
}

/// Ricci eigenstructure, conformal scalar curvature and the CSC criterion.
pub fn central_suite(km: &KahlerMetric, grid: &Grid) -> VerificationReport {
    let mut rep = VerificationReport::new("central").with_grid(grid);
    if !require_central(km, &mut rep) {
        return rep;
    }
    if let Err(e) = central_checks(km, grid, &mut rep) {
        rep.error("evaluation", CENTRAL_TOL, &e);
    }
    rep
}

fn central_checks(km: &KahlerMetric, grid: &Grid, rep: &mut VerificationReport) -> Result<()> {
    let a = km.data();
    let r = a.roles;
    let (k, t, x, y) = (r.k, r.t, r.x, r.y);
    let cs = a.constants;
    let constant_iota = iota_is_constant(a, grid)?;
    let q = cs.q();
    let f_exp = {
        let fp = a.f_prime();
        grid.map(|p| Ok((fp.value(p)? - a.f.value(p)?).abs() <= 1e-12 * a.f.value(p)?.abs().max(1.0)))?
            .into_iter()
            .all(|b| b)
    };
    let per = grid.map(|p| {
        let mut s = Samples::new();
        let fj = km.frame().jets(p, 2)?;
        let (ric, scalar) = ricci_matrix(&fj, p)?;
        let g = fj.metric_values();
        let ginv = g.clone().try_inverse().ok_or_else(|| Error::SingularMetric {
            point: p.to_vec(),
            det: 0.0,
        })?;
        let endo = &ginv * &ric;
        s.abs("central_curvature", endo.determinant(), p);
        for &u in &[k, t] {
            for v in 0..4 {
                s.abs("ricci_vanishes_on_v", ric[(u, v)], p);
            }
        }
        let eig = endomorphism_eigenvalues(&g, &ric)?;
        let etau = (-p[a.tau]).exp();
        if constant_iota.is_some() && f_exp {
            s.abs("ricci_h_eigenvalue", ric[(x, x)] / g[(x, x)] - q * etau, p);
            s.abs("ricci_h_eigenvalue", ric[(y, y)] / g[(y, y)] - q * etau, p);
            s.abs("scalar_curvature", scalar - 2.0 * q * etau, p);
            let mut expect = [0.0, 0.0, q * etau, q * etau];
            expect.sort_by(f64::total_cmp);
            for (e, x) in eig.iter().zip(expect) {
                s.abs("ricci_eigenvalues", e - x, p);
            }
        }
        if f_exp {
            let ct = conformal_terms(km, p)?;
            s.abs("laplacian_routes_agree", ct.laplacian_u - ct.laplacian_u_orthonormal, p);
            s.abs(
                "laplacian_routes_agree",
                ct.laplacian_tau - ct.laplacian_tau_orthonormal,
                p,
            );
            // Δτ = −e^{−τ} v, v = −1 − b²/a²
            let v = -1.0 - cs.b * cs.b / (cs.a * cs.a);
            s.abs("laplacian_tau_closed_form", ct.laplacian_tau + etau * v, p);
            s.abs("conformal_routes_agree", ct.s_tilde() - ct.s_tilde_orthonormal(), p);
            if constant_iota.is_some() {
                s.abs("s_tilde_closed_form", ct.s_tilde() - cs.s_tilde(), p);
            }
            s.abs(
                "grad_u_closed_form",
                ct.grad_u_sq - (cs.a * cs.a + cs.b * cs.b) / (4.0 * cs.a * cs.a),
                p,
            );
            s.min("laplacian_u_p", ct.laplacian_u * p_scale(p[a.tau]), p);
        }
        Ok((s, eig))
    })?;
    let samples = Samples::collect(&per.iter().map(|v| v.0.clone()).collect::<Vec<_>>());
    rep.sampled(&samples, "central_curvature", CENTRAL_TOL);
    rep.sampled(&samples, "ricci_vanishes_on_v", CENTRAL_TOL);
    let stride = (per.len() / EIGEN_SAMPLES).max(1);
    let points = grid.points();
    let eig_samples: Vec<_> = per
        .iter()
        .zip(&points)
        .step_by(stride)
        .take(EIGEN_SAMPLES)
        .map(|((_, e), p)| serde_json::json!({ "point": p, "eigenvalues": e }))
        .collect();
    rep.attach("ricci_eigenvalues", eig_samples);
    match (constant_iota, f_exp) {
        (Some(iota), true) => {
            rep.attach("q", q);
            rep.attach(
                "ricci_h_value",
                iota * (cs.a * cs.a + cs.b * cs.b - cs.b * cs.alpha + cs.a * cs.beta) / (cs.a * cs.a),
            );
            rep.sampled(&samples, "ricci_h_eigenvalue", CENTRAL_TOL);
            rep.sampled(&samples, "scalar_curvature", CENTRAL_TOL);
            rep.sampled(&samples, "ricci_eigenvalues", CENTRAL_TOL);
        }
        (None, _) => {
            rep.not_applicable("ricci_h_eigenvalue", "twist is not constant");
        }
        (_, false) => {
            rep.not_applicable("ricci_h_eigenvalue", "f is not exp(tau)");
        }
    }
    if !f_exp {
        rep.not_applicable("conformal_scalar", "f is not exp(tau)");
        return Ok(());
    }
    rep.sampled(&samples, "laplacian_routes_agree", CENTRAL_TOL);
    rep.sampled(&samples, "laplacian_tau_closed_form", CENTRAL_TOL);
    rep.sampled(&samples, "conformal_routes_agree", CONFORMAL_TOL);
    rep.sampled(&samples, "grad_u_closed_form", CENTRAL_TOL);
    if constant_iota.is_some() {
        rep.sampled(&samples, "s_tilde_closed_form", CONFORMAL_TOL);
        rep.attach("s_tilde_closed_form_value", cs.s_tilde());
    } else {
        rep.not_applicable("s_tilde_closed_form", "twist is not constant");
    }
    if let Some((p, _)) = samples.min_of("laplacian_u_p") {
        rep.attach("laplacian_u_constant_p", p);
    }
    let verdict = csc_verdict(km, grid)?;
    rep.flag(
        "csc_verdicts_agree",
        verdict.verdicts_agree,
        if verdict.verdicts_agree {
            ""
        } else {
            "s_tilde constancy disagrees with the Liouville fit"
        },
    );
    rep.attach("csc", verdict.csc);
    rep.attach("s_tilde", verdict.s_tilde_value);
    rep.attach("pde_constant_c", &verdict.pde_constant_c);
    Ok(())
}

/// `Δu = e^{−τ/2} p`; returns the factor `e^{τ/2}` extracting `p`.
fn p_scale(tau: f64) -> f64 {
    (0.5 * tau).exp()
}

/// Constant structure constants, constant `e^{−τ} gK` and the Jacobi identity, for constant twist.
pub fn left_invariance_check(km: &KahlerMetric, grid: &Grid) -> VerificationReport {
    let mut rep = VerificationReport::new("left_invariance").with_grid(grid);
    if !require_central(km, &mut rep) {
        return rep;
    }
    let a = km.data();
    match iota_is_constant(a, grid) {
        Ok(Some(_)) => {}
        Ok(None) => {
            rep.not_applicable("left_invariance", "twist is not constant");
            return rep;
        }
        Err(e) => {
            rep.error("evaluation", CENTRAL_TOL, &e);
            return rep;
        }
    }
    let nv = a.kset().len();
    let per = grid.map(|p| {
        let mut s = Samples::new();
        let fj = km.frame().jets(p, 1)?;
        let conf = Jet::variable(nv, 1, a.tau, p[a.tau])?.scale(-1.0).exp();
        for u in 0..4 {
            for v in 0..4 {
                let gt = fj.g(u, v) * &conf;
                for i in 0..nv {
                    s.abs("conformal_metric_constant", gt.first(i), p);
                }
                for e in 0..4 {
                    for i in 0..nv {
                        s.abs("brackets_constant", fj.c(u, v, e).first(i), p);
                    }
                }
            }
        }
        for &(u, v, w) in &[(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
            for e in 0..4 {
                let c = |x: usize, y: usize, z: usize| fj.c(x, y, z).value();
                let j: f64 = (0..4)
                    .map(|d| c(u, v, d) * c(d, w, e) + c(v, w, d) * c(d, u, e) + c(w, u, d) * c(d, v, e))
                    .sum();
                s.abs("jacobi_constant", j, p);
            }
        }
        Ok(s)
    });
    match per {
        Ok(v) => {
            let s = Samples::collect(&v);
            rep.sampled(&s, "brackets_constant", CENTRAL_TOL);
            rep.sampled(&s, "conformal_metric_constant", CENTRAL_TOL);
            rep.sampled(&s, "jacobi_constant", CENTRAL_TOL);
        }
        Err(e) => {
            rep.error("evaluation", CENTRAL_TOL, &e);
            return rep;
        }
    }
    if let Some(p) = grid.points().first() {
        let names = km.frame().names();
        let mut table = Vec::new();
        for u in 0..4 {
            for v in u + 1..4 {
                for e in 0..4 {
                    if let Ok(c) = km.frame().c(u, v, e).value(p) {
                        if c != 0.0 {
                            table.push(serde_json::json!({
                                "bracket": [names[u].clone(), names[v].clone()],
                                "component": names[e].clone(),
                                "value": c,
                            }));
                        }
                    }
                }
            }
        }
        rep.attach("structure_constants", table);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Roles;
    use crate::kahler::{build_kahler, central_structure, Constants};
    use crate::scalar::{make_closed_form, KSet};
    use approx::assert_abs_diff_eq;

    fn plane_wave() -> KahlerMetric {
        let k = KSet::new(&["tau"]).unwrap();
        let c = Constants {
            a: -1.0,
            b: 0.0,
            alpha: -1.0,
            beta: 0.0,
            ell: 1.0,
        };
        let iota = ScalarField::constant(1, -2.0);
        let s = central_structure(&k, "tau", None, &c, &iota).unwrap();
        let f = make_closed_form(&k, "exp(tau)").unwrap();
        build_kahler(&AdmissibleData::new(s, Roles::default(), c, f, 0, Case::Central).unwrap()).unwrap()
    }

    #[test]
    fn plane_wave_eigenvalues() {
        let km = plane_wave();
        for tau in [-0.5, 0.0, 0.5] {
            let ev = ricci_eigenvalues(&km, &[tau]).unwrap();
            let q = -(-tau).exp();
            assert_abs_diff_eq!(ev[0], q, epsilon = 1e-10);
            assert_abs_diff_eq!(ev[1], q, epsilon = 1e-10);
            assert_abs_diff_eq!(ev[2], 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(ev[3], 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(central_curvature(&km).value(&[tau]).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn plane_wave_suite() {
        let km = plane_wave();
        let grid = Grid::uniform(km.frame().kset(), -0.5, 0.5, 5).unwrap();
        let rep = central_suite(&km, &grid);
        assert!(rep.passed, "{rep}");
        assert_abs_diff_eq!(conformal_scalar(&km).value(&[0.1]).unwrap(), -0.5, epsilon = 1e-9);
        let li = left_invariance_check(&km, &grid);
        assert!(li.passed, "{li}");
    }

    #[test]
    fn liouville_sech_profile() {
        let k = KSet::new(&["x", "y"]).unwrap();
        let iota = make_closed_form(&k, "1/cosh(0.5*x - 0.3*y + 0.2)^2").unwrap();
        let c = -2.0 * (0.25 + 0.09);
        let r = liouville_residual(&iota, 0, 1, c).unwrap();
        let h = 1e-4;
        for p in [[0.1, 0.2], [-0.7, 0.4]] {
            assert_abs_diff_eq!(r.value(&p).unwrap(), 0.0, epsilon = 1e-12);
            // finite-difference Laplacian of log|ι|
            let l = |x: f64, y: f64| iota.value(&[x, y]).unwrap().abs().ln();
            let fd = (l(p[0] + h, p[1]) + l(p[0] - h, p[1]) + l(p[0], p[1] + h) + l(p[0], p[1] - h)
                - 4.0 * l(p[0], p[1]))
                / (h * h);
            assert_abs_diff_eq!(fd, c * iota.value(&p).unwrap(), epsilon = 1e-5);
        }
    }

    #[test]
    fn liouville_fit_rejects_nonproportional() {
        let samples: Vec<_> = (0..5).map(|i| (i as f64, 1.0 + (i * i) as f64)).collect();
        let (_, res) = fit_liouville(&samples);
        assert!(res > 1e-3);
        let (c, res) = fit_liouville(&[(2.0, 1.0), (4.0, 2.0)]);
        assert_abs_diff_eq!(c, 2.0);
        assert_abs_diff_eq!(res, 0.0);
    }

    #[test]
    fn constancy_rule() {
        assert!(is_constant_on_grid(&[3.0, 3.0 + 1e-7]));
        assert!(!is_constant_on_grid(&[3.0, 3.001]));
        assert!(!is_constant_on_grid(&[]));
    }
}
