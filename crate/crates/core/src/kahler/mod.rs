//! Admissible data, the induced Kähler metric `gK = −d(f k♭)(J·,·)`, and its
//! complex connection forms and Ricci form.

mod forms;

pub use forms::{
    exterior_d, exterior_d_jets, forms_suite, gamma_form_jets, gamma_forms, gamma_forms_closed, kahler_form_closed,
    ricci_form, ricci_form_closed, ricci_form_jets, GammaFormJets, GammaForms, RicciForm, RicciFormClosed,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{connection_jets, FrameJets, FrameStructure, Roles};
use crate::grid::Grid;
use crate::report::{Samples, VerificationReport};
use crate::scalar::{field_sum, Jet, KSet, ScalarField};

pub const ADMISSIBLE_TOL: f64 = 1e-8;
pub const SUBSTITUTION_TOL: f64 = 1e-10;

/// Constants `a = g(k,T)`, `b = g(T,T)`, the bracket constants `α, β` and `ℓ`
/// in `T = ℓ ∇τ` (named `ell_gradient` in reports).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "ell")]
    pub ell: f64,
}

impl Constants {
    /// `q = −(a² + b² − bα + aβ)/a²`.
    pub fn q(&self) -> f64 {
        let Constants { a, b, alpha, beta, .. } = *self;
        -(a * a + b * b - b * alpha + a * beta) / (a * a)
    }

    /// Closed form of the conformal scalar curvature for constant twist.
    pub fn s_tilde(&self) -> f64 {
        let Constants { a, b, alpha, beta, .. } = *self;
        -(a * a + b * b) / (2.0 * a * a) + 2.0 * (b * alpha - a * beta) / (a * a)
    }
}

/// Warped-product data: warping function `w(τ)` and fiber twist `ῑ`, both over the lifted k-set.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpedData {
    pub w: ScalarField,
    pub iota_bar: ScalarField,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Case {
    Central,
    Warped(WarpedData),
}

impl Case {
    pub fn name(&self) -> &'static str {
        match self {
            Case::Central => "central",
            Case::Warped(_) => "warped",
        }
    }
}

/// A frame structure with roles `k, T, x, y`, constants, the function `f(τ)` and the case tag.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleData {
    pub frame: FrameStructure,
    pub roles: Roles,
    pub constants: Constants,
    pub f: ScalarField,
    /// Index of `τ` in the k-set.
    pub tau: usize,
    pub case: Case,
}

impl AdmissibleData {
    pub fn new(
        frame: FrameStructure,
        roles: Roles,
        constants: Constants,
        f: ScalarField,
        tau: usize,
        case: Case,
    ) -> Result<AdmissibleData> {
        if frame.n() != 4 {
            return Err(Error::InvalidStructure("admissible data needs a 4-frame".into()));
        }
        if tau >= frame.kset().len() {
            return Err(Error::IndexOutOfRange {
                index: tau,
                limit: frame.kset().len(),
            });
        }
        let nv = frame.kset().len();
        let mut fields = vec![&f];
        if let Case::Warped(w) = &case {
            fields.push(&w.w);
            fields.push(&w.iota_bar);
        }
        if fields.iter().any(|g| g.nvars() != nv) {
            return Err(Error::InvalidStructure("fields must live on the frame's k-set".into()));
        }
        if constants.a == 0.0 || !constants.ell.is_finite() || constants.ell == 0.0 {
            return Err(Error::InvalidParameters("a and ell must be nonzero".into()));
        }
        Ok(AdmissibleData {
            frame,
            roles,
            constants,
            f,
            tau,
            case,
        })
    }

    pub fn kset(&self) -> &KSet {
        self.frame.kset()
    }

    /// Twist `ι = g(k, [x, y])`, without the orthonormality check of [`frame::twist`](crate::frame::twist).
    pub fn twist(&self) -> ScalarField {
        let s = &self.frame;
        let r = &self.roles;
        field_sum(s.kset().len(), (0..4).map(|c| s.c(r.x, r.y, c) * s.g(c, r.k)))
    }

    /// `d/dτ` of a field of τ.
    pub fn tau_derivative(&self, f: &ScalarField) -> ScalarField {
        f.d(self.tau)
    }

    pub fn f_prime(&self) -> ScalarField {
        self.f.d(self.tau)
    }

    pub fn dir(&self, a: usize, f: &ScalarField) -> ScalarField {
        self.frame
            .directional_derivative(a, f)
            .expect("fields share the frame k-set")
    }

    /// `(d_x d_x + d_y d_y) F` in frame directions.
    pub fn h_laplacian(&self, f: &ScalarField) -> ScalarField {
        let (x, y) = (self.roles.x, self.roles.y);
        &self.dir(x, &self.dir(x, f)) + &self.dir(y, &self.dir(y, f))
    }

    /// `dk♭(u, v) = e_u g(k, e_v) − e_v g(k, e_u) − Σ_e C_uv^e g_ke`.
    pub fn dk_flat(&self, u: usize, v: usize) -> ScalarField {
        let s = &self.frame;
        let k = self.roles.k;
        let lin = field_sum(s.kset().len(), (0..4).map(|e| s.c(u, v, e) * s.g(k, e)));
        &(&self.dir(u, s.g(k, v)) - &self.dir(v, s.g(k, u))) - &lin
    }

    /// `J e_a = sign · e_{image}`.
    pub fn j(&self, a: usize) -> (f64, usize) {
        self.roles.j(a)
    }
}

/// Frame data of the central case: `g(k,k) = 0, g(k,T) = a, g(T,T) = b`, orthonormal `x, y`,
/// `[k,x] = αy`, `[k,y] = −αx`, `[T,x] = βy`, `[T,y] = −βx`, `[x,y] = (ι/a²)(−b k + a T)`,
/// `e_k(τ) = a/ℓ`, `e_T(τ) = b/ℓ`, and `x, y` acting as unit partials on optional plane variables.
pub fn central_structure(
    kset: &KSet,
    tau: &str,
    plane: Option<(&str, &str)>,
    c: &Constants,
    iota: &ScalarField,
) -> Result<FrameStructure> {
    let nv = kset.len();
    let k = |v: f64| ScalarField::constant(nv, v);
    let (ik, it, ix, iy) = (0, 1, 2, 3);
    let mut b = FrameStructure::builder(kset, &["k", "T", "x", "y"])?
        .metric(ik, it, k(c.a))?
        .metric(it, it, k(c.b))?
        .metric(ix, ix, k(1.0))?
        .metric(iy, iy, k(1.0))?
        .bracket(ik, ix, iy, k(c.alpha))?
        .bracket(ik, iy, ix, k(-c.alpha))?
        .bracket(it, ix, iy, k(c.beta))?
        .bracket(it, iy, ix, k(-c.beta))?
        .bracket(ix, iy, ik, iota.scale(-c.b / (c.a * c.a)))?
        .bracket(ix, iy, it, iota.scale(1.0 / c.a))?;
    let t = kset.index_of(tau)?;
    b = b.derivative(ik, t, k(c.a / c.ell))?.derivative(it, t, k(c.b / c.ell))?;
    if let Some((px, py)) = plane {
        b = b
            .derivative(ix, kset.index_of(px)?, k(1.0))?
            .derivative(iy, kset.index_of(py)?, k(1.0))?;
    }
    b.build()
}

struct PointData {
    fj: FrameJets,
    iota: Jet,
    f: Jet,
}

fn point_data(a: &AdmissibleData, iota: &ScalarField, p: &[f64], order: usize) -> Result<PointData> {
    Ok(PointData {
        fj: a.frame.jets(p, order)?,
        iota: iota.jet(p, order)?,
        f: a.f.jet(p, order)?,
    })
}

fn admissible_samples(a: &AdmissibleData, iota: &ScalarField, p: &[f64]) -> Result<Samples> {
    let PointData { fj, iota: ij, f: fjet } = point_data(a, iota, p, 2)?;
    let Roles { k, t, x, y } = a.roles;
    let h = [x, y];
    let v = [k, t];
    let mut s = Samples::new();
    let g = |u: usize, w: usize| fj.g(u, w).value();
    let c = |u: usize, w: usize, e: usize| fj.c(u, w, e).value();

    let (gxx, gyy, gxy) = (g(x, x), g(y, y), g(x, y));
    let tr = gxx + gyy;
    let disc = ((gxx - gyy).powi(2) + 4.0 * gxy * gxy).sqrt();
    s.min("h_spacelike", 0.5 * (tr - disc), p);
    for &vv in &v {
        for &hh in &h {
            s.abs("h_orthogonal_v", g(vv, hh), p);
            // [V, H] ⊂ H
            for &ww in &v {
                s.abs("bracket_closure", c(vv, hh, ww), p);
            }
        }
    }
    for &ww in &h {
        s.abs("hh_bracket_vertical", c(x, y, ww), p);
    }
    // shear of X ∈ {k, T}: g([X,x],y) + g([X,y],x) and (L_X g)(x,x) − (L_X g)(y,y)
    for (id, xv) in [("shear_k", k), ("shear_t", t)] {
        let gl = |u: usize, w: usize| (0..4).map(|e| c(xv, u, e) * g(e, w)).sum::<f64>();
        s.abs(id, gl(x, y) + gl(y, x), p);
        let lie_xx = fj.dir(xv, fj.g(x, x)).value() - 2.0 * gl(x, x);
        let lie_yy = fj.dir(xv, fj.g(y, y)).value() - 2.0 * gl(y, y);
        s.abs(id, lie_xx - lie_yy, p);
    }
    for e in 0..4 {
        s.abs("gradient_t", g(t, e) - a.constants.ell * fj.d(e, a.tau).value(), p);
    }
    for &hh in &h {
        s.abs("g_kt_constant_on_h", fj.dir(hh, fj.g(k, t)).value(), p);
        s.abs("g_kk_constant_on_h", fj.dir(hh, fj.g(k, k)).value(), p);
    }
    s.abs("k_null", g(k, k), p);
    s.min("twist_magnitude", ij.value().abs(), p);
    for i in 0..fj.k {
        if i != a.tau {
            s.abs("f_depends_on_tau_only", fjet.first(i), p);
        }
    }

    match &a.case {
        Case::Central => {
            let cs = a.constants;
            s.abs("constants_match_metric", g(k, t) - cs.a, p);
            s.abs("constants_match_metric", g(t, t) - cs.b, p);
            for e in 0..4 {
                s.abs("k_t_commute", c(k, t, e), p);
            }
            for (xv, coef) in [(k, cs.alpha), (t, cs.beta)] {
                s.abs("bracket_constants", c(xv, x, y) - coef, p);
                s.abs("bracket_constants", c(xv, y, x) + coef, p);
                s.abs("bracket_constants", c(xv, x, x), p);
                s.abs("bracket_constants", c(xv, y, y), p);
            }
            s.abs("twist_horizontal_gradient", fj.dir(k, &ij).value(), p);
            s.abs("twist_horizontal_gradient", fj.dir(t, &ij).value(), p);
        }
        Case::Warped(wd) => {
            let w = wd.w.jet(p, 2)?;
            let ib = wd.iota_bar.jet(p, 2)?;
            let wv = w.value();
            let lw = w.first(a.tau) / wv;
            let alpha = a.constants.alpha;
            s.min("w_positive", wv, p);
            s.abs("warped_metric", g(k, t) - 1.0, p);
            s.abs("warped_metric", g(t, t) + 1.0, p);
            let expect = |u: usize, ww: usize, e: usize| -> f64 {
                let pair = |p0: usize, p1: usize| (u == p0 && ww == p1, u == p1 && ww == p0);
                let lookup = |p0: usize, p1: usize, table: [f64; 4]| -> Option<f64> {
                    let (fwd, bwd) = pair(p0, p1);
                    let idx = [k, t, x, y].iter().position(|&r| r == e).unwrap();
                    if fwd {
                        Some(table[idx])
                    } else if bwd {
                        Some(-table[idx])
                    } else {
                        None
                    }
                };
                let ibw = ib.value() / wv;
                lookup(k, t, [-lw, -lw, 0.0, 0.0])
                    .or_else(|| lookup(k, x, [0.0, 0.0, -lw, alpha / wv]))
                    .or_else(|| lookup(k, y, [0.0, 0.0, -alpha / wv, -lw]))
                    .or_else(|| lookup(t, x, [0.0, 0.0, lw, 0.0]))
                    .or_else(|| lookup(t, y, [0.0, 0.0, 0.0, lw]))
                    .or_else(|| lookup(x, y, [ibw, ibw, 0.0, 0.0]))
                    .unwrap_or(0.0)
            };
            for u in 0..4 {
                for ww in 0..4 {
                    for e in 0..4 {
                        s.abs("warped_brackets", c(u, ww, e) - expect(u, ww, e), p);
                    }
                }
            }
            s.abs("twist_substitution", ij.value() - ib.value() / wv, p);
            s.abs("iota_bar_vertical", fj.dir(k, &ib).value(), p);
            s.abs("iota_bar_vertical", fj.dir(t, &ib).value(), p);
            s.min("iota_bar_negative", -ib.value(), p);
        }
    }

    // informational: geodesy and Killing property of k
    if fj.metric_values().determinant().abs() >= crate::frame::SINGULAR_METRIC {
        let gj = connection_jets(&fj, p)?;
        let nabla_kk = gj.values(k, k);
        s.abs("k_geodesic", nabla_kk.iter().fold(0.0, |m, v| m.max(v.abs())), p);
        s.abs(
            "k_pregeodesic",
            [t, x, y].iter().fold(0.0, |m, &e| m.max(nabla_kk[e].abs())),
            p,
        );
    }
    for u in 0..4 {
        for ww in 0..4 {
            let lie = fj.dir(k, fj.g(u, ww)).value()
                - (0..4)
                    .map(|e| c(k, u, e) * g(e, ww) + c(k, ww, e) * g(u, e))
                    .sum::<f64>();
            s.abs("k_killing", lie, p);
        }
    }
    Ok(s)
}

/// Conditions making `(g, k, T)` admissible, plus the case-specific patterns.
pub fn check_admissible(a: &AdmissibleData, grid: &Grid) -> VerificationReport {
    let mut rep = VerificationReport::new("admissible").with_grid(grid);
    let iota = a.twist();
    let samples = match grid.map(|p| admissible_samples(a, &iota, p)) {
        Ok(v) => Samples::collect(&v),
        Err(e) => {
            rep.error("evaluation", ADMISSIBLE_TOL, &e);
            return rep;
        }
    };
    let at_least = |rep: &mut VerificationReport, id: &str, bound: f64| {
        let (v, p) = samples.min_of(id).unwrap_or((f64::NAN, Vec::new()));
        rep.at_least(id, v, bound, Some(p));
    };
    at_least(&mut rep, "h_spacelike", ADMISSIBLE_TOL);
    for id in [
        "h_orthogonal_v",
        "bracket_closure",
        "hh_bracket_vertical",
        "shear_k",
        "shear_t",
        "gradient_t",
        "g_kt_constant_on_h",
        "g_kk_constant_on_h",
        "k_null",
        "f_depends_on_tau_only",
    ] {
        rep.sampled(&samples, id, ADMISSIBLE_TOL);
    }
    at_least(&mut rep, "twist_magnitude", ADMISSIBLE_TOL);
    match &a.case {
        Case::Central => {
            for id in [
                "constants_match_metric",
                "k_t_commute",
                "bracket_constants",
                "twist_horizontal_gradient",
            ] {
                rep.sampled(&samples, id, ADMISSIBLE_TOL);
            }
        }
        Case::Warped(_) => {
            at_least(&mut rep, "w_positive", f64::MIN_POSITIVE);
            rep.sampled(&samples, "warped_metric", ADMISSIBLE_TOL);
            rep.sampled(&samples, "warped_brackets", ADMISSIBLE_TOL);
            rep.sampled(&samples, "twist_substitution", SUBSTITUTION_TOL);
            rep.sampled(&samples, "iota_bar_vertical", ADMISSIBLE_TOL);
            at_least(&mut rep, "iota_bar_negative", f64::MIN_POSITIVE);
        }
    }
    for id in ["k_geodesic", "k_pregeodesic", "k_killing"] {
        let m = samples.max_of(id);
        rep.attach(&format!("{id}_residual"), m.value());
        rep.attach(id, m.value().is_some_and(|r| r <= ADMISSIBLE_TOL));
    }
    rep
}

/// The induced Kähler metric on the frame of its admissible data.
#[derive(Clone, Debug)]
pub struct KahlerMetric {
    data: AdmissibleData,
    frame: FrameStructure,
    c: ScalarField,
}

impl KahlerMetric {
    pub fn data(&self) -> &AdmissibleData {
        &self.data
    }

    /// Frame structure carrying `gK` (brackets and derivative table of `g`).
    pub fn frame(&self) -> &FrameStructure {
        &self.frame
    }

    pub fn component(&self, a: usize, b: usize) -> &ScalarField {
        self.frame.g(a, b)
    }

    /// `gK(k,k) = gK(T,T) = c`.
    pub fn c(&self) -> &ScalarField {
        &self.c
    }

    /// Admissible-data copy whose metric is `gK` (roles and constants kept).
    pub fn as_data(&self) -> AdmissibleData {
        AdmissibleData {
            frame: self.frame.clone(),
            ..self.data.clone()
        }
    }

    /// `fι < 0` and `f' G/ℓ − f dk♭(k,T) < 0` at `point`.
    pub fn in_region(&self, point: &[f64]) -> Result<bool> {
        let fi = self.data.f.value(point)? * self.data.twist().value(point)?;
        Ok(fi < 0.0 && self.c.value(point)? > 0.0)
    }

    /// Definition-route cross-check, case closed forms, region and positivity.
    pub fn verify(&self, grid: &Grid) -> VerificationReport {
        let mut rep = VerificationReport::new("kahler_metric").with_grid(grid);
        let a = &self.data;
        let def = definition_metric(a);
        let (k, t) = (a.roles.k, a.roles.t);
        let closed = match &a.case {
            Case::Central => a.f_prime().scale(a.constants.a * a.constants.a / a.constants.ell),
            Case::Warped(wd) => &a.tau_derivative(&(&a.f * &wd.w)) / &wd.w,
        };
        let iota = a.twist();
        let result = grid.map(|p| {
            let mut s = Samples::new();
            let gk = self.frame.jets(p, 0)?;
            for u in 0..4 {
                for v in 0..4 {
                    s.abs("definition_route", gk.g(u, v).value() - def[u * 4 + v].value(p)?, p);
                    let (su, ju) = a.j(u);
                    let (sv, jv) = a.j(v);
                    s.abs("j_invariance", su * sv * gk.g(ju, jv).value() - gk.g(u, v).value(), p);
                }
            }
            let cv = closed.value(p)?;
            s.abs("vertical_closed_form", gk.g(k, k).value() - cv, p);
            s.abs("vertical_closed_form", gk.g(t, t).value() - cv, p);
            let fi = a.f.value(p)? * iota.value(p)?;
            let inside = fi < 0.0 && self.c.value(p)? > 0.0;
            let eig = nalgebra::SymmetricEigen::new(gk.metric_values()).eigenvalues.min();
            Ok((s, inside, eig))
        });
        match result {
            Ok(per) => {
                let samples = Samples::collect(&per.iter().map(|x| x.0.clone()).collect::<Vec<_>>());
                rep.sampled(&samples, "definition_route", ADMISSIBLE_TOL);
                rep.sampled(&samples, "j_invariance", ADMISSIBLE_TOL);
                rep.sampled(&samples, "vertical_closed_form", ADMISSIBLE_TOL);
                let inside = per.iter().filter(|x| x.1).count();
                rep.attach("region_fraction", inside as f64 / per.len().max(1) as f64);
                rep.flag(
                    "region_nonempty",
                    inside > 0,
                    if inside == 0 {
                        "no grid point satisfies the region inequalities"
                    } else {
                        ""
                    },
                );
                let min_eig = per.iter().filter(|x| x.1).map(|x| x.2).fold(f64::INFINITY, f64::min);
                if inside > 0 {
                    rep.at_least("positive_definite_in_region", min_eig, 1e-12, None);
                }
            }
            Err(e) => {
                rep.error("evaluation", ADMISSIBLE_TOL, &e);
            }
        }
        rep
    }
}

/// `gK(u, v) = −[df(Ju) k♭(v) − df(v) k♭(Ju) + f dk♭(Ju, v)]` as 16 fields.
pub fn definition_metric(a: &AdmissibleData) -> Vec<ScalarField> {
    let k = a.roles.k;
    let s = &a.frame;
    let mut out = Vec::with_capacity(16);
    for u in 0..4 {
        let (sign, ju) = a.j(u);
        for v in 0..4 {
            let df_ju = a.dir(ju, &a.f).scale(sign);
            let df_v = a.dir(v, &a.f);
            let term =
                &(&(&df_ju * s.g(k, v)) - &(&df_v * &s.g(k, ju).scale(sign))) + &(&a.f * &a.dk_flat(ju, v).scale(sign));
            out.push(-term);
        }
    }
    out
}

/// Assembles `gK`: `gK|_H = −fι g|_H`, `gK(k,k) = gK(T,T) = c = −f'G/ℓ + f dk♭(k,T)` with
/// `G = g_kk g_TT − g_kT²`, zero elsewhere.
pub fn build_kahler(a: &AdmissibleData) -> Result<KahlerMetric> {
    let s = &a.frame;
    let Roles { k, t, x, y } = a.roles;
    let n = s.kset().len();
    let big_g = &(s.g(k, k) * s.g(t, t)) - &(s.g(k, t) * s.g(k, t));
    let c = &(&a.f_prime() * &big_g).scale(-1.0 / a.constants.ell) + &(&a.f * &a.dk_flat(k, t));
    let fi = -(&a.f * &a.twist());
    let mut g = vec![ScalarField::zero(n); 16];
    g[k * 4 + k] = c.clone();
    g[t * 4 + t] = c.clone();
    for &u in &[x, y] {
        for &v in &[x, y] {
            g[u * 4 + v] = &fi * s.g(u, v);
        }
    }
    Ok(KahlerMetric {
        data: a.clone(),
        frame: s.with_metric(g)?,
        c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::make_closed_form;
    use approx::assert_abs_diff_eq;

    fn plane_wave_like(alpha: f64) -> AdmissibleData {
        let k = KSet::new(&["u"]).unwrap();
        let c = Constants {
            a: -1.0,
            b: 0.0,
            alpha,
            beta: 0.0,
            ell: 1.0,
        };
        let iota = ScalarField::constant(1, -2.0);
        let s = central_structure(&k, "u", None, &c, &iota).unwrap();
        let f = make_closed_form(&k, "exp(u)").unwrap();
        AdmissibleData::new(s, Roles::default(), c, f, 0, Case::Central).unwrap()
    }

    #[test]
    fn central_metric_values() {
        let a = plane_wave_like(-1.0);
        let grid = Grid::uniform(a.kset(), -1.0, 1.0, 5).unwrap();
        let rep = check_admissible(&a, &grid);
        assert!(rep.passed, "{rep}");
        let km = build_kahler(&a).unwrap();
        for u in [-1.0, 0.0, 0.7] {
            assert_abs_diff_eq!(
                km.component(2, 2).value(&[u]).unwrap(),
                2.0 * f64::exp(u),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(km.component(0, 0).value(&[u]).unwrap(), f64::exp(u), epsilon = 1e-14);
        }
        let v = km.verify(&grid);
        assert!(v.passed, "{v}");
    }

    #[test]
    fn shear_mutation_detected() {
        let a = plane_wave_like(-1.0);
        let k = a.kset().clone();
        let frame = a
            .frame
            .with_bracket(0, 2, 2, make_closed_form(&k, "0.1").unwrap())
            .unwrap();
        let b = AdmissibleData { frame, ..a };
        let grid = Grid::uniform(b.kset(), -1.0, 1.0, 5).unwrap();
        let rep = check_admissible(&b, &grid);
        assert!(!rep.check("shear_k").unwrap().passed());
        assert!(!rep.check("bracket_constants").unwrap().passed());
    }
}
