//! Built-in example structures with expected values, the verification pipeline that runs them,
//! a JSON document format, and a coordinate oracle for the plane wave.

mod chart;
mod schema;

pub use chart::{coordinate_crosscheck, CoordinateChart, CHART_FD_STEP, CHART_TOL};
pub use schema::{parse_structure, parse_with_grid, serialize_structure, to_document, Document, Structure};

use serde::Serialize;

use crate::central::{central_curvature, central_suite, conformal_scalar, left_invariance_check};
use crate::error::{Error, Result};
use crate::frame::{
    connection_jets, consistency_suite, curvature_identities, curvature_jets, sectional_from_jets, Roles,
};
use crate::grid::{Axis, Grid};
use crate::kahler::{
    build_kahler, central_structure, check_admissible, forms_suite, kahler_form_closed, AdmissibleData, Case,
    Constants, KahlerMetric,
};
use crate::report::{MaxResidual, Provenance, VerificationReport};
use crate::scalar::{make_closed_form, KSet, ScalarField};
use crate::warped::{
    completeness, einstein_verdict, family_suite, FiberData, WarpedFamily, WarpedModel, DIVERGENCE_BOUND, TAU0,
};

pub const ENTRY_TOL: f64 = 1e-8;

/// The analysed structure of an entry.
#[derive(Clone, Debug)]
pub enum Model {
    Central(AdmissibleData),
    Warped(WarpedModel),
}

/// A measured quantity with its expected value.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "quantity", rename_all = "snake_case")]
pub enum Expected {
    /// `ι` equals the value on the grid.
    Twist {
        value: f64,
    },
    /// `q` from the constants and from the `H`-eigenvalue `e^τ Ric_K(x,x)/gK(x,x)`.
    Q {
        value: f64,
    },
    /// `s̃` from the conformal formula and from the closed form in the constants.
    STilde {
        value: f64,
    },
    /// `Ric_K(x, x)` on the grid.
    RicXx {
        value: f64,
    },
    /// Central curvature on the grid.
    CentralCurvature {
        value: f64,
    },
    RicciFlat,
    Flat,
    /// `Ric_K − λ gK` vanishes.
    Einstein {
        lambda: f64,
    },
    /// Sectional curvature of `gK` on a frame plane.
    Sectional {
        u: String,
        v: String,
        value: f64,
    },
    /// `|K(u, v)|` at `τ` is at least `bound`.
    SectionalAbsAt {
        u: String,
        v: String,
        tau: f64,
        bound: f64,
    },
    /// `c = (fw)'/w` equals the value on the grid.
    CValue {
        value: f64,
    },
    /// Verdict of the completeness analyzer.
    Complete {
        value: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expectation {
    #[serde(flatten)]
    pub expected: Expected,
    pub tol: f64,
    pub provenance: Provenance,
}

fn expect(expected: Expected, tol: f64, provenance: Provenance) -> Expectation {
    Expectation {
        expected,
        tol,
        provenance,
    }
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: String,
    pub description: String,
    pub model: Model,
    pub grid: Grid,
    pub expectations: Vec<Expectation>,
    pub chart: Option<CoordinateChart>,
}

pub const IDS: [&str; 7] = [
    "s3xr",
    "planewave",
    "ppwave",
    "warped_alpha0",
    "warped_alphaneg",
    "warped_alpha_minus2",
    "warped_complete",
];

pub fn list() -> Vec<(&'static str, &'static str)> {
    IDS.iter().map(|&id| (id, describe(id))).collect()
}

fn describe(id: &str) -> &'static str {
    match id {
        "s3xr" => "Lorentzian product of the round 3-sphere with a line; central, flat Kahler metric",
        "planewave" => "gravitational plane wave; central Kahler metric with Ric_K(x,x) = -2",
        "ppwave" => "truncated pp-wave product, parameterized by its twist function",
        "warped_alpha0" => "warped product with alpha = 0 fiber and the cube-root family",
        "warped_alphaneg" => "warped product with alpha < 0 and lambda = 0; flat Kahler metric",
        "warped_alpha_minus2" => "3-sphere fiber with the implicit tan family; Ricci flat, not flat",
        "warped_complete" => "alpha = 0, lambda = -3 complete Kahler-Einstein metric",
        _ => "",
    }
}

pub fn load(id: &str) -> Result<CatalogEntry> {
    match id {
        "s3xr" => s3xr(),
        "planewave" => planewave(),
        "ppwave" => ppwave(&PpTwist::Constant(-1.0)),
        "warped_alpha0" => warped_alpha0(),
        "warped_alphaneg" => warped_alphaneg(-1.0),
        "warped_alpha_minus2" => warped_alpha_minus2(),
        "warped_complete" => warped_complete(-3.0),
        other => Err(Error::UnknownEntry(other.to_string())),
    }
}

fn central_data(
    kset: &KSet,
    tau: &str,
    plane: Option<(&str, &str)>,
    c: Constants,
    iota: &ScalarField,
    f: &str,
) -> Result<AdmissibleData> {
    let frame = central_structure(kset, tau, plane, &c, iota)?;
    let f = make_closed_form(kset, f)?;
    AdmissibleData::new(frame, Roles::default(), c, f, kset.index_of(tau)?, Case::Central)
}

pub fn s3xr() -> Result<CatalogEntry> {
    let k = KSet::new(&["tau"])?;
    let c = Constants {
        a: 1.0,
        b: -1.0,
        alpha: -2.0,
        beta: 0.0,
        ell: 1.0,
    };
    let data = central_data(&k, "tau", None, c, &ScalarField::constant(1, -2.0), "exp(tau)")?;
    use Provenance::*;
    Ok(CatalogEntry {
        id: "s3xr".into(),
        description: describe("s3xr").into(),
        model: Model::Central(data),
        grid: Grid::uniform(&k, -1.0, 1.0, 5)?,
        expectations: vec![
            expect(Expected::Twist { value: -2.0 }, ENTRY_TOL, Literature),
            expect(Expected::Q { value: 0.0 }, ENTRY_TOL, Literature),
            expect(Expected::CentralCurvature { value: 0.0 }, ENTRY_TOL, Literature),
            expect(Expected::RicciFlat, 1e-8, Literature),
            expect(Expected::Flat, 1e-8, Literature),
        ],
        chart: None,
    })
}

pub fn planewave() -> Result<CatalogEntry> {
    let k = KSet::new(&["u"])?;
    let c = Constants {
        a: -1.0,
        b: 0.0,
        alpha: -1.0,
        beta: 0.0,
        ell: 1.0,
    };
    let data = central_data(&k, "u", None, c, &ScalarField::constant(1, -2.0), "exp(u)")?;
    use Provenance::*;
    Ok(CatalogEntry {
        id: "planewave".into(),
        description: describe("planewave").into(),
        model: Model::Central(data),
        grid: Grid::uniform(&k, -1.0, 1.0, 5)?,
        expectations: vec![
            expect(Expected::Twist { value: -2.0 }, ENTRY_TOL, Literature),
            expect(Expected::RicXx { value: -2.0 }, 1e-7, Literature),
            expect(Expected::CentralCurvature { value: 0.0 }, 1e-8, Literature),
            expect(Expected::Q { value: -1.0 }, 1e-7, Derived),
            expect(Expected::STilde { value: -0.5 }, 1e-7, Derived),
        ],
        chart: Some(CoordinateChart::plane_wave()),
    })
}

/// Twist of the truncated pp-wave entry.
#[derive(Clone, Debug, PartialEq)]
pub enum PpTwist {
    Constant(f64),
    /// `ι = −e^p` with `p` an expression in `x, y`.
    HarmonicExponent(String),
    /// `ι = −sech²(p x + q y)`.
    Sech {
        p: f64,
        q: f64,
    },
    /// Any expression in `tau, x, y`.
    Expr(String),
    /// `ι = h_x − k_y` from the potentials `k(x, y)`, `h(x, y)`.
    Potentials {
        k: String,
        h: String,
    },
}

fn pp_kset() -> KSet {
    KSet::new(&["tau", "x", "y"]).expect("valid k-set")
}

pub fn pp_twist(t: &PpTwist) -> Result<ScalarField> {
    let k = pp_kset();
    match t {
        PpTwist::Constant(v) => Ok(ScalarField::constant(3, *v)),
        PpTwist::HarmonicExponent(p) => make_closed_form(&k, &format!("-exp({p})")),
        PpTwist::Sech { p, q } => make_closed_form(&k, &format!("-1/cosh(({p:?})*x + ({q:?})*y)^2")),
        PpTwist::Expr(e) => make_closed_form(&k, e),
        PpTwist::Potentials { k: kk, h } => {
            let kf = make_closed_form(&k, kk)?;
            let hf = make_closed_form(&k, h)?;
            Ok(&hf.lift_partial(1)? - &kf.lift_partial(2)?)
        }
    }
}

pub fn ppwave(t: &PpTwist) -> Result<CatalogEntry> {
    let k = pp_kset();
    let c = Constants {
        a: 1.0,
        b: -1.0,
        alpha: 0.0,
        beta: 0.0,
        ell: 1.0,
    };
    let iota = pp_twist(t)?;
    let data = central_data(&k, "tau", Some(("x", "y")), c, &iota, "exp(tau)")?;
    use Provenance::*;
    let mut expectations = vec![];
    if let PpTwist::Constant(v) = t {
        expectations.push(expect(Expected::Twist { value: *v }, ENTRY_TOL, Trivial));
        // Ric_K(x, x) = 2ι − (1/2)Δ log|ι|
        expectations.push(expect(Expected::RicXx { value: 2.0 * v }, 1e-7, Derived));
    }
    if matches!(t, PpTwist::Constant(_) | PpTwist::HarmonicExponent(_)) {
        expectations.push(expect(Expected::STilde { value: -1.0 }, 1e-7, Literature));
    }
    expectations.push(expect(Expected::CentralCurvature { value: 0.0 }, 1e-8, Literature));
    Ok(CatalogEntry {
        id: "ppwave".into(),
        description: describe("ppwave").into(),
        model: Model::Central(data),
        grid: Grid::uniform(&k, -1.0, 1.0, 3)?,
        expectations,
        chart: None,
    })
}

fn warped_entry(
    id: &str,
    alpha: f64,
    iota_bar: f64,
    family: WarpedFamily,
    expectations: Vec<Expectation>,
) -> Result<CatalogEntry> {
    let fiber = FiberData::standard(&KSet::empty(), None, alpha, ScalarField::constant(0, iota_bar))?;
    let model = WarpedModel::new(fiber, family, vec![])?;
    let grid = model.grid(7, 1)?;
    Ok(CatalogEntry {
        id: id.into(),
        description: describe(id).into(),
        model: Model::Warped(model),
        grid,
        expectations,
        chart: None,
    })
}

pub fn warped_alpha0() -> Result<CatalogEntry> {
    let fam = WarpedFamily::alpha0(-1.0, 1.0, 1.0, (f64::NEG_INFINITY, f64::INFINITY), (-1.0, 1.0))?;
    let ex = vec![expect(Expected::Einstein { lambda: -1.0 }, 1e-7, Provenance::Derived)];
    warped_entry("warped_alpha0", 0.0, -1.0, fam, ex)
}

pub fn warped_alphaneg(alpha: f64) -> Result<CatalogEntry> {
    let fam = WarpedFamily::alpha_neg(alpha, (0.0, f64::INFINITY), (0.5, 2.0))?;
    use Provenance::*;
    let ex = vec![
        expect(Expected::Einstein { lambda: 0.0 }, 1e-7, Literature),
        expect(Expected::RicciFlat, 1e-7, Literature),
        expect(Expected::Flat, 1e-7, Literature),
    ];
    warped_entry("warped_alphaneg", alpha, -1.0, fam, ex)
}

pub fn warped_alpha_minus2() -> Result<CatalogEntry> {
    let fam = WarpedFamily::alpha_minus2((TAU0 - 0.1, TAU0 + 0.1), (TAU0 - 0.1, TAU0 + 0.1))?;
    use Provenance::*;
    let ex = vec![
        expect(Expected::Einstein { lambda: 0.0 }, 1e-7, Literature),
        expect(Expected::RicciFlat, 1e-7, Literature),
        expect(
            Expected::SectionalAbsAt {
                u: "x".into(),
                v: "y".into(),
                tau: TAU0,
                bound: 0.1,
            },
            0.0,
            Literature,
        ),
    ];
    warped_entry("warped_alpha_minus2", -2.0, -2.0, fam, ex)
}

pub fn warped_complete(lambda: f64) -> Result<CatalogEntry> {
    let fam = WarpedFamily::complete(lambda, (-2.0, 2.0))?;
    use Provenance::*;
    let sec = |u: &str, v: &str, value: f64| Expected::Sectional {
        u: u.into(),
        v: v.into(),
        value,
    };
    let ex = vec![
        expect(Expected::Einstein { lambda }, 1e-7, Derived),
        expect(Expected::CValue { value: -lambda / 3.0 }, 1e-9, Literature),
        expect(sec("k", "T", 2.0 * lambda / 3.0), 1e-8, Literature),
        expect(sec("x", "k", lambda / 6.0), 1e-8, Literature),
        expect(Expected::Complete { value: true }, 0.0, Literature),
    ];
    warped_entry("warped_complete", 0.0, -1.0, fam, ex)
}

/// Which checks to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Central,
    Ke,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Suite> {
        match s {
            "central" => Ok(Suite::Central),
            "ke" => Ok(Suite::Ke),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidParameters(format!(
                "unknown suite `{other}` (central, ke, all)"
            ))),
        }
    }
}

/// Pointwise Ricci and full-curvature maxima of `gK`.
fn curvature_maxima(km: &KahlerMetric, grid: &Grid) -> Result<(MaxResidual, MaxResidual)> {
    let per = grid.map(|p| {
        let fj = km.frame().jets(p, 2)?;
        let gj = connection_jets(&fj, p)?;
        let cj = curvature_jets(&fj, &gj, p)?;
        let mut ric: f64 = 0.0;
        for u in 0..4 {
            for v in 0..4 {
                ric = ric.max(cj.ricci(u, v).value().abs());
            }
        }
        let mut r: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        r = r.max(cj.lowered(&fj, a, b, c, d).value().abs());
                    }
                }
            }
        }
        Ok((ric, r))
    })?;
    let (mut ric, mut r) = (MaxResidual::new(), MaxResidual::new());
    for (v, p) in per.iter().zip(grid.points()) {
        ric.update(v.0, &p);
        r.update(v.1, &p);
    }
    Ok((ric, r))
}

fn residual_on_grid(field: &ScalarField, target: f64, grid: &Grid) -> Result<MaxResidual> {
    let vals = grid.map(|p| field.value(p))?;
    let mut m = MaxResidual::new();
    for (v, p) in vals.iter().zip(grid.points()) {
        m.update(v - target, &p);
    }
    Ok(m)
}

fn sectional_field(km: &KahlerMetric, u: usize, v: usize, grid: &Grid) -> Result<Vec<f64>> {
    grid.map(|p| {
        let fj = km.frame().jets(p, 2)?;
        let gj = connection_jets(&fj, p)?;
        let cj = curvature_jets(&fj, &gj, p)?;
        Ok(sectional_from_jets(&fj, &cj, u, v)?.value())
    })
}

fn expectation_check(
    rep: &mut VerificationReport,
    e: &Expectation,
    km: &KahlerMetric,
    model: &Model,
    grid: &Grid,
) -> Result<()> {
    let data = km.data();
    let id = format!("expect.{}", expectation_id(&e.expected));
    let tol = e.tol;
    let check = match &e.expected {
        Expected::Twist { value } => {
            let m = residual_on_grid(&data.twist(), *value, grid)?;
            rep.at_most(&id, &m, tol)
        }
        Expected::Q { value } => {
            let roles = data.roles;
            let per = grid.map(|p| {
                let fj = km.frame().jets(p, 2)?;
                let gj = connection_jets(&fj, p)?;
                let cj = curvature_jets(&fj, &gj, p)?;
                let tau = p[data.tau];
                Ok(tau.exp() * cj.ricci(roles.x, roles.x).value() / fj.g(roles.x, roles.x).value())
            })?;
            let mut m = MaxResidual::new();
            m.update(data.constants.q() - value, &[]);
            for (v, p) in per.iter().zip(grid.points()) {
                m.update(v - value, &p);
            }
            rep.at_most(&id, &m, tol)
        }
        Expected::STilde { value } => {
            let mut m = residual_on_grid(&conformal_scalar(km), *value, grid)?;
            m.update(data.constants.s_tilde() - value, &[]);
            rep.at_most(&id, &m, tol)
        }
        Expected::RicXx { value } => {
            let x = data.roles.x;
            let vals = grid.map(|p| {
                let fj = km.frame().jets(p, 2)?;
                let gj = connection_jets(&fj, p)?;
                Ok(curvature_jets(&fj, &gj, p)?.ricci(x, x).value())
            })?;
            let mut m = MaxResidual::new();
            for (v, p) in vals.iter().zip(grid.points()) {
                m.update(v - value, &p);
            }
            rep.at_most(&id, &m, tol)
        }
        Expected::CentralCurvature { value } => {
            let m = residual_on_grid(&central_curvature(km), *value, grid)?;
            rep.at_most(&id, &m, tol)
        }
        Expected::RicciFlat => {
            let (ric, _) = curvature_maxima(km, grid)?;
            rep.at_most(&id, &ric, tol)
        }
        Expected::Flat => {
            let (_, r) = curvature_maxima(km, grid)?;
            rep.at_most(&id, &r, tol)
        }
        Expected::Einstein { lambda } => {
            let per = grid.map(|p| {
                let fj = km.frame().jets(p, 2)?;
                let gj = connection_jets(&fj, p)?;
                let cj = curvature_jets(&fj, &gj, p)?;
                let mut r: f64 = 0.0;
                for u in 0..4 {
                    for v in 0..4 {
                        r = r.max((cj.ricci(u, v).value() - lambda * fj.g(u, v).value()).abs());
                    }
                }
                Ok(r)
            })?;
            let mut m = MaxResidual::new();
            for (v, p) in per.iter().zip(grid.points()) {
                m.update(*v, &p);
            }
            rep.at_most(&id, &m, tol)
        }
        Expected::Sectional { u, v, value } => {
            let (iu, iv) = (km.frame().index_of(u)?, km.frame().index_of(v)?);
            let vals = sectional_field(km, iu, iv, grid)?;
            let mut m = MaxResidual::new();
            for (x, p) in vals.iter().zip(grid.points()) {
                m.update(x - value, &p);
            }
            rep.at_most(&id, &m, tol)
        }
        Expected::SectionalAbsAt { u, v, tau, bound } => {
            let (iu, iv) = (km.frame().index_of(u)?, km.frame().index_of(v)?);
            let mut axes: Vec<Axis> = grid.axes().to_vec();
            let ti = data.tau;
            axes[ti] = Axis::new(&axes[ti].var, *tau, *tau, 1)?;
            let g1 = Grid::new(data.kset(), axes)?;
            let vals = sectional_field(km, iu, iv, &g1)?;
            let worst = vals.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
            rep.at_least(&id, worst, *bound, g1.points().first().cloned())
        }
        Expected::CValue { value } => {
            let m = residual_on_grid(km.c(), *value, grid)?;
            rep.at_most(&id, &m, tol)
        }
        Expected::Complete { value } => {
            let Model::Warped(w) = model else {
                rep.not_applicable(&id, "completeness applies to warped entries");
                return Ok(());
            };
            let v = completeness(&w.family, DIVERGENCE_BOUND)?;
            rep.flag(&id, v.complete == *value, format!("verdict complete = {}", v.complete))
        }
    };
    check.provenance = Some(e.provenance);
    Ok(())
}

fn expectation_id(e: &Expected) -> String {
    match e {
        Expected::Twist { .. } => "twist".into(),
        Expected::Q { .. } => "q".into(),
        Expected::STilde { .. } => "s_tilde".into(),
        Expected::RicXx { .. } => "ric_xx".into(),
        Expected::CentralCurvature { .. } => "central_curvature".into(),
        Expected::RicciFlat => "ricci_flat".into(),
        Expected::Flat => "flat".into(),
        Expected::Einstein { .. } => "einstein".into(),
        Expected::Sectional { u, v, .. } => format!("sectional_{u}{v}"),
        Expected::SectionalAbsAt { u, v, .. } => format!("sectional_abs_{u}{v}"),
        Expected::CValue { .. } => "c_value".into(),
        Expected::Complete { .. } => "complete".into(),
    }
}

/// Structure-level checks shared by both suites.
fn structure_checks(rep: &mut VerificationReport, data: &AdmissibleData, grid: &Grid) -> Option<KahlerMetric> {
    rep.absorb("structure", consistency_suite(&data.frame, grid));
    rep.absorb("admissible", check_admissible(data, grid));
    let km = match build_kahler(data) {
        Ok(k) => k,
        Err(e) => {
            rep.error("kahler", ENTRY_TOL, &e);
            return None;
        }
    };
    rep.absorb("kahler", km.verify(grid));
    rep.absorb("kahler_structure", consistency_suite(km.frame(), grid));
    rep.absorb("kahler_identities", curvature_identities(km.frame(), grid));
    rep.absorb("kahler_form", kahler_form_closed(&km, grid));
    rep.absorb("forms", forms_suite(&km, grid));
    Some(km)
}

fn finish(rep: &mut VerificationReport, entry: &CatalogEntry, km: &KahlerMetric, grid: &Grid) {
    for e in &entry.expectations {
        if let Err(err) = expectation_check(rep, e, km, &entry.model, grid) {
            rep.error(&format!("expect.{}", expectation_id(&e.expected)), e.tol, &err);
        }
    }
    match curvature_maxima(km, grid) {
        Ok((ric, r)) => {
            rep.attach("ricci_max", ric.value());
            rep.attach("curvature_max", r.value());
            rep.attach("ricci_flat", ric.value().is_some_and(|v| v <= ENTRY_TOL));
            rep.attach("flat", r.value().is_some_and(|v| v <= ENTRY_TOL));
        }
        Err(e) => rep.attach("curvature_error", e.to_string()),
    }
    if let Some(chart) = &entry.chart {
        match coordinate_crosscheck(chart, &entry.model) {
            Ok(c) => rep.absorb("chart", c),
            Err(e) => {
                rep.error("chart", CHART_TOL, &e);
            }
        }
    }
    rep.attach("expectations", &entry.expectations);
}

/// Runs a suite on an entry. A suite that does not apply to the entry's case is a usage error.
pub fn run_suite(entry: &CatalogEntry, suite: Suite, grid: Option<&Grid>) -> Result<VerificationReport> {
    let grid = grid.unwrap_or(&entry.grid);
    let name = match suite {
        Suite::Central => "central",
        Suite::Ke => "ke",
        Suite::All => "all",
    };
    let mut rep = VerificationReport::new(name).with_grid(grid);
    rep.attach("entry", &entry.id);
    match (&entry.model, suite) {
        (Model::Central(data), Suite::Central | Suite::All) => {
            let Some(km) = structure_checks(&mut rep, data, grid) else {
                return Ok(rep);
            };
            rep.absorb("central", central_suite(&km, grid));
            rep.absorb("left_invariance", left_invariance_check(&km, grid));
            finish(&mut rep, entry, &km, grid);
        }
        (Model::Warped(model), Suite::Ke | Suite::All) => {
            rep.absorb("ke", model.ke_suite(grid));
            let data = model.admissible()?;
            let km = build_kahler(&data)?;
            rep.absorb("kahler_identities", curvature_identities(km.frame(), grid));
            finish(&mut rep, entry, &km, grid);
        }
        (Model::Central(_), Suite::Ke) => {
            return Err(Error::InvalidParameters(format!(
                "entry `{}` is central; use --suite central",
                entry.id
            )))
        }
        (Model::Warped(_), Suite::Central) => {
            return Err(Error::InvalidParameters(format!(
                "entry `{}` is warped; use --suite ke",
                entry.id
            )))
        }
    }
    Ok(rep)
}

/// Family-only run: guards, ODE residual, completeness verdict on a τ grid.
pub fn run_family(fam: &WarpedFamily, n: usize) -> VerificationReport {
    let mut rep = family_suite(fam, n);
    match completeness(fam, DIVERGENCE_BOUND) {
        Ok(v) => rep.attach("completeness", v),
        Err(e) => rep.attach("completeness_error", e.to_string()),
    }
    rep
}

/// Einstein verdict for a family over a constant-twist fiber.
pub fn family_einstein(fam: &WarpedFamily, iota_bar: f64, n: usize) -> Result<VerificationReport> {
    let fiber = FiberData::standard(&KSet::empty(), None, fam.alpha, ScalarField::constant(0, iota_bar))?;
    let model = WarpedModel::new(fiber, fam.clone(), vec![])?;
    let grid = model.grid(n, 1)?;
    let km = build_kahler(&model.admissible()?)?;
    Ok(einstein_verdict(&km, fam.lambda, fam.c_const, &grid))
}

impl CatalogEntry {
    pub fn structure(&self) -> Structure {
        match &self.model {
            Model::Central(d) => Structure::Admissible(d.clone()),
            Model::Warped(m) => Structure::Warped(m.clone()),
        }
    }

    /// Entry for a parsed user structure, without expectations.
    pub fn from_structure(s: Structure, grid: Option<Grid>) -> Result<CatalogEntry> {
        let (model, default_grid) = match s {
            Structure::Admissible(d) => {
                let g = Grid::uniform(d.kset(), -1.0, 1.0, 3)?;
                (Model::Central(d), g)
            }
            Structure::Warped(m) => {
                let g = m.grid(7, 3)?;
                (Model::Warped(m), g)
            }
            Structure::Fiber(_) => {
                return Err(Error::InvalidParameters(
                    "a bare fiber document needs a family to be verified".into(),
                ))
            }
        };
        Ok(CatalogEntry {
            id: "config".into(),
            description: "user structure".into(),
            model,
            grid: grid.unwrap_or(default_grid),
            expectations: vec![],
            chart: None,
        })
    }

    /// Human-readable summary for `catalog show`.
    pub fn summary(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "id": self.id,
            "description": self.description,
            "grid": self.grid.to_string(),
            "expectations": self.expectations,
        });
        match &self.model {
            Model::Central(d) => {
                v["case"] = "central".into();
                v["constants"] = serde_json::to_value(d.constants).unwrap_or_default();
                v["kset"] = serde_json::to_value(d.kset().names()).unwrap_or_default();
                v["twist"] = d
                    .twist()
                    .to_expr_string(d.kset())
                    .unwrap_or_else(|_| "<computed>".into())
                    .into();
                v["f"] = d.f.to_expr_string(d.kset()).unwrap_or_default().into();
            }
            Model::Warped(m) => {
                v["case"] = "warped".into();
                v["alpha"] = m.fiber.alpha.into();
                v["iota_bar"] = m
                    .fiber
                    .iota_bar
                    .to_expr_string(m.fiber.kset())
                    .unwrap_or_default()
                    .into();
                v["lambda"] = m.family.lambda.into();
                v["C"] = m.family.c_const.into();
                v["family"] = m.family.name.clone().into();
                v["formula"] = m.family.formula.clone().into();
            }
        }
        v
    }
}
