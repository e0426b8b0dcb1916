//! Lorentzian warped products `−dτ² + w(τ)² ḡ`: fiber data, lifting, the Kähler–Einstein
//! ODE and fiber PDE, the closed-form families, and the completeness analyzer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{connection_jets, consistency_suite, curvature_jets, sectional_from_jets, FrameStructure, Roles};
use crate::grid::{Axis, Grid};
use crate::kahler::{
    build_kahler, check_admissible, forms_suite, gamma_form_jets, kahler_form_closed, ricci_form_jets, AdmissibleData,
    Case, Constants, KahlerMetric, WarpedData,
};
use crate::report::{Samples, VerificationReport};
use crate::scalar::{make_closed_form, solve_implicit_w, KSet, ScalarField};

pub const FIBER_TOL: f64 = 1e-8;
pub const ODE_TOL: f64 = 1e-9;
pub const EINSTEIN_TOL: f64 = 1e-7;
pub const DIVERGENCE_BOUND: f64 = 1e6;
pub const SIMPSON_REL_TOL: f64 = 1e-9;
pub const TAU: &str = "tau";

/// `τ₀ = 1 − π/4`, with `x(τ₀) = −π/4` on the implicit branch.
pub const TAU0: f64 = 1.0 - std::f64::consts::FRAC_PI_4;
pub const X0: f64 = -std::f64::consts::FRAC_PI_4;

/// Fiber 3-frame `(k̄, x̄, ȳ)` with bracket constant `α` and twist `ῑ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberData {
    pub frame: FrameStructure,
    pub alpha: f64,
    pub iota_bar: ScalarField,
}

const KB: usize = 0;
const XB: usize = 1;
const YB: usize = 2;

impl FiberData {
    pub fn new(frame: FrameStructure, alpha: f64, iota_bar: ScalarField) -> Result<FiberData> {
        if frame.n() != 3 {
            return Err(Error::InvalidStructure(
                "fiber needs a 3-frame (kbar, xbar, ybar)".into(),
            ));
        }
        if iota_bar.nvars() != frame.kset().len() {
            return Err(Error::InvalidStructure("twist must live on the fiber k-set".into()));
        }
        if frame.kset().names().iter().any(|n| n == TAU) {
            return Err(Error::InvalidKSet(format!("fiber variables may not be named `{TAU}`")));
        }
        Ok(FiberData { frame, alpha, iota_bar })
    }

    /// Orthonormal frame with `[k̄,x̄] = αȳ`, `[k̄,ȳ] = −αx̄`, `[x̄,ȳ] = ῑk̄`; `x̄, ȳ` act as unit
    /// partials on optional plane variables.
    pub fn standard(kset: &KSet, plane: Option<(&str, &str)>, alpha: f64, iota_bar: ScalarField) -> Result<FiberData> {
        let nv = kset.len();
        let one = ScalarField::constant(nv, 1.0);
        let mut b = FrameStructure::builder(kset, &["kbar", "xbar", "ybar"])?
            .metric(KB, KB, one.clone())?
            .metric(XB, XB, one.clone())?
            .metric(YB, YB, one.clone())?
            .bracket(KB, XB, YB, ScalarField::constant(nv, alpha))?
            .bracket(KB, YB, XB, ScalarField::constant(nv, -alpha))?
            .bracket(XB, YB, KB, iota_bar.clone())?;
        if let Some((px, py)) = plane {
            b = b
                .derivative(XB, kset.index_of(px)?, one.clone())?
                .derivative(YB, kset.index_of(py)?, one)?;
        }
        FiberData::new(b.build()?, alpha, iota_bar)
    }

    pub fn kset(&self) -> &KSet {
        self.frame.kset()
    }

    fn dir(&self, a: usize, f: &ScalarField) -> ScalarField {
        self.frame
            .directional_derivative(a, f)
            .expect("fiber fields share the fiber k-set")
    }

    /// `(d_x̄² + d_ȳ²) F` with fiber frame derivatives.
    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        &self.dir(XB, &self.dir(XB, f)) + &self.dir(YB, &self.dir(YB, f))
    }
}

/// Unit, geodesic, shear-free `k̄`, the bracket pattern, `d_k̄ ῑ = 0` and `ῑ < 0`.
pub fn check_fiber(fiber: &FiberData, grid: &Grid) -> VerificationReport {
    let mut rep = VerificationReport::new("fiber").with_grid(grid);
    let s = &fiber.frame;
    let ib = &fiber.iota_bar;
    let per = grid.map(|p| {
        let mut smp = Samples::new();
        let fj = s.jets(p, 1)?;
        let g = |a: usize, b: usize| fj.g(a, b).value();
        let c = |a: usize, b: usize, e: usize| fj.c(a, b, e).value();
        smp.abs("kbar_unit", g(KB, KB) - 1.0, p);
        for (a, b, v) in [
            (KB, XB, 0.0),
            (KB, YB, 0.0),
            (XB, YB, 0.0),
            (XB, XB, 1.0),
            (YB, YB, 1.0),
        ] {
            smp.abs("frame_orthonormal", g(a, b) - v, p);
        }
        let ibj = ib.jet(p, 1)?;
        let iv = ibj.value();
        let expect = |a: usize, b: usize, e: usize| match (a, b, e) {
            (KB, XB, YB) => fiber.alpha,
            (KB, YB, XB) => -fiber.alpha,
            (XB, YB, KB) => iv,
            _ => 0.0,
        };
        for (a, b) in [(KB, XB), (KB, YB), (XB, YB)] {
            for e in 0..3 {
                smp.abs("bracket_pattern", c(a, b, e) - expect(a, b, e), p);
            }
        }
        let gj = connection_jets(&fj, p)?;
        for e in 0..3 {
            smp.abs("kbar_geodesic", gj.get(KB, KB, e).value(), p);
        }
        let gl = |u: usize, w: usize| (0..3).map(|e| c(KB, u, e) * g(e, w)).sum::<f64>();
        smp.abs("kbar_shear_free", gl(XB, YB) + gl(YB, XB), p);
        smp.abs("kbar_shear_free", gl(XB, XB) - gl(YB, YB), p);
        smp.abs("iota_bar_kbar_invariant", fj.dir(KB, &ibj).value(), p);
        let tw: f64 = (0..3).map(|e| c(XB, YB, e) * g(e, KB)).sum();
        smp.abs("twist_matches", tw - iv, p);
        smp.min("iota_bar_negative", -iv, p);
        Ok(smp)
    });
    match per {
        Ok(v) => {
            let smp = Samples::collect(&v);
            for id in [
                "kbar_unit",
                "frame_orthonormal",
                "bracket_pattern",
                "kbar_geodesic",
                "kbar_shear_free",
                "iota_bar_kbar_invariant",
                "twist_matches",
            ] {
                rep.sampled(&smp, id, FIBER_TOL);
            }
            let (v, p) = smp.min_of("iota_bar_negative").unwrap_or((f64::NAN, Vec::new()));
            rep.at_least("iota_bar_negative", v, f64::MIN_POSITIVE, Some(p));
        }
        Err(e) => {
            rep.error("evaluation", FIBER_TOL, &e);
        }
    }
    rep.absorb("fiber_structure", consistency_suite(s, grid));
    rep
}

/// `τ`-only k-set used by family fields.
pub fn tau_kset() -> KSet {
    KSet::new(&[TAU]).expect("valid k-set")
}

/// Lifted k-set `(τ, fiber variables…)`.
pub fn lifted_kset(fiber: &KSet) -> Result<KSet> {
    let mut names = vec![TAU.to_string()];
    names.extend(fiber.names().iter().cloned());
    KSet::new(&names)
}

/// Lift to `N × ℝ`: `k = k̄/w + ∂τ`, `T = −∂τ`, `x = x̄/w`, `y = ȳ/w`. `w, f` are fields of `τ`;
/// `tau_grid` is used to confirm `w > 0`.
pub fn lift_fiber(fiber: &FiberData, w: &ScalarField, f: &ScalarField, tau_grid: &Grid) -> Result<AdmissibleData> {
    if w.nvars() != 1 || f.nvars() != 1 {
        return Err(Error::InvalidStructure("w and f must be fields of tau alone".into()));
    }
    for p in tau_grid.points() {
        let v = w.value(&p)?;
        if !(v > 0.0) {
            return Err(Error::Domain(format!(
                "warping function w = {v} is not positive at tau = {}",
                p[0]
            )));
        }
    }
    let fk = fiber.kset();
    let kset = lifted_kset(fk)?;
    let nv = kset.len();
    let map_fiber: Vec<usize> = (1..nv).collect();
    let lift = |g: &ScalarField| g.reindex(&map_fiber, nv);
    let w = w.reindex(&[0], nv)?;
    let f = f.reindex(&[0], nv)?;
    let wp = w.d(0);
    let lw = &wp / &w;
    let inv_w = &ScalarField::constant(nv, 1.0) / &w;
    let zero = ScalarField::zero(nv);

    // work in L = (k̄/w, T, x, y), then change to F = (k, T, x, y) with k = L0 − L1
    let fiber_of = [Some(KB), None, Some(XB), Some(YB)];
    let mut lb: Vec<Vec<ScalarField>> = vec![vec![zero.clone(); 4]; 16];
    for i in 0..4 {
        for j in 0..4 {
            let out = &mut lb[i * 4 + j];
            match (fiber_of[i], fiber_of[j]) {
                (Some(a), Some(b)) => {
                    for e in 0..4 {
                        if let Some(c) = fiber_of[e] {
                            out[e] = &lift(fiber.frame.c(a, b, c))? * &inv_w;
                        }
                    }
                }
                (None, Some(_)) => out[j] = lw.clone(),
                (Some(_), None) => out[i] = -lw.clone(),
                (None, None) => {}
            }
        }
    }
    // F_a = Σ_i M_ai L_i
    let m = |a: usize, i: usize| -> f64 {
        match (a, i) {
            (0, 0) => 1.0,
            (0, 1) => -1.0,
            (a, i) if a == i => 1.0,
            _ => 0.0,
        }
    };
    // L coordinates (c0..c3) to F coordinates: L0 = F0 + F1
    let to_f =
        |l: &[ScalarField]| -> Vec<ScalarField> { vec![l[0].clone(), &l[0] + &l[1], l[2].clone(), l[3].clone()] };
    let mut b = FrameStructure::builder(&kset, &["k", "T", "x", "y"])?;
    for a in 0..4 {
        for bb in (a + 1)..4 {
            let mut acc = vec![zero.clone(); 4];
            for i in 0..4 {
                for j in 0..4 {
                    let coef = m(a, i) * m(bb, j);
                    if coef != 0.0 {
                        for e in 0..4 {
                            acc[e] = &acc[e] + &lb[i * 4 + j][e].scale(coef);
                        }
                    }
                }
            }
            for (e, fe) in to_f(&acc).into_iter().enumerate() {
                if fe.constant_value() != Some(0.0) {
                    b = b.bracket(a, bb, e, fe)?;
                }
            }
        }
    }
    // metric: g(Â, B̂) = ḡ(A, B), g(T, T) = −1, g(T, Â) = 0
    let lg = |i: usize, j: usize| -> Result<ScalarField> {
        Ok(match (fiber_of[i], fiber_of[j]) {
            (Some(a), Some(c)) => lift(fiber.frame.g(a, c))?,
            (None, None) => ScalarField::constant(nv, -1.0),
            _ => zero.clone(),
        })
    };
    for a in 0..4 {
        for c in a..4 {
            let mut acc = zero.clone();
            for i in 0..4 {
                for j in 0..4 {
                    let coef = m(a, i) * m(c, j);
                    if coef != 0.0 {
                        acc = &acc + &lg(i, j)?.scale(coef);
                    }
                }
            }
            if acc.constant_value() != Some(0.0) {
                b = b.metric(a, c, acc)?;
            }
        }
    }
    // derivative table: Â(u_i) = D̄[A][i]/w, T(τ) = −1
    for a in 0..4 {
        if a == 1 {
            b = b.derivative(1, 0, ScalarField::constant(nv, -1.0))?;
            continue;
        }
        let src = fiber_of[a].expect("fiber-backed frame field");
        for i in 0..fk.len() {
            let d = fiber.frame.d(src, i);
            if d.constant_value() != Some(0.0) {
                b = b.derivative(a, i + 1, &lift(d)? * &inv_w)?;
            }
        }
        if a == 0 {
            b = b.derivative(0, 0, ScalarField::constant(nv, 1.0))?;
        }
    }
    let frame = b.build()?;
    let constants = Constants {
        a: 1.0,
        b: -1.0,
        alpha: fiber.alpha,
        beta: 0.0,
        ell: 1.0,
    };
    AdmissibleData::new(
        frame,
        Roles::default(),
        constants,
        f,
        0,
        Case::Warped(WarpedData {
            w,
            iota_bar: lift(&fiber.iota_bar)?,
        }),
    )
}

/// A solution candidate `(f, w)` of the Kähler–Einstein ODE with constants `α, λ, C`.
#[derive(Clone, Debug)]
pub struct WarpedFamily {
    pub name: String,
    pub alpha: f64,
    pub lambda: f64,
    pub c_const: f64,
    pub f: ScalarField,
    pub w: ScalarField,
    /// Admissible interval; ends may be infinite.
    pub interval: (f64, f64),
    /// Finite box used for grid checks.
    pub sample: (f64, f64),
    /// Numerically stable form of `c = (fw)'/w`, when the family has one.
    pub c_closed: Option<ScalarField>,
    pub formula: String,
    pub spec: FamilySpec,
}

/// Constructor parameters of a family, as stored in documents and passed on the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Alpha0 {
        lambda: f64,
        a1: f64,
        a2: f64,
        #[serde(with = "bounds")]
        interval: (f64, f64),
        #[serde(with = "bounds")]
        sample: (f64, f64),
    },
    #[serde(rename = "alphaneg")]
    AlphaNeg {
        alpha: f64,
        #[serde(with = "bounds")]
        interval: (f64, f64),
        #[serde(with = "bounds")]
        sample: (f64, f64),
    },
    AlphaMinus2 {
        #[serde(with = "bounds")]
        interval: (f64, f64),
        #[serde(with = "bounds")]
        sample: (f64, f64),
    },
    Complete {
        lambda: f64,
        #[serde(with = "bounds")]
        sample: (f64, f64),
    },
    Custom {
        alpha: f64,
        lambda: f64,
        c: f64,
        f: String,
        w: String,
        #[serde(with = "bounds")]
        interval: (f64, f64),
        #[serde(with = "bounds")]
        sample: (f64, f64),
    },
}

/// Interval ends as JSON numbers, with `"inf"` / `"-inf"` for unbounded ends.
pub mod bounds {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum End {
        Num(f64),
        Text(String),
    }

    fn put(v: f64) -> End {
        if v.is_finite() {
            End::Num(v)
        } else {
            End::Text(if v > 0.0 { "inf" } else { "-inf" }.into())
        }
    }

    fn get<E: serde::de::Error>(e: End) -> Result<f64, E> {
        match e {
            End::Num(v) => Ok(v),
            End::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("interval end `{other}` is not a number or +/-inf"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
        [put(v.0), put(v.1)].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        let v = Vec::<End>::deserialize(d)?;
        if v.len() != 2 {
            return Err(D::Error::custom("an interval is a pair [lo, hi]"));
        }
        let mut it = v.into_iter();
        Ok((get(it.next().unwrap())?, get(it.next().unwrap())?))
    }
}

impl FamilySpec {
    pub fn build(&self) -> Result<WarpedFamily> {
        match self.clone() {
            FamilySpec::Alpha0 {
                lambda,
                a1,
                a2,
                interval,
                sample,
            } => WarpedFamily::alpha0(lambda, a1, a2, interval, sample),
            FamilySpec::AlphaNeg {
                alpha,
                interval,
                sample,
            } => WarpedFamily::alpha_neg(alpha, interval, sample),
            FamilySpec::AlphaMinus2 { interval, sample } => WarpedFamily::alpha_minus2(interval, sample),
            FamilySpec::Complete { lambda, sample } => WarpedFamily::complete(lambda, sample),
            FamilySpec::Custom {
                alpha,
                lambda,
                c,
                f,
                w,
                interval,
                sample,
            } => WarpedFamily::custom(alpha, lambda, c, &f, &w, interval, sample),
        }
    }
}

fn num(v: f64) -> String {
    format!("({v:?})")
}

impl WarpedFamily {
    fn build(
        name: &str,
        alpha: f64,
        lambda: f64,
        c_const: f64,
        f: &str,
        w: &str,
        interval: (f64, f64),
        sample: (f64, f64),
        c_closed: Option<&str>,
        spec: FamilySpec,
    ) -> Result<WarpedFamily> {
        let k = tau_kset();
        if !(sample.0 < sample.1) || sample.0 < interval.0 || sample.1 > interval.1 {
            return Err(Error::InvalidParameters(format!(
                "sample box {sample:?} must lie inside {interval:?}"
            )));
        }
        Ok(WarpedFamily {
            name: name.to_string(),
            alpha,
            lambda,
            c_const,
            f: make_closed_form(&k, f)?,
            w: make_closed_form(&k, w)?,
            interval,
            sample,
            c_closed: c_closed.map(|c| make_closed_form(&k, c)).transpose()?,
            formula: format!("f = {f}, w = {w}"),
            spec,
        })
    }

    /// `α = 0`, `f = 1`, `w = (3(a₁p + a₂))^{1/3}` with `p = e^{−λτ}/(−λ)` (or `τ` when `λ = 0`).
    pub fn alpha0(lambda: f64, a1: f64, a2: f64, interval: (f64, f64), sample: (f64, f64)) -> Result<WarpedFamily> {
        if a1 == 0.0 {
            return Err(Error::InvalidParameters("a1 must be nonzero".into()));
        }
        let (p, c) = if lambda == 0.0 {
            (
                "tau".to_string(),
                format!("{}/(3*({}*tau + {}))", num(a1), num(a1), num(a2)),
            )
        } else {
            (
                format!("exp({}*tau)/{}", num(-lambda), num(-lambda)),
                format!(
                    "{}/(3*({}/{} + {}*exp({}*tau)))",
                    num(a1),
                    num(a1),
                    num(-lambda),
                    num(a2),
                    num(lambda)
                ),
            )
        };
        let w = format!("(3*({}*{p} + {}))^(1/3)", num(a1), num(a2));
        let spec = FamilySpec::Alpha0 {
            lambda,
            a1,
            a2,
            interval,
            sample,
        };
        let mut fam = WarpedFamily::build("alpha0", 0.0, lambda, 0.0, "1", &w, interval, sample, Some(&c), spec)?;
        fam.formula = format!(
            "f = 1, w = (3(a1 p(tau) + a2))^(1/3), p = {}; a1 = {a1}, a2 = {a2}, lambda = {lambda}",
            if lambda == 0.0 {
                "tau".to_string()
            } else {
                "exp(-lambda tau)/(-lambda)".to_string()
            }
        );
        Ok(fam)
    }

    /// `α < 0`, `λ = 0`: `f = τ^{−(1+α/2)}`, `w = τ` on `τ > 0`.
    pub fn alpha_neg(alpha: f64, interval: (f64, f64), sample: (f64, f64)) -> Result<WarpedFamily> {
        if !(alpha < 0.0) {
            return Err(Error::InvalidParameters(format!("alpha must be negative, got {alpha}")));
        }
        if !(interval.0 >= 0.0) {
            return Err(Error::InvalidParameters(
                "the negative-alpha family lives on tau > 0".into(),
            ));
        }
        let f = format!("tau^({})", num(-(1.0 + alpha / 2.0)));
        let spec = FamilySpec::AlphaNeg {
            alpha,
            interval,
            sample,
        };
        WarpedFamily::build("alphaneg", alpha, 0.0, 0.0, &f, "tau", interval, sample, None, spec)
    }

    /// `α = −2`, `λ = 0`: `f = 1`, `w = −tan x(τ)` with `x = τ + tan x` on the branch through `(τ₀, −π/4)`.
    pub fn alpha_minus2(interval: (f64, f64), sample: (f64, f64)) -> Result<WarpedFamily> {
        if !(interval.0 < TAU0 && TAU0 < interval.1) || interval.1 - interval.0 > 0.5 {
            return Err(Error::InvalidParameters(format!(
                "interval {interval:?} must be a short interval around tau0 = {TAU0}"
            )));
        }
        let w = format!("-tan(tanroot(tau, {}))", num(X0));
        let spec = FamilySpec::AlphaMinus2 { interval, sample };
        let mut fam = WarpedFamily::build("alpha_minus2", -2.0, 0.0, 0.0, "1", &w, interval, sample, None, spec)?;
        fam.formula = "f = 1, w = -tan(x(tau)), x(tau) = tau + tan(x(tau)), x(1 - pi/4) = -pi/4".into();
        Ok(fam)
    }

    /// `α = 0`, `f = 1`, `w = −(3e^{−λτ}/λ)^{1/3}` for `λ < 0`, on all of `ℝ`.
    pub fn complete(lambda: f64, sample: (f64, f64)) -> Result<WarpedFamily> {
        if !(lambda < 0.0) {
            return Err(Error::InvalidParameters("the complete example needs lambda < 0".into()));
        }
        let mut fam = WarpedFamily::alpha0(lambda, 1.0, 0.0, (f64::NEG_INFINITY, f64::INFINITY), sample)?;
        fam.name = "complete".into();
        fam.spec = FamilySpec::Complete { lambda, sample };
        fam.formula = format!("f = 1, w = (-3 exp(-lambda tau)/lambda)^(1/3); lambda = {lambda}");
        Ok(fam)
    }

    /// Arbitrary `f, w` given as expressions in `tau`.
    pub fn custom(
        alpha: f64,
        lambda: f64,
        c_const: f64,
        f: &str,
        w: &str,
        interval: (f64, f64),
        sample: (f64, f64),
    ) -> Result<WarpedFamily> {
        let spec = FamilySpec::Custom {
            alpha,
            lambda,
            c: c_const,
            f: f.to_string(),
            w: w.to_string(),
            interval,
            sample,
        };
        WarpedFamily::build("custom", alpha, lambda, c_const, f, w, interval, sample, None, spec)
    }

    pub fn tau_grid(&self, n: usize) -> Result<Grid> {
        Grid::new(&tau_kset(), vec![Axis::new(TAU, self.sample.0, self.sample.1, n)?])
    }

    /// `c = (fw)'/w` from the definition.
    pub fn c(&self) -> ScalarField {
        &(&self.f * &self.w).d(0) / &self.w
    }

    /// `c` for evaluation far out on the interval: the stable form when available.
    pub fn c_for_quadrature(&self) -> ScalarField {
        self.c_closed.clone().unwrap_or_else(|| self.c())
    }
}

/// `L + λ(C/w + f)` with `L = (fw)''/(fw)' + 2w'/w + f'/f + α/w`.
pub fn ke_ode_residual(fam: &WarpedFamily) -> ScalarField {
    let (f, w) = (&fam.f, &fam.w);
    let fwp = (f * w).d(0);
    let l = &(&(&fwp.d(0) / &fwp) + &(&w.d(0) / w).scale(2.0))
        + &(&(&f.d(0) / f) + &(&ScalarField::constant(1, fam.alpha) / w));
    let rhs = &(&ScalarField::constant(1, fam.c_const) / w) + f;
    &l + &rhs.scale(fam.lambda)
}

/// `(d_x̄² + d_ȳ²) log|ῑ| + 2λCῑ` on the fiber.
pub fn ke_pde_residual(fiber: &FiberData, lambda: f64, c_const: f64) -> ScalarField {
    let ib = &fiber.iota_bar;
    &fiber.laplacian(&ib.abs().ln()) + &ib.scale(2.0 * lambda * c_const)
}

/// Guards of a family on its sample grid: `f > 0`, `w > 0`, `(fw)' > 0`, stable `c` agreement,
/// and the ODE residual.
pub fn family_suite(fam: &WarpedFamily, n: usize) -> VerificationReport {
    let mut rep = VerificationReport::new("ke_family");
    let grid = match fam.tau_grid(n) {
        Ok(g) => g,
        Err(e) => {
            rep.error("grid", ODE_TOL, &e);
            return rep;
        }
    };
    rep = rep.with_grid(&grid);
    let ode = ke_ode_residual(fam);
    let fwp = (&fam.f * &fam.w).d(0);
    let c_def = fam.c();
    let c_log = &c_def.d(0) / &c_def;
    let c_log_expected = &(&fwp.d(0) / &fwp) - &(&fam.w.d(0) / &fam.w);
    let per = grid.map(|p| {
        let mut s = Samples::new();
        s.abs("ke_ode_residual", ode.value(p)?, p);
        s.abs("c_log_derivative", c_log.value(p)? - c_log_expected.value(p)?, p);
        s.min("f_positive", fam.f.value(p)?, p);
        s.min("w_positive", fam.w.value(p)?, p);
        s.min("fw_prime_positive", fwp.value(p)?, p);
        if let Some(cc) = &fam.c_closed {
            s.abs("c_stable_form", cc.value(p)? - c_def.value(p)?, p);
        }
        Ok(s)
    });
    match per {
        Ok(v) => {
            let s = Samples::collect(&v);
            rep.sampled(&s, "ke_ode_residual", ODE_TOL);
            rep.sampled(&s, "c_log_derivative", 1e-10);
            for id in ["f_positive", "w_positive", "fw_prime_positive"] {
                let (v, p) = s.min_of(id).unwrap_or((f64::NAN, Vec::new()));
                rep.at_least(id, v, f64::MIN_POSITIVE, Some(p));
            }
            if fam.c_closed.is_some() {
                rep.sampled(&s, "c_stable_form", 1e-10);
            }
        }
        Err(e) => {
            rep.error("evaluation", ODE_TOL, &e);
        }
    }
    if fam.name == "alpha_minus2" {
        match solve_implicit_w(TAU0, X0) {
            Ok(x) => {
                rep.at_most_value("implicit_x0", x - X0, 1e-12);
                let wv = fam.w.jet(&[TAU0], 1);
                if let Ok(j) = wv {
                    rep.attach("w_tau0", j.value());
                    rep.attach("w_prime_tau0", j.first(0));
                }
            }
            Err(e) => {
                rep.error("implicit_x0", 1e-12, &e);
            }
        }
    }
    rep.attach("formula", &fam.formula);
    rep
}

/// Result of the `s = ∫√(c/2) dτ` divergence test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletenessVerdict {
    /// `(inf s, sup s)` reached, with `s(anchor) = 0`.
    pub s_range: (f64, f64),
    pub lower_divergent: bool,
    pub upper_divergent: bool,
    pub complete: bool,
    pub anchor: f64,
}

fn simpson_rec(
    f: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)?)
}

/// Adaptive Simpson quadrature with relative tolerance `rel`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, rel: f64) -> Result<f64> {
    let (fa, fb) = (f(a)?, f(b)?);
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let eps = rel * whole.abs().max(f64::MIN_POSITIVE);
    simpson_rec(f, a, b, fa, fm, fb, whole, eps, 48)
}

const MAX_EXPANSIONS: usize = 64;
const GROWTH_CONFIRMATIONS: usize = 3;

/// Integrates `√(c/2)` from an interior anchor toward each end of the interval.
pub fn completeness(fam: &WarpedFamily, bound: f64) -> Result<CompletenessVerdict> {
    let (lo, hi) = fam.interval;
    let anchor = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 1.0,
        (false, true) => hi - 1.0,
        (false, false) => 0.5 * (fam.sample.0 + fam.sample.1),
    };
    let c = fam.c_for_quadrature();
    let integrand = |t: f64| -> Result<f64> {
        let v = c.value(&[t])?;
        if !(v > 0.0) {
            return Err(Error::Domain(format!("c = (fw)'/w = {v} is not positive at tau = {t}")));
        }
        Ok((0.5 * v).sqrt())
    };
    let side = |end: f64, sign: f64| -> Result<(f64, bool)> {
        let mut total = 0.0;
        let mut prev = anchor;
        let mut history = vec![0.0];
        for k in 0..MAX_EXPANSIONS {
            let next = if end.is_finite() {
                end - (end - anchor) * 0.5f64.powi(k as i32 + 1)
            } else {
                anchor + sign * 2f64.powi(k as i32)
            };
            if next == prev || next == end {
                break;
            }
            let (a, b) = if next > prev { (prev, next) } else { (next, prev) };
            total += adaptive_simpson(&integrand, a, b, SIMPSON_REL_TOL)?;
            prev = next;
            history.push(total);
            let n = history.len();
            let growing =
                n > GROWTH_CONFIRMATIONS && history[n - 1 - GROWTH_CONFIRMATIONS..].windows(2).all(|w| w[1] > w[0]);
            if total > bound && growing {
                return Ok((total, true));
            }
            if n > 2 && (history[n - 1] - history[n - 2]).abs() <= 1e-14 * total.abs() {
                break;
            }
        }
        Ok((total, false))
    };
    let (up, up_div) = side(hi, 1.0)?;
    let (down, down_div) = side(lo, -1.0)?;
    Ok(CompletenessVerdict {
        s_range: (-down, up),
        lower_divergent: down_div,
        upper_divergent: up_div,
        complete: up_div && down_div,
        anchor,
    })
}

/// `K = −Δ log|ῑ| / (2ῑ)` for the quotient metric pulling back to `ῑ ḡ|_H`, against the fiber PDE.
pub fn quotient_gauss(fiber: &FiberData) -> ScalarField {
    let ib = &fiber.iota_bar;
    -(&fiber.laplacian(&ib.abs().ln()) / &ib.scale(2.0))
}

/// Constancy of the quotient Gauss curvature versus solvability of the fiber PDE for some constant.
pub fn quotient_gauss_check(fiber: &FiberData, lambda: f64, c_const: f64, grid: &Grid) -> VerificationReport {
    let mut rep = VerificationReport::new("quotient_gauss").with_grid(grid);
    let k = quotient_gauss(fiber);
    let ib = &fiber.iota_bar;
    let lap = fiber.laplacian(&ib.abs().ln());
    let res = ke_pde_residual(fiber, lambda, c_const);
    let per = grid.map(|p| Ok((k.value(p)?, lap.value(p)?, ib.value(p)?, res.value(p)?)));
    let vals = match per {
        Ok(v) => v,
        Err(e) => {
            rep.error("evaluation", FIBER_TOL, &e);
            return rep;
        }
    };
    let ks: Vec<f64> = vals.iter().map(|v| v.0).collect();
    let constant = crate::central::is_constant_on_grid(&ks);
    let (kappa, fit_res) = crate::central::fit_liouville(&vals.iter().map(|v| (v.1, v.2)).collect::<Vec<_>>());
    let pde_solvable = fit_res <= FIBER_TOL && kappa.is_finite();
    rep.flag(
        "gauss_constant_iff_pde_solvable",
        constant == pde_solvable,
        if constant == pde_solvable {
            ""
        } else {
            "verdicts disagree"
        },
    );
    let given = vals.iter().map(|v| v.3.abs()).fold(0.0, f64::max);
    let mut m = crate::report::MaxResidual::new();
    for (v, p) in vals.iter().zip(grid.points()) {
        if given <= FIBER_TOL {
            m.update(v.0 - lambda * c_const, &p);
        }
    }
    if given <= FIBER_TOL {
        rep.at_most("gauss_equals_lambda_c", &m, FIBER_TOL);
    }
    rep.attach("gauss_constant", constant);
    rep.attach("pde_solvable", pde_solvable);
    rep.attach("fitted_minus_2_lambda_c", kappa);
    rep.attach("ke_n_residual", given);
    rep.attach("gauss_curvature", ks.first().copied());
    rep
}

#[derive(Clone, Debug, Serialize)]
pub struct SectionalSummary {
    pub plane: (String, String),
    pub min: f64,
    pub max: f64,
}

/// `Ric_K − λ gK` from the Ricci-form route, the tensor route, flatness flags, sectional
/// curvatures, and consistency with the ODE / fiber PDE residuals.
pub fn einstein_verdict(km: &KahlerMetric, lambda: f64, c_const: f64, grid: &Grid) -> VerificationReport {
    let mut rep = VerificationReport::new("einstein").with_grid(grid);
    let a = km.data();
    let Case::Warped(wd) = &a.case else {
        rep.not_applicable("einstein", "Einstein verdict needs warped-case data");
        return rep;
    };
    let roles = a.roles;
    let nv = a.kset().len();
    let w = &wd.w;
    let f = &a.f;
    let fwp = (f * w).d(a.tau);
    let l = &(&(&fwp.d(a.tau) / &fwp) + &(&w.d(a.tau) / w).scale(2.0))
        + &(&(&f.d(a.tau) / f) + &(&ScalarField::constant(nv, a.constants.alpha) / w));
    let ode = &l + &(&(&ScalarField::constant(nv, c_const) / w) + f).scale(lambda);
    let ib = &wd.iota_bar;
    // lifted d_x = d_x̄ / w
    let pde = &(&a.h_laplacian(&ib.abs().ln()) * &(w * w)) + &ib.scale(2.0 * lambda * c_const);
    let planes = [(roles.k, roles.t), (roles.x, roles.k), (roles.x, roles.y)];
    let per = grid.map(|p| {
        let mut s = Samples::new();
        let fj = km.frame().jets(p, 3)?;
        let gj = connection_jets(&fj, p)?;
        let rho = ricci_form_jets(&fj, &gamma_form_jets(&gj, &roles));
        let cj = curvature_jets(&fj, &gj, p)?;
        for u in 0..4 {
            for v in 0..4 {
                let (su, ju) = roles.j(u);
                let ric_form = -su * rho[ju * 4 + v].re.value();
                s.abs("einstein_residual", ric_form - lambda * fj.g(u, v).value(), p);
                s.abs(
                    "einstein_residual_tensor",
                    cj.ricci(u, v).value() - lambda * fj.g(u, v).value(),
                    p,
                );
                s.abs("ricci", cj.ricci(u, v).value(), p);
            }
        }
        let mut rmax: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for m in 0..4 {
                        rmax = rmax.max(cj.lowered(&fj, i, j, k, m).value().abs());
                    }
                }
            }
        }
        s.abs("curvature", rmax, p);
        let mut sec = Vec::new();
        for &(u, v) in &planes {
            sec.push(sectional_from_jets(&fj, &cj, u, v)?.value());
        }
        s.abs("ke_ode_residual", ode.value(p)?, p);
        s.abs("ke_pde_residual", pde.value(p)?, p);
        Ok((s, sec))
    });
    let (s, secs) = match per {
        Ok(v) => {
            let s = Samples::collect(&v.iter().map(|x| x.0.clone()).collect::<Vec<_>>());
            (s, v.into_iter().map(|x| x.1).collect::<Vec<_>>())
        }
        Err(e) => {
            rep.error("evaluation", EINSTEIN_TOL, &e);
            return rep;
        }
    };
    let einstein = s.max_of("einstein_residual").value().is_some_and(|r| r <= EINSTEIN_TOL);
    rep.sampled(&s, "einstein_residual", EINSTEIN_TOL);
    rep.sampled(&s, "einstein_residual_tensor", EINSTEIN_TOL);
    let ode_ok = s.max_of("ke_ode_residual").value().is_some_and(|r| r <= EINSTEIN_TOL);
    let pde_ok = s.max_of("ke_pde_residual").value().is_some_and(|r| r <= EINSTEIN_TOL);
    rep.flag(
        "einstein_iff_ode_and_pde",
        einstein == (ode_ok && pde_ok),
        if einstein == (ode_ok && pde_ok) {
            ""
        } else {
            "Einstein verdict disagrees with the ODE/PDE residuals"
        },
    );
    rep.attach("lambda", lambda);
    rep.attach("ke_ode_residual", s.max_of("ke_ode_residual").value());
    rep.attach("ke_pde_residual", s.max_of("ke_pde_residual").value());
    let ricci = s.max_of("ricci").value();
    let curv = s.max_of("curvature").value();
    rep.attach("ricci_max", ricci);
    rep.attach("curvature_max", curv);
    rep.attach("ricci_flat", ricci.is_some_and(|r| r <= EINSTEIN_TOL));
    rep.attach("flat", curv.is_some_and(|r| r <= EINSTEIN_TOL));
    let names = km.frame().names();
    let summary: Vec<SectionalSummary> = planes
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| {
            let vals = secs.iter().map(|x| x[i]);
            SectionalSummary {
                plane: (names[u].clone(), names[v].clone()),
                min: vals.clone().fold(f64::INFINITY, f64::min),
                max: vals.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    rep.attach("sectional", summary);
    rep
}

/// Fiber and family together.
#[derive(Clone, Debug)]
pub struct WarpedModel {
    pub fiber: FiberData,
    pub family: WarpedFamily,
    /// Sample boxes for fiber variables, in fiber k-set order.
    pub fiber_box: Vec<(f64, f64)>,
}

impl WarpedModel {
    pub fn new(fiber: FiberData, family: WarpedFamily, fiber_box: Vec<(f64, f64)>) -> Result<WarpedModel> {
        if fiber_box.len() != fiber.kset().len() {
            return Err(Error::InvalidParameters("one sample box per fiber variable".into()));
        }
        if family.alpha != fiber.alpha {
            return Err(Error::InvalidParameters(format!(
                "family alpha {} differs from fiber alpha {}",
                family.alpha, fiber.alpha
            )));
        }
        Ok(WarpedModel {
            fiber,
            family,
            fiber_box,
        })
    }

    pub fn fiber_grid(&self, n: usize) -> Result<Grid> {
        let axes = self
            .fiber
            .kset()
            .names()
            .iter()
            .zip(&self.fiber_box)
            .map(|(v, &(lo, hi))| Axis::new(v, lo, hi, n))
            .collect::<Result<Vec<_>>>()?;
        Grid::new(self.fiber.kset(), axes)
    }

    /// Lifted grid: `τ` over the family's sample box, fiber variables over theirs.
    pub fn grid(&self, n_tau: usize, n_fiber: usize) -> Result<Grid> {
        let kset = lifted_kset(self.fiber.kset())?;
        let mut axes = vec![Axis::new(TAU, self.family.sample.0, self.family.sample.1, n_tau)?];
        for (v, &(lo, hi)) in self.fiber.kset().names().iter().zip(&self.fiber_box) {
            axes.push(Axis::new(v, lo, hi, n_fiber)?);
        }
        Grid::new(&kset, axes)
    }

    pub fn admissible(&self) -> Result<AdmissibleData> {
        lift_fiber(&self.fiber, &self.family.w, &self.family.f, &self.family.tau_grid(9)?)
    }

    /// Every warped-case check on a lifted grid.
    pub fn ke_suite(&self, grid: &Grid) -> VerificationReport {
        let mut rep = VerificationReport::new("ke").with_grid(grid);
        let fam = &self.family;
        let n_tau = grid.axes().first().map(|a| a.n).unwrap_or(9).max(2);
        rep.absorb("family", family_suite(fam, n_tau.max(9)));
        let fiber_grid = match Grid::new(self.fiber.kset(), grid.axes()[1..].to_vec()) {
            Ok(g) => g,
            Err(e) => {
                rep.error("grid", FIBER_TOL, &e);
                return rep;
            }
        };
        rep.absorb("fiber", check_fiber(&self.fiber, &fiber_grid));
        let pde = ke_pde_residual(&self.fiber, fam.lambda, fam.c_const);
        match fiber_grid.map(|p| pde.value(p)) {
            Ok(v) => {
                let mut m = crate::report::MaxResidual::new();
                for (x, p) in v.iter().zip(fiber_grid.points()) {
                    m.update(*x, &p);
                }
                rep.at_most("ke_pde_residual", &m, ODE_TOL);
            }
            Err(e) => {
                rep.error("ke_pde_residual", ODE_TOL, &e);
            }
        }
        rep.absorb(
            "quotient",
            quotient_gauss_check(&self.fiber, fam.lambda, fam.c_const, &fiber_grid),
        );
        let data = match self.admissible() {
            Ok(d) => d,
            Err(e) => {
                rep.error("lift", FIBER_TOL, &e);
                return rep;
            }
        };
        rep.absorb("admissible", check_admissible(&data, grid));
        rep.absorb("structure", consistency_suite(&data.frame, grid));
        let km = match build_kahler(&data) {
            Ok(k) => k,
            Err(e) => {
                rep.error("kahler", FIBER_TOL, &e);
                return rep;
            }
        };
        rep.absorb("kahler", km.verify(grid));
        rep.absorb("kahler_structure", consistency_suite(km.frame(), grid));
        rep.absorb("kahler_form", kahler_form_closed(&km, grid));
        rep.absorb("forms", forms_suite(&km, grid));
        rep.absorb("einstein", einstein_verdict(&km, fam.lambda, fam.c_const, grid));
        match completeness(fam, DIVERGENCE_BOUND) {
            Ok(v) => rep.attach("completeness", v),
            Err(e) => rep.attach("completeness_error", e.to_string()),
        }
        rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s3_fiber() -> FiberData {
        FiberData::standard(&KSet::empty(), None, -2.0, ScalarField::constant(0, -2.0)).unwrap()
    }

    #[test]
    fn lift_product_for_constant_w() {
        let fiber = FiberData::standard(&KSet::empty(), None, 0.0, ScalarField::constant(0, -1.0)).unwrap();
        let k = tau_kset();
        let w = make_closed_form(&k, "1").unwrap();
        let f = make_closed_form(&k, "exp(tau)").unwrap();
        let g = Grid::uniform(&k, -1.0, 1.0, 3).unwrap();
        let a = lift_fiber(&fiber, &w, &f, &g).unwrap();
        let s = &a.frame;
        assert_eq!(s.c(0, 1, 0).constant_value(), Some(0.0));
        assert_abs_diff_eq!(a.twist().value(&[0.3]).unwrap(), -1.0);
        assert_abs_diff_eq!(s.d(0, 0).value(&[0.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(s.d(1, 0).value(&[0.0]).unwrap(), -1.0);
    }

    #[test]
    fn lift_s3_bracket() {
        let k = tau_kset();
        let w = make_closed_form(&k, "2 + tau").unwrap();
        let f = make_closed_form(&k, "1").unwrap();
        let g = Grid::uniform(&k, -1.0, 1.0, 3).unwrap();
        let a = lift_fiber(&s3_fiber(), &w, &f, &g).unwrap();
        let t = 0.5;
        // [x, y] = −(2/w)(k + T)
        assert_abs_diff_eq!(a.frame.c(2, 3, 0).value(&[t]).unwrap(), -2.0 / 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(a.frame.c(2, 3, 1).value(&[t]).unwrap(), -2.0 / 2.5, epsilon = 1e-14);
        // [k, T] = −(w'/w)(k + T)
        assert_abs_diff_eq!(a.frame.c(0, 1, 0).value(&[t]).unwrap(), -1.0 / 2.5, epsilon = 1e-14);
        assert!(matches!(
            lift_fiber(&s3_fiber(), &make_closed_form(&k, "tau").unwrap(), &f, &g),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn simpson_on_known_integrals() {
        let v = adaptive_simpson(&|t: f64| Ok(t.sin()), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-10);
        let v = adaptive_simpson(&|t: f64| Ok(1.0 / t), 1.0, 10.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 10f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn completeness_finite_interval_is_inconclusive() {
        let fam = WarpedFamily::custom(0.0, 0.0, 0.0, "1", "exp(tau)", (0.0, 1.0), (0.1, 0.9)).unwrap();
        let v = completeness(&fam, DIVERGENCE_BOUND).unwrap();
        assert!(!v.complete);
        assert_abs_diff_eq!(v.s_range.1 - v.s_range.0, f64::sqrt(0.5), epsilon = 1e-8);
    }

    #[test]
    fn complete_family() {
        let fam = WarpedFamily::complete(-3.0, (-1.0, 1.0)).unwrap();
        let v = completeness(&fam, DIVERGENCE_BOUND).unwrap();
        assert!(v.complete, "{v:?}");
        let rep = family_suite(&fam, 9);
        assert!(rep.passed, "{rep}");
    }

    fn plane_fiber(iota: &str) -> FiberData {
        let k = KSet::new(&["u", "v"]).unwrap();
        FiberData::standard(&k, Some(("u", "v")), 0.0, make_closed_form(&k, iota).unwrap()).unwrap()
    }

    fn plane_grid() -> Grid {
        Grid::uniform(&KSet::new(&["u", "v"]).unwrap(), -1.0, 1.0, 5).unwrap()
    }

    fn attachment(rep: &VerificationReport, key: &str) -> serde_json::Value {
        let j: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        j["attachments"][key].clone()
    }

    #[test]
    fn quotient_gauss_sech_profile() {
        // |ι̅| = sech²(0.6u + 0.8v): Δ log|ι̅| = 2(p²+q²) ι̅, so λC = −(p²+q²) = −1
        let fiber = plane_fiber("-1/cosh(0.6*u + 0.8*v)^2");
        let g = plane_grid();
        assert!(check_fiber(&fiber, &g).passed);
        let rep = quotient_gauss_check(&fiber, 1.0, -1.0, &g);
        assert!(rep.passed, "{rep}");
        assert_eq!(attachment(&rep, "gauss_constant"), serde_json::json!(true));
        assert_abs_diff_eq!(
            attachment(&rep, "fitted_minus_2_lambda_c").as_f64().unwrap(),
            2.0,
            epsilon = 1e-7
        );
        let k = quotient_gauss(&fiber);
        assert_abs_diff_eq!(k.value(&[0.3, -0.2]).unwrap(), -1.0, epsilon = 1e-10);
    }

    #[test]
    fn quotient_gauss_nonharmonic_exponent() {
        let fiber = plane_fiber("-exp(u^2)");
        let g = plane_grid();
        let rep = quotient_gauss_check(&fiber, 1.0, 0.0, &g);
        assert!(rep.passed, "{rep}");
        assert_eq!(attachment(&rep, "gauss_constant"), serde_json::json!(false));
        assert_eq!(attachment(&rep, "pde_solvable"), serde_json::json!(false));
    }

    #[test]
    fn fiber_pde_harmonic_exponent() {
        let fiber = plane_fiber("-exp(u^2 - v^2)");
        let r = ke_pde_residual(&fiber, 0.0, 0.0);
        for p in plane_grid().points() {
            assert_abs_diff_eq!(r.value(&p).unwrap(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn alpha_fiber_requires_constant_twist_pattern() {
        // a plane-dependent fiber with α ≠ 0 breaks the bracket/derivative consistency
        let k = KSet::new(&["u", "v"]).unwrap();
        let fiber = FiberData::standard(&k, Some(("u", "v")), 1.0, ScalarField::constant(2, -1.0)).unwrap();
        assert!(!check_fiber(&fiber, &plane_grid()).passed);
    }

    fn model(alpha: f64, iota: f64, fam: WarpedFamily) -> WarpedModel {
        let fiber = FiberData::standard(&KSet::empty(), None, alpha, ScalarField::constant(0, iota)).unwrap();
        WarpedModel::new(fiber, fam, vec![]).unwrap()
    }

    #[test]
    fn complete_example_sectional_values() {
        let m = model(0.0, -1.0, WarpedFamily::complete(-3.0, (-2.0, 2.0)).unwrap());
        let rep = m.ke_suite(&m.grid(5, 1).unwrap());
        assert!(rep.passed, "{rep}");
        let sec = attachment(&rep, "einstein.sectional");
        let val = |i: usize, k: &str| sec[i][k].as_f64().unwrap();
        for k in ["min", "max"] {
            assert_abs_diff_eq!(val(0, k), -2.0, epsilon = 1e-8);
            assert_abs_diff_eq!(val(1, k), -0.5, epsilon = 1e-8);
        }
        assert_eq!(attachment(&rep, "completeness")["complete"], serde_json::json!(true));
    }

    #[test]
    fn negative_alpha_family_is_flat() {
        for alpha in [-0.5, -1.0, -3.0] {
            let fam = WarpedFamily::alpha_neg(alpha, (0.0, f64::INFINITY), (0.5, 2.0)).unwrap();
            let m = model(alpha, -1.0, fam);
            let rep = m.ke_suite(&m.grid(5, 1).unwrap());
            assert!(rep.passed, "{rep}");
            assert_eq!(attachment(&rep, "einstein.flat"), serde_json::json!(true));
        }
    }

    #[test]
    fn implicit_family_is_ricci_flat_not_flat() {
        let fam = WarpedFamily::alpha_minus2((TAU0 - 0.1, TAU0 + 0.1), (TAU0 - 0.1, TAU0 + 0.1)).unwrap();
        let m = model(-2.0, -2.0, fam);
        let rep = m.ke_suite(&m.grid(5, 1).unwrap());
        assert!(rep.passed, "{rep}");
        assert_eq!(attachment(&rep, "einstein.ricci_flat"), serde_json::json!(true));
        assert_eq!(attachment(&rep, "einstein.flat"), serde_json::json!(false));
        assert_abs_diff_eq!(
            attachment(&rep, "family.w_tau0").as_f64().unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            attachment(&rep, "family.w_prime_tau0").as_f64().unwrap(),
            2.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn implicit_family_ode() {
        let fam = WarpedFamily::alpha_minus2((TAU0 - 0.1, TAU0 + 0.1), (TAU0 - 0.1, TAU0 + 0.1)).unwrap();
        let rep = family_suite(&fam, 11);
        assert!(rep.passed, "{rep}");
    }
}
