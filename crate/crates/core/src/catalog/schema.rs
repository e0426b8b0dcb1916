//! JSON documents for frame structures.
//!
//! ```json
//! { "case": "central", "kset": ["tau"], "frames": ["k","T","x","y"],
//!   "g": {"k,T": "1", "T,T": "-1", "x,x": "1", "y,y": "1"},
//!   "brackets": {"x,y": {"k": "2", "T": "-2"}},
//!   "D": {"k": {"tau": "1"}, "T": {"tau": "-1"}, "x": {}, "y": {}},
//!   "constants": {"a": 1, "b": -1, "alpha": -2, "beta": 0, "ell": 1},
//!   "f": "exp(tau)", "tau": "tau" }
//! ```
//!
//! `case: "fiber"` takes a 3-frame plus `alpha` and `iota_bar`; `case: "warped"` takes a `fiber`
//! document and a `family`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{FrameStructure, Roles};
use crate::grid::{Axis, Grid};
use crate::kahler::{AdmissibleData, Case, Constants};
use crate::scalar::{make_closed_form, KSet, ScalarField};
use crate::warped::{FamilySpec, FiberData, WarpedModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub case: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kset: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frames: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub g: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub brackets: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<BTreeMap<String, BTreeMap<String, String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<Constants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<String>,
    /// Frame names playing `k, T, x, y`; defaults to frame order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roles: Option<[String; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iota_bar: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<Box<Document>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    /// Sample box per fiber variable, for warped documents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_box: Option<Vec<[f64; 2]>>,
    /// Grid as `var=lo:hi:n` axis specs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<String>>,
}

#[derive(Clone, Debug)]
pub enum Structure {
    Admissible(AdmissibleData),
    Fiber(FiberData),
    Warped(WarpedModel),
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn expr(kset: &KSet, src: &str, ctx: &str) -> Result<ScalarField> {
    make_closed_form(kset, src).map_err(|e| match e {
        Error::Parse { pos, msg } => Error::Parse {
            pos,
            msg: format!("{ctx}: {msg}"),
        },
        other => schema(format!("{ctx}: {other}")),
    })
}

fn pair(key: &str, frames: &[String], table: &str) -> Result<(usize, usize)> {
    let (a, b) = key
        .split_once(',')
        .ok_or_else(|| schema(format!("{table} key `{key}` is not of the form `a,b`")))?;
    Ok((
        frame_index(a.trim(), frames, table)?,
        frame_index(b.trim(), frames, table)?,
    ))
}

fn frame_index(name: &str, frames: &[String], table: &str) -> Result<usize> {
    frames
        .iter()
        .position(|f| f == name)
        .ok_or_else(|| schema(format!("{table} names unknown frame field `{name}`")))
}

fn frame_from_doc(doc: &Document, n: usize) -> Result<FrameStructure> {
    if doc.frames.len() != n {
        return Err(schema(format!(
            "case `{}` needs {n} frame names, got {}",
            doc.case,
            doc.frames.len()
        )));
    }
    for (i, f) in doc.frames.iter().enumerate() {
        if doc.frames[..i].contains(f) {
            return Err(schema(format!("duplicate frame name `{f}`")));
        }
    }
    let kset = KSet::new(&doc.kset)?;
    let frames = &doc.frames;
    // symmetry gate before any field is parsed
    for (key, v) in &doc.g {
        let (a, b) = pair(key, frames, "g")?;
        if a != b {
            if let Some((_, w)) = doc.g.iter().find(|(k2, _)| pair(k2, frames, "g").ok() == Some((b, a))) {
                if w.trim() != v.trim() {
                    return Err(schema(format!(
                        "g is not symmetric: g({},{}) = `{v}` but g({},{}) = `{w}`",
                        frames[a], frames[b], frames[b], frames[a]
                    )));
                }
            }
        }
    }
    let mut seen = Vec::new();
    for key in doc.brackets.keys() {
        let (a, b) = pair(key, frames, "brackets")?;
        if a == b {
            return Err(schema(format!("bracket `{key}` of a field with itself")));
        }
        let unordered = (a.min(b), a.max(b));
        if seen.contains(&unordered) {
            return Err(schema(format!(
                "bracket of `{}` and `{}` given twice",
                frames[a], frames[b]
            )));
        }
        seen.push(unordered);
    }
    let d = doc.d.as_ref().ok_or_else(|| schema("missing `D` table"))?;
    for f in frames {
        if !d.contains_key(f) {
            return Err(schema(format!("D table has no row for frame field `{f}`")));
        }
    }
    for key in d.keys() {
        frame_index(key, frames, "D")?;
    }

    let mut b = FrameStructure::builder(&kset, frames)?;
    for (key, v) in &doc.g {
        let (i, j) = pair(key, frames, "g")?;
        b = b.metric(i, j, expr(&kset, v, &format!("g[{key}]"))?)?;
    }
    for (key, row) in &doc.brackets {
        let (i, j) = pair(key, frames, "brackets")?;
        for (c, v) in row {
            let e = frame_index(c, frames, "brackets")?;
            b = b.bracket(i, j, e, expr(&kset, v, &format!("brackets[{key}][{c}]"))?)?;
        }
    }
    for (f, row) in d {
        let a = frame_index(f, frames, "D")?;
        for (var, v) in row {
            let i = kset.index_of(var)?;
            b = b.derivative(a, i, expr(&kset, v, &format!("D[{f}][{var}]"))?)?;
        }
    }
    b.build()
}

fn required<'a, T>(v: &'a Option<T>, what: &str, case: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| schema(format!("case `{case}` requires `{what}`")))
}

fn fiber_from_doc(doc: &Document) -> Result<FiberData> {
    let frame = frame_from_doc(doc, 3)?;
    let alpha = *required(&doc.alpha, "alpha", "fiber")?;
    let ib = expr(frame.kset(), required(&doc.iota_bar, "iota_bar", "fiber")?, "iota_bar")?;
    FiberData::new(frame, alpha, ib)
}

fn from_document(doc: &Document) -> Result<Structure> {
    match doc.case.as_str() {
        "central" => {
            let frame = frame_from_doc(doc, 4)?;
            let constants = *required(&doc.constants, "constants", "central")?;
            let tau_name = doc.tau.as_deref().unwrap_or("tau");
            let tau = frame.kset().index_of(tau_name)?;
            let f = expr(frame.kset(), required(&doc.f, "f", "central")?, "f")?;
            let roles = match &doc.roles {
                Some([k, t, x, y]) => Roles::from_names(&frame, k, t, x, y)?,
                None => Roles::default(),
            };
            Ok(Structure::Admissible(AdmissibleData::new(
                frame,
                roles,
                constants,
                f,
                tau,
                Case::Central,
            )?))
        }
        "fiber" => Ok(Structure::Fiber(fiber_from_doc(doc)?)),
        "warped" => {
            if !doc.frames.is_empty() || !doc.g.is_empty() || !doc.brackets.is_empty() || doc.d.is_some() {
                return Err(schema("a warped document gives its frame data inside `fiber`"));
            }
            let fd = required(&doc.fiber, "fiber", "warped")?;
            if fd.case != "fiber" {
                return Err(schema("the `fiber` of a warped document must have case `fiber`"));
            }
            let fiber = fiber_from_doc(fd)?;
            let family = required(&doc.family, "family", "warped")?.build()?;
            let boxes = match &doc.fiber_box {
                Some(b) => b.iter().map(|p| (p[0], p[1])).collect(),
                None => vec![(-1.0, 1.0); fiber.kset().len()],
            };
            Ok(Structure::Warped(WarpedModel::new(fiber, family, boxes)?))
        }
        other => Err(schema(format!("unknown case `{other}` (central, fiber, warped)"))),
    }
}

/// Parses a document; JSON errors carry line and column.
pub fn parse_structure(text: &str) -> Result<Structure> {
    parse_with_grid(text).map(|(s, _)| s)
}

/// Parses a document and its optional grid.
pub fn parse_with_grid(text: &str) -> Result<(Structure, Option<Grid>)> {
    let doc: Document = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
    let s = from_document(&doc)?;
    let grid = match &doc.grid {
        Some(specs) => {
            let axes = specs.iter().map(|a| Axis::parse(a)).collect::<Result<Vec<_>>>()?;
            let kset = match &s {
                Structure::Admissible(d) => d.kset().clone(),
                Structure::Fiber(f) => f.kset().clone(),
                Structure::Warped(m) => crate::warped::lifted_kset(m.fiber.kset())?,
            };
            Some(Grid::new(&kset, axes)?)
        }
        None => None,
    };
    Ok((s, grid))
}

fn field_text(f: &ScalarField, kset: &KSet, ctx: &str) -> Result<String> {
    f.to_expr_string(kset)
        .map_err(|e| Error::NotSerializable(format!("{ctx}: {e}")))
}

fn frame_document(s: &FrameStructure, case: &str) -> Result<Document> {
    let kset = s.kset();
    let names = s.names();
    let n = s.n();
    let mut g = BTreeMap::new();
    let mut brackets = BTreeMap::new();
    let mut d = BTreeMap::new();
    for a in 0..n {
        for b in a..n {
            let f = s.g(a, b);
            if f.constant_value() != Some(0.0) {
                g.insert(format!("{},{}", names[a], names[b]), field_text(f, kset, "g")?);
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let mut row = BTreeMap::new();
            for c in 0..n {
                let f = s.c(a, b, c);
                if f.constant_value() != Some(0.0) {
                    row.insert(names[c].clone(), field_text(f, kset, "brackets")?);
                }
            }
            if !row.is_empty() {
                brackets.insert(format!("{},{}", names[a], names[b]), row);
            }
        }
    }
    for a in 0..n {
        let mut row = BTreeMap::new();
        for (i, v) in kset.names().iter().enumerate() {
            let f = s.d(a, i);
            if f.constant_value() != Some(0.0) {
                row.insert(v.clone(), field_text(f, kset, "D")?);
            }
        }
        d.insert(names[a].clone(), row);
    }
    Ok(Document {
        case: case.into(),
        kset: kset.names().to_vec(),
        frames: names.to_vec(),
        g,
        brackets,
        d: Some(d),
        constants: None,
        f: None,
        tau: None,
        roles: None,
        alpha: None,
        iota_bar: None,
        fiber: None,
        family: None,
        fiber_box: None,
        grid: None,
    })
}

fn fiber_document(f: &FiberData) -> Result<Document> {
    let mut doc = frame_document(&f.frame, "fiber")?;
    doc.alpha = Some(f.alpha);
    doc.iota_bar = Some(field_text(&f.iota_bar, f.kset(), "iota_bar")?);
    Ok(doc)
}

pub fn to_document(s: &Structure) -> Result<Document> {
    match s {
        Structure::Admissible(a) => {
            if !matches!(a.case, Case::Central) {
                return Err(Error::NotSerializable(
                    "lifted warped data is written as its fiber and family".into(),
                ));
            }
            let mut doc = frame_document(&a.frame, "central")?;
            let names = a.frame.names();
            doc.constants = Some(a.constants);
            doc.f = Some(field_text(&a.f, a.kset(), "f")?);
            doc.tau = Some(a.kset().names()[a.tau].clone());
            if a.roles != Roles::default() {
                let r = a.roles;
                doc.roles = Some([r.k, r.t, r.x, r.y].map(|i| names[i].clone()));
            }
            Ok(doc)
        }
        Structure::Fiber(f) => fiber_document(f),
        Structure::Warped(m) => {
            let mut doc = frame_document(&m.fiber.frame, "warped")?;
            doc.kset.clear();
            doc.frames.clear();
            doc.g.clear();
            doc.brackets.clear();
            doc.d = None;
            doc.fiber = Some(Box::new(fiber_document(&m.fiber)?));
            doc.family = Some(m.family.spec.clone());
            if !m.fiber_box.is_empty() {
                doc.fiber_box = Some(m.fiber_box.iter().map(|&(a, b)| [a, b]).collect());
            }
            Ok(doc)
        }
    }
}

pub fn serialize_structure(s: &Structure) -> Result<String> {
    let doc = to_document(s)?;
    serde_json::to_string_pretty(&doc).map_err(|e| Error::NotSerializable(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{load, Model, IDS};

    fn frame_values(s: &FrameStructure, p: &[f64]) -> Vec<f64> {
        let n = s.n();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                out.push(s.g(a, b).value(p).unwrap());
                for c in 0..n {
                    out.push(s.c(a, b, c).value(p).unwrap());
                }
            }
            for i in 0..s.kset().len() {
                out.push(s.d(a, i).value(p).unwrap());
            }
        }
        out
    }

    #[test]
    fn catalog_round_trip() {
        for id in IDS {
            let e = load(id).unwrap();
            let s = e.structure();
            let text = serialize_structure(&s).unwrap();
            let back = parse_structure(&text).unwrap();
            match (&e.model, &back) {
                (Model::Central(a), Structure::Admissible(b)) => {
                    for p in e.grid.points() {
                        let (x, y) = (frame_values(&a.frame, &p), frame_values(&b.frame, &p));
                        for (u, v) in x.iter().zip(&y) {
                            assert!((u - v).abs() <= 1e-12, "{id}");
                        }
                        assert!((a.f.value(&p).unwrap() - b.f.value(&p).unwrap()).abs() <= 1e-12);
                    }
                    assert_eq!(a.constants, b.constants);
                }
                (Model::Warped(a), Structure::Warped(b)) => {
                    let (la, lb) = (a.admissible().unwrap(), b.admissible().unwrap());
                    for p in e.grid.points() {
                        let (x, y) = (frame_values(&la.frame, &p), frame_values(&lb.frame, &p));
                        for (u, v) in x.iter().zip(&y) {
                            assert!((u - v).abs() <= 1e-12, "{id}");
                        }
                    }
                    assert_eq!(a.family.spec, b.family.spec);
                }
                _ => panic!("{id}: case changed in round trip"),
            }
            assert_eq!(serialize_structure(&back).unwrap(), text);
        }
    }

    fn s3xr_doc() -> serde_json::Value {
        serde_json::from_str(&serialize_structure(&load("s3xr").unwrap().structure()).unwrap()).unwrap()
    }

    #[test]
    fn missing_d_row_is_named() {
        let mut v = s3xr_doc();
        v["D"].as_object_mut().unwrap().remove("x");
        let err = parse_structure(&v.to_string()).unwrap_err();
        assert!(
            matches!(&err, Error::Schema(m) if m.contains("row for frame field `x`")),
            "{err}"
        );
    }

    #[test]
    fn asymmetric_metric_rejected() {
        let mut v = s3xr_doc();
        v["g"]["T,k"] = "2".into();
        let err = parse_structure(&v.to_string()).unwrap_err();
        assert!(matches!(&err, Error::Schema(m) if m.contains("not symmetric")), "{err}");
    }

    #[test]
    fn duplicate_frames_rejected() {
        let mut v = s3xr_doc();
        v["frames"] = serde_json::json!(["k", "T", "x", "x"]);
        assert!(matches!(parse_structure(&v.to_string()), Err(Error::Schema(m)) if m.contains("duplicate")));
    }

    #[test]
    fn expression_errors_are_positional() {
        let mut v = s3xr_doc();
        v["f"] = "exp(tau".into();
        assert!(matches!(parse_structure(&v.to_string()), Err(Error::Parse { .. })));
        let err = parse_structure("{\"case\": \"central\",\n \"kset\": [}").unwrap_err();
        assert!(matches!(&err, Error::Schema(m) if m.contains("line 2")), "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v = s3xr_doc();
        v["colour"] = "blue".into();
        assert!(matches!(parse_structure(&v.to_string()), Err(Error::Schema(_))));
    }

    #[test]
    fn grid_in_document() {
        let mut v = s3xr_doc();
        v["grid"] = serde_json::json!(["tau=0:1:3"]);
        let (_, g) = parse_with_grid(&v.to_string()).unwrap();
        assert_eq!(g.unwrap().len(), 3);
    }
}
