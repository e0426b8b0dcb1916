//! Plot-ready CSV tables.
//!
//! Central entries: one row per grid point, columns `<k-set vars>, s_tilde, central_curvature, c`.
//! Warped entries: `<k-set vars>, w, f, c, ke_ode_residual, K_kT, K_xk, K_xy`.
//! Families: `tau, w, f, c, ke_ode_residual, s` with `s` measured from the left end of the sample box.

use anyhow::Result;

use frame_kahler::catalog::{CatalogEntry, Model};
use frame_kahler::central::{central_curvature, conformal_scalar};
use frame_kahler::frame::{connection_jets, curvature_jets, sectional_from_jets};
use frame_kahler::grid::Grid;
use frame_kahler::kahler::{build_kahler, KahlerMetric};
use frame_kahler::warped::{adaptive_simpson, ke_ode_residual, WarpedFamily, SIMPSON_REL_TOL};

fn to_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn sectionals(km: &KahlerMetric, p: &[f64]) -> Result<[f64; 3]> {
    let fj = km.frame().jets(p, 2)?;
    let gj = connection_jets(&fj, p)?;
    let cj = curvature_jets(&fj, &gj, p)?;
    let r = km.data().roles;
    let k = |u, v| sectional_from_jets(&fj, &cj, u, v).map(|j| j.value());
    Ok([k(r.k, r.t)?, k(r.x, r.k)?, k(r.x, r.y)?])
}

pub fn entry_curves(entry: &CatalogEntry, grid: &Grid) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let vars: Vec<String> = grid.axes().iter().map(|a| a.var.clone()).collect();
    match &entry.model {
        Model::Central(data) => {
            let km = build_kahler(data)?;
            let mut head = vars.clone();
            head.extend(["s_tilde", "central_curvature", "c"].map(String::from));
            w.write_record(&head)?;
            let (s, cc) = (conformal_scalar(&km), central_curvature(&km));
            for p in grid.points() {
                let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                for v in [s.value(&p)?, cc.value(&p)?, km.c().value(&p)?] {
                    row.push(v.to_string());
                }
                w.write_record(&row)?;
            }
        }
        Model::Warped(m) => {
            let data = m.admissible()?;
            let km = build_kahler(&data)?;
            let mut head = vars.clone();
            head.extend(["w", "f", "c", "ke_ode_residual", "K_kT", "K_xk", "K_xy"].map(String::from));
            w.write_record(&head)?;
            let ode = ke_ode_residual(&m.family);
            for p in grid.points() {
                let t = [p[0]];
                let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                let vals = [
                    m.family.w.value(&t)?,
                    m.family.f.value(&t)?,
                    km.c().value(&p)?,
                    ode.value(&t)?,
                ];
                row.extend(vals.iter().map(|v| v.to_string()));
                row.extend(sectionals(&km, &p)?.iter().map(|v| v.to_string()));
                w.write_record(&row)?;
            }
        }
    }
    to_string(w)
}

pub fn family_curves(fam: &WarpedFamily, n: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tau", "w", "f", "c", "ke_ode_residual", "s"])?;
    let grid = fam.tau_grid(n)?;
    let ode = ke_ode_residual(fam);
    let c = fam.c_for_quadrature();
    let integrand = |t: f64| -> frame_kahler::Result<f64> { Ok((0.5 * c.value(&[t])?).max(0.0).sqrt()) };
    let lo = fam.sample.0;
    let mut s = 0.0;
    let mut prev = lo;
    for p in grid.points() {
        let t = p[0];
        if t > prev {
            s += adaptive_simpson(&integrand, prev, t, SIMPSON_REL_TOL)?;
            prev = t;
        }
        let vals = [t, fam.w.value(&p)?, fam.f.value(&p)?, c.value(&p)?, ode.value(&p)?, s];
        w.write_record(vals.iter().map(|v| v.to_string()))?;
    }
    to_string(w)
}
