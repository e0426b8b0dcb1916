//! Coordinate realizations of a frame, checked against the abstract structure by finite
//! differences.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};

use crate::catalog::Model;
use crate::error::{Error, Result};
use crate::report::{MaxResidual, Provenance, VerificationReport};

pub const CHART_TOL: f64 = 1e-6;
pub const CHART_FD_STEP: f64 = 1e-5;
const TWIST_FLOOR: f64 = 1e-8;

type MatrixFn = Arc<dyn Fn(&[f64; 4]) -> [[f64; 4]; 4] + Send + Sync>;

/// Metric components and frame fields in coordinates `(u, v, x, y)`; `abstract_var` is the coordinate
/// that carries the abstract structure's single variable.
#[derive(Clone)]
pub struct CoordinateChart {
    pub name: String,
    pub coords: [&'static str; 4],
    metric: MatrixFn,
    /// Row `a` holds the coordinate coefficients of frame field `a`.
    frame: MatrixFn,
    pub abstract_var: usize,
    pub box_lo: f64,
    pub box_hi: f64,
    pub n: usize,
}

impl fmt::Debug for CoordinateChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoordinateChart({})", self.name)
    }
}

fn pp_metric(h: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> MatrixFn {
    Arc::new(move |p: &[f64; 4]| {
        let (x, y) = (p[2], p[3]);
        [
            [h(x, y), 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    })
}

fn plane_wave_frame() -> MatrixFn {
    Arc::new(|p: &[f64; 4]| {
        let (x, y) = (p[2], p[3]);
        [
            [-1.0, 0.0, -y, x],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, -y, 1.0, 0.0],
            [0.0, x, 0.0, 1.0],
        ]
    })
}

impl CoordinateChart {
    fn with(name: &str, metric: MatrixFn, frame: MatrixFn) -> CoordinateChart {
        CoordinateChart {
            name: name.into(),
            coords: ["u", "v", "x", "y"],
            metric,
            frame,
            abstract_var: 0,
            box_lo: -1.0,
            box_hi: 1.0,
            n: 3,
        }
    }

    /// `g = −(x²+y²)du² + 2du dv + dx² + dy²`, `k = −∂u − y∂x + x∂y`, `T = ∂v`,
    /// `x = −y∂v + ∂x`, `y = x∂v + ∂y`.
    pub fn plane_wave() -> CoordinateChart {
        CoordinateChart::with("plane_wave", pp_metric(|x, y| -(x * x + y * y)), plane_wave_frame())
    }

    /// The plane-wave frame with the `du²` term of the metric removed.
    pub fn plane_wave_without_h() -> CoordinateChart {
        CoordinateChart::with("plane_wave_without_h", pp_metric(|_, _| 0.0), plane_wave_frame())
    }

    /// Flat pp-wave with `H = k = h = 0`: `k = −∂u`, `T = ∂v`, `x = ∂x`, `y = ∂y`.
    pub fn flat_degenerate() -> CoordinateChart {
        let frame: MatrixFn = Arc::new(|_: &[f64; 4]| {
            [
                [-1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]
        });
        CoordinateChart::with("flat_degenerate", pp_metric(|_, _| 0.0), frame)
    }

    fn points(&self) -> Vec<[f64; 4]> {
        let vals: Vec<f64> = (0..self.n)
            .map(|i| self.box_lo + (self.box_hi - self.box_lo) * i as f64 / (self.n - 1).max(1) as f64)
            .collect();
        let mut out = Vec::new();
        for &a in &vals {
            for &b in &vals {
                for &c in &vals {
                    for &d in &vals {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
        out
    }

    /// Frame metric `g(e_a, e_b)`.
    pub fn frame_metric(&self, p: &[f64; 4]) -> [[f64; 4]; 4] {
        let g = (self.metric)(p);
        let e = (self.frame)(p);
        let mut out = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        out[a][b] += e[a][i] * g[i][j] * e[b][j];
                    }
                }
            }
        }
        out
    }

    /// `C_ab^c` from central differences of the frame coefficients.
    pub fn brackets(&self, p: &[f64; 4]) -> Result<[[[f64; 4]; 4]; 4]> {
        let h = CHART_FD_STEP;
        let e = (self.frame)(p);
        // de[j][a][i] = ∂_j e_a^i
        let mut de = [[[0.0; 4]; 4]; 4];
        for (j, dj) in de.iter_mut().enumerate() {
            let (mut pp, mut pm) = (*p, *p);
            pp[j] += h;
            pm[j] -= h;
            let (ep, em) = ((self.frame)(&pp), (self.frame)(&pm));
            for a in 0..4 {
                for i in 0..4 {
                    dj[a][i] = (ep[a][i] - em[a][i]) / (2.0 * h);
                }
            }
        }
        let basis = Matrix4::from_fn(|i, c| e[c][i]);
        let lu = basis.lu();
        let mut out = [[[0.0; 4]; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let v = Vector4::from_fn(|i, _| {
                    (0..4)
                        .map(|j| e[a][j] * de[j][b][i] - e[b][j] * de[j][a][i])
                        .sum::<f64>()
                });
                let c = lu
                    .solve(&v)
                    .ok_or_else(|| Error::InvalidStructure("chart frame is not a basis".into()))?;
                for k in 0..4 {
                    out[a][b][k] = c[k];
                }
            }
        }
        Ok(out)
    }
}

/// Compares a chart with a central catalog structure over the chart's coordinate box.
pub fn coordinate_crosscheck(chart: &CoordinateChart, model: &Model) -> Result<VerificationReport> {
    let Model::Central(data) = model else {
        return Err(Error::InvalidParameters(
            "coordinate charts realize central structures".into(),
        ));
    };
    if data.kset().len() != 1 {
        return Err(Error::InvalidParameters(
            "chart comparison needs a one-variable structure".into(),
        ));
    }
    let s = &data.frame;
    let roles = data.roles;
    let mut rep = VerificationReport::new("coordinate_crosscheck");
    rep.attach("chart", &chart.name);
    let mut m = [(); 8].map(|_| MaxResidual::new());
    let mut twist_min = f64::INFINITY;
    let twist = data.twist();
    for p in chart.points() {
        let q = [p[chart.abstract_var]];
        let fj = s.jets(&q, 0)?;
        let gm = chart.frame_metric(&p);
        let br = chart.brackets(&p)?;
        let e = (chart.frame)(&p);
        for a in 0..4 {
            for b in 0..4 {
                m[0].update(gm[a][b] - fj.g(a, b).value(), &p);
                for c in 0..4 {
                    m[1].update(br[a][b][c] - fj.c(a, b, c).value(), &p);
                }
            }
            m[2].update(e[a][chart.abstract_var] - fj.d(a, 0).value(), &p);
        }
        let (k, t, x, y) = (roles.k, roles.t, roles.x, roles.y);
        m[3].update(gm[k][t] - data.constants.a, &p);
        m[4].update(gm[t][t] - data.constants.b, &p);
        m[5].update(gm[k][k], &p);
        let chart_twist: f64 = (0..4).map(|c| br[x][y][c] * gm[c][k]).sum();
        m[6].update(chart_twist - twist.value(&q)?, &p);
        twist_min = twist_min.min(chart_twist.abs());
        m[7].update(gm[x][x] + gm[y][y] - 2.0, &p);
    }
    let ids = [
        "metric",
        "brackets",
        "derivatives",
        "constant_a",
        "constant_b",
        "k_null",
        "twist",
        "h_orthonormal",
    ];
    for (id, r) in ids.iter().zip(&m) {
        rep.at_most(id, r, CHART_TOL).provenance = Some(Provenance::Derived);
    }
    rep.at_least("twist_nonvanishing", twist_min, TWIST_FLOOR, None)
        .provenance = Some(Provenance::Trivial);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load;

    fn planewave_model() -> Model {
        load("planewave").unwrap().model
    }

    #[test]
    fn plane_wave_chart_matches_frame() {
        let rep = coordinate_crosscheck(&CoordinateChart::plane_wave(), &planewave_model()).unwrap();
        assert!(rep.passed, "{rep}");
    }

    #[test]
    fn dropped_h_term_breaks_nullity() {
        let rep = coordinate_crosscheck(&CoordinateChart::plane_wave_without_h(), &planewave_model()).unwrap();
        assert!(!rep.check("k_null").unwrap().passed());
        assert!(rep.check("brackets").unwrap().passed());
    }

    #[test]
    fn flat_chart_has_no_twist() {
        let rep = coordinate_crosscheck(&CoordinateChart::flat_degenerate(), &planewave_model()).unwrap();
        assert!(!rep.check("twist_nonvanishing").unwrap().passed());
        assert!(!rep.passed);
    }
}
