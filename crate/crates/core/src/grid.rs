//! Tensor-product sample grids over a k-set and grid-parallel evaluation.

use std::fmt;

use once_cell::sync::Lazy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::KSet;

/// Environment variable capping the evaluation thread pool.
pub const THREADS_ENV: &str = "FRAME_KAHLER_THREADS";

static POOL: Lazy<Option<rayon::ThreadPool>> = Lazy::new(|| {
    let n = std::env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok()?;
    rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().ok()
});

/// Sample points `lo, ..., hi` (inclusive) along one variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub var: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(var: &str, lo: f64, hi: f64, n: usize) -> Result<Axis> {
        let axis = Axis {
            var: var.to_string(),
            lo,
            hi,
            n,
        };
        axis.validate()?;
        Ok(axis)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameters(format!("axis `{}` has no points", self.var)));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(Error::InvalidParameters(format!(
                "axis `{}` has invalid range [{}, {}]",
                self.var, self.lo, self.hi
            )));
        }
        if self.n > 1 && self.lo == self.hi {
            return Err(Error::InvalidParameters(format!(
                "axis `{}` repeats the point {} {} times",
                self.var, self.lo, self.n
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![0.5 * (self.lo + self.hi)];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i + 1 == self.n {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }

    /// Parses `var=lo:hi:n`.
    pub fn parse(spec: &str) -> Result<Axis> {
        let bad = || Error::InvalidParameters(format!("grid override `{spec}` is not of the form var=lo:hi:n"));
        let (var, range) = spec.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        Axis::new(var.trim(), lo, hi, n)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}:{}:{}", self.var, self.lo, self.hi, self.n)
    }
}

/// Cartesian grid with one axis per k-set variable, in k-set order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(kset: &KSet, axes: Vec<Axis>) -> Result<Grid> {
        let mut ordered = Vec::with_capacity(kset.len());
        for name in kset.names() {
            let matching: Vec<&Axis> = axes.iter().filter(|a| &a.var == name).collect();
            match matching.as_slice() {
                [one] => ordered.push((*one).clone()),
                [] => return Err(Error::InvalidParameters(format!("grid has no axis for `{name}`"))),
                _ => return Err(Error::InvalidParameters(format!("grid has several axes for `{name}`"))),
            }
        }
        if let Some(extra) = axes.iter().find(|a| kset.index_of(&a.var).is_err()) {
            return Err(Error::UnknownVariable(extra.var.clone()));
        }
        for a in &ordered {
            a.validate()?;
        }
        Ok(Grid { axes: ordered })
    }

    /// Same box `[lo, hi]` with `n` points on every variable.
    pub fn uniform(kset: &KSet, lo: f64, hi: f64, n: usize) -> Result<Grid> {
        let axes = kset
            .names()
            .iter()
            .map(|v| Axis::new(v, lo, hi, n))
            .collect::<Result<Vec<_>>>()?;
        Grid::new(kset, axes)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Replaces the axis of the override's variable.
    pub fn with_override(&self, axis: Axis) -> Result<Grid> {
        let slot = self
            .axes
            .iter()
            .position(|a| a.var == axis.var)
            .ok_or_else(|| Error::UnknownVariable(axis.var.clone()))?;
        let mut axes = self.axes.clone();
        axes[slot] = axis;
        Ok(Grid { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points, last axis varying fastest. A grid over the empty k-set has one point.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        let mut out = vec![Vec::new()];
        for vals in &values {
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// Evaluates `f` at every point, in parallel, returning results in point
    /// order. The first failing point (in point order) determines the error.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&[f64]) -> Result<T> + Sync,
    {
        let points = self.points();
        let run = || points.par_iter().map(|p| f(p)).collect::<Vec<Result<T>>>();
        let results = match POOL.as_ref() {
            Some(pool) => pool.install(run),
            None => run(),
        };
        results.into_iter().collect()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.axes.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_parsing() {
        let a = Axis::parse("tau=0.2:1.4:7").unwrap();
        assert_eq!((a.lo, a.hi, a.n), (0.2, 1.4, 7));
        assert_eq!(a.values().last(), Some(&1.4));
        assert!(Axis::parse("tau=1:0:3").is_err());
        assert!(Axis::parse("tau:0:1:3").is_err());
        assert!(Axis::parse("tau=0:1:0").is_err());
    }

    #[test]
    fn cartesian_order_and_count() {
        let k = KSet::new(&["tau", "x"]).unwrap();
        let g = Grid::uniform(&k, -1.0, 1.0, 3).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[1], vec![-1.0, 0.0]);
        let g2 = g.with_override(Axis::parse("x=0:1:2").unwrap()).unwrap();
        assert_eq!(g2.len(), 6);
        assert!(g.with_override(Axis::parse("y=0:1:2").unwrap()).is_err());
        assert_eq!(g2.to_string(), "tau=-1:1:3,x=0:1:2");
    }

    #[test]
    fn empty_kset_has_one_point() {
        let g = Grid::new(&KSet::empty(), vec![]).unwrap();
        assert_eq!(g.points(), vec![Vec::<f64>::new()]);
    }

    #[test]
    fn map_reports_first_failure_in_order() {
        let k = KSet::new(&["x"]).unwrap();
        let g = Grid::uniform(&k, 0.0, 1.0, 11).unwrap();
        let r = g.map(|p| {
            if p[0] > 0.45 {
                Err(Error::Domain(format!("{}", p[0])))
            } else {
                Ok(p[0])
            }
        });
        assert_eq!(r, Err(Error::Domain("0.5".into())));
    }
}
