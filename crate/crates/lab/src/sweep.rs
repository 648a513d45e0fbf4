//! Parameter sweeps of an inequality ratio `LHS / RHS`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nls_core::stats::{self, LineFit};
use serde::{Deserialize, Serialize};

use crate::{LabError, Result};

/// One evaluated parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Parameter values by axis name (`N`, `M`, `q`, `r`, `R`, `seed`, ...).
    pub axes: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl SweepPoint {
    pub fn new(axes: impl IntoIterator<Item = (&'static str, f64)>, lhs: f64, rhs: f64) -> Result<Self> {
        let ratio = lhs / rhs;
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(LabError::invalid(format!("ratio {lhs}/{rhs} is not positive and finite")));
        }
        Ok(Self { axes: axes.into_iter().map(|(k, v)| (k.to_string(), v)).collect(), lhs, rhs, ratio })
    }

    pub fn axis(&self, name: &str) -> Option<f64> {
        self.axes.get(name).copied()
    }
}

/// A set of sweep points with log-log fits of the ratio against chosen axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSweep {
    pub name: String,
    pub points: Vec<SweepPoint>,
    /// `log(ratio) ≈ slope·log(axis) + c`, keyed by axis.
    pub fits: BTreeMap<String, LineFit>,
}

impl RatioSweep {
    pub fn new(name: impl Into<String>, points: Vec<SweepPoint>) -> Self {
        Self { name: name.into(), points, fits: BTreeMap::new() }
    }

    /// Fits `log(ratio)` against `log(axis)` over every point and records the fit.
    pub fn fit_axis(&mut self, axis: &str) -> Result<&LineFit> {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .points
            .iter()
            .map(|p| {
                p.axis(axis)
                    .map(|a| (a, p.ratio))
                    .ok_or_else(|| LabError::invalid(format!("point without axis `{axis}`")))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        let fit = stats::fit_power_law(&x, &y)?;
        self.fits.insert(axis.to_string(), fit);
        Ok(&self.fits[axis])
    }

    pub fn slope(&self, axis: &str) -> Option<f64> {
        self.fits.get(axis).map(|f| f.slope)
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ratio).collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios().into_iter().fold(0.0, f64::max)
    }

    /// Points whose `axis` equals `value`.
    pub fn at<'a>(&'a self, axis: &'a str, value: f64) -> impl Iterator<Item = &'a SweepPoint> + 'a {
        self.points.iter().filter(move |p| p.axis(axis) == Some(value))
    }

    /// Sorted union of axis names.
    pub fn axis_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.points.iter().flat_map(|p| p.axes.keys().cloned()).collect();
        names.sort();
        names.dedup();
        names
    }

    /// One row per point: axes in sorted order, then `lhs,rhs,ratio`.
    pub fn to_csv(&self) -> String {
        let names = self.axis_names();
        let mut out = names.join(",");
        out.push_str(if names.is_empty() { "lhs,rhs,ratio\n" } else { ",lhs,rhs,ratio\n" });
        for p in &self.points {
            for name in &names {
                match p.axis(name) {
                    Some(v) => write!(out, "{},", fmt_float(v)),
                    None => write!(out, ","),
                }
                .expect("write to string");
            }
            writeln!(out, "{},{},{}", fmt_float(p.lhs), fmt_float(p.rhs), fmt_float(p.ratio))
                .expect("write to string");
        }
        out
    }

    /// Fit summary as JSON.
    pub fn fit_summary(&self) -> serde_json::Value {
        serde_json::json!({ "name": self.name, "points": self.points.len(), "fits": self.fits })
    }
}

/// Fixed 17-significant-digit scientific format used for every CSV float.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}
