//! The convexity defect function `h_X(t)` of a finite cloud.
//!
//! Profiles are computed from two-point simplices exactly (segment envelopes) and,
//! at order 3, from triangles sampled on a barycentric grid. The sweep exploits that
//! each simplex contributes a constant from its enclosing radius onward, so `h` is a
//! running maximum over simplices ordered by radius.

mod brute;
mod engine;

pub use brute::defect_bruteforce;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{segment_farthest, PointCloud};

/// Relative tolerance used when snapping a scale onto the grid.
const SNAP_TOL: f64 = 1e-12;

/// How the scales of a profile are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScaleGrid {
    /// `t = 0` followed by `count` evenly spaced scales ending at `max_scale`.
    Uniform { count: usize },
    /// Caller-supplied scales, strictly increasing and nonnegative.
    Explicit(Vec<f64>),
}

/// Settings for profile computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectConfig {
    /// 2 for pairs only, 3 to add sampled triangles.
    pub order: u8,
    /// Barycentric subdivisions per triangle edge at order 3.
    pub triple_grid: usize,
    /// Largest scale of a uniform grid; half the cloud diameter when absent.
    pub max_scale: Option<f64>,
    pub grid: ScaleGrid,
}

impl Default for DefectConfig {
    fn default() -> Self {
        DefectConfig {
            order: 2,
            triple_grid: 15,
            max_scale: None,
            grid: ScaleGrid::Uniform { count: 200 },
        }
    }
}

impl DefectConfig {
    pub fn with_order(mut self, order: u8) -> Self {
        self.order = order;
        self
    }

    pub fn with_max_scale(mut self, max_scale: f64) -> Self {
        self.max_scale = Some(max_scale);
        self
    }

    pub fn with_grid(mut self, grid: ScaleGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_triple_grid(mut self, n: usize) -> Self {
        self.triple_grid = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.order != 2 && self.order != 3 {
            return Err(Error::Config(format!("order must be 2 or 3, got {}", self.order)));
        }
        if self.triple_grid == 0 {
            return Err(Error::Config("triple_grid must be positive".into()));
        }
        if let Some(m) = self.max_scale {
            if !(m > 0.0 && m.is_finite()) {
                return invalid(format!("max_scale must be positive, got {m}"));
            }
        }
        match &self.grid {
            ScaleGrid::Uniform { count } if *count == 0 => {
                Err(Error::Config("grid needs at least one scale".into()))
            }
            ScaleGrid::Explicit(s) => check_scales(s),
            _ => Ok(()),
        }
    }

    /// Resolves the scale grid for `cloud`.
    pub fn scales(&self, cloud: &PointCloud) -> Result<Vec<f64>> {
        self.validate()?;
        match &self.grid {
            ScaleGrid::Explicit(s) => Ok(s.clone()),
            ScaleGrid::Uniform { count } => {
                let max = match self.max_scale {
                    Some(m) => m,
                    None => {
                        let half = 0.5 * cloud.diameter();
                        if half > 0.0 {
                            half
                        } else {
                            // A single repeated point: any positive range gives h = 0.
                            1.0
                        }
                    }
                };
                Ok(uniform_scales(max, *count))
            }
        }
    }
}

/// `0, max/count, 2 max/count, ..., max`.
pub fn uniform_scales(max: f64, count: usize) -> Vec<f64> {
    let mut s = Vec::with_capacity(count + 1);
    s.push(0.0);
    for i in 1..=count {
        s.push(max * i as f64 / count as f64);
    }
    s
}

fn check_scales(s: &[f64]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::Config("grid needs at least one scale".into()));
    }
    if s.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Config("scales must be finite and nonnegative".into()));
    }
    if s.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("scales must be strictly increasing".into()));
    }
    if *s.last().unwrap() <= 0.0 {
        return invalid("largest scale must be positive");
    }
    Ok(())
}

/// Sampled defect function: `values[i] = h(scales[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectProfile {
    scales: Vec<f64>,
    values: Vec<f64>,
    order: u8,
}

impl DefectProfile {
    /// Wraps precomputed values, e.g. a closed-form profile.
    pub fn new(scales: Vec<f64>, values: Vec<f64>, order: u8) -> Result<Self> {
        check_scales(&scales)?;
        if scales.len() != values.len() {
            return invalid(format!(
                "{} scales but {} values",
                scales.len(),
                values.len()
            ));
        }
        if values.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
            return invalid("defect values must be finite and nonnegative");
        }
        Ok(DefectProfile {
            scales,
            values,
            order,
        })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn max_scale(&self) -> f64 {
        *self.scales.last().expect("profiles are nonempty")
    }

    /// Index of the first scale `>= t`, treating scales within a relative `1e-12` of `t`
    /// as equal.
    pub fn index_at_or_above(&self, t: f64) -> Option<usize> {
        let target = t - SNAP_TOL * t.abs();
        let i = self.scales.partition_point(|&s| s < target);
        (i < self.scales.len()).then_some(i)
    }

    /// Index of the last scale `<= t`, with the same tolerance.
    pub fn index_at_or_below(&self, t: f64) -> Option<usize> {
        let target = t + SNAP_TOL * t.abs();
        let i = self.scales.partition_point(|&s| s <= target);
        i.checked_sub(1)
    }

    /// `h` at the first grid scale `>= t`.
    pub fn value_at_or_above(&self, t: f64) -> Option<f64> {
        self.index_at_or_above(t).map(|i| self.values[i])
    }

    /// `h` at the last grid scale `<= t`.
    pub fn value_at_or_below(&self, t: f64) -> Option<f64> {
        self.index_at_or_below(t).map(|i| self.values[i])
    }
}

/// Enclosing radius of a pair and the farthest distance from its segment to the cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairContribution {
    pub half_length: f64,
    pub farthest: f64,
}

/// Contribution of the pair `{cloud[i], cloud[j]}`.
pub fn pair_contribution(cloud: &PointCloud, i: usize, j: usize) -> Result<PairContribution> {
    if i >= cloud.len() || j >= cloud.len() {
        return invalid(format!("pair ({i}, {j}) out of range for {} points", cloud.len()));
    }
    let pts = cloud.to_points();
    let (_, farthest) = segment_farthest(&pts[i], &pts[j], cloud)?;
    let half_length = 0.5 * crate::geom::sq_dist(cloud.point(i), cloud.point(j)).sqrt();
    Ok(PairContribution {
        half_length,
        farthest,
    })
}

/// Defect profile of `cloud` on the grid described by `config`.
pub fn defect_profile(cloud: &PointCloud, config: &DefectConfig) -> Result<DefectProfile> {
    let scales = config.scales(cloud)?;
    let values = engine::sweep(cloud, &scales, config.order, config.triple_grid);
    DefectProfile::new(scales, values, config.order)
}

/// `h(t)` at a single scale. Equals the profile value whenever `t` is a grid scale.
pub fn defect_at(cloud: &PointCloud, t: f64, config: &DefectConfig) -> Result<f64> {
    config.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return invalid(format!("scale must be finite and nonnegative, got {t}"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(engine::sweep(cloud, &[t], config.order, config.triple_grid)[0])
}

/// Smallest grid scale `t > 5.5 epsilon` with `h(t) >= t - 3 epsilon`.
pub fn first_diagonal_touch(profile: &DefectProfile, epsilon: f64) -> Option<f64> {
    let lower = 22.0 / 4.0 * epsilon;
    profile
        .scales
        .iter()
        .zip(&profile.values)
        .find(|(&t, &h)| t > lower && h >= t - 3.0 * epsilon)
        .map(|(&t, _)| t)
}
