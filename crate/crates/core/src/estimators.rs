//! Reach estimators built on a defect profile.
//!
//! The local estimate reads the curvature of `h` at a single scale `delta`; the global
//! one looks for the first scale where `h` comes within `3 epsilon` of the diagonal.
//! Both are capped at `r_max` and the reach estimate is their minimum.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::defect::{defect_profile, first_diagonal_touch, DefectConfig, DefectProfile, ScaleGrid};
use crate::error::{invalid, Error, Result};
use crate::geom::{PointCloud, SpatialIndex};

/// Model assumptions and tuning for the estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Intrinsic dimension.
    pub d: usize,
    /// Regularity order, at least 3.
    pub k: u32,
    pub r_min: Option<f64>,
    pub r_max: f64,
    /// Hausdorff error of the cloud; estimated from the cloud when absent.
    pub epsilon: Option<f64>,
    pub f_min: Option<f64>,
    /// Accepted for completeness, not used by any estimator.
    pub f_max: Option<f64>,
    /// Length in which `epsilon` is measured before the fractional power is taken:
    /// `delta = length_unit * (epsilon / length_unit)^(1/3)` for `k = 3`. Scaling it with
    /// the cloud keeps the estimators exactly scale equivariant.
    pub length_unit: f64,
}

impl ModelParams {
    pub fn new(d: usize, k: u32, r_max: f64) -> Self {
        ModelParams {
            d,
            k,
            r_min: None,
            r_max,
            epsilon: None,
            f_min: None,
            f_max: None,
            length_unit: 1.0,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn with_r_min(mut self, r_min: f64) -> Self {
        self.r_min = Some(r_min);
        self
    }

    pub fn with_length_unit(mut self, unit: f64) -> Self {
        self.length_unit = unit;
        self
    }

    /// Multiplies every length (`r_min`, `r_max`, `epsilon`, `length_unit`) by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        ModelParams {
            r_min: self.r_min.map(|r| r * factor),
            r_max: self.r_max * factor,
            epsilon: self.epsilon.map(|e| e * factor),
            length_unit: self.length_unit * factor,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return invalid("intrinsic dimension must be positive");
        }
        if self.k < 3 {
            return invalid(format!("regularity order must be at least 3, got {}", self.k));
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return invalid(format!("r_max must be positive, got {}", self.r_max));
        }
        if !(self.length_unit.is_finite() && self.length_unit > 0.0) {
            return invalid(format!("length unit must be positive, got {}", self.length_unit));
        }
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => {
                invalid(format!("{name} must be positive, got {x}"))
            }
            _ => Ok(()),
        };
        positive("r_min", self.r_min)?;
        positive("epsilon", self.epsilon)?;
        positive("f_min", self.f_min)?;
        positive("f_max", self.f_max)?;
        if let Some(r_min) = self.r_min {
            if r_min > self.r_max {
                return invalid(format!("r_min {r_min} exceeds r_max {}", self.r_max));
            }
        }
        Ok(())
    }

    /// Probe scale for the local estimator.
    pub fn delta(&self, epsilon: f64) -> f64 {
        let p = if self.k == 3 { 1.0 / 3.0 } else { 0.25 };
        self.length_unit * (epsilon / self.length_unit).powf(p)
    }
}

/// Which estimator attained the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Local,
    Global,
    Capped,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Local => "local",
            Branch::Global => "global",
            Branch::Capped => "capped",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachEstimate {
    pub r_hat: f64,
    pub r_local: f64,
    pub r_wfs: f64,
    pub epsilon_used: f64,
    pub delta_used: f64,
    pub branch: Branch,
    pub n_points: usize,
    pub dim: usize,
    pub order: u8,
}

/// Twice the largest distance from a point to its nearest distinct neighbor.
pub fn estimate_epsilon(cloud: &PointCloud) -> Result<f64> {
    if cloud.len() < 2 {
        return invalid("at least two points are needed to estimate epsilon");
    }
    let index = SpatialIndex::for_nearest(cloud);
    let mut worst = 0.0f64;
    for p in cloud.iter() {
        worst = worst.max(index.nearest_distinct(cloud, p));
    }
    if worst == 0.0 || !worst.is_finite() {
        return invalid("all points coincide; epsilon cannot be estimated");
    }
    Ok(2.0 * worst)
}

/// Local reach estimate `min(t^2 / (2 h(t)), r_max)` and the probe scale `delta`.
///
/// `t` is the first grid scale at or above `delta`, so the quotient is always taken at a
/// scale where `h` is known exactly.
pub fn local_reach(profile: &DefectProfile, params: &ModelParams, epsilon: f64) -> Result<(f64, f64)> {
    params.validate()?;
    check_epsilon(epsilon)?;
    let delta = params.delta(epsilon);
    let i = profile.index_at_or_above(delta).ok_or_else(|| {
        Error::Config(format!(
            "probe scale {delta} exceeds the largest profile scale {}; extend the grid",
            profile.max_scale()
        ))
    })?;
    let (t, h) = (profile.scales()[i], profile.values()[i]);
    if h == 0.0 {
        return Ok((params.r_max, delta));
    }
    Ok(((t * t / (2.0 * h)).min(params.r_max), delta))
}

/// Weak feature size estimate: the first diagonal touch, capped at `r_max`.
pub fn wfs(profile: &DefectProfile, params: &ModelParams, epsilon: f64) -> Result<f64> {
    params.validate()?;
    check_epsilon(epsilon)?;
    if let Some(r_min) = params.r_min {
        if epsilon >= 2.0 / 9.0 * r_min {
            log::warn!(
                "epsilon {epsilon} is not below 2/9 of r_min {r_min}; the detector is not guaranteed"
            );
        }
    }
    Ok(first_diagonal_touch(profile, epsilon)
        .map_or(params.r_max, |t| t.min(params.r_max)))
}

/// Combines both estimators on a precomputed profile.
pub fn reach_from_profile(
    profile: &DefectProfile,
    params: &ModelParams,
    epsilon: f64,
    n_points: usize,
    dim: usize,
) -> Result<ReachEstimate> {
    let (r_local, delta) = local_reach(profile, params, epsilon)?;
    let r_wfs = wfs(profile, params, epsilon)?;
    let branch = if r_local >= params.r_max && r_wfs >= params.r_max {
        Branch::Capped
    } else if r_wfs <= r_local {
        Branch::Global
    } else {
        Branch::Local
    };
    Ok(ReachEstimate {
        r_hat: r_local.min(r_wfs),
        r_local,
        r_wfs,
        epsilon_used: epsilon,
        delta_used: delta,
        branch,
        n_points,
        dim,
        order: profile.order(),
    })
}

/// Full pipeline: epsilon (given or estimated), profile, both estimators.
pub fn reach(cloud: &PointCloud, params: &ModelParams, config: &DefectConfig) -> Result<ReachEstimate> {
    params.validate()?;
    if cloud.len() < 2 {
        return invalid("at least two points are needed to estimate the reach");
    }
    let epsilon = match params.epsilon {
        Some(e) => e,
        None => estimate_epsilon(cloud)?,
    };
    let profile = defect_profile(cloud, &extend_auto_grid(cloud, params, config, epsilon))?;
    reach_from_profile(&profile, params, epsilon, cloud.len(), cloud.dim())
}

/// An automatic uniform grid ends at half the diameter, which can fall short of the probe
/// scale on tiny clouds. Since `h` is constant past the enclosing radius, stretching such a
/// grid to the probe scale is harmless. Explicit grids and scales are left alone.
fn extend_auto_grid(
    cloud: &PointCloud,
    params: &ModelParams,
    config: &DefectConfig,
    epsilon: f64,
) -> DefectConfig {
    let mut config = config.clone();
    if config.max_scale.is_none() && matches!(config.grid, ScaleGrid::Uniform { .. }) {
        let delta = params.delta(epsilon);
        let half = 0.5 * cloud.diameter();
        if delta > half {
            config.max_scale = Some(delta);
        }
    }
    config
}

/// `(f_min omega_d)^(-1/d)` with `omega_d` the volume of the unit `d`-sphere.
///
/// This is only the density term of the upper bound on the reach; the curvature term
/// has no explicit constant.
pub fn rmax_from_density(f_min: f64, d: usize) -> Result<f64> {
    if !(f_min.is_finite() && f_min > 0.0) {
        return invalid(format!("f_min must be positive, got {f_min}"));
    }
    if d == 0 {
        return invalid("intrinsic dimension must be positive");
    }
    Ok((f_min * sphere_volume(d)).powf(-1.0 / d as f64))
}

/// Surface measure of the unit `d`-sphere in `R^(d+1)`: `2 pi^((d+1)/2) / Gamma((d+1)/2)`.
pub fn sphere_volume(d: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let m = d + 1;
    // Gamma(m / 2) by the recurrence from Gamma(1) or Gamma(1/2).
    let (mut g, mut x) = if m % 2 == 0 {
        (1.0, 1.0)
    } else {
        (pi.sqrt(), 0.5)
    };
    while x + 0.5 < m as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    2.0 * pi.powf(m as f64 / 2.0) / g
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defect::uniform_scales;

    fn closed_form(max: f64, count: usize, h: impl Fn(f64) -> f64) -> DefectProfile {
        let scales = uniform_scales(max, count);
        let values = scales.iter().map(|&t| h(t)).collect();
        DefectProfile::new(scales, values, 2).unwrap()
    }

    #[test]
    fn sphere_volumes() {
        let pi = std::f64::consts::PI;
        assert!((sphere_volume(1) - 2.0 * pi).abs() < 1e-12);
        assert!((sphere_volume(2) - 4.0 * pi).abs() < 1e-12);
        assert!((sphere_volume(3) - 2.0 * pi * pi).abs() < 1e-12);
        assert!((sphere_volume(4) - 8.0 * pi * pi / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rmax_examples() {
        let pi = std::f64::consts::PI;
        assert!((rmax_from_density(1.0 / (2.0 * pi), 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((rmax_from_density(1.0 / (4.0 * pi), 2).unwrap() - 1.0).abs() < 1e-12);
        assert!(rmax_from_density(1e12, 2).unwrap() < 1e-5);
        assert!(rmax_from_density(0.0, 2).is_err());
        assert!(rmax_from_density(-1.0, 2).is_err());
    }

    #[test]
    fn epsilon_examples() {
        let two = PointCloud::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(estimate_epsilon(&two).unwrap(), 2.0);
        let gon: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 100.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let want = 4.0 * (std::f64::consts::PI / 100.0).sin();
        let got = estimate_epsilon(&PointCloud::from_rows(&gon).unwrap()).unwrap();
        assert!((got - want).abs() < 1e-12);
        let one = PointCloud::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert!(estimate_epsilon(&one).is_err());
    }

    #[test]
    fn epsilon_ignores_duplicates() {
        let c = PointCloud::from_rows(&[vec![0.0], vec![0.0], vec![3.0]]).unwrap();
        assert_eq!(estimate_epsilon(&c).unwrap(), 6.0);
    }

    #[test]
    fn local_on_circle_formula() {
        let p = closed_form(1.0, 2000, |t| 1.0 - (1.0 - t * t).max(0.0).sqrt());
        let params = ModelParams::new(1, 4, 10.0);
        let (r, delta) = local_reach(&p, &params, 0.001).unwrap();
        assert!((delta - 0.001f64.powf(0.25)).abs() < 1e-15);
        let snapped = p.scales()[p.index_at_or_above(delta).unwrap()];
        let want = snapped * snapped / (2.0 * (1.0 - (1.0 - snapped * snapped).sqrt()));
        assert!((r - want).abs() < 1e-12);
        assert!((r - 0.99210).abs() < 1e-3);
    }

    #[test]
    fn local_on_quadratic_profile() {
        let p = closed_form(1.0, 100, |t| t * t / 4.0);
        for eps in [1e-4, 1e-3, 0.01] {
            let (r, _) = local_reach(&p, &ModelParams::new(1, 3, 10.0), eps).unwrap();
            assert!((r - 2.0).abs() < 1e-12);
            let (r, _) = local_reach(&p, &ModelParams::new(1, 3, 1.5), eps).unwrap();
            assert_eq!(r, 1.5);
        }
    }

    #[test]
    fn local_zero_profile_is_capped() {
        let p = closed_form(1.0, 10, |_| 0.0);
        let (r, _) = local_reach(&p, &ModelParams::new(1, 3, 7.0), 0.01).unwrap();
        assert_eq!(r, 7.0);
    }

    #[test]
    fn local_rejects_short_grid() {
        let p = closed_form(0.1, 10, |t| t * t);
        let err = local_reach(&p, &ModelParams::new(1, 3, 7.0), 0.01).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn local_converges_on_circle_formula() {
        let p = closed_form(1.0, 100_000, |t| 1.0 - (1.0 - t * t).max(0.0).sqrt());
        let params = ModelParams::new(1, 3, 10.0);
        let mut last = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4, 1e-5] {
            let (r, delta) = local_reach(&p, &params, eps).unwrap();
            let err = (1.0 - r).abs();
            // Leading error delta^2 / 4.
            assert!(err <= delta * delta / 4.0 * 1.1 + 1e-4, "eps {eps}: {err}");
            assert!(err < last);
            last = err;
        }
    }

    #[test]
    fn wfs_cases() {
        // Step at t = 1 as for two points at distance 2.
        let step = closed_form(2.0, 200, |t| if t >= 1.0 { 1.0 } else { 0.0 });
        let r = wfs(&step, &ModelParams::new(1, 3, 10.0), 0.01).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let quarter = closed_form(1.0, 200, |t| t * t / 4.0);
        assert_eq!(wfs(&quarter, &ModelParams::new(1, 3, 10.0), 0.01).unwrap(), 10.0);
        assert_eq!(wfs(&step, &ModelParams::new(1, 3, 10.0), 1.0).unwrap(), 10.0);
        assert_eq!(wfs(&step, &ModelParams::new(1, 3, 0.5), 0.01).unwrap(), 0.5);
    }

    #[test]
    fn branch_selection() {
        let step = closed_form(2.0, 200, |t| if t >= 1.0 { 1.0 } else { 0.0 });
        let est = reach_from_profile(&step, &ModelParams::new(1, 3, 10.0), 0.01, 2, 1).unwrap();
        assert_eq!(est.branch, Branch::Global);
        assert_eq!(est.r_local, 10.0);
        assert_eq!(est.r_hat, est.r_wfs);

        let quad = closed_form(1.0, 200, |t| t * t / 4.0);
        let est = reach_from_profile(&quad, &ModelParams::new(1, 3, 10.0), 0.01, 2, 1).unwrap();
        assert_eq!(est.branch, Branch::Local);
        assert!((est.r_hat - 2.0).abs() < 1e-12);

        let flat = closed_form(1.0, 10, |_| 0.0);
        let est = reach_from_profile(&flat, &ModelParams::new(1, 3, 4.0), 0.01, 2, 1).unwrap();
        assert_eq!(est.branch, Branch::Capped);
        assert_eq!(est.r_hat, 4.0);
    }

    #[test]
    fn tight_cluster_is_capped() {
        let c = PointCloud::from_rows(&[vec![0.0, 0.0], vec![1e-9, 0.0], vec![0.0, 1e-9]]).unwrap();
        let params = ModelParams::new(1, 3, 5.0).with_epsilon(0.01);
        let config = DefectConfig::default().with_max_scale(1.0);
        let est = reach(&c, &params, &config).unwrap();
        assert_eq!(est.branch, Branch::Capped);
        assert_eq!(est.r_hat, 5.0);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1, 2, 1.0).validate().is_err());
        assert!(ModelParams::new(0, 3, 1.0).validate().is_err());
        assert!(ModelParams::new(1, 3, 0.0).validate().is_err());
        assert!(ModelParams::new(1, 3, 1.0).with_r_min(2.0).validate().is_err());
        assert!(ModelParams::new(1, 3, 1.0).with_epsilon(-1.0).validate().is_err());
        assert!(ModelParams::new(1, 3, 1.0).with_r_min(0.5).validate().is_ok());
    }

    #[test]
    fn estimate_serializes_flat() {
        let est = ReachEstimate {
            r_hat: 1.0,
            r_local: 1.0,
            r_wfs: 2.0,
            epsilon_used: 0.1,
            delta_used: 0.4,
            branch: Branch::Local,
            n_points: 10,
            dim: 2,
            order: 2,
        };
        let v: serde_json::Value = serde_json::to_value(&est).unwrap();
        assert_eq!(v["branch"], "local");
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        for k in [
            "r_hat",
            "r_local",
            "r_wfs",
            "epsilon_used",
            "delta_used",
            "branch",
            "n_points",
            "dim",
            "order",
        ] {
            assert!(keys.contains(&k));
        }
    }
}
