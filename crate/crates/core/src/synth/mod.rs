//! Samplers for manifolds with known reach, including the bumped sphere and a dumbbell
//! whose reach is set by its neck.

mod bump;
mod dumbbell;

pub use bump::{bump_profile, perturb_bump, BumpProfile};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::PointCloud;
use dumbbell::Dumbbell;

/// Default radius of the neck arcs of a dumbbell.
pub const DEFAULT_NECK_SMOOTHING: f64 = 0.5;

/// A sampled manifold. Lengths are in ambient units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "manifold", rename_all = "lowercase")]
pub enum ManifoldSpec {
    /// Circle of the given radius in the plane, centred at the origin.
    Circle { radius: f64 },
    /// The `d`-sphere in `R^(d+1)`.
    Sphere { d: usize, radius: f64 },
    /// Torus of revolution about the last axis of `R^3`.
    Torus { minor: f64, major: f64 },
    /// The `d`-sphere of radius `radius` with a bump of width `gamma` and height
    /// `gamma^k` pushed outward at its north pole.
    BumpSphere {
        d: usize,
        radius: f64,
        gamma: f64,
        k: u32,
    },
    /// Two parallel segments of the given length at heights `+-half_gap`.
    TwoSegmentBottleneck { length: f64, half_gap: f64 },
    /// Two round lobes joined by a neck of half-width `neck` whose sides are arcs of
    /// radius `smoothing`.
    Dumbbell {
        lobe: f64,
        neck: f64,
        smoothing: f64,
    },
}

impl ManifoldSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                invalid(format!("{name} must be positive, got {v}"))
            }
        };
        match *self {
            ManifoldSpec::Circle { radius } => positive("radius", radius),
            ManifoldSpec::Sphere { d, radius } => {
                if d == 0 {
                    return invalid("sphere dimension must be positive");
                }
                positive("radius", radius)
            }
            ManifoldSpec::Torus { minor, major } => {
                positive("minor radius", minor)?;
                positive("major radius", major)?;
                if major <= minor {
                    return invalid(format!(
                        "major radius {major} must exceed minor radius {minor}"
                    ));
                }
                Ok(())
            }
            ManifoldSpec::BumpSphere {
                d,
                radius,
                gamma,
                k,
            } => {
                if d == 0 {
                    return invalid("sphere dimension must be positive");
                }
                if k < 3 {
                    return invalid(format!("bump order must be at least 3, got {k}"));
                }
                positive("radius", radius)?;
                if !(gamma.is_finite() && gamma >= 0.0) {
                    return invalid(format!("bump width must be nonnegative, got {gamma}"));
                }
                if gamma >= radius {
                    return invalid(format!("bump width {gamma} must be below the radius"));
                }
                if gamma.powi(k as i32 - 1) * BumpProfile.max_slope() >= 1.0 {
                    return invalid(format!("bump width {gamma} is too large for order {k}"));
                }
                Ok(())
            }
            ManifoldSpec::TwoSegmentBottleneck { length, half_gap } => {
                positive("length", length)?;
                positive("half gap", half_gap)
            }
            ManifoldSpec::Dumbbell {
                lobe,
                neck,
                smoothing,
            } => Dumbbell::new(lobe, neck, smoothing).map(|_| ()),
        }
    }

    /// Ambient dimension of the samples.
    pub fn ambient_dim(&self) -> usize {
        match *self {
            ManifoldSpec::Circle { .. } => 2,
            ManifoldSpec::Sphere { d, .. } | ManifoldSpec::BumpSphere { d, .. } => d + 1,
            ManifoldSpec::Torus { .. } => 3,
            ManifoldSpec::TwoSegmentBottleneck { .. } | ManifoldSpec::Dumbbell { .. } => 2,
        }
    }

    /// One-line JSON description, as recorded in cloud file headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("specs serialize")
    }

    /// Intrinsic dimension.
    pub fn intrinsic_dim(&self) -> usize {
        match *self {
            ManifoldSpec::Sphere { d, .. } | ManifoldSpec::BumpSphere { d, .. } => d,
            ManifoldSpec::Torus { .. } => 2,
            _ => 1,
        }
    }
}

/// `n` i.i.d. points from the uniform distribution on the manifold, reproducible from
/// `seed`.
pub fn sample(spec: &ManifoldSpec, n: usize, seed: u64) -> Result<PointCloud> {
    spec.validate()?;
    if n == 0 {
        return invalid("sample size must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = spec.ambient_dim();
    let mut data = Vec::with_capacity(n * dim);
    let tau = std::f64::consts::TAU;
    match *spec {
        ManifoldSpec::Circle { radius } => {
            for _ in 0..n {
                let a: f64 = rng.random_range(0.0..tau);
                data.push(radius * a.cos());
                data.push(radius * a.sin());
            }
        }
        ManifoldSpec::Sphere { d, radius } => {
            let mut z = vec![0.0; d + 1];
            for _ in 0..n {
                sphere_point(&mut rng, radius, &mut z);
                data.extend_from_slice(&z);
            }
        }
        ManifoldSpec::Torus { minor, major } => {
            for _ in 0..n {
                // Area element is proportional to major + minor cos(theta).
                let theta = loop {
                    let t: f64 = rng.random_range(0.0..tau);
                    let u: f64 = rng.random_range(0.0..1.0);
                    if u * (major + minor) <= major + minor * t.cos() {
                        break t;
                    }
                };
                let phi: f64 = rng.random_range(0.0..tau);
                let ring = major + minor * theta.cos();
                data.extend_from_slice(&[ring * phi.cos(), ring * phi.sin(), minor * theta.sin()]);
            }
        }
        ManifoldSpec::BumpSphere {
            d,
            radius,
            gamma,
            k,
        } => {
            let mut z = vec![0.0; d + 1];
            if gamma == 0.0 {
                for _ in 0..n {
                    sphere_point(&mut rng, radius, &mut z);
                    data.extend_from_slice(&z);
                }
            } else {
                let psi = BumpProfile;
                let bound = bump::jacobian_bound(gamma, k, &psi);
                let amp = gamma.powi(k as i32);
                for _ in 0..n {
                    loop {
                        sphere_point(&mut rng, radius, &mut z);
                        let j = bump::sphere_jacobian(&z, radius, gamma, k, &psi);
                        let u: f64 = rng.random_range(0.0..1.0);
                        if u * bound <= j {
                            break;
                        }
                    }
                    // Bump coordinates put the apex at the origin.
                    let mut norm2 = 0.0;
                    for (i, &x) in z.iter().enumerate() {
                        let c = if i == d { x - radius } else { x };
                        norm2 += c * c;
                    }
                    z[d] += amp * psi.value(norm2.sqrt() / gamma);
                    data.extend_from_slice(&z);
                }
            }
        }
        ManifoldSpec::TwoSegmentBottleneck { length, half_gap } => {
            for _ in 0..n {
                let x: f64 = rng.random_range(-0.5 * length..0.5 * length);
                let y = if rng.random_bool(0.5) { half_gap } else { -half_gap };
                data.push(x);
                data.push(y);
            }
        }
        ManifoldSpec::Dumbbell {
            lobe,
            neck,
            smoothing,
        } => {
            let curve = Dumbbell::new(lobe, neck, smoothing)?;
            let len = curve.length();
            for _ in 0..n {
                let s: f64 = rng.random_range(0.0..len);
                data.extend_from_slice(&curve.at(s));
            }
        }
    }
    PointCloud::new(dim, data)
}

fn sphere_point(rng: &mut ChaCha8Rng, radius: f64, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
            norm2 += *x * *x;
        }
        if norm2 > 0.0 {
            let f = radius / norm2.sqrt();
            out.iter_mut().for_each(|x| *x *= f);
            return;
        }
    }
}

/// How a ground-truth number relates to the true quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Truth {
    Exact(f64),
    /// The true value is at most this.
    UpperBound(f64),
    /// The true value is at least this.
    LowerBound(f64),
}

impl Truth {
    pub fn value(&self) -> f64 {
        match *self {
            Truth::Exact(v) | Truth::UpperBound(v) | Truth::LowerBound(v) => v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Truth::Exact(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    /// Closed form.
    Analytic,
    /// Numerical reference computed at the given resolution.
    Oracle { resolution: f64 },
}

/// A reference value with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub truth: Truth,
    pub provenance: Provenance,
}

impl Reference {
    fn analytic(truth: Truth) -> Self {
        Reference {
            truth,
            provenance: Provenance::Analytic,
        }
    }
}

/// Local reach, weak feature size and reach of a synthetic manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub r_local: Reference,
    pub r_wfs: Reference,
    pub r: Reference,
}

pub fn ground_truth(spec: &ManifoldSpec) -> Result<GroundTruth> {
    use Truth::*;
    spec.validate()?;
    let exact = |l: f64, w: f64| GroundTruth {
        r_local: Reference::analytic(Exact(l)),
        r_wfs: Reference::analytic(Exact(w)),
        r: Reference::analytic(Exact(l.min(w))),
    };
    Ok(match *spec {
        ManifoldSpec::Circle { radius } | ManifoldSpec::Sphere { radius, .. } => {
            exact(radius, radius)
        }
        // The core circle is critical at distance `minor`, the centre at `major - minor`.
        ManifoldSpec::Torus { minor, major } => exact(minor, minor.min(major - minor)),
        ManifoldSpec::BumpSphere {
            radius, gamma, k, ..
        } => {
            // The apex curvature is 1/r + c gamma^(k-2) with c = -psi''(0).
            let c = -BumpProfile.second_derivative_at_zero();
            let apex = 1.0 / (1.0 / radius + c * gamma.powi(k as i32 - 2));
            if gamma == 0.0 {
                exact(radius, radius)
            } else {
                GroundTruth {
                    r_local: Reference::analytic(UpperBound(apex)),
                    r_wfs: Reference::analytic(LowerBound(radius)),
                    r: Reference::analytic(UpperBound(apex)),
                }
            }
        }
        ManifoldSpec::TwoSegmentBottleneck { half_gap, .. } => exact(f64::INFINITY, half_gap),
        // Curvature radii are `lobe` and `smoothing`; the midpoint of the neck is the
        // first critical point of the distance.
        ManifoldSpec::Dumbbell {
            lobe,
            neck,
            smoothing,
        } => exact(lobe.min(smoothing), neck),
    })
}
