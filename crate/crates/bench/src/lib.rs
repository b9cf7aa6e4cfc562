//! Fixtures shared by the benchmarks.

use reach_core::{sample, ManifoldSpec, PointCloud};

/// Uniform sample of the unit circle used by several benchmarks.
pub fn circle(n: usize) -> PointCloud {
    sample(&ManifoldSpec::Circle { radius: 1.0 }, n, 17).expect("valid spec")
}

/// Uniform sample of the unit 2-sphere.
pub fn sphere(n: usize) -> PointCloud {
    sample(&ManifoldSpec::Sphere { d: 2, radius: 1.0 }, n, 17).expect("valid spec")
}
