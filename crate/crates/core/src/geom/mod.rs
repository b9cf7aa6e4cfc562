//! Points, clouds and the exact metric primitives everything else is built on.

mod ball;
mod envelope;
mod index;

pub use ball::{min_enclosing_ball, Ball};
pub(crate) use ball::meb_of;
pub use envelope::segment_farthest;
pub(crate) use envelope::{envelope_max, Envelope};
pub use index::{nearest_dist, SpatialIndex};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point of `R^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return invalid("a point needs at least one coordinate");
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return invalid("point coordinates must be finite");
        }
        Ok(Point { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// A nonempty finite set of points sharing one ambient dimension.
///
/// Coordinates are stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from a flat row-major buffer.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        if data.is_empty() {
            return invalid("point cloud is empty");
        }
        if data.len() % dim != 0 {
            return invalid(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            ));
        }
        if let Some(pos) = data.iter().position(|c| !c.is_finite()) {
            return invalid(format!("non-finite coordinate in point {}", pos / dim));
        }
        Ok(PointCloud { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        if rows.is_empty() {
            return invalid("point cloud is empty");
        }
        PointCloud::new(dim, data)
    }

    pub fn from_points(points: &[Point]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = points.iter().map(|p| p.coords.clone()).collect();
        PointCloud::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false: clouds are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.iter()
            .map(|c| Point {
                coords: c.to_vec(),
            })
            .collect()
    }

    /// Multiplies every coordinate by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        PointCloud::new(self.dim, self.data.iter().map(|c| c * factor).collect())
    }

    /// Componentwise minimum and maximum.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.point(0).to_vec();
        let mut hi = lo.clone();
        for p in self.iter() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Largest pairwise distance, by exhaustive scan.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            let p = self.point(i);
            for j in i + 1..n {
                best = best.max(sq_dist(p, self.point(j)));
            }
        }
        best.sqrt()
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: dim,
            });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance between two points.
pub fn dist(p: &Point, q: &Point) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok(sq_dist(&p.coords, &q.coords).sqrt())
}

/// `H(A|B) = max_{a in A} d(a, B)`.
pub fn hausdorff_asym(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    b.check_dim(a.dim())?;
    let index = SpatialIndex::for_nearest(b);
    let mut best = 0.0f64;
    for p in a.iter() {
        best = best.max(index.nearest(b, p).1);
    }
    Ok(best)
}

/// Symmetric Hausdorff distance.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    Ok(hausdorff_asym(a, b)?.max(hausdorff_asym(b, a)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn dist_examples() {
        assert_eq!(dist(&pt(&[0.0, 0.0]), &pt(&[3.0, 4.0])).unwrap(), 5.0);
        assert_eq!(dist(&pt(&[1.5, -2.0]), &pt(&[1.5, -2.0])).unwrap(), 0.0);
        let d = dist(&pt(&[1.0, 0.0, 0.0]), &pt(&[0.0, 1.0, 0.0])).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            dist(&pt(&[1.0]), &pt(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn point_and_cloud_validation() {
        assert!(Point::new(vec![]).is_err());
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(PointCloud::new(2, vec![]).is_err());
        assert!(PointCloud::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(PointCloud::new(1, vec![f64::INFINITY]).is_err());
        assert!(PointCloud::from_rows(&[vec![0.0], vec![1.0, 2.0]]).is_err());
        let c = PointCloud::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.point(1), &[2.0, 3.0]);
    }

    #[test]
    fn hausdorff_examples() {
        let a = PointCloud::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let b = PointCloud::from_rows(&[vec![0.0, 0.0], vec![5.0, 0.0]]).unwrap();
        assert_eq!(hausdorff_asym(&a, &b).unwrap(), 0.0);
        assert_eq!(hausdorff_asym(&b, &a).unwrap(), 5.0);
        assert_eq!(hausdorff(&b, &b).unwrap(), 0.0);
        let c = PointCloud::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(hausdorff(&a, &c).unwrap(), 1.0);
    }

    #[test]
    fn diameter_of_square() {
        let c = PointCloud::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        assert!((c.diameter() - 2f64.sqrt()).abs() < 1e-15);
    }
}
