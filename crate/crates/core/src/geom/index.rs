use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use super::{sq_dist, Point, PointCloud};
use crate::error::{invalid, Result};

type CellKey = SmallVec<[i64; 4]>;

/// Uniform lattice of cubic cells, each holding the indices of the cloud points inside it.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    dim: usize,
    cell_size: f64,
    buckets: FxHashMap<CellKey, Vec<u32>>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    len: usize,
}

impl SpatialIndex {
    pub fn new(cloud: &PointCloud, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return invalid(format!("cell size must be positive and finite, got {cell_size}"));
        }
        let dim = cloud.dim();
        let mut buckets: FxHashMap<CellKey, Vec<u32>> = FxHashMap::default();
        let mut lo = vec![i64::MAX; dim];
        let mut hi = vec![i64::MIN; dim];
        for (i, p) in cloud.iter().enumerate() {
            let key = cell_of(p, cell_size);
            for k in 0..dim {
                lo[k] = lo[k].min(key[k]);
                hi[k] = hi[k].max(key[k]);
            }
            buckets.entry(key).or_default().push(i as u32);
        }
        Ok(SpatialIndex {
            dim,
            cell_size,
            buckets,
            lo,
            hi,
            len: cloud.len(),
        })
    }

    /// Index with a cell size suited to nearest-neighbor queries: about two points per
    /// occupied cell for evenly spread data.
    pub fn for_nearest(cloud: &PointCloud) -> Self {
        let (lo, hi) = cloud.bounding_box();
        let extent = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| b - a)
            .fold(0.0f64, f64::max);
        let n = cloud.len() as f64;
        let mut cell = extent * (2.0 / n).powf(1.0 / cloud.dim() as f64);
        if !(cell > 0.0 && cell.is_finite()) {
            cell = 1.0;
        }
        SpatialIndex::new(cloud, cell).expect("cell size is positive")
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of occupied cells.
    pub fn occupied_cells(&self) -> usize {
        self.buckets.len()
    }

    /// Indices stored in the cell containing `p`.
    pub fn bucket_of(&self, p: &[f64]) -> &[u32] {
        self.buckets
            .get(&cell_of(p, self.cell_size))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Index of a nearest cloud point to `q` and its distance.
    pub(crate) fn nearest(&self, cloud: &PointCloud, q: &[f64]) -> (usize, f64) {
        self.nearest_filtered(cloud, q, false)
    }

    /// Distance from `q` to the nearest cloud point not equal to `q`; infinite if none.
    pub(crate) fn nearest_distinct(&self, cloud: &PointCloud, q: &[f64]) -> f64 {
        self.nearest_filtered(cloud, q, true).1
    }

    fn nearest_filtered(&self, cloud: &PointCloud, q: &[f64], distinct: bool) -> (usize, f64) {
        let home = cell_of(q, self.cell_size);
        // Chebyshev radius (in cells) beyond which no occupied cell exists.
        let mut reach = 0i64;
        for k in 0..self.dim {
            reach = reach.max((home[k] - self.lo[k]).abs());
            reach = reach.max((self.hi[k] - home[k]).abs());
        }
        let mut best = (usize::MAX, f64::INFINITY);
        let mut r = 0i64;
        loop {
            let ring_cells = (2 * r + 1) as f64;
            if self.dim > 4 || ring_cells.powi(self.dim as i32) > 4.0 * self.len as f64 {
                // Rings have become more expensive than a scan of everything.
                return scan_nearest(cloud, q, distinct);
            }
            for_each_ring_offset(self.dim, r, |off| {
                let key: CellKey = home.iter().zip(off).map(|(h, o)| h + o).collect();
                if let Some(bucket) = self.buckets.get(&key) {
                    for &i in bucket {
                        let d2 = sq_dist(q, cloud.point(i as usize));
                        if distinct && d2 == 0.0 {
                            continue;
                        }
                        if d2 < best.1 || (d2 == best.1 && (i as usize) < best.0) {
                            best = (i as usize, d2);
                        }
                    }
                }
            });
            // Points in ring r + 1 are at least r cells away.
            let bound = r as f64 * self.cell_size;
            if best.0 != usize::MAX && best.1 <= bound * bound {
                break;
            }
            if r >= reach {
                break;
            }
            r += 1;
        }
        (best.0, best.1.sqrt())
    }

    /// Calls `f(i, j)` with `i < j` for every pair at distance at most `radius`.
    /// Requires `radius <= cell_size`.
    pub(crate) fn for_each_pair_within(
        &self,
        cloud: &PointCloud,
        radius: f64,
        mut f: impl FnMut(usize, usize),
    ) {
        debug_assert!(radius <= self.cell_size);
        let r2 = radius * radius;
        let dim = self.dim;
        let offsets = half_neighborhood(dim);
        let mut keys: Vec<&CellKey> = self.buckets.keys().collect();
        keys.sort();
        let mut key: CellKey = SmallVec::from_elem(0, dim);
        for home in keys {
            let bucket = &self.buckets[home];
            for (a, &i) in bucket.iter().enumerate() {
                let p = cloud.point(i as usize);
                for &j in &bucket[a + 1..] {
                    if sq_dist(p, cloud.point(j as usize)) <= r2 {
                        f(i.min(j) as usize, i.max(j) as usize);
                    }
                }
            }
            for off in &offsets {
                for k in 0..dim {
                    key[k] = home[k] + off[k];
                }
                if let Some(other) = self.buckets.get(&key) {
                    for &i in bucket {
                        let p = cloud.point(i as usize);
                        for &j in other {
                            if sq_dist(p, cloud.point(j as usize)) <= r2 {
                                f(i.min(j) as usize, i.max(j) as usize);
                            }
                        }
                    }
                }
            }
        }
    }
}

fn cell_of(p: &[f64], cell_size: f64) -> CellKey {
    p.iter().map(|c| (c / cell_size).floor() as i64).collect()
}

fn scan_nearest(cloud: &PointCloud, q: &[f64], distinct: bool) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, p) in cloud.iter().enumerate() {
        let d2 = sq_dist(q, p);
        if d2 < best.1 && !(distinct && d2 == 0.0) {
            best = (i, d2);
        }
    }
    (best.0, best.1.sqrt())
}

/// Offsets in `{-1,0,1}^dim` that are lexicographically positive.
fn half_neighborhood(dim: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let total = 3usize.pow(dim as u32);
    for code in 0..total {
        let mut c = code;
        let off: Vec<i64> = (0..dim)
            .map(|_| {
                let v = (c % 3) as i64 - 1;
                c /= 3;
                v
            })
            .collect();
        if let Some(first) = off.iter().find(|&&v| v != 0) {
            if *first > 0 {
                out.push(off);
            }
        }
    }
    out
}

/// Visits every offset with Chebyshev norm exactly `r`.
fn for_each_ring_offset(dim: usize, r: i64, mut f: impl FnMut(&[i64])) {
    let mut off = vec![-r; dim];
    loop {
        if off.iter().any(|v| v.abs() == r) || r == 0 {
            f(&off);
        }
        let mut k = 0;
        loop {
            if k == dim {
                return;
            }
            if off[k] < r {
                off[k] += 1;
                break;
            }
            off[k] = -r;
            k += 1;
        }
    }
}

/// Distance from `query` to the nearest point of `cloud`, via expanding rings of cells.
pub fn nearest_dist(index: &SpatialIndex, cloud: &PointCloud, query: &Point) -> Result<f64> {
    cloud.check_dim(query.dim())?;
    if index.dim() != cloud.dim() {
        return invalid("index was built for a different dimension");
    }
    Ok(index.nearest(cloud, query.coords()).1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, dim: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        PointCloud::new(dim, data).unwrap()
    }

    fn brute_nearest(cloud: &PointCloud, q: &[f64]) -> f64 {
        cloud
            .iter()
            .map(|p| sq_dist(p, q))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    #[test]
    fn nearest_examples() {
        let cloud = PointCloud::from_rows(&[vec![0.0, 0.0], vec![10.0, 0.0]]).unwrap();
        let index = SpatialIndex::new(&cloud, 1.0).unwrap();
        let q = Point::new(vec![4.0, 0.0]).unwrap();
        assert_eq!(nearest_dist(&index, &cloud, &q).unwrap(), 4.0);
        let q = Point::new(vec![10.0, 0.0]).unwrap();
        assert_eq!(nearest_dist(&index, &cloud, &q).unwrap(), 0.0);
    }

    #[test]
    fn nearest_matches_scan() {
        for (dim, cell) in [(2, 0.05), (3, 0.2), (2, 3.0), (1, 0.01)] {
            let cloud = random_cloud(500, dim, 11 + dim as u64);
            let index = SpatialIndex::new(&cloud, cell).unwrap();
            let queries = random_cloud(50, dim, 99);
            for q in queries.iter() {
                let q3: Vec<f64> = q.iter().map(|c| 3.0 * c).collect();
                for q in [q.to_vec(), q3] {
                    let p = Point::new(q.clone()).unwrap();
                    assert_eq!(
                        nearest_dist(&index, &cloud, &p).unwrap(),
                        brute_nearest(&cloud, &q)
                    );
                }
            }
        }
    }

    #[test]
    fn nearest_distinct_skips_duplicates() {
        let cloud =
            PointCloud::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let index = SpatialIndex::for_nearest(&cloud);
        assert_eq!(index.nearest_distinct(&cloud, &[0.0, 0.0]), 5.0);
        assert_eq!(index.nearest_distinct(&cloud, &[3.0, 4.0]), 5.0);
        let cloud = random_cloud(200, 2, 9);
        let index = SpatialIndex::for_nearest(&cloud);
        for p in cloud.iter() {
            let scan = cloud
                .iter()
                .filter(|q| q != &p)
                .map(|q| p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            assert_eq!(index.nearest_distinct(&cloud, p), scan);
        }
    }

    #[test]
    fn every_point_in_exactly_one_bucket() {
        let cloud = random_cloud(300, 3, 5);
        let index = SpatialIndex::new(&cloud, 0.3).unwrap();
        let mut seen = vec![0usize; cloud.len()];
        for bucket in index.buckets.values() {
            for &i in bucket {
                seen[i as usize] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        for (i, p) in cloud.iter().enumerate() {
            assert!(index.bucket_of(p).contains(&(i as u32)));
        }
    }

    #[test]
    fn pairs_within_matches_scan() {
        for dim in 1..=3 {
            let cloud = random_cloud(200, dim, 3 + dim as u64);
            let r = 0.25;
            let index = SpatialIndex::new(&cloud, r).unwrap();
            let mut got = Vec::new();
            index.for_each_pair_within(&cloud, r, |i, j| got.push((i, j)));
            got.sort();
            let mut want = Vec::new();
            for i in 0..cloud.len() {
                for j in i + 1..cloud.len() {
                    if sq_dist(cloud.point(i), cloud.point(j)) <= r * r {
                        want.push((i, j));
                    }
                }
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn ring_offsets_have_exact_norm() {
        for dim in 1..=3 {
            for r in 0..3 {
                let mut count = 0;
                for_each_ring_offset(dim, r, |o| {
                    assert_eq!(o.iter().map(|v| v.abs()).max().unwrap(), r);
                    count += 1;
                });
                let outer = (2 * r + 1).pow(dim as u32);
                let inner = if r == 0 { 0 } else { (2 * r - 1).pow(dim as u32) };
                assert_eq!(count, outer - inner);
            }
        }
    }

    #[test]
    fn rejects_bad_cell_size() {
        let cloud = random_cloud(3, 2, 1);
        assert!(SpatialIndex::new(&cloud, 0.0).is_err());
        assert!(SpatialIndex::new(&cloud, f64::NAN).is_err());
    }
}
