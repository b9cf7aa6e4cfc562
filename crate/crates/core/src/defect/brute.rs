use crate::error::{invalid, Result};
use crate::geom::{meb_of, sq_dist, PointCloud};

/// Largest cloud accepted by the exhaustive oracle.
pub const BRUTE_MAX_POINTS: usize = 25;

/// Reference value of `h(t)` by exhaustive enumeration.
///
/// Every subset of at most `max_subset` points whose enclosing radius is at most `t` has
/// its hull sampled on a barycentric grid with `hull_samples` subdivisions (plain
/// subdivision for segments); the largest sampled distance to the cloud is returned.
pub fn defect_bruteforce(
    cloud: &PointCloud,
    t: f64,
    max_subset: usize,
    hull_samples: usize,
) -> Result<f64> {
    if cloud.len() > BRUTE_MAX_POINTS {
        return invalid(format!(
            "brute-force oracle accepts at most {BRUTE_MAX_POINTS} points, got {}",
            cloud.len()
        ));
    }
    if max_subset == 0 || hull_samples == 0 {
        return invalid("max_subset and hull_samples must be positive");
    }
    if !(t.is_finite() && t >= 0.0) {
        return invalid(format!("scale must be finite and nonnegative, got {t}"));
    }
    let n = cloud.len();
    let mut best = 0.0f64;
    let mut subset = Vec::new();
    for size in 2..=max_subset.min(n) {
        subset.clear();
        subset.extend(0..size);
        loop {
            let pts: Vec<&[f64]> = subset.iter().map(|&i| cloud.point(i)).collect();
            if meb_of(&pts).1 <= t {
                let mut weights = vec![0usize; size];
                compositions(&mut weights, 0, hull_samples, &mut |w| {
                    let y = combine(&pts, w, hull_samples);
                    let d = cloud
                        .iter()
                        .map(|x| sq_dist(&y, x))
                        .fold(f64::INFINITY, f64::min);
                    best = best.max(d.sqrt());
                });
            }
            if !next_combination(&mut subset, n) {
                break;
            }
        }
    }
    Ok(best)
}

fn combine(pts: &[&[f64]], w: &[usize], total: usize) -> Vec<f64> {
    let dim = pts[0].len();
    let mut y = vec![0.0; dim];
    for (p, &wi) in pts.iter().zip(w) {
        let f = wi as f64 / total as f64;
        for k in 0..dim {
            y[k] += f * p[k];
        }
    }
    y
}

/// Calls `f` with every vector of nonnegative integers in `w[pos..]` summing to `left`.
fn compositions(w: &mut [usize], pos: usize, left: usize, f: &mut impl FnMut(&[usize])) {
    if pos + 1 == w.len() {
        w[pos] = left;
        f(w);
        return;
    }
    for v in 0..=left {
        w[pos] = v;
        compositions(w, pos + 1, left - v, f);
    }
}

/// Advances `c` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_is_zero() {
        let c = PointCloud::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(defect_bruteforce(&c, 5.0, 3, 10).unwrap(), 0.0);
    }

    #[test]
    fn two_points() {
        let c = PointCloud::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(defect_bruteforce(&c, 0.9, 2, 10).unwrap(), 0.0);
        assert_eq!(defect_bruteforce(&c, 1.0, 2, 10).unwrap(), 1.0);
    }

    #[test]
    fn square_center() {
        let c = PointCloud::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let h = defect_bruteforce(&c, 2f64.sqrt() / 2.0, 4, 40).unwrap();
        assert!((h - 2f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn too_large() {
        let rows: Vec<Vec<f64>> = (0..26).map(|i| vec![i as f64]).collect();
        let c = PointCloud::from_rows(&rows).unwrap();
        assert!(defect_bruteforce(&c, 1.0, 2, 4).is_err());
    }

    #[test]
    fn combinations_enumerated() {
        let mut c = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut c, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
        let mut w = vec![0; 3];
        let mut seen = 0;
        compositions(&mut w, 0, 4, &mut |_| seen += 1);
        assert_eq!(seen, 15);
    }
}
