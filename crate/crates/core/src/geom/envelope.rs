use super::{sq_dist, Point, PointCloud};
use crate::error::Result;

/// Scratch buffers for the lower-envelope computation, reusable across calls.
#[derive(Debug, Default)]
pub(crate) struct Envelope {
    lines: Vec<(f64, f64)>,
    hull: Vec<(f64, f64)>,
    breaks: Vec<f64>,
}

/// Maximizes `s -> min_x |a + s v - x|` over `s in [s0, s1]` and `x` in `cands`.
///
/// Every `|a + s v - x|^2` equals `|v|^2 s^2 + m_x s + c_x` with a shared leading term, so
/// the minimum over `x` is `|v|^2 s^2` plus the lower envelope of the lines `m_x s + c_x`.
/// The squared distance is convex between envelope breakpoints, hence the maximum sits at
/// a breakpoint or an end of the interval. The returned distance is recomputed directly
/// at the maximizer.
pub(crate) fn envelope_max(
    cloud: &PointCloud,
    a: &[f64],
    v: &[f64],
    cands: &[u32],
    s0: f64,
    s1: f64,
    env: &mut Envelope,
) -> (f64, f64) {
    let vv: f64 = v.iter().map(|x| x * x).sum();
    env.lines.clear();
    for &i in cands {
        let x = cloud.point(i as usize);
        let mut m = 0.0;
        let mut c = 0.0;
        for k in 0..a.len() {
            let d = x[k] - a[k];
            m -= 2.0 * v[k] * d;
            c += d * d;
        }
        env.lines.push((m, c));
    }
    // Steepest first: it is the minimum as s -> -infinity.
    env.lines
        .sort_unstable_by(|p, q| q.0.total_cmp(&p.0).then(p.1.total_cmp(&q.1)));
    env.hull.clear();
    for &(m, c) in &env.lines {
        if let Some(&(lm, _)) = env.hull.last() {
            if lm == m {
                // Same slope, larger or equal intercept: never below the kept line.
                continue;
            }
        }
        while env.hull.len() >= 2 {
            let (m1, c1) = env.hull[env.hull.len() - 2];
            let (m2, c2) = env.hull[env.hull.len() - 1];
            // The middle line is useless if the new one undercuts it before it takes over.
            if (c - c1) * (m1 - m2) <= (c2 - c1) * (m1 - m) {
                env.hull.pop();
            } else {
                break;
            }
        }
        env.hull.push((m, c));
    }
    env.breaks.clear();
    for w in env.hull.windows(2) {
        let ((m1, c1), (m2, c2)) = (w[0], w[1]);
        env.breaks.push((c2 - c1) / (m1 - m2));
    }
    let eval = |line: (f64, f64), s: f64| vv * s * s + line.0 * s + line.1;
    let mut j = env.breaks.partition_point(|&b| b <= s0);
    let mut best_s = s0;
    let mut best_q = eval(env.hull[j], s0);
    while j < env.breaks.len() && env.breaks[j] < s1 {
        let s = env.breaks[j];
        let q = eval(env.hull[j], s);
        if q > best_q {
            best_q = q;
            best_s = s;
        }
        j += 1;
    }
    let q = eval(env.hull[j], s1);
    if q > best_q {
        best_s = s1;
    }
    let y: Vec<f64> = a.iter().zip(v).map(|(a, v)| a + best_s * v).collect();
    let d2 = cands
        .iter()
        .map(|&i| sq_dist(&y, cloud.point(i as usize)))
        .fold(f64::INFINITY, f64::min);
    (best_s, d2.sqrt())
}

/// Farthest point of the segment `[a, b]` from `cloud`: returns `(s, d)` where `d` is the
/// maximum over `s in [0, 1]` of `d(a + s (b - a), cloud)` and `s` attains it.
///
/// A degenerate segment returns `(0, d(a, cloud))`.
pub fn segment_farthest(a: &Point, b: &Point, cloud: &PointCloud) -> Result<(f64, f64)> {
    cloud.check_dim(a.dim())?;
    cloud.check_dim(b.dim())?;
    let v: Vec<f64> = b
        .coords()
        .iter()
        .zip(a.coords())
        .map(|(b, a)| b - a)
        .collect();
    let all: Vec<u32> = (0..cloud.len() as u32).collect();
    if v.iter().all(|&x| x == 0.0) {
        let d2 = cloud
            .iter()
            .map(|p| sq_dist(p, a.coords()))
            .fold(f64::INFINITY, f64::min);
        return Ok((0.0, d2.sqrt()));
    }
    let mut env = Envelope::default();
    Ok(envelope_max(cloud, a.coords(), &v, &all, 0.0, 1.0, &mut env))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn dense(a: &[f64], b: &[f64], cloud: &PointCloud, samples: usize) -> f64 {
        let mut best = 0.0f64;
        for i in 0..=samples {
            let s = i as f64 / samples as f64;
            let y: Vec<f64> = a.iter().zip(b).map(|(a, b)| a + s * (b - a)).collect();
            let d = cloud
                .iter()
                .map(|x| sq_dist(&y, x))
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            best = best.max(d);
        }
        best
    }

    #[test]
    fn chord_midpoint() {
        let cloud = PointCloud::from_rows(&[vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let (s, d) = segment_farthest(&p(&[-1.0, 0.0]), &p(&[1.0, 0.0]), &cloud).unwrap();
        assert!((s - 0.5).abs() < 1e-15);
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chord_with_midpoint_in_cloud() {
        let cloud =
            PointCloud::from_rows(&[vec![-1.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let (s, d) = segment_farthest(&p(&[-1.0, 0.0]), &p(&[1.0, 0.0]), &cloud).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert!((s - 0.25).abs() < 1e-15 || (s - 0.75).abs() < 1e-15);
    }

    #[test]
    fn degenerate_segment() {
        let cloud = PointCloud::from_rows(&[vec![0.0, 3.0], vec![0.0, 5.0]]).unwrap();
        let (s, d) = segment_farthest(&p(&[0.0, 0.0]), &p(&[0.0, 0.0]), &cloud).unwrap();
        assert_eq!((s, d), (0.0, 3.0));
    }

    #[test]
    fn matches_dense_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..30 {
            let dim = 1 + trial % 3;
            let rows: Vec<Vec<f64>> = (0..50)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let cloud = PointCloud::from_rows(&rows).unwrap();
            let a: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
            let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
            let (s, d) = segment_farthest(&p(&a), &p(&b), &cloud).unwrap();
            assert!((0.0..=1.0).contains(&s));
            let want = dense(&a, &b, &cloud, 20_000);
            assert!(d >= want - 1e-12, "envelope {d} below sampled {want}");
            assert!(d - want < 1e-3, "envelope {d} vs sampled {want}");
        }
    }

    #[test]
    fn bounded_by_half_length_for_cloud_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let cloud = PointCloud::from_rows(&rows).unwrap();
        for i in 0..40 {
            for j in i + 1..40 {
                let (_, d) = segment_farthest(&p(&rows[i]), &p(&rows[j]), &cloud).unwrap();
                let half = 0.5 * sq_dist(&rows[i], &rows[j]).sqrt();
                assert!(d <= half + 1e-12);
            }
        }
    }
}
