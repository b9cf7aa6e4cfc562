use serde::{Deserialize, Serialize};

use super::{sq_dist, Point};
use crate::error::{invalid, Error, Result};

/// Largest ambient dimension handled by the exact solver.
const EXACT_MAX_DIM: usize = 10;

/// A closed Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
    /// Set when the radius comes from the iterative approximation used above
    /// dimension 10 instead of the exact solver.
    pub approximate: bool,
}

/// Smallest ball enclosing `points`.
///
/// Exact move-to-front recursion for dimension at most 10. Above that the result is the
/// Badoiu-Clarkson core-set iteration, whose radius is within a factor 1.5 of optimal
/// (in practice far closer), flagged as approximate.
pub fn min_enclosing_ball(points: &[Point]) -> Result<Ball> {
    let first = match points.first() {
        Some(p) => p,
        None => return invalid("enclosing ball of an empty set"),
    };
    let dim = first.dim();
    for p in points {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
    }
    let slices: Vec<&[f64]> = points.iter().map(|p| p.coords()).collect();
    let (center, radius, approximate) = if dim <= EXACT_MAX_DIM {
        let (c, r) = meb_of(&slices);
        (c, r, false)
    } else {
        let (c, r) = approx_ball(&slices);
        (c, r, true)
    };
    Ok(Ball {
        center: Point::new(center)?,
        radius,
        approximate,
    })
}

/// Exact smallest enclosing ball of a nonempty list of coordinate slices.
pub(crate) fn meb_of(points: &[&[f64]]) -> (Vec<f64>, f64) {
    let dim = points[0].len();
    match points.len() {
        1 => return (points[0].to_vec(), 0.0),
        2 => {
            let c: Vec<f64> = points[0]
                .iter()
                .zip(points[1])
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let r = 0.5 * sq_dist(points[0], points[1]).sqrt();
            return (c, r);
        }
        _ => {}
    }
    if dim > EXACT_MAX_DIM {
        return approx_ball(points);
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut support = Vec::with_capacity(dim + 1);
    let (c, r2) = move_to_front(points, &mut order, points.len(), &mut support, dim);
    // Report the radius actually needed by the returned center.
    let r = points
        .iter()
        .map(|p| sq_dist(p, &c))
        .fold(r2.max(0.0), f64::max)
        .sqrt();
    (c, r)
}

fn move_to_front(
    points: &[&[f64]],
    order: &mut Vec<usize>,
    end: usize,
    support: &mut Vec<usize>,
    dim: usize,
) -> (Vec<f64>, f64) {
    let (mut c, mut r2) = ball_through(points, support, dim);
    if support.len() == dim + 1 {
        return (c, r2);
    }
    let mut i = 0;
    while i < end {
        let p = order[i];
        if r2 < 0.0 || sq_dist(points[p], &c) > r2 * (1.0 + 1e-12) + 1e-300 {
            support.push(p);
            let (nc, nr2) = move_to_front(points, order, i, support, dim);
            support.pop();
            c = nc;
            r2 = nr2;
            order[..=i].rotate_right(1);
        }
        i += 1;
    }
    (c, r2)
}

/// Smallest ball with all `support` points on its boundary; squared radius is -1 for
/// the empty support.
fn ball_through(points: &[&[f64]], support: &[usize], dim: usize) -> (Vec<f64>, f64) {
    match support.len() {
        0 => return (vec![0.0; dim], -1.0),
        1 => return (points[support[0]].to_vec(), 0.0),
        _ => {}
    }
    let p0 = points[support[0]];
    let m = support.len() - 1;
    let diffs: Vec<Vec<f64>> = support[1..]
        .iter()
        .map(|&s| points[s].iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    // The center is p0 + sum lambda_i diff_i with <diff_i, center - p0> = |diff_i|^2 / 2.
    let mut gram = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        for j in 0..m {
            gram[i][j] = dot(&diffs[i], &diffs[j]);
        }
        gram[i][m] = 0.5 * dot(&diffs[i], &diffs[i]);
    }
    match solve(gram) {
        Some(lambda) => {
            let mut c = p0.to_vec();
            for (l, d) in lambda.iter().zip(&diffs) {
                for k in 0..dim {
                    c[k] += l * d[k];
                }
            }
            let r2 = support
                .iter()
                .map(|&s| sq_dist(points[s], &c))
                .fold(0.0, f64::max);
            (c, r2)
        }
        None => {
            // Affinely dependent support: fall back to the widest pair.
            let mut best = (0, 0, -1.0);
            for (a, &i) in support.iter().enumerate() {
                for &j in &support[a + 1..] {
                    let d = sq_dist(points[i], points[j]);
                    if d > best.2 {
                        best = (i, j, d);
                    }
                }
            }
            let c = points[best.0]
                .iter()
                .zip(points[best.1])
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            (c, 0.25 * best.2)
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting on an augmented `m x (m+1)` system.
fn solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let m = a.len();
    let scale = a
        .iter()
        .flat_map(|row| row[..m].iter())
        .fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, pivot);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for row in rest.iter_mut().take(m - col - 1) {
            let f = row[col] / pivot_row[col];
            if f != 0.0 {
                for (x, &p) in row[col..=m].iter_mut().zip(&pivot_row[col..=m]) {
                    *x -= f * p;
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let mut s = a[row][m];
        for k in row + 1..m {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

fn approx_ball(points: &[&[f64]]) -> (Vec<f64>, f64) {
    let mut c = points[0].to_vec();
    for step in 1..=1000 {
        let far = points
            .iter()
            .max_by(|a, b| sq_dist(a, &c).total_cmp(&sq_dist(b, &c)))
            .expect("nonempty");
        let w = 1.0 / (step as f64 + 1.0);
        for (ck, fk) in c.iter_mut().zip(far.iter()) {
            *ck += w * (fk - *ck);
        }
    }
    let r = points
        .iter()
        .map(|p| sq_dist(p, &c))
        .fold(0.0, f64::max)
        .sqrt();
    (c, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(rows: &[&[f64]]) -> Vec<Point> {
        rows.iter().map(|r| Point::new(r.to_vec()).unwrap()).collect()
    }

    #[test]
    fn two_point_diameter() {
        let b = min_enclosing_ball(&pts(&[&[0.0, 0.0], &[2.0, 0.0]])).unwrap();
        assert_eq!(b.center.coords(), &[1.0, 0.0]);
        assert_eq!(b.radius, 1.0);
        assert!(!b.approximate);
    }

    #[test]
    fn singleton() {
        let b = min_enclosing_ball(&pts(&[&[3.0, -1.0, 2.0]])).unwrap();
        assert_eq!(b.center.coords(), &[3.0, -1.0, 2.0]);
        assert_eq!(b.radius, 0.0);
    }

    #[test]
    fn empty_is_error() {
        assert!(min_enclosing_ball(&[]).is_err());
    }

    #[test]
    fn equilateral_triangle() {
        let s = 3f64.sqrt();
        let b = min_enclosing_ball(&pts(&[&[0.0, 0.0], &[s, 0.0], &[s / 2.0, 1.5]])).unwrap();
        assert!((b.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn obtuse_triangle_uses_longest_side() {
        let b = min_enclosing_ball(&pts(&[&[0.0, 0.0], &[4.0, 0.0], &[2.0, 0.5]])).unwrap();
        assert!((b.radius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_and_duplicates() {
        let b = min_enclosing_ball(&pts(&[
            &[0.0, 0.0],
            &[1.0, 1.0],
            &[2.0, 2.0],
            &[1.0, 1.0],
            &[0.5, 0.5],
        ]))
        .unwrap();
        assert!((b.radius - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn high_dimension_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let points: Vec<Point> = (0..30)
            .map(|_| Point::new((0..12).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
            .collect();
        let b = min_enclosing_ball(&points).unwrap();
        assert!(b.approximate);
        for p in &points {
            assert!(sq_dist(p.coords(), b.center.coords()).sqrt() <= b.radius * (1.0 + 1e-12));
        }
    }

    #[test]
    fn contains_all_and_center_is_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let dim = rng.random_range(1..=4);
            let n = rng.random_range(1..=20);
            let points: Vec<Point> = (0..n)
                .map(|_| Point::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
                .collect();
            let b = min_enclosing_ball(&points).unwrap();
            for p in &points {
                assert!(sq_dist(p.coords(), b.center.coords()).sqrt() <= b.radius + 1e-12);
            }
            let mut more = points.clone();
            more.push(b.center.clone());
            let b2 = min_enclosing_ball(&more).unwrap();
            assert!((b2.radius - b.radius).abs() < 1e-9);
        }
    }
}
