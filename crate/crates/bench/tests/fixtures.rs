use reach_bench::{circle, sphere};

#[test]
fn fixtures_are_stable() {
    let a = circle(64);
    assert_eq!(a.len(), 64);
    assert_eq!(a.dim(), 2);
    assert_eq!(a, circle(64));
    let s = sphere(32);
    assert_eq!(s.dim(), 3);
    for p in s.iter() {
        let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((r - 1.0).abs() < 1e-12);
    }
}
