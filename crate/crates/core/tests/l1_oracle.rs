use epiline::geometry::{line_through, HomogeneousLine, HomogeneousPoint};
use epiline::refine::{l1_epipole_brute, l1_epipole_iterative, l1_loss};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lines_from(points: &[(f64, f64, f64, f64)]) -> Vec<HomogeneousLine> {
    points
        .iter()
        .filter_map(|&(x0, y0, x1, y1)| {
            line_through(&HomogeneousPoint::finite(x0, y0), &HomogeneousPoint::finite(x1, y1)).ok()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn iterative_matches_brute_force(
        segs in prop::collection::vec((-500.0..500.0f64, -500.0..500.0f64, -500.0..500.0f64, -500.0..500.0f64), 3..30),
        seed in any::<u64>(),
    ) {
        let lines = lines_from(&segs);
        prop_assume!(lines.len() >= 3);
        let Ok(brute) = l1_epipole_brute(&lines) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (it, stats) = l1_epipole_iterative(&lines, &mut rng).unwrap();
        prop_assert!((it.loss - brute.loss).abs() <= 1e-9 * (1.0 + brute.loss));
        prop_assert!(stats.vertices_visited <= lines.len() * lines.len());
        prop_assert!((l1_loss(&lines, &it.point) - it.loss).abs() <= 1e-9 * (1.0 + it.loss));
    }
}

#[test]
fn concurrent_lines_give_zero_loss_at_their_point() {
    let e = HomogeneousPoint::finite(-250.0, 4000.0);
    let mut lines = lines_from(&[]);
    for k in 0..12 {
        let p = HomogeneousPoint::finite(50.0 * k as f64, 30.0 * (k % 5) as f64);
        lines.push(line_through(&e, &p).unwrap());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (sol, _) = l1_epipole_iterative(&lines, &mut rng).unwrap();
    assert!(sol.loss < 1e-7, "loss {}", sol.loss);
    assert!(sol.point.distance(&e).unwrap() < 1e-4);
}

#[test]
fn one_outlier_does_not_move_the_l1_point() {
    let e = HomogeneousPoint::finite(100.0, 200.0);
    let mut lines: Vec<_> = (0..9)
        .map(|k| {
            let a = k as f64 * 0.3;
            line_through(&e, &HomogeneousPoint::finite(100.0 + a.cos(), 200.0 + a.sin())).unwrap()
        })
        .collect();
    lines.push(HomogeneousLine::new(1.0, 0.0, -5000.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (sol, _) = l1_epipole_iterative(&lines, &mut rng).unwrap();
    assert!(sol.point.distance(&e).unwrap() < 1e-6);
}
