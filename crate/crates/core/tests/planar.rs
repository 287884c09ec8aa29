use epiline::geometry::{line_through, HomogeneousLine, HomogeneousPoint};
use epiline::matching::find_recurring_pixels;
use epiline::planar::{epipole_agrees, planar_epipole, PlanarParams, PointLineMatch};
use epiline::sim::{generate_scene, Scene, SceneConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest world distance between the spheres behind each group of
/// recurring camera-B pixels, over all groups.
fn worst_spread(scene: &Scene) -> (f64, usize) {
    let groups = find_recurring_pixels(&scene.video_b, 1.0);
    let mut worst = 0.0f64;
    for rp in &groups {
        let centers: Vec<_> = rp
            .occurrences
            .iter()
            .map(|o| {
                let obj = scene.truth.objects_b[o.frame][o.detection];
                scene.truth.trajectories.positions[o.frame][obj]
            })
            .collect();
        for p in &centers {
            for q in &centers {
                worst = worst.max((p - q).norm());
            }
        }
    }
    (worst, groups.len())
}

#[test]
fn recurring_pixels_of_b_share_a_plane_point() {
    let cfg = SceneConfig { n_frames: 300, ..SceneConfig::planar(3) };
    let scene = generate_scene(&cfg).unwrap();
    let (spread, groups) = worst_spread(&scene);
    assert!(groups > 0);
    // One camera-B pixel covers about 0.02 world units at the plane.
    assert!(spread < 0.2, "spread {spread} over {groups} groups");

    // Off the plane the same pixel sees points far apart along its ray.
    let desk = generate_scene(&SceneConfig { n_frames: 300, ..SceneConfig::desk(3) }).unwrap();
    let (desk_spread, _) = worst_spread(&desk);
    assert!(desk_spread > 1.0, "desk spread {desk_spread}");
}

fn line_in_image<R: Rng>(rng: &mut R) -> HomogeneousLine {
    loop {
        let p = HomogeneousPoint::finite(rng.random_range(0.0..640.0), rng.random_range(0.0..480.0));
        let q = HomogeneousPoint::finite(rng.random_range(0.0..640.0), rng.random_range(0.0..480.0));
        if let Ok(l) = line_through(&p, &q) {
            return l;
        }
    }
}

#[test]
fn thirty_percent_corrupt_lines_still_locate_the_epipole() {
    let frame = SceneConfig::planar(0).frame();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = HomogeneousPoint::finite(rng.random_range(-800.0..1400.0), rng.random_range(-3000.0..-600.0));
        let n = 60;
        let matches: Vec<PointLineMatch> = (0..n)
            .map(|k| {
                let l_b = if k % 10 < 3 {
                    line_in_image(&mut rng)
                } else {
                    let p = HomogeneousPoint::finite(
                        rng.random_range(0.0..640.0) + rng.random_range(-0.5..0.5),
                        rng.random_range(0.0..480.0),
                    );
                    line_through(&e, &p).unwrap()
                };
                PointLineMatch { p_a: HomogeneousPoint::finite(0.0, 0.0), l_b, score: 1.0 }
            })
            .collect();
        let params = PlanarParams { seed, ..PlanarParams::default() };
        let est = planar_epipole(&matches, &frame, &params).unwrap();
        assert!(epipole_agrees(&est.epipole, &e, &frame), "seed {seed}: {:?}", est.epipole);
        assert!(
            est.inlier_count() >= 42,
            "seed {seed}: {} inliers, e {:?} est {:?}",
            est.inlier_count(),
            e.xy(),
            est.epipole.xy()
        );
    }
}
