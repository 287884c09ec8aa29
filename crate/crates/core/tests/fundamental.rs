use epiline::geometry::{assemble_fundamental, line_through, HomogeneousPoint};
use epiline::sim::{GroundTruth, GroundTruthFile, SceneConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn truths() -> impl Iterator<Item = (SceneConfig, GroundTruth)> {
    (0..30u64).map(|seed| {
        let cfg = if seed % 3 == 0 { SceneConfig::planar(seed) } else { SceneConfig::desk(seed) };
        let (a, b) = cfg.cameras().unwrap();
        let gt = GroundTruth::from_cameras(&a, &b).unwrap();
        (cfg, gt)
    })
}

#[test]
fn epipoles_are_null_vectors_of_f() {
    for (_, gt) in truths() {
        let e_a = gt.fundamental.epipole_a().unwrap();
        let e_b = gt.fundamental.epipole_b().unwrap();
        assert!(e_a.distance(&gt.e_a).unwrap() < 1e-6);
        assert!(e_b.distance(&gt.e_b).unwrap() < 1e-6);
    }
}

#[test]
fn camera_projections_satisfy_the_epipolar_constraint() {
    for (cfg, gt) in truths() {
        let (a, b) = cfg.cameras().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = nalgebra::Vector3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-1.5..1.5),
                rng.random_range(-2.0..2.0),
            );
            let pa = a.image_of(&x).unwrap();
            let pb = b.image_of(&x).unwrap();
            let l = gt.fundamental.line_in_b(&pa).unwrap();
            assert!(l.dot(&pb).abs() < 1e-8, "distance {}", l.dot(&pb));
        }
    }
}

#[test]
fn decompose_and_reassemble() {
    for (cfg, gt) in truths() {
        let frame = cfg.frame();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut pairs = Vec::new();
        while pairs.len() < 3 {
            let p = HomogeneousPoint::finite(rng.random_range(0.0..frame.w()), rng.random_range(0.0..frame.h()));
            let la = line_through(&gt.e_a, &p).unwrap();
            let lb = gt.fundamental.line_in_b(&p).unwrap();
            pairs.push((la, lb));
        }
        let f = assemble_fundamental(&gt.e_a, &gt.e_b, &pairs).unwrap();
        assert!(f.distance(&gt.fundamental) < 1e-6);
    }
}

#[test]
fn ground_truth_file_round_trip() {
    for (_, gt) in truths().take(5) {
        let json = serde_json::to_string(&GroundTruthFile::from(&gt)).unwrap();
        let back: GroundTruthFile = serde_json::from_str(&json).unwrap();
        let back = GroundTruth::try_from(back).unwrap();
        assert!(back.fundamental.distance(&gt.fundamental) < 1e-12);
    }
}
