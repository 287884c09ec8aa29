//! Epipolar geometry between two synchronized stationary cameras, recovered
//! from the centroids of moving foreground objects.
//!
//! The pipeline has three stages:
//!
//! 1. [`matching`] finds pixels of camera A that see motion at two or more
//!    times and turns each into candidate pairs of corresponding epipolar
//!    lines, scored by [`barcode`] correlation.
//! 2. [`calibrate`] runs RANSAC over the candidates: two pairs give the
//!    epipoles, a third fixes the pencil homography, and barcode agreement of
//!    lines transferred through the model scores it.
//! 3. [`refine`] re-estimates the epipoles from the inlier lines in the L2
//!    and exact L1 sense and keeps whichever model validates best.
//!
//! [`planar`] covers the case of an on-plane camera watching planar motion,
//! and [`sim`] generates synthetic two-camera scenes with ground truth.
//!
//! ```
//! use epiline::geometry::{intersect, line_through, HomogeneousPoint};
//!
//! let p = |x, y| HomogeneousPoint::finite(x, y);
//! let l1 = line_through(&p(0.0, 0.0), &p(4.0, 4.0)).unwrap();
//! let l2 = line_through(&p(0.0, 4.0), &p(4.0, 0.0)).unwrap();
//! assert_eq!(intersect(&l1, &l2).unwrap().xy(), Some([2.0, 2.0]));
//! ```

pub mod barcode;
pub mod calibrate;
pub mod geometry;
pub mod matching;
pub mod pipeline;
pub mod planar;
pub mod refine;
pub mod sim;
pub mod track_io;

pub use barcode::{Detection, FrameTrack, MotionBarcode, VideoTrack};
pub use calibrate::{EpipolarModel, RansacParams};
pub use geometry::{FundamentalMatrix, HomogeneousLine, HomogeneousPoint, ImageFrame, Pencil, PencilHomography};
pub use matching::{LinePairCandidate, MatchParams};
pub use pipeline::{calibrate, CalibrationOutcome, PipelineError, PipelineParams};

use rand_chacha::ChaCha8Rng;

pub(crate) const STREAM_MATCHING: u64 = 0x6d61_7463_6869_6e67;
pub(crate) const STREAM_RANSAC: u64 = 0x7261_6e73_6163_0000;
pub(crate) const STREAM_REFINE: u64 = 0x7265_6669_6e65_0000;
pub(crate) const STREAM_PLANAR: u64 = 0x706c_616e_6172_0000;

/// Independent deterministic generator for one unit of parallel work.
pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// The guide's chapters double as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/barcodes.md")]
    mod barcodes {}
    #[doc = include_str!("../../../book/src/candidates.md")]
    mod candidates {}
    #[doc = include_str!("../../../book/src/ransac.md")]
    mod ransac {}
    #[doc = include_str!("../../../book/src/refinement.md")]
    mod refinement {}
    #[doc = include_str!("../../../book/src/planar.md")]
    mod planar {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
