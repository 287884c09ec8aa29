//! Foreground tracks, motion barcodes of lines and discs, and their
//! normalized cross-correlation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{HomogeneousLine, HomogeneousPoint, ImageFrame};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BarcodeError {
    #[error("barcode lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("barcode has zero variance")]
    ConstantBarcode,
    #[error("frame {found} out of sequence, expected {expected}")]
    FrameSequence { expected: usize, found: usize },
    #[error("detection ({x}, {y}) in frame {frame} lies outside the image")]
    OutOfBounds { frame: usize, x: f64, y: f64 },
    #[error("detection in frame {frame} has invalid radius {r}")]
    InvalidRadius { frame: usize, r: f64 },
}

/// A foreground blob reduced to its centroid and an equivalent radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

impl Detection {
    pub fn new(x: f64, y: f64, r: f64) -> Self {
        Self { x, y, r }
    }

    pub fn centroid(&self) -> HomogeneousPoint {
        HomogeneousPoint::finite(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameTrack {
    pub frame_index: usize,
    pub detections: Vec<Detection>,
}

/// All detections of one camera over a synchronized sequence of `N` frames.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTrack {
    frame: ImageFrame,
    frames: Vec<FrameTrack>,
}

impl VideoTrack {
    pub fn new(frame: ImageFrame, frames: Vec<FrameTrack>) -> Result<Self, BarcodeError> {
        for (expected, f) in frames.iter().enumerate() {
            if f.frame_index != expected {
                return Err(BarcodeError::FrameSequence { expected, found: f.frame_index });
            }
            for d in &f.detections {
                if !(d.x.is_finite() && d.y.is_finite()) || !frame.contains(d.x, d.y) {
                    return Err(BarcodeError::OutOfBounds { frame: expected, x: d.x, y: d.y });
                }
                if !(d.r.is_finite() && d.r > 0.0) {
                    return Err(BarcodeError::InvalidRadius { frame: expected, r: d.r });
                }
            }
        }
        Ok(Self { frame, frames })
    }

    /// Builds a track from per-frame detection lists, indexed densely from 0.
    pub fn from_detections(frame: ImageFrame, detections: Vec<Vec<Detection>>) -> Result<Self, BarcodeError> {
        let frames = detections
            .into_iter()
            .enumerate()
            .map(|(frame_index, detections)| FrameTrack { frame_index, detections })
            .collect();
        Self::new(frame, frames)
    }

    pub fn image(&self) -> &ImageFrame {
        &self.frame
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[FrameTrack] {
        &self.frames
    }

    pub fn detections(&self, frame: usize) -> &[Detection] {
        &self.frames[frame].detections
    }

    pub fn n_detections(&self) -> usize {
        self.frames.iter().map(|f| f.detections.len()).sum()
    }
}

/// Per-frame activity of a line or disc, packed 64 frames to a word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MotionBarcode {
    words: Vec<u64>,
    len: usize,
}

impl MotionBarcode {
    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut b = Self::zeros(bits.len());
        for (i, &bit) in bits.iter().enumerate() {
            if bit {
                b.set(i);
            }
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_constant(&self) -> bool {
        let ones = self.count_ones();
        ones == 0 || ones == self.len
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }

    fn overlap(&self, other: &Self) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }
}

/// Bit `i` is set iff some detection of frame `i` touches `l` at a point
/// that is imaged, i.e. the foot of the perpendicular from the centroid lies
/// inside the image rectangle.
pub fn line_barcode(video: &VideoTrack, l: &HomogeneousLine) -> MotionBarcode {
    let [a, b, c] = l.coeffs();
    let frame = video.image();
    let mut out = MotionBarcode::zeros(video.n_frames());
    for (i, f) in video.frames().iter().enumerate() {
        let hit = f.detections.iter().any(|d| {
            let dist = a * d.x + b * d.y + c;
            dist.abs() < d.r && frame.contains(d.x - dist * a, d.y - dist * b)
        });
        if hit {
            out.set(i);
        }
    }
    out
}

/// Bit `i` is set iff some centroid of frame `i` is closer to `p` than
/// `radius` plus the detection's own radius.
pub fn disc_barcode(video: &VideoTrack, p: &HomogeneousPoint, radius: f64) -> MotionBarcode {
    let mut out = MotionBarcode::zeros(video.n_frames());
    let Some([px, py]) = p.xy() else {
        return out;
    };
    for (i, f) in video.frames().iter().enumerate() {
        if f.detections.iter().any(|d| (d.x - px).hypot(d.y - py) < radius + d.r) {
            out.set(i);
        }
    }
    out
}

/// Pearson correlation of two binary sequences.
pub fn ncc(b1: &MotionBarcode, b2: &MotionBarcode) -> Result<f64, BarcodeError> {
    if b1.len() != b2.len() {
        return Err(BarcodeError::LengthMismatch(b1.len(), b2.len()));
    }
    let n = b1.len() as f64;
    let (s1, s2) = (b1.count_ones() as f64, b2.count_ones() as f64);
    let var = s1 * (n - s1) * s2 * (n - s2);
    if var == 0.0 {
        return Err(BarcodeError::ConstantBarcode);
    }
    let s12 = b1.overlap(b2) as f64;
    Ok(((n * s12 - s1 * s2) / var.sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(v: &[u8]) -> MotionBarcode {
        MotionBarcode::from_bits(&v.iter().map(|&b| b == 1).collect::<Vec<_>>())
    }

    #[test]
    fn ncc_reference_values() {
        let b = bits(&[1, 0, 1, 1, 0, 0, 1]);
        let comp = bits(&[0, 1, 0, 0, 1, 1, 0]);
        assert!((ncc(&b, &b).unwrap() - 1.0).abs() < 1e-15);
        assert!((ncc(&b, &comp).unwrap() + 1.0).abs() < 1e-15);
        let v = ncc(&bits(&[1, 0, 1, 0]), &bits(&[1, 0, 0, 0])).unwrap();
        // (4·1 − 2·1) / sqrt(2·2·1·3)
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ncc_rejects_constant_and_mismatched() {
        assert_eq!(ncc(&bits(&[0, 0, 0]), &bits(&[1, 0, 1])).unwrap_err(), BarcodeError::ConstantBarcode);
        assert_eq!(ncc(&bits(&[1, 0]), &bits(&[1, 0, 1])).unwrap_err(), BarcodeError::LengthMismatch(2, 3));
    }

    fn track(frames: Vec<Vec<Detection>>) -> VideoTrack {
        VideoTrack::from_detections(ImageFrame::new(100, 100), frames).unwrap()
    }

    #[test]
    fn empty_video_gives_zero_barcode() {
        let v = track(vec![vec![]; 12]);
        let l = HomogeneousLine::new(0.0, 1.0, -50.0).unwrap();
        assert_eq!(line_barcode(&v, &l).count_ones(), 0);
        assert_eq!(line_barcode(&v, &l).len(), 12);
    }

    #[test]
    fn single_detection_sets_single_bit() {
        let mut frames = vec![vec![]; 10];
        frames[5].push(Detection::new(10.0, 10.0, 2.0));
        let v = track(frames);
        let l = HomogeneousLine::new(1.0, -1.0, 0.0).unwrap();
        let b = line_barcode(&v, &l);
        assert_eq!(b.ones().collect::<Vec<_>>(), vec![5]);
    }

    #[test]
    fn hits_clipped_to_image() {
        // Centroid near the left edge; the touching point of a steep line lies outside.
        let mut frames = vec![vec![]; 2];
        frames[0].push(Detection::new(1.0, 50.0, 3.0));
        let v = track(frames);
        let outside = HomogeneousLine::new(1.0, 0.0, 1.5).unwrap(); // x = -1.5
        assert_eq!(line_barcode(&v, &outside).count_ones(), 0);
        let inside = HomogeneousLine::new(1.0, 0.0, -2.0).unwrap(); // x = 2
        assert_eq!(line_barcode(&v, &inside).count_ones(), 1);
    }

    #[test]
    fn disc_barcode_bits() {
        let mut frames = vec![vec![]; 9];
        frames[2].push(Detection::new(30.0, 30.0, 1.0));
        frames[7].push(Detection::new(30.0, 30.0, 1.0));
        frames[4].push(Detection::new(80.0, 80.0, 1.0));
        let v = track(frames);
        let b = disc_barcode(&v, &HomogeneousPoint::finite(30.0, 30.0), 5.0);
        assert_eq!(b.ones().collect::<Vec<_>>(), vec![2, 7]);
        let none = disc_barcode(&v, &HomogeneousPoint::finite(55.0, 55.0), 1e-9);
        assert_eq!(none.count_ones(), 0);
    }

    #[test]
    fn track_validation() {
        let err = VideoTrack::from_detections(ImageFrame::new(10, 10), vec![vec![Detection::new(11.0, 2.0, 1.0)]])
            .unwrap_err();
        assert!(matches!(err, BarcodeError::OutOfBounds { .. }));
        let err = VideoTrack::from_detections(ImageFrame::new(10, 10), vec![vec![Detection::new(1.0, 2.0, 0.0)]])
            .unwrap_err();
        assert!(matches!(err, BarcodeError::InvalidRadius { .. }));
        let err = VideoTrack::new(ImageFrame::new(10, 10), vec![FrameTrack { frame_index: 1, detections: vec![] }])
            .unwrap_err();
        assert_eq!(err, BarcodeError::FrameSequence { expected: 0, found: 1 });
    }

    proptest! {
        #[test]
        fn ncc_symmetric_and_bounded(a in prop::collection::vec(any::<bool>(), 70),
                                     b in prop::collection::vec(any::<bool>(), 70)) {
            let (ba, bb) = (MotionBarcode::from_bits(&a), MotionBarcode::from_bits(&b));
            match (ncc(&ba, &bb), ncc(&bb, &ba)) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x, y);
                    prop_assert!(x.abs() <= 1.0);
                }
                (Err(e1), Err(e2)) => prop_assert_eq!(e1, e2),
                _ => prop_assert!(false, "asymmetric failure"),
            }
        }

        #[test]
        fn line_barcode_ignores_coefficient_sign(
            dets in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64, 0.5..8.0f64), 0..40),
            a in -1.0..1.0f64, b in -1.0..1.0f64, c in -100.0..100.0f64,
        ) {
            prop_assume!(a.hypot(b) > 1e-3);
            let frames = dets.iter().map(|&(x, y, r)| vec![Detection::new(x, y, r)]).collect();
            let v = track(frames);
            let l = HomogeneousLine::new(a, b, c).unwrap();
            let m = HomogeneousLine::new(-a, -b, -c).unwrap();
            prop_assert_eq!(line_barcode(&v, &l), line_barcode(&v, &m));
        }
    }
}
