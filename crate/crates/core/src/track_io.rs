//! JSON Lines track files.
//!
//! The first record is a header `{"width", "height", "n_frames"}`; each
//! following record is `{"frame": i, "detections": [{"x", "y", "r"}, ...]}`.
//! Frames without detections may be omitted when reading.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barcode::{BarcodeError, Detection, FrameTrack, VideoTrack};
use crate::geometry::ImageFrame;

#[derive(Debug, Error)]
pub enum TrackIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("track file is empty")]
    MissingHeader,
    #[error("invalid track: {0}")]
    Invalid(#[from] BarcodeError),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    width: u32,
    height: u32,
    n_frames: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    frame: usize,
    detections: Vec<Detection>,
}

pub fn read_track<R: BufRead>(reader: R) -> Result<VideoTrack, TrackIoError> {
    let mut lines = reader.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let (line_no, first) = lines.next().ok_or(TrackIoError::MissingHeader)?;
    let header: Header =
        serde_json::from_str(&first?).map_err(|e| TrackIoError::Parse { line: line_no, message: e.to_string() })?;
    let mut frames: Vec<FrameTrack> =
        (0..header.n_frames).map(|frame_index| FrameTrack { frame_index, detections: Vec::new() }).collect();
    let mut last: Option<usize> = None;
    for (line_no, text) in lines {
        let rec: FrameRecord =
            serde_json::from_str(&text?).map_err(|e| TrackIoError::Parse { line: line_no, message: e.to_string() })?;
        if rec.frame >= header.n_frames || last.is_some_and(|p| rec.frame <= p) {
            return Err(TrackIoError::Parse {
                line: line_no,
                message: format!("frame {} out of order or beyond n_frames", rec.frame),
            });
        }
        last = Some(rec.frame);
        frames[rec.frame].detections = rec.detections;
    }
    Ok(VideoTrack::new(ImageFrame::new(header.width, header.height), frames)?)
}

pub fn write_track<W: Write>(video: &VideoTrack, mut writer: W) -> Result<(), TrackIoError> {
    let header = Header { width: video.image().width, height: video.image().height, n_frames: video.n_frames() };
    let to_io = |e: serde_json::Error| TrackIoError::Io(e.into());
    serde_json::to_writer(&mut writer, &header).map_err(to_io)?;
    writeln!(writer)?;
    for f in video.frames() {
        let rec = FrameRecord { frame: f.frame_index, detections: f.detections.clone() };
        serde_json::to_writer(&mut writer, &rec).map_err(to_io)?;
        writeln!(writer)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_sparse_frames() {
        let text = "{\"width\":64,\"height\":48,\"n_frames\":4}\n\
                    {\"frame\":1,\"detections\":[{\"x\":3.5,\"y\":4.0,\"r\":2.0}]}\n\
                    \n\
                    {\"frame\":3,\"detections\":[]}\n";
        let v = read_track(text.as_bytes()).unwrap();
        assert_eq!(v.n_frames(), 4);
        assert_eq!(v.detections(1), &[Detection::new(3.5, 4.0, 2.0)]);
        assert!(v.detections(0).is_empty());
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let v = VideoTrack::from_detections(
            ImageFrame::new(64, 48),
            vec![vec![Detection::new(1.25, 2.0, 3.0)], vec![], vec![Detection::new(0.1, 0.2, 0.3)]],
        )
        .unwrap();
        let mut a = Vec::new();
        write_track(&v, &mut a).unwrap();
        let back = read_track(a.as_slice()).unwrap();
        assert_eq!(back, v);
        let mut b = Vec::new();
        write_track(&back, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_records() {
        assert!(matches!(read_track("".as_bytes()), Err(TrackIoError::MissingHeader)));
        let dup = "{\"width\":8,\"height\":8,\"n_frames\":3}\n{\"frame\":1,\"detections\":[]}\n{\"frame\":1,\"detections\":[]}\n";
        assert!(matches!(read_track(dup.as_bytes()), Err(TrackIoError::Parse { line: 3, .. })));
        let garbage = "{\"width\":8,\"height\":8,\"n_frames\":3}\nnot json\n";
        assert!(matches!(read_track(garbage.as_bytes()), Err(TrackIoError::Parse { line: 2, .. })));
        let outside =
            "{\"width\":8,\"height\":8,\"n_frames\":1}\n{\"frame\":0,\"detections\":[{\"x\":9,\"y\":1,\"r\":1}]}\n";
        assert!(matches!(read_track(outside.as_bytes()), Err(TrackIoError::Invalid(_))));
    }
}
