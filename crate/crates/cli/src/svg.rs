//! Side-by-side overlay of corresponding epipolar lines, one color per pair.

use std::fmt::Write;

use epiline::calibrate::EpipolarModel;
use epiline::geometry::{line_through, HomogeneousLine, HomogeneousPoint, ImageFrame};

const PALETTE: [&str; 10] =
    ["#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#9a6324", "#800000", "#000075"];

const GAP: f64 = 20.0;

fn segment(out: &mut String, frame: &ImageFrame, l: &HomogeneousLine, dx: f64, color: &str) {
    if let Some((p, q)) = frame.clip(l) {
        let _ = writeln!(
            out,
            r#"  <line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"/>"#,
            p[0] + dx,
            p[1],
            q[0] + dx,
            q[1]
        );
    }
}

/// Lines through `n` points spread down the middle column of image A and
/// their images in B under the model's homography.
pub fn overlay(model: &EpipolarModel, frame_a: &ImageFrame, frame_b: &ImageFrame, n: usize) -> String {
    let width = frame_a.w() + GAP + frame_b.w();
    let height = frame_a.h().max(frame_b.h());
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let dx = frame_a.w() + GAP;
    for (x, f) in [(0.0, frame_a), (dx, frame_b)] {
        let _ = writeln!(
            out,
            r#"  <rect x="{x}" y="0" width="{}" height="{}" fill="white" stroke="black"/>"#,
            f.w(),
            f.h()
        );
    }
    for k in 0..n {
        let y = frame_a.h() * (k as f64 + 0.5) / n as f64;
        let p = HomogeneousPoint::finite(frame_a.w() / 2.0, y);
        let Ok(la) = line_through(&model.e_a, &p) else { continue };
        let Ok(lb) = model.homography.map(&la) else { continue };
        let color = PALETTE[k % PALETTE.len()];
        segment(&mut out, frame_a, &la, 0.0, color);
        segment(&mut out, frame_b, &lb, dx, color);
    }
    out.push_str("</svg>\n");
    out
}
