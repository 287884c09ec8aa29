//! Homogeneous 2D primitives, epipolar pencils and the fundamental matrix.
//!
//! Points are stored normalized: finite points carry a third coordinate of
//! exactly one, points at infinity carry a unit direction. Lines are scaled
//! so that `(a, b)` is a unit normal, which makes `l · p` a signed pixel
//! distance for any finite `p`.

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cross products below this norm are treated as null.
const NULL_CROSS: f64 = 1e-12;

/// Area threshold for line inliers, in multiples of the image width.
pub const AREA_INLIER_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("homogeneous vector has no finite or infinite interpretation")]
    ZeroVector,
    #[error("points coincide; no unique line through them")]
    CoincidentPoints,
    #[error("lines are identical; no unique intersection")]
    IdenticalLines,
    #[error("the line at infinity cannot be represented as an image line")]
    LineAtInfinity,
    #[error("point at infinity has no pixel distance")]
    InfinitePoint,
    #[error("pencil lines coincide; homography is underdetermined")]
    DegeneratePencil,
    #[error("constraint system has numerical rank below 8")]
    RankDeficientSystem,
    #[error("matrix is not a valid fundamental matrix")]
    InvalidFundamental,
    #[error("no matches to evaluate")]
    EmptyMatches,
    #[error("line does not cross the central vertical segment of the image")]
    OutOfFrame,
}

/// Pixel dimensions of one camera's image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageFrame {
    pub width: u32,
    pub height: u32,
}

impl ImageFrame {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn w(&self) -> f64 {
        f64::from(self.width)
    }

    pub fn h(&self) -> f64 {
        f64::from(self.height)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.w()).contains(&x) && (0.0..=self.h()).contains(&y)
    }

    pub fn center(&self) -> HomogeneousPoint {
        HomogeneousPoint::finite(self.w() / 2.0, self.h() / 2.0)
    }

    /// The four boundary edges as `(origin, unit direction, half length)`,
    /// origin at the edge midpoint. Order: left, right, top, bottom.
    fn edges(&self) -> [([f64; 2], [f64; 2], f64); 4] {
        let (w, h) = (self.w(), self.h());
        [
            ([0.0, h / 2.0], [0.0, 1.0], h / 2.0),
            ([w, h / 2.0], [0.0, 1.0], h / 2.0),
            ([w / 2.0, 0.0], [1.0, 0.0], w / 2.0),
            ([w / 2.0, h], [1.0, 0.0], w / 2.0),
        ]
    }

    /// Clips a line to the image rectangle, returning the segment endpoints.
    pub fn clip(&self, l: &HomogeneousLine) -> Option<([f64; 2], [f64; 2])> {
        let [a, b, c] = l.coeffs();
        let (w, h) = (self.w(), self.h());
        let mut hits: Vec<[f64; 2]> = Vec::with_capacity(4);
        if b.abs() > 1e-15 {
            for x in [0.0, w] {
                let y = -(a * x + c) / b;
                if (0.0..=h).contains(&y) {
                    hits.push([x, y]);
                }
            }
        }
        if a.abs() > 1e-15 {
            for y in [0.0, h] {
                let x = -(b * y + c) / a;
                if (0.0..=w).contains(&x) {
                    hits.push([x, y]);
                }
            }
        }
        let mut best: Option<([f64; 2], [f64; 2], f64)> = None;
        for i in 0..hits.len() {
            for j in i + 1..hits.len() {
                let d = (hits[i][0] - hits[j][0]).hypot(hits[i][1] - hits[j][1]);
                if best.is_none_or(|(_, _, bd)| d > bd) {
                    best = Some((hits[i], hits[j], d));
                }
            }
        }
        best.map(|(p, q, _)| (p, q))
    }
}

/// A projective point of the image plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct HomogeneousPoint([f64; 3]);

impl HomogeneousPoint {
    pub fn new(x: f64, y: f64, w: f64) -> Result<Self, GeometryError> {
        let norm = (x * x + y * y + w * w).sqrt();
        if !norm.is_finite() || norm < NULL_CROSS {
            return Err(GeometryError::ZeroVector);
        }
        let planar = x.hypot(y);
        if w.abs() <= 1e-15 * planar {
            let (dx, dy) = (x / planar, y / planar);
            // Canonical sign for directions: d and -d are the same point.
            let s = if dx > 0.0 || (dx == 0.0 && dy > 0.0) { 1.0 } else { -1.0 };
            Ok(Self([s * dx, s * dy, 0.0]))
        } else {
            Ok(Self([x / w, y / w, 1.0]))
        }
    }

    pub fn finite(x: f64, y: f64) -> Self {
        Self([x, y, 1.0])
    }

    pub fn from_vector(v: &Vector3<f64>) -> Result<Self, GeometryError> {
        Self::new(v.x, v.y, v.z)
    }

    pub fn coords(&self) -> [f64; 3] {
        self.0
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::from(self.0)
    }

    /// Unit-norm representative.
    pub fn unit(&self) -> Vector3<f64> {
        self.to_vector().normalize()
    }

    pub fn is_finite(&self) -> bool {
        self.0[2] != 0.0
    }

    pub fn xy(&self) -> Option<[f64; 2]> {
        self.is_finite().then_some([self.0[0], self.0[1]])
    }

    /// Euclidean distance between two finite points.
    pub fn distance(&self, other: &Self) -> Option<f64> {
        let (p, q) = (self.xy()?, other.xy()?);
        Some((p[0] - q[0]).hypot(p[1] - q[1]))
    }
}

impl TryFrom<[f64; 3]> for HomogeneousPoint {
    type Error = GeometryError;
    fn try_from(v: [f64; 3]) -> Result<Self, Self::Error> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<HomogeneousPoint> for [f64; 3] {
    fn from(p: HomogeneousPoint) -> Self {
        p.0
    }
}

/// An image line `a x + b y + c = 0` with `a² + b² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct HomogeneousLine([f64; 3]);

impl HomogeneousLine {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, GeometryError> {
        let n = a.hypot(b);
        if !n.is_finite() || !c.is_finite() {
            return Err(GeometryError::ZeroVector);
        }
        if n <= 1e-15 * c.abs().max(1.0) {
            return Err(GeometryError::LineAtInfinity);
        }
        let s = if a > 0.0 || (a == 0.0 && b > 0.0) { 1.0 } else { -1.0 };
        Ok(Self([s * a / n, s * b / n, s * c / n]))
    }

    pub fn from_vector(v: &Vector3<f64>) -> Result<Self, GeometryError> {
        Self::new(v.x, v.y, v.z)
    }

    pub fn coeffs(&self) -> [f64; 3] {
        self.0
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::from(self.0)
    }

    pub fn normal(&self) -> [f64; 2] {
        [self.0[0], self.0[1]]
    }

    /// Unit direction along the line.
    pub fn direction(&self) -> [f64; 2] {
        [-self.0[1], self.0[0]]
    }

    /// Raw `l · p` on the stored representatives.
    pub fn dot(&self, p: &HomogeneousPoint) -> f64 {
        let q = p.coords();
        self.0[0] * q[0] + self.0[1] * q[1] + self.0[2] * q[2]
    }

    /// Orthogonal projection of a finite point onto the line.
    pub fn foot(&self, x: f64, y: f64) -> [f64; 2] {
        let d = self.0[0] * x + self.0[1] * y + self.0[2];
        [x - d * self.0[0], y - d * self.0[1]]
    }

    /// `|sin|` of the angle between the two lines.
    pub fn sin_angle(&self, other: &Self) -> f64 {
        (self.0[0] * other.0[1] - self.0[1] * other.0[0]).abs()
    }

    /// Coefficient-wise agreement within `tol`, either sign.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let same = (0..3).all(|k| (self.0[k] - other.0[k]).abs() <= tol);
        let flipped = (0..3).all(|k| (self.0[k] + other.0[k]).abs() <= tol);
        same || flipped
    }

    /// Slope `dy/dx`; infinite for vertical lines.
    fn slope(&self) -> f64 {
        -self.0[0] / self.0[1]
    }

    /// Ordinate where the line crosses `x`, if it is not vertical.
    fn y_at(&self, x: f64) -> Option<f64> {
        if self.0[1].abs() < 1e-12 {
            None
        } else {
            Some(-(self.0[0] * x + self.0[2]) / self.0[1])
        }
    }
}

impl TryFrom<[f64; 3]> for HomogeneousLine {
    type Error = GeometryError;
    fn try_from(v: [f64; 3]) -> Result<Self, Self::Error> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<HomogeneousLine> for [f64; 3] {
    fn from(l: HomogeneousLine) -> Self {
        l.0
    }
}

pub fn line_through(p: &HomogeneousPoint, q: &HomogeneousPoint) -> Result<HomogeneousLine, GeometryError> {
    let v = p.to_vector().cross(&q.to_vector());
    if v.norm() < NULL_CROSS {
        return Err(GeometryError::CoincidentPoints);
    }
    HomogeneousLine::from_vector(&v)
}

pub fn intersect(l1: &HomogeneousLine, l2: &HomogeneousLine) -> Result<HomogeneousPoint, GeometryError> {
    let v = l1.to_vector().cross(&l2.to_vector());
    if v.norm() < NULL_CROSS {
        return Err(GeometryError::IdenticalLines);
    }
    HomogeneousPoint::from_vector(&v)
}

pub fn signed_distance(l: &HomogeneousLine, p: &HomogeneousPoint) -> Result<f64, GeometryError> {
    if !p.is_finite() {
        return Err(GeometryError::InfinitePoint);
    }
    Ok(l.dot(p))
}

/// Area between `l` and `l_ref` across the image width, after translating
/// `l` so that the two lines meet on the central vertical line `x = w/2`.
///
/// Both lines must cross the central vertical segment `[0, h]`. For slopes
/// `m` and `m_ref` the integral of `|Δy|` reduces to `|m - m_ref| · (w/2)²`.
pub fn area_measure(l: &HomogeneousLine, l_ref: &HomogeneousLine, frame: &ImageFrame) -> Result<f64, GeometryError> {
    let xc = frame.w() / 2.0;
    for line in [l, l_ref] {
        match line.y_at(xc) {
            Some(y) if (0.0..=frame.h()).contains(&y) => {}
            _ => return Err(GeometryError::OutOfFrame),
        }
    }
    let ds = (l.slope() - l_ref.slope()).abs();
    Ok(ds * xc * xc)
}

/// Area measure of `l` against the pencil line through `e` that meets `l`
/// on the central vertical line.
///
/// Lines steeper than 45° are measured in the transposed image instead
/// (pinned on the central horizontal line, integrated over the height), as
/// the vertical pinning degenerates for them. A line that crosses the image
/// away from both central segments is pinned where it meets the extended
/// central line. Lines missing the image are out of frame.
pub fn pencil_area(l: &HomogeneousLine, e: &HomogeneousPoint, frame: &ImageFrame) -> Result<f64, GeometryError> {
    if frame.clip(l).is_none() {
        return Err(GeometryError::OutOfFrame);
    }
    let [a, b, c] = l.coeffs();
    if a.abs() <= b.abs() {
        return pencil_area_vertical(l, e, frame);
    }
    let lt = HomogeneousLine::new(b, a, c)?;
    let [x, y, w] = e.coords();
    let et = HomogeneousPoint::new(y, x, w)?;
    pencil_area_vertical(&lt, &et, &ImageFrame::new(frame.height, frame.width))
}

fn pencil_area_vertical(l: &HomogeneousLine, e: &HomogeneousPoint, frame: &ImageFrame) -> Result<f64, GeometryError> {
    let xc = frame.w() / 2.0;
    let y = l.y_at(xc).ok_or(GeometryError::OutOfFrame)?;
    let anchor = HomogeneousPoint::finite(xc, y);
    let reference = match line_through(e, &anchor) {
        Ok(reference) => reference,
        // The epipole sits on the crossing point; there is no disagreement.
        Err(GeometryError::CoincidentPoints) => return Ok(0.0),
        Err(err) => return Err(err),
    };
    if (0.0..=frame.h()).contains(&y) {
        return area_measure(l, &reference, frame);
    }
    if reference.y_at(xc).is_none() {
        return Err(GeometryError::OutOfFrame);
    }
    Ok((l.slope() - reference.slope()).abs() * xc * xc)
}

/// Inlier test: area against the epipole's pencil below three image widths.
pub fn is_area_inlier(l: &HomogeneousLine, e: &HomogeneousPoint, frame: &ImageFrame) -> bool {
    pencil_area(l, e, frame).is_ok_and(|a| a < AREA_INLIER_FACTOR * frame.w())
}

/// The pencil of lines through an epipole, coordinatized by where each line
/// meets a fixed reference line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pencil {
    epipole: HomogeneousPoint,
    reference: HomogeneousLine,
    origin: [f64; 2],
    direction: [f64; 2],
    scale: f64,
}

impl Pencil {
    /// Uses the image edge farthest from the epipole as the reference line.
    /// For an epipole at infinity the edge most transverse to the pencil
    /// direction is used.
    pub fn new(epipole: HomogeneousPoint, frame: &ImageFrame) -> Self {
        let edges = frame.edges();
        let pick = match epipole.xy() {
            Some([ex, ey]) => {
                let dist = [ex.abs(), (ex - frame.w()).abs(), ey.abs(), (ey - frame.h()).abs()];
                let mut best = 0;
                for k in 1..4 {
                    if dist[k] > dist[best] {
                        best = k;
                    }
                }
                best
            }
            None => {
                let [dx, dy, _] = epipole.coords();
                if dx.abs() >= dy.abs() {
                    0
                } else {
                    2
                }
            }
        };
        let (origin, direction, scale) = edges[pick];
        Self::with_reference(epipole, origin, direction, scale)
    }

    /// Reference line through `origin` along the unit `direction`; `scale`
    /// divides the position along it to keep coordinates near unity.
    pub fn with_reference(epipole: HomogeneousPoint, origin: [f64; 2], direction: [f64; 2], scale: f64) -> Self {
        let reference =
            HomogeneousLine::new(-direction[1], direction[0], direction[1] * origin[0] - direction[0] * origin[1])
                .expect("unit direction");
        Self { epipole, reference, origin, direction, scale }
    }

    pub fn epipole(&self) -> &HomogeneousPoint {
        &self.epipole
    }

    pub fn reference(&self) -> &HomogeneousLine {
        &self.reference
    }

    /// 1D projective coordinate of a pencil line, unit norm.
    pub fn coordinate(&self, l: &HomogeneousLine) -> Vector2<f64> {
        let x = l.to_vector().cross(&self.reference.to_vector());
        let a = x.z;
        let b = (x.x - a * self.origin[0]) * self.direction[0] + (x.y - a * self.origin[1]) * self.direction[1];
        Vector2::new(a, b / self.scale).normalize()
    }

    /// The pencil line with the given 1D coordinate.
    pub fn line(&self, u: &Vector2<f64>) -> Result<HomogeneousLine, GeometryError> {
        let (a, b) = (u.x, u.y * self.scale);
        let x = Vector3::new(a * self.origin[0] + b * self.direction[0], a * self.origin[1] + b * self.direction[1], a);
        let v = self.epipole.to_vector().cross(&x);
        HomogeneousLine::from_vector(&v)
    }

    /// Pencil line through a point.
    pub fn line_through(&self, p: &HomogeneousPoint) -> Result<HomogeneousLine, GeometryError> {
        line_through(&self.epipole, p)
    }

    /// Pencil line through the foot of the perpendicular dropped from
    /// `anchor` onto `l`. Used to snap nearly-concurrent lines onto the pencil.
    pub fn snap(&self, l: &HomogeneousLine, anchor: [f64; 2]) -> Result<HomogeneousLine, GeometryError> {
        let [x, y] = l.foot(anchor[0], anchor[1]);
        self.line_through(&HomogeneousPoint::finite(x, y))
    }

    /// How far apart two pencil lines are: the sine of their angle for a
    /// finite epipole, the 1D coordinate determinant for a parallel pencil.
    pub fn separation(&self, l1: &HomogeneousLine, l2: &HomogeneousLine) -> f64 {
        if self.epipole.is_finite() {
            l1.sin_angle(l2)
        } else {
            let (u, v) = (self.coordinate(l1), self.coordinate(l2));
            (u.x * v.y - u.y * v.x).abs()
        }
    }
}

/// Projective map from the pencil around `e_A` to the pencil around `e_B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PencilHomography {
    matrix: Matrix2<f64>,
    source: Pencil,
    target: Pencil,
}

impl PencilHomography {
    pub fn from_matrix(matrix: Matrix2<f64>, source: Pencil, target: Pencil) -> Result<Self, GeometryError> {
        let n = matrix.norm();
        if !n.is_finite() || n == 0.0 || matrix.determinant().abs() < 1e-12 * n * n {
            return Err(GeometryError::DegeneratePencil);
        }
        Ok(Self { matrix: matrix / n, source, target })
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.matrix
    }

    pub fn source(&self) -> &Pencil {
        &self.source
    }

    pub fn target(&self) -> &Pencil {
        &self.target
    }

    /// Maps a line of the source pencil to the target pencil.
    pub fn map(&self, l: &HomogeneousLine) -> Result<HomogeneousLine, GeometryError> {
        let u = self.source.coordinate(l);
        self.target.line(&(self.matrix * u))
    }
}

/// Minimum pencil separation for two lines to count as distinct.
const PENCIL_DISTINCT: f64 = 1e-6;

/// Solves the 1D homography exactly from three line correspondences.
pub fn fit_pencil_homography(
    pairs: &[(HomogeneousLine, HomogeneousLine); 3],
    source: &Pencil,
    target: &Pencil,
) -> Result<PencilHomography, GeometryError> {
    for i in 0..3 {
        for j in i + 1..3 {
            if source.separation(&pairs[i].0, &pairs[j].0) < PENCIL_DISTINCT
                || target.separation(&pairs[i].1, &pairs[j].1) < PENCIL_DISTINCT
            {
                return Err(GeometryError::DegeneratePencil);
            }
        }
    }
    // Each pair u -> v contributes v × (H u) = 0, one row in the 4 entries of H.
    let mut rows = [[0.0f64; 4]; 3];
    for (row, (la, lb)) in rows.iter_mut().zip(pairs) {
        let u = source.coordinate(la);
        let v = target.coordinate(lb);
        *row = [-v.y * u.x, -v.y * u.y, v.x * u.x, v.x * u.y];
    }
    // Null vector of the 3×4 system by signed 3×3 minors.
    let mut h = [0.0f64; 4];
    for (skip, entry) in h.iter_mut().enumerate() {
        let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
        let m = Matrix3::from_fn(|r, c| rows[r][cols[c]]);
        let sign = if skip % 2 == 0 { 1.0 } else { -1.0 };
        *entry = sign * m.determinant();
    }
    let matrix = Matrix2::new(h[0], h[1], h[2], h[3]);
    PencilHomography::from_matrix(matrix, *source, *target)
}

/// A rank-2 fundamental matrix, `l_B = F p_A`, with unit Frobenius norm and
/// its first significant entry positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix(Matrix3<f64>);

impl FundamentalMatrix {
    /// Enforces rank 2 and the scale convention.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        if !m.iter().all(|v| v.is_finite()) || m.norm() == 0.0 {
            return Err(GeometryError::InvalidFundamental);
        }
        // The dynamic SVD avoids the squared conditioning of the 3×3 path.
        let svd = DMatrix::from_column_slice(3, 3, m.as_slice()).svd(true, true);
        let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
        let mut s = svd.singular_values;
        let smallest = (0..3).min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap_or(2);
        s[smallest] = 0.0;
        let r = u * DMatrix::from_diagonal(&s) * vt;
        Self::normalized(Matrix3::from_column_slice(r.as_slice()))
    }

    fn normalized(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let n = m.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(GeometryError::InvalidFundamental);
        }
        let mut m = m / n;
        let row_major = m.transpose();
        let first = row_major.iter().copied().find(|v| v.abs() > 1e-9).unwrap_or(1.0);
        if first < 0.0 {
            m = -m;
        }
        Ok(Self(m))
    }

    pub fn from_row_major(v: &[f64; 9]) -> Result<Self, GeometryError> {
        Self::from_matrix(Matrix3::from_row_slice(v))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 3 + c] = self.0[(r, c)];
            }
        }
        out
    }

    /// Epipolar line in image B of a point in image A.
    pub fn line_in_b(&self, p_a: &HomogeneousPoint) -> Result<HomogeneousLine, GeometryError> {
        HomogeneousLine::from_vector(&(self.0 * p_a.to_vector()))
    }

    /// Epipolar line in image A of a point in image B.
    pub fn line_in_a(&self, p_b: &HomogeneousPoint) -> Result<HomogeneousLine, GeometryError> {
        HomogeneousLine::from_vector(&(self.0.transpose() * p_b.to_vector()))
    }

    /// Right null vector: the epipole in image A.
    pub fn epipole_a(&self) -> Result<HomogeneousPoint, GeometryError> {
        null_vector(&self.0)
    }

    /// Left null vector: the epipole in image B.
    pub fn epipole_b(&self) -> Result<HomogeneousPoint, GeometryError> {
        null_vector(&self.0.transpose())
    }

    /// Frobenius distance to another matrix after both are scale-normalized.
    pub fn distance(&self, other: &Self) -> f64 {
        (self.0 - other.0).norm().min((self.0 + other.0).norm())
    }
}

fn null_vector(m: &Matrix3<f64>) -> Result<HomogeneousPoint, GeometryError> {
    let svd = DMatrix::from_column_slice(3, 3, m.as_slice()).svd(false, true);
    let vt = svd.v_t.expect("v_t");
    let s = svd.singular_values;
    let k = (0..3).min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap_or(2);
    let v = Vector3::new(vt[(k, 0)], vt[(k, 1)], vt[(k, 2)]);
    HomogeneousPoint::from_vector(&v)
}

/// Hartley-style similarity normalization of a point cloud.
fn normalizing_transform(points: &[[f64; 2]]) -> Matrix3<f64> {
    let n = points.len().max(1) as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
    let (mx, my) = (mx / n, my / n);
    let mean = points.iter().map(|p| (p[0] - mx).hypot(p[1] - my)).sum::<f64>() / n;
    let s = if mean > 0.0 { std::f64::consts::SQRT_2 / mean } else { 1.0 };
    Matrix3::new(s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0)
}

/// Two sample points on a line: the foot of the perpendicular from the
/// origin and a point 256 px further along the line.
fn line_samples(l: &HomogeneousLine) -> [[f64; 2]; 2] {
    let f = l.foot(0.0, 0.0);
    let d = l.direction();
    [f, [f[0] + 256.0 * d[0], f[1] + 256.0 * d[1]]]
}

/// Sorted singular vectors (descending singular values) of a dense matrix
/// with at least as many rows as columns.
fn sorted_svd(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("v_t");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let values = order.iter().map(|&k| s[k]).collect();
    let rows: Vec<_> = order.iter().map(|&k| vt.row(k).clone_owned()).collect();
    (values, DMatrix::from_rows(&rows))
}

/// Builds F from the two epipoles and at least three corresponding
/// epipolar line pairs.
///
/// The epipole constraints `F e_A = 0` and `e_Bᵀ F = 0` are solved exactly:
/// they cut the nine entries of F down to a four-dimensional subspace. The
/// line constraints `l_B × (F x) = 0`, for two sample points `x` on each
/// `l_A`, are then solved in least squares inside that subspace, and rank 2
/// is enforced at the end. All of this runs in Hartley-normalized
/// coordinates.
pub fn assemble_fundamental(
    e_a: &HomogeneousPoint,
    e_b: &HomogeneousPoint,
    pairs: &[(HomogeneousLine, HomogeneousLine)],
) -> Result<FundamentalMatrix, GeometryError> {
    if pairs.is_empty() {
        return Err(GeometryError::RankDeficientSystem);
    }
    let samples_a: Vec<[f64; 2]> = pairs.iter().flat_map(|(la, _)| line_samples(la)).collect();
    let samples_b: Vec<[f64; 2]> = pairs.iter().flat_map(|(_, lb)| line_samples(lb)).collect();
    let ta = normalizing_transform(&samples_a);
    let tb = normalizing_transform(&samples_b);
    let tb_inv_t = tb.try_inverse().ok_or(GeometryError::RankDeficientSystem)?.transpose();

    let ea = (ta * e_a.to_vector()).normalize();
    let eb = (tb * e_b.to_vector()).normalize();

    // Epipole constraints on vec(F) (row-major), padded square for a full V.
    let mut epi = DMatrix::<f64>::zeros(9, 9);
    for k in 0..3 {
        for c in 0..3 {
            epi[(k, k * 3 + c)] = ea[c];
            epi[(3 + c, k * 3 + c)] = eb[k];
        }
    }
    let (_, vt) = sorted_svd(epi);
    let basis: Vec<Matrix3<f64>> = (5..9).map(|k| Matrix3::from_row_slice(vt.row(k).transpose().as_slice())).collect();

    let mut rows: Vec<[f64; 4]> = Vec::with_capacity(pairs.len() * 6);
    for (la, lb) in pairs {
        let lbn = (tb_inv_t * lb.to_vector()).normalize();
        for s in line_samples(la) {
            let x = (ta * Vector3::new(s[0], s[1], 1.0)).normalize();
            let images: Vec<Vector3<f64>> = basis.iter().map(|b| lbn.cross(&(b * x))).collect();
            rows.extend((0..3).map(|k| [images[0][k], images[1][k], images[2][k], images[3][k]]));
        }
    }
    let a = DMatrix::from_fn(rows.len(), 4, |r, c| rows[r][c]);
    let (s, vt) = sorted_svd(a);
    if s.len() < 4 || s[2] <= 1e-9 * s[0] {
        return Err(GeometryError::RankDeficientSystem);
    }
    let c = vt.row(3);
    let fnorm = basis.iter().enumerate().fold(Matrix3::zeros(), |acc, (i, b)| acc + b * c[i]);
    FundamentalMatrix::from_matrix(tb.transpose() * fnorm * ta)
}

/// Mean symmetric epipolar distance over point matches `(p_A, p_B)`.
///
/// A match whose point coincides with an epipole has no epipolar line and
/// is skipped.
pub fn symmetric_epipolar_distance(
    f: &FundamentalMatrix,
    matches: &[(HomogeneousPoint, HomogeneousPoint)],
) -> Result<f64, GeometryError> {
    if matches.is_empty() {
        return Err(GeometryError::EmptyMatches);
    }
    let mut total = 0.0;
    let mut used = 0usize;
    for (pa, pb) in matches {
        let (Ok(lb), Ok(la)) = (f.line_in_b(pa), f.line_in_a(pb)) else {
            continue;
        };
        let db = signed_distance(&lb, pb)?.abs();
        let da = signed_distance(&la, pa)?.abs();
        total += 0.5 * (da + db);
        used += 1;
    }
    if used == 0 {
        return Err(GeometryError::EmptyMatches);
    }
    Ok(total / used as f64)
}
