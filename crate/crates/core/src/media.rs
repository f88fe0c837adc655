//! Scatterer geometry and contrast fields.
//!
//! A [`Medium`] is a union of disjoint shapes, each carrying a scalar
//! contrast `q` and a symmetric matrix contrast `Q`; both vanish outside
//! the shapes. Shapes are described by their boundary curves and
//! polygonized once at construction; membership queries use the winding
//! number against the polygonization, except for the implicitly defined
//! peanut where the sign of the defining expression is used directly.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::point::{Point, SymMat2};

/// Boundary vertices sampled per shape. Keeps the boundary-location
/// error far below the forward-solver mesh width.
pub const DEFAULT_POLYGON_VERTICES: usize = 1024;

/// Errors from geometry and contrast construction.
#[derive(Debug, Clone, PartialEq)]
pub enum MediaError {
    /// Component shapes overlap (checked on polygonizations).
    OverlappingComponents { first: usize, second: usize },
    /// `I + Q` fails the uniform positivity requirement on a component.
    NonCoerciveContrast { component: usize, eig_min: f64 },
    /// Unknown preset or contrast-pair name.
    UnknownPreset { name: String },
}

impl std::fmt::Display for MediaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MediaError::OverlappingComponents { first, second } => {
                write!(f, "components {} and {} overlap", first, second)
            }
            MediaError::NonCoerciveContrast { component, eig_min } => write!(
                f,
                "component {}: smallest eigenvalue of I+Q is {} (must be positive)",
                component, eig_min
            ),
            MediaError::UnknownPreset { name } => write!(f, "unknown preset '{}'", name),
        }
    }
}

impl std::error::Error for MediaError {}

/// Geometric primitive for a single scatterer component.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeKind {
    /// Disk with the given center and radius.
    Disk { center: Point, radius: f64 },
    /// Axis-aligned rectangle given by center and half-widths.
    Rectangle { center: Point, half_widths: Point },
    /// Kite-shaped curve: a circle of radius `scale` about `center`,
    /// sheared horizontally by `-shear * (scale sin t)^2`.
    Kite { center: Point, scale: f64, shear: f64 },
    /// Axis-aligned ellipse with the given semi-axes.
    Ellipse { center: Point, semi_axes: Point },
    /// Peanut-shaped implicit curve about `center`:
    /// `(dx^2+dy^2)^2 - a (dx^2-dy^2) = b` with lobes along the x axis.
    Peanut { center: Point, a: f64, b: f64 },
}

/// A closed scatterer boundary together with its polygonization.
#[derive(Debug, Clone)]
pub struct Shape {
    kind: ShapeKind,
    vertices: Vec<Point>,
}

impl Shape {
    pub fn new(kind: ShapeKind) -> Self {
        Self::with_resolution(kind, DEFAULT_POLYGON_VERTICES)
    }

    pub fn with_resolution(kind: ShapeKind, vertices: usize) -> Self {
        assert!(vertices >= 256, "polygonization needs at least 256 vertices");
        let vertices = (0..vertices)
            .map(|i| boundary_point(&kind, 2.0 * PI * i as f64 / vertices as f64))
            .collect();
        Shape { kind, vertices }
    }

    pub fn kind(&self) -> &ShapeKind {
        &self.kind
    }

    /// Ordered boundary vertices (positively oriented closed polygon).
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Boundary point at curve parameter `t` in `[0, 2pi)`.
    pub fn boundary_point(&self, t: f64) -> Point {
        boundary_point(&self.kind, t)
    }

    /// Interior membership test.
    pub fn contains(&self, p: Point) -> bool {
        match self.kind {
            ShapeKind::Peanut { center, a, b } => {
                let d = p - center;
                let s = d.x * d.x + d.y * d.y;
                let t = d.x * d.x - d.y * d.y;
                s * s - a * t - b < 0.0
            }
            _ => winding_number(&self.vertices, p) != 0,
        }
    }

    /// Axis-aligned bounding box of the polygonized boundary.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Distance from `p` to the polygonized boundary (zero inside counts
    /// the distance to the boundary as well).
    pub fn boundary_distance(&self, p: Point) -> f64 {
        let mut best = f64::INFINITY;
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            best = best.min(segment_distance(p, a, b));
        }
        best
    }
}

fn boundary_point(kind: &ShapeKind, t: f64) -> Point {
    match *kind {
        ShapeKind::Disk { center, radius } => {
            center + Point::new(radius * t.cos(), radius * t.sin())
        }
        ShapeKind::Rectangle { center, half_widths } => {
            // Walk the perimeter at constant parameter speed per side.
            let u = t / (2.0 * PI) * 4.0;
            let (w, h) = (half_widths.x, half_widths.y);
            let local = match u as usize {
                0 => Point::new(-w + 2.0 * w * u, -h),
                1 => Point::new(w, -h + 2.0 * h * (u - 1.0)),
                2 => Point::new(w - 2.0 * w * (u - 2.0), h),
                _ => Point::new(-w, h - 2.0 * h * (u - 3.0)),
            };
            center + local
        }
        ShapeKind::Kite { center, scale, shear } => {
            let s = scale * t.sin();
            center + Point::new(scale * t.cos() - shear * s * s, s)
        }
        ShapeKind::Ellipse { center, semi_axes } => {
            center + Point::new(semi_axes.x * t.cos(), semi_axes.y * t.sin())
        }
        ShapeKind::Peanut { center, a, b } => {
            // Star-shaped about its center: solve the quartic for r(t).
            let c2 = (2.0 * t).cos();
            let r2 = 0.5 * (a * c2 + (a * a * c2 * c2 + 4.0 * b).sqrt());
            let r = r2.sqrt();
            center + Point::new(r * t.cos(), r * t.sin())
        }
    }
}

/// Crossing-number winding test for a closed polygon.
fn winding_number(polygon: &[Point], p: Point) -> i32 {
    let mut winding = 0;
    let n = polygon.len();
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if a.y <= p.y {
            if b.y > p.y && cross(b - a, p - a) > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && cross(b - a, p - a) < 0.0 {
            winding -= 1;
        }
    }
    winding
}

fn cross(u: Point, v: Point) -> f64 {
    u.x * v.y - u.y * v.x
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * s)
}

/// Scalar and matrix contrast of one component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Contrast {
    pub q: f64,
    pub q_matrix: SymMat2,
}

impl Contrast {
    pub fn scalar(q: f64) -> Self {
        Contrast { q, q_matrix: SymMat2::ZERO }
    }

    pub fn new(q: f64, q_matrix: SymMat2) -> Self {
        Contrast { q, q_matrix }
    }
}

/// Contrast model of a component: constant over the component, or an
/// arbitrary spatially varying field (rarely needed; constants cover the
/// standard experiments).
#[derive(Clone)]
pub enum ContrastModel {
    Constant(Contrast),
    Varying(Arc<dyn Fn(Point) -> Contrast + Send + Sync>),
}

impl ContrastModel {
    fn at(&self, p: Point) -> Contrast {
        match self {
            ContrastModel::Constant(c) => *c,
            ContrastModel::Varying(f) => f(p),
        }
    }

}

impl std::fmt::Debug for ContrastModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ContrastModel::Constant(c) => write!(f, "Constant({:?})", c),
            ContrastModel::Varying(_) => write!(f, "Varying(..)"),
        }
    }
}

/// One scatterer component: a shape with its contrast.
#[derive(Debug, Clone)]
pub struct Component {
    pub shape: Shape,
    pub contrast: ContrastModel,
}

/// A scattering medium: disjoint components with compactly supported
/// contrasts. Immutable after construction; all queries are pure.
#[derive(Debug, Clone)]
pub struct Medium {
    components: Vec<Component>,
    isotropic: bool,
}

impl Medium {
    /// Empty medium (free space).
    pub fn free_space() -> Self {
        Medium { components: Vec::new(), isotropic: true }
    }

    /// Builds a medium, checking pairwise disjointness of the components
    /// and uniform positivity of `I + Q` on each component.
    pub fn new(components: Vec<Component>) -> Result<Self, MediaError> {
        for (i, a) in components.iter().enumerate() {
            for (j, b) in components.iter().enumerate().skip(i + 1) {
                let overlap = a.shape.vertices().iter().any(|&v| b.shape.contains(v))
                    || b.shape.vertices().iter().any(|&v| a.shape.contains(v));
                if overlap {
                    return Err(MediaError::OverlappingComponents { first: i, second: j });
                }
            }
        }
        for (i, c) in components.iter().enumerate() {
            let eig = match &c.contrast {
                ContrastModel::Constant(ct) => identity_plus_eig_min(ct.q_matrix),
                ContrastModel::Varying(f) => c
                    .shape
                    .vertices()
                    .iter()
                    .map(|&v| identity_plus_eig_min(f(v).q_matrix))
                    .fold(f64::INFINITY, f64::min),
            };
            if eig <= 0.0 {
                return Err(MediaError::NonCoerciveContrast { component: i, eig_min: eig });
            }
        }
        let isotropic = components.iter().all(|c| match &c.contrast {
            ContrastModel::Constant(ct) => ct.q_matrix.is_zero(),
            ContrastModel::Varying(_) => false,
        });
        Ok(Medium { components, isotropic })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// True when every matrix contrast vanishes identically.
    pub fn is_isotropic(&self) -> bool {
        self.isotropic
    }

    /// Contrast at a point: the component value inside a component,
    /// zero outside all of them.
    pub fn contrast_at(&self, p: Point) -> Contrast {
        for c in &self.components {
            if c.shape.contains(p) {
                return c.contrast.at(p);
            }
        }
        Contrast::default()
    }

    /// Bounding box of the whole support.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        if self.components.is_empty() {
            return None;
        }
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in &self.components {
            let (l, h) = c.shape.bounding_box();
            lo.x = lo.x.min(l.x);
            lo.y = lo.y.min(l.y);
            hi.x = hi.x.max(h.x);
            hi.y = hi.y.max(h.y);
        }
        Some((lo, hi))
    }

    /// Distance from `p` to the support (zero inside any component).
    pub fn support_distance(&self, p: Point) -> f64 {
        if self.components.is_empty() {
            return f64::INFINITY;
        }
        self.components
            .iter()
            .map(|c| if c.shape.contains(p) { 0.0 } else { c.shape.boundary_distance(p) })
            .fold(f64::INFINITY, f64::min)
    }
}

fn identity_plus_eig_min(q: SymMat2) -> f64 {
    SymMat2 { xx: 1.0 + q.xx, xy: q.xy, yy: 1.0 + q.yy }.eig_min()
}

/// The standard experiment geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetGeometry {
    /// A single kite-shaped scatterer.
    OneScatterer,
    /// A small disk and a rectangle.
    TwoScatterers,
    /// A small kite, an ellipse and a peanut.
    ThreeScatterers,
}

impl PresetGeometry {
    pub fn parse(name: &str) -> Result<Self, MediaError> {
        match name {
            "one_scatterer" => Ok(PresetGeometry::OneScatterer),
            "two_scatterers" => Ok(PresetGeometry::TwoScatterers),
            "three_scatterers" => Ok(PresetGeometry::ThreeScatterers),
            _ => Err(MediaError::UnknownPreset { name: name.to_string() }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PresetGeometry::OneScatterer => "one_scatterer",
            PresetGeometry::TwoScatterers => "two_scatterers",
            PresetGeometry::ThreeScatterers => "three_scatterers",
        }
    }
}

/// The standard contrast pairs `{Q, q}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContrastPreset {
    /// Isotropic: `Q = 0`, `q = 0.3`.
    Q1,
    /// Anisotropic: `Q = diag(0.3, 0.5)`, `q = 0`.
    Q2,
    /// Anisotropic: `Q = diag(0.3, 0.5)`, `q = 0.2`.
    Q3,
}

impl ContrastPreset {
    pub fn parse(name: &str) -> Result<Self, MediaError> {
        match name {
            "q1" => Ok(ContrastPreset::Q1),
            "q2" => Ok(ContrastPreset::Q2),
            "q3" => Ok(ContrastPreset::Q3),
            _ => Err(MediaError::UnknownPreset { name: name.to_string() }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ContrastPreset::Q1 => "q1",
            ContrastPreset::Q2 => "q2",
            ContrastPreset::Q3 => "q3",
        }
    }

    pub fn contrast(&self) -> Contrast {
        match self {
            ContrastPreset::Q1 => Contrast::scalar(0.3),
            ContrastPreset::Q2 => Contrast::new(0.0, SymMat2::diagonal(0.3, 0.5)),
            ContrastPreset::Q3 => Contrast::new(0.2, SymMat2::diagonal(0.3, 0.5)),
        }
    }
}

/// Shapes of one of the standard geometries.
pub fn make_preset_shapes(geometry: PresetGeometry) -> Vec<Shape> {
    match geometry {
        PresetGeometry::OneScatterer => vec![Shape::new(ShapeKind::Kite {
            center: Point::new(-0.75, 0.75),
            scale: 0.3,
            shear: 1.84,
        })],
        PresetGeometry::TwoScatterers => vec![
            Shape::new(ShapeKind::Disk { center: Point::new(-1.0, -1.0), radius: 0.25 }),
            Shape::new(ShapeKind::Rectangle {
                center: Point::new(0.5, -0.5),
                half_widths: Point::new(0.5, 0.25),
            }),
        ],
        PresetGeometry::ThreeScatterers => vec![
            Shape::new(ShapeKind::Kite {
                center: Point::new(-0.75, 0.75),
                scale: 0.2,
                shear: 1.84,
            }),
            Shape::new(ShapeKind::Ellipse {
                center: Point::new(1.0, -0.75),
                semi_axes: Point::new(0.25, 0.5),
            }),
            Shape::new(ShapeKind::Peanut {
                center: Point::new(-0.75, -1.0),
                a: 0.32,
                b: 0.0154,
            }),
        ],
    }
}

/// A standard geometry with a uniform contrast pair on every component.
pub fn make_preset_medium(geometry: PresetGeometry, contrast: ContrastPreset) -> Medium {
    let components = make_preset_shapes(geometry)
        .into_iter()
        .map(|shape| Component {
            shape,
            contrast: ContrastModel::Constant(contrast.contrast()),
        })
        .collect();
    Medium::new(components).expect("preset media are disjoint and coercive")
}
