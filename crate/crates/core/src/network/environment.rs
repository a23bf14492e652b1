//! Spatial environments: polygon unions that bound where neurons may live.
//!
//! The named presets are reproducible stand-ins for the classical arena
//! shapes (open square, circular arena, A-maze, T-maze). Maze corridors are
//! 0.2 m wide so that annulus connectivity spans the corridor.

use serde::{Deserialize, Serialize};

use crate::jsonutil::canon_f64;
use crate::network::{NetworkError, Point2};

/// Axis-aligned bounding box in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn unit() -> Self {
        Self {
            min_x: 0.0,
            min_y: 0.0,
            max_x: 1.0,
            max_y: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    /// Corner of the box by name; used to resolve source/target picks.
    pub fn corner(&self, name: &str) -> Option<Point2> {
        let p = match name {
            "bottom_left" => Point2::new(self.min_x, self.min_y),
            "bottom_right" => Point2::new(self.max_x, self.min_y),
            "top_left" => Point2::new(self.min_x, self.max_y),
            "top_right" => Point2::new(self.max_x, self.max_y),
            _ => return None,
        };
        Some(p)
    }
}

/// Admissible area for neuron placement: a union of simple polygons.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub name: String,
    pub polygons: Vec<Vec<Point2>>,
    pub bbox: BoundingBox,
}

/// Names of the shipped environment presets.
pub const PRESET_NAMES: [&str; 4] = ["square", "circle", "a_maze", "t_maze"];

/// On-disk form of an environment file: `{name, polygons, bbox}`.
#[derive(Serialize, Deserialize)]
struct EnvironmentFile {
    name: String,
    polygons: Vec<Vec<[f64; 2]>>,
    bbox: [[f64; 2]; 2],
}

impl Environment {
    pub fn new(name: impl Into<String>, polygons: Vec<Vec<Point2>>, bbox: BoundingBox) -> Self {
        Self {
            name: name.into(),
            polygons,
            bbox,
        }
    }

    /// Look up a shipped preset by name.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "square" => Some(Self::square()),
            "circle" => Some(Self::circle()),
            "a_maze" => Some(Self::a_maze()),
            "t_maze" => Some(Self::t_maze()),
            _ => None,
        }
    }

    /// The unit square [0,1]^2.
    pub fn square() -> Self {
        let poly = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        Self::new("square", vec![poly], BoundingBox::unit())
    }

    /// Disk of radius 0.5 centered in the unit square, as a 64-gon.
    pub fn circle() -> Self {
        let n = 64;
        let poly = (0..n)
            .map(|i| {
                let theta = 2.0 * std::f64::consts::PI * (i as f64) / (n as f64);
                Point2::new(
                    canon_f64(0.5 + 0.5 * theta.cos()),
                    canon_f64(0.5 + 0.5 * theta.sin()),
                )
            })
            .collect();
        Self::new("circle", vec![poly], BoundingBox::unit())
    }

    /// Capital-letter-A maze: two slanted leg corridors joined at the apex
    /// plus a horizontal crossbar.
    pub fn a_maze() -> Self {
        let apex = Point2::new(0.5, 0.9);
        let polygons = vec![
            corridor(Point2::new(0.15, 0.1), apex, 0.2),
            corridor(Point2::new(0.85, 0.1), apex, 0.2),
            corridor(Point2::new(0.2, 0.45), Point2::new(0.8, 0.45), 0.2),
        ];
        Self::new("a_maze", polygons, BoundingBox::unit())
    }

    /// T-maze: vertical stem plus horizontal bar across the top.
    pub fn t_maze() -> Self {
        let polygons = vec![
            corridor(Point2::new(0.5, 0.08), Point2::new(0.5, 0.8), 0.2),
            corridor(Point2::new(0.08, 0.85), Point2::new(0.92, 0.85), 0.2),
        ];
        Self::new("t_maze", polygons, BoundingBox::unit())
    }

    /// True if the point lies inside the polygon union (even-odd rule).
    pub fn contains(&self, p: Point2) -> bool {
        self.polygons.iter().any(|poly| point_in_polygon(poly, p))
    }

    /// Serialize to the environment file schema.
    pub fn to_json(&self) -> serde_json::Value {
        let file = EnvironmentFile {
            name: self.name.clone(),
            polygons: self
                .polygons
                .iter()
                .map(|poly| poly.iter().map(|p| [p.x, p.y]).collect())
                .collect(),
            bbox: [
                [self.bbox.min_x, self.bbox.min_y],
                [self.bbox.max_x, self.bbox.max_y],
            ],
        };
        serde_json::to_value(file).expect("environment serialization")
    }

    /// Parse an environment file.
    pub fn from_json(value: &serde_json::Value) -> Result<Self, NetworkError> {
        let file: EnvironmentFile = serde_json::from_value(value.clone())
            .map_err(|e| NetworkError::InvalidEnvironment(e.to_string()))?;
        if file.polygons.is_empty() {
            return Err(NetworkError::InvalidEnvironment(
                "environment region is empty".into(),
            ));
        }
        for poly in &file.polygons {
            if poly.len() < 3 {
                return Err(NetworkError::InvalidEnvironment(
                    "polygon with fewer than 3 vertices".into(),
                ));
            }
        }
        Ok(Self {
            name: file.name,
            polygons: file
                .polygons
                .iter()
                .map(|poly| poly.iter().map(|&[x, y]| Point2::new(x, y)).collect())
                .collect(),
            bbox: BoundingBox {
                min_x: file.bbox[0][0],
                min_y: file.bbox[0][1],
                max_x: file.bbox[1][0],
                max_y: file.bbox[1][1],
            },
        })
    }
}

/// Rectangle of the given width centered on the segment from `a` to `b`.
fn corridor(a: Point2, b: Point2, width: f64) -> Vec<Point2> {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len = (dx * dx + dy * dy).sqrt();
    let (px, py) = (-dy / len * width / 2.0, dx / len * width / 2.0);
    [
        (a.x + px, a.y + py),
        (b.x + px, b.y + py),
        (b.x - px, b.y - py),
        (a.x - px, a.y - py),
    ]
    .iter()
    .map(|&(x, y)| Point2::new(canon_f64(x), canon_f64(y)))
    .collect()
}

/// Even-odd ray casting test.
fn point_in_polygon(poly: &[Point2], p: Point2) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x_cross = pi.x + (p.y - pi.y) * (pj.x - pi.x) / (pj.y - pi.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}
