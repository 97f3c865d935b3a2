use serde::{Deserialize, Serialize};

use super::mesh::{Mesh, Point};

/// Triangle quadrature rules, named by the accuracy order used throughout
/// the crate (1: vertex rule, 2: three interior points, 3: seven points).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum QuadratureRule {
    /// Vertex (lumped) rule, exact for degree 1.
    Vertex,
    /// Three interior points, exact for degree 2.
    #[default]
    ThreePoint,
    /// Seven-point Radon rule, exact for degree 5.
    SevenPoint,
}

const A1: f64 = 0.101_286_507_323_456_34; // (6 − √15)/21
const A2: f64 = 0.470_142_064_105_115_1; // (6 + √15)/21
const W1: f64 = 0.125_939_180_544_827_15; // (155 − √15)/1200
const W2: f64 = 0.132_394_152_788_506_18; // (155 + √15)/1200

static VERTEX: [([f64; 3], f64); 3] = [
    ([1.0, 0.0, 0.0], 1.0 / 3.0),
    ([0.0, 1.0, 0.0], 1.0 / 3.0),
    ([0.0, 0.0, 1.0], 1.0 / 3.0),
];

static THREE: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

static SEVEN: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([A1, A1, 1.0 - 2.0 * A1], W1),
    ([A1, 1.0 - 2.0 * A1, A1], W1),
    ([1.0 - 2.0 * A1, A1, A1], W1),
    ([A2, A2, 1.0 - 2.0 * A2], W2),
    ([A2, 1.0 - 2.0 * A2, A2], W2),
    ([1.0 - 2.0 * A2, A2, A2], W2),
];

impl QuadratureRule {
    pub fn from_order(order: u8) -> Option<Self> {
        match order {
            1 => Some(Self::Vertex),
            2 => Some(Self::ThreePoint),
            3 => Some(Self::SevenPoint),
            _ => None,
        }
    }

    pub fn order(self) -> u8 {
        match self {
            Self::Vertex => 1,
            Self::ThreePoint => 2,
            Self::SevenPoint => 3,
        }
    }

    /// Highest total polynomial degree integrated exactly.
    pub fn degree(self) -> u32 {
        match self {
            Self::Vertex => 1,
            Self::ThreePoint => 2,
            Self::SevenPoint => 5,
        }
    }

    /// Barycentric points with weights summing to one.
    pub fn points(self) -> &'static [([f64; 3], f64)] {
        match self {
            Self::Vertex => &VERTEX,
            Self::ThreePoint => &THREE,
            Self::SevenPoint => &SEVEN,
        }
    }

    pub fn len(self) -> usize {
        self.points().len()
    }
}

pub(crate) fn bary_point(p: &[Point; 3], b: &[f64; 3]) -> Point {
    [
        b[0] * p[0][0] + b[1] * p[1][0] + b[2] * p[2][0],
        b[0] * p[0][1] + b[1] * p[1][1] + b[2] * p[2][1],
    ]
}

/// `∫_Ω f(x, u₁(x), …, u_m(x)) dx`, where the `uᵢ` are the P1 interpolants of
/// `fields` and the integral is the sum of `rule` over all triangles.
pub fn integrate<F>(mesh: &Mesh, rule: QuadratureRule, fields: &[&[f64]], f: F) -> f64
where
    F: Fn(Point, &[f64]) -> f64,
{
    for fld in fields {
        assert_eq!(fld.len(), mesh.num_vertices(), "field length must match vertex count");
    }
    let mut vals = vec![0.0; fields.len()];
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let pts = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        let mut s = 0.0;
        for (b, w) in rule.points() {
            for (v, fld) in vals.iter_mut().zip(fields) {
                *v = b[0] * fld[tri[0]] + b[1] * fld[tri[1]] + b[2] * fld[tri[2]];
            }
            s += w * f(bary_point(&pts, b), &vals);
        }
        total += area * s;
    }
    total
}
