//! Small planar geometry toolkit: points, polygons and the bilinear
//! reference-to-physical map of a quadrilateral cell.

pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn lerp(a: Point, b: Point, s: f64) -> Point {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

/// Signed area of a simple polygon (positive when counterclockwise).
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut twice = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * twice
}

pub fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Whether `p` lies in the closed convex polygon `poly` (counterclockwise),
/// allowing an absolute slack `tol`.
pub fn convex_polygon_contains(poly: &[Point], p: Point, tol: f64) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let e = sub(b, a);
        let len = norm(e);
        if len == 0.0 {
            return true;
        }
        (e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0])) / len >= -tol
    })
}

pub type Mat2 = [[f64; 2]; 2];

/// Bilinear map from the reference square `[0,1]^2` onto a quadrilateral
/// with counterclockwise vertices `v0..v3` at reference corners
/// `(0,0), (1,0), (1,1), (0,1)`.
#[derive(Debug, Clone, Copy)]
pub struct BilinearMap {
    pub vertices: [Point; 4],
}

impl BilinearMap {
    pub fn new(vertices: [Point; 4]) -> Self {
        Self { vertices }
    }

    pub fn map(&self, r: Point) -> Point {
        let [v0, v1, v2, v3] = self.vertices;
        let (s, t) = (r[0], r[1]);
        let w = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
        [
            w[0] * v0[0] + w[1] * v1[0] + w[2] * v2[0] + w[3] * v3[0],
            w[0] * v0[1] + w[1] * v1[1] + w[2] * v2[1] + w[3] * v3[1],
        ]
    }

    /// `J[i][a] = d x_i / d r_a`.
    pub fn jacobian(&self, r: Point) -> Mat2 {
        let [v0, v1, v2, v3] = self.vertices;
        let (s, t) = (r[0], r[1]);
        let mut j = [[0.0; 2]; 2];
        for i in 0..2 {
            j[i][0] = (1.0 - t) * (v1[i] - v0[i]) + t * (v2[i] - v3[i]);
            j[i][1] = (1.0 - s) * (v3[i] - v0[i]) + s * (v2[i] - v1[i]);
        }
        j
    }

    /// The mixed derivative `d^2 x / dr_0 dr_1`; the pure second
    /// derivatives of a bilinear map vanish.
    pub fn twist(&self) -> Point {
        let [v0, v1, v2, v3] = self.vertices;
        [v0[0] - v1[0] + v2[0] - v3[0], v0[1] - v1[1] + v2[1] - v3[1]]
    }

    /// Newton inversion of the map. Returns `None` when the iteration does
    /// not converge, which only happens for badly distorted cells.
    pub fn inverse(&self, x: Point) -> Option<Point> {
        let mut r = [0.5, 0.5];
        let scale =
            dist(self.vertices[0], self.vertices[2]).max(dist(self.vertices[1], self.vertices[3]));
        for _ in 0..60 {
            let f = sub(self.map(r), x);
            let j = self.jacobian(r);
            let det = det2(&j);
            if det.abs() < 1e-300 {
                return None;
            }
            let dr = [
                (j[1][1] * f[0] - j[0][1] * f[1]) / det,
                (-j[1][0] * f[0] + j[0][0] * f[1]) / det,
            ];
            r = sub(r, dr);
            if norm(f) <= 1e-15 * scale || norm(dr) < 1e-15 {
                return Some(r);
            }
        }
        let f = sub(self.map(r), x);
        (norm(f) <= 1e-12 * scale).then_some(r)
    }
}

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inv2(m: &Mat2) -> Mat2 {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

pub fn transpose2(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

pub fn matmul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn matvec2(a: &Mat2, v: Point) -> Point {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_inverse_roundtrip_on_trapezoid() {
        let m = BilinearMap::new([[0.0, 0.0], [2.0, 0.0], [1.5, 1.0], [0.2, 0.7]]);
        for &r in &[[0.1, 0.2], [0.9, 0.95], [0.5, 0.5], [0.0, 1.0]] {
            let x = m.map(r);
            let back = m.inverse(x).unwrap();
            assert!(dist(back, r) < 1e-13, "{r:?} -> {back:?}");
        }
    }

    #[test]
    fn polygon_area_of_unit_square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!((polygon_area(&sq) - 1.0).abs() < 1e-15);
        assert!(convex_polygon_contains(&sq, [0.5, 0.999], 0.0));
        assert!(!convex_polygon_contains(&sq, [1.1, 0.5], 1e-12));
    }
}
