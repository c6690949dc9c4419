//! Gauss rules on the unit interval, the unit square and triangles.

use crate::geometry::{triangle_area, Point};

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one Gauss point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        // Newton on P_n starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Number of Gauss points per direction integrating degree `degree`
/// exactly in one variable.
pub fn points_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}

/// Tensor Gauss rule on the unit square (reference coordinates).
pub fn square_rule(n: usize) -> (Vec<Point>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mut pts = Vec::with_capacity(n * n);
    let mut wts = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            pts.push([x[i], x[j]]);
            wts.push(w[i] * w[j]);
        }
    }
    (pts, wts)
}

/// Collapsed (Duffy) Gauss rule on the physical triangle `a, b, c`,
/// exact for polynomials of total degree `degree`.
pub fn triangle_rule(a: Point, b: Point, c: Point, degree: usize) -> (Vec<Point>, Vec<f64>) {
    // The collapse adds one degree in the first direction.
    let n = points_for_degree(degree + 1);
    let (x, w) = gauss_legendre(n);
    let area2 = 2.0 * triangle_area(a, b, c).abs();
    let mut pts = Vec::with_capacity(n * n);
    let mut wts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let s = x[i];
            let t = x[j] * (1.0 - s);
            let jac = 1.0 - s;
            pts.push([
                a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]),
                a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1]),
            ]);
            wts.push(w[i] * w[j] * jac * area2);
        }
    }
    (pts, wts)
}
