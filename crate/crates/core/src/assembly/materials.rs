//! Constitutive laws and the ghost-penalty weight.
//!
//! Gradients are stored with rows as components: `g[i][j] = d_j v_i`.

use super::AssemblyError;

pub type Tensor2 = [[f64; 2]; 2];

/// `w(kappa) = w_max^(1 - 2 kappa) / 2`.
pub fn weight(kappa: f64, w_max: f64) -> Result<f64, AssemblyError> {
    if !(w_max >= 1.0) {
        return Err(AssemblyError::InvalidParameter {
            name: "w_max",
            bound: ">= 1",
            value: w_max,
        });
    }
    Ok(0.5 * w_max.powf(1.0 - 2.0 * kappa))
}

pub fn transpose(a: &Tensor2) -> Tensor2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn matmul(a: &Tensor2, b: &Tensor2) -> Tensor2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `rho nu (grad v + grad v^T) - p I`.
pub fn stress_fluid(grad_v: &Tensor2, p: f64, rho: f64, nu: f64) -> Tensor2 {
    let mu = rho * nu;
    let mut s = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            s[i][j] = mu * (grad_v[i][j] + grad_v[j][i]);
        }
        s[i][i] -= p;
    }
    s
}

/// Green-Lagrange strain `(H + H^T + H^T H) / 2`, i.e. `(F^T F - I) / 2`
/// with `F = I + H`.
pub fn strain_solid(grad_u: &Tensor2) -> Tensor2 {
    let hth = matmul(&transpose(grad_u), grad_u);
    let mut e = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            e[i][j] = 0.5 * (grad_u[i][j] + grad_u[j][i] + hth[i][j]);
        }
    }
    e
}

/// Directional derivative of the strain at `grad_u` in direction
/// `grad_du`.
pub fn strain_solid_derivative(grad_u: &Tensor2, grad_du: &Tensor2) -> Tensor2 {
    let a = matmul(&transpose(grad_du), grad_u);
    let b = matmul(&transpose(grad_u), grad_du);
    let mut e = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            e[i][j] = 0.5 * (grad_du[i][j] + grad_du[j][i] + a[i][j] + b[i][j]);
        }
    }
    e
}

/// St. Venant-Kirchhoff law `2 mu E + lambda tr(E) I`.
pub fn stress_from_strain(e: &Tensor2, mu: f64, lambda: f64) -> Tensor2 {
    let tr = e[0][0] + e[1][1];
    let mut s = [
        [2.0 * mu * e[0][0], 2.0 * mu * e[0][1]],
        [2.0 * mu * e[1][0], 2.0 * mu * e[1][1]],
    ];
    s[0][0] += lambda * tr;
    s[1][1] += lambda * tr;
    s
}

pub fn stress_solid(grad_u: &Tensor2, mu: f64, lambda: f64) -> Tensor2 {
    stress_from_strain(&strain_solid(grad_u), mu, lambda)
}
