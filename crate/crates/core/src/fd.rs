//! Central finite differences used as fallbacks where no closed form exists.
//!
//! First derivatives use the step `max(1e-5, 1e-5·|y|)`. Second derivatives
//! built from function values use `max(1e-4, 1e-4·|y|)`: with a 1e-5 step the
//! cancellation error of a second difference is about `eps/h² ≈ 1e-6`, which
//! would swamp the truncation error the callers want to observe.

use nalgebra::{DMatrix, DVector};

/// Step for first-order central differences at `y`.
pub fn step(y: &[f64]) -> f64 {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    (1e-5 * norm).max(1e-5)
}

/// Step for second differences of function values at `y`.
pub fn second_step(y: &[f64]) -> f64 {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    (1e-4 * norm).max(1e-4)
}

pub fn gradient<F: Fn(&[f64]) -> f64>(f: F, y: &[f64]) -> DVector<f64> {
    let h = step(y);
    let mut p = y.to_vec();
    DVector::from_iterator(
        y.len(),
        (0..y.len()).map(|i| {
            p[i] = y[i] + h;
            let fp = f(&p);
            p[i] = y[i] - h;
            let fm = f(&p);
            p[i] = y[i];
            (fp - fm) / (2.0 * h)
        }),
    )
}

pub fn laplacian<F: Fn(&[f64]) -> f64>(f: F, y: &[f64]) -> f64 {
    let h = second_step(y);
    let f0 = f(y);
    let mut p = y.to_vec();
    let mut acc = 0.0;
    for i in 0..y.len() {
        p[i] = y[i] + h;
        let fp = f(&p);
        p[i] = y[i] - h;
        let fm = f(&p);
        p[i] = y[i];
        acc += fp - 2.0 * f0 + fm;
    }
    acc / (h * h)
}

/// Hessian from function values (second differences, symmetric by construction).
pub fn hessian<F: Fn(&[f64]) -> f64>(f: F, y: &[f64]) -> DMatrix<f64> {
    let n = y.len();
    let h = second_step(y);
    let f0 = f(y);
    let mut p = y.to_vec();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        p[i] = y[i] + h;
        let fp = f(&p);
        p[i] = y[i] - h;
        let fm = f(&p);
        p[i] = y[i];
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                p[i] = y[i] + si * h;
                p[j] = y[j] + sj * h;
                let v = f(&p);
                p[i] = y[i];
                p[j] = y[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Jacobian of a vector-valued map by first-order central differences.
/// Column `j` is the derivative with respect to `y[j]`.
pub fn jacobian<F: Fn(&[f64]) -> DVector<f64>>(g: F, y: &[f64], rows: usize) -> DMatrix<f64> {
    let h = step(y);
    let mut p = y.to_vec();
    let mut out = DMatrix::zeros(rows, y.len());
    for j in 0..y.len() {
        p[j] = y[j] + h;
        let gp = g(&p);
        p[j] = y[j] - h;
        let gm = g(&p);
        p[j] = y[j];
        out.set_column(j, &((gp - gm) / (2.0 * h)));
    }
    out
}

/// Symmetrized Jacobian of a gradient map.
pub fn hessian_from_gradient<F: Fn(&[f64]) -> DVector<f64>>(g: F, y: &[f64]) -> DMatrix<f64> {
    let j = jacobian(g, y, y.len());
    (&j + j.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let f = |p: &[f64]| 3.0 * p[0] * p[0] + p[0] * p[1] - 2.0 * p[1] * p[1];
        let y = [0.3, -0.7];
        let g = gradient(f, &y);
        assert!((g[0] - (6.0 * 0.3 - 0.7)).abs() < 1e-9);
        assert!((g[1] - (0.3 + 2.8)).abs() < 1e-9);
        assert!((laplacian(f, &y) - 2.0).abs() < 1e-6);
        let h = hessian(f, &y);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-6);
        assert!((h[(1, 1)] + 4.0).abs() < 1e-6);
    }

    #[test]
    fn step_scales_with_norm() {
        assert_eq!(step(&[0.0, 0.0]), 1e-5);
        assert!((step(&[30.0, 40.0]) - 5e-4).abs() < 1e-18);
    }
}
