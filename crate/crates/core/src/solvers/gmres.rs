//! Restarted, right-preconditioned GMRES on field vectors.

use crate::space::FieldSpace;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves A x = b with x = M y, from x₀ = 0. Returns the last iterate even
/// when the tolerance is not reached.
pub fn gmres<U: FieldSpace>(
    apply: impl Fn(&U) -> U,
    precond: impl Fn(&U) -> U,
    b: &U,
    rtol: f64,
    restart: usize,
    max_iter: usize,
) -> (U, GmresOutcome) {
    let bnorm = b.l2_norm();
    let mut x = b.scaled(0.0);
    if bnorm == 0.0 {
        return (x, GmresOutcome { iterations: 0, relative_residual: 0.0, converged: true });
    }
    let target = rtol * bnorm;
    let mut total = 0;
    let mut rel = 1.0;
    while total < max_iter {
        let r = if total == 0 { b.clone() } else { b.axpy(-1.0, &apply(&x)) };
        let beta = r.l2_norm();
        rel = beta / bnorm;
        if beta <= target {
            return (x, GmresOutcome { iterations: total, relative_residual: rel, converged: true });
        }
        let m = restart.min(max_iter - total);
        let mut v: Vec<U> = vec![r.scaled(1.0 / beta)];
        let mut z: Vec<U> = Vec::with_capacity(m);
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m {
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z.push(zk);
            // Modified Gram–Schmidt, repeated once against cancellation.
            for _ in 0..2 {
                for i in 0..=k {
                    let hik = w.dot(&v[i]);
                    hess[i][k] += hik;
                    w = w.axpy(-hik, &v[i]);
                }
            }
            let wn = w.l2_norm();
            hess[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let denom = hess[k][k].hypot(hess[k + 1][k]);
            if denom == 0.0 {
                break;
            }
            cs[k] = hess[k][k] / denom;
            sn[k] = hess[k + 1][k] / denom;
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k += 1;
            if g[k].abs() <= target || wn == 0.0 {
                break;
            }
            v.push(w.scaled(1.0 / wn));
        }
        // Back substitution on the k×k triangle.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| hess[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            x = x.axpy(*yi, zi);
        }
        if k == 0 {
            break;
        }
    }
    let r = b.axpy(-1.0, &apply(&x));
    rel = rel.min(r.l2_norm() / bnorm);
    (x, GmresOutcome { iterations: total, relative_residual: rel, converged: rel <= rtol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{RadialField, RadialGrid};

    #[test]
    fn solves_shifted_laplacian_with_and_without_preconditioning() {
        let grid = RadialGrid::new(10.0, 129).unwrap();
        let exact = RadialField::from_fn(grid, |r| (-r * r).exp() * (2.0 - r));
        let omega = 1.5;
        let potential = RadialField::from_fn(grid, |r| 3.0 * (-r).exp());
        // A = -Δ + ω - V, a compact perturbation of the preconditioner.
        let apply = |h: &RadialField| {
            h.neg_laplacian().axpy(omega, h).zip_map(&h.zip_map(&potential, |a, b| a * b), |a, b| a - b)
        };
        let b = apply(&exact);
        let (x, out) = gmres(apply, |v: &RadialField| v.helmholtz_inverse(omega).unwrap(), &b, 1e-12, 50, 200);
        assert!(out.converged, "{out:?}");
        assert!(out.iterations < 40);
        assert!(x.max_abs_diff(&exact).unwrap() < 1e-9);

        let (x2, out2) = gmres(apply, |v: &RadialField| v.clone(), &b, 1e-10, 30, 3000);
        assert!(out2.converged, "{out2:?}");
        assert!(x2.max_abs_diff(&exact).unwrap() < 1e-6);
    }

    #[test]
    fn zero_rhs() {
        let grid = RadialGrid::new(1.0, 32).unwrap();
        let b = RadialField::zeros(grid);
        let (x, out) = gmres(|h: &RadialField| h.clone(), |h: &RadialField| h.clone(), &b, 1e-12, 10, 10);
        assert_eq!(x.sup_norm(), 0.0);
        assert_eq!(out.iterations, 0);
    }
}
