//! Closed-form fields used as data and as quadrature oracles: the plane
//! incident wave and a compactly supported bump with analytic derivatives.

use crate::coefficients::MatValue;
use crate::C64;

/// Plane wave `u(x) = exp(-s <dir, x>)`; solves `-Delta u + s^2 u = 0`
/// exactly when `|dir| = 1`.
#[derive(Debug, Clone, Copy)]
pub struct IncidentWave {
    pub s: C64,
    pub dir: [f64; 3],
}

impl IncidentWave {
    pub fn value(&self, x: &[f64]) -> C64 {
        let dx: f64 = x.iter().zip(&self.dir).map(|(a, b)| a * b).sum();
        (-self.s * dx).exp()
    }

    /// `grad u = -s dir u`.
    pub fn gradient(&self, x: &[f64]) -> [C64; 3] {
        let v = self.value(x);
        let mut g = [C64::new(0.0, 0.0); 3];
        for k in 0..3 {
            g[k] = -self.s * self.dir[k] * v;
        }
        g
    }

    /// Co-normal `<A grad u, n>` for a constant matrix value.
    pub fn conormal(&self, x: &[f64], a: &MatValue, n: &[f64; 3], dim: usize) -> C64 {
        let g = self.gradient(x);
        let mut out = C64::new(0.0, 0.0);
        for r in 0..dim {
            let mut ag = C64::new(0.0, 0.0);
            for c in 0..dim {
                ag += a[r][c] * g[c];
            }
            out += ag * n[r];
        }
        out
    }
}

/// `v(x) = (1 - t)^3` with `t = |x - c|^2 / r^2` inside the ball, zero
/// outside; twice continuously differentiable with closed-form Hessian.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Bump {
    fn t(&self, x: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        r2 / (self.radius * self.radius)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let t = self.t(x);
        if t >= 1.0 {
            0.0
        } else {
            (1.0 - t).powi(3)
        }
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 3] {
        let t = self.t(x);
        let mut g = [0.0; 3];
        if t < 1.0 {
            let gp = -3.0 * (1.0 - t) * (1.0 - t);
            for (k, gk) in g.iter_mut().enumerate().take(x.len()) {
                *gk = gp * 2.0 * (x[k] - self.center[k]) / (self.radius * self.radius);
            }
        }
        g
    }

    /// `A : Hess(v)` for a constant matrix value, so that
    /// `-div(A grad v) = -A : Hess(v)`.
    pub fn a_hess(&self, x: &[f64], a: &MatValue, dim: usize) -> f64 {
        let t = self.t(x);
        if t >= 1.0 {
            return 0.0;
        }
        let r2 = self.radius * self.radius;
        let gp = -3.0 * (1.0 - t) * (1.0 - t);
        let gpp = 6.0 * (1.0 - t);
        // Hess = (2 g'/r^2) I + (4 g''/r^4) (x-c)(x-c)^T
        let tr_a: f64 = (0..dim).map(|k| a[k][k]).sum();
        let mut quad = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                quad += a[r][c] * (x[r] - self.center[r]) * (x[c] - self.center[c]);
            }
        }
        2.0 * gp / r2 * tr_a + 4.0 * gpp / (r2 * r2) * quad
    }

    /// `L_j(s) v = -A : Hess(v) + s^2 p v` for cellwise-constant `A`, `p`.
    pub fn apply_operator(&self, x: &[f64], a: &MatValue, p: f64, s: C64, dim: usize) -> C64 {
        C64::new(-self.a_hess(x, a, dim), 0.0) + s * s * p * self.value(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::identity_mat;

    #[test]
    fn incident_wave_satisfies_helmholtz_identity() {
        // -Delta u + s^2 u = (-s^2 <d,d> + s^2) u = 0 for |d| = 1.
        let w = IncidentWave {
            s: C64::new(1.5, 0.7),
            dir: [0.6, 0.8, 0.0],
        };
        let d2: f64 = w.dir.iter().map(|x| x * x).sum();
        assert!((d2 - 1.0).abs() < 1e-15);
        // Laplacian of exp(-s<d,x>) is s^2 |d|^2 u; check via finite differences.
        let x = [0.3, -0.2, 0.0];
        let h = 1e-5;
        let mut lap = C64::new(0.0, 0.0);
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            lap += (w.value(&xp) - 2.0 * w.value(&x) + w.value(&xm)) / (h * h);
        }
        let resid = -lap + w.s * w.s * w.value(&x);
        assert!(resid.norm() < 1e-5);
    }

    #[test]
    fn incident_wave_at_origin_is_one() {
        let w = IncidentWave {
            s: C64::new(1.0, 0.0),
            dir: [1.0, 0.0, 0.0],
        };
        assert_eq!(w.value(&[0.0, 0.0]), C64::new(1.0, 0.0));
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let b = Bump {
            center: [0.1, -0.2, 0.0],
            radius: 0.5,
        };
        let x = [0.25, -0.05];
        let h = 1e-6;
        let g = b.gradient(&x);
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (b.value(&xp) - b.value(&xm)) / (2.0 * h);
            assert!((g[k] - fd).abs() < 1e-8, "grad component {k}");
        }
        // Laplacian against a_hess with A = I.
        let mut lap_fd = 0.0;
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            lap_fd += (b.value(&xp) - 2.0 * b.value(&x) + b.value(&xm)) / (h * h);
        }
        let lap = b.a_hess(&x, &identity_mat(), 2);
        assert!((lap - lap_fd).abs() < 1e-4);
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let b = Bump {
            center: [0.0, 0.0, 0.0],
            radius: 0.3,
        };
        assert_eq!(b.value(&[0.5, 0.0]), 0.0);
        assert_eq!(b.gradient(&[0.5, 0.0]), [0.0; 3]);
        assert_eq!(b.a_hess(&[0.5, 0.0], &identity_mat(), 2), 0.0);
    }
}
