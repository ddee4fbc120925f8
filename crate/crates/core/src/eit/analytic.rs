//! Closed-form solution of the Neumann problem for a centred circular
//! inclusion with flux `cos(M ϑ)`.
//!
//! With `s = √k`, the solution is
//!
//! ```text
//! u = C0 J_M(−i ρ/s_I) cos Mϑ                          ρ ≤ ρ_I
//! u = [C1 J_M(−i ρ/s_E) + C2 Y_M(−i ρ/s_E)] cos Mϑ     ρ_I < ρ ≤ ρ_E
//! ```
//!
//! For `M = 5` and real `x > 0`, `J_5(−ix) = −i I_5(x)` and
//! `Y_5(−ix) = −I_5(x) − (2i/π) K_5(x)`, so everything reduces to real
//! modified Bessel functions with complex coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::bessel::{bessel_i, bessel_i_prime, bessel_k, bessel_k_prime};
use crate::{Error, Result};

const ORDER: u32 = 5;

#[derive(Clone, Copy, Debug)]
pub struct AnalyticReference {
    pub rho_i: f64,
    pub rho_e: f64,
    pub k_i: f64,
    pub k_e: f64,
    pub c: [Complex64; 3],
}

/// Branch of the piecewise formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Inner,
    Outer,
}

impl AnalyticReference {
    /// Validation configuration: ρ_E = 5, ρ_I = 4, k_E = 1, k_I = 10, with
    /// tabulated constants.
    pub fn validation() -> Self {
        AnalyticReference {
            rho_i: 4.0,
            rho_e: 5.0,
            k_i: 10.0,
            k_e: 1.0,
            c: [
                Complex64::new(-6.3e-9, 40.39491005),
                Complex64::new(1.30145994, 0.325482825),
                Complex64::new(1.5e-11, -1.301459935),
            ],
        }
    }

    /// Same geometry and conductivities with constants obtained by solving
    /// the interface and boundary conditions.
    pub fn solved(rho_i: f64, rho_e: f64, k_i: f64, k_e: f64) -> Self {
        let (si, se) = (k_i.sqrt(), k_e.sqrt());
        let xi = rho_i / si;
        let (xe_i, xe_e) = (rho_i / se, rho_e / se);
        // unknowns a, b, c of u_in = a I(ρ/s_I), u_out = b I(ρ/s_E) + c K(ρ/s_E)
        let m = [
            [bessel_i(ORDER, xi), -bessel_i(ORDER, xe_i), -bessel_k(ORDER, xe_i)],
            [si * bessel_i_prime(ORDER, xi), -se * bessel_i_prime(ORDER, xe_i), -se * bessel_k_prime(ORDER, xe_i)],
            [0.0, se * bessel_i_prime(ORDER, xe_e), se * bessel_k_prime(ORDER, xe_e)],
        ];
        let [a, b, c] = solve3(m, [0.0, 0.0, 1.0]);
        let i = Complex64::i();
        let c0 = i * a;
        let c2 = i * (PI / 2.0) * c;
        let c1 = i * (b + c2);
        AnalyticReference { rho_i, rho_e, k_i, k_e, c: [c0, c1, c2] }
    }

    /// Complex radial factor and its ρ-derivative on the given branch.
    pub fn radial_complex(&self, rho: f64, branch: Branch) -> (Complex64, Complex64) {
        let i = Complex64::i();
        match branch {
            Branch::Inner => {
                let s = self.k_i.sqrt();
                let x = rho / s;
                let f = -i * self.c[0];
                (f * bessel_i(ORDER, x), f * bessel_i_prime(ORDER, x) / s)
            }
            Branch::Outer => {
                let s = self.k_e.sqrt();
                let x = rho / s;
                let ci = -i * self.c[1] - self.c[2];
                let ck = -(2.0 / PI) * i * self.c[2];
                (
                    ci * bessel_i(ORDER, x) + ck * bessel_k(ORDER, x),
                    (ci * bessel_i_prime(ORDER, x) + ck * bessel_k_prime(ORDER, x)) / s,
                )
            }
        }
    }

    /// Real radial factor `f(ρ)` and `f'(ρ)`; the imaginary residue left by
    /// the rounded constants is discarded.
    pub fn radial(&self, rho: f64, branch: Branch) -> (f64, f64) {
        let (f, df) = self.radial_complex(rho, branch);
        (f.re, df.re)
    }

    fn branch_of(&self, rho: f64) -> Branch {
        if rho <= self.rho_i {
            Branch::Inner
        } else {
            Branch::Outer
        }
    }

    fn check(&self, rho: f64) -> Result<()> {
        if (0.0..=self.rho_e * (1.0 + 1e-12)).contains(&rho) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("radius {rho} outside [0, {}]", self.rho_e)))
        }
    }

    /// `u(ρ, ϑ)` on the branch selected by `ρ`.
    pub fn value(&self, rho: f64, theta: f64) -> Result<f64> {
        self.check(rho)?;
        Ok(self.radial(rho, self.branch_of(rho)).0 * (ORDER as f64 * theta).cos())
    }

    /// Value and Cartesian gradient at `p`, on an explicit branch (so that
    /// a polygonal interface can be integrated element by element).
    pub fn eval(&self, p: [f64; 2], branch: Branch) -> ([f64; 2], f64) {
        let rho = p[0].hypot(p[1]);
        let th = p[1].atan2(p[0]);
        let (f, df) = self.radial(rho, branch);
        let m = ORDER as f64;
        let (c, s) = ((m * th).cos(), (m * th).sin());
        let u = f * c;
        if rho == 0.0 {
            return ([0.0, 0.0], u);
        }
        let (ct, st) = (th.cos(), th.sin());
        let grad = [df * ct * c + m * f * st * s / rho, df * st * c - m * f * ct * s / rho];
        (grad, u)
    }

    pub fn value_at(&self, p: [f64; 2]) -> Result<f64> {
        self.value(p[0].hypot(p[1]), p[1].atan2(p[0]))
    }
}

/// Outer-boundary value `f(ρ_E)` of the solution `f(ρ) cos Mϑ` for flux
/// `cos(M ϑ)` and a centred inclusion of radius `rho_i`; the same factor
/// applies to `sin(M ϑ)`.
pub fn concentric_trace_factor(order: u32, rho_i: f64, rho_e: f64, k_i: f64, k_e: f64) -> f64 {
    let (si, se) = (k_i.sqrt(), k_e.sqrt());
    let (xi, xe_i, xe_e) = (rho_i / si, rho_i / se, rho_e / se);
    let m = [
        [bessel_i(order, xi), -bessel_i(order, xe_i), -bessel_k(order, xe_i)],
        [si * bessel_i_prime(order, xi), -se * bessel_i_prime(order, xe_i), -se * bessel_k_prime(order, xe_i)],
        [0.0, se * bessel_i_prime(order, xe_e), se * bessel_k_prime(order, xe_e)],
    ];
    let [_, b, c] = solve3(m, [0.0, 0.0, 1.0]);
    b * bessel_i(order, xe_e) + c * bessel_k(order, xe_e)
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x
}
