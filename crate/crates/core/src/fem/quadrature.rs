//! Quadrature rules on triangles (barycentric points, weights summing to 1)
//! and on edges (parameter in [0, 1], weights summing to 1).

/// Three interior points, exact for degree 2.
pub fn triangle3() -> [([f64; 3], f64); 3] {
    let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
    let w = 1.0 / 3.0;
    [([a, b, b], w), ([b, a, b], w), ([b, b, a], w)]
}

/// Seven points, exact for degree 5.
pub fn triangle7() -> [([f64; 3], f64); 7] {
    let s = 15f64.sqrt();
    let (a1, b1) = ((6.0 - s) / 21.0, (9.0 + 2.0 * s) / 21.0);
    let (a2, b2) = ((6.0 + s) / 21.0, (9.0 - 2.0 * s) / 21.0);
    let (w1, w2) = ((155.0 - s) / 1200.0, (155.0 + s) / 1200.0);
    let c = 1.0 / 3.0;
    [
        ([c, c, c], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

/// Four-point Gauss–Legendre on [0, 1], exact for degree 7.
pub fn edge4() -> [(f64, f64); 4] {
    let r = 30f64.sqrt();
    let inner = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let outer = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let (wi, wo) = ((18.0 + r) / 72.0, (18.0 - r) / 72.0);
    [
        (0.5 * (1.0 - outer), wo),
        (0.5 * (1.0 - inner), wi),
        (0.5 * (1.0 + inner), wi),
        (0.5 * (1.0 + outer), wo),
    ]
}

/// Point with barycentric coordinates `l` in the triangle `c`.
pub fn point(c: &[[f64; 2]; 3], l: [f64; 3]) -> [f64; 2] {
    [
        l[0] * c[0][0] + l[1] * c[1][0] + l[2] * c[2][0],
        l[0] * c[0][1] + l[1] * c[1][1] + l[2] * c[2][1],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    // ∫ over the reference triangle of λ1^a λ2^b = a! b! / (a+b+2)!, times 2 for unit weights.
    fn exact(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        2.0 * f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn triangle_rules_are_exact() {
        for a in 0..=5u32 {
            for b in 0..=5 - a {
                let q7: f64 = triangle7().iter().map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32)).sum();
                assert!((q7 - exact(a, b)).abs() < 1e-15, "deg ({a},{b})");
                if a + b <= 2 {
                    let q3: f64 = triangle3().iter().map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32)).sum();
                    assert!((q3 - exact(a, b)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn edge_rule_is_exact_to_degree_seven() {
        for k in 0..=7 {
            let q: f64 = edge4().iter().map(|(t, w)| w * t.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15, "degree {k}");
        }
    }
}
