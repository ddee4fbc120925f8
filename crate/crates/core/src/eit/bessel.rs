//! Modified Bessel functions of integer order for real positive arguments.

/// `I_n(x)` by its power series (all terms positive, no cancellation).
pub fn bessel_i(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let q = 0.25 * x * x;
    // leading term (x/2)^n / n!
    let mut term = (1..=n).fold(1.0, |acc, k| acc * 0.5 * x / k as f64);
    let mut sum = term;
    for k in 1..500 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// `K_n(x) = ∫₀^∞ exp(−x cosh t) cosh(n t) dt`, evaluated with the
/// trapezoidal rule, which converges exponentially for this integrand.
pub fn bessel_k(n: u32, x: f64) -> f64 {
    assert!(x > 0.0, "K_n is singular at 0");
    let nu = n as f64;
    let h: f64 = 0.05;
    let mut sum = 0.5 * (-x).exp();
    let mut t: f64 = h;
    loop {
        let c = t.cosh();
        let term = 0.5 * ((nu * t - x * c).exp() + (-nu * t - x * c).exp());
        sum += term;
        if term < 1e-18 * sum && x * c > nu * t {
            break;
        }
        t += h;
    }
    h * sum
}

/// `I_n'(x) = I_{n−1}(x) − (n/x) I_n(x)`.
pub fn bessel_i_prime(n: u32, x: f64) -> f64 {
    if n == 0 {
        return bessel_i(1, x);
    }
    if x == 0.0 {
        return if n == 1 { 0.5 } else { 0.0 };
    }
    bessel_i(n - 1, x) - n as f64 / x * bessel_i(n, x)
}

/// `K_n'(x) = −K_{n−1}(x) − (n/x) K_n(x)`.
pub fn bessel_k_prime(n: u32, x: f64) -> f64 {
    if n == 0 {
        return -bessel_k(1, x);
    }
    -bessel_k(n - 1, x) - n as f64 / x * bessel_k(n, x)
}
