//! Small special-function kit: gamma, unit-ball volumes, and the
//! uniform-ball Riesz self-energy constant used by the diagonal rule.

/// Lanczos coefficients, g = 7, 9 terms. Good to ~15 significant digits
/// for positive arguments.
const LANCZOS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Gamma function for real arguments (positive arguments in practice).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection formula.
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS[0];
        let t = x + 7.5;
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    std::f64::consts::PI.powf(nf / 2.0) / gamma(nf / 2.0 + 1.0)
}

/// Euler beta function.
pub fn beta(a: f64, b: f64) -> f64 {
    gamma(a) * gamma(b) / gamma(a + b)
}

/// Riesz self-energy of the uniformly charged unit ball in `R^n` with unit
/// total mass: `c(α,n) = ∫∫ |x−y|^{α−n} dμ(x) dμ(y)`. For a ball of radius
/// `ρ` the self-energy scales as `c(α,n)·ρ^{α−n}`.
///
/// Closed form via the overlap-volume representation of the distance
/// density: `c = (n·V_{n−1}/V_n) · (2^α/α) · B((α+1)/2, (n+1)/2)`.
pub fn ball_self_energy(alpha: f64, n: usize) -> f64 {
    assert!(n >= 1 && alpha > 0.0 && alpha < n as f64);
    let nf = n as f64;
    let ratio = unit_ball_volume(n - 1) / unit_ball_volume(n);
    nf * ratio * 2f64.powf(alpha) / alpha * beta((alpha + 1.0) / 2.0, (nf + 1.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn gamma_matches_exact_values() {
        assert!(rel(gamma(1.0), 1.0) < 1e-14);
        assert!(rel(gamma(5.0), 24.0) < 1e-14);
        assert!(rel(gamma(0.5), std::f64::consts::PI.sqrt()) < 1e-14);
        assert!(rel(gamma(2.5), 1.3293403881791370205) < 1e-13);
    }

    #[test]
    fn ball_volumes() {
        assert!(rel(unit_ball_volume(1), 2.0) < 1e-14);
        assert!(rel(unit_ball_volume(2), std::f64::consts::PI) < 1e-14);
        assert!(rel(unit_ball_volume(3), 4.0 / 3.0 * std::f64::consts::PI) < 1e-14);
    }

    /// The Newtonian value is classical: the uniformly charged unit ball
    /// with unit charge has `∫∫ |x−y|^{-1} = 6/5`.
    #[test]
    fn newtonian_ball_energy_is_six_fifths() {
        assert!(rel(ball_self_energy(2.0, 3), 1.2) < 1e-13);
    }

    /// Independent check of the closed form by direct quadrature of the
    /// overlap-volume integral `E = (n/V_n)·∫_0^2 t^{α-1} V_ov(t) dt`.
    #[test]
    fn closed_form_agrees_with_quadrature() {
        for &(alpha, n) in &[(1.0, 2usize), (1.5, 2), (1.0, 3), (1.5, 3), (2.0, 3), (0.7, 4)] {
            let nf = n as f64;
            let vn = unit_ball_volume(n);
            let vn1 = unit_ball_volume(n - 1);
            // V_ov(t) = 2·V_{n-1}·∫_{t/2}^1 (1-u²)^{(n-1)/2} du, by midpoint rule.
            let overlap = |t: f64| {
                let m = 20_000;
                let lo = t / 2.0;
                let h = (1.0 - lo) / m as f64;
                let mut s = 0.0;
                for k in 0..m {
                    let u = lo + (k as f64 + 0.5) * h;
                    s += (1.0 - u * u).powf((nf - 1.0) / 2.0);
                }
                2.0 * vn1 * s * h
            };
            // Substitute s = t^α to absorb the t^{α-1} endpoint
            // singularity: E = (n/V_n)·(1/α)·∫_0^{2^α} V_ov(s^{1/α}) ds.
            let m = 4_000;
            let upper = 2f64.powf(alpha);
            let h = upper / m as f64;
            let mut e = 0.0;
            for k in 0..m {
                let s = (k as f64 + 0.5) * h;
                e += overlap(s.powf(1.0 / alpha));
            }
            e *= nf / vn / alpha * h;
            let closed = ball_self_energy(alpha, n);
            assert!(
                rel(closed, e) < 2e-4,
                "alpha={alpha} n={n}: closed {closed} vs quadrature {e}"
            );
        }
    }
}
