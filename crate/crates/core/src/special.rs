//! Special functions and unit-sphere measures.

use std::f64::consts::PI;

/// Gamma function (Lanczos approximation, relative accuracy ~1e-15 on (0, 10]).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Surface measure |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2) of the unit sphere in R^d.
///
/// `sphere_area(1) == 2` (the two points of S^0).
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0),
    }
}

/// Volume of the unit ball in R^d, pi^{d/2} / Gamma(d/2 + 1).
pub fn ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0),
    }
}

/// `int_u^1 (1 - t^2)^{(d-1)/2} dt` for `u` in [0, 1].
///
/// Half the normalised cap profile: the overlap of two unit balls at
/// centre distance `2u` is `2 |B^{d-1}| * cap_integral(d, u)`.
pub fn cap_integral(d: usize, u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    match d {
        1 => 1.0 - u,
        2 => 0.5 * (u.acos() - u * (1.0 - u * u).sqrt()),
        3 => 2.0 / 3.0 - u + u * u * u / 3.0,
        _ => {
            // substitute s = t^2: (1/2) int_{u^2}^1 s^{-1/2} (1-s)^m ds
            let m = (d as f64 - 1.0) / 2.0;
            let b = statrs::function::beta::beta(0.5, m + 1.0);
            let reg = statrs::function::beta::beta_reg(0.5, m + 1.0, u * u);
            0.5 * b * (1.0 - reg)
        }
    }
}

/// Sign function with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(1.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-14);
        // Gamma(1/4), reference value
        assert_relative_eq!(gamma(0.25), 3.625_609_908_221_908, max_relative = 1e-13);
        assert_relative_eq!(gamma(9.5), 119_292.461_994_609_4, max_relative = 1e-13);
    }

    #[test]
    fn sphere_measures() {
        for d in 1..=7 {
            let general = 2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0);
            assert_relative_eq!(sphere_area(d), general, max_relative = 1e-13);
            // |B^d| = |S^{d-1}| / d
            assert_relative_eq!(ball_volume(d), sphere_area(d) / d as f64, max_relative = 1e-13);
        }
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, max_relative = 1e-14);
    }

    #[test]
    fn cap_integral_general_path_matches_closed_forms() {
        // d = 5: (1-t^2)^2 integrates to 8/15 - u + 2u^3/3 - u^5/5
        for u in [0.0f64, 0.1, 0.5, 0.9, 1.0] {
            let exact = 8.0 / 15.0 - u + 2.0 * u.powi(3) / 3.0 - u.powi(5) / 5.0;
            assert!((cap_integral(5, u) - exact).abs() < 1e-12);
        }
        assert_relative_eq!(cap_integral(2, 0.0), PI / 4.0, max_relative = 1e-15);
    }
}
