//! Prox of `phi(nu - xi)` restricted to the nonnegative quadrant.

use super::inner::ProxPair;

/// Prox of `Phi(nu, xi) = phi(nu - xi)` on `[0, inf)^2` for an even convex
/// `phi`, given `prox(gamma, x) = prox_{gamma phi}(x)`.
pub fn prox_difference<F: Fn(f64, f64) -> f64>(prox: F, nu_bar: f64, xi_bar: f64) -> ProxPair {
    let s = nu_bar + xi_bar;
    let pi1 = prox(2.0, nu_bar - xi_bar);
    if pi1.abs() < s {
        return ProxPair { u: 0.5 * (s + pi1), xi: 0.5 * (s - pi1) };
    }
    let pi2 = prox(1.0, xi_bar);
    if pi2 > 0.0 && pi2 >= s {
        return ProxPair { u: 0.0, xi: pi2 };
    }
    let pi3 = prox(1.0, nu_bar);
    if pi3 > 0.0 && pi3 >= s {
        return ProxPair { u: pi3, xi: 0.0 };
    }
    ProxPair { u: 0.0, xi: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use divprox_oracle::{grid_prox_oracle, GridOracleConfig};
    use proptest::prelude::*;

    fn half_square(g: f64, x: f64) -> f64 {
        x / (1.0 + g)
    }

    fn abs_prox(g: f64, x: f64) -> f64 {
        x.signum() * (x.abs() - g).max(0.0)
    }

    #[test]
    fn quadratic_examples() {
        let p = prox_difference(half_square, 2.0, 1.0);
        assert!((p.u - 5.0 / 3.0).abs() < 1e-15 && (p.xi - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(prox_difference(half_square, -1.0, -1.0), ProxPair { u: 0.0, xi: 0.0 });
        assert_eq!(prox_difference(half_square, 0.7, 0.7), ProxPair { u: 0.7, xi: 0.7 });
    }

    fn oracle(phi: impl Fn(f64) -> f64, nu: f64, xi: f64) -> [f64; 2] {
        grid_prox_oracle(
            |a, b| {
                if a < 0.0 || b < 0.0 {
                    f64::INFINITY
                } else {
                    phi(a - b) + 0.5 * ((a - nu).powi(2) + (b - xi).powi(2))
                }
            },
            [0.0, 0.0],
            [6.0, 6.0],
            GridOracleConfig { coarse_step: 0.02, ..Default::default() },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn quadratic_matches_oracle(nu in -3.0f64..4.0, xi in -3.0f64..4.0) {
            let p = prox_difference(half_square, nu, xi);
            let o = oracle(|t| 0.5 * t * t, nu, xi);
            prop_assert!((p.u - o[0]).abs() < 1e-6 && (p.xi - o[1]).abs() < 1e-6, "{p:?} {o:?}");
        }

        #[test]
        fn absolute_value_matches_oracle(nu in -3.0f64..4.0, xi in -3.0f64..4.0) {
            let p = prox_difference(abs_prox, nu, xi);
            let o = oracle(|t| t.abs(), nu, xi);
            prop_assert!((p.u - o[0]).abs() < 1e-6 && (p.xi - o[1]).abs() < 1e-6, "{p:?} {o:?}");
        }
    }
}
