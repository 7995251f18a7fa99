//! Closed-form quantities used as independent checks on the simulator and
//! the dispatcher: expected drift of the decision statistic and Erlang-B.
//!
//! Both drift expressions share the series
//! `D = sum_{s>=1} lambda/(lambda+s*theta)^2 - lambda/(lambda+mu+s*theta)^2`.
//! It is summed term-wise (each term positive, convex and decreasing in `s`)
//! until the term drops below `2 * term_cutoff`; the remaining tail lies
//! between `I(S+1)` and `I(S+1/2)` with `I(x)` the tail integral from `x`, and
//! the midpoint of that bracket is added. The error is at most `d(S)/4`.

/// Truncation control for the infinite series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTolerance {
    pub term_cutoff: f64,
    pub max_terms: u64,
}

impl Default for SeriesTolerance {
    fn default() -> Self {
        Self {
            term_cutoff: 1e-14,
            max_terms: 10_000_000,
        }
    }
}

fn term(lambda: f64, mu: f64, theta: f64, s: f64) -> f64 {
    let a = lambda + s * theta;
    let b = a + mu;
    lambda * mu * (a + b) / (a * a * b * b)
}

/// `int_x^inf term(s) ds`.
fn tail_integral(lambda: f64, mu: f64, theta: f64, x: f64) -> f64 {
    let a = lambda + x * theta;
    lambda / theta * mu / (a * (a + mu))
}

/// The series `D` with truncation error at most `tol.term_cutoff / 2`
/// (or `d(max_terms)/4` if the cap is reached first).
pub fn drift_series(lambda: f64, mu: f64, theta: f64, tol: SeriesTolerance) -> f64 {
    assert!(tol.term_cutoff > 0.0, "term cutoff must be positive");
    let mut sum = 0.0;
    let mut s = 1u64;
    loop {
        let d = term(lambda, mu, theta, s as f64);
        sum += d;
        if d <= 2.0 * tol.term_cutoff || s >= tol.max_terms {
            break;
        }
        s += 1;
    }
    let x = s as f64;
    let lower = tail_integral(lambda, mu, theta, x + 1.0);
    let upper = tail_integral(lambda, mu, theta, x + 0.5);
    sum + 0.5 * (lower + upper)
}

/// Expected increment of the decision statistic between consecutive
/// acceptances in a single-server system under the dispatcher.
pub fn single_server_drift(lambda: f64, mu: f64, theta: f64) -> f64 {
    single_server_drift_with(lambda, mu, theta, SeriesTolerance::default())
}

pub fn single_server_drift_with(lambda: f64, mu: f64, theta: f64, tol: SeriesTolerance) -> f64 {
    let series = drift_series(lambda, mu, theta, tol);
    -lambda / (mu * (lambda + mu)) + (lambda + mu) / mu * series
}

/// Per-busy-server drift coefficient of the multi-server statistic:
/// `E[X_{i+1} - X_i | N_i, A_i] = delta_tilde * (N_i + A_i)`.
pub fn delta_tilde(lambda: f64, mu: f64, theta: f64) -> f64 {
    delta_tilde_with(lambda, mu, theta, SeriesTolerance::default())
}

pub fn delta_tilde_with(lambda: f64, mu: f64, theta: f64, tol: SeriesTolerance) -> f64 {
    -lambda / ((lambda + mu) * (lambda + mu)) + drift_series(lambda, mu, theta, tol)
}

/// Erlang-B blocking probability via `B_j = rho B_{j-1} / (j + rho B_{j-1})`.
pub fn erlang_b(lambda: f64, mu: f64, k: u32) -> f64 {
    let rho = lambda / mu;
    (1..=k).fold(1.0, |b, j| rho * b / (f64::from(j) + rho * b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::mle::g_raw;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Exp};

    /// Direct sum of the two series separately, far past convergence of the
    /// difference, plus both tails from the integral test. Independent of the
    /// combined-term bracket used above.
    fn brute_series(lambda: f64, mu: f64, theta: f64) -> f64 {
        let n = 2_000_000u64;
        let mut a = 0.0;
        let mut b = 0.0;
        for s in (1..=n).rev() {
            let x = lambda + s as f64 * theta;
            a += lambda / (x * x);
            b += lambda / ((x + mu) * (x + mu));
        }
        let xa = lambda + (n as f64 + 0.5) * theta;
        a += lambda / (theta * xa);
        b += lambda / (theta * (xa + mu));
        a - b
    }

    #[test]
    fn series_matches_brute_force() {
        for &(l, m, t) in &[(5.0, 2.05, 1.3), (5.0, 1.05, 1.3), (0.5, 7.0, 0.3), (2.0, 0.6, 1.5)] {
            let fast = drift_series(l, m, t, SeriesTolerance::default());
            let slow = brute_series(l, m, t);
            assert!((fast - slow).abs() < 1e-9, "{l} {m} {t}: {fast} vs {slow}");
        }
    }

    #[test]
    fn doubling_cap_is_stable() {
        let tight = SeriesTolerance { term_cutoff: 1e-14, max_terms: 10_000_000 };
        let double = SeriesTolerance { max_terms: 20_000_000, ..tight };
        for &(l, m, t) in &[(5.0, 2.05, 1.3), (0.1, 0.2, 0.05), (10.0, 10.0, 1.3)] {
            let a = delta_tilde_with(l, m, t, tight);
            let b = delta_tilde_with(l, m, t, double);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn regime_signs() {
        assert!(single_server_drift(5.0, 2.05, 1.3) > 0.0);
        assert!(single_server_drift(5.0, 1.05, 1.3) < 0.0);
        assert!(delta_tilde(5.0, 2.05, 1.3) > 0.0);
        assert!(delta_tilde(5.0, 1.05, 1.3) < 0.0);
    }

    #[test]
    fn delta_tilde_vanishes_at_boundary() {
        for &l in &[0.3, 1.0, 5.0, 12.0] {
            for &t in &[0.2, 1.3, 4.0] {
                assert!(delta_tilde(l, t, t).abs() < 1e-10, "l={l} t={t}");
            }
        }
    }

    #[test]
    fn single_server_drift_monte_carlo() {
        // One busy cycle: service E ~ Exp(mu); arrivals while busy contribute
        // -T each, the first arrival after completion contributes g(T, 1, theta).
        let (lambda, mu, theta) = (5.0, 2.05, 1.3);
        let mut rng = rand_pcg::Pcg64Mcg::seed_from_u64(2024);
        let service = Exp::new(mu).unwrap();
        let inter = Exp::new(lambda).unwrap();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let e = service.sample(&mut rng);
            let mut elapsed = 0.0;
            let mut y = 0.0;
            loop {
                let t = inter.sample(&mut rng);
                if elapsed + t >= e {
                    y += g_raw(t, 1, theta);
                    break;
                }
                elapsed += t;
                y -= t;
            }
            sum += y;
            sq += y * y;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = single_server_drift(lambda, mu, theta);
        assert!((mean - exact).abs() < 3.0 * se, "mc={mean} exact={exact} se={se}");
    }

    #[test]
    fn erlang_b_small_cases() {
        assert!((erlang_b(1.0, 1.0, 1) - 0.5).abs() < 1e-15);
        // rho = 2, k = 2: (2^2/2) / (1 + 2 + 2) = 0.4
        assert!((erlang_b(2.0, 1.0, 2) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn erlang_b_decreasing_in_servers() {
        for &rho in &[0.5, 1.0, 2.0, 5.0, 20.0] {
            let mut prev = 1.0;
            for k in 1..60 {
                let b = erlang_b(rho, 1.0, k);
                assert!(b < prev);
                prev = b;
            }
        }
    }
}
