//! Filters with closed-form action on the Werner and rank-two families.

use super::Filter;
use crate::error::{Error, Result};
use crate::qmat::{diag, direct_sum_zero, sigma_x, sigma_z};

/// `A = σ_z ⊕ 0`, `B = σ_x ⊕ 0`: project both sides onto a qubit and
/// rotate Bob's half so the antisymmetric part lands on `|Φ+⟩`.
pub fn werner_filter(d: usize) -> Result<Filter> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("d = {d} < 2")));
    }
    Filter::new(
        direct_sum_zero(&sigma_z(), d - 2),
        direct_sum_zero(&sigma_x(), d - 2),
    )
}

fn werner_n(d: usize, v: f64) -> f64 {
    let d = d as f64;
    (d + 1.0) * (1.0 - v) + 3.0 * v * (d - 1.0)
}

/// Success probability of [`werner_filter`] on `W(v)`.
pub fn werner_filtered_p(d: usize, v: f64) -> f64 {
    let df = d as f64;
    2.0 * werner_n(d, v) / (df * (df * df - 1.0))
}

/// FEF of `W(v)` after [`werner_filter`].
pub fn werner_filtered_fef(d: usize, v: f64) -> f64 {
    let df = d as f64;
    2.0 * (df + 1.0) * (1.0 - v) / (df * werner_n(d, v))
}

/// `κ = (d−1)q / (d(1−q))`, the attenuation maximizing the cost `K`.
pub fn rank2_kappa(d: usize, q: f64) -> f64 {
    let d = d as f64;
    (d - 1.0) * q / (d * (1.0 - q))
}

/// `κ′ = q / (q + d(1−q))`, the attenuation maximizing the filtered FEF.
pub fn rank2_kappa_prime(d: usize, q: f64) -> f64 {
    q / (q + d as f64 * (1.0 - q))
}

/// One-sided `diag[κ, 1, …, 1] ⊗ I`.
pub fn rank2_filter(d: usize, kappa: f64) -> Result<Filter> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::KappaOutOfRange(kappa));
    }
    let mut s = vec![1.0; d];
    s[0] = kappa;
    Ok(Filter::one_sided(diag(&s)))
}

pub fn rank2_filter_k(d: usize, q: f64) -> Result<Filter> {
    validate_q(q)?;
    let df = d as f64;
    // κ ≤ 1 requires q < d/(2d−1); the endpoint itself is excluded.
    if q >= df / (2.0 * df - 1.0) {
        return Err(Error::KappaOutOfRange(if q < 1.0 {
            rank2_kappa(d, q)
        } else {
            f64::INFINITY
        }));
    }
    rank2_filter(d, rank2_kappa(d, q))
}

pub fn rank2_filter_f(d: usize, q: f64) -> Result<Filter> {
    validate_q(q)?;
    rank2_filter(d, rank2_kappa_prime(d, q))
}

fn validate_q(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("q = {q} outside (0, 1]")))
    }
}

/// `p_κ = κ²(q/d + 1 − q) + (q/d)(d − 1)` for `diag[κ,1,…]` on `ρ(q)`.
pub fn rank2_filtered_p(d: usize, q: f64, kappa: f64) -> f64 {
    let d = d as f64;
    kappa * kappa * (q / d + 1.0 - q) + q / d * (d - 1.0)
}

/// Overlap with `|Φ+⟩` of `ρ(q)` after `diag[κ,1,…]`:
/// `q(κ + d − 1)² / (d² p_κ)`.
pub fn rank2_filtered_fef(d: usize, q: f64, kappa: f64) -> f64 {
    let df = d as f64;
    let t = kappa + df - 1.0;
    q * t * t / (df * df * rank2_filtered_p(d, q, kappa))
}

/// `A_n = diag[1/n, 1, …, 1]`, `B_n = diag[1, 1/n, …, 1/n]`.
pub fn quasidistill_filter(d: usize, n: u32) -> Result<Filter> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let inv = 1.0 / n as f64;
    let mut a = vec![1.0; d];
    a[0] = inv;
    let mut b = vec![inv; d];
    b[0] = 1.0;
    Filter::new(diag(&a), diag(&b))
}

/// `p_n = (q(n²−1) + 1)/n⁴`
pub fn quasidistill_p(q: f64, n: u32) -> f64 {
    let n2 = (n as f64).powi(2);
    (q * (n2 - 1.0) + 1.0) / (n2 * n2)
}

/// Weight `q′ = qn²/(qn² + 1 − q)` of `|Φ+⟩` in the filtered state, which is
/// again of the rank-two form. Equal to `1 − (1−q)/(q(n²−1) + 1)`.
pub fn quasidistill_q(q: f64, n: u32) -> f64 {
    let n2 = (n as f64).powi(2);
    1.0 - (1.0 - q) / (q * (n2 - 1.0) + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{rank_two, werner, RankTwoParams, WernerParams};
    use crate::filter::{apply_filter, cost_k};
    use crate::qmat::{op_norm, CMatrix};

    #[test]
    fn werner_filter_shape() {
        let f = werner_filter(3).unwrap();
        assert_eq!(f.a()[(0, 0)].re, 1.0);
        assert_eq!(f.a()[(1, 1)].re, -1.0);
        assert_eq!(f.a()[(2, 2)].re, 0.0);
        assert_eq!(f.b()[(0, 1)].re, 1.0);
        assert!((op_norm(f.a()) - 1.0).abs() < 1e-14 && (op_norm(f.b()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn werner_filter_on_singlet_like_state() {
        let rho = werner(WernerParams::new(3, 0.0).unwrap());
        let out = apply_filter(&rho, &werner_filter(3).unwrap()).unwrap();
        assert!((out.p_success - 1.0 / 3.0).abs() < 1e-12);
        assert!((out.fef_after - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn werner_threshold_saturates() {
        let v_cr = 0.4;
        assert!((werner_filtered_fef(3, v_cr) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn kappa_values() {
        assert!((rank2_kappa(2, 1.0 / 3.0) - 0.25).abs() < 1e-15);
        assert!((rank2_kappa(3, 1.0 / 3.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((rank2_kappa_prime(2, 1.0 / 3.0) - 0.2).abs() < 1e-15);
        assert!((rank2_kappa_prime(2, 1.0 - 1e-12) - 1.0).abs() < 1e-10);
        assert!(matches!(rank2_filter_k(2, 2.0 / 3.0), Err(Error::KappaOutOfRange(_))));
        assert!(matches!(rank2_filter_k(2, 1.0), Err(Error::KappaOutOfRange(_))));
        assert!(rank2_filter_k(3, 0.59).is_ok());
    }

    #[test]
    fn rank2_worked_point() {
        let rho = rank_two(RankTwoParams::new(2, 1.0 / 3.0).unwrap());
        let out = apply_filter(&rho, &rank2_filter_k(2, 1.0 / 3.0).unwrap()).unwrap();
        assert!((out.p_success - 7.0 / 32.0).abs() < 1e-12);
        assert!((out.fef_after - 25.0 / 42.0).abs() < 1e-10);
        let k = cost_k(&rho, &rank2_filter_k(2, 1.0 / 3.0).unwrap()).unwrap();
        assert!((k - (7.0 / 32.0 * 25.0 / 42.0 + 25.0 / 64.0)).abs() < 1e-12);
        assert!((k - 0.520_833_333_333).abs() < 1e-9);

        let out = apply_filter(&rho, &rank2_filter_f(2, 1.0 / 3.0).unwrap()).unwrap();
        assert!((out.p_success - 0.2).abs() < 1e-12);
        assert!((out.fef_after - 0.6).abs() < 1e-10);
    }

    #[test]
    fn quasidistill_values() {
        assert!((quasidistill_p(0.5, 2) - 5.0 / 32.0).abs() < 1e-15);
        assert!((quasidistill_q(0.5, 2) - 0.8).abs() < 1e-15);
        assert!((quasidistill_p(0.5, 10) - 50.5e-4).abs() < 1e-15);
        assert!((quasidistill_q(0.5, 10) - (1.0 - 0.5 / 50.5)).abs() < 1e-15);
        let one = quasidistill_filter(3, 1).unwrap();
        assert_eq!(one.a(), &CMatrix::identity(3, 3));
        assert_eq!(one.b(), &CMatrix::identity(3, 3));
        assert!(quasidistill_filter(3, 0).is_err());

        for d in 2..=4 {
            let rho = rank_two(RankTwoParams::new(d, 0.5).unwrap());
            let out = apply_filter(&rho, &quasidistill_filter(d, 2).unwrap()).unwrap();
            assert!((out.p_success - 5.0 / 32.0).abs() < 1e-12);
            assert!((out.fef_after - 0.8).abs() < 1e-6);
        }
    }
}
