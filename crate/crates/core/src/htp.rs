//! Hidden-teleportation-power verdicts and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{
    max_entangled, rank_two, werner, werner_parameter, RankTwoParams, WernerParams,
};
use crate::fef::{fef_auto, fef_rank2_analytic, fef_werner_analytic, FefOptions};
use crate::filter::{
    apply_filter_with, optimize_filter_fef, quasidistill_p, quasidistill_q,
    rank2_filter, rank2_filtered_fef, rank2_filtered_p, rank2_kappa, rank2_kappa_prime,
    werner_filter, werner_filtered_fef, werner_filtered_p, Filter, OptimizeOptions, Sides,
};
use crate::qmat::DensityMatrix;

/// Quasidistillation strengths included in rank-two sweeps.
pub const QUASI_N: [u32; 4] = [2, 3, 5, 10];

/// `κ` values this close above one are treated as the identity filter.
pub const KAPPA_SLACK: f64 = 1e-9;

/// `v_cr = (d+1)/(4d−2)`: below it the qubit filter lifts `W(v)` above `1/d`.
pub fn werner_vcr(d: usize) -> f64 {
    let d = d as f64;
    (d + 1.0) / (4.0 * d - 2.0)
}

/// Closed-form gain `F_after − F_before` of the qubit filter on `W(v)` in
/// terms of the success probability, valid for `d ≥ 3` and
/// `v < (d+1)/(2d)`.
pub fn werner_delta_fef(d: usize, v: f64) -> Option<f64> {
    if d < 3 || v >= (d as f64 + 1.0) / (2.0 * d as f64) {
        return None;
    }
    let df = d as f64;
    let p = werner_filtered_p(d, v);
    let den = 2.0 * (df - 2.0) * df * df * p;
    Some(if d.is_multiple_of(2) {
        (df * p - 2.0) * (df * df * p + df * p - 6.0) / den
    } else {
        (12.0 - 2.0 * (df * df + 4.0 * df - 4.0) * p + (df - 1.0) * df * df * p * p) / den
    })
}

/// FEF of `W(v)` after the qubit filter. The closed form is exact while
/// `v ≤ 1/2`; above that the filtered state is solved numerically.
pub fn werner_filtered_fef_exact(d: usize, v: f64, opts: &FefOptions) -> Result<f64> {
    if v <= 0.5 || d == 2 {
        return Ok(werner_filtered_fef(d, v));
    }
    let rho = werner(WernerParams::new(d, v)?);
    Ok(apply_filter_with(&rho, &werner_filter(d)?, opts)?.fef_after)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub before: f64,
    pub after: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            before: 1e-9,
            after: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub enum StateSpec {
    Werner(WernerParams),
    RankTwo(RankTwoParams),
    Matrix(DensityMatrix),
}

impl StateSpec {
    pub fn density(&self) -> DensityMatrix {
        match self {
            Self::Werner(p) => werner(*p),
            Self::RankTwo(p) => rank_two(*p),
            Self::Matrix(m) => m.clone(),
        }
    }

    /// Replace an explicit matrix by the family it belongs to, if any.
    pub fn recognize(self) -> Self {
        let Self::Matrix(rho) = &self else {
            return self;
        };
        let Ok(d) = rho.local_dim() else {
            return self;
        };
        if let Some(v) = werner_parameter(rho) {
            return Self::Werner(WernerParams { d, v });
        }
        let q = rho.overlap(max_entangled(d).amplitudes());
        if let Ok(p) = RankTwoParams::new(d, q) {
            if (rank_two(p).matrix() - rho.matrix()).norm() <= 1e-10 {
                return Self::RankTwo(p);
            }
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterStrategy {
    /// The family's closed-form filter: the qubit filter for Werner states,
    /// `κ′` for the rank-two family.
    Named,
    Optimized(OptimizeOptions),
}

#[derive(Debug, Clone)]
pub struct HtpVerdict {
    pub useless_before: bool,
    pub useful_after: bool,
    pub has_htp: bool,
    /// `F_after` lies within the tolerance band around `1/d`.
    pub boundary: bool,
    pub filter_used: Filter,
    pub fef_before: f64,
    pub fef_after: f64,
    pub p_success: f64,
    pub margins: (f64, f64),
}

impl HtpVerdict {
    fn new(d: usize, before: f64, after: f64, p: f64, filter: Filter, tol: &Tolerances) -> Self {
        let c = 1.0 / d as f64;
        let useless_before = before <= c + tol.before;
        let useful_after = after > c + tol.after;
        Self {
            useless_before,
            useful_after,
            has_htp: useless_before && useful_after,
            boundary: (after - c).abs() <= tol.after,
            filter_used: filter,
            fef_before: before,
            fef_after: after,
            p_success: p,
            margins: (before - c, after - c),
        }
    }
}

pub fn htp_check(spec: &StateSpec, strategy: &FilterStrategy, tol: &Tolerances) -> Result<HtpVerdict> {
    let fef_opts = FefOptions::default();
    match strategy {
        FilterStrategy::Named => match spec.clone().recognize() {
            StateSpec::Werner(p) => {
                let before = fef_werner_analytic(p);
                let after = werner_filtered_fef_exact(p.d, p.v, &fef_opts)?;
                let prob = werner_filtered_p(p.d, p.v);
                Ok(HtpVerdict::new(p.d, before, after, prob, werner_filter(p.d)?, tol))
            }
            StateSpec::RankTwo(p) => {
                let before = fef_rank2_analytic(p);
                let kappa = rank2_kappa_prime(p.d, p.q);
                let after = rank2_filtered_fef(p.d, p.q, kappa);
                let prob = rank2_filtered_p(p.d, p.q, kappa);
                Ok(HtpVerdict::new(p.d, before, after, prob, rank2_filter(p.d, kappa)?, tol))
            }
            StateSpec::Matrix(_) => Err(Error::UnknownFamily),
        },
        FilterStrategy::Optimized(opts) => {
            let rho = spec.density();
            let d = rho.local_dim()?;
            let before = fef_auto(&rho, &FefOptions { seed: opts.seed, ..fef_opts })?.value;
            let best = optimize_filter_fef(&rho, opts)?;
            let after = best.outcome.fef_after;
            Ok(HtpVerdict::new(d, before, after, best.outcome.p_success, best.filter, tol))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: String,
    pub d: usize,
    pub param: f64,
    #[serde(rename = "F_before")]
    pub f_before: f64,
    #[serde(rename = "F_after_named")]
    pub f_after_named: f64,
    #[serde(rename = "F_after_opt")]
    pub f_after_opt: Option<f64>,
    pub p_success: f64,
    #[serde(rename = "cost_K")]
    pub cost_k: f64,
    #[serde(rename = "delta_F")]
    pub delta_f: f64,
    pub boundary_flag: bool,
}

impl SweepRow {
    fn new(family: String, d: usize, param: f64, before: f64, after: f64, p: f64, opt: Option<f64>) -> Self {
        let c = 1.0 / d as f64;
        Self {
            family,
            d,
            param,
            f_before: before,
            f_after_named: after,
            f_after_opt: opt,
            p_success: p,
            cost_k: p * after + (1.0 - p) * c,
            delta_f: after - before,
            boundary_flag: (after - c).abs() <= Tolerances::default().after,
        }
    }
}

fn optimized_after(rho: &DensityMatrix, opts: Option<&OptimizeOptions>) -> Result<Option<f64>> {
    opts.map(|o| optimize_filter_fef(rho, o).map(|r| r.outcome.fef_after))
        .transpose()
}

/// One row per grid value, using the qubit filter.
pub fn werner_sweep(d: usize, v_grid: &[f64], optimize: Option<&OptimizeOptions>) -> Result<Vec<SweepRow>> {
    let fef_opts = FefOptions::default();
    v_grid
        .par_iter()
        .map(|&v| {
            let p = WernerParams::new(d, v)?;
            let before = fef_werner_analytic(p);
            let after = werner_filtered_fef_exact(d, v, &fef_opts)?;
            let opt = optimized_after(&werner(p), optimize)?;
            Ok(SweepRow::new("werner".into(), d, v, before, after, werner_filtered_p(d, v), opt))
        })
        .collect()
}

/// For each `q`: rows for the `κ` filter (when admissible), the `κ′`
/// filter, and the quasidistillation filters of [`QUASI_N`].
pub fn rank2_sweep(d: usize, q_grid: &[f64], optimize: Option<&OptimizeOptions>) -> Result<Vec<SweepRow>> {
    let per_q: Vec<Vec<SweepRow>> = q_grid
        .par_iter()
        .map(|&q| {
            let params = RankTwoParams::new(d, q)?;
            let before = fef_rank2_analytic(params);
            let opt = optimized_after(&rank_two(params), optimize)?;
            let mut rows = Vec::new();
            let kappa = if q < 1.0 { rank2_kappa(d, q) } else { f64::INFINITY };
            if kappa <= 1.0 + KAPPA_SLACK {
                let k = kappa.min(1.0);
                let after = rank2_filtered_fef(d, q, k);
                rows.push(SweepRow::new("rank2:kappa".into(), d, q, before, after, rank2_filtered_p(d, q, k), opt));
            }
            let kp = rank2_kappa_prime(d, q);
            let after = rank2_filtered_fef(d, q, kp);
            rows.push(SweepRow::new("rank2:kappa_prime".into(), d, q, before, after, rank2_filtered_p(d, q, kp), opt));
            for n in QUASI_N {
                let q_n = quasidistill_q(q, n);
                let after = fef_rank2_analytic(RankTwoParams { d, q: q_n });
                rows.push(SweepRow::new(format!("rank2:quasi_n{n}"), d, q, before, after, quasidistill_p(q, n), opt));
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_q.into_iter().flatten().collect())
}

/// The one-sided `κ` filter, with `κ` clamped to 1 at the edge of its
/// admissible interval.
pub fn rank2_filter_k_clamped(d: usize, q: f64) -> Result<Filter> {
    let kappa = rank2_kappa(d, q);
    if kappa > 1.0 + KAPPA_SLACK {
        return Err(Error::KappaOutOfRange(kappa));
    }
    rank2_filter(d, kappa.min(1.0))
}

/// Default optimizer sides per family: two-sided for Werner states, which
/// need a projection on both halves, one-sided otherwise.
pub fn default_sides(spec: &StateSpec) -> Sides {
    match spec {
        StateSpec::Werner(_) => Sides::Both,
        _ => Sides::One,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn vcr_values() {
        assert!((werner_vcr(3) - 0.4).abs() < 1e-15);
        assert!((werner_vcr(2) - 0.5).abs() < 1e-15);
        assert!((werner_vcr(1_000_000) - 0.25).abs() < 1e-6);
    }

    #[test]
    fn delta_closed_forms_match_difference() {
        for d in 3..=6 {
            for k in 0..=50 {
                let v = k as f64 * 0.01;
                let want = werner_filtered_fef(d, v) - fef_werner_analytic(WernerParams { d, v });
                let got = werner_delta_fef(d, v).unwrap();
                assert!((got - want).abs() < 1e-12, "d={d} v={v}: {got} vs {want}");
            }
        }
        assert!(werner_delta_fef(2, 0.1).is_none());
    }

    #[test]
    fn verdict_examples() {
        let w = |d, v| StateSpec::Werner(WernerParams::new(d, v).unwrap());
        let v = htp_check(&w(3, 0.3), &FilterStrategy::Named, &tol()).unwrap();
        assert!(v.has_htp);
        assert!((v.fef_before - 0.172_222_222_222).abs() < 1e-9);

        let v = htp_check(&w(3, 0.45), &FilterStrategy::Named, &tol()).unwrap();
        assert!(v.useless_before && !v.useful_after && !v.has_htp);

        let r = StateSpec::RankTwo(RankTwoParams::new(2, 0.5).unwrap());
        let v = htp_check(&r, &FilterStrategy::Named, &tol()).unwrap();
        assert!(v.useless_before && v.useful_after && v.has_htp);

        let v = htp_check(&w(2, 0.3), &FilterStrategy::Named, &tol()).unwrap();
        assert!(!v.useless_before);
    }

    #[test]
    fn matrix_spec_is_recognized() {
        let rho = werner(WernerParams::new(3, 0.3).unwrap());
        let v = htp_check(&StateSpec::Matrix(rho), &FilterStrategy::Named, &tol()).unwrap();
        assert!(v.has_htp);
        let rho = rank_two(RankTwoParams::new(2, 0.4).unwrap());
        assert!(matches!(StateSpec::Matrix(rho).recognize(), StateSpec::RankTwo(_)));
        let odd = DensityMatrix::product(
            &crate::qmat::diag(&[0.3, 0.7]),
            &crate::qmat::diag(&[0.6, 0.4]),
        )
        .unwrap();
        assert!(matches!(
            htp_check(&StateSpec::Matrix(odd), &FilterStrategy::Named, &tol()),
            Err(Error::UnknownFamily)
        ));
    }

    #[test]
    fn werner_sweep_examples() {
        let rows = werner_sweep(3, &[0.0, 0.4], None).unwrap();
        assert!((rows[0].f_before - 2.0 / 9.0).abs() < 1e-12);
        assert!((rows[0].f_after_named - 2.0 / 3.0).abs() < 1e-12);
        assert!((rows[0].p_success - 1.0 / 3.0).abs() < 1e-12);
        assert!((rows[1].f_after_named - 1.0 / 3.0).abs() < 1e-12);
        assert!(rows[1].boundary_flag);
        let rows = werner_sweep(4, &[0.0], None).unwrap();
        assert!((rows[0].f_before - 1.0 / 6.0).abs() < 1e-12);
        assert!((rows[0].f_after_named - 0.5).abs() < 1e-12);
        assert!((rows[0].p_success - 1.0 / 6.0).abs() < 1e-12);
        for r in &rows {
            assert!((r.delta_f - (r.f_after_named - r.f_before)).abs() <= 1e-12);
        }
    }

    #[test]
    fn rank2_sweep_examples() {
        let rows = rank2_sweep(2, &[1.0 / 3.0, 7.0 / 15.0], None).unwrap();
        let find = |fam: &str, q: f64| {
            rows.iter()
                .find(|r| r.family == fam && (r.param - q).abs() < 1e-15)
                .unwrap()
        };
        assert!((find("rank2:kappa", 1.0 / 3.0).f_after_named - 25.0 / 42.0).abs() < 1e-12);
        assert!((find("rank2:kappa_prime", 1.0 / 3.0).f_after_named - 0.6).abs() < 1e-12);
        let r = find("rank2:kappa_prime", 7.0 / 15.0);
        assert!((r.f_before - 7.0 / 15.0).abs() < 1e-12 && r.f_after_named > 0.5);
        assert_eq!(rows.len(), 2 * (2 + QUASI_N.len()));

        let rows = rank2_sweep(3, &[1.0 / 3.0], None).unwrap();
        assert!((rows[0].f_before - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_edge_is_clamped() {
        let rows = rank2_sweep(2, &[2.0 / 3.0], None).unwrap();
        let r = rows.iter().find(|r| r.family == "rank2:kappa").unwrap();
        assert!((r.p_success - 1.0).abs() < 1e-12);
        assert!(rank2_filter_k_clamped(2, 2.0 / 3.0).is_ok());
        assert!(rank2_filter_k_clamped(2, 0.8).is_err());
    }
}
