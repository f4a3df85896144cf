//! Best m-term approximation with respect to the trigonometric system.
//!
//! Greedy selection is exact for coefficient norms. For `L_q` targets the
//! layered scheme keeps low hyperbolic layers exactly, replaces the middle
//! layers by randomized empirical-mean approximants and drops the rest.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::index::{
    enumerate_layer, layer_cardinality, layer_weight_power_sum, sorted_frequencies, MultiIndex,
    DEFAULT_INDEX_CAP,
};
use crate::poly::{lp_norm_of, norm, GridSpec, SpaceParams, SparseTrigPoly};

/// Default number of independent trials of the randomized approximant.
pub const DEFAULT_TRIALS: usize = 10;

/// `max(log2 m, 1)` for `m >= 1`.
pub fn log_star(m: f64) -> Result<f64> {
    if m.is_nan() || m < 1.0 {
        return invalid(format!("m >= 1 violated (m = {m})"));
    }
    Ok(m.log2().max(1.0))
}

pub(crate) fn log_star_u(m: u64) -> f64 {
    (m.max(1) as f64).log2().max(1.0)
}

/// Per-mode budgets of the layered scheme for `m = 2^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerBudget {
    pub n: u32,
    /// Layers `0..=L` are kept exactly.
    pub l: u32,
    /// Layers above `K` are dropped.
    pub k: u32,
    /// `(k, m_k)` for `L < k <= K`.
    pub budgets: Vec<(u32, u64)>,
}

impl LayerBudget {
    pub fn new(n: u32, d: usize, r: f64, theta: f64) -> Result<Self> {
        let inv_theta = if theta.is_infinite() { 0.0 } else { 1.0 / theta };
        let gamma = r - 1.0 + inv_theta;
        if r < 0.0 || gamma <= 0.0 {
            return invalid(format!(
                "r > (1 - 1/theta)_+ violated (r = {r}, theta = {theta})"
            ));
        }
        if n > 60 {
            return Err(Error::Overflow("2^n in layer budget"));
        }
        let ls = log_star_u(n as u64);
        let dm1 = (d - 1) as f64;
        let l_real = (n as f64 - dm1 * ls).ceil();
        if l_real <= 0.0 {
            return invalid(format!(
                "L = ceil(n - (d-1) log* n) > 0 violated (n = {n}, d = {d}); n too small"
            ));
        }
        let l = l_real as u32;
        let k_real = (n as f64 * (r + inv_theta - 0.5) / gamma - dm1 * ls).ceil();
        let k = if k_real < 0.0 { 0 } else { k_real as u32 };
        let base = 2f64.powi(l as i32) * (l as f64).powf(dm1);
        let budgets = (l + 1..=k)
            .map(|kk| {
                let t = (kk - l) as f64;
                (kk, (base / (t * t)).ceil() as u64)
            })
            .collect();
        Ok(LayerBudget { n, l, k, budgets })
    }

    /// `sum_{k <= L} |H_k| + sum m_k`.
    pub fn total_budget(&self, d: usize) -> Result<u128> {
        let mut total: u128 = 0;
        for k in 0..=self.l {
            total = total
                .checked_add(layer_cardinality(k, d)?)
                .ok_or(Error::Overflow("layer budget total"))?;
        }
        for &(_, mk) in &self.budgets {
            total += mk as u128;
        }
        Ok(total)
    }
}

/// Segment errors and counts reported by the layered scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayeredReport {
    /// `m` actually used (the largest power of two not above the request).
    pub m_used: u64,
    pub budget: LayerBudget,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    /// Terms spent on layers `0..=L`.
    pub exact_terms: usize,
    /// Terms spent on layers `L+1..=K`.
    pub sampled_terms: usize,
    /// Terms of a greedy pre-step (quasi-norm case), 0 otherwise.
    pub greedy_terms: usize,
    /// `term_count / m_used`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MTermResult {
    pub approximant: SparseTrigPoly,
    pub term_count: usize,
    pub error: f64,
    pub error_norm: SpaceParams,
    pub seed: Option<u64>,
    pub layered: Option<LayeredReport>,
}

/// Serializable summary of an [`MTermResult`].
#[derive(Debug, Clone, Serialize)]
pub struct MTermRecord {
    pub term_count: usize,
    pub error: f64,
    pub norm: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layered: Option<LayeredReport>,
}

impl MTermResult {
    pub fn record(&self) -> MTermRecord {
        MTermRecord {
            term_count: self.term_count,
            error: self.error,
            norm: self.error_norm.tag(),
            seed: self.seed,
            layered: self.layered.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.record()).expect("record serializes")
    }
}

fn greedy_score(target: &SpaceParams) -> Result<(f64, f64)> {
    // (r, exponent of the tail norm)
    match *target {
        SpaceParams::WienerWeighted { r, theta } => Ok((r, theta)),
        SpaceParams::WienerPlain { eta } => Ok((0.0, eta)),
        SpaceParams::Lebesgue { q } if q == 2.0 => Ok((0.0, 2.0)),
        other => Err(Error::Unsupported(format!(
            "greedy m-term is exact only for coefficient norms, not {}",
            other.tag()
        ))),
    }
}

/// Keeps the `m` terms of largest weighted magnitude (lexicographic
/// tie-break). The error is the tail norm, which is the exact `sigma_m(f)`.
pub fn greedy_mterm(f: &SparseTrigPoly, m: usize, target: &SpaceParams) -> Result<MTermResult> {
    target.validate()?;
    let (r, exponent) = greedy_score(target)?;
    let mut scored: Vec<(f64, &MultiIndex, Complex64)> = f
        .iter()
        .map(|(k, c)| (k.weight_f64().powf(r) * c.norm(), k, *c))
        .collect();
    // stable sort keeps lexicographic order among equal scores
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let keep = m.min(scored.len());
    let approximant = SparseTrigPoly::from_terms(
        f.dim(),
        scored[..keep].iter().map(|(_, k, c)| ((*k).clone(), *c)),
    )?;
    let error = lp_norm_of(scored[keep..].iter().map(|t| t.0), exponent);
    Ok(MTermResult {
        term_count: approximant.len(),
        approximant,
        error,
        error_norm: *target,
        seed: None,
        layered: None,
    })
}

/// `(m+1)^(1/q - 1/p) ||x||_p`, an upper bound for the best m-term error of
/// `x` in `l_q`.
pub fn stechkin_bound(x: &[f64], p: f64, q: f64, m: usize) -> Result<f64> {
    if !(p > 0.0 && p < q) || p.is_infinite() {
        return invalid(format!("0 < p < q <= inf violated (p = {p}, q = {q})"));
    }
    if x.iter().any(|v| v.is_nan() || *v < 0.0) {
        return invalid("x must be a nonnegative sequence");
    }
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    Ok(((m + 1) as f64).powf(inv_q - 1.0 / p) * lp_norm_of(x.iter().copied(), p))
}

/// Exact best m-term error of a nonnegative sequence in `l_q`: the `l_q`
/// norm of everything except the `m` largest entries.
pub fn sequence_tail(x: &[f64], q: f64, m: usize) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    lp_norm_of(v.into_iter().skip(m), q)
}

/// Seed of trial `t` derived from a master seed.
pub fn trial_seed(master: u64, t: u64) -> u64 {
    master ^ (t.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn validate_q(q: f64) -> Result<()> {
    if q.is_nan() || q < 2.0 {
        return invalid(format!("2 <= q <= inf violated (q = {q})"));
    }
    Ok(())
}

/// `||g||_{L_q}`: exact for `q = 2`, grid quadrature otherwise.
fn lq_error(g: &SparseTrigPoly, q: f64, grid: Option<&GridSpec>) -> Result<f64> {
    if q == 2.0 {
        return Ok(g.coefficient_l2());
    }
    norm(g, &SpaceParams::Lebesgue { q }, grid)
}

fn maurey_draw(
    f: &SparseTrigPoly,
    freqs: &[(&MultiIndex, Complex64)],
    dist: &WeightedAliasIndex<f64>,
    a_norm: f64,
    m: usize,
    seed: u64,
) -> SparseTrigPoly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..m {
        *counts.entry(dist.sample(&mut rng)).or_insert(0) += 1;
    }
    let scale = a_norm / m as f64;
    let terms = counts.into_iter().map(|(i, cnt)| {
        let (k, c) = freqs[i];
        (k.clone(), c / c.norm() * (scale * cnt as f64))
    });
    SparseTrigPoly::from_terms(f.dim(), terms).expect("dimension matches")
}

/// Empirical-mean approximant: `m` i.i.d. frequencies drawn with probability
/// `|c_k| / ||f||_A`, `P = (||f||_A / m) sum phase(c_{k_i}) e_{k_i}`. Returns
/// the best of `trials` independent draws measured in `L_q`.
pub fn maurey_mterm(
    f: &SparseTrigPoly,
    m: usize,
    q: f64,
    trials: usize,
    seed: u64,
) -> Result<MTermResult> {
    validate_q(q)?;
    if m == 0 {
        return invalid("m >= 1 violated");
    }
    if trials == 0 {
        return invalid("trials >= 1 violated");
    }
    let error_norm = SpaceParams::Lebesgue { q };
    if f.is_empty() {
        return Ok(MTermResult {
            approximant: SparseTrigPoly::zero(f.dim()),
            term_count: 0,
            error: 0.0,
            error_norm,
            seed: Some(seed),
            layered: None,
        });
    }
    let freqs: Vec<(&MultiIndex, Complex64)> = f.iter().map(|(k, c)| (k, *c)).collect();
    let weights: Vec<f64> = freqs.iter().map(|(_, c)| c.norm()).collect();
    let a_norm: f64 = weights.iter().sum();
    let dist = WeightedAliasIndex::new(weights)
        .map_err(|e| Error::InvalidParameter(format!("sampling weights: {e}")))?;
    let grid = if q == 2.0 {
        None
    } else {
        Some(GridSpec::default_for_lq(f, q))
    };
    let outcomes: Vec<Result<(f64, SparseTrigPoly)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let p = maurey_draw(f, &freqs, &dist, a_norm, m, trial_seed(seed, t));
            let err = if q == 2.0 {
                // supp P is inside supp f
                freqs
                    .iter()
                    .map(|(k, c)| (c - p.coeff(k)).norm_sqr())
                    .fold(0.0, |a, b| a + b)
                    .sqrt()
            } else {
                lq_error(&f.sub(&p)?, q, grid.as_ref())?
            };
            Ok((err, p))
        })
        .collect();
    let mut best: Option<(f64, SparseTrigPoly)> = None;
    for o in outcomes {
        let (err, p) = o?;
        // strict comparison keeps the lowest trial index on ties
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, p));
        }
    }
    let (error, approximant) = best.expect("trials >= 1");
    Ok(MTermResult {
        term_count: approximant.len(),
        approximant,
        error,
        error_norm,
        seed: Some(seed),
        layered: None,
    })
}

/// The layered construction for `m = 2^n` (other `m` are rounded down).
///
/// Layers `0..=L` are copied, each layer `L < k <= K` is replaced by the
/// best-of-`trials` empirical-mean approximant with `m_k` draws, layers above
/// `K` are dropped. A layer whose support has at most `m_k` frequencies is
/// copied instead of sampled. For `theta < 1` the scheme first takes the
/// greedy `m`-term approximant in `S^r_1 A` and applies the `theta = 1`
/// construction to the remainder.
pub fn layered_mterm(
    f: &SparseTrigPoly,
    m: u64,
    q: f64,
    r: f64,
    theta: f64,
    seed: u64,
    trials: usize,
) -> Result<MTermResult> {
    validate_q(q)?;
    if theta.is_nan() || theta <= 0.0 {
        return invalid(format!("theta in (0, inf] violated (theta = {theta})"));
    }
    if m == 0 {
        return invalid("m >= 1 violated");
    }
    let n = 63 - m.leading_zeros();
    let m_used = 1u64 << n;

    if theta < 1.0 {
        let pre = greedy_mterm(f, m_used as usize, &SpaceParams::WienerWeighted { r, theta: 1.0 })?;
        let rest = f.sub(&pre.approximant)?;
        let inner = layered_inner(&rest, n, q, r, 1.0, seed, trials)?;
        let approximant = pre.approximant.add(&inner.approximant)?;
        let error = lq_error(&f.sub(&approximant)?, q, None)?;
        let mut rep = inner.report;
        rep.m_used = m_used;
        rep.greedy_terms = pre.term_count;
        rep.constant = approximant.len() as f64 / m_used as f64;
        return Ok(MTermResult {
            term_count: approximant.len(),
            approximant,
            error,
            error_norm: SpaceParams::Lebesgue { q },
            seed: Some(seed),
            layered: Some(rep),
        });
    }

    let inner = layered_inner(f, n, q, r, theta, seed, trials)?;
    let error = lq_error(&f.sub(&inner.approximant)?, q, None)?;
    let mut rep = inner.report;
    rep.m_used = m_used;
    rep.constant = inner.approximant.len() as f64 / m_used as f64;
    Ok(MTermResult {
        term_count: inner.approximant.len(),
        approximant: inner.approximant,
        error,
        error_norm: SpaceParams::Lebesgue { q },
        seed: Some(seed),
        layered: Some(rep),
    })
}

struct LayeredInner {
    approximant: SparseTrigPoly,
    report: LayeredReport,
}

fn layered_inner(
    f: &SparseTrigPoly,
    n: u32,
    q: f64,
    r: f64,
    theta: f64,
    seed: u64,
    trials: usize,
) -> Result<LayeredInner> {
    let d = f.dim();
    let budget = LayerBudget::new(n, d, r, theta)?;
    let mk: BTreeMap<u32, u64> = budget.budgets.iter().copied().collect();
    let mut approximant = SparseTrigPoly::zero(d);
    let (mut s2, mut s3) = (0.0, 0.0);
    let (mut exact_terms, mut sampled_terms) = (0, 0);
    for (k, fk) in f.layers() {
        if k <= budget.l {
            exact_terms += fk.len();
            approximant = approximant.add(&fk)?;
        } else if k <= budget.k {
            let mk = mk[&k] as usize;
            if fk.len() <= mk {
                sampled_terms += fk.len();
                approximant = approximant.add(&fk)?;
            } else {
                let pk = maurey_mterm(&fk, mk, q, trials, trial_seed(seed, 1_000_003 + k as u64))?;
                s2 += pk.error;
                sampled_terms += pk.term_count;
                approximant = approximant.add(&pk.approximant)?;
            }
        } else {
            s3 += lq_error(&fk, q, None)?;
        }
    }
    Ok(LayeredInner {
        report: LayeredReport {
            m_used: 1 << n,
            budget,
            s1: 0.0,
            s2,
            s3,
            exact_terms,
            sampled_terms,
            greedy_terms: 0,
            constant: 0.0,
        },
        approximant,
    })
}

/// Equal-coefficient polynomial on `H_n` with unit `S^r_theta A` norm.
pub fn fooling_wiener(n: u32, d: usize, r: f64, theta: f64) -> Result<SparseTrigPoly> {
    SpaceParams::WienerWeighted { r, theta }.validate()?;
    let ks = enumerate_layer(n, d, DEFAULT_INDEX_CAP)?;
    let c = if theta.is_infinite() {
        let wmax = ks.iter().map(|k| k.weight_f64()).fold(0.0, f64::max);
        wmax.powf(-r)
    } else {
        layer_weight_power_sum(n, d, r * theta).powf(-1.0 / theta)
    };
    SparseTrigPoly::from_terms(d, ks.into_iter().map(|k| (k, Complex64::new(c, 0.0))))
}

/// Dirichlet kernel of `H_n`, scaled to unit `S^r_{p,theta} B` norm.
pub fn fooling_besov(n: u32, d: usize, r: f64, p: f64, theta: f64) -> Result<SparseTrigPoly> {
    let space = SpaceParams::Besov { r, p, theta };
    space.validate()?;
    if p > 2.0 {
        return invalid(format!("1 < p <= 2 violated (p = {p})"));
    }
    let ks = enumerate_layer(n, d, DEFAULT_INDEX_CAP)?;
    let kernel = SparseTrigPoly::from_terms(d, ks.into_iter().map(|k| (k, Complex64::new(1.0, 0.0))))?;
    let b = norm(&kernel, &space, None)?;
    Ok(kernel.scaled(1.0 / b))
}

/// `t = sum_{i <= 2m} omega_i^(-r) (2m)^(-1/theta) e_{k_i}` over the `2m`
/// first frequencies in weight order; `||t||_{S^r_theta A} = 1`.
pub fn fooling_a2a(m: usize, d: usize, r: f64, theta: f64) -> Result<SparseTrigPoly> {
    SpaceParams::WienerWeighted { r, theta }.validate()?;
    if m == 0 {
        return invalid("m >= 1 violated");
    }
    let count = 2 * m;
    let scale = if theta.is_infinite() {
        1.0
    } else {
        (count as f64).powf(-1.0 / theta)
    };
    let ks = sorted_frequencies(count, d, DEFAULT_INDEX_CAP)?;
    SparseTrigPoly::from_terms(
        d,
        ks.into_iter().map(|k| {
            let c = k.weight_f64().powf(-r) * scale;
            (k, Complex64::new(c, 0.0))
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn log_star_examples() {
        assert_eq!(log_star(1.0).unwrap(), 1.0);
        assert_eq!(log_star(2.0).unwrap(), 1.0);
        assert_eq!(log_star(8.0).unwrap(), 3.0);
        assert!(log_star(0.5).is_err());
    }

    #[test]
    fn greedy_examples() {
        let f = SparseTrigPoly::from_terms(
            1,
            [(mi(&[0]), c(3.0)), (mi(&[1]), c(2.0)), (mi(&[2]), c(1.0))],
        )
        .unwrap();
        let l2 = SpaceParams::Lebesgue { q: 2.0 };
        let res = greedy_mterm(&f, 1, &l2).unwrap();
        assert!((res.error - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(res.term_count, 1);
        let res = greedy_mterm(&f, 0, &l2).unwrap();
        assert!((res.error - 14f64.sqrt()).abs() < 1e-15);
        assert_eq!(greedy_mterm(&f, 7, &l2).unwrap().error, 0.0);
        assert!(greedy_mterm(&f, 1, &SpaceParams::Lebesgue { q: 4.0 }).is_err());
    }

    #[test]
    fn greedy_tie_break_is_lexicographic() {
        let f = SparseTrigPoly::from_terms(
            1,
            [(mi(&[3]), c(1.0)), (mi(&[-2]), c(1.0)), (mi(&[5]), c(1.0))],
        )
        .unwrap();
        let res = greedy_mterm(&f, 2, &SpaceParams::WienerPlain { eta: 1.0 }).unwrap();
        let kept: Vec<_> = res.approximant.frequencies().cloned().collect();
        assert_eq!(kept, vec![mi(&[-2]), mi(&[3])]);
    }

    #[test]
    fn stechkin_examples() {
        let b = stechkin_bound(&[1.0, 1.0, 1.0], 1.0, 2.0, 1).unwrap();
        assert!((b - 3.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!((sequence_tail(&[1.0, 1.0, 1.0], 2.0, 1) - 2f64.sqrt()).abs() < 1e-15);
        assert!((stechkin_bound(&[1.0, 2.0], 1.0, 3.0, 0).unwrap() - 3.0).abs() < 1e-15);
        let b = stechkin_bound(&[1.0, 1.0], 1.0, f64::INFINITY, 1).unwrap();
        assert!((b - 1.0).abs() < 1e-15);
        assert_eq!(sequence_tail(&[1.0, 1.0], f64::INFINITY, 1), 1.0);
        assert!(stechkin_bound(&[1.0], 2.0, 1.0, 0).is_err());
    }

    #[test]
    fn maurey_single_mode_is_exact() {
        let f = SparseTrigPoly::monomial(mi(&[3, -1]), Complex64::new(0.6, -0.8));
        for m in [1, 2, 7] {
            let res = maurey_mterm(&f, m, 2.0, 3, 9).unwrap();
            assert!(res.error < 1e-15);
            assert_eq!(res.term_count, 1);
        }
        let zero = SparseTrigPoly::zero(2);
        assert_eq!(maurey_mterm(&zero, 4, 2.0, 3, 0).unwrap().error, 0.0);
    }

    #[test]
    fn maurey_is_deterministic() {
        let f = fooling_wiener(5, 2, 1.0, 1.0).unwrap();
        let a = maurey_mterm(&f, 40, 2.0, 8, 123).unwrap();
        let b = maurey_mterm(&f, 40, 2.0, 8, 123).unwrap();
        assert_eq!(a, b);
        let e = maurey_mterm(&f, 40, 2.0, 8, 124).unwrap();
        assert_ne!(a.approximant, e.approximant);
    }

    #[test]
    fn maurey_variance_identity() {
        // E||f - P||_2^2 = (||f||_A^2 - ||f||_2^2) / m for one draw
        let n = 20;
        let f = SparseTrigPoly::from_terms(
            1,
            (0..n).map(|i| (mi(&[i as i64]), Complex64::from_polar(1.0 / n as f64, i as f64))),
        )
        .unwrap();
        let m = 8;
        let expected = (1.0 - 1.0 / n as f64) / m as f64;
        let draws = 4000;
        let mean: f64 = (0..draws)
            .map(|s| maurey_mterm(&f, m, 2.0, 1, s).unwrap().error.powi(2))
            .sum::<f64>()
            / draws as f64;
        assert!((mean - expected).abs() < 0.05 * expected, "{mean} vs {expected}");
    }

    #[test]
    fn maurey_lq_grid_path() {
        let f = fooling_wiener(4, 2, 0.5, 2.0).unwrap();
        let res = maurey_mterm(&f, 16, 4.0, 4, 1).unwrap();
        assert!(res.error > 0.0 && res.error.is_finite());
        let res_inf = maurey_mterm(&f, 16, f64::INFINITY, 4, 1).unwrap();
        assert!(res_inf.error >= res.error * (1.0 - 1e-12));
    }

    #[test]
    fn budget_examples() {
        let b = LayerBudget::new(10, 2, 1.0, 1.0).unwrap();
        // log*(10) = log2(10), L = ceil(10 - 3.32) = 7, K = ceil(10 * 1.5 - 3.32) = 12
        assert_eq!(b.l, 7);
        assert_eq!(b.k, 12);
        assert_eq!(b.budgets[0], (8, 896));
        assert_eq!(b.budgets[1], (9, 224));
        assert_eq!(b.budgets[4], (12, 36));
        assert!(LayerBudget::new(1, 3, 1.0, 1.0).is_err());
        assert!(LayerBudget::new(10, 2, 0.2, 1.0 / 0.5).is_err());
    }

    #[test]
    fn layered_exact_on_low_layers() {
        let f = SparseTrigPoly::from_terms(
            2,
            [(mi(&[0, 0]), c(1.0)), (mi(&[3, 1]), c(-2.0)), (mi(&[-5, 0]), c(0.5))],
        )
        .unwrap();
        let res = layered_mterm(&f, 1 << 10, 2.0, 1.0, 1.0, 0, 4).unwrap();
        assert_eq!(res.error, 0.0);
        assert_eq!(res.approximant, f);
        let rep = res.layered.unwrap();
        assert_eq!(rep.s3, 0.0);
        assert_eq!(rep.exact_terms, 3);
    }

    #[test]
    fn layered_drops_high_layers_and_rounds_m() {
        let f = SparseTrigPoly::monomial(mi(&[1 << 20, 0]), c(1.0));
        let res = layered_mterm(&f, 1000, 2.0, 1.0, 1.0, 0, 4).unwrap();
        let rep = res.layered.unwrap();
        assert_eq!(rep.m_used, 512);
        assert!((rep.s3 - 1.0).abs() < 1e-15);
        assert!((res.error - 1.0).abs() < 1e-15);
    }

    #[test]
    fn layered_quasi_norm_path() {
        let f = fooling_wiener(9, 2, 1.0, 0.5).unwrap();
        let res = layered_mterm(&f, 256, 2.0, 1.0, 0.5, 3, 4).unwrap();
        let rep = res.layered.as_ref().unwrap();
        assert_eq!(rep.greedy_terms, 256);
        assert!(res.term_count as f64 <= rep.constant * 256.0 + 0.5);
        let direct = f.sub(&res.approximant).unwrap().coefficient_l2();
        assert!((direct - res.error).abs() < 1e-14);
    }

    #[test]
    fn fooling_wiener_is_normalized() {
        for (n, d, r, theta) in [(3u32, 2usize, 1.0, 1.0), (6, 3, 0.7, 2.5), (5, 2, 1.5, f64::INFINITY), (8, 1, 0.0, 0.5)] {
            let f = fooling_wiener(n, d, r, theta).unwrap();
            let v = norm(&f, &SpaceParams::WienerWeighted { r, theta }, None).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "{n} {d} {r} {theta}: {v}");
        }
    }

    #[test]
    fn fooling_wiener_half_tail() {
        let f = fooling_wiener(6, 2, 1.0, 1.0).unwrap();
        let h = f.len();
        let coeff = f.iter().next().unwrap().1.re;
        let res = greedy_mterm(&f, h / 2, &SpaceParams::Lebesgue { q: 2.0 }).unwrap();
        let expected = coeff * ((h - h / 2) as f64).sqrt();
        assert!((res.error - expected).abs() < 1e-13 * expected);
    }

    #[test]
    fn fooling_besov_is_normalized() {
        for (n, d, r, p, theta) in [(4u32, 1usize, 1.0, 1.5, 2.0), (4, 2, 0.5, 2.0, 1.0), (3, 2, 1.0, 1.2, 0.7)] {
            let f = fooling_besov(n, d, r, p, theta).unwrap();
            let v = norm(&f, &SpaceParams::Besov { r, p, theta }, None).unwrap();
            assert!((v - 1.0).abs() < 1e-10);
        }
        assert!(fooling_besov(3, 1, 1.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn fooling_a2a_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let m = rng.random_range(1..200);
            let d = rng.random_range(1..=3);
            let r = rng.random::<f64>() * 2.0;
            let theta = [0.5, 1.0, 2.0, f64::INFINITY][rng.random_range(0..4)];
            let t = fooling_a2a(m, d, r, theta).unwrap();
            assert_eq!(t.len(), 2 * m);
            let v = norm(&t, &SpaceParams::WienerWeighted { r, theta }, None).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
            // each weighted coefficient is (2m)^(-1/theta)
            let expected = if theta.is_infinite() { 1.0 } else { (2.0 * m as f64).powf(-1.0 / theta) };
            for (k, c) in t.iter() {
                assert!((k.weight_f64().powf(r) * c.norm() - expected).abs() < 1e-12 * expected);
            }
            for eta in [1.0, 2.0, 4.0] {
                let sigma = greedy_mterm(&t, m, &SpaceParams::WienerPlain { eta }).unwrap().error;
                let wmax = t.frequencies().map(|k| k.weight_f64()).fold(0.0, f64::max);
                let lower = (m as f64).powf(1.0 / eta) * wmax.powf(-r) * expected;
                assert!(sigma >= lower * (1.0 - 1e-12));
            }
        }
        // r = 0, theta = 1, eta = 2, d = 1: sigma_m = sqrt(m) / (2m)
        for m in [1usize, 5, 64] {
            let t = fooling_a2a(m, 1, 0.0, 1.0).unwrap();
            let s = greedy_mterm(&t, m, &SpaceParams::WienerPlain { eta: 2.0 }).unwrap().error;
            assert!((s - (m as f64).sqrt() / (2.0 * m as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn record_serializes() {
        let f = fooling_wiener(9, 2, 1.0, 1.0).unwrap();
        let res = layered_mterm(&f, 256, 2.0, 1.0, 1.0, 5, 2).unwrap();
        let text = res.to_toml();
        assert!(text.contains("term_count"));
        assert!(text.contains("[layered"));
    }
}
