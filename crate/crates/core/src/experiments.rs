//! Rate sweeps, log-log fits, embedding checks and numeric lemma checks.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::index::{
    compositions, dyadic_interval, enumerate_layer, layer_cardinality, layer_weight_power_sum,
    sorted_frequencies, weight, MultiIndex, DEFAULT_INDEX_CAP,
};
use crate::mterm::{
    fooling_a2a, fooling_wiener, greedy_mterm, layered_mterm, sequence_tail, stechkin_bound,
    LayerBudget, DEFAULT_TRIALS,
};
use crate::poly::{lp_norm_of, norm, SpaceParams, SparseTrigPoly};
use crate::recovery::{linear_baseline, recover_pipeline, RecoveryConfig, Solver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub m: u64,
    pub error: f64,
    pub seed: u64,
    /// `key=value` pairs separated by `;`.
    pub tags: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

impl RateTable {
    /// Sorts rows by `(m, seed)`.
    pub fn from_rows(mut rows: Vec<RateRow>) -> Self {
        rows.sort_by_key(|r| (r.m, r.seed));
        RateTable { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,error,seed,tags\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{:.16e},{},{}", r.m, r.error, r.seed, r.tags);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "m,error,seed,tags" => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected header m,error,seed,tags".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let perr = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let mut parts = line.splitn(4, ',');
            let mut field = |name: &str| {
                parts
                    .next()
                    .ok_or_else(|| perr(format!("missing field {name}")))
            };
            let m = field("m")?.parse().map_err(|e| perr(format!("bad m: {e}")))?;
            let error = field("error")?
                .parse()
                .map_err(|e| perr(format!("bad error: {e}")))?;
            let seed = field("seed")?
                .parse()
                .map_err(|e| perr(format!("bad seed: {e}")))?;
            let tags = field("tags").unwrap_or("").to_string();
            rows.push(RateRow {
                m,
                error,
                seed,
                tags,
            });
        }
        Ok(RateTable { rows })
    }
}

/// Model `error = c m^(-a) log*(m)^b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub a: f64,
    pub b: f64,
    pub b_fixed: bool,
    pub c: f64,
    /// Root-mean-square residual of `ln error`.
    pub residual_rms: f64,
    pub m_min: u64,
    pub m_max: u64,
    pub rows: usize,
}

fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Least-squares fit of `ln e = ln c - a ln m + b ln log*(m)`; with
/// `b_fixed` only `(a, c)` are fitted.
pub fn fit_rate(table: &RateTable, b_fixed: Option<f64>) -> Result<RateFit> {
    if table.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "need at least 4 rows, found {}",
            table.len()
        )));
    }
    if let Some(r) = table.rows.iter().find(|r| !r.error.is_finite() || r.error <= 0.0 || r.m == 0) {
        return Err(Error::DegenerateFit(format!(
            "row m = {} has error {} (need a positive finite error and m >= 1)",
            r.m, r.error
        )));
    }
    let feats: Vec<(f64, f64, f64)> = table
        .rows
        .iter()
        .map(|r| {
            let m = r.m as f64;
            (m.ln(), m.log2().max(1.0).ln(), r.error.ln())
        })
        .collect();
    // unknowns: ln c, a, b
    let design = |lm: f64, ll: f64| -> Vec<f64> {
        match b_fixed {
            Some(_) => vec![1.0, -lm],
            None => vec![1.0, -lm, ll],
        }
    };
    let target = |ll: f64, le: f64| le - b_fixed.map_or(0.0, |b| b * ll);
    let k = if b_fixed.is_some() { 2 } else { 3 };
    let mut ata = vec![vec![0.0; k]; k];
    let mut atb = vec![0.0; k];
    for &(lm, ll, le) in &feats {
        let row = design(lm, ll);
        let t = target(ll, le);
        for i in 0..k {
            atb[i] += row[i] * t;
            for j in 0..k {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let x = solve_small(ata, atb)
        .ok_or_else(|| Error::DegenerateFit("singular design matrix".into()))?;
    let b = b_fixed.unwrap_or_else(|| x[2]);
    let rss: f64 = feats
        .iter()
        .map(|&(lm, ll, le)| {
            let pred = x[0] - x[1] * lm + b * ll;
            (le - pred).powi(2)
        })
        .sum();
    Ok(RateFit {
        a: x[1],
        b,
        b_fixed: b_fixed.is_some(),
        c: x[0].exp(),
        residual_rms: (rss / feats.len() as f64).sqrt(),
        m_min: table.rows.iter().map(|r| r.m).min().unwrap_or(0),
        m_max: table.rows.iter().map(|r| r.m).max().unwrap_or(0),
        rows: table.len(),
    })
}

/// Parses `a..b` (dyadic range) or a comma list into a list of `m`.
pub fn parse_m_list(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidParameter(format!("cannot parse m list {text:?}"));
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        if lo == 0 || !lo.is_power_of_two() || lo > hi {
            return invalid(format!(
                "dyadic range needs a power of two start <= end (got {text})"
            ));
        }
        let mut out = Vec::new();
        let mut m = lo;
        while m <= hi {
            out.push(m);
            m = match m.checked_mul(2) {
                Some(v) => v,
                None => break,
            };
        }
        return Ok(out);
    }
    let out: Vec<u64> = text
        .split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

fn check_wiener_rate(r: f64, theta: f64) -> Result<()> {
    let inv = if theta.is_infinite() { 0.0 } else { 1.0 / theta };
    if r.is_nan() || theta.is_nan() || theta <= 0.0 || r <= (1.0 - inv).max(0.0) {
        return invalid(format!(
            "r > (1 - 1/theta)_+ violated (r = {r}, theta = {theta})"
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum RateTask {
    /// Layered construction on fooling witnesses just above the exact layers.
    SigmaUpper {
        d: usize,
        r: f64,
        theta: f64,
        q: f64,
        trials: usize,
    },
    /// Exact `L_2` tails of equal-coefficient layer witnesses.
    SigmaLower { d: usize, r: f64, theta: f64 },
    /// Exact `A_eta` tails of the sorted-frequency witness.
    A2a {
        d: usize,
        r: f64,
        theta: f64,
        eta: f64,
    },
    /// Sampling recovery of the sorted-frequency witness with sparsity `m`.
    Recovery {
        d: usize,
        r: f64,
        theta: f64,
        q: f64,
        c_budget: f64,
        solver: Solver,
    },
}

impl RateTask {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RateTask::SigmaUpper { r, theta, q, trials, .. } => {
                check_wiener_rate(r, theta)?;
                if q.is_nan() || q < 2.0 {
                    return invalid(format!("2 <= q <= inf violated (q = {q})"));
                }
                if trials == 0 {
                    return invalid("trials >= 1 violated");
                }
            }
            RateTask::SigmaLower { r, theta, .. } => check_wiener_rate(r, theta)?,
            RateTask::A2a { r, theta, eta, .. } => {
                if eta.is_nan() || eta <= 0.0 || theta.is_nan() || theta <= 0.0 {
                    return invalid("theta, eta in (0, inf] violated");
                }
                let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
                if r.is_nan() || r <= (inv(eta) - inv(theta)).max(0.0) {
                    return invalid(format!(
                        "r > (1/eta - 1/theta)_+ violated (r = {r}, theta = {theta}, eta = {eta})"
                    ));
                }
            }
            RateTask::Recovery { r, theta, q, c_budget, .. } => {
                check_wiener_rate(r, theta)?;
                if q.is_nan() || q < 2.0 {
                    return invalid(format!("2 <= q <= inf violated (q = {q})"));
                }
                if c_budget.is_nan() || c_budget <= 0.0 {
                    return invalid("C > 0 violated");
                }
            }
        }
        let d = match *self {
            RateTask::SigmaUpper { d, .. }
            | RateTask::SigmaLower { d, .. }
            | RateTask::A2a { d, .. }
            | RateTask::Recovery { d, .. } => d,
        };
        if d == 0 {
            return invalid("d >= 1 violated");
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            RateTask::SigmaUpper { .. } => "sigma-upper",
            RateTask::SigmaLower { .. } => "sigma-lower",
            RateTask::A2a { .. } => "a2a",
            RateTask::Recovery { .. } => "recovery",
        }
    }
}

/// `(sum_{H_j} omega^(r theta))^(-1/theta)`, the coefficient of the unit layer witness.
fn layer_witness_coefficient(j: u32, d: usize, r: f64, theta: f64) -> f64 {
    if theta.is_infinite() {
        // largest weight on H_j is 2^j
        2f64.powf(-(j as f64) * r)
    } else {
        layer_weight_power_sum(j, d, r * theta).powf(-1.0 / theta)
    }
}

/// `max_j c_j sqrt(|H_j| - m)` over layers with `|H_j| > m`.
pub fn sigma_lower_bound(m: u64, d: usize, r: f64, theta: f64) -> Result<(f64, u32)> {
    let mut best = (0.0, 0u32);
    let mut prev = f64::NEG_INFINITY;
    let mut decreasing = 0;
    for j in 0..200u32 {
        let h = layer_cardinality(j, d)? as f64;
        if h <= m as f64 {
            continue;
        }
        let v = layer_witness_coefficient(j, d, r, theta) * (h - m as f64).sqrt();
        if v > best.0 {
            best = (v, j);
        }
        if v < prev {
            decreasing += 1;
            if decreasing >= 3 {
                break;
            }
        } else {
            decreasing = 0;
        }
        prev = v;
    }
    Ok(best)
}

fn sweep_row(task: &RateTask, m: u64, seed: u64) -> Result<RateRow> {
    match *task {
        RateTask::SigmaLower { d, r, theta } => {
            let (error, layer) = sigma_lower_bound(m, d, r, theta)?;
            Ok(RateRow {
                m,
                error,
                seed,
                tags: format!("layer={layer}"),
            })
        }
        RateTask::SigmaUpper { d, r, theta, q, trials } => {
            let n = 63 - m.leading_zeros();
            let m_used = 1u64 << n;
            let budget = LayerBudget::new(n, d, r, theta.max(1.0))?;
            let mut best: Option<(f64, u32, usize, f64)> = None;
            for layer in budget.l + 1..=budget.l + 3 {
                let w = fooling_wiener(layer, d, r, theta)?;
                let res = layered_mterm(&w, m_used, q, r, theta, seed, trials)?;
                let c = res.layered.as_ref().map_or(0.0, |l| l.constant);
                if best.is_none_or(|b| res.error > b.0) {
                    best = Some((res.error, layer, res.term_count, c));
                }
            }
            let (error, layer, terms, c) = best.expect("three witnesses");
            Ok(RateRow {
                m: m_used,
                error,
                seed,
                tags: format!("layer={layer};terms={terms};constant={c:.6}"),
            })
        }
        RateTask::A2a { d, r, theta, eta } => {
            let t = fooling_a2a(m as usize, d, r, theta)?;
            let res = greedy_mterm(&t, m as usize, &SpaceParams::WienerPlain { eta })?;
            Ok(RateRow {
                m,
                error: res.error,
                seed,
                tags: String::new(),
            })
        }
        RateTask::Recovery { d, r, theta, q, c_budget, solver } => {
            let t = fooling_a2a(m as usize, d, r, theta)?;
            let m_radius = covering_radius(&t);
            let cfg = RecoveryConfig {
                n: m as usize,
                m_radius,
                q,
                c_budget,
                solver,
                ..RecoveryConfig::default()
            };
            let rep = recover_pipeline(&t, &cfg, seed)?;
            Ok(RateRow {
                m,
                error: rep.error,
                seed,
                tags: format!("samples={};M={};C_emp={:.6e}", rep.m, m_radius, rep.c_emp),
            })
        }
    }
}

/// Smallest power of two `M` with the support of `f` inside `[-M, M]^d`.
pub fn covering_radius(f: &SparseTrigPoly) -> u64 {
    f.max_freq().max(1).next_power_of_two()
}

/// One row per `(m, seed)`, sorted by `(m, seed)`.
pub fn rate_sweep(task: &RateTask, ms: &[u64], seeds: &[u64]) -> Result<RateTable> {
    task.validate()?;
    if ms.is_empty() || seeds.is_empty() {
        return invalid("m list and seed list must be nonempty");
    }
    if ms.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("m list must be strictly increasing");
    }
    let jobs: Vec<(u64, u64)> = ms
        .iter()
        .flat_map(|&m| seeds.iter().map(move |&s| (m, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(m, s)| sweep_row(task, m, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable::from_rows(rows))
}

/// Default trials used by sweeps of the layered construction.
pub const SWEEP_TRIALS: usize = DEFAULT_TRIALS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbeddingTag {
    #[serde(rename = "B-to-A-norm1")]
    BToANorm1,
    #[serde(rename = "B-to-A-general")]
    BToAGeneral,
    #[serde(rename = "W-to-A")]
    WToA,
    #[serde(rename = "A-to-B")]
    AToB,
    #[serde(rename = "A-to-W")]
    AToW,
}

impl EmbeddingTag {
    pub fn name(&self) -> &'static str {
        match self {
            EmbeddingTag::BToANorm1 => "B-to-A-norm1",
            EmbeddingTag::BToAGeneral => "B-to-A-general",
            EmbeddingTag::WToA => "W-to-A",
            EmbeddingTag::AToB => "A-to-B",
            EmbeddingTag::AToW => "A-to-W",
        }
    }

    /// `(target space, source space)` of the embedding `source -> target`.
    pub fn spaces(&self, r: f64, p: f64, theta: f64) -> Result<(SpaceParams, SpaceParams)> {
        let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                invalid(format!("{what} violated (r = {r}, p = {p}, theta = {theta})"))
            }
        };
        need(r >= 0.0, "r >= 0")?;
        match self {
            EmbeddingTag::BToANorm1 => {
                need(theta > 0.0 && theta <= 2.0 && p >= 2.0 && p.is_finite(), "0 < theta <= 2 <= p < inf")?;
                Ok((
                    SpaceParams::WienerWeighted { r, theta },
                    SpaceParams::Besov { r: r + inv(theta) - 0.5, p, theta },
                ))
            }
            EmbeddingTag::BToAGeneral => {
                need(p > 1.0 && p <= 2.0 && theta > 0.0 && theta <= 2.0, "1 < p <= 2, 0 < theta <= 2")?;
                Ok((
                    SpaceParams::WienerWeighted { r, theta },
                    SpaceParams::Besov { r: r + 1.0 / p + inv(theta) - 1.0, p, theta },
                ))
            }
            EmbeddingTag::WToA => {
                need(p > 1.0 && p <= 2.0, "1 < p <= 2")?;
                Ok((
                    SpaceParams::WienerWeighted { r, theta: p },
                    SpaceParams::SobolevW { r: r + 2.0 / p - 1.0, p },
                ))
            }
            EmbeddingTag::AToB => {
                need(p >= 2.0 && p.is_finite() && theta >= 2.0, "2 <= p < inf, 2 <= theta <= inf")?;
                Ok((
                    SpaceParams::Besov { r, p, theta },
                    SpaceParams::WienerWeighted { r: r + 1.0 - 1.0 / p - inv(theta), theta },
                ))
            }
            EmbeddingTag::AToW => {
                need(p >= 2.0 && p.is_finite(), "2 <= p < inf")?;
                Ok((
                    SpaceParams::SobolevW { r, p },
                    SpaceParams::WienerWeighted { r: r + 1.0 - 2.0 / p, theta: p },
                ))
            }
        }
    }
}

impl std::str::FromStr for EmbeddingTag {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "B-to-A-norm1" => Ok(EmbeddingTag::BToANorm1),
            "B-to-A-general" => Ok(EmbeddingTag::BToAGeneral),
            "W-to-A" => Ok(EmbeddingTag::WToA),
            "A-to-B" => Ok(EmbeddingTag::AToB),
            "A-to-W" => Ok(EmbeddingTag::AToW),
            other => Err(format!("unknown embedding tag {other:?}")),
        }
    }
}

/// Random polynomial with `terms` draws: each picks a layer uniformly in
/// `0..=max_layer`, then a uniform frequency of that layer; coefficients are
/// complex Gaussian.
pub fn random_layer_poly<R: Rng>(rng: &mut R, d: usize, max_layer: u32, terms: usize) -> SparseTrigPoly {
    let mut f = SparseTrigPoly::zero(d);
    for _ in 0..terms {
        let l = rng.random_range(0..=max_layer);
        let blocks = compositions(l, d);
        let j = &blocks[rng.random_range(0..blocks.len())];
        let k: Vec<i64> = j
            .levels()
            .iter()
            .map(|&lv| {
                let iv = dyadic_interval(lv);
                iv[rng.random_range(0..iv.len())]
            })
            .collect();
        let c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        f.add_term(MultiIndex::new(k), c).expect("dimension matches");
    }
    if f.is_empty() {
        f.insert(MultiIndex::zero(d), Complex64::new(1.0, 0.0)).expect("dimension matches");
    }
    f
}

/// `||f||_target / ||f||_source` for an embedding.
pub fn embedding_ratio(tag: EmbeddingTag, f: &SparseTrigPoly, r: f64, p: f64, theta: f64) -> Result<f64> {
    let (target, source) = tag.spaces(r, p, theta)?;
    Ok(norm(f, &target, None)? / norm(f, &source, None)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub tag: String,
    /// `(max layer, largest ratio)` per scale.
    pub per_scale: Vec<(u32, f64)>,
    pub max_ratio: f64,
    /// Slope of `ln(max ratio)` against `ln(2^scale)`.
    pub slope: f64,
    /// Trials whose ratio exceeded `1 + 1e-9` (norm-one case only).
    pub violations: usize,
    pub trials: usize,
    pub passed: bool,
}

/// Slack on the log-log slope that still counts as non-diverging.
pub const EMBEDDING_SLOPE_SLACK: f64 = 0.05;

/// Random polynomials across the layer scales `scales`; reports the largest
/// ratio per scale and the log-log growth slope.
pub fn embedding_check(
    tag: EmbeddingTag,
    d: usize,
    r: f64,
    p: f64,
    theta: f64,
    trials: usize,
    scales: std::ops::RangeInclusive<u32>,
    seed: u64,
) -> Result<EmbeddingReport> {
    tag.spaces(r, p, theta)?;
    if trials == 0 || scales.is_empty() {
        return invalid("trials >= 1 and a nonempty scale range are required");
    }
    let scale_list: Vec<u32> = scales.collect();
    let per_scale_trials = trials.div_ceil(scale_list.len());
    let mut per_scale = Vec::new();
    let mut violations = 0;
    let mut done = 0;
    for (si, &s) in scale_list.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((si as u64 + 1) << 32));
        let mut worst: f64 = 0.0;
        for _ in 0..per_scale_trials.min(trials - done) {
            let terms = rng.random_range(1..=24);
            let f = random_layer_poly(&mut rng, d, s, terms);
            let ratio = embedding_ratio(tag, &f, r, p, theta)?;
            if tag == EmbeddingTag::BToANorm1 && ratio > 1.0 + 1e-9 {
                violations += 1;
            }
            worst = worst.max(ratio);
            done += 1;
        }
        per_scale.push((s, worst));
    }
    let slope = if per_scale.len() >= 2 {
        let xs: Vec<f64> = per_scale.iter().map(|(s, _)| *s as f64 * 2f64.ln()).collect();
        let ys: Vec<f64> = per_scale.iter().map(|(_, v)| v.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx > 0.0 { sxy / sxx } else { 0.0 }
    } else {
        0.0
    };
    let max_ratio = per_scale.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    Ok(EmbeddingReport {
        tag: tag.name().to_string(),
        per_scale,
        max_ratio,
        slope,
        violations,
        trials: done,
        passed: violations == 0 && slope <= EMBEDDING_SLOPE_SLACK,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    pub passed: bool,
    /// Largest observed `lhs / rhs` (or band factor for stability checks).
    pub worst_margin: f64,
    pub cases: usize,
}

/// `sum_{k=L+1}^{L+200} (k-L)^alpha k^beta 2^(-gamma k) / (L^beta 2^(-gamma L))`
pub fn geo_sum_ratio(alpha: f64, beta: f64, gamma: f64, l: u32) -> f64 {
    let lf = l as f64;
    (1..=200u32)
        .map(|t| {
            let k = lf + t as f64;
            (t as f64).powf(alpha) * (k / lf).powf(beta) * 2f64.powf(-gamma * t as f64)
        })
        .sum()
}

/// Exponent grid for the geometric-sum stability check.
pub const GEO_SUM_GRID: ([f64; 4], [f64; 3], [f64; 3]) =
    ([-1.0, 0.0, 1.0, 2.0], [-0.5, 0.0, 0.5], [1.0, 1.5, 2.0]);

pub fn check_geo_sum() -> LemmaCheck {
    let (alphas, betas, gammas) = GEO_SUM_GRID;
    let mut worst: f64 = 1.0;
    let mut cases = 0;
    for &a in &alphas {
        for &b in &betas {
            for &g in &gammas {
                let vals: Vec<f64> = (2..=40).map(|l| geo_sum_ratio(a, b, g, l)).collect();
                let hi = vals.iter().cloned().fold(0.0, f64::max);
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                worst = worst.max(hi / lo);
                cases += 1;
            }
        }
    }
    LemmaCheck {
        name: "geo_sum".into(),
        passed: worst <= 2.0,
        worst_margin: worst,
        cases,
    }
}

fn random_sequence(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.random_range(1..=40);
    (0..len)
        .map(|_| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random::<f64>().powi(rng.random_range(1..=4)) * 10f64.powi(rng.random_range(-3..=3))
            }
        })
        .collect()
}

fn random_exponent_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let p = 0.1 + rng.random::<f64>() * 3.9;
    let q = if rng.random_bool(0.15) {
        f64::INFINITY
    } else {
        p + 0.05 + rng.random::<f64>() * 4.0
    };
    (p, q)
}

/// `||x||_p <= ||x||_q ||x||_0^((q-p)/(q p))` on `instances` random sequences.
pub fn check_csi(instances: usize, seed: u64) -> LemmaCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..instances {
        let x = random_sequence(&mut rng);
        let (p, q) = random_exponent_pair(&mut rng);
        let support = x.iter().filter(|v| **v != 0.0).count() as f64;
        let lhs = lp_norm_of(x.iter().copied(), p);
        let expo = if q.is_infinite() { 1.0 / p } else { (q - p) / (q * p) };
        let rhs = lp_norm_of(x.iter().copied(), q) * support.powf(expo);
        if lhs == 0.0 {
            continue;
        }
        let ratio = lhs / rhs;
        worst = worst.max(ratio);
        if ratio > 1.0 + 1e-12 {
            violations += 1;
        }
    }
    LemmaCheck {
        name: "csi".into(),
        passed: violations == 0,
        worst_margin: worst,
        cases: instances,
    }
}

/// Exact tail `sigma_m(x)_q` against the bound `(m+1)^(1/q-1/p) ||x||_p`.
pub fn check_stechkin(instances: usize, seed: u64) -> LemmaCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..instances {
        let x = random_sequence(&mut rng);
        let (p, q) = random_exponent_pair(&mut rng);
        let m = rng.random_range(0..=x.len() + 2);
        let tail = sequence_tail(&x, q, m);
        let bound = stechkin_bound(&x, p, q, m).expect("valid exponents");
        if tail == 0.0 {
            continue;
        }
        let ratio = tail / bound;
        worst = worst.max(ratio);
        if ratio > 1.0 + 1e-12 {
            violations += 1;
        }
    }
    LemmaCheck {
        name: "stechkin".into(),
        passed: violations == 0,
        worst_margin: worst,
        cases: instances,
    }
}

/// Exhaustive `2^(n-d) < omega_k <= 2^n` and `|H_n| = 2^n binom(n+d-1, n)`
/// for `d <= max_d`, `n <= max_n`.
pub fn check_weight_sandwich(max_d: usize, max_n: u32) -> Result<LemmaCheck> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut passed = true;
    for d in 1..=max_d {
        for n in 0..=max_n {
            let layer = enumerate_layer(n, d, DEFAULT_INDEX_CAP)?;
            if layer.len() as u128 != layer_cardinality(n, d)? {
                passed = false;
            }
            let hi = 1u128 << n;
            for k in &layer {
                let w = weight(k)?.value();
                // 2^(n-d) < w  <=>  2^n < w 2^d
                if !(w <= hi && hi < w << d) {
                    passed = false;
                }
                worst = worst.max(w as f64 / hi as f64);
                cases += 1;
            }
        }
    }
    Ok(LemmaCheck {
        name: "weight_sandwich".into(),
        passed,
        worst_margin: worst,
        cases,
    })
}

/// `sup_{H_{n-d}} omega <= inf_{H_n} omega <= sup_{H_n} omega <= inf_{H_{n+d}} omega`.
pub fn check_order_weights(max_d: usize, max_n: u32) -> Result<LemmaCheck> {
    let extremes = |n: u32, d: usize| -> Result<(u128, u128)> {
        let layer = enumerate_layer(n, d, DEFAULT_INDEX_CAP)?;
        let ws = layer.iter().map(|k| weight(k).map(|w| w.value())).collect::<Result<Vec<_>>>()?;
        Ok((*ws.iter().min().unwrap(), *ws.iter().max().unwrap()))
    };
    let mut passed = true;
    let mut cases = 0;
    for d in 1..=max_d {
        for n in d as u32..=max_n {
            let (_, sup_lo) = extremes(n - d as u32, d)?;
            let (inf_n, sup_n) = extremes(n, d)?;
            let (inf_hi, _) = extremes(n + d as u32, d)?;
            if !(sup_lo <= inf_n && inf_n <= sup_n && sup_n <= inf_hi) {
                passed = false;
            }
            cases += 1;
        }
    }
    Ok(LemmaCheck {
        name: "order_weights".into(),
        passed,
        worst_margin: 0.0,
        cases,
    })
}

/// `omega_{2^n n^(d-1)} / 2^n` stays in a band of width `4^d` for `n` in `2..=max_n`.
pub fn check_weight_asymptotics(d: usize, max_n: u32) -> Result<LemmaCheck> {
    let count = (1usize << max_n) * (max_n as usize).pow(d as u32 - 1);
    let sorted = sorted_frequencies(count, d, DEFAULT_INDEX_CAP)?;
    let vals: Vec<f64> = (2..=max_n)
        .map(|n| {
            let idx = (1usize << n) * (n as usize).pow(d as u32 - 1);
            sorted[idx - 1].weight_f64() / 2f64.powi(n as i32)
        })
        .collect();
    let hi = vals.iter().cloned().fold(0.0, f64::max);
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let band = hi / lo;
    Ok(LemmaCheck {
        name: format!("weight_asymptotics_d{d}"),
        passed: band <= 4f64.powi(d as i32),
        worst_margin: band,
        cases: vals.len(),
    })
}

/// Runs every numeric lemma suite with fixed grids and seeds.
pub fn verify_auxiliary_lemmas() -> Result<Vec<LemmaCheck>> {
    Ok(vec![
        check_geo_sum(),
        check_csi(1000, 1),
        check_stechkin(1000, 2),
        check_weight_sandwich(3, 10)?,
        check_order_weights(3, 8)?,
        check_weight_asymptotics(2, 12)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapTables {
    pub linear: RateTable,
    pub nonlinear: RateTable,
    /// `nonlinear / linear` per `(n, seed)`.
    pub ratio: RateTable,
}

/// The sampling witnesses for sparsity `n`: a unit spike at the first
/// frequency outside the linear projection and the sorted-frequency witness.
pub fn gap_witnesses(n: usize, d: usize, r: f64, theta: f64) -> Result<Vec<SparseTrigPoly>> {
    let sorted = sorted_frequencies(n + 1, d, DEFAULT_INDEX_CAP)?;
    let k = sorted[n].clone();
    let spike = SparseTrigPoly::monomial(k.clone(), Complex64::new(k.weight_f64().powf(-r), 0.0));
    Ok(vec![spike, fooling_a2a(n, d, r, theta)?])
}

/// Paired sweep over sparsities `ns`: the linear arm projects onto the first
/// `n` weight-sorted frequencies, the nonlinear arm runs the recovery
/// pipeline with sparsity `n`. Each arm reports its worst witness.
pub fn sampling_gap_experiment(
    d: usize,
    r: f64,
    theta: f64,
    ns: &[u64],
    seeds: &[u64],
    c_budget: f64,
) -> Result<GapTables> {
    check_wiener_rate(r, theta)?;
    if ns.is_empty() || seeds.is_empty() {
        return invalid("n list and seed list must be nonempty");
    }
    let jobs: Vec<(u64, u64)> = ns
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(n, seed)| -> Result<(RateRow, RateRow, RateRow)> {
            let witnesses = gap_witnesses(n as usize, d, r, theta)?;
            let mut lin: f64 = 0.0;
            let mut nonlin: f64 = 0.0;
            let mut samples = 0;
            let mut radius = 0;
            for w in &witnesses {
                lin = lin.max(linear_baseline(w, n as usize)?.error);
                let m_radius = covering_radius(w);
                let cfg = RecoveryConfig {
                    n: n as usize,
                    m_radius,
                    q: 2.0,
                    c_budget,
                    ..RecoveryConfig::default()
                };
                let rep = recover_pipeline(w, &cfg, seed)?;
                nonlin = nonlin.max(rep.error);
                samples = samples.max(rep.m);
                radius = radius.max(m_radius);
            }
            let tags = format!("samples={samples};M={radius}");
            Ok((
                RateRow { m: n, error: lin, seed, tags: tags.clone() },
                RateRow { m: n, error: nonlin, seed, tags: tags.clone() },
                RateRow { m: n, error: nonlin / lin, seed, tags },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut l, mut nl, mut ra) = (Vec::new(), Vec::new(), Vec::new());
    for (a, b, c) in rows {
        l.push(a);
        nl.push(b);
        ra.push(c);
    }
    Ok(GapTables {
        linear: RateTable::from_rows(l),
        nonlinear: RateTable::from_rows(nl),
        ratio: RateTable::from_rows(ra),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> RateTable {
        RateTable::from_rows(
            (4..=14)
                .map(|n| {
                    let m = 1u64 << n;
                    RateRow { m, error: f(m as f64), seed: 0, tags: String::new() }
                })
                .collect(),
        )
    }

    #[test]
    fn fit_synthetic_power_laws() {
        let t = synthetic(|m| 3.0 * m.powf(-1.5) * m.log2());
        let fit = fit_rate(&t, Some(1.0)).unwrap();
        assert!((fit.a - 1.5).abs() < 1e-6);
        assert!((fit.c - 3.0).abs() < 1e-6);
        let free = fit_rate(&t, None).unwrap();
        assert!((free.a - 1.5).abs() < 1e-6 && (free.b - 1.0).abs() < 1e-6);
        let flat = fit_rate(&synthetic(|_| 0.25), Some(0.0)).unwrap();
        assert!(flat.a.abs() < 1e-12);
        assert!(flat.residual_rms < 1e-12);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        let mut t = synthetic(|m| 1.0 / m);
        t.rows.truncate(3);
        assert!(matches!(fit_rate(&t, None), Err(Error::DegenerateFit(_))));
        let same = RateTable::from_rows(
            (0..5).map(|s| RateRow { m: 64, error: 0.1, seed: s, tags: String::new() }).collect(),
        );
        assert!(fit_rate(&same, Some(0.0)).is_err());
        let mut z = synthetic(|m| 1.0 / m);
        z.rows[2].error = 0.0;
        assert!(fit_rate(&z, None).is_err());
    }

    #[test]
    fn m_list_parsing() {
        assert_eq!(parse_m_list("64..16384").unwrap().len(), 9);
        assert_eq!(parse_m_list("4,8,12").unwrap(), vec![4, 8, 12]);
        assert!(parse_m_list("3..16").is_err());
        assert!(parse_m_list("x").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = synthetic(|m| m.powf(-0.3));
        let text = t.to_csv();
        assert!(text.starts_with("m,error,seed,tags\n"));
        assert_eq!(RateTable::from_csv(&text).unwrap(), t);
    }

    #[test]
    fn sigma_lower_matches_fooling_tail() {
        for m in [64u64, 300, 1000] {
            let (v, layer) = sigma_lower_bound(m, 2, 1.0, 1.0).unwrap();
            let f = fooling_wiener(layer, 2, 1.0, 1.0).unwrap();
            let exact = greedy_mterm(&f, m as usize, &SpaceParams::Lebesgue { q: 2.0 }).unwrap().error;
            assert!((v - exact).abs() <= 1e-12 * exact);
        }
    }

    #[test]
    fn sweep_rejects_bad_parameters() {
        let task = RateTask::SigmaLower { d: 2, r: 0.0, theta: 0.5 };
        assert!(matches!(rate_sweep(&task, &[64], &[0]), Err(Error::InvalidParameter(_))));
        let a2a = RateTask::A2a { d: 1, r: 0.0, theta: 1.0, eta: 2.0 };
        assert!(rate_sweep(&a2a, &[4, 8], &[0]).is_err());
    }

    #[test]
    fn a2a_sweep_closed_form() {
        // r = 0, theta = 1, eta = 2, d = 1: sigma_m = sqrt(m) / (2m)
        let task = RateTask::A2a { d: 1, r: 1e-300, theta: 1.0, eta: 2.0 };
        let t = rate_sweep(&task, &[4, 8, 16, 32], &[0]).unwrap();
        for row in &t.rows {
            let m = row.m as f64;
            assert!((row.error - m.sqrt() / (2.0 * m)).abs() < 1e-12);
        }
    }

    #[test]
    fn norm1_embedding_equality_at_constant() {
        let one = SparseTrigPoly::constant(3, Complex64::new(1.0, 0.0));
        let ratio = embedding_ratio(EmbeddingTag::BToANorm1, &one, 0.7, 3.0, 1.5).unwrap();
        assert!((ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn a_to_b_single_mode_closed_form() {
        let (r, p, theta) = (0.5, 4.0, 3.0);
        for k in [vec![5i64, -3], vec![0, 17], vec![-1, 1]] {
            let k = MultiIndex::new(k);
            let f = SparseTrigPoly::monomial(k.clone(), Complex64::new(1.0, 0.0));
            let j = crate::index::block_of(&k);
            let expected = 2f64.powf(j.l1() as f64 * r)
                / k.weight_f64().powf(r + 1.0 - 1.0 / p - 1.0 / theta);
            let got = embedding_ratio(EmbeddingTag::AToB, &f, r, p, theta).unwrap();
            assert!((got - expected).abs() < 1e-9 * expected);
        }
    }

    #[test]
    fn lemma_suites_pass() {
        for check in verify_auxiliary_lemmas().unwrap() {
            assert!(check.passed, "{check:?}");
        }
    }

    #[test]
    fn csi_equality_case() {
        let x = [1.0, 1.0];
        let lhs = lp_norm_of(x, 1.0);
        let rhs = lp_norm_of(x, 2.0) * 2f64.powf(0.5);
        assert!((lhs - rhs).abs() < 1e-15);
    }
}
