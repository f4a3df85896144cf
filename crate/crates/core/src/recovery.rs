//! Sampling recovery from i.i.d. uniform samples.
//!
//! A function is sampled at `m` random points, a sparse approximant on the
//! cube `[-D, D]^d` with `D = (2d + 1) M` is computed by orthogonal matching
//! pursuit or the square-root Lasso, and the error is compared against
//! `n^(1/2 - 1/q) (n^(-1/2) sigma_n(f)_A + E)` where `E` is the `l_1` tail
//! outside `[-M, M]^d`.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::index::{sorted_frequencies, DEFAULT_INDEX_CAP};
use crate::measure::{mode_value, FourierCube, Measurement};
use crate::mterm::{greedy_mterm, log_star_u};
use crate::poly::{
    best_trig_error_surrogate, evaluate_grid, GridSpec, SpaceParams, SparseTrigPoly,
    DEFAULT_GRID_CAP, LINF_OVERSAMPLING, LQ_OVERSAMPLING,
};

/// Condition estimates above this abort the least-squares refit.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub dim: usize,
    /// Row-major `m x d`, every coordinate in `[0, 1)`.
    pub points: Vec<f64>,
    pub values: Vec<Complex64>,
    pub seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }
}

/// `m` i.i.d. uniform points in `[0, 1)^d`, row-major.
pub fn draw_samples(m: usize, d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m * d).map(|_| rng.random::<f64>()).collect()
}

/// Samples a polynomial at fresh random points.
pub fn sample_poly(f: &SparseTrigPoly, m: usize, seed: u64) -> SampleSet {
    let d = f.dim();
    let points = draw_samples(m, d, seed);
    let terms: Vec<(&[i64], Complex64)> = f.iter().map(|(k, c)| (k.coords(), *c)).collect();
    let values = points
        .par_chunks(d)
        .map(|x| terms.iter().map(|(k, c)| c * mode_value(k, x)).sum())
        .collect();
    SampleSet {
        dim: d,
        points,
        values,
        seed,
    }
}

/// `ceil(C n d log*(n)^2 log*(M))`.
pub fn sample_budget(n: u64, m_radius: u64, d: usize, c: f64) -> Result<u64> {
    if n == 0 || m_radius == 0 || d == 0 || c.is_nan() || c <= 0.0 {
        return invalid("n, M, d and C must be positive");
    }
    let ln = log_star_u(n);
    let v = (c * n as f64 * d as f64 * ln * ln * log_star_u(m_radius)).ceil();
    if !v.is_finite() || v > (1u64 << 53) as f64 {
        return Err(Error::Overflow("sample budget"));
    }
    Ok(v as u64)
}

/// `D = (2d + 1) M`.
pub fn recovery_radius(d: usize, m_radius: u64) -> u64 {
    (2 * d as u64 + 1) * m_radius
}

fn poly_from_cube(cube: &FourierCube, entries: impl IntoIterator<Item = (usize, Complex64)>) -> SparseTrigPoly {
    SparseTrigPoly::from_terms(cube.dim, entries.into_iter().map(|(i, c)| (cube.freq_at(i), c)))
        .expect("cube dimension matches")
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // sum conj(a_i) b_i
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn l2(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpFit {
    pub approximant: SparseTrigPoly,
    /// `||residual||_2` before the first and after each selection.
    pub residual_history: Vec<f64>,
    /// `max |R_ii| / min |R_ii|` of the final QR factor.
    pub condition: f64,
}

/// Orthogonal matching pursuit on an explicit measurement operator.
///
/// Each step adds the unselected frequency with the largest `|A^* r|`
/// (lowest lexicographic index on ties), orthogonalizes its column against
/// the selected ones (Gram-Schmidt, twice) and updates the least-squares
/// residual. Stops after `n` terms or once `||r|| <= tol ||y||`.
pub fn omp(op: &Measurement, y: &[Complex64], n: usize, tol: f64) -> Result<OmpFit> {
    let cube = op.cube();
    let y_norm = l2(y);
    if y_norm == 0.0 || n == 0 {
        return Ok(OmpFit {
            approximant: SparseTrigPoly::zero(cube.dim),
            residual_history: vec![y_norm],
            condition: 1.0,
        });
    }
    let mut selected: Vec<usize> = Vec::new();
    let mut q_cols: Vec<Vec<Complex64>> = Vec::new();
    // r_upper[i][j] for i <= j, stored by column
    let mut r_cols: Vec<Vec<Complex64>> = Vec::new();
    let mut qty: Vec<Complex64> = Vec::new();
    let mut residual = y.to_vec();
    let mut history = vec![y_norm];
    let mut is_selected = vec![false; cube.len()];
    let mut condition = 1.0;

    while selected.len() < n.min(cube.len()) && *history.last().unwrap() > tol * y_norm {
        let corr = op.adjoint(&residual)?;
        let mut best: Option<(usize, f64)> = None;
        for (i, z) in corr.iter().enumerate() {
            if is_selected[i] {
                continue;
            }
            let v = z.norm_sqr();
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        let Some((idx, _)) = best else { break };
        let mut v = op.column(idx);
        let mut rcol = vec![Complex64::new(0.0, 0.0); selected.len() + 1];
        for _ in 0..2 {
            for (i, q) in q_cols.iter().enumerate() {
                let h = dot(q, &v);
                rcol[i] += h;
                for (vj, qj) in v.iter_mut().zip(q) {
                    *vj -= h * qj;
                }
            }
        }
        let diag = l2(&v);
        rcol[selected.len()] = Complex64::new(diag, 0.0);
        let diags = r_cols
            .iter()
            .enumerate()
            .map(|(i, c)| c[i].norm())
            .chain(std::iter::once(diag));
        let (lo, hi) = diags.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
        condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if condition > MAX_CONDITION {
            return Err(Error::IllConditioned { condition });
        }
        for vj in v.iter_mut() {
            *vj /= diag;
        }
        let h = dot(&v, &residual);
        for (rj, qj) in residual.iter_mut().zip(&v) {
            *rj -= h * qj;
        }
        qty.push(dot(&v, y));
        q_cols.push(v);
        r_cols.push(rcol);
        selected.push(idx);
        is_selected[idx] = true;
        history.push(l2(&residual));
    }

    // back substitution R c = Q^* y
    let s = selected.len();
    let mut coef = vec![Complex64::new(0.0, 0.0); s];
    for i in (0..s).rev() {
        let mut acc = qty[i];
        for (j, cj) in coef.iter().enumerate().skip(i + 1) {
            acc -= r_cols[j][i] * cj;
        }
        coef[i] = acc / r_cols[i][i];
    }
    Ok(OmpFit {
        approximant: poly_from_cube(&cube, selected.into_iter().zip(coef)),
        residual_history: history,
        condition,
    })
}

/// OMP on the cube `[-D, D]^d` from a sample set.
pub fn omp_recover(samples: &SampleSet, radius: u64, n: usize, tol: f64) -> Result<OmpFit> {
    if samples.is_empty() {
        return invalid("samples must be nonempty");
    }
    let cube = FourierCube::new(samples.dim, radius)?;
    let op = Measurement::new(cube, &samples.points)?;
    omp(&op, &samples.values, n, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub approximant: SparseTrigPoly,
    /// `||y - A c||_2 / sqrt(m) + lambda ||c||_1` at the returned iterate.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Relative objective change of the last accepted step.
    pub last_change: f64,
    /// Objective after each accepted step, starting from `c = 0`.
    pub history: Vec<f64>,
}

/// `sqrt(2 log N / m)`.
pub fn default_lambda(n_unknowns: usize, m: usize) -> f64 {
    (2.0 * (n_unknowns.max(2) as f64).ln() / m as f64).sqrt()
}

fn soft_threshold(v: Complex64, t: f64) -> Complex64 {
    let a = v.norm();
    if a <= t {
        Complex64::new(0.0, 0.0)
    } else {
        v * (1.0 - t / a)
    }
}

/// Square-root Lasso by proximal gradient on the jointly convex scaled form
/// `||y - A c||^2 / (2 m s) + s / 2 + lambda ||c||_1`.
///
/// Each iteration takes one backtracked proximal step in `c` for the current
/// scale `s` and then sets `s = ||y - A c|| / sqrt(m)`, which returns the
/// joint objective to the square-root Lasso objective. Steps that would
/// increase the objective are rejected, so the recorded objective sequence is
/// nonincreasing.
pub fn sqrt_lasso(
    op: &Measurement,
    y: &[Complex64],
    lambda: f64,
    iters: usize,
    tol: f64,
) -> Result<LassoFit> {
    if lambda.is_nan() || lambda <= 0.0 {
        return invalid(format!("lambda > 0 violated (lambda = {lambda})"));
    }
    let cube = op.cube();
    let m = y.len() as f64;
    let sqrt_m = m.sqrt();
    let n = cube.len();
    let y_norm = l2(y);
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let objective = |res: &[Complex64], c: &[Complex64]| {
        l2(res) / sqrt_m + lambda * c.iter().map(|v| v.norm()).sum::<f64>()
    };
    let mut residual = y.to_vec();
    let mut obj = objective(&residual, &c);
    let mut history = vec![obj];
    if y_norm == 0.0 {
        return Ok(LassoFit {
            approximant: SparseTrigPoly::zero(cube.dim),
            objective: 0.0,
            iterations: 0,
            converged: true,
            last_change: 0.0,
            history,
        });
    }
    // power iteration for ||A||^2 from a deterministic start
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    let mut op_norm_sq = 0.0;
    for _ in 0..30 {
        let av = op.forward(&v)?;
        let w = op.adjoint(&av)?;
        let nw = l2(&w);
        op_norm_sq = nw / l2(&v);
        if nw == 0.0 {
            break;
        }
        v = w.into_iter().map(|x| x / nw).collect();
    }
    // step in c is alpha * s; alpha <= m / ||A||^2 guarantees descent
    let mut alpha = m / (op_norm_sq * 1.05).max(f64::MIN_POSITIVE);
    let floor = 1e-14 * y_norm / sqrt_m;
    let mut scale = (l2(&residual) / sqrt_m).max(floor);
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;
    let joint = |res: &[Complex64], c: &[Complex64], s: f64| {
        res.iter().map(|v| v.norm_sqr()).sum::<f64>() / (2.0 * m * s)
            + s / 2.0
            + lambda * c.iter().map(|v| v.norm()).sum::<f64>()
    };
    while iterations < iters {
        iterations += 1;
        let grad = op.adjoint(&residual)?;
        let base = joint(&residual, &c, scale);
        let mut accepted = None;
        for _ in 0..60 {
            let t = alpha * scale;
            let cand: Vec<Complex64> = c
                .iter()
                .zip(&grad)
                .map(|(ci, gi)| soft_threshold(ci + gi * (t / (m * scale)), t * lambda))
                .collect();
            let res_cand: Vec<Complex64> = {
                let ac = op.forward(&cand)?;
                y.iter().zip(ac).map(|(yi, ai)| yi - ai).collect()
            };
            if joint(&res_cand, &cand, scale) <= base * (1.0 + 1e-15) {
                accepted = Some((cand, res_cand));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand, res_cand)) = accepted else {
            break;
        };
        let new_obj = objective(&res_cand, &cand);
        if new_obj > obj {
            // rounding made the step worse in the true objective; stop here
            last_change = 0.0;
            converged = true;
            break;
        }
        last_change = (obj - new_obj) / obj.max(f64::MIN_POSITIVE);
        c = cand;
        residual = res_cand;
        obj = new_obj;
        history.push(obj);
        scale = (l2(&residual) / sqrt_m).max(floor);
        alpha *= 1.2;
        if last_change < tol {
            converged = true;
            break;
        }
    }
    Ok(LassoFit {
        approximant: poly_from_cube(
            &cube,
            c.into_iter()
                .enumerate()
                .filter(|(_, v)| *v != Complex64::new(0.0, 0.0)),
        ),
        objective: obj,
        iterations,
        converged,
        last_change,
        history,
    })
}

pub fn sqrt_lasso_recover(
    samples: &SampleSet,
    radius: u64,
    lambda: f64,
    iters: usize,
    tol: f64,
) -> Result<LassoFit> {
    if samples.is_empty() {
        return invalid("samples must be nonempty");
    }
    let cube = FourierCube::new(samples.dim, radius)?;
    let op = Measurement::new(cube, &samples.points)?;
    sqrt_lasso(&op, &samples.values, lambda, iters, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Omp,
    SqrtLasso,
}

impl Solver {
    pub fn tag(&self) -> &'static str {
        match self {
            Solver::Omp => "omp",
            Solver::SqrtLasso => "sqrt_lasso",
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "omp" => Ok(Solver::Omp),
            "sqrt_lasso" | "sqrt-lasso" | "rlasso" => Ok(Solver::SqrtLasso),
            other => Err(format!("unknown solver {other:?} (expected omp or sqrt_lasso)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    /// Sparsity `n`.
    pub n: usize,
    /// Cube radius `M`.
    pub m_radius: u64,
    pub q: f64,
    /// Constant in the sample budget.
    pub c_budget: f64,
    pub solver: Solver,
    /// Square-root Lasso weight; `None` selects `sqrt(2 log N / m)`.
    pub lambda: Option<f64>,
    pub iters: usize,
    pub tol: f64,
    /// Largest grid used to measure `L_q` errors for `q != 2`.
    pub grid_cap: usize,
    /// Record wall-clock time in reports (off keeps reports bit-identical).
    pub timing: bool,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            n: 16,
            m_radius: 32,
            q: 2.0,
            c_budget: 2.0,
            solver: Solver::Omp,
            lambda: None,
            iters: 500,
            tol: 1e-10,
            grid_cap: DEFAULT_GRID_CAP,
            timing: false,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("n >= 1 violated");
        }
        if self.m_radius == 0 {
            return invalid("M >= 1 violated");
        }
        if self.q.is_nan() || self.q < 2.0 {
            return invalid(format!("2 <= q <= inf violated (q = {})", self.q));
        }
        if self.c_budget.is_nan() || self.c_budget <= 0.0 {
            return invalid("C > 0 violated");
        }
        if let Some(l) = self.lambda {
            if l.is_nan() || l <= 0.0 {
                return invalid("lambda > 0 violated");
            }
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return invalid("tol >= 0 violated");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub seed: u64,
    pub m: u64,
    pub n: usize,
    #[serde(rename = "M")]
    pub m_radius: u64,
    pub q: f64,
    pub solver: String,
    pub error: f64,
    pub sigma_n_a: f64,
    #[serde(rename = "E_surrogate")]
    pub e_surrogate: f64,
    #[serde(rename = "C_emp")]
    pub c_emp: f64,
    pub wall_time_ms: u64,
    /// Recovery cube radius `D`.
    pub radius: u64,
    pub terms: usize,
    /// Oversampling of the error grid (0 when the error is exact).
    pub grid_oversampling: usize,
    /// Solver convergence (always true for OMP).
    pub converged: bool,
    #[serde(skip)]
    pub approximant: SparseTrigPoly,
}

impl RecoveryReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }
}

/// `||g||_{L_q}` for the pipeline: exact for `q = 2`, otherwise on the
/// default grid with the oversampling reduced until it fits `cap`.
fn pipeline_error(g: &SparseTrigPoly, q: f64, cap: usize) -> Result<(f64, usize)> {
    if q == 2.0 {
        return Ok((g.coefficient_l2(), 0));
    }
    if g.is_empty() {
        return Ok((0.0, 0));
    }
    let mut s = if q.is_infinite() { LINF_OVERSAMPLING } else { LQ_OVERSAMPLING };
    loop {
        let grid = GridSpec::for_poly(g, s);
        if grid.total_points() <= cap.min(DEFAULT_GRID_CAP) {
            return Ok((evaluate_grid(g, &grid)?.lq_norm(q), s));
        }
        if s == 1 {
            return Err(Error::CapExceeded {
                what: "error grid points",
                predicted: grid.total_points() as u128,
                cap: cap as u128,
            });
        }
        s -= 1;
    }
}

/// Samples `f`, recovers it and reports the error against the bound terms.
pub fn recover_pipeline(f: &SparseTrigPoly, config: &RecoveryConfig, seed: u64) -> Result<RecoveryReport> {
    config.validate()?;
    let start = Instant::now();
    let d = f.dim();
    let m = sample_budget(config.n as u64, config.m_radius, d, config.c_budget)?;
    let radius = recovery_radius(d, config.m_radius);
    let samples = sample_poly(f, m as usize, seed);
    let (approximant, converged) = match config.solver {
        Solver::Omp => (omp_recover(&samples, radius, config.n, config.tol)?.approximant, true),
        Solver::SqrtLasso => {
            let cube = FourierCube::new(d, radius)?;
            let lambda = config.lambda.unwrap_or_else(|| default_lambda(cube.len(), m as usize));
            let fit = sqrt_lasso_recover(&samples, radius, lambda, config.iters, config.tol)?;
            (fit.approximant, fit.converged)
        }
    };
    let (error, grid_oversampling) = pipeline_error(&f.sub(&approximant)?, config.q, config.grid_cap)?;
    let sigma_n_a = greedy_mterm(f, config.n, &SpaceParams::WienerPlain { eta: 1.0 })?.error;
    let e_surrogate = best_trig_error_surrogate(f, config.m_radius);
    let n = config.n as f64;
    let inv_q = if config.q.is_infinite() { 0.0 } else { 1.0 / config.q };
    let denom = n.powf(0.5 - inv_q) * (sigma_n_a / n.sqrt() + e_surrogate);
    let c_emp = if denom > 0.0 { error / denom } else { f64::NAN };
    let wall_time_ms = if config.timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    Ok(RecoveryReport {
        seed,
        m,
        n: config.n,
        m_radius: config.m_radius,
        q: config.q,
        solver: config.solver.tag().to_string(),
        error,
        sigma_n_a,
        e_surrogate,
        c_emp,
        wall_time_ms,
        radius,
        terms: approximant.len(),
        grid_oversampling,
        converged,
        approximant,
    })
}

/// Independent pipeline runs, one per seed, in seed order.
pub fn recover_many(f: &SparseTrigPoly, config: &RecoveryConfig, seeds: &[u64]) -> Result<Vec<RecoveryReport>> {
    seeds
        .par_iter()
        .map(|&s| recover_pipeline(f, config, s))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearReport {
    pub m: usize,
    pub error: f64,
    /// Support of `f` that falls inside the first `m` frequencies.
    pub overlap: usize,
}

/// `L_2` error of projecting `f` onto the first `m` frequencies in weight
/// order: an idealized proxy for any linear method using `m` samples.
pub fn linear_baseline(f: &SparseTrigPoly, m: usize) -> Result<LinearReport> {
    if m == 0 {
        return invalid("m >= 1 violated");
    }
    let kept = sorted_frequencies(m, f.dim(), DEFAULT_INDEX_CAP)?;
    let last = kept.last().expect("m >= 1");
    let key_last = (last.weight_f64(), last.clone());
    let mut tail = 0.0;
    let mut overlap = 0;
    for (k, c) in f.iter() {
        let w = k.weight_f64();
        let inside = w < key_last.0 || (w == key_last.0 && *k <= key_last.1);
        if inside {
            overlap += 1;
        } else {
            tail += c.norm_sqr();
        }
    }
    Ok(LinearReport {
        m,
        error: tail.sqrt(),
        overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::MultiIndex;
    use crate::mterm::fooling_wiener;

    fn random_sparse(d: usize, n: usize, radius: i64, seed: u64) -> SparseTrigPoly {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SparseTrigPoly::zero(d);
        while f.len() < n {
            let k = MultiIndex::new((0..d).map(|_| rng.random_range(-radius..=radius)).collect());
            let c = Complex64::from_polar(1.0 + rng.random::<f64>(), rng.random::<f64>() * 6.0);
            f.insert(k, c).unwrap();
        }
        f
    }

    #[test]
    fn budget_examples() {
        assert_eq!(sample_budget(16, 256, 2, 1.0).unwrap(), 4096);
        assert_eq!(sample_budget(1, 1, 1, 1.0).unwrap(), 1);
        assert_eq!(sample_budget(16, 256, 2, 2.0).unwrap(), 8192);
        assert_eq!(sample_budget(32, 64, 2, 2.0).unwrap(), 19200);
        assert!(sample_budget(0, 1, 1, 1.0).is_err());
        assert!(matches!(sample_budget(u64::MAX / 2, u64::MAX, 4, 1e6), Err(Error::Overflow(_))));
    }

    #[test]
    fn samples_are_deterministic_and_uniform() {
        assert_eq!(draw_samples(50, 3, 9), draw_samples(50, 3, 9));
        assert_ne!(draw_samples(50, 3, 9), draw_samples(50, 3, 10));
        let pts = draw_samples(100_000, 2, 1);
        for a in 0..2 {
            let mean: f64 = pts.iter().skip(a).step_by(2).sum::<f64>() / 100_000.0;
            assert!((mean - 0.5).abs() < 0.01);
        }
        let one = draw_samples(1, 4, 0);
        assert!(one.iter().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn omp_one_sparse_exact() {
        let f = SparseTrigPoly::monomial(MultiIndex::new(vec![3, -5]), Complex64::new(0.4, -1.2));
        let samples = sample_poly(&f, 8, 4);
        let fit = omp_recover(&samples, 6, 1, 1e-12).unwrap();
        assert_eq!(fit.approximant.len(), 1);
        let err = f.sub(&fit.approximant).unwrap().coefficient_l2();
        assert!(err <= 1e-8);
    }

    #[test]
    fn omp_zero_values() {
        let samples = SampleSet {
            dim: 2,
            points: draw_samples(10, 2, 0),
            values: vec![Complex64::new(0.0, 0.0); 10],
            seed: 0,
        };
        assert!(omp_recover(&samples, 3, 4, 1e-12).unwrap().approximant.is_empty());
    }

    #[test]
    fn omp_residual_is_monotone_and_recovers_sparse() {
        let f = random_sparse(2, 6, 8, 2);
        let samples = sample_poly(&f, 120, 3);
        let fit = omp_recover(&samples, 8, 6, 1e-12).unwrap();
        for w in fit.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let err = f.sub(&fit.approximant).unwrap().coefficient_l2();
        assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn omp_direct_and_nufft_agree() {
        let f = random_sparse(2, 5, 10, 7);
        let samples = sample_poly(&f, 150, 1);
        let cube = FourierCube::new(2, 10).unwrap();
        let a = omp(&Measurement::direct(cube, &samples.points).unwrap(), &samples.values, 5, 1e-12).unwrap();
        let b = omp(&Measurement::nufft(cube, &samples.points).unwrap(), &samples.values, 5, 1e-12).unwrap();
        let dev = a.approximant.sub(&b.approximant).unwrap().coefficient_l2();
        assert!(dev < 1e-9);
    }

    #[test]
    fn lasso_large_lambda_gives_zero() {
        let f = random_sparse(1, 3, 5, 1);
        let samples = sample_poly(&f, 40, 2);
        let fit = sqrt_lasso_recover(&samples, 6, 1e6, 100, 1e-10).unwrap();
        assert!(fit.approximant.is_empty());
        assert!(fit.converged);
    }

    #[test]
    fn lasso_one_sparse() {
        // for a single atom the minimizer is the true coefficient when lambda < 1
        let k = MultiIndex::new(vec![2]);
        let c0 = Complex64::new(1.5, -0.5);
        let f = SparseTrigPoly::monomial(k.clone(), c0);
        let samples = sample_poly(&f, 60, 5);
        let lambda = 0.1;
        let fit = sqrt_lasso_recover(&samples, 5, lambda, 5000, 1e-13).unwrap();
        let big: Vec<_> = fit.approximant.iter().filter(|(_, c)| c.norm() > 1e-3).collect();
        assert_eq!(big.len(), 1);
        assert_eq!(big[0].0, &k);
        assert!((big[0].1 - c0).norm() <= lambda * c0.norm());
    }

    #[test]
    fn lasso_objective_monotone() {
        for s in 0..20 {
            let f = random_sparse(1, 4, 8, s);
            let samples = sample_poly(&f, 30, s + 100);
            let fit = sqrt_lasso_recover(&samples, 8, 0.05, 200, 1e-12).unwrap();
            for w in fit.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn pipeline_exact_sparse() {
        let f = random_sparse(2, 4, 4, 11);
        let cfg = RecoveryConfig {
            n: 4,
            m_radius: 4,
            ..RecoveryConfig::default()
        };
        let rep = recover_pipeline(&f, &cfg, 3).unwrap();
        assert_eq!(rep.e_surrogate, 0.0);
        assert_eq!(rep.sigma_n_a, 0.0);
        assert!(rep.error <= 1e-8);
        assert_eq!(rep.wall_time_ms, 0);
        assert_eq!(rep.to_toml(), recover_pipeline(&f, &cfg, 3).unwrap().to_toml());
        assert!(rep.c_emp.is_nan());
        let text = rep.to_toml();
        assert!(text.contains("C_emp"));
        assert!(text.contains("E_surrogate"));
    }

    #[test]
    fn pipeline_linf_dominates_l2() {
        let f = fooling_wiener(4, 2, 1.0, 1.0).unwrap();
        let cfg = RecoveryConfig {
            n: 8,
            m_radius: 8,
            ..RecoveryConfig::default()
        };
        let r2 = recover_pipeline(&f, &cfg, 1).unwrap();
        let rinf = recover_pipeline(&f, &RecoveryConfig { q: f64::INFINITY, ..cfg }, 1).unwrap();
        assert!(rinf.error >= r2.error);
        assert!(r2.c_emp.is_finite());
    }

    #[test]
    fn linear_baseline_examples() {
        let kept = sorted_frequencies(10, 2, 1000).unwrap();
        let f = SparseTrigPoly::from_terms(2, kept.iter().map(|k| (k.clone(), Complex64::new(1.0, 0.0)))).unwrap();
        assert_eq!(linear_baseline(&f, 10).unwrap().error, 0.0);
        let g = fooling_wiener(4, 2, 1.0, 1.0).unwrap();
        let coeff = g.iter().next().unwrap().1.re;
        let rep = linear_baseline(&g, 30).unwrap();
        let expected = coeff * ((g.len() - rep.overlap) as f64).sqrt();
        assert!((rep.error - expected).abs() < 1e-14);
    }
}
