//! Sparse trigonometric polynomials on the torus `[0,1)^d`.
//!
//! A polynomial is a finite map from frequencies to Fourier coefficients,
//! `f(x) = sum_k c_k exp(2 pi i k.x)`. This module evaluates polynomials
//! pointwise and on uniform grids, computes the weighted Wiener, Besov,
//! Sobolev and Lebesgue (quasi-)norms, and applies the de la Vallee Poussin
//! multiplier.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft::{fft_nd, wrapped_offset, Direction};
use crate::index::{block_of, BlockLabel, MultiIndex};

/// Largest number of grid points any default grid may allocate.
pub const DEFAULT_GRID_CAP: usize = 1 << 24;

/// Oversampling used by default grids for `L_q` with `q` finite and not 2.
pub const LQ_OVERSAMPLING: usize = 4;
/// Oversampling used by default grids for `L_inf`.
pub const LINF_OVERSAMPLING: usize = 8;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseTrigPoly {
    dim: usize,
    coeffs: BTreeMap<MultiIndex, Complex64>,
}

impl SparseTrigPoly {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "polynomial dimension must be >= 1");
        SparseTrigPoly {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        let mut p = SparseTrigPoly::zero(dim);
        p.insert(MultiIndex::zero(dim), c).expect("dimension matches");
        p
    }

    /// `c * exp(2 pi i k.x)`
    pub fn monomial(k: MultiIndex, c: Complex64) -> Self {
        let mut p = SparseTrigPoly::zero(k.dim());
        p.insert(k, c).expect("dimension matches");
        p
    }

    /// Builds a polynomial, summing repeated frequencies and dropping exact zeros.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Complex64)>,
    {
        let mut p = SparseTrigPoly::zero(dim);
        for (k, c) in terms {
            p.add_term(k, c)?;
        }
        Ok(p)
    }

    fn check_dim(&self, k: &MultiIndex) -> Result<()> {
        if k.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: k.dim(),
            });
        }
        Ok(())
    }

    /// Sets the coefficient of `k`, removing it when `c == 0`.
    pub fn insert(&mut self, k: MultiIndex, c: Complex64) -> Result<()> {
        self.check_dim(&k)?;
        if c == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, c);
        }
        Ok(())
    }

    pub fn add_term(&mut self, k: MultiIndex, c: Complex64) -> Result<()> {
        self.check_dim(&k)?;
        let zero = Complex64::new(0.0, 0.0);
        match self.coeffs.entry(k) {
            Entry::Vacant(v) => {
                if c != zero {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == zero {
                    o.remove();
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: &MultiIndex) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    /// Terms in lexicographic frequency order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn frequencies(&self) -> impl Iterator<Item = &MultiIndex> {
        self.coeffs.keys()
    }

    /// Largest `|k_i|` over the support, per axis.
    pub fn max_freq_per_axis(&self) -> Vec<u64> {
        let mut m = vec![0u64; self.dim];
        for k in self.coeffs.keys() {
            for (mi, &ki) in m.iter_mut().zip(k.coords()) {
                *mi = (*mi).max(ki.unsigned_abs());
            }
        }
        m
    }

    pub fn max_freq(&self) -> u64 {
        self.max_freq_per_axis().into_iter().max().unwrap_or(0)
    }

    pub fn filter<F: Fn(&MultiIndex, &Complex64) -> bool>(&self, keep: F) -> SparseTrigPoly {
        SparseTrigPoly {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(k, c)| keep(k, c))
                .map(|(k, c)| (k.clone(), *c))
                .collect(),
        }
    }

    pub fn map_coeffs<F: Fn(&MultiIndex, Complex64) -> Complex64>(&self, f: F) -> SparseTrigPoly {
        SparseTrigPoly {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, c)| (k.clone(), f(k, *c)))
                .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> SparseTrigPoly {
        self.map_coeffs(|_, c| c * s)
    }

    pub fn sub(&self, other: &SparseTrigPoly) -> Result<SparseTrigPoly> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut coeffs = self.coeffs.clone();
        for (k, c) in &other.coeffs {
            let e = coeffs.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0));
            *e -= c;
        }
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(SparseTrigPoly {
            dim: self.dim,
            coeffs,
        })
    }

    pub fn add(&self, other: &SparseTrigPoly) -> Result<SparseTrigPoly> {
        self.sub(&other.scaled(-1.0))
    }

    /// `(sum |c_k|^2)^(1/2)`, equal to the `L_2` norm.
    pub fn coefficient_l2(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).fold(0.0, |a, b| a + b).sqrt()
    }

    /// `sum |c_k|`, the Wiener algebra norm.
    pub fn coefficient_l1(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, |a, b| a + b)
    }

    /// `sum_k c_k exp(2 pi i k.x)`
    pub fn evaluate(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self
            .coeffs
            .iter()
            .map(|(k, c)| c * Complex64::from_polar(1.0, 2.0 * PI * k.dot(x)))
            .sum())
    }

    /// Splits the polynomial into its dyadic blocks.
    pub fn blocks(&self) -> BTreeMap<BlockLabel, SparseTrigPoly> {
        let mut out: BTreeMap<BlockLabel, SparseTrigPoly> = BTreeMap::new();
        for (k, c) in &self.coeffs {
            out.entry(block_of(k))
                .or_insert_with(|| SparseTrigPoly::zero(self.dim))
                .coeffs
                .insert(k.clone(), *c);
        }
        out
    }

    /// Splits the polynomial into step hyperbolic layers.
    pub fn layers(&self) -> BTreeMap<u32, SparseTrigPoly> {
        let mut out: BTreeMap<u32, SparseTrigPoly> = BTreeMap::new();
        for (k, c) in &self.coeffs {
            out.entry(crate::index::layer_of(k))
                .or_insert_with(|| SparseTrigPoly::zero(self.dim))
                .coeffs
                .insert(k.clone(), *c);
        }
        out
    }
}

/// Uniform tensor grid `{(n_1/N_1, ..., n_d/N_d)}` on the torus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub sizes: Vec<usize>,
    /// Oversampling factor relative to `2 * maxfreq + 1`, recorded for metadata.
    pub oversampling: usize,
}

impl GridSpec {
    pub fn new(sizes: Vec<usize>) -> Self {
        GridSpec {
            sizes,
            oversampling: 1,
        }
    }

    /// Per-axis size `next_pow2(s * (2 * maxfreq_i + 1))`.
    pub fn for_poly(f: &SparseTrigPoly, oversampling: usize) -> Self {
        let s = oversampling.max(1);
        let sizes = f
            .max_freq_per_axis()
            .iter()
            .map(|&m| (s * (2 * m as usize + 1)).next_power_of_two())
            .collect();
        GridSpec {
            sizes,
            oversampling: s,
        }
    }

    /// Default grid for measuring `f` in `L_q`.
    pub fn default_for_lq(f: &SparseTrigPoly, q: f64) -> Self {
        if q.is_infinite() {
            GridSpec::for_poly(f, LINF_OVERSAMPLING)
        } else {
            GridSpec::for_poly(f, LQ_OVERSAMPLING)
        }
    }

    pub fn total_points(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Checks `N_i >= 2 * maxfreq_i + 1` on every axis.
    pub fn validate_for(&self, f: &SparseTrigPoly) -> Result<()> {
        if self.sizes.len() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                found: self.sizes.len(),
            });
        }
        for (axis, (&n, &m)) in self.sizes.iter().zip(&f.max_freq_per_axis()).enumerate() {
            let required = 2 * m as usize + 1;
            if n < required {
                return Err(Error::GridTooSmall {
                    axis,
                    size: n,
                    required,
                });
            }
        }
        if self.total_points() > DEFAULT_GRID_CAP {
            return Err(Error::CapExceeded {
                what: "grid points",
                predicted: self.total_points() as u128,
                cap: DEFAULT_GRID_CAP as u128,
            });
        }
        Ok(())
    }
}

/// Values of a polynomial on a [`GridSpec`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridValues {
    pub sizes: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl GridValues {
    /// The grid point for a row-major flat offset.
    pub fn point(&self, mut offset: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.sizes.len()];
        for axis in (0..self.sizes.len()).rev() {
            let n = self.sizes[axis];
            x[axis] = (offset % n) as f64 / n as f64;
            offset /= n;
        }
        x
    }

    /// `(mean |v|^q)^(1/q)`, or `max |v|` for `q = inf`.
    pub fn lq_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let n = self.values.len() as f64;
        (self.values.iter().map(|v| v.norm().powf(q)).sum::<f64>() / n).powf(1.0 / q)
    }
}

/// Evaluates `f` on the full grid with one inverse FFT.
pub fn evaluate_grid(f: &SparseTrigPoly, grid: &GridSpec) -> Result<GridValues> {
    grid.validate_for(f)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.total_points()];
    for (k, c) in f.iter() {
        buf[wrapped_offset(k.coords(), &grid.sizes)] += c;
    }
    fft_nd(&mut buf, &grid.sizes, Direction::Inverse);
    Ok(GridValues {
        sizes: grid.sizes.clone(),
        values: buf,
    })
}

/// Selects a (quasi-)norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum SpaceParams {
    /// `S^r_theta A`: `(sum_k omega_k^(r theta) |c_k|^theta)^(1/theta)`.
    WienerWeighted { r: f64, theta: f64 },
    /// `A_eta = S^0_eta A`.
    WienerPlain { eta: f64 },
    /// `S^r_{p,theta} B`.
    Besov { r: f64, p: f64, theta: f64 },
    /// `S^r_p W` via the Littlewood-Paley square function.
    SobolevW { r: f64, p: f64 },
    /// `L_q` with normalized measure.
    Lebesgue { q: f64 },
}

impl SpaceParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |x: f64| x.is_nan();
        match *self {
            SpaceParams::WienerWeighted { r, theta } => {
                if bad(r) || r < 0.0 || r.is_infinite() {
                    return invalid(format!("r >= 0 violated (r = {r})"));
                }
                if bad(theta) || theta <= 0.0 {
                    return invalid(format!("theta in (0, inf] violated (theta = {theta})"));
                }
            }
            SpaceParams::WienerPlain { eta } => {
                if bad(eta) || eta <= 0.0 {
                    return invalid(format!("eta in (0, inf] violated (eta = {eta})"));
                }
            }
            SpaceParams::Besov { r, p, theta } => {
                if bad(r) || r < 0.0 || r.is_infinite() {
                    return invalid(format!("r >= 0 violated (r = {r})"));
                }
                if bad(p) || p <= 1.0 || p.is_infinite() {
                    return invalid(format!("p in (1, inf) violated (p = {p})"));
                }
                if bad(theta) || theta <= 0.0 {
                    return invalid(format!("theta in (0, inf] violated (theta = {theta})"));
                }
            }
            SpaceParams::SobolevW { r, p } => {
                if bad(r) || r < 0.0 || r.is_infinite() {
                    return invalid(format!("r >= 0 violated (r = {r})"));
                }
                if bad(p) || p <= 1.0 || p.is_infinite() {
                    return invalid(format!("p in (1, inf) violated (p = {p})"));
                }
            }
            SpaceParams::Lebesgue { q } => {
                if bad(q) || q < 1.0 {
                    return invalid(format!("q in [1, inf] violated (q = {q})"));
                }
            }
        }
        Ok(())
    }

    /// Short tag used in serialized records.
    pub fn tag(&self) -> String {
        match *self {
            SpaceParams::WienerWeighted { r, theta } => format!("wiener(r={r},theta={theta})"),
            SpaceParams::WienerPlain { eta } => format!("wiener_plain(eta={eta})"),
            SpaceParams::Besov { r, p, theta } => format!("besov(r={r},p={p},theta={theta})"),
            SpaceParams::SobolevW { r, p } => format!("sobolev(r={r},p={p})"),
            SpaceParams::Lebesgue { q } => format!("lebesgue(q={q})"),
        }
    }
}

/// `(sum x_i^p)^(1/p)` for nonnegative entries, `max` when `p = inf`.
pub fn lp_norm_of(values: impl IntoIterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        return values.into_iter().fold(0.0, f64::max);
    }
    values
        .into_iter()
        .map(|x| x.powf(p))
        .fold(0.0, |a, b| a + b)
        .powf(1.0 / p)
}

fn weighted_wiener(f: &SparseTrigPoly, r: f64, theta: f64) -> f64 {
    lp_norm_of(
        f.iter().map(|(k, c)| k.weight_f64().powf(r) * c.norm()),
        theta,
    )
}

fn lebesgue(f: &SparseTrigPoly, q: f64, grid: Option<&GridSpec>) -> Result<f64> {
    if f.is_empty() {
        return Ok(0.0);
    }
    match grid {
        None if q == 2.0 => Ok(f.coefficient_l2()),
        None => Ok(evaluate_grid(f, &GridSpec::default_for_lq(f, q))?.lq_norm(q)),
        Some(g) => Ok(evaluate_grid(f, g)?.lq_norm(q)),
    }
}

fn besov(f: &SparseTrigPoly, r: f64, p: f64, theta: f64, grid: Option<&GridSpec>) -> Result<f64> {
    let mut terms = Vec::new();
    for (j, block) in f.blocks() {
        let lp = match grid {
            None if p == 2.0 => block.coefficient_l2(),
            None => evaluate_grid(&block, &GridSpec::for_poly(&block, LQ_OVERSAMPLING))?.lq_norm(p),
            Some(g) => evaluate_grid(&block, g)?.lq_norm(p),
        };
        terms.push(2f64.powf(j.l1() as f64 * r) * lp);
    }
    Ok(lp_norm_of(terms, theta))
}

fn sobolev(f: &SparseTrigPoly, r: f64, p: f64, grid: Option<&GridSpec>) -> Result<f64> {
    if f.is_empty() {
        return Ok(0.0);
    }
    if r == 0.0 {
        // S^0_p W is L_p itself
        return lebesgue(f, p, grid);
    }
    let owned;
    let g = match grid {
        Some(g) => g,
        None => {
            owned = GridSpec::for_poly(f, LQ_OVERSAMPLING);
            &owned
        }
    };
    g.validate_for(f)?;
    let mut square = vec![0.0f64; g.total_points()];
    for (j, block) in f.blocks() {
        let scale = 2f64.powf(j.l1() as f64 * r);
        let vals = evaluate_grid(&block, g)?;
        for (acc, v) in square.iter_mut().zip(&vals.values) {
            *acc += (scale * v.norm()).powi(2);
        }
    }
    let n = square.len() as f64;
    Ok((square.iter().map(|s| s.sqrt().powf(p)).sum::<f64>() / n).powf(1.0 / p))
}

/// The (quasi-)norm of `f` in the selected space.
///
/// Wiener norms are exact coefficient sums. Lebesgue norms use grid
/// quadrature except for `q = 2` without an explicit grid, which uses the
/// coefficient `l_2` identity; `q = inf` is the grid maximum and so never
/// exceeds the true supremum. Besov block norms are computed on per-block
/// grids unless a grid is supplied.
pub fn norm(f: &SparseTrigPoly, params: &SpaceParams, grid: Option<&GridSpec>) -> Result<f64> {
    params.validate()?;
    match *params {
        SpaceParams::WienerWeighted { r, theta } => Ok(weighted_wiener(f, r, theta)),
        SpaceParams::WienerPlain { eta } => Ok(weighted_wiener(f, 0.0, eta)),
        SpaceParams::Besov { r, p, theta } => besov(f, r, p, theta, grid),
        SpaceParams::SobolevW { r, p } => sobolev(f, r, p, grid),
        SpaceParams::Lebesgue { q } => lebesgue(f, q, grid),
    }
}

/// One-dimensional de la Vallee Poussin multiplier for `V_M` in dimension `d`.
pub fn vallee_poussin_multiplier(k: i64, m: u64, d: usize) -> f64 {
    let a = k.unsigned_abs();
    let top = (2 * d as u64 + 1) * m;
    if a <= m {
        1.0
    } else if a <= top {
        (top - a) as f64 / (2 * d as u64 * m) as f64
    } else {
        0.0
    }
}

/// Coefficient-wise multiplier `v_k = prod_j v_{k_j}`; the output lives on
/// `[-D, D]^d` with `D = (2d + 1) M`.
pub fn vallee_poussin(f: &SparseTrigPoly, m: u64) -> Result<SparseTrigPoly> {
    if m == 0 {
        return invalid("M >= 1 violated");
    }
    let d = f.dim();
    Ok(f.map_coeffs(|k, c| {
        let v: f64 = k
            .coords()
            .iter()
            .map(|&kj| vallee_poussin_multiplier(kj, m, d))
            .product();
        c * v
    }))
}

/// `l_1` mass of the coefficients outside `[-M, M]^d`; an upper bound on the
/// best uniform approximation error from `T([-M, M]^d)`.
pub fn best_trig_error_surrogate(f: &SparseTrigPoly, m: u64) -> f64 {
    f.iter()
        .filter(|(k, _)| k.max_abs() > m)
        .map(|(_, c)| c.norm())
        .fold(0.0, |a, b| a + b)
}

/// Text format: `d=<d>` header, then `k_1 ... k_d re im` per mode.
pub fn write_coefficients(f: &SparseTrigPoly) -> String {
    let mut s = format!("d={}\n", f.dim());
    for (k, c) in f.iter() {
        let _ = writeln!(s, "{k} {:.16e} {:.16e}", c.re, c.im);
    }
    s
}

pub fn parse_coefficients(text: &str) -> Result<SparseTrigPoly> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing d=<d> header".into(),
    })?;
    let d: usize = header
        .trim()
        .strip_prefix("d=")
        .and_then(|v| v.trim().parse().ok())
        .filter(|&d| d >= 1)
        .ok_or(Error::Parse {
            line: hline + 1,
            message: format!("expected header d=<d>, found {header:?}"),
        })?;
    let mut f = SparseTrigPoly::zero(d);
    for (i, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let perr = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        if toks.len() != d + 2 {
            return Err(perr(format!("expected {} fields, found {}", d + 2, toks.len())));
        }
        let ks = toks[..d]
            .iter()
            .map(|t| t.parse::<i64>().map_err(|e| perr(format!("bad frequency {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let re: f64 = toks[d]
            .parse()
            .map_err(|e| perr(format!("bad real part: {e}")))?;
        let im: f64 = toks[d + 1]
            .parse()
            .map_err(|e| perr(format!("bad imaginary part: {e}")))?;
        f.add_term(MultiIndex::new(ks), Complex64::new(re, im))?;
    }
    Ok(f)
}
