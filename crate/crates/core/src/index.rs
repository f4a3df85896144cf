//! Hyperbolic-cross index geometry.
//!
//! The integers are segmented dyadically, `I_0 = {0}` and
//! `I_n = {k : 2^(n-1) <= |k| < 2^n}`. A block `I_j = I_{j_1} x ... x I_{j_d}`
//! holds `2^|j|_1` frequencies, and the step hyperbolic layer `H_n` is the
//! union of all blocks with `|j|_1 = n`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Default upper bound on the number of indices any enumeration may produce.
pub const DEFAULT_INDEX_CAP: usize = 1 << 22;

/// A frequency vector in `Z^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(ks: Vec<i64>) -> Self {
        assert!(!ks.is_empty(), "multi-index must have d >= 1");
        MultiIndex(ks)
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex::new(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// `max_i |k_i|`.
    pub fn max_abs(&self) -> u64 {
        self.0.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0)
    }

    /// `prod_i (1 + |k_i|)` as a float, for norm computations.
    pub fn weight_f64(&self) -> f64 {
        self.0.iter().map(|&k| 1.0 + k.unsigned_abs() as f64).product()
    }

    pub fn negated(&self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|k| -k).collect())
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum()
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(v: Vec<i64>) -> Self {
        MultiIndex::new(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let ks = s
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|e| format!("bad integer {t:?}: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if ks.is_empty() {
            return Err("empty multi-index".into());
        }
        Ok(MultiIndex(ks))
    }
}

/// Label `j in N_0^d` of a dyadic block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockLabel(Vec<u32>);

impl BlockLabel {
    pub fn new(js: Vec<u32>) -> Self {
        assert!(!js.is_empty(), "block label must have d >= 1");
        BlockLabel(js)
    }

    pub fn levels(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|j|_1`, the layer this block belongs to.
    pub fn l1(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// `omega_k = prod_i (1 + |k_i|)`, always at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(u128);

impl Weight {
    pub fn value(self) -> u128 {
        self.0
    }
}

/// A step hyperbolic layer `H_n` in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub level: u32,
    pub dim: usize,
}

impl LayerSpec {
    pub fn new(level: u32, dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("d >= 1 violated");
        }
        Ok(LayerSpec { level, dim })
    }

    pub fn cardinality(&self) -> Result<u128> {
        layer_cardinality(self.level, self.dim)
    }

    pub fn enumerate(&self, cap: usize) -> Result<Vec<MultiIndex>> {
        enumerate_layer(self.level, self.dim, cap)
    }
}

fn level_of(k: i64) -> u32 {
    if k == 0 {
        0
    } else {
        64 - k.unsigned_abs().leading_zeros()
    }
}

/// Coordinate-wise dyadic level: 0 for `k_i = 0`, else `floor(log2 |k_i|) + 1`.
pub fn block_of(k: &MultiIndex) -> BlockLabel {
    BlockLabel(k.coords().iter().map(|&ki| level_of(ki)).collect())
}

/// Index of the step hyperbolic layer containing `k`.
pub fn layer_of(k: &MultiIndex) -> u32 {
    k.coords().iter().map(|&ki| level_of(ki)).sum()
}

/// The one-dimensional dyadic interval `I_j`, ascending.
pub fn dyadic_interval(j: u32) -> Vec<i64> {
    if j == 0 {
        return vec![0];
    }
    let lo = 1i64 << (j - 1);
    let hi = 1i64 << j;
    (-(hi - 1)..=-lo).chain(lo..hi).collect()
}

fn product_into(factors: &[Vec<i64>], out: &mut Vec<MultiIndex>) {
    let d = factors.len();
    let mut pos = vec![0usize; d];
    if factors.iter().any(|f| f.is_empty()) {
        return;
    }
    loop {
        out.push(MultiIndex((0..d).map(|i| factors[i][pos[i]]).collect()));
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            pos[axis] += 1;
            if pos[axis] < factors[axis].len() {
                break;
            }
            pos[axis] = 0;
        }
    }
}

/// All frequencies of the block `I_j`, in lexicographic order.
pub fn enumerate_block(j: &BlockLabel) -> Vec<MultiIndex> {
    let factors: Vec<Vec<i64>> = j.levels().iter().map(|&l| dyadic_interval(l)).collect();
    let mut out = Vec::with_capacity(1usize << j.l1().min(40));
    product_into(&factors, &mut out);
    out
}

/// All `j in N_0^d` with `|j|_1 = n`, in lexicographic order.
pub fn compositions(n: u32, d: usize) -> Vec<BlockLabel> {
    fn rec(rest: u32, d_left: usize, prefix: &mut Vec<u32>, out: &mut Vec<BlockLabel>) {
        if d_left == 1 {
            prefix.push(rest);
            out.push(BlockLabel(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in 0..=rest {
            prefix.push(first);
            rec(rest - first, d_left - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d > 0 {
        rec(n, d, &mut Vec::with_capacity(d), &mut out);
    }
    out
}

fn binomial(n: u128, k: u128) -> Result<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc
            .checked_mul(n - i)
            .ok_or(Error::Overflow("binomial coefficient"))?
            / (i + 1);
    }
    Ok(acc)
}

/// `#H_n = 2^n * binom(n + d - 1, n)`.
pub fn layer_cardinality(n: u32, d: usize) -> Result<u128> {
    if d == 0 {
        return invalid("d >= 1 violated");
    }
    let pow = 1u128
        .checked_shl(n)
        .filter(|_| n < 128)
        .ok_or(Error::Overflow("2^n in layer cardinality"))?;
    let b = binomial(n as u128 + d as u128 - 1, n as u128)?;
    pow.checked_mul(b).ok_or(Error::Overflow("layer cardinality"))
}

/// All frequencies of `H_n` in lexicographic order.
pub fn enumerate_layer(n: u32, d: usize, cap: usize) -> Result<Vec<MultiIndex>> {
    let predicted = layer_cardinality(n, d)?;
    if predicted > cap as u128 {
        return Err(Error::CapExceeded {
            what: "layer enumeration",
            predicted,
            cap: cap as u128,
        });
    }
    let mut out = Vec::with_capacity(predicted as usize);
    for j in compositions(n, d) {
        let factors: Vec<Vec<i64>> = j.levels().iter().map(|&l| dyadic_interval(l)).collect();
        product_into(&factors, &mut out);
    }
    out.sort();
    Ok(out)
}

pub fn weight(k: &MultiIndex) -> Result<Weight> {
    k.coords()
        .iter()
        .try_fold(1u128, |acc, &ki| acc.checked_mul(1 + ki.unsigned_abs() as u128))
        .map(Weight)
        .ok_or(Error::Overflow("weight"))
}

/// `sum_{k in H_n} omega_k^s`, computed block-wise from one-dimensional sums.
pub fn layer_weight_power_sum(n: u32, d: usize, s: f64) -> f64 {
    let mut one_dim: HashMap<u32, f64> = HashMap::new();
    let mut total = 0.0;
    for j in compositions(n, d) {
        let mut prod = 1.0;
        for &l in j.levels() {
            let v = *one_dim.entry(l).or_insert_with(|| {
                dyadic_interval(l)
                    .iter()
                    .map(|&k| (1.0 + k.unsigned_abs() as f64).powf(s))
                    .sum()
            });
            prod *= v;
        }
        total += prod;
    }
    total
}

/// Largest weight on `H_n`, attained at `(2^n - 1, 0, ..., 0)`.
pub fn layer_max_weight(n: u32) -> u128 {
    1u128 << n
}

fn count_weight_ball(w: u64, d: usize) -> u128 {
    if d == 0 {
        return 1;
    }
    if d == 1 {
        return 2 * w as u128 - 1;
    }
    let mut total = count_weight_ball(w, d - 1);
    for a in 1..w {
        let rest = w / (1 + a);
        if rest == 0 {
            break;
        }
        total += 2 * count_weight_ball(rest, d - 1);
    }
    total
}

fn enumerate_weight_ball(w: u64, d: usize) -> Vec<MultiIndex> {
    fn rec(w: u64, d_left: usize, prefix: &mut Vec<i64>, out: &mut Vec<MultiIndex>) {
        if d_left == 0 {
            out.push(MultiIndex(prefix.clone()));
            return;
        }
        let amax = w as i64 - 1;
        for a in -amax..=amax {
            let rest = w / (1 + a.unsigned_abs());
            prefix.push(a);
            rec(rest, d_left - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(w, d, &mut Vec::with_capacity(d), &mut out);
    out
}

/// The first `count` frequencies ordered by nondecreasing weight, ties broken
/// lexicographically ascending.
pub fn sorted_frequencies(count: usize, d: usize, cap: usize) -> Result<Vec<MultiIndex>> {
    if count == 0 {
        return invalid("N >= 1 violated");
    }
    if d == 0 {
        return invalid("d >= 1 violated");
    }
    if count > cap {
        return Err(Error::CapExceeded {
            what: "sorted frequencies",
            predicted: count as u128,
            cap: cap as u128,
        });
    }
    let mut w: u64 = 1;
    loop {
        let c = count_weight_ball(w, d);
        if c >= count as u128 {
            if c > 8 * cap as u128 {
                return Err(Error::CapExceeded {
                    what: "weight ball enumeration",
                    predicted: c,
                    cap: 8 * cap as u128,
                });
            }
            break;
        }
        w = w.checked_mul(2).ok_or(Error::Overflow("weight threshold"))?;
    }
    let mut all: Vec<(u128, MultiIndex)> = enumerate_weight_ball(w, d)
        .into_iter()
        .map(|k| (weight(&k).map(|x| x.0).unwrap_or(u128::MAX), k))
        .collect();
    all.sort_unstable();
    all.truncate(count);
    Ok(all.into_iter().map(|(_, k)| k).collect())
}

/// One multi-index per line, space-separated integers.
pub fn write_index_set(indices: &[MultiIndex]) -> String {
    let mut s = String::new();
    for k in indices {
        s.push_str(&k.to_string());
        s.push('\n');
    }
    s
}

pub fn parse_index_set(text: &str) -> Result<Vec<MultiIndex>> {
    let mut out: Vec<MultiIndex> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let k: MultiIndex = line.parse().map_err(|message| Error::Parse {
            line: i + 1,
            message,
        })?;
        if let Some(first) = out.first() {
            if first.dim() != k.dim() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {} coordinates, found {}", first.dim(), k.dim()),
                });
            }
        }
        out.push(k);
    }
    Ok(out)
}
