//! Fourier measurement system on a frequency cube at scattered points.
//!
//! The forward map sends coefficients on `[-D, D]^d` (lexicographic order)
//! to values `y_j = sum_k c_k exp(2 pi i k.x_j)`; the adjoint is
//! `z_k = sum_j y_j exp(-2 pi i k.x_j)`. Both have a direct `O(m N)`
//! implementation and a Gaussian-gridding nonuniform FFT.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fft_nd, Direction};
use crate::index::MultiIndex;

/// Coefficient vectors larger than this are refused.
pub const CUBE_CAP: usize = 1 << 25;
/// Oversampled NUFFT grids larger than this are refused.
pub const NUFFT_GRID_CAP: usize = 1 << 25;
/// Below this `m * N` the direct operator is used.
pub const DIRECT_WORK_LIMIT: u128 = 4_000_000;

/// Spreading half-width in grid cells.
const SPREAD: usize = 12;

/// The frequency cube `{-D, ..., D}^d` with lexicographic (mixed-radix) indexing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourierCube {
    pub dim: usize,
    pub radius: u64,
}

impl FourierCube {
    pub fn new(dim: usize, radius: u64) -> Result<Self> {
        let cube = FourierCube { dim, radius };
        let side = cube.side() as u128;
        let total = (0..dim).try_fold(1u128, |acc, _| acc.checked_mul(side));
        match total {
            Some(t) if t <= CUBE_CAP as u128 => Ok(cube),
            Some(t) => Err(Error::CapExceeded {
                what: "frequency cube",
                predicted: t,
                cap: CUBE_CAP as u128,
            }),
            None => Err(Error::Overflow("frequency cube size")),
        }
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, k: &MultiIndex) -> Option<usize> {
        if k.dim() != self.dim || k.max_abs() > self.radius {
            return None;
        }
        let side = self.side();
        Some(
            k.coords()
                .iter()
                .fold(0usize, |acc, &ki| acc * side + (ki + self.radius as i64) as usize),
        )
    }

    pub fn freq_at(&self, mut idx: usize) -> MultiIndex {
        let side = self.side();
        let mut ks = vec![0i64; self.dim];
        for a in (0..self.dim).rev() {
            ks[a] = (idx % side) as i64 - self.radius as i64;
            idx /= side;
        }
        MultiIndex::new(ks)
    }
}

/// `exp(2 pi i k.x)` with the phase reduced modulo 1 before scaling.
pub(crate) fn mode_value(k: &[i64], x: &[f64]) -> Complex64 {
    let t: f64 = k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum();
    Complex64::from_polar(1.0, 2.0 * PI * (t - t.floor()))
}

#[derive(Debug, Clone)]
enum Backend {
    Direct,
    Nufft(Box<Nufft>),
}

/// Forward and adjoint measurement operator for fixed points.
#[derive(Debug, Clone)]
pub struct Measurement {
    cube: FourierCube,
    /// Row-major `m x d`.
    points: Vec<f64>,
    backend: Backend,
}

impl Measurement {
    /// Chooses the direct operator for small problems and the NUFFT otherwise.
    pub fn new(cube: FourierCube, points: &[f64]) -> Result<Self> {
        let m = points.len() / cube.dim.max(1);
        if (m as u128) * (cube.len() as u128) <= DIRECT_WORK_LIMIT {
            Self::direct(cube, points)
        } else {
            Self::nufft(cube, points)
        }
    }

    pub fn direct(cube: FourierCube, points: &[f64]) -> Result<Self> {
        check_points(cube.dim, points)?;
        Ok(Measurement {
            cube,
            points: points.to_vec(),
            backend: Backend::Direct,
        })
    }

    pub fn nufft(cube: FourierCube, points: &[f64]) -> Result<Self> {
        check_points(cube.dim, points)?;
        let plan = Nufft::new(cube, points)?;
        Ok(Measurement {
            cube,
            points: points.to_vec(),
            backend: Backend::Nufft(Box::new(plan)),
        })
    }

    pub fn cube(&self) -> FourierCube {
        self.cube
    }

    pub fn num_points(&self) -> usize {
        self.points.len() / self.cube.dim
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.cube.dim..(j + 1) * self.cube.dim]
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Direct)
    }

    /// Column `j -> exp(2 pi i k.x_j)` of frequency index `idx`.
    pub fn column(&self, idx: usize) -> Vec<Complex64> {
        let k = self.cube.freq_at(idx);
        (0..self.num_points())
            .map(|j| mode_value(k.coords(), self.point(j)))
            .collect()
    }

    pub fn forward(&self, c: &[Complex64]) -> Result<Vec<Complex64>> {
        if c.len() != self.cube.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cube.len(),
                found: c.len(),
            });
        }
        Ok(match &self.backend {
            Backend::Direct => self.direct_forward(c),
            Backend::Nufft(plan) => plan.forward(c),
        })
    }

    pub fn adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.num_points() {
            return Err(Error::DimensionMismatch {
                expected: self.num_points(),
                found: y.len(),
            });
        }
        Ok(match &self.backend {
            Backend::Direct => self.direct_adjoint(y),
            Backend::Nufft(plan) => plan.adjoint(y),
        })
    }

    /// Per-axis tables `exp(2 pi i k x_a)` for `k = -D..=D`.
    fn axis_tables(&self, j: usize) -> Vec<Vec<Complex64>> {
        let r = self.cube.radius as i64;
        self.point(j)
            .iter()
            .map(|&x| (-r..=r).map(|k| mode_value(&[k], &[x])).collect())
            .collect()
    }

    fn for_each_mode<F: FnMut(usize, Complex64)>(&self, tables: &[Vec<Complex64>], mut f: F) {
        let d = self.cube.dim;
        let side = self.cube.side();
        let mut digits = vec![0usize; d];
        for idx in 0..self.cube.len() {
            let e: Complex64 = (0..d).map(|a| tables[a][digits[a]]).product();
            f(idx, e);
            for a in (0..d).rev() {
                digits[a] += 1;
                if digits[a] < side {
                    break;
                }
                digits[a] = 0;
            }
        }
    }

    fn direct_forward(&self, c: &[Complex64]) -> Vec<Complex64> {
        (0..self.num_points())
            .map(|j| {
                let tables = self.axis_tables(j);
                let mut acc = Complex64::new(0.0, 0.0);
                self.for_each_mode(&tables, |idx, e| acc += c[idx] * e);
                acc
            })
            .collect()
    }

    fn direct_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut z = vec![Complex64::new(0.0, 0.0); self.cube.len()];
        for (j, yj) in y.iter().enumerate() {
            let tables = self.axis_tables(j);
            self.for_each_mode(&tables, |idx, e| z[idx] += yj * e.conj());
        }
        z
    }
}

fn check_points(d: usize, points: &[f64]) -> Result<()> {
    if d == 0 || !points.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: points.len() % d.max(1),
        });
    }
    if points.iter().any(|x| !(0.0..1.0).contains(x)) {
        return Err(Error::InvalidParameter(
            "sample points must lie in [0, 1)^d".into(),
        ));
    }
    Ok(())
}

/// Smallest even integer `>= n` whose prime factors are 2, 3 and 5.
fn fast_size(n: usize) -> usize {
    let mut s = n.max(2);
    loop {
        if s.is_multiple_of(2) {
            let mut t = s;
            for p in [2, 3, 5] {
                while t.is_multiple_of(p) {
                    t /= p;
                }
            }
            if t == 1 {
                return s;
            }
        }
        s += 1;
    }
}

/// Gaussian-gridding nonuniform FFT for the cube system.
#[derive(Debug, Clone)]
struct Nufft {
    dim: usize,
    radius: u64,
    grid: usize,
    /// `sqrt(pi / tau) exp(k^2 tau)` for `k = -D..=D`.
    deconv: Vec<f64>,
    /// Per point and axis: first grid cell (wrapped) of the spreading window.
    start: Vec<usize>,
    /// Per point and axis: `2 * SPREAD` Gaussian weights.
    weights: Vec<f64>,
}

impl Nufft {
    fn new(cube: FourierCube, points: &[f64]) -> Result<Self> {
        let d = cube.dim;
        let n_modes = cube.side();
        let grid = fast_size(2 * n_modes).max(2 * SPREAD);
        let total = (grid as u128).pow(d as u32);
        if total > NUFFT_GRID_CAP as u128 {
            return Err(Error::CapExceeded {
                what: "NUFFT grid",
                predicted: total,
                cap: NUFFT_GRID_CAP as u128,
            });
        }
        let ratio = grid as f64 / n_modes as f64;
        let tau = PI * SPREAD as f64 / ((n_modes * n_modes) as f64 * ratio * (ratio - 0.5));
        let r = cube.radius as i64;
        let deconv = (-r..=r)
            .map(|k| (PI / tau).sqrt() * ((k * k) as f64 * tau).exp())
            .collect();
        let h = 2.0 * PI / grid as f64;
        let width = 2 * SPREAD;
        let mut start = Vec::with_capacity(points.len());
        let mut weights = Vec::with_capacity(points.len() * width);
        for &x in points {
            let t = x * grid as f64;
            let m0 = t.floor() as i64;
            let first = m0 - SPREAD as i64 + 1;
            start.push(first.rem_euclid(grid as i64) as usize);
            for l in 0..width as i64 {
                let dist = (t - (first + l) as f64) * h;
                weights.push((-dist * dist / (4.0 * tau)).exp());
            }
        }
        Ok(Nufft {
            dim: d,
            radius: cube.radius,
            grid,
            deconv,
            start,
            weights,
        })
    }

    fn num_points(&self) -> usize {
        self.start.len() / self.dim
    }

    fn grid_sizes(&self) -> Vec<usize> {
        vec![self.grid; self.dim]
    }

    /// Visits the `(2 SPREAD)^d` grid cells around point `j` with their weights.
    fn window<F: FnMut(usize, f64)>(&self, j: usize, mut f: F) {
        let d = self.dim;
        let width = 2 * SPREAD;
        let g = self.grid;
        let starts = &self.start[j * d..(j + 1) * d];
        let ws = &self.weights[j * d * width..(j + 1) * d * width];
        if d == 2 {
            for l0 in 0..width {
                let row = ((starts[0] + l0) % g) * g;
                let w0 = ws[l0];
                for l1 in 0..width {
                    f(row + (starts[1] + l1) % g, w0 * ws[width + l1]);
                }
            }
            return;
        }
        let mut digits = vec![0usize; d];
        let count = width.pow(d as u32);
        for _ in 0..count {
            let mut off = 0usize;
            let mut w = 1.0;
            for a in 0..d {
                off = off * g + (starts[a] + digits[a]) % g;
                w *= ws[a * width + digits[a]];
            }
            f(off, w);
            for a in (0..d).rev() {
                digits[a] += 1;
                if digits[a] < width {
                    break;
                }
                digits[a] = 0;
            }
        }
    }

    /// Visits cube modes with their wrapped grid offset and deconvolution factor.
    fn modes<F: FnMut(usize, usize, f64)>(&self, mut f: F) {
        let d = self.dim;
        let side = 2 * self.radius as usize + 1;
        let g = self.grid as i64;
        let r = self.radius as i64;
        let mut digits = vec![0usize; d];
        let total = side.pow(d as u32);
        for idx in 0..total {
            let mut off = 0usize;
            let mut fac = 1.0;
            for &dg in &digits {
                let k = dg as i64 - r;
                off = off * self.grid + k.rem_euclid(g) as usize;
                fac *= self.deconv[dg];
            }
            f(idx, off, fac);
            for a in (0..d).rev() {
                digits[a] += 1;
                if digits[a] < side {
                    break;
                }
                digits[a] = 0;
            }
        }
    }

    fn norm_factor(&self) -> f64 {
        (self.grid as f64).powi(self.dim as i32).recip()
    }

    fn forward(&self, c: &[Complex64]) -> Vec<Complex64> {
        let sizes = self.grid_sizes();
        let mut buf = vec![Complex64::new(0.0, 0.0); sizes.iter().product()];
        self.modes(|idx, off, fac| buf[off] = c[idx] * fac);
        fft_nd(&mut buf, &sizes, Direction::Inverse);
        let scale = self.norm_factor();
        (0..self.num_points())
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                self.window(j, |off, w| acc += buf[off] * w);
                acc * scale
            })
            .collect()
    }

    fn adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let sizes = self.grid_sizes();
        let mut buf = vec![Complex64::new(0.0, 0.0); sizes.iter().product()];
        for (j, yj) in y.iter().enumerate() {
            self.window(j, |off, w| buf[off] += yj * w);
        }
        fft_nd(&mut buf, &sizes, Direction::Forward);
        let scale = self.norm_factor();
        let side = 2 * self.radius as usize + 1;
        let mut z = vec![Complex64::new(0.0, 0.0); side.pow(self.dim as u32)];
        self.modes(|idx, off, fac| z[idx] = buf[off] * (fac * scale));
        z
    }
}
