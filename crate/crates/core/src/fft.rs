//! Multi-dimensional FFT over row-major buffers (last axis contiguous).

use num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    /// `X_k = sum_n x_n exp(-2 pi i k n / N)`
    Forward,
    /// `x_n = sum_k X_k exp(+2 pi i k n / N)`, unnormalized
    Inverse,
}

pub(crate) fn fft_nd(buf: &mut [Complex64], sizes: &[usize], dir: Direction) {
    let total: usize = sizes.iter().product();
    assert_eq!(buf.len(), total, "buffer does not match grid sizes");
    if total == 0 {
        return;
    }
    let mut planner = FftPlanner::<f64>::new();
    let d = sizes.len();
    for axis in 0..d {
        let n = sizes[axis];
        if n == 1 {
            continue;
        }
        let fft = match dir {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        };
        let stride: usize = sizes[axis + 1..].iter().product();
        let outer: usize = sizes[..axis].iter().product();
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        if stride == 1 {
            fft.process_with_scratch(buf, &mut scratch);
            continue;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for o in 0..outer {
            let base = o * n * stride;
            for s in 0..stride {
                for (i, v) in line.iter_mut().enumerate() {
                    *v = buf[base + i * stride + s];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    buf[base + i * stride + s] = *v;
                }
            }
        }
    }
}

/// Row-major flat offset of a (wrapped) multi-index on a grid.
pub(crate) fn wrapped_offset(ks: &[i64], sizes: &[usize]) -> usize {
    let mut off = 0usize;
    for (&k, &n) in ks.iter().zip(sizes) {
        off = off * n + k.rem_euclid(n as i64) as usize;
    }
    off
}
