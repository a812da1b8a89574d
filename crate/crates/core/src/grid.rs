//! Uniform periodic box discretization and the FFT plans that go with it.
//!
//! Axis order is (x1, x2, x3) with x3 the fastest-varying index in every flat
//! array. Coordinates run from `-L/2` in steps of `h = L/n`, so for even `n`
//! the origin sits exactly on node `n/2`. Wavenumbers use the standard
//! periodic ordering `2π/L · [0, 1, …, n/2-1, -n/2, …, -1]`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{NlsError, Result};

/// Smallest accepted cell count along any axis.
pub const MIN_CELLS: usize = 8;

#[derive(Clone)]
pub struct Grid3 {
    inner: Arc<Inner>,
}

struct Inner {
    n: [usize; 3],
    len: [f64; 3],
    x: [Vec<f64>; 3],
    k: [Vec<f64>; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl fmt::Debug for Grid3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid3")
            .field("n", &self.inner.n)
            .field("len", &self.inner.len)
            .finish()
    }
}

impl PartialEq for Grid3 {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.len == other.inner.len)
    }
}

/// Periodic wavenumbers for `n` cells on a box of length `len`.
pub fn wavenumbers(n: usize, len: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / len;
    (0..n)
        .map(|j| {
            let m = if j < n.div_ceil(2) { j as isize } else { j as isize - n as isize };
            base * m as f64
        })
        .collect()
}

impl Grid3 {
    /// Builds a grid with `n[i]` cells on a box of side `len[i]`.
    pub fn new(n: [usize; 3], len: [f64; 3]) -> Result<Self> {
        for axis in 0..3 {
            if n[axis] < MIN_CELLS {
                return Err(NlsError::InvalidGrid(format!(
                    "n{} = {} is below the minimum of {MIN_CELLS}",
                    axis + 1,
                    n[axis]
                )));
            }
            if !(len[axis].is_finite() && len[axis] > 0.0) {
                return Err(NlsError::InvalidGrid(format!(
                    "L{} = {} must be positive and finite",
                    axis + 1,
                    len[axis]
                )));
            }
        }
        let mut planner = FftPlanner::<f64>::new();
        let x = std::array::from_fn(|a| {
            let h = len[a] / n[a] as f64;
            (0..n[a]).map(|j| -0.5 * len[a] + j as f64 * h).collect()
        });
        let k = std::array::from_fn(|a| wavenumbers(n[a], len[a]));
        let fwd = std::array::from_fn(|a| planner.plan_fft_forward(n[a]));
        let inv = std::array::from_fn(|a| planner.plan_fft_inverse(n[a]));
        Ok(Self {
            inner: Arc::new(Inner { n, len, x, k, fwd, inv }),
        })
    }

    /// The acceptance-scale default: 32×32×64 cells on a 16×16×32 box.
    pub fn desk() -> Self {
        Self::new([32, 32, 64], [16.0, 16.0, 32.0]).expect("desk grid is valid")
    }

    pub fn n(&self) -> [usize; 3] {
        self.inner.n
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.inner.len
    }

    /// Total number of nodes.
    pub fn size(&self) -> usize {
        self.inner.n.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.inner.len[axis] / self.inner.n[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..3).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.inner.len.iter().product()
    }

    pub fn coords(&self, axis: usize) -> &[f64] {
        &self.inner.x[axis]
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.inner.k[axis]
    }

    /// Index of the node closest to the origin along `axis`.
    pub fn center_index(&self, axis: usize) -> usize {
        self.inner.n[axis] / 2
    }

    #[inline]
    pub fn flat_index(&self, i: usize, j: usize, l: usize) -> usize {
        let [_, n2, n3] = self.inner.n;
        (i * n2 + j) * n3 + l
    }

    /// Transverse trap `x1² + x2²` at node `(i, j)`.
    #[inline]
    pub fn trap(&self, i: usize, j: usize) -> f64 {
        let x1 = self.inner.x[0][i];
        let x2 = self.inner.x[1][j];
        x1 * x1 + x2 * x2
    }

    #[inline]
    pub fn k_squared(&self, i: usize, j: usize, l: usize) -> f64 {
        let k = &self.inner.k;
        k[0][i] * k[0][i] + k[1][j] * k[1][j] + k[2][l] * k[2][l]
    }

    /// Largest `|k|²` on the grid.
    pub fn k_squared_max(&self) -> f64 {
        (0..3)
            .map(|a| self.inner.k[a].iter().fold(0.0f64, |m, &k| m.max(k * k)))
            .sum()
    }

    /// Unnormalized forward DFT of a flat (x3-fastest) array, in place.
    pub fn fft_forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.fwd);
    }

    /// Inverse DFT including the `1/N` factor, in place.
    pub fn fft_inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.inv);
        let scale = 1.0 / self.size() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    /// 1D forward DFT along x3 applied to every consecutive chunk of `n3` values.
    pub fn fft_x3_forward(&self, lines: &mut [Complex64]) {
        let n3 = self.inner.n[2];
        assert_eq!(lines.len() % n3, 0);
        self.inner.fwd[2].process(lines);
    }

    /// 1D inverse DFT (with `1/n3`) along x3 on consecutive chunks.
    pub fn fft_x3_inverse(&self, lines: &mut [Complex64]) {
        let n3 = self.inner.n[2];
        assert_eq!(lines.len() % n3, 0);
        self.inner.inv[2].process(lines);
        let scale = 1.0 / n3 as f64;
        lines.iter_mut().for_each(|z| *z *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [n1, n2, n3] = self.inner.n;
        assert_eq!(data.len(), n1 * n2 * n3, "array does not match grid");
        let mut scratch = vec![Complex64::default(); plans.iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0)];
        plans[2].process_with_scratch(data, &mut scratch);
        strided_transform(data, n1, n2, n3, &plans[1], &mut scratch);
        strided_transform(data, 1, n1, n2 * n3, &plans[0], &mut scratch);
    }
}

/// Transforms along the middle axis of a `[outer][axis][inner]` array by
/// transposing each outer block so the axis becomes contiguous.
fn strided_transform(
    data: &mut [Complex64],
    outer: usize,
    axis: usize,
    inner: usize,
    plan: &Arc<dyn Fft<f64>>,
    scratch: &mut [Complex64],
) {
    let block = axis * inner;
    let mut buf = vec![Complex64::default(); block];
    for chunk in data.chunks_exact_mut(block).take(outer) {
        for a in 0..axis {
            for b in 0..inner {
                buf[b * axis + a] = chunk[a * inner + b];
            }
        }
        plan.process_with_scratch(&mut buf, scratch);
        for a in 0..axis {
            for b in 0..inner {
                chunk[a * inner + b] = buf[b * axis + a];
            }
        }
    }
}
