//! Complex fields on a [`Grid3`] and the spectral/quadrature algebra on them.

use ndarray::Array3;
use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::grid::Grid3;

/// A complex-valued state sampled on every node of a grid.
///
/// Operations never mutate a field in place; they return new fields.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid3,
    values: Array3<Complex64>,
}

impl Field {
    pub fn new(grid: &Grid3, values: Array3<Complex64>) -> Result<Self> {
        let n = grid.n();
        if values.shape() != n {
            return Err(NlsError::LengthMismatch {
                expected: grid.size(),
                got: values.len(),
            });
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NlsError::NonFinite);
        }
        let values = if values.is_standard_layout() {
            values
        } else {
            values.as_standard_layout().into_owned()
        };
        Ok(Self { grid: grid.clone(), values })
    }

    /// Builds a field from a flat x3-fastest vector.
    pub fn from_vec(grid: &Grid3, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.size() {
            return Err(NlsError::LengthMismatch {
                expected: grid.size(),
                got: data.len(),
            });
        }
        let n = grid.n();
        let values = Array3::from_shape_vec((n[0], n[1], n[2]), data).expect("shape checked");
        Self::new(grid, values)
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid3, data: Vec<Complex64>) -> Self {
        let n = grid.n();
        let values = Array3::from_shape_vec((n[0], n[1], n[2]), data).expect("shape matches grid");
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Grid3) -> Self {
        let n = grid.n();
        Self {
            grid: grid.clone(),
            values: Array3::zeros((n[0], n[1], n[2])),
        }
    }

    /// Samples `f(x1, x2, x3)` on every node.
    pub fn from_fn(grid: &Grid3, f: impl Fn(f64, f64, f64) -> Complex64) -> Self {
        let [x1, x2, x3] = [grid.coords(0), grid.coords(1), grid.coords(2)];
        let n = grid.n();
        let values = Array3::from_shape_fn((n[0], n[1], n[2]), |(i, j, l)| f(x1[i], x2[j], x3[l]));
        Self { grid: grid.clone(), values }
    }

    /// Samples a real function.
    pub fn from_real_fn(grid: &Grid3, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |a, b, c| Complex64::new(f(a, b, c), 0.0))
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &Array3<Complex64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.values.as_slice().expect("standard layout")
    }

    pub fn to_vec(&self) -> Vec<Complex64> {
        self.as_slice().to_vec()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, l: usize) -> Complex64 {
        self.values[[i, j, l]]
    }

    pub fn is_zero(&self) -> bool {
        self.as_slice().iter().all(|z| *z == Complex64::default())
    }

    pub(crate) fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(NlsError::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.mapv(f),
        }
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|z| z * c)
    }

    pub fn rotate(&self, theta: f64) -> Field {
        let phase = Complex64::from_polar(1.0, theta);
        self.map(|z| z * phase)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: Complex64, other: &Field) -> Result<Field> {
        self.ensure_same_grid(other)?;
        let values = &self.values + &other.values.mapv(|z| z * a);
        Ok(Field { grid: self.grid.clone(), values })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    /// Modulus `|u|` as a real (zero imaginary part) field.
    pub fn modulus(&self) -> Field {
        self.map(|z| Complex64::new(z.norm(), 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Quadrature inner product `Σ conj(f)·g·dV`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.ensure_same_grid(other)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &Field) -> Complex64 {
        let s: Complex64 = self
            .as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.cell_volume()
    }

    /// Real part of the inner product, the natural pairing for the energy.
    pub fn real_inner(&self, other: &Field) -> f64 {
        self.inner_unchecked(other).re
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Unnormalized DFT of the values.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut data = self.to_vec();
        self.grid.fft_forward(&mut data);
        data
    }

    /// Builds a field from DFT coefficients.
    pub fn from_spectrum(grid: &Grid3, mut spec: Vec<Complex64>) -> Field {
        grid.fft_inverse(&mut spec);
        Field::from_vec_unchecked(grid, spec)
    }

    /// Applies a real Fourier multiplier `m(k1, k2, k3)` given per node of the
    /// spectral grid.
    pub fn fourier_multiply(&self, multiplier: impl Fn(usize, usize, usize) -> Complex64) -> Field {
        let g = &self.grid;
        let mut spec = self.spectrum();
        let [n1, n2, n3] = g.n();
        for i in 0..n1 {
            for j in 0..n2 {
                for l in 0..n3 {
                    spec[g.flat_index(i, j, l)] *= multiplier(i, j, l);
                }
            }
        }
        Field::from_spectrum(g, spec)
    }

    /// Spectral Laplacian, exact on every resolved Fourier mode.
    pub fn laplacian(&self) -> Field {
        let g = self.grid.clone();
        self.fourier_multiply(|i, j, l| Complex64::new(-g.k_squared(i, j, l), 0.0))
    }

    /// Periodic translation `u(x1, x2, x3 - shift)` done as a spectral phase.
    pub fn shift_x3(&self, shift: f64) -> Field {
        let k3 = self.grid.wavenumbers(2).to_vec();
        let phases: Vec<Complex64> = k3.iter().map(|k| Complex64::from_polar(1.0, -k * shift)).collect();
        let mut lines = self.to_vec();
        self.grid.fft_x3_forward(&mut lines);
        for line in lines.chunks_exact_mut(k3.len()) {
            line.iter_mut().zip(&phases).for_each(|(z, p)| *z *= p);
        }
        self.grid.fft_x3_inverse(&mut lines);
        Field::from_vec_unchecked(&self.grid, lines)
    }

    /// Exact periodic roll of the x3 index by `cells` (positive moves mass
    /// towards larger x3).
    pub fn roll_x3(&self, cells: isize) -> Field {
        let n3 = self.grid.n()[2] as isize;
        let s = cells.rem_euclid(n3) as usize;
        let mut out = self.to_vec();
        let src = self.as_slice();
        let n3 = n3 as usize;
        for (dst, line) in out.chunks_exact_mut(n3).zip(src.chunks_exact(n3)) {
            for (l, z) in line.iter().enumerate() {
                dst[(l + s) % n3] = *z;
            }
        }
        Field::from_vec_unchecked(&self.grid, out)
    }

    /// Fraction of the L² norm carried by spectral modes with any
    /// `|k_i| > 2/3 · k_max,i`. Used as a resolution diagnostic.
    pub fn spectral_tail(&self) -> f64 {
        let g = &self.grid;
        let spec = self.spectrum();
        let cut: [f64; 3] = std::array::from_fn(|a| {
            let kmax = g.wavenumbers(a).iter().fold(0.0f64, |m, k| m.max(k.abs()));
            2.0 / 3.0 * kmax
        });
        let [n1, n2, n3] = g.n();
        let (mut tail, mut total) = (0.0, 0.0);
        for i in 0..n1 {
            let outer_i = g.wavenumbers(0)[i].abs() > cut[0];
            for j in 0..n2 {
                let outer_j = outer_i || g.wavenumbers(1)[j].abs() > cut[1];
                for l in 0..n3 {
                    let w = spec[g.flat_index(i, j, l)].norm_sqr();
                    total += w;
                    if outer_j || g.wavenumbers(2)[l].abs() > cut[2] {
                        tail += w;
                    }
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            (tail / total).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(grid: &Grid3, r: f64) -> Field {
        let c = r * PI.powf(-0.75);
        Field::from_real_fn(grid, |a, b, z| c * (-(a * a + b * b + z * z) / 2.0).exp())
    }

    #[test]
    fn laplacian_of_plane_wave_and_constant() {
        let g = Grid3::new([8, 8, 16], [2.0 * PI, 4.0 * PI, 2.0 * PI]).unwrap();
        let k = [2.0, 0.5, -3.0];
        let wave = Field::from_fn(&g, |a, b, c| Complex64::from_polar(1.0, k[0] * a + k[1] * b + k[2] * c));
        let lap = wave.laplacian();
        let k2: f64 = k.iter().map(|x| x * x).sum();
        for (a, b) in lap.as_slice().iter().zip(wave.as_slice()) {
            assert!((a + b * k2).norm() < 1e-11);
        }
        let c = Field::from_fn(&g, |_, _, _| Complex64::new(3.0, -1.0));
        assert!(c.laplacian().max_abs() < 1e-13);
    }

    #[test]
    fn laplacian_of_gaussian_matches_closed_form() {
        let g = Grid3::new([48, 48, 48], [16.0; 3]).unwrap();
        let u = Field::from_real_fn(&g, |a, b, c| (-(a * a + b * b + c * c) / 2.0).exp());
        let lap = u.laplacian();
        let exact = Field::from_real_fn(&g, |a, b, c| {
            let r2 = a * a + b * b + c * c;
            (r2 - 3.0) * (-r2 / 2.0).exp()
        });
        assert!(lap.sub(&exact).unwrap().max_abs() <= 1e-8);
    }

    #[test]
    fn inner_products() {
        let g = Grid3::new([8, 8, 8], [2.0, 3.0, 4.0]).unwrap();
        let one = Field::from_real_fn(&g, |_, _, _| 1.0);
        assert!((one.inner(&one).unwrap().re - 24.0).abs() < 1e-12);

        let m1 = Field::from_fn(&g, |a, _, _| Complex64::from_polar(1.0, 2.0 * PI * a / 2.0));
        let m2 = Field::from_fn(&g, |_, b, c| Complex64::from_polar(1.0, 2.0 * PI * (b / 3.0 - 2.0 * c / 4.0)));
        assert!(m1.inner(&m2).unwrap().norm() < 1e-12);

        let other = Grid3::new([8, 8, 8], [2.0, 3.0, 5.0]).unwrap();
        assert!(matches!(one.inner(&Field::zeros(&other)), Err(NlsError::GridMismatch)));
    }

    #[test]
    fn gaussian_mass_is_r_squared() {
        let g = Grid3::new([32, 32, 32], [16.0; 3]).unwrap();
        for r in [0.1, 1.0, 2.5] {
            let u = gaussian(&g, r);
            assert!((u.l2_norm_sq() - r * r).abs() <= 1e-8 * r * r.max(1.0));
        }
    }

    #[test]
    fn shift_examples() {
        let g = Grid3::new([8, 8, 16], [1.0, 1.0, 5.0]).unwrap();
        let u = Field::from_fn(&g, |a, b, c| Complex64::new((a + 2.0 * b).cos(), (c * 1.3).sin()));
        assert!(u.shift_x3(0.0).sub(&u).unwrap().max_abs() < 1e-14);
        assert!(u.shift_x3(5.0).sub(&u).unwrap().max_abs() < 1e-12);

        let m = 3.0;
        let mode = Field::from_fn(&g, |_, _, c| Complex64::from_polar(1.0, m * c * 2.0 * PI / 5.0));
        let shifted = mode.shift_x3(5.0 / 4.0);
        let expect = mode.map(|z| z * Complex64::from_polar(1.0, -m * PI / 2.0));
        assert!(shifted.sub(&expect).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn roll_matches_spectral_shift_by_whole_cells() {
        let g = Grid3::new([8, 8, 16], [4.0, 4.0, 8.0]).unwrap();
        let u = Field::from_fn(&g, |a, b, c| Complex64::new((-(a * a + b * b + (c - 1.0).powi(2))).exp(), 0.1 * c.sin()));
        let h3 = g.spacing(2);
        let d = u.roll_x3(3).sub(&u.shift_x3(3.0 * h3)).unwrap();
        assert!(d.max_abs() < 1e-12);
        assert!(u.roll_x3(-5).roll_x3(5).sub(&u).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn rejects_non_finite_and_wrong_length() {
        let g = Grid3::new([8, 8, 8], [1.0; 3]).unwrap();
        let mut v = vec![Complex64::default(); g.size()];
        v[7] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(Field::from_vec(&g, v), Err(NlsError::NonFinite)));
        assert!(matches!(
            Field::from_vec(&g, vec![Complex64::default(); 10]),
            Err(NlsError::LengthMismatch { .. })
        ));
    }
}
