//! The 2D harmonic oscillator `-Δ_{x1,x2} + x1² + x2²`: sampled eigenmodes,
//! projections of 3D fields onto them, and the Rayleigh quotient of the 3D
//! partially trapped operator.

use num_complex::Complex64;

use crate::energy::doth_sq;
use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::grid::Grid3;

/// Bottom of the 2D oscillator spectrum; also the bottom of the 3D spectrum.
pub const LAMBDA0: f64 = 2.0;

/// Raw quadrature norm tolerance for accepting a sampled Hermite function.
const RESOLUTION_TOL: f64 = 1e-6;

/// Cutoff keeping every mode pair up to total degree 8, so the first omitted
/// eigenvalue is 20. Degree 9 is not resolved to 1e-6 at spacing 0.5.
pub const DEFAULT_CUTOFF: usize = 45;

/// A sampled 2D eigenmode `Ψ(x1,x2) = h_m(x1) h_n(x2)`.
#[derive(Clone, Debug)]
pub struct Mode {
    pub m: usize,
    pub n: usize,
    pub eigenvalue: f64,
    /// Values on the (x1, x2) slice, x2 fastest.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct OscillatorBasis {
    grid: Grid3,
    modes: Vec<Mode>,
}

/// Hermite functions `h_0..=h_max_degree` sampled at `x`, normalized by the
/// three-term recurrence. Also returns the raw quadrature norms.
pub fn hermite_functions(x: &[f64], dx: f64, max_degree: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(max_degree + 1);
    h.push(x.iter().map(|&t| std::f64::consts::PI.powf(-0.25) * (-t * t / 2.0).exp()).collect());
    if max_degree >= 1 {
        h.push(x.iter().zip(&h[0]).map(|(&t, &h0)| 2f64.sqrt() * t * h0).collect());
    }
    for k in 1..max_degree {
        let a = (2.0 / (k + 1) as f64).sqrt();
        let b = (k as f64 / (k + 1) as f64).sqrt();
        let next = x
            .iter()
            .enumerate()
            .map(|(i, &t)| a * t * h[k][i] - b * h[k - 1][i])
            .collect();
        h.push(next);
    }
    let norms = h.iter().map(|f| f.iter().map(|v| v * v).sum::<f64>() * dx).collect();
    (h, norms)
}

impl OscillatorBasis {
    /// Builds the first `cutoff` eigenmodes, ordered by eigenvalue and then
    /// by the x1 degree.
    pub fn build(grid: &Grid3, cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(NlsError::InvalidConfig("oscillator cutoff must be >= 1".into()));
        }
        let pairs = mode_pairs(cutoff);
        let max_m = pairs.iter().map(|p| p.0).max().unwrap_or(0);
        let max_n = pairs.iter().map(|p| p.1).max().unwrap_or(0);

        let mut per_axis = Vec::with_capacity(2);
        for (axis, max_deg) in [(0, max_m), (1, max_n)] {
            let (mut h, norms) = hermite_functions(grid.coords(axis), grid.spacing(axis), max_deg);
            for (deg, (f, norm)) in h.iter_mut().zip(&norms).enumerate() {
                let deviation = (norm - 1.0).abs();
                if deviation > RESOLUTION_TOL {
                    let mode = pairs
                        .iter()
                        .position(|&(m, n)| if axis == 0 { m == deg } else { n == deg })
                        .unwrap_or(0);
                    return Err(NlsError::UnresolvedMode { mode, deviation });
                }
                let s = 1.0 / norm.sqrt();
                f.iter_mut().for_each(|v| *v *= s);
            }
            // Quadrature overlaps of high degrees reach ~1e-9; re-orthogonalize
            // in degree order so the ground mode is untouched.
            gram_schmidt(&mut h, grid.spacing(axis));
            per_axis.push(h);
        }

        let n2 = grid.n()[1];
        let modes = pairs
            .into_iter()
            .map(|(m, n)| {
                let hx = &per_axis[0][m];
                let hy = &per_axis[1][n];
                let mut values = Vec::with_capacity(hx.len() * n2);
                for a in hx {
                    values.extend(hy.iter().map(|b| a * b));
                }
                Mode {
                    m,
                    n,
                    eigenvalue: (2 * (m + n) + 2) as f64,
                    values,
                }
            })
            .collect();
        Ok(Self { grid: grid.clone(), modes })
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    pub fn ground_mode(&self) -> &Mode {
        &self.modes[0]
    }

    /// Slice inner product `∫Ψ_i Ψ_j dx1 dx2`.
    pub fn overlap(&self, i: usize, j: usize) -> f64 {
        let da = self.grid.spacing(0) * self.grid.spacing(1);
        self.modes[i]
            .values
            .iter()
            .zip(&self.modes[j].values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * da
    }

    /// `φ_j(x3) = ∫ u(x1,x2,x3) Ψ_j(x1,x2) dx1 dx2` on every x3 node.
    pub fn project(&self, u: &Field, j: usize) -> Result<Vec<Complex64>> {
        if u.grid() != &self.grid {
            return Err(NlsError::GridMismatch);
        }
        Ok(self.project_unchecked(u, j))
    }

    fn project_unchecked(&self, u: &Field, j: usize) -> Vec<Complex64> {
        let [n1, n2, n3] = self.grid.n();
        let da = self.grid.spacing(0) * self.grid.spacing(1);
        let psi = &self.modes[j].values;
        let data = u.as_slice();
        let mut out = vec![Complex64::default(); n3];
        for s in 0..n1 * n2 {
            let w = psi[s];
            if w == 0.0 {
                continue;
            }
            let line = &data[s * n3..(s + 1) * n3];
            out.iter_mut().zip(line).for_each(|(o, z)| *o += z * w);
        }
        out.iter_mut().for_each(|o| *o *= da);
        out
    }

    /// Projection onto the transverse ground mode.
    pub fn project_phi0(&self, u: &Field) -> Result<Vec<Complex64>> {
        self.project(u, 0)
    }

    /// Per-mode masses `∫|φ_j|² dx3` and the part of `‖u‖²` they miss.
    pub fn mode_masses(&self, u: &Field) -> Result<ModeMasses> {
        if u.grid() != &self.grid {
            return Err(NlsError::GridMismatch);
        }
        let h3 = self.grid.spacing(2);
        let masses: Vec<f64> = (0..self.modes.len())
            .map(|j| self.project_unchecked(u, j).iter().map(|z| z.norm_sqr()).sum::<f64>() * h3)
            .collect();
        let total = u.l2_norm_sq();
        let remainder = total - masses.iter().sum::<f64>();
        Ok(ModeMasses { masses, remainder, total })
    }

    /// Field `Ψ_j(x1,x2)·h(x3)` for a line `h` sampled on the x3 nodes.
    pub fn synthesize(&self, j: usize, line: &[Complex64]) -> Result<Field> {
        let [n1, n2, n3] = self.grid.n();
        if line.len() != n3 {
            return Err(NlsError::LengthMismatch { expected: n3, got: line.len() });
        }
        let psi = &self.modes[j].values;
        let mut data = Vec::with_capacity(n1 * n2 * n3);
        for &w in psi.iter() {
            data.extend(line.iter().map(|z| z * w));
        }
        Field::from_vec(&self.grid, data)
    }
}

#[derive(Clone, Debug)]
pub struct ModeMasses {
    pub masses: Vec<f64>,
    pub remainder: f64,
    pub total: f64,
}

impl ModeMasses {
    /// `m_total - m_0`.
    pub fn excited(&self) -> f64 {
        self.total - self.masses[0]
    }
}

/// Modified Gram–Schmidt, two passes, under the quadrature `Σ f g dx`.
fn gram_schmidt(fs: &mut [Vec<f64>], dx: f64) {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * dx;
    for k in 0..fs.len() {
        let (done, rest) = fs.split_at_mut(k);
        let f = &mut rest[0];
        for _ in 0..2 {
            for prev in done.iter() {
                let c = dot(prev, f);
                f.iter_mut().zip(prev).for_each(|(v, q)| *v -= c * q);
            }
        }
        let s = 1.0 / dot(f, f).sqrt();
        f.iter_mut().for_each(|v| *v *= s);
    }
}

/// Index pairs `(m, n)` of the first `count` modes, sorted by `m + n` then `m`.
pub fn mode_pairs(count: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(count);
    let mut degree = 0;
    while out.len() < count {
        for m in 0..=degree {
            if out.len() == count {
                break;
            }
            out.push((m, degree - m));
        }
        degree += 1;
    }
    out
}

/// `‖u‖²_Ḣ / ‖u‖²_{L²}` for the 3D operator `-Δ + x1² + x2²`.
pub fn rayleigh_quotient(u: &Field) -> Result<f64> {
    let l2 = u.l2_norm_sq();
    if l2 == 0.0 {
        return Err(NlsError::ZeroField);
    }
    Ok(doth_sq(u) / l2)
}

/// `∫|∂_{x3} φ|² dx3` for a line sampled on the x3 nodes, computed spectrally.
pub fn line_derivative_norm_sq(grid: &Grid3, line: &[Complex64]) -> f64 {
    let n3 = grid.n()[2];
    let mut spec = line.to_vec();
    grid.fft_x3_forward(&mut spec);
    let k = grid.wavenumbers(2);
    spec.iter().zip(k).map(|(z, k)| k * k * z.norm_sqr()).sum::<f64>() * grid.spacing(2) / n3 as f64
}

/// `∫|φ|² dx3` of a line.
pub fn line_norm_sq(grid: &Grid3, line: &[Complex64]) -> f64 {
    line.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing(2)
}
