//! Scalar functionals of a field: energy, norms, Lagrange multiplier,
//! Pohozaev functional and the Gagliardo–Nirenberg ratio.

use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::grid::Grid3;

/// Lower end of the admissible range, the L²-critical power `1 + 4/3`.
pub const P_CRITICAL: f64 = 1.0 + 4.0 / 3.0;
/// Energy-critical power (exclusive upper end).
pub const P_MAX: f64 = 5.0;

/// Nonlinearity exponent `p` in `|u|^{p-1} u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponent(f64);

impl Exponent {
    /// Admissible exponent, `1 + 4/3 <= p < 5`.
    pub fn new(p: f64) -> Result<Self> {
        if (P_CRITICAL..P_MAX).contains(&p) {
            Ok(Self(p))
        } else {
            Err(NlsError::InvalidExponent(p))
        }
    }

    /// Extended-diagnostics range `1 < p < 5`.
    pub fn extended(p: f64) -> Result<Self> {
        if p > 1.0 && p < P_MAX {
            Ok(Self(p))
        } else {
            Err(NlsError::InvalidExponent(p))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `p >= 1 + 4/3`.
    pub fn is_admissible(self) -> bool {
        self.0 >= P_CRITICAL
    }

    /// Strictly L²-supercritical, `p > 1 + 4/3`.
    pub fn is_supercritical(self) -> bool {
        self.0 > P_CRITICAL
    }

    /// `(5 - p)/2`.
    pub fn epsilon(self) -> f64 {
        (5.0 - self.0) / 2.0
    }

    /// `(3p - 7)/2`.
    pub fn delta(self) -> f64 {
        (3.0 * self.0 - 7.0) / 2.0
    }

    /// Coefficient of `∫|u|^{p+1}` in the Pohozaev functional.
    pub fn pohozaev_coefficient(self) -> f64 {
        3.0 * (self.0 - 1.0) / (2.0 * (self.0 + 1.0))
    }
}

/// `∫|∇u|²`, evaluated from the spectrum.
pub fn kinetic(u: &Field) -> f64 {
    kinetic_from_spectrum(u.grid(), &u.spectrum())
}

pub(crate) fn kinetic_from_spectrum(g: &Grid3, spec: &[Complex64]) -> f64 {
    let [n1, n2, n3] = g.n();
    let mut sum = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            let row = &spec[g.flat_index(i, j, 0)..g.flat_index(i, j, 0) + n3];
            for (l, z) in row.iter().enumerate() {
                sum += g.k_squared(i, j, l) * z.norm_sqr();
            }
        }
    }
    sum * g.cell_volume() / g.size() as f64
}

/// `∫(x1² + x2²)|u|²`.
pub fn trap_moment(u: &Field) -> f64 {
    let g = u.grid();
    let [n1, n2, n3] = g.n();
    let data = u.as_slice();
    let mut sum = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            let v = g.trap(i, j);
            let start = g.flat_index(i, j, 0);
            sum += v * data[start..start + n3].iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    sum * g.cell_volume()
}

/// `∫|u|^{p+1}`.
pub fn lp_integral(u: &Field, p: Exponent) -> f64 {
    let q = (p.value() + 1.0) / 2.0;
    u.as_slice().iter().map(|z| z.norm_sqr().powf(q)).sum::<f64>() * u.grid().cell_volume()
}

/// Every scalar functional of a field, computed in one pass.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub p: f64,
    /// `∫|u|²`.
    pub l2_sq: f64,
    /// `∫|∇u|²`.
    pub kinetic: f64,
    /// `∫(x1²+x2²)|u|²`.
    pub trap: f64,
    /// `kinetic + trap`.
    pub doth_sq: f64,
    /// `∫|u|^{p+1}`.
    pub lp1: f64,
    pub energy: f64,
    /// Lagrange multiplier `(doth_sq - lp1)/l2_sq`; `None` for the zero field.
    pub lambda: Option<f64>,
    pub pohozaev: f64,
}

impl EnergyReport {
    pub fn from_parts(p: Exponent, l2_sq: f64, kinetic: f64, trap: f64, lp1: f64) -> Self {
        let pv = p.value();
        let doth_sq = kinetic + trap;
        let report = Self {
            p: pv,
            l2_sq,
            kinetic,
            trap,
            doth_sq,
            lp1,
            energy: doth_sq / 2.0 - lp1 / (pv + 1.0),
            lambda: (l2_sq > 0.0).then(|| (doth_sq - lp1) / l2_sq),
            pohozaev: kinetic - trap - p.pohozaev_coefficient() * lp1,
        };
        report.assert_consistent();
        report
    }

    /// Re-checks the algebraic relations between the fields.
    fn assert_consistent(&self) {
        let scale = self.doth_sq.abs() + self.lp1.abs() + f64::MIN_POSITIVE;
        debug_assert!((self.doth_sq - self.kinetic - self.trap).abs() <= 1e-12 * scale);
        debug_assert!(self.pohozaev.is_finite() || !self.lp1.is_finite());
    }

    pub fn doth(&self) -> f64 {
        self.doth_sq.sqrt()
    }

    /// `‖u‖²_H = ‖u‖²_Ḣ + ‖u‖²_L²`.
    pub fn h_norm_sq(&self) -> f64 {
        self.doth_sq + self.l2_sq
    }
}

/// Full energy report of `u`; gradient terms are computed spectrally.
pub fn report(u: &Field, p: Exponent) -> EnergyReport {
    EnergyReport::from_parts(p, u.l2_norm_sq(), kinetic(u), trap_moment(u), lp_integral(u, p))
}

/// `‖u‖²_Ḣ`.
pub fn doth_sq(u: &Field) -> f64 {
    kinetic(u) + trap_moment(u)
}

/// `‖u‖²_H`.
pub fn h_norm_sq(u: &Field) -> f64 {
    doth_sq(u) + u.l2_norm_sq()
}

/// Energy gradient `-Δu + (x1²+x2²)u - |u|^{p-1}u` with respect to the real
/// pairing `Re⟨·,·⟩`, together with the report at `u`.
pub fn gradient(u: &Field, p: Exponent) -> (Field, EnergyReport) {
    let g = u.grid();
    let mut spec = u.spectrum();
    let kin = kinetic_from_spectrum(g, &spec);
    let [n1, n2, n3] = g.n();
    for i in 0..n1 {
        for j in 0..n2 {
            for l in 0..n3 {
                spec[g.flat_index(i, j, l)] *= g.k_squared(i, j, l);
            }
        }
    }
    g.fft_inverse(&mut spec);
    let half = (p.value() - 1.0) / 2.0;
    let q = (p.value() + 1.0) / 2.0;
    let data = u.as_slice();
    let (mut trap, mut lp1) = (0.0, 0.0);
    for i in 0..n1 {
        for j in 0..n2 {
            let v = g.trap(i, j);
            for l in 0..n3 {
                let idx = g.flat_index(i, j, l);
                let z = data[idx];
                let m2 = z.norm_sqr();
                trap += v * m2;
                lp1 += m2.powf(q);
                spec[idx] += z * (v - m2.powf(half));
            }
        }
    }
    let dv = g.cell_volume();
    let rep = EnergyReport::from_parts(p, u.l2_norm_sq(), kin, trap * dv, lp1 * dv);
    (Field::from_vec_unchecked(g, spec), rep)
}

/// Gagliardo–Nirenberg ratio `lp1 / (‖u‖_{L²}^{(5-p)/2} ‖u‖_Ḣ^{(3p-3)/2})`.
pub fn gn_ratio(u: &Field, p: Exponent) -> Result<f64> {
    if u.is_zero() {
        return Err(NlsError::ZeroField);
    }
    let r = report(u, p);
    Ok(gn_ratio_of(&r))
}

pub fn gn_ratio_of(r: &EnergyReport) -> f64 {
    let p = r.p;
    r.lp1 / (r.l2_sq.powf((5.0 - p) / 4.0) * r.doth_sq.powf((3.0 * p - 3.0) / 4.0))
}

/// `2‖u‖²_{L²} <= ‖u‖²_Ḣ`, checked with relative slack `1e-8`.
pub fn confinement_lower_bound_check(u: &Field) -> bool {
    let l2 = u.l2_norm_sq();
    2.0 * l2 <= doth_sq(u) * (1.0 + 1e-8)
}

/// One row of a scaling sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub lambda: f64,
    /// Energy of the resampled field; `None` when the field is unresolved.
    pub resampled: Option<f64>,
    /// Energy predicted by the exact scaling identity.
    pub analytic: f64,
    pub spectral_tail: f64,
    pub flagged: bool,
}

/// Spectral-tail level above which a resampled field counts as aliased.
pub const ALIAS_TAIL: f64 = 1e-6;

/// Energy along the mass-preserving dilation `ψ_λ(x) = λ^{3/2} ψ(λx)`.
///
/// Each row holds the energy of the directly resampled field and the value
/// of `λ²·kin/2 - λ^{3(p-1)/2}·lp1/(p+1) + λ^{-2}·trap/2` from the report of
/// `ψ`. Resampling uses exact trigonometric interpolation per axis; samples
/// falling outside the box are taken as zero.
pub fn scaling_sweep(psi: &Field, p: Exponent, lambdas: &[f64]) -> Result<Vec<ScalingRow>> {
    if let Some(&bad) = lambdas.iter().find(|&&l| !(l >= 1.0 && l.is_finite())) {
        return Err(NlsError::Precondition(format!("scale factor {bad} must be >= 1")));
    }
    let base = report(psi, p);
    let pv = p.value();
    lambdas
        .iter()
        .map(|&lam| {
            let analytic = lam * lam * base.kinetic / 2.0 - lam.powf(1.5 * (pv - 1.0)) * base.lp1 / (pv + 1.0)
                + base.trap / (2.0 * lam * lam);
            let scaled = dilate(psi, lam);
            let tail = scaled.spectral_tail();
            let flagged = tail > ALIAS_TAIL;
            let resampled = (!flagged).then(|| report(&scaled, p).energy);
            Ok(ScalingRow {
                lambda: lam,
                resampled,
                analytic,
                spectral_tail: tail,
                flagged,
            })
        })
        .collect()
}

/// `λ^{3/2} ψ(λx)` by separable trigonometric interpolation.
pub fn dilate(psi: &Field, lam: f64) -> Field {
    let g = psi.grid();
    let n = g.n();
    let mats: [Vec<Complex64>; 3] = std::array::from_fn(|a| interpolation_matrix(g, a, lam));
    let mut data = psi.to_vec();
    let mut out = vec![Complex64::default(); data.len()];
    // Apply along each axis: out[.., i_a, ..] = Σ_j M[i_a][j] data[.., j, ..].
    for axis in 0..3 {
        let na = n[axis];
        let inner: usize = n[axis + 1..].iter().product();
        let outer: usize = n[..axis].iter().product();
        let m = &mats[axis];
        out.iter_mut().for_each(|z| *z = Complex64::default());
        for o in 0..outer {
            let base = o * na * inner;
            for i in 0..na {
                let row = &m[i * na..(i + 1) * na];
                let dst = base + i * inner;
                for (j, w) in row.iter().enumerate() {
                    if *w == Complex64::default() {
                        continue;
                    }
                    let src = base + j * inner;
                    for t in 0..inner {
                        out[dst + t] += w * data[src + t];
                    }
                }
            }
        }
        std::mem::swap(&mut data, &mut out);
    }
    let amp = lam.powf(1.5);
    data.iter_mut().for_each(|z| *z *= amp);
    Field::from_vec_unchecked(g, data)
}

/// Row `i` gives the weights that evaluate the trigonometric interpolant of
/// the axis samples at `λ·x_i`.
fn interpolation_matrix(g: &Grid3, axis: usize, lam: f64) -> Vec<Complex64> {
    let n = g.n()[axis];
    let len = g.lengths()[axis];
    let x = g.coords(axis);
    let k = g.wavenumbers(axis);
    let nyquist = n.is_multiple_of(2).then_some(n / 2);
    let mut m = vec![Complex64::default(); n * n];
    for i in 0..n {
        let y = lam * x[i];
        if y < -0.5 * len || y >= 0.5 * len {
            continue;
        }
        for j in 0..n {
            // f(y) = (1/n) Σ_m f̂_m e^{i k_m (y - x_0)},  f̂_m = Σ_j f_j e^{-i k_m (x_j - x_0)}.
            let mut w = Complex64::default();
            for (mi, &km) in k.iter().enumerate() {
                let phase = km * (y - x[j]);
                if Some(mi) == nyquist {
                    // Split the Nyquist mode symmetrically so real data stays real.
                    w += Complex64::new(phase.cos(), 0.0);
                } else {
                    w += Complex64::from_polar(1.0, phase);
                }
            }
            m[i * n + j] = w / n as f64;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(grid: &Grid3, r: f64) -> Field {
        let c = r * PI.powf(-0.75);
        Field::from_real_fn(grid, |a, b, z| c * (-(a * a + b * b + z * z) / 2.0).exp())
    }

    fn cube() -> Grid3 {
        Grid3::new([32, 32, 32], [16.0; 3]).unwrap()
    }

    #[test]
    fn exponent_ranges() {
        assert!(Exponent::new(3.0).is_ok());
        assert!(Exponent::new(P_CRITICAL).is_ok());
        assert!(Exponent::new(2.0).is_err());
        assert!(Exponent::new(5.0).is_err());
        assert!(Exponent::extended(1.5).is_ok());
        assert!(Exponent::extended(1.0).is_err());
        assert!(!Exponent::new(P_CRITICAL).unwrap().is_supercritical());
        assert!(Exponent::new(3.0).unwrap().is_supercritical());
    }

    #[test]
    fn gaussian_report_closed_forms() {
        // ∫g² = r², ∫|∇g|² = 3r²/2, ∫(x1²+x2²)g² = r², ∫g⁴ = r⁴ (2π)^{-3/2}.
        let p = Exponent::new(3.0).unwrap();
        let lp_coef = (2.0 * PI).powf(-1.5);
        for r in [0.1, 0.5, 1.0] {
            let rep = report(&gaussian(&cube(), r), p);
            let r2 = r * r;
            let tol = 1e-8 * r2;
            assert!((rep.l2_sq - r2).abs() < tol);
            assert!((rep.kinetic - 1.5 * r2).abs() < tol);
            assert!((rep.trap - r2).abs() < tol);
            assert!((rep.doth_sq - 2.5 * r2).abs() < tol);
            assert!((rep.lp1 - lp_coef * r2 * r2).abs() < tol * r2);
            assert!((rep.energy - (1.25 * r2 - lp_coef / 4.0 * r2 * r2)).abs() < tol);
            assert!((rep.lambda.unwrap() - (2.5 - lp_coef * r2)).abs() < 1e-8);
            assert!((rep.pohozaev - (0.5 * r2 - 0.75 * lp_coef * r2 * r2)).abs() < tol);
        }
        // Rounded constants quoted for the cubic Gaussian.
        assert!((lp_coef - 0.063494).abs() < 5e-7);
        assert!((lp_coef / 4.0 - 0.015873).abs() < 5e-7);
        assert!((0.75 * lp_coef - 0.047620).abs() < 5e-7);
    }

    #[test]
    fn zero_field_has_no_multiplier() {
        let p = Exponent::new(3.0).unwrap();
        let rep = report(&Field::zeros(&cube()), p);
        assert_eq!(rep.energy, 0.0);
        assert_eq!(rep.lambda, None);
        assert!(matches!(gn_ratio(&Field::zeros(&cube()), p), Err(NlsError::ZeroField)));
    }

    #[test]
    fn gn_ratio_gaussian_and_homogeneity() {
        let p = Exponent::new(3.0).unwrap();
        let u = gaussian(&cube(), 1.0);
        let ratio = gn_ratio(&u, p).unwrap();
        let exact = (2.0 * PI).powf(-1.5) / 2.5f64.powf(1.5);
        assert!((ratio - exact).abs() < 1e-9);
        assert!((ratio - 0.016063).abs() < 5e-7);
        for c in [0.01, 3.0, 40.0] {
            let scaled = gn_ratio(&u.scale(c), p).unwrap();
            assert!((scaled / ratio - 1.0).abs() < 1e-10);
        }
        let rotated = gn_ratio(&u.rotate(1.1), p).unwrap();
        assert!((rotated / ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn confinement_bound_on_gaussians() {
        let u = gaussian(&cube(), 1.0);
        assert!(confinement_lower_bound_check(&u));
        let rep = report(&u, Exponent::new(3.0).unwrap());
        assert!(2.0 * rep.l2_sq <= rep.doth_sq);
    }

    #[test]
    fn gradient_matches_laplacian_route() {
        let p = Exponent::new(3.0).unwrap();
        let u = gaussian(&cube(), 0.7).map(|z| z * Complex64::new(1.0, 0.3));
        let (grad, rep) = gradient(&u, p);
        let expect = u.laplacian().scale(-1.0).add(&u.map(|z| z * (-z.norm_sqr()))).unwrap();
        let g = u.grid();
        let trap = Field::from_fn(g, |a, b, _| Complex64::new(a * a + b * b, 0.0));
        let trap_u = Field::from_vec(g, trap.as_slice().iter().zip(u.as_slice()).map(|(v, z)| v * z).collect()).unwrap();
        let expect = expect.add(&trap_u).unwrap();
        assert!(grad.sub(&expect).unwrap().max_abs() < 1e-12);
        let direct = report(&u, p);
        assert!((rep.energy - direct.energy).abs() < 1e-13);
        assert!((rep.doth_sq - direct.doth_sq).abs() < 1e-13);
    }

    #[test]
    fn scaling_identity_rows() {
        let p = Exponent::new(3.0).unwrap();
        let psi = gaussian(&Grid3::new([48; 3], [16.0; 3]).unwrap(), 1.0);
        let rows = scaling_sweep(&psi, p, &[1.0, 1.1, 48.0]).unwrap();
        let e0 = report(&psi, p).energy;
        assert!((rows[0].analytic - e0).abs() < 1e-12);
        assert!((rows[0].resampled.unwrap() - e0).abs() < 1e-12);
        assert!((rows[1].resampled.unwrap() - rows[1].analytic).abs() < 1e-8);
        assert!(rows[2].analytic < 0.0 && rows[2].flagged);
        assert!(scaling_sweep(&psi, p, &[0.5]).is_err());
    }

    #[test]
    fn dilation_of_gaussian_matches_direct_sampling() {
        let g = cube();
        let psi = gaussian(&g, 1.0);
        let lam: f64 = 1.3;
        let direct = Field::from_real_fn(&g, |a, b, c| {
            lam.powf(1.5) * PI.powf(-0.75) * (-(lam * lam) * (a * a + b * b + c * c) / 2.0).exp()
        });
        assert!(dilate(&psi, lam).sub(&direct).unwrap().max_abs() < 1e-9);
    }
}
