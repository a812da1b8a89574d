//! Structure checks run on computed minimizers: profile error against the
//! transverse ground mode, symmetry defects, phase rigidity, the Pohozaev
//! certificate, strict subadditivity and the local-minimum geometry.

use num_complex::Complex64;

use crate::energy::{self, Exponent, P_CRITICAL};
use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::groundstate::{energy_ceiling, slice_masses, solve, GroundStateResult, SolveConfig, Status};
use crate::grid::Grid3;
use crate::oscillator::{line_derivative_norm_sq, line_norm_sq, OscillatorBasis, LAMBDA0};

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileReport {
    /// `‖u - φ₀Ψ₀‖_Ḣ`, computed spectrally on the full field.
    pub err: f64,
    /// The same quantity from the truncated mode sum
    /// `Σ_{j≥1} ‖∂₃φ_j‖² + λ_j‖φ_j‖²`.
    pub err_modes: f64,
    pub err_over_r: f64,
    /// `‖φ₀‖²/r²`.
    pub m0_fraction: f64,
    /// `(‖u‖² - ‖φ₀‖²)/r²`, the mass outside the transverse ground mode.
    pub mode_tail: f64,
}

pub fn profile_error(u: &Field, basis: &OscillatorBasis) -> Result<ProfileReport> {
    if u.is_zero() {
        return Err(NlsError::ZeroField);
    }
    let g = basis.grid();
    let phi0 = basis.project_phi0(u)?;
    let v = u.sub(&basis.synthesize(0, &phi0)?)?;
    let err = energy::doth_sq(&v).sqrt();
    let mut sum = 0.0;
    for (j, mode) in basis.modes().iter().enumerate().skip(1) {
        let phi = basis.project(u, j)?;
        sum += line_derivative_norm_sq(g, &phi) + mode.eigenvalue * line_norm_sq(g, &phi);
    }
    let r2 = u.l2_norm_sq();
    let m0 = line_norm_sq(g, &phi0);
    Ok(ProfileReport {
        err,
        err_modes: sum.sqrt(),
        err_over_r: err / r2.sqrt(),
        m0_fraction: m0 / r2,
        mode_tail: (r2 - m0) / r2,
    })
}

/// Defects relative to `‖u‖`. Zero for a field that is radially decreasing
/// in (x1, x2) and even and decreasing in x3 about `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryReport {
    /// Spread of `|u|` over each ring of equal transverse radius.
    pub angular: f64,
    /// Growth of ring means with radius.
    pub radial: f64,
    /// `‖u(k+t) - u(k-t)‖`.
    pub evenness: f64,
    /// Growth along `|x3 - k|`.
    pub axial: f64,
    /// The x3 node `k` with the largest slice mass.
    pub center: usize,
}

impl SymmetryReport {
    pub fn max_defect(&self) -> f64 {
        self.angular.max(self.radial).max(self.evenness).max(self.axial)
    }
}

/// Transverse node indices grouped by exact distance from the centre node,
/// innermost ring first.
pub fn transverse_rings(grid: &Grid3) -> Vec<Vec<usize>> {
    let [n1, n2, _] = grid.n();
    let (h1, h2) = (grid.spacing(0), grid.spacing(1));
    let (c1, c2) = (grid.center_index(0) as f64, grid.center_index(1) as f64);
    let mut nodes: Vec<(f64, usize)> = (0..n1 * n2)
        .map(|s| {
            let (i, j) = ((s / n2) as f64, (s % n2) as f64);
            (((i - c1) * h1).powi(2) + ((j - c2) * h2).powi(2), s)
        })
        .collect();
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut rings: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (d, s) in nodes {
        if d - last > 1e-12 * d.max(1.0) {
            rings.push(Vec::new());
            last = d;
        }
        rings.last_mut().expect("ring exists").push(s);
    }
    rings
}

pub fn symmetry_check(u: &Field) -> Result<SymmetryReport> {
    if u.is_zero() {
        return Err(NlsError::ZeroField);
    }
    let g = u.grid();
    let [n1, n2, n3] = g.n();
    let f: Vec<f64> = u.as_slice().iter().map(|z| z.norm()).collect();
    let at = |s: usize, l: usize| f[s * n3 + l];
    let rings = transverse_rings(g);

    let (mut angular, mut radial) = (0.0, 0.0);
    for l in 0..n3 {
        let mut envelope = f64::INFINITY;
        for ring in &rings {
            let mean = ring.iter().map(|&s| at(s, l)).sum::<f64>() / ring.len() as f64;
            angular += ring.iter().map(|&s| (at(s, l) - mean).powi(2)).sum::<f64>();
            envelope = envelope.min(mean);
            radial += ring.len() as f64 * (mean - envelope).powi(2);
        }
    }

    let masses = slice_masses(u);
    let k = masses
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (l, &m)| if m > acc.1 { (l, m) } else { acc })
        .0;
    let (mut evenness, mut axial) = (0.0, 0.0);
    for s in 0..n1 * n2 {
        for l in 0..n3 {
            let mirror = (2 * k + n3 - l) % n3;
            evenness += (at(s, l) - at(s, mirror)).powi(2) / 2.0;
        }
        let mut envelope = at(s, k);
        for t in 1..=n3 / 2 {
            let a = at(s, (k + t) % n3);
            let b = at(s, (k + n3 - t) % n3);
            let mean = (a + b) / 2.0;
            envelope = envelope.min(mean);
            axial += 2.0 * (mean - envelope).powi(2);
        }
    }
    let norm = u.l2_norm();
    let dv = g.cell_volume();
    let rel = |x: f64| (x * dv).sqrt() / norm;
    Ok(SymmetryReport {
        angular: rel(angular),
        radial: rel(radial),
        evenness: rel(evenness),
        axial: rel(axial),
        center: k,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseReport {
    /// Standard deviation of `arg u` about its mean on the support.
    pub std: f64,
    /// Phase `θ` with `u ≈ e^{iθ}|u|`.
    pub theta: f64,
    /// Nodes with `|u| > threshold·max|u|`.
    pub support: usize,
}

/// Phase spread of `u` on `{|u| > threshold·max|u|}`.
pub fn phase_analysis(u: &Field, threshold: f64) -> Result<PhaseReport> {
    let max = u.max_abs();
    if max == 0.0 {
        return Err(NlsError::ZeroField);
    }
    let cut = threshold * max;
    let support: Vec<Complex64> = u.as_slice().iter().copied().filter(|z| z.norm() > cut).collect();
    let theta = support.iter().map(|z| z * z.norm()).sum::<Complex64>().arg();
    let rot = Complex64::from_polar(1.0, -theta);
    let dev: Vec<f64> = support.iter().map(|z| (z * rot).arg()).collect();
    let n = dev.len() as f64;
    let mean = dev.iter().sum::<f64>() / n;
    let var = dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    Ok(PhaseReport {
        std: var.sqrt(),
        theta,
        support: dev.len(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    /// `|P(u)| / ‖u‖²_Ḣ`.
    pub pohozaev_ratio: f64,
    /// `(3p-7)/(6(p-1))·‖u‖²_Ḣ`, the energy lower bound the identity gives.
    pub lower_bound: f64,
    pub energy: f64,
    /// `r²·Λ₀/2`.
    pub ceiling: f64,
    pub holds: bool,
}

/// Pohozaev tolerance on `|P|/‖u‖²_Ḣ`.
pub const POHOZAEV_TOL: f64 = 1e-2;

/// Checks that `u` nearly satisfies the Pohozaev identity and that the
/// energy bound it implies is compatible with `E(u) < r²Λ₀/2`.
pub fn ground_state_certificate(u: &Field, p: Exponent, chi: f64, r: f64) -> Result<Certificate> {
    if !p.is_supercritical() {
        return Err(NlsError::Precondition(format!(
            "the certificate needs p > {P_CRITICAL:.6}, got {}",
            p.value()
        )));
    }
    if u.is_zero() {
        return Err(NlsError::ZeroField);
    }
    let rep = energy::report(u, p);
    let pv = p.value();
    let ratio = rep.pohozaev.abs() / rep.doth_sq;
    let lower = (3.0 * pv - 7.0) / (6.0 * (pv - 1.0)) * rep.doth_sq;
    let ceiling = energy_ceiling(r);
    let holds = ratio <= POHOZAEV_TOL && lower < ceiling && rep.energy < ceiling && rep.doth() <= chi;
    Ok(Certificate {
        pohozaev_ratio: ratio,
        lower_bound: lower,
        energy: rep.energy,
        ceiling,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubadditivityRow {
    pub r: f64,
    pub s: f64,
    /// `r²·J_s`.
    pub lhs: f64,
    /// `s²·J_r`.
    pub rhs: f64,
    pub holds: bool,
}

/// `r²J_s < s²J_r` for every pair `r < s`. All entries must be interior.
pub fn subadditivity_check(results: &[(f64, f64, Status)]) -> Result<Vec<SubadditivityRow>> {
    if let Some((r, _, st)) = results.iter().find(|(_, _, st)| *st != Status::Interior) {
        return Err(NlsError::Precondition(format!("solve at r = {r} is {st}, not interior")));
    }
    let mut sorted: Vec<(f64, f64)> = results.iter().map(|&(r, j, _)| (r, j)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(NlsError::Precondition("radii must be distinct".into()));
    }
    let mut rows = Vec::new();
    for (a, &(r, jr)) in sorted.iter().enumerate() {
        for &(s, js) in &sorted[a + 1..] {
            let lhs = r * r * js;
            let rhs = s * s * jr;
            rows.push(SubadditivityRow { r, s, lhs, rhs, holds: lhs < rhs });
        }
    }
    Ok(rows)
}

/// Convenience wrapper over solver outputs.
pub fn subadditivity_of(results: &[(f64, &GroundStateResult)]) -> Result<Vec<SubadditivityRow>> {
    let flat: Vec<(f64, f64, Status)> = results.iter().map(|(r, g)| (*r, g.energy, g.status)).collect();
    subadditivity_check(&flat)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryGap {
    /// `g_r(χr/2) = χ²r²/8`.
    pub lhs: f64,
    /// `inf_{s∈[χr, χ]} f_r(s)`; `None` when the interval is empty.
    pub rhs: Option<f64>,
    pub holds: bool,
}

/// Compares `g_r(s) = s²/2` at `χr/2` with the infimum of
/// `f_r(s) = s²/2 - (Ĉ/(p+1)) r^ε s^{2+δ}` on `[χr, χ]`, where
/// `ε = (5-p)/2`, `δ = (3p-7)/2` and `Ĉ` bounds the Gagliardo–Nirenberg
/// ratio. `lhs < rhs` means every state of mass `r²` in the shell
/// `χr ≤ ‖u‖_Ḣ ≤ χ` has more energy than every state with `‖u‖_Ḣ ≤ χr/2`.
pub fn geometry_gap(p: Exponent, r: f64, chi: f64, c_hat: f64) -> GeometryGap {
    let pv = p.value();
    let eps = (5.0 - pv) / 2.0;
    let delta = (3.0 * pv - 7.0) / 2.0;
    let c = c_hat / (pv + 1.0) * r.powf(eps);
    let f = |s: f64| 0.5 * s * s - c * s.powf(2.0 + delta);
    let lhs = chi * chi * r * r / 8.0;
    let (a, b) = (chi * r, chi);
    if a >= b {
        return GeometryGap { lhs, rhs: None, holds: false };
    }
    // f rises then falls, so the minimum sits at an end; the scan guards
    // against δ = 0 and other flat cases.
    const SAMPLES: usize = 2000;
    let rhs = (0..=SAMPLES)
        .map(|k| f(a + (b - a) * k as f64 / SAMPLES as f64))
        .fold(f64::INFINITY, f64::min);
    GeometryGap { lhs, rhs: Some(rhs), holds: lhs < rhs }
}

/// Largest `r` (to `1e-12` relative) below which `geometry_gap` holds,
/// by bisection on `(0, 1)`.
pub fn geometry_r0(p: Exponent, chi: f64, c_hat: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if !geometry_gap(p, 1e-12, chi, c_hat).holds {
        return 0.0;
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if geometry_gap(p, mid, chi, c_hat).holds {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Bisection on `r` between an interior and an escaped solve. Returns the
/// final bracket.
pub fn escape_threshold(grid: &Grid3, base: &SolveConfig, mut lo: f64, mut hi: f64, steps: usize) -> Result<(f64, f64)> {
    let status = |r: f64| -> Result<Status> {
        let mut cfg = base.clone();
        cfg.r = r;
        Ok(solve(grid, &cfg)?.status)
    };
    if status(lo)? != Status::Interior || status(hi)? != Status::Escaped {
        return Err(NlsError::Precondition(format!("[{lo}, {hi}] does not bracket the escape")));
    }
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if status(mid)? == Status::Escaped {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// `r²·Λ₀/2 - J`, positive when the energy sits below the linear ceiling.
pub fn ceiling_margin(r: f64, energy: f64) -> f64 {
    energy_ceiling(r) - energy
}

/// `(1 - λ/Λ₀)`, the relative gap of the multiplier below the spectral bottom.
pub fn multiplier_gap(lambda: f64) -> f64 {
    1.0 - lambda / LAMBDA0
}
