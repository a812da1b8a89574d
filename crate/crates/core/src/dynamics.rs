//! Real-time propagation by Strang splitting and the orbital distance to a
//! reference state modulo phase and x3 translation.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::random_smooth_field;
use crate::energy::{self, Exponent};
use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::grid::Grid3;

/// Growth of `max|u|` over its initial value that counts as collapse.
pub const COLLAPSE_AMPLIFICATION: f64 = 1e6;
/// Spectral tail that counts as collapse: the solution has left the grid.
/// Runs that start under-resolved use `COLLAPSE_TAIL_GROWTH` times their
/// initial tail instead.
pub const COLLAPSE_TAIL: f64 = 1e-3;
pub const COLLAPSE_TAIL_GROWTH: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    /// Size relative to `‖u0‖_H`.
    pub eps: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveConfig {
    pub p: Exponent,
    pub dt: f64,
    pub t_final: f64,
    /// Observables are recorded every this many steps.
    pub sample_every: usize,
    /// `false` drops the trap (untrapped diagnostic mode).
    pub trap: bool,
    pub perturbation: Option<Perturbation>,
}

impl EvolveConfig {
    pub fn new(p: Exponent, dt: f64, t_final: f64) -> Self {
        Self { p, dt, t_final, sample_every: 10, trap: true, perturbation: None }
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self, grid: &Grid3) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(NlsError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(NlsError::InvalidConfig(format!("t_final must be nonnegative, got {}", self.t_final)));
        }
        if self.sample_every == 0 {
            return Err(NlsError::InvalidConfig("sample_every must be at least 1".into()));
        }
        let cfl = grid.k_squared_max() * self.dt;
        if cfl >= std::f64::consts::TAU {
            return Err(NlsError::InvalidConfig(format!("max|k|²·dt = {cfl:.3} must stay below 2π")));
        }
        if let Some(pert) = self.perturbation {
            if !(pert.eps >= 0.0 && pert.eps.is_finite()) {
                return Err(NlsError::InvalidConfig(format!("perturbation must be nonnegative, got {}", pert.eps)));
            }
        }
        Ok(())
    }
}

/// Precomputed Strang factors for one grid, exponent and step.
pub struct Propagator {
    grid: Grid3,
    pv: f64,
    dt: f64,
    kinetic_half: Vec<Complex64>,
    kinetic_full: Vec<Complex64>,
    potential: Vec<f64>,
}

impl Propagator {
    /// Any nonzero `dt`; a negative step runs the flow backwards.
    pub fn new(grid: &Grid3, p: Exponent, dt: f64, trap: bool) -> Self {
        let [n1, n2, n3] = grid.n();
        let mut kinetic_half = Vec::with_capacity(grid.size());
        for i in 0..n1 {
            for j in 0..n2 {
                for l in 0..n3 {
                    kinetic_half.push(Complex64::from_polar(1.0, -0.5 * dt * grid.k_squared(i, j, l)));
                }
            }
        }
        let kinetic_full = kinetic_half.iter().map(|z| z * z).collect();
        let potential = (0..n1 * n2).map(|s| if trap { grid.trap(s / n2, s % n2) } else { 0.0 }).collect();
        Self { grid: grid.clone(), pv: p.value(), dt, kinetic_half, kinetic_full, potential }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn kinetic(&self, data: &mut [Complex64], factors: &[Complex64]) {
        self.grid.fft_forward(data);
        data.par_iter_mut().zip(factors).for_each(|(z, m)| *z *= m);
        self.grid.fft_inverse(data);
    }

    /// `|u|` is constant under the potential and nonlinear phase, so this
    /// substep is exact.
    fn phase(&self, data: &mut [Complex64]) {
        let n3 = self.grid.n()[2];
        let (pv, dt) = (self.pv, self.dt);
        let cubic = pv == 3.0;
        data.par_chunks_mut(n3).zip(&self.potential).for_each(|(line, v)| {
            for z in line {
                let nl = if cubic { z.norm_sqr() } else { z.norm_sqr().powf(0.5 * (pv - 1.0)) };
                *z *= Complex64::from_polar(1.0, -dt * (v - nl));
            }
        });
    }

    pub fn step_in_place(&self, data: &mut [Complex64]) {
        self.advance_in_place(data, 1);
    }

    /// `steps` Strang steps with the adjacent kinetic half steps fused.
    pub fn advance_in_place(&self, data: &mut [Complex64], steps: usize) {
        if steps == 0 {
            return;
        }
        self.kinetic(data, &self.kinetic_half);
        for _ in 1..steps {
            self.phase(data);
            self.kinetic(data, &self.kinetic_full);
        }
        self.phase(data);
        self.kinetic(data, &self.kinetic_half);
    }

    pub fn step(&self, u: &Field) -> Field {
        let mut data = u.to_vec();
        self.step_in_place(&mut data);
        Field::from_vec_unchecked(&self.grid, data)
    }

    /// `steps` consecutive steps.
    pub fn advance(&self, u: &Field, steps: usize) -> Field {
        let mut data = u.to_vec();
        self.advance_in_place(&mut data, steps);
        Field::from_vec_unchecked(&self.grid, data)
    }
}

/// One Strang step: half kinetic, full potential and nonlinear phase, half kinetic.
pub fn strang_step(u: &Field, cfg: &EvolveConfig) -> Field {
    Propagator::new(u.grid(), cfg.p, cfg.dt, cfg.trap).step(u)
}

/// Energy of the flow being integrated: the trap term is dropped in the
/// untrapped mode.
pub fn flow_energy(u: &Field, p: Exponent, trap: bool) -> f64 {
    if trap {
        energy::report(u, p).energy
    } else {
        0.5 * energy::kinetic(u) - energy::lp_integral(u, p) / (p.value() + 1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Collapse {
    Amplitude,
    Unresolved,
    NonFinite,
}

impl Collapse {
    pub fn as_str(&self) -> &'static str {
        match self {
            Collapse::Amplitude => "amplitude",
            Collapse::Unresolved => "unresolved",
            Collapse::NonFinite => "non-finite",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySummary {
    pub t: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    /// Orbital distance to the unperturbed initial state.
    pub distance: Vec<f64>,
    pub max_amp: Vec<f64>,
    /// `max_t |m(t) - m(0)| / m(0)`.
    pub mass_drift: f64,
    /// `max_t |E(t) - E(0)| / |E(0)|`.
    pub energy_drift: f64,
    pub initial_distance: f64,
    pub max_distance: f64,
    pub collapse: Option<(f64, Collapse)>,
}

impl TrajectorySummary {
    /// `sup d(t) / d(0)`; infinite when the run starts on the orbit.
    pub fn amplification(&self) -> f64 {
        self.max_distance / self.initial_distance
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Adds `eps·‖u‖_H` times a seeded smooth shape of unit H-norm.
pub fn perturb(u: &Field, pert: Perturbation) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(pert.seed);
    let shape = random_smooth_field(u.grid(), &mut rng);
    let size = pert.eps * energy::h_norm_sq(u).sqrt() / energy::h_norm_sq(&shape).sqrt();
    u.axpy(Complex64::new(size, 0.0), &shape).expect("same grid")
}

/// Runs the flow from `u0` (perturbed if the config says so) and records
/// observables, measuring distance to the orbit of the unperturbed `u0`.
pub fn evolve(u0: &Field, cfg: &EvolveConfig) -> Result<TrajectorySummary> {
    let grid = u0.grid();
    cfg.validate(grid)?;
    let reference = u0;
    let start = match cfg.perturbation {
        Some(pert) => perturb(u0, pert),
        None => u0.clone(),
    };
    let prop = Propagator::new(grid, cfg.p, cfg.dt, cfg.trap);
    let amp0 = start.max_abs();
    let tail_limit = COLLAPSE_TAIL.max(COLLAPSE_TAIL_GROWTH * start.spectral_tail());
    let mut s = TrajectorySummary {
        t: Vec::new(),
        mass: Vec::new(),
        energy: Vec::new(),
        distance: Vec::new(),
        max_amp: Vec::new(),
        mass_drift: 0.0,
        energy_drift: 0.0,
        initial_distance: 0.0,
        max_distance: 0.0,
        collapse: None,
    };
    let record = |t: f64, u: &Field, s: &mut TrajectorySummary| -> Option<Collapse> {
        let amp = u.max_abs();
        if !amp.is_finite() {
            return Some(Collapse::NonFinite);
        }
        s.t.push(t);
        s.mass.push(u.l2_norm_sq());
        s.energy.push(flow_energy(u, cfg.p, cfg.trap));
        s.distance.push(orbital_distance(u, reference).map(|o| o.distance).unwrap_or(f64::NAN));
        s.max_amp.push(amp);
        if amp > COLLAPSE_AMPLIFICATION * amp0 {
            Some(Collapse::Amplitude)
        } else if u.spectral_tail() > tail_limit {
            Some(Collapse::Unresolved)
        } else {
            None
        }
    };
    let mut data = start.to_vec();
    let steps = cfg.steps();
    s.collapse = record(0.0, &start, &mut s).map(|c| (0.0, c));
    let mut n = 0;
    while n < steps && s.collapse.is_none() {
        let chunk = cfg.sample_every.min(steps - n);
        prop.advance_in_place(&mut data, chunk);
        n += chunk;
        let t = n as f64 * cfg.dt;
        let u = Field::from_vec_unchecked(grid, data.clone());
        s.collapse = record(t, &u, &mut s).map(|c| (t, c));
    }
    if let (Some(m0), Some(e0)) = (s.mass.first().copied(), s.energy.first().copied()) {
        s.mass_drift = s.mass.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max) / m0;
        s.energy_drift = s.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs().max(f64::MIN_POSITIVE);
        s.initial_distance = s.distance[0];
        s.max_distance = s.distance.iter().copied().fold(0.0, f64::max);
    }
    Ok(s)
}

/// Independent perturbed runs, one per seed, in parallel.
pub fn evolve_ensemble(u0: &Field, cfg: &EvolveConfig, eps: f64, seeds: &[u64]) -> Result<Vec<TrajectorySummary>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut c = cfg.clone();
            c.perturbation = Some(Perturbation { eps, seed });
            evolve(u0, &c)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitalFit {
    pub distance: f64,
    /// Phase `θ` and shift `s` with `u ≈ e^{iθ}·uref(x3 - s)`.
    pub theta: f64,
    pub shift: f64,
}

/// `inf_{θ,s} ‖u - e^{iθ} uref(· - s)‖_H`.
///
/// The H pairing `⟨u, uref(· - s)⟩_H` is a trigonometric polynomial in `s`
/// whose coefficients come from one transform of each field. Its modulus is
/// maximised over grid shifts, refined by golden section and Newton steps, and the distance
/// is then evaluated directly at the optimum.
pub fn orbital_distance(u: &Field, uref: &Field) -> Result<OrbitalFit> {
    u.ensure_same_grid(uref)?;
    let g = u.grid();
    let [n1, n2, n3] = g.n();
    let dv = g.cell_volume();
    let (mut a3, mut b3) = (u.to_vec(), uref.to_vec());
    g.fft_x3_forward(&mut a3);
    g.fft_x3_forward(&mut b3);
    let (a, b) = (u.spectrum(), uref.spectrum());
    let mut coef = vec![Complex64::default(); n3];
    for i in 0..n1 {
        for j in 0..n2 {
            let w = 1.0 + g.trap(i, j);
            let base = g.flat_index(i, j, 0);
            for (l, c) in coef.iter_mut().enumerate() {
                let k = base + l;
                *c += a3[k].conj() * b3[k] * (w / n3 as f64)
                    + a[k].conj() * b[k] * (g.k_squared(i, j, l) / g.size() as f64);
            }
        }
    }
    coef.iter_mut().for_each(|c| *c *= dv);
    let k3 = g.wavenumbers(2);
    let pairing = |s: f64| -> Complex64 { coef.iter().zip(k3).map(|(c, k)| c * Complex64::from_polar(1.0, -k * s)).sum() };
    let h3 = g.spacing(2);
    let best = (0..n3)
        .map(|m| m as f64 * h3)
        .map(|s| (s, pairing(s).norm()))
        .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let mut shift = golden_max(|s| pairing(s).norm(), best.0 - h3, best.0 + h3, 1e-9);
    // Newton on d/ds |C|², which golden section only locates to about √ε.
    for _ in 0..8 {
        let (mut c, mut c1, mut c2) = (Complex64::default(), Complex64::default(), Complex64::default());
        for (a, k) in coef.iter().zip(k3) {
            let e = a * Complex64::from_polar(1.0, -k * shift);
            c += e;
            c1 += e * Complex64::new(0.0, -k);
            c2 -= e * (k * k);
        }
        let d1 = (c.conj() * c1).re;
        let d2 = c1.norm_sqr() + (c.conj() * c2).re;
        if d2 >= 0.0 {
            break;
        }
        let next = shift - d1 / d2;
        if (next - shift).abs() > h3 || next == shift {
            break;
        }
        shift = next;
    }
    let theta = -pairing(shift).arg();
    let candidate = uref.shift_x3(shift).rotate(theta);
    let distance = energy::h_norm_sq(&u.sub(&candidate)?).max(0.0).sqrt();
    Ok(OrbitalFit { distance, theta, shift })
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol * (1.0 + lo.abs().max(hi.abs())) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}
