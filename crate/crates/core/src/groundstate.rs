//! Localized constrained minimization of the energy on the mass sphere.
//!
//! The flow works on the sphere `‖u‖_{L²} = r` with the retraction
//! `R(w) = r·w/‖w‖`. `G` is the energy gradient and `P` the semi-implicit
//! operator `dt·(I + dt·V)^{-1/2} (I - dt·Δ)^{-1} (I + dt·V)^{-1/2}`.
//! The step direction is `P·G` projected onto the tangent space in the
//! metric of `P`, so fixed points are exactly the Euler–Lagrange solutions.
//! `Method::Plain` takes unit steps with halving backtracking.
//! `Method::Conjugate` mixes in the previous direction (Polak–Ribière,
//! clipped at zero) and picks the step by a secant search on the slope of
//! the energy along the retracted path.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::random_smooth_field;
use crate::energy::{self, EnergyReport, Exponent};
use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::grid::Grid3;
use crate::oscillator::LAMBDA0;

#[derive(Clone, Debug)]
pub enum Init {
    Gaussian,
    /// Gaussian times `e^{i sin x3}`.
    GaussianComplexPhase,
    RandomSmooth,
    Field(Field),
}

impl Init {
    pub fn name(&self) -> &'static str {
        match self {
            Init::Gaussian => "gaussian",
            Init::GaussianComplexPhase => "gaussian-complex-phase",
            Init::RandomSmooth => "random-smooth",
            Init::Field(_) => "file",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Plain,
    Conjugate,
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub p: Exponent,
    pub r: f64,
    pub chi: f64,
    pub dt: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub init: Init,
    pub seed: u64,
    pub method: Method,
    /// Roll the result so its heaviest x3 slice sits on the centre node.
    pub recenter: bool,
}

impl SolveConfig {
    pub fn new(p: Exponent, r: f64, chi: f64) -> Self {
        Self {
            p,
            r,
            chi,
            dt: 1.0,
            tol: 1e-8,
            max_iter: 5000,
            init: Init::Gaussian,
            seed: 0,
            method: Method::Conjugate,
            recenter: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(NlsError::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("r", self.r)?;
        positive("chi", self.chi)?;
        positive("dt", self.dt)?;
        positive("tol", self.tol)?;
        if self.max_iter == 0 {
            return Err(NlsError::InvalidConfig("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// `‖u‖_Ḣ <= χ·r·(1 + 1e-3)`.
    Interior,
    /// Inside `B_χ` but outside the small ball.
    BoundarySuspect,
    /// The flow left `B_χ`.
    Escaped,
    /// `∫|u|^{p+1}` fell to the level of a field spread over the whole box.
    Vanished,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Interior => "interior",
            Status::BoundarySuspect => "boundary-suspect",
            Status::Escaped => "escaped",
            Status::Vanished => "vanished",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Slack on the `B_{χr}` containment test.
pub const INTERIOR_SLACK: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct GroundStateResult {
    pub u: Field,
    pub report: EnergyReport,
    /// Attained energy, the candidate for the localized infimum.
    pub energy: f64,
    pub lambda: f64,
    pub residual: f64,
    pub iters: usize,
    pub doth: f64,
    pub status: Status,
    pub converged: bool,
    /// Energy after every accepted step, starting with the initial datum.
    pub energy_history: Vec<f64>,
    /// Largest `|‖u‖² - r²| / r²` seen after a renormalization.
    pub max_mass_defect: f64,
}

/// Relative Euler–Lagrange residual `‖-Δu + Vu - |u|^{p-1}u - λu‖ / ‖u‖`.
pub fn el_residual(u: &Field, p: Exponent, lambda: f64) -> Result<f64> {
    if u.is_zero() {
        return Err(NlsError::ZeroField);
    }
    let (g, _) = energy::gradient(u, p);
    Ok(residual_of(&g, u, lambda))
}

fn residual_of(g: &Field, u: &Field, lambda: f64) -> f64 {
    let s: f64 = g
        .as_slice()
        .iter()
        .zip(u.as_slice())
        .map(|(a, b)| (a - b * lambda).norm_sqr())
        .sum();
    (s * u.grid().cell_volume()).sqrt() / u.l2_norm()
}

/// `r·π^{-3/4} e^{-|x|²/2}`, rescaled to mass exactly `r²` on the grid.
pub fn gaussian_datum(grid: &Grid3, r: f64) -> Field {
    let g = Field::from_real_fn(grid, |a, b, c| (-(a * a + b * b + c * c) / 2.0).exp());
    g.scale(r / g.l2_norm())
}

fn initial_field(grid: &Grid3, cfg: &SolveConfig) -> Result<Field> {
    let u = match &cfg.init {
        Init::Gaussian => gaussian_datum(grid, 1.0),
        Init::GaussianComplexPhase => {
            let g = gaussian_datum(grid, 1.0);
            let x3 = grid.coords(2).to_vec();
            let n3 = x3.len();
            let data = g
                .as_slice()
                .iter()
                .enumerate()
                .map(|(idx, z)| z * Complex64::from_polar(1.0, x3[idx % n3].sin()))
                .collect();
            Field::from_vec(grid, data)?
        }
        Init::RandomSmooth => random_smooth_field(grid, &mut ChaCha8Rng::seed_from_u64(cfg.seed)),
        Init::Field(f) => {
            if f.grid() != grid {
                return Err(NlsError::GridMismatch);
            }
            f.clone()
        }
    };
    if u.is_zero() {
        return Err(NlsError::ZeroField);
    }
    Ok(u.scale(cfg.r / u.l2_norm()))
}

/// Diagonal pieces of the preconditioner.
struct Precond {
    grid: Grid3,
    dt: f64,
    /// `(1 + dt·V)^{-1/2}` per transverse node.
    trap: Vec<f64>,
    /// `(1 + dt·|k|²)^{-1}` per spectral node.
    kin: Vec<f64>,
}

impl Precond {
    fn new(grid: &Grid3, dt: f64) -> Self {
        let [n1, n2, n3] = grid.n();
        let mut trap = Vec::with_capacity(n1 * n2);
        let mut kin = Vec::with_capacity(grid.size());
        for i in 0..n1 {
            for j in 0..n2 {
                trap.push((1.0 + dt * grid.trap(i, j)).powf(-0.5));
                for l in 0..n3 {
                    kin.push(1.0 / (1.0 + dt * grid.k_squared(i, j, l)));
                }
            }
        }
        Self { grid: grid.clone(), dt, trap, kin }
    }

    fn apply(&self, f: &Field) -> Field {
        let n3 = self.grid.n()[2];
        let mut data = f.to_vec();
        self.scale_trap(&mut data, n3);
        self.grid.fft_forward(&mut data);
        data.iter_mut().zip(&self.kin).for_each(|(z, k)| *z *= *k);
        self.grid.fft_inverse(&mut data);
        self.scale_trap(&mut data, n3);
        data.iter_mut().for_each(|z| *z *= self.dt);
        Field::from_vec_unchecked(&self.grid, data)
    }

    fn scale_trap(&self, data: &mut [Complex64], n3: usize) {
        for (line, s) in data.chunks_exact_mut(n3).zip(&self.trap) {
            line.iter_mut().for_each(|z| *z *= *s);
        }
    }
}

/// State at one point of the sphere.
struct Point {
    u: Field,
    rep: EnergyReport,
    lambda: f64,
    /// `grad - λu`, the tangential part of the gradient. Slopes are taken
    /// against it so they do not cancel near convergence.
    res: Field,
}

impl Point {
    fn at(u: Field, p: Exponent) -> Self {
        let (grad, rep) = energy::gradient(&u, p);
        let lambda = u.real_inner(&grad) / rep.l2_sq;
        let res = grad.axpy(Complex64::new(-lambda, 0.0), &u).expect("same grid");
        Self { u, rep, lambda, res }
    }

    fn residual(&self) -> f64 {
        self.res.l2_norm() / self.u.l2_norm()
    }
}

/// Lower bound on `∫|u|^{p+1}` for mass `r²` spread over the box (Hölder).
fn vanishing_floor(grid: &Grid3, p: f64, r: f64) -> f64 {
    r.powf(p + 1.0) / grid.volume().powf((p - 1.0) / 2.0)
}

fn retract(u: &Field, s: &Field, tau: f64, r: f64) -> Field {
    let w = u.axpy(Complex64::new(tau, 0.0), s).expect("same grid");
    let n = w.l2_norm();
    w.scale(r / n)
}

/// Slope of `τ ↦ E(R(u + τs))` at `τ`, given the point it lands on. The
/// multiplier part of the gradient drops out exactly.
fn path_slope(u: &Field, s: &Field, tau: f64, at: &Point) -> f64 {
    let w = u.axpy(Complex64::new(tau, 0.0), s).expect("same grid");
    let r = at.rep.l2_sq.sqrt();
    r / w.l2_norm() * at.res.real_inner(s)
}

pub fn solve(grid: &Grid3, cfg: &SolveConfig) -> Result<GroundStateResult> {
    cfg.validate()?;
    let p = cfg.p;
    let r = cfg.r;
    let r2 = r * r;
    let pre = Precond::new(grid, cfg.dt);
    let mut cur = Point::at(initial_field(grid, cfg)?, p);
    let mut history = vec![cur.rep.energy];
    let mut max_mass_defect = ((cur.rep.l2_sq - r2) / r2).abs();
    let mut escaped = cur.rep.doth() > cfg.chi;
    let mut converged = false;
    let mut iters = 0;
    let mut prev: Option<(Field, Field, f64)> = None; // (direction, P-gradient, <G, PG-part>)
    let mut tau_guess = 1.0;

    while !escaped && iters < cfg.max_iter {
        if cur.residual() <= cfg.tol {
            converged = true;
            break;
        }
        let pr = pre.apply(&cur.res);
        let pu = pre.apply(&cur.u);
        let c = cur.u.real_inner(&pr) / cur.u.real_inner(&pu);
        let d = pr.axpy(Complex64::new(-c, 0.0), &pu).expect("same grid");
        let gd = cur.res.real_inner(&d);
        let mut dir = d.scale(-1.0);
        if let (Method::Conjugate, Some((s_prev, d_prev, gd_prev))) = (cfg.method, &prev) {
            let beta = ((gd - cur.res.real_inner(d_prev)) / gd_prev).max(0.0);
            if beta > 0.0 {
                let t = s_prev
                    .axpy(Complex64::new(-cur.u.real_inner(s_prev) / r2, 0.0), &cur.u)
                    .expect("same grid");
                let cand = dir.axpy(Complex64::new(beta, 0.0), &t).expect("same grid");
                if cur.res.real_inner(&cand) < 0.0 {
                    dir = cand;
                }
            }
        }

        let step = match cfg.method {
            Method::Plain => backtrack(&cur, &dir, 1.0, r, p),
            Method::Conjugate => line_search(&cur, &dir, tau_guess, r, p),
        };
        let step = match step {
            Some(s) => s,
            None if cfg.method == Method::Conjugate && prev.is_some() => {
                // Restart along the preconditioned gradient.
                prev = None;
                continue;
            }
            None => break,
        };
        let (tau, next) = step;
        iters += 1;
        tau_guess = (tau * 1.5).clamp(1e-3, 1e3);
        max_mass_defect = max_mass_defect.max(((next.rep.l2_sq - r2) / r2).abs());
        history.push(next.rep.energy);
        escaped = next.rep.doth() > cfg.chi;
        prev = Some((dir, d, gd));
        cur = next;
    }

    let lambda = cur.lambda;
    let residual = cur.residual();
    converged |= residual <= cfg.tol;
    let doth = cur.rep.doth();
    let status = if escaped {
        Status::Escaped
    } else if cur.rep.lp1 <= 2.0 * vanishing_floor(grid, p.value(), r) {
        Status::Vanished
    } else if doth <= cfg.chi * r * (1.0 + INTERIOR_SLACK) {
        Status::Interior
    } else {
        Status::BoundarySuspect
    };
    let rep = cur.rep;
    let u = if cfg.recenter { recenter(&cur.u) } else { cur.u };
    Ok(GroundStateResult {
        u,
        energy: rep.energy,
        report: rep,
        lambda,
        residual,
        iters,
        doth,
        status,
        converged,
        energy_history: history,
        max_mass_defect,
    })
}

/// Energies that differ by less than this are treated as equal.
fn energy_band(rep: &EnergyReport) -> f64 {
    1e-14 * (rep.energy.abs() + rep.doth_sq)
}

fn accepts(cur: &Point, next: &Point) -> bool {
    next.rep.energy <= cur.rep.energy + energy_band(&cur.rep) && next.rep.energy.is_finite()
}

/// Halve `τ` until the energy does not increase.
fn backtrack(cur: &Point, s: &Field, tau0: f64, r: f64, p: Exponent) -> Option<(f64, Point)> {
    let mut tau = tau0;
    for _ in 0..40 {
        let next = Point::at(retract(&cur.u, s, tau, r), p);
        if accepts(cur, &next) {
            return Some((tau, next));
        }
        tau *= 0.5;
    }
    None
}

/// Secant search for a zero of the path slope, falling back to halving.
fn line_search(cur: &Point, s: &Field, tau0: f64, r: f64, p: Exponent) -> Option<(f64, Point)> {
    let g0 = cur.res.real_inner(s);
    if g0 >= 0.0 {
        return None;
    }
    let (mut lo, mut glo) = (0.0, g0);
    let mut hi: Option<(f64, f64)> = None;
    let mut tau = tau0;
    let mut best: Option<(f64, Point)> = None;
    for _ in 0..6 {
        let pt = Point::at(retract(&cur.u, s, tau, r), p);
        let g = path_slope(&cur.u, s, tau, &pt);
        let ok = accepts(cur, &pt);
        let small = g.abs() <= 0.1 * g0.abs();
        if ok {
            best = Some((tau, pt));
        }
        if ok && small {
            break;
        }
        if g < 0.0 {
            lo = tau;
            glo = g;
        } else {
            hi = Some((tau, g));
        }
        tau = match hi {
            Some((th, gh)) => {
                let t = lo - glo * (th - lo) / (gh - glo);
                // Keep the new point strictly inside the bracket.
                t.clamp(lo + 0.05 * (th - lo), th - 0.05 * (th - lo))
            }
            None => {
                // Still descending: extrapolate the slope secant through (0, g0).
                if g > g0 {
                    (tau - g * tau / (g - g0)).clamp(1.5 * tau, 4.0 * tau)
                } else {
                    4.0 * tau
                }
            }
        };
    }
    match best {
        Some(b) => Some(b),
        None => backtrack(cur, s, tau0 * 0.5, r, p),
    }
}

/// Rolls `u` along x3 so its heaviest x3 slice lands on the centre node.
pub fn recenter(u: &Field) -> Field {
    let masses = slice_masses(u);
    let heaviest = masses
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (l, &m)| if m > acc.1 { (l, m) } else { acc })
        .0;
    let centre = u.grid().center_index(2);
    u.roll_x3(centre as isize - heaviest as isize)
}

/// `Σ_{x1,x2} |u|²` per x3 node.
pub fn slice_masses(u: &Field) -> Vec<f64> {
    let n3 = u.grid().n()[2];
    let mut m = vec![0.0; n3];
    for line in u.as_slice().chunks_exact(n3) {
        m.iter_mut().zip(line).for_each(|(a, z)| *a += z.norm_sqr());
    }
    m
}

/// Bound `E < r²·Λ₀/2` for states on the mass sphere that beat the linear
/// problem.
pub fn energy_ceiling(r: f64) -> f64 {
    r * r * LAMBDA0 / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Grid3 {
        Grid3::new([16, 16, 32], [10.0, 10.0, 24.0]).unwrap()
    }

    #[test]
    fn config_validation() {
        let p = Exponent::new(3.0).unwrap();
        let mut c = SolveConfig::new(p, 0.1, 4.0);
        assert!(c.validate().is_ok());
        c.dt = 0.0;
        assert!(c.validate().is_err());
        c = SolveConfig::new(p, -1.0, 4.0);
        assert!(matches!(solve(&small(), &c), Err(NlsError::InvalidConfig(_))));
    }

    #[test]
    fn residual_is_orthogonal_to_field_at_report_lambda() {
        let g = small();
        let p = Exponent::new(3.0).unwrap();
        let u = gaussian_datum(&g, 0.8).map(|z| z * Complex64::new(0.6, 0.8));
        let rep = energy::report(&u, p);
        let (grad, _) = energy::gradient(&u, p);
        let res = grad.axpy(Complex64::new(-rep.lambda.unwrap(), 0.0), &u).unwrap();
        assert!(res.real_inner(&u).abs() < 1e-10);
        assert!(matches!(el_residual(&Field::zeros(&g), p, 1.0), Err(NlsError::ZeroField)));
    }

    #[test]
    fn both_methods_reach_the_same_minimizer() {
        let g = small();
        let p = Exponent::new(3.0).unwrap();
        let mut cfg = SolveConfig::new(p, 0.3, 4.0);
        cfg.tol = 1e-7;
        let cg = solve(&g, &cfg).unwrap();
        assert!(cg.converged, "{} {}", cg.iters, cg.residual);
        cfg.method = Method::Plain;
        cfg.max_iter = 40000;
        let plain = solve(&g, &cfg).unwrap();
        assert!(plain.converged, "{} {}", plain.iters, plain.residual);
        assert!((cg.energy - plain.energy).abs() <= 1e-10 * cg.energy.abs());
        assert!(plain.iters > cg.iters);
        for h in [&cg.energy_history, &plain.energy_history] {
            assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-13 * w[0].abs()));
        }
        assert!(cg.max_mass_defect <= 1e-12);
        assert_eq!(cg.status, Status::Interior);
        assert!(cg.lambda < LAMBDA0 && cg.energy < energy_ceiling(0.3));
    }

    #[test]
    fn large_mass_escapes() {
        let p = Exponent::new(3.0).unwrap();
        let res = solve(&small(), &SolveConfig::new(p, 5.0, 4.0)).unwrap();
        assert_eq!(res.status, Status::Escaped);
        assert!(!res.converged);
    }

    #[test]
    fn recenter_moves_heaviest_slice_to_centre() {
        let g = small();
        let u = Field::from_real_fn(&g, |a, b, c| (-(a * a + b * b + (c - 3.0).powi(2))).exp());
        let m = slice_masses(&recenter(&u));
        let arg = m.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(arg, g.center_index(2));
    }
}
