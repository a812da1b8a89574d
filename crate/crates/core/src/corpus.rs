//! Seeded random smooth fields and the empirical Gagliardo–Nirenberg constant.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{self, Exponent};
use crate::field::Field;
use crate::grid::Grid3;

/// A Gaussian of width `w` has spectral amplitude `e^{-(kw)²/2}`; this many
/// widths bring it below `1e-6`.
const DECAY_WIDTHS: f64 = 5.3;

/// Width window per axis: resolved at two thirds of the Nyquist wavenumber
/// and decayed before the box edge for centres within `L/16`.
fn width_range(grid: &Grid3, axis: usize) -> (f64, f64) {
    let k_cut = 2.0 / 3.0 * std::f64::consts::PI / grid.spacing(axis);
    let lo = DECAY_WIDTHS / k_cut;
    let room = grid.lengths()[axis] * (0.5 - 1.0 / 16.0);
    let hi = (room / (DECAY_WIDTHS + 0.1)).min(2.5).max(lo * 1.001);
    (lo, hi)
}

/// A sum of one to four anisotropic complex Gaussian blobs near the box
/// centre, with widths chosen so the field is resolved on `grid`.
pub fn random_smooth_field<R: Rng + ?Sized>(grid: &Grid3, rng: &mut R) -> Field {
    let count = rng.gen_range(1..=4);
    let len = grid.lengths();
    let ranges: [(f64, f64); 3] = std::array::from_fn(|a| width_range(grid, a));
    let blobs: Vec<([f64; 3], [f64; 3], Complex64)> = (0..count)
        .map(|_| {
            let c = std::array::from_fn(|a| rng.gen_range(-1.0..1.0) * len[a] / 16.0);
            let w = std::array::from_fn(|a| rng.gen_range(ranges[a].0..ranges[a].1));
            let amp = Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
            (c, w, amp)
        })
        .collect();
    Field::from_fn(grid, |x1, x2, x3| {
        blobs
            .iter()
            .map(|(c, w, a)| {
                let q = ((x1 - c[0]) / w[0]).powi(2) + ((x2 - c[1]) / w[1]).powi(2) + ((x3 - c[2]) / w[2]).powi(2);
                a * (-q / 2.0).exp()
            })
            .sum()
    })
}

/// `count` fields from independent streams of one seed, so the corpus does
/// not depend on the thread pool.
pub fn corpus(grid: &Grid3, seed: u64, count: usize) -> Vec<Field> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            random_smooth_field(grid, &mut rng)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct GnCalibration {
    /// Largest ratio found, after polishing.
    pub c_hat: f64,
    /// Largest ratio over the raw corpus.
    pub corpus_max: f64,
    pub corpus_size: usize,
    pub polish_steps: usize,
}

/// Corpus maximum of `gn_ratio`, then a local ascent from the best member.
pub fn calibrate_gn(grid: &Grid3, p: Exponent, seed: u64, count: usize) -> GnCalibration {
    let ratios: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            energy::gn_ratio_of(&energy::report(&random_smooth_field(grid, &mut rng), p))
        })
        .collect();
    let (best, corpus_max) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(best as u64);
    let start = random_smooth_field(grid, &mut rng);
    let (c_hat, polish_steps) = polish_gn(&start, p, 200);
    GnCalibration {
        c_hat: c_hat.max(corpus_max),
        corpus_max,
        corpus_size: count,
        polish_steps,
    }
}

/// Preconditioned ascent on `log gn_ratio`. Steps that would leave the
/// resolved range (spectral tail above `1e-6`) are refused.
pub fn polish_gn(start: &Field, p: Exponent, max_steps: usize) -> (f64, usize) {
    let g = start.grid().clone();
    let pv = p.value();
    let mut u = start.scale(1.0 / start.l2_norm());
    let mut ratio = energy::gn_ratio_of(&energy::report(&u, p));
    let mut step = 0.5;
    let mut taken = 0;
    for _ in 0..max_steps {
        let (grad_e, rep) = energy::gradient(&u, p);
        // grad_e = A u - |u|^{p-1} u with A = -Δ + V.
        let nl = u.map(|z| z * z.norm().powf(pv - 1.0));
        let au = grad_e.add(&nl).expect("same grid");
        let a = (pv + 1.0) / rep.lp1;
        let b = (5.0 - pv) / 2.0 / rep.l2_sq;
        let c = (3.0 * pv - 3.0) / 2.0 / rep.doth_sq;
        let dir = Field::from_vec_unchecked(
            &g,
            nl.as_slice()
                .iter()
                .zip(u.as_slice())
                .zip(au.as_slice())
                .map(|((n, z), w)| n * a - z * b - w * c)
                .collect(),
        );
        let dir = smooth(&dir);
        let mut improved = false;
        while step > 1e-6 {
            let trial = u.axpy(Complex64::new(step, 0.0), &dir).expect("same grid");
            let trial = trial.scale(1.0 / trial.l2_norm());
            let tr = energy::gn_ratio_of(&energy::report(&trial, p));
            if tr > ratio && trial.spectral_tail() < 1e-6 {
                let gain = tr - ratio;
                u = trial;
                ratio = tr;
                taken += 1;
                improved = true;
                step *= 1.5;
                if gain < 1e-12 * ratio {
                    return (ratio, taken);
                }
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (ratio, taken)
}

/// `(1 - Δ)^{-1}`.
fn smooth(f: &Field) -> Field {
    let g = f.grid().clone();
    f.fourier_multiply(|i, j, l| Complex64::new(1.0 / (1.0 + g.k_squared(i, j, l)), 0.0))
}
