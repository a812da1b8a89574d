//! Acceptance criteria at desk scale: grid 32×32×64 on a 16×16×32 box,
//! p = 3, χ = 4. Each criterion prints one PASS/FAIL line.
//!
//! Criteria 2 and 5 are not met at desk scale. They still run at full
//! tolerance and print FAIL with the measured numbers. They count as
//! failures only if they unexpectedly pass, so the list below stays accurate.

use std::f64::consts::PI;
use std::panic::catch_unwind;
use std::process::ExitCode;
use std::sync::OnceLock;

use nls_core::analysis::{phase_analysis, subadditivity_of, symmetry_check, POHOZAEV_TOL};
use nls_core::corpus::corpus;
use nls_core::dynamics::{evolve, EvolveConfig, Perturbation};
use nls_core::energy::{self, scaling_sweep, Exponent};
use nls_core::groundstate::{solve, GroundStateResult, Init, SolveConfig, Status, INTERIOR_SLACK};
use nls_core::oscillator::{rayleigh_quotient, OscillatorBasis, DEFAULT_CUTOFF, LAMBDA0};
use nls_core::rearrange::{fixed_point_defect, norm_preservation_check, rearrange, trap_moment_check};
use nls_core::sweep::{tabulate, SweepConfig, SweepTable};
use nls_core::verify::{verify_fresh, VerifyConfig};
use nls_core::{Field, Grid3};

const RADII: [f64; 4] = [0.05, 0.1, 0.2, 0.4];
const CHI: f64 = 4.0;
const EXPECTED_RED: [u32; 2] = [2, 5];

fn p3() -> Exponent {
    Exponent::new(3.0).unwrap()
}

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    let expected_red = EXPECTED_RED.contains(&n);
    let tag = match (pass, expected_red) {
        (true, _) => "PASS",
        (false, true) => "FAIL (expected at desk scale)",
        (false, false) => "FAIL",
    };
    println!("criterion {n:>2} {tag:<29} {name}: {detail}");
    assert!(pass || expected_red, "criterion {n} failed: {detail}");
    assert!(!(pass && expected_red), "criterion {n} passes but is listed as an expected failure");
}

struct Sweep {
    cfg: SweepConfig,
    results: Vec<GroundStateResult>,
    table: SweepTable,
}

fn sweep() -> &'static Sweep {
    static CELL: OnceLock<Sweep> = OnceLock::new();
    CELL.get_or_init(|| {
        let g = Grid3::desk();
        let cfg = SweepConfig::new(SolveConfig::new(p3(), RADII[0], CHI), RADII.to_vec());
        let results: Vec<GroundStateResult> = RADII
            .iter()
            .map(|&r| {
                let mut c = cfg.base.clone();
                c.r = r;
                solve(&g, &c).unwrap()
            })
            .collect();
        let table = tabulate(&g, &cfg, &results).unwrap();
        Sweep { cfg, results, table }
    })
}

fn interior(s: &Sweep) -> impl Iterator<Item = (f64, &GroundStateResult)> {
    s.cfg.r_list.iter().copied().zip(&s.results).filter(|(_, res)| res.status == Status::Interior)
}

fn c01_spectral_bottom() {
    let g = Grid3::desk();
    let basis = OscillatorBasis::build(&g, DEFAULT_CUTOFF).unwrap();
    let bottom = basis.eigenvalues()[0];
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for mu in [0.5f64, 0.35, 0.25] {
        let u = Field::from_real_fn(&g, |a, b, c| {
            PI.powf(-0.5) * (-(a * a + b * b) / 2.0).exp() * mu.sqrt() * PI.powf(-0.25) * (-mu * mu * c * c / 2.0).exp()
        });
        let q = rayleigh_quotient(&u).unwrap();
        worst = worst.max((q - (2.0 + mu * mu / 2.0)).abs());
        detail += &format!("RQ(mu={mu})={q:.6} ");
    }
    // μ → 0 on a periodic box is the x3-constant profile.
    let flat = Field::from_real_fn(&g, |a, b, _| (-(a * a + b * b) / 2.0).exp());
    let limit = rayleigh_quotient(&flat).unwrap();
    let pass = bottom == LAMBDA0 && worst <= 1e-3 && (limit - LAMBDA0).abs() <= 1e-3;
    verdict(1, "spectral bottom", pass, format!("lambda0={bottom} {detail}limit={limit:.10} max|RQ-(2+mu^2/2)|={worst:.2e}"));
}

fn c02_energy_upper_bound() {
    let s = sweep();
    let mut pass = true;
    let mut detail = String::new();
    for (r, res) in interior(s) {
        let ceiling = r * r * LAMBDA0 / 2.0;
        let margin = (ceiling - res.energy) / ceiling;
        pass &= res.energy < ceiling && margin >= 0.01;
        detail += &format!("r={r}: J={:.6e} margin={margin:.3e}; ", res.energy);
    }
    pass &= interior(s).count() == RADII.len();
    verdict(2, "energy below r^2 with 1% margin", pass, detail);
}

fn c03_containment() {
    let s = sweep();
    let mut pass = interior(s).count() > 0;
    let mut detail = String::new();
    for (r, res) in interior(s) {
        let bound = CHI * r * (1.0 + INTERIOR_SLACK);
        pass &= res.doth <= bound;
        detail += &format!("r={r}: doth/(chi r)={:.4} ", res.doth / (CHI * r));
    }
    verdict(3, "containment in B_{chi r}", pass, detail);
}

fn c04_multiplier_window() {
    let s = sweep();
    let below = s.results.iter().all(|r| r.lambda < LAMBDA0);
    let fit = s.table.fit("multiplier_gap").unwrap();
    let slope = fit.slope.unwrap_or(f64::NAN);
    let pass = below && (slope - 2.0).abs() <= 0.3;
    let lambdas: Vec<String> = s.results.iter().map(|r| format!("{:.8}", r.lambda)).collect();
    verdict(4, "multiplier window and rate", pass, format!("lambda=[{}] slope(2-lambda)={slope:.3}", lambdas.join(", ")));
}

fn c05_profile() {
    let s = sweep();
    let err = s.table.fit("profile_err_over_r").unwrap();
    let tail = s.table.fit("mode_tail").unwrap();
    let (a, b) = (err.slope.unwrap_or(f64::NAN), tail.slope.unwrap_or(f64::NAN));
    let pass = (a - 1.0).abs() <= 0.3 && (b - 2.0).abs() <= 0.4;
    let rows: Vec<String> = s.table.rows.iter().map(|r| format!("r={}: err/r={:.3e} tail={:.3e}", r.r, r.profile_err / r.r, r.mode_tail)).collect();
    verdict(5, "profile rates", pass, format!("slope(err/r)={a:.3} slope(mode tail)={b:.3}; {}", rows.join("; ")));
}

fn c06_strict_subadditivity() {
    let s = sweep();
    let pairs: Vec<(f64, &GroundStateResult)> = interior(s).collect();
    let rows = subadditivity_of(&pairs).unwrap();
    let pass = rows.len() == 6 && rows.iter().all(|r| r.holds);
    let worst = rows.iter().map(|r| (r.rhs - r.lhs) / r.rhs.abs()).fold(f64::INFINITY, f64::min);
    verdict(6, "strict subadditivity", pass, format!("{} pairs, smallest relative gap {worst:.3e}", rows.len()));
}

fn c07_pohozaev() {
    let s = sweep();
    let ratios: Vec<f64> = interior(s).map(|(_, res)| res.report.pohozaev.abs() / res.report.doth_sq).collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let pass = !ratios.is_empty() && worst <= POHOZAEV_TOL && s.results.iter().all(|r| r.converged);
    verdict(7, "Pohozaev identity", pass, format!("max |P|/doth^2 = {worst:.3e} at tol 1e-8"));
}

fn c08_phase_rigidity() {
    let g = Grid3::desk();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for r in RADII {
        let mut c = SolveConfig::new(p3(), r, CHI);
        c.init = Init::GaussianComplexPhase;
        // The phase spread tracks about 100x the residual.
        c.tol = 1e-10;
        let res = solve(&g, &c).unwrap();
        let ph = phase_analysis(&res.u, 1e-6).unwrap();
        pass &= res.converged;
        worst = worst.max(ph.std);
    }
    pass &= worst <= 1e-6;
    verdict(8, "phase rigidity", pass, format!("max phase std {worst:.3e} over complex-phase solves"));
}

fn c09_symmetry() {
    let s = sweep();
    let mut worst: f64 = 0.0;
    for res in &s.results {
        worst = worst.max(symmetry_check(&res.u).unwrap().max_defect());
    }
    verdict(9, "symmetry", worst <= 1e-4, format!("max defect {worst:.3e}"));
}

fn c10_rearrangement() {
    let g = Grid3::desk();
    let fields = corpus(&g, 2024, 1000);
    let violations = fields.iter().filter(|f| !trap_moment_check(f).holds).count();
    let mut equimeasurable = true;
    for f in fields.iter().take(100) {
        let mut a: Vec<f64> = f.as_slice().iter().map(|z| z.norm()).collect();
        let mut b: Vec<f64> = rearrange(f).as_slice().iter().map(|z| z.re).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        equimeasurable &= a == b && norm_preservation_check(f, p3()).holds;
    }
    let fixed = sweep().results.iter().map(|r| fixed_point_defect(&r.u)).fold(0.0, f64::max);
    let pass = violations == 0 && equimeasurable && fixed <= 1e-4;
    verdict(
        10,
        "rearrangement suite",
        pass,
        format!("equimeasurable={equimeasurable} trap violations {violations}/1000 fixed-point defect {fixed:.3e}"),
    );
}

fn c11_stability_proxy() {
    let s = sweep();
    let gs = &s.results[2];
    let mut cfg = EvolveConfig::new(p3(), 0.01, 20.0);
    cfg.sample_every = 20;
    cfg.perturbation = Some(Perturbation { eps: 0.01, seed: 11 });
    let t = evolve(&gs.u, &cfg).unwrap();
    let amp = t.amplification();
    let pass = amp <= 5.0 && t.mass_drift <= 1e-10 && t.energy_drift <= 1e-6 && t.collapse.is_none();
    verdict(
        11,
        "stability proxy",
        pass,
        format!(
            "r=0.2 d0={:.3e} sup d={:.3e} (x{amp:.3}) mass drift {:.2e} energy drift {:.2e}",
            t.initial_distance, t.max_distance, t.mass_drift, t.energy_drift
        ),
    );
}

fn c12_unboundedness() {
    let lambdas = [1.0, 1.25, 1.5, 2.0, 4.0, 8.0, 16.0, 32.0, 48.0, 64.0, 96.0, 128.0];
    let unit = |g: &Grid3| Field::from_real_fn(g, |a, b, c| PI.powf(-0.75) * (-(a * a + b * b + c * c) / 2.0).exp());
    let desk = Grid3::desk();
    let rows = scaling_sweep(&unit(&desk), p3(), &lambdas).unwrap();
    let tail: Vec<f64> = rows.iter().filter(|r| r.lambda >= 48.0).map(|r| r.analytic).collect();
    let negative = tail.iter().all(|e| *e < 0.0);
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    // The desk spacing flags every row, so agreement is checked on a grid
    // refined by two in each direction over the same box.
    let fine = Grid3::new([64, 64, 128], [16.0, 16.0, 32.0]).unwrap();
    let fine_rows = scaling_sweep(&unit(&fine), p3(), &lambdas).unwrap();
    let checked: Vec<(f64, f64)> = fine_rows
        .iter()
        .filter_map(|r| r.resampled.map(|e| (r.lambda, ((e - r.analytic) / r.analytic).abs())))
        .collect();
    let worst = checked.iter().map(|c| c.1).fold(0.0, f64::max);
    let desk_flagged = rows.iter().filter(|r| r.flagged).count();
    let pass = negative && decreasing && checked.len() >= 2 && worst <= 1e-6;
    verdict(
        12,
        "unbounded below",
        pass,
        format!(
            "E(48)={:.3e} E(128)={:.3e} decreasing={decreasing}; desk rows flagged {desk_flagged}/{}; fine-grid rows checked {} max rel diff {worst:.2e}",
            tail[0],
            tail[tail.len() - 1],
            rows.len(),
            checked.len()
        ),
    );
}

fn c13_property_suites() {
    let g = Grid3::new([16, 16, 32], [10.0, 10.0, 24.0]).unwrap();
    let fields = corpus(&g, 5, 8);
    let n = g.size() as f64;
    let mut identity: f64 = 0.0;
    for pair in fields.windows(2) {
        let (f, h) = (&pair[0], &pair[1]);
        let spec = f.spectrum();
        let parseval = spec.iter().map(|z| z.norm_sqr()).sum::<f64>() / n * g.cell_volume();
        identity = identity.max((parseval - f.l2_norm_sq()).abs() / f.l2_norm_sq());
        let a = f.inner(&h.laplacian()).unwrap();
        let b = f.laplacian().inner(h).unwrap();
        identity = identity.max((a - b).norm() / a.norm());
        let shifted = f.shift_x3(0.7).shift_x3(1.9).sub(&f.shift_x3(2.6)).unwrap();
        identity = identity.max(shifted.l2_norm() / f.l2_norm());
    }
    let mut descent: f64 = 0.0;
    for pair in fields.windows(2) {
        let (u, h) = (&pair[0], &pair[1]);
        let (grad, _) = energy::gradient(u, p3());
        let exact = grad.real_inner(h);
        let eps = 1e-5;
        let plus = energy::report(&u.axpy(eps.into(), h).unwrap(), p3()).energy;
        let minus = energy::report(&u.axpy((-eps).into(), h).unwrap(), p3()).energy;
        let fd = (plus - minus) / (2.0 * eps);
        descent = descent.max((fd - exact).abs() / exact.abs());
    }
    let run = || {
        let mut cfg = SweepConfig::new(SolveConfig::new(p3(), 0.1, CHI), vec![0.1, 0.2]);
        cfg.cutoff = 10;
        let res: Vec<GroundStateResult> = cfg
            .r_list
            .iter()
            .map(|&r| {
                let mut c = cfg.base.clone();
                c.r = r;
                solve(&g, &c).unwrap()
            })
            .collect();
        let mut vc = VerifyConfig::new(p3(), CHI);
        vc.gn_corpus = 20;
        vc.rearrange_corpus = 10;
        vc.stability_t = 0.5;
        let claims = verify_fresh(&g, &SolveConfig::new(p3(), 0.1, CHI), &vc).unwrap();
        (tabulate(&g, &cfg, &res).unwrap().to_csv(), claims.to_csv(), corpus(&g, 77, 3))
    };
    let (a, b) = (run(), run());
    let deterministic =
        a.0 == b.0 && a.1 == b.1 && a.2.iter().zip(&b.2).all(|(x, y)| x.as_slice() == y.as_slice());
    let pass = identity <= 1e-10 && descent <= 1e-4 && deterministic;
    verdict(
        13,
        "property suites",
        pass,
        format!("identities {identity:.2e}, gradient vs finite differences {descent:.2e}, byte-identical reruns {deterministic}"),
    );
}

fn main() -> ExitCode {
    let criteria: [fn(); 13] = [
        c01_spectral_bottom,
        c02_energy_upper_bound,
        c03_containment,
        c04_multiplier_window,
        c05_profile,
        c06_strict_subadditivity,
        c07_pohozaev,
        c08_phase_rigidity,
        c09_symmetry,
        c10_rearrangement,
        c11_stability_proxy,
        c12_unboundedness,
        c13_property_suites,
    ];
    let failed = criteria.into_iter().filter(|c| catch_unwind(c).is_err()).count();
    println!("acceptance: {failed} unexpected failure(s), expected failures {EXPECTED_RED:?}");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
