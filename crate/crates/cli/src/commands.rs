use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nls_core::dynamics::{evolve as run_evolve, EvolveConfig, Perturbation};
use nls_core::energy::Exponent;
use nls_core::groundstate::{solve, GroundStateResult, Init, Method, SolveConfig, Status};
use nls_core::io::{load_field, save_field, sci};
use nls_core::oscillator::{rayleigh_quotient, OscillatorBasis, LAMBDA0};
use nls_core::rearrange::{equality_rigidity_probe, kinetic_check, norm_preservation_check, rearrange as rearranged, trap_moment_check};
use nls_core::sweep::{run_sweep, SweepConfig};
use nls_core::verify::{verify_field, Claim, Verdict, VerifyConfig, VerifyReport};
use nls_core::{Field, Grid3};

use crate::config::Config;

fn grid(cfg: &Config) -> Result<Grid3> {
    Ok(Grid3::new(cfg.triple("grid")?, cfg.triple("box")?)?)
}

fn exponent(cfg: &Config) -> Result<Exponent> {
    Ok(Exponent::extended(cfg.get("p")?)?)
}

/// Relative paths land in the output directory.
fn output(cfg: &Config, key: &str) -> Result<PathBuf> {
    let p = PathBuf::from(cfg.raw(key)?);
    if p.is_absolute() {
        return Ok(p);
    }
    let dir = PathBuf::from(cfg.raw("out-dir")?);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(p))
}

fn input(cfg: &Config) -> Result<PathBuf> {
    if !cfg.is_set("in") {
        bail!("an input field file is required (--in)");
    }
    let p = PathBuf::from(cfg.raw("in")?);
    if !p.exists() {
        bail!("input file {} does not exist", p.display());
    }
    Ok(p)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn solve_config(cfg: &Config, r: f64) -> Result<SolveConfig> {
    let mut c = SolveConfig::new(exponent(cfg)?, r, cfg.get("chi")?);
    c.dt = cfg.get("dt")?;
    c.tol = cfg.get("tol")?;
    c.max_iter = cfg.get("max-iter")?;
    c.seed = cfg.get("seed")?;
    let init = cfg.raw("init")?;
    c.init = match init {
        "gaussian" => Init::Gaussian,
        "gaussian-complex-phase" => Init::GaussianComplexPhase,
        "random-smooth" => Init::RandomSmooth,
        other => match other.strip_prefix("file:") {
            Some(path) => Init::Field(load_field(path).with_context(|| format!("loading initial field {path}"))?),
            None => bail!("unknown init {other:?}"),
        },
    };
    c.method = match cfg.raw("method")? {
        "plain" => Method::Plain,
        "conjugate" => Method::Conjugate,
        other => bail!("unknown method {other:?}"),
    };
    c.validate()?;
    Ok(c)
}

pub fn spectrum(cfg: &Config) -> Result<bool> {
    let g = grid(cfg)?;
    let basis = OscillatorBasis::build(&g, cfg.get("cutoff")?)?;
    let n3 = g.n()[2];
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(["j", "m", "n", "lambda", "rayleigh"])?;
    for (j, mode) in basis.modes().iter().enumerate() {
        let f = Field::from_vec(&g, (0..g.size()).map(|k| mode.values[k / n3].into()).collect())?;
        w.write_record([
            j.to_string(),
            mode.m.to_string(),
            mode.n.to_string(),
            sci(mode.eigenvalue),
            sci(rayleigh_quotient(&f)?),
        ])?;
    }
    w.flush()?;
    Ok(basis.eigenvalues()[0] == LAMBDA0)
}

const REPORT_COLUMNS: [&str; 15] = [
    "p", "r", "chi", "energy", "lambda", "doth_sq", "l2_sq", "kinetic", "trap", "lp1", "pohozaev", "residual", "iters",
    "status", "converged",
];

fn report_row(c: &SolveConfig, res: &GroundStateResult) -> Vec<String> {
    let rep = &res.report;
    vec![
        sci(c.p.value()),
        sci(c.r),
        sci(c.chi),
        sci(res.energy),
        sci(res.lambda),
        sci(rep.doth_sq),
        sci(rep.l2_sq),
        sci(rep.kinetic),
        sci(rep.trap),
        sci(rep.lp1),
        sci(rep.pohozaev),
        sci(res.residual),
        res.iters.to_string(),
        res.status.as_str().to_string(),
        res.converged.to_string(),
    ]
}

pub fn groundstate(cfg: &Config) -> Result<bool> {
    let g = grid(cfg)?;
    let c = solve_config(cfg, cfg.get("r")?)?;
    let out = output(cfg, "out")?;
    let res = solve(&g, &c)?;
    save_field(&out, &res.u)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(REPORT_COLUMNS)?;
    w.write_record(report_row(&c, &res))?;
    w.flush()?;
    Ok(res.converged && res.status == Status::Interior)
}

pub fn sweep(cfg: &Config) -> Result<bool> {
    let g = grid(cfg)?;
    let r_list: Vec<f64> = cfg.list("r-list")?;
    let base = solve_config(cfg, r_list.first().copied().unwrap_or(1.0))?;
    let mut sc = SweepConfig::new(base, r_list);
    sc.cutoff = cfg.get("cutoff")?;
    sc.validate()?;
    let out = output(cfg, "out")?;
    let table = run_sweep(&g, &sc)?;
    let text = table.to_csv();
    write(&out, &text)?;
    print!("{text}");
    let rows_ok = table.rows.iter().all(|r| r.converged && r.status == Status::Interior && r.lambda < LAMBDA0);
    let fits_ok = table.fits.iter().all(|f| f.within_tolerance() != Some(false));
    Ok(rows_ok && fits_ok)
}

pub fn evolve(cfg: &Config) -> Result<bool> {
    let u = load_field(input(cfg)?)?;
    let mut ec = EvolveConfig::new(exponent(cfg)?, cfg.get("dt")?, cfg.get("t-final")?);
    ec.sample_every = cfg.get("sample-every")?;
    ec.trap = cfg.get("trap")?;
    let eps: f64 = cfg.get("perturb")?;
    if eps > 0.0 {
        ec.perturbation = Some(Perturbation { eps, seed: cfg.get("seed")? });
    }
    ec.validate(u.grid())?;
    let out = output(cfg, "out")?;
    let traj = run_evolve(&u, &ec)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "mass", "energy", "d", "maxamp"])?;
    for k in 0..traj.len() {
        w.write_record([sci(traj.t[k]), sci(traj.mass[k]), sci(traj.energy[k]), sci(traj.distance[k]), sci(traj.max_amp[k])])?;
    }
    write(&out, &String::from_utf8(w.into_inner()?)?)?;
    eprintln!(
        "samples {}  mass drift {}  energy drift {}  d0 {}  max d {}",
        traj.len(),
        sci(traj.mass_drift),
        sci(traj.energy_drift),
        sci(traj.initial_distance),
        sci(traj.max_distance)
    );
    if let Some((t, kind)) = &traj.collapse {
        eprintln!("collapse ({}) at t = {}", kind.as_str(), sci(*t));
    }
    let stable = ec.perturbation.is_none() || traj.amplification() <= 5.0;
    Ok(traj.collapse.is_none() && traj.mass_drift <= 1e-10 && traj.energy_drift <= 1e-6 && stable)
}

pub fn verify(cfg: &Config) -> Result<bool> {
    let p = exponent(cfg)?;
    let mut vc = VerifyConfig::new(p, cfg.get("chi")?);
    vc.seed = cfg.get("seed")?;
    vc.gn_corpus = cfg.get("gn-corpus")?;
    vc.rearrange_corpus = cfg.get("rearrange-corpus")?;
    vc.stability_t = cfg.get("stability-t")?;
    let out = output(cfg, "out")?;
    vc.companion = solve_config(cfg, cfg.get("r")?)?;
    let u = if cfg.is_set("in") {
        load_field(input(cfg)?)?
    } else {
        solve(&grid(cfg)?, &vc.companion)?.u
    };
    let report = verify_field(&u, &vc)?;
    let text = report.to_csv();
    write(&out, &text)?;
    print!("{text}");
    Ok(report.all_pass())
}

fn claim(id: &'static str, anchor: &'static str, value: f64, threshold: f64, verdict: Verdict) -> Claim {
    Claim { id, anchor, value, threshold, verdict }
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

pub fn rearrange(cfg: &Config) -> Result<bool> {
    let u = load_field(input(cfg)?)?;
    let p = exponent(cfg)?;
    let out = output(cfg, "out")?;
    let checks = output(cfg, "checks")?;
    let star = rearranged(&u);
    let trap = trap_moment_check(&u);
    let growth = trap
        .before
        .iter()
        .zip(&trap.after)
        .map(|(b, a)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    let norms = norm_preservation_check(&u, p);
    let kin = kinetic_check(&u);
    let rigid = equality_rigidity_probe(&u);
    let strict_failures = rigid.slices.iter().filter(|s| !(s.symmetric || s.tied || s.margin > 0.0)).count();
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let report = VerifyReport {
        claims: vec![
            claim("trap_moment", "per-slice trap moment does not grow", growth, 0.0, verdict(trap.holds)),
            claim(
                "l2_preserved",
                "rearrangement keeps L^2",
                rel(norms.l2_after, norms.l2_before),
                1e-12,
                verdict(rel(norms.l2_after, norms.l2_before) <= 1e-12),
            ),
            claim(
                "lp_preserved",
                "rearrangement keeps L^{p+1}",
                rel(norms.lp_after, norms.lp_before),
                1e-12,
                verdict(rel(norms.lp_after, norms.lp_before) <= 1e-12),
            ),
            claim(
                "kinetic",
                "Polya-Szego kinetic inequality",
                kin.after / kin.before,
                1.0 + 1e-3,
                kin.holds.map(verdict).unwrap_or(Verdict::NotApplicable),
            ),
            claim("rigidity", "equality forces symmetry", strict_failures as f64, 0.0, verdict(rigid.holds)),
        ],
    };
    save_field(&out, &star)?;
    let text = report.to_csv();
    write(&checks, &text)?;
    print!("{text}");
    eprintln!("trap moment {} -> {}", sci(trap.total_before), sci(trap.total_after));
    Ok(report.all_pass())
}
