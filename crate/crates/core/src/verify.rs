//! The claim battery: every structural check, run on one field, as a table
//! of `(claim, anchor, value, threshold, verdict)` rows.

use crate::analysis::{geometry_gap, ground_state_certificate, phase_analysis, subadditivity_check, symmetry_check, POHOZAEV_TOL};
use crate::corpus::{calibrate_gn, corpus};
use crate::dynamics::{evolve, EvolveConfig, Perturbation};
use crate::energy::{self, Exponent};
use crate::error::{NlsError, Result};
use crate::field::Field;
use crate::grid::Grid3;
use crate::groundstate::{el_residual, energy_ceiling, recenter, solve, SolveConfig, Status, INTERIOR_SLACK};
use crate::io::sci;
use crate::oscillator::LAMBDA0;
use crate::rearrange::{fixed_point_defect, norm_preservation_check, trap_moment_check};

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub p: Exponent,
    pub chi: f64,
    pub seed: u64,
    /// Fields in the Gagliardo–Nirenberg calibration corpus.
    pub gn_corpus: usize,
    /// Fields in the trap-moment rearrangement corpus.
    pub rearrange_corpus: usize,
    pub residual_tol: f64,
    pub symmetry_tol: f64,
    pub phase_tol: f64,
    pub stability_t: f64,
    pub stability_dt: f64,
    pub stability_eps: f64,
    /// Template for the companion solve at half the mass radius.
    pub companion: SolveConfig,
}

impl VerifyConfig {
    pub fn new(p: Exponent, chi: f64) -> Self {
        Self {
            p,
            chi,
            seed: 0,
            gn_corpus: 200,
            rearrange_corpus: 100,
            residual_tol: 1e-6,
            symmetry_tol: 1e-4,
            phase_tol: 1e-6,
            stability_t: 2.0,
            stability_dt: 0.01,
            stability_eps: 0.01,
            companion: SolveConfig::new(p, 1.0, chi),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "n/a",
        }
    }

    fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Claim {
    pub id: &'static str,
    pub anchor: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub claims: Vec<Claim>,
}

pub const CLAIM_COLUMNS: [&str; 5] = ["claim", "anchor", "value", "threshold", "pass"];

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.claims.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn claim(&self, id: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.id == id)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CLAIM_COLUMNS).expect("in-memory write");
        for c in &self.claims {
            w.write_record([c.id, c.anchor, &sci(c.value), &sci(c.threshold), c.verdict.as_str()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }
}

struct Claims(Vec<Claim>);

impl Claims {
    fn push(&mut self, id: &'static str, anchor: &'static str, value: f64, threshold: f64, ok: bool) {
        self.0.push(Claim { id, anchor, value, threshold, verdict: Verdict::of(ok && value.is_finite()) });
    }

    fn skip(&mut self, id: &'static str, anchor: &'static str) {
        self.0.push(Claim { id, anchor, value: f64::NAN, threshold: f64::NAN, verdict: Verdict::NotApplicable });
    }
}

/// Runs the battery on `u`. The mass radius is read off the field; claims
/// that need `p` above the mass-critical exponent are marked n/a below it.
pub fn verify_field(u: &Field, cfg: &VerifyConfig) -> Result<VerifyReport> {
    if u.is_zero() {
        return Err(NlsError::ZeroField);
    }
    let g = u.grid().clone();
    let u = recenter(u);
    let p = cfg.p;
    let super_critical = p.is_supercritical();
    let rep = energy::report(&u, p);
    let r = rep.l2_sq.sqrt();
    let lambda = rep.lambda.ok_or(NlsError::ZeroField)?;
    let mut c = Claims(Vec::new());

    c.push(
        "confinement",
        "2|u|_2^2 <= |u|_dotH^2",
        2.0 * rep.l2_sq / rep.doth_sq,
        1.0,
        energy::confinement_lower_bound_check(&u),
    );
    let res = el_residual(&u, p, lambda)?;
    c.push("euler_lagrange_residual", "constrained critical point", res, cfg.residual_tol, res <= cfg.residual_tol);

    let gn = calibrate_gn(&g, p, cfg.seed, cfg.gn_corpus);
    let ratio = energy::gn_ratio_of(&rep) / gn.c_hat;
    c.push("gn_bound", "Gagliardo-Nirenberg bound with calibrated constant", ratio, 1.0, ratio <= 1.0);
    if super_critical {
        let gap = geometry_gap(p, r, cfg.chi, gn.c_hat);
        let rhs = gap.rhs.unwrap_or(f64::NAN);
        c.push("geometry_gap", "local-minimum geometry g_r(chi r/2) < inf f_r", gap.lhs, rhs, gap.holds);
    } else {
        c.skip("geometry_gap", "local-minimum geometry g_r(chi r/2) < inf f_r");
    }

    let ceiling = energy_ceiling(r);
    c.push("energy_ceiling", "J_r < r^2 Lambda0/2", rep.energy, ceiling, rep.energy < ceiling);
    let bound = cfg.chi * r * (1.0 + INTERIOR_SLACK);
    c.push("containment", "minimizers lie in B_{chi r}", rep.doth(), bound, rep.doth() <= bound);
    c.push("multiplier_window", "0 < lambda < Lambda0", lambda, LAMBDA0, lambda > 0.0 && lambda < LAMBDA0);

    let mut comp = cfg.companion.clone();
    comp.p = p;
    comp.chi = cfg.chi;
    comp.r = r / 2.0;
    let half = solve(&g, &comp)?;
    let own = if rep.doth() <= bound { Status::Interior } else { Status::BoundarySuspect };
    match subadditivity_check(&[(r / 2.0, half.energy, half.status), (r, rep.energy, own)]) {
        Ok(rows) => c.push("subadditivity", "r^2 J_s < s^2 J_r", rows[0].lhs, rows[0].rhs, rows[0].holds),
        Err(_) => c.push("subadditivity", "r^2 J_s < s^2 J_r", f64::NAN, f64::NAN, false),
    }

    let sym = symmetry_check(&u)?;
    let defect = sym.max_defect();
    c.push("symmetry", "radially symmetric and decreasing", defect, cfg.symmetry_tol, defect <= cfg.symmetry_tol);
    let fixed = fixed_point_defect(&u);
    c.push("rearrangement_fixed_point", "minimizer equals its rearrangement", fixed, cfg.symmetry_tol, fixed <= cfg.symmetry_tol);
    let norms = norm_preservation_check(&u, p);
    let drift = ((norms.l2_after - norms.l2_before) / norms.l2_before)
        .abs()
        .max(((norms.lp_after - norms.lp_before) / norms.lp_before).abs());
    c.push("rearrangement_equimeasurable", "rearrangement keeps L^2 and L^{p+1}", drift, 1e-12, norms.holds);
    let violations = corpus(&g, cfg.seed, cfg.rearrange_corpus)
        .iter()
        .filter(|f| !trap_moment_check(f).holds)
        .count();
    c.push("trap_moment_corpus", "trap moment does not grow under rearrangement", violations as f64, 0.0, violations == 0);

    let phase = phase_analysis(&u, 1e-6)?;
    c.push("phase_rigidity", "minimizer is e^{i theta} f with f >= 0", phase.std, cfg.phase_tol, phase.std <= cfg.phase_tol);

    if super_critical {
        let cert = ground_state_certificate(&u, p, cfg.chi, r)?;
        c.push("pohozaev", "Pohozaev identity |P|/|u|_dotH^2", cert.pohozaev_ratio, POHOZAEV_TOL, cert.holds);
    } else {
        c.skip("pohozaev", "Pohozaev identity |P|/|u|_dotH^2");
    }

    let mut ev = EvolveConfig::new(p, cfg.stability_dt, cfg.stability_t);
    ev.sample_every = 20;
    ev.perturbation = Some(Perturbation { eps: cfg.stability_eps, seed: cfg.seed });
    let traj = evolve(&u, &ev)?;
    let amp = traj.amplification();
    c.push("stability", "orbital distance stays within 5x its start", amp, 5.0, amp <= 5.0 && traj.collapse.is_none());
    c.push("mass_drift", "mass conservation", traj.mass_drift, 1e-10, traj.mass_drift <= 1e-10);
    c.push("energy_drift", "energy conservation", traj.energy_drift, 1e-6, traj.energy_drift <= 1e-6);

    Ok(VerifyReport { claims: c.0 })
}

/// Solves first, then runs the battery on the minimizer.
pub fn verify_fresh(grid: &Grid3, solve_cfg: &SolveConfig, cfg: &VerifyConfig) -> Result<VerifyReport> {
    let res = solve(grid, solve_cfg)?;
    verify_field(&res.u, cfg)
}
