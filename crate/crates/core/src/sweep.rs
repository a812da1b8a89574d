//! Ground states over a list of masses, tabulated with log–log fits of the
//! small-mass rates.

use rayon::prelude::*;

use crate::analysis::profile_error;
use crate::error::{NlsError, Result};
use crate::grid::Grid3;
use crate::groundstate::{solve, GroundStateResult, SolveConfig, Status};
use crate::io::sci;
use crate::oscillator::{OscillatorBasis, DEFAULT_CUTOFF, LAMBDA0};

#[derive(Clone, Debug)]
pub struct SweepConfig {
    /// Template solve; its `r` is replaced by each entry of `r_list`.
    pub base: SolveConfig,
    pub r_list: Vec<f64>,
    pub cutoff: usize,
}

impl SweepConfig {
    pub fn new(base: SolveConfig, r_list: Vec<f64>) -> Self {
        Self { base, r_list, cutoff: DEFAULT_CUTOFF }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_list.is_empty() {
            return Err(NlsError::InvalidConfig("empty r list".into()));
        }
        if self.r_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NlsError::InvalidConfig("r list must be strictly increasing".into()));
        }
        for &r in &self.r_list {
            let mut c = self.base.clone();
            c.r = r;
            c.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub energy: f64,
    pub lambda: f64,
    pub doth: f64,
    pub residual: f64,
    pub status: Status,
    pub converged: bool,
    /// `‖u - φ₀Ψ₀‖_Ḣ`.
    pub profile_err: f64,
    /// Mass fraction outside the transverse ground mode.
    pub mode_tail: f64,
    /// `P(u)/‖u‖²_Ḣ`.
    pub pohozaev: f64,
}

/// Least-squares slope of `log y` against `log r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentFit {
    pub quantity: &'static str,
    pub target: f64,
    pub tolerance: f64,
    pub points: usize,
    /// `None` with fewer than two usable points.
    pub slope: Option<f64>,
    /// Standard error of the slope; `None` with fewer than three points.
    pub stderr: Option<f64>,
    /// Root-mean-square residual in `log y`.
    pub rms: Option<f64>,
}

impl ExponentFit {
    pub fn within_tolerance(&self) -> Option<bool> {
        self.slope.map(|s| (s - self.target).abs() <= self.tolerance)
    }

    pub fn status(&self) -> &'static str {
        match self.within_tolerance() {
            None => "insufficient-data",
            Some(true) => "pass",
            Some(false) => "fail",
        }
    }
}

/// `(slope, intercept, stderr, rms)` of an ordinary least-squares line.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, Option<f64>, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / nf, ys.iter().sum::<f64>() / nf);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (n > 2).then(|| (ss / (nf - 2.0) / sxx).sqrt());
    Some((slope, intercept, stderr, (ss / nf).sqrt()))
}

/// Log–log fit over the positive entries of `ys`.
pub fn exponent_fit(quantity: &'static str, target: f64, tolerance: f64, rs: &[f64], ys: &[f64]) -> ExponentFit {
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        rs.iter().zip(ys).filter(|(r, y)| **r > 0.0 && **y > 0.0).map(|(r, y)| (r.ln(), y.ln())).unzip();
    let fit = linear_fit(&lx, &ly);
    ExponentFit {
        quantity,
        target,
        tolerance,
        points: lx.len(),
        slope: fit.map(|f| f.0),
        stderr: fit.and_then(|f| f.2),
        rms: fit.map(|f| f.3),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub p: f64,
    pub chi: f64,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<ExponentFit>,
}

pub const SWEEP_COLUMNS: [&str; 10] =
    ["r", "J", "lambda", "doth", "residual", "status", "profile_err", "mode_tail", "pohozaev", "converged"];
pub const FIT_COLUMNS: [&str; 8] = ["fit", "quantity", "target", "tolerance", "points", "slope", "stderr", "status"];

impl SweepTable {
    /// Rows sorted by `r`; the fits use converged interior rows only.
    pub fn from_rows(p: f64, chi: f64, mut rows: Vec<SweepRow>) -> Self {
        rows.sort_by(|a, b| a.r.total_cmp(&b.r));
        let used: Vec<&SweepRow> = rows.iter().filter(|r| r.status == Status::Interior && r.converged).collect();
        let rs: Vec<f64> = used.iter().map(|r| r.r).collect();
        let col = |f: &dyn Fn(&SweepRow) -> f64| -> Vec<f64> { used.iter().map(|r| f(r)).collect() };
        let fits = vec![
            exponent_fit("multiplier_gap", p - 1.0, 0.3, &rs, &col(&|r| LAMBDA0 - r.lambda)),
            exponent_fit("profile_err_over_r", (p - 1.0) / 2.0, 0.3, &rs, &col(&|r| r.profile_err / r.r)),
            exponent_fit("mode_tail", p - 1.0, 0.4, &rs, &col(&|r| r.mode_tail)),
        ];
        Self { p, chi, rows, fits }
    }

    pub fn fit(&self, quantity: &str) -> Option<&ExponentFit> {
        self.fits.iter().find(|f| f.quantity == quantity)
    }

    /// Table rows, then one footer record per fit (first field `fit`).
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        w.write_record(SWEEP_COLUMNS).expect("in-memory write");
        for row in &self.rows {
            w.write_record([
                sci(row.r),
                sci(row.energy),
                sci(row.lambda),
                sci(row.doth),
                sci(row.residual),
                row.status.as_str().to_string(),
                sci(row.profile_err),
                sci(row.mode_tail),
                sci(row.pohozaev),
                row.converged.to_string(),
            ])
            .expect("in-memory write");
        }
        w.write_record(FIT_COLUMNS).expect("in-memory write");
        for f in &self.fits {
            let opt = |x: Option<f64>| x.map(sci).unwrap_or_else(|| "n/a".into());
            w.write_record([
                "fit".to_string(),
                f.quantity.to_string(),
                sci(f.target),
                sci(f.tolerance),
                f.points.to_string(),
                opt(f.slope),
                opt(f.stderr),
                f.status().to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

pub fn sweep_row(r: f64, res: &GroundStateResult, basis: &OscillatorBasis) -> Result<SweepRow> {
    let prof = profile_error(&res.u, basis)?;
    Ok(SweepRow {
        r,
        energy: res.energy,
        lambda: res.lambda,
        doth: res.doth,
        residual: res.residual,
        status: res.status,
        converged: res.converged,
        profile_err: prof.err,
        mode_tail: prof.mode_tail,
        pohozaev: res.report.pohozaev / res.report.doth_sq,
    })
}

/// One solve per `r`, run concurrently and assembled in list order.
pub fn sweep_solves(grid: &Grid3, cfg: &SweepConfig) -> Result<Vec<GroundStateResult>> {
    cfg.validate()?;
    cfg.r_list
        .par_iter()
        .map(|&r| {
            let mut c = cfg.base.clone();
            c.r = r;
            solve(grid, &c)
        })
        .collect()
}

pub fn tabulate(grid: &Grid3, cfg: &SweepConfig, results: &[GroundStateResult]) -> Result<SweepTable> {
    let basis = OscillatorBasis::build(grid, cfg.cutoff)?;
    let rows = cfg
        .r_list
        .iter()
        .zip(results)
        .map(|(&r, res)| sweep_row(r, res, &basis))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::from_rows(cfg.base.p.value(), cfg.base.chi, rows))
}

pub fn run_sweep(grid: &Grid3, cfg: &SweepConfig) -> Result<SweepTable> {
    let results = sweep_solves(grid, cfg)?;
    tabulate(grid, cfg, &results)
}
