//! Discrete Schwarz symmetrization.
//!
//! Values are sorted in decreasing order and written to cells in order of
//! increasing distance from the centre node `n/2`, ties in distance going
//! to the lower flat index. For a line this visits `c, c-1, c+1, c-2, …`.

use rayon::prelude::*;

use crate::energy::{self, Exponent};
use crate::error::{NlsError, Result};
use crate::field::Field;

/// Nonnegative values on an (x1, x2) slice, x2 fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Slice2 {
    n: [usize; 2],
    h: [f64; 2],
    values: Vec<f64>,
}

/// Nonnegative values on an x3 line.
#[derive(Clone, Debug, PartialEq)]
pub struct Line1 {
    h: f64,
    values: Vec<f64>,
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(NlsError::NonFinite);
    }
    if let Some(v) = values.iter().find(|v| **v < 0.0) {
        return Err(NlsError::Precondition(format!("rearrangement needs nonnegative values, got {v}")));
    }
    Ok(())
}

impl Slice2 {
    pub fn new(n: [usize; 2], h: [f64; 2], values: Vec<f64>) -> Result<Self> {
        if values.len() != n[0] * n[1] {
            return Err(NlsError::LengthMismatch { expected: n[0] * n[1], got: values.len() });
        }
        check_values(&values)?;
        Ok(Self { n, h, values })
    }

    /// `|u|` on the x3 slice `l`.
    pub fn from_field(u: &Field, l: usize) -> Self {
        let g = u.grid();
        let [n1, n2, n3] = g.n();
        let values = u.as_slice().iter().skip(l).step_by(n3).map(|z| z.norm()).collect();
        Self { n: [n1, n2], h: [g.spacing(0), g.spacing(1)], values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n[1] + j]
    }

    /// Squared distance of every cell from the centre node.
    pub fn distances_sq(&self) -> Vec<f64> {
        distances_sq_2d(self.n, self.h)
    }

    /// `Σ (x1² + x2²) v² dx1 dx2`.
    pub fn trap_moment(&self) -> f64 {
        self.distances_sq().iter().zip(&self.values).map(|(d, v)| d * v * v).sum::<f64>() * self.h[0] * self.h[1]
    }
}

impl Line1 {
    pub fn new(h: f64, values: Vec<f64>) -> Result<Self> {
        check_values(&values)?;
        Ok(Self { h, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn distances_sq_2d(n: [usize; 2], h: [f64; 2]) -> Vec<f64> {
    let (c1, c2) = ((n[0] / 2) as f64, (n[1] / 2) as f64);
    (0..n[0] * n[1])
        .map(|s| {
            let (i, j) = ((s / n[1]) as f64, (s % n[1]) as f64);
            ((i - c1) * h[0]).powi(2) + ((j - c2) * h[1]).powi(2)
        })
        .collect()
}

/// Cells in fill order: by distance from the centre, then by index.
pub fn placement_order_2d(n: [usize; 2], h: [f64; 2]) -> Vec<usize> {
    let d = distances_sq_2d(n, h);
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    order
}

pub fn placement_order_1d(n: usize) -> Vec<usize> {
    let c = n / 2;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (i.abs_diff(c), i));
    order
}

fn place(values: &[f64], order: &[usize]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut out = vec![0.0; values.len()];
    for (v, &cell) in sorted.into_iter().zip(order) {
        out[cell] = v;
    }
    out
}

pub fn schwarz2d(s: &Slice2) -> Slice2 {
    let order = placement_order_2d(s.n, s.h);
    Slice2 { n: s.n, h: s.h, values: place(&s.values, &order) }
}

pub fn symm_decr_1d(l: &Line1) -> Line1 {
    let order = placement_order_1d(l.values.len());
    Line1 { h: l.h, values: place(&l.values, &order) }
}

/// `|u|` with every x3 slice replaced by its Schwarz rearrangement.
pub fn rearrange_slices(u: &Field) -> Field {
    let g = u.grid();
    let [n1, n2, n3] = g.n();
    let order = placement_order_2d([n1, n2], [g.spacing(0), g.spacing(1)]);
    let slices: Vec<Vec<f64>> = (0..n3)
        .into_par_iter()
        .map(|l| {
            let vals: Vec<f64> = u.as_slice().iter().skip(l).step_by(n3).map(|z| z.norm()).collect();
            place(&vals, &order)
        })
        .collect();
    let mut data = vec![Default::default(); g.size()];
    for (l, slice) in slices.iter().enumerate() {
        for (s, v) in slice.iter().enumerate() {
            data[s * n3 + l] = num_complex::Complex64::new(*v, 0.0);
        }
    }
    Field::from_vec_unchecked(g, data)
}

/// `|u|` with every x3 line replaced by its symmetric decreasing rearrangement.
pub fn rearrange_x3(u: &Field) -> Field {
    let g = u.grid();
    let n3 = g.n()[2];
    let order = placement_order_1d(n3);
    let data: Vec<num_complex::Complex64> = u
        .as_slice()
        .par_chunks(n3)
        .flat_map_iter(|line| {
            let vals: Vec<f64> = line.iter().map(|z| z.norm()).collect();
            place(&vals, &order).into_iter().map(|v| num_complex::Complex64::new(v, 0.0))
        })
        .collect();
    Field::from_vec_unchecked(g, data)
}

/// Transverse rearrangement followed by the x3 rearrangement.
pub fn rearrange(u: &Field) -> Field {
    rearrange_x3(&rearrange_slices(u))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrapMomentCheck {
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    pub total_before: f64,
    pub total_after: f64,
    pub holds: bool,
}

/// Per-slice `∫(x1²+x2²)|u|²` before and after the transverse rearrangement.
pub fn trap_moment_check(u: &Field) -> TrapMomentCheck {
    let g = u.grid();
    let n3 = g.n()[2];
    let after_field = rearrange_slices(u);
    let moments = |f: &Field| -> Vec<f64> { (0..n3).map(|l| Slice2::from_field(f, l).trap_moment()).collect() };
    let before = moments(u);
    let after = moments(&after_field);
    let holds = before.iter().zip(&after).all(|(b, a)| *a <= b * (1.0 + 1e-12) + f64::MIN_POSITIVE);
    let h3 = g.spacing(2);
    TrapMomentCheck {
        total_before: before.iter().sum::<f64>() * h3,
        total_after: after.iter().sum::<f64>() * h3,
        before,
        after,
        holds,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormCheck {
    pub l2_before: f64,
    pub l2_after: f64,
    pub lp_before: f64,
    pub lp_after: f64,
    pub holds: bool,
}

/// `∫|u|²` and `∫|u|^{p+1}` are unchanged by the full rearrangement.
pub fn norm_preservation_check(u: &Field, p: Exponent) -> NormCheck {
    let r = rearrange(u);
    let (l2_before, l2_after) = (u.l2_norm_sq(), r.l2_norm_sq());
    let (lp_before, lp_after) = (energy::lp_integral(u, p), energy::lp_integral(&r, p));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    NormCheck {
        holds: close(l2_before, l2_after) && close(lp_before, lp_after),
        l2_before,
        l2_after,
        lp_before,
        lp_after,
    }
}

/// Spectral-tail level below which a field counts as smooth.
pub const SMOOTH_TAIL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct KineticCheck {
    pub before: f64,
    pub after: f64,
    pub smooth: bool,
    /// `None` when the field is too rough for the discrete inequality.
    pub holds: Option<bool>,
}

/// `∫|∇u*|² <= ∫|∇u|²` with slack `1e-3·∫|∇u|²`, asserted on smooth fields only.
pub fn kinetic_check(u: &Field) -> KineticCheck {
    let before = energy::kinetic(u);
    let after = energy::kinetic(&rearrange(u));
    let smooth = u.spectral_tail() < SMOOTH_TAIL;
    KineticCheck {
        before,
        after,
        smooth,
        holds: smooth.then_some(after <= before * (1.0 + 1e-3)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HardyLittlewood {
    pub plain: f64,
    pub rearranged: f64,
    pub holds: bool,
}

/// `∫ f g <= ∫ f* g*` on a line.
pub fn hardy_littlewood_check(f: &Line1, g: &Line1) -> Result<HardyLittlewood> {
    if f.values.len() != g.values.len() {
        return Err(NlsError::LengthMismatch { expected: f.values.len(), got: g.values.len() });
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * f.h;
    let plain = dot(&f.values, &g.values);
    let rearranged = dot(&symm_decr_1d(f).values, &symm_decr_1d(g).values);
    Ok(HardyLittlewood {
        plain,
        rearranged,
        holds: plain <= rearranged * (1.0 + 1e-14) + f64::MIN_POSITIVE,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceRigidity {
    pub slice: usize,
    /// Each distance shell already holds the values the rearrangement puts there.
    pub symmetric: bool,
    /// Repeated values; the strict statement is not asserted.
    pub tied: bool,
    /// Trap moment before minus after.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigidityReport {
    pub slices: Vec<SliceRigidity>,
    /// Every non-symmetric, untied slice loses trap moment strictly.
    pub holds: bool,
}

/// Equality in the trap-moment inequality forces symmetry: each slice that
/// is not already symmetric (up to reordering within a distance shell) and
/// has distinct values must lose trap moment.
pub fn equality_rigidity_probe(u: &Field) -> RigidityReport {
    let g = u.grid();
    let n3 = g.n()[2];
    let slices: Vec<SliceRigidity> = (0..n3).map(|l| slice_rigidity(&Slice2::from_field(u, l), l)).collect();
    let holds = slices.iter().all(|s| s.symmetric || s.tied || s.margin > 0.0);
    RigidityReport { slices, holds }
}

pub fn slice_rigidity(s: &Slice2, index: usize) -> SliceRigidity {
    let r = schwarz2d(s);
    let d = s.distances_sq();
    let mut shells: Vec<usize> = (0..d.len()).collect();
    shells.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let mut symmetric = true;
    let mut start = 0;
    while start < shells.len() {
        let mut end = start + 1;
        while end < shells.len() && d[shells[end]] == d[shells[start]] {
            end += 1;
        }
        let mut a: Vec<f64> = shells[start..end].iter().map(|&c| s.values[c]).collect();
        let mut b: Vec<f64> = shells[start..end].iter().map(|&c| r.values[c]).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        if a != b {
            symmetric = false;
            break;
        }
        start = end;
    }
    let mut sorted = s.values.clone();
    sorted.sort_by(f64::total_cmp);
    let tied = sorted.windows(2).any(|w| w[0] == w[1]);
    SliceRigidity {
        slice: index,
        symmetric,
        tied,
        margin: s.trap_moment() - r.trap_moment(),
    }
}

/// Relative change `‖u* - |u|‖ / ‖u‖` under the full rearrangement.
pub fn fixed_point_defect(u: &Field) -> f64 {
    let m = u.modulus();
    rearrange(u).sub(&m).expect("same grid").l2_norm() / u.l2_norm()
}

/// Relative change under the transverse rearrangement alone.
pub fn slice_fixed_point_defect(u: &Field) -> f64 {
    let m = u.modulus();
    rearrange_slices(u).sub(&m).expect("same grid").l2_norm() / u.l2_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;

    fn slice3(v: [[f64; 3]; 3]) -> Slice2 {
        Slice2::new([3, 3], [1.0, 1.0], v.iter().flatten().copied().collect()).unwrap()
    }

    #[test]
    fn line_example() {
        let l = Line1::new(1.0, vec![0.0, 3.0, 1.0, 2.0, 0.0]).unwrap();
        assert_eq!(symm_decr_1d(&l).values(), &[0.0, 2.0, 3.0, 1.0, 0.0]);
        let sym = Line1::new(1.0, vec![0.0, 1.0, 3.0, 1.0, 0.0]).unwrap();
        assert_eq!(symm_decr_1d(&sym), sym);
        let flat = Line1::new(1.0, vec![2.0; 6]).unwrap();
        assert_eq!(symm_decr_1d(&flat), flat);
        assert_eq!(placement_order_1d(6), vec![3, 2, 4, 1, 5, 0]);
    }

    #[test]
    fn slice_example() {
        let s = slice3([[9.0, 1.0, 0.0], [1.0, 5.0, 1.0], [0.0, 1.0, 0.0]]);
        let r = schwarz2d(&s);
        assert_eq!(r.values(), slice3([[1.0, 5.0, 0.0], [1.0, 9.0, 1.0], [0.0, 1.0, 0.0]]).values());
        let radial = slice3([[0.0, 1.0, 0.0], [1.0, 5.0, 1.0], [0.0, 1.0, 0.0]]);
        assert_eq!(schwarz2d(&radial), radial);
        let flat = slice3([[4.0; 3]; 3]);
        assert_eq!(schwarz2d(&flat), flat);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(Line1::new(1.0, vec![1.0, -1.0]), Err(NlsError::Precondition(_))));
        assert!(matches!(Line1::new(1.0, vec![f64::NAN]), Err(NlsError::NonFinite)));
        assert!(Slice2::new([2, 2], [1.0; 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn hardy_littlewood_example() {
        let f = Line1::new(1.0, vec![1.0, 0.0, 0.0]).unwrap();
        let g = Line1::new(1.0, vec![0.0, 0.0, 1.0]).unwrap();
        let hl = hardy_littlewood_check(&f, &g).unwrap();
        assert_eq!((hl.plain, hl.rearranged), (0.0, 1.0));
        assert!(hl.holds);
        let same = hardy_littlewood_check(&f, &f).unwrap();
        assert_eq!(same.plain, same.rearranged);
    }

    #[test]
    fn rigidity_on_small_slices() {
        // Two values, off-centre: strictly loses trap moment.
        let s = slice3([[2.0, 0.5, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let r = slice_rigidity(&s, 0);
        assert!(!r.symmetric && r.margin > 0.0);
        let sym = slice3([[0.0, 1.0, 0.0], [1.0, 5.0, 1.0], [0.0, 1.0, 0.0]]);
        let r = slice_rigidity(&sym, 0);
        assert!(r.symmetric && r.margin == 0.0);
        // Reordering inside a shell is still symmetric.
        let rot = slice3([[0.5, 1.0, 0.0], [1.0, 5.0, 1.0], [0.0, 1.0, 0.0]]);
        let rot2 = slice3([[0.0, 1.0, 0.5], [1.0, 5.0, 1.0], [0.0, 1.0, 0.0]]);
        assert!(slice_rigidity(&rot2, 0).symmetric == slice_rigidity(&rot, 0).symmetric);
    }

    #[test]
    fn off_centre_gaussian_loses_trap_moment() {
        let g = Grid3::desk();
        let u = Field::from_real_fn(&g, |a, b, c| (-((a - 2.0).powi(2) + b * b) / 2.0 - c * c / 8.0).exp());
        let t = trap_moment_check(&u);
        assert!(t.holds);
        // Centring removes offset² · mass = 4 · ∫|u|².
        assert!((t.total_before - t.total_after - 4.0 * u.l2_norm_sq()).abs() < 1e-3 * t.total_before);
        let c = Field::from_real_fn(&g, |a, b, c| (-(a * a + b * b) / 2.0 - c * c / 8.0).exp());
        let t = trap_moment_check(&c);
        assert!((t.total_before - t.total_after).abs() <= 1e-12 * t.total_before);
        assert!(fixed_point_defect(&c) < 1e-12);
    }
}
