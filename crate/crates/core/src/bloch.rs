//! Brillouin-zone grids, Bloch matrix fields, symmetry checks, and the
//! Fourier machinery that turns momentum-space fields into real-space
//! coupling profiles.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Result, SusyError};
use crate::numerics::{CMatrix, C64};
use crate::SUPPORT_EPS;

/// Hypercubic momentum grid with even sizes, so that -k is always on-grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentumGrid {
    sizes: Vec<usize>,
}

impl MomentumGrid {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.len() > 3 {
            return Err(SusyError::GridMismatch);
        }
        if sizes.iter().any(|&n| n == 0 || n % 2 != 0) {
            return Err(SusyError::GridMismatch);
        }
        Ok(MomentumGrid {
            sizes: sizes.to_vec(),
        })
    }

    pub fn chain(n: usize) -> Result<Self> {
        Self::new(&[n])
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_points(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Multi-index of a flat point, row-major over the axes.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        for (axis, &n) in self.sizes.iter().enumerate().rev() {
            out[axis] = flat % n;
            flat /= n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let mut flat = 0;
        for (axis, &n) in self.sizes.iter().enumerate() {
            flat = flat * n + (multi[axis] % n);
        }
        flat
    }

    /// k components of a grid point: k_j = 2 pi m_j / N_j.
    pub fn k_at(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.sizes)
            .map(|(&m, &n)| 2.0 * PI * m as f64 / n as f64)
            .collect()
    }

    /// Flat index of -k (exact for even sizes).
    pub fn neg_index(&self, flat: usize) -> usize {
        let multi = self.multi_index(flat);
        let neg: Vec<usize> = multi
            .iter()
            .zip(&self.sizes)
            .map(|(&m, &n)| (n - m) % n)
            .collect();
        self.flat_index(&neg)
    }

    /// Flat index shifted by one grid step along `axis`.
    pub fn shift_index(&self, flat: usize, axis: usize, by: i64) -> usize {
        let mut multi = self.multi_index(flat);
        let n = self.sizes[axis] as i64;
        multi[axis] = ((multi[axis] as i64 + by).rem_euclid(n)) as usize;
        self.flat_index(&multi)
    }

    /// Signed minimal-image displacement components for a flat displacement
    /// index (each in (-N/2, N/2]).
    pub fn signed_displacement(&self, flat: usize) -> Vec<i64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.sizes)
            .map(|(&m, &n)| {
                let m = m as i64;
                let n = n as i64;
                if m > n / 2 {
                    m - n
                } else {
                    m
                }
            })
            .collect()
    }
}

/// What a matrix field represents; checks and transforms key off this.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Supercharge,
    BdgFermion,
    BdgBoson,
    Map,
    ComplexStructure,
}

/// A square matrix attached to every grid point (any dimension).
#[derive(Clone, Debug)]
pub struct MatrixField {
    pub grid: MomentumGrid,
    pub dim: usize,
    values: Vec<CMatrix>,
}

impl MatrixField {
    pub fn from_fn(
        grid: MomentumGrid,
        dim: usize,
        f: impl Fn(&[f64]) -> CMatrix + Sync,
    ) -> Result<Self> {
        let pts = grid.num_points();
        let values: Vec<CMatrix> = (0..pts).into_par_iter().map(|i| f(&grid.k_at(i))).collect();
        for v in &values {
            if v.rows != dim || v.cols != dim {
                return Err(SusyError::DimensionMismatch(format!(
                    "field value is {}x{}, expected {dim}x{dim}",
                    v.rows, v.cols
                )));
            }
            v.check_finite()?;
        }
        Ok(MatrixField { grid, dim, values })
    }

    pub fn from_values(grid: MomentumGrid, dim: usize, values: Vec<CMatrix>) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(SusyError::DimensionMismatch(
                "value count != grid points".into(),
            ));
        }
        for v in &values {
            if v.rows != dim || v.cols != dim {
                return Err(SusyError::DimensionMismatch(
                    "field value size mismatch".into(),
                ));
            }
            v.check_finite()?;
        }
        Ok(MatrixField { grid, dim, values })
    }

    pub fn at(&self, flat: usize) -> &CMatrix {
        &self.values[flat]
    }

    pub fn at_neg(&self, flat: usize) -> &CMatrix {
        &self.values[self.grid.neg_index(flat)]
    }

    pub fn map(&self, f: impl Fn(usize, &CMatrix) -> CMatrix + Sync) -> Self {
        let values: Vec<CMatrix> = (0..self.values.len())
            .into_par_iter()
            .map(|i| f(i, &self.values[i]))
            .collect();
        MatrixField {
            grid: self.grid.clone(),
            dim: self.dim,
            values,
        }
    }

    pub fn max_field_norm(&self) -> f64 {
        self.values.iter().map(|m| m.max_norm()).fold(0.0, f64::max)
    }

    /// Real-space coupling blocks M_delta = |Omega|^{-1} sum_k e^{i k.delta} M(k),
    /// indexed by the flat displacement index of the grid.
    pub fn real_space_blocks(&self) -> Vec<CMatrix> {
        let pts = self.grid.num_points();
        let norm = 1.0 / pts as f64;
        (0..pts)
            .into_par_iter()
            .map(|dflat| {
                let delta = self.grid.multi_index(dflat);
                let mut acc = CMatrix::zeros(self.dim, self.dim);
                for kflat in 0..pts {
                    let k = self.grid.k_at(kflat);
                    let phase_arg: f64 =
                        k.iter().zip(&delta).map(|(&kj, &dj)| kj * dj as f64).sum();
                    let ph = C64::from_polar(norm, phase_arg);
                    let m = &self.values[kflat];
                    for i in 0..self.dim {
                        for j in 0..self.dim {
                            acc[(i, j)] += ph * m[(i, j)];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// Largest minimal-image displacement (infinity norm) whose real-space
    /// block exceeds the support threshold.
    pub fn support_radius(&self) -> usize {
        let blocks = self.real_space_blocks();
        let mut radius = 0usize;
        for (dflat, b) in blocks.iter().enumerate() {
            if b.max_norm() > SUPPORT_EPS {
                let disp = self.grid.signed_displacement(dflat);
                let r = disp
                    .iter()
                    .map(|d| d.unsigned_abs() as usize)
                    .max()
                    .unwrap_or(0);
                radius = radius.max(r);
            }
        }
        radius
    }
}

/// A 2n x 2n field on the doubled (annihilation + creation) basis.
#[derive(Clone, Debug)]
pub struct BlochField {
    pub inner: MatrixField,
    pub n: usize,
    pub kind: FieldKind,
}

impl BlochField {
    pub fn from_fn(
        grid: MomentumGrid,
        n: usize,
        kind: FieldKind,
        f: impl Fn(&[f64]) -> CMatrix + Sync,
    ) -> Result<Self> {
        let inner = MatrixField::from_fn(grid, 2 * n, f)?;
        Ok(BlochField { inner, n, kind })
    }

    pub fn from_inner(inner: MatrixField, kind: FieldKind) -> Result<Self> {
        if inner.dim % 2 != 0 {
            return Err(SusyError::DimensionMismatch(
                "Bloch field dimension must be even".into(),
            ));
        }
        let n = inner.dim / 2;
        Ok(BlochField { inner, n, kind })
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.inner.grid
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn at(&self, flat: usize) -> &CMatrix {
        self.inner.at(flat)
    }

    pub fn at_neg(&self, flat: usize) -> &CMatrix {
        self.inner.at_neg(flat)
    }

    pub fn num_points(&self) -> usize {
        self.grid().num_points()
    }

    pub fn map(&self, kind: FieldKind, f: impl Fn(usize, &CMatrix) -> CMatrix + Sync) -> Self {
        BlochField {
            inner: self.inner.map(f),
            n: self.n,
            kind,
        }
    }

    pub fn support_radius(&self) -> usize {
        self.inner.support_radius()
    }
}

/// Max over k of || X q(k)* X - q(-k) ||_max (the intrinsic constraint of a
/// Hermitian supercharge).
pub fn check_phs_supercharge(q: &BlochField) -> f64 {
    let n = q.n;
    let x = CMatrix::x_matrix(n);
    (0..q.num_points())
        .map(|i| {
            let lhs = x.mul(&q.at(i).conj()).mul(&x);
            lhs.max_diff(q.at_neg(i))
        })
        .fold(0.0, f64::max)
}

/// Max over k of || X h(k)* X - sign * h(-k) ||_max. Fermionic BdG fields use
/// sign = -1, bosonic ones sign = +1.
pub fn check_phs_bdg(h: &BlochField, sign: f64) -> f64 {
    let n = h.n;
    let x = CMatrix::x_matrix(n);
    (0..h.num_points())
        .map(|i| {
            let lhs = x.mul(&h.at(i).conj()).mul(&x);
            let rhs = h.at_neg(i).scale(C64::new(sign, 0.0));
            lhs.max_diff(&rhs)
        })
        .fold(0.0, f64::max)
}

/// Real-space decay data along a lattice ray: hopping (diagonal-block) and
/// pairing (off-diagonal-block) magnitudes of q_r for r = m * direction.
#[derive(Clone, Debug)]
pub struct RealSpaceProfile {
    pub steps: Vec<usize>,
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl RealSpaceProfile {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,diag,offdiag")?;
        for (i, &r) in self.steps.iter().enumerate() {
            writeln!(
                w,
                "{},{},{}",
                r,
                crate::config::format_g17(self.diag[i]),
                crate::config::format_g17(self.offdiag[i])
            )?;
        }
        Ok(())
    }
}

/// q_r = |Omega|^{-1} sum_k q(k) e^{-i k.r} for r = m * direction,
/// m = 0..=r_max, reduced to block maxima.
pub fn fourier_ray(
    field: &BlochField,
    direction: &[i64],
    r_max: usize,
) -> Result<RealSpaceProfile> {
    let grid = field.grid();
    if direction.len() != grid.dim() || direction.iter().all(|&d| d == 0) {
        return Err(SusyError::DimensionMismatch(
            "ray direction must be a nonzero lattice vector of the grid dimension".into(),
        ));
    }
    let pts = grid.num_points();
    let n = field.n;
    let norm = 1.0 / pts as f64;

    // Per-k phase step e^{-i k.direction}.
    let steps: Vec<C64> = (0..pts)
        .map(|i| {
            let k = grid.k_at(i);
            let arg: f64 = k
                .iter()
                .zip(direction)
                .map(|(&kj, &dj)| kj * dj as f64)
                .sum();
            C64::from_polar(1.0, -arg)
        })
        .collect();

    let rows: Vec<(f64, f64)> = (0..=r_max)
        .into_par_iter()
        .map(|m| {
            let mut acc = CMatrix::zeros(2 * n, 2 * n);
            for kflat in 0..pts {
                let ph = steps[kflat].powu(m as u32) * norm;
                let q = field.at(kflat);
                for i in 0..2 * n {
                    for j in 0..2 * n {
                        acc[(i, j)] += ph * q[(i, j)];
                    }
                }
            }
            let mut diag: f64 = 0.0;
            let mut off: f64 = 0.0;
            for i in 0..2 * n {
                for j in 0..2 * n {
                    let same_sector = (i < n) == (j < n);
                    let v = acc[(i, j)].norm();
                    if same_sector {
                        diag = diag.max(v);
                    } else {
                        off = off.max(v);
                    }
                }
            }
            (diag, off)
        })
        .collect();

    Ok(RealSpaceProfile {
        steps: (0..=r_max).collect(),
        diag: rows.iter().map(|r| r.0).collect(),
        offdiag: rows.iter().map(|r| r.1).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileBlock {
    Diag,
    OffDiag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayModel {
    Exponential,
    PowerLaw,
}

#[derive(Clone, Debug)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Decay rate (exponential, per lattice step) or power-law exponent.
    pub rate_or_exponent: f64,
    /// R^2 of the winning fit in its own log coordinates.
    pub goodness: f64,
}

/// Least-squares fit of log(value) against r (exponential) and log r
/// (power law) on a window; the smaller-residual model wins.
pub fn fit_decay(
    profile: &RealSpaceProfile,
    block: ProfileBlock,
    window: (usize, usize),
) -> Result<DecayFit> {
    let vals = match block {
        ProfileBlock::Diag => &profile.diag,
        ProfileBlock::OffDiag => &profile.offdiag,
    };
    let mut rs = Vec::new();
    let mut logs = Vec::new();
    for (i, &r) in profile.steps.iter().enumerate() {
        if r >= window.0 && r <= window.1 && r > 0 {
            rs.push(r as f64);
            logs.push(vals[i].max(1e-300).ln());
        }
    }
    if rs.len() < 3 {
        return Err(SusyError::DimensionMismatch(
            "decay window has fewer than 3 points".into(),
        ));
    }
    let fit = |xs: &[f64]| -> (f64, f64) {
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = logs.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&logs).map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        let mut ss_res = 0.0;
        let mean = sy / n;
        let mut ss_tot = 0.0;
        for (x, y) in xs.iter().zip(&logs) {
            let pred = intercept + slope * x;
            ss_res += (y - pred) * (y - pred);
            ss_tot += (y - mean) * (y - mean);
        }
        (slope, ss_res / ss_tot.max(1e-300))
    };
    let (slope_exp, rel_exp) = fit(&rs);
    let log_rs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let (slope_pow, rel_pow) = fit(&log_rs);
    if rel_exp <= rel_pow {
        Ok(DecayFit {
            model: DecayModel::Exponential,
            rate_or_exponent: -slope_exp,
            goodness: 1.0 - rel_exp,
        })
    } else {
        Ok(DecayFit {
            model: DecayModel::PowerLaw,
            rate_or_exponent: -slope_pow,
            goodness: 1.0 - rel_pow,
        })
    }
}

/// The ten Altland-Zirnbauer classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AzClass {
    A,
    AIII,
    AI,
    BDI,
    D,
    DIII,
    AII,
    CII,
    C,
    CI,
}

impl AzClass {
    pub const ALL: [AzClass; 10] = [
        AzClass::A,
        AzClass::AIII,
        AzClass::AI,
        AzClass::BDI,
        AzClass::D,
        AzClass::DIII,
        AzClass::AII,
        AzClass::CII,
        AzClass::C,
        AzClass::CI,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            AzClass::A => "A",
            AzClass::AIII => "AIII",
            AzClass::AI => "AI",
            AzClass::BDI => "BDI",
            AzClass::D => "D",
            AzClass::DIII => "DIII",
            AzClass::AII => "AII",
            AzClass::CII => "CII",
            AzClass::C => "C",
            AzClass::CI => "CI",
        }
    }
}

impl std::str::FromStr for AzClass {
    type Err = SusyError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(AzClass::A),
            "AIII" => Ok(AzClass::AIII),
            "AI" => Ok(AzClass::AI),
            "BDI" => Ok(AzClass::BDI),
            "D" => Ok(AzClass::D),
            "DIII" => Ok(AzClass::DIII),
            "AII" => Ok(AzClass::AII),
            "CII" => Ok(AzClass::CII),
            "C" => Ok(AzClass::C),
            "CI" => Ok(AzClass::CI),
            other => Err(SusyError::UnsupportedClass(other.to_string())),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintViolation {
    pub name: &'static str,
    pub violation: f64,
}

fn pauli_y() -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 1)] = C64::new(0.0, -1.0);
    m[(1, 0)] = C64::new(0.0, 1.0);
    m
}

fn pauli_z() -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = C64::new(1.0, 0.0);
    m[(1, 1)] = C64::new(-1.0, 0.0);
    m
}

fn pauli_x() -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 1)] = C64::new(1.0, 0.0);
    m[(1, 0)] = C64::new(1.0, 0.0);
    m
}

fn sandwich_violation(field: &BlochField, op: &CMatrix) -> f64 {
    (0..field.num_points())
        .map(|i| {
            let lhs = op.mul(&field.at(i).conj()).mul(op);
            lhs.max_diff(field.at_neg(i))
        })
        .fold(0.0, f64::max)
}

fn commutator_violation(field: &BlochField, op: &CMatrix) -> f64 {
    (0..field.num_points())
        .map(|i| {
            let m = field.at(i);
            op.mul(m).max_diff(&m.mul(op))
        })
        .fold(0.0, f64::max)
}

/// Per-constraint violation report for a symmetry class.
///
/// Internal-state layouts follow the constructions: AIII/AII/DIII carry a
/// spin-1/2 factor (n = 2 m), CII carries an extra non-spin doublet
/// (n = 4 m). Classes C and CI have no construction here and are rejected.
pub fn symmetry_check(class: AzClass, field: &BlochField) -> Result<Vec<ConstraintViolation>> {
    let n = field.n;
    let mut out = vec![ConstraintViolation {
        name: "intrinsic_phs",
        violation: check_phs_supercharge(field),
    }];
    match class {
        AzClass::D => {}
        AzClass::A => {
            out.push(ConstraintViolation {
                name: "u1_charge",
                violation: commutator_violation(field, &CMatrix::z_matrix(n)),
            });
        }
        AzClass::BDI => {
            let trs = (0..field.num_points())
                .map(|i| field.at(i).conj().max_diff(field.at_neg(i)))
                .fold(0.0, f64::max);
            out.push(ConstraintViolation {
                name: "spinless_trs",
                violation: trs,
            });
        }
        AzClass::AI => {
            let trs = (0..field.num_points())
                .map(|i| field.at(i).conj().max_diff(field.at_neg(i)))
                .fold(0.0, f64::max);
            out.push(ConstraintViolation {
                name: "spinless_trs",
                violation: trs,
            });
            out.push(ConstraintViolation {
                name: "u1_charge",
                violation: commutator_violation(field, &CMatrix::z_matrix(n)),
            });
        }
        AzClass::AIII => {
            if n % 2 != 0 {
                return Err(SusyError::DimensionMismatch(
                    "class AIII needs a spin-1/2 factor (even n)".into(),
                ));
            }
            let rest = CMatrix::identity(n / 2);
            let s0 = CMatrix::identity(2);
            let trs_op = s0.kron(&pauli_y().kron(&rest));
            out.push(ConstraintViolation {
                name: "spin_trs",
                violation: sandwich_violation(field, &trs_op),
            });
            let rot_op = pauli_z().kron(&pauli_z().kron(&rest));
            out.push(ConstraintViolation {
                name: "u1_spin_rotation",
                violation: commutator_violation(field, &rot_op),
            });
        }
        AzClass::DIII | AzClass::AII => {
            if n % 2 != 0 {
                return Err(SusyError::DimensionMismatch(
                    "classes DIII/AII need a spin-1/2 factor (even n)".into(),
                ));
            }
            let rest = CMatrix::identity(n / 2);
            let trs_op = CMatrix::identity(2).kron(&pauli_y().kron(&rest));
            out.push(ConstraintViolation {
                name: "spin_trs",
                violation: sandwich_violation(field, &trs_op),
            });
            if class == AzClass::AII {
                out.push(ConstraintViolation {
                    name: "u1_charge",
                    violation: commutator_violation(field, &CMatrix::z_matrix(n)),
                });
            }
        }
        AzClass::CII => {
            if n % 4 != 0 {
                return Err(SusyError::DimensionMismatch(
                    "class CII needs doublet x spin factors (n divisible by 4)".into(),
                ));
            }
            let rest = CMatrix::identity(n / 4);
            let s0 = CMatrix::identity(2);
            let trs_op = s0.kron(&s0.kron(&pauli_y().kron(&rest)));
            out.push(ConstraintViolation {
                name: "spin_trs",
                violation: sandwich_violation(field, &trs_op),
            });
            let spin_rest = CMatrix::identity(n / 2);
            let su2_x = pauli_z().kron(&pauli_x().kron(&spin_rest));
            let su2_z = pauli_z().kron(&pauli_z().kron(&spin_rest));
            out.push(ConstraintViolation {
                name: "su2_x",
                violation: commutator_violation(field, &su2_x),
            });
            out.push(ConstraintViolation {
                name: "su2_z",
                violation: commutator_violation(field, &su2_z),
            });
        }
        AzClass::C | AzClass::CI => {
            return Err(SusyError::UnsupportedClass(format!(
                "no supercharge constraint set implemented for class {}",
                class.label()
            )));
        }
    }
    Ok(out)
}
