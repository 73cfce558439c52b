//! Numeric topological invariants (lattice Chern number, winding number and
//! its parity) and the classification table of SUSY-realizability per
//! Altland-Zirnbauer class and dimension.

use crate::bloch::{AzClass, BlochField};
use crate::error::{Result, SusyError};
use crate::numerics::{eigh, CMatrix, C64, C_ONE, C_ZERO};
use crate::supercharge::Supercharge;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InvariantName {
    Chern,
    Winding,
    WindingParity,
}

#[derive(Clone, Debug)]
pub struct InvariantResult {
    pub name: InvariantName,
    pub value: i64,
    /// Distance of the raw numeric from the nearest integer.
    pub residual: f64,
}

/// Lattice Chern number of the negative-energy band(s) of a 2D gapped BdG
/// field, from plaquette products of link overlaps (gauge invariant, integer
/// on coarse grids).
pub fn chern_number(h_f: &BlochField, gap_floor: f64) -> Result<InvariantResult> {
    let grid = h_f.grid();
    if grid.dim() != 2 {
        return Err(SusyError::DimensionMismatch(
            "chern_number needs a 2D field".into(),
        ));
    }
    let n = h_f.n;
    let pts = grid.num_points();
    // Lower-band frames.
    let mut frames: Vec<CMatrix> = Vec::with_capacity(pts);
    for i in 0..pts {
        let e = eigh(h_f.at(i))?;
        let min_abs = e
            .eigenvalues
            .iter()
            .map(|w| w.abs())
            .fold(f64::INFINITY, f64::min);
        if min_abs <= gap_floor {
            return Err(SusyError::GapClosed {
                k_index: i,
                value: min_abs,
            });
        }
        frames.push(e.eigenvectors.block(0, 0, 2 * n, n));
    }
    let link = |a: usize, b: usize| -> C64 {
        let overlap = frames[a].dagger().mul(&frames[b]);
        det(&overlap)
    };
    let mut total = 0.0;
    for i in 0..pts {
        let ix = grid.shift_index(i, 0, 1);
        let iy = grid.shift_index(i, 1, 1);
        let ixy = grid.shift_index(ix, 1, 1);
        let u1 = link(i, ix);
        let u2 = link(ix, ixy);
        let u3 = link(ixy, iy);
        let u4 = link(iy, i);
        let prod = u1 * u2 * u3 * u4;
        total += prod.arg();
    }
    let raw = total / (2.0 * std::f64::consts::PI);
    let value = raw.round();
    let residual = (raw - value).abs();
    if residual >= 0.01 {
        return Err(SusyError::NoConvergence(pts));
    }
    Ok(InvariantResult {
        name: InvariantName::Chern,
        value: value as i64,
        residual,
    })
}

fn det(m: &CMatrix) -> C64 {
    // LU with partial pivoting; small matrices only.
    let n = m.rows;
    let mut a = m.clone();
    let mut det = C_ONE;
    for col in 0..n {
        let mut pmax = col;
        let mut vmax = a[(col, col)].norm();
        for r in col + 1..n {
            if a[(r, col)].norm() > vmax {
                vmax = a[(r, col)].norm();
                pmax = r;
            }
        }
        if vmax < 1e-300 {
            return C_ZERO;
        }
        if pmax != col {
            for j in 0..n {
                let t = a[(col, j)];
                a[(col, j)] = a[(pmax, j)];
                a[(pmax, j)] = t;
            }
            det = -det;
        }
        det *= a[(col, col)];
        let d = a[(col, col)];
        for r in col + 1..n {
            let f = a[(r, col)] / d;
            for j in col..n {
                let v = a[(col, j)];
                a[(r, j)] = a[(r, j)] - f * v;
            }
        }
    }
    det
}

/// Winding of arg det q(k) around a 1D Brillouin zone, by phase unwrapping
/// between adjacent grid points.
pub fn winding_number(q: &BlochField) -> Result<InvariantResult> {
    let grid = q.grid();
    if grid.dim() != 1 {
        return Err(SusyError::DimensionMismatch(
            "winding_number needs a 1D field".into(),
        ));
    }
    let pts = grid.num_points();
    let dets: Vec<C64> = (0..pts).map(|i| det(q.at(i))).collect();
    if dets.iter().any(|d| d.norm() < 1e-12) {
        return Err(SusyError::GapClosed {
            k_index: 0,
            value: 0.0,
        });
    }
    let mut total = 0.0;
    for i in 0..pts {
        let j = (i + 1) % pts;
        let step = (dets[j] / dets[i]).arg();
        total += step;
    }
    let raw = total / (2.0 * std::f64::consts::PI);
    let value = raw.round();
    let residual = (raw - value).abs();
    if residual >= 0.01 {
        return Err(SusyError::NoConvergence(pts));
    }
    Ok(InvariantResult {
        name: InvariantName::Winding,
        value: value as i64,
        residual,
    })
}

#[derive(Clone, Debug)]
pub struct MirrorParity {
    pub parity: u8,
    pub is_mirror_symmetric: bool,
    pub winding: i64,
}

/// Winding parity of det q together with a mirror-symmetry predicate
/// (q(-k) = q(k), i.e. reflection-even real-space couplings).
pub fn winding_parity_mirror_test(q: &Supercharge) -> Result<MirrorParity> {
    let field = &q.field;
    let w = winding_number(field)?;
    let scale = field.inner.max_field_norm().max(1.0);
    let mirror_dev = (0..field.num_points())
        .map(|i| field.at(i).max_diff(field.at_neg(i)))
        .fold(0.0, f64::max);
    Ok(MirrorParity {
        parity: (w.value.rem_euclid(2)) as u8,
        is_mirror_symmetric: mirror_dev < 1e-10 * scale,
        winding: w.value,
    })
}

/// Topological classification group of one table cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassGroup {
    Zero,
    Z,
    Z2,
    TwoZ,
}

impl ClassGroup {
    pub fn label(&self) -> &'static str {
        match self {
            ClassGroup::Zero => "0",
            ClassGroup::Z => "Z",
            ClassGroup::Z2 => "Z2",
            ClassGroup::TwoZ => "2Z",
        }
    }
}

/// How the phases of a cell can be generated by a supercharge:
/// local and symmetric, local but necessarily asymmetric, necessarily
/// nonlocal, or local-and-symmetric only on the 2Z subgroup.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SusyCategory {
    LS,
    LAS,
    NL,
    LS2Z,
}

impl SusyCategory {
    pub fn label(&self) -> &'static str {
        match self {
            SusyCategory::LS => "LS",
            SusyCategory::LAS => "LAS",
            SusyCategory::NL => "NL",
            SusyCategory::LS2Z => "LS2Z",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClassificationEntry {
    pub az_class: AzClass,
    pub dimension: u8,
    pub group: ClassGroup,
    pub category: SusyCategory,
}

use ClassGroup::{TwoZ, Zero, Z, Z2};
use SusyCategory::{LAS, LS, LS2Z, NL};

/// The classification table, rows in AZ order (A, AIII, AI, BDI, D, DIII,
/// AII, CII, C, CI) and columns d = 0..7. Trivial cells are marked LS: the
/// trivial phase always admits a local symmetric supercharge.
const TABLE: [[(ClassGroup, SusyCategory); 8]; 10] = [
    // A
    [
        (Z, LAS),
        (Zero, LS),
        (Z, NL),
        (Zero, LS),
        (Z, LAS),
        (Zero, LS),
        (Z, NL),
        (Zero, LS),
    ],
    // AIII
    [
        (Zero, LS),
        (Z, LS),
        (Zero, LS),
        (Z, LS),
        (Zero, LS),
        (Z, LS),
        (Zero, LS),
        (Z, LS),
    ],
    // AI
    [
        (Z, LAS),
        (Zero, LS),
        (Zero, LS),
        (Zero, LS),
        (TwoZ, LAS),
        (Zero, LS),
        (Z2, LAS),
        (Z2, LAS),
    ],
    // BDI
    [
        (Z2, LS),
        (Z, LS),
        (Zero, LS),
        (Zero, LS),
        (Zero, LS),
        (TwoZ, LS),
        (Zero, LS),
        (Z2, LS),
    ],
    // D
    [
        (Z2, LS),
        (Z2, LS),
        (Z, NL),
        (Zero, LS),
        (Zero, LS),
        (Zero, LS),
        (TwoZ, NL),
        (Zero, LS),
    ],
    // DIII
    [
        (Zero, LS),
        (Z2, LS),
        (Z2, LAS),
        (Z, LS2Z),
        (Zero, LS),
        (Zero, LS),
        (Zero, LS),
        (TwoZ, LS),
    ],
    // AII
    [
        (TwoZ, LAS),
        (Zero, LS),
        (Z2, LAS),
        (Z2, LAS),
        (Z, LAS),
        (Zero, LS),
        (Zero, LS),
        (Zero, LS),
    ],
    // CII
    [
        (Zero, LS),
        (TwoZ, LS),
        (Zero, LS),
        (Z2, LS),
        (Z2, LS),
        (Z, LS),
        (Zero, LS),
        (Zero, LS),
    ],
    // C
    [
        (Zero, LS),
        (Zero, LS),
        (TwoZ, NL),
        (Zero, LS),
        (Z2, LS),
        (Z2, LS),
        (Z, NL),
        (Zero, LS),
    ],
    // CI
    [
        (Zero, LS),
        (Zero, LS),
        (Zero, LS),
        (TwoZ, LS),
        (Zero, LS),
        (Z2, LS),
        (Z2, LAS),
        (Z, LS2Z),
    ],
];

fn class_row(class: AzClass) -> usize {
    match class {
        AzClass::A => 0,
        AzClass::AIII => 1,
        AzClass::AI => 2,
        AzClass::BDI => 3,
        AzClass::D => 4,
        AzClass::DIII => 5,
        AzClass::AII => 6,
        AzClass::CII => 7,
        AzClass::C => 8,
        AzClass::CI => 9,
    }
}

/// Table lookup: class and dimension (mod 8) to group and SUSY category.
pub fn classify(class: AzClass, dimension: u8) -> ClassificationEntry {
    let d = (dimension % 8) as usize;
    let (group, category) = TABLE[class_row(class)][d];
    ClassificationEntry {
        az_class: class,
        dimension: dimension % 8,
        group,
        category,
    }
}

pub fn all_entries() -> Vec<ClassificationEntry> {
    let mut out = Vec::with_capacity(80);
    for class in AzClass::ALL {
        for d in 0..8 {
            out.push(classify(class, d));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{FieldKind, MomentumGrid};
    use crate::models;
    use crate::numerics::C64;

    #[test]
    fn table_has_80_entries_and_spot_checks() {
        let entries = all_entries();
        assert_eq!(entries.len(), 80);
        let d2 = classify(AzClass::D, 2);
        assert_eq!(d2.group, ClassGroup::Z);
        assert_eq!(d2.category, SusyCategory::NL);
        let bdi1 = classify(AzClass::BDI, 1);
        assert_eq!(bdi1.group, ClassGroup::Z);
        assert_eq!(bdi1.category, SusyCategory::LS);
        let diii3 = classify(AzClass::DIII, 3);
        assert_eq!(diii3.group, ClassGroup::Z);
        assert_eq!(diii3.category, SusyCategory::LS2Z);
        // Dimensions reduce mod 8.
        assert_eq!(classify(AzClass::D, 10).group, ClassGroup::Z);
    }

    #[test]
    fn winding_single_harmonic_and_constant() {
        // Flat-band Kitaev supercharge: det q = e^{-ik}, winding -1 (odd).
        let model = models::kitaev_chain(0.0, 0.5, 32).unwrap();
        let w = winding_number(&model.q.field).unwrap();
        assert_eq!(w.value.abs(), 1);
        assert!(w.residual < 1e-10);

        let g = MomentumGrid::chain(16).unwrap();
        let c =
            BlochField::from_fn(g, 1, FieldKind::Supercharge, |_| CMatrix::x_matrix(1)).unwrap();
        let w = winding_number(&c).unwrap();
        assert_eq!(w.value, 0);
    }

    #[test]
    fn flat_field_chern_zero() {
        let g = MomentumGrid::new(&[8, 8]).unwrap();
        let h = BlochField::from_fn(g, 1, FieldKind::BdgFermion, |_| CMatrix::z_matrix(1)).unwrap();
        let c = chern_number(&h, 1e-10).unwrap();
        assert_eq!(c.value, 0);
        assert!(c.residual < 1e-12);
    }

    #[test]
    fn chern_additivity_on_direct_sums() {
        // C(h1 + h2 block sum) = C(h1) + C(h2): topological chiral SC plus a
        // trivial flat band.
        let g = MomentumGrid::new(&[32, 32]).unwrap();
        let chiral = models::chiral_sc(1.0, 32, 32).unwrap();
        let summed = BlochField::from_fn(g, 2, FieldKind::BdgFermion, |k| {
            let kx = k[0];
            let ky = k[1];
            let dz = 1.0 - kx.cos() - ky.cos();
            let mut m = CMatrix::zeros(4, 4);
            // Doubled-basis layout [a1 a2 | c1 c2]: chiral block on modes 1,
            // flat sigma_z on modes 2.
            m[(0, 0)] = C64::new(dz, 0.0);
            m[(2, 2)] = C64::new(-dz, 0.0);
            m[(0, 2)] = C64::new(kx.sin(), -ky.sin());
            m[(2, 0)] = C64::new(kx.sin(), ky.sin());
            m[(1, 1)] = C64::new(1.0, 0.0);
            m[(3, 3)] = C64::new(-1.0, 0.0);
            m
        })
        .unwrap();
        let c_sum = chern_number(&summed, 1e-10).unwrap();
        let c_chiral = chern_number(&chiral.h_f, 1e-10).unwrap();
        assert_eq!(c_sum.value, c_chiral.value);
    }

    #[test]
    fn det_matches_2x2_formula() {
        let m = CMatrix::from_fn(2, 2, |i, j| {
            C64::new((i + 2 * j) as f64, (i * j) as f64 + 0.3)
        });
        let direct = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        assert!((det(&m) - direct).norm() < 1e-12);
    }
}
