//! Constructions of supercharges q(k) for target fermionic BdG Hamiltonians,
//! together with gapped-homotopy transport and the gauge transformations that
//! push a SUSY pair into number-conserving form on either side.

use rayon::prelude::*;

use crate::bloch::{AzClass, BlochField, FieldKind, MatrixField, MomentumGrid};
use crate::error::{Result, SusyError};
use crate::numerics::{self, eigh, inverse, mat_func, sigma_min, CMatrix, SpectralFn, C64, C_ONE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Locality {
    Strict,
    Analytic,
    Nonlocal,
}

/// A Bloch supercharge: intrinsic particle-hole constraint verified, gap
/// condition (smallest singular value over the zone) recorded.
#[derive(Clone, Debug)]
pub struct Supercharge {
    pub field: BlochField,
    pub class: Option<AzClass>,
    pub locality: Locality,
    min_sigma: f64,
}

impl Supercharge {
    pub fn new(field: BlochField, class: Option<AzClass>, locality: Locality) -> Result<Self> {
        if field.kind != FieldKind::Supercharge {
            return Err(SusyError::DimensionMismatch(
                "field kind must be supercharge".into(),
            ));
        }
        let scale = field.inner.max_field_norm().max(1.0);
        let phs = crate::bloch::check_phs_supercharge(&field);
        if phs > 1e-10 * scale {
            return Err(SusyError::NotHermitian(phs));
        }
        let mut min_sigma = f64::INFINITY;
        let mut min_k = 0;
        for i in 0..field.num_points() {
            let s = sigma_min(field.at(i));
            if s < min_sigma {
                min_sigma = s;
                min_k = i;
            }
        }
        if !(min_sigma > 1e-12 * scale) {
            return Err(SusyError::GapClosed {
                k_index: min_k,
                value: min_sigma,
            });
        }
        Ok(Supercharge {
            field,
            class,
            locality,
            min_sigma,
        })
    }

    pub fn min_sigma(&self) -> f64 {
        self.min_sigma
    }

    pub fn grid(&self) -> &MomentumGrid {
        self.field.grid()
    }

    pub fn n(&self) -> usize {
        self.field.n
    }

    /// h_f(k) = q(k) Z q(k)†.
    pub fn generated_hf(&self) -> BlochField {
        let z = CMatrix::z_matrix(self.n());
        self.field
            .map(FieldKind::BdgFermion, |_, q| q.mul(&z).mul(&q.dagger()))
    }

    /// h_b(k) = q(k)† q(k).
    pub fn generated_hb(&self) -> BlochField {
        self.field
            .map(FieldKind::BdgBoson, |_, q| q.dagger().mul(q))
    }
}

/// Max over k of the reconstruction defect || q Z q† - h_f ||_max.
pub fn reconstruction_error(q: &Supercharge, h_f: &BlochField) -> f64 {
    let gen = q.generated_hf();
    (0..h_f.num_points())
        .map(|i| gen.at(i).max_diff(h_f.at(i)))
        .fold(0.0, f64::max)
}

/// Particle-hole-symmetric eigenframe of a gapped fermionic BdG field:
/// columns [u_{k,1..n} | X u*_{-k,1..n}], so that X V(k)* X = V(-k) holds
/// exactly by construction.
#[derive(Clone, Debug)]
pub struct PhsFrame {
    pub grid: MomentumGrid,
    pub n: usize,
    pub v: Vec<CMatrix>,
    /// Positive one-particle energies per k, ascending.
    pub lambda_plus: Vec<Vec<f64>>,
}

impl PhsFrame {
    pub fn v_at(&self, flat: usize) -> &CMatrix {
        &self.v[flat]
    }
}

pub fn phs_frame(h_f: &BlochField, gap_floor: f64) -> Result<PhsFrame> {
    if h_f.kind != FieldKind::BdgFermion {
        return Err(SusyError::DimensionMismatch(
            "phs_frame expects a fermionic BdG field".into(),
        ));
    }
    let n = h_f.n;
    let grid = h_f.grid().clone();
    let pts = grid.num_points();

    let decomps: Vec<Result<(Vec<f64>, CMatrix)>> = (0..pts)
        .into_par_iter()
        .map(|i| {
            let e = eigh(h_f.at(i))?;
            Ok((e.eigenvalues, e.eigenvectors))
        })
        .collect();
    let mut pos_vecs: Vec<CMatrix> = Vec::with_capacity(pts);
    let mut lambda_plus: Vec<Vec<f64>> = Vec::with_capacity(pts);
    for (i, d) in decomps.into_iter().enumerate() {
        let (w, v) = d?;
        let min_abs = w.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        if min_abs <= gap_floor {
            return Err(SusyError::GapClosed {
                k_index: i,
                value: min_abs,
            });
        }
        // Gapped PHS spectrum: first n negative, last n positive.
        if w[n - 1] >= 0.0 || w[n] <= 0.0 {
            return Err(SusyError::GapClosed {
                k_index: i,
                value: min_abs,
            });
        }
        lambda_plus.push(w[n..].to_vec());
        pos_vecs.push(v.block(0, n, 2 * n, n));
    }

    let x = CMatrix::x_matrix(n);
    let mut frames = Vec::with_capacity(pts);
    for i in 0..pts {
        let neg = grid.neg_index(i);
        let hole = x.mul(&pos_vecs[neg].conj());
        let mut v = CMatrix::zeros(2 * n, 2 * n);
        v.set_block(0, 0, &pos_vecs[i]);
        v.set_block(0, n, &hole);
        frames.push(v);
    }
    Ok(PhsFrame {
        grid,
        n,
        v: frames,
        lambda_plus,
    })
}

/// q(k) = V(k) |Lambda(k)|^{1/2} from the PHS frame. Works for every gapped
/// target but carries no smoothness guarantee, hence the nonlocal tag.
pub fn from_hf_general(h_f: &BlochField, gap_floor: f64) -> Result<Supercharge> {
    let frame = phs_frame(h_f, gap_floor)?;
    let n = frame.n;
    let grid = frame.grid.clone();
    let mut values = Vec::with_capacity(grid.num_points());
    for i in 0..grid.num_points() {
        let neg = grid.neg_index(i);
        let v = &frame.v[i];
        let mut q = v.clone();
        for col in 0..n {
            let s = frame.lambda_plus[i][col].sqrt();
            for row in 0..2 * n {
                q[(row, col)] = v[(row, col)] * s;
            }
        }
        for col in 0..n {
            let s = frame.lambda_plus[neg][col].sqrt();
            for row in 0..2 * n {
                q[(row, n + col)] = v[(row, n + col)] * s;
            }
        }
        values.push(q);
    }
    let inner = MatrixField::from_values(grid, 2 * n, values)?;
    let field = BlochField::from_inner(inner, FieldKind::Supercharge)?;
    Supercharge::new(field, None, Locality::Nonlocal)
}

/// Closed-form supercharge for a two-band Hamiltonian sum_mu d_mu sigma_mu.
/// Where d_x^2 + d_y^2 vanishes, the undetermined phase takes the unique
/// particle-hole-compatible limit.
pub fn two_band_closed_form(
    grid: MomentumGrid,
    d: impl Fn(&[f64]) -> [f64; 3] + Sync,
    gap_floor: f64,
) -> Result<Supercharge> {
    let pts = grid.num_points();
    // Parity preconditions: d_{x,y} odd, d_z even.
    let mut max_parity: f64 = 0.0;
    for i in 0..pts {
        let k = grid.k_at(i);
        let kn = grid.k_at(grid.neg_index(i));
        let dv = d(&k);
        let dn = d(&kn);
        max_parity = max_parity
            .max((dv[0] + dn[0]).abs())
            .max((dv[1] + dn[1]).abs())
            .max((dv[2] - dn[2]).abs());
    }
    if max_parity > 1e-10 {
        return Err(SusyError::DimensionMismatch(format!(
            "two-band d-vector parities violated by {max_parity:.3e}"
        )));
    }
    // Gap precondition |d| > gap_floor, and a scan for a global band sign:
    // when d_z > 0 everywhere there is a smooth column gauge of the closed
    // form with no phase vortex, and the supercharge is short-ranged.
    let mut dz_min = f64::INFINITY;
    let mut dz_max = f64::NEG_INFINITY;
    for i in 0..grid.num_points() {
        let k = grid.k_at(i);
        let [dx, dy, dz] = d(&k);
        let norm = (dx * dx + dy * dy + dz * dz).sqrt();
        if norm <= gap_floor {
            return Err(SusyError::GapClosed {
                k_index: i,
                value: norm,
            });
        }
        dz_min = dz_min.min(dz);
        dz_max = dz_max.max(dz);
    }
    let smooth_gauge = dz_min > 0.0;
    let field = BlochField::from_fn(grid, 1, FieldKind::Supercharge, |k| {
        let [dx, dy, dz] = d(k);
        let norm = (dx * dx + dy * dy + dz * dz).sqrt();
        let rho = (dx * dx + dy * dy).sqrt();
        let a = (norm + dz).max(0.0).sqrt();
        let b = (norm - dz).max(0.0).sqrt();
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let mut q = CMatrix::zeros(2, 2);
        if smooth_gauge {
            // q = [[a, -(d_x - i d_y)/a], [(d_x + i d_y)/a, a]] / sqrt(2).
            let off = C64::new(dx, dy) / a;
            q[(0, 0)] = C64::new(a * inv, 0.0);
            q[(0, 1)] = -off.conj() * inv;
            q[(1, 0)] = off * inv;
            q[(1, 1)] = C64::new(a * inv, 0.0);
        } else if rho > 1e-14 * norm.max(1.0) {
            let phase = C64::new(dx / rho, dy / rho);
            q[(0, 0)] = phase.conj() * a * inv;
            q[(0, 1)] = C64::new(b * inv, 0.0);
            q[(1, 0)] = C64::new(b * inv, 0.0);
            q[(1, 1)] = -phase * a * inv;
        } else {
            // The phase is undefined where d_x = d_y = 0, and for d_z > 0 no
            // value of it satisfies the intrinsic constraint there. Use the
            // particle-hole-compatible limit [[a, b], [b, a]]/sqrt(2), which
            // still reproduces d_z sigma_z.
            q[(0, 0)] = C64::new(a * inv, 0.0);
            q[(0, 1)] = C64::new(b * inv, 0.0);
            q[(1, 0)] = C64::new(b * inv, 0.0);
            q[(1, 1)] = C64::new(a * inv, 0.0);
        }
        q
    })?;
    // The vortex branch is smooth when d_z stays negative, and the
    // smooth gauge handles globally positive d_z; only a sign-changing d_z
    // forces nonlocality.
    let tag = if smooth_gauge || dz_max < 0.0 {
        Locality::Analytic
    } else {
        Locality::Nonlocal
    };
    Supercharge::new(field, None, tag)
}

fn pauli_y_block(m: usize) -> CMatrix {
    let mut sy = CMatrix::zeros(2, 2);
    sy[(0, 1)] = C64::new(0.0, -1.0);
    sy[(1, 0)] = C64::new(0.0, 1.0);
    sy.kron(&CMatrix::identity(m))
}

fn check_fields_match(a: &MatrixField, b: &MatrixField) -> Result<()> {
    if a.grid != b.grid || a.dim != b.dim {
        return Err(SusyError::DimensionMismatch(
            "block fields must share grid and size".into(),
        ));
    }
    Ok(())
}

fn hermitian_field_check(f: &MatrixField, name: &str) -> Result<()> {
    let scale = f.max_field_norm().max(1.0);
    for i in 0..f.grid.num_points() {
        let dev = f.at(i).hermitian_deviation();
        if dev > 1e-10 * scale {
            return Err(SusyError::DimensionMismatch(format!(
                "{name} block must be Hermitian (deviation {dev:.3e})"
            )));
        }
    }
    Ok(())
}

fn reality_parity_check(f: &MatrixField, sign: f64, name: &str) -> Result<()> {
    // || f(k)* - sign * f(-k) || over the zone.
    let scale = f.max_field_norm().max(1.0);
    for i in 0..f.grid.num_points() {
        let dev = f
            .at(i)
            .conj()
            .max_diff(&f.at_neg(i).scale(C64::new(sign, 0.0)));
        if dev > 1e-10 * scale {
            return Err(SusyError::DimensionMismatch(format!(
                "{name} block reality constraint violated by {dev:.3e}"
            )));
        }
    }
    Ok(())
}

/// Nambu assembly from four equal blocks.
fn assemble_nambu(a11: &CMatrix, a12: &CMatrix, a21: &CMatrix, a22: &CMatrix) -> CMatrix {
    let m = a11.rows;
    let mut out = CMatrix::zeros(2 * m, 2 * m);
    out.set_block(0, 0, a11);
    out.set_block(0, m, a12);
    out.set_block(m, 0, a21);
    out.set_block(m, m, a22);
    out
}

/// Class BDI (spinless TRS): q_+ = 1, q_- = h_z - i h_y. Strictly local
/// whenever the input blocks are.
pub fn bdi_supercharge(h_y: &MatrixField, h_z: &MatrixField) -> Result<Supercharge> {
    check_fields_match(h_y, h_z)?;
    hermitian_field_check(h_y, "h_y")?;
    hermitian_field_check(h_z, "h_z")?;
    reality_parity_check(h_y, -1.0, "h_y")?;
    reality_parity_check(h_z, 1.0, "h_z")?;
    let m = h_y.dim;
    let grid = h_y.grid.clone();
    let values: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            let qp = CMatrix::identity(m);
            let qm = h_z.at(i).sub(&h_y.at(i).scale(C64::new(0.0, 1.0)));
            let half = C64::new(0.5, 0.0);
            let sum = qp.add(&qm).scale(half);
            let dif = qp.sub(&qm).scale(half);
            assemble_nambu(&sum, &dif, &dif, &sum)
        })
        .collect();
    let inner = MatrixField::from_values(grid, 2 * m, values)?;
    let field = BlochField::from_inner(inner, FieldKind::Supercharge)?;
    Supercharge::new(field, Some(AzClass::BDI), Locality::Strict)
}

/// Target Hamiltonian for the BDI blocks: sigma_y x h_y + sigma_z x h_z on
/// the Nambu grading.
pub fn bdi_target_hf(h_y: &MatrixField, h_z: &MatrixField) -> Result<BlochField> {
    check_fields_match(h_y, h_z)?;
    let m = h_y.dim;
    let grid = h_y.grid.clone();
    let values: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            let hy = h_y.at(i);
            let hz = h_z.at(i);
            let mi = C64::new(0.0, -1.0);
            let pi = C64::new(0.0, 1.0);
            assemble_nambu(hz, &hy.scale(mi), &hy.scale(pi), &hz.scale(-C_ONE))
        })
        .collect();
    let inner = MatrixField::from_values(grid, 2 * m, values)?;
    BlochField::from_inner(inner, FieldKind::BdgFermion)
}

fn assemble_4blocks(rows: [[&CMatrix; 4]; 4]) -> CMatrix {
    let m = rows[0][0].rows;
    let mut out = CMatrix::zeros(4 * m, 4 * m);
    for (bi, row) in rows.iter().enumerate() {
        for (bj, blk) in row.iter().enumerate() {
            out.set_block(bi * m, bj * m, blk);
        }
    }
    out
}

/// Class AIII (spin-1/2 TRS + U(1) spin rotation):
/// q_1 = (h_1 - i h_2 + 1)/2, q_2 = i (h_1 - i h_2 - 1)/2.
pub fn aiii_supercharge(h_1: &MatrixField, h_2: &MatrixField) -> Result<Supercharge> {
    check_fields_match(h_1, h_2)?;
    hermitian_field_check(h_1, "h_1")?;
    hermitian_field_check(h_2, "h_2")?;
    let m = h_1.dim;
    let grid = h_1.grid.clone();
    let half = C64::new(0.5, 0.0);
    let ihalf = C64::new(0.0, 0.5);
    let one = CMatrix::identity(m);
    let zero = CMatrix::zeros(m, m);
    let q1: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            let w = h_1.at(i).sub(&h_2.at(i).scale(C64::new(0.0, 1.0)));
            w.add(&one).scale(half)
        })
        .collect();
    let q2: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            let w = h_1.at(i).sub(&h_2.at(i).scale(C64::new(0.0, 1.0)));
            w.sub(&one).scale(ihalf)
        })
        .collect();
    let values: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            let neg = grid.neg_index(i);
            let q1k = &q1[i];
            let q2k = &q2[i];
            let q1n = q1[neg].conj();
            let q2n = q2[neg].conj();
            assemble_4blocks([
                [q1k, &zero, &zero, q2k],
                [&zero, &q1n, &q2n.scale(-C_ONE), &zero],
                [&zero, &q2n, &q1n, &zero],
                [&q2k.scale(-C_ONE), &zero, &zero, q1k],
            ])
        })
        .collect();
    let inner = MatrixField::from_values(grid, 4 * m, values)?;
    let field = BlochField::from_inner(inner, FieldKind::Supercharge)?;
    Supercharge::new(field, Some(AzClass::AIII), Locality::Strict)
}

pub fn aiii_target_hf(h_1: &MatrixField, h_2: &MatrixField) -> Result<BlochField> {
    check_fields_match(h_1, h_2)?;
    let m = h_1.dim;
    let grid = h_1.grid.clone();
    let zero = CMatrix::zeros(m, m);
    let values: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            let neg = grid.neg_index(i);
            let h1k = h_1.at(i);
            let h2k = h_2.at(i);
            let h1n = h_1.at(neg).conj();
            let h2n = h_2.at(neg).conj();
            assemble_4blocks([
                [h1k, &zero, &zero, &h2k.scale(-C_ONE)],
                [&zero, &h1n, &h2n, &zero],
                [&zero, &h2n, &h1n.scale(-C_ONE), &zero],
                [&h2k.scale(-C_ONE), &zero, &zero, &h1k.scale(-C_ONE)],
            ])
        })
        .collect();
    let inner = MatrixField::from_values(grid, 4 * m, values)?;
    BlochField::from_inner(inner, FieldKind::BdgFermion)
}

/// Class CII (spin-1/2 TRS + non-spin SU(2)):
/// a = (A + B s + 1)/2, b = (A s + B - s)/2 with s = sigma_y x 1 on spin.
/// Assembled in the gauge that satisfies the intrinsic constraint.
pub fn cii_supercharge(a_blk: &MatrixField, b_blk: &MatrixField) -> Result<Supercharge> {
    check_fields_match(a_blk, b_blk)?;
    if a_blk.dim % 2 != 0 {
        return Err(SusyError::DimensionMismatch(
            "CII blocks need a spin-1/2 factor".into(),
        ));
    }
    hermitian_field_check(a_blk, "A")?;
    hermitian_field_check(b_blk, "B")?;
    reality_parity_check(b_blk, 1.0, "B")?;
    let m = a_blk.dim;
    let s = pauli_y_block(m / 2);
    // TRS preconditions: s A(k)* s = A(-k), s B(k)* s = -B(-k).
    let scale = a_blk.max_field_norm().max(b_blk.max_field_norm()).max(1.0);
    for i in 0..a_blk.grid.num_points() {
        let dev_a = s.mul(&a_blk.at(i).conj()).mul(&s).max_diff(a_blk.at_neg(i));
        let dev_b = s
            .mul(&b_blk.at(i).conj())
            .mul(&s)
            .max_diff(&b_blk.at_neg(i).scale(-C_ONE));
        if dev_a.max(dev_b) > 1e-10 * scale {
            return Err(SusyError::DimensionMismatch(format!(
                "CII blocks violate spin-1/2 TRS by {:.3e}",
                dev_a.max(dev_b)
            )));
        }
    }
    let grid = a_blk.grid.clone();
    let half = C64::new(0.5, 0.0);
    let a_small: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            a_blk
                .at(i)
                .add(&b_blk.at(i).mul(&s))
                .add(&CMatrix::identity(m))
                .scale(half)
        })
        .collect();
    let b_small: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| a_blk.at(i).mul(&s).add(b_blk.at(i)).sub(&s).scale(half))
        .collect();
    let sy = pauli_y_block(1); // 2x2 sigma_y on the non-spin doublet
    let s0 = CMatrix::identity(2);
    let values: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            let neg = grid.neg_index(i);
            let q11 = s0.kron(&a_small[i]);
            let q12 = sy.kron(&b_small[i]).scale(-C_ONE);
            let q21 = sy.kron(&b_small[neg].conj());
            let q22 = s0.kron(&a_small[neg].conj());
            assemble_nambu(&q11, &q12, &q21, &q22)
        })
        .collect();
    let inner = MatrixField::from_values(grid, 4 * m, values)?;
    let field = BlochField::from_inner(inner, FieldKind::Supercharge)?;
    Supercharge::new(field, Some(AzClass::CII), Locality::Strict)
}

pub fn cii_target_hf(a_blk: &MatrixField, b_blk: &MatrixField) -> Result<BlochField> {
    check_fields_match(a_blk, b_blk)?;
    let m = a_blk.dim;
    let sy = pauli_y_block(1);
    let s0 = CMatrix::identity(2);
    let grid = a_blk.grid.clone();
    let values: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            let neg = grid.neg_index(i);
            let h11 = s0.kron(a_blk.at(i));
            let h12 = sy.kron(b_blk.at(i));
            let h21 = sy.kron(&b_blk.at(neg).conj());
            let h22 = s0.kron(&a_blk.at(neg).conj()).scale(-C_ONE);
            assemble_nambu(&h11, &h12, &h21, &h22)
        })
        .collect();
    let inner = MatrixField::from_values(grid, 4 * m, values)?;
    BlochField::from_inner(inner, FieldKind::BdgFermion)
}

/// Class AI (spinless TRS, U(1) sacrificed): q_+ = h_I, q_- = 1 on the BDI
/// assembly.
pub fn ai_supercharge(h_i: &MatrixField) -> Result<Supercharge> {
    hermitian_field_check(h_i, "h_I")?;
    reality_parity_check(h_i, 1.0, "h_I")?;
    let m = h_i.dim;
    let grid = h_i.grid.clone();
    let values: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            let qp = h_i.at(i).clone();
            let qm = CMatrix::identity(m);
            let half = C64::new(0.5, 0.0);
            let sum = qp.add(&qm).scale(half);
            let dif = qp.sub(&qm).scale(half);
            assemble_nambu(&sum, &dif, &dif, &sum)
        })
        .collect();
    let inner = MatrixField::from_values(grid, 2 * m, values)?;
    let field = BlochField::from_inner(inner, FieldKind::Supercharge)?;
    Supercharge::new(field, Some(AzClass::AI), Locality::Strict)
}

pub fn ai_target_hf(h_i: &MatrixField) -> Result<BlochField> {
    let m = h_i.dim;
    let grid = h_i.grid.clone();
    let zero = CMatrix::zeros(m, m);
    let values: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| assemble_nambu(h_i.at(i), &zero, &zero, &h_i.at(i).scale(-C_ONE)))
        .collect();
    let inner = MatrixField::from_values(grid, 2 * m, values)?;
    BlochField::from_inner(inner, FieldKind::BdgFermion)
}

/// Class AII (spin-1/2 TRS, U(1) sacrificed). The DIII-form blocks are the
/// spectral split a = ((|h|+h)/2)^{1/2}, b = i ((|h|-h)/2)^{1/2} (sigma_y x 1):
/// exact reconstruction and TRS for every gapped input, strictly local
/// whenever the input band is flat (h^2 = 1), analytic otherwise.
pub fn aii_supercharge(h_ii: &MatrixField, gap_floor: f64) -> Result<Supercharge> {
    if h_ii.dim % 2 != 0 {
        return Err(SusyError::DimensionMismatch(
            "AII block needs a spin-1/2 factor".into(),
        ));
    }
    hermitian_field_check(h_ii, "h_II")?;
    let m = h_ii.dim;
    let s = pauli_y_block(m / 2);
    // Spin-1/2 TRS precondition: s h(k)* s = h(-k).
    let scale = h_ii.max_field_norm().max(1.0);
    for i in 0..h_ii.grid.num_points() {
        let dev = s.mul(&h_ii.at(i).conj()).mul(&s).max_diff(h_ii.at_neg(i));
        if dev > 1e-10 * scale {
            return Err(SusyError::DimensionMismatch(format!(
                "h_II violates spin-1/2 TRS by {dev:.3e}"
            )));
        }
    }
    let grid = h_ii.grid.clone();
    let mut a_blocks = Vec::with_capacity(grid.num_points());
    let mut b_blocks = Vec::with_capacity(grid.num_points());
    for i in 0..grid.num_points() {
        let h = h_ii.at(i);
        // Both spectral branches from one diagonalization, so the positive
        // and negative ranges stay exactly orthogonal.
        let e = eigh(h)?;
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
        let v = &e.eigenvectors;
        let spectral = |f: &dyn Fn(f64) -> f64| -> CMatrix {
            let mut scaled = v.clone();
            for col in 0..m {
                let fw = f(e.eigenvalues[col]);
                for row in 0..m {
                    scaled[(row, col)] = v[(row, col)] * fw;
                }
            }
            scaled.mul(&v.dagger())
        };
        let a = spectral(&|w| w.max(0.0).sqrt());
        let g = spectral(&|w| (-w).max(0.0).sqrt());
        let b = g.scale(C64::new(0.0, 1.0)).mul(&s);
        a_blocks.push(a);
        b_blocks.push(b);
    }
    let values: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            let neg = grid.neg_index(i);
            assemble_nambu(
                &a_blocks[i],
                &b_blocks[i],
                &b_blocks[neg].conj(),
                &a_blocks[neg].conj(),
            )
        })
        .collect();
    let inner = MatrixField::from_values(grid, 2 * m, values)?;
    let field = BlochField::from_inner(inner, FieldKind::Supercharge)?;
    let locality = if field.support_radius() <= aii_target_hf(h_ii)?.support_radius() {
        Locality::Strict
    } else {
        Locality::Analytic
    };
    Supercharge::new(field, Some(AzClass::AII), locality)
}

pub fn aii_target_hf(h_ii: &MatrixField) -> Result<BlochField> {
    let m = h_ii.dim;
    let grid = h_ii.grid.clone();
    let zero = CMatrix::zeros(m, m);
    let values: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            let neg = grid.neg_index(i);
            assemble_nambu(h_ii.at(i), &zero, &zero, &h_ii.at(neg).conj().scale(-C_ONE))
        })
        .collect();
    let inner = MatrixField::from_values(grid, 2 * m, values)?;
    BlochField::from_inner(inner, FieldKind::BdgFermion)
}

/// A gapped interpolation of fermionic BdG fields, given as closures over
/// (flat k index, lambda).
pub struct HomotopyPath<'a> {
    pub grid: MomentumGrid,
    pub n: usize,
    pub h: Box<dyn Fn(usize, f64) -> CMatrix + Sync + 'a>,
    pub dh: Box<dyn Fn(usize, f64) -> CMatrix + Sync + 'a>,
}

/// Transport q_0 along a gapped path of Hamiltonians by integrating
/// d v / d lambda = (dh) h^{-1} v / 2 per momentum, with q_1 = v_1 q_0.
pub fn homotopy_transport(
    q0: &Supercharge,
    path: &HomotopyPath,
    steps: usize,
    gap_floor: f64,
    ode_tol: f64,
) -> Result<Supercharge> {
    if path.grid != *q0.grid() || path.n != q0.n() {
        return Err(SusyError::DimensionMismatch(
            "path grid does not match supercharge".into(),
        ));
    }
    let pts = path.grid.num_points();
    let start = q0.generated_hf();
    let mut start_err: f64 = 0.0;
    for i in 0..pts {
        start_err = start_err.max(start.at(i).max_diff(&(path.h)(i, 0.0)));
    }
    if start_err > 1e-8 * (1.0 + start.inner.max_field_norm()) {
        return Err(SusyError::DimensionMismatch(format!(
            "q_0 does not generate the path start (defect {start_err:.3e})"
        )));
    }

    let integrate = |nsteps: usize| -> Result<Vec<CMatrix>> {
        let dt = 1.0 / nsteps as f64;
        let results: Vec<Result<CMatrix>> = (0..pts)
            .into_par_iter()
            .map(|kf| {
                let n2 = 2 * path.n;
                let mut v = CMatrix::identity(n2);
                let gen = |lambda: f64| -> Result<CMatrix> {
                    let h = (path.h)(kf, lambda);
                    let w = eigh(&h)?;
                    let min_abs = w
                        .eigenvalues
                        .iter()
                        .map(|x| x.abs())
                        .fold(f64::INFINITY, f64::min);
                    if min_abs <= gap_floor {
                        return Err(SusyError::GapClosedOnPath {
                            lambda,
                            k_index: kf,
                        });
                    }
                    let hinv = inverse(&h)?;
                    Ok((path.dh)(kf, lambda).mul(&hinv).scale(C64::new(0.5, 0.0)))
                };
                for step in 0..nsteps {
                    let l0 = step as f64 * dt;
                    let a0 = gen(l0)?;
                    let amid = gen(l0 + 0.5 * dt)?;
                    let a1 = gen(l0 + dt)?;
                    let k1 = a0.mul(&v);
                    let k2 = amid.mul(&v.add(&k1.scale(C64::new(0.5 * dt, 0.0))));
                    let k3 = amid.mul(&v.add(&k2.scale(C64::new(0.5 * dt, 0.0))));
                    let k4 = a1.mul(&v.add(&k3.scale(C64::new(dt, 0.0))));
                    let incr = k1
                        .add(&k2.scale(C64::new(2.0, 0.0)))
                        .add(&k3.scale(C64::new(2.0, 0.0)))
                        .add(&k4)
                        .scale(C64::new(dt / 6.0, 0.0));
                    v = v.add(&incr);
                }
                Ok(v)
            })
            .collect();
        results.into_iter().collect()
    };

    let build = |vs: &[CMatrix]| -> Result<Supercharge> {
        let values: Vec<CMatrix> = (0..pts).map(|i| vs[i].mul(q0.field.at(i))).collect();
        let inner = MatrixField::from_values(path.grid.clone(), 2 * path.n, values)?;
        let field = BlochField::from_inner(inner, FieldKind::Supercharge)?;
        Supercharge::new(field, q0.class, Locality::Analytic)
    };

    let mut prev = integrate(steps)?;
    let mut nsteps = steps;
    for _ in 0..2 {
        let fine = integrate(2 * nsteps)?;
        let err = prev
            .iter()
            .zip(&fine)
            .map(|(a, b)| a.max_diff(b))
            .fold(0.0, f64::max);
        nsteps *= 2;
        prev = fine;
        if err <= ode_tol {
            return build(&prev);
        }
    }
    // Final acceptance: direct reconstruction check at lambda = 1.
    let cand = build(&prev)?;
    let gen = cand.generated_hf();
    let mut err: f64 = 0.0;
    for i in 0..pts {
        err = err.max(gen.at(i).max_diff(&(path.h)(i, 1.0)));
    }
    if err > ode_tol {
        return Err(SusyError::OdeNotConverged { tol: ode_tol, err });
    }
    Ok(cand)
}

pub struct UnitarizeOutcome {
    pub unitary: Supercharge,
    pub min_sigma_on_path: f64,
}

/// Polar-unitarize q(k) and scan the linear interpolation
/// (1-lambda) q + lambda u for its smallest singular value.
pub fn unitarize_path(
    q: &Supercharge,
    lambda_samples: usize,
    gap_floor: f64,
) -> Result<UnitarizeOutcome> {
    let pts = q.field.num_points();
    let mut us = Vec::with_capacity(pts);
    for i in 0..pts {
        let (u, _p) = numerics::polar(q.field.at(i), gap_floor)?;
        us.push(u);
    }
    let samples = lambda_samples.max(2);
    let mut min_sigma = f64::INFINITY;
    for s in 0..samples {
        let lambda = s as f64 / (samples - 1) as f64;
        for i in 0..pts {
            let m = q
                .field
                .at(i)
                .scale(C64::new(1.0 - lambda, 0.0))
                .add(&us[i].scale(C64::new(lambda, 0.0)));
            min_sigma = min_sigma.min(sigma_min(&m));
        }
    }
    let inner = MatrixField::from_values(q.grid().clone(), 2 * q.n(), us)?;
    let field = BlochField::from_inner(inner, FieldKind::Supercharge)?;
    let unitary = Supercharge::new(field, q.class, q.locality)?;
    Ok(UnitarizeOutcome {
        unitary,
        min_sigma_on_path: min_sigma,
    })
}

pub struct GaugeOutcome {
    pub q: Supercharge,
    /// The gauge field: S(k) (symplectic, boson side) or W(k) (unitary,
    /// fermion side).
    pub transform: MatrixField,
}

/// Right gauge q -> q S making h_b = (qS)† (qS) number conserving while
/// leaving h_f untouched: S^2 = q^{-1} |h_f| q^{†-1}, S Hermitian positive.
pub fn gauge_boson_number_conserving(q: &Supercharge, gap_floor: f64) -> Result<GaugeOutcome> {
    let pts = q.field.num_points();
    let z = CMatrix::z_matrix(q.n());
    let mut s_vals = Vec::with_capacity(pts);
    let mut q_vals = Vec::with_capacity(pts);
    for i in 0..pts {
        let qk = q.field.at(i);
        let hf = qk.mul(&z).mul(&qk.dagger());
        let habs = mat_func(&hf, SpectralFn::Abs, gap_floor)?;
        let qinv = inverse(qk)?;
        let s2 = qinv.mul(&habs).mul(&qinv.dagger());
        let s = mat_func(&s2, SpectralFn::Sqrt, gap_floor)?;
        q_vals.push(qk.mul(&s));
        s_vals.push(s);
    }
    let transform = MatrixField::from_values(q.grid().clone(), 2 * q.n(), s_vals)?;
    let inner = MatrixField::from_values(q.grid().clone(), 2 * q.n(), q_vals)?;
    let field = BlochField::from_inner(inner, FieldKind::Supercharge)?;
    let out = Supercharge::new(field, None, Locality::Analytic)?;
    Ok(GaugeOutcome { q: out, transform })
}

/// Left gauge q -> W q making h_f' = W h_f W† number conserving while
/// leaving h_b untouched: W = [q^{-1}|h_f|q^{†-1}]^{1/2} q† |h_f|^{-1/2}.
pub fn gauge_fermion_number_conserving(q: &Supercharge, gap_floor: f64) -> Result<GaugeOutcome> {
    let pts = q.field.num_points();
    let z = CMatrix::z_matrix(q.n());
    let mut w_vals = Vec::with_capacity(pts);
    let mut q_vals = Vec::with_capacity(pts);
    for i in 0..pts {
        let qk = q.field.at(i);
        let hf = qk.mul(&z).mul(&qk.dagger());
        let habs = mat_func(&hf, SpectralFn::Abs, gap_floor)?;
        let habs_inv_sqrt = mat_func(&hf, SpectralFn::AbsInvSqrt, gap_floor)?;
        let qinv = inverse(qk)?;
        let s2 = qinv.mul(&habs).mul(&qinv.dagger());
        let s = mat_func(&s2, SpectralFn::Sqrt, gap_floor)?;
        let w = s.mul(&qk.dagger()).mul(&habs_inv_sqrt);
        q_vals.push(w.mul(qk));
        w_vals.push(w);
    }
    let transform = MatrixField::from_values(q.grid().clone(), 2 * q.n(), w_vals)?;
    let inner = MatrixField::from_values(q.grid().clone(), 2 * q.n(), q_vals)?;
    let field = BlochField::from_inner(inner, FieldKind::Supercharge)?;
    let out = Supercharge::new(field, None, Locality::Analytic)?;
    Ok(GaugeOutcome { q: out, transform })
}
