//! Assembly and validation of the SUSY pair (h_f, h_b) generated by a
//! supercharge, the shared one-particle spectrum, and the identification
//! maps L1, L2 that pair fermionic and bosonic eigenmodes.

use std::io::Write;

use crate::bloch::{BlochField, FieldKind};
use crate::error::{Result, SusyError};
use crate::numerics::{eigh, mat_func, CMatrix, SpectralFn, C64};
use crate::supercharge::{phs_frame, PhsFrame, Supercharge};

/// The pair of Hamiltonians generated by one supercharge, with the fermionic
/// eigenframe and the identification maps
/// L1 = |h_f|^{-1/2} q and L2 = -i Z q† |h_f|^{-1/2}.
pub struct SusyPair {
    pub q: Supercharge,
    pub h_f: BlochField,
    pub h_b: BlochField,
    /// Positive one-particle energies per k, ascending.
    pub spectrum: Vec<Vec<f64>>,
    pub frame: PhsFrame,
    pub l1: BlochField,
    pub l2: BlochField,
}

pub fn build_pair(q: Supercharge, gap_floor: f64) -> Result<SusyPair> {
    let n = q.n();
    let h_f = q.generated_hf();
    let h_b = q.generated_hb();
    let frame = phs_frame(&h_f, gap_floor)?;
    for (i, eps) in frame.lambda_plus.iter().enumerate() {
        if eps.iter().any(|&e| e < 1e-12) {
            return Err(SusyError::GapClosed {
                k_index: i,
                value: eps[0],
            });
        }
    }
    let spectrum = frame.lambda_plus.clone();
    let z = CMatrix::z_matrix(n);
    let mut l1_vals = Vec::with_capacity(h_f.num_points());
    let mut l2_vals = Vec::with_capacity(h_f.num_points());
    for i in 0..h_f.num_points() {
        let inv_sqrt = mat_func(h_f.at(i), SpectralFn::AbsInvSqrt, gap_floor)?;
        let l1 = inv_sqrt.mul(q.field.at(i));
        let l2 = z
            .mul(&q.field.at(i).dagger())
            .mul(&inv_sqrt)
            .scale(C64::new(0.0, -1.0));
        l1_vals.push(l1);
        l2_vals.push(l2);
    }
    let grid = q.grid().clone();
    let l1 = BlochField::from_inner(
        crate::bloch::MatrixField::from_values(grid.clone(), 2 * n, l1_vals)?,
        FieldKind::Map,
    )?;
    let l2 = BlochField::from_inner(
        crate::bloch::MatrixField::from_values(grid, 2 * n, l2_vals)?,
        FieldKind::Map,
    )?;
    Ok(SusyPair {
        q,
        h_f,
        h_b,
        spectrum,
        frame,
        l1,
        l2,
    })
}

/// Sorted spectrum of the bosonic dynamical matrix Z h_b(k), computed through
/// the Hermitian similarity h_b^{1/2} Z h_b^{1/2}.
pub fn boson_dynamical_spectrum(h_b: &CMatrix, gap_floor: f64) -> Result<Vec<f64>> {
    let sqrt = mat_func(h_b, SpectralFn::Sqrt, gap_floor)?;
    let n = h_b.rows / 2;
    let z = CMatrix::z_matrix(n);
    let sim = sqrt.mul(&z).mul(&sqrt);
    Ok(eigh(&sim)?.eigenvalues)
}

/// Max over k of the sorted-spectrum mismatch between h_f(k) and Z h_b(k).
pub fn spectral_duality_report(pair: &SusyPair) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..pair.h_f.num_points() {
        let wf = eigh(pair.h_f.at(i))?.eigenvalues;
        let wb = boson_dynamical_spectrum(pair.h_b.at(i), 1e-14)?;
        for (a, b) in wf.iter().zip(&wb) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Identification-map invariants: both compositions square to -1, and the
/// boson image of each fermionic eigenmode is an eigenvector of Z h_b with
/// the same energy.
pub struct MapCheck {
    pub j_squared_defect: f64,
    pub eigenmode_defect: f64,
}

pub fn check_identification_maps(pair: &SusyPair) -> MapCheck {
    let n = pair.q.n();
    let minus_one = CMatrix::identity(2 * n).scale(C64::new(-1.0, 0.0));
    let z = CMatrix::z_matrix(n);
    let mut j_defect: f64 = 0.0;
    let mut mode_defect: f64 = 0.0;
    for i in 0..pair.h_f.num_points() {
        let l1 = pair.l1.at(i);
        let l2 = pair.l2.at(i);
        let jf = l1.mul(l2);
        let jb = l2.mul(l1);
        j_defect = j_defect.max(jf.mul(&jf).max_diff(&minus_one));
        j_defect = j_defect.max(jb.mul(&jb).max_diff(&minus_one));

        // Z h_b (Z q† u_alpha) = eps_alpha (Z q† u_alpha) for positive modes.
        let zhb = z.mul(pair.h_b.at(i));
        let zqd = z.mul(&pair.q.field.at(i).dagger());
        for alpha in 0..n {
            let u = pair.frame.v_at(i).column(alpha);
            let y = zqd.matvec(&u);
            let lhs = zhb.matvec(&y);
            let eps = pair.spectrum[i][alpha];
            let ynorm: f64 = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let mut defect: f64 = 0.0;
            for (a, b) in lhs.iter().zip(&y) {
                defect = defect.max((a - b * eps).norm());
            }
            mode_defect = mode_defect.max(defect / ynorm.max(1e-300));
        }
    }
    MapCheck {
        j_squared_defect: j_defect,
        eigenmode_defect: mode_defect,
    }
}

/// CSV export of the one-particle spectrum: k indices, band index, energy.
pub fn write_spectrum_csv<W: Write>(pair: &SusyPair, mut w: W) -> Result<()> {
    let grid = pair.h_f.grid();
    let d = grid.dim();
    let mut header = String::new();
    for axis in 0..d {
        header.push_str(&format!("k_index_{},", axis + 1));
    }
    header.push_str("alpha,epsilon");
    writeln!(w, "{header}")?;
    for i in 0..grid.num_points() {
        let multi = grid.multi_index(i);
        for (alpha, eps) in pair.spectrum[i].iter().enumerate() {
            let mut row = String::new();
            for m in &multi {
                row.push_str(&format!("{m},"));
            }
            row.push_str(&format!("{},{}", alpha, crate::config::format_g17(*eps)));
            writeln!(w, "{row}")?;
        }
    }
    Ok(())
}
