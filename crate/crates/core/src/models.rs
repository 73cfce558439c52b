//! Canonical lattice models and seeded random model generators for the
//! symmetry-class constructions.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bloch::{AzClass, BlochField, FieldKind, MatrixField, MomentumGrid};
use crate::error::{Result, SusyError};
use crate::numerics::{CMatrix, C64, C_ONE};
use crate::supercharge::{
    self, ai_target_hf, aii_target_hf, aiii_target_hf, bdi_target_hf, cii_target_hf, Locality,
    Supercharge,
};

/// One-particle dispersion of the Kitaev chain.
pub fn kitaev_epsilon(mu: f64, t: f64, k: f64) -> f64 {
    (mu * mu + 4.0 * t * t + 4.0 * t * mu * k.cos()).sqrt()
}

pub struct KitaevModel {
    pub h_f: BlochField,
    pub q: Supercharge,
    pub mu: f64,
    pub t: f64,
}

/// Kitaev chain under periodic boundary conditions together with its
/// closed-form number-conserving-boson supercharge.
///
/// The chain is oriented so that the supercharge identifies the flat-band
/// (mu = 0) eigenmode (c_j + c_{j+1} + c_j^dag - c_{j+1}^dag)/2 with the
/// boson mode b_j; the Hamiltonian is the site-reflected writing
/// h_f(k) = 2 t sin k sigma_y + (mu + 2 t cos k) sigma_z of the same chain.
pub fn kitaev_chain(mu: f64, t: f64, n_sites: usize) -> Result<KitaevModel> {
    if !mu.is_finite() || !t.is_finite() {
        return Err(SusyError::ConfigInvalid(
            "kitaev parameters must be finite".into(),
        ));
    }
    if (mu.abs() - 2.0 * t.abs()).abs() < 1e-12 {
        return Err(SusyError::ConfigInvalid(
            "kitaev chain is gapless at |mu| = |2t|".into(),
        ));
    }
    let grid = MomentumGrid::chain(n_sites)?;
    let h_f = BlochField::from_fn(grid.clone(), 1, FieldKind::BdgFermion, |k| {
        let k = k[0];
        let dy = 2.0 * t * k.sin();
        let dz = mu + 2.0 * t * k.cos();
        CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(dz, 0.0),
            (1, 1) => C64::new(-dz, 0.0),
            (0, 1) => C64::new(0.0, -dy),
            (1, 0) => C64::new(0.0, dy),
            _ => C64::new(0.0, 0.0),
        })
    })?;
    let q_field = BlochField::from_fn(grid, 1, FieldKind::Supercharge, |k| {
        let k = k[0];
        let eps = kitaev_epsilon(mu, t, k);
        let sq = eps.sqrt();
        let z = C64::new(mu + 2.0 * t * k.cos(), -2.0 * t * k.sin()); // mu + 2t e^{-ik}
        let zp = z / eps;
        // sqrt(eps) [ (s0+sx)/2 + zp (s0-sx)/2 ]
        CMatrix::from_fn(2, 2, |i, j| {
            let p_plus = C64::new(0.5, 0.0);
            let p_minus = if i == j {
                C64::new(0.5, 0.0)
            } else {
                C64::new(-0.5, 0.0)
            };
            (p_plus + zp * p_minus) * sq
        })
    })?;
    let q = Supercharge::new(q_field, Some(AzClass::BDI), Locality::Analytic)?;
    Ok(KitaevModel { h_f, q, mu, t })
}

/// The Kitaev chain written as class-BDI blocks matching `kitaev_chain`'s
/// orientation: h_y = 2 t sin k, h_z = mu + 2 t cos k.
pub fn kitaev_bdi_blocks(mu: f64, t: f64, n_sites: usize) -> Result<(MatrixField, MatrixField)> {
    let grid = MomentumGrid::chain(n_sites)?;
    let h_y = MatrixField::from_fn(grid.clone(), 1, |k| {
        CMatrix::from_fn(1, 1, |_, _| C64::new(2.0 * t * k[0].sin(), 0.0))
    })?;
    let h_z = MatrixField::from_fn(grid, 1, |k| {
        CMatrix::from_fn(1, 1, |_, _| C64::new(mu + 2.0 * t * k[0].cos(), 0.0))
    })?;
    Ok((h_y, h_z))
}

pub struct ChiralScModel {
    pub h_f: BlochField,
    pub q: Supercharge,
    pub m: f64,
}

/// Two-band chiral superconductor on a 2D grid, with the closed-form
/// supercharge of the generic two-band construction. Nonlocal in the
/// topological window 0 < |m| < 2, short-ranged outside it.
pub fn chiral_sc(m: f64, nx: usize, ny: usize) -> Result<ChiralScModel> {
    if !m.is_finite() || m == 0.0 || (m.abs() - 2.0).abs() < 1e-12 {
        return Err(SusyError::ConfigInvalid(
            "chiral SC requires m not in {0, +-2}".into(),
        ));
    }
    let grid = MomentumGrid::new(&[nx, ny])?;
    let d = move |k: &[f64]| -> [f64; 3] { [k[0].sin(), k[1].sin(), m - k[0].cos() - k[1].cos()] };
    let h_f = BlochField::from_fn(grid.clone(), 1, FieldKind::BdgFermion, |k| {
        let [dx, dy, dz] = d(k);
        CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(dz, 0.0),
            (1, 1) => C64::new(-dz, 0.0),
            (0, 1) => C64::new(dx, -dy),
            (1, 0) => C64::new(dx, dy),
            _ => C64::new(0.0, 0.0),
        })
    })?;
    let q = supercharge::two_band_closed_form(grid, d, 1e-10)?;
    Ok(ChiralScModel { h_f, q, m })
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

fn random_complex_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| C64::new(uniform(rng), uniform(rng)))
}

fn random_real_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| C64::new(uniform(rng), 0.0))
}

/// Assemble a strictly local 1D symbol sum_delta coeff_delta e^{-i k delta}.
fn local_symbol(
    grid: &MomentumGrid,
    dim: usize,
    couplings: Vec<(i64, CMatrix)>,
) -> Result<MatrixField> {
    MatrixField::from_fn(grid.clone(), dim, move |k| {
        let mut acc = CMatrix::zeros(dim, dim);
        for (delta, c) in &couplings {
            let ph = C64::from_polar(1.0, -k[0] * *delta as f64);
            acc = acc.add(&c.scale(ph));
        }
        acc
    })
}

/// Strictly local random Hermitian field: draws blocks for delta = 0..range
/// and closes them under Hermiticity (and an optional extra projection).
fn random_hermitian_field(
    rng: &mut ChaCha8Rng,
    grid: &MomentumGrid,
    dim: usize,
    range: usize,
    complex_entries: bool,
    project: impl Fn(&CMatrix) -> CMatrix,
) -> Result<MatrixField> {
    let mut couplings = Vec::new();
    for delta in 0..=range as i64 {
        let raw = if complex_entries {
            random_complex_matrix(rng, dim)
        } else {
            random_real_matrix(rng, dim)
        };
        let raw = project(&raw);
        if delta == 0 {
            let herm = raw.add(&raw.dagger()).scale(C64::new(0.5, 0.0));
            couplings.push((0, herm));
        } else {
            couplings.push((delta, raw.clone()));
            couplings.push((-delta, raw.dagger()));
        }
    }
    local_symbol(grid, dim, couplings)
}

/// Random model data per symmetry class, plus its target Hamiltonian and the
/// matching construction.
pub enum ClassModel {
    Bdi { h_y: MatrixField, h_z: MatrixField },
    Aiii { h_1: MatrixField, h_2: MatrixField },
    Cii { a: MatrixField, b: MatrixField },
    Ai { h_i: MatrixField },
    Aii { h_ii: MatrixField },
}

impl ClassModel {
    pub fn target_hf(&self) -> Result<BlochField> {
        match self {
            ClassModel::Bdi { h_y, h_z } => bdi_target_hf(h_y, h_z),
            ClassModel::Aiii { h_1, h_2 } => aiii_target_hf(h_1, h_2),
            ClassModel::Cii { a, b } => cii_target_hf(a, b),
            ClassModel::Ai { h_i } => ai_target_hf(h_i),
            ClassModel::Aii { h_ii } => aii_target_hf(h_ii),
        }
    }

    pub fn construct(&self, gap_floor: f64) -> Result<Supercharge> {
        match self {
            ClassModel::Bdi { h_y, h_z } => supercharge::bdi_supercharge(h_y, h_z),
            ClassModel::Aiii { h_1, h_2 } => supercharge::aiii_supercharge(h_1, h_2),
            ClassModel::Cii { a, b } => supercharge::cii_supercharge(a, b),
            ClassModel::Ai { h_i } => supercharge::ai_supercharge(h_i),
            ClassModel::Aii { h_ii } => supercharge::aii_supercharge(h_ii, gap_floor),
        }
    }
}

fn pauli(idx: usize) -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    match idx {
        0 => {
            m[(0, 0)] = C_ONE;
            m[(1, 1)] = C_ONE;
        }
        1 => {
            m[(0, 1)] = C_ONE;
            m[(1, 0)] = C_ONE;
        }
        2 => {
            m[(0, 1)] = C64::new(0.0, -1.0);
            m[(1, 0)] = C64::new(0.0, 1.0);
        }
        _ => {
            m[(0, 0)] = C_ONE;
            m[(1, 1)] = -C_ONE;
        }
    }
    m
}

/// Seeded random strictly local model for one of the constructible classes.
///
/// BDI/AIII/CII/AI draw coupling tensors uniformly in [-1, 1] and project
/// them onto the class constraints. AII draws from a family of flat
/// (h^2 = 1) time-reversal-symmetric bands, the regime in which a strictly
/// local TRS supercharge exists; see `aii_supercharge`.
pub fn random_class_model(
    class: AzClass,
    blocks: usize,
    range: usize,
    grid: &MomentumGrid,
    seed: u64,
) -> Result<ClassModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match class {
        AzClass::BDI => {
            // h_y pure imaginary couplings (h_y(k)* = -h_y(-k)), h_z real.
            let h_y = random_hermitian_field(&mut rng, grid, blocks, range, false, |m| {
                m.scale(C64::new(0.0, 1.0))
            })?;
            let h_z = random_hermitian_field(&mut rng, grid, blocks, range, false, |m| m.clone())?;
            Ok(ClassModel::Bdi { h_y, h_z })
        }
        AzClass::AIII => {
            let h_1 = random_hermitian_field(&mut rng, grid, blocks, range, true, |m| m.clone())?;
            let h_2 = random_hermitian_field(&mut rng, grid, blocks, range, true, |m| m.clone())?;
            Ok(ClassModel::Aiii { h_1, h_2 })
        }
        AzClass::CII => {
            let dim = 2 * blocks;
            let s = pauli(2).kron(&CMatrix::identity(blocks));
            // A: Hermitian with s A(k)* s = A(-k) <=> s A_delta* s = A_delta.
            let s_a = s.clone();
            let a = random_hermitian_field(&mut rng, grid, dim, range, true, move |m| {
                let proj = s_a.mul(&m.conj()).mul(&s_a);
                m.add(&proj).scale(C64::new(0.5, 0.0))
            })?;
            // B: Hermitian, real couplings, s B_delta s = -B_delta.
            let s_b = s.clone();
            let b = random_hermitian_field(&mut rng, grid, dim, range, false, move |m| {
                let proj = s_b.mul(m).mul(&s_b);
                m.sub(&proj).scale(C64::new(0.5, 0.0))
            })?;
            Ok(ClassModel::Cii { a, b })
        }
        AzClass::AI => {
            let h_i = random_hermitian_field(&mut rng, grid, blocks, range, false, |m| m.clone())?;
            Ok(ClassModel::Ai { h_i })
        }
        AzClass::AII => {
            let dim = 2 * blocks.max(2);
            let rest = CMatrix::identity(dim / 4);
            // TRS-even / TRS-odd anticommuting gamma pairs on spin x orbital.
            let pairs = [
                (pauli(0).kron(&pauli(1)), pauli(3).kron(&pauli(3))),
                (pauli(0).kron(&pauli(1)), pauli(1).kron(&pauli(3))),
                (pauli(0).kron(&pauli(3)), pauli(3).kron(&pauli(1))),
                (pauli(0).kron(&pauli(3)), pauli(1).kron(&pauli(1))),
            ];
            let pick = (rng.next_u64() % pairs.len() as u64) as usize;
            let winding = 1 + (rng.next_u64() % range.max(1) as u64) as i64;
            let sign = if rng.next_u64() % 2 == 0 { 1.0 } else { -1.0 };
            let ge = pairs[pick].0.kron(&rest);
            let go = pairs[pick].1.kron(&rest);
            // Random constant rotation; its generator must be TRS-odd
            // (s G* s = -G) so that conjugation preserves the class.
            let theta = uniform(&mut rng) * std::f64::consts::PI;
            let gen_rot = pauli(0).kron(&pauli(2)).kron(&rest);
            let (c, s) = (theta.cos(), theta.sin());
            let u = CMatrix::identity(dim)
                .scale(C64::new(c, 0.0))
                .add(&gen_rot.scale(C64::new(0.0, s)));
            let h_ii = MatrixField::from_fn(grid.clone(), dim, move |k| {
                let phi = winding as f64 * k[0];
                let flat = ge
                    .scale(C64::new(phi.cos(), 0.0))
                    .add(&go.scale(C64::new(sign * phi.sin(), 0.0)));
                u.mul(&flat).mul(&u.dagger())
            })?;
            Ok(ClassModel::Aii { h_ii })
        }
        other => Err(SusyError::UnsupportedClass(other.label().to_string())),
    }
}

/// Strictly local random supercharge obeying the class constraints, redrawn
/// until min_k sigma_min(q) exceeds 0.1 x the median singular value.
/// Deterministic per seed.
pub fn random_supercharge(
    class: Option<AzClass>,
    n: usize,
    range: usize,
    grid: &MomentumGrid,
    seed: u64,
) -> Result<Supercharge> {
    for attempt in 0..200u64 {
        let draw_seed = seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(attempt);
        let cand = match class {
            None => random_free_supercharge(n, range, grid, draw_seed)?,
            Some(cls) => {
                let blocks = match cls {
                    AzClass::BDI | AzClass::AI => n,
                    AzClass::AIII | AzClass::AII => {
                        if n % 2 != 0 {
                            return Err(SusyError::DimensionMismatch(
                                "class needs even internal count".into(),
                            ));
                        }
                        n / 2
                    }
                    AzClass::CII => {
                        if n % 4 != 0 {
                            return Err(SusyError::DimensionMismatch(
                                "class CII needs n divisible by 4".into(),
                            ));
                        }
                        n / 4
                    }
                    other => return Err(SusyError::UnsupportedClass(other.label().to_string())),
                };
                let model = random_class_model(cls, blocks, range, grid, draw_seed)?;
                match model.construct(crate::DEFAULT_GAP_FLOOR) {
                    Ok(q) => q,
                    Err(SusyError::GapClosed { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
        };
        let mut all_sigmas = Vec::new();
        for i in 0..cand.field.num_points() {
            all_sigmas.extend(crate::numerics::singular_values(cand.field.at(i))?);
        }
        all_sigmas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = all_sigmas[all_sigmas.len() / 2];
        if cand.min_sigma() > 0.1 * median {
            return Ok(cand);
        }
    }
    Err(SusyError::GapClosed {
        k_index: 0,
        value: 0.0,
    })
}

fn random_free_supercharge(
    n: usize,
    range: usize,
    grid: &MomentumGrid,
    seed: u64,
) -> Result<Supercharge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Arbitrary strictly local U, T couplings; the Nambu assembly
    // [[U*(-k), T*(-k)], [T(k), U(k)]] satisfies the intrinsic constraint
    // for any draw.
    let mut u_coup = Vec::new();
    let mut t_coup = Vec::new();
    for delta in -(range as i64)..=(range as i64) {
        u_coup.push((delta, random_complex_matrix(&mut rng, n)));
        t_coup.push((delta, random_complex_matrix(&mut rng, n)));
    }
    let u = local_symbol(grid, n, u_coup)?;
    let t = local_symbol(grid, n, t_coup)?;
    let values: Vec<CMatrix> = (0..grid.num_points())
        .map(|i| {
            let neg = grid.neg_index(i);
            let mut q = CMatrix::zeros(2 * n, 2 * n);
            q.set_block(0, 0, &u.at(neg).conj());
            q.set_block(0, n, &t.at(neg).conj());
            q.set_block(n, 0, t.at(i));
            q.set_block(n, n, u.at(i));
            q
        })
        .collect();
    let inner = MatrixField::from_values(grid.clone(), 2 * n, values)?;
    let field = BlochField::from_inner(inner, FieldKind::Supercharge)?;
    match Supercharge::new(field, None, Locality::Strict) {
        Ok(q) => Ok(q),
        Err(SusyError::GapClosed { .. }) => {
            // Rejected below by the sigma test; surface as a redraw by
            // returning a deliberately gapless candidate is impossible, so
            // draw again with a derived seed.
            random_free_supercharge(n, range, grid, seed.wrapping_add(0xabcdef))
        }
        Err(e) => Err(e),
    }
}
