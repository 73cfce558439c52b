//! Real-space linear complex structures of the Gaussian ground states, their
//! restriction to subsystems, and the fermion/boson entanglement duality
//! carried by the identification maps.
//!
//! Everything here works in the Majorana (quadrature) basis, where every
//! particle-hole-compatible map has a real matrix: fermionic restrictions are
//! compressions of a real orthogonal antisymmetric J, bosonic ones are
//! symplectic-complement compressions.

use std::io::Write;

use crate::bloch::BlochField;
use crate::error::{Result, SusyError};
use crate::numerics::{eig_general, eigh, CMatrix, RealMat, C64};
use crate::susy_pair::SusyPair;
use crate::DIVERGENCE_CAP;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Species {
    Fermion,
    Boson,
}

impl Species {
    pub fn label(&self) -> &'static str {
        match self {
            Species::Fermion => "fermion",
            Species::Boson => "boson",
        }
    }
}

/// Dense real-space operator of a Bloch map field on the doubled basis,
/// index layout [sector][site][internal]: entry (i, j) is the coefficient of
/// basis operator j in the image of basis operator i.
pub fn real_space_operator(field: &BlochField) -> CMatrix {
    let grid = field.grid();
    let n = field.n;
    let pts = grid.num_points();
    let n_modes = pts * n;
    let blocks = field.inner.real_space_blocks();
    let mut out = CMatrix::zeros(2 * n_modes, 2 * n_modes);
    for r in 0..pts {
        let rm = grid.multi_index(r);
        for rp in 0..pts {
            let rpm = grid.multi_index(rp);
            let delta: Vec<usize> = rm
                .iter()
                .zip(&rpm)
                .zip(grid.sizes())
                .map(|((&a, &b), &nn)| (a + nn - b) % nn)
                .collect();
            let blk = &blocks[grid.flat_index(&delta)];
            for a in 0..2 {
                for b in 0..2 {
                    for s in 0..n {
                        for sp in 0..n {
                            let v = blk[(a * n + s, b * n + sp)];
                            if v.norm_sqr() > 0.0 {
                                out[(a * n_modes + r * n + s, b * n_modes + rp * n + sp)] = v;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Change a doubled-basis complex matrix to the Majorana basis; the result is
/// real for any field obeying the intrinsic particle-hole constraint.
pub fn to_majorana(m: &CMatrix, n_modes: usize) -> Result<RealMat> {
    let nm = n_modes;
    if m.rows != 2 * nm || m.cols != 2 * nm {
        return Err(SusyError::DimensionMismatch(
            "to_majorana size mismatch".into(),
        ));
    }
    let m11 = m.block(0, 0, nm, nm);
    let m12 = m.block(0, nm, nm, nm);
    let m21 = m.block(nm, 0, nm, nm);
    let m22 = m.block(nm, nm, nm, nm);
    let half = C64::new(0.5, 0.0);
    let ihalf = C64::new(0.0, 0.5);
    let sum_l = m11.add(&m21);
    let dif_l = m11.sub(&m21);
    let sum_r = m12.add(&m22);
    let dif_r = m12.sub(&m22);
    let b11 = sum_l.add(&sum_r).scale(half);
    let b12 = sum_l.sub(&sum_r).scale(ihalf);
    let b21 = dif_l.add(&dif_r).scale(-ihalf);
    let b22 = dif_l.sub(&dif_r).scale(half);
    let mut out = CMatrix::zeros(2 * nm, 2 * nm);
    out.set_block(0, 0, &b11);
    out.set_block(0, nm, &b12);
    out.set_block(nm, 0, &b21);
    out.set_block(nm, nm, &b22);
    out.real_part_checked(1e-9 * (1.0 + m.max_norm()))
}

/// Majorana coefficients of an operator given by doubled-basis coefficients
/// (c-sector first): w_gamma = (u_c + u_cd)/2, w_tilde = i (u_c - u_cd)/2.
pub fn psi_to_majorana_coeffs(u: &[C64]) -> Vec<C64> {
    let nm = u.len() / 2;
    let mut w = vec![C64::new(0.0, 0.0); 2 * nm];
    for i in 0..nm {
        let uc = u[i];
        let ud = u[nm + i];
        w[i] = 0.5 * (uc + ud);
        w[nm + i] = C64::new(0.0, 0.5) * (uc - ud);
    }
    w
}

/// Inverse of `psi_to_majorana_coeffs`.
pub fn majorana_to_psi_coeffs(w: &[C64]) -> Vec<C64> {
    let nm = w.len() / 2;
    let mut u = vec![C64::new(0.0, 0.0); 2 * nm];
    for i in 0..nm {
        let wg = w[i];
        let wt = w[nm + i];
        u[i] = wg - C64::new(0.0, 1.0) * wt;
        u[nm + i] = wg + C64::new(0.0, 1.0) * wt;
    }
    u
}

/// Real-space linear complex structure of one ground state.
pub struct RealSpaceStructure {
    pub species: Species,
    /// Total number of lattice modes (sites x internal states).
    pub n_modes: usize,
    /// 2N x 2N real matrix in the Majorana basis.
    pub jmaj: RealMat,
}

/// Build the real-space complex structure of the fermionic or bosonic ground
/// state from the identification maps of a pair.
pub fn realspace_structure(pair: &SusyPair, species: Species) -> Result<RealSpaceStructure> {
    let n = pair.q.n();
    let n_modes = pair.h_f.num_points() * n;
    let field = match species {
        Species::Fermion => pair
            .l1
            .map(crate::bloch::FieldKind::ComplexStructure, |i, l1| {
                l1.mul(pair.l2.at(i))
            }),
        Species::Boson => pair
            .l2
            .map(crate::bloch::FieldKind::ComplexStructure, |i, l2| {
                l2.mul(pair.l1.at(i))
            }),
    };
    let complex = real_space_operator(&field);
    let jmaj = to_majorana(&complex, n_modes)?;
    // J^2 = -1 within tolerance.
    let j2 = jmaj.mul(&jmaj);
    let mut defect: f64 = 0.0;
    for i in 0..2 * n_modes {
        for j in 0..2 * n_modes {
            let expect = if i == j { -1.0 } else { 0.0 };
            defect = defect.max((j2[(i, j)] - expect).abs());
        }
    }
    if defect > 1e-8 {
        return Err(SusyError::DimensionMismatch(format!(
            "complex structure fails J^2 = -1 by {defect:.3e}"
        )));
    }
    Ok(RealSpaceStructure {
        species,
        n_modes,
        jmaj,
    })
}

/// Real-space identification maps in both complex and Majorana form.
pub struct RealSpaceMaps {
    pub n_modes: usize,
    pub l1_complex: CMatrix,
    pub l2_complex: CMatrix,
    pub l1_maj: RealMat,
    pub l2_maj: RealMat,
}

pub fn realspace_maps(pair: &SusyPair) -> Result<RealSpaceMaps> {
    let n_modes = pair.h_f.num_points() * pair.q.n();
    let l1_complex = real_space_operator(&pair.l1);
    let l2_complex = real_space_operator(&pair.l2);
    let l1_maj = to_majorana(&l1_complex, n_modes)?;
    let l2_maj = to_majorana(&l2_complex, n_modes)?;
    Ok(RealSpaceMaps {
        n_modes,
        l1_complex,
        l2_complex,
        l1_maj,
        l2_maj,
    })
}

/// A mode subsystem: whole lattice sites (all internal states, both sectors)
/// or an explicit real subspace of the Majorana operator space.
pub enum SubsystemSpec {
    Sites(Vec<usize>),
    /// 2N x 2m real matrix whose columns span the operator subspace.
    ModeSpace(RealMat),
}

impl SubsystemSpec {
    /// Build a mode-space subsystem from complex doubled-basis coefficient
    /// vectors; they must span a conjugation-closed subspace.
    pub fn from_complex_modes(n_modes: usize, vectors: &[Vec<C64>]) -> Result<SubsystemSpec> {
        if vectors.is_empty() || vectors.len() % 2 != 0 {
            return Err(SusyError::InvalidSubsystem(
                "mode subspaces must have even dimension".into(),
            ));
        }
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        for v in vectors {
            if v.len() != 2 * n_modes {
                return Err(SusyError::InvalidSubsystem(
                    "mode vector length mismatch".into(),
                ));
            }
            let w = psi_to_majorana_coeffs(v);
            candidates.push(w.iter().map(|z| z.re).collect());
            candidates.push(w.iter().map(|z| z.im).collect());
        }
        // Orthonormalize, dropping dependent directions.
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for mut c in candidates {
            for b in &basis {
                let dot: f64 = b.iter().zip(&c).map(|(x, y)| x * y).sum();
                for (x, y) in c.iter_mut().zip(b) {
                    *x -= dot * y;
                }
            }
            let nrm: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm > 1e-9 {
                for x in c.iter_mut() {
                    *x /= nrm;
                }
                basis.push(c);
            }
        }
        if basis.len() != vectors.len() {
            return Err(SusyError::InvalidSubsystem(format!(
                "subspace is not conjugation-closed: real dimension {} from {} modes",
                basis.len(),
                vectors.len()
            )));
        }
        Ok(SubsystemSpec::ModeSpace(RealMat::from_columns(&basis)))
    }

    /// Majorana slot indices for a site list (internal count n per site).
    fn site_slots(sites: &[usize], n: usize, n_modes: usize) -> Vec<usize> {
        let mut slots = Vec::with_capacity(2 * sites.len() * n);
        for &site in sites {
            for s in 0..n {
                slots.push(site * n + s);
            }
        }
        let tilde: Vec<usize> = slots.iter().map(|&i| i + n_modes).collect();
        slots.extend(tilde);
        slots
    }
}

/// Per-mode entanglement data of a restricted complex structure.
#[derive(Clone, Debug)]
pub struct EntanglementReport {
    pub species: Species,
    /// Restricted eigenvalues, ascending; divergent bosonic ones excluded.
    pub lambdas: Vec<f64>,
    pub entropies: Vec<f64>,
    pub total: f64,
    pub diverged_count: usize,
}

impl EntanglementReport {
    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        let lams: Vec<String> = self
            .lambdas
            .iter()
            .map(|x| crate::config::format_g17(*x))
            .collect();
        let ents: Vec<String> = self
            .entropies
            .iter()
            .map(|x| crate::config::format_g17(*x))
            .collect();
        writeln!(
            w,
            "{{\"species\":\"{}\",\"lambdas\":[{}],\"entropies\":[{}],\"total\":{},\"diverged_count\":{}}}",
            self.species.label(),
            lams.join(","),
            ents.join(","),
            crate::config::format_g17(self.total),
            self.diverged_count
        )?;
        Ok(())
    }
}

/// Von Neumann entropy of one mode with restricted eigenvalue `lambda`:
/// s(x) = (1+x)/2 |log((1+x)/2)| - |1-x|/2 log(|1-x|/2).
pub fn mode_entropy(lambda: f64, _species: Species) -> f64 {
    let p = 0.5 * (1.0 + lambda);
    let q = 0.5 * (1.0 - lambda).abs();
    let term_p = if p > 0.0 { p * p.ln().abs() } else { 0.0 };
    let term_q = if q > 1e-300 { q * q.ln() } else { 0.0 };
    term_p - term_q
}

struct Restricted {
    matrix: RealMat,
}

fn restrict_matrix(
    structure: &RealSpaceStructure,
    sub: &SubsystemSpec,
    n_per_site: usize,
) -> Result<Restricted> {
    let nm = structure.n_modes;
    match sub {
        SubsystemSpec::Sites(sites) => {
            if sites.is_empty() {
                return Err(SusyError::InvalidSubsystem("empty site list".into()));
            }
            let slots = SubsystemSpec::site_slots(sites, n_per_site, nm);
            let d = slots.len();
            let mut r = RealMat::zeros(d, d);
            for (a, &i) in slots.iter().enumerate() {
                for (b, &j) in slots.iter().enumerate() {
                    r[(a, b)] = structure.jmaj[(i, j)];
                }
            }
            Ok(Restricted { matrix: r })
        }
        SubsystemSpec::ModeSpace(w) => {
            if w.rows != 2 * nm {
                return Err(SusyError::InvalidSubsystem(
                    "mode-space rows mismatch".into(),
                ));
            }
            let q = w.qr_thin()?;
            match structure.species {
                Species::Fermion => {
                    // Anticommutator form is Euclidean in the Majorana basis.
                    let jq = structure.jmaj.mul(&q);
                    Ok(Restricted {
                        matrix: q.transpose().mul(&jq),
                    })
                }
                Species::Boson => {
                    let omega = symplectic_form(nm);
                    let oq = omega.mul(&q);
                    let gram = q.transpose().mul(&oq);
                    let cond = gram_condition(&gram)?;
                    if cond > 1e12 {
                        return Err(SusyError::IllConditionedSubspace(cond));
                    }
                    let ojq = omega.mul(&structure.jmaj).mul(&q);
                    let rhs = q.transpose().mul(&ojq);
                    Ok(Restricted {
                        matrix: gram.solve(&rhs)?,
                    })
                }
            }
        }
    }
}

fn symplectic_form(n_modes: usize) -> RealMat {
    let mut o = RealMat::zeros(2 * n_modes, 2 * n_modes);
    for i in 0..n_modes {
        o[(i, n_modes + i)] = 1.0;
        o[(n_modes + i, i)] = -1.0;
    }
    o
}

fn gram_condition(g: &RealMat) -> Result<f64> {
    let gtg = g.transpose().mul(g);
    let w = eigh(&gtg.to_complex())?.eigenvalues;
    let max = w.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    let min = w.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    if min <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// Eigenvalues lambda of a restricted structure: the m nonnegative values
/// with +-i lambda in the spectrum, extracted from -(R^2).
fn restricted_lambdas(r: &RealMat, species: Species) -> Result<Vec<f64>> {
    let d = r.rows;
    if d % 2 != 0 {
        return Err(SusyError::InvalidSubsystem(
            "odd restricted dimension".into(),
        ));
    }
    let vals: Vec<f64> = match species {
        Species::Fermion => {
            // R is antisymmetric: -(R^2) = R^T R, symmetric PSD.
            let sym = r.transpose().mul(r);
            let symm = RealMat {
                rows: d,
                cols: d,
                data: (0..d * d)
                    .map(|idx| {
                        let (i, j) = (idx / d, idx % d);
                        0.5 * (sym[(i, j)] + sym[(j, i)])
                    })
                    .collect(),
            };
            eigh(&symm.to_complex())?.eigenvalues
        }
        Species::Boson => {
            let r2 = r.mul(r).scale(-1.0);
            let eigs = eig_general(&r2.to_complex())?;
            let scale = r2.max_norm().max(1.0);
            let mut out = Vec::with_capacity(d);
            for e in eigs {
                if e.im.abs() > 1e-6 * scale {
                    return Err(SusyError::InvalidSubsystem(format!(
                        "restricted boson spectrum not real: imaginary part {:.3e}",
                        e.im
                    )));
                }
                out.push(e.re);
            }
            out.sort_by(|a, b| a.partial_cmp(b).unwrap());
            out
        }
    };
    // Values come in duplicate pairs (one per +-i lambda pair).
    let mut lambdas = Vec::with_capacity(d / 2);
    for pair in vals.chunks(2) {
        let avg = 0.5 * (pair[0] + pair[1]);
        lambdas.push(avg.max(0.0).sqrt());
    }
    Ok(lambdas)
}

/// Restriction of a complex structure to a subsystem, with per-mode
/// eigenvalues and entropies. The implied internal count per site is taken
/// from `n_per_site`.
pub fn restrict(
    structure: &RealSpaceStructure,
    sub: &SubsystemSpec,
    n_per_site: usize,
) -> Result<EntanglementReport> {
    let restricted = restrict_matrix(structure, sub, n_per_site)?;
    let mut lambdas = restricted_lambdas(&restricted.matrix, structure.species)?;
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut entropies = Vec::new();
    let mut kept = Vec::new();
    let mut diverged = 0usize;
    // Numerical slack for the range checks scales with the spectral range of
    // the restriction (the eigen-extraction works at that magnitude).
    let slack = 1e-8 * lambdas.last().copied().unwrap_or(1.0).max(1.0);
    for &l in &lambdas {
        match structure.species {
            Species::Fermion => {
                if l > 1.0 + slack {
                    return Err(SusyError::InvalidSubsystem(format!(
                        "fermionic restricted eigenvalue {l} above 1"
                    )));
                }
                let l = l.min(1.0);
                kept.push(l);
                entropies.push(mode_entropy(l, Species::Fermion));
            }
            Species::Boson => {
                if l > DIVERGENCE_CAP {
                    diverged += 1;
                    continue;
                }
                if l < 1.0 - slack {
                    return Err(SusyError::InvalidSubsystem(format!(
                        "bosonic restricted eigenvalue {l} below 1"
                    )));
                }
                let l = l.max(1.0);
                kept.push(l);
                entropies.push(mode_entropy(l, Species::Boson));
            }
        }
    }
    let total = entropies.iter().sum();
    Ok(EntanglementReport {
        species: structure.species,
        lambdas: kept,
        entropies,
        total,
        diverged_count: diverged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualDirection {
    FermionToBoson,
    BosonToFermion,
}

/// Image of a subsystem under the real-space identification map; the result
/// is an explicit operator subspace on the other lattice.
pub fn dual_subsystem(
    maps: &RealSpaceMaps,
    sub: &SubsystemSpec,
    direction: DualDirection,
    n_per_site: usize,
) -> Result<SubsystemSpec> {
    let w = match sub {
        SubsystemSpec::Sites(sites) => {
            let slots = SubsystemSpec::site_slots(sites, n_per_site, maps.n_modes);
            let mut cols = Vec::with_capacity(slots.len());
            for &slot in &slots {
                let mut e = vec![0.0; 2 * maps.n_modes];
                e[slot] = 1.0;
                cols.push(e);
            }
            RealMat::from_columns(&cols)
        }
        SubsystemSpec::ModeSpace(w) => w.clone(),
    };
    let lmap = match direction {
        DualDirection::FermionToBoson => &maps.l1_maj,
        DualDirection::BosonToFermion => &maps.l2_maj,
    };
    Ok(SubsystemSpec::ModeSpace(lmap.transpose().mul(&w)))
}

#[derive(Clone, Debug)]
pub struct DualityReport {
    pub max_deviation: f64,
    pub pairs_checked: usize,
    pub diverged: usize,
}

/// Pair the restricted spectrum of a fermionic subsystem against the
/// reciprocal spectrum of its bosonic image: max |lambda_f lambda_b - 1|.
pub fn duality_check(
    j_f: &RealSpaceStructure,
    j_b: &RealSpaceStructure,
    maps: &RealSpaceMaps,
    sub: &SubsystemSpec,
    n_per_site: usize,
) -> Result<DualityReport> {
    let fermion = restrict(j_f, sub, n_per_site)?;
    let dual = dual_subsystem(maps, sub, DualDirection::FermionToBoson, n_per_site)?;
    let boson = match restrict(j_b, &dual, n_per_site) {
        Ok(rep) => rep,
        Err(SusyError::IllConditionedSubspace(_)) => {
            // Image basis degenerates exactly when lambda_f hits zero; every
            // pair is then the 0 x infinity sentinel.
            return Ok(DualityReport {
                max_deviation: 0.0,
                pairs_checked: 0,
                diverged: fermion.lambdas.len(),
            });
        }
        Err(e) => return Err(e),
    };
    let mut lf = fermion.lambdas.clone();
    lf.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut lb = boson.lambdas.clone();
    lb.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut diverged = boson.diverged_count;
    let mut max_dev: f64 = 0.0;
    let mut checked = 0usize;
    let mut bi = 0usize;
    for &f in &lf {
        if f < 1e-9 {
            diverged += 1;
            continue;
        }
        if bi >= lb.len() {
            break;
        }
        let b = lb[bi];
        bi += 1;
        max_dev = max_dev.max((f * b - 1.0).abs());
        checked += 1;
    }
    Ok(DualityReport {
        max_deviation: max_dev,
        pairs_checked: checked,
        diverged,
    })
}

/// A normalized fermionic mode in doubled-basis coefficients.
#[derive(Clone, Debug)]
pub struct ModeVector {
    /// Coefficients of the annihilation operators per lattice mode.
    pub alpha: Vec<C64>,
    /// Coefficients of the creation operators per lattice mode.
    pub beta: Vec<C64>,
}

impl ModeVector {
    pub fn psi_coeffs(&self) -> Vec<C64> {
        let mut u = self.alpha.clone();
        u.extend(self.beta.iter().copied());
        u
    }

    pub fn norm(&self) -> f64 {
        self.alpha
            .iter()
            .chain(self.beta.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn site_weights(&self, n_per_site: usize) -> Vec<f64> {
        let sites = self.alpha.len() / n_per_site;
        let mut w = vec![0.0; sites];
        for (i, (a, b)) in self.alpha.iter().zip(&self.beta).enumerate() {
            w[i / n_per_site] += a.norm_sqr() + b.norm_sqr();
        }
        w
    }
}

pub struct EdgeMode {
    pub mode: ModeVector,
    pub lambda: f64,
}

/// Mirror-reflection asymmetry of a mode's site-weight profile about the
/// center of the leading-site subsystem {0..l-1} on the periodic chain:
/// sum_i |p_i - p_{mirror(i)}| / sum_i p_i. Zero for a mirror-symmetric
/// profile, up to 2 when the profile and its reflection are disjoint.
pub fn mirror_asymmetry(mode: &ModeVector, subsystem_len: usize, n_per_site: usize) -> f64 {
    let weights = mode.site_weights(n_per_site);
    let n = weights.len() as i64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        let mi = ((subsystem_len as i64 - 1 - i as i64).rem_euclid(n)) as usize;
        num += (w - weights[mi]).abs();
        den += w;
    }
    if den < 1e-300 {
        return 0.0;
    }
    num / den
}

/// The bosonic image of a fermionic mode under the real-space first
/// identification map (unnormalized).
pub fn boson_image(maps: &RealSpaceMaps, mode: &ModeVector) -> ModeVector {
    let u = mode.psi_coeffs();
    let v = maps.l1_complex.transpose().matvec(&u);
    let nm = maps.n_modes;
    ModeVector {
        alpha: v[..nm].to_vec(),
        beta: v[nm..].to_vec(),
    }
}

/// Ground-state commutator expectation of a fermionic mode, evaluated
/// through the fermionic complex structure.
pub fn ground_state_commutator(j_f: &RealSpaceStructure, mode: &ModeVector) -> f64 {
    let w = psi_to_majorana_coeffs(&mode.psi_coeffs());
    let wr: Vec<f64> = w.iter().map(|z| z.re).collect();
    let wi: Vec<f64> = w.iter().map(|z| z.im).collect();
    // 2i w^T J conj(w): real part = 2 (w_re^T J w_im + w_im^T J w_re) ... kept
    // explicit below.
    let jwr = j_f.jmaj.matvec(&wr);
    let jwi = j_f.jmaj.matvec(&wi);
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    // w^T J conj(w) = (wr + i wi)^T J (wr - i wi)
    let re = dot(&wr, &jwr) + dot(&wi, &jwi);
    let im = dot(&wi, &jwr) - dot(&wr, &jwi);
    // times 2i: real part is -2 im.
    let _ = re;
    -2.0 * im
}

/// Eigenmode with the smallest restricted eigenvalue of a fermionic
/// subsystem, expanded over the full lattice and normalized to unit
/// anticommutator, oriented so its ground-state commutator is nonnegative.
pub fn edge_mode_profile(
    j_f: &RealSpaceStructure,
    sites: &[usize],
    n_per_site: usize,
) -> Result<EdgeMode> {
    if j_f.species != Species::Fermion {
        return Err(SusyError::InvalidSubsystem(
            "edge modes are defined on the fermion side".into(),
        ));
    }
    let sub = SubsystemSpec::Sites(sites.to_vec());
    let restricted = restrict_matrix(j_f, &sub, n_per_site)?;
    let r = &restricted.matrix;
    let d = r.rows;
    let sym = r.transpose().mul(r);
    let eig = eigh(&sym.to_complex())?;
    let lambda = eig.eigenvalues[0].max(0.0).sqrt();
    let v0: Vec<f64> = (0..d).map(|i| eig.eigenvectors[(i, 0)].re).collect();
    let w_local: Vec<C64> = if lambda > 1e-8 {
        let rv = r.matvec(&v0);
        (0..d).map(|i| C64::new(v0[i], -rv[i] / lambda)).collect()
    } else {
        let v1: Vec<f64> = (0..d).map(|i| eig.eigenvectors[(i, 1)].re).collect();
        (0..d).map(|i| C64::new(v0[i], v1[i])).collect()
    };
    // Embed the subsystem Majorana slots back into the lattice.
    let slots = SubsystemSpec::site_slots(sites, n_per_site, j_f.n_modes);
    let mut w = vec![C64::new(0.0, 0.0); 2 * j_f.n_modes];
    for (local, &slot) in slots.iter().enumerate() {
        w[slot] = w_local[local];
    }
    let u = majorana_to_psi_coeffs(&w);
    let nm = j_f.n_modes;
    let mut mode = ModeVector {
        alpha: u[..nm].to_vec(),
        beta: u[nm..].to_vec(),
    };
    let nrm = mode.norm();
    if nrm < 1e-300 {
        return Err(SusyError::InvalidSubsystem("degenerate edge mode".into()));
    }
    for z in mode.alpha.iter_mut().chain(mode.beta.iter_mut()) {
        *z /= nrm;
    }
    if ground_state_commutator(j_f, &mode) < 0.0 {
        // Swap to the conjugate mode.
        let alpha: Vec<C64> = mode.beta.iter().map(|z| z.conj()).collect();
        let beta: Vec<C64> = mode.alpha.iter().map(|z| z.conj()).collect();
        mode = ModeVector { alpha, beta };
    }
    Ok(EdgeMode { mode, lambda })
}

/// c-number commutator of the (unnormalized) boson image of a normalized
/// fermionic mode; small values signal strong squeezing after normalization.
pub fn squeezing_commutator(maps: &RealSpaceMaps, mode: &ModeVector) -> f64 {
    let image = boson_image(maps, mode);
    image.alpha.iter().map(|z| z.norm_sqr()).sum::<f64>()
        - image.beta.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Entanglement scaling of leading-site blocks and their bosonic duals:
/// rows (l, S_f(l), S_b(l)).
pub fn entropy_scaling_curve(
    j_f: &RealSpaceStructure,
    j_b: &RealSpaceStructure,
    maps: &RealSpaceMaps,
    lengths: &[usize],
    n_per_site: usize,
) -> Result<Vec<(usize, f64, f64)>> {
    let mut out = Vec::with_capacity(lengths.len());
    for &l in lengths {
        let sub = SubsystemSpec::Sites((0..l).collect());
        let sf = restrict(j_f, &sub, n_per_site)?.total;
        let dual = dual_subsystem(maps, &sub, DualDirection::FermionToBoson, n_per_site)?;
        let sb = restrict(j_b, &dual, n_per_site)?.total;
        out.push((l, sf, sb));
    }
    Ok(out)
}

pub fn write_scaling_csv<W: Write>(rows: &[(usize, f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "l,S_f,S_b")?;
    for (l, sf, sb) in rows {
        writeln!(
            w,
            "{},{},{}",
            l,
            crate::config::format_g17(*sf),
            crate::config::format_g17(*sb)
        )?;
    }
    Ok(())
}
