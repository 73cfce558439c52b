//! Python bindings: the Kitaev-chain pipeline end to end plus the
//! grid-level operations (Chern numbers, classification table, decay fits).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use susy_band::bloch::{fit_decay, fourier_ray, AzClass, DecayModel, ProfileBlock};
use susy_band::entanglement::{
    boson_image, dual_subsystem, duality_check, edge_mode_profile, entropy_scaling_curve,
    mirror_asymmetry, realspace_maps, realspace_structure, restrict, squeezing_commutator,
    DualDirection, RealSpaceMaps, RealSpaceStructure, Species, SubsystemSpec,
};
use susy_band::models;
use susy_band::supercharge::Supercharge;
use susy_band::susy_pair::{build_pair, spectral_duality_report, SusyPair};
use susy_band::topology;
use susy_band::SusyError;

fn to_py_err(e: SusyError) -> PyErr {
    match e {
        SusyError::ConfigInvalid(msg) => PyValueError::new_err(msg),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// A Kitaev chain with its closed-form supercharge, SUSY pair, real-space
/// complex structures, and identification maps.
#[pyclass]
struct KitaevChain {
    pair: SusyPair,
    j_f: RealSpaceStructure,
    j_b: RealSpaceStructure,
    maps: RealSpaceMaps,
    sites: usize,
}

#[pymethods]
impl KitaevChain {
    #[new]
    fn new(mu: f64, t: f64, sites: usize) -> PyResult<Self> {
        let model = models::kitaev_chain(mu, t, sites).map_err(to_py_err)?;
        let pair = build_pair(model.q, susy_band::DEFAULT_GAP_FLOOR).map_err(to_py_err)?;
        let j_f = realspace_structure(&pair, Species::Fermion).map_err(to_py_err)?;
        let j_b = realspace_structure(&pair, Species::Boson).map_err(to_py_err)?;
        let maps = realspace_maps(&pair).map_err(to_py_err)?;
        Ok(KitaevChain {
            pair,
            j_f,
            j_b,
            maps,
            sites,
        })
    }

    /// One-particle energies per momentum index.
    fn spectrum(&self) -> Vec<Vec<f64>> {
        self.pair.spectrum.clone()
    }

    /// Max mismatch between the fermionic and bosonic dynamical spectra.
    fn spectral_duality(&self) -> PyResult<f64> {
        spectral_duality_report(&self.pair).map_err(to_py_err)
    }

    /// Restricted eigenvalues, per-mode entropies, and total entropy of the
    /// leading l sites of the fermion chain.
    fn fermion_entanglement(&self, l: usize) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
        let sub = SubsystemSpec::Sites((0..l).collect());
        let rep = restrict(&self.j_f, &sub, 1).map_err(to_py_err)?;
        Ok((rep.lambdas, rep.entropies, rep.total))
    }

    /// (l, S_f, S_b) rows for fermionic blocks and their bosonic duals.
    fn entropy_scaling(&self, lengths: Vec<usize>) -> PyResult<Vec<(usize, f64, f64)>> {
        entropy_scaling_curve(&self.j_f, &self.j_b, &self.maps, &lengths, 1).map_err(to_py_err)
    }

    /// Max |lambda_f * lambda_b - 1| over the subsystem of the leading l
    /// sites, plus the number of divergent sentinel pairs.
    fn duality_deviation(&self, l: usize) -> PyResult<(f64, usize)> {
        let sub = SubsystemSpec::Sites((0..l).collect());
        let rep = duality_check(&self.j_f, &self.j_b, &self.maps, &sub, 1).map_err(to_py_err)?;
        Ok((rep.max_deviation, rep.diverged))
    }

    /// Minimal-lambda entanglement edge mode of the leading l sites:
    /// (lambda, site weights, boson-image commutator, boson mirror asymmetry).
    fn edge_mode(&self, l: usize) -> PyResult<(f64, Vec<f64>, f64, f64)> {
        let edge =
            edge_mode_profile(&self.j_f, &(0..l).collect::<Vec<_>>(), 1).map_err(to_py_err)?;
        let comm = squeezing_commutator(&self.maps, &edge.mode);
        let image = boson_image(&self.maps, &edge.mode);
        let asym = mirror_asymmetry(&image, l, 1);
        Ok((edge.lambda, edge.mode.site_weights(1), comm, asym))
    }

    /// Total bosonic entropy of the dual of the leading l fermion sites.
    fn dual_boson_entropy(&self, l: usize) -> PyResult<f64> {
        let sub = SubsystemSpec::Sites((0..l).collect());
        let dual = dual_subsystem(&self.maps, &sub, DualDirection::FermionToBoson, 1)
            .map_err(to_py_err)?;
        let rep = restrict(&self.j_b, &dual, 1).map_err(to_py_err)?;
        Ok(rep.total)
    }

    /// Winding number of det q(k) and the mirror-symmetry predicate.
    fn winding(&self) -> PyResult<(i64, bool)> {
        let mp = topology::winding_parity_mirror_test(&self.pair.q).map_err(to_py_err)?;
        Ok((mp.winding, mp.is_mirror_symmetric))
    }

    fn __repr__(&self) -> String {
        format!("KitaevChain(sites={})", self.sites)
    }
}

/// Classification-table lookup: (group, category) for an AZ class and
/// dimension.
#[pyfunction]
fn classify(class: &str, dim: u8) -> PyResult<(String, String)> {
    let az: AzClass = class.parse().map_err(to_py_err)?;
    let entry = topology::classify(az, dim);
    Ok((
        entry.group.label().to_string(),
        entry.category.label().to_string(),
    ))
}

/// Lattice Chern number of the chiral superconductor's lower band.
#[pyfunction]
fn chern_number(m: f64, nx: usize, ny: usize) -> PyResult<(i64, f64)> {
    let model = models::chiral_sc(m, nx, ny).map_err(to_py_err)?;
    let c = topology::chern_number(&model.h_f, susy_band::DEFAULT_GAP_FLOOR).map_err(to_py_err)?;
    Ok((c.value, c.residual))
}

/// Von Neumann entropy of one mode with restricted eigenvalue lambda.
#[pyfunction]
fn mode_entropy(lambda: f64, species: &str) -> PyResult<f64> {
    let sp = match species {
        "fermion" => Species::Fermion,
        "boson" => Species::Boson,
        other => return Err(PyValueError::new_err(format!("unknown species {other}"))),
    };
    Ok(susy_band::entanglement::mode_entropy(lambda, sp))
}

/// One-particle dispersion of the Kitaev chain.
#[pyfunction]
fn kitaev_epsilon(mu: f64, t: f64, k: f64) -> f64 {
    models::kitaev_epsilon(mu, t, k)
}

fn describe_fit(
    supercharge: &Supercharge,
    ray: Vec<i64>,
    r_max: usize,
    window: (usize, usize),
    block: ProfileBlock,
) -> PyResult<(String, f64, f64)> {
    let profile = fourier_ray(&supercharge.field, &ray, r_max).map_err(to_py_err)?;
    let fit = fit_decay(&profile, block, window).map_err(to_py_err)?;
    let name = match fit.model {
        DecayModel::Exponential => "exponential",
        DecayModel::PowerLaw => "powerlaw",
    };
    Ok((name.to_string(), fit.rate_or_exponent, fit.goodness))
}

/// Decay fits of the chiral superconductor's supercharge along a ray:
/// ((model, rate, R2) for the hopping block, same for the pairing block).
#[pyfunction]
#[pyo3(signature = (m, n, r_max=60, lo=8, hi=50))]
fn chiral_sc_decay(
    m: f64,
    n: usize,
    r_max: usize,
    lo: usize,
    hi: usize,
) -> PyResult<((String, f64, f64), (String, f64, f64))> {
    let model = models::chiral_sc(m, n, n).map_err(to_py_err)?;
    let diag = describe_fit(&model.q, vec![1, 1], r_max, (lo, hi), ProfileBlock::Diag)?;
    let off = describe_fit(&model.q, vec![1, 1], r_max, (lo, hi), ProfileBlock::OffDiag)?;
    Ok((diag, off))
}

#[pymodule]
fn susy_band_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<KitaevChain>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(chern_number, m)?)?;
    m.add_function(wrap_pyfunction!(mode_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(kitaev_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(chiral_sc_decay, m)?)?;
    Ok(())
}
