//! Command implementations behind the `susy-band` binary. Every subcommand
//! takes a validated configuration, runs the corresponding pipeline, and
//! writes deterministic CSV/JSON files into the output directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bloch::{self, AzClass, ProfileBlock};
use crate::config::{format_g17, Construction, ExperimentConfig, ModelSpec};
use crate::entanglement::{
    duality_check, edge_mode_profile, entropy_scaling_curve, realspace_maps, realspace_structure,
    restrict, squeezing_commutator, write_scaling_csv, Species, SubsystemSpec,
};
use crate::error::{Result, SusyError};
use crate::fock;
use crate::models;
use crate::numerics::CMatrix;
use crate::supercharge::{
    gauge_boson_number_conserving, gauge_fermion_number_conserving, Supercharge,
};
use crate::susy_pair::{build_pair, spectral_duality_report, write_spectrum_csv, SusyPair};
use crate::topology;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Pair,
    Decay,
    Entangle,
    Duality,
    Chern,
    Winding,
    Gauge,
    Classify { class: String, dim: u8 },
    Oracle,
    All,
}

fn ensure_dir(dir: &str) -> Result<PathBuf> {
    let p = PathBuf::from(dir);
    fs::create_dir_all(&p)?;
    Ok(p)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

fn preamble(cfg: &ExperimentConfig) -> String {
    format!(
        "\"config_hash\":\"{}\",\"gap_floor\":{},\"ode_tol\":{}",
        cfg.hash(),
        format_g17(cfg.gap_floor),
        format_g17(cfg.ode_tol)
    )
}

fn build_supercharge(cfg: &ExperimentConfig) -> Result<Supercharge> {
    match (&cfg.model, cfg.construction) {
        (ModelSpec::KitaevChain { mu, t, n }, Construction::ClosedForm) => {
            Ok(models::kitaev_chain(*mu, *t, *n)?.q)
        }
        (ModelSpec::KitaevChain { mu, t, n }, Construction::Bdi) => {
            let (hy, hz) = models::kitaev_bdi_blocks(*mu, *t, *n)?;
            crate::supercharge::bdi_supercharge(&hy, &hz)
        }
        (ModelSpec::KitaevChain { mu, t, n }, Construction::General) => {
            let model = models::kitaev_chain(*mu, *t, *n)?;
            crate::supercharge::from_hf_general(&model.h_f, cfg.gap_floor)
        }
        (ModelSpec::ChiralSc { m, nx, ny }, Construction::General) => {
            let model = models::chiral_sc(*m, *nx, *ny)?;
            crate::supercharge::from_hf_general(&model.h_f, cfg.gap_floor)
        }
        (ModelSpec::ChiralSc { m, nx, ny }, _) => Ok(models::chiral_sc(*m, *nx, *ny)?.q),
    }
}

fn build_model_pair(cfg: &ExperimentConfig) -> Result<SusyPair> {
    let q = build_supercharge(cfg)?;
    build_pair(q, cfg.gap_floor)
}

pub fn run(cmd: &Command, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    match cmd {
        Command::Pair => run_pair(cfg),
        Command::Decay => run_decay(cfg),
        Command::Entangle => run_entangle(cfg),
        Command::Duality => run_duality(cfg),
        Command::Chern => run_chern(cfg),
        Command::Winding => run_winding(cfg),
        Command::Gauge => run_gauge(cfg),
        Command::Classify { class, dim } => run_classify(class, *dim).map(|_| vec![]),
        Command::Oracle => run_oracle(cfg),
        Command::All => {
            let mut files = Vec::new();
            files.extend(run_pair(cfg)?);
            files.extend(run_decay(cfg)?);
            if matches!(cfg.model, ModelSpec::ChiralSc { .. }) {
                files.extend(run_chern(cfg)?);
            } else {
                files.extend(run_entangle(cfg)?);
                files.extend(run_duality(cfg)?);
                files.extend(run_winding(cfg)?);
                files.extend(run_gauge(cfg)?);
                files.extend(run_oracle(cfg)?);
            }
            Ok(files)
        }
    }
}

fn run_pair(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = ensure_dir(&cfg.output_dir)?;
    let pair = build_model_pair(cfg)?;
    let spectrum_path = dir.join("spectrum.csv");
    let mut buf = Vec::new();
    write_spectrum_csv(&pair, &mut buf)?;
    write_file(&spectrum_path, std::str::from_utf8(&buf).expect("utf8"))?;

    let duality = spectral_duality_report(&pair)?;
    let phs_f = bloch::check_phs_bdg(&pair.h_f, -1.0);
    let phs_b = bloch::check_phs_bdg(&pair.h_b, 1.0);
    let report_path = dir.join("pair_report.json");
    let json = format!(
        "{{{},\"spectral_duality_max_mismatch\":{},\"phs_fermion\":{},\"phs_boson\":{},\"min_sigma\":{}}}\n",
        preamble(cfg),
        format_g17(duality),
        format_g17(phs_f),
        format_g17(phs_b),
        format_g17(pair.q.min_sigma())
    );
    write_file(&report_path, &json)?;
    if duality > 1e-9 {
        return Err(SusyError::DimensionMismatch(format!(
            "spectral duality violated: {duality:.3e}"
        )));
    }
    Ok(vec![spectrum_path, report_path])
}

fn run_decay(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = ensure_dir(&cfg.output_dir)?;
    let q = build_supercharge(cfg)?;
    let profile = bloch::fourier_ray(&q.field, &cfg.ray, cfg.r_max)?;
    let csv_path = dir.join("decay_profile.csv");
    let mut buf = Vec::new();
    profile.write_csv(&mut buf)?;
    write_file(&csv_path, std::str::from_utf8(&buf).expect("utf8"))?;

    let window = cfg.fit_window.unwrap_or((cfg.r_max / 10 + 1, cfg.r_max));
    let fit_d = bloch::fit_decay(&profile, ProfileBlock::Diag, window)?;
    let fit_o = bloch::fit_decay(&profile, ProfileBlock::OffDiag, window)?;
    let fit_path = dir.join("decay_fit.json");
    let model_name = |m: bloch::DecayModel| match m {
        bloch::DecayModel::Exponential => "exponential",
        bloch::DecayModel::PowerLaw => "powerlaw",
    };
    let json = format!(
        "{{{},\"window\":[{},{}],\"diag\":{{\"model\":\"{}\",\"rate_or_exponent\":{},\"goodness\":{}}},\"offdiag\":{{\"model\":\"{}\",\"rate_or_exponent\":{},\"goodness\":{}}}}}\n",
        preamble(cfg),
        window.0,
        window.1,
        model_name(fit_d.model),
        format_g17(fit_d.rate_or_exponent),
        format_g17(fit_d.goodness),
        model_name(fit_o.model),
        format_g17(fit_o.rate_or_exponent),
        format_g17(fit_o.goodness),
    );
    write_file(&fit_path, &json)?;
    Ok(vec![csv_path, fit_path])
}

fn one_d_sites(cfg: &ExperimentConfig) -> Result<usize> {
    match cfg.model {
        ModelSpec::KitaevChain { n, .. } => Ok(n),
        _ => Err(SusyError::ConfigInvalid(
            "entanglement subcommands need a 1D model".into(),
        )),
    }
}

fn run_entangle(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = ensure_dir(&cfg.output_dir)?;
    let sites = one_d_sites(cfg)?;
    let pair = build_model_pair(cfg)?;
    let j_f = realspace_structure(&pair, Species::Fermion)?;
    let j_b = realspace_structure(&pair, Species::Boson)?;
    let maps = realspace_maps(&pair)?;
    let n_per_site = pair.q.n();
    let mut files = Vec::new();
    for &l in &cfg.subsystem_lengths {
        if l > sites {
            return Err(SusyError::ConfigInvalid(format!(
                "subsystem length {l} exceeds chain"
            )));
        }
        let sub = SubsystemSpec::Sites((0..l).collect());
        let rep = restrict(&j_f, &sub, n_per_site)?;
        let path = dir.join(format!("entanglement_f_l{l}.json"));
        let mut buf = Vec::new();
        rep.write_json(&mut buf)?;
        write_file(&path, std::str::from_utf8(&buf).expect("utf8"))?;
        files.push(path);
    }
    let curve = entropy_scaling_curve(&j_f, &j_b, &maps, &cfg.subsystem_lengths, n_per_site)?;
    let path = dir.join("scaling.csv");
    let mut buf = Vec::new();
    write_scaling_csv(&curve, &mut buf)?;
    write_file(&path, std::str::from_utf8(&buf).expect("utf8"))?;
    files.push(path);

    // Edge mode and squeezing of the largest requested subsystem.
    if let Some(&l) = cfg.subsystem_lengths.iter().max() {
        let edge = edge_mode_profile(&j_f, &(0..l).collect::<Vec<_>>(), n_per_site)?;
        let comm = squeezing_commutator(&maps, &edge.mode);
        let path = dir.join("edge_mode.json");
        let weights = edge.mode.site_weights(n_per_site);
        let w_str: Vec<String> = weights.iter().map(|x| format_g17(*x)).collect();
        let json = format!(
            "{{{},\"subsystem_length\":{},\"lambda\":{},\"boson_commutator\":{},\"site_weights\":[{}]}}\n",
            preamble(cfg),
            l,
            format_g17(edge.lambda),
            format_g17(comm),
            w_str.join(",")
        );
        write_file(&path, &json)?;
        files.push(path);
    }
    Ok(files)
}

fn run_duality(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = ensure_dir(&cfg.output_dir)?;
    let sites = one_d_sites(cfg)?;
    let pair = build_model_pair(cfg)?;
    let j_f = realspace_structure(&pair, Species::Fermion)?;
    let j_b = realspace_structure(&pair, Species::Boson)?;
    let maps = realspace_maps(&pair)?;
    let n_per_site = pair.q.n();
    let mut rows = Vec::new();
    for &l in &cfg.subsystem_lengths {
        if l > sites {
            return Err(SusyError::ConfigInvalid(format!(
                "subsystem length {l} exceeds chain"
            )));
        }
        let sub = SubsystemSpec::Sites((0..l).collect());
        let rep = duality_check(&j_f, &j_b, &maps, &sub, n_per_site)?;
        if rep.max_deviation > 1e-6 {
            return Err(SusyError::DimensionMismatch(format!(
                "entanglement duality violated at l = {l}: {:.3e}",
                rep.max_deviation
            )));
        }
        rows.push(format!(
            "{{\"l\":{},\"max_deviation\":{},\"pairs\":{},\"diverged\":{}}}",
            l,
            format_g17(rep.max_deviation),
            rep.pairs_checked,
            rep.diverged
        ));
    }
    let path = dir.join("duality.json");
    let json = format!(
        "{{{},\"subsystems\":[{}]}}\n",
        preamble(cfg),
        rows.join(",")
    );
    write_file(&path, &json)?;
    Ok(vec![path])
}

fn run_chern(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = ensure_dir(&cfg.output_dir)?;
    let h_f = match &cfg.model {
        ModelSpec::ChiralSc { m, nx, ny } => models::chiral_sc(*m, *nx, *ny)?.h_f,
        _ => {
            return Err(SusyError::ConfigInvalid(
                "chern needs the chiral_sc model".into(),
            ))
        }
    };
    let c = topology::chern_number(&h_f, cfg.gap_floor)?;
    let path = dir.join("chern.json");
    let json = format!(
        "{{{},\"chern\":{},\"residual\":{}}}\n",
        preamble(cfg),
        c.value,
        format_g17(c.residual)
    );
    write_file(&path, &json)?;
    Ok(vec![path])
}

fn run_winding(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = ensure_dir(&cfg.output_dir)?;
    let q = build_supercharge(cfg)?;
    if q.grid().dim() != 1 {
        return Err(SusyError::ConfigInvalid("winding needs a 1D model".into()));
    }
    let mp = topology::winding_parity_mirror_test(&q)?;
    let path = dir.join("winding.json");
    let json = format!(
        "{{{},\"winding\":{},\"parity\":{},\"mirror_symmetric\":{}}}\n",
        preamble(cfg),
        mp.winding,
        mp.parity,
        mp.is_mirror_symmetric
    );
    write_file(&path, &json)?;
    Ok(vec![path])
}

fn run_gauge(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = ensure_dir(&cfg.output_dir)?;
    let q = build_supercharge(cfg)?;
    let n = q.n();
    let z = CMatrix::z_matrix(n);
    let boson = gauge_boson_number_conserving(&q, cfg.gap_floor)?;
    let hb = boson.q.generated_hb();
    let mut z_comm_b: f64 = 0.0;
    for i in 0..hb.num_points() {
        z_comm_b = z_comm_b.max(z.mul(hb.at(i)).max_diff(&hb.at(i).mul(&z)));
    }
    let fermion = gauge_fermion_number_conserving(&q, cfg.gap_floor)?;
    let hf = fermion.q.generated_hf();
    let mut z_comm_f: f64 = 0.0;
    for i in 0..hf.num_points() {
        z_comm_f = z_comm_f.max(z.mul(hf.at(i)).max_diff(&hf.at(i).mul(&z)));
    }
    let path = dir.join("gauge.json");
    let json = format!(
        "{{{},\"boson_number_conservation\":{},\"fermion_number_conservation\":{}}}\n",
        preamble(cfg),
        format_g17(z_comm_b),
        format_g17(z_comm_f)
    );
    write_file(&path, &json)?;
    let scale = 1.0 + q.field.inner.max_field_norm().powi(2);
    if z_comm_b > 1e-9 * scale || z_comm_f > 1e-9 * scale {
        return Err(SusyError::DimensionMismatch(format!(
            "gauge transformation failed to conserve particle number: {z_comm_b:.3e} / {z_comm_f:.3e}"
        )));
    }
    Ok(vec![path])
}

fn run_classify(class: &str, dim: u8) -> Result<()> {
    let az = AzClass::from_str(class)?;
    let entry = topology::classify(az, dim);
    println!(
        "{{\"group\":\"{}\",\"category\":\"{}\"}}",
        entry.group.label(),
        entry.category.label()
    );
    Ok(())
}

fn run_oracle(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = ensure_dir(&cfg.output_dir)?;
    let (mu, t) = match cfg.model {
        ModelSpec::KitaevChain { mu, t, .. } => (mu, t),
        _ => {
            return Err(SusyError::ConfigInvalid(
                "oracle runs on the kitaev_chain model".into(),
            ))
        }
    };
    // Two-site chain, closed-form supercharge, cutoff 6.
    let model = models::kitaev_chain(mu, t, 2)?;
    let q_nambu = crate::entanglement::real_space_operator(&model.q.field);
    let (u, tt) = fock::couplings_from_nambu(&q_nambu)?;
    let space = fock::FockSpace::new(2, 6)?;
    let q_op = fock::build_q(&space, &u, &tt)?;
    let zmat = CMatrix::z_matrix(2);
    let hf = q_nambu.mul(&zmat).mul(&q_nambu.dagger());
    let hb = q_nambu.dagger().mul(&q_nambu);
    let hf_op = fock::build_fermion_quadratic(&space, &hf)?;
    let hb_op = fock::build_boson_quadratic(&space, &hb)?;
    let residual = fock::verify_susy_algebra(&q_op, &hf_op, &hb_op, &space)?;
    let pairing = fock::spectrum_pairing_check(&hf, &hb)?;
    let path = dir.join("oracle.json");
    let json = format!(
        "{{{},\"susy_residual\":{},\"gap_mismatch\":{}}}\n",
        preamble(cfg),
        format_g17(residual),
        format_g17(pairing.max_gap_mismatch)
    );
    write_file(&path, &json)?;
    if residual > 1e-10 || pairing.max_gap_mismatch > 1e-9 {
        return Err(SusyError::DimensionMismatch(format!(
            "oracle failed: residual {residual:.3e}, gap mismatch {:.3e}",
            pairing.max_gap_mismatch
        )));
    }
    Ok(vec![path])
}

/// Exit code for a CLI error: invalid configuration maps to 2, computation
/// failures to 1.
pub fn exit_code(err: &SusyError) -> i32 {
    match err {
        SusyError::ConfigInvalid(_) => 2,
        _ => 1,
    }
}
