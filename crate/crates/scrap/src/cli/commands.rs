use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use super::{hex_digest, parse_axis, CostTag, RunManifest, RunWriter, ScenarioConfig};
use crate::dynamics::{conservation_report, integrate_bloch, ConservationReport};
use crate::error::{Error, Result};
use crate::field::GaussianField;
use crate::geophase::{geometric_phase, ControlPath};
use crate::inhom::{
    per_z_trajectories, realized_field, stability_map, PerturbationSpec, StabilityScan,
};
use crate::landscape::{
    adiabaticity_map, bloch_measures, critical_points, efficiency_map, ArgMax, GridMap, Measure,
};
use crate::model::{self, BlochVector, PulseParams};
use crate::pmp::{
    guess_ladder, solve_shooting, CostFunctional, Extremal, ShootingConfig, ShootingProblem,
};

#[derive(Serialize)]
struct MapSummary<'a> {
    measure: Measure,
    probe_time: f64,
    params: &'a PulseParams,
    missing_cells: usize,
    argmax: Option<ArgMax>,
}

fn write_map(writer: &mut RunWriter, name: &str, map: &GridMap, cfg: &ScenarioConfig) -> Result<()> {
    let mut csv = Vec::new();
    map.write_csv(&mut csv)?;
    writer.write(&format!("{name}.csv"), &csv)?;
    writer.write_json(
        &format!("{name}_summary.json"),
        &MapSummary {
            measure: map.measure,
            probe_time: map.probe_time,
            params: &cfg.pulse,
            missing_cells: map.missing_cells(),
            argmax: map.argmax(),
        },
    )
}

pub fn adiabatic_map(cfg: &ScenarioConfig) -> Result<()> {
    cfg.grid.validate()?;
    let probe = cfg.probe_or_default();
    let mut writer = RunWriter::create(cfg)?;

    let p2 = efficiency_map(Measure::AdiabaticP2, &cfg.grid, &cfg.pulse, cfg.window.0, probe, &cfg.integrator)?;
    write_map(&mut writer, "adiabatic_p2_map", &p2, cfg)?;

    let ad = adiabaticity_map(probe, &cfg.grid, &cfg.pulse)?;
    write_map(&mut writer, "adiabaticity_map", &ad, cfg)?;

    let points = critical_points(
        probe,
        &cfg.pulse,
        (cfg.grid.tau_min, cfg.grid.tau_max),
        (0.0, cfg.grid.sigma_max),
    )?;
    #[derive(Serialize)]
    struct CriticalReport {
        probe_time: f64,
        points: Vec<crate::landscape::CriticalPoint>,
    }
    writer.write_json("critical_points.json", &CriticalReport { probe_time: probe, points })?;
    writer.finish()?;
    Ok(())
}

pub fn bloch_map(cfg: &ScenarioConfig) -> Result<()> {
    cfg.grid.validate()?;
    let probe = cfg.probe_or_default();
    let mut writer = RunWriter::create(cfg)?;
    let (pa, pb) = bloch_measures(&cfg.grid, &cfg.pulse, cfg.window.0, probe, &cfg.integrator)?;
    write_map(&mut writer, "pa_map", &pa, cfg)?;
    write_map(&mut writer, "pb_map", &pb, cfg)?;
    writer.finish()?;

    let total = cfg.grid.n_tau * cfg.grid.n_sigma;
    let failed = pa.missing_cells();
    let tolerated = total / 100;
    if failed > tolerated {
        return Err(Error::TooManyFailures { failed, total, tolerated });
    }
    Ok(())
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<()> {
    let pulse = match cfg.reduced {
        Some(rc) => cfg.pulse.with_reduced(rc),
        None => cfg.pulse,
    };
    let field = GaussianField::new(pulse);
    let traj = integrate_bloch(
        &field,
        BlochVector::SOUTH,
        cfg.window.0,
        cfg.window.1,
        &cfg.integrator,
        cfg.samples,
    )?;

    let mut writer = RunWriter::create(cfg)?;
    let mut csv = Vec::new();
    // interface trajectory without costates
    let bare = crate::dynamics::Trajectory {
        times: traj.times.clone(),
        states: traj.states.clone(),
        costates: None,
        controls: None,
        hamiltonian: None,
        norm_drift: traj.norm_drift,
    };
    bare.write_csv(&mut csv)?;
    writer.write("trajectory.csv", &csv)?;

    // adiabatic reference, correction and adiabaticity per sample
    let mut ref_csv = Vec::new();
    use std::io::Write as _;
    writeln!(ref_csv, "t,delta,omega,AD,rad1,rad2,rad3,rna1,rna2,rna3")?;
    let controls = traj.controls.as_ref().expect("gaussian field records controls");
    let mut max_rna1 = 0.0f64;
    let mut max_rna3 = 0.0f64;
    for i in 0..traj.times.len() {
        let s = &controls[i];
        let theta = model::mixing_angle(s)?;
        let r_ad = model::adiabatic_bloch(theta);
        let rna = model::nabc(&traj.states[i], &r_ad);
        let ad = model::adiabaticity(s)?;
        max_rna1 = max_rna1.max(rna[0].abs());
        max_rna3 = max_rna3.max(rna[2].abs());
        writeln!(
            ref_csv,
            "{},{},{},{},{},{},{},{},{},{}",
            traj.times[i], s.delta, s.omega, ad, r_ad.r1, r_ad.r2, r_ad.r3, rna[0], rna[1], rna[2]
        )?;
    }
    writer.write("adiabatic_reference.csv", &ref_csv)?;

    let (p1, p2) = model::populations(&traj.endpoint());
    #[derive(Serialize)]
    struct SimulateSummary {
        reduced: crate::model::ReducedCoords,
        max_abs_rna1: f64,
        max_abs_rna3: f64,
        final_p1: f64,
        final_p2: f64,
        norm_drift: f64,
    }
    writer.write_json(
        "summary.json",
        &SimulateSummary {
            reduced: pulse.reduced(),
            max_abs_rna1: max_rna1,
            max_abs_rna3: max_rna3,
            final_p1: p1,
            final_p2: p2,
            norm_drift: traj.norm_drift,
        },
    )?;
    writer.conservation = Some(conservation_report(&traj));
    writer.finish()?;
    Ok(())
}

fn build_cost(cfg: &ScenarioConfig, allowed: &[CostTag]) -> Result<CostFunctional> {
    if !allowed.contains(&cfg.cost) {
        return Err(Error::InvalidConfig(format!(
            "cost tag {:?} not valid for this command",
            cfg.cost
        )));
    }
    Ok(match cfg.cost {
        CostTag::Energy => CostFunctional::Energy,
        CostTag::FixedPumpEnergy => CostFunctional::FixedPumpEnergy { pump: cfg.pulse },
        CostTag::EnsembleLinear => {
            let inhom = cfg.perturbation.linear();
            inhom.validate()?;
            CostFunctional::EnsembleLinear { inhom }
        }
        CostTag::EnsembleZt => {
            let pert = cfg.perturbation.zt(cfg.window);
            pert.validate()?;
            if pert.amplitude > cfg.pulse.s0 {
                return Err(Error::InvalidConfig(
                    "perturbation amplitude exceeds the static detuning scale".into(),
                ));
            }
            CostFunctional::EnsembleZt { pert }
        }
        CostTag::MixedAdiabatic => CostFunctional::MixedAdiabatic,
    })
}

/// Costate seed for the oscillating extremal branch: half a control-plane
/// turn over the window. Used where a nontrivial Stark profile is wanted.
pub fn oscillating_branch_guess(window: (f64, f64)) -> [f64; 3] {
    let t = window.1 - window.0;
    [-PI / t, 3.0f64.sqrt() * PI / t, 0.0]
}

fn shooting_guesses(cfg: &ScenarioConfig, cost: &CostFunctional, prepend_oscillating: bool) -> Vec<Vec<f64>> {
    let expand = |p: &[f64; 3]| -> Vec<f64> {
        match cost {
            CostFunctional::MixedAdiabatic => vec![p[0], p[1], p[2], -0.05, 0.02],
            _ => vec![p[0], p[1], p[2]],
        }
    };
    let mut guesses = Vec::new();
    if let Some(g) = &cfg.shooting.initial_guess {
        guesses.push(g.clone());
    }
    if prepend_oscillating {
        guesses.push(expand(&oscillating_branch_guess(cfg.window)));
    }
    for p in guess_ladder(cfg.shooting.random_restarts, cfg.seed) {
        guesses.push(expand(&p));
    }
    guesses
}

fn shooting_config(cfg: &ScenarioConfig) -> ShootingConfig {
    ShootingConfig {
        tolerance: cfg.shooting.tolerance,
        max_iterations: cfg.shooting.max_iterations,
        random_restarts: cfg.shooting.random_restarts,
        seed: cfg.seed,
    }
}

#[derive(Serialize)]
struct ExtremalSummary {
    cost_tag: String,
    p_initial: Vec<f64>,
    residual: f64,
    iterations: usize,
    guess_index: usize,
    hamiltonian: f64,
    l_sq: f64,
    conservation: ConservationReport,
}

fn write_extremal(writer: &mut RunWriter, ex: &Extremal, out: &crate::pmp::ShootingOutcome) -> Result<()> {
    let traj = ex.to_trajectory();
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    writer.write("extremal.csv", &csv)?;
    let l0 = ex.angular_momentum(0);
    let report = conservation_report(&traj);
    writer.write_json(
        "extremal_summary.json",
        &ExtremalSummary {
            cost_tag: ex.cost_tag.clone(),
            p_initial: out.unknowns.clone(),
            residual: out.residual,
            iterations: out.iterations,
            guess_index: out.guess_index,
            hamiltonian: ex.hamiltonian[0],
            l_sq: model::dot(&l0, &l0),
            conservation: report,
        },
    )?;
    writer.conservation = Some(report);
    Ok(())
}

pub fn pmp(cfg: &ScenarioConfig) -> Result<()> {
    let cost = build_cost(cfg, &[CostTag::Energy, CostTag::FixedPumpEnergy, CostTag::MixedAdiabatic])?;
    let problem = ShootingProblem::pole_transfer(cfg.window, cost.clone());
    let guesses = shooting_guesses(cfg, &cost, false);
    let scfg = shooting_config(cfg);
    let mut writer = RunWriter::create(cfg)?;
    match solve_shooting(&problem, &guesses, &scfg, &cfg.integrator, cfg.samples) {
        Ok(out) => {
            write_extremal(&mut writer, &out.extremal, &out)?;
            writer.write_json("shooting_diagnostics.json", &out.attempts)?;
            writer.finish()?;
            Ok(())
        }
        Err(Error::ShootingFailed { best_residual, best_guess, diagnostics }) => {
            writer.write_json("shooting_diagnostics.json", &diagnostics)?;
            writer.finish()?;
            Err(Error::ShootingFailed { best_residual, best_guess, diagnostics: Vec::new() })
        }
        Err(e) => Err(e),
    }
}

pub fn ensemble(cfg: &ScenarioConfig) -> Result<()> {
    let kind = cfg.perturbation.kind.as_str();
    let (cost, spec) = match kind {
        "linear" => {
            let inhom = cfg.perturbation.linear();
            inhom.validate()?;
            (CostFunctional::EnsembleLinear { inhom }, PerturbationSpec::Linear(inhom))
        }
        "zt" => {
            let pert = cfg.perturbation.zt(cfg.window);
            pert.validate()?;
            (CostFunctional::EnsembleZt { pert }, PerturbationSpec::Zt(pert))
        }
        other => return Err(Error::InvalidConfig(format!("unknown perturbation kind '{other}'"))),
    };
    let problem = ShootingProblem::pole_transfer(cfg.window, cost.clone());
    let guesses = shooting_guesses(cfg, &cost, true);
    let scfg = shooting_config(cfg);
    let mut writer = RunWriter::create(cfg)?;
    let out = match solve_shooting(&problem, &guesses, &scfg, &cfg.integrator, cfg.samples) {
        Ok(out) => out,
        Err(Error::ShootingFailed { best_residual, best_guess, diagnostics }) => {
            writer.write_json("shooting_diagnostics.json", &diagnostics)?;
            writer.finish()?;
            return Err(Error::ShootingFailed { best_residual, best_guess, diagnostics: Vec::new() });
        }
        Err(e) => return Err(e),
    };
    write_extremal(&mut writer, &out.extremal, &out)?;

    let mut controls_csv = Vec::new();
    ControlPath::from_extremal(&out.extremal).write_csv(&mut controls_csv)?;
    writer.write("optimal_controls.csv", &controls_csv)?;

    // replay the single realized pulse pair across the z window
    let n_z = cfg.perturbation.z_count.max(2);
    let (z_min, z_max) = (cfg.perturbation.z_min, cfg.perturbation.z_max);
    let zs: Vec<f64> =
        (0..n_z).map(|i| z_min + (z_max - z_min) * i as f64 / (n_z - 1) as f64).collect();
    let base = realized_field(&out.extremal)?;
    let trajs = per_z_trajectories(
        &base,
        &spec,
        &zs,
        BlochVector::SOUTH,
        cfg.window,
        &cfg.integrator,
        cfg.samples,
    )?;
    let mut files = Vec::new();
    let mut endpoint_p2 = Vec::new();
    for (i, traj) in trajs.iter().enumerate() {
        let name = format!("traj_z{i:02}.csv");
        let mut csv = Vec::new();
        traj.write_csv(&mut csv)?;
        writer.write(&name, &csv)?;
        files.push(name);
        endpoint_p2.push(model::populations(&traj.endpoint()).1);
    }

    if let PerturbationSpec::Zt(pert) = &spec {
        // coarse (t, z) sample of the multiplicative perturbation surface
        let mut surf = Vec::new();
        use std::io::Write as _;
        write!(surf, "t\\z")?;
        for z in &zs {
            write!(surf, ",{}", z)?;
        }
        writeln!(surf)?;
        for i in 0..=100 {
            let t = cfg.window.0 + (cfg.window.1 - cfg.window.0) * i as f64 / 100.0;
            write!(surf, "{}", t)?;
            for &z in &zs {
                write!(surf, ",{}", pert.temporal(t) * pert.spatial(z))?;
            }
            writeln!(surf)?;
        }
        writer.write("perturbation_surface.csv", &surf)?;
    }

    #[derive(Serialize)]
    struct Bundle {
        kind: String,
        z_values: Vec<f64>,
        endpoint_p2: Vec<f64>,
        files: Vec<String>,
    }
    writer.write_json(
        "bundle.json",
        &Bundle { kind: kind.to_string(), z_values: zs, endpoint_p2, files },
    )?;
    writer.finish()?;
    Ok(())
}

pub fn stability(cfg: &ScenarioConfig) -> Result<()> {
    let axis = parse_axis(&cfg.stability.axis)?;
    let operating = cfg.perturbation.zt(cfg.window);
    operating.validate()?;
    let scfg = shooting_config(cfg);
    let base_guess = match &cfg.shooting.initial_guess {
        Some(g) => g.clone(),
        None => oscillating_branch_guess(cfg.window).to_vec(),
    };
    let scan = StabilityScan {
        axis,
        param_min: cfg.stability.param_min,
        param_max: cfg.stability.param_max,
        n_param: cfg.stability.n_param,
        n_z: cfg.stability.n_z,
        probe_fraction: cfg.stability.probe_fraction,
        threshold: cfg.stability.threshold,
        operating,
        base_guess,
        shooting: &scfg,
        integrator: &cfg.integrator,
    };
    let map = stability_map(&scan)?;

    let mut writer = RunWriter::create(cfg)?;
    let mut csv = Vec::new();
    map.write_csv(&mut csv)?;
    let label = axis.label();
    writer.write(&format!("stability_{label}.csv"), &csv)?;
    #[derive(Serialize)]
    struct StabilityReport {
        axis: &'static str,
        threshold: f64,
        probe_time: f64,
        acceptance_interval: Option<(f64, f64)>,
        operating_value: f64,
        operating_stable: Option<bool>,
        failed_cells: usize,
    }
    let operating_value = axis.value(&cfg.perturbation.zt(cfg.window));
    writer.write_json(
        &format!("stability_{label}.json"),
        &StabilityReport {
            axis: label,
            threshold: map.threshold,
            probe_time: map.probe_time,
            acceptance_interval: map.acceptance,
            operating_value,
            operating_stable: map.is_stable_at(operating_value),
            failed_cells: map.failed_cells,
        },
    )?;
    writer.finish()?;

    let total = cfg.stability.n_param;
    let tolerated = (total as f64 * 0.05).floor() as usize;
    if map.failed_cells > tolerated {
        return Err(Error::TooManyFailures { failed: map.failed_cells, total, tolerated });
    }
    Ok(())
}

pub fn geophase(cfg: &ScenarioConfig) -> Result<()> {
    let g = &cfg.geophase;
    let path = match g.source.as_str() {
        "circle" => ControlPath::circle(g.circle_radius, g.circle_samples),
        "cpr-pair" => ControlPath::gaussian_cpr_pair(),
        "file" => {
            let file = g
                .file
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("geophase.file required for source 'file'".into()))?;
            let reader = std::io::BufReader::new(std::fs::File::open(file)?);
            ControlPath::read_csv(reader)?
        }
        other => return Err(Error::InvalidConfig(format!("unknown geophase source '{other}'"))),
    };
    if !path.is_closed() && !g.allow_open {
        return Err(Error::InvalidConfig(
            "path is not closed; pass --allow-open to report the polar functional anyway".into(),
        ));
    }
    let report = geometric_phase(&path)?;
    let mut writer = RunWriter::create(cfg)?;
    let mut csv = Vec::new();
    path.write_csv(&mut csv)?;
    writer.write("path.csv", &csv)?;
    writer.write_json("phase_report.json", &report)?;
    writer.finish()?;
    Ok(())
}

pub fn verify(dir: &Path) -> Result<()> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path)?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("manifest: {e}")))?;
    let mut bad = 0usize;
    for f in &manifest.files {
        let bytes = std::fs::read(dir.join(&f.path))?;
        let digest = hex_digest(&bytes);
        if digest == f.sha256 {
            println!("OK       {}", f.path);
        } else {
            println!("MISMATCH {}", f.path);
            bad += 1;
        }
    }
    if bad > 0 {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{bad} file(s) changed since the run"),
        )));
    }
    println!("verified {} file(s)", manifest.files.len());
    Ok(())
}
