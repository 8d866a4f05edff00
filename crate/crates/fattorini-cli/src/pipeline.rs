//! The end-to-end run: build, analyze, check, synthesize, verify,
//! simulate, and write one report file per stage.

use std::fs;
use std::path::Path;

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::json;

use fattorini::criteria::{check_admissible, check_fattorini, minimal_k, ActuatorFamily};
use fattorini::error::Error;
use fattorini::io::{
    build_from_descriptor, read_csv_matrix, write_csv_matrix, write_matrix_market,
    MatrixMarketLayout,
};
use fattorini::models::{GeneratorModel, InputModel};
use fattorini::numeric::{spectral_abscissa, DEFAULT_CLUSTER_TOL};
use fattorini::report::{
    feedback_summary, matrix_to_nested, trace_summary, trace_to_csv, RankReportJson, SpectrumJson,
};
use fattorini::simulate::{estimate_decay, simulate_closed_loop, simulate_dynamic};
use fattorini::spectral::{compute_spectrum, real_basis, spectral_projector, SpectralData};
use fattorini::stabilize::{
    synthesize_dynamic, synthesize_feedback, verify_non_destabilization,
};

use crate::config::{ActuatorSpec, RunConfig};

/// How far along the pipeline a subcommand goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Spectrum,
    Check,
    Synthesize,
    Simulate,
}

/// Best-effort module attribution for the summary file.
fn module_of(code: &str) -> &'static str {
    match code {
        "invalid-dimension" | "invalid-support" => "operator-models",
        "separation-failure" | "contour-hits-spectrum" | "unsupported-input" => "spectral",
        "no-admissible-family" | "give-up" => "fattorini",
        "not-stabilizable" | "numerical-failure" => "stabilize",
        "singular-step" | "insufficient-data" => "simulate",
        "resource-limit" => "rectangle",
        "parse-error" | "io-error" => "io",
        _ => "core",
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("serialization failed: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

struct Emit<'a> {
    out: &'a Path,
    quiet: bool,
}

impl Emit<'_> {
    fn say(&self, line: &str) {
        if !self.quiet {
            println!("{line}");
        }
    }
}

pub fn run(config: &RunConfig, stage: Stage, out: &Path, quiet: bool) -> i32 {
    if let Err(e) = fs::create_dir_all(out) {
        eprintln!("cannot create output directory {}: {e}", out.display());
        return 1;
    }
    let emit = Emit { out, quiet };
    let resolved = config.clone().resolved();
    if write_json(&out.join("config_echo.json"), &resolved).is_err() {
        eprintln!("cannot write the config echo");
        return 1;
    }
    match run_inner(&resolved, stage, &emit) {
        Ok(code) => code,
        Err(e) => {
            let code_str = e.code();
            let summary = json!({
                "exit_code": 1,
                "error": {
                    "module": module_of(code_str),
                    "code": code_str,
                    "message": e.to_string(),
                },
            });
            let _ = write_json(&out.join("summary.json"), &summary);
            eprintln!("error [{}]: {e}", code_str);
            1
        }
    }
}

fn build_actuators(
    config: &RunConfig,
    b: &InputModel,
    spectrum: &SpectralData,
) -> Result<ActuatorFamily, Error> {
    match &config.actuators {
        ActuatorSpec::Explicit { vectors } => ActuatorFamily::new(
            vectors.iter().map(|v| Array1::from(v.clone())).collect(),
        ),
        spec => {
            if !spec.is_auto() {
                return Err(Error::InvalidParameter(
                    "actuators must be \"auto\" or an explicit {vectors: [..]} object".into(),
                ));
            }
            // directions B^T chi_k over the unstable clusters; this family
            // carries a full-rank Gram block on every such cluster
            let selected = spectrum.selected(Some(config.sigma));
            let chi = real_basis(spectrum)?;
            let vectors: Vec<Array1<f64>> = chi
                .iter()
                .filter(|c| selected.contains(&c.cluster))
                .map(|c| b.matrix.t().dot(&c.vector))
                .collect();
            if vectors.is_empty() {
                // nothing unstable: any single direction will do
                let mut e = Array1::zeros(b.control_dim());
                if e.len() > 0 {
                    e[0] = 1.0;
                }
                return ActuatorFamily::new(vec![e]);
            }
            ActuatorFamily::new(vectors)
        }
    }
}

fn initial_state(config: &RunConfig, n: usize) -> Result<Array1<f64>, Error> {
    let sim = config.simulate.as_ref();
    let spec = sim.map(|s| s.y0.as_str()).unwrap_or("random-seeded");
    if spec == "random-seeded" {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x59D0);
        let normal = StandardNormal;
        let mut y = Array1::from_shape_fn(n, |_| {
            let g: f64 = normal.sample(&mut rng);
            g
        });
        let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            y.mapv_inplace(|x| x / norm);
        }
        Ok(y)
    } else {
        let m = read_csv_matrix(Path::new(spec))?;
        if m.ncols() != 1 || m.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "initial state file must be {n}x1, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(m.column(0).to_owned())
    }
}

fn run_inner(config: &RunConfig, stage: Stage, emit: &Emit) -> Result<i32, Error> {
    let out = emit.out;
    let (model, input): (GeneratorModel, Option<InputModel>) =
        build_from_descriptor(&config.model)?;
    let spectrum = compute_spectrum(&model.matrix, DEFAULT_CLUSTER_TOL)?;
    write_json(&out.join("spectrum.json"), &SpectrumJson::from(&spectrum))?;
    emit.say(&format!(
        "spectrum: {} clusters over dimension {}",
        spectrum.clusters.len(),
        spectrum.generator_dim
    ));

    // projector export once a sigma line is in play
    if stage >= Stage::Check {
        let projector = spectral_projector(&model.matrix, &spectrum, config.sigma)?;
        write_matrix_market(
            &out.join("projector.mtx"),
            &projector.matrix,
            MatrixMarketLayout::Array,
        )?;
        emit.say(&format!(
            "projector: rank {} over {} clusters",
            projector.rank,
            projector.selected_clusters.len()
        ));
    }
    if stage == Stage::Spectrum {
        let summary = json!({
            "exit_code": 0,
            "command": "spectrum",
            "clusters": spectrum.clusters.len(),
            "generator_dim": spectrum.generator_dim,
            "error": null,
        });
        write_json(&out.join("summary.json"), &summary)?;
        return Ok(0);
    }

    let b = input.ok_or_else(|| {
        Error::InvalidParameter(
            "this command needs an actuator: give 'omega' or 'input_path' in the model".into(),
        )
    })?;
    let verdict = check_fattorini(&b, &spectrum, Some(config.sigma))?;
    let v = build_actuators(config, &b, &spectrum)?;
    let rank_report = check_admissible(&b, &v, &spectrum, Some(config.sigma))?;
    write_json(
        &out.join("rank_report.json"),
        &RankReportJson::from(&rank_report),
    )?;
    emit.say(&format!(
        "rank check at sigma = {}: criterion {}, family of {} {}",
        config.sigma,
        if verdict.pass { "holds" } else { "FAILS" },
        v.len(),
        if rank_report.overall_admissible {
            "admissible"
        } else {
            "NOT admissible"
        }
    ));
    if !verdict.pass || !rank_report.overall_admissible {
        let summary = json!({
            "exit_code": 2,
            "command": "check",
            "uc_sigma_pass": verdict.pass,
            "admissible": rank_report.overall_admissible,
            "failing_clusters": verdict.failing_clusters,
            "structural_clusters": verdict.structural_clusters,
            "minimal_k": rank_report.minimal_k,
            "k": v.len(),
            "error": null,
        });
        write_json(&out.join("summary.json"), &summary)?;
        return Ok(2);
    }
    if stage == Stage::Check {
        let summary = json!({
            "exit_code": 0,
            "command": "check",
            "uc_sigma_pass": true,
            "admissible": true,
            "minimal_k": rank_report.minimal_k,
            "k": v.len(),
            "error": null,
        });
        write_json(&out.join("summary.json"), &summary)?;
        return Ok(0);
    }

    let eps = config.eps_value();
    let abscissa_before = spectral_abscissa(&model.matrix)?;
    let mut decay_json = serde_json::Value::Null;
    let abscissa_after;
    let non_destab_pass;

    if config.dynamic {
        let ctrl = synthesize_dynamic(
            &model.matrix,
            &b,
            &v,
            config.sigma,
            eps,
            config.method,
        )?;
        abscissa_after = spectral_abscissa(&ctrl.law.closed_loop)?;
        let report = verify_non_destabilization(&ctrl.law, &ctrl.split)?;
        non_destab_pass = report.pass;
        let fb = json!({
            "summary": feedback_summary(&ctrl.law, &ctrl.split, abscissa_before, abscissa_after),
            "non_destabilization": report,
            "lambda": matrix_to_nested(&ctrl.lambda),
            "kernels": ctrl.kernels.iter().map(|k| k.to_vec()).collect::<Vec<_>>(),
            "directions": ctrl.law.directions.vectors.iter().map(|k| k.to_vec()).collect::<Vec<_>>(),
        });
        write_json(&out.join("feedback.json"), &fb)?;
        write_matrix_market(
            &out.join("closed_loop.mtx"),
            &ctrl.law.closed_loop,
            MatrixMarketLayout::Array,
        )?;
        write_csv_matrix(&out.join("gain.csv"), &ctrl.law.gain)?;
        emit.say(&format!(
            "dynamic controller: abscissa {abscissa_before:.4} -> {abscissa_after:.4}"
        ));
        if stage >= Stage::Simulate || config.simulate.is_some() {
            let sim = config.simulate.clone().unwrap_or(crate::config::SimulateConfig {
                t_final: None,
                dt: None,
                scheme: fattorini::simulate::Scheme::ImplicitEuler,
                y0: "random-seeded".into(),
                window: None,
            });
            let t_final = sim.t_final.unwrap_or(10.0 / config.sigma.max(1.0));
            let dt = sim.dt.unwrap_or(1e-3);
            let y0 = initial_state(config, model.dim())?;
            let trace = simulate_dynamic(&ctrl, &y0, t_final, dt, sim.scheme)?;
            fs::write(out.join("trace.csv"), trace_to_csv(&trace))?;
            let window = sim
                .window
                .unwrap_or((1.0 / config.sigma.max(1.0), t_final));
            let fit = estimate_decay(&trace, window)?;
            decay_json = serde_json::to_value(trace_summary(&trace, &fit, window))
                .map_err(|e| Error::Internal(e.to_string()))?;
            emit.say(&format!("simulated joint decay rate {:.4}", fit.rate));
        }
    } else {
        let (law, split) = synthesize_feedback(
            &model.matrix,
            &b,
            &v,
            &spectrum,
            config.sigma,
            eps,
            config.method,
        )?;
        abscissa_after = spectral_abscissa(&law.closed_loop)?;
        let report = verify_non_destabilization(&law, &split)?;
        non_destab_pass = report.pass;
        let fb = json!({
            "summary": feedback_summary(&law, &split, abscissa_before, abscissa_after),
            "non_destabilization": report,
            "kernels": law.kernels.iter().map(|k| k.to_vec()).collect::<Vec<_>>(),
            "directions": law.directions.vectors.iter().map(|k| k.to_vec()).collect::<Vec<_>>(),
        });
        write_json(&out.join("feedback.json"), &fb)?;
        write_matrix_market(
            &out.join("closed_loop.mtx"),
            &law.closed_loop,
            MatrixMarketLayout::Array,
        )?;
        write_csv_matrix(&out.join("gain.csv"), &law.gain)?;
        let kernel_matrix = law.state_gain_map();
        write_csv_matrix(&out.join("kernels.csv"), &kernel_matrix.t().to_owned())?;
        emit.say(&format!(
            "feedback: abscissa {abscissa_before:.4} -> {abscissa_after:.4} (target < {})",
            -config.sigma
        ));
        if stage >= Stage::Simulate || config.simulate.is_some() {
            let sim = config.simulate.clone().unwrap_or(crate::config::SimulateConfig {
                t_final: None,
                dt: None,
                scheme: fattorini::simulate::Scheme::ImplicitEuler,
                y0: "random-seeded".into(),
                window: None,
            });
            let t_final = sim.t_final.unwrap_or(10.0 / config.sigma.max(1.0));
            let dt = sim.dt.unwrap_or(1e-3);
            let y0 = initial_state(config, model.dim())?;
            let trace = simulate_closed_loop(&law, &y0, t_final, dt, sim.scheme)?;
            fs::write(out.join("trace.csv"), trace_to_csv(&trace))?;
            let window = sim
                .window
                .unwrap_or((1.0 / config.sigma.max(1.0), t_final));
            let fit = estimate_decay(&trace, window)?;
            decay_json = serde_json::to_value(trace_summary(&trace, &fit, window))
                .map_err(|e| Error::Internal(e.to_string()))?;
            emit.say(&format!("simulated decay rate {:.4}", fit.rate));
        }
    }

    let all_pass = non_destab_pass && abscissa_after < -config.sigma;
    let summary = json!({
        "exit_code": if all_pass { 0 } else { 2 },
        "command": if stage == Stage::Simulate { "simulate" } else { "synthesize" },
        "uc_sigma_pass": true,
        "admissible": true,
        "minimal_k": minimal_k(&spectrum, Some(config.sigma)),
        "k": v.len(),
        "sigma": config.sigma,
        "eps": eps,
        "method": config.method,
        "dynamic": config.dynamic,
        "abscissa_before": abscissa_before,
        "abscissa_after": abscissa_after,
        "non_destabilization_pass": non_destab_pass,
        "decay": decay_json,
        "seed": config.seed,
        "error": null,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(if all_pass { 0 } else { 2 })
}

/// Rectangle analysis: multiplicity report or collision scan.
pub fn run_rect(
    sigma: Option<f64>,
    c: Option<f64>,
    d: Option<u32>,
    inv_c2: Option<Vec<f64>>,
    alpha_max: Option<u64>,
    out: &Path,
    quiet: bool,
) -> i32 {
    if let Err(e) = fs::create_dir_all(out) {
        eprintln!("cannot create output directory {}: {e}", out.display());
        return 1;
    }
    let emit = Emit { out, quiet };
    match run_rect_inner(sigma, c, d, inv_c2, alpha_max, &emit) {
        Ok(code) => code,
        Err(e) => {
            let summary = json!({
                "exit_code": 1,
                "error": {
                    "module": module_of(e.code()),
                    "code": e.code(),
                    "message": e.to_string(),
                },
            });
            let _ = write_json(&out.join("summary.json"), &summary);
            eprintln!("error [{}]: {e}", e.code());
            1
        }
    }
}

fn run_rect_inner(
    sigma: Option<f64>,
    c: Option<f64>,
    d: Option<u32>,
    inv_c2: Option<Vec<f64>>,
    alpha_max: Option<u64>,
    emit: &Emit,
) -> Result<i32, Error> {
    let out = emit.out;
    if let Some(weights) = inv_c2 {
        let alpha_max = alpha_max.ok_or_else(|| {
            Error::InvalidParameter("--alpha-max is required for the collision scan".into())
        })?;
        let outcome = fattorini::rectangle::simple_spectrum_scan(&weights, alpha_max)?;
        write_json(&out.join("scan.json"), &outcome)?;
        match &outcome.witness {
            Some((a, b)) => emit.say(&format!("collision: alpha = {a:?}, beta = {b:?}")),
            None => emit.say(&format!("no collision up to alpha_max = {alpha_max}")),
        }
        let summary = json!({"exit_code": 0, "command": "rect-scan",
                             "collision_found": outcome.collision_found, "error": null});
        write_json(&out.join("summary.json"), &summary)?;
        return Ok(0);
    }
    let sigma = sigma.ok_or_else(|| Error::InvalidParameter("--sigma is required".into()))?;
    let c = c.ok_or_else(|| Error::InvalidParameter("--c is required".into()))?;
    let d = d.ok_or_else(|| Error::InvalidParameter("--d is required".into()))?;
    let report = fattorini::rectangle::rect_multiplicities(sigma, c, d)?;
    write_json(&out.join("rect_report.json"), &report)?;
    let mut csv = String::from("level,multiplicity\n");
    for e in &report.eigenvalues {
        csv.push_str(&format!("{},{}\n", e.level, e.multiplicity));
    }
    fs::write(out.join("rect_multiplicities.csv"), csv)?;
    emit.say(&format!(
        "max_mult={} (at level {}) K_sigma={} K_u_sigma={} ratio_asymptote={:.4}",
        report.max_multiplicity,
        report.max_multiplicity_level,
        report.k_sigma,
        report.k_u_sigma,
        report.ratio_asymptote
    ));
    let bound = fattorini::rectangle::bound_check(sigma, c, d)?;
    let summary = json!({
        "exit_code": 0,
        "command": "rect",
        "max_multiplicity": report.max_multiplicity,
        "k_sigma": report.k_sigma,
        "k_u_sigma": report.k_u_sigma,
        "bound_check_pass": bound.pass,
        "error": null,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(0)
}
