use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::Parser;
use plumbline::edgels::write_edgels_csv;
use plumbline::optim::{mcdh_calibrate, ImageDims, ModelMode, OptimConfig};
use plumbline::synth::{run_study, SceneConfig, StudyConfig};
use plumbline::{
    entropy, extract_edgels, hough_1d, transform_edgel, undistort_image, DistortionParams, Edgel,
    ExtractionConfig, GrayImage,
};
use serde_json::json;

use crate::output::{
    atomic_write, atomic_write_with, display, manifest_path_for, write_mask, InputRecord,
    RunManifest,
};
use crate::{
    fail, CalibrateArgs, Cli, Command, ExitKind, ExtractArgs, InspectArgs, ReplayArgs, SynthArgs,
    UndistortArgs,
};

const HISTOGRAM_HEADER: &str = "bin_index,theta_center_radians,mass";

pub fn run(command: Command, argv: &[String]) -> Result<()> {
    match command {
        Command::Calibrate(a) => calibrate(a, argv),
        Command::Undistort(a) => undistort(a, argv),
        Command::Synth(a) => synth(a, argv),
        Command::Inspect(a) => inspect(a, argv),
        Command::Replay(a) => replay(a),
    }
}

fn load_image(path: &Path) -> Result<GrayImage> {
    let meta = fs::metadata(path)
        .map_err(|e| fail(ExitKind::Io, format!("cannot read {}: {e}", path.display())))?;
    if meta.len() == 0 {
        return Err(fail(ExitKind::Io, format!("{} is empty", path.display())));
    }
    GrayImage::load(path).with_context(|| format!("decoding {}", path.display()))
}

fn load_params(path: &Path) -> Result<DistortionParams> {
    let text = fs::read_to_string(path)
        .map_err(|e| fail(ExitKind::Io, format!("cannot read params {}: {e}", path.display())))?;
    let p = DistortionParams::from_json(&text).with_context(|| format!("in {}", path.display()))?;
    p.validate_for_radius(0.0)?;
    Ok(p)
}

fn extraction_config(a: &ExtractArgs, seed: u64) -> ExtractionConfig {
    ExtractionConfig {
        sigma_vote: a.sigma_vote,
        target_edgels: a.edgels,
        rng_seed: seed,
        ..Default::default()
    }
}

fn extraction_json(cfg: &ExtractionConfig) -> serde_json::Value {
    json!({
        "sigma_vote": cfg.sigma_vote,
        "e_saliency": cfg.e_saliency,
        "target_edgels": cfg.target_edgels,
        "grid_cells": cfg.grid_cells,
        "suppress_non_maxima": cfg.suppress_non_maxima,
    })
}

fn optim_json(cfg: &OptimConfig) -> serde_json::Value {
    json!({
        "restarts": cfg.restarts,
        "max_iters": cfg.max_iters,
        "residual_tol": cfg.residual_tol,
        "center_sigma_fraction": cfg.center_sigma_fraction,
        "beta_sigma": cfg.beta_sigma,
        "simplex_step": cfg.simplex_step,
        "mode": match cfg.mode {
            ModelMode::Radial => "radial",
            ModelMode::Anisotropic => "anisotropic",
        },
        "min_edgels": cfg.min_edgels,
    })
}

fn mode(radial_only: bool) -> ModelMode {
    if radial_only {
        ModelMode::Radial
    } else {
        ModelMode::Anisotropic
    }
}

fn calibrate(a: CalibrateArgs, argv: &[String]) -> Result<()> {
    let mut images = Vec::with_capacity(a.images.len());
    for path in &a.images {
        images.push(load_image(path)?);
    }
    let (width, height) = (images[0].width(), images[0].height());
    for (path, img) in a.images.iter().zip(&images).skip(1) {
        if (img.width(), img.height()) != (width, height) {
            return Err(fail(
                ExitKind::Usage,
                format!(
                    "{} is {}x{} but {} is {width}x{height}; all images must share one size",
                    path.display(),
                    img.width(),
                    img.height(),
                    a.images[0].display()
                ),
            ));
        }
    }

    let ecfg = extraction_config(&a.extract, a.seed);
    let ocfg = OptimConfig {
        restarts: a.restarts,
        rng_seed: a.seed,
        mode: mode(a.radial_only),
        min_edgels: a.min_edgels,
        ..Default::default()
    };
    let config = json!({
        "bins": a.bins,
        "extraction": extraction_json(&ecfg),
        "optim": optim_json(&ocfg),
    });
    let mut manifest = RunManifest::new("calibrate", argv, a.seed, config);

    let mut edgels: Vec<Edgel> = Vec::new();
    for (path, img) in a.images.iter().zip(&images) {
        let found = extract_edgels(img, &ecfg)?;
        eprintln!("{}: {} edgels", path.display(), found.len());
        manifest.inputs.push(InputRecord {
            path: display(path),
            width,
            height,
            edgels: Some(found.len()),
        });
        edgels.extend(found);
    }
    manifest.edgel_count = Some(edgels.len());

    let cal = mcdh_calibrate(&edgels, ImageDims::new(width, height), &ocfg, a.bins)?;
    manifest.result = Some(json!({
        "cost": cal.cost,
        "identity_cost": cal.identity_cost,
        "fell_back_to_identity": cal.fell_back_to_identity,
    }));

    let params = cal.params.to_json();
    atomic_write_with(&a.out, |w| writeln!(w, "{params}"))?;
    manifest.outputs.push(display(&a.out));
    if let Some(trace) = &a.trace {
        atomic_write_with(trace, |w| cal.write_trace_csv(w))?;
        manifest.outputs.push(display(trace));
    }
    manifest.write(&manifest_path_for(&a.out))?;

    if cal.fell_back_to_identity {
        eprintln!("warning: no restart improved on the identity correction");
    }
    println!(
        "edgels {}  entropy {:.4} bits (identity {:.4})",
        edgels.len(),
        cal.cost,
        cal.identity_cost
    );
    println!("{params}");
    Ok(())
}

fn undistort(a: UndistortArgs, argv: &[String]) -> Result<()> {
    let img = load_image(&a.image)?;
    let params = load_params(&a.params)?;
    let (w, h) = a.size.unwrap_or((img.width(), img.height()));

    let config = json!({
        "params_file": display(&a.params),
        "params": params,
        "width": w,
        "height": h,
    });
    let mut manifest = RunManifest::new("undistort", argv, 0, config);
    manifest.inputs.push(InputRecord {
        path: display(&a.image),
        width: img.width(),
        height: img.height(),
        edgels: None,
    });

    let out = undistort_image(&img, &params, w, h);
    atomic_write(&a.out, |tmp| Ok(out.image.save(tmp)?))?;
    manifest.outputs.push(display(&a.out));
    if let Some(mask) = &a.mask {
        write_mask(mask, w, h, &out.coverage)?;
        manifest.outputs.push(display(mask));
    }
    manifest.write(&manifest_path_for(&a.out))?;

    let covered = out.coverage.iter().filter(|&&c| c).count();
    println!(
        "{}x{} written, {:.1}% of pixels covered",
        w,
        h,
        100.0 * covered as f64 / (w * h) as f64
    );
    Ok(())
}

fn synth(a: SynthArgs, argv: &[String]) -> Result<()> {
    let cfg = StudyConfig {
        gammas: a.gammas.clone(),
        noise_levels: a.noise.clone(),
        trials: a.trials,
        kind: a.clutter,
        scene: SceneConfig {
            size: a.scene_size,
            n_lines: a.lines,
            pts_per_line: a.points_per_line,
            orientation_noise_sigma: a.orientation_noise,
            ..Default::default()
        },
        optim: OptimConfig {
            restarts: a.restarts,
            mode: mode(a.radial_only),
            min_edgels: a.min_edgels,
            ..Default::default()
        },
        bins: a.bins,
        master_seed: a.seed,
    };
    cfg.scene.validate()?;
    cfg.optim.validate()?;

    let config = json!({
        "gammas": cfg.gammas,
        "noise": cfg.noise_levels,
        "trials": cfg.trials,
        "clutter": cfg.kind.to_string(),
        "bins": cfg.bins,
        "scene": {
            "size": cfg.scene.size,
            "lines": cfg.scene.n_lines,
            "points_per_line": cfg.scene.pts_per_line,
            "center_exclusion": cfg.scene.center_exclusion,
            "orientation_noise_sigma": cfg.scene.orientation_noise_sigma,
        },
        "optim": optim_json(&cfg.optim),
    });
    let mut manifest = RunManifest::new("synth", argv, a.seed, config);

    let report = run_study(&cfg)?;

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let trials = a.out.join("trials.csv");
    let summary = a.out.join("summary.csv");
    atomic_write_with(&trials, |w| report.write_trials_csv(w))?;
    atomic_write_with(&summary, |w| report.write_summary_csv(w))?;
    manifest.outputs = vec![display(&trials), display(&summary)];
    manifest.write(&a.out.join("manifest.json"))?;

    println!("gamma_true  noise  kind      median        p10           p90           failed");
    for c in &report.cells {
        println!(
            "{:<10.3e}  {:<5}  {:<8}  {:<12.5e}  {:<12.5e}  {:<12.5e}  {}/{}",
            c.gamma_true, c.noise, c.kind.to_string(), c.median, c.p10, c.p90, c.failed, c.trials
        );
    }
    for t in report.trials.iter().filter(|t| t.error.is_some()) {
        eprintln!(
            "warning: gamma {} noise {} trial {}: {}",
            t.gamma_true,
            t.noise,
            t.trial,
            t.error.as_deref().unwrap_or_default()
        );
    }
    if report.cells.iter().all(|c| c.failed == c.trials) {
        return Err(fail(ExitKind::Numeric, "every trial failed"));
    }
    Ok(())
}

fn inspect(a: InspectArgs, argv: &[String]) -> Result<()> {
    let img = load_image(&a.image)?;
    let params = a.params.as_deref().map(load_params).transpose()?;
    let ecfg = extraction_config(&a.extract, a.seed);

    let config = json!({
        "bins": a.bins,
        "extraction": extraction_json(&ecfg),
        "params_file": a.params.as_deref().map(display),
        "params": params,
    });
    let mut manifest = RunManifest::new("inspect", argv, a.seed, config);

    let edgels = extract_edgels(&img, &ecfg)?;
    manifest.inputs.push(InputRecord {
        path: display(&a.image),
        width: img.width(),
        height: img.height(),
        edgels: Some(edgels.len()),
    });
    manifest.edgel_count = Some(edgels.len());

    let voting: Vec<Edgel> = match &params {
        Some(p) => edgels.iter().filter_map(|e| transform_edgel(p, e).ok()).collect(),
        None => edgels.clone(),
    };
    let hist = hough_1d(&voting, a.bins)?;

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let edgel_csv = a.out.join("edgels.csv");
    let hist_csv = a.out.join("histogram.csv");
    atomic_write_with(&edgel_csv, |w| write_edgels_csv(w, &edgels))?;
    if voting.is_empty() {
        atomic_write_with(&hist_csv, |w| writeln!(w, "{HISTOGRAM_HEADER}"))?;
    } else {
        atomic_write_with(&hist_csv, |w| hist.write_csv(w))?;
    }
    manifest.outputs = vec![display(&edgel_csv), display(&hist_csv)];

    println!("edgels {}", edgels.len());
    if voting.len() < edgels.len() {
        println!("dropped {} edgels outside the model domain", edgels.len() - voting.len());
    }
    if voting.is_empty() {
        eprintln!("warning: no edgels found in {}", a.image.display());
    } else {
        let h = entropy(&hist)?;
        println!("entropy {h:.6} bits");
        manifest.result = Some(json!({ "entropy": h }));
    }
    manifest.write(&a.out.join("manifest.json"))?;
    Ok(())
}

fn replay(a: ReplayArgs) -> Result<()> {
    let text = fs::read_to_string(&a.manifest)
        .map_err(|e| fail(ExitKind::Io, format!("cannot read {}: {e}", a.manifest.display())))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| fail(ExitKind::Usage, format!("{}: {e}", a.manifest.display())))?;
    let cli = Cli::try_parse_from(std::iter::once("plumbline".to_string()).chain(manifest.argv.clone()))
        .map_err(|e| fail(ExitKind::Usage, format!("recorded arguments: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(fail(ExitKind::Usage, "a manifest cannot record a replay"));
    }
    if !manifest.cwd.is_empty() {
        std::env::set_current_dir(&manifest.cwd)
            .map_err(|e| fail(ExitKind::Io, format!("cannot enter {}: {e}", manifest.cwd)))?;
    }
    run(cli.command, &manifest.argv)
}
