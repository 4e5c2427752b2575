//! `villi` — batch front end for the capsule-endoscopy sharpening
//! toolkit.
//!
//! Subcommands: `enhance` (write sharpened PNGs), `metrics` (score a
//! test image against a reference), `sweep` (strength sweep with a CSV
//! report), `ablate` (per-gain-factor comparison), `denoise-compare`
//! (post-enhancement Gaussian denoising comparison), and `fit-niqe`
//! (build a naturalness model from a clean corpus).
//!
//! Every command is deterministic: identical inputs and flags produce
//! byte-identical outputs, including CSV reports and regardless of
//! `--jobs`.  Report rows always follow command-line input order.

mod config;
mod report;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use villi_core::enhance::{enhance_image, enhance_image_with_mode, GainMode};
use villi_core::filters::gaussian_blur;
use villi_core::metrics::niqe::{fit_mvg, niqe_features, NiqeModel, DEFAULT_PATCH_SIZE};
use villi_core::metrics::{irmle, psnr_planes, report as metrics_report};
use villi_core::Raster;

use config::{resolve, CommonOpts};
use report::{csv_field, dump_map, fmt_num, fmt_opt, output_path};

#[derive(Parser)]
#[command(
    name = "villi",
    version,
    about = "Sharpen fine mucosal texture in capsule-endoscopy images and score the results"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sharpen images and write `<stem>.enhanced.png` next to each (or
    /// into --out).
    Enhance {
        /// Input images (PNG/JPEG/...; 8-bit).
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Also write the w1/w2/k/low/high maps as grayscale PNGs
        /// (min-max scaled; scale factors go to stderr).
        #[arg(long)]
        dump_maps: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Score one test image against a reference; prints a CSV row.
    Metrics {
        /// Reference image.
        reference: PathBuf,
        /// Image under test (must match the reference's dimensions).
        test: PathBuf,
        /// Naturalness model file; without it the niqe column is empty.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Enhance a corpus at several strengths and write `sweep.csv`.
    Sweep {
        /// Corpus images.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Comma-separated strength values (default 1..9).
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        /// Naturalness model for the mean_niqe column.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Compare the two gain factors in isolation and combined.
    Ablate {
        /// Input images.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Naturalness model for the niqe column.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Enhance, then Gaussian-denoise the result, and report metrics
    /// for both.
    DenoiseCompare {
        /// Input images.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Standard deviation of the denoising blur (must be positive).
        #[arg(long, default_value = "1.0", value_parser = parse_sigma, allow_negative_numbers = true)]
        sigma: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Fit a naturalness model to a clean corpus and write it to
    /// --model.
    FitNiqe {
        /// Corpus images.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output path for the model file.
        #[arg(long)]
        model: PathBuf,
        /// Patch side length in pixels (even, at least 4).
        #[arg(long, default_value_t = DEFAULT_PATCH_SIZE)]
        patch_size: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn parse_sigma(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err("sigma must be a positive finite number".to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("villi: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

/// Dispatch; `Ok(true)` means every input processed cleanly.
fn run(command: Command) -> Result<bool> {
    match command {
        Command::Enhance {
            inputs,
            dump_maps,
            common,
        } => cmd_enhance(&inputs, dump_maps, &common),
        Command::Metrics {
            reference,
            test,
            model,
            common,
        } => cmd_metrics(&reference, &test, model.as_deref(), &common),
        Command::Sweep {
            inputs,
            alphas,
            model,
            common,
        } => cmd_sweep(&inputs, alphas, model.as_deref(), &common),
        Command::Ablate {
            inputs,
            model,
            common,
        } => cmd_ablate(&inputs, model.as_deref(), &common),
        Command::DenoiseCompare {
            inputs,
            sigma,
            common,
        } => cmd_denoise_compare(&inputs, sigma, &common),
        Command::FitNiqe {
            inputs,
            model,
            patch_size,
            common,
        } => cmd_fit_niqe(&inputs, &model, patch_size, &common),
    }
}

/// Run `work` over the inputs on a bounded thread pool; the result
/// vector keeps command-line order no matter how execution interleaves.
fn run_parallel<T: Send>(
    jobs: usize,
    inputs: &[PathBuf],
    work: impl Fn(&Path) -> Result<T> + Sync,
) -> Result<Vec<Result<T>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("cannot build the worker pool")?;
    Ok(pool.install(|| inputs.par_iter().map(|p| work(p)).collect()))
}

/// Report per-file failures to stderr; returns whether everything
/// succeeded and the successful payloads with their input indices.
fn split_results<T>(inputs: &[PathBuf], results: Vec<Result<T>>) -> (bool, Vec<(usize, T)>) {
    let mut ok = Vec::new();
    let mut all_ok = true;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push((i, v)),
            Err(e) => {
                all_ok = false;
                eprintln!("villi: {}: {e:#}", inputs[i].display());
            }
        }
    }
    (all_ok, ok)
}

fn ensure_out_dir(out: Option<&Path>) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    }
    Ok(())
}

fn load_model(path: Option<&Path>) -> Result<Option<NiqeModel>> {
    match path {
        Some(p) => Ok(Some(NiqeModel::load(p)?)),
        None => Ok(None),
    }
}

fn cmd_enhance(inputs: &[PathBuf], dump_maps: bool, common: &CommonOpts) -> Result<bool> {
    let settings = resolve(common)?;
    let out_dir = common.out.as_deref();
    ensure_out_dir(out_dir)?;

    let results = run_parallel(settings.jobs, inputs, |path| {
        let img = Raster::load(path)?;
        let out = enhance_image(&img, &settings.enhance)?;
        let dest = output_path(path, out_dir, "enhanced");
        out.image.save(&dest)?;
        let mut log = Vec::new();
        if dump_maps {
            dump_map(&out.gains.w1, path, out_dir, "w1", &mut log)?;
            dump_map(&out.gains.w2, path, out_dir, "w2", &mut log)?;
            dump_map(&out.gains.k, path, out_dir, "k", &mut log)?;
            dump_map(&out.low, path, out_dir, "low", &mut log)?;
            dump_map(&out.high, path, out_dir, "high", &mut log)?;
        }
        Ok(log)
    })?;

    let (all_ok, logs) = split_results(inputs, results);
    for (_, lines) in logs {
        for line in lines {
            eprintln!("{line}");
        }
    }
    Ok(all_ok)
}

fn cmd_metrics(
    reference: &Path,
    test: &Path,
    model_path: Option<&Path>,
    common: &CommonOpts,
) -> Result<bool> {
    let _ = resolve(common)?; // validate shared flags even though none apply
    let model = load_model(model_path)?;
    if model.is_none() {
        eprintln!("villi: no --model supplied; niqe column left empty");
    }
    let ref_img = Raster::load(reference)?;
    let test_img = Raster::load(test)?;
    let rep = metrics_report(&ref_img, &test_img, model.as_ref())?;
    println!("file,psnr,irmle,niqe");
    println!(
        "{},{},{},{}",
        csv_field(&test.display().to_string()),
        fmt_num(rep.psnr),
        fmt_num(rep.irmle),
        fmt_opt(rep.niqe)
    );
    Ok(true)
}

fn cmd_sweep(
    inputs: &[PathBuf],
    alphas: Option<Vec<f64>>,
    model_path: Option<&Path>,
    common: &CommonOpts,
) -> Result<bool> {
    let settings = resolve(common)?;
    let alphas = alphas.unwrap_or_else(|| (1..=9).map(f64::from).collect());
    if alphas.is_empty() {
        bail!("--alphas must list at least one value");
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        bail!("--alphas values must be positive finite numbers");
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        bail!("--alphas values must be strictly increasing");
    }
    let model = load_model(model_path)?;

    // Load the corpus once up front; a missing file fails the whole
    // sweep before any CSV is written.
    let load_results = run_parallel(settings.jobs, inputs, |p| Raster::load(p).map_err(Into::into))?;
    let (all_ok, loaded) = split_results(inputs, load_results);
    if !all_ok {
        return Ok(false);
    }
    let images: Vec<Raster> = loaded.into_iter().map(|(_, img)| img).collect();

    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let cfg = villi_core::enhance::EnhanceConfig {
            alpha,
            ..settings.enhance
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.jobs)
            .build()
            .context("cannot build the worker pool")?;
        let per_image: Vec<Result<(f64, f64, Option<f64>)>> = pool.install(|| {
            images
                .par_iter()
                .map(|img| {
                    let out = enhance_image(img, &cfg)?;
                    let rep = metrics_report(img, &out.image, model.as_ref())?;
                    Ok((rep.psnr, rep.irmle, rep.niqe))
                })
                .collect()
        });
        let mut psnr_sum = 0.0;
        let mut irmle_sum = 0.0;
        let mut niqe_sum = model.as_ref().map(|_| 0.0);
        for (i, r) in per_image.into_iter().enumerate() {
            let (p, ir, nq) = r.with_context(|| format!("{}", inputs[i].display()))?;
            psnr_sum += p;
            irmle_sum += ir;
            if let (Some(acc), Some(v)) = (niqe_sum.as_mut(), nq) {
                *acc += v;
            }
        }
        let n = images.len() as f64;
        rows.push((
            alpha,
            psnr_sum / n,
            irmle_sum / n,
            niqe_sum.map(|s| s / n),
        ));
    }

    let out_dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let csv_path = out_dir.join("sweep.csv");
    let mut text = String::from("alpha,mean_psnr,mean_irmle,mean_niqe\n");
    for (alpha, p, ir, nq) in rows {
        text.push_str(&format!(
            "{},{},{},{}\n",
            fmt_num(alpha),
            fmt_num(p),
            fmt_num(ir),
            fmt_opt(nq)
        ));
    }
    std::fs::write(&csv_path, text)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    Ok(true)
}

fn cmd_ablate(inputs: &[PathBuf], model_path: Option<&Path>, common: &CommonOpts) -> Result<bool> {
    let settings = resolve(common)?;
    let model = load_model(model_path)?;

    // Reduced modes first, full method last, matching how the factors
    // build on each other.
    const MODES: [(&str, GainMode); 3] = [
        ("w1_only", GainMode::LightOnly),
        ("w2_only", GainMode::GradientOnly),
        ("both", GainMode::Both),
    ];

    let results = run_parallel(settings.jobs, inputs, |path| {
        let img = Raster::load(path)?;
        let mut rows = Vec::with_capacity(MODES.len());
        for (label, mode) in MODES {
            let out = enhance_image_with_mode(&img, &settings.enhance, mode)?;
            let rep = metrics_report(&img, &out.image, model.as_ref())?;
            rows.push((label, rep.psnr, rep.irmle, rep.niqe));
        }
        Ok(rows)
    })?;

    let (all_ok, per_file) = split_results(inputs, results);
    println!("file,mode,psnr,irmle,niqe");
    for (i, rows) in per_file {
        let file = csv_field(&inputs[i].display().to_string());
        for (label, psnr, irmle, niqe) in rows {
            println!(
                "{file},{label},{},{},{}",
                fmt_num(psnr),
                fmt_num(irmle),
                fmt_opt(niqe)
            );
        }
    }
    Ok(all_ok)
}

fn cmd_denoise_compare(inputs: &[PathBuf], sigma: f64, common: &CommonOpts) -> Result<bool> {
    let settings = resolve(common)?;

    let results = run_parallel(settings.jobs, inputs, |path| {
        let img = Raster::load(path)?;
        let reference = img.intensity();
        let enhanced = enhance_image(&img, &settings.enhance)?.image.intensity();
        let denoised = gaussian_blur(&enhanced, sigma);
        Ok((
            psnr_planes(&reference, &enhanced)?,
            psnr_planes(&reference, &denoised)?,
            irmle(&enhanced),
            irmle(&denoised),
        ))
    })?;

    let (all_ok, rows) = split_results(inputs, results);
    println!("file,psnr_raw,psnr_denoised,irmle_raw,irmle_denoised");
    for (i, (pr, pd, ir, id)) in rows {
        println!(
            "{},{},{},{},{}",
            csv_field(&inputs[i].display().to_string()),
            fmt_num(pr),
            fmt_num(pd),
            fmt_num(ir),
            fmt_num(id)
        );
    }
    Ok(all_ok)
}

fn cmd_fit_niqe(
    inputs: &[PathBuf],
    model_path: &Path,
    patch_size: usize,
    common: &CommonOpts,
) -> Result<bool> {
    let settings = resolve(common)?;

    let results = run_parallel(settings.jobs, inputs, |path| {
        let img = Raster::load(path)?;
        Ok(niqe_features(&img.intensity(), patch_size)?)
    })?;
    let (all_ok, per_file) = split_results(inputs, results);
    if !all_ok {
        return Ok(false);
    }

    let mut pooled = Vec::new();
    for (_, feats) in per_file {
        pooled.extend(feats);
    }
    let patches = pooled.len();
    let model = fit_mvg(&pooled, patch_size)?;
    model.save(model_path)?;
    eprintln!(
        "villi: fitted naturalness model from {patches} patches across {} images -> {}",
        inputs.len(),
        model_path.display()
    );
    Ok(true)
}
