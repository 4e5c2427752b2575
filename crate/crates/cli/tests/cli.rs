//! End-to-end tests of the `villi` binary: flag handling, file
//! plumbing, CSV shape, and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use villi_core::enhance::{enhance_image, EnhanceConfig};
use villi_core::fixtures::{dark_noise, villi_texture};
use villi_core::metrics::niqe::NiqeModel;
use villi_core::Raster;

fn villi() -> Command {
    Command::new(env!("CARGO_BIN_EXE_villi"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to spawn villi")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Split a CSV body into rows of unquoted fields (fields in these tests
/// never contain embedded commas).
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn enhance_writes_the_expected_file_and_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(villi()
        .arg("enhance")
        .arg(fixture("villi-texture.png"))
        .arg("--out")
        .arg(dir.path()));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let produced = Raster::load(&dir.path().join("villi-texture.enhanced.png")).unwrap();
    let original = Raster::load(&fixture("villi-texture.png")).unwrap();
    let expected = enhance_image(&original, &EnhanceConfig::default()).unwrap();
    assert_eq!(produced.bytes(), expected.image.bytes());
}

#[test]
fn explicit_default_flags_reproduce_the_default_output() {
    let dir = tempfile::tempdir().unwrap();
    let d1 = dir.path().join("plain");
    let d2 = dir.path().join("flagged");
    assert!(run(villi()
        .arg("enhance")
        .arg(fixture("dark-noise.png"))
        .arg("--out")
        .arg(&d1))
    .status
    .success());
    assert!(run(villi()
        .args(["enhance", "--alpha", "4", "--radius", "8", "--epsilon", "0.04"])
        .args(["--kernel", "8", "--edge-norm", "image-max"])
        .arg(fixture("dark-noise.png"))
        .arg("--out")
        .arg(&d2))
    .status
    .success());
    let a = std::fs::read(d1.join("dark-noise.enhanced.png")).unwrap();
    let b = std::fs::read(d2.join("dark-noise.enhanced.png")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn missing_input_fails_and_names_the_path() {
    let out = run(villi().args(["enhance", "/no/such/dir/missing.png"]));
    assert!(!out.status.success());
    assert!(
        stderr_of(&out).contains("missing.png"),
        "diagnostic should name the path: {}",
        stderr_of(&out)
    );
}

#[test]
fn enhance_continues_past_a_bad_file_but_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(villi()
        .arg("enhance")
        .arg("/no/such/missing.png")
        .arg(fixture("step-edge.png"))
        .arg("--out")
        .arg(dir.path()));
    assert!(!out.status.success());
    assert!(
        dir.path().join("step-edge.enhanced.png").exists(),
        "the good input should still be processed"
    );
}

#[test]
fn dump_maps_writes_the_five_diagnostic_images() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(villi()
        .arg("enhance")
        .arg(fixture("step-edge.png"))
        .args(["--dump-maps", "--out"])
        .arg(dir.path()));
    assert!(out.status.success());
    for tag in ["w1", "w2", "k", "low", "high"] {
        assert!(
            dir.path().join(format!("step-edge.{tag}.png")).exists(),
            "missing {tag} map"
        );
        assert!(
            stderr_of(&out).contains(&format!("map {tag} ")),
            "scale factors for {tag} should be logged"
        );
    }
}

#[test]
fn metrics_on_identical_files_reports_infinite_psnr() {
    let out = run(villi()
        .arg("metrics")
        .arg(fixture("villi-texture.png"))
        .arg(fixture("villi-texture.png")));
    assert!(out.status.success());
    let table = rows(&stdout_of(&out));
    assert_eq!(table[0], ["file", "psnr", "irmle", "niqe"]);
    assert_eq!(table[1][1], "inf");
}

#[test]
fn metrics_without_model_warns_and_leaves_niqe_empty() {
    let out = run(villi()
        .arg("metrics")
        .arg(fixture("villi-texture.png"))
        .arg(fixture("villi-texture.png")));
    assert!(out.status.success());
    assert!(stderr_of(&out).contains("model"));
    let table = rows(&stdout_of(&out));
    assert_eq!(table[1][3], "", "niqe column should be empty");
}

#[test]
fn metrics_rejects_mismatched_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("small.png");
    villi_texture(64, 64, 5).save(&small).unwrap();
    let out = run(villi()
        .arg("metrics")
        .arg(fixture("villi-texture.png"))
        .arg(&small));
    assert!(!out.status.success());
}

#[test]
fn metrics_shows_higher_irmle_after_enhancement() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(villi()
        .arg("enhance")
        .arg(fixture("villi-texture.png"))
        .arg("--out")
        .arg(dir.path()))
    .status
    .success());
    let enhanced = dir.path().join("villi-texture.enhanced.png");

    let base = run(villi()
        .arg("metrics")
        .arg(fixture("villi-texture.png"))
        .arg(fixture("villi-texture.png")));
    let sharp = run(villi()
        .arg("metrics")
        .arg(fixture("villi-texture.png"))
        .arg(&enhanced));
    let irmle_of = |o: &Output| rows(&stdout_of(o))[1][2].parse::<f64>().unwrap();
    assert!(
        irmle_of(&sharp) > irmle_of(&base),
        "enhancement should raise local-entropy density: {} vs {}",
        irmle_of(&sharp),
        irmle_of(&base)
    );
}

#[test]
fn sweep_with_one_alpha_writes_a_single_data_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(villi()
        .arg("sweep")
        .arg(fixture("step-edge.png"))
        .args(["--alphas", "2.5", "--out"])
        .arg(dir.path()));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let table = rows(&csv);
    assert_eq!(table.len(), 2);
    assert_eq!(table[0], ["alpha", "mean_psnr", "mean_irmle", "mean_niqe"]);
    assert_eq!(table[1][0].parse::<f64>().unwrap(), 2.5);
}

#[test]
fn sweep_defaults_to_nine_strengths() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(villi()
        .arg("sweep")
        .arg(fixture("step-edge.png"))
        .arg("--out")
        .arg(dir.path()));
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let table = rows(&csv);
    assert_eq!(table.len(), 10);
    let alphas: Vec<f64> = table[1..]
        .iter()
        .map(|r| r[0].parse::<f64>().unwrap())
        .collect();
    assert_eq!(alphas, (1..=9).map(f64::from).collect::<Vec<_>>());
}

#[test]
fn sweep_rejects_bad_alpha_lists() {
    for alphas in ["3,2", "1,1", "-1,2", "0", ""] {
        let out = run(villi()
            .arg("sweep")
            .arg(fixture("step-edge.png"))
            .args(["--alphas", alphas]));
        assert!(!out.status.success(), "alphas `{alphas}` should be rejected");
    }
}

#[test]
fn ablate_emits_three_ordered_rows_and_the_full_method_wins_on_noise() {
    let out = run(villi().arg("ablate").arg(fixture("dark-noise.png")));
    assert!(out.status.success());
    let table = rows(&stdout_of(&out));
    assert_eq!(table[0], ["file", "mode", "psnr", "irmle", "niqe"]);
    assert_eq!(table.len(), 4);
    let modes: Vec<&str> = table[1..].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(modes, ["w1_only", "w2_only", "both"]);
    let psnr: Vec<f64> = table[1..]
        .iter()
        .map(|r| r[2].parse::<f64>().unwrap())
        .collect();
    assert!(psnr[2] > psnr[0], "both should beat w1_only");
    assert!(psnr[2] > psnr[1], "both should beat w2_only");
}

#[test]
fn ablate_both_row_agrees_with_the_enhance_command_output() {
    // The "both" row must describe exactly the image `enhance` writes:
    // same PSNR and IRMLE, digit for digit.
    let dir = tempfile::tempdir().unwrap();
    assert!(run(villi()
        .arg("enhance")
        .arg(fixture("villi-texture.png"))
        .arg("--out")
        .arg(dir.path()))
    .status
    .success());
    let metrics_out = run(villi()
        .arg("metrics")
        .arg(fixture("villi-texture.png"))
        .arg(dir.path().join("villi-texture.enhanced.png")));
    assert!(metrics_out.status.success());
    let metrics_row = &rows(&stdout_of(&metrics_out))[1];

    let ablate_out = run(villi().arg("ablate").arg(fixture("villi-texture.png")));
    assert!(ablate_out.status.success());
    let table = rows(&stdout_of(&ablate_out));
    let both_row = table
        .iter()
        .find(|r| r[1] == "both")
        .expect("ablate should emit a both row");
    assert_eq!(both_row[2], metrics_row[1], "psnr must match digit for digit");
    assert_eq!(both_row[3], metrics_row[2], "irmle must match digit for digit");
}

#[test]
fn ablate_on_a_constant_image_reports_identity_for_every_mode() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.png");
    Raster::from_rgb_bytes(48, 48, vec![128; 48 * 48 * 3])
        .save(&flat)
        .unwrap();
    let out = run(villi().arg("ablate").arg(&flat));
    assert!(out.status.success());
    let table = rows(&stdout_of(&out));
    assert_eq!(table.len(), 4);
    for row in &table[1..] {
        assert_eq!(row[2], "inf", "constant input must pass through unchanged");
    }
}

#[test]
fn denoise_compare_rejects_nonpositive_sigma_before_any_processing() {
    for sigma in ["0", "-2", "NaN"] {
        let out = run(villi()
            .args(["denoise-compare", "--sigma", sigma])
            .arg("/no/such/input.png"));
        assert!(!out.status.success(), "sigma {sigma} should be rejected");
        let err = stderr_of(&out);
        assert!(err.contains("sigma"), "diagnostic should mention sigma: {err}");
        assert!(
            !err.contains("input.png"),
            "the bad flag must fail before inputs are touched: {err}"
        );
    }
}

#[test]
fn denoise_compare_improves_psnr_and_reduces_irmle_on_the_noisy_fixture() {
    let out = run(villi()
        .arg("denoise-compare")
        .arg(fixture("dark-noise.png")));
    assert!(out.status.success());
    let table = rows(&stdout_of(&out));
    assert_eq!(
        table[0],
        ["file", "psnr_raw", "psnr_denoised", "irmle_raw", "irmle_denoised"]
    );
    let v: Vec<f64> = table[1][1..].iter().map(|s| s.parse().unwrap()).collect();
    assert!(v[1] > v[0], "denoising should raise PSNR: {v:?}");
    assert!(v[3] < v[2], "denoising should lower IRMLE: {v:?}");
}

#[test]
fn fit_niqe_builds_a_usable_model() {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = Vec::new();
    for seed in 0..6u64 {
        let path = dir.path().join(format!("clean{seed}.png"));
        villi_texture(160, 160, 100 + seed).save(&path).unwrap();
        corpus.push(path);
    }
    let model_path = dir.path().join("model.txt");
    let out = run(villi()
        .arg("fit-niqe")
        .args(&corpus)
        .arg("--model")
        .arg(&model_path)
        .args(["--patch-size", "16"]));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let model = NiqeModel::load(&model_path).unwrap();
    assert_eq!(model.feature_dim, 36);
    assert_eq!(model.patch_size, 16);

    // The model now powers the niqe column of `metrics`.
    let scored = run(villi()
        .arg("metrics")
        .arg(&corpus[0])
        .arg(&corpus[0])
        .arg("--model")
        .arg(&model_path));
    assert!(scored.status.success(), "stderr: {}", stderr_of(&scored));
    let table = rows(&stdout_of(&scored));
    let niqe: f64 = table[1][3].parse().expect("niqe cell should be numeric");
    assert!(niqe.is_finite() && niqe >= 0.0);
}

#[test]
fn config_file_sets_options_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{ "alpha": 3.0, "radius": 6 }"#).unwrap();

    let d_cfg = dir.path().join("from-config");
    let d_flag = dir.path().join("from-flags");
    let d_both = dir.path().join("overridden");
    assert!(run(villi()
        .arg("enhance")
        .arg(fixture("step-edge.png"))
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&d_cfg))
    .status
    .success());
    assert!(run(villi()
        .arg("enhance")
        .arg(fixture("step-edge.png"))
        .args(["--alpha", "3", "--radius", "6", "--out"])
        .arg(&d_flag))
    .status
    .success());
    assert!(run(villi()
        .arg("enhance")
        .arg(fixture("step-edge.png"))
        .arg("--config")
        .arg(&config)
        .args(["--alpha", "5", "--out"])
        .arg(&d_both))
    .status
    .success());

    let read = |d: &Path| std::fs::read(d.join("step-edge.enhanced.png")).unwrap();
    assert_eq!(read(&d_cfg), read(&d_flag), "config keys should act like flags");
    assert_ne!(read(&d_cfg), read(&d_both), "a flag must override the config");

    // And the override equals the pure-flag run with the same values.
    let d_pure = dir.path().join("pure");
    assert!(run(villi()
        .arg("enhance")
        .arg(fixture("step-edge.png"))
        .args(["--alpha", "5", "--radius", "6", "--out"])
        .arg(&d_pure))
    .status
    .success());
    assert_eq!(read(&d_both), read(&d_pure));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{ "alhpa": 3.0 }"#).unwrap();
    let out = run(villi()
        .arg("enhance")
        .arg(fixture("step-edge.png"))
        .arg("--config")
        .arg(&config));
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("bad.json"));
}

#[test]
fn reports_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = [
        fixture("step-edge.png"),
        fixture("villi-texture.png"),
        fixture("dark-noise.png"),
    ];
    let mut outputs = Vec::new();
    for jobs in ["1", "8"] {
        let out = run(villi()
            .arg("ablate")
            .args(&inputs)
            .args(["--jobs", jobs]));
        assert!(out.status.success());
        outputs.push(stdout_of(&out));

        let sweep_dir = dir.path().join(format!("sweep-jobs-{jobs}"));
        assert!(run(villi()
            .arg("sweep")
            .args(&inputs)
            .args(["--alphas", "2,4", "--jobs", jobs, "--out"])
            .arg(&sweep_dir))
        .status
        .success());
    }
    assert_eq!(outputs[0], outputs[1], "ablate CSV must not depend on --jobs");
    let s1 = std::fs::read(dir.path().join("sweep-jobs-1/sweep.csv")).unwrap();
    let s8 = std::fs::read(dir.path().join("sweep-jobs-8/sweep.csv")).unwrap();
    assert_eq!(s1, s8, "sweep CSV must not depend on --jobs");
}

#[test]
fn report_rows_follow_input_order_not_completion_order() {
    // Mix sizes so completion order differs from input order under
    // parallelism; rows must still follow the command line.
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.png");
    let tiny = dir.path().join("tiny.png");
    dark_noise(192, 192, 9).save(&big).unwrap();
    dark_noise(48, 48, 9).save(&tiny).unwrap();
    let out = run(villi()
        .arg("denoise-compare")
        .arg(&big)
        .arg(&tiny)
        .args(["--jobs", "4"]));
    assert!(out.status.success());
    let table = rows(&stdout_of(&out));
    assert!(table[1][0].ends_with("big.png"));
    assert!(table[2][0].ends_with("tiny.png"));
}
