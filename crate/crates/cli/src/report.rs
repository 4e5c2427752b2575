//! Report formatting and output-file helpers shared by the commands.

use std::path::{Path, PathBuf};

use anyhow::Result;
use villi_core::Plane;

/// Format a metric value for CSV: `inf`/`-inf` for infinities, plain
/// decimal otherwise.  The shortest exact representation is used when it
/// already carries six significant digits; shorter "nice" values are
/// padded to six so reports keep a predictable precision floor.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "NaN".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let shortest = format!("{v}");
    if shortest.contains('e') || significant_digits(&shortest) >= 6 {
        return shortest;
    }
    let mag = v.abs();
    let prec = if mag == 0.0 {
        5
    } else {
        let e = mag.log10().floor() as i64;
        (5 - e).max(0) as usize
    };
    format!("{v:.prec$}")
}

/// Count significant digits in a plain decimal string.
fn significant_digits(s: &str) -> usize {
    let digits: Vec<u8> = s.bytes().filter(u8::is_ascii_digit).collect();
    let lead_zeros = digits.iter().take_while(|&&d| d == b'0').count();
    (digits.len() - lead_zeros).max(1)
}

/// Quote a CSV field when it contains a delimiter, quote, or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Render an optional metric, leaving the cell empty when absent.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

/// Where an output derived from `input` should go: `<stem>.<tag>.png`,
/// either next to the input or inside `--out` when given.
pub fn output_path(input: &Path, out_dir: Option<&Path>, tag: &str) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".to_string());
    let name = format!("{stem}.{tag}.png");
    match out_dir {
        Some(d) => d.join(name),
        None => input.with_file_name(name),
    }
}

/// Save a diagnostic map as a grayscale PNG, min-max scaled into the
/// displayable range, and record the scale factors so the original
/// values stay recoverable.  Constant maps save as black.
pub fn dump_map(
    plane: &Plane,
    input: &Path,
    out_dir: Option<&Path>,
    tag: &str,
    log: &mut Vec<String>,
) -> Result<()> {
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in plane.data() {
        min = min.min(v);
        max = max.max(v);
    }
    let scaled = if max > min {
        plane.map(|v| (v - min) / (max - min))
    } else {
        plane.map(|_| 0.0)
    };
    let path = output_path(input, out_dir, tag);
    scaled.save_gray(&path)?;
    log.push(format!(
        "map {tag} for {}: min={} max={} -> {}",
        input.display(),
        fmt_num(min),
        fmt_num(max),
        path.display()
    ));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_at_least_six_significant_digits() {
        assert_eq!(fmt_num(0.5), "0.500000");
        assert_eq!(fmt_num(2.0), "2.00000");
        assert_eq!(fmt_num(0.0), "0.00000");
        assert_eq!(fmt_num(-0.25), "-0.250000");
        assert_eq!(fmt_num(123456.0), "123456");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn long_values_stay_exact() {
        let v = 48.130_808_65f64;
        assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        let third = 1.0 / 3.0;
        assert_eq!(fmt_num(third).parse::<f64>().unwrap(), third);
    }

    #[test]
    fn padded_values_still_round_trip() {
        for v in [0.5, 2.0, 0.1, -0.25, 100.0, 0.001] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v, "value {v}");
        }
    }

    #[test]
    fn csv_fields_quote_only_when_needed() {
        assert_eq!(csv_field("plain.png"), "plain.png");
        assert_eq!(csv_field("with,comma.png"), "\"with,comma.png\"");
        assert_eq!(csv_field("with\"quote"), "\"with\"\"quote\"");
    }

    #[test]
    fn output_paths_follow_the_input_or_the_out_dir() {
        let input = Path::new("/data/img01.png");
        assert_eq!(
            output_path(input, None, "enhanced"),
            Path::new("/data/img01.enhanced.png")
        );
        assert_eq!(
            output_path(input, Some(Path::new("/tmp/run")), "w1"),
            Path::new("/tmp/run/img01.w1.png")
        );
    }
}
