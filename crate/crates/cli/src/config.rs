//! Option plumbing: built-in defaults, overridden by an optional JSON
//! manifest (`--config`), overridden in turn by individual flags, so an
//! experiment can be pinned in a file yet still tweaked per run.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use villi_core::enhance::{EnhanceConfig, KernelVariant};
use villi_core::filters::{EdgeNorm, GuidedFilterParams};

/// Laplacian neighbourhood choice on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KernelArg {
    /// All eight neighbours.
    #[value(name = "8")]
    Eight,
    /// The four axial neighbours.
    #[value(name = "4")]
    Four,
}

/// Edge-map normalization choice on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EdgeNormArg {
    /// Divide by the largest response in the image.
    #[value(name = "image-max")]
    ImageMax,
    /// Divide by the kernel's worst-case response.
    #[value(name = "theoretical")]
    Theoretical,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, clap::Args)]
pub struct CommonOpts {
    /// Detail amplification strength (must be positive).
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Base/detail split window radius in pixels.
    #[arg(long)]
    pub radius: Option<usize>,

    /// Base/detail split edge-preservation regularizer.
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Laplacian neighbourhood: 8 or 4.
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,

    /// Edge-map normalization rule.
    #[arg(long, value_enum)]
    pub edge_norm: Option<EdgeNormArg>,

    /// Worker threads for per-file parallelism (default 1).
    #[arg(long)]
    pub jobs: Option<usize>,

    /// JSON manifest with the same keys as the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Directory for output files (default: next to each input).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// The optional JSON manifest mirrors the flag names; unknown keys are
/// rejected so typos fail loudly instead of silently using defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    alpha: Option<f64>,
    radius: Option<usize>,
    epsilon: Option<f64>,
    kernel: Option<u8>,
    edge_norm: Option<String>,
    jobs: Option<usize>,
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub enhance: EnhanceConfig,
    pub jobs: usize,
}

/// Apply the precedence chain and validate the result.
pub fn resolve(common: &CommonOpts) -> Result<Settings> {
    let defaults = EnhanceConfig::default();
    let mut alpha = defaults.alpha;
    let mut radius = defaults.guided.radius();
    let mut epsilon = defaults.guided.epsilon();
    let mut kernel = defaults.kernel_variant;
    let mut edge_norm = defaults.edge_norm;
    let mut jobs = 1usize;

    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let file: FileConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        if let Some(v) = file.alpha {
            alpha = v;
        }
        if let Some(v) = file.radius {
            radius = v;
        }
        if let Some(v) = file.epsilon {
            epsilon = v;
        }
        if let Some(v) = file.kernel {
            kernel = match v {
                8 => KernelVariant::EightNeighbor,
                4 => KernelVariant::FourNeighbor,
                other => bail!("config kernel must be 8 or 4, got {other}"),
            };
        }
        if let Some(v) = &file.edge_norm {
            edge_norm = match v.as_str() {
                "image-max" => EdgeNorm::PerImageMax,
                "theoretical" => EdgeNorm::TheoreticalMax,
                other => bail!("config edge_norm must be `image-max` or `theoretical`, got `{other}`"),
            };
        }
        if let Some(v) = file.jobs {
            jobs = v;
        }
    }

    if let Some(v) = common.alpha {
        alpha = v;
    }
    if let Some(v) = common.radius {
        radius = v;
    }
    if let Some(v) = common.epsilon {
        epsilon = v;
    }
    if let Some(v) = common.kernel {
        kernel = match v {
            KernelArg::Eight => KernelVariant::EightNeighbor,
            KernelArg::Four => KernelVariant::FourNeighbor,
        };
    }
    if let Some(v) = common.edge_norm {
        edge_norm = match v {
            EdgeNormArg::ImageMax => EdgeNorm::PerImageMax,
            EdgeNormArg::Theoretical => EdgeNorm::TheoreticalMax,
        };
    }
    if let Some(v) = common.jobs {
        jobs = v;
    }

    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let cfg = EnhanceConfig {
        alpha,
        guided: GuidedFilterParams::new(radius, epsilon)?,
        kernel_variant: kernel,
        edge_norm,
    };
    cfg.validate()?;
    Ok(Settings { enhance: cfg, jobs })
}
