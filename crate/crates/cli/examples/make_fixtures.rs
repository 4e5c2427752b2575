//! Regenerate the committed sample images under `fixtures/` at the
//! repository root.  The generators are pure functions of fixed seeds,
//! so rerunning this always reproduces the same bytes.

use std::path::Path;

use villi_core::fixtures::{dark_noise, step_edge, villi_texture};

fn main() -> anyhow::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    std::fs::create_dir_all(&dir)?;
    step_edge(128, 128).save(&dir.join("step-edge.png"))?;
    villi_texture(128, 128, 1001).save(&dir.join("villi-texture.png"))?;
    dark_noise(128, 128, 1002).save(&dir.join("dark-noise.png"))?;
    println!("wrote step-edge.png, villi-texture.png, dark-noise.png to {}", dir.display());
    Ok(())
}
