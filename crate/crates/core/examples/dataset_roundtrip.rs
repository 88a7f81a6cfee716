//! Writes a synthetic dataset, loads it back through its manifest and
//! checks the tiles survive unchanged.

use resist::gradcal::Split;
use resist::io::DatasetManifest;
use resist::synth::{reference_params, synth_dataset, synth_records, SynthSpec};

fn main() -> resist::Result<()> {
    let dir = std::env::temp_dir().join(format!("resist-roundtrip-{}", std::process::id()));
    let spec = SynthSpec {
        count: 8,
        tile_px: 48,
        ..SynthSpec::default()
    };
    let theta = reference_params();
    synth_dataset(&dir, 5, &spec, &theta)?;

    let manifest = DatasetManifest::load(&dir.join("manifest.json"))?;
    let loaded = manifest.load_records()?;
    let memory = synth_records(5, &spec, &theta)?;
    let identical = loaded
        .iter()
        .zip(&memory)
        .all(|(a, b)| a.aerial == b.aerial && a.wafer == b.wafer && a.split == b.split);

    println!(
        "{} tiles ({} calibration) in {}",
        manifest.tiles.len(),
        manifest.count(Split::Calibration),
        dir.display()
    );
    println!("content hash {}", manifest.content_hash()?);
    println!("identical to in-memory generation: {identical}");
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
