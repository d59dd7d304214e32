use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use flowcast::data::{parse_flow_csv, write_flow_csv, LoopManifest, Normalizer, RoadDataset};
use flowcast::lifecycle::{load_model, save_model};
use flowcast::NetworkModel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{file_error, CliError, Result};

pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest")
}

pub fn normalizer_path(model: &Path) -> PathBuf {
    sibling(model, ".norm.json")
}

pub fn run_manifest_path(out: &Path) -> PathBuf {
    sibling(out, ".run.json")
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(file_error(path))
}

pub fn sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(file_error(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Fails with [`CliError::Exists`] on the first existing path unless `force`.
pub fn guard_outputs<'a>(paths: impl IntoIterator<Item = &'a Path>, force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    match paths.into_iter().find(|p| p.exists()) {
        Some(p) => Err(CliError::Exists(p.to_path_buf())),
        None => Ok(()),
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(file_error(dir))
}

/// Road name is the file stem; loop order comes from the sibling manifest.
pub fn load_dataset(csv: &Path) -> Result<RoadDataset> {
    let manifest_file = manifest_path(csv);
    let manifest =
        LoopManifest::read(File::open(&manifest_file).map_err(file_error(&manifest_file))?)?;
    let name = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("road");
    let source = BufReader::new(File::open(csv).map_err(file_error(csv))?);
    Ok(parse_flow_csv(source, &manifest, name)?)
}

pub fn dataset_paths(dir: &Path, road: &str) -> (PathBuf, PathBuf) {
    let csv = dir.join(format!("{road}.csv"));
    let manifest = manifest_path(&csv);
    (csv, manifest)
}

pub fn write_dataset(data: &RoadDataset, csv: &Path) -> Result<()> {
    let manifest = manifest_path(csv);
    write_flow_csv(data, File::create(csv).map_err(file_error(csv))?)?;
    LoopManifest::of(data).write(File::create(&manifest).map_err(file_error(&manifest))?)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalizerFile {
    target_loop: usize,
    bounds: Vec<(f64, f64)>,
}

pub fn load_model_with_normalizer(path: &Path) -> Result<(NetworkModel, Normalizer)> {
    let model = load_model(File::open(path).map_err(file_error(path))?)?;
    let norm_path = normalizer_path(path);
    let text = read_text(&norm_path)?;
    let file: NormalizerFile = serde_json::from_str(&text).map_err(|source| CliError::Sidecar {
        path: norm_path.clone(),
        source,
    })?;
    let norm = Normalizer::from_bounds(file.bounds, file.target_loop)?;
    if norm.loops() != model.spec().input_loops {
        return Err(flowcast::Error::Contract(format!(
            "{} covers {} loops but the model reads {}",
            norm_path.display(),
            norm.loops(),
            model.spec().input_loops
        ))
        .into());
    }
    Ok((model, norm))
}

/// Writes the model file and its normalizer sidecar; returns both paths.
pub fn save_model_with_normalizer(
    model: &NetworkModel,
    norm: &Normalizer,
    path: &Path,
) -> Result<[PathBuf; 2]> {
    save_model(model, File::create(path).map_err(file_error(path))?)?;
    let norm_path = normalizer_path(path);
    let file = NormalizerFile {
        target_loop: norm.target_loop(),
        bounds: norm.bounds().to_vec(),
    };
    let text = serde_json::to_string_pretty(&file).expect("normalizer serializes");
    fs::write(&norm_path, text + "\n").map_err(file_error(&norm_path))?;
    Ok([path.to_path_buf(), norm_path])
}
