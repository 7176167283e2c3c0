//! Flat little-endian `f64` tensor blob plus a JSON manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EncoderConfig, ModelError, ModelParams};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
const DTYPE: &str = "f64-le";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    /// Byte offset into the blob.
    pub offset: u64,
    /// Byte length in the blob.
    pub length: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorManifest {
    pub format_version: u32,
    /// Blob file name, relative to the manifest.
    pub blob: String,
    pub blob_sha256: String,
    pub encoder: EncoderConfig,
    pub tensors: Vec<TensorEntry>,
    /// Caller-defined metadata (training configuration, lineage, ...).
    #[serde(default)]
    pub extra: serde_json::Value,
}

/// Writes `bytes` next to `path` and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn blob_path(manifest_path: &Path) -> PathBuf {
    manifest_path.with_extension("bin")
}

/// Saves `params` as `<stem>.bin` beside the manifest at `manifest_path`.
pub fn save_params(
    params: &ModelParams,
    config: &EncoderConfig,
    extra: serde_json::Value,
    manifest_path: &Path,
) -> Result<TensorManifest, ModelError> {
    params.check_shapes(config)?;
    let mut blob = Vec::with_capacity(params.num_parameters() * 8);
    let mut tensors = Vec::new();
    for ((name, shape), data) in params.layout().into_iter().zip(params.slices()) {
        let offset = blob.len() as u64;
        for x in data {
            blob.extend_from_slice(&x.to_le_bytes());
        }
        tensors.push(TensorEntry {
            name,
            shape,
            dtype: DTYPE.into(),
            offset,
            length: blob.len() as u64 - offset,
        });
    }
    let blob_file = blob_path(manifest_path);
    let manifest = TensorManifest {
        format_version: CHECKPOINT_FORMAT_VERSION,
        blob: blob_file
            .file_name()
            .expect("blob has a file name")
            .to_string_lossy()
            .into_owned(),
        blob_sha256: hex::encode(Sha256::digest(&blob)),
        encoder: *config,
        tensors,
        extra,
    };
    write_atomic(&blob_file, &blob)?;
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(manifest_path, &json)?;
    Ok(manifest)
}

pub fn load_params(manifest_path: &Path) -> Result<(ModelParams, TensorManifest), ModelError> {
    let bad = |m: String| ModelError::Checkpoint(m);
    let manifest: TensorManifest = serde_json::from_slice(&fs::read(manifest_path)?)
        .map_err(|e| bad(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(bad(format!("unsupported format_version {}", manifest.format_version)));
    }
    manifest.encoder.validate()?;
    let blob_file = manifest_path.with_file_name(&manifest.blob);
    let blob = fs::read(&blob_file)?;
    if hex::encode(Sha256::digest(&blob)) != manifest.blob_sha256 {
        return Err(bad("blob checksum mismatch".into()));
    }
    let expected = ModelParams::expected_layout(&manifest.encoder);
    if expected.len() != manifest.tensors.len() {
        return Err(bad("tensor list does not match the encoder configuration".into()));
    }
    let mut flat = Vec::with_capacity(expected.len());
    for ((name, shape), entry) in expected.iter().zip(&manifest.tensors) {
        if &entry.name != name || &entry.shape != shape || entry.dtype != DTYPE {
            return Err(bad(format!("unexpected tensor entry {}", entry.name)));
        }
        let n: usize = shape.iter().product();
        let (start, len) = (entry.offset as usize, entry.length as usize);
        if len != n * 8 || start + len > blob.len() {
            return Err(bad(format!("tensor {} has an invalid byte range", entry.name)));
        }
        let data = blob[start..start + len]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        flat.push(data);
    }
    let params = ModelParams::from_flat(&manifest.encoder, flat)?;
    Ok((params, manifest))
}
