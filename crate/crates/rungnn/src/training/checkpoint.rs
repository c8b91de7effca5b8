//! Binary checkpoint container: a JSON header (hyperparameters, precision,
//! parameter layout, format version) followed by the raw little-endian
//! parameter payload. Reload reproduces values bit for bit at equal
//! precision.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{Model, ModelConfig};
use crate::numerics::{Precision, Scalar};

use super::TrainError;

const MAGIC: &[u8; 8] = b"RGNNCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    precision: Precision,
    model: ModelConfig,
    params: Vec<ParamMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamMeta {
    name: String,
    rows: usize,
    cols: usize,
}

/// Header-only view of a checkpoint, enough to pick the right precision
/// before loading the payload.
#[derive(Debug, Clone)]
pub struct LoadedCheckpoint {
    pub precision: Precision,
    pub model: ModelConfig,
}

fn bad(path: &Path, reason: impl Into<String>) -> TrainError {
    TrainError::BadCheckpoint {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn save_checkpoint<T: Scalar>(path: &Path, model: &Model<T>) -> Result<(), TrainError> {
    let header = Header {
        precision: T::PRECISION,
        model: model.config.clone(),
        params: model
            .store
            .iter()
            .map(|(_, p)| ParamMeta {
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
            })
            .collect(),
    };
    let header_json =
        serde_json::to_vec(&header).map_err(|e| bad(path, format!("encode header: {e}")))?;

    let mut payload = Vec::new();
    for (_, p) in model.store.iter() {
        for &v in p.value.data() {
            v.write_le(&mut payload);
        }
    }

    let io_err = |source: std::io::Error| TrainError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = fs::File::create(path).map_err(io_err)?;
    out.write_all(MAGIC).map_err(io_err)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes()).map_err(io_err)?;
    out.write_all(&(header_json.len() as u64).to_le_bytes())
        .map_err(io_err)?;
    out.write_all(&header_json).map_err(io_err)?;
    out.write_all(&payload).map_err(io_err)?;
    Ok(())
}

fn read_parts(path: &Path) -> Result<(Header, Vec<u8>), TrainError> {
    let bytes = fs::read(path).map_err(|source| TrainError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(bad(path, "not a checkpoint file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(TrainError::CheckpointVersion {
            path: path.display().to_string(),
            got: version,
            want: CHECKPOINT_VERSION,
        });
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    if bytes.len() < 20 + header_len {
        return Err(bad(path, "truncated header"));
    }
    let header: Header = serde_json::from_slice(&bytes[20..20 + header_len])
        .map_err(|e| bad(path, format!("decode header: {e}")))?;
    Ok((header, bytes[20 + header_len..].to_vec()))
}

/// Read just the header.
pub fn checkpoint_info(path: &Path) -> Result<LoadedCheckpoint, TrainError> {
    let (header, _) = read_parts(path)?;
    Ok(LoadedCheckpoint {
        precision: header.precision,
        model: header.model,
    })
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Model<T>, TrainError> {
    let (header, payload) = read_parts(path)?;
    if header.precision != T::PRECISION {
        return Err(bad(
            path,
            format!(
                "precision mismatch: file is {}, requested {}",
                header.precision,
                T::PRECISION
            ),
        ));
    }
    let mut model = Model::<T>::init(header.model.clone(), 0)?;
    if model.store.len() != header.params.len() {
        return Err(bad(path, "parameter layout does not match config"));
    }
    let expected: usize = header
        .params
        .iter()
        .map(|p| p.rows * p.cols * T::WIDTH)
        .sum();
    if payload.len() != expected {
        return Err(bad(
            path,
            format!("payload is {} bytes, layout needs {expected}", payload.len()),
        ));
    }
    let mut offset = 0;
    for ((_, slot), meta) in model.store.iter_mut().zip(header.params.iter()) {
        if slot.name != meta.name || slot.value.shape() != (meta.rows, meta.cols) {
            return Err(TrainError::BadCheckpoint {
                path: path.display().to_string(),
                reason: format!("parameter '{}' does not match layout", meta.name),
            });
        }
        for v in slot.value.data_mut() {
            *v = T::read_le(&payload[offset..]);
            offset += T::WIDTH;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EncoderConfig, MessageKind};

    fn toy_model(seed: u64) -> Model<f64> {
        Model::init(
            ModelConfig {
                encoder: EncoderConfig::new(2, 1, 4),
                message: MessageKind::Qrfgu,
                num_relations: 5,
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bitwise_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = toy_model(99);
        save_checkpoint(&path, &model).unwrap();
        let loaded = load_checkpoint::<f64>(&path).unwrap();
        assert_eq!(loaded.config, model.config);
        for ((_, a), (_, b)) in model.store.iter().zip(loaded.store.iter()) {
            assert_eq!(a.name, b.name);
            assert!(a
                .value
                .data()
                .iter()
                .zip(b.value.data().iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn f32_round_trip_and_precision_guard() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model32.ckpt");
        let model = Model::<f32>::init(
            ModelConfig {
                encoder: EncoderConfig::new(1, 0, 4),
                message: MessageKind::Addition,
                num_relations: 3,
            },
            1,
        )
        .unwrap();
        save_checkpoint(&path, &model).unwrap();
        let info = checkpoint_info(&path).unwrap();
        assert_eq!(info.precision, Precision::F32);
        assert!(load_checkpoint::<f64>(&path).is_err());
        let back = load_checkpoint::<f32>(&path).unwrap();
        assert_eq!(back.config.message, MessageKind::Addition);
    }

    #[test]
    fn corrupt_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = toy_model(7);
        save_checkpoint(&path, &model).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 5);
        std::fs::write(&path, &bytes).unwrap();
        let err = load_checkpoint::<f64>(&path).unwrap_err();
        assert!(err.to_string().contains("payload"), "{err}");
    }

    #[test]
    fn version_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = toy_model(7);
        save_checkpoint(&path, &model).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[8] = 42;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint::<f64>(&path),
            Err(TrainError::CheckpointVersion { got: 42, .. })
        ));
    }

    #[test]
    fn garbage_file_is_not_a_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"hello world, definitely not a checkpoint").unwrap();
        assert!(load_checkpoint::<f64>(&path).is_err());
    }
}
