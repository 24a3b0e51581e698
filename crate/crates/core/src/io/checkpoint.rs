//! Versioned JSON checkpoints for MLP models.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::gnn::DenseMatrix;
use crate::mlp::MlpModel;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub layer_sizes: Vec<usize>,
    /// `weights[l][row][col]`, one matrix per adjacent layer pair.
    pub weights: Vec<Vec<Vec<f64>>>,
    pub seed: u64,
    pub epoch: usize,
}

impl Checkpoint {
    pub fn from_model(m: &MlpModel, seed: u64, epoch: usize) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            layer_sizes: m.layer_sizes().to_vec(),
            weights: m
                .weights()
                .iter()
                .map(|w| (0..w.rows()).map(|r| w.row(r).to_vec()).collect())
                .collect(),
            seed,
            epoch,
        }
    }

    pub fn into_model(self) -> Result<(MlpModel, u64, usize), IoError> {
        if self.version != CHECKPOINT_VERSION {
            return Err(IoError::CheckpointVersion {
                got: self.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let weights: Vec<DenseMatrix> = self.weights.into_iter().map(DenseMatrix::from_rows).collect();
        let model = MlpModel::from_weights(weights)?;
        Ok((model, self.seed, self.epoch))
    }
}

pub fn save_checkpoint(m: &MlpModel, seed: u64, epoch: usize, path: &Path) -> Result<(), IoError> {
    let doc = Checkpoint::from_model(m, seed, epoch);
    let text = serde_json::to_string(&doc).expect("checkpoint serializes");
    fs::write(path, text).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<(MlpModel, u64, usize), IoError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| IoError::File {
        path: display.clone(),
        source,
    })?;
    let doc: Checkpoint = serde_json::from_str(&text).map_err(|e| IoError::Json {
        path: display,
        detail: e.to_string(),
    })?;
    doc.into_model()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = MlpModel::random(&[6, 4, 3], &mut rng).unwrap();
        let path = std::env::temp_dir().join(format!("fibra-ckpt-{}.json", std::process::id()));
        save_checkpoint(&m, 42, 17, &path).unwrap();
        let (loaded, seed, epoch) = load_checkpoint(&path).unwrap();
        assert_eq!(seed, 42);
        assert_eq!(epoch, 17);
        assert_eq!(loaded.layer_sizes(), m.layer_sizes());
        for (a, b) in loaded.weights().iter().zip(m.weights()) {
            assert_eq!(a.data(), b.data());
        }
        let _ = std::fs::remove_file(&path);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = MlpModel::random(&[2, 2], &mut rng).unwrap();
        let mut doc = Checkpoint::from_model(&m, 0, 0);
        doc.version = 99;
        assert!(matches!(
            doc.into_model(),
            Err(IoError::CheckpointVersion { got: 99, .. })
        ));
    }
}
