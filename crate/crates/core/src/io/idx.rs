//! IDX image/label files (the MNIST binary layout): big-endian headers with
//! magic 0x00000803 for images (count, rows, cols) and 0x00000801 for labels.

use std::fs;
use std::path::Path;

use super::IoError;
use crate::mlp::Dataset;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// A loaded image/label pair set. Pixels stay as raw bytes; [`IdxDataset::to_dataset`]
/// scales them to `[0, 1]` reals and flattens each image.
#[derive(Clone, Debug)]
pub struct IdxDataset {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
    /// Set when a requested limit exceeded the file contents and the full
    /// file was returned instead.
    pub limit_clamped: bool,
}

fn read_u32(data: &[u8], offset: &mut usize, path: &str) -> Result<u32, IoError> {
    let bytes: [u8; 4] = data
        .get(*offset..*offset + 4)
        .and_then(|s| s.try_into().ok())
        .ok_or_else(|| IoError::Idx {
            path: path.to_string(),
            detail: "truncated header".into(),
        })?;
    *offset += 4;
    Ok(u32::from_be_bytes(bytes))
}

/// Loads an IDX image file and its label file, optionally truncated to the
/// first `limit` samples.
pub fn load_idx(
    images_path: &Path,
    labels_path: &Path,
    limit: Option<usize>,
) -> Result<IdxDataset, IoError> {
    let img_name = images_path.display().to_string();
    let lbl_name = labels_path.display().to_string();
    let img_data = fs::read(images_path).map_err(|source| IoError::File {
        path: img_name.clone(),
        source,
    })?;
    let lbl_data = fs::read(labels_path).map_err(|source| IoError::File {
        path: lbl_name.clone(),
        source,
    })?;

    let mut off = 0usize;
    let magic = read_u32(&img_data, &mut off, &img_name)?;
    if magic != IMAGES_MAGIC {
        return Err(IoError::Idx {
            path: img_name,
            detail: format!("magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        });
    }
    let count = read_u32(&img_data, &mut off, &img_name)? as usize;
    let rows = read_u32(&img_data, &mut off, &img_name)? as usize;
    let cols = read_u32(&img_data, &mut off, &img_name)? as usize;
    let expected = off + count * rows * cols;
    if img_data.len() < expected {
        return Err(IoError::Idx {
            path: img_name,
            detail: format!("{} pixel bytes, expected {}", img_data.len() - off, count * rows * cols),
        });
    }

    let mut loff = 0usize;
    let lmagic = read_u32(&lbl_data, &mut loff, &lbl_name)?;
    if lmagic != LABELS_MAGIC {
        return Err(IoError::Idx {
            path: lbl_name,
            detail: format!("magic {lmagic:#010x}, expected {LABELS_MAGIC:#010x}"),
        });
    }
    let lcount = read_u32(&lbl_data, &mut loff, &lbl_name)? as usize;
    if lcount != count {
        return Err(IoError::Idx {
            path: lbl_name,
            detail: format!("label count {lcount} does not match image count {count}"),
        });
    }
    if lbl_data.len() < loff + count {
        return Err(IoError::Idx {
            path: lbl_name,
            detail: "truncated label data".into(),
        });
    }

    let (take, clamped) = match limit {
        Some(k) if k < count => (k, false),
        Some(_) => (count, limit != Some(count)),
        None => (count, false),
    };

    let labels: Vec<u8> = lbl_data[loff..loff + take].to_vec();
    if let Some(&bad) = labels.iter().find(|&&l| l > 9) {
        return Err(IoError::Idx {
            path: lbl_name,
            detail: format!("label {bad} outside [0, 9]"),
        });
    }

    Ok(IdxDataset {
        count: take,
        rows,
        cols,
        pixels: img_data[off..off + take * rows * cols].to_vec(),
        labels,
        limit_clamped: clamped,
    })
}

impl IdxDataset {
    pub fn input_dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let d = self.input_dim();
        &self.pixels[i * d..(i + 1) * d]
    }

    /// Flattened `[0, 1]`-scaled inputs with integer labels.
    pub fn to_dataset(&self) -> Dataset {
        let inputs = (0..self.count)
            .map(|i| self.image(i).iter().map(|&b| b as f64 / 255.0).collect())
            .collect();
        let labels = self.labels.iter().map(|&l| l as usize).collect();
        Dataset::new(inputs, labels).expect("consistent by construction")
    }
}

/// Serializes images and labels in IDX layout (used by tests and tools that
/// need to materialize datasets on disk).
pub fn write_idx(
    images_path: &Path,
    labels_path: &Path,
    rows: usize,
    cols: usize,
    images: &[Vec<u8>],
    labels: &[u8],
) -> Result<(), IoError> {
    assert_eq!(images.len(), labels.len());
    let mut img = Vec::with_capacity(16 + images.len() * rows * cols);
    img.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(images.len() as u32).to_be_bytes());
    img.extend_from_slice(&(rows as u32).to_be_bytes());
    img.extend_from_slice(&(cols as u32).to_be_bytes());
    for image in images {
        assert_eq!(image.len(), rows * cols);
        img.extend_from_slice(image);
    }
    let mut lbl = Vec::with_capacity(8 + labels.len());
    lbl.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    lbl.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lbl.extend_from_slice(labels);

    fs::write(images_path, img).map_err(|source| IoError::File {
        path: images_path.display().to_string(),
        source,
    })?;
    fs::write(labels_path, lbl).map_err(|source| IoError::File {
        path: labels_path.display().to_string(),
        source,
    })
}
