//! IDX files as distributed for MNIST: a big-endian `u32` magic number
//! (`0x0000_08DD`, where `08` is the unsigned-byte type code and `DD` the
//! number of dimensions), one big-endian `u32` per dimension, then the raw
//! bytes in row-major order.

use std::fs;
use std::path::Path;

use super::{DataError, Dataset};
use crate::numkit::Matrix;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
    path: &'a str,
}

impl Reader<'_> {
    fn u32(&mut self, what: &str) -> Result<u32, DataError> {
        let end = self.offset + 4;
        let chunk = self.bytes.get(self.offset..end).ok_or_else(|| DataError::Idx {
            path: self.path.to_string(),
            offset: self.offset,
            reason: format!("file truncated while reading {what}"),
        })?;
        self.offset = end;
        Ok(u32::from_be_bytes(chunk.try_into().expect("4 bytes")))
    }
}

/// Parses an in-memory IDX image or label file. Images become rows of
/// `pixel / 255`; labels become a one-column matrix plus `labels`.
pub fn parse_idx(bytes: &[u8], path: &str) -> Result<Dataset, DataError> {
    let mut r = Reader { bytes, offset: 0, path };
    let magic = r.u32("magic number")?;
    let dims: Vec<usize> = match magic {
        IDX_IMAGES_MAGIC => vec![r.u32("item count")? as usize, r.u32("row count")? as usize, r.u32("column count")? as usize],
        IDX_LABELS_MAGIC => vec![r.u32("item count")? as usize],
        other => {
            return Err(DataError::Idx {
                path: path.to_string(),
                offset: 0,
                reason: format!("bad magic number {other:#010x}, expected {IDX_IMAGES_MAGIC:#010x} or {IDX_LABELS_MAGIC:#010x}"),
            })
        }
    };
    let n = dims[0];
    let width: usize = dims[1..].iter().product();
    let needed = n * width;
    let body = &bytes[r.offset..];
    if body.len() < needed {
        return Err(DataError::Idx {
            path: path.to_string(),
            offset: r.offset + body.len(),
            reason: format!("payload truncated: header promises {needed} bytes, found {}", body.len()),
        });
    }
    let body = &body[..needed];
    let provenance = format!("idx:{path}");
    if magic == IDX_LABELS_MAGIC {
        let points = Matrix::from_vec(n, 1, body.iter().map(|&b| f64::from(b)).collect())?;
        let mut ds = Dataset::new(points, provenance);
        ds.labels = Some(body.to_vec());
        Ok(ds)
    } else {
        let points = Matrix::from_vec(n, width, body.iter().map(|&b| f64::from(b) / 255.0).collect())?;
        Ok(Dataset::new(points, provenance))
    }
}

pub fn load_idx(path: &Path) -> Result<Dataset, DataError> {
    let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
    parse_idx(&bytes, &path.display().to_string())
}

/// Images with their labels attached.
pub fn load_idx_pair(images: &Path, labels: &Path) -> Result<Dataset, DataError> {
    let mut ds = load_idx(images)?;
    let lab = load_idx(labels)?;
    if lab.len() != ds.len() {
        return Err(DataError::Idx {
            path: labels.display().to_string(),
            offset: 4,
            reason: format!("{} labels for {} images", lab.len(), ds.len()),
        });
    }
    ds.labels = lab.labels;
    Ok(ds)
}

/// Writes `images` (values in `[0, 1]`, rounded to the nearest `k / 255`).
pub fn write_idx_images(path: &Path, images: &Matrix, rows: usize, cols: usize) -> Result<(), DataError> {
    if rows * cols != images.cols() {
        return Err(DataError::Idx {
            path: path.display().to_string(),
            offset: 0,
            reason: format!("{rows}x{cols} images need {} columns, got {}", rows * cols, images.cols()),
        });
    }
    let mut out = Vec::with_capacity(16 + images.as_slice().len());
    for word in [IDX_IMAGES_MAGIC, images.rows() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    out.extend(images.as_slice().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    fs::write(path, out).map_err(|e| DataError::io(path, e))
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<(), DataError> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    fs::write(path, out).map_err(|e| DataError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::RngState;

    fn fixture() -> Vec<u8> {
        let mut b = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        b.extend_from_slice(&[0, 255, 51, 102, 255, 0, 0, 204]);
        b
    }

    #[test]
    fn hand_crafted_images() {
        let ds = parse_idx(&fixture(), "mem").unwrap();
        assert_eq!(ds.points.shape(), (2, 4));
        assert_eq!(ds.points.row(0), &[0.0, 1.0, 0.2, 0.4]);
        assert_eq!(ds.points.row(1), &[1.0, 0.0, 0.0, 0.8]);
    }

    #[test]
    fn labels_file() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 3, 7, 0, 9];
        let ds = parse_idx(&bytes, "mem").unwrap();
        assert_eq!(ds.labels, Some(vec![7, 0, 9]));
        assert_eq!(ds.points.as_slice(), &[7.0, 0.0, 9.0]);
    }

    #[test]
    fn bad_magic_and_truncation() {
        let mut bytes = fixture();
        bytes[3] = 4;
        let err = parse_idx(&bytes, "mem").unwrap_err();
        assert!(matches!(err, DataError::Idx { offset: 0, .. }), "{err}");
        let short = &fixture()[..14];
        assert!(matches!(parse_idx(short, "mem"), Err(DataError::Idx { offset: 12, .. })));
        let body_short = &fixture()[..20];
        let err = parse_idx(body_short, "mem").unwrap_err();
        assert!(matches!(err, DataError::Idx { offset: 20, .. }), "{err}");
    }

    #[test]
    fn write_then_read_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = RngState::new(31);
        let values: Vec<f64> = (0..5 * 12).map(|_| rng.below(256) as f64 / 255.0).collect();
        let images = Matrix::from_vec(5, 12, values).unwrap();
        let labels: Vec<u8> = (0..5).map(|_| rng.below(10) as u8).collect();
        let (ip, lp) = (dir.path().join("img.idx"), dir.path().join("lab.idx"));
        write_idx_images(&ip, &images, 3, 4).unwrap();
        write_idx_labels(&lp, &labels).unwrap();
        let ds = load_idx_pair(&ip, &lp).unwrap();
        assert_eq!(ds.points, images);
        assert_eq!(ds.labels.unwrap(), labels);
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_idx(Path::new("/nonexistent/train-images.idx")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/train-images.idx"));
    }
}
