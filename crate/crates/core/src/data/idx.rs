//! IDX binary format (the MNIST distribution format).
//!
//! Images: magic `0x00000803`, then big-endian `u32` count, rows, cols and
//! `count * rows * cols` pixel bytes. Labels: magic `0x00000801`, a `u32`
//! count and one byte per label. Gzip-compressed files are detected by their
//! header bytes and decoded transparently.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::data::Dataset;
use crate::nn::Tensor;
use crate::{Error, Result, Scalar};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut raw)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::Format(format!("{}: bad gzip stream: {e}", path.display())))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format(format!("{}: truncated header", path.display())))
}

fn expect_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != expected {
        return Err(Error::Format(format!(
            "{}: magic {magic:#010x}, expected {expected:#010x}",
            path.display()
        )));
    }
    Ok(())
}

fn body<'a>(bytes: &'a [u8], header: usize, len: usize, path: &Path) -> Result<&'a [u8]> {
    match bytes.len().cmp(&(header + len)) {
        std::cmp::Ordering::Less => Err(Error::Format(format!(
            "{}: truncated, {} payload bytes of {len}",
            path.display(),
            bytes.len().saturating_sub(header)
        ))),
        std::cmp::Ordering::Greater => Err(Error::Format(format!(
            "{}: {} trailing bytes",
            path.display(),
            bytes.len() - header - len
        ))),
        std::cmp::Ordering::Equal => Ok(&bytes[header..]),
    }
}

/// Raw images: `(count, rows, cols, pixels)`.
pub fn read_images(path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    let bytes = read_all(path)?;
    expect_magic(&bytes, IMAGES_MAGIC, path)?;
    let count = be_u32(&bytes, 4, path)? as usize;
    let rows = be_u32(&bytes, 8, path)? as usize;
    let cols = be_u32(&bytes, 12, path)? as usize;
    let pixels = body(&bytes, 16, count * rows * cols, path)?.to_vec();
    Ok((count, rows, cols, pixels))
}

pub fn read_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_all(path)?;
    expect_magic(&bytes, LABELS_MAGIC, path)?;
    let count = be_u32(&bytes, 4, path)? as usize;
    Ok(body(&bytes, 8, count, path)?.to_vec())
}

/// Loads an image/label IDX pair. Pixels are scaled to `[0, 1]` by `/255`
/// and images flattened row-major; `num_classes` is one past the largest
/// label present (at least 2).
pub fn load_idx<T: Scalar>(images_path: &Path, labels_path: &Path) -> Result<Dataset<T>> {
    let (count, rows, cols, pixels) = read_images(images_path)?;
    let labels = read_labels(labels_path)?;
    if labels.len() != count {
        return Err(Error::Format(format!(
            "{} images but {} labels",
            count,
            labels.len()
        )));
    }
    if count == 0 || rows * cols == 0 {
        return Err(Error::EmptyDataset);
    }
    let scale = T::lit(255.0);
    let data = pixels
        .iter()
        .map(|&p| T::from_u8(p).unwrap() / scale)
        .collect();
    let labels: Vec<usize> = labels.into_iter().map(usize::from).collect();
    let num_classes = labels.iter().max().map_or(2, |&m| (m + 1).max(2));
    Dataset::new(
        Tensor::new(vec![count, rows * cols], data)?,
        labels,
        num_classes,
    )
}

pub fn write_images(path: &Path, rows: usize, cols: usize, pixels: &[u8]) -> Result<()> {
    if rows * cols == 0 || !pixels.len().is_multiple_of(rows * cols) {
        return Err(Error::Shape(
            "pixel buffer is not a whole number of images".into(),
        ));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&IMAGES_MAGIC.to_be_bytes())?;
    for v in [pixels.len() / (rows * cols), rows, cols] {
        w.write_all(&(v as u32).to_be_bytes())?;
    }
    w.write_all(pixels)?;
    w.flush()?;
    Ok(())
}

pub fn write_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&LABELS_MAGIC.to_be_bytes())?;
    w.write_all(&(labels.len() as u32).to_be_bytes())?;
    w.write_all(labels)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf, Vec<u8>) {
        // ten hand-written 2x2 images
        let pixels: Vec<u8> = (0..40u8).map(|k| k.wrapping_mul(37)).collect();
        let labels: Vec<u8> = vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9];
        let ip = dir.join("img.idx");
        let lp = dir.join("lab.idx");
        write_images(&ip, 2, 2, &pixels).unwrap();
        write_labels(&lp, &labels).unwrap();
        (ip, lp, pixels)
    }

    #[test]
    fn hand_fixture_scales_by_255() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp, pixels) = fixture(dir.path());
        let d: Dataset<f64> = load_idx(&ip, &lp).unwrap();
        assert_eq!(d.len(), 10);
        assert_eq!(d.input_dim(), 4);
        assert_eq!(d.num_classes(), 10);
        for (v, p) in d.features().data().iter().zip(&pixels) {
            assert_eq!(*v, *p as f64 / 255.0);
        }
        assert_eq!(d.labels()[7], 7);
    }

    #[test]
    fn hand_bytes_exact() {
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("i");
        let lp = dir.path().join("l");
        let mut img = vec![0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 3];
        img.extend_from_slice(&[0, 255, 51]);
        std::fs::write(&ip, img).unwrap();
        std::fs::write(&lp, [0, 0, 8, 1, 0, 0, 0, 1, 1]).unwrap();
        let d: Dataset<f64> = load_idx(&ip, &lp).unwrap();
        assert_eq!(d.features().data(), &[0.0, 1.0, 0.2]);
        assert_eq!(d.labels(), &[1]);
        assert_eq!(d.num_classes(), 2);
    }

    #[test]
    fn wrong_magic_on_labels() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, _, _) = fixture(dir.path());
        // an image file passed as labels carries 0x803
        let err = load_idx::<f64>(&ip, &ip).unwrap_err();
        assert!(
            matches!(err, Error::Format(ref m) if m.contains("magic")),
            "{err}"
        );
    }

    #[test]
    fn truncated_and_mismatched() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp, _) = fixture(dir.path());
        let bytes = std::fs::read(&ip).unwrap();
        let short = dir.path().join("short");
        std::fs::write(&short, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            load_idx::<f64>(&short, &lp),
            Err(Error::Format(_))
        ));

        let few = dir.path().join("few");
        write_labels(&few, &[1, 2, 3]).unwrap();
        assert!(matches!(load_idx::<f64>(&ip, &few), Err(Error::Format(_))));
    }

    #[test]
    fn gzip_is_transparent() {
        use flate2::write::GzEncoder;
        use flate2::Compression;
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp, _) = fixture(dir.path());
        let gz = dir.path().join("img.idx.gz");
        let mut enc = GzEncoder::new(File::create(&gz).unwrap(), Compression::default());
        enc.write_all(&std::fs::read(&ip).unwrap()).unwrap();
        enc.finish().unwrap();
        let a: Dataset<f64> = load_idx(&ip, &lp).unwrap();
        let b: Dataset<f64> = load_idx(&gz, &lp).unwrap();
        assert_eq!(a, b);
    }
}
