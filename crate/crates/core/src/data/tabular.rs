use std::path::Path;

use crate::data::Dataset;
use crate::nn::Tensor;
use crate::{Error, Result, Scalar};

/// Loads a label-first CSV: each row is `label, x_1, ..., x_d`. The feature
/// width is taken from the first data row and every later row must match.
pub fn load_csv<T: Scalar>(
    path: &Path,
    num_classes: usize,
    has_header: bool,
) -> Result<Dataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut width = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = row + 1 + usize::from(has_header);
        if record.len() < 2 {
            return Err(Error::Format(format!(
                "line {line}: need a label and at least one feature"
            )));
        }
        let w = *width.get_or_insert(record.len() - 1);
        if record.len() - 1 != w {
            return Err(Error::Format(format!(
                "line {line}: ragged row with {} features, expected {w}",
                record.len() - 1
            )));
        }
        let label: usize = record[0].parse().map_err(|_| {
            Error::Format(format!(
                "line {line}: label {:?} is not a class index",
                &record[0]
            ))
        })?;
        if label >= num_classes {
            return Err(Error::Label { label, num_classes });
        }
        labels.push(label);
        for cell in record.iter().skip(1) {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Format(format!("line {line}: non-numeric cell {cell:?}")))?;
            data.push(T::lit(v));
        }
    }
    let Some(width) = width else {
        return Err(Error::EmptyDataset);
    };
    Dataset::new(
        Tensor::new(vec![labels.len(), width], data)?,
        labels,
        num_classes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, body: &str) -> std::path::PathBuf {
        let p = dir.path().join("d.csv");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn parses_label_first_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "1,0.5,0.25\n0,1.0,0.0");
        let d: Dataset<f64> = load_csv(&p, 2, false).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.input_dim(), 2);
        assert_eq!(d.labels(), &[1, 0]);
        assert_eq!(d.row(0), &[0.5, 0.25]);
    }

    #[test]
    fn header_is_skipped_when_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "label,a,b\n1,0.5,0.25\n");
        let d: Dataset<f64> = load_csv(&p, 2, true).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        let dir = tempfile::tempdir().unwrap();
        let ragged = write(&dir, "1,0.5,0.25\n0,1.0,0.0,3.0\n");
        assert!(
            matches!(load_csv::<f64>(&ragged, 2, false), Err(Error::Format(m)) if m.contains("ragged"))
        );
        let text = write(&dir, "1,abc\n");
        assert!(matches!(
            load_csv::<f64>(&text, 2, false),
            Err(Error::Format(_))
        ));
        let label = write(&dir, "5,1.0\n");
        assert!(matches!(
            load_csv::<f64>(&label, 2, false),
            Err(Error::Label { label: 5, .. })
        ));
        let empty = write(&dir, "");
        assert!(matches!(
            load_csv::<f64>(&empty, 2, false),
            Err(Error::EmptyDataset)
        ));
    }
}
