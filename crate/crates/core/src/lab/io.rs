use std::fmt::Write as _;

use super::LabError;
use crate::losses::EmbeddingBatch;
use crate::table::LabelId;

/// Writes `label,x0,x1,...` rows under a matching header.
pub fn embeddings_to_csv(batch: &EmbeddingBatch) -> String {
    let mut out = String::from("label");
    for d in 0..batch.dim() {
        let _ = write!(out, ",x{d}");
    }
    out.push('\n');
    for item in batch.items() {
        let _ = write!(out, "{}", item.label);
        for v in &item.vector {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn embeddings_from_csv(text: &str) -> Result<EmbeddingBatch, LabError> {
    let bad = |line: usize, what: &str| {
        LabError::InvalidConfig(format!("embedding CSV line {line}: {what}"))
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"label") || cols.len() < 2 {
        return Err(bad(1, "expected header `label,x0,...`"));
    }
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(bad(i + 1, "wrong number of fields"));
        }
        labels.push(LabelId(
            fields[0]
                .trim()
                .parse()
                .map_err(|_| bad(i + 1, "bad label"))?,
        ));
        vectors.push(
            fields[1..]
                .iter()
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(i + 1, "bad coordinate"))
                })
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Ok(EmbeddingBatch::from_parts(vectors, labels)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::{generate_blobs, BlobSpec};

    #[test]
    fn round_trip() {
        let b = generate_blobs(&BlobSpec::ring(3, 3, 2.0, 0.4, 4, 1)).unwrap();
        assert_eq!(embeddings_from_csv(&embeddings_to_csv(&b)).unwrap(), b);
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(embeddings_from_csv("label,x0,x1\n0,1.0\n").is_err());
        assert!(embeddings_from_csv("x0\n1\n").is_err());
    }
}
