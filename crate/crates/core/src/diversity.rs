//! Pairwise diversity of a classifier pool.
//!
//! For a pair `(c_i, c_j)` the relationship counts split the samples into
//! four hit/miss cells, and the correlation coefficient summarizes them.
//! Lower correlation means a more diverse pair.

use serde::Serialize;

use crate::table::{PredictionTable, TableError};

/// Joint hit/miss fractions of a classifier pair over a table.
///
/// * `a`: both correct
/// * `b`: `c_j` correct, `c_i` wrong
/// * `c`: `c_i` correct, `c_j` wrong
/// * `d`: both wrong
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RelationshipCounts {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RelationshipCounts {
    /// Normalizes exact integer cell counts, dividing once per cell.
    pub fn from_counts(a: usize, b: usize, c: usize, d: usize) -> Self {
        let n = (a + b + c + d) as f64;
        Self {
            a: a as f64 / n,
            b: b as f64 / n,
            c: c as f64 / n,
            d: d as f64 / n,
        }
    }

    /// The same pair seen from the other side (`b` and `c` exchanged).
    pub fn transposed(self) -> Self {
        Self {
            b: self.c,
            c: self.b,
            ..self
        }
    }
}

/// Correlation coefficient of a pair, with a flag for the zero-denominator
/// case (one of the classifiers never hits or never misses).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Correlation {
    pub value: f64,
    pub degenerate: bool,
}

pub fn relationship(
    table: &PredictionTable,
    i: usize,
    j: usize,
) -> Result<RelationshipCounts, TableError> {
    let row_i = table.row(i)?;
    let row_j = table.row(j)?;
    let (mut a, mut b, mut c, mut d) = (0usize, 0usize, 0usize, 0usize);
    for ((pi, pj), t) in row_i.iter().zip(row_j).zip(table.truth()) {
        match (pi == t, pj == t) {
            (true, true) => a += 1,
            (false, true) => b += 1,
            (true, false) => c += 1,
            (false, false) => d += 1,
        }
    }
    Ok(RelationshipCounts::from_counts(a, b, c, d))
}

/// `(ad - bc) / sqrt((a+b)(c+d)(a+c)(b+d))`.
///
/// A zero denominator yields `0.0` with `degenerate` set. The factors are
/// grouped so that exchanging `b` and `c` gives a bit-identical result.
pub fn correlation_coefficient(rc: &RelationshipCounts) -> Correlation {
    let RelationshipCounts { a, b, c, d } = *rc;
    let left = (a + b) * (a + c);
    let right = (c + d) * (b + d);
    let denom = (left * right).sqrt();
    if denom == 0.0 || !denom.is_finite() {
        return Correlation {
            value: 0.0,
            degenerate: true,
        };
    }
    let value = if b == 0.0 && c == 0.0 {
        1.0
    } else if a == 0.0 && d == 0.0 {
        -1.0
    } else {
        ((a * d - b * c) / denom).clamp(-1.0, 1.0)
    };
    Correlation {
        value,
        degenerate: false,
    }
}

/// Symmetric `M x M` matrix of pairwise correlation coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiversityMatrix {
    pub names: Vec<String>,
    pub scores: Vec<Vec<f64>>,
    /// Pairs `(i, j)`, `i <= j`, whose coefficient hit the zero denominator.
    pub degenerate_pairs: Vec<(usize, usize)>,
}

impl DiversityMatrix {
    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn is_degenerate(&self, i: usize, j: usize) -> bool {
        let key = (i.min(j), i.max(j));
        self.degenerate_pairs.binary_search(&key).is_ok()
    }

    /// CSV with a header row and a leading column of classifier names,
    /// values printed with six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("classifier");
        for name in &self.names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (name, row) in self.names.iter().zip(&self.scores) {
            out.push_str(name);
            for v in row {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Pair<'a> {
            i: &'a str,
            j: &'a str,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            classifiers: &'a [String],
            scores: &'a [Vec<f64>],
            degenerate_pairs: Vec<Pair<'a>>,
        }
        let doc = Doc {
            classifiers: &self.names,
            scores: &self.scores,
            degenerate_pairs: self
                .degenerate_pairs
                .iter()
                .map(|&(i, j)| Pair {
                    i: &self.names[i],
                    j: &self.names[j],
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("diversity matrix always serializes")
    }
}

/// Correlation coefficient for every pair of classifiers in the table.
pub fn diversity_matrix(table: &PredictionTable) -> DiversityMatrix {
    let m = table.num_classifiers();
    let mut scores = vec![vec![0.0; m]; m];
    let mut degenerate_pairs = Vec::new();
    for i in 0..m {
        for j in i..m {
            let rc = relationship(table, i, j).expect("indices are within the pool");
            let rho = correlation_coefficient(&rc);
            scores[i][j] = rho.value;
            scores[j][i] = rho.value;
            if rho.degenerate {
                degenerate_pairs.push((i, j));
            }
        }
    }
    DiversityMatrix {
        names: table.classifier_names().to_vec(),
        scores,
        degenerate_pairs,
    }
}
