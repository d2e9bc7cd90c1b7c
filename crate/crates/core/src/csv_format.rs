//! CSV representation of pairwise matrices.
//!
//! ```text
//! Criteria,A,B,C
//! A,1,2,3
//! B,1/2,1,2
//! C,1/3,1/2,1
//! ```
//!
//! The corner cell is free text. Cells hold decimals or integer fractions
//! `p/q`. Writing emits `1/k` or `k` whenever the value is bit-identical to
//! such a fraction and the shortest round-trip decimal otherwise, so every
//! value reads back to the same bits.

use crate::error::{MathError, Result};
use crate::matrix::PairwiseMatrix;
use crate::scalar::Scalar;

/// Parses a decimal or `p/q` cell.
pub fn parse_ratio<T: Scalar>(cell: &str) -> Result<T> {
    let cell = cell.trim();
    let number = |s: &str| {
        s.trim()
            .parse::<T>()
            .map_err(|_| MathError::Parse(format!("not a number: {cell:?}")))
    };
    match cell.split_once('/') {
        Some((p, q)) => {
            let (p, q) = (number(p)?, number(q)?);
            if q == T::zero() {
                return Err(MathError::Parse(format!("zero denominator: {cell:?}")));
            }
            Ok(p / q)
        }
        None => number(cell),
    }
}

/// Renders a value so that [`parse_ratio`] returns the identical bits.
pub fn format_ratio<T: Scalar>(value: T) -> String {
    for k in 1..=9usize {
        let kt = T::from_count(k);
        if value == kt {
            return k.to_string();
        }
        if k > 1 && value == T::one() / kt {
            return format!("1/{k}");
        }
    }
    value.to_string()
}

pub fn read_matrix<T: Scalar>(text: &str) -> Result<PairwiseMatrix<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| MathError::Parse("empty file".into()))?
        .map_err(|e| MathError::Parse(e.to_string()))?;
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    let mut rows = Vec::with_capacity(n);
    for (i, record) in records.enumerate() {
        let record = record.map_err(|e| MathError::Parse(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row_label = record.get(0).unwrap_or_default();
        match labels.get(rows.len()) {
            Some(expected) if expected == row_label => {}
            _ => {
                return Err(MathError::Parse(format!(
                    "row {} is labelled {row_label:?}, expected the column labels in order",
                    i + 1
                )))
            }
        }
        if record.len() != n + 1 {
            return Err(MathError::Parse(format!(
                "row {row_label:?} has {} values, expected {n}",
                record.len().saturating_sub(1)
            )));
        }
        rows.push(
            record
                .iter()
                .skip(1)
                .map(parse_ratio)
                .collect::<Result<Vec<T>>>()?,
        );
    }
    PairwiseMatrix::from_rows(labels, rows)
}

pub fn write_matrix<T: Scalar>(matrix: &PairwiseMatrix<T>, corner: &str) -> String {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = vec![corner.to_string()];
    header.extend(matrix.labels().iter().cloned());
    writer.write_record(&header).expect("in-memory write");
    for (label, row) in matrix.labels().iter().zip(matrix.rows()) {
        let mut record = vec![label.clone()];
        record.extend(row.iter().map(|&v| format_ratio(v)));
        writer.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EXPERT_TABLE: &str = "Sub-criteria,Training Program Effectiveness,Awareness Session Regularity,Incident Reporting Protocol
Training Program Effectiveness,1,2,3
Awareness Session Regularity,1/2,1,2
Incident Reporting Protocol,1/3,1/2,1
";

    #[test]
    fn reads_fractions_exactly() {
        let m: PairwiseMatrix<f64> = read_matrix(EXPERT_TABLE).unwrap();
        assert_eq!(m.order(), 3);
        assert_eq!(m.get(2, 0), 1.0 / 3.0);
        assert_eq!(m.get(1, 0), 0.5);
        assert_eq!(write_matrix(&m, "Sub-criteria"), EXPERT_TABLE);
    }

    #[test]
    fn quoted_labels_survive() {
        let m = PairwiseMatrix::<f64>::from_upper_triangle(
            vec!["Cost, total".into(), "Speed".into()],
            &[0.757],
        )
        .unwrap();
        let text = write_matrix(&m, "");
        let back: PairwiseMatrix<f64> = read_matrix(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(read_matrix::<f64>("").is_err());
        assert!(read_matrix::<f64>(",a,b\na,1,x\nb,1,1\n").is_err());
        assert!(read_matrix::<f64>(",a,b\nb,1,1\na,1,1\n").is_err());
        assert!(read_matrix::<f64>(",a,b\na,1\nb,1,1\n").is_err());
        assert!(parse_ratio::<f64>("1/0").is_err());
    }

    #[test]
    fn ratio_formatting() {
        assert_eq!(format_ratio(1.0 / 9.0), "1/9");
        assert_eq!(format_ratio(9.0), "9");
        assert_eq!(format_ratio(1.319), "1.319");
        assert_eq!(parse_ratio::<f64>(" 2/4 ").unwrap(), 0.5);
    }

    proptest! {
        #[test]
        fn any_upper_triangle_round_trips_bit_exactly(
            upper in proptest::collection::vec(
                prop_oneof![(1u32..=9).prop_map(|k| k as f64), (2u32..=9).prop_map(|k| 1.0 / k as f64), 0.01f64..50.0],
                6,
            )
        ) {
            let labels = (0..4).map(|i| format!("L{i}")).collect();
            let m = PairwiseMatrix::from_upper_triangle(labels, &upper).unwrap();
            let back: PairwiseMatrix<f64> = read_matrix(&write_matrix(&m, "x")).unwrap();
            for (a, b) in back.rows().iter().flatten().zip(m.rows().iter().flatten()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
