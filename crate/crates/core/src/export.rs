//! JSON and CSV artifacts. Complex numbers are written as `[re, im]`.

use std::io::Write;

use serde::Serialize;

use crate::blocktri::BlockTriMatrix;
use crate::error::Result;
use crate::matrix::{DenseMatrix, C64};
use crate::overlaps::{OrthogonalityReport, OverlapTable};
use crate::params::ModelParams;
use crate::spectral::EigenBasis;

type Pair = [f64; 2];

fn pair(z: C64) -> Pair {
    [z.re, z.im]
}

fn rows(m: &DenseMatrix) -> Vec<Vec<Pair>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().copied().map(pair).collect())
        .collect()
}

#[derive(Serialize)]
pub struct MatrixExport<'a> {
    pub dim: usize,
    /// Row-major.
    pub entries: Vec<Pair>,
    pub params: &'a ModelParams,
}

pub fn matrix_export<'a>(m: &DenseMatrix, params: &'a ModelParams) -> MatrixExport<'a> {
    MatrixExport {
        dim: m.rows(),
        entries: m.entries().iter().copied().map(pair).collect(),
        params,
    }
}

#[derive(Serialize)]
pub struct BasisEntry {
    pub epsilons: Vec<i8>,
    pub level: usize,
    pub rank: usize,
    pub eigenvalue: Pair,
    pub vector: Vec<Pair>,
}

pub fn basis_export(basis: &EigenBasis) -> Vec<BasisEntry> {
    basis
        .indices
        .iter()
        .enumerate()
        .map(|(p, idx)| BasisEntry {
            epsilons: idx.epsilons.clone(),
            level: idx.level,
            rank: idx.rank,
            eigenvalue: pair(basis.eigenvalues[p]),
            vector: basis.vector(p).into_iter().map(pair).collect(),
        })
        .collect()
}

#[derive(Serialize)]
pub struct BlockEntry {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Pair>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<Pair>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<Pair>>,
}

/// One entry per level; block rows are target ranks, columns source ranks.
pub fn blocks_export(blocks: &BlockTriMatrix) -> Vec<BlockEntry> {
    (0..=blocks.n_factors)
        .map(|n| BlockEntry {
            n,
            a: rows(&blocks.a[n]),
            b: rows(&blocks.b[n]),
            c: rows(&blocks.c[n]),
        })
        .collect()
}

/// Columns `n, i, k, s, re, im`.
pub fn write_overlap_csv<W: Write>(table: &OverlapTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "i", "k", "s", "re", "im"])?;
    for (n, i, k, s, f) in table.rows() {
        w.write_record([
            n.to_string(),
            i.to_string(),
            k.to_string(),
            s.to_string(),
            f.re.to_string(),
            f.im.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
pub struct WeightEntry {
    pub k: usize,
    pub s: usize,
    pub weight: Pair,
}

#[derive(Serialize)]
pub struct OrthogonalityExport {
    pub weights: Vec<WeightEntry>,
    pub gram: Vec<Vec<Pair>>,
    pub max_diagonal_deviation: f64,
    pub max_off_diagonal: f64,
    pub weight_imag_ratio: f64,
    pub cancellation: f64,
}

pub fn orthogonality_export(report: &OrthogonalityReport) -> OrthogonalityExport {
    let weights = report
        .weights
        .iter()
        .enumerate()
        .flat_map(|(s, ws)| {
            ws.iter().enumerate().map(move |(k, w)| WeightEntry {
                k: k + 1,
                s,
                weight: pair(*w),
            })
        })
        .collect();
    OrthogonalityExport {
        weights,
        gram: rows(&report.gram),
        max_diagonal_deviation: report.max_diagonal_deviation,
        max_off_diagonal: report.max_off_diagonal,
        weight_imag_ratio: report.weight_imag_ratio,
        cancellation: report.cancellation,
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocktri::entries_recursive;
    use crate::overlaps::overlap_f;
    use crate::spectral::BasisKind;

    fn sample() -> ModelParams {
        ModelParams::new(2, C64::new(0.0, 1.0), C64::new(0.0, 0.6), C64::new(0.0, 0.37), 0.4)
    }

    #[test]
    fn matrix_json_shape() {
        let p = sample();
        let m = DenseMatrix::identity(4);
        let v: serde_json::Value = serde_json::from_str(&to_json(&matrix_export(&m, &p)).unwrap()).unwrap();
        assert_eq!(v["dim"], 4);
        assert_eq!(v["entries"].as_array().unwrap().len(), 16);
        assert_eq!(v["entries"][5], serde_json::json!([1.0, 0.0]));
        assert_eq!(v["params"]["n"], 2);
    }

    #[test]
    fn blocks_json_shape() {
        let b = entries_recursive(&sample()).unwrap();
        let v = serde_json::to_value(blocks_export(&b)).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 3);
        assert_eq!(v[1]["A"].as_array().unwrap().len(), 2);
        assert_eq!(v[2]["B"].as_array().unwrap().len(), 0);
        assert_eq!(v[0]["C"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn basis_json_fields() {
        let basis = EigenBasis::new(&sample(), BasisKind::Psi);
        let v = serde_json::to_value(basis_export(&basis)).unwrap();
        assert_eq!(v[2]["epsilons"], serde_json::json!([1, -1]));
        assert_eq!(v[2]["level"], 1);
        assert_eq!(v[2]["rank"], 2);
    }

    #[test]
    fn overlap_csv_rows() {
        let t = overlap_f(&sample()).unwrap();
        let mut buf = Vec::new();
        write_overlap_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,i,k,s,re,im");
        // 4 functions at 4 spectrum points
        assert_eq!(lines.len(), 1 + 16);
        assert!(lines[1].starts_with("0,1,1,0,1,0"));
    }
}
