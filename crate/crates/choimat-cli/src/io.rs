use choimat::linalg::{BipartiteOperator, Complex64, ComplexMatrix};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// On-disk matrix format: square operators stored row-major as [re, im]
/// pairs. Bipartite operators record the tensor split in dim1 x dim2; plain
/// matrices omit dim2 (or set it to 1) and use dim1 as the side length.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim1: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim2: Option<usize>,
    pub data: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_bipartite(op: &BipartiteOperator) -> Self {
        MatrixFile {
            dim1: op.dim1,
            dim2: Some(op.dim2),
            data: op.matrix.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn side(&self) -> usize {
        self.dim1 * self.dim2.unwrap_or(1)
    }

    fn validate(&self) -> Result<(), String> {
        if self.dim1 == 0 || self.dim2 == Some(0) {
            return Err("dimensions must be positive".into());
        }
        let side = self.side();
        if self.data.len() != side * side {
            return Err(format!(
                "data holds {} entries, but a {side} x {side} operator needs {}",
                self.data.len(),
                side * side
            ));
        }
        if self.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err("entries must be finite".into());
        }
        Ok(())
    }

    pub fn to_plain(&self) -> Result<ComplexMatrix, String> {
        self.validate()?;
        let side = self.side();
        Ok(ComplexMatrix::from_fn(side, side, |i, j| {
            let [re, im] = self.data[i * side + j];
            Complex64::new(re, im)
        }))
    }

    /// Reads the file as a bipartite operator; requires an explicit tensor
    /// split with both factors at least two-dimensional.
    pub fn to_bipartite(&self) -> Result<BipartiteOperator, String> {
        let dim2 = self
            .dim2
            .filter(|&m| m >= 2)
            .ok_or("this operation needs a bipartite operator (dim2 >= 2)")?;
        if self.dim1 < 2 {
            return Err("this operation needs a bipartite operator (dim1 >= 2)".into());
        }
        Ok(BipartiteOperator::new(self.dim1, dim2, self.to_plain()?))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("matrix files always serialize");
        text.push('\n');
        text
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let raw = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let file: MatrixFile =
            serde_json::from_str(&raw).map_err(|e| format!("{}: {e}", path.display()))?;
        file.validate().map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(file)
    }
}

/// Write text to the given path, or to standard output when absent.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Plain-text rendering of a complex matrix, one row per line.
pub fn format_matrix(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows {
        out.push_str("  ");
        for j in 0..m.cols {
            let z = m[(i, j)];
            out.push_str(&format!("{:>+10.6}{:+.6}i  ", z.re, z.im));
        }
        out.push('\n');
    }
    out
}

/// Nested-array JSON value for a matrix: rows of [re, im] pairs.
pub fn matrix_json(m: &ComplexMatrix) -> serde_json::Value {
    serde_json::Value::Array(
        (0..m.rows)
            .map(|i| {
                serde_json::Value::Array(
                    (0..m.cols)
                        .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}
