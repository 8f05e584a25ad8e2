//! Dense design matrices with count responses.

use std::collections::HashSet;
use std::io::{Read, Write};

use ndarray::{Array2, ArrayView1, ShapeBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the response column in serialized datasets.
pub const RESPONSE_COLUMN: &str = "y";

/// Affine map applied to one raw column: `scaled = (raw - offset) * multiplier`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub multiplier: f64,
    pub offset: f64,
}

impl ColumnScaling {
    pub const IDENTITY: ColumnScaling = ColumnScaling {
        multiplier: 1.0,
        offset: 0.0,
    };

    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.offset) * self.multiplier
    }

    pub fn invert(&self, scaled: f64) -> f64 {
        scaled / self.multiplier + self.offset
    }

    /// The map equivalent to applying `self` and then `next`.
    pub fn then(&self, next: &ColumnScaling) -> ColumnScaling {
        // ((raw - a) * s - b) * t = (raw - (a + b / s)) * (s * t)
        ColumnScaling {
            multiplier: self.multiplier * next.multiplier,
            offset: self.offset + next.offset / self.multiplier,
        }
    }
}

impl Default for ColumnScaling {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// A design matrix `X` (column 0 is the intercept), non-negative integer
/// responses `y`, column labels, and the scaling that produced `X` from the
/// raw covariates.
///
/// `X` is kept in column-major order so that coordinate updates can read a
/// whole column as a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Vec<u64>,
    column_names: Vec<String>,
    scaling: Vec<ColumnScaling>,
}

impl Dataset {
    /// Builds a dataset with identity scaling.
    pub fn new(x: Array2<f64>, y: Vec<u64>, column_names: Vec<String>) -> Result<Self> {
        let p = x.ncols();
        Self::with_scaling(x, y, column_names, vec![ColumnScaling::IDENTITY; p])
    }

    pub fn with_scaling(
        x: Array2<f64>,
        y: Vec<u64>,
        column_names: Vec<String>,
        scaling: Vec<ColumnScaling>,
    ) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::InvalidInput(format!(
                "dataset must have at least one row and one column, got {n}x{p}"
            )));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                context: "response length",
                expected: n,
                found: y.len(),
            });
        }
        if column_names.len() != p {
            return Err(Error::DimensionMismatch {
                context: "column names",
                expected: p,
                found: column_names.len(),
            });
        }
        if scaling.len() != p {
            return Err(Error::DimensionMismatch {
                context: "scaling record",
                expected: p,
                found: scaling.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate column name {name:?}")));
            }
        }
        if let Some((row, _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite design entry at row {}, column {}",
                row.0, row.1
            )));
        }
        let intercept = scaling[0].invert(1.0);
        if x.column(0).iter().any(|&v| scaling[0].invert(v) != 1.0) || intercept != 1.0 {
            return Err(Error::InvalidInput(
                "column 0 must be the all-ones intercept".into(),
            ));
        }
        let x = if x.t().is_standard_layout() {
            x
        } else {
            let mut f = Array2::zeros((n, p).f());
            f.assign(&x);
            f
        };
        Ok(Dataset {
            x,
            y,
            column_names,
            scaling,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &[u64] {
        &self.y
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn scaling(&self) -> &[ColumnScaling] {
        &self.scaling
    }

    /// Contiguous view of column `i`.
    pub fn column(&self, i: usize) -> &[f64] {
        self.x
            .column(i)
            .to_slice()
            .expect("design matrix is column-major")
    }

    pub fn row(&self, j: usize) -> ArrayView1<'_, f64> {
        self.x.row(j)
    }

    /// Centers every non-intercept column to mean 0 and scales it to unit
    /// (population) standard deviation. Constant columns are left as is.
    /// The applied maps are composed onto the scaling record.
    pub fn standardized(&self) -> Dataset {
        let n = self.n() as f64;
        let mut x = self.x.clone();
        let mut scaling = self.scaling.clone();
        for (i, scale) in scaling.iter_mut().enumerate().skip(1) {
            let col = self.column(i);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd == 0.0 || !sd.is_finite() {
                continue;
            }
            let step = ColumnScaling {
                multiplier: 1.0 / sd,
                offset: mean,
            };
            x.column_mut(i).mapv_inplace(|v| step.apply(v));
            *scale = scale.then(&step);
        }
        Dataset {
            x,
            y: self.y.clone(),
            column_names: self.column_names.clone(),
            scaling,
        }
    }

    /// Rows in the given order (indices may repeat).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let p = self.p();
        let mut x = Array2::zeros((rows.len(), p).f());
        for i in 0..p {
            let src = self.column(i);
            for (dst, &r) in x.column_mut(i).iter_mut().zip(rows) {
                *dst = src[r];
            }
        }
        Dataset {
            x,
            y: rows.iter().map(|&r| self.y[r]).collect(),
            column_names: self.column_names.clone(),
            scaling: self.scaling.clone(),
        }
    }

    /// Stacks the rows of `other` below `self`. Columns must agree.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.column_names != other.column_names {
            return Err(Error::InvalidInput("cannot concatenate datasets with different columns".into()));
        }
        let (n1, n2, p) = (self.n(), other.n(), self.p());
        let mut x = Array2::zeros((n1 + n2, p).f());
        x.slice_mut(ndarray::s![..n1, ..]).assign(&self.x);
        x.slice_mut(ndarray::s![n1.., ..]).assign(&other.x);
        let mut y = self.y.clone();
        y.extend_from_slice(&other.y);
        Ok(Dataset {
            x,
            y,
            column_names: self.column_names.clone(),
            scaling: self.scaling.clone(),
        })
    }

    /// Writes `y` followed by every design column, with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![RESPONSE_COLUMN.to_string()];
        header.extend(self.column_names.iter().cloned());
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.p() + 1);
        for j in 0..self.n() {
            record.clear();
            record.push(self.y[j].to_string());
            record.extend(self.x.row(j).iter().map(|v| format_float(*v)));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a dataset written by [`Dataset::write_csv`]; the scaling record
    /// is supplied separately (see [`read_scaling_csv`]).
    pub fn read_csv<R: Read>(reader: R, scaling: Option<Vec<ColumnScaling>>) -> Result<Dataset> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.get(0) != Some(RESPONSE_COLUMN) {
            return Err(Error::InvalidInput(format!(
                "first dataset column must be {RESPONSE_COLUMN:?}"
            )));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let p = names.len();
        let mut values = Vec::new();
        let mut y = Vec::new();
        for (idx, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = idx + 2;
            if rec.len() != p + 1 {
                return Err(Error::InvalidInput(format!(
                    "line {line}: expected {} fields, found {}",
                    p + 1,
                    rec.len()
                )));
            }
            let count = rec[0]
                .parse::<u64>()
                .map_err(|e| Error::InvalidInput(format!("line {line}: bad count {:?}: {e}", &rec[0])))?;
            y.push(count);
            for field in rec.iter().skip(1) {
                values.push(field.parse::<f64>().map_err(|e| {
                    Error::InvalidInput(format!("line {line}: bad value {field:?}: {e}"))
                })?);
            }
        }
        let n = y.len();
        let x = Array2::from_shape_vec((n, p), values)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let scaling = scaling.unwrap_or_else(|| vec![ColumnScaling::IDENTITY; p]);
        Dataset::with_scaling(x, y, names, scaling)
    }

    /// Writes the scaling record as `column,multiplier,offset`.
    pub fn write_scaling_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_scaling_csv(writer, &self.column_names, &self.scaling)
    }
}

pub fn write_scaling_csv<W: Write>(writer: W, names: &[String], scaling: &[ColumnScaling]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["column", "multiplier", "offset"])?;
    for (name, s) in names.iter().zip(scaling) {
        w.write_record([name.as_str(), &format_float(s.multiplier), &format_float(s.offset)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scaling_csv<R: Read>(reader: R) -> Result<(Vec<String>, Vec<ColumnScaling>)> {
    #[derive(Deserialize)]
    struct Row {
        column: String,
        multiplier: f64,
        offset: f64,
    }
    let mut names = Vec::new();
    let mut scaling = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize::<Row>() {
        let row = row?;
        names.push(row.column);
        scaling.push(ColumnScaling {
            multiplier: row.multiplier,
            offset: row.offset,
        });
    }
    Ok((names, scaling))
}

/// Shortest decimal that round-trips to the same `f64`.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:?}")
}
