//! LIBSVM text format: `label index:value index:value ...` with 1-based
//! feature indices, one sample per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::ProblemData;
use crate::design::{DesignMatrix, SparseMat};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reads a LIBSVM file into a sparse problem. The feature count is the
/// maximum index seen; lines with no features become zero rows. Malformed
/// tokens and duplicate indices within a line are reported with their line
/// number.
pub fn read_libsvm<T: Scalar, P: AsRef<Path>>(path: P) -> Result<ProblemData<T>> {
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut labels: Vec<T> = Vec::new();
    let mut rows: Vec<Vec<(usize, T)>> = Vec::new();
    let mut max_col = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue; // blank line
        };
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad label `{label_tok}`"),
        })?;
        if !label.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                msg: "non-finite label".into(),
            });
        }

        let mut entries: Vec<(usize, T)> = Vec::new();
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("expected index:value, got `{tok}`"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad feature index `{idx_s}`"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "feature indices are 1-based".into(),
                });
            }
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad feature value `{val_s}`"),
            })?;
            if !val.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("non-finite value at index {idx}"),
                });
            }
            entries.push((idx - 1, T::real(val)));
        }
        entries.sort_by_key(|&(j, _)| j);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("duplicate feature index {}", w[0].0 + 1),
                });
            }
        }
        if let Some(&(last, _)) = entries.last() {
            max_col = max_col.max(last + 1);
        }
        labels.push(T::real(label));
        rows.push(entries);
    }

    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty file".into(),
        });
    }
    if max_col == 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "no features in file".into(),
        });
    }
    let x = SparseMat::from_rows(max_col, rows)?;
    ProblemData::new(DesignMatrix::Sparse(x), labels)
}

/// Writes a problem in LIBSVM format. Values print in shortest round-trip
/// form, so reading the file back reproduces them exactly.
pub fn write_libsvm<T: Scalar, P: AsRef<Path>>(path: P, data: &ProblemData<T>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    for i in 0..data.nrows() {
        write!(w, "{}", data.b[i].to_f64_lossy())?;
        match &data.x {
            DesignMatrix::Sparse(sp) => {
                for (j, v) in sp.row_entries(i) {
                    write!(w, " {}:{}", j + 1, v.to_f64_lossy())?;
                }
            }
            DesignMatrix::Dense(mat) => {
                for (j, &v) in mat.row(i).iter().enumerate() {
                    if v != T::zero() {
                        write!(w, " {}:{}", j + 1, v.to_f64_lossy())?;
                    }
                }
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
