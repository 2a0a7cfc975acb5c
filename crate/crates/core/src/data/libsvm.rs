//! LIBSVM sparse text format.
//!
//! One sample per line: `<label> <index>:<value> ...` with 1-based, strictly
//! increasing indices. Blank lines and `#` comments are skipped. Labels are
//! mapped to `+1` when positive and `-1` otherwise.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{Dataset, Label};
use crate::error::{Error, Result};

pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    parse_libsvm_with_dim(reader, None)
}

/// Parses with an optional fixed feature count; otherwise the dimension is
/// the largest index seen.
pub fn parse_libsvm_with_dim<R: BufRead>(reader: R, n_features: Option<usize>) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad label '{label_tok}'"),
        })?;
        if !label.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("non-finite label '{label_tok}'"),
            });
        }

        let mut row = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("expected index:value, got '{tok}'"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad index in '{tok}'"),
            })?;
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad value in '{tok}'"),
            })?;
            if !val.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("non-finite value in '{tok}'"),
                });
            }
            if idx == 0 {
                return Err(Error::Index {
                    line: lineno,
                    msg: "indices are 1-based".into(),
                });
            }
            if idx <= prev {
                return Err(Error::Index {
                    line: lineno,
                    msg: format!("index {idx} not greater than {prev}"),
                });
            }
            if let Some(d) = n_features {
                if idx > d {
                    return Err(Error::Index {
                        line: lineno,
                        msg: format!("index {idx} exceeds {d} features"),
                    });
                }
            }
            prev = idx;
            row.push((idx - 1, val));
        }
        max_index = max_index.max(prev);
        labels.push(Label::from_value(label));
        rows.push(row);
    }

    let d = n_features.unwrap_or(max_index);
    let mut features = vec![0.0; rows.len() * d];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[i * d + j] = v;
        }
    }
    Dataset::new(d, features, labels, None)
}

pub fn read_libsvm_file(path: &Path, n_features: Option<usize>) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut ds = parse_libsvm_with_dim(BufReader::new(file), n_features)?;
    ds.meta.source = Some(path.display().to_string());
    Ok(ds)
}

/// Writes `+1`/`-1` labels and the non-zero entries of each row. Values use
/// the shortest representation that parses back to the same `f64`.
pub fn write_libsvm<W: Write>(ds: &Dataset, mut sink: W) -> Result<()> {
    let mut line = String::new();
    for i in 0..ds.n_samples() {
        line.clear();
        line.push_str(if ds.labels()[i].is_positive() {
            "+1"
        } else {
            "-1"
        });
        for (j, &v) in ds.row(i).iter().enumerate() {
            if v != 0.0 {
                write!(line, " {}:{}", j + 1, v).expect("writing to String");
            }
        }
        line.push('\n');
        sink.write_all(line.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_line_example() {
        let ds = parse_libsvm("+1 1:0.5 3:1.0\n-1 2:2.0".as_bytes()).unwrap();
        assert_eq!((ds.n_samples(), ds.n_features()), (2, 3));
        assert_eq!(ds.row(0), &[0.5, 0.0, 1.0]);
        assert_eq!(ds.row(1), &[0.0, 2.0, 0.0]);
        assert_eq!(ds.labels(), &[Label::Positive, Label::Negative]);
    }

    #[test]
    fn zero_label_is_negative() {
        let ds = parse_libsvm("0 1:1.0\n1 1:2\n0.5 1:1\n-3 1:1".as_bytes()).unwrap();
        assert_eq!(
            ds.labels(),
            &[
                Label::Negative,
                Label::Positive,
                Label::Positive,
                Label::Negative
            ]
        );
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\n+1 2:1 # trailing\n   \n-1 1:3\n";
        let ds = parse_libsvm(text.as_bytes()).unwrap();
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(ds.row(0), &[0.0, 1.0]);
    }

    #[test]
    fn label_only_line_is_all_zero() {
        let ds = parse_libsvm_with_dim("+1\n-1 2:1".as_bytes(), Some(3)).unwrap();
        assert_eq!(ds.row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(ds.n_features(), 3);
    }

    #[test]
    fn malformed_tokens_report_line() {
        let err = parse_libsvm("+1 1:1\n-1 2-1".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_libsvm("abc 1:1".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_libsvm("+1 1:x".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn bad_indices() {
        assert!(matches!(
            parse_libsvm("+1 0:1".as_bytes()),
            Err(Error::Index { line: 1, .. })
        ));
        assert!(matches!(
            parse_libsvm("+1 2:1 2:1".as_bytes()),
            Err(Error::Index { line: 1, .. })
        ));
        assert!(matches!(
            parse_libsvm("+1 3:1\n+1 2:1 1:1".as_bytes()),
            Err(Error::Index { line: 2, .. })
        ));
        assert!(matches!(
            parse_libsvm_with_dim("+1 4:1".as_bytes(), Some(3)),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn write_then_parse() {
        let ds = parse_libsvm("+1 1:0.1 3:-2.5e-7\n-1 2:3".as_bytes()).unwrap();
        let mut out = Vec::new();
        write_libsvm(&ds, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out.clone()).unwrap(),
            "+1 1:0.1 3:-0.00000025\n-1 2:3\n"
        );
        let back = parse_libsvm_with_dim(out.as_slice(), Some(3)).unwrap();
        assert_eq!(back, ds);
    }
}
