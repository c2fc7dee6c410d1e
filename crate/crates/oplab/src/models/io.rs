//! Dataset persistence. One CSV schema per statistical family, all with a
//! mandatory header row:
//!
//! * non-response: `r,y` with r ∈ {0,1} and the y cell empty when r = 0;
//! * mixture: `x1,...,xd`;
//! * regression: `x1,...,xd,y`.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces the data bit for bit.

use std::path::Path;

use crate::error::{Error, Result};
use crate::models::mixture::MixtureData;
use crate::models::nonresponse::{NonResponseData, Response};
use crate::models::regression::RegressionData;
use crate::models::{Dataset, ModelSpec};

fn map_csv_err(path: &Path, e: csv::Error) -> Error {
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
        _ => Error::Parse { path: path.to_path_buf(), message },
    }
}

fn parse_field(path: &Path, row: usize, name: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        message: format!("row {row}: field '{name}' is not a number: {raw:?}"),
    })
}

fn field<'a>(path: &Path, row: usize, rec: &'a csv::StringRecord, idx: usize) -> Result<&'a str> {
    rec.get(idx).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        message: format!("row {row}: missing field {idx}"),
    })
}

fn covariate_header(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

/// Writes a dataset to `path` in its model's schema.
pub fn save_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| map_csv_err(path, e))?;
    let write = |w: &mut csv::Writer<std::fs::File>, rec: &[String]| {
        w.write_record(rec).map_err(|e| map_csv_err(path, e))
    };
    match data {
        Dataset::NonResponse(d) => {
            write(&mut w, &["r".into(), "y".into()])?;
            for r in d.records() {
                match r {
                    Response::Observed(y) => write(&mut w, &["1".into(), y.to_string()])?,
                    Response::Missing => write(&mut w, &["0".into(), String::new()])?,
                }
            }
        }
        Dataset::Mixture(m) => {
            write(&mut w, &covariate_header(m.dim()))?;
            for row in m.rows() {
                let rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                write(&mut w, &rec)?;
            }
        }
        Dataset::Regression(r) => {
            let mut header = covariate_header(r.dim());
            header.push("y".into());
            write(&mut w, &header)?;
            for (x, y) in r.rows() {
                let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                rec.push(y.to_string());
                write(&mut w, &rec)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

/// Reads a dataset from `path` using the schema that `model` dictates.
/// The header must match the model exactly (including its dimension).
pub fn load_dataset(model: &ModelSpec, path: &Path) -> Result<Dataset> {
    let expected: Vec<String> = match model {
        ModelSpec::NonResponse => vec!["r".into(), "y".into()],
        ModelSpec::Mixture { d } => covariate_header(*d),
        ModelSpec::Regression { d, .. } => {
            let mut h = covariate_header(*d);
            h.push("y".into());
            h
        }
        ModelSpec::Polynomial(_) | ModelSpec::Counterexample(_) => {
            return Err(Error::validation(format!(
                "model '{}' is deterministic and has no dataset files",
                model.name()
            )))
        }
    };

    let mut rdr = csv::Reader::from_path(path).map_err(|e| map_csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| map_csv_err(path, e))?;
    let got: Vec<String> = header.iter().map(str::to_string).collect();
    if got != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!(
                "header mismatch: expected {:?}, found {:?}",
                expected.join(","),
                got.join(",")
            ),
        });
    }

    match model {
        ModelSpec::NonResponse => {
            let mut records = Vec::new();
            for (i, rec) in rdr.records().enumerate() {
                let rec = rec.map_err(|e| map_csv_err(path, e))?;
                let row = i + 2; // 1-based, after the header line
                let r = field(path, row, &rec, 0)?;
                let y = field(path, row, &rec, 1)?;
                records.push(match r {
                    "1" => Response::Observed(parse_field(path, row, "y", y)?),
                    "0" if y.is_empty() => Response::Missing,
                    "0" => {
                        return Err(Error::Parse {
                            path: path.to_path_buf(),
                            message: format!("row {row}: y must be empty when r = 0, found {y:?}"),
                        })
                    }
                    other => {
                        return Err(Error::Parse {
                            path: path.to_path_buf(),
                            message: format!("row {row}: r must be 0 or 1, found {other:?}"),
                        })
                    }
                });
            }
            Ok(Dataset::NonResponse(NonResponseData::new(records)?))
        }
        ModelSpec::Mixture { d } => {
            let mut rows = Vec::new();
            for (i, rec) in rdr.records().enumerate() {
                let rec = rec.map_err(|e| map_csv_err(path, e))?;
                let row = i + 2;
                for j in 0..*d {
                    let raw = field(path, row, &rec, j)?;
                    rows.push(parse_field(path, row, &format!("x{}", j + 1), raw)?);
                }
            }
            Ok(Dataset::Mixture(MixtureData::new(*d, rows)?))
        }
        ModelSpec::Regression { d, .. } => {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (i, rec) in rdr.records().enumerate() {
                let rec = rec.map_err(|e| map_csv_err(path, e))?;
                let row = i + 2;
                for j in 0..*d {
                    let raw = field(path, row, &rec, j)?;
                    xs.push(parse_field(path, row, &format!("x{}", j + 1), raw)?);
                }
                let raw = field(path, row, &rec, *d)?;
                ys.push(parse_field(path, row, "y", raw)?);
            }
            Ok(Dataset::Regression(RegressionData::new(*d, xs, ys)?))
        }
        ModelSpec::Polynomial(_) | ModelSpec::Counterexample(_) => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{gen_mixture, gen_nonresponse, gen_regression};

    #[test]
    fn nonresponse_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nr.csv");
        let data = gen_nonresponse(257, 0.0, 42).unwrap();
        save_dataset(&Dataset::NonResponse(data.clone()), &path).unwrap();
        let back = load_dataset(&ModelSpec::NonResponse, &path).unwrap();
        assert_eq!(back, Dataset::NonResponse(data));
    }

    #[test]
    fn mixture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mix.csv");
        let data = gen_mixture(100, 3, 7).unwrap();
        save_dataset(&Dataset::Mixture(data.clone()), &path).unwrap();
        let back = load_dataset(&ModelSpec::Mixture { d: 3 }, &path).unwrap();
        assert_eq!(back, Dataset::Mixture(data));
    }

    #[test]
    fn regression_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reg.csv");
        let data = gen_regression(128, 2, 1, None, 3).unwrap();
        save_dataset(&Dataset::Regression(data.clone()), &path).unwrap();
        let back = load_dataset(&ModelSpec::Regression { d: 2, p: 1 }, &path).unwrap();
        assert_eq!(back, Dataset::Regression(data));
    }

    #[test]
    fn header_mismatch_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mix.csv");
        let data = gen_mixture(10, 2, 1).unwrap();
        save_dataset(&Dataset::Mixture(data), &path).unwrap();
        let err = load_dataset(&ModelSpec::Mixture { d: 3 }, &path).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "got {err}");
    }

    #[test]
    fn bad_indicator_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nr.csv");
        std::fs::write(&path, "r,y\n2,0.5\n").unwrap();
        let err = load_dataset(&ModelSpec::NonResponse, &path).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "got {err}");
    }

    #[test]
    fn value_with_missing_indicator_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nr.csv");
        std::fs::write(&path, "r,y\n0,0.5\n").unwrap();
        assert!(load_dataset(&ModelSpec::NonResponse, &path).is_err());
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_dataset(&ModelSpec::NonResponse, Path::new("/nonexistent/x.csv"))
            .unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "got {err}");
    }

    #[test]
    fn deterministic_models_have_no_files() {
        use crate::models::PolynomialSpec;
        let spec = PolynomialSpec::new(4.0, 2.0, 0.1, 1).unwrap();
        let err = load_dataset(
            &ModelSpec::Polynomial(spec),
            Path::new("/tmp/whatever.csv"),
        )
        .unwrap_err();
        assert!(err.is_validation());
    }
}
