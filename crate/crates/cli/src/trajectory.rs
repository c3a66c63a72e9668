//! Per-tick tracking output: truth, network estimate and filter estimate.

use std::fmt::Write as _;
use std::path::Path;

use ringtrack::{Error, Result};

pub const HEADER: [&str; 7] = ["t", "x_true", "y_true", "x_nn", "y_nn", "x_pf", "y_pf"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub truth: [f64; 2],
    /// Absent on ticks without a human return.
    pub nn: Option<[f64; 2]>,
    pub pf: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub n_particles: usize,
    pub seed: u64,
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# n_particles={} seed={}\n{}\n", self.n_particles, self.seed, HEADER.join(","));
        for r in &self.rows {
            let (xn, yn) = match r.nn {
                Some([x, y]) => (x.to_string(), y.to_string()),
                None => (String::new(), String::new()),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.t, r.truth[0], r.truth[1], xn, yn, r.pf[0], r.pf[1]
            )
            .unwrap();
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_csv(&text, path)
    }

    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut traj = Trajectory::default();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let lineno = i as u64 + 1;
            if let Some(comment) = line.strip_prefix('#') {
                for kv in comment.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("n_particles", v)) => {
                            traj.n_particles = v.parse().map_err(|_| parse_err(lineno, format!("bad n_particles '{v}'")))?
                        }
                        Some(("seed", v)) => {
                            traj.seed = v.parse().map_err(|_| parse_err(lineno, format!("bad seed '{v}'")))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if !header_seen {
                if cells != HEADER {
                    return Err(parse_err(lineno, format!("expected header '{}'", HEADER.join(","))));
                }
                header_seen = true;
                continue;
            }
            if cells.len() != HEADER.len() {
                return Err(parse_err(
                    lineno,
                    format!("row has {} columns, expected {}", cells.len(), HEADER.len()),
                ));
            }
            let num = |j: usize| -> Result<f64> {
                let v: f64 = cells[j]
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("column {} is not a number: '{}'", HEADER[j], cells[j])))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(lineno, format!("column {} is not finite", HEADER[j])))
                }
            };
            let nn = match (cells[3].trim().is_empty(), cells[4].trim().is_empty()) {
                (true, true) => None,
                (false, false) => Some([num(3)?, num(4)?]),
                _ => return Err(parse_err(lineno, "x_nn and y_nn must both be present or both empty".into())),
            };
            traj.rows.push(TrajectoryRow {
                t: num(0)?,
                truth: [num(1)?, num(2)?],
                nn,
                pf: [num(5)?, num(6)?],
            });
        }
        if !header_seen {
            return Err(parse_err(1, "missing header row".into()));
        }
        Ok(traj)
    }
}
