//! JSON reports and atomic file output.

use std::io::Write;
use std::path::Path;

use biflat::geometry::ResidualReport;
use biflat::Point;
use serde::Serialize;
use serde_json::Value;

use crate::params::Tols;
use crate::CliError;

/// Worst value seen for each named check, in first-seen order.
#[derive(Debug, Default)]
pub struct Checks {
    items: Vec<ResidualReport>,
}

impl Checks {
    pub fn see(&mut self, name: &str, value: f64, tolerance: f64, p: &Point) {
        self.see_at(name, value, tolerance, p.coords());
    }

    /// As [`Checks::see`] for checks that are not attached to a point of the
    /// manifold (the point is then whatever locates the value, or empty).
    pub fn see_at(&mut self, name: &str, value: f64, tolerance: f64, point: &[f64]) {
        let worse = |old: &ResidualReport| value.is_nan() || (!old.value.is_nan() && value > old.value);
        match self.items.iter_mut().find(|r| r.name == name) {
            Some(old) => {
                if worse(old) {
                    old.value = value;
                    old.pass = value <= tolerance;
                    old.point = point.to_vec();
                }
            }
            None => self.items.push(ResidualReport {
                name: name.to_string(),
                value,
                tolerance,
                pass: value <= tolerance,
                point: point.to_vec(),
            }),
        }
    }

    pub fn extend(&mut self, reports: Vec<ResidualReport>) {
        for r in reports {
            self.see_at(&r.name, r.value, r.tolerance, &r.point);
        }
    }

    pub fn pass(&self) -> bool {
        self.items.iter().all(|r| r.pass)
    }

    pub fn checks(&self) -> &[ResidualReport] {
        &self.items
    }

    pub fn into_vec(self) -> Vec<ResidualReport> {
        self.items
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Description of the model or data the checks ran on.
    pub provenance: String,
    /// Effective run parameters.
    pub parameters: Value,
    pub tolerances: Tols,
    pub checks: Vec<ResidualReport>,
    pub data: Value,
    pub artifacts: Vec<String>,
    pub pass: bool,
}

/// Writes `contents` next to `path` and renames it into place, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}
