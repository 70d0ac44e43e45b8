//! Run parameters. The same struct is filled from command-line flags and from
//! JSON manifests, so every flag `--foo-bar` has the manifest key `"foo-bar"`.

use std::path::{Path, PathBuf};

use biflat::darboux_egorov::DegreeSign;
use biflat::hierarchy::{Scheme, SpatialDerivative};
use biflat::painleve::Branching;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Epsilon,
    N2,
}

/// Which Lamé coefficients accompany the two-dimensional rotation
/// coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LameKind {
    /// Logarithmic solutions with integration constants `a`, `b`.
    Natural,
    /// Homogeneous solutions built from the hypergeometric-type equation.
    Dual,
    /// Power-law solutions that make both connections flat.
    Biflat,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Params {
    /// Command path such as "verify" or "painleve sigma"; manifests only.
    #[arg(skip)]
    pub command: Option<String>,

    /// Seed of the point sampler (mandatory in manifests).
    #[arg(long)]
    pub seed: Option<u64>,

    /// Model family: epsilon or n2 (inferred from --C1/--C2 when omitted).
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Dimension of the ε-model.
    #[arg(long)]
    pub n: Option<usize>,
    /// Parameter ε of the ε-model.
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    /// Constant C1 of the two-dimensional model.
    #[arg(long = "C1", allow_negative_numbers = true)]
    #[serde(rename = "C1")]
    pub c1: Option<f64>,
    /// Constant C2 of the two-dimensional model.
    #[arg(long = "C2", allow_negative_numbers = true)]
    #[serde(rename = "C2")]
    pub c2: Option<f64>,
    /// Lamé solution for the two-dimensional model.
    #[arg(long)]
    pub lame: Option<LameKind>,
    /// First integration constant of the natural or dual Lamé solution.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Second integration constant of the natural or dual Lamé solution.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Homogeneity degree, read under --degree-sign.
    #[arg(long, allow_negative_numbers = true)]
    pub d: Option<f64>,
    /// Convention for the degree: lowering (E(H) = -dH) or raising (E(H) = +dH).
    #[arg(long)]
    pub degree_sign: Option<DegreeSign>,
    /// Evaluation point, comma separated; replaces sampling.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub u: Option<Vec<f64>>,
    /// Number of sampled points.
    #[arg(long)]
    pub points: Option<usize>,

    /// Initial value of the cross-ratio z.
    #[arg(long, allow_negative_numbers = true)]
    pub z0: Option<f64>,
    /// Other end of the integration interval.
    #[arg(long, allow_negative_numbers = true)]
    pub z1: Option<f64>,
    /// Initial state F12,F13,F21,F23,F31,F32.
    #[arg(long = "F0", value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(rename = "F0")]
    pub f0: Option<Vec<f64>>,
    /// First invariant R^2 for the parameter cubic.
    #[arg(long = "R2", allow_negative_numbers = true)]
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    /// Second invariant D for the parameter cubic.
    #[arg(long = "D", allow_negative_numbers = true)]
    #[serde(rename = "D")]
    pub big_d: Option<f64>,
    /// Branch handling in the reconstruction: real or complex.
    #[arg(long)]
    pub branching: Option<Branching>,

    /// Recursion scheme: principal, equivalent or dual.
    #[arg(long)]
    pub scheme: Option<Scheme>,
    /// Number of random polylines per target in the recursion test.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Grid cells of the periodic commutator test.
    #[arg(long)]
    pub cells: Option<usize>,
    /// Time steps of the commutator sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dts: Option<Vec<f64>>,
    /// RK4 substeps per time step.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Spatial derivative: central4 or spectral.
    #[arg(long)]
    pub deriv: Option<SpatialDerivative>,
    /// Replace the symmetry by a field that is not one (negative control).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub control: Option<bool>,
    /// Smallest accepted convergence order of the commutator.
    #[arg(long)]
    pub min_order: Option<f64>,

    /// Tolerance of checks based on finite differences or integration.
    #[arg(long)]
    pub tol_fd: Option<f64>,
    /// Tolerance of algebraic identities.
    #[arg(long)]
    pub tol_algebraic: Option<f64>,
    /// Bound on the drift of conserved quantities.
    #[arg(long)]
    pub tol_drift: Option<f64>,

    /// Where to write the JSON report (stdout when omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Where to write the CSV artifact ("-" for stdout).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

impl Params {
    /// Keys with a value, in manifest spelling.
    pub fn present_keys(&self) -> Vec<String> {
        match self.to_map() {
            Ok(m) => m.into_iter().filter(|(_, v)| !v.is_null()).map(|(k, _)| k).collect(),
            Err(_) => Vec::new(),
        }
    }

    fn to_map(&self) -> Result<Map<String, Value>, CliError> {
        match serde_json::to_value(self) {
            Ok(Value::Object(m)) => Ok(m),
            Ok(_) => Err(CliError::Input("parameters did not serialize to an object".into())),
            Err(e) => Err(CliError::Input(e.to_string())),
        }
    }

    /// `self` with every value set in `over` replaced.
    pub fn overlay(&self, over: &Params) -> Result<Params, CliError> {
        let mut base = self.to_map()?;
        for (k, v) in over.to_map()? {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
        serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Input(e.to_string()))
    }

    /// The values that were set, for the report.
    pub fn to_json(&self) -> Value {
        match self.to_map() {
            Ok(m) => Value::Object(m.into_iter().filter(|(_, v)| !v.is_null()).collect()),
            Err(_) => Value::Null,
        }
    }
}

/// Reads a manifest. Unknown keys are rejected, and `command` and `seed`
/// must be present.
pub fn load_manifest(path: &Path) -> Result<Params, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read manifest {}: {e}", path.display())))?;
    let p: Params = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("invalid manifest {}: {e}", path.display())))?;
    if p.command.is_none() {
        return Err(CliError::Input(format!("manifest {} has no \"command\"", path.display())));
    }
    if p.seed.is_none() {
        return Err(CliError::Input(format!("manifest {} has no \"seed\"", path.display())));
    }
    Ok(p)
}

/// Residual tolerances in effect for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tols {
    pub fd: f64,
    pub algebraic: f64,
    pub drift: f64,
}

pub const ENV_TOL_FD: &str = "BIFLAT_TOL_FD";
pub const ENV_TOL_ALGEBRAIC: &str = "BIFLAT_TOL_ALGEBRAIC";
pub const ENV_TOL_DRIFT: &str = "BIFLAT_TOL_DRIFT";

impl Tols {
    /// Built-in defaults, then environment overrides, then explicit values.
    pub fn resolve(p: &Params) -> Result<Self, CliError> {
        let core = biflat::geometry::Tolerances::default();
        let mut t = Tols {
            fd: core.fd,
            algebraic: core.algebraic,
            drift: 1e-9,
        };
        for (var, slot) in [(ENV_TOL_FD, &mut t.fd), (ENV_TOL_ALGEBRAIC, &mut t.algebraic), (ENV_TOL_DRIFT, &mut t.drift)] {
            if let Ok(s) = std::env::var(var) {
                *slot = s
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Input(format!("{var}={s} is not a number")))?;
            }
        }
        if let Some(v) = p.tol_fd {
            t.fd = v;
        }
        if let Some(v) = p.tol_algebraic {
            t.algebraic = v;
        }
        if let Some(v) = p.tol_drift {
            t.drift = v;
        }
        for (name, v) in [("fd", t.fd), ("algebraic", t.algebraic), ("drift", t.drift)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Input(format!("tolerance {name} = {v} must be positive")));
            }
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_keeps_unset_values() {
        let base = Params {
            n: Some(4),
            eps: Some(0.5),
            ..Default::default()
        };
        let over = Params {
            eps: Some(-0.25),
            ..Default::default()
        };
        let m = base.overlay(&over).unwrap();
        assert_eq!((m.n, m.eps), (Some(4), Some(-0.25)));
    }

    #[test]
    fn manifest_keys_match_flag_spelling() {
        let p: Params = serde_json::from_str(
            r#"{"command": "verify", "seed": 7, "C1": 1, "degree-sign": "raising", "F0": [1,2,3,4,5,6], "tol-fd": 1e-7}"#,
        )
        .unwrap();
        assert_eq!(p.c1, Some(1.0));
        assert_eq!(p.degree_sign, Some(DegreeSign::Raising));
        assert_eq!(p.tol_fd, Some(1e-7));
        let mut keys = p.present_keys();
        keys.sort();
        assert_eq!(keys, ["C1", "F0", "command", "degree-sign", "seed", "tol-fd"]);
    }

    #[test]
    fn unknown_manifest_keys_are_rejected() {
        assert!(serde_json::from_str::<Params>(r#"{"command": "verify", "seed": 1, "epsilon": 0.5}"#).is_err());
    }
}
