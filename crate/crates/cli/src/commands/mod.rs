//! Subcommand implementations. Each returns the checks it ran, free-form
//! data for the report and, for some commands, a CSV artifact.

mod flows;
mod models;
mod painleve;

use biflat::darboux_egorov::DegreeSign;
use biflat::models::{EpsilonModel, N2Model};
use biflat::point::DEFAULT_DELTA_SEP;
use biflat::sampling::sample_points;
use biflat::Point;
use nalgebra::DMatrix;
use serde_json::Value;

use crate::params::{ModelKind, Params, Tols};
use crate::report::Checks;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    ModelsEpsilon,
    ModelsN2,
    Verify,
    Ode3Integrate,
    Ode3Invariants,
    PainleveSigma,
    PainleveReconstruct,
    PainleveParams,
    LameEigen,
    HierarchySymmetry,
    HierarchyRecurse,
    HierarchyCommute,
}

/// Keys accepted by every command.
const COMMON_KEYS: &[&str] = &["command", "seed", "report", "tol-fd", "tol-algebraic", "tol-drift"];

impl Command {
    pub const ALL: [Command; 12] = [
        Command::ModelsEpsilon,
        Command::ModelsN2,
        Command::Verify,
        Command::Ode3Integrate,
        Command::Ode3Invariants,
        Command::PainleveSigma,
        Command::PainleveReconstruct,
        Command::PainleveParams,
        Command::LameEigen,
        Command::HierarchySymmetry,
        Command::HierarchyRecurse,
        Command::HierarchyCommute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::ModelsEpsilon => "models epsilon",
            Command::ModelsN2 => "models n2",
            Command::Verify => "verify",
            Command::Ode3Integrate => "ode3 integrate",
            Command::Ode3Invariants => "ode3 invariants",
            Command::PainleveSigma => "painleve sigma",
            Command::PainleveReconstruct => "painleve reconstruct",
            Command::PainleveParams => "painleve params",
            Command::LameEigen => "lame eigen",
            Command::HierarchySymmetry => "hierarchy symmetry",
            Command::HierarchyRecurse => "hierarchy recurse",
            Command::HierarchyCommute => "hierarchy commute",
        }
    }

    pub fn from_name(s: &str) -> Result<Self, CliError> {
        let norm = s.split_whitespace().collect::<Vec<_>>().join(" ");
        Self::ALL
            .into_iter()
            .find(|c| c.name() == norm)
            .ok_or_else(|| CliError::Input(format!("unknown command \"{s}\"")))
    }

    /// Keys specific to the command.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Command::ModelsEpsilon => &["n", "eps", "u", "points", "degree-sign"],
            Command::ModelsN2 => &["C1", "C2", "lame", "a", "b", "d", "degree-sign", "u", "points"],
            Command::Verify => &["model", "n", "eps", "C1", "C2", "d", "degree-sign", "u", "points"],
            Command::Ode3Integrate => &["z0", "z1", "F0", "csv"],
            Command::Ode3Invariants => &["F0"],
            Command::PainleveSigma => &["z0", "z1", "F0", "csv"],
            Command::PainleveReconstruct => &["z0", "z1", "F0", "branching", "csv"],
            Command::PainleveParams => &["R2", "D", "F0"],
            Command::LameEigen => &["model", "n", "eps", "C1", "C2", "degree-sign", "u", "points"],
            Command::HierarchySymmetry => &["n", "eps", "u", "points", "control"],
            Command::HierarchyRecurse => &["n", "eps", "u", "scheme", "paths", "points"],
            Command::HierarchyCommute => &["n", "eps", "cells", "dts", "steps", "deriv", "control", "min-order", "csv"],
        }
    }

    /// Rejects parameters the command would silently ignore.
    pub fn check_keys(self, p: &Params) -> Result<(), CliError> {
        let stray: Vec<String> = p
            .present_keys()
            .into_iter()
            .filter(|k| !COMMON_KEYS.contains(&k.as_str()) && !self.keys().contains(&k.as_str()))
            .collect();
        if stray.is_empty() {
            Ok(())
        } else {
            Err(CliError::Input(format!("`{}` does not take: {}", self.name(), stray.join(", "))))
        }
    }
}

pub struct Ctx {
    pub cmd: Command,
    pub p: Params,
    pub tols: Tols,
}

pub struct Outcome {
    pub provenance: String,
    pub checks: Checks,
    pub data: Value,
    pub csv: Option<String>,
}

pub fn run(ctx: &Ctx) -> Result<Outcome, CliError> {
    match ctx.cmd {
        Command::ModelsEpsilon => models::models_epsilon(ctx),
        Command::ModelsN2 => models::models_n2(ctx),
        Command::Verify => models::verify(ctx),
        Command::LameEigen => models::lame_eigen(ctx),
        Command::Ode3Integrate => painleve::ode3_integrate(ctx),
        Command::Ode3Invariants => painleve::ode3_invariants(ctx),
        Command::PainleveSigma => painleve::sigma(ctx),
        Command::PainleveReconstruct => painleve::reconstruct(ctx),
        Command::PainleveParams => painleve::params(ctx),
        Command::HierarchySymmetry => flows::symmetry(ctx),
        Command::HierarchyRecurse => flows::recurse(ctx),
        Command::HierarchyCommute => flows::commute(ctx),
    }
}

impl Ctx {
    fn seed(&self) -> u64 {
        self.p.seed.unwrap_or(0)
    }

    fn sign(&self) -> DegreeSign {
        self.p.degree_sign.unwrap_or_default()
    }

    /// Explicit model, else `n2` when either constant is given.
    fn model_kind(&self) -> ModelKind {
        self.p.model.unwrap_or(if self.p.c1.is_some() || self.p.c2.is_some() {
            ModelKind::N2
        } else {
            ModelKind::Epsilon
        })
    }

    fn epsilon_model(&self) -> Result<EpsilonModel, CliError> {
        if self.p.c1.is_some() || self.p.c2.is_some() {
            return Err(CliError::Input("--C1/--C2 belong to the n2 model".into()));
        }
        Ok(EpsilonModel::new(self.p.n.unwrap_or(3), self.p.eps.unwrap_or(0.5))?)
    }

    fn n2_model(&self) -> Result<N2Model, CliError> {
        if let Some(n) = self.p.n.filter(|&n| n != 2) {
            return Err(CliError::Input(format!("the n2 model has dimension 2, not {n}")));
        }
        if self.p.eps.is_some() {
            return Err(CliError::Input("--eps belongs to the epsilon model".into()));
        }
        Ok(N2Model::new(self.p.c1.unwrap_or(1.0), self.p.c2.unwrap_or(-4.0))?)
    }

    /// The point given by `--u`, or `default_count` seeded samples.
    fn points(&self, n: usize, default_count: usize) -> Result<Vec<Point>, CliError> {
        if let Some(u) = &self.p.u {
            let p = Point::new(u.clone())?;
            p.check_dim(n)?;
            return Ok(vec![p]);
        }
        let count = self.p.points.unwrap_or(default_count);
        if count == 0 {
            return Err(CliError::Input("--points must be positive".into()));
        }
        Ok(sample_points(n, count, self.seed(), DEFAULT_DELTA_SEP)?)
    }

    /// As [`Ctx::points`], with sampled coordinates sorted so `u^1 > u^2`.
    fn ordered_points(&self, default_count: usize) -> Result<Vec<Point>, CliError> {
        let pts = self.points(2, default_count)?;
        if self.p.u.is_some() {
            return Ok(pts);
        }
        pts.into_iter()
            .map(|p| {
                let mut c = p.into_coords();
                c.sort_by(|a, b| b.total_cmp(a));
                Ok(Point::new(c)?)
            })
            .collect()
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}
