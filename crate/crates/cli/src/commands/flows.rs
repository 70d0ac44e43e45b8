//! `hierarchy symmetry|recurse|commute` on the ε-model.

use biflat::darboux_egorov::{DualConnection, NaturalConnection, RotationField};
use biflat::fd::Step;
use biflat::geometry::{
    CanonicalProduct, Connection, EulerField, FnVectorField, ShiftedConnection, UnitField, VectorField,
};
use biflat::hierarchy::{
    resonance_check, symmetry_residual, CommutatorSweep, FlowLabel, GridState, Recursion,
    RecursionField, Scheme, SpatialDerivative, MIN_CELLS,
};
use biflat::sampling::{rng, sample_points_in};
use biflat::Point;
use rand::Rng;
use serde_json::json;

use super::{Ctx, Outcome};
use crate::report::Checks;
use crate::CliError;

/// Field used as a negative control: `Y^i = (u^i)^2 + 1` is not a symmetry.
fn control_field(n: usize) -> impl VectorField {
    FnVectorField::new(n, "(u^i)^2 + 1", |p: &Point| Ok(p.coords().iter().map(|x| x * x + 1.0).collect()))
}

pub fn symmetry(ctx: &Ctx) -> Result<Outcome, CliError> {
    let m = ctx.epsilon_model()?;
    let n = m.n;
    let nat = NaturalConnection::new(&m, &m);
    let circ = CanonicalProduct { n };
    let pts = ctx.points(n, 50)?;
    let vel = m.velocity();
    let unit = UnitField { n };
    let control = control_field(n);
    let mut fields: Vec<(&str, &dyn VectorField)> = vec![("velocities", &vel), ("unit", &unit)];
    if ctx.p.control.unwrap_or(false) {
        fields.push(("control (u^i)^2 + 1", &control));
    }
    let mut c = Checks::default();
    for p in &pts {
        for (name, x) in &fields {
            let r = symmetry_residual(&nat, &circ, *x, p, Step::Auto)?;
            c.see(&format!("symmetry residual: {name}"), r, ctx.tols.fd, p);
        }
    }
    Ok(Outcome {
        provenance: format!("{} with its natural connection", m.provenance()),
        checks: c,
        data: json!({"n": n, "eps": m.eps, "points": pts.len(), "fields": fields.iter().map(|f| f.1.label()).collect::<Vec<_>>()}),
        csv: None,
    })
}

/// A point near `center` whose coordinates stay apart and away from zero.
fn admissible_near(r: &mut rand_chacha::ChaCha8Rng, center: &Point, radius: f64, gap: f64) -> Result<Point, CliError> {
    for _ in 0..10_000 {
        let c: Vec<f64> = center.coords().iter().map(|x| x + r.gen_range(-radius..radius)).collect();
        let p = Point::new(c)?;
        if p.min_gap() > gap && p.min_abs() > gap {
            return Ok(p);
        }
    }
    Err(CliError::Input(format!("no admissible point near {:?}", center.coords())))
}

pub fn recurse(ctx: &Ctx) -> Result<Outcome, CliError> {
    let m = ctx.epsilon_model()?;
    let n = m.n;
    let scheme = ctx.p.scheme.unwrap_or(Scheme::Principal);
    let nat = NaturalConnection::new(&m, &m);
    let dual = DualConnection::new(&m, &m);
    let circ = CanonicalProduct { n };
    let shifted = ShiftedConnection { base: &nat, product: &circ };
    let conn2: Option<&dyn Connection> = match scheme {
        Scheme::Principal => None,
        Scheme::Equivalent => Some(&shifted),
        Scheme::Dual => Some(&dual),
    };
    let euler = EulerField { n };
    let unit = UnitField { n };
    let rec = Recursion::new(scheme, &nat, conn2, &circ, &euler);
    let base = match &ctx.p.u {
        Some(u) => {
            let p = Point::new(u.clone())?;
            p.check_dim(n)?;
            p
        }
        None => sample_points_in(n, 1, ctx.seed(), 0.6, -3.0, 3.0)?.remove(0),
    };
    let gap = 0.5 * base.min_gap().min(base.min_abs());
    let x_base = vec![0.0; n];
    let mut r = rng(ctx.seed().wrapping_add(1));
    let paths = ctx.p.paths.unwrap_or(5);
    let mut c = Checks::default();
    let field = RecursionField {
        recursion: rec,
        prev: &unit,
        base: base.clone(),
        x_base: x_base.clone(),
        label: FlowLabel { p: 0, alpha: 1, scheme },
    };
    let mut targets = Vec::new();
    let mut samples = Vec::new();
    for _ in 0..ctx.p.points.unwrap_or(3) {
        let target = admissible_near(&mut r, &base, 0.4 * gap.min(1.0) + 0.1, gap)?;
        let direct = rec.step(&unit, &base, &x_base, &target)?;
        for _ in 0..paths {
            let mut path = vec![base.clone()];
            let k = r.gen_range(1..4);
            for s in 1..=k {
                let t = s as f64 / (k + 1) as f64;
                let on: Vec<f64> = (0..n).map(|j| base[j] + t * (target[j] - base[j])).collect();
                path.push(admissible_near(&mut r, &Point::new(on)?, 0.25 * gap.min(1.0), gap)?);
            }
            path.push(target.clone());
            let x = rec.integrate_path(&unit, &path, &x_base)?;
            let dev = direct.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            c.see("path dependence", dev, ctx.tols.fd, &target);
        }
        let s = symmetry_residual(&nat, &circ, &field, &target, Step::Auto)?;
        c.see("symmetry residual of the new field", s, ctx.tols.fd, &target);
        targets.push(json!({"u": target.coords(), "X": direct}));
        samples.push(target);
    }
    let resonance = resonance_check(&[&unit], &field, &samples)?;
    Ok(Outcome {
        provenance: format!("{} with its natural connection", m.provenance()),
        checks: c,
        data: json!({
            "scheme": scheme,
            "base": base.coords(),
            "start": unit.label(),
            "field": field.label(),
            "targets": targets,
            "resonance": resonance,
        }),
        csv: None,
    })
}

/// Periodic initial data with well separated components.
fn initial_grid(n: usize, cells: usize) -> Result<GridState, CliError> {
    Ok(GridState::from_fn(n, cells, 2.0 * std::f64::consts::PI, |x| {
        (0..n)
            .map(|k| {
                let offset = -0.5 + 0.35 * k as f64;
                offset + 0.1 * ((k % 2 + 1) as f64 * x + k as f64).sin()
            })
            .collect()
    })?)
}

pub fn commute(ctx: &Ctx) -> Result<Outcome, CliError> {
    let m = ctx.epsilon_model()?;
    let n = m.n;
    let cells = ctx.p.cells.unwrap_or(128);
    if cells < MIN_CELLS {
        return Err(CliError::Input(format!("--cells must be at least {MIN_CELLS}")));
    }
    let dts = ctx.p.dts.clone().unwrap_or_else(|| vec![0.04, 0.02]);
    if dts.len() < 2 || dts.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(CliError::Input("--dts needs at least two positive time steps".into()));
    }
    let steps = ctx.p.steps.unwrap_or(2);
    let deriv = ctx.p.deriv.unwrap_or(SpatialDerivative::Spectral);
    let min_order = ctx.p.min_order.unwrap_or(2.5);
    let circ = CanonicalProduct { n };
    let vel = m.velocity();
    let unit = UnitField { n };
    let control = control_field(n);
    let other: &dyn VectorField = if ctx.p.control.unwrap_or(false) { &control } else { &unit };
    let state = initial_grid(n, cells)?;
    let sweep = CommutatorSweep::run(&circ, &vel, other, &state, &dts, steps, deriv)?;
    let order = sweep.fitted_order();
    let mut c = Checks::default();
    // Zero when the commutator shrinks at least at the required rate.
    c.see_at("commutator order deficit", (min_order - order).max(0.0), 0.0, &[]);
    Ok(Outcome {
        provenance: format!("flows of {} and {} for {}", vel.label(), other.label(), m.provenance()),
        checks: c,
        data: json!({
            "cells": cells,
            "steps": steps,
            "deriv": deriv,
            "dt": sweep.dt,
            "commutator": sweep.norm,
            "ratios": sweep.ratios(),
            "order": order,
            "min_order": min_order,
        }),
        csv: Some(sweep.to_csv()),
    })
}
