//! `ode3` and `painleve`.

use biflat::painleve::{
    integrate_span, invariants, painleve_parameters, reconstruct_f, reconstruction_conditioning,
    sigma_data_from_f, sigma_initial, solve_constants, solve_sigma, Branching, FState,
    IntegrateOptions, SigmaData, TrajectoryN3,
};
use serde_json::json;

use super::{Ctx, Outcome};
use crate::report::Checks;
use crate::CliError;

/// Tolerance and step cap of the direct sigma-form solve.
const SIGMA_SOLVE_TOL: f64 = 1e-13;
const SIGMA_SOLVE_H_MAX: f64 = 1e-3;

fn initial_state(ctx: &Ctx) -> Result<[f64; 6], CliError> {
    let f = ctx
        .p
        .f0
        .as_deref()
        .ok_or_else(|| CliError::Input("--F0 with six values F12,F13,F21,F23,F31,F32 is required".into()))?;
    <[f64; 6]>::try_from(f).map_err(|_| CliError::Input(format!("--F0 needs 6 values, got {}", f.len())))
}

/// Integrates from `z0` so the trajectory covers both `z0` and `z1`. Drift is
/// reported as a check rather than aborting the run.
fn trajectory(ctx: &Ctx) -> Result<(FState, TrajectoryN3), CliError> {
    let f0 = initial_state(ctx)?;
    let z0 = ctx.p.z0.unwrap_or(0.5);
    let z1 = ctx.p.z1.unwrap_or(0.6);
    if z0 == z1 {
        return Err(CliError::Input("z0 and z1 must differ".into()));
    }
    let s0 = FState::new(z0, f0)?;
    let opts = IntegrateOptions {
        max_drift: f64::INFINITY,
        ..Default::default()
    };
    let t = integrate_span(&s0, z0.min(z1), z0.max(z1), &opts)?;
    Ok((s0, t))
}

fn trajectory_checks(t: &TrajectoryN3, sd: &SigmaData, ctx: &Ctx, c: &mut Checks) {
    let (dm, dd) = t.drift();
    c.see_at("drift of -R^2", dm, ctx.tols.drift, &[]);
    c.see_at("drift of D", dd, ctx.tols.drift, &[]);
    for (k, r) in sd.residuals().into_iter().enumerate() {
        c.see_at("sigma-form residual", r, ctx.tols.fd, &[sd.z[k]]);
    }
}

fn trajectory_data(s0: &FState, t: &TrajectoryN3) -> serde_json::Value {
    let (m, d) = t.invariants[0];
    let (lo, hi) = t.range();
    json!({
        "z0": s0.z,
        "F0": s0.f,
        "range": [lo, hi],
        "samples": t.len(),
        "mR2": m,
        "D": d,
        "integrator": t.meta,
    })
}

pub fn ode3_integrate(ctx: &Ctx) -> Result<Outcome, CliError> {
    let (s0, t) = trajectory(ctx)?;
    let sd = sigma_data_from_f(&t)?;
    let mut c = Checks::default();
    trajectory_checks(&t, &sd, ctx, &mut c);
    Ok(Outcome {
        provenance: format!("n = 3 reduction, trajectory {}", t.id),
        checks: c,
        data: trajectory_data(&s0, &t),
        csv: Some(t.to_csv(&sd.residuals())),
    })
}

pub fn ode3_invariants(ctx: &Ctx) -> Result<Outcome, CliError> {
    let f0 = initial_state(ctx)?;
    if f0.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Input("--F0 must be finite".into()));
    }
    let (m, d) = invariants(&f0);
    Ok(Outcome {
        provenance: "n = 3 reduction, conserved quantities".into(),
        checks: Checks::default(),
        data: json!({"F0": f0, "mR2": m, "D": d}),
        csv: None,
    })
}

pub fn sigma(ctx: &Ctx) -> Result<Outcome, CliError> {
    let (s0, t) = trajectory(ctx)?;
    let sd = sigma_data_from_f(&t)?;
    let mut c = Checks::default();
    trajectory_checks(&t, &sd, ctx, &mut c);
    c.see_at("Vieta residuals", sd.params.max_vieta(), ctx.tols.algebraic, &[]);
    let mut csv = String::from("z,f,fp,fpp,sigma_res\n");
    for (k, r) in sd.residuals().into_iter().enumerate() {
        csv.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            sd.z[k], sd.f[k], sd.fp[k], sd.fpp[k], r
        ));
    }
    let mut data = trajectory_data(&s0, &t);
    data["R2"] = json!(sd.r2);
    data["parameters"] = json!({"roots": sd.params.roots, "vieta": sd.params.vieta});
    data["consistency"] = json!(sd.consistency.iter().copied().fold(0.0, f64::max));
    Ok(Outcome {
        provenance: format!("sigma form of trajectory {}", t.id),
        checks: c,
        data,
        csv: Some(csv),
    })
}

pub fn reconstruct(ctx: &Ctx) -> Result<Outcome, CliError> {
    let (s0, t) = trajectory(ctx)?;
    let sd = sigma_data_from_f(&t)?;
    let mode = ctx.p.branching.unwrap_or(Branching::Complex);
    let rc = solve_constants(s0.z, &s0.f, mode)?;
    let (init, r2, d) = sigma_initial(s0.z, &s0.f);
    let (lo, hi) = t.range();
    let sol = solve_sigma(s0.z, init, r2, d, lo, hi, SIGMA_SOLVE_TOL, SIGMA_SOLVE_H_MAX)?;
    let back = reconstruct_f(&rc, &sol, &t.z)?;
    let mut c = Checks::default();
    trajectory_checks(&t, &sd, ctx, &mut c);
    for (k, (x, y)) in t.f.iter().zip(&back.f).enumerate() {
        let err = x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        c.see_at("F -> f -> F round trip", err, ctx.tols.fd, &[t.z[k]]);
    }
    let mut data = trajectory_data(&s0, &t);
    data["branching"] = json!(mode);
    data["conditioning"] = json!(reconstruction_conditioning(&sd));
    data["constants"] = json!({
        "a": rc.a, "b": rc.b, "alpha": rc.alpha, "beta": rc.beta, "gamma": rc.gamma,
        "signs": rc.signs, "C": rc.constants(),
    });
    Ok(Outcome {
        provenance: format!("reconstruction of trajectory {} from its sigma form", t.id),
        checks: c,
        data,
        csv: Some(back.to_csv(&sd.residuals())),
    })
}

pub fn params(ctx: &Ctx) -> Result<Outcome, CliError> {
    let (r2, d, source) = match (ctx.p.r2, ctx.p.big_d, &ctx.p.f0) {
        (Some(r2), Some(d), None) => (r2, d, "given R2, D".to_string()),
        (None, None, Some(_)) => {
            let (m, d) = invariants(&initial_state(ctx)?);
            (-m, d, "invariants of F0".to_string())
        }
        _ => return Err(CliError::Input("give either both --R2 and --D, or --F0".into())),
    };
    let p = painleve_parameters(r2, d)?;
    let mut c = Checks::default();
    c.see_at("Vieta residuals", p.max_vieta(), ctx.tols.algebraic, &[]);
    Ok(Outcome {
        provenance: format!("parameter cubic from {source}"),
        checks: c,
        data: json!({
            "R2": r2,
            "D": d,
            "roots": p.roots,
            "vieta": p.vieta,
            "back_substitution": p.back_substitution(),
        }),
        csv: None,
    })
}
