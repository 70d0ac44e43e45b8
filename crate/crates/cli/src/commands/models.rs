//! `models`, `verify` and `lame eigen`.

use biflat::darboux_egorov::{
    build_natural_connection, de_residuals, flat_form_and_closedness, lame_residuals, v_matrix,
    DegreeSign, DualConnection, LameField, NaturalConnection, RotationField, DEFAULT_DELTA_H,
};
use biflat::fd::Step;
use biflat::geometry::{
    almost_equivalence_residual, compatibility_residual, hertling_manin_residual,
    parallel_vector_residual, product_axioms, riemann_curvature, CanonicalProduct, DualProduct,
    EulerField, UnitField,
};
use biflat::models::{EpsilonModel, N2Biflat, N2DualLame, N2Model, N2NaturalLame};
use biflat::sampling::rng;
use biflat::Point;
use rand::Rng;
use serde_json::json;

use super::{rows, Ctx, Outcome};
use crate::params::{LameKind, ModelKind};
use crate::report::Checks;
use crate::CliError;

/// A degree given under `sign`, converted to the raising convention used by
/// the two-dimensional Lamé solutions.
fn raising_degree(d: f64, sign: DegreeSign) -> f64 {
    match sign {
        DegreeSign::Raising => d,
        DegreeSign::Lowering => -d,
    }
}

/// Power-law solution for the degree `--d` (default `sqrt(-C1 C2)`).
fn biflat_lame(ctx: &Ctx, model: N2Model) -> Result<N2Biflat, CliError> {
    let d = match ctx.p.d {
        Some(d) => d,
        None => {
            let k = -model.c1 * model.c2;
            if k <= 0.0 {
                return Err(CliError::Input(format!(
                    "C1 C2 = {} is not negative: no real degree makes both connections flat",
                    model.c1 * model.c2
                )));
            }
            k.sqrt()
        }
    };
    Ok(N2Biflat::new(model, raising_degree(d, ctx.sign()))?)
}

/// Residual of `V H = lambda H` relative to the size of `H`.
fn relative_relation(beta: &dyn RotationField, lame: &dyn LameField, p: &Point) -> Result<f64, CliError> {
    let v = v_matrix(beta, p)?;
    let h = lame.h(p)?;
    let lambda = lame.degree_sign().euler_eigenvalue(lame.degree().unwrap_or(0.0));
    let scale = h.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    Ok(v.relation_residual(&h, lambda) / scale)
}

pub fn models_epsilon(ctx: &Ctx) -> Result<Outcome, CliError> {
    let m = ctx.epsilon_model()?;
    let pts = ctx.points(m.n, 20)?;
    let adj = m.adjoint();
    let t = ctx.tols;
    let mut c = Checks::default();
    for p in &pts {
        c.extend(de_residuals(&m, p, Step::Auto)?.reports(t.fd, p));
        c.extend(lame_residuals(&m, &m, p, Step::Auto)?.reports(t.fd, p));
        let k = lame_residuals(&m, &adj, p, Step::Auto)?;
        c.see("adjoint L1", k.l1, t.fd, p);
        c.see("adjoint L2", k.l2, t.fd, p);
        let form = flat_form_and_closedness(&m, &adj, &m, p, Step::Auto)?;
        c.see("flat form closedness", form.closedness, t.fd, p);
        c.see("flat form covariance", form.covariant, t.fd, p);
        c.see("V H = lambda H (relative)", relative_relation(&m, &m, p)?, t.algebraic, p);
    }
    let p0 = &pts[0];
    let v = v_matrix(&m, p0)?;
    Ok(Outcome {
        provenance: m.provenance(),
        checks: c,
        data: json!({
            "n": m.n,
            "eps": m.eps,
            "degree": reported_degree(m.degree(), ctx.sign()),
            "points": pts.len(),
            "sample": {
                "u": p0.coords(),
                "beta": rows(&m.beta(p0)?),
                "H": m.h(p0)?,
                "V_eigenvalues": v.eigenvalues,
            },
        }),
        csv: None,
    })
}

/// A lowering-convention degree expressed under `sign`.
fn reported_degree(lowering: f64, sign: DegreeSign) -> f64 {
    match sign {
        DegreeSign::Lowering => lowering,
        DegreeSign::Raising => -lowering,
    }
}

/// Sampled points are redrawn when `min |H_i| < H_FLOOR max |H_i|`: the
/// connection coefficients carry `1/H_i`, so curvature residuals near a zero
/// of `H` measure the finite-difference error and not the geometry.
const H_FLOOR: f64 = 1e-2;

/// Points with `u^2 / u^1` inside the grid of the numerically solved `f`,
/// away from zeros of the Lamé coefficients. Returns the points and the number
/// of rejected draws.
fn dual_points(ctx: &Ctx, h: &N2DualLame, count: usize) -> Result<(Vec<Point>, usize), CliError> {
    if let Some(u) = &ctx.p.u {
        let p = Point::new(u.clone())?;
        p.check_dim(2)?;
        return Ok((vec![p], 0));
    }
    let want = ctx.p.points.unwrap_or(count);
    let mut r = rng(ctx.seed());
    let (mut pts, mut rejected) = (Vec::with_capacity(want), 0);
    while pts.len() < want {
        if rejected > 1000 * want {
            return Err(CliError::Input("the Lamé coefficients are degenerate almost everywhere".into()));
        }
        let u1: f64 = r.gen_range(0.5..2.0);
        let z: f64 = r.gen_range(0.15..0.85);
        let p = Point::new(vec![u1, z * u1])?;
        let hv = h.h(&p)?;
        let (lo, hi) = hv.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x.abs()), b.max(x.abs())));
        if lo < H_FLOOR * hi {
            rejected += 1;
        } else {
            pts.push(p);
        }
    }
    Ok((pts, rejected))
}

pub fn models_n2(ctx: &Ctx) -> Result<Outcome, CliError> {
    let model = ctx.n2_model()?;
    let kind = ctx.p.lame.unwrap_or(LameKind::Biflat);
    let t = ctx.tols;
    let mut c = Checks::default();
    let (data, first) = match kind {
        LameKind::Natural => {
            if ctx.p.d.is_some() {
                return Err(CliError::Input("natural Lamé coefficients carry no degree".into()));
            }
            let (a, b) = (ctx.p.a.unwrap_or(0.0), ctx.p.b.unwrap_or(1.0));
            let h = N2NaturalLame::new(model, a, b)?;
            let nat = NaturalConnection::new(&model, &h);
            let pts = ctx.ordered_points(20)?;
            for p in &pts {
                c.extend(de_residuals(&model, p, Step::Auto)?.reports(t.fd, p));
                c.extend(lame_residuals(&model, &h, p, Step::Auto)?.reports(t.fd, p));
                c.see("Riemann natural", riemann_curvature(&nat, p, Step::Auto)?.max_abs(), t.fd, p);
            }
            (json!({"lame": "natural", "a": a, "b": b}), pts[0].clone())
        }
        LameKind::Dual => {
            let d = ctx.p.d.unwrap_or(1.0);
            let internal = raising_degree(d, ctx.sign());
            let (h, a, b) = if (model.c1, model.c2) == (1.0, -4.0) {
                let (a, b) = (ctx.p.a.unwrap_or(0.0), ctx.p.b.unwrap_or(1.0));
                (N2DualLame::special(internal, a, b)?, a, b)
            } else {
                // Initial data f(1/2) = a, f'(1/2) = b for the numerical solution.
                // H_2 is proportional to f', so the default keeps f' away from zero.
                let (a, b) = (ctx.p.a.unwrap_or(1.0), ctx.p.b.unwrap_or(1.0));
                (N2DualLame::ode(model, internal, 0.5, a, b, 0.1, 0.9)?, a, b)
            };
            let dual = DualConnection::new(&model, &h);
            let closed = matches!(h.mode, biflat::models::DualMode::Special { .. });
            let (pts, rejected) = dual_points(ctx, &h, 20)?;
            let mut curvature = 0.0f64;
            for p in &pts {
                // These coefficients are homogeneous but not translation
                // invariant, so only the Lamé equation and the Euler condition apply.
                let l = lame_residuals(&model, &h, p, Step::Auto)?;
                c.see("L1", l.l1, t.fd, p);
                c.see("L3", l.l3.unwrap_or(f64::NAN), t.fd, p);
                // A generic solution of the Lamé equation does not make the dual
                // connection flat; only the closed-form family is checked for it.
                let r = riemann_curvature(&dual, p, Step::Auto)?.max_abs();
                curvature = if r.is_nan() { r } else { curvature.max(r) };
                if closed {
                    c.see("Riemann dual", r, t.fd, p);
                }
                c.see(
                    "nabla2 E",
                    parallel_vector_residual(&dual, &EulerField { n: 2 }, p, Step::Auto)?,
                    t.algebraic,
                    p,
                );
            }
            (
                json!({
                    "lame": "dual", "d": d, "a": a, "b": b,
                    "f": if closed { "closed form" } else { "numerical" },
                    "rejected_near_zero_H": rejected,
                    "dual_curvature_max": curvature,
                }),
                pts[0].clone(),
            )
        }
        LameKind::Biflat => {
            if ctx.p.a.is_some() || ctx.p.b.is_some() {
                return Err(CliError::Input("--a/--b are not used by the bi-flat solution".into()));
            }
            let h = biflat_lame(ctx, model)?;
            let nat = NaturalConnection::new(&model, &h);
            let dual = DualConnection::new(&model, &h);
            let pts = ctx.ordered_points(20)?;
            c.see_at("bi-flat constraints", h.constraint_residual(), t.algebraic, &[]);
            for p in &pts {
                c.extend(lame_residuals(&model, &h, p, Step::Auto)?.reports(t.fd, p));
                let g = build_natural_connection(&model, &h, p, DEFAULT_DELTA_H)?;
                let (g112, g221) = h.expected_gamma(p)?;
                let err = (g.get(0, 0, 1) - g112).abs().max((g.get(1, 1, 0) - g221).abs());
                c.see("Gamma^1_12 = -d/(u2-u1)", err, t.algebraic, p);
                c.see("Riemann natural", riemann_curvature(&nat, p, Step::Auto)?.max_abs(), t.fd, p);
                c.see("Riemann dual", riemann_curvature(&dual, p, Step::Auto)?.max_abs(), t.fd, p);
            }
            let d = reported_degree(h.normative_degree(), ctx.sign());
            (json!({"lame": "biflat", "d": d, "D1": h.d1, "D2": h.d2}), pts[0].clone())
        }
    };
    let v = v_matrix(&model, &first)?;
    let mut data = data;
    data["C1"] = json!(model.c1);
    data["C2"] = json!(model.c2);
    data["sample"] = json!({"u": first.coords(), "V": rows(&v.matrix), "V_eigenvalues": v.eigenvalues});
    Ok(Outcome {
        provenance: model.provenance(),
        checks: c,
        data,
        csv: None,
    })
}

/// Every defining property of a bi-flat F-manifold built from `(beta, H)`.
fn bi_flat_suite(beta: &dyn RotationField, h: &dyn LameField, pts: &[Point], ctx: &Ctx, c: &mut Checks) -> Result<(), CliError> {
    let n = beta.dim();
    let t = ctx.tols;
    let nat = NaturalConnection::new(beta, h);
    let dual = DualConnection::new(beta, h);
    let circ = CanonicalProduct { n };
    let star = DualProduct::new(n);
    for p in pts {
        c.extend(de_residuals(beta, p, Step::Auto)?.reports(t.fd, p));
        c.extend(lame_residuals(beta, h, p, Step::Auto)?.reports(t.fd, p));
        c.see("Riemann natural", riemann_curvature(&nat, p, Step::Auto)?.max_abs(), t.fd, p);
        c.see("Riemann dual", riemann_curvature(&dual, p, Step::Auto)?.max_abs(), t.fd, p);
        c.see("nabla1 e", parallel_vector_residual(&nat, &UnitField { n }, p, Step::Auto)?, t.algebraic, p);
        c.see("nabla2 E", parallel_vector_residual(&dual, &EulerField { n }, p, Step::Auto)?, t.algebraic, p);
        c.see("almost equivalence", almost_equivalence_residual(&nat, &dual, p)?, t.algebraic, p);
        c.see("Hertling-Manin canonical", hertling_manin_residual(&circ, p, Step::Auto)?, t.fd, p);
        c.see("Hertling-Manin dual", hertling_manin_residual(&star, p, Step::Auto)?, t.fd, p);
        c.see("compatibility natural", compatibility_residual(&nat, &circ, p, Step::Auto)?, t.fd, p);
        c.see("compatibility dual", compatibility_residual(&dual, &star, p, Step::Auto)?, t.fd, p);
        for (name, prod) in [("canonical", &circ as &dyn biflat::geometry::ProductStructure), ("dual", &star)] {
            let ax = product_axioms(prod, p)?;
            let worst = ax.commutativity.max(ax.associativity).max(ax.unit);
            c.see(&format!("product axioms {name}"), worst, t.algebraic, p);
        }
    }
    Ok(())
}

pub fn verify(ctx: &Ctx) -> Result<Outcome, CliError> {
    let mut c = Checks::default();
    match ctx.model_kind() {
        ModelKind::Epsilon => {
            let m = ctx.epsilon_model()?;
            if ctx.p.d.is_some() {
                return Err(CliError::Input("the epsilon model fixes its degree; drop --d".into()));
            }
            let pts = ctx.points(m.n, 100)?;
            bi_flat_suite(&m, &m, &pts, ctx, &mut c)?;
            let degree = reported_degree(m.degree(), ctx.sign());
            Ok(Outcome {
                provenance: m.provenance(),
                checks: c,
                data: json!({"model": "epsilon", "n": m.n, "eps": m.eps, "degree": degree, "points": pts.len()}),
                csv: None,
            })
        }
        ModelKind::N2 => {
            let model = ctx.n2_model()?;
            let h = biflat_lame(ctx, model)?;
            let pts = ctx.ordered_points(100)?;
            c.see_at("bi-flat constraints", h.constraint_residual(), ctx.tols.algebraic, &[]);
            bi_flat_suite(&model, &h, &pts, ctx, &mut c)?;
            let degree = reported_degree(h.normative_degree(), ctx.sign());
            Ok(Outcome {
                provenance: format!("{} with power-law Lamé coefficients", model.provenance()),
                checks: c,
                data: json!({"model": "n2", "C1": model.c1, "C2": model.c2, "degree": degree, "points": pts.len()}),
                csv: None,
            })
        }
    }
}

pub fn lame_eigen(ctx: &Ctx) -> Result<Outcome, CliError> {
    let t = ctx.tols;
    let mut c = Checks::default();
    let (beta, lame, pts, provenance): (Box<dyn RotationField>, Option<EpsilonModel>, Vec<Point>, String) =
        match ctx.model_kind() {
            ModelKind::Epsilon => {
                let m = ctx.epsilon_model()?;
                (Box::new(m), Some(m), ctx.points(m.n, 1)?, m.provenance())
            }
            ModelKind::N2 => {
                let m = ctx.n2_model()?;
                (Box::new(m), None, ctx.ordered_points(1)?, m.provenance())
            }
        };
    let mut samples = Vec::new();
    for p in &pts {
        let v = v_matrix(beta.as_ref(), p)?;
        let scale = v.matrix.amax().max(1.0);
        c.see("eigenpair residual (relative)", v.eigen_residual() / scale, t.algebraic, p);
        c.see("conjugation defect (relative)", v.conjugation_defect() / scale, t.algebraic, p);
        match &lame {
            Some(m) => c.see("V H = lambda H (relative)", relative_relation(m, m, p)?, t.algebraic, p),
            None => {
                let c1c2 = ctx.p.c1.unwrap_or(1.0) * ctx.p.c2.unwrap_or(-4.0);
                for l in &v.eigenvalues {
                    c.see("|lambda^2 + C1 C2|", (l * l + c1c2).norm(), t.algebraic, p);
                }
            }
        }
        let degrees: Vec<_> = v
            .eigenvalues
            .iter()
            .map(|l| match ctx.sign() {
                DegreeSign::Lowering => -l,
                DegreeSign::Raising => *l,
            })
            .collect();
        samples.push(json!({
            "u": p.coords(),
            "V": rows(&v.matrix),
            "eigenvalues": v.eigenvalues,
            "eigenvectors": v.eigenvectors,
            "degrees": degrees,
        }));
    }
    Ok(Outcome {
        provenance,
        checks: c,
        data: json!({"degree_sign": ctx.sign(), "samples": samples}),
        csv: None,
    })
}
