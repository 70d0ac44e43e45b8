//! End-to-end runs across modules.

use biflat::darboux_egorov::{
    flat_form_and_closedness, lame_residuals, v_matrix, LameField, NaturalConnection,
};
use biflat::fd::Step;
use biflat::geometry::{CanonicalProduct, EulerField, UnitField};
use biflat::hierarchy::{resonance_check, symmetry_residual, FlowLabel, Recursion, RecursionField, Scheme};
use biflat::models::EpsilonModel;
use biflat::painleve::{
    integrate_span, reconstruct_f, sigma_data_from_f, sigma_initial, solve_constants, solve_sigma,
    Branching, FState, IntegrateOptions, CSV_HEADER,
};
use biflat::sampling::sample_points;
use biflat::Point;

#[test]
fn epsilon_model_euler_relation_and_flat_form() {
    let m = EpsilonModel::new(3, 0.5).unwrap();
    for p in sample_points(3, 10, 11, 0.05).unwrap() {
        let v = v_matrix(&m, &p).unwrap();
        // V H = lambda H with lambda the Euler eigenvalue of H.
        let lambda = m.degree_sign().euler_eigenvalue(m.degree());
        assert!(v.relation_residual(&m.h(&p).unwrap(), lambda) < 1e-9);
        let adj = m.adjoint();
        let l = lame_residuals(&m, &adj, &p, Step::Auto).unwrap();
        assert!(l.l1 < 1e-7 && l.l2 < 1e-7, "{l:?}");
        let form = flat_form_and_closedness(&m, &adj, &m, &p, Step::Auto).unwrap();
        assert!(form.closedness < 1e-7 && form.covariant < 1e-7, "{form:?}");
    }
}

#[test]
fn painleve_round_trip_in_real_mode() {
    // All pairwise products positive so real branches exist along the run.
    let f0 = [0.8, 0.5, 0.6, 0.7, 0.9, 0.4];
    let s0 = FState::new(0.5, f0).unwrap();
    let t = integrate_span(&s0, 0.4, 0.6, &IntegrateOptions::default()).unwrap();
    let sd = sigma_data_from_f(&t).unwrap();
    let rc = solve_constants(0.5, &f0, Branching::Real).unwrap();
    let (init, r2, d) = sigma_initial(0.5, &f0);
    assert!((r2 - sd.r2).abs() < 1e-12 && (d - sd.d).abs() < 1e-12);
    let sol = solve_sigma(0.5, init, r2, d, 0.4, 0.6, 1e-13, 1e-3).unwrap();
    let back = reconstruct_f(&rc, &sol, &t.z).unwrap();
    let err = t
        .f
        .iter()
        .zip(&back.f)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "{err:e}");
    let csv = back.to_csv(&sd.residuals());
    assert!(csv.starts_with(CSV_HEADER));
    assert_eq!(csv.lines().count(), t.len() + 1);
}

#[test]
fn principal_chain_from_unit_is_not_resonant() {
    let m = EpsilonModel::new(3, 0.5).unwrap();
    let conn = NaturalConnection::new(&m, &m);
    let c = CanonicalProduct { n: 3 };
    let euler = EulerField { n: 3 };
    let unit = UnitField { n: 3 };
    let base = Point::new(vec![0.6, 1.5, 2.7]).unwrap();
    let mut rec = Recursion::new(Scheme::Principal, &conn, None, &c, &euler);
    rec.steps = 50;
    let x1 = RecursionField {
        recursion: rec,
        prev: &unit,
        base: base.clone(),
        x_base: vec![0.0; 3],
        label: FlowLabel { p: 0, alpha: 1, scheme: Scheme::Principal },
    };
    let samples = [
        Point::new(vec![0.7, 1.4, 2.9]).unwrap(),
        Point::new(vec![0.5, 1.7, 2.5]).unwrap(),
        Point::new(vec![0.8, 1.6, 2.6]).unwrap(),
    ];
    let r = resonance_check(&[&unit], &x1, &samples).unwrap();
    assert!(!r.resonant, "{r:?}");
    // The next level is again a symmetry.
    let x2 = RecursionField {
        recursion: rec,
        prev: &x1,
        base: base.clone(),
        x_base: vec![0.0; 3],
        label: FlowLabel { p: 0, alpha: 2, scheme: Scheme::Principal },
    };
    let q = Point::new(vec![0.75, 1.45, 2.85]).unwrap();
    let s = symmetry_residual(&conn, &c, &x2, &q, Step::Fixed(1e-3)).unwrap();
    assert!(s < 1e-6, "{s:e}");
}
