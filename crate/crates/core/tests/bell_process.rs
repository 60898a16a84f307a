mod common;

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use common::{brukner_coefficients, label_indices, FR_F2_ROWS, FR_JOINT_ROWS};
use histories_core::bell::DEFAULT_STEP;
use histories_core::scenario::{build_brukner, build_frauchiger_renner};
use histories_core::{
    bell_rates, BellProcess, EvolutionSchedule, History, Operator, ProjectorFamily, Segment,
    StateVector, C64,
};

#[test]
fn brukner_rates_follow_the_closed_form() {
    for p in [0.6, 0.7, 0.9] {
        let (c1, c2) = brukner_coefficients(p);
        let s = build_brukner(c1, c2).unwrap();
        let fam = &s.observer("F").unwrap().family;
        let h = s.schedule.segments()[1].hamiltonian();
        let d = 2.0 * p - 1.0;
        for tau in [0.05, 0.3, 0.5, 0.77, 0.95] {
            let (co, si) = ((FRAC_PI_2 * tau).cos(), (FRAC_PI_2 * tau).sin());
            // Born weight of F = 1 along the rotation, and minus its log-derivative
            let occ = p - 0.5 * d * si * si;
            let w12 = FRAC_PI_2 * d * co * si / occ;
            let r = bell_rates(&s.state_at(1.0 + tau).unwrap(), h, fam, 1.0 + tau).unwrap();
            assert!((r.rate(1, 2) - w12).abs() < 1e-12, "p = {p}, tau = {tau}");
            assert_eq!(r.rate(2, 1), 0.0);
            assert_eq!(r.rate(0, 1), 0.0);
            assert!(r.max_exclusivity_product() == 0.0 && r.min_rate() >= 0.0);
        }
    }
}

#[test]
fn equal_coefficients_have_no_transitions() {
    let (c1, c2) = brukner_coefficients(0.5);
    let s = build_brukner(c1, c2).unwrap();
    let o = s.observer("F").unwrap();
    let h = s.schedule.segments()[1].hamiltonian();
    for tau in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let r = bell_rates(&s.state_at(1.0 + tau).unwrap(), h, &o.family, 1.0 + tau).unwrap();
        assert!(r.is_zero(), "tau = {tau}");
    }
    let k = s
        .bell_process(o)
        .unwrap()
        .kernel(1.0, 2.0, DEFAULT_STEP)
        .unwrap();
    for j in 0..3 {
        for m in 0..3 {
            let want = if j == m { 1.0 } else { 0.0 };
            assert!((k.get(j, m) - want).abs() < 1e-8);
        }
    }
}

#[test]
fn zero_hamiltonian_gives_zero_rates() {
    let s = build_brukner(C64::new(0.6, 0.0), C64::new(0.8, 0.0)).unwrap();
    let fam = &s.observer("F").unwrap().family;
    let zero = Operator::zero(s.space.clone());
    let r = bell_rates(&s.state_at(1.3).unwrap(), &zero, fam, 1.3).unwrap();
    assert!(r.is_zero());
}

#[test]
fn unnormalized_state_is_rejected() {
    let s = build_brukner(C64::new(0.6, 0.0), C64::new(0.8, 0.0)).unwrap();
    let fam = &s.observer("F").unwrap().family;
    let h = s.schedule.segments()[1].hamiltonian();
    let half = s.state_at(1.5).unwrap().scaled(C64::new(0.5, 0.0));
    assert!(bell_rates(&half, h, fam, 1.5).is_err());
}

#[test]
fn brukner_conditional_kernel() {
    for p in [0.5, 0.6, 0.7, 0.9] {
        let (c1, c2) = brukner_coefficients(p);
        let s = build_brukner(c1, c2).unwrap();
        let k = s
            .bell_process(s.observer("F").unwrap())
            .unwrap()
            .kernel(1.0, 2.0, DEFAULT_STEP)
            .unwrap();
        let want = [[1.0 / (2.0 * p), (2.0 * p - 1.0) / (2.0 * p)], [0.0, 1.0]];
        for j in 0..2 {
            for m in 0..2 {
                assert!(
                    (k.get(j + 1, m + 1) - want[j][m]).abs() < 1e-6,
                    "p = {p} T[{}][{}]",
                    j + 1,
                    m + 1
                );
            }
        }
        // no backward flow at all
        assert_eq!(k.get(2, 1), 0.0);
    }
}

#[test]
fn brukner_bell_column() {
    for p in [0.5, 0.6, 0.7, 0.9] {
        let (c1, c2) = brukner_coefficients(p);
        let s = build_brukner(c1, c2).unwrap();
        let o = s.observer("F").unwrap();
        let bp = s.bell_process(o).unwrap();
        let (rows, diag) = bp
            .history_probabilities(&o.times, o.fixed_start, DEFAULT_STEP)
            .unwrap();
        assert!(diag.positive() && diag.exclusive());
        let want = [
            (["0", "1", "1"], 0.5),
            (["0", "1", "2"], p - 0.5),
            (["0", "2", "1"], 0.0),
            (["0", "2", "2"], 1.0 - p),
        ];
        let mut total = 0.0;
        for (l, prob) in &rows {
            total += prob;
            let w = want
                .iter()
                .find(|(n, _)| label_indices(&o.family, n) == *l)
                .map_or(0.0, |x| x.1);
            assert!((prob - w).abs() < 1e-6, "p = {p} {l:?}: {prob}");
        }
        assert!((total - 1.0).abs() < 1e-6);
        // single-history entry point agrees with the table
        let h = History::from_labels(
            o.family.clone(),
            s.initial_state.clone(),
            0.0,
            &[("0", 0.0), ("1", 1.0), ("2", 2.0)],
        )
        .unwrap();
        assert!((bp.history_probability(&h, DEFAULT_STEP).unwrap() - (p - 0.5)).abs() < 1e-6);
    }
}

#[test]
fn fr_f2_bell_rows() {
    let s = build_frauchiger_renner().unwrap();
    let o = s.observer("F2").unwrap();
    let (rows, diag) = s
        .bell_process(o)
        .unwrap()
        .history_probabilities(&o.times, o.fixed_start, DEFAULT_STEP)
        .unwrap();
    assert!(diag.positive() && diag.exclusive());
    for (l, p) in &rows {
        let want = FR_F2_ROWS
            .iter()
            .find(|r| label_indices(&o.family, &r.0) == *l)
            .map_or(0.0, |r| r.1);
        assert!((p - want).abs() < 1e-6, "{l:?}: {p}");
    }
}

#[test]
fn fr_joint_bell_rows() {
    let s = build_frauchiger_renner().unwrap();
    let o = s.observer("joint").unwrap();
    let (rows, _) = s
        .bell_process(o)
        .unwrap()
        .history_probabilities(&o.times, o.fixed_start, DEFAULT_STEP)
        .unwrap();
    let mut total = 0.0;
    for (l, p) in &rows {
        total += p;
        let want = FR_JOINT_ROWS
            .iter()
            .find(|r| label_indices(&o.family, &r.0) == *l)
            .map_or(0.0, |r| r.1);
        assert!(
            (p - want).abs() < if want == 0.0 { 1e-8 } else { 1e-6 },
            "{l:?}: {p} vs {want}"
        );
    }
    assert!((total - 1.0).abs() < 1e-6);
    let l = label_indices(&o.family, &["(0,0,0)", "(t,0,0)", "(h,ok,0)", "(h,ok,ok)"]);
    let p = rows.iter().find(|r| r.0 == l).unwrap().1;
    assert!((p - 1.0 / 24.0).abs() < 1e-6);
}

#[test]
fn kernels_chain() {
    let (c1, c2) = brukner_coefficients(0.8);
    let s = build_brukner(c1, c2).unwrap();
    let bp = s.bell_process(s.observer("F").unwrap()).unwrap();
    let whole = bp.kernel(0.5, 2.0, DEFAULT_STEP).unwrap();
    let parts = bp
        .kernel(0.5, 1.3, DEFAULT_STEP)
        .unwrap()
        .then(&bp.kernel(1.3, 2.0, DEFAULT_STEP).unwrap());
    assert!(whole.max_abs_diff(&parts) < 1e-7);

    let f = build_frauchiger_renner().unwrap();
    let bp = f.bell_process(f.observer("F2").unwrap()).unwrap();
    let whole = bp.kernel(2.0, 5.0, DEFAULT_STEP).unwrap();
    let parts = bp
        .kernel(2.0, 3.5, DEFAULT_STEP)
        .unwrap()
        .then(&bp.kernel(3.5, 5.0, DEFAULT_STEP).unwrap());
    assert!(whole.max_abs_diff(&parts) < 1e-7);
}

#[test]
fn kernel_rows_are_distributions() {
    let f = build_frauchiger_renner().unwrap();
    let bp = f.bell_process(f.observer("joint").unwrap()).unwrap();
    for (a, b) in [(0.0, 1.0), (1.0, 4.0), (4.0, 5.0), (3.25, 4.75)] {
        let k = bp.kernel(a, b, DEFAULT_STEP).unwrap();
        for j in 0..k.len() {
            let row = k.row(j);
            assert!(row.iter().all(|&x| x >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }
    let id = bp.kernel(2.5, 2.5, DEFAULT_STEP).unwrap();
    for j in 0..id.len() {
        assert_eq!(id.get(j, j), 1.0);
    }
}

#[test]
fn fr_w1_interval_kernel_for_f2_is_identity() {
    // F2 is a spectator while W1 measures
    let f = build_frauchiger_renner().unwrap();
    let bp = f.bell_process(f.observer("F2").unwrap()).unwrap();
    let k = bp.kernel(3.0, 4.0, DEFAULT_STEP).unwrap();
    for j in 0..3 {
        assert!((k.get(j, j) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn kernel_converges_at_fourth_order() {
    let (c1, c2) = brukner_coefficients(0.7);
    let s = build_brukner(c1, c2).unwrap();
    let bp = s.bell_process(s.observer("F").unwrap()).unwrap();
    let ks: Vec<_> = [0.2, 0.1, 0.05, 0.025]
        .iter()
        .map(|&h| bp.kernel(1.0, 2.0, h).unwrap())
        .collect();
    let changes: Vec<f64> = ks.windows(2).map(|w| w[0].max_abs_diff(&w[1])).collect();
    for w in changes.windows(2) {
        assert!(w[1] < w[0] / 8.0, "{changes:?}");
    }
}

// Occupancies vanish at the FR segment ends, so the error is not a clean
// power of the step there; only check it settles onto a fine reference.
#[test]
fn fr_kernel_settles_under_refinement() {
    let f = build_frauchiger_renner().unwrap();
    let bp = f.bell_process(f.observer("F2").unwrap()).unwrap();
    let reference = bp.kernel(2.0, 5.0, 5e-5).unwrap();
    let errs: Vec<f64> = [5e-3, 1.25e-3, 5e-4]
        .iter()
        .map(|&h| bp.kernel(2.0, 5.0, h).unwrap().max_abs_diff(&reference))
        .collect();
    assert!(errs[0] < 1e-10 && errs[2] < 1e-12, "{errs:?}");
    assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
}

#[test]
fn step_halving_at_working_resolution() {
    let f = build_frauchiger_renner().unwrap();
    for name in ["F2", "joint"] {
        let o = f.observer(name).unwrap();
        let bp = f.bell_process(o).unwrap();
        let (a, _) = bp
            .history_probabilities(&o.times, o.fixed_start, 2e-4)
            .unwrap();
        let (b, _) = bp
            .history_probabilities(&o.times, o.fixed_start, 1e-4)
            .unwrap();
        for ((_, x), (_, y)) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}

#[test]
fn born_marginals_are_preserved() {
    for p in [0.5f64, 0.7, 0.95] {
        let c1 = C64::from_polar(p.sqrt(), 0.3);
        let c2 = C64::from_polar((1.0 - p).sqrt(), 2.0);
        let s = build_brukner(c1, c2).unwrap();
        let bp = s.bell_process(s.observer("F").unwrap()).unwrap();
        assert!(
            bp.born_marginal_check(&[1.0, 1.5, 2.0], DEFAULT_STEP)
                .unwrap()
                <= 1e-6
        );
        assert!(
            bp.born_marginal_check(&[0.0, 0.5, 1.0, 2.0], DEFAULT_STEP)
                .unwrap()
                <= 1e-6
        );
    }
    let f = build_frauchiger_renner().unwrap();
    for o in &f.observers {
        let bp = f.bell_process(o).unwrap();
        assert!(
            bp.born_marginal_check(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], DEFAULT_STEP)
                .unwrap()
                <= 1e-6
        );
    }
}

#[test]
fn idle_schedule_marginal_deviation_is_zero() {
    let s = build_brukner(C64::new(0.6, 0.0), C64::new(0.8, 0.0)).unwrap();
    let schedule =
        EvolutionSchedule::new(vec![Segment::idle(s.space.clone(), 0.0, 1.0).unwrap()]).unwrap();
    let fam = Arc::new(ProjectorFamily::from_subsystem_basis(s.space.clone(), "S").unwrap());
    let bp = BellProcess::new(schedule, fam, s.initial_state.clone(), 0.0).unwrap();
    assert_eq!(bp.born_marginal_check(&[0.0, 0.5, 1.0], 0.01).unwrap(), 0.0);
}

#[test]
fn invalid_steps_are_rejected() {
    let s = build_brukner(C64::new(0.6, 0.0), C64::new(0.8, 0.0)).unwrap();
    let bp = s.bell_process(s.observer("F").unwrap()).unwrap();
    for step in [0.0, -1e-3, f64::NAN, f64::INFINITY] {
        assert!(bp.kernel(1.0, 2.0, step).is_err());
    }
    assert!(bp.kernel(1.0, 2.5, 1e-3).is_err());
}

#[test]
fn general_family_uses_projected_vectors() {
    // a rotated qubit basis on S is not diagonal in the product basis
    let s = build_brukner(C64::new(0.6, 0.0), C64::new(0.8, 0.0)).unwrap();
    let sp = s.space.clone();
    let local = sp.restrict(&["S"]).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let plus = StateVector::superposition(
        local.clone(),
        &[(C64::new(r, 0.0), &["1"]), (C64::new(r, 0.0), &["2"])],
    )
    .unwrap();
    let minus = StateVector::superposition(
        local,
        &[(C64::new(r, 0.0), &["1"]), (C64::new(-r, 0.0), &["2"])],
    )
    .unwrap();
    let members = vec![
        (
            "+".to_string(),
            histories_core::embed(
                &histories_core::projector_from_states(&[plus]).unwrap(),
                &sp,
            )
            .unwrap(),
        ),
        (
            "-".to_string(),
            histories_core::embed(
                &histories_core::projector_from_states(&[minus]).unwrap(),
                &sp,
            )
            .unwrap(),
        ),
    ];
    let fam = Arc::new(ProjectorFamily::new(sp, members).unwrap());
    let bp = BellProcess::new(s.schedule.clone(), fam, s.initial_state.clone(), 0.0).unwrap();
    assert!(
        bp.born_marginal_check(&[0.0, 0.5, 1.0, 1.5, 2.0], DEFAULT_STEP)
            .unwrap()
            <= 1e-6
    );
    let (_, diag) = bp.kernels(&[0.0, 1.0, 2.0], DEFAULT_STEP).unwrap();
    assert!(diag.positive() && diag.exclusive());
}
