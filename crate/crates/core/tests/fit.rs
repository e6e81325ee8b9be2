use std::sync::OnceLock;

use qdot::basis::ModelParams;
use qdot::fit::*;
use qdot::model::{solve, Solution, SolveOptions};
use qdot::optics::{transition_catalog, CatalogOptions, Transition};
use qdot::Error;

const KEYS: [&str; 7] = [
    "0->(1e¹)(1h¹):B+",
    "0->(2e¹)(1h¹):B+",
    "0->(1e¹)(3h¹):B+",
    "(1e¹)(1h¹):B+->(1e²)(1h²)",
    "(1e¹)(2h¹):B+->(1e²)(1h¹2h¹)_{T0}",
    "(2e¹)(1h¹):B+->(1e¹2e¹)_{T0}(1h²)",
    "(1e¹)(1h¹):B+->(1e¹2e¹)_{T}(1h¹2h¹)_{T}:tt5",
];

fn truth() -> &'static Solution {
    static SOL: OnceLock<Solution> = OnceLock::new();
    SOL.get_or_init(|| solve(&ModelParams::default(), &SolveOptions::default()).unwrap())
}

fn synthetic_targets() -> Vec<Target> {
    let sol = truth();
    KEYS.iter()
        .map(|k| {
            let (a, b) = k.split_once("->").unwrap();
            let e = sol.find(b).unwrap().energy() - sol.find(a).unwrap().energy();
            Target {
                line: MeasuredLine::new(e),
                key: k.to_string(),
            }
        })
        .collect()
}

#[test]
fn objective_vanishes_at_the_generating_parameters() {
    let t = synthetic_targets();
    assert!(objective(&ModelParams::default(), &t).unwrap() < 1e-12);
}

#[test]
fn objective_is_linear_in_weights_and_order_independent() {
    let p = ModelParams {
        l_e_x: 70.0,
        ..ModelParams::default()
    };
    let t = synthetic_targets();
    let base = objective(&p, &t).unwrap();
    assert!(base > 0.0);
    let doubled: Vec<Target> = t
        .iter()
        .map(|x| Target {
            line: MeasuredLine {
                weight: 2.0 * x.line.weight,
                ..x.line.clone()
            },
            ..x.clone()
        })
        .collect();
    assert!((objective(&p, &doubled).unwrap() - 2.0 * base).abs() < 1e-12 * base);
    let mut rev = t.clone();
    rev.reverse();
    assert!((objective(&p, &rev).unwrap() - base).abs() < 1e-12 * base);
}

#[test]
fn unresolvable_keys_are_configuration_errors() {
    let t = vec![Target {
        line: MeasuredLine::new(1.0),
        key: "0->(7e¹)(7h¹):B+".into(),
    }];
    assert!(matches!(objective(&ModelParams::default(), &t), Err(Error::Config(_))));
    let t = vec![Target {
        line: MeasuredLine::new(1.0),
        key: "no arrow".into(),
    }];
    assert!(matches!(objective(&ModelParams::default(), &t), Err(Error::Config(_))));
}

fn perturbed() -> ModelParams {
    let p = ModelParams::default();
    ModelParams {
        l_e_x: p.l_e_x * 1.2,
        l_h_x: p.l_h_x * 0.8,
        xi: p.xi * 1.1,
        ..p
    }
}

#[test]
fn synthetic_round_trip_recovers_the_lengths() {
    let r = fit_lengths(&perturbed(), &synthetic_targets(), &FitOptions::default()).unwrap();
    let p = ModelParams::default();
    for (name, got, want) in [
        ("l_e_x", r.params.l_e_x, p.l_e_x),
        ("l_h_x", r.params.l_h_x, p.l_h_x),
        ("xi", r.params.xi, p.xi),
    ] {
        assert!((got - want).abs() < 0.01 * want, "{name}: {got} vs {want}");
    }
    assert!(r.iterations <= 500);
    assert!(r.converged);
    assert!(r.objective <= r.initial_objective);
    let rms = (r.residuals.iter().map(|x| x * x).sum::<f64>() / r.residuals.len() as f64).sqrt();
    assert!((rms - r.rms).abs() < 1e-15);
    let back = FitResult::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn iteration_cap_returns_the_best_point_unconverged() {
    let opts = FitOptions {
        max_iterations: 3,
        ..FitOptions::default()
    };
    let r = fit_lengths(&perturbed(), &synthetic_targets(), &opts).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, 3);
    assert!(r.objective <= r.initial_objective);
    r.params.validate().unwrap();
}

#[test]
fn free_mode_moves_all_four_lengths() {
    let p = ModelParams::default();
    let start = ModelParams {
        l_e_y: Some(p.l_e_x * p.xi * 1.05),
        l_h_y: Some(p.l_h_x * p.xi),
        ..p
    };
    let opts = FitOptions {
        mode: FitMode::Free,
        max_iterations: 25,
        ..FitOptions::default()
    };
    let r = fit_lengths(&start, &synthetic_targets(), &opts).unwrap();
    assert_eq!(r.parameter_names, ["l_e_x", "l_e_y", "l_h_x", "l_h_y"]);
    assert!(r.objective < r.initial_objective);
    assert!(r.params.l_e_y.is_some() && r.params.l_h_y.is_some());
}

#[test]
fn degenerate_fit_requests_are_rejected() {
    let t = synthetic_targets();
    let opts = FitOptions {
        hold: vec!["l_e_x".into(), "l_h_x".into(), "xi".into()],
        ..FitOptions::default()
    };
    assert!(matches!(fit_lengths(&ModelParams::default(), &t, &opts), Err(Error::Config(_))));
    assert!(matches!(
        fit_lengths(&ModelParams::default(), &t[..2], &FitOptions::default()),
        Err(Error::Config(_))
    ));
    let bad = FitOptions {
        hold: vec!["eps_r".into()],
        ..FitOptions::default()
    };
    assert!(matches!(fit_lengths(&ModelParams::default(), &t, &bad), Err(Error::Config(_))));
}

#[test]
fn simplex_minimizes_the_rosenbrock_valley() {
    let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
    let m = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], 1e-10, 5000);
    assert!(m.converged);
    assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    let inf = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) };
    let m = nelder_mead(inf, &[0.5], &[1.0], 1e-10, 500);
    assert!((m.x[0] - 2.0).abs() < 1e-6);
}

fn catalog() -> &'static [Transition] {
    static CAT: OnceLock<Vec<Transition>> = OnceLock::new();
    CAT.get_or_init(|| transition_catalog(truth(), &CatalogOptions::default()).unwrap())
}

fn measured(energy: f64, polarization: MeasuredPolarization) -> MeasuredLine {
    MeasuredLine {
        polarization,
        ..MeasuredLine::new(energy)
    }
}

#[test]
fn ground_exciton_doublet_is_assigned_by_polarization() {
    let cat = catalog();
    let bp = cat.iter().find(|t| t.key() == "0->(1e¹)(1h¹):B+").unwrap().energy;
    let lines = [
        measured(bp + 0.005, MeasuredPolarization::H),
        measured(bp + 0.039, MeasuredPolarization::V),
    ];
    let a = assign_lines(&lines, cat, DEFAULT_ASSIGN_TOLERANCE).unwrap();
    assert_eq!(a.matches.len(), 2);
    assert_eq!(a.matches[0].line, "0->(1e¹)(1h¹):B+");
    assert_eq!(a.matches[1].line, "0->(1e¹)(1h¹):B-");
    assert!(a.unmatched.is_empty());
}

#[test]
fn h_never_matches_v() {
    let cat = catalog();
    let bm = cat.iter().find(|t| t.key() == "0->(1e¹)(1h¹):B-").unwrap();
    let a = assign_lines(&[measured(bm.energy, MeasuredPolarization::H)], cat, DEFAULT_ASSIGN_TOLERANCE).unwrap();
    assert_ne!(a.matches[0].line, bm.key());
    let u = assign_lines(&[measured(bm.energy, MeasuredPolarization::Unknown)], cat, DEFAULT_ASSIGN_TOLERANCE).unwrap();
    assert_eq!(u.matches[0].line, bm.key());
}

fn toy_line(energy: f64, name: &str) -> Transition {
    let mut t = catalog()[0].clone();
    t.energy = energy;
    t.final_state = name.into();
    t
}

#[test]
fn ties_go_to_the_lower_candidate_and_far_lines_stay_unmatched() {
    let cat = [toy_line(10.0, "a"), toy_line(12.0, "b")];
    let a = assign_lines(&[MeasuredLine::new(11.0)], &cat, 1.5).unwrap();
    assert_eq!(a.matches[0].line, cat[0].key());
    let far = assign_lines(&[MeasuredLine::new(22.0), MeasuredLine::new(10.2)], &cat, 1.0).unwrap();
    assert_eq!(far.unmatched, vec![0]);
    assert_eq!(far.matches.len(), 1);
    assert_eq!(far.matches[0].measured, 1);
    assert!((far.matches[0].residual - 0.2).abs() < 1e-12);
}

#[test]
fn each_catalog_line_is_used_once_and_translation_is_harmless() {
    let cat = [toy_line(10.0, "a"), toy_line(10.5, "b"), toy_line(13.0, "c")];
    let lines: Vec<MeasuredLine> = [10.1, 10.05, 12.9, 30.0].iter().map(|&e| MeasuredLine::new(e)).collect();
    let a = assign_lines(&lines, &cat, 0.6).unwrap();
    let used: Vec<&str> = a.matches.iter().map(|m| m.line.as_str()).collect();
    let mut uniq = used.clone();
    uniq.sort();
    uniq.dedup();
    assert_eq!(uniq.len(), used.len());
    assert_eq!(a.matches.iter().find(|m| m.measured == 1).unwrap().line, cat[0].key());
    assert_eq!(a.matches.iter().find(|m| m.measured == 0).unwrap().line, cat[1].key());
    assert_eq!(a.unmatched, vec![3]);

    let shift = 1234.5;
    let cat2: Vec<Transition> = cat.iter().map(|t| toy_line(t.energy + shift, &t.final_state)).collect();
    let lines2: Vec<MeasuredLine> = lines.iter().map(|l| MeasuredLine::new(l.energy + shift)).collect();
    let b = assign_lines(&lines2, &cat2, 0.6).unwrap();
    let pick = |x: &Assignment| x.matches.iter().map(|m| (m.measured, m.line.clone())).collect::<Vec<_>>();
    assert_eq!(pick(&a), pick(&b));
    assert_eq!(a, assign_lines(&lines, &cat, 0.6).unwrap());
    assert!(matches!(assign_lines(&lines, &[], 0.6), Err(Error::Precondition(_))));
}
