//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the run exits nonzero only on criteria not listed in `KNOWN_RED`.

mod common;

use std::fs;

use common::oracle::{ci_spectrum, integrals, oracle_spectrum, Resolution};
use qdot::basis::{eh_overlap, enumerate_orbitals, Carrier, ModelParams};
use qdot::ci::{solve_sector, CiInputs, Sector};
use qdot::cli::{run, Command, RunConfig};
use qdot::coulomb::{build_coulomb_table, coulomb_element};
use qdot::fit::{fit_lengths, FitOptions, MeasuredLine, Target};
use qdot::model::{solve, Solution, SolveOptions};
use qdot::optics::{transition_catalog, CatalogOptions, Polarization, Transition};
use qdot::spectra::{broaden_lines, pl_lines, feeding_graph, Grid, Linear};
use qdot::spinfine::*;

/// Criteria expected to fail, with the reason recorded alongside.
const KNOWN_RED: &[(u32, &str)] = &[(
    2,
    "the tabulated coupled-level cubic carries 2Δ̃₁² where the matrix gives Δ̃₁² after the Δ̃₀ rescaling",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn default_solution() -> Solution {
    solve(&ModelParams::default(), &SolveOptions::default()).unwrap()
}

fn fine_structure_anchors() -> Outcome {
    let fs = exciton_fine_structure(ExchangeConstants::new(123.0, -34.0, 1.4));
    let e = |n: &str| fs.by_name(n).unwrap().0;
    let bright = e("B-") - e("B+");
    let dark = (e("D+") - e("D-")).abs();
    let ok = (bright - 34.0).abs() <= 1e-9 * 34.0 && (dark - 1.4).abs() <= 1e-9 * 1.4 && e("B-") > e("B+");
    outcome(ok, format!("bright {bright:.6} µeV, dark {dark:.6} µeV, antisymmetric above: {}", e("B-") > e("B+")))
}

fn tt_closed_forms() -> Outcome {
    let c = ExchangeConstants::new(123.0, -34.0, 1.4);
    let h = biexciton_tt_hamiltonian(c);
    let numeric = biexciton_tt_eigensystem(c).unwrap().eigenvalues;
    let mapped = ExchangeConstants::new(c.delta0 * TABULATED_DELTA0_SCALE, c.delta1, c.delta2);
    let printed = tt_tabulated_forms(mapped);
    let explicit_err = printed[..6]
        .iter()
        .map(|p| numeric.iter().map(|n| (n - p).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let remaining: Vec<f64> = {
        let mut left = numeric.clone();
        for p in &printed[..6] {
            let k = (0..left.len())
                .min_by(|&a, &b| (left[a] - p).abs().total_cmp(&(left[b] - p).abs()))
                .unwrap();
            left.remove(k);
        }
        left
    };
    let cubic_err = remaining
        .iter()
        .zip(sorted(printed[6..].to_vec()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let root_sum: f64 = printed[6..].iter().sum();
    let trace = h.trace();
    let ok = explicit_err <= 1e-12 && cubic_err <= 1e-12 && root_sum.abs() <= 1e-12 && trace.abs() <= 1e-12;
    outcome(
        ok,
        format!(
            "explicit levels max err {explicit_err:.1e}, coupled roots max err {cubic_err:.3e} µeV, root sum {root_sum:.1e}, trace {trace:.1e}"
        ),
    )
}

fn intensity_patterns(sol: &Solution) -> Outcome {
    let cat = transition_catalog(sol, &CatalogOptions::default()).unwrap();
    let st: Vec<&Transition> = cat
        .iter()
        .filter(|t| t.initial.starts_with("(1e¹)(2h¹):") && t.final_state.starts_with("(1e²)(1h¹2h¹)_{T"))
        .collect();
    if st.len() != 3 {
        return outcome(false, format!("expected three singlet-triplet lines, found {}", st.len()));
    }
    let (a, b, d) = (st[0].strength, st[1].strength, st[2].strength);
    let pattern = (b / a - 1.0).abs().max((d / a - 4.0).abs());
    let raw = transition_catalog(
        sol,
        &CatalogOptions {
            merge_tolerance_uev: 0.0,
            min_strength: 1e-12,
        },
    )
    .unwrap();
    let st: Vec<&Transition> = raw
        .iter()
        .filter(|t| t.initial.starts_with("(1e¹)(2h¹):") && t.final_state.starts_with("(1e²)(1h¹2h¹)_{T"))
        .collect();
    let bright = st.iter().find(|t| t.initial.contains(":B")).map(|t| t.strength).unwrap_or(0.0);
    let ratio_err = ["(1e¹)(2h¹):D+", "(1e¹)(2h¹):D-"]
        .iter()
        .map(|k| {
            let total: f64 = st.iter().filter(|t| t.initial == *k).map(|t| t.strength).sum();
            (total / bright - 2.0).abs()
        })
        .fold(0.0, f64::max);
    outcome(
        pattern <= 1e-10 && ratio_err <= 1e-10,
        format!("1:1:4 deviation {pattern:.1e}, dark/bright − 2 = {ratio_err:.1e}"),
    )
}

fn parity_selection() -> Outcome {
    let p = ModelParams::default();
    let e = enumerate_orbitals(&p, Carrier::Electron);
    let h = enumerate_orbitals(&p, Carrier::Hole);
    let mut checked = 0;
    let mut violations = 0;
    for a in &e {
        for b in &h {
            if a.parity() != b.parity() {
                checked += 1;
                if eh_overlap(a, b, &p).unwrap() != 0.0 {
                    violations += 1;
                }
            }
        }
    }
    let odd = |os: [&qdot::basis::Orbital; 4]| {
        let px: usize = os.iter().map(|o| o.nx).sum();
        let py: usize = os.iter().map(|o| o.ny).sum();
        px % 2 == 1 || py % 2 == 1
    };
    for (b1, b2) in [(&e, &e), (&h, &h), (&e, &h)] {
        for i in b1.iter() {
            for j in b2.iter() {
                for k in b1.iter() {
                    for l in b2.iter() {
                        if odd([i, j, k, l]) {
                            checked += 1;
                            if coulomb_element(i, j, k, l, &p).unwrap() != 0.0 {
                                violations += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    outcome(violations == 0, format!("{checked} parity-violating index sets, {violations} nonzero"))
}

fn ci_oracle() -> Outcome {
    let p = ModelParams {
        n_orbitals: 2,
        ..ModelParams::default()
    };
    let coarse = integrals(&p, &Resolution { gh: 16, radial: 96, angular: 32 });
    let fine = integrals(&p, &Resolution { gh: 24, radial: 192, angular: 64 });
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (sector, pairs) in [(Sector::X, 1), (Sector::XX, 2)] {
        let ci = ci_spectrum(&p, sector);
        let a = oracle_spectrum(&p, &coarse, pairs);
        let b = oracle_spectrum(&p, &fine, pairs);
        ok &= ci.len() == b.len();
        for k in 0..ci.len().min(b.len()) {
            let tol = 3.0 * (a[k] - b[k]).abs() + 1e-9;
            let err = (ci[k] - b[k]).abs();
            worst = worst.max(err / tol);
            ok &= err <= tol;
        }
    }
    let mut last = (f64::INFINITY, f64::INFINITY);
    let mut monotone = true;
    for n in 1..=6 {
        let p = ModelParams {
            n_orbitals: n,
            ..ModelParams::default()
        };
        let t = build_coulomb_table(&p).unwrap();
        let inp = CiInputs::new(&p, &t).unwrap();
        let g = |s| solve_sector(&inp, s).unwrap().multiplets[0].energy;
        let now = (g(Sector::X), g(Sector::XX));
        monotone &= now.0 <= last.0 + 1e-9 && now.1 <= last.1 + 1e-9;
        last = now;
    }
    outcome(
        ok && monotone,
        format!("worst error / tolerance {worst:.1e}, ground energies non-increasing in n: {monotone}"),
    )
}

fn level_closure() -> Outcome {
    let p = ModelParams {
        forbidden_overlap: 0.05,
        ..ModelParams::default()
    };
    let sol = solve(&p, &SolveOptions::default()).unwrap();
    let cat = transition_catalog(
        &sol,
        &CatalogOptions {
            merge_tolerance_uev: 0.0,
            min_strength: 1e-12,
        },
    )
    .unwrap();
    let line = |a: &str, b: &str| cat.iter().find(|t| t.initial == a && t.final_state == b).map(|t| t.energy);
    let t0 = "(1e²)(1h¹2h¹)_{T0}";
    let mut worst: f64 = 0.0;
    for (x11, x12) in [("(1e¹)(1h¹):B+", "(1e¹)(2h¹):B+"), ("(1e¹)(1h¹):B-", "(1e¹)(2h¹):B-")] {
        let (Some(up), Some(down), Some(v12), Some(v11)) = (line(x11, t0), line(x12, t0), line("0", x12), line("0", x11)) else {
            return outcome(false, format!("missing a line of the {x11} / {x12} loop"));
        };
        worst = worst.max((up - down - (v12 - v11)).abs());
    }
    outcome(worst <= 1e-10, format!("largest loop mismatch {worst:.1e} meV"))
}

fn spectrum_properties(sol: &Solution) -> Outcome {
    let cat = transition_catalog(sol, &CatalogOptions::default()).unwrap();
    let g = feeding_graph(sol);
    let lines = pl_lines(sol, &cat, &g, Linear::H);
    let energies: Vec<f64> = lines.iter().map(|l| l.energy).collect();
    let grid = Grid::covering(&energies, 12.0, 0.002).unwrap();
    let y = broaden_lines(&lines, &grid).unwrap();
    let area: f64 = y.iter().sum::<f64>() * grid.step;
    let total: f64 = lines.iter().map(|l| l.strength).sum();
    let area_err = (area / total - 1.0).abs();
    let fine = grid.refined();
    let z = broaden_lines(&lines, &fine).unwrap();
    let mut peak_err: f64 = 0.0;
    for i in 1..y.len() - 1 {
        if y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > 1e-3 * total {
            let hi = z[2 * i - 2..=2 * i + 2].iter().cloned().fold(0.0, f64::max);
            peak_err = peak_err.max((hi / y[i] - 1.0).abs());
        }
    }
    outcome(
        area_err <= 1e-6 && peak_err < 1e-3,
        format!("area error {area_err:.1e}, largest peak change on refinement {:.3}%", 100.0 * peak_err),
    )
}

fn fit_round_trip(sol: &Solution) -> Outcome {
    let keys = [
        "0->(1e¹)(1h¹):B+",
        "0->(2e¹)(1h¹):B+",
        "0->(1e¹)(3h¹):B+",
        "(1e¹)(1h¹):B+->(1e²)(1h²)",
        "(1e¹)(2h¹):B+->(1e²)(1h¹2h¹)_{T0}",
        "(2e¹)(1h¹):B+->(1e¹2e¹)_{T0}(1h²)",
        "(1e¹)(1h¹):B+->(1e¹2e¹)_{T}(1h¹2h¹)_{T}:tt5",
    ];
    let targets: Vec<Target> = keys
        .iter()
        .map(|k| {
            let (a, b) = k.split_once("->").unwrap();
            Target {
                line: MeasuredLine::new(sol.find(b).unwrap().energy() - sol.find(a).unwrap().energy()),
                key: k.to_string(),
            }
        })
        .collect();
    let p = ModelParams::default();
    let start = ModelParams {
        l_e_x: p.l_e_x * 1.2,
        l_h_x: p.l_h_x * 0.8,
        xi: p.xi * 1.1,
        ..p.clone()
    };
    let r = match fit_lengths(&start, &targets, &FitOptions::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let errs = [
        (r.params.l_e_x / p.l_e_x - 1.0).abs(),
        (r.params.l_h_x / p.l_h_x - 1.0).abs(),
        (r.params.xi / p.xi - 1.0).abs(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    outcome(
        worst < 0.01 && r.iterations <= 500,
        format!("worst relative error {:.4}% after {} iterations", 100.0 * worst, r.iterations),
    )
}

fn degenerate_merge() -> Outcome {
    let ground = |d1: f64| {
        let mut p = ModelParams {
            n_orbitals: 2,
            ..ModelParams::default()
        };
        for e in &mut p.delta_table {
            if (e.oe, e.oh) == (1, 1) {
                e.delta1 = Some(d1);
            }
        }
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        transition_catalog(&sol, &CatalogOptions::default())
            .unwrap()
            .into_iter()
            .filter(|t| t.initial == "0" && t.final_state.starts_with("(1e¹)(1h¹):"))
            .collect::<Vec<_>>()
    };
    let close = ground(-3.0);
    let apart = ground(-6.0);
    let merged = close.len() == 1
        && close[0].polarization == Polarization::Unpolarized
        && (close[0].strength - 2.0).abs() < 1e-12;
    let doublet = apart.len() == 2
        && apart[0].polarization == Polarization::H
        && apart[1].polarization == Polarization::V
        && apart.iter().all(|t| (t.strength - 1.0).abs() < 1e-12);
    outcome(
        merged && doublet,
        format!("3 µeV split → {} line(s), 6 µeV split → {} line(s)", close.len(), apart.len()),
    )
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut outputs = Vec::new();
    for d in &dirs {
        let mut files = Vec::new();
        for command in [Command::Levels, Command::Transitions, Command::Spectrum] {
            let mut cfg = RunConfig::new(command, d.path());
            cfg.configs = vec!["HV(H)".parse().unwrap()];
            files.extend(run(&cfg).unwrap());
        }
        outputs.push(
            files
                .iter()
                .map(|f| (f.file_name().unwrap().to_owned(), fs::read(f).unwrap()))
                .collect::<Vec<_>>(),
        );
    }
    let same = outputs[0] == outputs[1];
    outcome(same, format!("{} files compared byte for byte", outputs[0].len()))
}

fn main() {
    let sol = default_solution();
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "fine-structure anchors", fine_structure_anchors()),
        (2, "triplet-triplet closed forms", tt_closed_forms()),
        (3, "intensity patterns", intensity_patterns(&sol)),
        (4, "parity selection", parity_selection()),
        (5, "CI oracle and variational monotonicity", ci_oracle()),
        (6, "level-diagram closure", level_closure()),
        (7, "spectrum area and grid refinement", spectrum_properties(&sol)),
        (8, "fit round trip", fit_round_trip(&sol)),
        (9, "degenerate merge", degenerate_merge()),
        (10, "determinism", determinism()),
    ];
    let mut unexpected = Vec::new();
    for (n, name, o) in &results {
        let known = KNOWN_RED.iter().find(|(k, _)| k == n);
        let status = if o.pass { "PASS" } else { "FAIL" };
        match (o.pass, known) {
            (false, Some((_, why))) => println!("criterion {n:>2} {status} {name}: {} [known: {why}]", o.detail),
            (false, None) => {
                println!("criterion {n:>2} {status} {name}: {}", o.detail);
                unexpected.push(*n);
            }
            _ => println!("criterion {n:>2} {status} {name}: {}", o.detail),
        }
    }
    if !unexpected.is_empty() {
        eprintln!("criteria failed: {unexpected:?}");
        std::process::exit(1);
    }
}
