use std::collections::BTreeSet;
use std::f64::consts::PI;

use qdot::basis::{axis_function, enumerate_orbitals, Carrier, ModelParams, Orbital};
use qdot::coulomb::{build_coulomb_table, coulomb_element, load_or_build, CoulombTable, PairKind};
use qdot::units::COULOMB_CONSTANT;
use qdot::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn orbitals(p: &ModelParams) -> (Vec<Orbital>, Vec<Orbital>) {
    (enumerate_orbitals(p, Carrier::Electron), enumerate_orbitals(p, Carrier::Hole))
}

fn psi(o: &Orbital, p: &ModelParams, x: f64, y: f64) -> f64 {
    let (lx, ly) = p.lengths(o.carrier);
    axis_function(o.nx, lx, x) * axis_function(o.ny, ly, y)
}

/// Monte Carlo estimate of ⟨ij|V|kl⟩ in relative polar coordinates
/// u = r₁ − r₂, where the Jacobian ρ cancels the 1/|u| singularity.
fn monte_carlo(i: &Orbital, j: &Orbital, k: &Orbital, l: &Orbital, p: &ModelParams, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (l2x, l2y) = p.lengths(j.carrier);
    let (l1x, _) = p.lengths(i.carrier);
    let wx = Normal::new(0.0, l2x).unwrap();
    let wy = Normal::new(0.0, l2y).unwrap();
    let rho_scale = (l1x * l1x + l2x * l2x).sqrt();
    let rho_dist = Normal::new(0.0, rho_scale).unwrap();
    let gauss_pdf = |v: f64, s: f64| (-0.5 * v * v / (s * s)).exp() / (s * (2.0 * PI).sqrt());
    let k_eff = COULOMB_CONSTANT / p.eps_r;
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let x2 = wx.sample(&mut rng);
        let y2 = wy.sample(&mut rng);
        let rho: f64 = rho_dist.sample(&mut rng).abs();
        let theta = rng.random::<f64>() * 2.0 * PI;
        let x1 = x2 + rho * theta.cos();
        let y1 = y2 + rho * theta.sin();
        let f = psi(i, p, x1, y1) * psi(k, p, x1, y1) * psi(j, p, x2, y2) * psi(l, p, x2, y2);
        let pdf = gauss_pdf(x2, l2x) * gauss_pdf(y2, l2y) * 2.0 * gauss_pdf(rho, rho_scale) / (2.0 * PI);
        let v = k_eff * f / pdf;
        sum += v;
        sum2 += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

#[test]
fn isotropic_ground_state_matches_closed_form() {
    let p = ModelParams {
        xi: 1.0,
        ..ModelParams::default()
    };
    let (e, h) = orbitals(&p);
    let k = COULOMB_CONSTANT / p.eps_r;
    let cases = [
        (e[0], e[0], p.l_e_x, p.l_e_x),
        (h[0], h[0], p.l_h_x, p.l_h_x),
        (e[0], h[0], p.l_e_x, p.l_h_x),
    ];
    for (a, b, l1, l2) in cases {
        let v = coulomb_element(&a, &b, &a, &b, &p).unwrap();
        let closed = k * PI.sqrt() / (l1 * l1 + l2 * l2).sqrt();
        assert!((v - closed).abs() < 1e-12 * closed, "{v} vs {closed}");
    }
}

#[test]
fn monte_carlo_oracle_agrees_within_three_sigma() {
    let p = ModelParams::default();
    let (e, h) = orbitals(&p);
    let cases = [
        (e[0], e[0], e[0], e[0]),
        (e[0], h[0], e[0], h[0]),
        (h[1], h[0], h[1], h[0]),
        (h[1], h[0], h[0], h[1]),
        (e[0], h[5], e[0], h[5]),
        (e[3], h[0], e[0], h[0]),
        (e[1], e[2], e[2], e[1]),
    ];
    for (n, (i, j, k, l)) in cases.iter().enumerate() {
        let exact = coulomb_element(i, j, k, l, &p).unwrap();
        let (mc, sigma) = monte_carlo(i, j, k, l, &p, 10_000_000, 17 + n as u64);
        assert!(sigma < 5e-3 * exact.abs(), "case {n}: oracle too noisy to discriminate");
        assert!(
            (exact - mc).abs() < 3.0 * sigma,
            "case {n}: analytic {exact} vs MC {mc} ± {sigma}"
        );
    }
}

#[test]
fn table_honours_every_stated_symmetry() {
    let p = ModelParams {
        n_orbitals: 4,
        ..ModelParams::default()
    };
    let t = build_coulomb_table(&p).unwrap();
    let (e, h) = orbitals(&p);
    let n = p.n_orbitals;
    for kind in PairKind::ALL {
        let (b1, b2) = match kind {
            PairKind::ElectronElectron => (&e, &e),
            PairKind::HoleHole => (&h, &h),
            PairKind::ElectronHole => (&e, &h),
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let direct = coulomb_element(&b1[i], &b2[j], &b1[k], &b2[l], &p).unwrap();
                        let v = t.get(kind, i, j, k, l);
                        assert!((v - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
                        assert!((v - t.get(kind, k, l, i, j)).abs() <= 1e-12 * (1.0 + v.abs()));
                        if kind != PairKind::ElectronHole {
                            assert!((v - t.get(kind, j, i, l, k)).abs() <= 1e-12 * (1.0 + v.abs()));
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!(t.get(kind, i, j, i, j) > 0.0);
                if kind != PairKind::ElectronHole {
                    assert!(t.get(kind, i, j, j, i) >= 0.0);
                }
            }
        }
    }
}

#[test]
fn elements_scale_inversely_with_length() {
    let p = ModelParams::default();
    let c = 1.7;
    let q = ModelParams {
        l_e_x: p.l_e_x * c,
        l_h_x: p.l_h_x * c,
        ..p.clone()
    };
    let a = build_coulomb_table(&p).unwrap();
    let b = build_coulomb_table(&q).unwrap();
    for kind in PairKind::ALL {
        for (i, j, k, l) in qdot::coulomb::symmetry_classes(kind, 6) {
            let (x, y) = (a.get(kind, i, j, k, l), b.get(kind, i, j, k, l));
            assert!((x / c - y).abs() <= 1e-6 * x.abs().max(1e-12), "{kind} {i}{j}{k}{l}: {x} {y}");
        }
    }
}

/// Orbits of the symmetry group acting on 4-tuples, found by closure under generators.
fn brute_force_class_count(kind: PairKind, n: usize) -> usize {
    let mut seen = BTreeSet::new();
    let mut classes = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    if seen.contains(&(i, j, k, l)) {
                        continue;
                    }
                    classes += 1;
                    let mut stack = vec![(i, j, k, l)];
                    while let Some(t @ (a, b, c, d)) = stack.pop() {
                        if !seen.insert(t) {
                            continue;
                        }
                        stack.push((c, b, a, d));
                        stack.push((a, d, c, b));
                        if kind != PairKind::ElectronHole {
                            stack.push((b, a, d, c));
                        }
                    }
                }
            }
        }
    }
    classes
}

#[test]
fn class_count_matches_brute_force_enumeration() {
    for n in 1..=6 {
        let p = ModelParams {
            n_orbitals: n,
            ..ModelParams::default()
        };
        let t = build_coulomb_table(&p).unwrap();
        let brute: usize = PairKind::ALL.iter().map(|&k| brute_force_class_count(k, n)).sum();
        assert_eq!(t.class_count(), brute);
    }
    let one = ModelParams {
        n_orbitals: 1,
        ..ModelParams::default()
    };
    assert_eq!(build_coulomb_table(&one).unwrap().class_count(), 3);
}

#[test]
fn build_is_deterministic_and_csv_round_trips() {
    let p = ModelParams::default();
    let a = build_coulomb_table(&p).unwrap();
    let b = build_coulomb_table(&p).unwrap();
    let (mut ba, mut bb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ba).unwrap();
    b.write_csv(&mut bb).unwrap();
    assert_eq!(a.params_fingerprint, b.params_fingerprint);
    assert_eq!(ba, bb);
    let back = CoulombTable::read_csv(&ba[..]).unwrap();
    assert_eq!(back, a);
}

#[test]
fn cache_is_rebuilt_on_param_change() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("coulomb.csv");
    let p = ModelParams::default();
    let t = load_or_build(&path, &p).unwrap();
    assert_eq!(t, load_or_build(&path, &p).unwrap());
    let q = ModelParams {
        l_e_x: 70.0,
        ..p.clone()
    };
    assert!(matches!(CoulombTable::load(&path, &q), Err(Error::Stale { .. })));
    let t2 = load_or_build(&path, &q).unwrap();
    assert_eq!(t2.params_fingerprint, q.fingerprint());
}

#[test]
fn mismatched_carriers_are_rejected() {
    let p = ModelParams::default();
    let (e, h) = orbitals(&p);
    assert!(matches!(coulomb_element(&e[0], &h[0], &h[0], &h[0], &p), Err(Error::Domain(_))));
}
