//! Independent first-quantized CI oracle for a two-orbital basis.
//!
//! Coulomb integrals come from direct real-space quadrature (Gauss–Hermite
//! over r₂, relative polar coordinates around r₂ for r₁), evaluated at two
//! resolutions whose difference is the documented discretization error.
//! The many-body matrix is assembled over explicit antisymmetrized products
//! and diagonalized with Jacobi rotations, sharing no code with the
//! second-quantized solver.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use qdot::basis::{axis_polynomial, enumerate_orbitals, Carrier, ModelParams, Orbital};
use qdot::ci::{solve_sector, CiInputs, Sector};
use qdot::coulomb::build_coulomb_table;
use qdot::linalg::jacobi_eigen;
use qdot::poly::gauss_hermite;
use qdot::units::COULOMB_CONSTANT;

pub struct Resolution {
    pub gh: usize,
    pub radial: usize,
    pub angular: usize,
}

/// Pair density ψ_a ψ_b as (poly_x, poly_y, 1/lx², 1/ly²).
fn density(a: &Orbital, b: &Orbital, p: &ModelParams) -> (qdot::poly::Poly, qdot::poly::Poly, f64, f64) {
    let (lx, ly) = p.lengths(a.carrier);
    (
        axis_polynomial(a.nx, lx).mul(&axis_polynomial(b.nx, lx)),
        axis_polynomial(a.ny, ly).mul(&axis_polynomial(b.ny, ly)),
        1.0 / (lx * lx),
        1.0 / (ly * ly),
    )
}

/// W[i][k][j][l] = ⟨ij|V|kl⟩ with i, k on `o1` and j, l on `o2`.
fn grid_integrals(o1: &[Orbital], o2: &[Orbital], p: &ModelParams, r: &Resolution) -> Vec<f64> {
    let n = o1.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |k| (i, k))).collect();
    let d1: Vec<_> = pairs.iter().map(|&(i, k)| density(&o1[i], &o1[k], p)).collect();
    let d2: Vec<_> = pairs.iter().map(|&(j, l)| density(&o2[j], &o2[l], p)).collect();
    let (l2x, l2y) = p.lengths(o2[0].carrier);
    let (l1x, _) = p.lengths(o1[0].carrier);
    let (t, w) = gauss_hermite(r.gh);
    let rmax = 12.0 * l1x.max(l2x);
    let h = rmax / r.radial as f64;
    let mut out = vec![0.0; pairs.len() * pairs.len()];
    for (ix, (&tx, &wx)) in t.iter().zip(&w).enumerate() {
        let _ = ix;
        for (&ty, &wy) in t.iter().zip(&w) {
            let (x2, y2) = (l2x * tx, l2y * ty);
            let weight = l2x * l2y * wx * wy * (tx * tx + ty * ty).exp();
            // Inner integral ∫dρ dθ ρ₁(r₂ + u) for each particle-1 density.
            let mut inner = vec![0.0; pairs.len()];
            for s in 0..=r.radial {
                let rho = s as f64 * h;
                let simpson = if s == 0 || s == r.radial {
                    1.0
                } else if s % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                for a in 0..r.angular {
                    let th = 2.0 * PI * a as f64 / r.angular as f64;
                    let (x1, y1) = (x2 + rho * th.cos(), y2 + rho * th.sin());
                    for (q, (px, py, bx, by)) in d1.iter().enumerate() {
                        inner[q] += simpson * px.eval(x1) * py.eval(y1) * (-(bx * x1 * x1 + by * y1 * y1)).exp();
                    }
                }
            }
            let scale = h / 3.0 * 2.0 * PI / r.angular as f64;
            for (q2, (px, py, bx, by)) in d2.iter().enumerate() {
                let rho2 = px.eval(x2) * py.eval(y2) * (-(bx * x2 * x2 + by * y2 * y2)).exp();
                for q1 in 0..pairs.len() {
                    out[q1 * pairs.len() + q2] += weight * rho2 * inner[q1] * scale;
                }
            }
        }
    }
    let k = COULOMB_CONSTANT / p.eps_r;
    out.iter_mut().for_each(|v| *v *= k);
    out
}

pub struct Integrals {
    n: usize,
    ee: Vec<f64>,
    hh: Vec<f64>,
    eh: Vec<f64>,
}

impl Integrals {
    fn get(v: &[f64], n: usize, i: usize, j: usize, k: usize, l: usize) -> f64 {
        v[(i * n + k) * n * n + (j * n + l)]
    }
}

/// Spin-orbital (orbital, spin).
type So = (usize, usize);

/// Many-body basis state as a combination of product states (e…, h…).
type Product = (Vec<So>, Vec<So>);

fn antisymmetrized(list: &[So]) -> Vec<(f64, Vec<So>)> {
    match list {
        [a] => vec![(1.0, vec![*a])],
        [a, b] => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            vec![(s, vec![*a, *b]), (-s, vec![*b, *a])]
        }
        _ => unreachable!(),
    }
}

fn spin_orbitals(n: usize) -> Vec<So> {
    (0..n).flat_map(|a| (0..2).map(move |s| (a, s))).collect()
}

fn basis(n: usize, k: usize) -> Vec<(Vec<So>, Vec<So>)> {
    let so = spin_orbitals(n);
    let sets: Vec<Vec<So>> = if k == 1 {
        so.iter().map(|&x| vec![x]).collect()
    } else {
        let mut v = Vec::new();
        for i in 0..so.len() {
            for j in i + 1..so.len() {
                v.push(vec![so[i], so[j]]);
            }
        }
        v
    };
    let mut out = Vec::new();
    for e in &sets {
        for h in &sets {
            out.push((e.clone(), h.clone()));
        }
    }
    out
}

fn expand(state: &(Vec<So>, Vec<So>)) -> Vec<(f64, Product)> {
    let mut out = Vec::new();
    for (ce, e) in antisymmetrized(&state.0) {
        for (ch, h) in antisymmetrized(&state.1) {
            out.push((ce * ch, (e.clone(), h.clone())));
        }
    }
    out
}

fn product_element(a: &Product, b: &Product, eps_e: &[f64], eps_h: &[f64], w: &Integrals) -> f64 {
    let n = w.n;
    let (ae, ah) = a;
    let (be, bh) = b;
    let mut v = 0.0;
    if a == b {
        v += ae.iter().map(|s| eps_e[s.0]).sum::<f64>() + ah.iter().map(|s| eps_h[s.0]).sum::<f64>();
    }
    let same = |x: &[So], y: &[So], skip: &[usize]| (0..x.len()).filter(|i| !skip.contains(i)).all(|i| x[i] == y[i]);
    if ae.len() == 2 && same(ah, bh, &[]) && ae[0].1 == be[0].1 && ae[1].1 == be[1].1 {
        v += Integrals::get(&w.ee, n, ae[0].0, ae[1].0, be[0].0, be[1].0);
    }
    if ah.len() == 2 && same(ae, be, &[]) && ah[0].1 == bh[0].1 && ah[1].1 == bh[1].1 {
        v += Integrals::get(&w.hh, n, ah[0].0, ah[1].0, bh[0].0, bh[1].0);
    }
    for i in 0..ae.len() {
        for j in 0..ah.len() {
            if same(ae, be, &[i]) && same(ah, bh, &[j]) && ae[i].1 == be[i].1 && ah[j].1 == bh[j].1 {
                v -= Integrals::get(&w.eh, n, ae[i].0, ah[j].0, be[i].0, bh[j].0);
            }
        }
    }
    v
}

pub fn oracle_spectrum(p: &ModelParams, w: &Integrals, pairs: usize) -> Vec<f64> {
    let eps_e: Vec<f64> = enumerate_orbitals(p, Carrier::Electron).iter().map(|o| o.energy).collect();
    let eps_h: Vec<f64> = enumerate_orbitals(p, Carrier::Hole).iter().map(|o| o.energy).collect();
    let states = basis(w.n, pairs);
    let expanded: Vec<_> = states.iter().map(expand).collect();
    let m = DMatrix::from_fn(states.len(), states.len(), |i, j| {
        let mut acc = 0.0;
        for (ca, a) in &expanded[i] {
            for (cb, b) in &expanded[j] {
                acc += ca * cb * product_element(a, b, &eps_e, &eps_h, w);
            }
        }
        acc
    });
    jacobi_eigen(&m).unwrap().values.as_slice().to_vec()
}

pub fn integrals(p: &ModelParams, r: &Resolution) -> Integrals {
    let e = enumerate_orbitals(p, Carrier::Electron);
    let h = enumerate_orbitals(p, Carrier::Hole);
    Integrals {
        n: p.n_orbitals,
        ee: grid_integrals(&e, &e, p, r),
        hh: grid_integrals(&h, &h, p, r),
        eh: grid_integrals(&e, &h, p, r),
    }
}

pub fn ci_spectrum(p: &ModelParams, sector: Sector) -> Vec<f64> {
    let t = build_coulomb_table(p).unwrap();
    let inp = CiInputs::new(p, &t).unwrap();
    let mut e: Vec<f64> = solve_sector(&inp, sector).unwrap().states().iter().map(|s| s.energy).collect();
    e.sort_by(f64::total_cmp);
    e
}
