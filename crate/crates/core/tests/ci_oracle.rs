mod common;

use common::oracle::{ci_spectrum, integrals, oracle_spectrum, Resolution};
use qdot::basis::ModelParams;
use qdot::ci::Sector;

#[test]
fn two_orbital_ci_matches_first_quantized_grid_oracle() {
    let p = ModelParams {
        n_orbitals: 2,
        ..ModelParams::default()
    };
    let coarse = integrals(&p, &Resolution { gh: 16, radial: 96, angular: 32 });
    let fine = integrals(&p, &Resolution { gh: 24, radial: 192, angular: 64 });
    for (sector, pairs, size) in [(Sector::X, 1, 16), (Sector::XX, 2, 36)] {
        let ci = ci_spectrum(&p, sector);
        let a = oracle_spectrum(&p, &coarse, pairs);
        let b = oracle_spectrum(&p, &fine, pairs);
        assert_eq!(ci.len(), size);
        assert_eq!(b.len(), size);
        for k in 0..size {
            let disc = (a[k] - b[k]).abs();
            let tol = 3.0 * disc + 1e-9;
            assert!(
                (ci[k] - b[k]).abs() <= tol,
                "{sector} level {k}: CI {} vs oracle {} (discretization {disc:.2e})",
                ci[k],
                b[k]
            );
        }
    }
}
