//! Dense symmetric eigensolvers.
//!
//! Small matrices (spin Hamiltonians) use cyclic Jacobi rotations, which are
//! unconditionally stable and give orthonormal vectors to machine precision.
//! The larger CI blocks go through nalgebra's tridiagonal QR solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs sorted by ascending eigenvalue; eigenvectors are columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

const MAX_SWEEPS: usize = 100;

pub fn jacobi_eigen(a: &DMatrix<f64>) -> Result<Eigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Domain("eigensolver needs a square matrix".into()));
    }
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::numeric(
            "jacobi eigensolver",
            format!("no convergence after {MAX_SWEEPS} sweeps (n = {n})"),
        ));
    }
    Ok(sorted(m.diagonal(), v))
}

pub fn dense_eigen(a: &DMatrix<f64>) -> Result<Eigen> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Eigen {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let se = SymmetricEigen::try_new(a.clone(), 1e-15, 10_000).ok_or_else(|| {
        Error::numeric("symmetric eigensolver", format!("no convergence (n = {n})"))
    })?;
    Ok(sorted(se.eigenvalues, se.eigenvectors))
}

fn sorted(values: DVector<f64>, vectors: DMatrix<f64>) -> Eigen {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| values[i]));
    let mut vecs = DMatrix::zeros(vectors.nrows(), n);
    for (c, &i) in idx.iter().enumerate() {
        let mut col = vectors.column(i).into_owned();
        // Deterministic sign: largest-magnitude component positive.
        let k = col.iamax();
        if col[k] < 0.0 {
            col.neg_mut();
        }
        vecs.set_column(c, &col);
    }
    Eigen {
        values: vals,
        vectors: vecs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            (1.0 + a * 0.7 + b * 1.3).sin() + if i == j { i as f64 } else { 0.0 }
        })
    }

    #[test]
    fn jacobi_matches_dense_solver() {
        let a = sample(9);
        let j = jacobi_eigen(&a).unwrap();
        let d = dense_eigen(&a).unwrap();
        for k in 0..9 {
            assert!((j.values[k] - d.values[k]).abs() < 1e-12);
            let r = &a * j.vectors.column(k) - j.vectors.column(k) * j.values[k];
            assert!(r.norm() < 1e-12 * a.norm());
        }
        let vtv = j.vectors.transpose() * &j.vectors;
        assert!((vtv - DMatrix::identity(9, 9)).norm() < 1e-13);
    }

    #[test]
    fn diagonal_input_is_returned_sorted() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0]));
        let e = jacobi_eigen(&a).unwrap();
        assert_eq!(e.values.as_slice(), &[-1.0, 2.0, 3.0]);
    }
}
