//! Dense univariate polynomials and the Gaussian-moment helpers used by the
//! analytic overlap and Coulomb integrals.

use std::f64::consts::PI;

/// Polynomial with coefficients in ascending power order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// Substitutes `x -> x / l`.
    pub fn rescale(&self, l: f64) -> Poly {
        let mut f = 1.0;
        Poly(
            self.0
                .iter()
                .map(|c| {
                    let v = c * f;
                    f /= l;
                    v
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    /// ∫ p(x) e^{-βx²} dx over the real line.
    pub fn gaussian_integral(&self, beta: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(k, c)| c * gaussian_moment(k, beta))
            .sum()
    }
}

/// Physicists' Hermite polynomial H_n as coefficients in its argument.
pub fn hermite(n: usize) -> Poly {
    let mut prev = vec![1.0];
    if n == 0 {
        return Poly(prev);
    }
    let mut cur = vec![0.0, 2.0];
    for k in 1..n {
        // H_{k+1} = 2t H_k - 2k H_{k-1}
        let mut next = vec![0.0; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= 2.0 * k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    Poly(cur)
}

/// H_n(t) by the three-term recurrence.
pub fn hermite_value(n: usize, t: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * t);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * t * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Γ(k/2) for positive integer k.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k > 0, "gamma_half requires k > 0");
    if k % 2 == 0 {
        factorial(k / 2 - 1)
    } else {
        // Γ(m + 1/2) = (2m)! √π / (4^m m!)
        let m = (k - 1) / 2;
        let mut g = PI.sqrt();
        for j in 0..m {
            g *= j as f64 + 0.5;
        }
        g
    }
}

/// ∫ x^k e^{-βx²} dx over the real line; exactly zero for odd k.
pub fn gaussian_moment(k: usize, beta: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    gamma_half(k + 1) * beta.powf(-((k + 1) as f64) / 2.0)
}

/// Gauss–Hermite nodes and weights for ∫ f(x) e^{-x²} dx.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_low_orders() {
        assert_eq!(hermite(0).0, vec![1.0]);
        assert_eq!(hermite(1).0, vec![0.0, 2.0]);
        assert_eq!(hermite(2).0, vec![-2.0, 0.0, 4.0]);
        assert_eq!(hermite(3).0, vec![0.0, -12.0, 0.0, 8.0]);
        for n in 0..6 {
            for &t in &[-1.3, 0.0, 0.4, 2.1] {
                let a = hermite(n).eval(t);
                let b = hermite_value(n, t);
                assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn gamma_half_values() {
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half(3) - PI.sqrt() / 2.0).abs() < 1e-15);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(2), 1.0);
        assert_eq!(gamma_half(8), 6.0);
    }

    #[test]
    fn gauss_hermite_integrates_moments() {
        let (x, w) = gauss_hermite(32);
        for k in 0..20 {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            let exact = gaussian_moment(k, 1.0);
            assert!((q - exact).abs() < 1e-11 * (1.0 + exact.abs()), "k={k}: {q} vs {exact}");
        }
    }
}
