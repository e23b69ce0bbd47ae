//! Eigenvalue moduli of small complex matrices through their characteristic
//! polynomials.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ComplexMatrix;

/// Monic characteristic polynomial `det(x I - M)`, lowest coefficient first
/// and the leading 1 omitted: `x^n + c[n-1] x^(n-1) + ... + c[0]`.
pub fn characteristic_polynomial(m: &ComplexMatrix) -> Vec<Complex64> {
    let n = m.rows();
    assert_eq!(
        n,
        m.cols(),
        "characteristic polynomial of a non-square matrix"
    );
    match n {
        0 => vec![],
        1 => vec![-m[(0, 0)]],
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            vec![det, -tr]
        }
        3 => {
            let e = |i: usize, j: usize| m[(i, j)];
            let tr = e(0, 0) + e(1, 1) + e(2, 2);
            let minors = e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0) + e(0, 0) * e(2, 2)
                - e(0, 2) * e(2, 0)
                + e(1, 1) * e(2, 2)
                - e(1, 2) * e(2, 1);
            let det = e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
            vec![-det, minors, -tr]
        }
        _ => faddeev_leverrier(m),
    }
}

fn faddeev_leverrier(m: &ComplexMatrix) -> Vec<Complex64> {
    let n = m.rows();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut mk = *m;
    for k in 1..=n {
        let ck = -mk.trace() / k as f64;
        c[n - k] = ck;
        if k < n {
            let shifted = mk.add(&ComplexMatrix::identity(n).scale(ck));
            mk = m.mul(&shifted);
        }
    }
    c
}

fn horner(c: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    // Monic: p = x^n + ..., returns (p(x), p'(x)).
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for ck in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + ck;
    }
    (p, dp)
}

fn polish(c: &[Complex64], mut x: Complex64) -> Complex64 {
    for _ in 0..3 {
        let (p, dp) = horner(c, x);
        if dp.norm() == 0.0 || !p.is_finite() {
            break;
        }
        let step = p / dp;
        let next = x - step;
        // Near multiple roots Newton can wander; only accept improvements.
        if horner(c, next).0.norm() <= p.norm() {
            x = next;
        } else {
            break;
        }
    }
    x
}

/// Roots of `x^2 + c1 x + c0` without cancellation.
fn quadratic_roots(c0: Complex64, c1: Complex64) -> [Complex64; 2] {
    let disc = (c1 * c1 - 4.0 * c0).sqrt();
    let (qa, qb) = (-(c1 + disc) * 0.5, -(c1 - disc) * 0.5);
    let q = if qa.norm() >= qb.norm() { qa } else { qb };
    if q.norm() == 0.0 {
        return [q, q];
    }
    [q, c0 / q]
}

/// Cardano on the depressed cubic, each root polished by Newton.
fn cubic_roots(c: &[Complex64]) -> [Complex64; 3] {
    let (c0, c1, c2) = (c[0], c[1], c[2]);
    let shift = c2 / 3.0;
    let p = c1 - c2 * shift;
    let q = c2 * c2 * c2 * (2.0 / 27.0) - c2 * c1 / 3.0 + c0;
    let disc = (q * q * 0.25 + p * p * p / 27.0).sqrt();
    let (ua, ub) = (-q * 0.5 + disc, -q * 0.5 - disc);
    let u3 = if ua.norm() >= ub.norm() { ua } else { ub };
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut roots = [Complex64::new(0.0, 0.0); 3];
    if u3.norm() == 0.0 {
        // p = q = 0: triple root.
        roots = [-shift; 3];
    } else {
        let mut u = u3.cbrt();
        for root in roots.iter_mut() {
            *root = u - p / (3.0 * u) - shift;
            u *= omega;
        }
    }
    roots.map(|x| polish(c, x))
}

/// Eigenvalues of the companion matrix by Schur decomposition.
fn companion_roots(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len();
    let mut comp = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        comp[(i, n - 1)] = -c[i];
    }
    let schur = nalgebra::Schur::new(comp);
    let (_, t) = schur.unpack();
    (0..n).map(|i| polish(c, t[(i, i)])).collect()
}

/// All eigenvalues of `m` (with multiplicity).
pub fn eigenvalues(m: &ComplexMatrix) -> Vec<Complex64> {
    let c = characteristic_polynomial(m);
    match c.len() {
        0 => vec![],
        1 => vec![-c[0]],
        2 => quadratic_roots(c[0], c[1]).to_vec(),
        3 => cubic_roots(&c).to_vec(),
        _ => companion_roots(&c),
    }
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    match n {
        0 => 0.0,
        1 => m[(0, 0)].norm(),
        2 => {
            let c = characteristic_polynomial(m);
            let [a, b] = quadratic_roots(c[0], c[1]);
            a.norm().max(b.norm())
        }
        3 => {
            let c = characteristic_polynomial(m);
            cubic_roots(&c).iter().fold(0.0, |acc, x| acc.max(x.norm()))
        }
        _ => eigenvalues(m).iter().fold(0.0, |acc, x| acc.max(x.norm())),
    }
}
