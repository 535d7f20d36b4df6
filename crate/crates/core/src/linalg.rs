//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest entrywise modulus.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Integer square root of `n` when `n` is a perfect square.
pub fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539_398_330_063_23e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

fn pade_low(a: &CMat, b: &[f64]) -> (CMat, CMat) {
    let n = a.nrows();
    let a2 = a * a;
    let mut u = CMat::zeros(n, n);
    let mut v = CMat::zeros(n, n);
    let mut p = identity(n);
    for k in (0..b.len()).step_by(2) {
        v += p.scale(b[k]);
        if k + 1 < b.len() {
            u += p.scale(b[k + 1]);
        }
        p = &p * &a2;
    }
    (a * u, v)
}

fn pade13(a: &CMat) -> (CMat, CMat) {
    let b = &PADE13;
    let n = a.nrows();
    let id = identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + id.scale(b[1]);
    let u = a * u_inner;
    let v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
        + a6.scale(b[6])
        + a4.scale(b[4])
        + a2.scale(b[2])
        + id.scale(b[0]);
    (u, v)
}

/// Matrix exponential by Padé scaling and squaring (Higham 2005).
pub fn expm(a: &CMat) -> Result<CMat> {
    if a.nrows() != a.ncols() {
        return Err(Error::dim("expm of non-square matrix"));
    }
    let n = a.nrows();
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::Integration {
            t: f64::NAN,
            reason: "non-finite generator".into(),
        });
    }
    let (mut s, (u, v)) = if norm <= THETA3 {
        (0, pade_low(a, &PADE3))
    } else if norm <= THETA5 {
        (0, pade_low(a, &PADE5))
    } else if norm <= THETA7 {
        (0, pade_low(a, &PADE7))
    } else if norm <= THETA9 {
        (0, pade_low(a, &PADE9))
    } else {
        let s = (norm / THETA13).log2().ceil().max(0.0) as i32;
        let scaled = a.scale(0.5f64.powi(s));
        (s, pade13(&scaled))
    };
    let p = &v - &u;
    let q = &v + &u;
    let mut r = p.lu().solve(&q).ok_or_else(|| Error::Integration {
        t: f64::NAN,
        reason: "singular Padé denominator".into(),
    })?;
    while s > 0 {
        r = &r * &r;
        s -= 1;
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Integration {
            t: f64::NAN,
            reason: format!("exponential overflow (n={n})"),
        });
    }
    Ok(r)
}

/// Hermitian eigendecomposition with eigenvalues ascending.
pub fn herm_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitize(a);
    let n = h.nrows();
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, idx[k])]);
    (vals, vecs)
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    herm_eig(a).0.first().copied().unwrap_or(0.0)
}

/// Largest singular value, from the top eigenvalue of `A†A`.
pub fn op_norm(a: &CMat) -> f64 {
    let g = hermitize(&(a.adjoint() * a));
    let (vals, _) = herm_eig(&g);
    vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Hilbert–Schmidt (Frobenius) norm.
pub fn hs_norm(a: &CMat) -> f64 {
    a.norm()
}

pub fn dot(a: &CVec, b: &CVec) -> C64 {
    a.dotc(b)
}

/// Right eigenvectors of a general complex matrix from its Schur form.
///
/// Returns eigenvalues and unit-norm eigenvectors as columns, unsorted.
pub fn eig_general(a: &CMat) -> Result<(Vec<C64>, CMat)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::dim("eigendecomposition of non-square matrix"));
    }
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let triangular = (0..n).all(|j| ((j + 1)..n).all(|i| a[(i, j)] == C64::new(0.0, 0.0)));
    // Already-triangular input (including zero) stalls the QR sweep.
    let (q, t) = if triangular {
        (identity(n), a.clone())
    } else {
        Schur::try_new(a.clone(), f64::EPSILON, 10_000 * n.max(1))
            .ok_or_else(|| Error::NumericalConsistency {
                quantity: "schur iterations".into(),
                value: n as f64,
            })?
            .unpack()
    };
    let lambdas: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let small = f64::EPSILON * scale;
    let mut y = CMat::zeros(n, n);
    for k in 0..n {
        let lk = lambdas[k];
        y[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for m in (j + 1)..=k {
                s += t[(j, m)] * y[(m, k)];
            }
            let mut den = t[(j, j)] - lk;
            if den.norm() < small {
                den = C64::new(small, 0.0);
            }
            y[(j, k)] = -s / den;
        }
    }
    let mut r = q * y;
    for k in 0..n {
        let nrm = r.column(k).norm();
        if nrm > 0.0 {
            r.column_mut(k).unscale_mut(nrm);
        }
    }
    Ok((lambdas, r))
}

/// Composite Simpson rule on a uniform grid with an odd number of samples.
pub fn simpson(values: &[f64], h: f64) -> Result<f64> {
    let n = values.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::Quadrature(format!(
            "Simpson needs an odd number of at least 3 points, got {n}"
        )));
    }
    let mut acc = values[0] + values[n - 1];
    for (k, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(acc * h / 3.0)
}

/// Running integral of samples on a uniform grid.
///
/// Even nodes use Simpson; odd nodes add a one-interval correction
/// `h/12 (5 f_{k-1} + 8 f_k - f_{k+1})` on top of the preceding Simpson panel.
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (values[0] + values[1]);
        return out;
    }
    let mut k = 2;
    while k < n {
        out[k] = out[k - 2] + h / 3.0 * (values[k - 2] + 4.0 * values[k - 1] + values[k]);
        k += 2;
    }
    let mut k = 1;
    while k < n {
        out[k] = if k + 1 < n {
            out[k - 1] + h / 12.0 * (5.0 * values[k - 1] + 8.0 * values[k] - values[k + 1])
        } else {
            out[k - 1] + h / 12.0 * (-values[k - 2] + 8.0 * values[k - 1] + 5.0 * values[k])
        };
        k += 2;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_expm(a: &CMat) -> CMat {
        // Oracle: plain Taylor series with repeated squaring.
        let s = 10;
        let b = a.scale(0.5f64.powi(s));
        let n = a.nrows();
        let mut term = identity(n);
        let mut acc = identity(n);
        for k in 1..40 {
            term = &term * &b / C64::new(k as f64, 0.0);
            acc += &term;
        }
        for _ in 0..s {
            acc = &acc * &acc;
        }
        acc
    }

    fn sample(n: usize, scale: f64) -> CMat {
        CMat::from_fn(n, n, |i, j| {
            let x = ((i * 7 + j * 13 + 3) as f64).sin();
            let y = ((i * 5 + j * 11 + 1) as f64).cos();
            c(x * scale, y * scale)
        })
    }

    #[test]
    fn expm_matches_taylor_across_pade_orders() {
        for &scale in &[1e-3, 0.05, 0.2, 0.5, 1.0, 3.0] {
            let a = sample(4, scale);
            let e = expm(&a).unwrap();
            let o = taylor_expm(&a);
            assert!(max_abs(&(&e - &o)) < 1e-12 * max_abs(&o).max(1.0), "scale {scale}");
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 0.7;
        let a = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(-t, 0.0), c(t, 0.0), c(0.0, 0.0)]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-15);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-15);
    }

    #[test]
    fn eig_general_recovers_eigenpairs() {
        let a = sample(5, 1.0);
        let (l, r) = eig_general(&a).unwrap();
        for k in 0..5 {
            let res = &a * r.column(k) - r.column(k) * l[k];
            assert!(res.norm() < 1e-12);
        }
    }

    #[test]
    fn herm_eig_sorted_and_orthonormal() {
        let a = sample(4, 1.0);
        let h = hermitize(&a);
        let (vals, vecs) = herm_eig(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let g = vecs.adjoint() * &vecs;
        assert!(max_abs(&(g - identity(4))) < 1e-12);
        let rec = &vecs * CMat::from_diagonal(&CVec::from_iterator(4, vals.iter().map(|&v| c(v, 0.0)))) * vecs.adjoint();
        assert!(max_abs(&(rec - h)) < 1e-12);
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let h = 0.1;
        let vals: Vec<f64> = (0..11).map(|k| (k as f64 * h).powi(3)).collect();
        assert!((simpson(&vals, h).unwrap() - 0.25).abs() < 1e-14);
        assert!(simpson(&vals[..10], h).is_err());
        let cum = cumulative_simpson(&vals, h);
        for (k, v) in cum.iter().enumerate() {
            let x = k as f64 * h;
            let tol = if k % 2 == 0 { 1e-14 } else { 1e-4 };
            assert!((v - x.powi(4) / 4.0).abs() < tol, "node {k}");
        }
    }

    #[test]
    fn op_norm_dominates_nothing_above_hs() {
        let a = sample(4, 1.0);
        assert!(op_norm(&a) <= hs_norm(&a) + 1e-14);
    }
}
