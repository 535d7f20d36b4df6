//! Seeded random matrices, states and generators for trial suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lindblad::{Jump, LindbladSpec};
use crate::liouville::DensityMatrix;
use crate::linalg::{self, c, CMat, CVec};

pub type TrialRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` derived from `seed`, stable across thread schedules.
pub fn stream(seed: u64, index: u64) -> TrialRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

fn normal<R: Rng + ?Sized>(r: &mut R) -> f64 {
    r.sample(StandardNormal)
}

/// Complex Ginibre matrix with unit-variance entries.
pub fn ginibre<R: Rng + ?Sized>(r: &mut R, rows: usize, cols: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| c(s * normal(r), s * normal(r)))
}

pub fn hermitian<R: Rng + ?Sized>(r: &mut R, d: usize) -> CMat {
    linalg::hermitize(&ginibre(r, d, d))
}

pub fn unitary<R: Rng + ?Sized>(r: &mut R, d: usize) -> CMat {
    let qr = ginibre(r, d, d).qr();
    let (q, rr) = qr.unpack();
    // Fix column phases so the distribution is Haar.
    let mut q = q;
    for k in 0..d {
        let z = rr[(k, k)];
        let ph = if z.norm() > 0.0 { z / z.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(k);
        col *= ph;
    }
    q
}

pub fn pure_state<R: Rng + ?Sized>(r: &mut R, d: usize) -> CVec {
    let v = CVec::from_fn(d, |_, _| c(normal(r), normal(r)));
    let n = v.norm();
    v.unscale(n)
}

/// Full-rank mixed state `GG†/tr(GG†)`.
pub fn density<R: Rng + ?Sized>(r: &mut R, d: usize) -> DensityMatrix {
    let g = ginibre(r, d, d);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_unchecked(linalg::hermitize(&m.unscale(tr)))
}

/// Random time-independent Lindblad generator with `jumps` channels.
///
/// Rates are drawn from `[0.1, 1) * rate_scale`; `h_scale` scales the Hamiltonian.
pub fn lindblad_spec<R: Rng + ?Sized>(
    r: &mut R,
    d: usize,
    jumps: usize,
    h_scale: f64,
    rate_scale: f64,
) -> LindbladSpec {
    let h = hermitian(r, d).scale(h_scale);
    let js = (0..jumps)
        .map(|_| {
            let rate = rate_scale * r.random_range(0.1..1.0);
            let op = ginibre(r, d, d).unscale((d as f64).sqrt());
            Jump::new(rate, op)
        })
        .collect();
    LindbladSpec::new(h, js).expect("random spec is valid by construction")
}
