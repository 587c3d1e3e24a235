#![allow(dead_code)]

use groundbound::linalg::{BlockVec, CMatrix};
use groundbound::moment::AffineEmbedding;
use groundbound::oracle::moments_from_state;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
    });
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn hermitian_blocks(rng: &mut ChaCha8Rng, sizes: &[usize], scale: f64) -> BlockVec {
    BlockVec::new(sizes.iter().map(|&n| hermitian(rng, n, scale)).collect())
}

pub fn psd_blocks(rng: &mut ChaCha8Rng, sizes: &[usize]) -> BlockVec {
    BlockVec::new(
        sizes
            .iter()
            .map(|&n| {
                let a = hermitian(rng, n, 1.0);
                &a * a.adjoint()
            })
            .collect(),
    )
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..1 << n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= nrm);
    v
}

/// Nearest point of `PSD ∩ affine` to `x0` by a log-barrier Newton method in
/// parameter space, started from the maximally mixed state. The barrier
/// weight ends at `1e15`, so the result is within `√(dim/1e15)` of the exact
/// projection.
pub fn barrier_nearest_point(emb: &AffineEmbedding, x0: &BlockVec) -> BlockVec {
    let np = emb.n_params();
    let base = emb.embed(&vec![0.0; np]).unwrap().into_blocks();
    let dirs: Vec<BlockVec> = (0..np)
        .map(|i| {
            let mut e = vec![0.0; np];
            e[i] = 1.0;
            &emb.embed(&e).unwrap().into_blocks() - &base
        })
        .collect();
    let q = DMatrix::from_fn(np, np, |i, j| dirs[i].inner(&dirs[j]));
    let shift = &base - x0;
    let r = DVector::from_fn(np, |i, _| dirs[i].inner(&shift));

    let n = emb.index_map().n_sites();
    let mut p = DVector::zeros(np);
    for s in 0..1usize << n {
        let mut psi = vec![Complex64::new(0.0, 0.0); 1 << n];
        psi[s] = Complex64::new(1.0, 0.0);
        let x = moments_from_state(&psi, n, emb.shared_map()).unwrap();
        p += DVector::from_vec(emb.extract(&x)) / (1usize << n) as f64;
    }

    let point = |p: &DVector<f64>| emb.embed(p.as_slice()).unwrap().into_blocks();
    let barrier = |x: &BlockVec| -> Option<f64> {
        let mut v = 0.0;
        for b in &x.blocks {
            let c = b.clone().cholesky()?;
            v -= 2.0 * c.l().diagonal().iter().map(|z| z.re.ln()).sum::<f64>();
        }
        Some(v)
    };
    let f = |p: &DVector<f64>| p.dot(&(&q * p)) + 2.0 * r.dot(p);
    let mut t = 1.0;
    while t <= 1e15 {
        for _ in 0..200 {
            let x = point(&p);
            let inv: Vec<CMatrix> = x
                .blocks
                .iter()
                .map(|b| b.clone().cholesky().unwrap().inverse())
                .collect();
            let xa: Vec<Vec<CMatrix>> = dirs
                .iter()
                .map(|d| inv.iter().zip(&d.blocks).map(|(w, a)| w * a).collect())
                .collect();
            let tr = |a: &[CMatrix], b: &[CMatrix]| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x * y).trace().re)
                    .sum::<f64>()
            };
            let tr1 = |a: &[CMatrix]| a.iter().map(|x| x.trace().re).sum::<f64>();
            let grad = DVector::from_fn(np, |i, _| 2.0 * t * ((&q * &p)[i] + r[i]) - tr1(&xa[i]));
            let hess = DMatrix::from_fn(np, np, |i, j| 2.0 * t * q[(i, j)] + tr(&xa[i], &xa[j]));
            let step = hess.clone().cholesky().unwrap().solve(&(-&grad));
            let decrement = -grad.dot(&step);
            if decrement < 1e-20 {
                break;
            }
            let phi0 = t * f(&p) + barrier(&x).unwrap();
            let mut s = 1.0;
            loop {
                let cand = &p + &step * s;
                if let Some(b) = barrier(&point(&cand)) {
                    if t * f(&cand) + b <= phi0 - 0.25 * s * decrement {
                        p = cand;
                        break;
                    }
                }
                s *= 0.5;
                if s < 1e-20 {
                    break;
                }
            }
            if s < 1e-20 {
                break;
            }
        }
        t *= 10.0;
    }
    point(&p)
}
