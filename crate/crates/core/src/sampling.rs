//! Initial cloud generators: seeded uniform random, cell-center grids, and
//! Halton sequences. All three are deterministic functions of their full
//! argument list.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{AxisBox, PointCloud};

/// `n` i.i.d. uniform points in the box, reproducible per seed. Coordinates
/// are drawn point by point, axis by axis, so the stream layout is part of
/// the output contract.
pub fn uniform_random(domain: &AxisBox, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::invalid("uniform_random: n must be ≥ 1"));
    }
    let d = domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        for c in 0..d {
            data.push(rng.gen_range(domain.lower()[c]..domain.upper()[c]));
        }
    }
    PointCloud::new(d, data)
}

/// Tensor-product grid with `counts[c]` cells per axis, one point per cell
/// center, so exactly `∏ counts` points and none on the box boundary. The
/// last axis varies fastest.
pub fn grid(domain: &AxisBox, counts: &[usize]) -> Result<PointCloud> {
    let d = domain.dim();
    if counts.len() != d {
        return Err(Error::dim(format!(
            "grid: {} axis counts for a {d}-dimensional box",
            counts.len()
        )));
    }
    if counts.contains(&0) {
        return Err(Error::invalid("grid: every axis count must be ≥ 1"));
    }
    let n: usize = counts.iter().product();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let mut rest = i;
        let mut idx = vec![0usize; d];
        for c in (0..d).rev() {
            idx[c] = rest % counts[c];
            rest /= counts[c];
        }
        for c in 0..d {
            let width = domain.upper()[c] - domain.lower()[c];
            data.push(domain.lower()[c] + (idx[c] as f64 + 0.5) * width / counts[c] as f64);
        }
    }
    PointCloud::new(d, data)
}

const HALTON_PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut place = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        place /= b;
        r += place * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton sequence points, bases the first `d` primes, sequence indices
/// `skip+1 ..= skip+n`, affinely mapped into the box. All points lie strictly
/// inside.
pub fn halton(domain: &AxisBox, n: usize, skip: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::invalid("halton: n must be ≥ 1"));
    }
    let d = domain.dim();
    if d > HALTON_PRIMES.len() {
        return Err(Error::invalid(format!(
            "halton: dimension {d} exceeds the supported maximum {}",
            HALTON_PRIMES.len()
        )));
    }
    let mut data = Vec::with_capacity(n * d);
    for k in 0..n as u64 {
        let index = skip + k + 1;
        for (c, &prime) in HALTON_PRIMES.iter().enumerate().take(d) {
            let t = radical_inverse(index, prime);
            let width = domain.upper()[c] - domain.lower()[c];
            data.push(domain.lower()[c] + t * width);
        }
    }
    PointCloud::new(d, data)
}
