//! Complex-vector primitives: unitary DFT, inner products, Haar sampling,
//! and deterministic RNG stream derivation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Unitary DFT of `taps` zero-padded to `n` points:
/// `X(r) = (1/sqrt(n)) * sum_k x[k] exp(-j 2 pi r k / n)`.
///
/// Direct evaluation; every `n` in this crate is a handful of tones, so an
/// FFT would buy nothing.
pub fn dft_unitary(taps: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    if n < taps.len() {
        return Err(Error::DimensionMismatch(format!(
            "DFT length {n} shorter than input length {}",
            taps.len()
        )));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok((0..n)
        .map(|r| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &x) in taps.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * ((r * k) % n) as f64 / n as f64;
                acc += x * Complex64::from_polar(1.0, angle);
            }
            acc * scale
        })
        .collect())
}

/// Hermitian inner product `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    norm_sq(v).sqrt()
}

/// `v / ||v||`; errors on (numerically) zero input.
pub fn normalized(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = norm(v);
    if n < 1e-300 || !n.is_finite() {
        return Err(Error::DegenerateChannel(
            "cannot normalize a zero-norm vector".into(),
        ));
    }
    Ok(v.iter().map(|z| z / n).collect())
}

/// Element-wise `conj(u) ∘ v`, the vector coupling one receive projection
/// to one transmit direction on a diagonal channel.
pub fn hadamard_conj(u: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a.conj() * b).collect()
}

/// One draw from the circularly symmetric unit-variance complex Gaussian.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-uniform unit vector in `C^l` (normalized complex Gaussian).
pub fn haar_unit_vector<R: Rng + ?Sized>(l: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..l).map(|_| complex_gaussian(rng)).collect();
        let n = norm(&v);
        if n > 1e-6 {
            return v.iter().map(|z| z / n).collect();
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent, reproducible RNG stream from a master seed and a
/// list of tags (trial index, resample attempt, ...). Same inputs, same
/// stream, on every platform.
pub fn derive_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = seed;
    let mut acc = splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        acc ^= splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    let mut z = acc;
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut z).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Mix a master seed with tags into a single derived seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut state = seed;
    let mut acc = splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        acc ^= splitmix64(&mut state);
    }
    acc
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "slope fit needs at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_has_flat_spectrum() {
        let taps = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let f = dft_unitary(&taps, 3).unwrap();
        let expect = 1.0 / 3.0_f64.sqrt();
        for z in &f {
            assert!((z - Complex64::new(expect, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn pure_delay_has_unit_magnitude_spectrum() {
        let taps = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let f = dft_unitary(&taps, 3).unwrap();
        let mag = 1.0 / 3.0_f64.sqrt();
        for (r, z) in f.iter().enumerate() {
            assert!((z.norm() - mag).abs() < 1e-15);
            let expect = Complex64::from_polar(
                mag,
                -2.0 * std::f64::consts::PI * r as f64 / 3.0,
            );
            assert!((z - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn dft_preserves_energy() {
        let mut rng = derive_rng(11, &[0]);
        let taps: Vec<Complex64> = (0..3).map(|_| complex_gaussian(&mut rng)).collect();
        let f = dft_unitary(&taps, 5).unwrap();
        assert!((norm_sq(&f) - norm_sq(&taps)).abs() < 1e-12 * norm_sq(&taps));
    }

    #[test]
    fn dft_rejects_short_output() {
        let taps = vec![Complex64::new(1.0, 0.0); 4];
        assert!(matches!(
            dft_unitary(&taps, 3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn derived_streams_differ_per_tag() {
        let mut a = derive_rng(1, &[0]);
        let mut b = derive_rng(1, &[1]);
        let xa: u64 = a.random();
        let xb: u64 = b.random();
        assert_ne!(xa, xb);

        let mut a2 = derive_rng(1, &[0]);
        let xa2: u64 = a2.random();
        assert_eq!(xa, xa2);
    }

    #[test]
    fn slope_of_straight_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        assert!((least_squares_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }
}
