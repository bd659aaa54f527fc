// temporary calibration harness; not part of the deliverable
use ialign::codebook::{codebook_stats, design_codebook, target_sin_delta};
use std::time::Instant;

#[test]
#[ignore]
fn calibrate_small_covering_tails() {
    for bits in [4u32, 6, 8, 10] {
        for seed in [1u64, 2, 3, 7, 42] {
            let t0 = Instant::now();
            let cb = design_codebook(2, bits, seed).unwrap();
            let build = t0.elapsed();
            let t1 = Instant::now();
            let (_, covering) = codebook_stats(&cb, 100_000, 999).unwrap();
            let stats = t1.elapsed();
            let bound = target_sin_delta(2, bits);
            println!(
                "bits={bits} seed={seed}: {} codewords, covering {covering:.5} = {:.3}x bound, build {build:?}, stats {stats:?}",
                cb.len(),
                covering / bound
            );
        }
    }
}

#[test]
#[ignore]
fn calibrate_mid_books() {
    for bits in [14u32, 17] {
        let t0 = Instant::now();
        let cb = design_codebook(2, bits, 7).unwrap();
        let build = t0.elapsed();
        let bound = target_sin_delta(2, bits);
        println!(
            "bits={bits}: {} codewords, covering {:.6} = {:.3}x bound, coherence {:.6}, build {build:?}",
            cb.len(),
            cb.covering_estimate(),
            cb.covering_estimate() / bound,
            cb.coherence()
        );
    }
}

#[test]
#[ignore]
fn calibrate_big_book() {
    for bits in [20u32, 24] {
        let t0 = Instant::now();
        let cb = design_codebook(2, bits, 7).unwrap();
        let build = t0.elapsed();
        let bound = target_sin_delta(2, bits);
        println!(
            "bits={bits}: {} codewords, covering {:.7} = {:.3}x bound, build {build:?}",
            cb.len(),
            cb.covering_estimate(),
            cb.covering_estimate() / bound
        );
    }
}

#[test]
#[ignore]
fn profile_hot_loop_pieces() {
    use ialign::math::{complex_gaussian, derive_rng};
    use num_complex::Complex64;
    let mut rng = derive_rng(1, &[1]);
    let n = 10_000_000usize;

    let t0 = Instant::now();
    let mut acc = 0.0f64;
    let mut w = [Complex64::new(0.0, 0.0); 2];
    for _ in 0..n {
        for slot in w.iter_mut() {
            *slot = complex_gaussian(&mut rng);
        }
        let nr = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        w[0] = w[0] / nr;
        w[1] = w[1] / nr;
        acc += w[0].re;
    }
    println!("draw+normalize: {:?} ({:.0} ns/sample), {acc}", t0.elapsed(), t0.elapsed().as_nanos() as f64 / n as f64);

    let t0 = Instant::now();
    let mut acc2 = 0.0f64;
    for _ in 0..n {
        for slot in w.iter_mut() {
            *slot = complex_gaussian(&mut rng);
        }
        let nr = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        w[0] = w[0] / nr;
        w[1] = w[1] / nr;
        let c = w[0].conj() * w[1];
        let p = [2.0 * c.re, 2.0 * c.im, w[0].norm_sqr() - w[1].norm_sqr()];
        let theta = p[2].clamp(-1.0, 1.0).acos();
        let phi = p[1].atan2(p[0]);
        let s = theta.sin();
        acc2 += phi + s;
    }
    println!("draw+bloch+trig: {:?} ({:.0} ns/sample), {acc2}", t0.elapsed(), t0.elapsed().as_nanos() as f64 / n as f64);
}
