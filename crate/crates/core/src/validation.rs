//! End-to-end self checks wiring the modules together: the identities the
//! simulation rests on, plus the headline behavior in both CSI modes.

use crate::codebook::{design_codebook, target_sin_delta, CodebookCache};
use crate::evaluation::{run_trial, FeedbackMode};
use crate::math::{self, derive_rng, haar_unit_vector, inner};
use crate::network::{frequency_matrix, sample_network, NetworkParams};
use crate::Result;

/// One named check with its outcome.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

/// Run the invariant suite on a parameter set. Returns one entry per
/// check; callers decide how failures map to exit codes.
pub fn run_suite(params: &NetworkParams) -> Result<Vec<Check>> {
    params.validate()?;
    let mut checks = Vec::new();

    // Parseval on every link of a sampled realization
    {
        let real = sample_network(params)?;
        let residual = real.parseval_residual();
        checks.push(check(
            "parseval",
            residual < 1e-12,
            format!("max relative residual {residual:.3e}"),
        ));
    }

    // Hadamard identity h^H (u* ∘ v) == u^H diag(h)^H v
    {
        let mut rng = derive_rng(params.seed, &[0x6861_6461]);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let n = 5;
            let h = haar_unit_vector(n, &mut rng);
            let u = haar_unit_vector(n, &mut rng);
            let v = haar_unit_vector(n, &mut rng);
            let lhs = inner(&h, &math::hadamard_conj(&u, &v));
            let rhs = inner(&u, &frequency_matrix(&h).apply_adjoint(&v)?);
            worst = worst.max((lhs - rhs).norm());
        }
        checks.push(check(
            "hadamard_identity",
            worst < 1e-12,
            format!("max |difference| {worst:.3e}"),
        ));
    }

    // packing bounds of a freshly built codebook
    {
        let bits = 8;
        let cb = design_codebook(params.taps, bits, params.seed)?;
        let sin_delta = target_sin_delta(params.taps, bits);
        let size_bound = (sin_delta / 2.0).powi(-2 * (params.taps as i32 - 1));
        let coherence_ok = cb.coherence() < (1.0 - sin_delta * sin_delta).max(0.0).sqrt() + 1e-9;
        let size_ok = (cb.len() as f64) <= size_bound;
        let covering_ok = cb.covering_estimate() <= 1.1 * sin_delta;
        checks.push(check(
            "codebook_packing",
            coherence_ok && size_ok && covering_ok,
            format!(
                "{} codewords (bound {size_bound:.0}), coherence {:.4}, covering {:.4} (target {sin_delta:.4})",
                cb.len(),
                cb.coherence(),
                cb.covering_estimate()
            ),
        ));
    }

    // perfect CSI aligns interference to numerical zero
    {
        let cache = CodebookCache::new(params.seed);
        let mut worst_rel: f64 = 0.0;
        for j in 0..20u64 {
            let mut p = params.clone();
            p.seed = math::derive_seed(params.seed, &[0x7661_6c69, j]);
            let r = run_trial(&p, &FeedbackMode::Perfect, &cache)?;
            worst_rel = worst_rel.max(r.total_interference / p.power);
        }
        checks.push(check(
            "perfect_csi_zero_interference",
            worst_rel < 1e-9,
            format!("max interference/P {worst_rel:.3e} over 20 trials"),
        ));
    }

    // limited feedback keeps interference under the constant bound
    {
        let cache = CodebookCache::new(params.seed);
        let mut violations = 0;
        let mut under_constant = true;
        for j in 0..20u64 {
            let mut p = params.clone();
            p.seed = math::derive_seed(params.seed, &[0x626f_756e, j]);
            let r = run_trial(&p, &FeedbackMode::Limited, &cache)?;
            violations += r.intermediate_bound_violations;
            for (i, row) in r.interference.iter().enumerate() {
                for (s, &(i1, i2)) in row.iter().enumerate() {
                    if i1 + i2 > r.constant_bound[i][s] * (1.0 + 1e-9) {
                        under_constant = false;
                    }
                }
            }
        }
        checks.push(check(
            "constant_interference_bound",
            violations == 0 && under_constant,
            format!("{violations} intermediate-bound violations over 20 trials"),
        ));
    }

    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let params = NetworkParams {
            pairs: 3,
            taps: 2,
            t: 1,
            power: 1000.0,
            noise_power: 1.0,
            seed: 7,
        };
        let checks = run_suite(&params).unwrap();
        assert_eq!(checks.len(), 5);
        for c in &checks {
            assert!(c.passed, "{} failed: {}", c.name, c.detail);
        }
    }
}
