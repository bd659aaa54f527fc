//! True-channel evaluation of direction sets.
//!
//! Directions may come from exact or quantized CSI, but every coupling
//! coefficient here is evaluated against the true frequency responses:
//! `h_ik^H (u_i^m* ∘ v_k^p)`, the effective scalar channel between one
//! transmit stream and one receive projection. From those coefficients
//! follow the per-stream interference powers, the Gaussian-input rate
//! lower bound, the constant interference bound that makes naive IA work,
//! and sum-rate-slope sweeps over transmit power.

use rayon::prelude::*;
use serde::Serialize;

use crate::alignment::{build_direction_sets, ia_dimensions, IaDimensions, ALIGNMENT_TOL};
use crate::codebook::CodebookCache;
use crate::feedback::{
    bits_for_power, quantization_errors, quantize_network, reconstruct_quantized_csi,
};
use crate::math::{hadamard_conj, inner, least_squares_slope, norm_sq};
use crate::network::{sample_network, NetworkParams, NetworkRealization};
use crate::{Error, Result};

/// Degenerate-CSI draws tolerated per trial before giving up.
pub const MAX_RESAMPLES: usize = 10;

/// How the nodes obtain their CSI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum FeedbackMode {
    /// Every node sees the exact normalized spectra.
    Perfect,
    /// Feedback budget scales with power: `N_d = ceil((L-1) log2 P)`.
    Limited,
    /// Feedback budget pinned to a fixed bit count.
    FixedFeedback(u32),
}

impl FeedbackMode {
    pub fn label(&self) -> &'static str {
        match self {
            FeedbackMode::Perfect => "perfect",
            FeedbackMode::Limited => "limited",
            FeedbackMode::FixedFeedback(_) => "fixed_feedback",
        }
    }

    /// Requested bits per vector at power `p`, if the mode quantizes.
    pub fn bits(&self, power: f64, taps: usize) -> Option<u32> {
        match self {
            FeedbackMode::Perfect => None,
            FeedbackMode::Limited => Some(bits_for_power(power, taps)),
            FeedbackMode::FixedFeedback(bits) => Some(*bits),
        }
    }
}

/// Per-stream effective gains and interference powers.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveIo {
    /// `|h_ii^H b_ii^{m,m}|^2` per destination and stream.
    pub direct_gains_sq: Vec<Vec<f64>>,
    /// `(I_{i,1}, I_{i,2})` per destination and stream: inter-stream and
    /// cross-source interference power.
    pub interference: Vec<Vec<(f64, f64)>>,
}

fn check_direction_shapes(
    real: &NetworkRealization,
    dims: &IaDimensions,
    rx: &[Vec<Vec<num_complex::Complex64>>],
    tx: &[Vec<Vec<num_complex::Complex64>>],
) -> Result<()> {
    let m = dims.pairs;
    if real.pairs() != m || rx.len() != m || tx.len() != m {
        return Err(Error::DimensionMismatch(
            "realization and direction sets disagree on the pair count".into(),
        ));
    }
    if real.tones() != dims.tones {
        return Err(Error::DimensionMismatch(
            "realization and dimensions disagree on the tone count".into(),
        ));
    }
    for k in 0..m {
        if tx[k].len() != dims.stream_count(k) || rx[k].len() != dims.stream_count(k) {
            return Err(Error::DimensionMismatch(format!(
                "direction set {k} has the wrong stream count"
            )));
        }
        if tx[k]
            .iter()
            .chain(rx[k].iter())
            .any(|col| col.len() != dims.tones)
        {
            return Err(Error::DimensionMismatch(
                "direction vectors must have one entry per tone".into(),
            ));
        }
    }
    Ok(())
}

/// Evaluate the effective input-output couplings of `(rx, tx)` against the
/// true channels. Stream powers are `P/(M d_k)`, honoring the per-tone
/// constraint `E|x_k(r)|^2 <= P/M`.
pub fn effective_io(
    real: &NetworkRealization,
    dims: &IaDimensions,
    rx: &[Vec<Vec<num_complex::Complex64>>],
    tx: &[Vec<Vec<num_complex::Complex64>>],
    power: f64,
) -> Result<EffectiveIo> {
    if !(power > 0.0) {
        return Err(Error::InvalidParameter("power must be positive".into()));
    }
    check_direction_shapes(real, dims, rx, tx)?;
    let m = dims.pairs;
    let stream_power = |k: usize| power / (m as f64 * dims.streams[k] as f64);

    let mut direct = Vec::with_capacity(m);
    let mut interference = Vec::with_capacity(m);
    for i in 0..m {
        let mut gains_i = Vec::with_capacity(rx[i].len());
        let mut intf_i = Vec::with_capacity(rx[i].len());
        for (s, u) in rx[i].iter().enumerate() {
            let mut direct_sq = 0.0;
            let mut i1 = 0.0;
            let mut i2 = 0.0;
            for k in 0..m {
                let h = real.freq(i, k);
                for (p, v) in tx[k].iter().enumerate() {
                    let coeff_sq = inner(h, &hadamard_conj(u, v)).norm_sqr();
                    if k == i && p == s {
                        direct_sq = coeff_sq;
                    } else if k == i {
                        i1 += stream_power(i) * coeff_sq;
                    } else {
                        i2 += stream_power(k) * coeff_sq;
                    }
                }
            }
            gains_i.push(direct_sq);
            intf_i.push((i1, i2));
        }
        direct.push(gains_i);
        interference.push(intf_i);
    }
    Ok(EffectiveIo {
        direct_gains_sq: direct,
        interference,
    })
}

/// Gaussian-input rate lower bound per pair (bits per tone use):
/// `R_i = (1/N) sum_m log2(1 + (P/(M d_i)) |gain|^2 / (I1 + I2 + N_o))`.
pub fn rate_lower_bound(
    io: &EffectiveIo,
    dims: &IaDimensions,
    power: f64,
    noise_power: f64,
) -> (Vec<f64>, f64) {
    let m = dims.pairs;
    let n = dims.tones as f64;
    let mut rates = Vec::with_capacity(m);
    for i in 0..m {
        let sp = power / (m as f64 * dims.streams[i] as f64);
        let mut r = 0.0;
        for (s, &gain_sq) in io.direct_gains_sq[i].iter().enumerate() {
            let (i1, i2) = io.interference[i][s];
            r += (1.0 + sp * gain_sq / (i1 + i2 + noise_power)).log2();
        }
        rates.push(r / n);
    }
    let sum = rates.iter().sum();
    (rates, sum)
}

/// Interference bounds from the orthonormal-expansion argument.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantBound {
    /// Power-free per-stream constants
    /// `sum_{p != m} Delta_ii^{m,p} + sum_{k != i, p} Delta_ik^{m,p}` with
    /// `Delta_ik^{m,p} = 4 ||b_ik^{m,p}||^2 ||h_ik||^2 / (M d_k)`.
    pub sigma_delta: Vec<Vec<f64>>,
    /// Power-dependent intermediate bound
    /// `P * 2^(-N_d/(L-1)) * sigma_delta`; `None` without a bit budget or
    /// with `L = 1` (where quantization is exact and the bound is vacuous).
    pub intermediate: Option<Vec<Vec<f64>>>,
}

impl ConstantBound {
    /// Streams whose measured `I1 + I2` exceeds the intermediate bound
    /// (with 1e-9 relative slack).
    pub fn intermediate_violations(&self, io: &EffectiveIo) -> usize {
        let Some(intermediate) = &self.intermediate else {
            return 0;
        };
        let mut violations = 0;
        for (i, row) in intermediate.iter().enumerate() {
            for (s, &bound) in row.iter().enumerate() {
                let (i1, i2) = io.interference[i][s];
                if i1 + i2 > bound * (1.0 + 1e-9) {
                    violations += 1;
                }
            }
        }
        violations
    }
}

/// Evaluate the per-stream interference bounds for a direction set.
pub fn interference_constant_bound(
    real: &NetworkRealization,
    dims: &IaDimensions,
    rx: &[Vec<Vec<num_complex::Complex64>>],
    tx: &[Vec<Vec<num_complex::Complex64>>],
    power: f64,
    bits: Option<u32>,
) -> Result<ConstantBound> {
    check_direction_shapes(real, dims, rx, tx)?;
    let m = dims.pairs;
    let taps = real.taps();

    let mut sigma_delta = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = Vec::with_capacity(rx[i].len());
        for (s, u) in rx[i].iter().enumerate() {
            let mut total = 0.0;
            for k in 0..m {
                let h_sq = norm_sq(real.freq(i, k));
                for (p, v) in tx[k].iter().enumerate() {
                    if k == i && p == s {
                        continue; // the direct term carries signal, not interference
                    }
                    let b_sq = norm_sq(&hadamard_conj(u, v));
                    total += 4.0 * b_sq * h_sq / (m as f64 * dims.streams[k] as f64);
                }
            }
            row.push(total);
        }
        sigma_delta.push(row);
    }

    let intermediate = match bits {
        Some(bits) if taps >= 2 => {
            let factor = power * (-(bits as f64) / (taps as f64 - 1.0)).exp2();
            Some(
                sigma_delta
                    .iter()
                    .map(|row| row.iter().map(|d| d * factor).collect())
                    .collect(),
            )
        }
        _ => None,
    };

    Ok(ConstantBound {
        sigma_delta,
        intermediate,
    })
}

/// Everything measured in one Monte Carlo trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub power: f64,
    pub mode: &'static str,
    /// Requested feedback bits per vector (absent in perfect mode).
    pub bits: Option<u32>,
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    /// `(I1, I2)` per destination and stream.
    pub interference: Vec<Vec<(f64, f64)>>,
    pub total_interference: f64,
    /// Power-free constant bound per destination and stream.
    pub constant_bound: Vec<Vec<f64>>,
    pub total_constant_bound: f64,
    pub direct_gains_sq: Vec<Vec<f64>>,
    pub min_direct_gain: f64,
    pub quantization_max_error: f64,
    /// Streams where measured interference exceeded the intermediate
    /// (power-scaled) bound.
    pub intermediate_bound_violations: usize,
    /// Degenerate-CSI draws that were resampled before this result.
    pub resamples: usize,
}

impl TrialResult {
    pub fn csv_header() -> &'static str {
        "P,N_d,mode,R_sum,I_total,bound_total,min_direct_gain,max_quant_error,resamples"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.power,
            self.bits.map_or(String::new(), |b| b.to_string()),
            self.mode,
            self.sum_rate,
            self.total_interference,
            self.total_constant_bound,
            self.min_direct_gain,
            self.quantization_max_error,
            self.resamples
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Run one trial: sample a network, obtain CSI per `mode`, build the
/// direction sets from that CSI, and measure everything against the true
/// channels. Degenerate-CSI draws are resampled (up to [`MAX_RESAMPLES`])
/// with the count reported.
pub fn run_trial(
    params: &NetworkParams,
    mode: &FeedbackMode,
    cache: &CodebookCache,
) -> Result<TrialResult> {
    let dims = ia_dimensions(params.pairs, params.t)?;
    let bits = mode.bits(params.power, params.taps);

    for attempt in 0..=MAX_RESAMPLES {
        let mut draw = params.clone();
        draw.seed = crate::math::derive_seed(params.seed, &[0x7265_6472, attempt as u64]);
        let real = sample_network(&draw)?;

        let (csi, max_quant_error) = match bits {
            None => (real.normalized_spectra()?, 0.0),
            Some(bits) => {
                let cb = cache.get(params.taps, bits)?;
                let report = quantize_network(&real, &cb)?;
                let csi = reconstruct_quantized_csi(&report, &cb, dims.tones)?;
                let max_err = quantization_errors(&real, &cb, &report)?
                    .into_iter()
                    .flatten()
                    .fold(0.0, f64::max);
                (csi.w_tilde, max_err)
            }
        };

        let sets = match build_direction_sets(&csi, &dims, ALIGNMENT_TOL) {
            Ok(sets) => sets,
            Err(Error::DegenerateCsi(_)) => continue,
            Err(e) => return Err(e),
        };

        let io = effective_io(&real, &dims, &sets.rx, &sets.tx, params.power)?;
        let (rates, sum_rate) = rate_lower_bound(&io, &dims, params.power, params.noise_power);
        let bound =
            interference_constant_bound(&real, &dims, &sets.rx, &sets.tx, params.power, bits)?;
        let violations = bound.intermediate_violations(&io);

        let total_interference = io
            .interference
            .iter()
            .flatten()
            .map(|&(a, b)| a + b)
            .sum();
        let total_constant_bound = bound.sigma_delta.iter().flatten().sum();
        let min_direct_gain = io
            .direct_gains_sq
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
            .sqrt();

        return Ok(TrialResult {
            power: params.power,
            mode: mode.label(),
            bits,
            rates,
            sum_rate,
            interference: io.interference,
            total_interference,
            constant_bound: bound.sigma_delta,
            total_constant_bound,
            direct_gains_sq: io.direct_gains_sq,
            min_direct_gain,
            quantization_max_error: max_quant_error,
            intermediate_bound_violations: violations,
            resamples: attempt,
        });
    }
    Err(Error::DegenerateCsi(format!(
        "no usable realization after {MAX_RESAMPLES} resamples"
    )))
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub power: f64,
    pub bits: Option<u32>,
    pub mean_sum_rate: f64,
    pub mean_interference: f64,
    pub mean_constant_bound: f64,
}

/// Aggregated sweep with the fitted slopes.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of mean sum rate against log2(P) over the top
    /// half of the grid.
    pub rate_slope: f64,
    /// Log-log slope of mean total interference against P over the whole
    /// grid.
    pub interference_slope: f64,
    /// Target multiplexing gain `(sum_k d_k) / N`.
    pub dof_target: f64,
    /// Per-point trial results, in grid order.
    pub per_trial: Vec<Vec<TrialResult>>,
}

/// Sweep transmit power and estimate the sum-rate slope. Realization seeds
/// are shared across grid points (trial `j` sees the same channels at
/// every power), which removes channel noise from the slope fit.
pub fn dof_sweep(
    params: &NetworkParams,
    mode: &FeedbackMode,
    p_grid: &[f64],
    trials_per_point: usize,
    cache: &CodebookCache,
) -> Result<SweepResult> {
    if p_grid.len() < 2 || p_grid.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::InvalidParameter(
            "power grid needs at least two positive points".into(),
        ));
    }
    if p_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "power grid must be strictly increasing".into(),
        ));
    }
    let decades = (p_grid[p_grid.len() - 1] / p_grid[0]).log10();
    if decades < 4.0 - 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "power grid spans {decades:.2} decades; the slope fit needs at least 4"
        )));
    }
    if trials_per_point < 20 {
        return Err(Error::InvalidParameter(
            "need at least 20 trials per grid point".into(),
        ));
    }
    let dims = ia_dimensions(params.pairs, params.t)?;

    let mut points = Vec::with_capacity(p_grid.len());
    let mut per_trial = Vec::with_capacity(p_grid.len());
    for &power in p_grid {
        let bits = mode.bits(power, params.taps);
        if let Some(bits) = bits {
            // build once, serially, before fanning trials out
            cache.get(params.taps, bits)?;
        }
        let results: Vec<TrialResult> = (0..trials_per_point)
            .into_par_iter()
            .map(|j| {
                let mut p = params.clone();
                p.power = power;
                p.seed = crate::math::derive_seed(params.seed, &[0x7472_6961, j as u64]);
                run_trial(&p, mode, cache)
            })
            .collect::<Result<Vec<_>>>()?;

        let n = results.len() as f64;
        points.push(SweepPoint {
            power,
            bits,
            mean_sum_rate: results.iter().map(|r| r.sum_rate).sum::<f64>() / n,
            mean_interference: results.iter().map(|r| r.total_interference).sum::<f64>() / n,
            mean_constant_bound: results.iter().map(|r| r.total_constant_bound).sum::<f64>()
                / n,
        });
        per_trial.push(results);
    }

    let top = points.len() / 2;
    let xs: Vec<f64> = points[top..].iter().map(|p| p.power.log2()).collect();
    let ys: Vec<f64> = points[top..].iter().map(|p| p.mean_sum_rate).collect();
    let rate_slope = least_squares_slope(&xs, &ys);

    let xi: Vec<f64> = points.iter().map(|p| p.power.log2()).collect();
    let yi: Vec<f64> = points
        .iter()
        .map(|p| p.mean_interference.max(1e-300).log2())
        .collect();
    let interference_slope = least_squares_slope(&xi, &yi);

    Ok(SweepResult {
        points,
        rate_slope,
        interference_slope,
        dof_target: dims.dof_bound,
        per_trial,
    })
}
