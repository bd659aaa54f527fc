//! Random frequency-selective interference networks and their cyclic-model
//! conversion between the tap (time) and tone (frequency) domains.
//!
//! A realization is the M-by-M grid of `L`-tap impulse responses
//! `h[i][k]` (destination `i`, source `k`) together with their `N`-point
//! frequency responses under the unitary DFT, so Parseval holds without
//! correction factors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::alignment::ia_dimensions;
use crate::math::{self, complex_gaussian, dft_unitary};
use crate::{Error, Grid, Result};

/// Taps below this magnitude are resampled so every generated link satisfies
/// `0 < |h| < inf` numerically.
const MIN_TAP_MAGNITUDE: f64 = 1e-12;

/// Experiment parameters for one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Number of source-destination pairs (M).
    pub pairs: usize,
    /// Taps per channel impulse response (L).
    pub taps: usize,
    /// Auxiliary stream-split variable; larger values push the achievable
    /// multiplexing gain toward M/2 at the cost of more tones.
    pub t: usize,
    /// Total network transmit power P (linear scale). Each source gets P/M
    /// per tone.
    pub power: f64,
    /// Noise power N_o at each destination (linear scale).
    pub noise_power: f64,
    /// Master RNG seed.
    pub seed: u64,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        if self.pairs < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 pairs, got {}",
                self.pairs
            )));
        }
        if self.taps < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 taps, got {}",
                self.taps
            )));
        }
        if self.t < 1 {
            return Err(Error::InvalidParameter("t must be at least 1".into()));
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power must be positive and finite, got {}",
                self.power
            )));
        }
        if !(self.noise_power > 0.0) || !self.noise_power.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise power must be positive and finite, got {}",
                self.noise_power
            )));
        }
        Ok(())
    }

    /// Tone count N derived from (pairs, t). Fails for configurations the
    /// dimension formulas reject or when N < taps (cyclic model invalid).
    pub fn tone_count(&self) -> Result<usize> {
        let n = ia_dimensions(self.pairs, self.t)?.tones;
        if n < self.taps {
            return Err(Error::InvalidParameter(format!(
                "tone count {n} is smaller than tap count {}; increase t",
                self.taps
            )));
        }
        Ok(n)
    }
}

/// Ordered taps `h[0..L-1]` of one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelImpulseResponse {
    taps: Vec<Complex64>,
}

impl ChannelImpulseResponse {
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidParameter("empty impulse response".into()));
        }
        if taps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter(
                "impulse response has non-finite taps".into(),
            ));
        }
        if math::norm(&taps) <= 0.0 {
            return Err(Error::DegenerateChannel("all-zero impulse response".into()));
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn norm(&self) -> f64 {
        math::norm(&self.taps)
    }
}

/// Unitary `n`-point frequency response of a zero-padded impulse response.
pub fn dft_response(cir: &ChannelImpulseResponse, n: usize) -> Result<Vec<Complex64>> {
    dft_unitary(cir.taps(), n)
}

/// Normalized channel direction `w = h / ||h||`.
pub fn normalize_cir(cir: &ChannelImpulseResponse) -> Result<Vec<Complex64>> {
    math::normalized(cir.taps())
}

/// Diagonal per-tone channel operator, stored as its spectrum. Applying it
/// never materializes an N-by-N matrix.
#[derive(Debug, Clone, Copy)]
pub struct DiagonalOperator<'a> {
    spectrum: &'a [Complex64],
}

/// View a frequency-response vector as the diagonal matrix
/// `diag(h(0), ..., h(N-1))`.
pub fn frequency_matrix(spectrum: &[Complex64]) -> DiagonalOperator<'_> {
    DiagonalOperator { spectrum }
}

impl<'a> DiagonalOperator<'a> {
    pub fn spectrum(&self) -> &'a [Complex64] {
        self.spectrum
    }

    fn check_len(&self, x: &[Complex64]) -> Result<()> {
        if x.len() != self.spectrum.len() {
            return Err(Error::DimensionMismatch(format!(
                "operator has {} tones, input has {}",
                self.spectrum.len(),
                x.len()
            )));
        }
        Ok(())
    }

    /// `diag(h) x`, element-wise `h(r) * x(r)`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(x)?;
        Ok(self.spectrum.iter().zip(x).map(|(h, v)| h * v).collect())
    }

    /// `diag(h)^H x`, element-wise `conj(h(r)) * x(r)`.
    pub fn apply_adjoint(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(x)?;
        Ok(self
            .spectrum
            .iter()
            .zip(x)
            .map(|(h, v)| h.conj() * v)
            .collect())
    }
}

/// One sampled network: impulse responses and their frequency responses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkRealization {
    params: NetworkParams,
    tones: usize,
    /// `channels[i][k]`: link from source k to destination i.
    channels: Grid<ChannelImpulseResponse>,
    /// `freq[i][k]`: N-point frequency response of `channels[i][k]`.
    freq: Grid<Vec<Complex64>>,
}

impl NetworkRealization {
    /// Build a realization from explicit impulse responses. Checks shapes
    /// only; the distributional invariants belong to [`sample_network`].
    pub fn from_channels(
        params: NetworkParams,
        channels: Grid<ChannelImpulseResponse>,
        tones: usize,
    ) -> Result<Self> {
        let m = params.pairs;
        if channels.len() != m || channels.iter().any(|row| row.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "channel grid must be {m}x{m}"
            )));
        }
        let taps = channels[0][0].len();
        if channels.iter().flatten().any(|c| c.len() != taps) {
            return Err(Error::DimensionMismatch(
                "all links must have the same tap count".into(),
            ));
        }
        if tones < taps {
            return Err(Error::DimensionMismatch(format!(
                "tone count {tones} is smaller than tap count {taps}"
            )));
        }
        let freq = channels
            .iter()
            .map(|row| row.iter().map(|c| dft_response(c, tones)).collect())
            .collect::<Result<Grid<_>>>()?;
        Ok(Self {
            params,
            tones,
            channels,
            freq,
        })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn pairs(&self) -> usize {
        self.params.pairs
    }

    pub fn taps(&self) -> usize {
        self.channels[0][0].len()
    }

    pub fn tones(&self) -> usize {
        self.tones
    }

    pub fn channel(&self, dest: usize, src: usize) -> &ChannelImpulseResponse {
        &self.channels[dest][src]
    }

    pub fn freq(&self, dest: usize, src: usize) -> &[Complex64] {
        &self.freq[dest][src]
    }

    pub fn freq_grid(&self) -> &Grid<Vec<Complex64>> {
        &self.freq
    }

    /// Normalized tap-domain directions `w[i][k] = h[i][k] / ||h[i][k]||`.
    pub fn normalized_taps(&self) -> Result<Grid<Vec<Complex64>>> {
        self.channels
            .iter()
            .map(|row| row.iter().map(normalize_cir).collect())
            .collect()
    }

    /// DFT-domain unit directions of the exact channels: the perfect-CSI
    /// counterpart of the quantized `w~` grid.
    pub fn normalized_spectra(&self) -> Result<Grid<Vec<Complex64>>> {
        self.channels
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| dft_unitary(&normalize_cir(c)?, self.tones))
                    .collect()
            })
            .collect()
    }

    /// Largest relative Parseval residual `| ||h_f||^2 - ||h_t||^2 | / ||h_t||^2`
    /// over all links.
    pub fn parseval_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.pairs() {
            for k in 0..self.pairs() {
                let t = math::norm_sq(self.channels[i][k].taps());
                let f = math::norm_sq(&self.freq[i][k]);
                worst = worst.max((t - f).abs() / t);
            }
        }
        worst
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let real: Self = serde_json::from_str(s)?;
        // re-derive the frequency grid rather than trusting the document
        Self::from_channels(real.params.clone(), real.channels, real.tones)
    }
}

/// Sample a network: `M*M*L` i.i.d. unit-variance circularly symmetric
/// complex Gaussian taps, deterministic in `params.seed`. Taps with
/// magnitude below 1e-12 are redrawn.
pub fn sample_network(params: &NetworkParams) -> Result<NetworkRealization> {
    params.validate()?;
    let tones = params.tone_count()?;
    let mut rng = math::derive_rng(params.seed, &[0x6e65_7477_6f72_6b]);
    let m = params.pairs;
    let mut channels = Vec::with_capacity(m);
    for _i in 0..m {
        let mut row = Vec::with_capacity(m);
        for _k in 0..m {
            let taps: Vec<Complex64> = (0..params.taps)
                .map(|_| loop {
                    let z = complex_gaussian(&mut rng);
                    if z.norm() >= MIN_TAP_MAGNITUDE {
                        return z;
                    }
                })
                .collect();
            row.push(ChannelImpulseResponse::new(taps)?);
        }
        channels.push(row);
    }
    NetworkRealization::from_channels(params.clone(), channels, tones)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{derive_rng, haar_unit_vector, inner};

    fn params() -> NetworkParams {
        NetworkParams {
            pairs: 3,
            taps: 2,
            t: 1,
            power: 100.0,
            noise_power: 1.0,
            seed: 42,
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_network(&params()).unwrap();
        let b = sample_network(&params()).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(a.channel(i, k).taps(), b.channel(i, k).taps());
            }
        }
    }

    #[test]
    fn sampled_grid_has_expected_shape() {
        let real = sample_network(&params()).unwrap();
        assert_eq!(real.pairs(), 3);
        assert_eq!(real.tones(), 3);
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(real.channel(i, k).len(), 2);
                for z in real.channel(i, k).taps() {
                    assert!(z.norm() > 0.0 && z.norm().is_finite());
                }
                assert_eq!(real.freq(i, k).len(), 3);
            }
        }
    }

    #[test]
    fn parseval_holds_on_all_links() {
        let real = sample_network(&params()).unwrap();
        assert!(real.parseval_residual() < 1e-12);
    }

    #[test]
    fn normalize_scales_three_four_five() {
        let cir = ChannelImpulseResponse::new(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(4.0, 0.0),
        ])
        .unwrap();
        let w = normalize_cir(&cir).unwrap();
        assert!((w[0] - Complex64::new(0.6, 0.0)).norm() < 1e-15);
        assert!((w[1] - Complex64::new(0.8, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn normalize_keeps_phase() {
        let cir = ChannelImpulseResponse::new(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 2.0),
        ])
        .unwrap();
        let w = normalize_cir(&cir).unwrap();
        assert!((w[0]).norm() < 1e-15);
        assert!((w[1] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn normalize_rejects_zero() {
        assert!(matches!(
            ChannelImpulseResponse::new(vec![Complex64::new(0.0, 0.0)]),
            Err(Error::DegenerateChannel(_))
        ));
    }

    #[test]
    fn diagonal_operator_applies_elementwise() {
        let ones = vec![Complex64::new(1.0, 0.0); 3];
        let x = vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, 3.0),
        ];
        let op = frequency_matrix(&ones);
        assert_eq!(op.apply(&x).unwrap(), x);

        let h = vec![
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let e0 = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let y = frequency_matrix(&h).apply(&e0).unwrap();
        assert!((y[0] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(y[1].norm() < 1e-15 && y[2].norm() < 1e-15);

        let adj = frequency_matrix(&h).apply_adjoint(&e0).unwrap();
        assert!((adj[0] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_operator_rejects_bad_length() {
        let h = vec![Complex64::new(1.0, 0.0); 3];
        let x = vec![Complex64::new(1.0, 0.0); 4];
        assert!(matches!(
            frequency_matrix(&h).apply(&x),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn hadamard_identity_matches_diagonal_adjoint_form() {
        // h^H (u* ∘ v) == u^H diag(h)^H v
        let mut rng = derive_rng(5, &[1]);
        for _ in 0..20 {
            let n = 5;
            let h = haar_unit_vector(n, &mut rng);
            let u = haar_unit_vector(n, &mut rng);
            let v = haar_unit_vector(n, &mut rng);
            let lhs = inner(&h, &crate::math::hadamard_conj(&u, &v));
            let rhs = inner(&u, &frequency_matrix(&h).apply_adjoint(&v).unwrap());
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn realization_roundtrips_through_json() {
        let real = sample_network(&params()).unwrap();
        let doc = real.to_json().unwrap();
        assert!(doc.contains('['), "complex values serialize as [re, im]");
        let back = NetworkRealization::from_json(&doc).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(real.channel(i, k).taps(), back.channel(i, k).taps());
                assert_eq!(real.freq(i, k), back.freq(i, k));
            }
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = params();
        p.power = 0.0;
        assert!(sample_network(&p).is_err());
        let mut p = params();
        p.taps = 1;
        assert!(p.validate().is_err());
        let mut p = params();
        p.taps = 4; // N = 3 for (M=3, t=1) cannot carry 4 taps
        assert!(matches!(p.tone_count(), Err(Error::InvalidParameter(_))));
    }
}
