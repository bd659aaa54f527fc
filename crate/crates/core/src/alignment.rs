//! Interference-alignment dimension bookkeeping and the explicit 3-pair
//! direction construction.
//!
//! With `Q = (M-1)(M-2) - 1`, source 1 sends `(t+1)^Q` streams and every
//! other source `t^Q` streams over `N = (t+1)^Q + t^Q` tones. For `M = 3`
//! the transmit directions come from powers of the diagonal ratio operator
//!
//! `T = D12^H (D32^H)^-1 D31^H (D21^H)^-1 D23^H (D13^H)^-1`
//!
//! applied to the all-ones vector; the commuting diagonal structure makes
//! the interference from the two unintended sources collapse into an
//! `(N - d_i)`-dimensional subspace at each destination. Receive
//! directions are the dual basis rows of `G_i = [D_ii^H V_i | J_i]`, which
//! zeroes inter-stream and cross-source terms by construction.
//!
//! Everything here is agnostic to where the CSI grid came from: exact
//! normalized spectra give the perfect-CSI scheme, reconstructed quantized
//! spectra give naive IA on limited feedback. The construction is verified
//! by measurement (`check_alignment_conditions`), not trusted.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::math::{hadamard_conj, inner, normalized};
use crate::{Error, Grid, Result};

/// Relative singular-value cutoff for rank decisions.
const RANK_TOL: f64 = 1e-9;
/// Condition-number ceiling on the receive-side basis matrix.
const MAX_CONDITION: f64 = 1e12;
/// Default relative tolerance on the alignment conditions.
pub const ALIGNMENT_TOL: f64 = 1e-9;

/// Stream and tone counts of the IA construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IaDimensions {
    pub pairs: usize,
    pub t: usize,
    /// Exponent `Q = (M-1)(M-2) - 1`.
    pub q: u32,
    /// Streams per source: `d_1 = (t+1)^Q`, `d_k = t^Q` for `k >= 2`.
    pub streams: Vec<u64>,
    /// Tone count `N = (t+1)^Q + t^Q`.
    pub tones: usize,
    /// Achievable multiplexing gain `(sum_k d_k) / N`.
    pub dof_bound: f64,
    /// Tap threshold `((t+1)^Q - 1) / (3 t Q)` quoted by the theory; the
    /// construction itself additionally needs `L >= 2` (see
    /// `build_tx_directions`).
    pub min_taps: f64,
}

impl IaDimensions {
    pub fn stream_count(&self, source: usize) -> usize {
        self.streams[source] as usize
    }

    pub fn total_streams(&self) -> u64 {
        self.streams.iter().sum()
    }
}

/// Dimension formulas for general `M >= 3`.
pub fn ia_dimensions(pairs: usize, t: usize) -> Result<IaDimensions> {
    if pairs < 3 {
        return Err(Error::Unsupported(format!(
            "dimension formulas need at least 3 pairs (Q >= 1), got M = {pairs}"
        )));
    }
    if t < 1 {
        return Err(Error::InvalidParameter("t must be at least 1".into()));
    }
    let q = ((pairs - 1) * (pairs - 2) - 1) as u32;
    let overflow =
        || Error::InvalidParameter(format!("stream counts overflow for M = {pairs}, t = {t}"));
    let d1 = (t as u64 + 1).checked_pow(q).ok_or_else(overflow)?;
    let dk = (t as u64).checked_pow(q).ok_or_else(overflow)?;
    let tones_u = d1.checked_add(dk).ok_or_else(overflow)?;
    let tones = usize::try_from(tones_u).map_err(|_| overflow())?;
    let mut streams = Vec::with_capacity(pairs);
    streams.push(d1);
    streams.extend(std::iter::repeat(dk).take(pairs - 1));
    let total = d1 as f64 + (pairs as f64 - 1.0) * dk as f64;
    Ok(IaDimensions {
        pairs,
        t,
        q,
        streams,
        tones,
        dof_bound: total / tones_u as f64,
        min_taps: (d1 as f64 - 1.0) / (3.0 * t as f64 * q as f64),
    })
}

/// Transmit and receive direction sets with their measured diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionSets {
    /// `tx[k][m]`: unit-norm transmit direction `m` of source `k`, length N.
    pub tx: Vec<Vec<Vec<Complex64>>>,
    /// `rx[i][m]`: unit-norm receive direction `m` of destination `i`.
    pub rx: Vec<Vec<Vec<Complex64>>>,
    pub diagnostics: AlignmentDiagnostics,
}

/// Measured alignment quality of a `(csi, U, V)` triple.
#[derive(Debug, Clone, Serialize)]
pub struct AlignmentDiagnostics {
    /// `|u_i^m^H D_ii^H v_i^m|` per destination and stream.
    pub direct_gains: Vec<Vec<f64>>,
    /// Largest inter-stream leak `|u_i^m^H D_ii^H v_i^p|`, `p != m`.
    pub cross_residual: f64,
    /// Largest cross-source leak `|u_i^m^H D_ik^H v_k^p|`, `k != i`.
    pub interference_residual: f64,
    /// Smallest singular value of any receive-side basis matrix `G_i`;
    /// `NaN` when the diagnostics were measured without a construction.
    pub min_singular_value: f64,
    /// Largest disagreement between the diagonal-operator form and the
    /// `w~^H (u* ∘ v)` Hadamard form of the same coefficient.
    pub hadamard_residual: f64,
    /// Whether cross and interference residuals stay below `tol` relative
    /// to the smallest direct gain.
    pub conditions_met: bool,
}

fn check_grid_shape(csi: &Grid<Vec<Complex64>>, pairs: usize, tones: usize) -> Result<()> {
    if csi.len() != pairs || csi.iter().any(|row| row.len() != pairs) {
        return Err(Error::DimensionMismatch(format!(
            "CSI grid must be {pairs}x{pairs}"
        )));
    }
    if csi
        .iter()
        .flatten()
        .any(|spectrum| spectrum.len() != tones)
    {
        return Err(Error::DimensionMismatch(format!(
            "every CSI spectrum must have {tones} tones"
        )));
    }
    Ok(())
}

/// Fail when any tone of any link is numerically zero relative to the
/// link's largest tone; the ratio operator would blow up there.
fn check_tones(csi: &Grid<Vec<Complex64>>) -> Result<()> {
    for (i, row) in csi.iter().enumerate() {
        for (k, spectrum) in row.iter().enumerate() {
            let mut max: f64 = 0.0;
            let mut min = f64::INFINITY;
            for z in spectrum {
                let a = z.norm();
                max = max.max(a);
                min = min.min(a);
            }
            if !(min > RANK_TOL * max) {
                return Err(Error::DegenerateCsi(format!(
                    "link ({i},{k}) has a near-zero tone"
                )));
            }
        }
    }
    Ok(())
}

fn columns_matrix(cols: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let rows = cols[0].len();
    DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
}

/// `D^H v` for the diagonal operator with the given spectrum.
fn adjoint_apply(spectrum: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    spectrum
        .iter()
        .zip(v)
        .map(|(s, x)| s.conj() * x)
        .collect()
}

/// Transmit directions for `M = 3` from any CSI grid (exact or quantized).
pub fn build_tx_directions(
    csi: &Grid<Vec<Complex64>>,
    dims: &IaDimensions,
) -> Result<Vec<Vec<Vec<Complex64>>>> {
    if dims.pairs != 3 {
        return Err(Error::Unsupported(format!(
            "the explicit direction construction covers M = 3 only \
             (dimension formulas remain available for M = {})",
            dims.pairs
        )));
    }
    let n = dims.tones;
    check_grid_shape(csi, 3, n)?;
    check_tones(csi)?;
    let t = dims.t;

    // T = D12^H (D32^H)^-1 D31^H (D21^H)^-1 D23^H (D13^H)^-1, per tone
    let ratio: Vec<Complex64> = (0..n)
        .map(|r| {
            (csi[0][1][r].conj() * csi[2][0][r].conj() * csi[1][2][r].conj())
                / (csi[2][1][r].conj() * csi[1][0][r].conj() * csi[0][2][r].conj())
        })
        .collect();

    // powers[q] = T^q * 1 for q = 0..=t
    let mut powers: Vec<Vec<Complex64>> = Vec::with_capacity(t + 1);
    powers.push(vec![Complex64::new(1.0, 0.0); n]);
    for q in 1..=t {
        let prev = &powers[q - 1];
        powers.push(prev.iter().zip(&ratio).map(|(x, tr)| x * tr).collect());
    }

    let v1: Vec<Vec<Complex64>> = powers
        .iter()
        .map(|col| normalized(col))
        .collect::<Result<_>>()?;

    // rank(V_1) must be d_1 = t + 1
    let svd = columns_matrix(&v1).svd(false, false);
    let smax = svd.singular_values[0];
    let smin = svd.singular_values[svd.singular_values.len() - 1];
    if !(smin > RANK_TOL * smax) {
        return Err(Error::DegenerateCsi(
            "transmit basis is rank deficient (identical or near-identical links)".into(),
        ));
    }

    // V_2 = (D32^H)^-1 D31^H {T^0 1, .., T^(t-1) 1}
    let v2: Vec<Vec<Complex64>> = (0..t)
        .map(|qi| {
            let col: Vec<Complex64> = (0..n)
                .map(|r| csi[2][0][r].conj() / csi[2][1][r].conj() * powers[qi][r])
                .collect();
            normalized(&col)
        })
        .collect::<Result<_>>()?;

    // V_3 = (D23^H)^-1 D21^H {T^1 1, .., T^t 1}
    let v3: Vec<Vec<Complex64>> = (0..t)
        .map(|qi| {
            let col: Vec<Complex64> = (0..n)
                .map(|r| csi[1][0][r].conj() / csi[1][2][r].conj() * powers[qi + 1][r])
                .collect();
            normalized(&col)
        })
        .collect::<Result<_>>()?;

    Ok(vec![v1, v2, v3])
}

/// Receive directions: for each destination, an orthonormal basis `J_i` of
/// the interference span (rank must be exactly `N - d_i`) completes
/// `G_i = [D_ii^H V_i | J_i]`; the normalized conjugate rows of `G_i^-1`
/// are the receive directions. Returns the directions and the smallest
/// `G_i` singular value.
pub fn build_rx_directions(
    csi: &Grid<Vec<Complex64>>,
    dims: &IaDimensions,
    tx: &[Vec<Vec<Complex64>>],
) -> Result<(Vec<Vec<Vec<Complex64>>>, f64)> {
    if dims.pairs != 3 {
        return Err(Error::Unsupported(
            "the explicit direction construction covers M = 3 only".into(),
        ));
    }
    let n = dims.tones;
    check_grid_shape(csi, 3, n)?;
    let mut rx = Vec::with_capacity(3);
    let mut min_sv = f64::INFINITY;

    for i in 0..3 {
        let d_i = dims.stream_count(i);

        let mut interference: Vec<Vec<Complex64>> = Vec::new();
        for k in 0..3 {
            if k == i {
                continue;
            }
            for v in &tx[k] {
                interference.push(adjoint_apply(&csi[i][k], v));
            }
        }
        let svd = columns_matrix(&interference).svd(true, false);
        let smax = svd.singular_values[0];
        if !(smax > 0.0) || !smax.is_finite() {
            return Err(Error::DegenerateCsi("interference span vanished".into()));
        }
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > RANK_TOL * smax)
            .count();
        if rank != n - d_i {
            return Err(Error::DegenerateCsi(format!(
                "interference at destination {i} spans {rank} dimensions, expected {}",
                n - d_i
            )));
        }
        let basis = svd.u.expect("u requested");

        let mut g_cols: Vec<Vec<Complex64>> = tx[i]
            .iter()
            .map(|v| adjoint_apply(&csi[i][i], v))
            .collect();
        for c in 0..rank {
            g_cols.push(basis.column(c).iter().copied().collect());
        }
        let g = columns_matrix(&g_cols);

        let svd_g = g.clone().svd(false, false);
        let smax_g = svd_g.singular_values[0];
        let smin_g = svd_g.singular_values[svd_g.singular_values.len() - 1];
        if !(smin_g > 0.0) || smax_g / smin_g > MAX_CONDITION {
            return Err(Error::DegenerateCsi(format!(
                "receive basis at destination {i} is ill conditioned"
            )));
        }
        min_sv = min_sv.min(smin_g);

        let inv = g
            .try_inverse()
            .ok_or_else(|| Error::DegenerateCsi("receive basis is singular".into()))?;
        let mut u_i = Vec::with_capacity(d_i);
        for m in 0..d_i {
            let raw: Vec<Complex64> = (0..n).map(|r| inv[(m, r)].conj()).collect();
            u_i.push(normalized(&raw)?);
        }
        rx.push(u_i);
    }
    Ok((rx, min_sv))
}

/// Measure every coupling coefficient `|u_i^m^H D_ik^H v_k^p|` and bucket
/// the magnitudes into direct gains, inter-stream leakage, and
/// cross-source leakage. Also evaluates each coefficient a second way,
/// through `w~^H (u* ∘ v)`, and reports the largest disagreement.
pub fn check_alignment_conditions(
    csi: &Grid<Vec<Complex64>>,
    rx: &[Vec<Vec<Complex64>>],
    tx: &[Vec<Vec<Complex64>>],
    tol: f64,
) -> AlignmentDiagnostics {
    let pairs = csi.len();
    let mut direct_gains = Vec::with_capacity(pairs);
    let mut cross: f64 = 0.0;
    let mut interference: f64 = 0.0;
    let mut hadamard: f64 = 0.0;

    for i in 0..pairs {
        let mut gains = Vec::with_capacity(rx[i].len());
        for (m, u) in rx[i].iter().enumerate() {
            let mut direct = 0.0;
            for k in 0..pairs {
                for (p, v) in tx[k].iter().enumerate() {
                    let coeff = inner(u, &adjoint_apply(&csi[i][k], v));
                    let via_hadamard = inner(&csi[i][k], &hadamard_conj(u, v));
                    hadamard = hadamard.max((coeff - via_hadamard).norm());
                    let mag = coeff.norm();
                    if k != i {
                        interference = interference.max(mag);
                    } else if p == m {
                        direct = mag;
                    } else {
                        cross = cross.max(mag);
                    }
                }
            }
            gains.push(direct);
        }
        direct_gains.push(gains);
    }

    let min_direct = direct_gains
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let conditions_met = min_direct > 0.0
        && cross <= tol * min_direct
        && interference <= tol * min_direct;

    AlignmentDiagnostics {
        direct_gains,
        cross_residual: cross,
        interference_residual: interference,
        min_singular_value: f64::NAN,
        hadamard_residual: hadamard,
        conditions_met,
    }
}

/// Build transmit and receive directions from a CSI grid and verify the
/// alignment conditions against that same grid.
pub fn build_direction_sets(
    csi: &Grid<Vec<Complex64>>,
    dims: &IaDimensions,
    tol: f64,
) -> Result<DirectionSets> {
    let tx = build_tx_directions(csi, dims)?;
    let (rx, min_sv) = build_rx_directions(csi, dims, &tx)?;
    let mut diagnostics = check_alignment_conditions(csi, &rx, &tx, tol);
    diagnostics.min_singular_value = min_sv;
    if !diagnostics.conditions_met {
        return Err(Error::DegenerateCsi(format!(
            "alignment conditions failed: cross {:.3e}, interference {:.3e}",
            diagnostics.cross_residual, diagnostics.interference_residual
        )));
    }
    Ok(DirectionSets {
        tx,
        rx,
        diagnostics,
    })
}
