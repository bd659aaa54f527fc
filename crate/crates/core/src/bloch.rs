//! Latitude-band spatial index on the Bloch sphere.
//!
//! A unit vector `w` in `C^2` maps (dropping global phase) to the point
//! `n(w) = (2 Re(w0* w1), 2 Im(w0* w1), |w0|^2 - |w1|^2)` on the unit
//! sphere, and `|<w, p>|^2 = (1 + n(w) . n(p)) / 2`. Line angle and
//! great-circle distance are therefore monotonically linked:
//! `|<w, p>| >= cos(delta)` exactly when the Bloch points are within
//! great-circle angle `2 * delta`. Radius queries on the sphere prune
//! codeword candidates without ever changing which inner products get
//! evaluated exactly.
//!
//! The index guarantees that a radius-`r` visit reaches every stored point
//! within angle `r` of the query; it may visit a few more. Callers
//! re-check candidates with exact complex arithmetic, so pruning slack
//! cannot change results.
//!
//! Queries at the construction radius take a precomputed path: the
//! azimuthal window of every (query band, neighbor band) pair is derived
//! once from the haversine bound
//! `sin(dphi/2) <= sin(r/2) / sqrt(sin(t_q) sin(t_p))`
//! with band-worst-case colatitudes, leaving only two coordinate
//! transcendentals per query. The greedy packing loop lives on this path.

use num_complex::Complex64;

/// Hard ceiling on cell count so tiny radii cannot exhaust memory.
const MAX_CELLS: usize = 1 << 25;

#[derive(Debug, Clone)]
pub(crate) struct BlochIndex {
    /// Radius the fast query plan was built for (also the cell size).
    radius: f64,
    band_height: f64,
    /// Azimuthal cell count per latitude band.
    band_cells: Vec<usize>,
    /// Prefix offsets of each band into `heads`.
    band_offset: Vec<usize>,
    /// Minimum of sin(theta) over each band.
    band_sin_min: Vec<f64>,
    /// Fast-path half-windows: for a query in band `b`, entry
    /// `plan[b][j]` bounds the azimuthal half-window in band `b + j - 1`
    /// for radius-`radius` queries. `INFINITY` means scan the whole band.
    plan: Vec<[f64; 3]>,
    /// Head of the singly-linked point list per cell, -1 if empty.
    heads: Vec<i32>,
    /// Next pointer per point id.
    next: Vec<i32>,
}

/// Bloch-sphere coordinates of a unit vector in `C^2`.
pub(crate) fn bloch_point(w: &[Complex64]) -> [f64; 3] {
    debug_assert_eq!(w.len(), 2);
    let c = w[0].conj() * w[1];
    [2.0 * c.re, 2.0 * c.im, w[0].norm_sqr() - w[1].norm_sqr()]
}

/// Great-circle angle between two Bloch points.
#[cfg(test)]
pub(crate) fn bloch_angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    dot.clamp(-1.0, 1.0).acos()
}

fn colatitude(p: [f64; 3]) -> f64 {
    p[2].clamp(-1.0, 1.0).acos()
}

fn azimuth(p: [f64; 3]) -> f64 {
    p[1].atan2(p[0])
}

impl BlochIndex {
    /// Build an empty index sized for radius-`r` queries: cells are about
    /// one query radius wide, so a query touches a handful of cells.
    pub(crate) fn new(radius: f64) -> Self {
        let mut h = radius.clamp(1e-6, std::f64::consts::PI);
        // total cells ~ 4*pi / h^2; widen cells if that would be too many
        let est = 4.0 * std::f64::consts::PI / (h * h);
        if est > MAX_CELLS as f64 {
            h *= (est / MAX_CELLS as f64).sqrt();
        }
        // floor keeps band_height >= h >= radius, so a radius query never
        // reaches past the adjacent bands the fast path scans
        let bands = ((std::f64::consts::PI / h).floor() as usize).max(1);
        let band_height = std::f64::consts::PI / bands as f64;
        let mut band_cells = Vec::with_capacity(bands);
        let mut band_offset = Vec::with_capacity(bands + 1);
        let mut band_sin_min = Vec::with_capacity(bands);
        let mut total = 0usize;
        for b in 0..bands {
            let t0 = b as f64 * band_height;
            let t1 = (b as f64 + 1.0) * band_height;
            let mid = 0.5 * (t0 + t1);
            let n = ((2.0 * std::f64::consts::PI * mid.sin()) / band_height)
                .ceil()
                .max(1.0) as usize;
            band_offset.push(total);
            band_cells.push(n);
            // sin is concave on [0, pi]: the band minimum sits at an edge
            band_sin_min.push(t0.sin().min(t1.sin()));
            total += n;
        }
        band_offset.push(total);

        let radius = radius.min(std::f64::consts::PI);
        let sin_half_r = (radius * 0.5).min(std::f64::consts::FRAC_PI_2).sin();
        let mut plan = Vec::with_capacity(bands);
        for b in 0..bands {
            let mut row = [f64::INFINITY; 3];
            for (j, slot) in row.iter_mut().enumerate() {
                let bt = b as isize + j as isize - 1;
                if bt < 0 || bt >= bands as isize {
                    continue;
                }
                let denom = band_sin_min[b] * band_sin_min[bt as usize];
                if denom > sin_half_r * sin_half_r {
                    // haversine bounds the half-difference of azimuths
                    *slot = 2.0 * (sin_half_r / denom.sqrt()).min(1.0).asin();
                }
            }
            plan.push(row);
        }

        Self {
            radius,
            band_height,
            band_cells,
            band_offset,
            band_sin_min,
            plan,
            heads: vec![-1; total],
            next: Vec::new(),
        }
    }

    /// The radius the fast path covers.
    pub(crate) fn plan_radius(&self) -> f64 {
        self.radius
    }

    fn band_of(&self, theta: f64) -> usize {
        ((theta / self.band_height) as usize).min(self.band_cells.len() - 1)
    }

    /// Insert the point with the next consecutive id.
    pub(crate) fn insert(&mut self, p: [f64; 3]) {
        let id = self.next.len();
        let band = self.band_of(colatitude(p));
        let n = self.band_cells[band];
        let u = (azimuth(p) + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
        let cell = self.band_offset[band] + ((u * n as f64) as usize).min(n - 1);
        self.next.push(self.heads[cell]);
        self.heads[cell] = id as i32;
    }

    /// Walk one band's cells covering `[phi_q - half, phi_q + half]`.
    /// Returns false if the visitor stopped the walk.
    fn walk_band<F: FnMut(usize) -> bool>(
        &self,
        band: usize,
        phi_q: f64,
        half: f64,
        f: &mut F,
    ) -> bool {
        let n = self.band_cells[band];
        let base = self.band_offset[band];
        let (start, count) = if half >= std::f64::consts::PI || n == 1 {
            (0usize, n)
        } else {
            let width = 2.0 * std::f64::consts::PI / n as f64;
            let lo = ((phi_q - half) + std::f64::consts::PI).div_euclid(width) as i64;
            let count = (((2.0 * half) / width) as usize + 2).min(n);
            (lo.rem_euclid(n as i64) as usize, count)
        };
        for j in 0..count {
            let cell = base + (start + j) % n;
            let mut cur = self.heads[cell];
            while cur >= 0 {
                if !f(cur as usize) {
                    return false;
                }
                cur = self.next[cur as usize];
            }
        }
        true
    }

    /// Visit ids of all stored points within great-circle angle `radius`
    /// of `q` (plus possibly a few farther ones). The visitor returns
    /// `false` to stop early; `visit` then returns `false`.
    pub(crate) fn visit<F: FnMut(usize) -> bool>(
        &self,
        q: [f64; 3],
        radius: f64,
        mut f: F,
    ) -> bool {
        let theta_q = colatitude(q);
        let phi_q = azimuth(q);
        let bq = self.band_of(theta_q);

        if radius <= self.radius {
            // precomputed windows; conservative for any radius <= plan radius
            for j in 0..3 {
                let bt = bq as isize + j as isize - 1;
                if bt < 0 || bt >= self.band_cells.len() as isize {
                    continue;
                }
                if !self.walk_band(bt as usize, phi_q, self.plan[bq][j], &mut f) {
                    return false;
                }
            }
            return true;
        }

        // general path for arbitrary radii
        let sin_q = (q[0] * q[0] + q[1] * q[1]).sqrt();
        let sin_half_r = (radius * 0.5).min(std::f64::consts::FRAC_PI_2).sin();
        let lo = (theta_q - radius).max(0.0);
        let hi = (theta_q + radius).min(std::f64::consts::PI);
        for band in self.band_of(lo)..=self.band_of(hi) {
            let denom = sin_q * self.band_sin_min[band];
            let half = if denom > sin_half_r * sin_half_r {
                2.0 * (sin_half_r / denom.sqrt()).min(1.0).asin()
            } else {
                f64::INFINITY
            };
            if !self.walk_band(band, phi_q, half, &mut f) {
                return false;
            }
        }
        true
    }

    /// Visit every stored point within `radius` of `q` without early exit.
    pub(crate) fn for_each_within<F: FnMut(usize)>(&self, q: [f64; 3], radius: f64, mut f: F) {
        self.visit(q, radius, |id| {
            f(id);
            true
        });
    }
}
