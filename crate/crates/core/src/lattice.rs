//! Fundamental cell, Eisenstein functions `E_n(z)` and lattice sums `S_n`.
//!
//! The lattice is `{m1*ω1 + m2*ω2}` with `ω1 > 0`, `Im ω2 > 0` and unit
//! cell area. Conditionally convergent sums (`E_1`, `E_2`, `S_2`) use the
//! Eisenstein ordering: the inner sum runs over `m1`, the outer over `m2`.
//!
//! Evaluation works on the normalized lattice `Z + τZ` (`τ = ω2/ω1`). With
//! the inner sum done in closed form each row `m2` contributes
//! `π cot(π(u + m2 τ))`; rows `m2 ≠ 0` are summed as a geometric series in
//! the nome `q = exp(2πiτ)`, and `E_n` follows by differentiating
//! term-by-term (`E_{n+1} = -E_n' / n`). The row `m2 = 0` is evaluated
//! from its nearest terms plus a Taylor tail whenever the argument is close
//! to the real axis, so no high-order cotangent derivatives are formed.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::F17;

/// Default number of cached lattice sums, `2 * (J_max + 2)` for `J_max = 6`.
pub const DEFAULT_MAX_ORDER: usize = 16;

/// Accepted range of the aspect ratio `Im(ω2) / ω1`.
pub const ASPECT_RANGE: (f64, f64) = (0.2, 5.0);

/// Distance to a lattice point below which `E_n` is not evaluated directly.
pub const SINGULAR_RADIUS: f64 = 1e-9;

const AREA_TOL: f64 = 1e-14;

// Row m2 = 0 switches from the exponential series to direct summation
// when |Im u| drops below this.
const ROW_DIRECT_IM: f64 = 0.3;

// Relative size (log) at which series terms are dropped.
const LOG_EPS: f64 = -41.0;

const HURWITZ_MAX: usize = 800;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `H[s] = Σ_{m≥3} m^{-s}` for `2 ≤ s ≤ HURWITZ_MAX`.
fn hurwitz_tail() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        const M: usize = 200;
        let mut table = vec![0.0; HURWITZ_MAX + 1];
        for (s, slot) in table.iter_mut().enumerate().skip(2) {
            let sf = s as f64;
            let mut acc = 0.0;
            for m in (3..=M).rev() {
                acc += (m as f64).powf(-sf);
            }
            // Euler-Maclaurin remainder for m > M.
            let mm = M as f64;
            let p = mm.powf(-sf);
            let tail = mm * p / (sf - 1.0) - p / 2.0 + sf * p / mm / 12.0
                - sf * (sf + 1.0) * (sf + 2.0) * p / mm.powi(3) / 720.0
                + sf * (sf + 1.0) * (sf + 2.0) * (sf + 3.0) * (sf + 4.0) * p / mm.powi(5)
                    / 30240.0;
            *slot = acc + tail;
        }
        table
    })
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Number of terms of a series `Σ_k (2πk)^{n-1}/(n-1)! e^{-2πkδ}` needed for
/// every order up to `nmax`, relative to its `δ^{-n}/(2π)` scale.
fn series_terms(delta: f64, nmax: usize) -> usize {
    let nm1 = nmax.saturating_sub(1) as f64;
    let lf = ln_factorial(nmax.saturating_sub(1));
    let two_pi_d = 2.0 * PI * delta;
    let peak = (nm1 / two_pi_d).ceil() as usize;
    let mut k = peak.max(1);
    loop {
        let kf = k as f64;
        let log_term = two_pi_d.ln() + nm1 * (two_pi_d * kf).ln() - lf - two_pi_d * kf;
        if log_term < LOG_EPS || k >= 20_000 {
            return k;
        }
        k += 1;
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CellRecord {
    omega1: F17,
    omega2: [F17; 2],
}

/// Fundamental cell of a doubly periodic lattice, normalized to unit area,
/// together with its cached lattice sums.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "CellRecord", try_from = "CellRecord")]
pub struct Cell {
    omega1: f64,
    omega2: Complex64,
    tau: Complex64,
    q: Complex64,
    sums: Vec<Complex64>,
}

impl From<Cell> for CellRecord {
    fn from(c: Cell) -> Self {
        CellRecord {
            omega1: F17(c.omega1),
            omega2: [F17(c.omega2.re), F17(c.omega2.im)],
        }
    }
}

impl TryFrom<CellRecord> for Cell {
    type Error = Error;
    fn try_from(s: CellRecord) -> Result<Self> {
        Cell::new(s.omega1.0, Complex64::new(s.omega2[0].0, s.omega2[1].0))
    }
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.omega1 == other.omega1 && self.omega2 == other.omega2
    }
}

/// Builds a unit-area cell from a period pair of the requested shape.
pub fn make_cell(omega1: f64, omega2: Complex64) -> Result<Cell> {
    Cell::new(omega1, omega2)
}

impl Cell {
    /// Rescales `(omega1, omega2)` to unit area. The shape is preserved.
    pub fn new(omega1: f64, omega2: Complex64) -> Result<Cell> {
        if !(omega1.is_finite() && omega1 > 0.0) {
            return Err(Error::InvalidCell(format!("omega1 must be positive, got {omega1}")));
        }
        if !(omega2.im.is_finite() && omega2.re.is_finite() && omega2.im > 0.0) {
            return Err(Error::InvalidCell(format!(
                "omega2 must have positive imaginary part, got {omega2}"
            )));
        }
        let area = omega1 * omega2.im;
        let (w1, w2) = if (area - 1.0).abs() <= AREA_TOL {
            (omega1, omega2)
        } else {
            let s = 1.0 / area.sqrt();
            (omega1 * s, omega2 * s)
        };
        let aspect = w2.im / w1;
        if aspect < ASPECT_RANGE.0 || aspect > ASPECT_RANGE.1 {
            return Err(Error::InvalidCell(format!(
                "aspect ratio Im(omega2)/omega1 = {aspect} outside [{}, {}]",
                ASPECT_RANGE.0, ASPECT_RANGE.1
            )));
        }
        let tau = w2 / w1;
        let q = (2.0 * PI * I * tau).exp();
        let mut cell = Cell {
            omega1: w1,
            omega2: w2,
            tau,
            q,
            sums: Vec::new(),
        };
        cell.sums = cell.compute_sums(DEFAULT_MAX_ORDER);
        Ok(cell)
    }

    /// The unit square cell `(1, i)`.
    pub fn square() -> Cell {
        Cell::new(1.0, I).expect("unit square is a valid cell")
    }

    /// The hexagonal cell `ω2 = exp(iπ/3) ω1`, rescaled to unit area.
    pub fn hexagonal() -> Cell {
        Cell::new(1.0, Complex64::from_polar(1.0, PI / 3.0)).expect("hexagonal cell is valid")
    }

    /// Same cell with lattice sums cached up to order `n`.
    pub fn with_max_order(&self, n: usize) -> Cell {
        let mut c = self.clone();
        if n > c.max_order() {
            c.sums = c.compute_sums(n);
        }
        c
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    pub fn omega2(&self) -> Complex64 {
        self.omega2
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn area(&self) -> f64 {
        self.omega1 * self.omega2.im
    }

    /// Highest cached lattice-sum order.
    pub fn max_order(&self) -> usize {
        self.sums.len() - 1
    }

    /// True for the unit square cell.
    pub fn is_square(&self) -> bool {
        (self.omega1 - 1.0).abs() < 1e-14 && (self.omega2 - I).norm() < 1e-14
    }

    /// Cached lattice sums, indexed by order (entries 0 and 1 are zero).
    pub fn lattice_sums(&self) -> &[Complex64] {
        &self.sums
    }

    fn compute_sums(&self, max_order: usize) -> Vec<Complex64> {
        let top = max_order.max(DEFAULT_MAX_ORDER);
        let mut s = vec![Complex64::new(0.0, 0.0); top + 1];
        let seed = self.normalized_all(Complex64::new(0.0, 0.0), 6, true);
        s[2] = seed[2];
        s[4] = seed[4];
        s[6] = seed[6];
        extend_by_recurrence(&mut s);
        self.scale_orders(&mut s);
        for n in (1..s.len()).step_by(2) {
            s[n] = Complex64::new(0.0, 0.0);
        }
        s
    }

    /// Lattice sum `S_n`. Odd orders are exactly zero.
    pub fn lattice_sum(&self, n: usize) -> Result<Complex64> {
        if n < 2 {
            return Err(Error::Domain(format!("lattice sum order must be >= 2, got {n}")));
        }
        if n % 2 == 1 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if n <= self.max_order() {
            Ok(self.sums[n])
        } else {
            Ok(self.compute_sums(n)[n])
        }
    }

    /// Lattice coordinates `(s, t)` with `z = s ω1 + t ω2`.
    pub fn lattice_coords(&self, z: Complex64) -> (f64, f64) {
        let t = z.im / self.omega2.im;
        let s = (z.re - t * self.omega2.re) / self.omega1;
        (s, t)
    }

    /// Representative of `z` in the fundamental parallelogram together with
    /// the translation: `z = reduced + m1 ω1 + m2 ω2`.
    pub fn reduce(&self, z: Complex64) -> (Complex64, i64, i64) {
        let t = z.im / self.omega2.im;
        let m2 = (t + 0.5).floor();
        let w = z - self.omega2 * m2;
        let m1 = (w.re / self.omega1 + 0.5).floor();
        let r = w - m1 * self.omega1;
        (r, m1 as i64, m2 as i64)
    }

    /// Distance from `z` to the nearest lattice point.
    pub fn lattice_distance(&self, z: Complex64) -> f64 {
        let (r, _, _) = self.reduce(z);
        self.min_translate(r).norm()
    }

    /// Minimal-norm translate of an already reduced point.
    pub(crate) fn min_translate(&self, r: Complex64) -> Complex64 {
        let mut best = r;
        for m2 in -1..=1 {
            for m1 in -1..=1 {
                let c = r + self.omega1 * m1 as f64 + self.omega2 * m2 as f64;
                if c.norm_sqr() < best.norm_sqr() {
                    best = c;
                }
            }
        }
        best
    }

    /// Eisenstein function `E_n(z)`.
    pub fn eisenstein(&self, n: usize, z: Complex64) -> Result<Complex64> {
        if n < 1 {
            return Err(Error::Domain("Eisenstein order must be >= 1".into()));
        }
        Ok(self.eisenstein_all(z, n)?[n])
    }

    /// `E_1(z) … E_nmax(z)` in one pass; entry `n` holds `E_n`, entry 0 is zero.
    pub fn eisenstein_all(&self, z: Complex64, nmax: usize) -> Result<Vec<Complex64>> {
        let (r, _m1, m2) = self.reduce(z);
        let d = self.min_translate(r).norm();
        if d < SINGULAR_RADIUS {
            return Err(Error::NearSingularity {
                z: format!("{z}"),
                distance: d,
            });
        }
        let mut v = self.normalized_all(r / self.omega1, nmax, false);
        self.scale_orders(&mut v);
        if nmax >= 1 {
            v[1] -= 2.0 * PI * I * (m2 as f64) / self.omega1;
        }
        Ok(v)
    }

    /// Regularized Eisenstein function `Ẽ_n(z) = E_n(z) - z^{-n}`, analytic
    /// at the origin with `Ẽ_n(0) = S_n`.
    pub fn eisenstein_regularized(&self, n: usize, z: Complex64) -> Result<Complex64> {
        if n < 2 {
            return Err(Error::Domain(format!(
                "regularized Eisenstein order must be >= 2, got {n}"
            )));
        }
        if z == Complex64::new(0.0, 0.0) {
            return self.lattice_sum(n);
        }
        Ok(self.eisenstein_regularized_all(z, n)?[n])
    }

    /// `Ẽ_1 … Ẽ_nmax` at `z`; entry 0 is zero.
    pub fn eisenstein_regularized_all(&self, z: Complex64, nmax: usize) -> Result<Vec<Complex64>> {
        let u = z / self.omega1;
        let (_, m1, m2) = self.reduce(z);
        if m1 == 0 && m2 == 0 && (u.re + 0.5).floor() == 0.0 && u.norm() < 1.0 {
            let mut v = self.normalized_all(u, nmax, true);
            self.scale_orders(&mut v);
            return Ok(v);
        }
        let mut v = self.eisenstein_all(z, nmax)?;
        let inv = 1.0 / z;
        let mut p = inv;
        for x in v.iter_mut().skip(1) {
            *x -= p;
            p *= inv;
        }
        Ok(v)
    }

    fn scale_orders(&self, v: &mut [Complex64]) {
        let inv = 1.0 / self.omega1;
        let mut f = inv;
        for x in v.iter_mut().skip(1) {
            *x *= f;
            f *= inv;
        }
    }

    /// `E_n(u)` for `n = 1..=nmax` on the lattice `Z + τZ`. Requires
    /// `|Im u| < Im τ`. With `exclude_origin` the term `u^{-n}` is omitted;
    /// the caller guarantees that `Re u ∈ [-1/2, 1/2)` and `|u| < 1` then.
    fn normalized_all(&self, u: Complex64, nmax: usize, exclude_origin: bool) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); nmax + 1];
        if nmax == 0 {
            return out;
        }
        let shift = (u.re + 0.5).floor();
        debug_assert!(!exclude_origin || shift == 0.0);
        let w = u - shift;
        if exclude_origin || w.im.abs() < ROW_DIRECT_IM {
            row_zero_direct(w, nmax, exclude_origin, &mut out);
        } else {
            row_zero_exponential(w, nmax, &mut out);
        }
        self.off_rows(w, nmax, &mut out);
        out
    }

    /// Contribution of all rows `m2 ≠ 0`:
    /// `2πi Σ_k p_{k,n} (b_k - (-1)^{n-1} a_k)` with
    /// `a_k = (q x)^k / (1 - q^k)`, `b_k = (q/x)^k / (1 - q^k)`,
    /// `x = exp(2πiw)` and `p_{k,n} = (2πik)^{n-1}/(n-1)!`.
    fn off_rows(&self, w: Complex64, nmax: usize, out: &mut [Complex64]) {
        let delta = self.tau.im - w.im.abs();
        debug_assert!(delta > 0.0);
        let kmax = series_terms(delta, nmax);
        let two_pi_i = 2.0 * PI * I;
        let qx = (two_pi_i * (self.tau + w)).exp();
        let qxi = (two_pi_i * (self.tau - w)).exp();
        let mut qk = Complex64::new(1.0, 0.0);
        let mut ak = Complex64::new(1.0, 0.0);
        let mut bk = Complex64::new(1.0, 0.0);
        for k in 1..=kmax {
            qk *= self.q;
            ak *= qx;
            bk *= qxi;
            let denom = Complex64::new(1.0, 0.0) / (1.0 - qk);
            let a = ak * denom;
            let b = bk * denom;
            let step = two_pi_i * k as f64;
            let mut p = Complex64::new(1.0, 0.0);
            for (n, slot) in out.iter_mut().enumerate().skip(1) {
                // (-1)^{n-1} = -1 for even n
                let inner = if n % 2 == 0 { b + a } else { b - a };
                *slot += two_pi_i * p * inner;
                p *= step / n as f64;
            }
        }
    }
}

/// Row `m2 = 0`: `Σ_{|m|≤2} (w+m)^{-n}` plus the Taylor tail
/// `Σ_j (-1)^j C(n+j-1, j) w^j (1 + (-1)^{n+j}) H(n+j)`.
fn row_zero_direct(w: Complex64, nmax: usize, exclude_origin: bool, out: &mut [Complex64]) {
    for m in -2i32..=2 {
        if m == 0 && exclude_origin {
            continue;
        }
        let inv = Complex64::new(1.0, 0.0) / (w + m as f64);
        let mut p = inv;
        for slot in out.iter_mut().skip(1) {
            *slot += p;
            p *= inv;
        }
    }
    let h = hurwitz_tail();
    let wn = w.norm();
    for n in 1..=nmax {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut binom = 1.0;
        let mut wp = Complex64::new(1.0, 0.0);
        let scale = out[n].norm() + h[(n).max(2)];
        let mut j = 0usize;
        loop {
            let s = n + j;
            if s > HURWITZ_MAX {
                break;
            }
            if s % 2 == 0 {
                let term = wp * (2.0 * binom * h[s]);
                acc += term;
                let shrinking = (s as f64) * wn < 1.5 * (j as f64 + 1.0);
                if shrinking && term.norm() <= 1e-18 * (scale + acc.norm()) {
                    break;
                }
            }
            binom *= s as f64 / (j + 1) as f64;
            wp *= -w;
            j += 1;
            if wp.norm() == 0.0 && j > 1 {
                break;
            }
        }
        out[n] += acc;
    }
}

/// Row `m2 = 0` for `|Im w| ≥ 0.3` via the exponential expansion of
/// `π cot(πw)`.
fn row_zero_exponential(w: Complex64, nmax: usize, out: &mut [Complex64]) {
    let upper = w.im > 0.0;
    let two_pi_i = 2.0 * PI * I;
    let y = if upper {
        (two_pi_i * w).exp()
    } else {
        (-two_pi_i * w).exp()
    };
    let kmax = series_terms(w.im.abs(), nmax);
    let mut yk = Complex64::new(1.0, 0.0);
    let mut acc = vec![Complex64::new(0.0, 0.0); nmax + 1];
    for k in 1..=kmax {
        yk *= y;
        let step = two_pi_i * k as f64;
        let mut p = Complex64::new(1.0, 0.0);
        for (n, slot) in acc.iter_mut().enumerate().skip(1) {
            *slot += p * yk;
            p *= step / n as f64;
        }
    }
    for n in 1..=nmax {
        let v = if upper {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            -two_pi_i * sign * acc[n]
        } else {
            two_pi_i * acc[n]
        };
        out[n] += v;
    }
    out[1] += if upper { -PI * I } else { PI * I };
}

/// Fills even `S_{2k}`, `k ≥ 4`, from `S_4` and `S_6` using the Laurent
/// coefficients `b_k = (2k-1) S_{2k}` of `℘`:
/// `b_k = 3 / ((2k+1)(k-3)) Σ_{m=2}^{k-2} b_m b_{k-m}`.
pub(crate) fn extend_by_recurrence(s: &mut [Complex64]) {
    let top = (s.len() - 1) / 2;
    if top < 4 {
        return;
    }
    let mut b = vec![Complex64::new(0.0, 0.0); top + 1];
    b[2] = 3.0 * s[4];
    b[3] = 5.0 * s[6];
    for k in 4..=top {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 2..=k - 2 {
            acc += b[m] * b[k - m];
        }
        b[k] = acc * (3.0 / ((2 * k + 1) as f64 * (k - 3) as f64));
        s[2 * k] = b[k] / (2 * k - 1) as f64;
    }
}
