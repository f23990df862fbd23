//! Disk configurations in the periodic cell.
//!
//! Centers are stored reduced to the fundamental parallelogram, i.e. with
//! lattice coordinates in `[-1/2, 1/2)^2`. Differences between centers are
//! always taken through the minimal-norm periodic representative.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::Cell;

/// Slack allowed in the pairwise non-overlap check.
pub const OVERLAP_TOL: f64 = 1e-12;

/// Default upper bound on ν for random sequential addition. The RSA jamming
/// limit for disks is about 0.547.
pub const DEFAULT_NU_GUARD: f64 = 0.5;

/// Default number of candidate draws before generation gives up.
pub const DEFAULT_MAX_ATTEMPTS: u64 = 1_000_000;

/// Representative of `z` in the fundamental parallelogram.
pub fn periodic_reduce(cell: &Cell, z: Complex64) -> Complex64 {
    let (s, t) = cell.lattice_coords(z);
    let s = wrap_half(s);
    let t = wrap_half(t);
    cell.omega2() * t + s * cell.omega1()
}

fn wrap_half(x: f64) -> f64 {
    let mut y = x - (x + 0.5).floor();
    if y >= 0.5 {
        y -= 1.0;
    } else if y < -0.5 {
        y += 1.0;
    }
    y
}

/// Minimal-norm translate of `z` over the lattice.
pub fn periodic_representative(cell: &Cell, z: Complex64) -> Complex64 {
    let r = periodic_reduce(cell, z);
    let mut best = r;
    for m2 in -1..=1 {
        for m1 in -1..=1 {
            let c = r + cell.omega1() * m1 as f64 + cell.omega2() * m2 as f64;
            if c.norm_sqr() < best.norm_sqr() {
                best = c;
            }
        }
    }
    best
}

/// Periodic distance between two points.
pub fn periodic_distance(cell: &Cell, z1: Complex64, z2: Complex64) -> f64 {
    periodic_representative(cell, z1 - z2).norm()
}

/// Length of the shortest nonzero lattice vector.
pub fn shortest_period(cell: &Cell) -> f64 {
    let mut best = f64::INFINITY;
    for m2 in -3i32..=3 {
        for m1 in -3i32..=3 {
            if m1 == 0 && m2 == 0 {
                continue;
            }
            let p = cell.omega2() * m2 as f64 + cell.omega1() * m1 as f64;
            best = best.min(p.norm());
        }
    }
    best
}

/// `N` equal disks of radius `r` in a unit-area cell.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskConfiguration {
    cell: Cell,
    centers: Vec<Complex64>,
    radius: f64,
}

impl DiskConfiguration {
    /// Validates and builds a configuration. Centers are reduced to the
    /// fundamental parallelogram.
    pub fn new(cell: Cell, centers: Vec<Complex64>, radius: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidConfiguration("at least one disk is required".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidConfiguration(format!("radius must be positive, got {radius}")));
        }
        if let Some(z) = centers.iter().find(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidConfiguration(format!("non-finite center {z}")));
        }
        let centers: Vec<Complex64> = centers.into_iter().map(|z| periodic_reduce(&cell, z)).collect();
        let config = DiskConfiguration { cell, centers, radius };
        let nu = config.concentration();
        if nu >= 1.0 {
            return Err(Error::InvalidConfiguration(format!("concentration {nu} must be below 1")));
        }
        config.check_overlap()?;
        Ok(config)
    }

    fn check_overlap(&self) -> Result<()> {
        let d = 2.0 * self.radius;
        if shortest_period(&self.cell) < d - OVERLAP_TOL {
            return Err(Error::InvalidConfiguration(format!(
                "disk of radius {} overlaps its own periodic image",
                self.radius
            )));
        }
        for j in 0..self.centers.len() {
            for k in 0..j {
                let dist = periodic_distance(&self.cell, self.centers[j], self.centers[k]);
                if dist < d - OVERLAP_TOL {
                    return Err(Error::InvalidConfiguration(format!(
                        "disks {k} and {j} overlap: periodic distance {dist} < 2r = {d}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cell(&self) -> &Cell {
        &self.cell
    }

    pub fn centers(&self) -> &[Complex64] {
        &self.centers
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n(&self) -> usize {
        self.centers.len()
    }

    /// Area fraction ν = N π r².
    pub fn concentration(&self) -> f64 {
        self.centers.len() as f64 * PI * self.radius * self.radius
    }

    /// Same centers with a different radius, revalidated.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        DiskConfiguration::new(self.cell.clone(), self.centers.clone(), radius)
    }

    /// Same configuration with lattice sums cached up to order `n`.
    pub fn with_max_order(&self, n: usize) -> Self {
        DiskConfiguration {
            cell: self.cell.with_max_order(n),
            centers: self.centers.clone(),
            radius: self.radius,
        }
    }

    /// Minimal-norm periodic representative of `a_j - a_k`.
    pub fn difference(&self, j: usize, k: usize) -> Complex64 {
        periodic_representative(&self.cell, self.centers[j] - self.centers[k])
    }

    /// Smallest surface-to-surface distance, including the distance between
    /// a disk and its own periodic images.
    pub fn min_gap(&self) -> f64 {
        let mut best = shortest_period(&self.cell);
        for j in 0..self.centers.len() {
            for k in 0..j {
                best = best.min(self.difference(j, k).norm());
            }
        }
        best - 2.0 * self.radius
    }
}

/// Parameters of a Monte Carlo ensemble of random configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleDescriptor {
    pub n: usize,
    pub nu: f64,
    pub trials: usize,
    pub seed: u64,
    pub cell: Cell,
    pub nu_guard: f64,
    pub max_attempts: u64,
}

impl EnsembleDescriptor {
    /// Descriptor on the square cell with the default guard and budget.
    pub fn new(n: usize, nu: f64, trials: usize, seed: u64) -> Self {
        EnsembleDescriptor {
            n,
            nu,
            trials,
            seed,
            cell: Cell::square(),
            nu_guard: DEFAULT_NU_GUARD,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn with_cell(mut self, cell: Cell) -> Self {
        self.cell = cell;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfiguration("N must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfiguration("trials must be at least 1".into()));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(Error::InvalidConfiguration(format!("nu must lie in (0, 1), got {}", self.nu)));
        }
        if self.nu > self.nu_guard {
            return Err(Error::InvalidConfiguration(format!(
                "nu = {} exceeds the RSA guard {}",
                self.nu, self.nu_guard
            )));
        }
        Ok(())
    }

    /// Common disk radius `sqrt(ν / (N π))`.
    pub fn radius(&self) -> f64 {
        (self.nu / (self.n as f64 * PI)).sqrt()
    }

    /// Seed for trial `i`: the master seed xor `splitmix64(i)`.
    pub fn trial_seed(&self, i: usize) -> u64 {
        trial_seed(self.seed, i)
    }
}

/// One step of the SplitMix64 generator applied to `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, i: usize) -> u64 {
    master ^ splitmix64(i as u64)
}

/// Random sequential addition driven by `desc.seed`.
pub fn rsa_generate(desc: &EnsembleDescriptor) -> Result<DiskConfiguration> {
    desc.validate()?;
    rsa_place(&desc.cell, desc.n, desc.radius(), desc.seed, desc.max_attempts)
}

/// Configuration for trial `i` of an ensemble.
pub fn rsa_trial(desc: &EnsembleDescriptor, i: usize) -> Result<DiskConfiguration> {
    desc.validate()?;
    rsa_place(&desc.cell, desc.n, desc.radius(), desc.trial_seed(i), desc.max_attempts)
        .map_err(|e| Error::Trial { trial: i, source: Box::new(e) })
}

/// Places `n` disks of radius `r` one at a time: each candidate is uniform
/// in the cell and is accepted iff it keeps distance `2r` from every
/// accepted center.
pub fn rsa_place(cell: &Cell, n: usize, radius: f64, seed: u64, max_attempts: u64) -> Result<DiskConfiguration> {
    if n == 0 {
        return Err(Error::InvalidConfiguration("N must be at least 1".into()));
    }
    let d = 2.0 * radius;
    if shortest_period(cell) < d {
        return Err(Error::InvalidConfiguration(format!(
            "disk of radius {radius} overlaps its own periodic image"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Complex64> = Vec::with_capacity(n);
    let mut attempts = 0u64;
    while centers.len() < n {
        if attempts >= max_attempts {
            return Err(Error::Generation {
                placed: centers.len(),
                requested: n,
                attempts,
            });
        }
        attempts += 1;
        let s: f64 = rng.gen::<f64>() - 0.5;
        let t: f64 = rng.gen::<f64>() - 0.5;
        let z = periodic_reduce(cell, cell.omega2() * t + s * cell.omega1());
        if centers.iter().all(|&a| periodic_distance(cell, z, a) >= d) {
            centers.push(z);
        }
    }
    DiskConfiguration::new(cell.clone(), centers, radius)
}

/// Regular benchmark arrays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArrayKind {
    Square,
    Hexagonal,
}

/// `N = m²` disks on the sublattice spanned by `ω1/m` and `ω2/m`. For
/// `N = 1` the disk sits at the origin.
pub fn regular_array(cell: &Cell, kind: ArrayKind, n: usize, nu: f64) -> Result<DiskConfiguration> {
    let m = (n as f64).sqrt().round() as usize;
    if n == 0 || m * m != n {
        return Err(Error::Domain(format!("regular arrays need N = m^2 disks, got {n}")));
    }
    let compatible = match kind {
        ArrayKind::Square => cell.is_square(),
        ArrayKind::Hexagonal => (cell.tau() - Complex64::from_polar(1.0, PI / 3.0)).norm() < 1e-12,
    };
    if !compatible {
        return Err(Error::Domain(format!("{kind:?} array requires the matching cell shape")));
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Domain(format!("nu must lie in (0, 1), got {nu}")));
    }
    let mut centers = Vec::with_capacity(n);
    for j in 0..m {
        for i in 0..m {
            let s = (i as f64 + 0.5) / m as f64 - 0.5;
            let t = (j as f64 + 0.5) / m as f64 - 0.5;
            centers.push(cell.omega2() * t + s * cell.omega1());
        }
    }
    let radius = (nu / (n as f64 * PI)).sqrt();
    DiskConfiguration::new(cell.clone(), centers, radius)
}
