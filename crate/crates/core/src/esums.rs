//! Structural convolution sums
//!
//! ```text
//! e_{m1...mq} = N^{-(1 + (m1+...+mq)/2)} Σ_{k0..kq} E_{m1}(a_k0 - a_k1) · conj(E_{m2}(a_k1 - a_k2)) · ...
//! ```
//!
//! Factor `j` (1-based) is conjugated iff `j` is even. Self terms use the
//! regularized convention `E_n(0) := S_n`. The nested sum is evaluated as a
//! chain of matrix-vector products against cached kernel matrices.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::f17;
use crate::geometry::DiskConfiguration;

/// Multi-index `(m1, ..., mq)` with every entry at least 2.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("multi-index must have at least one entry".into()));
        }
        if let Some(m) = entries.iter().find(|&&m| m < 2) {
            return Err(Error::Domain(format!("multi-index entries must be >= 2, got {m}")));
        }
        Ok(MultiIndex(entries))
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn q(&self) -> usize {
        self.0.len()
    }

    /// Normalization exponent `1 + (m1 + ... + mq) / 2`.
    pub fn weight(&self) -> f64 {
        1.0 + self.0.iter().sum::<usize>() as f64 / 2.0
    }

    pub fn max_entry(&self) -> usize {
        *self.0.iter().max().expect("non-empty")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|m| m.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    /// Accepts `3-3-2`, and also the compact form `332` when every entry is
    /// a single digit.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let entries: Option<Vec<usize>> = if s.contains('-') {
            s.split('-').map(|p| p.trim().parse::<usize>().ok()).collect()
        } else {
            s.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect()
        };
        let entries = entries.ok_or_else(|| Error::Domain(format!("cannot parse multi-index {s:?}")))?;
        MultiIndex::new(entries)
    }
}

/// A multi-index with its value on one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiIndexSum {
    pub index: MultiIndex,
    pub value: Complex64,
}

/// Kernel matrices `K_n[j][k] = E_n(a_j - a_k)`, with `K_n[k][k] = S_n`,
/// for `n = 2..=max_order`.
#[derive(Clone, Debug)]
pub struct Kernels {
    n: usize,
    max_order: usize,
    // mats[n - 2] is row-major N x N
    mats: Vec<Vec<Complex64>>,
}

impl Kernels {
    /// Builds all kernel orders up to `max_order`. The cell must cache
    /// lattice sums at least that far.
    pub fn build(config: &DiskConfiguration, max_order: usize) -> Result<Self> {
        let max_order = max_order.max(2);
        let cell = config.cell();
        if cell.max_order() < max_order {
            return Err(Error::Resource {
                needed: max_order,
                available: cell.max_order(),
            });
        }
        let n = config.n();
        let orders = max_order - 1;
        // Row j holds E_n(a_j - a_k) for k < j; the upper triangle follows
        // from E_n(-z) = (-1)^n E_n(z).
        let rows: Vec<Vec<Vec<Complex64>>> = (0..n)
            .into_par_iter()
            .map(|j| {
                (0..j)
                    .map(|k| cell.eisenstein_all(config.difference(j, k), max_order))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let sums = cell.lattice_sums();
        let mut mats = vec![vec![Complex64::new(0.0, 0.0); n * n]; orders];
        for (o, mat) in mats.iter_mut().enumerate() {
            let order = o + 2;
            let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
            for j in 0..n {
                mat[j * n + j] = sums[order];
                for k in 0..j {
                    let v = rows[j][k][order];
                    mat[j * n + k] = v;
                    mat[k * n + j] = v * sign;
                }
            }
        }
        Ok(Kernels { n, max_order, mats })
    }

    /// Number of disks.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Row-major kernel matrix of order `order`.
    pub fn matrix(&self, order: usize) -> Result<&[Complex64]> {
        if order < 2 {
            return Err(Error::Domain(format!("kernel order must be >= 2, got {order}")));
        }
        if order > self.max_order {
            return Err(Error::Resource {
                needed: order,
                available: self.max_order,
            });
        }
        Ok(&self.mats[order - 2])
    }

    /// `E_order(a_j - a_k)`, regularized on the diagonal.
    pub fn get(&self, order: usize, j: usize, k: usize) -> Complex64 {
        self.mats[order - 2][j * self.n + k]
    }
}

/// `e_index` from prebuilt kernels.
pub fn esum_with(kernels: &Kernels, index: &MultiIndex) -> Result<Complex64> {
    let n = kernels.n();
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    // Contract from the last factor backwards: v <- F_j v.
    for (pos, &m) in index.entries().iter().enumerate().rev() {
        let mat = kernels.matrix(m)?;
        let conj = (pos + 1) % 2 == 0;
        v = (0..n)
            .map(|row| {
                let r = &mat[row * n..(row + 1) * n];
                if conj {
                    r.iter().zip(&v).map(|(a, b)| a.conj() * b).sum()
                } else {
                    r.iter().zip(&v).map(|(a, b)| a * b).sum()
                }
            })
            .collect();
    }
    let total: Complex64 = v.iter().sum();
    Ok(total / (n as f64).powf(index.weight()))
}

/// `e_index` on a configuration. Builds only the kernel orders the index
/// needs, extending the cell's lattice-sum cache if necessary.
pub fn esum(config: &DiskConfiguration, index: &MultiIndex) -> Result<Complex64> {
    let top = index.max_entry();
    let config = config.with_max_order(top);
    let kernels = Kernels::build(&config, top)?;
    esum_with(&kernels, index)
}

/// `e_nn` through `(-1)^n / N^{n+1} Σ_m |Σ_k E_n(a_m - a_k)|²`.
pub fn esum_nn_with(kernels: &Kernels, n: usize) -> Result<Complex64> {
    if n < 2 {
        return Err(Error::Domain(format!("e_nn needs n >= 2, got {n}")));
    }
    let size = kernels.n();
    let mat = kernels.matrix(n)?;
    let total: f64 = (0..size)
        .map(|m| mat[m * size..(m + 1) * size].iter().sum::<Complex64>().norm_sqr())
        .sum();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(Complex64::new(sign * total / (size as f64).powi(n as i32 + 1), 0.0))
}

pub fn esum_nn(config: &DiskConfiguration, n: usize) -> Result<Complex64> {
    if n < 2 {
        return Err(Error::Domain(format!("e_nn needs n >= 2, got {n}")));
    }
    let config = config.with_max_order(n);
    let kernels = Kernels::build(&config, n)?;
    esum_nn_with(&kernels, n)
}

/// Multi-indices appearing in the cluster coefficients `A_1..A_max_order`,
/// in order of first appearance.
pub fn required_indices(max_order: usize) -> Result<Vec<MultiIndex>> {
    if !(1..=crate::series::MAX_CLUSTER_ORDER).contains(&max_order) {
        return Err(Error::Domain(format!(
            "cluster order must lie in 1..={}, got {max_order}",
            crate::series::MAX_CLUSTER_ORDER
        )));
    }
    let mut out: Vec<MultiIndex> = Vec::new();
    for terms in &crate::series::CLUSTER_TERMS[..max_order] {
        for &(_, _, idx) in terms.iter() {
            let mi = MultiIndex(idx.to_vec());
            if !out.contains(&mi) {
                out.push(mi);
            }
        }
    }
    Ok(out)
}

/// Evaluates several indices against one kernel cache.
pub fn esums_with(kernels: &Kernels, indices: &[MultiIndex]) -> Result<Vec<MultiIndexSum>> {
    indices
        .par_iter()
        .map(|index| {
            Ok(MultiIndexSum {
                index: index.clone(),
                value: esum_with(kernels, index)?,
            })
        })
        .collect()
}

/// CSV with header `config_id,index,re,im`.
pub fn write_csv<W: Write>(out: &mut W, rows: &[(usize, MultiIndexSum)]) -> Result<()> {
    writeln!(out, "config_id,index,re,im")?;
    for (id, s) in rows {
        writeln!(out, "{},{},{},{}", id, s.index, f17(s.value.re), f17(s.value.im))?;
    }
    Ok(())
}
