//! Conductance of a doubly stochastic matrix, plus the spectral gap used as
//! the iterative-averaging reference.
//!
//! For `P` doubly stochastic,
//!
//! ```text
//! Φ(P) = min_{0 < |S| <= n/2} ( Σ_{i∈S, j∉S} P_ij ) / |S|
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::TransitionMatrix;
use crate::rng::{seeded_rng, uniform_closed_open};

pub const DEFAULT_ENUMERATION_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConductanceMethod {
    Enumeration,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductanceResult {
    pub value: f64,
    /// A minimizing subset, ascending node indices.
    pub argmin_set: Vec<usize>,
    pub method: ConductanceMethod,
}

/// Cut ratio `Σ_{i∈S, j∉S} P_ij / |S|` for an arbitrary subset.
///
/// Sums row by row in ascending `i`, and within a row in ascending `j`, so
/// it reproduces the enumeration's value bit for bit.
pub fn cut_ratio(p: &TransitionMatrix, set: &[usize]) -> f64 {
    let mut inside = vec![false; p.n()];
    for &i in set {
        inside[i] = true;
    }
    let mut cut = 0.0;
    for (i, _) in inside.iter().enumerate().filter(|(_, &s)| s) {
        for &(j, pij) in p.row(i) {
            if !inside[j] {
                cut += pij;
            }
        }
    }
    cut / set.len() as f64
}

fn cut_ratio_mask(p: &TransitionMatrix, mask: u64) -> f64 {
    let mut cut = 0.0;
    let mut rest = mask;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        for &(j, pij) in p.row(i) {
            if mask >> j & 1 == 0 {
                cut += pij;
            }
        }
    }
    cut / f64::from(mask.count_ones())
}

pub fn conductance_exact(p: &TransitionMatrix) -> Result<ConductanceResult> {
    conductance_exact_with_cap(p, DEFAULT_ENUMERATION_CAP)
}

/// Exhaustive minimum over all subsets with `0 < |S| <= n/2`. Ties go to
/// the numerically smallest bitmask.
pub fn conductance_exact_with_cap(p: &TransitionMatrix, cap: usize) -> Result<ConductanceResult> {
    let n = p.n();
    if n > cap || n > 63 {
        return Err(Error::SizeLimit { n, cap: cap.min(63) });
    }
    if n < 2 {
        return Err(Error::invalid("conductance needs n >= 2"));
    }
    let half = (n / 2) as u32;
    let total: u64 = 1 << n;
    const CHUNK: u64 = 1 << 14;
    let chunks = total.div_ceil(CHUNK);

    let (value, mask) = (0..chunks)
        .into_par_iter()
        .filter_map(|c| {
            let lo = (c * CHUNK).max(1);
            let hi = ((c + 1) * CHUNK).min(total);
            let mut best: Option<(f64, u64)> = None;
            for mask in lo..hi {
                if mask.count_ones() > half {
                    continue;
                }
                let ratio = cut_ratio_mask(p, mask);
                if best.is_none_or(|(b, _)| ratio < b) {
                    best = Some((ratio, mask));
                }
            }
            best
        })
        .reduce_with(|a, b| {
            match a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)) {
                std::cmp::Ordering::Greater => b,
                _ => a,
            }
        })
        .expect("n >= 2 has at least one admissible subset");

    let argmin_set = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
    Ok(ConductanceResult {
        value,
        argmin_set,
        method: ConductanceMethod::Enumeration,
    })
}

/// `⌈n/2⌉ / (n-1)`: exact conductance of the complete graph's max-degree
/// matrix, approaching 1/2 from above.
pub fn conductance_complete_closed_form(n: usize) -> f64 {
    assert!(n >= 2, "complete graph needs n >= 2");
    n.div_ceil(2) as f64 / (n - 1) as f64
}

/// Closed-form result for the complete graph; the argmin is the first
/// `⌊n/2⌋` nodes.
pub fn complete_closed_form_result(n: usize) -> ConductanceResult {
    ConductanceResult {
        value: conductance_complete_closed_form(n),
        argmin_set: (0..n / 2).collect(),
        method: ConductanceMethod::ClosedForm,
    }
}

/// Heuristic floor `1/(2 d c)` for the max-degree grid matrix. Only its
/// order of growth is meaningful; the constant is set to 1.
pub fn grid_conductance_lower_bound(d: usize, c: usize) -> f64 {
    1.0 / (2 * d * c) as f64
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            tolerance: 1e-9,
            max_iterations: 1_000_000,
        }
    }
}

/// Second-largest eigenvalue of a symmetric doubly stochastic matrix.
///
/// Power iteration on `(P + I)/2` restricted to the complement of the
/// uniform vector; the shift makes the spectrum non-negative so the
/// dominant eigenvalue there is the algebraically largest one.
pub fn second_eigenvalue(p: &TransitionMatrix, opts: SpectralOptions) -> Result<f64> {
    let n = p.n();
    if !p.is_symmetric() {
        return Err(Error::invalid("spectral gap requires a symmetric matrix"));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let mut rng = seeded_rng(0x005E_ED0F_5A11);
    let mut v: Vec<f64> = (0..n).map(|_| uniform_closed_open(&mut rng) - 0.5).collect();
    project_out_mean(&mut v);
    normalize(&mut v);
    let mut pv = vec![0.0; n];
    for _ in 0..opts.max_iterations {
        p.mul_vec(&v, &mut pv);
        let mut w: Vec<f64> = pv.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
        project_out_mean(&mut w);
        let mu: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - mu * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= opts.tolerance * mu.abs().max(f64::EPSILON) {
            return Ok(2.0 * mu - 1.0);
        }
        let norm = norm(&w);
        if norm == 0.0 {
            // (P + I)/2 vanishes off the uniform vector: P = -I there.
            return Ok(-1.0);
        }
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Err(Error::NumericalFailure(format!(
        "power iteration did not converge in {} iterations",
        opts.max_iterations
    )))
}

/// `1 - max(λ2, 0)`. Negative second eigenvalues are clamped.
pub fn spectral_gap(p: &TransitionMatrix) -> Result<f64> {
    spectral_gap_with(p, SpectralOptions::default())
}

pub fn spectral_gap_with(p: &TransitionMatrix, opts: SpectralOptions) -> Result<f64> {
    Ok(1.0 - second_eigenvalue(p, opts)?.max(0.0))
}

fn project_out_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    v.iter_mut().for_each(|x| *x /= n);
}
