//! Randomized reference classifier.
//!
//! A deterministic binary classifier with supports `(ν₀, ν₁)` is modelled by
//! a random classifier whose supports `Δ₀, Δ₁` are independent beta
//! variables with `E[Δᵢ] = νᵢ` and `λᵢ + μᵢ = 2`. The probability that the
//! random classifier picks class `m` is
//!
//! ```text
//! P(m) = ∫₀¹ b(u; λ_m, μ_m) · B(u; λ_j, μ_j) du,   j ≠ m
//! ```
//!
//! with `b`/`B` the beta density and CDF.
//!
//! For the class with support ≤ 0.5 the integrand above is bounded and is
//! integrated directly. For the other class the density is singular at
//! `u = 1` once `ν_j < 0.5`, so the same integral is evaluated as
//! `1 - ∫ b(u; λ_m, μ_m) · (1 - B(u; λ_j, μ_j)) du`, whose integrand is
//! bounded. The two classes are therefore computed from different
//! integrands and their sum is a genuine check of normalization.

mod quadrature;
pub mod special;

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use quadrature::integrate;

use crate::base::SupportPair;
use crate::{Error, Result};

/// Supports are kept inside `[CLIP_EPS, 1 - CLIP_EPS]`.
pub const CLIP_EPS: f64 = 1e-6;

/// Absolute tolerance of the adaptive quadrature.
pub const QUAD_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub lambda0: f64,
    pub mu0: f64,
    pub lambda1: f64,
    pub mu1: f64,
}

impl BetaParams {
    /// `(λ, μ)` for class `c`.
    pub fn class(&self, c: usize) -> (f64, f64) {
        if c == 0 {
            (self.lambda0, self.mu0)
        } else {
            (self.lambda1, self.mu1)
        }
    }
}

/// Class-assignment probabilities of the randomized classifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RrcProbabilities {
    pub p0: f64,
    pub p1: f64,
}

impl RrcProbabilities {
    pub fn get(&self, class: usize) -> f64 {
        if class == 0 {
            self.p0
        } else {
            self.p1
        }
    }
}

/// Clamps each support to `[eps, 1 - eps]` and renormalizes.
pub fn clip_support_eps(nu: SupportPair, eps: f64) -> SupportPair {
    let a = nu.nu0.clamp(eps, 1.0 - eps);
    let b = nu.nu1.clamp(eps, 1.0 - eps);
    let s = a + b;
    SupportPair { nu0: a / s, nu1: b / s }
}

pub fn clip_support(nu: SupportPair) -> SupportPair {
    clip_support_eps(nu, CLIP_EPS)
}

/// `λᵢ = 2νᵢ`, `μᵢ = 2(1 - νᵢ)`.
pub fn beta_params(nu: SupportPair) -> BetaParams {
    BetaParams {
        lambda0: 2.0 * nu.nu0,
        mu0: 2.0 * (1.0 - nu.nu0),
        lambda1: 2.0 * nu.nu1,
        mu1: 2.0 * (1.0 - nu.nu1),
    }
}

/// `P(class m)` integrated from the density of class `m` and the CDF of the
/// other class.
fn class_probability(params: &BetaParams, m: usize, support_m: f64) -> Result<f64> {
    let (lm, mm) = params.class(m);
    let (lj, mj) = params.class(1 - m);
    let ln_norm = special::ln_beta(lm, mm);
    let ln_density = move |u: f64| (lm - 1.0) * u.ln() + (mm - 1.0) * (1.0 - u).ln() - ln_norm;
    if support_m <= 0.5 {
        integrate(
            |u| ln_density(u).exp() * special::beta_reg(lj, mj, u),
            0.0,
            1.0,
            QUAD_TOL,
        )
    } else {
        let miss = integrate(
            |u| ln_density(u).exp() * special::beta_reg_complement(lj, mj, u),
            0.0,
            1.0,
            QUAD_TOL,
        )?;
        Ok(1.0 - miss)
    }
}

/// Probability that the randomized model of a classifier with supports `nu`
/// assigns class 0 and class 1. `nu` is clipped first.
pub fn rrc_probability(nu: SupportPair) -> Result<RrcProbabilities> {
    let nu = clip_support(nu);
    if nu.nu0 == nu.nu1 {
        // identically distributed supports
        return Ok(RrcProbabilities { p0: 0.5, p1: 0.5 });
    }
    let params = beta_params(nu);
    let p0 = class_probability(&params, 0, nu.nu0)?;
    let p1 = class_probability(&params, 1, nu.nu1)?;
    Ok(RrcProbabilities {
        p0: p0.clamp(0.0, 1.0),
        p1: p1.clamp(0.0, 1.0),
    })
}

const CACHE_LIMIT: usize = 1 << 16;

thread_local! {
    static CACHE: RefCell<HashMap<(u64, u64), RrcProbabilities>> = RefCell::new(HashMap::new());
}

/// [`rrc_probability`] with a per-thread memo keyed by the clipped support.
/// Base classifiers such as stumps and kNN emit few distinct supports, so
/// archives and query batches hit the memo almost always.
pub fn rrc_probability_cached(nu: SupportPair) -> Result<RrcProbabilities> {
    let clipped = clip_support(nu);
    let key = (clipped.nu0.to_bits(), clipped.nu1.to_bits());
    if let Some(hit) = CACHE.with(|c| c.borrow().get(&key).copied()) {
        return Ok(hit);
    }
    let value = rrc_probability(nu)?;
    CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() >= CACHE_LIMIT {
            c.clear();
        }
        c.insert(key, value);
    });
    Ok(value)
}

/// Elementwise [`rrc_probability`]; the first failure is reported with its
/// index.
pub fn rrc_probability_batch(nus: &[SupportPair]) -> Result<Vec<RrcProbabilities>> {
    nus.iter()
        .enumerate()
        .map(|(index, &nu)| {
            rrc_probability_cached(nu).map_err(|e| Error::Batch {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}
