//! Distance-based transmission costs and node positions.
//!
//! A [`CostSeries`] is a finite power series `E(d) = Σ λ_n d^{a_n}` with
//! `λ_n ≥ 0`, `a_n ≥ 1` and `Σ λ_n = 1`, so a unit hop always costs 1. Any
//! such series is superadditive on a line: `E(d1) + E(d2) ≤ E(d1 + d2)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerance on `Σ λ_n = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Slack allowed in the superadditivity inequality, relative with floor 1.
pub const SUPERADDITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostTerm {
    pub lambda: f64,
    pub exponent: f64,
}

impl CostTerm {
    pub const fn new(lambda: f64, exponent: f64) -> Self {
        Self { lambda, exponent }
    }
}

impl From<(f64, f64)> for CostTerm {
    fn from((lambda, exponent): (f64, f64)) -> Self {
        Self { lambda, exponent }
    }
}

/// Validated, normalized transmission-cost series.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSeries {
    terms: Vec<CostTerm>,
}

impl CostSeries {
    /// Validates `terms`. With `auto_normalize`, coefficients whose sum is off
    /// by more than [`NORMALIZATION_TOL`] are rescaled by that sum instead of
    /// being rejected.
    pub fn new<T: Into<CostTerm>>(
        terms: impl IntoIterator<Item = T>,
        auto_normalize: bool,
    ) -> Result<Self> {
        let mut terms: Vec<CostTerm> = terms.into_iter().map(Into::into).collect();
        if terms.is_empty() {
            return Err(Error::EmptySeries);
        }
        for (index, t) in terms.iter().enumerate() {
            if !(t.lambda >= 0.0) || !t.lambda.is_finite() {
                return Err(Error::NegativeCoefficient {
                    index,
                    value: t.lambda,
                });
            }
            if !(t.exponent >= 1.0) || !t.exponent.is_finite() {
                return Err(Error::ExponentBelowOne {
                    index,
                    value: t.exponent,
                });
            }
        }
        let sum: f64 = terms.iter().map(|t| t.lambda).sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            if !auto_normalize || sum <= 0.0 {
                return Err(Error::NotNormalized { sum });
            }
            for t in &mut terms {
                t.lambda /= sum;
            }
        }
        Ok(Self { terms })
    }

    /// `E(d) = d^a`.
    pub fn power(exponent: f64) -> Result<Self> {
        Self::new([CostTerm::new(1.0, exponent)], false)
    }

    /// Builds a series without any validation. Only useful for exercising the
    /// checks in this crate against deliberately broken cost models.
    #[doc(hidden)]
    pub fn from_terms_unchecked(terms: Vec<CostTerm>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[CostTerm] {
        &self.terms
    }

    /// Cost of sending one unit of data across `distance`.
    pub fn eval(&self, distance: f64) -> f64 {
        let d = distance.abs();
        self.terms
            .iter()
            .map(|t| t.lambda * pow_abs(d, t.exponent))
            .sum()
    }

    /// `E_r`: the cost of a hop spanning `r` unit spacings of the regular chain.
    pub fn hop(&self, r: usize) -> f64 {
        self.eval(r as f64)
    }

    /// True when the series is a single `d^1` term.
    pub fn is_linear(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.lambda == 0.0 || t.exponent == 1.0)
    }
}

/// `|x|^a` as `exp(a ln|x|)`, with `0^a = 0`.
fn pow_abs(x: f64, a: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        libm::exp(a * libm::log(x))
    }
}

/// `E_{i,j}` for nodes at `xi` and `xj`.
pub fn transmission_cost(series: &CostSeries, xi: f64, xj: f64) -> f64 {
    series.eval(xi - xj)
}

/// Node coordinates `x_0 = 0 < x_1 < … < x_N`, collector at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Positions {
    x: Vec<f64>,
}

impl Positions {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.first() != Some(&0.0) {
            return Err(Error::InvalidPositions("x_0 must be 0"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPositions("positions must be finite"));
        }
        if x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPositions(
                "positions must be strictly increasing",
            ));
        }
        Ok(Self { x })
    }

    /// The regular chain `x_i = i` for `i ∈ [0, n]`.
    pub fn regular(n: usize) -> Self {
        Self {
            x: (0..=n).map(|i| i as f64).collect(),
        }
    }

    /// `x_i = i - d_i`, with `shifts[k]` holding `d_{k+1}`.
    pub fn from_shifts(shifts: &[f64]) -> Result<Self> {
        if shifts.iter().any(|d| !(d.abs() < 1.0)) {
            return Err(Error::InvalidPositions("every shift must lie in (-1, 1)"));
        }
        let x = core::iter::once(0.0)
            .chain(shifts.iter().enumerate().map(|(k, d)| (k + 1) as f64 - d))
            .collect();
        Self::new(x)
    }

    /// Number of nodes, collector excluded.
    pub fn node_count(&self) -> usize {
        self.x.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    pub fn get(&self, i: usize) -> f64 {
        self.x[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.x[i] - self.x[j]).abs()
    }
}

/// An ordered triple `x_i < x_j < x_k` for which `E_ij + E_jk > E_ik`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// `E_ij + E_jk - E_ik`, positive.
    pub slack: f64,
}

/// Enumerates every ordered triple of points (collector included).
pub fn check_superadditivity(series: &CostSeries, pos: &Positions) -> Vec<Violation> {
    let x = pos.as_slice();
    let n = x.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let e_ij = transmission_cost(series, x[i], x[j]);
            for k in j + 1..n {
                let e_jk = transmission_cost(series, x[j], x[k]);
                let e_ik = transmission_cost(series, x[i], x[k]);
                let slack = e_ij + e_jk - e_ik;
                if slack > SUPERADDITIVITY_TOL * e_ik.max(1.0) {
                    out.push(Violation { i, j, k, slack });
                }
            }
        }
    }
    out
}
