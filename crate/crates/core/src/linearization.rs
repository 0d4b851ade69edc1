//! Taylor expansion of the intensive VES form in t = ln(K/L), and numeric
//! recovery of (A, delta, rho, mu) from fitted polynomial coefficients.
//!
//! Writing s = rho - mu(1+rho), the log intensive form is
//!
//! ```text
//! ln Y = ln A + t - (1/rho) ln[ delta + (1 - delta) e^(s t) ]
//! ```
//!
//! so the expansion around t = 0 (K/L = 1) is a polynomial whose k-th
//! coefficient is built from the k-th derivative of u -> ln[delta + (1-delta) e^u]
//! at zero, scaled by s^k / rho. The first three have closed forms:
//!
//! ```text
//! phi_1 = 1 - (1-delta) s / rho
//! phi_2 = -delta (1-delta) s^2 / (2 rho)
//! phi_3 = -delta (1-delta) (2 delta - 1) s^3 / (6 rho)
//! ```
//!
//! For mu = 0 (s = rho) this collapses to the classical second-order CES
//! approximation phi_1 = delta, phi_2 = -rho delta (1-delta) / 2.
//!
//! At s = 0 the curve is exactly linear in logs: only A is identified and
//! every (delta, rho) with mu = rho/(1+rho) reproduces the data. That case
//! is reported as a constrained family, not as a point estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::production::{VesParams, RHO_TOL};

/// Largest supported expansion degree.
pub const MAX_DEGREE: usize = 6;

/// Multi-start Newton iteration cap per start.
const NEWTON_MAX_ITER: usize = 100;

/// Residual (max-norm) below which a root is accepted.
const ROOT_RESIDUAL_TOL: f64 = 1e-10;

/// Roots closer than this (max-norm over delta, rho, mu) are merged.
const ROOT_DEDUP_TOL: f64 = 1e-8;

/// |phi_2| below this triggers the degenerate s = 0 handling.
const DEGENERATE_PHI2_TOL: f64 = 1e-12;

/// Polynomial coefficients of ln Y in powers of ln X.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationCoefficients {
    /// Intercept beta_0 = ln A.
    pub intercept: f64,
    /// phi_1 .. phi_d on (ln X)^1 .. (ln X)^d.
    pub powers: Vec<f64>,
}

impl LinearizationCoefficients {
    pub fn new(intercept: f64, powers: Vec<f64>) -> Result<Self> {
        if powers.is_empty() || powers.len() > MAX_DEGREE {
            return Err(Error::InvalidParameter {
                name: "degree",
                value: powers.len() as f64,
                constraint: "must be between 1 and 6",
            });
        }
        if !intercept.is_finite() || powers.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "coefficients",
                value: f64::NAN,
                constraint: "must all be finite",
            });
        }
        Ok(Self { intercept, powers })
    }

    pub fn degree(&self) -> usize {
        self.powers.len()
    }

    /// Evaluate the polynomial at t = ln X.
    pub fn evaluate(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.powers.iter().rev() {
            acc = (acc + c) * t;
        }
        self.intercept + acc
    }
}

/// Taylor coefficients of ln Y around ln X = 0 up to `degree`.
pub fn linearize_ves(p: &VesParams, degree: usize) -> Result<LinearizationCoefficients> {
    if degree == 0 || degree > MAX_DEGREE {
        return Err(Error::InvalidParameter {
            name: "degree",
            value: degree as f64,
            constraint: "must be between 1 and 6",
        });
    }
    let rho = p.substitution();
    if rho.abs() < RHO_TOL {
        return Err(Error::CobbDouglasLimit { rho });
    }
    let s = p.wage_share_gap();
    let gamma = log_series(p.distribution(), degree);

    let mut powers = Vec::with_capacity(degree);
    let mut s_pow = s;
    for (k, g) in gamma.iter().enumerate() {
        let mut phi = -g * s_pow / rho;
        if k == 0 {
            phi += 1.0;
        }
        powers.push(phi);
        s_pow *= s;
    }
    LinearizationCoefficients::new(p.efficiency().ln(), powers)
}

/// Series coefficients gamma_1..gamma_n of u -> ln[delta + (1-delta) e^u]
/// around u = 0, from the power-series logarithm recurrence.
fn log_series(delta: f64, n: usize) -> Vec<f64> {
    // D(u) = 1 + sum_k d_k u^k with d_k = (1-delta)/k!
    let mut d = Vec::with_capacity(n + 1);
    d.push(1.0);
    let mut factorial = 1.0;
    for k in 1..=n {
        factorial *= k as f64;
        d.push((1.0 - delta) / factorial);
    }
    // gamma_k = d_k - (1/k) sum_{j=1}^{k-1} (k-j) gamma_{k-j} d_j
    let mut gamma = vec![0.0; n + 1];
    for k in 1..=n {
        let mut acc = d[k];
        for j in 1..k {
            acc -= (k - j) as f64 * gamma[k - j] * d[j] / k as f64;
        }
        gamma[k] = acc;
    }
    gamma.remove(0);
    gamma
}

/// The s = 0 degenerate outcome: ln Y = ln A + ln X identifies only A;
/// any (delta, rho) with mu = rho/(1+rho) reproduces it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedFamily {
    /// Efficiency scale recovered from the intercept.
    pub efficiency: f64,
}

impl ConstrainedFamily {
    /// A representative member of the family for the given free parameters.
    pub fn member(&self, distribution: f64, substitution: f64) -> Result<VesParams> {
        VesParams::new(
            self.efficiency,
            distribution,
            substitution,
            substitution / (1.0 + substitution),
        )
    }
}

/// Outcome of inverting fitted coefficients back to parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Inversion {
    /// A single admissible root.
    Unique(VesParams),
    /// The degenerate family along s = 0.
    ConstrainedFamily(ConstrainedFamily),
}

/// Recover (A, delta, rho, mu) from (beta_0, phi_1, phi_2, phi_3) by damped
/// Newton iteration over a multi-start grid.
///
/// A root is admissible when delta lies in (0, 1), rho is positive (clear of
/// the Cobb-Douglas tolerance), mu is non-negative, and the system residual
/// is at most 1e-10. Distinct admissible roots raise an ambiguity error
/// listing all of them; none raises a non-invertible error carrying the best
/// residual seen.
pub fn invert_linearization(c: &LinearizationCoefficients) -> Result<Inversion> {
    if c.degree() < 3 {
        return Err(Error::InvalidParameter {
            name: "degree",
            value: c.degree() as f64,
            constraint: "inversion needs degree >= 3",
        });
    }
    let efficiency = c.intercept.exp();
    let phi = [c.powers[0], c.powers[1], c.powers[2]];

    if phi[1].abs() < DEGENERATE_PHI2_TOL {
        // s = 0: the remaining equations force phi_1 = 1 and phi_3 = 0.
        let gap = (phi[0] - 1.0).abs().max(phi[2].abs());
        if gap <= 1e-8 {
            return Ok(Inversion::ConstrainedFamily(ConstrainedFamily { efficiency }));
        }
        return Err(Error::NonInvertible { best_residual: gap });
    }

    let mut roots: Vec<(f64, [f64; 3])> = Vec::new();
    let mut best_residual = f64::INFINITY;

    for &delta0 in &[0.1, 0.3, 0.5, 0.7, 0.9] {
        for &rho0 in &[0.1, 0.5, 1.0, 1.75, 3.0] {
            for s0 in start_candidates(delta0, rho0, phi[1]) {
                let Some((x, res)) = newton_root(&phi, [delta0, rho0, s0]) else {
                    continue;
                };
                best_residual = best_residual.min(res);
                if res > ROOT_RESIDUAL_TOL {
                    continue;
                }
                let (delta, rho, s) = (x[0], x[1], x[2]);
                let mu = (rho - s) / (1.0 + rho);
                if !(delta > 0.0 && delta < 1.0) || rho < RHO_TOL || mu < -1e-9 {
                    continue;
                }
                let candidate = [delta, rho, mu];
                let dup = roots.iter_mut().find(|(_, r)| {
                    r.iter()
                        .zip(&candidate)
                        .all(|(a, b)| (a - b).abs() <= ROOT_DEDUP_TOL)
                });
                match dup {
                    Some(existing) if res < existing.0 => *existing = (res, candidate),
                    Some(_) => {}
                    None => roots.push((res, candidate)),
                }
            }
        }
    }

    // Deterministic ordering: residual, then lexicographic parameters.
    roots.sort_by(|a, b| {
        (a.0, a.1[0], a.1[1], a.1[2])
            .partial_cmp(&(b.0, b.1[0], b.1[1], b.1[2]))
            .unwrap()
    });

    let mut params = Vec::with_capacity(roots.len());
    for (_, [delta, rho, mu]) in &roots {
        params.push(VesParams::new(efficiency, *delta, *rho, *mu)?);
    }
    match params.len() {
        0 => Err(Error::NonInvertible { best_residual }),
        1 => Ok(Inversion::Unique(params.remove(0))),
        _ => Err(Error::AmbiguousRoots { roots: params }),
    }
}

fn start_candidates(delta0: f64, rho0: f64, phi2: f64) -> Vec<f64> {
    let mut out = vec![rho0];
    let arg = -2.0 * rho0 * phi2 / (delta0 * (1.0 - delta0));
    if arg > 0.0 {
        let s = arg.sqrt();
        out.push(s);
        out.push(-s);
    }
    out
}

fn system(phi: &[f64; 3], x: &[f64; 3]) -> [f64; 3] {
    let (delta, rho, s) = (x[0], x[1], x[2]);
    let dd = delta * (1.0 - delta);
    [
        1.0 - (1.0 - delta) * s / rho - phi[0],
        -dd * s * s / (2.0 * rho) - phi[1],
        -dd * (2.0 * delta - 1.0) * s * s * s / (6.0 * rho) - phi[2],
    ]
}

fn jacobian(x: &[f64; 3]) -> [[f64; 3]; 3] {
    let (delta, rho, s) = (x[0], x[1], x[2]);
    let dd = delta * (1.0 - delta);
    let s2 = s * s;
    let s3 = s2 * s;
    [
        [s / rho, (1.0 - delta) * s / (rho * rho), -(1.0 - delta) / rho],
        [
            -(1.0 - 2.0 * delta) * s2 / (2.0 * rho),
            dd * s2 / (2.0 * rho * rho),
            -dd * s / rho,
        ],
        [
            (6.0 * delta * delta - 6.0 * delta + 1.0) * s3 / (6.0 * rho),
            dd * (2.0 * delta - 1.0) * s3 / (6.0 * rho * rho),
            -dd * (2.0 * delta - 1.0) * s2 / (2.0 * rho),
        ],
    ]
}

fn inf_norm(v: &[f64; 3]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Damped Newton from one start; returns the final point and residual norm,
/// or None when the iteration left the numeric domain.
fn newton_root(phi: &[f64; 3], start: [f64; 3]) -> Option<([f64; 3], f64)> {
    let mut x = start;
    let mut fx = system(phi, &x);
    let mut norm = inf_norm(&fx);

    for _ in 0..NEWTON_MAX_ITER {
        if norm <= 1e-13 {
            break;
        }
        if x[1].abs() < 1e-12 {
            return None; // rho collapsed onto the singular axis
        }
        let j = jacobian(&x);
        let step = solve3(&j, &fx)?;

        // Halve the step until the residual decreases.
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda >= 1.0 / 1024.0 {
            let trial = [
                x[0] - lambda * step[0],
                x[1] - lambda * step[1],
                x[2] - lambda * step[2],
            ];
            if trial.iter().all(|v| v.is_finite()) && trial[1].abs() > 1e-12 {
                let ft = system(phi, &trial);
                let nt = inf_norm(&ft);
                if nt < norm {
                    x = trial;
                    fx = ft;
                    norm = nt;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if x.iter().all(|v| v.is_finite()) && norm.is_finite() {
        Some((x, norm))
    } else {
        None
    }
}

/// Solve a 3x3 linear system by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..3 {
            let factor = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut acc = m[i][3];
        for k in i + 1..3 {
            acc -= m[i][k] * x[k];
        }
        x[i] = acc / m[i][i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}
