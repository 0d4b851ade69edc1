//! Closed-form CES and VES production functions.
//!
//! The VES family evaluated here augments the CES bracket with a
//! capital-intensity term:
//!
//! ```text
//! V = A [ delta K^(-rho) + (1 - delta) (K/L)^(-mu(1+rho)) L^(-rho) ]^(-1/rho)
//! ```
//!
//! Under degree-one homogeneity everything reduces to the intensive form
//! `Y = f(X)` with `Y = V/L` and `X = K/L`. Factor prices come from the
//! marginal products (`r = f'(X)`, `W = f(X) - X f'(X)`), and the same curve
//! is the closed-form solution of the Bernoulli equation implied by the
//! Hildebrand-Liu regression `ln Y = ln a + b ln W + c ln X`.
//!
//! The two parameterizations are linked by `rho = 1/b - 1`, `mu = c`, and
//! `alpha = a^(-1/b) (1-b)/(1-b-c)` with `alpha = (1-delta) A^(-rho)` and
//! `beta = delta A^(-rho)`. The mapping back to `a` only exists where
//! `(1-b-c)/(1-b) > 0`, i.e. where the labor share `W` is positive; outside
//! that region `ves_to_hl` reports a distinct non-invertible-scale error and
//! the ODE can still be verified through [`bernoulli_residual`].
//!
//! All powers are taken in log space so extreme capital intensities fail
//! loudly (exponent overflow) instead of silently returning infinities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// |rho| below this is treated as the Cobb-Douglas singular limit.
pub const RHO_TOL: f64 = 1e-6;

/// Exponent magnitude beyond which exp() leaves double precision.
pub const EXP_ARG_LIMIT: f64 = 709.0;

/// mu values within this distance of zero count as the CES special case.
pub const MU_CES_TOL: f64 = 1e-6;

/// Threshold on |1 - b - c| below which the integration constant alpha
/// has a singular denominator.
const SINGULAR_DENOM_TOL: f64 = 1e-12;

/// Power in log space with an overflow guard naming the offending term.
fn pow_checked(base: f64, exponent: f64, term: &str) -> Result<f64> {
    debug_assert!(base > 0.0);
    let arg = exponent * base.ln();
    if !arg.is_finite() || arg.abs() > EXP_ARG_LIMIT {
        return Err(Error::ExponentOverflow {
            term: term.to_string(),
            value: arg,
        });
    }
    Ok(arg.exp())
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value,
            constraint: "must be finite and strictly positive",
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Parameter vectors
// ---------------------------------------------------------------------------

/// SMAC-form VES parameter vector (A, delta, rho, mu).
///
/// `mu = 0` is the CES special case. Negative `mu` is outside the
/// capital-intensive findings this toolkit targets but stays representable
/// (labor-intensive extension); see [`crate::pipeline::mu_interpretation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VesParams {
    efficiency: f64,
    distribution: f64,
    substitution: f64,
    intensity: f64,
}

impl VesParams {
    /// Validates A > 0, 0 < delta < 1, rho > -1 with |rho| >= [`RHO_TOL`],
    /// and finite mu.
    pub fn new(efficiency: f64, distribution: f64, substitution: f64, intensity: f64) -> Result<Self> {
        require_positive("efficiency", efficiency)?;
        if !distribution.is_finite() || distribution <= 0.0 || distribution >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "distribution",
                value: distribution,
                constraint: "must lie strictly inside (0, 1)",
            });
        }
        if !substitution.is_finite() || substitution <= -1.0 {
            return Err(Error::InvalidParameter {
                name: "substitution",
                value: substitution,
                constraint: "must be finite and greater than -1",
            });
        }
        if substitution.abs() < RHO_TOL {
            return Err(Error::CobbDouglasLimit { rho: substitution });
        }
        if !intensity.is_finite() {
            return Err(Error::InvalidParameter {
                name: "intensity",
                value: intensity,
                constraint: "must be finite",
            });
        }
        Ok(Self {
            efficiency,
            distribution,
            substitution,
            intensity,
        })
    }

    /// Efficiency scale A (output per worker at K/L = 1).
    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Distribution weight delta.
    pub fn distribution(&self) -> f64 {
        self.distribution
    }

    /// Substitution parameter rho.
    pub fn substitution(&self) -> f64 {
        self.substitution
    }

    /// Capital-intensity substitution parameter mu.
    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    /// Exponent on capital intensity inside the bracket: mu (1 + rho).
    pub fn intensity_exponent(&self) -> f64 {
        self.intensity * (1.0 + self.substitution)
    }

    /// The gap s = rho - mu (1 + rho). Zero exactly when the intensive form
    /// degenerates to a straight line in logs; its sign against rho decides
    /// whether the competitive wage is positive.
    pub fn wage_share_gap(&self) -> f64 {
        self.substitution - self.intensity_exponent()
    }

    /// True when mu is within [`MU_CES_TOL`] of zero.
    pub fn is_ces(&self) -> bool {
        self.intensity.abs() <= MU_CES_TOL
    }

    /// The CES parameter vector this reduces to when mu = 0.
    pub fn ces_special_case(&self) -> Option<CesParams> {
        if self.is_ces() {
            Some(CesParams {
                efficiency: self.efficiency,
                distribution: self.distribution,
                substitution: self.substitution,
            })
        } else {
            None
        }
    }
}

/// CES parameter vector (A, delta, rho); sigma = 1/(1+rho) at every X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CesParams {
    efficiency: f64,
    distribution: f64,
    substitution: f64,
}

impl CesParams {
    pub fn new(efficiency: f64, distribution: f64, substitution: f64) -> Result<Self> {
        let p = VesParams::new(efficiency, distribution, substitution, 0.0)?;
        Ok(CesParams {
            efficiency: p.efficiency,
            distribution: p.distribution,
            substitution: p.substitution,
        })
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn distribution(&self) -> f64 {
        self.distribution
    }

    pub fn substitution(&self) -> f64 {
        self.substitution
    }

    /// The constant elasticity of substitution 1/(1+rho).
    pub fn elasticity(&self) -> f64 {
        1.0 / (1.0 + self.substitution)
    }
}

impl From<CesParams> for VesParams {
    fn from(c: CesParams) -> Self {
        VesParams {
            efficiency: c.efficiency,
            distribution: c.distribution,
            substitution: c.substitution,
            intensity: 0.0,
        }
    }
}

/// Hildebrand-Liu coefficients (a, b, c) plus the integration constant beta
/// of the closed-form solution.
///
/// Construction checks a > 0, b > 0 with b away from 1 (the implied
/// rho = 1/b - 1 must clear [`RHO_TOL`]), 1 - b - c nonzero, and beta > 0.
/// Whether the implied alpha is positive is a property of the coefficients,
/// checked where it matters: [`hl_to_ves`] needs alpha > 0 to produce a
/// distribution weight inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HlForm {
    scale: f64,
    wage_elasticity: f64,
    intensity_elasticity: f64,
    integration_constant: f64,
}

impl HlForm {
    pub fn new(
        scale: f64,
        wage_elasticity: f64,
        intensity_elasticity: f64,
        integration_constant: f64,
    ) -> Result<Self> {
        require_positive("scale", scale)?;
        require_positive("wage_elasticity", wage_elasticity)?;
        if !intensity_elasticity.is_finite() {
            return Err(Error::InvalidParameter {
                name: "intensity_elasticity",
                value: intensity_elasticity,
                constraint: "must be finite",
            });
        }
        let implied_rho = 1.0 / wage_elasticity - 1.0;
        if implied_rho <= -1.0 {
            return Err(Error::InvalidParameter {
                name: "wage_elasticity",
                value: wage_elasticity,
                constraint: "implies rho <= -1",
            });
        }
        if implied_rho.abs() < RHO_TOL {
            return Err(Error::CobbDouglasLimit { rho: implied_rho });
        }
        let denom = 1.0 - wage_elasticity - intensity_elasticity;
        if denom.abs() < SINGULAR_DENOM_TOL {
            return Err(Error::SingularDenominator { value: denom });
        }
        require_positive("integration_constant", integration_constant)?;
        Ok(Self {
            scale,
            wage_elasticity,
            intensity_elasticity,
            integration_constant,
        })
    }

    /// Scale coefficient a.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Wage elasticity b.
    pub fn wage_elasticity(&self) -> f64 {
        self.wage_elasticity
    }

    /// Capital-intensity elasticity c.
    pub fn intensity_elasticity(&self) -> f64 {
        self.intensity_elasticity
    }

    /// Integration constant beta.
    pub fn integration_constant(&self) -> f64 {
        self.integration_constant
    }

    /// The substitution exponents implied by the reparameterization alone:
    /// rho = 1/b - 1 and mu = c. These exist for every well-formed
    /// coefficient set even when the full SMAC mapping does not.
    pub fn ves_exponents(&self) -> (f64, f64) {
        (1.0 / self.wage_elasticity - 1.0, self.intensity_elasticity)
    }

    /// Coefficient alpha of the closed form, a^(-1/b) (1-b)/(1-b-c).
    pub fn alpha(&self) -> Result<f64> {
        let b = self.wage_elasticity;
        let c = self.intensity_elasticity;
        let scale_pow = pow_checked(self.scale, -1.0 / b, "(-1/b)*ln(a)")?;
        Ok(scale_pow * (1.0 - b) / (1.0 - b - c))
    }

    /// The closed-form intensive curve Y(X) and its derivative:
    /// Y = [alpha X^(-c/b) + beta X^((b-1)/b)]^(b/(b-1)).
    pub fn intensive(&self, x: f64) -> Result<(f64, f64)> {
        require_positive("capital_intensity", x)?;
        let a = self.alpha()?;
        let b = self.wage_elasticity;
        let c = self.intensity_elasticity;
        let beta = self.integration_constant;

        let e1 = -c / b;
        let e2 = (b - 1.0) / b;
        let x_e1 = pow_checked(x, e1, "(-c/b)*ln(X)")?;
        let x_e2 = pow_checked(x, e2, "((b-1)/b)*ln(X)")?;
        let z = a * x_e1 + beta * x_e2;
        if z <= 0.0 {
            return Err(Error::LogDomain {
                quantity: "closed-form bracket",
                value: z,
            });
        }
        let y = pow_checked(z, b / (b - 1.0), "(b/(b-1))*ln(z)")?;
        // z' = alpha e1 X^(e1-1) + beta e2 X^(e2-1)
        let dz = (a * e1 * x_e1 + beta * e2 * x_e2) / x;
        let dy = b / (b - 1.0) * pow_checked(z, 1.0 / (b - 1.0), "(1/(b-1))*ln(z)")? * dz;
        Ok((y, dy))
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Value added V at (K, L) under the VES form; homogeneous of degree one.
pub fn eval_ves(p: &VesParams, capital: f64, labor: f64) -> Result<f64> {
    require_positive("capital", capital)?;
    require_positive("labor", labor)?;
    let rho = p.substitution;
    let m = p.intensity_exponent();
    let ln_k = capital.ln();
    let ln_l = labor.ln();
    let ln_x = ln_k - ln_l;

    let t1 = p.distribution * pow_checked(capital, -rho, "rho*ln(K)")?;
    let t2 = (1.0 - p.distribution)
        * exp_checked(-m * ln_x, "mu(1+rho)*ln(K/L)")?
        * exp_checked(-rho * ln_l, "rho*ln(L)")?;
    let bracket = t1 + t2;
    let outer = pow_checked(bracket, -1.0 / rho, "(-1/rho)*ln(bracket)")?;
    Ok(p.efficiency * outer)
}

fn exp_checked(arg: f64, term: &str) -> Result<f64> {
    if !arg.is_finite() || arg.abs() > EXP_ARG_LIMIT {
        return Err(Error::ExponentOverflow {
            term: term.to_string(),
            value: arg,
        });
    }
    Ok(arg.exp())
}

/// Output per worker Y = f(X); equals `eval_ves(p, X, 1)` exactly.
pub fn eval_ves_intensive(p: &VesParams, intensity: f64) -> Result<f64> {
    require_positive("capital_intensity", intensity)?;
    let rho = p.substitution;
    let m = p.intensity_exponent();
    let ln_x = intensity.ln();

    let t1 = p.distribution * exp_checked(-rho * ln_x, "rho*ln(K)")?;
    let t2 = (1.0 - p.distribution) * exp_checked(-m * ln_x, "mu(1+rho)*ln(K/L)")?;
    let bracket = t1 + t2;
    let outer = pow_checked(bracket, -1.0 / rho, "(-1/rho)*ln(bracket)")?;
    Ok(p.efficiency * outer)
}

/// Value added at (K, L) under the CES form.
pub fn eval_ces(p: &CesParams, capital: f64, labor: f64) -> Result<f64> {
    eval_ves(&VesParams::from(*p), capital, labor)
}

/// Intensive curve value and its first two derivatives at X.
///
/// Derivatives are the hand-derived closed forms (log-space representation),
/// not finite differences; the elasticity formula amplifies differencing
/// noise too much for that.
pub fn intensive_derivatives(p: &VesParams, intensity: f64) -> Result<(f64, f64, f64)> {
    require_positive("capital_intensity", intensity)?;
    let y = eval_ves_intensive(p, intensity)?;
    let (h1, h2) = log_slope_curvature(p, intensity)?;
    let dy = y * h1 / intensity;
    let d2y = y * (h1 * h1 + h2 - h1) / (intensity * intensity);
    Ok((y, dy, d2y))
}

/// First and second derivatives of ln f with respect to ln X.
///
/// With s = rho - mu(1+rho) and q = (1-delta) X^s:
///   d ln f / d ln X  = 1 - (s/rho) q/(delta+q)
///   d^2 ln f / d ln X^2 = -(s^2/rho) delta q/(delta+q)^2
fn log_slope_curvature(p: &VesParams, intensity: f64) -> Result<(f64, f64)> {
    let rho = p.substitution;
    let s = p.wage_share_gap();
    let q = (1.0 - p.distribution) * exp_checked(s * intensity.ln(), "s*ln(X)")?;
    let d = p.distribution + q;
    let share = q / d;
    let h1 = 1.0 - (s / rho) * share;
    let h2 = -(s * s / rho) * share * (p.distribution / d);
    Ok((h1, h2))
}

/// Factor prices at capital intensity X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorPrices {
    /// Wage rate W = f(X) - X f'(X), output as numeraire. May be
    /// non-positive outside the economically meaningful region.
    pub wage: f64,
    /// Returns to capital r = f'(X).
    pub rental: f64,
}

impl FactorPrices {
    /// True where the wage is positive, i.e. the point sits in the
    /// competitive region.
    pub fn competitive(&self) -> bool {
        self.wage > 0.0
    }
}

/// Marginal-product factor prices (W, r) from the analytic derivative.
///
/// W <= 0 is possible (strong curvature); it is reported, not an error —
/// callers that feed wages into a log regression must reject such points.
/// The rental is positive everywhere on the rho > 0 branch; with rho < 0
/// and mu > 0 output diverges at X -> 0 and the capital margin can flip.
pub fn factor_prices(p: &VesParams, intensity: f64) -> Result<FactorPrices> {
    let y = eval_ves_intensive(p, intensity)?;
    let (h1, _) = log_slope_curvature(p, intensity)?;
    Ok(FactorPrices {
        wage: y * (1.0 - h1),
        rental: y * h1 / intensity,
    })
}

/// Elasticity of substitution at X for a degree-one technology:
/// sigma = -f' (f - X f') / (X f f'').
///
/// Constant and equal to 1/(1+rho) when mu = 0; varies with X otherwise.
pub fn elasticity_of_substitution(p: &VesParams, intensity: f64) -> Result<f64> {
    require_positive("capital_intensity", intensity)?;
    let (h1, h2) = log_slope_curvature(p, intensity)?;
    let numer = h1 * (1.0 - h1);
    let denom = numer - h2;
    let scale = numer.abs().max(h2.abs());
    if denom.abs() <= 1e-12 * scale || denom == 0.0 {
        return Err(Error::DegenerateCurvature { at: intensity });
    }
    Ok(numer / denom)
}

// ---------------------------------------------------------------------------
// Parameter-form conversions
// ---------------------------------------------------------------------------

/// SMAC parameters from Hildebrand-Liu coefficients:
/// rho = 1/b - 1, mu = c, A = (alpha+beta)^(-1/rho), delta = beta/(alpha+beta).
pub fn hl_to_ves(h: &HlForm) -> Result<VesParams> {
    let (rho, mu) = h.ves_exponents();
    let alpha = h.alpha()?;
    let beta = h.integration_constant;
    if alpha <= 0.0 {
        return Err(Error::NonEconomicRegion {
            detail: format!(
                "alpha = {alpha} is not positive (rho = {rho}, mu = {mu}); no distribution weight in (0, 1) exists"
            ),
        });
    }
    let total = alpha + beta;
    let efficiency = pow_checked(total, -1.0 / rho, "(-1/rho)*ln(alpha+beta)")?;
    let distribution = beta / total;
    VesParams::new(efficiency, distribution, rho, mu)
}

/// Hildebrand-Liu coefficients from SMAC parameters:
/// b = 1/(1+rho), c = mu, beta = delta A^(-rho), a = [alpha (1-b-c)/(1-b)]^(-b).
///
/// The scale only exists where (1-b-c)/(1-b) = s/rho is positive (positive
/// labor share); s = 0 is the singular denominator and s/rho < 0 is the
/// distinct non-invertible-scale case.
pub fn ves_to_hl(p: &VesParams) -> Result<HlForm> {
    let rho = p.substitution;
    let b = 1.0 / (1.0 + rho);
    let c = p.intensity;
    let a_pow = pow_checked(p.efficiency, -rho, "rho*ln(A)")?;
    let alpha = (1.0 - p.distribution) * a_pow;
    let beta = p.distribution * a_pow;

    let denom = 1.0 - b - c;
    if denom.abs() < SINGULAR_DENOM_TOL {
        return Err(Error::SingularDenominator { value: denom });
    }
    let ratio = denom / (1.0 - b);
    if ratio <= 0.0 {
        return Err(Error::NonInvertibleScale { ratio });
    }
    let a = pow_checked(alpha * ratio, -b, "(-b)*ln(alpha*(1-b-c)/(1-b))")?;
    HlForm::new(a, b, c, beta)
}

// ---------------------------------------------------------------------------
// Differential-equation verification
// ---------------------------------------------------------------------------

/// Residual of the log-form first-order condition on the closed-form curve:
/// ln Y - ln a - b ln(Y - X dY/dX) - c ln X.
///
/// Zero up to floating-point noise for every X and every beta, because the
/// closed form solves the equation by construction and beta is a free
/// integration constant.
pub fn ode_residual(h: &HlForm, intensity: f64) -> Result<f64> {
    let (y, dy) = h.intensive(intensity)?;
    let wage = y - intensity * dy;
    if wage <= 0.0 {
        return Err(Error::LogDomain {
            quantity: "Y - X*dY/dX",
            value: wage,
        });
    }
    Ok(y.ln()
        - h.scale.ln()
        - h.wage_elasticity * wage.ln()
        - h.intensity_elasticity * intensity.ln())
}

/// Residual of the same first-order condition in its algebraic (Bernoulli)
/// form, normalized by output:
///
/// ```text
/// [ (Y - X Y') - kappa X^(-mu(1+rho)) Y^(1+rho) ] / Y,   kappa = alpha s / rho
/// ```
///
/// Unlike [`ode_residual`] this needs no log of the labor share, so it
/// verifies the equation on every valid parameter vector, including the
/// region where the wage is negative and no real scale coefficient exists.
pub fn bernoulli_residual(p: &VesParams, intensity: f64) -> Result<f64> {
    let (y, dy, _) = intensive_derivatives(p, intensity)?;
    let rho = p.substitution;
    let s = p.wage_share_gap();
    let a_pow = pow_checked(p.efficiency, -rho, "rho*ln(A)")?;
    let kappa = (1.0 - p.distribution) * a_pow * s / rho;
    let x_pow = exp_checked(-p.intensity_exponent() * intensity.ln(), "mu(1+rho)*ln(X)")?;
    let y_pow = pow_checked(y, 1.0 + rho, "(1+rho)*ln(Y)")?;
    let wage = y - intensity * dy;
    Ok((wage - kappa * x_pow * y_pow) / y)
}

// ---------------------------------------------------------------------------
// Factor point
// ---------------------------------------------------------------------------

/// One evaluated observation: quantities and factor prices at (K, L).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorPoint {
    pub capital: f64,
    pub labor: f64,
    pub intensity: f64,
    pub value_added: f64,
    pub output_per_worker: f64,
    pub wage: f64,
    pub rental: f64,
}

impl FactorPoint {
    /// Evaluate the model at (K, L).
    pub fn evaluate(p: &VesParams, capital: f64, labor: f64) -> Result<Self> {
        require_positive("capital", capital)?;
        require_positive("labor", labor)?;
        let intensity = capital / labor;
        let value_added = eval_ves(p, capital, labor)?;
        let prices = factor_prices(p, intensity)?;
        Ok(FactorPoint {
            capital,
            labor,
            intensity,
            value_added,
            output_per_worker: value_added / labor,
            wage: prices.wage,
            rental: prices.rental,
        })
    }
}
