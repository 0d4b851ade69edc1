//! Least-squares engine for the intensive-form model shapes and the
//! wage-route regressions, with the full model-selection statistics battery
//! (deviance, Gaussian log likelihood, AIC/BIC, R^2, SRMSE bands, exact
//! Student-t p-values).
//!
//! Everything is ordinary least squares with Gaussian errors and an identity
//! link; the information criteria count the error variance as one extra
//! parameter, which is the convention the printed statistics follow.

pub mod dist;
pub mod linalg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::ExclusionReport;
use linalg::Matrix;

/// Polynomial degrees supported by the design builder.
pub const MAX_POLY_DEGREE: usize = 6;

/// RSS at or below this fraction of TSS counts as a perfect fit; the
/// information criteria are then reported as infinite markers rather than
/// rounding-noise numbers.
const PERFECT_FIT_REL_TOL: f64 = 1e-24;

/// AIC differences below this are ties, broken by coefficient count.
const AIC_TIE_TOL: f64 = 1e-9;

/// One ingested observation as the regressions see it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Y = V/L.
    pub output_per_worker: f64,
    /// X = K/L.
    pub capital_intensity: f64,
    /// W = wages/workers, when wage data exists.
    pub wage_rate: Option<f64>,
}

/// The regression shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// ln Y on powers 1..=degree of ln X.
    Polynomial { degree: usize },
    /// ln Y on raw X (the bracket enters untransformed).
    Exponential,
    /// ln Y on ln X.
    Power,
    /// ln Y on ln W and ln X.
    WageThreeVar,
    /// ln Y on ln W alone.
    WageTwoVar,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if let ModelSpec::Polynomial { degree } = self {
            if *degree == 0 || *degree > MAX_POLY_DEGREE {
                return Err(Error::InvalidParameter {
                    name: "degree",
                    value: *degree as f64,
                    constraint: "polynomial degree must be between 1 and 6",
                });
            }
        }
        Ok(())
    }

    /// Family label used as a map key in reports.
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Polynomial { .. } => "polynomial",
            ModelSpec::Exponential => "exponential",
            ModelSpec::Power => "power",
            ModelSpec::WageThreeVar => "wage_three_var",
            ModelSpec::WageTwoVar => "wage_two_var",
        }
    }

    /// Column labels, intercept first, mirroring the printed table rows.
    pub fn coefficient_names(&self) -> Vec<String> {
        let mut names = vec!["(Intercept)".to_string()];
        match self {
            ModelSpec::Polynomial { degree } => {
                for k in 1..=*degree {
                    names.push(format!("(log X1)^{k}"));
                }
            }
            ModelSpec::Exponential => names.push("(X1)".to_string()),
            ModelSpec::Power => names.push("log(X1)".to_string()),
            ModelSpec::WageThreeVar => {
                names.push("log(W)".to_string());
                names.push("log(X1)".to_string());
            }
            ModelSpec::WageTwoVar => names.push("log(W)".to_string()),
        }
        names
    }

    fn needs_wage(&self) -> bool {
        matches!(self, ModelSpec::WageThreeVar | ModelSpec::WageTwoVar)
    }
}

/// Design matrix plus response, with row-level rejections recorded.
#[derive(Debug, Clone)]
pub struct Design {
    pub matrix: Matrix,
    pub response: Vec<f64>,
    pub names: Vec<String>,
    pub exclusions: ExclusionReport,
}

/// Build the design for `spec`: response ln(V/L), intercept column first.
///
/// Rows with a non-positive value under a log (or a missing wage where one
/// is needed) are rejected per rule; fewer remaining rows than coefficients
/// is an error.
pub fn build_design(spec: &ModelSpec, rows: &[Observation]) -> Result<Design> {
    spec.validate()?;
    let names = spec.coefficient_names();
    let p = names.len();
    let mut exclusions = ExclusionReport::new();
    let mut design_rows = Vec::new();
    let mut response = Vec::new();

    for obs in rows {
        if !(obs.output_per_worker.is_finite() && obs.output_per_worker > 0.0) {
            exclusions.record("nonpositive-output-per-worker");
            continue;
        }
        if !(obs.capital_intensity.is_finite() && obs.capital_intensity > 0.0) {
            exclusions.record("nonpositive-capital-intensity");
            continue;
        }
        let wage = if spec.needs_wage() {
            match obs.wage_rate {
                None => {
                    exclusions.record("missing-wage");
                    continue;
                }
                Some(w) if !(w.is_finite() && w > 0.0) => {
                    exclusions.record("nonpositive-wage");
                    continue;
                }
                Some(w) => Some(w),
            }
        } else {
            None
        };

        let t = obs.capital_intensity.ln();
        let mut row = Vec::with_capacity(p);
        row.push(1.0);
        match spec {
            ModelSpec::Polynomial { degree } => {
                let mut pow = 1.0;
                for _ in 0..*degree {
                    pow *= t;
                    row.push(pow);
                }
            }
            ModelSpec::Exponential => row.push(obs.capital_intensity),
            ModelSpec::Power => row.push(t),
            ModelSpec::WageThreeVar => {
                row.push(wage.unwrap().ln());
                row.push(t);
            }
            ModelSpec::WageTwoVar => row.push(wage.unwrap().ln()),
        }
        design_rows.push(row);
        response.push(obs.output_per_worker.ln());
    }

    if design_rows.len() < p {
        return Err(Error::InsufficientData {
            needed: p,
            available: design_rows.len(),
        });
    }
    Ok(Design {
        matrix: Matrix::from_rows(&design_rows),
        response,
        names,
        exclusions,
    })
}

/// Coefficient estimates, standard errors and deviance from the QR solve.
#[derive(Debug, Clone)]
pub struct FitCore {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub n: usize,
    pub p: usize,
}

/// Ordinary least squares on a built design.
pub fn fit_ols(design: &Design) -> Result<FitCore> {
    let n = design.matrix.rows();
    let p = design.matrix.cols();
    if n <= p {
        return Err(Error::InsufficientData { needed: p, available: n });
    }
    let solved = linalg::qr_least_squares(&design.matrix, &design.response, &design.names)?;
    let fitted = design.matrix.mul_vec(&solved.coefficients);
    let residuals: Vec<f64> = design
        .response
        .iter()
        .zip(&fitted)
        .map(|(y, f)| y - f)
        .collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma2 = rss / (n - p) as f64;
    let std_errors = solved
        .normal_inverse_diagonal
        .iter()
        .map(|d| (sigma2 * d).sqrt())
        .collect();
    Ok(FitCore {
        coefficients: solved.coefficients,
        std_errors,
        residuals,
        rss,
        n,
        p,
    })
}

/// Gaussian log likelihood and information criteria, error variance counted
/// as one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoCriteria {
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
}

/// logL = -(n/2)(ln 2pi + ln(rss/n) + 1); AIC = 2(p+1) - 2 logL;
/// BIC = (p+1) ln n - 2 logL.
pub fn information_criteria(rss: f64, n: usize, p: usize) -> Result<InfoCriteria> {
    if p == 0 || n <= p {
        return Err(Error::InsufficientData { needed: p, available: n });
    }
    if rss == 0.0 {
        return Err(Error::PerfectFit);
    }
    if !(rss.is_finite() && rss > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rss",
            value: rss,
            constraint: "must be finite and non-negative",
        });
    }
    let n_f = n as f64;
    let log_likelihood = -(n_f / 2.0) * ((2.0 * std::f64::consts::PI).ln() + (rss / n_f).ln() + 1.0);
    let k = (p + 1) as f64;
    Ok(InfoCriteria {
        log_likelihood,
        aic: 2.0 * k - 2.0 * log_likelihood,
        bic: k * n_f.ln() - 2.0 * log_likelihood,
    })
}

/// Fit-quality band for the standardized root mean square error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SrmseBand {
    Good,
    Decent,
    Bad,
}

/// RMSE of the residuals divided by the sample standard deviation of the
/// response (n-1 denominator). Bands: < 0.5 good, 0.5..=1 decent, > 1 bad.
pub fn srmse(residuals: &[f64], response: &[f64]) -> Result<(f64, SrmseBand)> {
    let n = response.len();
    if n < 2 || residuals.len() != n {
        return Err(Error::InsufficientData { needed: 2, available: n });
    }
    let mean = response.iter().sum::<f64>() / n as f64;
    let var = response.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(Error::UndefinedSrmse);
    }
    let rmse = (residuals.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    let value = rmse / var.sqrt();
    let band = if value < 0.5 {
        SrmseBand::Good
    } else if value > 1.0 {
        SrmseBand::Bad
    } else {
        SrmseBand::Decent
    };
    Ok((value, band))
}

/// Significance stars: *** p < 0.001, ** p < 0.01, * p < 0.05.
pub fn star_code(p_value: f64) -> &'static str {
    if p_value < 0.001 {
        "***"
    } else if p_value < 0.01 {
        "**"
    } else if p_value < 0.05 {
        "*"
    } else {
        ""
    }
}

/// One fitted coefficient row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub p_value: f64,
    pub stars: String,
}

/// One fitted regression with the full statistics battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelSpec,
    pub coefficients: Vec<Coefficient>,
    pub n: usize,
    pub p: usize,
    pub deviance: f64,
    #[serde(with = "nonfinite")]
    pub log_likelihood: f64,
    #[serde(with = "nonfinite")]
    pub aic: f64,
    #[serde(with = "nonfinite")]
    pub bic: f64,
    pub r2: f64,
    pub adj_r2: f64,
    pub srmse: f64,
    pub srmse_band: SrmseBand,
}

impl FitResult {
    /// Estimate for a named coefficient, if present.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.estimate)
    }

    /// True when the fit hit the perfect-fit sentinel.
    pub fn is_perfect_fit(&self) -> bool {
        self.aic == f64::NEG_INFINITY
    }
}

/// Build, solve, and assemble the statistics for one model shape.
///
/// Returns the fit together with the rows it had to exclude.
pub fn fit_model(spec: &ModelSpec, rows: &[Observation]) -> Result<(FitResult, ExclusionReport)> {
    let design = build_design(spec, rows)?;
    let core = fit_ols(&design)?;

    let mean = design.response.iter().sum::<f64>() / core.n as f64;
    let tss: f64 = design.response.iter().map(|y| (y - mean) * (y - mean)).sum();
    let r2 = if tss > 0.0 { 1.0 - core.rss / tss } else { return Err(Error::UndefinedSrmse) };
    let adj_r2 = 1.0 - (1.0 - r2) * (core.n - 1) as f64 / (core.n - core.p) as f64;

    let perfect = core.rss <= PERFECT_FIT_REL_TOL * tss;
    let info = if perfect {
        InfoCriteria {
            log_likelihood: f64::INFINITY,
            aic: f64::NEG_INFINITY,
            bic: f64::NEG_INFINITY,
        }
    } else {
        information_criteria(core.rss, core.n, core.p)?
    };

    let (srmse_value, band) = srmse(&core.residuals, &design.response)?;

    let df = (core.n - core.p) as f64;
    let coefficients = design
        .names
        .iter()
        .zip(core.coefficients.iter().zip(&core.std_errors))
        .map(|(name, (&est, &se))| {
            let p_value = if se > 0.0 {
                dist::student_t_two_sided(est / se, df)
            } else if est == 0.0 {
                1.0
            } else {
                0.0
            };
            Coefficient {
                name: name.clone(),
                estimate: est,
                std_error: se,
                p_value,
                stars: star_code(p_value).to_string(),
            }
        })
        .collect();

    Ok((
        FitResult {
            model: *spec,
            coefficients,
            n: core.n,
            p: core.p,
            deviance: core.rss,
            log_likelihood: info.log_likelihood,
            aic: info.aic,
            bic: info.bic,
            r2,
            adj_r2,
            srmse: srmse_value,
            srmse_band: band,
        },
        design.exclusions,
    ))
}

/// Minimum-AIC fit. Ties within 1e-9 (or equal infinities) go to the fit
/// with fewer coefficients, then to declaration order. All fits must cover
/// the same observation count.
pub fn select_model(fits: &[FitResult]) -> Result<&FitResult> {
    let Some(first) = fits.first() else {
        return Err(Error::IncomparableFits {
            detail: "no fits to select from".to_string(),
        });
    };
    if let Some(bad) = fits.iter().find(|f| f.n != first.n) {
        return Err(Error::IncomparableFits {
            detail: format!(
                "fits cover different observation sets (n = {} vs n = {})",
                first.n, bad.n
            ),
        });
    }
    let mut best = first;
    for fit in &fits[1..] {
        let tie = fit.aic == best.aic || (fit.aic - best.aic).abs() < AIC_TIE_TOL;
        if tie {
            if fit.p < best.p {
                best = fit;
            }
        } else if fit.aic < best.aic {
            best = fit;
        }
    }
    Ok(best)
}

/// Outcome of fitting polynomial degrees 1..=max and picking by AIC.
#[derive(Debug, Clone)]
pub struct DegreeSelection {
    pub fit: FitResult,
    pub exclusions: ExclusionReport,
    /// Degrees that could not be fitted, with the reason.
    pub notes: Vec<String>,
}

/// Fit polynomial degrees 1..=max_degree and return the minimum-AIC fit
/// (same tie-break as [`select_model`]). Degrees without enough rows are
/// skipped with a recorded note.
pub fn select_polynomial_degree(rows: &[Observation], max_degree: usize) -> Result<DegreeSelection> {
    if max_degree == 0 {
        return Err(Error::InvalidParameter {
            name: "max_degree",
            value: 0.0,
            constraint: "must be at least 1",
        });
    }
    let mut fits = Vec::new();
    let mut notes = Vec::new();
    let mut exclusions = ExclusionReport::new();
    for degree in 1..=max_degree.min(MAX_POLY_DEGREE) {
        match fit_model(&ModelSpec::Polynomial { degree }, rows) {
            Ok((fit, excl)) => {
                exclusions = excl;
                fits.push(fit);
            }
            Err(Error::InsufficientData { needed, available }) => {
                notes.push(format!(
                    "degree {degree} skipped: needs more than {needed} rows, have {available}"
                ));
            }
            Err(e) => return Err(e),
        }
    }
    let best = select_model(&fits)?.clone();
    Ok(DegreeSelection {
        fit: best,
        exclusions,
        notes,
    })
}

/// Serialize non-finite statistics as explicit string markers instead of
/// silent nulls: "inf", "-inf", "nan".
pub mod nonfinite {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(value: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            ser.serialize_f64(*value)
        } else if value.is_nan() {
            ser.serialize_str("nan")
        } else if *value > 0.0 {
            ser.serialize_str("inf")
        } else {
            ser.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = f64;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or an inf/-inf/nan marker")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    other => Err(E::custom(format!("unknown marker {other:?}"))),
                }
            }
        }
        de.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn obs(y: f64, x: f64) -> Observation {
        Observation {
            output_per_worker: y,
            capital_intensity: x,
            wage_rate: None,
        }
    }

    fn obs_w(y: f64, x: f64, w: f64) -> Observation {
        Observation {
            output_per_worker: y,
            capital_intensity: x,
            wage_rate: Some(w),
        }
    }

    #[test]
    fn power_design_row() {
        let e = std::f64::consts::E;
        let rows = vec![obs(e, e), obs(e * e, e * e)];
        let d = build_design(&ModelSpec::Power, &rows).unwrap();
        assert_eq!(d.matrix.row(0), &[1.0, 1.0]);
        assert_relative_eq!(d.response[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn polynomial_design_row() {
        let e2 = std::f64::consts::E * std::f64::consts::E;
        let rows = vec![obs(1.5, e2), obs(2.0, 1.0), obs(2.5, 2.0)];
        let d = build_design(&ModelSpec::Polynomial { degree: 2 }, &rows).unwrap();
        assert_relative_eq!(d.matrix.row(0)[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(d.matrix.row(0)[2], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn design_rejects_rows_per_rule() {
        let rows = vec![
            obs(1.0, 1.0),
            obs(-1.0, 1.0),
            obs(2.0, 0.0),
            obs(2.0, 2.0),
            obs(3.0, 3.0),
        ];
        let d = build_design(&ModelSpec::Power, &rows).unwrap();
        assert_eq!(d.exclusions.count("nonpositive-output-per-worker"), 1);
        assert_eq!(d.exclusions.count("nonpositive-capital-intensity"), 1);
        assert_eq!(d.matrix.rows(), 3);

        let wage_rows = vec![obs_w(1.0, 1.0, 0.5), obs(1.0, 2.0), obs_w(1.0, 3.0, -0.1)];
        match build_design(&ModelSpec::WageTwoVar, &wage_rows) {
            Err(Error::InsufficientData { available, .. }) => assert_eq!(available, 1),
            other => panic!("expected insufficient data, got {other:?}"),
        }
    }

    #[test]
    fn wage_design_recovers_known_coefficients() {
        // Exact model rows: ln Y = ln a + b ln W + c ln X.
        let (ln_a, b, c) = (0.3, 0.5, 0.2);
        let rows: Vec<Observation> = [0.5_f64, 0.8, 1.0, 1.7, 2.4, 3.3, 4.1]
            .iter()
            .map(|&x| {
                let w = 0.4 + x * 0.3;
                let y = (ln_a + b * w.ln() + c * x.ln()).exp();
                obs_w(y, x, w)
            })
            .collect();
        let d = build_design(&ModelSpec::WageThreeVar, &rows).unwrap();
        let core = fit_ols(&d).unwrap();
        assert_relative_eq!(core.coefficients[0], ln_a, epsilon = 1e-10);
        assert_relative_eq!(core.coefficients[1], b, epsilon = 1e-10);
        assert_relative_eq!(core.coefficients[2], c, epsilon = 1e-10);
        assert!(core.rss < 1e-20);
    }

    #[test]
    fn ols_hand_example() {
        let rows = vec![obs(1.0, 1.0), obs(2.0, 2.0), obs(2.0, 3.0)];
        // Use the raw-X shape so the design is (1, x).
        let d = Design {
            matrix: Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]]),
            response: vec![1.0, 2.0, 2.0],
            names: vec!["(Intercept)".into(), "x".into()],
            exclusions: ExclusionReport::new(),
        };
        let _ = rows;
        let core = fit_ols(&d).unwrap();
        assert_relative_eq!(core.coefficients[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(core.coefficients[1], 0.5, epsilon = 1e-12);
        assert_relative_eq!(core.rss, 1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn residuals_are_orthogonal_to_design() {
        let rows: Vec<Observation> = (1..=30)
            .map(|i| {
                let x = 0.3 + 0.2 * i as f64;
                obs((0.4 * x.ln() + 0.1 * (i as f64).sin() + 1.0).exp(), x)
            })
            .collect();
        let d = build_design(&ModelSpec::Polynomial { degree: 3 }, &rows).unwrap();
        let core = fit_ols(&d).unwrap();
        for j in 0..d.matrix.cols() {
            let dot: f64 = (0..d.matrix.rows())
                .map(|i| d.matrix.get(i, j) * core.residuals[i])
                .sum();
            let scale: f64 = (0..d.matrix.rows())
                .map(|i| d.matrix.get(i, j).abs())
                .fold(0.0, f64::max);
            assert!(dot.abs() <= 1e-8 * scale.max(1.0), "column {j}: {dot}");
        }
    }

    #[test]
    fn information_criteria_printed_rows() {
        // (deviance, n, p) triples from the printed estimates table.
        let cases = [
            (4.01, 35, 5, -11.73, 35.46, 44.79, 0.05),
            (27.23, 35, 2, -45.27, 96.54, 101.20, 0.05),
            (5.58, 42, 2, -17.22, 40.43, 45.65, 0.05),
        ];
        for (rss, n, p, ll, aic, bic, tol) in cases {
            let ic = information_criteria(rss, n, p).unwrap();
            assert!((ic.log_likelihood - ll).abs() <= tol, "logLik {}", ic.log_likelihood);
            assert!((ic.aic - aic).abs() <= tol, "aic {}", ic.aic);
            assert!((ic.bic - bic).abs() <= tol, "bic {}", ic.bic);
        }
        // The 0.40-deviance row: printed deviance carries only two decimals,
        // so the tolerance doubles through AIC = 2(p+1) - 2 logL.
        let ic = information_criteria(0.40, 42, 3).unwrap();
        assert!((ic.log_likelihood - 38.32).abs() <= 0.2);
        assert!((ic.aic - -68.63).abs() <= 0.4);
        assert!((ic.bic - -61.68).abs() <= 0.4);
    }

    #[test]
    fn perfect_fit_is_a_sentinel_not_a_number() {
        assert!(matches!(
            information_criteria(0.0, 10, 2),
            Err(Error::PerfectFit)
        ));
    }

    #[test]
    fn srmse_hand_values_and_bands() {
        let (v, band) = srmse(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(band, SrmseBand::Good);

        // response (0, 2), fitted (1, 1): RMSE 1, sd sqrt(2).
        let (v, band) = srmse(&[-1.0, 1.0], &[0.0, 2.0]).unwrap();
        assert_relative_eq!(v, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_eq!(band, SrmseBand::Decent);

        assert!(matches!(
            srmse(&[0.1, 0.1], &[1.0, 1.0]),
            Err(Error::UndefinedSrmse)
        ));
    }

    #[test]
    fn srmse_band_edges() {
        // 0.5 and 1.0 are decent; just above 1 is bad.
        let mk = |target: f64| {
            // residuals chosen so RMSE/sd hits the target for response (0, 2).
            let sd = std::f64::consts::SQRT_2;
            let r = target * sd;
            srmse(&[r, -r], &[0.0, 2.0]).unwrap()
        };
        assert_eq!(mk(0.499).1, SrmseBand::Good);
        assert_eq!(mk(0.5).1, SrmseBand::Decent);
        assert_eq!(mk(1.0).1, SrmseBand::Decent);
        assert_eq!(mk(1.001).1, SrmseBand::Bad);
    }

    #[test]
    fn star_codes() {
        assert_eq!(star_code(0.0005), "***");
        assert_eq!(star_code(0.005), "**");
        assert_eq!(star_code(0.03), "*");
        assert_eq!(star_code(0.2), "");
    }

    fn fit_with_aic(aic: f64, p: usize, n: usize) -> FitResult {
        FitResult {
            model: ModelSpec::Power,
            coefficients: vec![],
            n,
            p,
            deviance: 1.0,
            log_likelihood: 0.0,
            aic,
            bic: aic,
            r2: 0.5,
            adj_r2: 0.5,
            srmse: 0.5,
            srmse_band: SrmseBand::Decent,
        }
    }

    #[test]
    fn select_model_prefers_lower_aic() {
        let fits = [fit_with_aic(35.46, 5, 35), fit_with_aic(96.54, 2, 35)];
        assert_eq!(select_model(&fits).unwrap().aic, 35.46);
    }

    #[test]
    fn select_model_tie_break_and_single_fit() {
        let fits = [fit_with_aic(10.0, 5, 35), fit_with_aic(10.0, 3, 35)];
        assert_eq!(select_model(&fits).unwrap().p, 3);
        let single = [fit_with_aic(42.0, 2, 35)];
        assert_eq!(select_model(&single).unwrap().aic, 42.0);
    }

    #[test]
    fn select_model_rejects_mismatched_n() {
        let fits = [fit_with_aic(10.0, 2, 35), fit_with_aic(11.0, 2, 42)];
        assert!(matches!(
            select_model(&fits),
            Err(Error::IncomparableFits { .. })
        ));
    }

    #[test]
    fn exact_line_selects_degree_one() {
        // Noiseless line in logs: every degree hits the perfect-fit
        // sentinel; the tie goes to the fewest coefficients.
        let rows: Vec<Observation> = (1..=12)
            .map(|i| {
                let x = 0.5 * i as f64;
                obs((0.2 + 0.7 * x.ln()).exp(), x)
            })
            .collect();
        let sel = select_polynomial_degree(&rows, 4).unwrap();
        assert!(matches!(sel.fit.model, ModelSpec::Polynomial { degree: 1 }));
        assert!(sel.fit.is_perfect_fit());
    }

    #[test]
    fn small_sample_skips_large_degrees() {
        let rows: Vec<Observation> = [(1.0, 0.9), (2.0, 1.7), (3.0, 2.1), (4.0, 3.4)]
            .iter()
            .map(|&(x, y)| obs(y, x))
            .collect();
        let sel = select_polynomial_degree(&rows, 4).unwrap();
        assert!(!sel.notes.is_empty());
        if let ModelSpec::Polynomial { degree } = sel.fit.model {
            assert!(degree <= 2, "degree {degree} needs p+1 <= n rows");
        } else {
            panic!("expected polynomial");
        }
    }

    #[test]
    fn fit_model_assembles_statistics() {
        let rows: Vec<Observation> = (1..=20)
            .map(|i| {
                let x = 0.4 + 0.25 * i as f64;
                let noise = 0.02 * ((i * 37 % 11) as f64 - 5.0) / 5.0;
                obs((0.3 + 0.6 * x.ln() + noise).exp(), x)
            })
            .collect();
        let (fit, excl) = fit_model(&ModelSpec::Power, &rows).unwrap();
        assert!(excl.is_empty());
        assert_eq!(fit.n, 20);
        assert_eq!(fit.p, 2);
        assert!(fit.r2 > 0.9 && fit.r2 <= 1.0);
        assert!(fit.adj_r2 <= fit.r2);
        assert_relative_eq!(
            fit.aic,
            2.0 * 3.0 - 2.0 * fit.log_likelihood,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            fit.bic,
            3.0 * 20.0_f64.ln() - 2.0 * fit.log_likelihood,
            max_relative = 1e-12
        );
        assert_eq!(fit.coefficients.len(), 2);
        assert_eq!(fit.coefficients[0].name, "(Intercept)");
    }

    #[test]
    fn quadratic_degree_selection_monte_carlo() {
        // True quadratic in ln X with noise sd 0.01, max degree 4, fixed
        // seeds. Minimum-AIC selection keeps an irreducible overfit rate:
        // an extra irrelevant degree survives when its likelihood-ratio
        // statistic (asymptotically chi-squared, 1 df) exceeds 2, which
        // happens for roughly one seed in six. The frozen-seed count below
        // reflects that; a rate anywhere near certainty is not achievable
        // for this selector.
        use rand::{Rng, SeedableRng};
        let mut degree2 = 0;
        for seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Observation> = (0..100)
                .map(|_| {
                    let t: f64 = -1.0 + 2.0 * rng.gen::<f64>();
                    let u1: f64 = 1.0 - rng.gen::<f64>();
                    let u2: f64 = rng.gen();
                    let z =
                        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                    Observation {
                        output_per_worker: (0.4 + 0.5 * t - 0.2 * t * t + 0.01 * z).exp(),
                        capital_intensity: t.exp(),
                        wage_rate: None,
                    }
                })
                .collect();
            let sel = select_polynomial_degree(&rows, 4).unwrap();
            match sel.fit.model {
                ModelSpec::Polynomial { degree } => {
                    // Degree 1 would drop the true curvature; AIC never
                    // underfits this signal-to-noise ratio.
                    assert!(degree >= 2, "seed {seed} underfit to degree {degree}");
                    if degree == 2 {
                        degree2 += 1;
                    }
                }
                other => panic!("expected polynomial, got {other:?}"),
            }
        }
        assert!(
            degree2 >= 60,
            "degree 2 selected in only {degree2}/100 seeds"
        );
    }

    #[test]
    fn nonfinite_statistics_serialize_as_markers() {
        let mut fit = fit_with_aic(f64::NEG_INFINITY, 2, 10);
        fit.log_likelihood = f64::INFINITY;
        fit.bic = f64::NEG_INFINITY;
        let json = serde_json::to_string(&fit).unwrap();
        assert!(json.contains("\"aic\":\"-inf\""));
        assert!(json.contains("\"log_likelihood\":\"inf\""));
        let back: FitResult = serde_json::from_str(&json).unwrap();
        assert!(back.is_perfect_fit());
    }
}
