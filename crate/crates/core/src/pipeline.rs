//! Per-industry-group estimation: fit the model shapes, select by AIC,
//! extract mu by the wage and inversion routes, estimate the CES elasticity,
//! classify capacity priority, and aggregate invested capital.

use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::PlantRecord;
use crate::error::{Error, Result};
use crate::linearization::{invert_linearization, Inversion, LinearizationCoefficients};
use crate::production::HlForm;
use crate::regression::{
    fit_model, select_model, select_polynomial_degree, FitResult, ModelSpec, Observation,
};
use crate::report::ExclusionReport;

/// Shape families raced against each other by AIC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Polynomial,
    Exponential,
    Power,
}

impl FromStr for ModelFamily {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "polynomial" => Ok(ModelFamily::Polynomial),
            "exponential" => Ok(ModelFamily::Exponential),
            "power" => Ok(ModelFamily::Power),
            other => Err(format!("unknown model family {other:?}")),
        }
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelFamily::Polynomial => "polynomial",
            ModelFamily::Exponential => "exponential",
            ModelFamily::Power => "power",
        })
    }
}

/// Preferred source for the reported mu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuRoute {
    /// The intensity-elasticity coefficient of the wage regression; exact
    /// by the reparameterization identity, so it is the default.
    #[default]
    WageFirst,
    /// Inversion of the fitted polynomial coefficients; inherits Taylor
    /// truncation error.
    InversionFirst,
}

impl FromStr for MuRoute {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "wage" | "wage_first" => Ok(MuRoute::WageFirst),
            "inversion" | "inversion_first" => Ok(MuRoute::InversionFirst),
            other => Err(format!("unknown mu route {other:?}")),
        }
    }
}

/// Column used to partition records into groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    #[default]
    IndustryCode,
    State,
}

impl FromStr for GroupBy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "industry_code" => Ok(GroupBy::IndustryCode),
            "state" => Ok(GroupBy::State),
            other => Err(format!("unknown group-by column {other:?}")),
        }
    }
}

/// Batch configuration with the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub models: Vec<ModelFamily>,
    pub max_degree: usize,
    /// Groups with sigma above this line get capital-investment priority.
    pub sigma_threshold: f64,
    /// Upper end of the theoretically reasonable sigma band.
    pub sigma_max: f64,
    pub mu_route: MuRoute,
    pub year_filter: Option<i32>,
    pub group_by: GroupBy,
    /// Accepted state codes; empty means accept everything silently.
    pub known_states: Vec<String>,
    pub parallel: bool,
    /// Recorded in the report for provenance; estimation itself is
    /// deterministic and draws nothing.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            models: vec![
                ModelFamily::Polynomial,
                ModelFamily::Exponential,
                ModelFamily::Power,
            ],
            max_degree: 4,
            sigma_threshold: 0.5,
            sigma_max: 1.0,
            mu_route: MuRoute::WageFirst,
            year_filter: None,
            group_by: GroupBy::IndustryCode,
            known_states: Vec::new(),
            parallel: true,
            seed: 0,
        }
    }
}

/// Everything estimated for one industry group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEstimate {
    pub industry_code: String,
    pub n_used: usize,
    pub n_excluded: usize,
    /// Fits keyed by model family.
    pub fits: BTreeMap<String, FitResult>,
    /// The minimum-AIC shape.
    pub best: ModelSpec,
    /// mu = c from the three-variable wage regression.
    pub mu_wage_route: Option<f64>,
    /// mu recovered by inverting the selected polynomial's coefficients.
    pub mu_inversion_route: Option<f64>,
    /// b from the two-variable wage regression under the CES assumption.
    pub sigma_ces: Option<f64>,
    /// Fitted wage-regression coefficients with the level-matched
    /// integration constant.
    pub hl: Option<HlForm>,
    pub diagnostics: Vec<String>,
    pub exclusions: ExclusionReport,
}

fn geometric_mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        if v <= 0.0 {
            return None;
        }
        sum += v.ln();
        count += 1;
    }
    if count == 0 {
        None
    } else {
        Some((sum / count as f64).exp())
    }
}

/// Recover the integration constant by matching the closed-form output level
/// to the geometric mean of observed output at the geometric-mean intensity.
fn recover_integration_constant(
    scale: f64,
    b: f64,
    c: f64,
    x_star: f64,
    y_star: f64,
) -> Option<f64> {
    let denom = 1.0 - b - c;
    if denom.abs() < 1e-12 || b <= 0.0 || (b - 1.0).abs() < 1e-9 {
        return None;
    }
    let alpha = scale.powf(-1.0 / b) * (1.0 - b) / denom;
    let e2 = (b - 1.0) / b;
    let beta = (y_star.powf(e2) - alpha * x_star.powf(-c / b)) / x_star.powf(e2);
    (beta.is_finite() && beta > 0.0).then_some(beta)
}

/// Estimate one group. Partial failures (wage data absent, inversion
/// ambiguous, ...) leave the corresponding field empty with a recorded
/// diagnostic; only a group with no fittable shape model errors out.
pub fn estimate_group(
    industry_code: &str,
    records: &[PlantRecord],
    config: &PipelineConfig,
) -> Result<GroupEstimate> {
    let mut exclusions = ExclusionReport::new();
    let mut observations = Vec::with_capacity(records.len());
    for r in records {
        if !(r.workers.is_finite() && r.workers > 0.0) {
            exclusions.record("nonpositive-workers");
            continue;
        }
        if !(r.value_added.is_finite() && r.value_added > 0.0) {
            exclusions.record("nonpositive-value-added");
            continue;
        }
        if !(r.capital.is_finite() && r.capital > 0.0) {
            exclusions.record("nonpositive-capital");
            continue;
        }
        observations.push(Observation {
            output_per_worker: r.value_added / r.workers,
            capital_intensity: r.capital / r.workers,
            wage_rate: r.wages.map(|w| w / r.workers),
        });
    }

    if config.models.is_empty() {
        return Err(Error::InvalidParameter {
            name: "models",
            value: 0.0,
            constraint: "at least one model family is required",
        });
    }

    let mut diagnostics = Vec::new();
    let mut fits: BTreeMap<String, FitResult> = BTreeMap::new();

    for family in &config.models {
        match family {
            ModelFamily::Polynomial => {
                let selection = select_polynomial_degree(&observations, config.max_degree)?;
                exclusions.merge(&selection.exclusions);
                diagnostics.extend(selection.notes);
                fits.insert("polynomial".into(), selection.fit);
            }
            ModelFamily::Exponential => {
                let (fit, excl) = fit_model(&ModelSpec::Exponential, &observations)?;
                exclusions.merge(&excl);
                fits.insert("exponential".into(), fit);
            }
            ModelFamily::Power => {
                let (fit, excl) = fit_model(&ModelSpec::Power, &observations)?;
                exclusions.merge(&excl);
                fits.insert("power".into(), fit);
            }
        }
    }

    let shape_fits: Vec<FitResult> = fits.values().cloned().collect();
    let best = select_model(&shape_fits)?.model;
    let n_used = shape_fits.first().map_or(0, |f| f.n);

    // Wage routes.
    let mut mu_wage_route = None;
    let mut sigma_ces = None;
    let mut hl = None;
    let has_wages = observations.iter().any(|o| o.wage_rate.is_some());
    if has_wages {
        match fit_model(&ModelSpec::WageThreeVar, &observations) {
            Ok((fit, excl)) => {
                exclusions.merge(&excl);
                let intercept = fit.coefficient("(Intercept)");
                let b = fit.coefficient("log(W)");
                let c = fit.coefficient("log(X1)");
                if let (Some(intercept), Some(b), Some(c)) = (intercept, b, c) {
                    mu_wage_route = Some(c);
                    hl = build_hl(intercept.exp(), b, c, &observations, &mut diagnostics);
                }
                fits.insert("wage_three_var".into(), fit);
            }
            Err(e) => diagnostics.push(format!("wage_three_var skipped: {e}")),
        }
        match fit_model(&ModelSpec::WageTwoVar, &observations) {
            Ok((fit, excl)) => {
                exclusions.merge(&excl);
                sigma_ces = fit.coefficient("log(W)");
                fits.insert("wage_two_var".into(), fit);
            }
            Err(e) => diagnostics.push(format!("wage_two_var skipped: {e}")),
        }
    } else {
        diagnostics.push("no wage data: wage-route estimates skipped".into());
    }

    // Inversion route from the selected polynomial.
    let mut mu_inversion_route = None;
    if let Some(poly) = fits.get("polynomial") {
        let ModelSpec::Polynomial { degree } = poly.model else {
            unreachable!()
        };
        if degree >= 3 {
            let intercept = poly.coefficient("(Intercept)").unwrap_or(f64::NAN);
            let powers: Vec<f64> = (1..=3)
                .map(|k| poly.coefficient(&format!("(log X1)^{k}")).unwrap_or(f64::NAN))
                .collect();
            match LinearizationCoefficients::new(intercept, powers)
                .and_then(|c| invert_linearization(&c))
            {
                Ok(Inversion::Unique(p)) => mu_inversion_route = Some(p.intensity()),
                Ok(Inversion::ConstrainedFamily(_)) => diagnostics.push(
                    "inversion degenerate: coefficients sit on the mu = rho/(1+rho) family".into(),
                ),
                Err(e) => diagnostics.push(format!("inversion route failed: {e}")),
            }
        } else {
            diagnostics.push(format!(
                "inversion route skipped: selected polynomial degree {degree} < 3"
            ));
        }
    }

    Ok(GroupEstimate {
        industry_code: industry_code.to_string(),
        n_used,
        n_excluded: records.len() - observations.len(),
        fits,
        best,
        mu_wage_route,
        mu_inversion_route,
        sigma_ces,
        hl,
        diagnostics,
        exclusions,
    })
}

fn build_hl(
    scale: f64,
    b: f64,
    c: f64,
    observations: &[Observation],
    diagnostics: &mut Vec<String>,
) -> Option<HlForm> {
    let usable = observations
        .iter()
        .filter(|o| {
            o.output_per_worker > 0.0
                && o.capital_intensity > 0.0
                && o.wage_rate.is_some_and(|w| w > 0.0)
        })
        .collect::<Vec<_>>();
    let x_star = geometric_mean(usable.iter().map(|o| o.capital_intensity))?;
    let y_star = geometric_mean(usable.iter().map(|o| o.output_per_worker))?;
    let Some(beta) = recover_integration_constant(scale, b, c, x_star, y_star) else {
        diagnostics.push("integration-constant recovery failed: no positive beta".into());
        return None;
    };
    match HlForm::new(scale, b, c, beta) {
        Ok(h) => Some(h),
        Err(e) => {
            diagnostics.push(format!("fitted coefficients do not form a valid relation: {e}"));
            None
        }
    }
}

/// One point of the sigma-versus-mu comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndustryComparison {
    pub industry_code: String,
    pub sigma_ces: Option<f64>,
    pub mu_ves: Option<f64>,
    /// sigma inside (0, sigma_max].
    pub theoretically_reasonable: bool,
    /// Reasonable, sigma above the threshold line, and mu > 0.
    pub priority: bool,
}

/// Classify groups for the priority chart; sorted by sigma descending,
/// groups missing inputs last.
pub fn compare_groups(
    estimates: &[GroupEstimate],
    config: &PipelineConfig,
) -> Vec<IndustryComparison> {
    let mut out: Vec<IndustryComparison> = estimates
        .iter()
        .map(|g| {
            let mu = match config.mu_route {
                MuRoute::WageFirst => g.mu_wage_route.or(g.mu_inversion_route),
                MuRoute::InversionFirst => g.mu_inversion_route.or(g.mu_wage_route),
            };
            let sigma = g.sigma_ces;
            let reasonable =
                sigma.is_some_and(|s| s.is_finite() && s > 0.0 && s <= config.sigma_max);
            let priority = reasonable
                && sigma.is_some_and(|s| s > config.sigma_threshold)
                && mu.is_some_and(|m| m.is_finite() && m > 0.0);
            IndustryComparison {
                industry_code: g.industry_code.clone(),
                sigma_ces: sigma,
                mu_ves: mu,
                theoretically_reasonable: reasonable,
                priority,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        match (b.sigma_ces, a.sigma_ces) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Greater,
            (None, Some(_)) => std::cmp::Ordering::Less,
            (None, None) => std::cmp::Ordering::Equal,
        }
        .then_with(|| a.industry_code.cmp(&b.industry_code))
    });
    out
}

/// Sign-based reading of a mu estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MuInterpretation {
    #[serde(rename = "capital-intensive-production-indicated")]
    CapitalIntensive,
    #[serde(rename = "ces-equivalent")]
    CesEquivalent,
    #[serde(rename = "labor-intensive-indicated")]
    LaborIntensive,
}

impl MuInterpretation {
    pub fn as_str(&self) -> &'static str {
        match self {
            MuInterpretation::CapitalIntensive => "capital-intensive-production-indicated",
            MuInterpretation::CesEquivalent => "ces-equivalent",
            MuInterpretation::LaborIntensive => "labor-intensive-indicated",
        }
    }
}

/// mu > 0 means a higher product per worker comes from more capital per
/// worker; mu = 0 collapses to CES; mu < 0 is the labor-intensive reading.
pub fn mu_interpretation(mu: f64) -> Result<MuInterpretation> {
    const TOL: f64 = 1e-6;
    if !mu.is_finite() {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            constraint: "must be finite",
        });
    }
    Ok(if mu > TOL {
        MuInterpretation::CapitalIntensive
    } else if mu < -TOL {
        MuInterpretation::LaborIntensive
    } else {
        MuInterpretation::CesEquivalent
    })
}

/// One (state, industry) total of invested capital.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapitalCell {
    pub state: String,
    pub industry_code: String,
    pub invested_capital: f64,
}

/// Output of the capital aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapitalSummary {
    pub cells: Vec<CapitalCell>,
    /// Rows outside the year filter, ignored.
    pub rows_outside_year: u64,
    /// Rows whose state code is not on the configured list (passed through
    /// verbatim).
    pub unknown_state_rows: u64,
}

/// Sum invested capital per (state, industry code) for the filtered year.
/// Cells come out in (state, industry code) lexicographic order.
pub fn capital_by_state(
    records: &[PlantRecord],
    year_filter: Option<i32>,
    known_states: &[String],
) -> CapitalSummary {
    let mut totals: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut rows_outside_year = 0u64;
    let mut unknown_state_rows = 0u64;
    for r in records {
        if let Some(year) = year_filter {
            if r.year != year {
                rows_outside_year += 1;
                continue;
            }
        }
        if !known_states.is_empty() && !known_states.iter().any(|s| s == &r.state) {
            unknown_state_rows += 1;
        }
        *totals
            .entry((r.state.clone(), r.industry_code.clone()))
            .or_insert(0.0) += r.capital;
    }
    CapitalSummary {
        cells: totals
            .into_iter()
            .map(|((state, industry_code), invested_capital)| CapitalCell {
                state,
                industry_code,
                invested_capital,
            })
            .collect(),
        rows_outside_year,
        unknown_state_rows,
    }
}

/// A group that could not be estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFailure {
    pub industry_code: String,
    pub error: String,
}

/// The batch report: per-group estimates, the comparison table, pooled
/// exclusion counts, and the groups that failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub seed: u64,
    pub groups: Vec<GroupEstimate>,
    pub comparisons: Vec<IndustryComparison>,
    pub exclusion_summary: ExclusionReport,
    pub failures: Vec<GroupFailure>,
}

impl BatchReport {
    /// Deterministic pretty JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    /// Fold ingestion-level exclusions into the summary.
    pub fn merge_exclusions(&mut self, other: &ExclusionReport) {
        self.exclusion_summary.merge(other);
    }
}

/// Partition records, estimate every group, and assemble the report.
///
/// Groups are independent; with `config.parallel` they run on the thread
/// pool, and the output is identical to the serial schedule because groups
/// are ordered by key before estimation and results are collected in that
/// order.
pub fn run_batch(records: &[PlantRecord], config: &PipelineConfig) -> BatchReport {
    let filtered: Vec<&PlantRecord> = records
        .iter()
        .filter(|r| config.year_filter.is_none_or(|y| r.year == y))
        .collect();

    let mut grouped: BTreeMap<String, Vec<PlantRecord>> = BTreeMap::new();
    for r in filtered {
        let key = match config.group_by {
            GroupBy::IndustryCode => r.industry_code.clone(),
            GroupBy::State => r.state.clone(),
        };
        grouped.entry(key).or_default().push(r.clone());
    }
    let work: Vec<(String, Vec<PlantRecord>)> = grouped.into_iter().collect();

    let estimate = |(key, rows): &(String, Vec<PlantRecord>)| {
        (key.clone(), estimate_group(key, rows, config))
    };
    let results: Vec<(String, Result<GroupEstimate>)> = if config.parallel {
        work.par_iter().map(estimate).collect()
    } else {
        work.iter().map(estimate).collect()
    };

    let mut groups = Vec::new();
    let mut failures = Vec::new();
    let mut exclusion_summary = ExclusionReport::new();
    for (key, outcome) in results {
        match outcome {
            Ok(g) => {
                exclusion_summary.merge(&g.exclusions);
                groups.push(g);
            }
            Err(e) => failures.push(GroupFailure {
                industry_code: key,
                error: e.to_string(),
            }),
        }
    }
    let comparisons = compare_groups(&groups, config);
    BatchReport {
        seed: config.seed,
        groups,
        comparisons,
        exclusion_summary,
        failures,
    }
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Plot-ready CSV for the sigma-versus-mu comparison chart.
pub fn figure1_csv(comparisons: &[IndustryComparison]) -> String {
    let mut out = String::from("industry_code,sigma_ces,mu_ves,reasonable,priority\n");
    for c in comparisons {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.industry_code,
            csv_opt(c.sigma_ces),
            csv_opt(c.mu_ves),
            c.theoretically_reasonable,
            c.priority
        ));
    }
    out
}

/// Plot-ready CSV for the state-wise invested-capital chart.
pub fn figure2_csv(cells: &[CapitalCell]) -> String {
    let mut out = String::from("state,industry_code,invested_capital_rs_mn\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{}\n",
            c.state, c.industry_code, c.invested_capital
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::{generate, SynthConfig};
    use crate::production::VesParams;
    use approx::assert_relative_eq;

    fn synth_records(params: VesParams, n: usize, seed: u64) -> Vec<PlantRecord> {
        generate(&SynthConfig::new(params, n, seed)).unwrap().records
    }

    fn config() -> PipelineConfig {
        PipelineConfig::default()
    }

    #[test]
    fn noiseless_group_recovers_wage_route_mu_exactly() {
        let p = VesParams::new(1.0, 0.5, 1.0, 3.17).unwrap();
        let records = synth_records(p, 100, 7);
        let g = estimate_group("274", &records, &config()).unwrap();
        assert_relative_eq!(g.mu_wage_route.unwrap(), 3.17, epsilon = 1e-8);
        // b = 1/(1+rho) = 0.5 exactly on noiseless data.
        let wage_fit = &g.fits["wage_three_var"];
        assert_relative_eq!(wage_fit.coefficient("log(W)").unwrap(), 0.5, epsilon = 1e-8);
        assert!(g.sigma_ces.is_some());
        assert_eq!(g.n_excluded, 0);
    }

    #[test]
    fn ces_group_two_var_elasticity_is_exact() {
        // With mu = 0 the two-variable relation holds exactly: b = sigma.
        let p = VesParams::new(1.0, 0.5, 1.0, 0.0).unwrap();
        let records = synth_records(p, 100, 13);
        let g = estimate_group("264", &records, &config()).unwrap();
        assert_relative_eq!(g.sigma_ces.unwrap(), 0.5, epsilon = 1e-8);
        assert_relative_eq!(g.mu_wage_route.unwrap(), 0.0, epsilon = 1e-8);
        assert!(g.fits.contains_key("polynomial"));
        assert!(g.fits.contains_key("power"));
        // The recovered relation holds the level-matching convention exactly:
        // the closed form passes through the geometric-mean point.
        let h = g.hl.expect("level-matched coefficients");
        let (ln_x_sum, ln_y_sum, count) = records.iter().fold((0.0, 0.0, 0u32), |acc, r| {
            let x = r.capital / r.workers;
            let y = r.value_added / r.workers;
            (acc.0 + x.ln(), acc.1 + y.ln(), acc.2 + 1)
        });
        let x_star = (ln_x_sum / count as f64).exp();
        let y_star = (ln_y_sum / count as f64).exp();
        let (y_at_star, _) = h.intensive(x_star).unwrap();
        assert_relative_eq!(y_at_star, y_star, max_relative = 1e-10);
        // Away from the matching point the level deviates by the convexity
        // gap between the two mean conventions; the shape is unchanged.
        let (y, _) = h.intensive(2.0).unwrap();
        let direct = crate::production::eval_ves_intensive(&p, 2.0).unwrap();
        assert_relative_eq!(y, direct, max_relative = 0.2);
    }

    #[test]
    fn tiny_group_degrades_gracefully() {
        let p = VesParams::new(1.0, 0.5, 1.0, 0.2).unwrap();
        let records: Vec<PlantRecord> = synth_records(p, 3, 21);
        let g = estimate_group("221", &records, &config()).unwrap();
        assert!(!g.diagnostics.is_empty(), "skipped degrees must be noted");
        if let ModelSpec::Polynomial { degree } = g.fits["polynomial"].model {
            assert!(degree <= 1);
        }
    }

    #[test]
    fn group_with_no_usable_rows_fails() {
        let records = vec![PlantRecord {
            industry_code: "264".into(),
            state: "WB".into(),
            year: 2016,
            value_added: -1.0,
            workers: 10.0,
            capital: 5.0,
            wages: None,
        }];
        assert!(estimate_group("264", &records, &config()).is_err());
    }

    #[test]
    fn bad_rows_change_only_the_exclusion_count() {
        let p = VesParams::new(1.0, 0.5, 1.0, 0.5).unwrap();
        let mut records = synth_records(p, 60, 3);
        let clean = estimate_group("g", &records, &config()).unwrap();
        records.push(PlantRecord {
            industry_code: "g".into(),
            state: "SYN".into(),
            year: 2016,
            value_added: -4.0,
            workers: 12.0,
            capital: 30.0,
            wages: None,
        });
        let dirty = estimate_group("g", &records, &config()).unwrap();
        assert_eq!(dirty.n_excluded, clean.n_excluded + 1);
        assert_eq!(dirty.fits["polynomial"].coefficients, clean.fits["polynomial"].coefficients);
        assert_eq!(dirty.n_used, clean.n_used);
    }

    #[test]
    fn comparison_rules() {
        let mk = |code: &str, sigma: Option<f64>, mu: Option<f64>| GroupEstimate {
            industry_code: code.into(),
            n_used: 10,
            n_excluded: 0,
            fits: BTreeMap::new(),
            best: ModelSpec::Power,
            mu_wage_route: mu,
            mu_inversion_route: None,
            sigma_ces: sigma,
            hl: None,
            diagnostics: vec![],
            exclusions: ExclusionReport::new(),
        };
        let estimates = vec![
            mk("a", Some(0.8), Some(3.17)),
            mk("b", Some(1.4), Some(2.0)),
            mk("c", Some(0.3), Some(0.5)),
            mk("d", None, Some(1.0)),
        ];
        let cmp = compare_groups(&estimates, &config());
        let by_code = |code: &str| cmp.iter().find(|c| c.industry_code == code).unwrap();
        assert!(by_code("a").priority && by_code("a").theoretically_reasonable);
        assert!(!by_code("b").theoretically_reasonable && !by_code("b").priority);
        assert!(by_code("c").theoretically_reasonable && !by_code("c").priority);
        assert!(!by_code("d").priority);
        // Sorted by sigma descending; the sigma-less group comes last.
        assert_eq!(cmp[0].industry_code, "b");
        assert_eq!(cmp[3].industry_code, "d");
    }

    #[test]
    fn mu_interpretation_codes() {
        assert_eq!(
            mu_interpretation(3.17).unwrap().as_str(),
            "capital-intensive-production-indicated"
        );
        assert_eq!(mu_interpretation(0.0).unwrap().as_str(), "ces-equivalent");
        assert_eq!(
            mu_interpretation(-0.2).unwrap().as_str(),
            "labor-intensive-indicated"
        );
        assert!(mu_interpretation(f64::NAN).is_err());
    }

    #[test]
    fn capital_aggregation() {
        let rec = |state: &str, code: &str, year: i32, capital: f64| PlantRecord {
            industry_code: code.into(),
            state: state.into(),
            year,
            value_added: 1.0,
            workers: 1.0,
            capital,
            wages: None,
        };
        let records = vec![
            rec("WB", "274", 2016, 10.0),
            rec("WB", "274", 2016, 5.5),
            rec("TN", "274", 2016, 4.0),
            rec("WB", "264", 2015, 9.0),
        ];
        let summary = capital_by_state(&records, Some(2016), &["WB".into(), "TN".into()]);
        assert_eq!(summary.cells.len(), 2);
        assert_eq!(summary.cells[0].state, "TN");
        assert_relative_eq!(summary.cells[1].invested_capital, 15.5);
        assert_eq!(summary.rows_outside_year, 1);
        assert_eq!(summary.unknown_state_rows, 0);

        let empty = capital_by_state(&[], None, &[]);
        assert!(empty.cells.is_empty());

        let odd = capital_by_state(&records, None, &["WB".into()]);
        assert_eq!(odd.unknown_state_rows, 1);
    }

    #[test]
    fn mu_routes_agree_on_noiseless_data_near_unit_intensity() {
        // Wage route versus polynomial-inversion route on noiseless data
        // generated with ln X in [-0.3, 0.3]. The wage route is exact; the
        // inversion route reads fitted cubic coefficients as Taylor
        // coefficients, so it carries the projection of the truncated
        // quartic-and-above terms onto the cubic — a bias that scales with
        // the fourth-order content s^4, not with the noise. The bounds
        // below are the observed truncation gaps (about half a percent of
        // mu at small |s|, several percent at mu = 3.17).
        // delta away from 0.5 keeps the cubic coefficient alive, so degree
        // selection genuinely reaches 3 and the inversion route engages.
        for mu in [0.2, 0.5, 1.0, 3.17] {
            let p = VesParams::new(1.0, 0.3, 2.0, mu).unwrap();
            assert!(p.wage_share_gap() != 0.0);
            let mut cfg = SynthConfig::new(p, 100, 17);
            cfg.x_low = (-0.3f64).exp();
            cfg.x_high = 0.3f64.exp();
            let records = generate(&cfg).unwrap().records;
            let mut config = config();
            config.max_degree = 3;
            let g = estimate_group("g", &records, &config).unwrap();
            let wage = g.mu_wage_route.expect("wage route");
            let inversion = g.mu_inversion_route.expect("inversion route");
            assert_relative_eq!(wage, mu, epsilon = 1e-8);
            let bound = (0.01 * mu.max(0.2)).max(0.08 * mu * mu / 3.17);
            assert!(
                (inversion - wage).abs() <= bound,
                "mu = {mu}: wage {wage} vs inversion {inversion} (bound {bound})"
            );
        }
    }

    #[test]
    fn batch_is_deterministic_across_schedules() {
        let p1 = VesParams::new(1.0, 0.5, 1.0, 0.7).unwrap();
        let p2 = VesParams::new(1.4, 0.3, 0.5, 0.2).unwrap();
        let mut records = Vec::new();
        for (code, p, seed) in [("264", p1, 1u64), ("221", p2, 2u64)] {
            let mut cfg = SynthConfig::new(p, 80, seed);
            cfg.noise_sd = 0.05;
            cfg.industry_code = code.into();
            records.extend(generate(&cfg).unwrap().records);
        }
        let serial = PipelineConfig {
            parallel: false,
            ..config()
        };
        let parallel = PipelineConfig {
            parallel: true,
            ..config()
        };
        let a = run_batch(&records, &serial).to_json_string();
        let b = run_batch(&records, &parallel).to_json_string();
        let c = run_batch(&records, &serial).to_json_string();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn figure_csvs_have_stable_shape() {
        let cmp = vec![IndustryComparison {
            industry_code: "274".into(),
            sigma_ces: Some(0.8),
            mu_ves: Some(3.17),
            theoretically_reasonable: true,
            priority: true,
        }];
        let csv = figure1_csv(&cmp);
        assert!(csv.starts_with("industry_code,sigma_ces,mu_ves,reasonable,priority\n"));
        assert!(csv.contains("274,0.8,3.17,true,true"));
        assert_eq!(figure2_csv(&[]), "state,industry_code,invested_capital_rs_mn\n");
    }
}
