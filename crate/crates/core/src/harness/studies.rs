//! Correlation estimates and structural condition checks as reportable runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{all_pass, ConditionsConfig, CorrelationConfig, Verdict, VerdictStatus, REPORT_VERSION};
use crate::correlations::{
    condition_iv_check, condition_v_check, cylinder_boundary_growth, estimate_correlation, fit_decay_rate,
    BoundaryRegularityReport, ConditionVReport, CorrelationCurve, DecayFit, GrowthReport,
};
use crate::error::{Error, Result};
use crate::systems::validation::{
    check_expansion, invariance_defect, partition_coverage, CoverageReport, ExpansionReport, InvarianceDefect,
    TestFunction,
};
use crate::systems::SystemDescriptor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub version: String,
    pub config_hash: String,
    pub config: CorrelationConfig,
    pub curve: CorrelationCurve,
    pub fit: Option<DecayFit>,
    pub fit_note: Option<String>,
    pub verdicts: Vec<Verdict>,
}

impl CorrelationReport {
    /// No verdicts (nothing to compare against) counts as a pass.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.status == VerdictStatus::Pass)
    }
}

pub fn run_correlation_study(config: &CorrelationConfig) -> Result<CorrelationReport> {
    config.validate()?;
    let sys = SystemDescriptor::new(config.system);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let curve = estimate_correlation(
        &sys,
        &config.f,
        &config.g,
        config.n_max,
        config.samples,
        config.estimator,
        &mut rng,
    )?;
    let (fit, fit_note) = match fit_decay_rate(&curve) {
        Ok(f) => (Some(f), None),
        Err(Error::InsufficientSignal(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    let mut verdicts = Vec::new();
    if let Some(expected) = &config.expected {
        let misses: Vec<String> = curve
            .lags
            .iter()
            .zip(curve.estimates.iter().zip(&curve.std_errors))
            .zip(expected)
            .filter(|((_, (c, se)), e)| (*c - *e).abs() > 3.0 * *se)
            .map(|((n, (c, se)), e)| format!("lag {n}: {c:.3e} vs {e:.3e} (se {se:.1e})"))
            .collect();
        let detail = if misses.is_empty() {
            format!("all {} lags within 3 standard errors", curve.lags.len())
        } else {
            misses.join("; ")
        };
        verdicts.push(Verdict::check("expected_values", misses.is_empty(), detail));
    }
    if let Some(rate) = config.expected_rate {
        verdicts.push(match &fit {
            Some(f) => Verdict::check(
                "decay_rate",
                (f.rate - rate).abs() <= config.rate_tolerance,
                format!(
                    "fitted rate {:.5} vs {rate:.5}; tolerance {}",
                    f.rate, config.rate_tolerance
                ),
            ),
            None => Verdict::new(
                "decay_rate",
                VerdictStatus::Inconclusive,
                fit_note.clone().unwrap_or_default(),
            ),
        });
    }
    Ok(CorrelationReport {
        version: REPORT_VERSION.to_string(),
        config_hash: config.content_hash(),
        config: CorrelationConfig {
            output: None,
            ..config.clone()
        },
        curve,
        fit,
        fit_note,
        verdicts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionsReport {
    pub version: String,
    pub config_hash: String,
    pub config: ConditionsConfig,
    pub boundary_regularity: BoundaryRegularityReport,
    pub boundary_counts: ConditionVReport,
    pub cylinder_growth: GrowthReport,
    pub invariance: Vec<InvarianceDefect>,
    pub expansion: ExpansionReport,
    pub coverage: CoverageReport,
    pub verdicts: Vec<Verdict>,
}

impl ConditionsReport {
    pub fn passed(&self) -> bool {
        all_pass(&self.verdicts)
    }
}

/// Branch cap for the Gauss expansion and coverage checks.
const GAUSS_SAMPLE_BRANCHES: u64 = 1000;

pub fn run_conditions(config: &ConditionsConfig) -> Result<ConditionsReport> {
    let sys = SystemDescriptor::new(config.system);
    let iv = condition_iv_check(&sys, &config.eps_grid, config.branch_cap)?;
    let v = condition_v_check(&sys, &config.r_grid)?;
    let growth = cylinder_boundary_growth(
        &sys,
        config.depth,
        config.growth_eps,
        config.growth_cap,
        config.growth_sample,
    )?;
    let invariance: Vec<InvarianceDefect> = TestFunction::ALL
        .iter()
        .map(|f| invariance_defect(&sys, *f, config.invariance_tol / 10.0))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let expansion = check_expansion(&sys, config.expansion_pairs, GAUSS_SAMPLE_BRANCHES, &mut rng);
    let coverage = partition_coverage(&sys, GAUSS_SAMPLE_BRANCHES);

    let worst_defect = invariance.iter().map(|d| d.defect).fold(0.0, f64::max);
    let verdicts = vec![
        Verdict::check(
            "boundary_regularity",
            iv.pass,
            format!("largest ratio {:.4} against bound {}", iv.k1_hat, iv.bound),
        ),
        Verdict::check(
            "boundary_counts",
            v.pass,
            format!("{} radii checked with K2 = {}", v.rows.len(), v.k2),
        ),
        Verdict::check(
            "cylinder_growth",
            growth.pass,
            format!("depths 1..={} with K = {:.4}", config.depth, growth.k),
        ),
        Verdict::check(
            "invariance",
            worst_defect <= config.invariance_tol,
            format!(
                "largest defect {worst_defect:.2e}; tolerance {:.0e}",
                config.invariance_tol
            ),
        ),
        Verdict::check(
            "expansion",
            expansion.violations == 0,
            format!(
                "{} violations in {} pairs; smallest ratio {:.4} against L = {}",
                expansion.violations, expansion.pairs, expansion.min_ratio, expansion.bound
            ),
        ),
    ];
    Ok(ConditionsReport {
        version: REPORT_VERSION.to_string(),
        config_hash: config.content_hash(),
        config: ConditionsConfig {
            output: None,
            ..config.clone()
        },
        boundary_regularity: iv,
        boundary_counts: v,
        cylinder_growth: growth,
        invariance,
        expansion,
        coverage,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{Estimator, Observable};
    use crate::systems::SystemKind;

    #[test]
    fn doubling_identity_correlations() {
        let expected: Vec<f64> = (0..=4).map(|n| 2f64.powi(-n) / 12.0).collect();
        let c = CorrelationConfig {
            system: SystemKind::Doubling,
            f: Observable::identity(),
            g: Observable::identity(),
            n_max: 4,
            samples: 50_000,
            estimator: Estimator::MonteCarlo,
            seed: 9,
            expected: Some(expected),
            expected_rate: Some(std::f64::consts::LN_2),
            rate_tolerance: 0.3,
            output: None,
        };
        let r = run_correlation_study(&c).unwrap();
        assert!(r.passed(), "{:?}", r.verdicts);
        assert_eq!(r, run_correlation_study(&c).unwrap());
    }

    #[test]
    fn conditions_pass_for_doubling() {
        let mut c = ConditionsConfig::for_system(SystemKind::Doubling);
        c.expansion_pairs = 1000;
        let r = run_conditions(&c).unwrap();
        assert!(r.passed(), "{:?}", r.verdicts);
        assert_eq!(r.verdicts.len(), 5);
    }
}
