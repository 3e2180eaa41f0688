use serde::Serialize;

use super::special::{f_sf, t_two_sided_p};
use super::AnalyticsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    TwoSampleT,
    Ancova,
    OneWayAnova,
    CorrelationT,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustedMean {
    pub group: String,
    pub n: usize,
    pub raw_mean: f64,
    pub covariate_mean: f64,
    pub adjusted_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Effect {
    MeanDifference {
        n1: usize,
        n2: usize,
        mean1: f64,
        mean2: f64,
        /// `mean1 - mean2`.
        difference: f64,
    },
    AdjustedMeans {
        /// Pooled within-group slope on the covariate.
        covariate_slope: f64,
        groups: Vec<AdjustedMean>,
    },
    GroupMeans {
        groups: Vec<(String, usize, f64)>,
    },
    Correlation {
        n: usize,
        r: f64,
        /// `|r| = 1`: the statistic is infinite and `p = 0`.
        perfect: bool,
    },
}

/// Result of one hypothesis test. Non-finite statistics serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub kind: TestKind,
    /// `"t"` or `"F"`.
    pub statistic_name: &'static str,
    pub statistic: f64,
    /// Degrees of freedom (numerator df for F tests).
    pub df: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub df_denominator: Option<f64>,
    /// Two-sided for t tests, upper tail for F tests.
    pub p: f64,
    pub effect: Effect,
}

fn check_finite(values: &[f64]) -> Result<(), AnalyticsError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(AnalyticsError::NonFinite)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sum of squared deviations from the mean.
fn ss(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum()
}

fn sp(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum()
}

/// Student's two-sample t test with pooled variance; `df = n1 + n2 - 2`.
pub fn two_sample_t(sample1: &[f64], sample2: &[f64]) -> Result<TestReport, AnalyticsError> {
    for s in [sample1, sample2] {
        if s.len() < 2 {
            return Err(AnalyticsError::TooFewObservations { needed: 2, found: s.len() });
        }
        check_finite(s)?;
    }
    let (n1, n2) = (sample1.len(), sample2.len());
    let df = (n1 + n2 - 2) as f64;
    let pooled = (ss(sample1) + ss(sample2)) / df;
    if pooled <= 0.0 {
        return Err(AnalyticsError::ZeroVariance("pooled sample variance"));
    }
    let (m1, m2) = (mean(sample1), mean(sample2));
    let se = (pooled * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let t = (m1 - m2) / se;
    Ok(TestReport {
        kind: TestKind::TwoSampleT,
        statistic_name: "t",
        statistic: t,
        df,
        df_denominator: None,
        p: t_two_sided_p(t, df),
        effect: Effect::MeanDifference {
            n1,
            n2,
            mean1: m1,
            mean2: m2,
            difference: m1 - m2,
        },
    })
}

/// Pearson correlation with `t = r·√(n−2)/√(1−r²)` on `n − 2` df.
pub fn correlation_t(x: &[f64], y: &[f64]) -> Result<TestReport, AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(AnalyticsError::TooFewObservations { needed: 3, found: x.len() });
    }
    check_finite(x)?;
    check_finite(y)?;
    let (sxx, syy) = (ss(x), ss(y));
    if sxx <= 0.0 {
        return Err(AnalyticsError::ZeroVariance("x is constant"));
    }
    if syy <= 0.0 {
        return Err(AnalyticsError::ZeroVariance("y is constant"));
    }
    let n = x.len();
    let r = (sp(x, y) / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let perfect = r.abs() == 1.0;
    let (t, p) = if perfect {
        (f64::INFINITY.copysign(r), 0.0)
    } else {
        let t = r * df.sqrt() / (1.0 - r * r).sqrt();
        (t, t_two_sided_p(t, df))
    };
    Ok(TestReport {
        kind: TestKind::CorrelationT,
        statistic_name: "t",
        statistic: t,
        df,
        df_denominator: None,
        p,
        effect: Effect::Correlation { n, r, perfect },
    })
}

/// One group's paired covariate (pretest) and response (posttest) values.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    pub label: String,
    pub covariate: Vec<f64>,
    pub response: Vec<f64>,
}

impl GroupSample {
    pub fn new(label: impl Into<String>, covariate: Vec<f64>, response: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            covariate,
            response,
        }
    }
}

fn check_groups(groups: &[GroupSample]) -> Result<(), AnalyticsError> {
    if groups.len() < 2 {
        return Err(AnalyticsError::TooFewGroups(groups.len()));
    }
    for g in groups {
        if g.covariate.len() != g.response.len() {
            return Err(AnalyticsError::LengthMismatch(g.covariate.len(), g.response.len()));
        }
        if g.response.len() < 2 {
            return Err(AnalyticsError::TooFewObservations { needed: 2, found: g.response.len() });
        }
        check_finite(&g.covariate)?;
        check_finite(&g.response)?;
    }
    Ok(())
}

/// Single-factor ANCOVA: response ~ group + covariate.
///
/// The group F test compares the covariate-only model with the full model
/// through the adjusted within-group and total sums of squares. Adjusted
/// means are group means moved along the pooled within-group slope to the
/// grand covariate mean.
pub fn ancova(groups: &[GroupSample]) -> Result<TestReport, AnalyticsError> {
    check_groups(groups)?;
    let k = groups.len();
    let n: usize = groups.iter().map(|g| g.response.len()).sum();
    if n <= k + 1 {
        return Err(AnalyticsError::TooFewObservations { needed: k + 2, found: n });
    }
    let all_x: Vec<f64> = groups.iter().flat_map(|g| g.covariate.iter().copied()).collect();
    let all_y: Vec<f64> = groups.iter().flat_map(|g| g.response.iter().copied()).collect();
    let (txx, txy, tyy) = (ss(&all_x), sp(&all_x, &all_y), ss(&all_y));
    if txx <= 0.0 {
        return Err(AnalyticsError::ZeroVariance("covariate is constant"));
    }
    let (mut exx, mut exy, mut eyy) = (0.0, 0.0, 0.0);
    for g in groups {
        exx += ss(&g.covariate);
        exy += sp(&g.covariate, &g.response);
        eyy += ss(&g.response);
    }
    if exx <= 0.0 {
        return Err(AnalyticsError::RankDeficient(
            "covariate is constant within every group, so it is collinear with the group factor",
        ));
    }
    let slope = exy / exx;
    let ss_within = eyy - exy * exy / exx;
    let ss_total = tyy - txy * txy / txx;
    let df1 = (k - 1) as f64;
    let df2 = (n - k - 1) as f64;
    if ss_within <= 0.0 {
        return Err(AnalyticsError::ZeroVariance("residual variance of the full model"));
    }
    let f = ((ss_total - ss_within).max(0.0) / df1) / (ss_within / df2);
    let grand_x = mean(&all_x);
    let adjusted = groups
        .iter()
        .map(|g| {
            let (mx, my) = (mean(&g.covariate), mean(&g.response));
            AdjustedMean {
                group: g.label.clone(),
                n: g.response.len(),
                raw_mean: my,
                covariate_mean: mx,
                adjusted_mean: my - slope * (mx - grand_x),
            }
        })
        .collect();
    Ok(TestReport {
        kind: TestKind::Ancova,
        statistic_name: "F",
        statistic: f,
        df: df1,
        df_denominator: Some(df2),
        p: f_sf(f, df1, df2),
        effect: Effect::AdjustedMeans {
            covariate_slope: slope,
            groups: adjusted,
        },
    })
}

/// One-way ANOVA on the given per-group samples.
pub fn one_way_anova(groups: &[(String, Vec<f64>)]) -> Result<TestReport, AnalyticsError> {
    if groups.len() < 2 {
        return Err(AnalyticsError::TooFewGroups(groups.len()));
    }
    for (_, v) in groups {
        if v.len() < 2 {
            return Err(AnalyticsError::TooFewObservations { needed: 2, found: v.len() });
        }
        check_finite(v)?;
    }
    let k = groups.len();
    let all: Vec<f64> = groups.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let n = all.len();
    let within: f64 = groups.iter().map(|(_, v)| ss(v)).sum();
    let between = ss(&all) - within;
    if within <= 0.0 {
        return Err(AnalyticsError::ZeroVariance("within-group variance"));
    }
    let (df1, df2) = ((k - 1) as f64, (n - k) as f64);
    let f = (between.max(0.0) / df1) / (within / df2);
    Ok(TestReport {
        kind: TestKind::OneWayAnova,
        statistic_name: "F",
        statistic: f,
        df: df1,
        df_denominator: Some(df2),
        p: f_sf(f, df1, df2),
        effect: Effect::GroupMeans {
            groups: groups.iter().map(|(l, v)| (l.clone(), v.len(), mean(v))).collect(),
        },
    })
}

/// ANCOVA with the covariate slope fixed at `slope` instead of fitted.
/// Equivalent to a one-way ANOVA on `response - slope * covariate`.
pub fn ancova_fixed_slope(groups: &[GroupSample], slope: f64) -> Result<TestReport, AnalyticsError> {
    check_groups(groups)?;
    let residual: Vec<(String, Vec<f64>)> = groups
        .iter()
        .map(|g| {
            let r = g.response.iter().zip(&g.covariate).map(|(y, x)| y - slope * x).collect();
            (g.label.clone(), r)
        })
        .collect();
    let mut report = one_way_anova(&residual)?;
    report.kind = TestKind::Ancova;
    let all_x: Vec<f64> = groups.iter().flat_map(|g| g.covariate.iter().copied()).collect();
    let grand_x = mean(&all_x);
    report.effect = Effect::AdjustedMeans {
        covariate_slope: slope,
        groups: groups
            .iter()
            .map(|g| {
                let (mx, my) = (mean(&g.covariate), mean(&g.response));
                AdjustedMean {
                    group: g.label.clone(),
                    n: g.response.len(),
                    raw_mean: my,
                    covariate_mean: mx,
                    adjusted_mean: my - slope * (mx - grand_x),
                }
            })
            .collect(),
    };
    Ok(report)
}
