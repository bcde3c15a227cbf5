//! Pearson correlation and one-tailed t-tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance (n − 1 denominator).
fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn t_sf(t: f64, df: f64) -> Result<f64> {
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Precondition(format!("t distribution: {e}")))?;
    Ok(dist.sf(t).clamp(0.0, 1.0))
}

/// Sample Pearson r and its two-sided p-value (t with n − 2 df).
pub fn pearson_with_p(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: x.len(),
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y"));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = x.len() as f64 - 2.0;
    let denom = 1.0 - r * r;
    let p = if denom <= 0.0 {
        0.0
    } else {
        2.0 * t_sf((r * (df / denom).sqrt()).abs(), df)?
    };
    Ok((r, p.min(1.0)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestKind {
    #[default]
    Welch,
    Student,
    Paired,
}

impl std::str::FromStr for TTestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "welch" => Ok(Self::Welch),
            "student" => Ok(Self::Student),
            "paired" => Ok(Self::Paired),
            other => Err(Error::Config(format!("unknown t-test `{other}` (welch|student|paired)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub kind: TTestKind,
    pub mean_a: f64,
    pub mean_b: f64,
    pub std_a: f64,
    pub std_b: f64,
    pub t_statistic: f64,
    pub df: f64,
    /// P(T ≥ t) under the null; small when the treatment beats the baseline.
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Welch's one-tailed test of mean(treatment) > mean(baseline).
pub fn one_tailed_t_test(baseline: &[f64], treatment: &[f64]) -> Result<SignificanceResult> {
    one_tailed_t_test_with(baseline, treatment, TTestKind::Welch)
}

pub fn one_tailed_t_test_with(baseline: &[f64], treatment: &[f64], kind: TTestKind) -> Result<SignificanceResult> {
    for s in [baseline, treatment] {
        if s.len() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: s.len() });
        }
    }
    let (na, nb) = (baseline.len() as f64, treatment.len() as f64);
    let (va, vb) = (variance(baseline), variance(treatment));
    let (ma, mb) = (mean(baseline), mean(treatment));
    let (t, df) = match kind {
        TTestKind::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            if qa + qb == 0.0 {
                return Err(Error::ZeroVariance("both samples"));
            }
            let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
            ((mb - ma) / (qa + qb).sqrt(), df)
        }
        TTestKind::Student => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            if pooled == 0.0 {
                return Err(Error::ZeroVariance("both samples"));
            }
            ((mb - ma) / (pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        TTestKind::Paired => {
            if baseline.len() != treatment.len() {
                return Err(Error::LengthMismatch {
                    left: baseline.len(),
                    right: treatment.len(),
                });
            }
            let d: Vec<f64> = treatment.iter().zip(baseline).map(|(b, a)| b - a).collect();
            let vd = variance(&d);
            if vd == 0.0 {
                return Err(Error::ZeroVariance("paired differences"));
            }
            (mean(&d) / (vd / na).sqrt(), na - 1.0)
        }
    };
    Ok(SignificanceResult {
        kind,
        mean_a: ma,
        mean_b: mb,
        std_a: va.sqrt(),
        std_b: vb.sqrt(),
        t_statistic: t,
        df,
        p_value: t_sf(t, df)?,
        n_a: baseline.len(),
        n_b: treatment.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_line() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let (r, p) = pearson_with_p(&x, &y).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
        assert!(p < 1e-12);
    }

    #[test]
    fn constant_input() {
        assert!(matches!(pearson_with_p(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::ZeroVariance("x"))));
        assert!(matches!(pearson_with_p(&[1.0, 2.0], &[1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn welch_reference() {
        let a = [
            61.41, 61.6, 60.72, 61.28, 60.93, 61.48, 61.13, 60.65, 60.98, 61.06, 61.22, 60.88, 61.25, 61.69, 61.34,
            60.84, 60.94, 61.64, 60.96, 61.45, 61.19, 60.91, 60.94, 61.57, 60.7,
        ];
        let b = [
            62.13, 61.25, 60.99, 61.67, 61.52, 62.13, 61.2, 61.41, 61.92, 61.14, 60.94, 60.38, 61.9, 60.41, 61.59,
            61.29, 61.46, 62.24, 62.1, 62.15, 61.87, 61.59, 61.26, 60.28, 61.68,
        ];
        for (kind, t, p) in [
            (TTestKind::Welch, 2.415864599752601, 0.010340078607691188),
            (TTestKind::Student, 2.4158645997526005, 0.0097762128316732),
            (TTestKind::Paired, 2.4684286468502803, 0.010540695614013273),
        ] {
            let r = one_tailed_t_test_with(&a, &b, kind).unwrap();
            assert!((r.t_statistic - t).abs() < 1e-9, "{kind:?} t {}", r.t_statistic);
            assert!((r.p_value - p).abs() < 1e-9, "{kind:?} p {}", r.p_value);
        }
    }

    #[test]
    fn null_symmetry() {
        let a = [1.0, 2.5, 3.0, 4.2];
        let r = one_tailed_t_test(&a, &a).unwrap();
        assert_eq!(r.t_statistic, 0.0);
        assert!((r.p_value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn separated() {
        let a = [1.0, 1.1, 0.9, 1.05, 0.95];
        let b: Vec<f64> = a.iter().map(|v| v + 10.0).collect();
        assert!(one_tailed_t_test(&a, &b).unwrap().p_value < 1e-3);
        assert!(matches!(one_tailed_t_test(&[1.0], &b), Err(Error::TooFewSamples { .. })));
    }
}
