use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::student_t_two_sided_p;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub dof: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Sample mean and unbiased variance; a constant group is exactly (x, 0)
/// rather than carrying the rounding residue of the summed mean.
fn mean_var(x: &[f64]) -> (f64, f64) {
    if x.iter().all(|v| *v == x[0]) {
        return (x[0], 0.0);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Unequal-variance two-sample t-test with Welch–Satterthwaite degrees of freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::domain(
            "welch_t_test",
            format!("each group needs at least 2 values (got {} and {})", a.len(), b.len()),
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::domain("welch_t_test", "non-finite observation"));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 <= 0.0 {
        return Err(Error::domain("welch_t_test", "both groups have zero variance"));
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = student_t_two_sided_p(t, dof)?;
    Ok(WelchResult { t, dof, p })
}

/// Boxplot-style summary of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub name: String,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1).
    pub std: f64,
    pub variance: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Points beyond 1.5·IQR from the quartiles.
    pub outliers: usize,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl GroupStats {
    pub fn new(name: impl Into<String>, values: &[f64]) -> Self {
        let name = name.into();
        if values.is_empty() {
            return Self {
                name,
                count: 0,
                mean: f64::NAN,
                std: f64::NAN,
                variance: f64::NAN,
                min: f64::NAN,
                q1: f64::NAN,
                median: f64::NAN,
                q3: f64::NAN,
                max: f64::NAN,
                outliers: 0,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (mean, variance) = if values.len() > 1 { mean_var(values) } else { (values[0], 0.0) };
        let (q1, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.75));
        let iqr = q3 - q1;
        let outliers = sorted.iter().filter(|&&v| v < q1 - 1.5 * iqr || v > q3 + 1.5 * iqr).count();
        Self {
            name,
            count: values.len(),
            mean,
            std: variance.sqrt(),
            variance,
            min: sorted[0],
            q1,
            median: quantile(&sorted, 0.5),
            q3,
            max: sorted[sorted.len() - 1],
            outliers,
        }
    }
}

/// Two groups and their Welch test, or the reason the test does not apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub a: GroupStats,
    pub b: GroupStats,
    pub welch: Option<WelchResult>,
    pub inapplicable: Option<String>,
}

pub fn compare_groups(name_a: &str, a: &[f64], name_b: &str, b: &[f64]) -> GroupComparison {
    let (welch, inapplicable) = match welch_t_test(a, b) {
        Ok(w) => (Some(w), None),
        Err(e) => (None, Some(e.to_string())),
    };
    GroupComparison { a: GroupStats::new(name_a, a), b: GroupStats::new(name_b, b), welch, inapplicable }
}
