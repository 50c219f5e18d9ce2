use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Significance threshold for the paired test.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub t: f64,
    /// Two-sided.
    pub p_value: f64,
    pub significant: bool,
    pub mean_difference: f64,
    pub degrees_of_freedom: usize,
}

/// Paired Student's t-test on `a - b`.
///
/// All-zero differences give `t = 0, p = 1`. Constant non-zero differences have
/// zero spread; `t` is then infinite with the sign of the mean and `p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let len = a.len();
    if len < 2 {
        return Err(Error::contract("paired t-test needs at least two pairs"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / len as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (len - 1) as f64;
    let df = len - 1;

    let (t, p_value) = if diffs.iter().all(|&d| d == 0.0) {
        (0.0, 1.0)
    } else if var == 0.0 {
        (f64::INFINITY.copysign(mean), 0.0)
    } else {
        let t = mean / (var / len as f64).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
        (t, (2.0 * dist.sf(t.abs())).min(1.0))
    };
    Ok(PairedTTest {
        t,
        p_value,
        significant: p_value < SIGNIFICANCE_LEVEL,
        mean_difference: mean,
        degrees_of_freedom: df,
    })
}
