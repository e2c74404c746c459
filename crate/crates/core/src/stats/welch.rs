use crate::error::{MatchError, Result};
use crate::stats::special::student_t_two_sided;

/// Outcome of Welch's unequal-variance t-test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Welch's two-sample t-test with Welch–Satterthwaite degrees of freedom.
///
/// Two constant samples with equal means give `p = 1` (t = 0); two constant
/// samples with different means are undefined.
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<WelchResult> {
    if x.len() < 2 || y.len() < 2 {
        return Err(MatchError::UndefinedTest(format!(
            "welch_t needs at least 2 observations per sample, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (sx, sy) = (vx / nx, vy / ny);
    let se2 = sx + sy;
    if se2 == 0.0 {
        if mx == my {
            return Ok(WelchResult {
                t: 0.0,
                df: nx + ny - 2.0,
                p: 1.0,
            });
        }
        return Err(MatchError::UndefinedTest(
            "welch_t: both samples constant with different means".into(),
        ));
    }
    let t = (mx - my) / se2.sqrt();
    let df = se2 * se2 / (sx * sx / (nx - 1.0) + sy * sy / (ny - 1.0));
    Ok(WelchResult {
        t,
        df,
        p: student_t_two_sided(t, df),
    })
}

pub fn welch_t_p(x: &[f64], y: &[f64]) -> Result<f64> {
    welch_t_test(x, y).map(|r| r.p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let r = welch_t_test(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn shifted_by_one() {
        // reference values: t = -1.0954451150103324, df = 6, p = 0.3153335962012296
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((r.t + 1.095_445_115_010_332_4).abs() < 1e-12);
        assert!((r.df - 6.0).abs() < 1e-12);
        assert!((r.p - 0.315_333_596_201_229_6).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cases() {
        assert!(welch_t_p(&[1.0], &[1.0, 2.0]).is_err());
        assert_eq!(welch_t_p(&[3.0, 3.0], &[3.0, 3.0, 3.0]).unwrap(), 1.0);
        assert!(matches!(
            welch_t_p(&[3.0, 3.0], &[4.0, 4.0]),
            Err(MatchError::UndefinedTest(_))
        ));
        // one constant sample is fine
        let p = welch_t_p(&[3.0, 3.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }
}
