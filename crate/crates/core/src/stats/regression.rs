use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    LogShots,
    LogParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub t_statistic: f64,
    /// Upper-tail p-value for slope > 0 with `points - 2` degrees of freedom.
    pub one_sided_p: f64,
    pub covariate: Covariate,
    pub points: usize,
}

/// Ordinary least squares of accuracy on the natural log of a positive
/// covariate, with a one-sided t-test on the slope.
pub fn fit_log_regression(points: &[(f64, f64)], covariate: Covariate) -> Result<RegressionFit, StatsError> {
    let n = points.len();
    if n < 3 {
        return Err(StatsError::TooFewPoints(n));
    }
    if let Some(&(x, _)) = points.iter().find(|(x, _)| !(x.is_finite() && *x > 0.0)) {
        return Err(StatsError::NonPositiveCovariate(x));
    }
    let xs: Vec<f64> = points.iter().map(|(x, _)| x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(StatsError::ZeroCovariateVariance);
    }
    let df = nf - 2.0;

    if ys.iter().all(|y| *y == ys[0]) {
        return Ok(RegressionFit {
            slope: 0.0,
            intercept: ys[0],
            slope_se: 0.0,
            t_statistic: 0.0,
            one_sided_p: 0.5,
            covariate,
            points: n,
        });
    }

    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_se = (rss / df / sxx).sqrt();

    let (t_statistic, one_sided_p) = if slope_se > 0.0 {
        let t = slope / slope_se;
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        (t, dist.sf(t))
    } else {
        // exact fit
        let p = if slope > 0.0 { 0.0 } else if slope < 0.0 { 1.0 } else { 0.5 };
        (f64::INFINITY.copysign(slope), p)
    };
    Ok(RegressionFit { slope, intercept, slope_se, t_statistic, one_sided_p, covariate, points: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub z: f64,
    pub one_sided_p: f64,
    /// Both standard errors were zero.
    pub degenerate: bool,
}

/// One-sided z-test of `model > baseline`, treating the two estimates as
/// independent.
pub fn compare_to_baseline(model: Estimate, baseline: Estimate) -> Result<Comparison, StatsError> {
    let ok = |se: f64| se.is_finite() && se >= 0.0;
    if !ok(model.se) || !ok(baseline.se) || !model.value.is_finite() || !baseline.value.is_finite() {
        return Err(StatsError::BadStandardError);
    }
    let diff = model.value - baseline.value;
    let pooled = (model.se.powi(2) + baseline.se.powi(2)).sqrt();
    if pooled == 0.0 {
        let p = if diff > 0.0 { 0.0 } else if diff < 0.0 { 1.0 } else { 0.5 };
        let z = if diff == 0.0 { 0.0 } else { f64::INFINITY.copysign(diff) };
        return Ok(Comparison { z, one_sided_p: p, degenerate: true });
    }
    let z = diff / pooled;
    Ok(Comparison { z, one_sided_p: 0.5 * erfc(z / std::f64::consts::SQRT_2), degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_points() {
        assert_eq!(fit_log_regression(&[(1.0, 0.1), (2.0, 0.2)], Covariate::LogShots), Err(StatsError::TooFewPoints(2)));
        assert_eq!(
            fit_log_regression(&[(1.0, 0.1), (0.0, 0.2), (2.0, 0.3)], Covariate::LogShots),
            Err(StatsError::NonPositiveCovariate(0.0))
        );
        assert_eq!(
            fit_log_regression(&[(2.0, 0.1), (2.0, 0.2), (2.0, 0.3)], Covariate::LogShots),
            Err(StatsError::ZeroCovariateVariance)
        );
    }

    #[test]
    fn constant_data_has_no_trend() {
        let pts: Vec<_> = [1.0, 2.0, 4.0, 8.0].iter().map(|&n| (n, 0.3)).collect();
        let fit = fit_log_regression(&pts, Covariate::LogShots).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.one_sided_p, 0.5);
    }

    #[test]
    fn noisy_fit_matches_hand_computation() {
        // x = ln(1), ln(e), ln(e^2) = 0, 1, 2; y = 0, 2, 1
        let e = std::f64::consts::E;
        let fit = fit_log_regression(&[(1.0, 0.0), (e, 2.0), (e * e, 1.0)], Covariate::LogParams).unwrap();
        // slope = sxy/sxx = 1/2, intercept = 1 - 0.5 = 0.5
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 0.5).abs() < 1e-12);
        // residuals -0.5, 1, -0.5 -> rss 1.5, df 1, se = sqrt(1.5/2)
        assert!((fit.slope_se - 0.75f64.sqrt()).abs() < 1e-12);
        // t-distribution with 1 df is Cauchy: sf(t) = 1/2 - atan(t)/pi
        let t = 0.5 / 0.75f64.sqrt();
        assert!((fit.one_sided_p - (0.5 - t.atan() / std::f64::consts::PI)).abs() < 1e-9);
    }

    #[test]
    fn slope_invariant_to_covariate_scale() {
        let pts = [(1.0, 0.12), (2.0, 0.15), (4.0, 0.14), (8.0, 0.2), (16.0, 0.22)];
        let scaled: Vec<_> = pts.iter().map(|(x, y)| (2.0 * x, *y)).collect();
        let a = fit_log_regression(&pts, Covariate::LogShots).unwrap();
        let b = fit_log_regression(&scaled, Covariate::LogShots).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-12);
        assert!((b.intercept - (a.intercept - a.slope * 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn z_test_examples() {
        let c = compare_to_baseline(Estimate { value: 0.411, se: 0.033 }, Estimate { value: 0.20, se: 0.02 }).unwrap();
        let z = 0.211 / (0.033f64.powi(2) + 0.02f64.powi(2)).sqrt();
        assert!((c.z - z).abs() < 1e-12);
        assert!((c.z - 5.47).abs() < 0.01);
        assert!(c.one_sided_p < 1e-7);

        let eq = compare_to_baseline(Estimate { value: 0.3, se: 0.01 }, Estimate { value: 0.3, se: 0.02 }).unwrap();
        assert_eq!(eq.one_sided_p, 0.5);
        let below = compare_to_baseline(Estimate { value: 0.1, se: 0.01 }, Estimate { value: 0.3, se: 0.02 }).unwrap();
        assert!(below.one_sided_p > 0.5);

        let degenerate = compare_to_baseline(Estimate { value: 0.3, se: 0.0 }, Estimate { value: 0.3, se: 0.0 }).unwrap();
        assert!(degenerate.degenerate);
        assert_eq!(degenerate.one_sided_p, 0.5);
        assert!(compare_to_baseline(Estimate { value: 0.3, se: f64::NAN }, Estimate { value: 0.3, se: 0.0 }).is_err());
    }
}
