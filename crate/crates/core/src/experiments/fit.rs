//! Least-squares fits used for scaling laws.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = a x^b`, fitted in log-log space.
    PowerLaw,
    /// `y = c0 + c1 x`.
    Linear,
    /// `y = c x^q` through the origin, `q` fixed.
    Proportional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<FitParam>,
    /// Euclidean norm of the residuals in the fitted space.
    pub residual_norm: f64,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.param(name).map(|p| p.value).unwrap_or(f64::NAN)
    }
}

fn check_lengths(xs: &[f64], ys: &[f64], min: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Degenerate(format!("{} xs against {} ys", xs.len(), ys.len())));
    }
    if xs.len() < min {
        return Err(Error::Degenerate(format!("need at least {min} points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite data".into()));
    }
    Ok(())
}

struct Ols {
    intercept: f64,
    slope: f64,
    se_intercept: f64,
    se_slope: f64,
    rss: f64,
}

fn ols(xs: &[f64], ys: &[f64]) -> Result<Ols> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Degenerate("all x values equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let s2 = if xs.len() > 2 { rss / (n - 2.0) } else { 0.0 };
    Ok(Ols { intercept, slope, se_intercept: (s2 * (1.0 / n + mx * mx / sxx)).sqrt(), se_slope: (s2 / sxx).sqrt(), rss })
}

fn param(name: &str, value: f64, stderr: f64) -> FitParam {
    FitParam { name: name.into(), value, stderr }
}

/// `y = prefactor * x^exponent` by least squares on `(ln x, ln y)`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check_lengths(xs, ys, 3)?;
    if xs.iter().chain(ys).any(|v| *v <= 0.0) {
        return Err(Error::Degenerate("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let f = ols(&lx, &ly)?;
    let a = f.intercept.exp();
    Ok(FitResult {
        model: FitModel::PowerLaw,
        params: vec![param("prefactor", a, a * f.se_intercept), param("exponent", f.slope, f.se_slope)],
        residual_norm: f.rss.sqrt(),
    })
}

/// `y = intercept + slope * x`.
pub fn fit_linear(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check_lengths(xs, ys, 3)?;
    let f = ols(xs, ys)?;
    Ok(FitResult {
        model: FitModel::Linear,
        params: vec![param("intercept", f.intercept, f.se_intercept), param("slope", f.slope, f.se_slope)],
        residual_norm: f.rss.sqrt(),
    })
}

/// `y = coefficient * x^power` with the power fixed.
pub fn fit_proportional(xs: &[f64], ys: &[f64], power: f64) -> Result<FitResult> {
    check_lengths(xs, ys, 2)?;
    let z: Vec<f64> = xs.iter().map(|x| x.powf(power)).collect();
    let szz: f64 = z.iter().map(|v| v * v).sum();
    if szz <= 0.0 {
        return Err(Error::Degenerate("all regressors zero".into()));
    }
    let c = z.iter().zip(ys).map(|(a, b)| a * b).sum::<f64>() / szz;
    let rss: f64 = z.iter().zip(ys).map(|(a, y)| (y - c * a).powi(2)).sum();
    let s2 = rss / (xs.len() as f64 - 1.0);
    Ok(FitResult {
        model: FitModel::Proportional,
        params: vec![param("coefficient", c, (s2 / szz).sqrt()), param("power", power, 0.0)],
        residual_norm: rss.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn exact_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        assert_relative_eq!(f.value("exponent"), 2.0, max_relative = 1e-12);
        assert_relative_eq!(f.value("prefactor"), 3.0, max_relative = 1e-12);
        assert!(f.residual_norm < 1e-12);
    }

    #[test]
    fn noisy_linear_power() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let xs: Vec<f64> = (1..=20).map(|i| f64::from(i) * 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x * (1.0 + 0.01 * (rng.random::<f64>() * 2.0 - 1.0))).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        assert!((f.value("exponent") - 1.0).abs() < 0.05);
        assert!(f.param("exponent").unwrap().stderr < 0.01);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_power_law(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).is_err());
        assert!(fit_linear(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn proportional_and_linear() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let q: Vec<f64> = xs.iter().map(|x| 0.115 * x * x).collect();
        assert_relative_eq!(fit_proportional(&xs, &q, 2.0).unwrap().value("coefficient"), 0.115, max_relative = 1e-12);
        let l: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x).collect();
        let f = fit_linear(&xs, &l).unwrap();
        assert_relative_eq!(f.value("slope"), 2.0, max_relative = 1e-12);
        assert_relative_eq!(f.value("intercept"), 1.0, max_relative = 1e-12);
    }
}
