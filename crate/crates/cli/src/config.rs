//! Flat TOML run configuration.

use std::path::PathBuf;

use irsa_bac::analysis::PayloadRounding;
use irsa_bac::DegreeDistribution;
use serde::Deserialize;

/// A list of values or an inclusive range written `"start:step:stop"`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range(String),
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            Grid::List(v) => {
                if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                    return Err(format!("grid value {x} is not finite"));
                }
                Ok(v.clone())
            }
            Grid::Range(s) => parse_range(s),
        }
    }
}

fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [a, step, b] = parts[..] else {
        return Err(format!("range `{s}` must have the form start:step:stop"));
    };
    let num = |t: &str| t.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| format!("bad number `{t}` in `{s}`"));
    let (a, step, b) = (num(a)?, num(step)?, num(b)?);
    if step <= 0.0 {
        return Err(format!("range `{s}` needs a positive step"));
    }
    if b < a {
        return Ok(Vec::new());
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    if n > 10_000_000 {
        return Err(format!("range `{s}` has too many points"));
    }
    Ok((0..=n).map(|i| a + i as f64 * step).collect())
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<String>,
    pub lambda_poly: Option<String>,
    #[serde(rename = "K")]
    pub users: Option<f64>,
    #[serde(rename = "N")]
    pub slots: Option<usize>,
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    #[serde(rename = "D")]
    pub offset: Option<f64>,
    #[serde(rename = "G")]
    pub load: Option<f64>,
    #[serde(rename = "G_grid")]
    pub load_grid: Option<Grid>,
    #[serde(rename = "K_grid")]
    pub users_grid: Option<Grid>,
    pub beta_grid: Option<Grid>,
    #[serde(rename = "U_max")]
    pub max_degree: Option<u32>,
    pub n0: Option<usize>,
    pub n0_rounding: Option<String>,
    pub decoders: Option<Vec<String>>,
    pub iterations: Option<usize>,
    pub frames: Option<u64>,
    pub batch: Option<u64>,
    pub target_rel_width: Option<f64>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn degrees(&self) -> Result<DegreeDistribution, String> {
        self.lambda_poly.as_deref().unwrap_or("x^2").parse().map_err(|e| format!("lambda_poly: {e}"))
    }

    pub fn rounding(&self) -> Result<PayloadRounding, String> {
        match &self.n0_rounding {
            None => Ok(PayloadRounding::default()),
            Some(s) => s.parse().map_err(|e| format!("n0_rounding: {e}")),
        }
    }

    pub fn require<T: Copy>(value: Option<T>, key: &str) -> Result<T, String> {
        value.ok_or_else(|| format!("missing key `{key}`"))
    }

    pub fn grid(grid: &Option<Grid>, key: &str) -> Result<Option<Vec<f64>>, String> {
        grid.as_ref().map(|g| g.values().map_err(|e| format!("{key}: {e}"))).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1:1:3").unwrap(), vec![1.0, 2.0, 3.0]);
        let v = parse_range("0.2:0.1:0.5").unwrap();
        assert_eq!(v.len(), 4);
        assert!((v[3] - 0.5).abs() < 1e-12);
        assert!(parse_range("3:1:1").unwrap().is_empty());
        assert!(parse_range("1:0:3").is_err());
        assert!(parse_range("1:3").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("N = 200\nbogus = 1\n").is_err());
        let c = RunConfig::parse("N = 200\nG_grid = \"0.5:0.5:1\"\nK_grid = [1e3, 1e6]\n").unwrap();
        assert_eq!(c.slots, Some(200));
        assert_eq!(RunConfig::grid(&c.load_grid, "G_grid").unwrap().unwrap(), vec![0.5, 1.0]);
        assert_eq!(RunConfig::grid(&c.users_grid, "K_grid").unwrap().unwrap(), vec![1e3, 1e6]);
    }

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.degrees().unwrap(), DegreeDistribution::regular(2));
        assert_eq!(c.rounding().unwrap(), PayloadRounding::Round);
    }
}
