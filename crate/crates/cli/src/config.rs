//! Flat key = value experiment configuration files.
//!
//! The format is line oriented: `key = value`, `#` starts a comment, lists
//! are comma separated, and derivative multi-indices use `|` inside entries
//! and `;` between them (`alphas = 0|0|0;1|0|0`). Keys mirror the experiment
//! configuration; command-line flags override file values.

use std::collections::BTreeMap;
use std::path::Path;

use kostlan_core::jet::SingularityType;
use kostlan_core::{ExperimentConfig, InequalityConfig, RegimeSchedule};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExperimentKind {
    LowDegree,
    BettiTail,
    Inequality,
}

#[derive(Debug, Clone)]
pub struct FileConfig {
    pub kind: ExperimentKind,
    pub pairs: BTreeMap<String, String>,
}

pub fn parse_file(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<FileConfig, String> {
    let mut pairs = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(format!("line {}: empty key or value", lineno + 1));
        }
        if pairs.insert(key.clone(), value).is_some() {
            return Err(format!("line {}: duplicate key `{key}`", lineno + 1));
        }
    }
    let kind = match pairs.get("experiment").map(String::as_str) {
        None | Some("low_degree") => ExperimentKind::LowDegree,
        Some("betti_tail") => ExperimentKind::BettiTail,
        Some("inequality") => ExperimentKind::Inequality,
        Some(other) => return Err(format!("unknown experiment kind `{other}`")),
    };
    Ok(FileConfig { kind, pairs })
}

impl FileConfig {
    pub fn set(&mut self, key: &str, value: String) {
        self.pairs.insert(key.to_string(), value);
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(String::as_str)
    }

    fn parse_num<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, String> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| format!("field `{key}`: cannot parse `{v}`")),
        }
    }

    fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, String> {
        match self.get(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| format!("field `{key}`: cannot parse `{s}`")))
                .collect(),
        }
    }

    pub fn to_experiment_config(&self) -> Result<ExperimentConfig, String> {
        let degrees: Vec<usize> = self.parse_list("degrees")?;
        if degrees.is_empty() {
            return Err("field `degrees` is required".into());
        }
        let w = SingularityType::parse(self.get("w").unwrap_or("zero_set"))
            .map_err(|e| e.to_string())?;
        let regime = self.get("regime").unwrap_or("sqrtlog");
        let schedules: Vec<RegimeSchedule> = match regime {
            "fixed" => {
                let levels: Vec<usize> = self.parse_list("levels")?;
                if levels.is_empty() {
                    return Err("regime `fixed` needs field `levels`".into());
                }
                levels.into_iter().map(|level| RegimeSchedule::Fixed { level }).collect()
            }
            kind => {
                let mut bs: Vec<f64> = self.parse_list("b")?;
                if bs.is_empty() {
                    bs.push(1.0);
                }
                bs.into_iter()
                    .map(|b| match kind {
                        "sqrtlog" => Ok(RegimeSchedule::SqrtLog { b }),
                        "power" => Ok(RegimeSchedule::Power { b }),
                        "linear" => Ok(RegimeSchedule::Linear { b }),
                        other => Err(format!("unknown regime `{other}`")),
                    })
                    .collect::<Result<Vec<_>, String>>()?
            }
        };
        Ok(ExperimentConfig {
            n: self.parse_num("n", 1usize)?,
            m: self.parse_num("m", 1usize)?,
            degrees,
            w,
            schedules,
            trials: self.parse_num("trials", 100usize)?,
            master_seed: self.parse_num("seed", 0u64)?,
            mesh_level: self.parse_num("mesh_level", 4usize)?,
            c1: self.parse_num("c1", 1.0f64)?,
            c1_sweep: self.parse_list("c1_sweep")?,
            compute_margin: self.parse_num("margin", true)?,
            workers: self.parse_num("workers", 0usize)?,
        })
    }

    pub fn threshold_c(&self) -> Result<f64, String> {
        self.parse_num("threshold_c", 1.0f64)
    }

    pub fn to_inequality_config(&self) -> Result<InequalityConfig, String> {
        let n: usize = self.parse_num("n", 2)?;
        let alphas: Vec<Vec<u32>> = match self.get("alphas") {
            None => vec![vec![0; n + 1]],
            Some(text) => text
                .split(';')
                .map(|entry| {
                    entry
                        .split('|')
                        .map(|s| {
                            s.trim()
                                .parse()
                                .map_err(|_| format!("field `alphas`: cannot parse `{s}`"))
                        })
                        .collect()
                })
                .collect::<Result<Vec<Vec<u32>>, String>>()?,
        };
        let r: usize = self.parse_num("r", 1)?;
        let cr_mesh_level = match self.get("mesh_level") {
            None => None,
            Some(v) => {
                Some(v.parse().map_err(|_| format!("field `mesh_level`: cannot parse `{v}`"))?)
            }
        };
        Ok(InequalityConfig {
            n,
            r,
            q: self.parse_num("q", r as f64 + (n as f64 - 1.0) / 2.0)?,
            degrees: self.parse_list("degrees")?,
            ells: self.parse_list("ells")?,
            alphas,
            samples: self.parse_num("samples", 50)?,
            master_seed: self.parse_num("seed", 0)?,
            cr_mesh_level,
            workers: self.parse_num("workers", 0)?,
        })
    }

    pub fn out_dir(&self) -> Option<&str> {
        self.get("out")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_pairs() {
        let cfg = parse_str(
            "# comment\nn = 1\ndegrees = 64, 100\nregime = sqrtlog\nb = 1,2,3\ntrials = 500\nseed = 7\n",
        )
        .unwrap();
        let exp = cfg.to_experiment_config().unwrap();
        assert_eq!(exp.n, 1);
        assert_eq!(exp.degrees, vec![64, 100]);
        assert_eq!(exp.schedules.len(), 3);
        assert_eq!(exp.trials, 500);
        assert_eq!(exp.master_seed, 7);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_str("just words\n").is_err());
        assert!(parse_str("a = 1\na = 2\n").is_err());
        let cfg = parse_str("degrees = twelve\n").unwrap();
        assert!(cfg.to_experiment_config().is_err());
    }

    #[test]
    fn overrides_take_effect() {
        let mut cfg = parse_str("degrees = 10\ntrials = 5\n").unwrap();
        cfg.set("trials", "9".into());
        assert_eq!(cfg.to_experiment_config().unwrap().trials, 9);
    }
}
