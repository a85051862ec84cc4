//! Pipeline configuration: a TOML file with one table per stage. Every key is
//! optional; missing keys take their defaults and command-line flags win over
//! the file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::TimeDelta;
use labeltopic::corpus::DEFAULT_BLACKLIST;
use labeltopic::lda::{default_alpha, GibbsConfig, LdaConfig, VbConfig};
use labeltopic::weighting::WeightingMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub corpus: CorpusSection,
    pub weighting: WeightingSection,
    pub lda: LdaSection,
    pub timeseries: TimeseriesSection,
    pub simulate: SimulateSection,
    pub likelihood: LikelihoodSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub inputs: Vec<PathBuf>,
    pub blacklist: Vec<String>,
    pub cutoff: f64,
    /// Abort on the first malformed line instead of skipping it.
    pub strict: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightingSection {
    pub mode: WeightingMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSection {
    pub k: usize,
    /// `50 / k` when absent.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub batch_size: usize,
    pub kappa: f64,
    pub tau0: f64,
    pub passes: usize,
    pub doc_update_iters: usize,
    pub doc_convergence_tol: f64,
    pub fixed_rate: Option<f64>,
    pub restarts: usize,
    pub gibbs_iterations: usize,
    pub gibbs_burn_in: usize,
    /// Labels per topic in the topic report.
    pub top_labels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeseriesSection {
    pub bin_width_minutes: u32,
    /// Fixed offset applied to plots and weekly overlays; CSV series stay in
    /// UTC.
    pub utc_offset_minutes: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub images: usize,
    pub vocab_size: usize,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub weight: f64,
    pub cameras: usize,
    /// RFC 3339 instant of the first image of every camera.
    pub start: String,
    pub interval_seconds: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LikelihoodSection {
    pub k_values: Vec<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            corpus: CorpusSection::default(),
            weighting: WeightingSection::default(),
            lda: LdaSection::default(),
            timeseries: TimeseriesSection::default(),
            simulate: SimulateSection::default(),
            likelihood: LikelihoodSection::default(),
        }
    }
}

impl Default for CorpusSection {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            blacklist: DEFAULT_BLACKLIST.iter().map(|s| s.to_string()).collect(),
            cutoff: 1e-5,
            strict: false,
        }
    }
}

impl Default for LdaSection {
    fn default() -> Self {
        let vb = VbConfig::default();
        let gibbs = GibbsConfig::default();
        Self {
            k: 10,
            alpha: None,
            beta: 0.1,
            batch_size: vb.batch_size,
            kappa: vb.kappa,
            tau0: vb.tau0,
            passes: vb.passes,
            doc_update_iters: vb.doc_update_iters,
            doc_convergence_tol: vb.doc_convergence_tol,
            fixed_rate: vb.fixed_rate,
            restarts: vb.restarts,
            gibbs_iterations: gibbs.iterations,
            gibbs_burn_in: gibbs.burn_in,
            top_labels: 10,
        }
    }
}

impl Default for TimeseriesSection {
    fn default() -> Self {
        Self {
            bin_width_minutes: 15,
            utc_offset_minutes: 0,
        }
    }
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            images: 500,
            vocab_size: 50,
            k: 3,
            alpha: 0.1,
            beta: 0.01,
            weight: 50.0,
            cameras: 3,
            start: "2018-01-01T00:00:00Z".into(),
            interval_seconds: 300,
        }
    }
}

impl Default for LikelihoodSection {
    fn default() -> Self {
        Self {
            k_values: vec![1, 2, 5, 10, 15, 20],
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Fills in the defaults that depend on other values.
    pub fn resolve(&mut self) {
        if self.lda.alpha.is_none() {
            self.lda.alpha = Some(default_alpha(self.lda.k));
        }
    }

    pub fn lda_config(&self) -> LdaConfig {
        let l = &self.lda;
        LdaConfig {
            k: l.k,
            alpha: l.alpha.unwrap_or_else(|| default_alpha(l.k)),
            beta: l.beta,
            seed: self.seed,
            vb: VbConfig {
                batch_size: l.batch_size,
                kappa: l.kappa,
                tau0: l.tau0,
                passes: l.passes,
                doc_update_iters: l.doc_update_iters,
                doc_convergence_tol: l.doc_convergence_tol,
                fixed_rate: l.fixed_rate,
                restarts: l.restarts,
            },
            gibbs: GibbsConfig {
                iterations: l.gibbs_iterations,
                burn_in: l.gibbs_burn_in,
            },
        }
    }

    pub fn bin_width(&self) -> Result<TimeDelta> {
        match self.timeseries.bin_width_minutes {
            0 => Err(CliError::Usage(
                "bin width must be at least one minute".into(),
            )),
            m => Ok(TimeDelta::minutes(i64::from(m))),
        }
    }

    pub fn utc_offset(&self) -> TimeDelta {
        TimeDelta::minutes(i64::from(self.timeseries.utc_offset_minutes))
    }

    /// Writes the resolved configuration to `<out>/<command>.config.toml`,
    /// followed by the SHA-256 of every input file as comments.
    pub fn echo(&self, command: &str, inputs: &[&Path]) -> Result<()> {
        let mut text = format!("# resolved configuration of `{command}`\n");
        text.push_str(
            &toml::to_string_pretty(self)
                .map_err(|e| CliError::Internal(format!("config echo: {e}")))?,
        );
        if !inputs.is_empty() {
            text.push('\n');
            for path in inputs {
                let _ = writeln!(
                    text,
                    "# input sha256 {} {}",
                    sha256_file(path)?,
                    path.display()
                );
            }
        }
        fs::write(self.out.join(format!("{command}.config.toml")), text)?;
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Parses `+HH:MM`, `-HH:MM` or a whole number of hours into minutes.
pub fn parse_utc_offset(s: &str) -> Result<i32, String> {
    let s = s.trim();
    let (sign, rest) = match s.as_bytes().first() {
        Some(b'-') => (-1, &s[1..]),
        Some(b'+') => (1, &s[1..]),
        _ => (1, s),
    };
    let minutes = match rest.split_once(':') {
        Some((h, m)) => {
            let h: i32 = h.parse().map_err(|_| format!("bad offset `{s}`"))?;
            let m: i32 = m.parse().map_err(|_| format!("bad offset `{s}`"))?;
            if m >= 60 {
                return Err(format!("bad offset `{s}`"));
            }
            h * 60 + m
        }
        None => {
            rest.parse::<i32>()
                .map_err(|_| format!("bad offset `{s}`"))?
                * 60
        }
    };
    if minutes > 18 * 60 {
        return Err(format!("offset `{s}` is beyond 18 hours"));
    }
    Ok(sign * minutes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg: PipelineConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.lda.k, 10);
        assert_eq!(cfg.corpus.cutoff, 1e-5);
        assert_eq!(cfg.weighting.mode, WeightingMode::PerCameraTfIdf);
        assert_eq!(cfg.timeseries.bin_width_minutes, 15);
    }

    #[test]
    fn sections_override_and_unknown_keys_fail() {
        let cfg: PipelineConfig =
            toml::from_str("seed = 4\n[lda]\nk = 3\n[weighting]\nmode = \"binary\"\n").unwrap();
        assert_eq!((cfg.seed, cfg.lda.k), (4, 3));
        assert_eq!(cfg.weighting.mode, WeightingMode::Binary);
        assert_eq!(cfg.lda_config().alpha, 50.0 / 3.0);
        assert!(toml::from_str::<PipelineConfig>("[lda]\ntopics = 3\n").is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = PipelineConfig::default();
        cfg.resolve();
        assert_eq!(cfg.lda.alpha, Some(5.0));
        let text = toml::to_string_pretty(&cfg).unwrap();
        assert_eq!(toml::from_str::<PipelineConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn offsets() {
        assert_eq!(parse_utc_offset("-05:00"), Ok(-300));
        assert_eq!(parse_utc_offset("+5:30"), Ok(330));
        assert_eq!(parse_utc_offset("-5"), Ok(-300));
        assert!(parse_utc_offset("five").is_err());
        assert!(parse_utc_offset("20").is_err());
    }
}
