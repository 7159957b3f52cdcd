use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{MetricSetSpec, ReportError};
use crate::metrics::{MetricOptions, ProxemicsThresholds, QmMetric, SfmParams, SwAccumulation};
use crate::preprocess::{Direction, DirectionalityMap, NormMode};
use crate::rank_stats::Thresholds;

fn default_dt() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// Directory of experiment JSON files.
    pub dir: PathBuf,
    /// Survey CSV; without it only the quantitative stages run.
    #[serde(default)]
    pub survey: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub norm: NormMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub k_min: usize,
    pub k_max: usize,
    /// Values of k used for the subset search.
    pub subset_k: Vec<usize>,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for ClusterSection {
    fn default() -> Self {
        ClusterSection {
            k_min: 2,
            k_max: 5,
            subset_k: vec![2, 3],
            seed: 42,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregateSection {
    pub optimal: Vec<String>,
}

impl Default for AggregateSection {
    fn default() -> Self {
        AggregateSection {
            optimal: MetricSetSpec::default_optimal().members,
        }
    }
}

/// Pipeline settings, read from TOML.
///
/// ```toml
/// [dataset]
/// dir = "experiments"
/// survey = "survey.csv"
/// output_dir = "out"
///
/// [sfm]
/// sw_raw_sum = false
///
/// [direction]
/// PR_PU = "low"
///
/// [cluster]
/// seed = 7
/// ```
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub dataset: DatasetSection,
    pub sfm: SfmParams,
    pub sw_accumulation: SwAccumulation,
    pub proxemics: ProxemicsThresholds,
    /// Overrides of the default metric directions.
    pub direction: BTreeMap<String, Direction>,
    pub cluster: ClusterSection,
    pub stats: Thresholds,
    pub aggregate: AggregateSection,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: DatasetSection,
    #[serde(default)]
    sfm: toml::Table,
    #[serde(default)]
    proxemics: ProxemicsThresholds,
    #[serde(default)]
    direction: BTreeMap<String, String>,
    #[serde(default)]
    cluster: ClusterSection,
    #[serde(default)]
    stats: Thresholds,
    #[serde(default)]
    aggregate: AggregateSection,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl Config {
    /// Defaults around the given locations.
    pub fn new(dir: PathBuf, survey: Option<PathBuf>, output_dir: PathBuf) -> Config {
        Config {
            dataset: DatasetSection {
                dir,
                survey,
                output_dir,
                dt: default_dt(),
                strict: false,
                norm: NormMode::Ratio,
            },
            sfm: SfmParams::default(),
            sw_accumulation: SwAccumulation::TimeIntegral,
            proxemics: ProxemicsThresholds::default(),
            direction: BTreeMap::new(),
            cluster: ClusterSection::default(),
            stats: Thresholds::default(),
            aggregate: AggregateSection::default(),
        }
    }

    /// Parses TOML text; relative paths are taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Config, ReportError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ReportError::Config(e.to_string()))?;
        let mut sfm_table = raw.sfm;
        let sw_raw_sum = match sfm_table.remove("sw_raw_sum") {
            None => false,
            Some(toml::Value::Boolean(b)) => b,
            Some(other) => return Err(ReportError::Config(format!("sfm.sw_raw_sum must be a boolean, got {other}"))),
        };
        let sfm: SfmParams = toml::Value::Table(sfm_table)
            .try_into()
            .map_err(|e: toml::de::Error| ReportError::Config(format!("[sfm]: {e}")))?;
        let direction = raw
            .direction
            .into_iter()
            .map(|(k, v)| {
                let m: QmMetric = k.parse().map_err(ReportError::Config)?;
                let d: Direction = v.parse().map_err(ReportError::Config)?;
                Ok((m.name().to_string(), d))
            })
            .collect::<Result<_, ReportError>>()?;
        let mut dataset = raw.dataset;
        dataset.dir = resolve(base, &dataset.dir);
        dataset.output_dir = resolve(base, &dataset.output_dir);
        dataset.survey = dataset.survey.map(|s| resolve(base, &s));
        let cfg = Config {
            dataset,
            sfm,
            sw_accumulation: if sw_raw_sum {
                SwAccumulation::RawSum
            } else {
                SwAccumulation::TimeIntegral
            },
            proxemics: raw.proxemics,
            direction,
            cluster: raw.cluster,
            stats: raw.stats,
            aggregate: raw.aggregate,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Config::parse(&text, base)
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        let bad = |m: String| Err(ReportError::Config(m));
        if self.dataset.dt.is_nan() || self.dataset.dt <= 0.0 {
            return bad(format!("dataset.dt must be positive, got {}", self.dataset.dt));
        }
        self.sfm.validate().map_err(|e| ReportError::Config(e.to_string()))?;
        self.proxemics.validate().map_err(|e| ReportError::Config(e.to_string()))?;
        let c = &self.cluster;
        if c.k_min < 2 || c.k_min > c.k_max {
            return bad(format!("cluster k range {}..={} is invalid (need 2 <= k_min <= k_max)", c.k_min, c.k_max));
        }
        if c.subset_k.is_empty() || c.subset_k.iter().any(|&k| k < 2) {
            return bad("cluster.subset_k needs values >= 2".into());
        }
        if c.restarts == 0 {
            return bad("cluster.restarts must be >= 1".into());
        }
        let t = &self.stats;
        for (name, p) in [("p_max_rho", t.p_max_rho), ("p_max_tau", t.p_max_tau)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("stats.{name} must lie in [0, 1], got {p}"));
            }
        }
        self.optimal_set()?;
        Ok(())
    }

    pub fn metric_options(&self) -> MetricOptions {
        MetricOptions {
            sfm: self.sfm,
            proxemics: self.proxemics,
            dt: self.dataset.dt,
            sw_accumulation: self.sw_accumulation,
        }
    }

    pub fn directionality(&self) -> DirectionalityMap {
        let mut map = DirectionalityMap::default();
        for (name, d) in &self.direction {
            let m: QmMetric = name.parse().expect("validated on load");
            map.set(m, *d);
        }
        map
    }

    pub fn optimal_set(&self) -> Result<MetricSetSpec, ReportError> {
        MetricSetSpec::qm("qm_optimal", &self.aggregate.optimal)
    }

    /// Values of k tried for the survey-space clustering.
    pub fn k_range(&self) -> Vec<usize> {
        (self.cluster.k_min..=self.cluster.k_max).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = Config::parse("[dataset]\ndir = \"d\"\noutput_dir = \"o\"\n", Path::new("/base")).unwrap();
        assert_eq!(cfg.dataset.dir, PathBuf::from("/base/d"));
        assert_eq!(cfg.dataset.survey, None);
        assert_eq!(cfg.cluster.subset_k, vec![2, 3]);
        assert_eq!(cfg.sw_accumulation, SwAccumulation::TimeIntegral);
        assert_eq!(cfg.optimal_set().unwrap(), MetricSetSpec::default_optimal());
    }

    #[test]
    fn sections_override_defaults() {
        let text = r#"
[dataset]
dir = "/abs/d"
output_dir = "o"
norm = "minmax"
[sfm]
sw_raw_sum = true
force_strength_social = 3.0
[direction]
pr_pu = "low"
[stats]
p_max_tau = 0.06
[aggregate]
optimal = ["ARV", "SW_s"]
"#;
        let cfg = Config::parse(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.dataset.dir, PathBuf::from("/abs/d"));
        assert_eq!(cfg.dataset.norm, NormMode::MinMax);
        assert_eq!(cfg.sw_accumulation, SwAccumulation::RawSum);
        assert_eq!(cfg.sfm.force_strength_social, 3.0);
        assert_eq!(cfg.directionality().get(QmMetric::PrPu), Direction::LowerBetter);
        assert_eq!(cfg.stats.p_max_tau, 0.06);
        assert_eq!(cfg.optimal_set().unwrap().members, vec!["ARV", "SW_s"]);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let base = "[dataset]\ndir = \"d\"\noutput_dir = \"o\"\n";
        for extra in [
            "[cluster]\nk_min = 1\n",
            "[sfm]\nagent_radius = -1.0\n",
            "[direction]\nXYZ = \"low\"\n",
            "[aggregate]\noptimal = []\n",
            "[bogus]\n",
        ] {
            assert!(Config::parse(&format!("{base}{extra}"), Path::new(".")).is_err(), "{extra}");
        }
    }
}
