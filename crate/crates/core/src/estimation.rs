//! Distribution and mean estimation from perturbed reports.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::{arc_distance, wrap_angle, Interval};
use crate::error::{check_epsilon, Error, Result};
use crate::mechanisms::{MechanismSpec, Perturber};

/// Default histogram resolution.
pub const DEFAULT_BINS: usize = 50;

/// Values on a bounded domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    domain: Interval,
    name: String,
}

impl Dataset {
    /// Checks every value against `domain`; circular values are wrapped.
    pub fn new(name: impl Into<String>, values: Vec<f64>, domain: Interval) -> Result<Self> {
        let values = values
            .into_iter()
            .map(|v| domain.check(v).map_err(|e| Error::Dataset(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            values,
            domain,
            name: name.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn uniform(n: usize, domain: Interval, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n)
            .map(|_| domain.lo() + rng.gen::<f64>() * domain.len())
            .collect();
        Dataset::new("uniform", values, domain)
    }

    /// Normal draws clipped to `domain`.
    pub fn gaussian_clipped(
        n: usize,
        mean: f64,
        sd: f64,
        domain: Interval,
        seed: u64,
    ) -> Result<Self> {
        let normal = Normal::new(mean, sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n)
            .map(|_| normal.sample(&mut rng).clamp(domain.lo(), domain.hi()))
            .collect();
        Dataset::new("gaussian", values, domain)
    }

    /// Mixture of wrapped normals on the circle, given `(weight, mean, sd)`.
    pub fn wrapped_normal_mixture(n: usize, parts: &[(f64, f64, f64)], seed: u64) -> Result<Self> {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if parts.is_empty() || total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidParameter(
                "mixture needs positive weights".into(),
            ));
        }
        let normals = parts
            .iter()
            .map(|&(_, m, s)| Normal::new(m, s).map_err(|e| Error::InvalidParameter(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n)
            .map(|_| {
                let mut u = rng.gen::<f64>() * total;
                let mut k = 0;
                while k + 1 < parts.len() && u >= parts[k].0 {
                    u -= parts[k].0;
                    k += 1;
                }
                wrap_angle(normals[k].sample(&mut rng))
            })
            .collect();
        Dataset::new("circular-mixture", values, Interval::circle())
    }
}

/// Normalized histogram over `k` equal bins. Values outside the domain fall
/// into the nearest edge bin.
pub fn histogram(values: &[f64], domain: &Interval, k: usize) -> Vec<f64> {
    let mut h = vec![0.0; k];
    if values.is_empty() || k == 0 {
        return h;
    }
    let w = 1.0 / values.len() as f64;
    for &v in values {
        let t = (v - domain.lo()) / domain.len() * k as f64;
        let i = if t.is_nan() {
            0
        } else {
            (t.floor().max(0.0) as usize).min(k - 1)
        };
        h[i] += w;
    }
    h
}

/// Mean direction of angles. Fails when the resultant vanishes.
pub fn circular_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    let n = values.len() as f64;
    let (s, c) = values
        .iter()
        .fold((0.0, 0.0), |(s, c), v| (s + v.sin(), c + v.cos()));
    let (s, c) = (s / n, c / n);
    if s.hypot(c) < 1e-12 {
        return Err(Error::Degenerate("resultant length is zero".into()));
    }
    Ok(wrap_angle(s.atan2(c)))
}

fn perturb_all(
    data: &Dataset,
    perturber: &dyn Perturber,
    epsilon: f64,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    data.values
        .iter()
        .map(|&x| perturber.perturb(epsilon, x, rng))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionEstimate {
    pub estimated: Vec<f64>,
    pub truth: Vec<f64>,
    pub l1: f64,
}

fn distribution_from(data: &Dataset, reports: &[f64], k: usize) -> DistributionEstimate {
    let estimated = histogram(reports, &data.domain, k);
    let truth = histogram(&data.values, &data.domain, k);
    let l1 = estimated
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a - b).abs())
        .sum();
    DistributionEstimate {
        estimated,
        truth,
        l1,
    }
}

/// Perturbs each value once with `perturber` and compares the histogram of
/// the reports to the histogram of the data.
pub fn estimate_distribution_with(
    data: &Dataset,
    perturber: &dyn Perturber,
    epsilon: f64,
    k: usize,
    seed: u64,
) -> Result<DistributionEstimate> {
    if data.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reports = perturb_all(data, perturber, epsilon, &mut rng)?;
    Ok(distribution_from(data, &reports, k))
}

/// [`estimate_distribution_with`] after fitting `spec` to the data's domain.
pub fn estimate_distribution(
    data: &Dataset,
    spec: &MechanismSpec,
    epsilon: f64,
    k: usize,
    seed: u64,
) -> Result<DistributionEstimate> {
    check_epsilon(epsilon)?;
    estimate_distribution_with(data, &spec.fit_to(&data.domain)?, epsilon, k, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub estimate: f64,
    pub truth: f64,
    pub abs_err: f64,
}

fn mean_of(values: &[f64], circular: bool) -> Result<f64> {
    if circular {
        circular_mean(values)
    } else {
        Ok(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn mean_from(data: &Dataset, reports: &[f64]) -> Result<MeanEstimate> {
    let circular = data.domain.is_circular();
    let estimate = mean_of(reports, circular)?;
    let truth = mean_of(&data.values, circular)?;
    let abs_err = if circular {
        arc_distance(estimate, truth)
    } else {
        (estimate - truth).abs()
    };
    Ok(MeanEstimate {
        estimate,
        truth,
        abs_err,
    })
}

pub fn estimate_mean_with(
    data: &Dataset,
    perturber: &dyn Perturber,
    epsilon: f64,
    seed: u64,
) -> Result<MeanEstimate> {
    if data.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reports = perturb_all(data, perturber, epsilon, &mut rng)?;
    mean_from(data, &reports)
}

/// [`estimate_mean_with`] after fitting `spec` to the data's domain.
pub fn estimate_mean(
    data: &Dataset,
    spec: &MechanismSpec,
    epsilon: f64,
    seed: u64,
) -> Result<MeanEstimate> {
    check_epsilon(epsilon)?;
    estimate_mean_with(data, &spec.fit_to(&data.domain)?, epsilon, seed)
}

/// What an experiment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Distribution { bins: usize },
    Mean,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Distribution { bins } => write!(f, "distribution:{bins}"),
            Task::Mean => f.write_str("mean"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub mechanism: String,
    pub epsilon: f64,
    pub task: Task,
    pub error_mean: f64,
    pub error_std: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Writes reports as `mechanism,epsilon,task,error_mean,error_std,trials,seed`.
pub fn write_reports_csv<W: Write>(reports: &[EstimationReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "mechanism",
        "epsilon",
        "task",
        "error_mean",
        "error_std",
        "trials",
        "seed",
    ])?;
    for r in reports {
        w.write_record([
            r.mechanism.clone(),
            r.epsilon.to_string(),
            r.task.to_string(),
            r.error_mean.to_string(),
            r.error_std.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Seed for one trial, shared by every mechanism and ε so that comparisons
/// use common random numbers.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = master ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Runs every mechanism × ε × task on `data`. Each trial perturbs the data
/// once and scores every requested task on the same reports.
pub fn run_experiment_on(
    data: &Dataset,
    mechanisms: &[String],
    epsilons: &[f64],
    tasks: &[Task],
    trials: usize,
    seed: u64,
) -> Result<Vec<EstimationReport>> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if data.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    for &e in epsilons {
        check_epsilon(e).map_err(|err| Error::Config(err.to_string()))?;
    }
    let mut reports = Vec::new();
    for name in mechanisms {
        let spec = MechanismSpec::by_name(name)
            .and_then(|s| s.fit_to(&data.domain))
            .map_err(|e| Error::Config(e.to_string()))?;
        for &epsilon in epsilons {
            let mut scores = vec![Vec::with_capacity(trials); tasks.len()];
            for trial in 0..trials {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial as u64));
                let out = perturb_all(data, &spec, epsilon, &mut rng)?;
                for (task, sink) in tasks.iter().zip(scores.iter_mut()) {
                    sink.push(match task {
                        Task::Distribution { bins } => distribution_from(data, &out, *bins).l1,
                        Task::Mean => mean_from(data, &out)?.abs_err,
                    });
                }
            }
            for (task, s) in tasks.iter().zip(&scores) {
                let (error_mean, error_std) = mean_std(s);
                reports.push(EstimationReport {
                    mechanism: name.clone(),
                    epsilon,
                    task: *task,
                    error_mean,
                    error_std,
                    trials,
                    seed,
                });
            }
        }
    }
    Ok(reports)
}

/// How raw CSV values are mapped onto a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalize {
    /// Min-max scaling onto `[0, 1)`.
    ToUnit,
    /// Radians wrapped onto `[0, 2π)`.
    ToCircle,
    /// Keep values; the domain spans their range.
    None,
}

impl FromStr for Normalize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(Normalize::ToUnit),
            "circle" => Ok(Normalize::ToCircle),
            "none" => Ok(Normalize::None),
            other => Err(Error::Config(format!("unknown normalization `{other}`"))),
        }
    }
}

/// Reads one numeric column of a headed CSV file.
pub fn load_csv_dataset(path: &Path, column: &str, normalize: Normalize) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::Dataset(format!("column `{column}` not found")))?;
    let mut raw = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = record.get(idx).unwrap_or("").trim();
        let v: f64 = cell.parse().map_err(|_| {
            Error::Dataset(format!(
                "row {}: `{cell}` in `{column}` is not a number",
                row + 1
            ))
        })?;
        if !v.is_finite() {
            return Err(Error::Dataset(format!("row {}: non-finite value", row + 1)));
        }
        raw.push(v);
    }
    if raw.is_empty() {
        return Err(Error::Dataset(format!("no rows in {}", path.display())));
    }
    let name = path
        .file_stem()
        .map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    match normalize {
        Normalize::ToCircle => {
            let values = raw.into_iter().map(wrap_angle).collect();
            Dataset::new(name, values, Interval::circle())
        }
        Normalize::ToUnit => {
            let (lo, hi) = min_max(&raw);
            let below_one = 1.0 - f64::EPSILON / 2.0;
            let values = raw
                .into_iter()
                .map(|v| {
                    if hi > lo {
                        ((v - lo) / (hi - lo)).min(below_one)
                    } else {
                        0.0
                    }
                })
                .collect();
            Dataset::new(name, values, Interval::unit())
        }
        Normalize::None => {
            let (lo, hi) = min_max(&raw);
            let domain = Interval::classical(lo, hi)
                .map_err(|_| Error::Dataset("column is constant".into()))?;
            Dataset::new(name, raw, domain)
        }
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        })
}

/// Where experiment data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Uniform,
    Gaussian,
    CircularMixture,
    Csv {
        path: PathBuf,
        column: String,
        normalize: Normalize,
    },
}

/// Parsed `key = value` experiment file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mechanisms: Vec<String>,
    pub epsilons: Vec<f64>,
    pub tasks: Vec<Task>,
    pub trials: usize,
    pub bins: usize,
    pub n: usize,
    pub seed: u64,
    pub data: DataSource,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mechanisms: vec!["ogpm".into()],
            epsilons: vec![1.0],
            tasks: vec![Task::Distribution { bins: DEFAULT_BINS }, Task::Mean],
            trials: 100,
            bins: DEFAULT_BINS,
            n: 10_000,
            seed: 0,
            data: DataSource::Uniform,
        }
    }
}

fn list<T, F>(value: &str, parse: F) -> Result<Vec<T>>
where
    F: Fn(&str) -> Result<T>,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect()
}

impl ExperimentConfig {
    /// Parses lines of `key = value`; `#` starts a comment.
    ///
    /// Keys: `mechanisms`, `epsilons`, `tasks` (`distribution`, `mean`),
    /// `trials`, `bins`, `n`, `seed`, `dataset` (`uniform`, `gaussian`,
    /// `circular-mixture` or a CSV path), `column`, `normalize`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut task_names: Option<Vec<String>> = None;
        let mut dataset: Option<String> = None;
        let mut column = None;
        let mut normalize = Normalize::ToUnit;
        let bad =
            |key: &str, value: &str| Error::Config(format!("bad value `{value}` for `{key}`"));
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "mechanisms" => cfg.mechanisms = list(value, |s| Ok(s.to_string()))?,
                "epsilons" => cfg.epsilons = list(value, |s| s.parse().map_err(|_| bad(key, s)))?,
                "tasks" => task_names = Some(list(value, |s| Ok(s.to_string()))?),
                "trials" => cfg.trials = value.parse().map_err(|_| bad(key, value))?,
                "bins" => cfg.bins = value.parse().map_err(|_| bad(key, value))?,
                "n" => cfg.n = value.parse().map_err(|_| bad(key, value))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad(key, value))?,
                "dataset" => dataset = Some(value.to_string()),
                "column" => column = Some(value.to_string()),
                "normalize" => normalize = value.parse()?,
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        if cfg.bins == 0 {
            return Err(Error::Config("bins must be at least 1".into()));
        }
        cfg.tasks = match task_names {
            None => vec![Task::Distribution { bins: cfg.bins }, Task::Mean],
            Some(names) => names
                .iter()
                .map(|t| match t.as_str() {
                    "distribution" => Ok(Task::Distribution { bins: cfg.bins }),
                    "mean" => Ok(Task::Mean),
                    other => Err(Error::Config(format!("unknown task `{other}`"))),
                })
                .collect::<Result<_>>()?,
        };
        cfg.data = match dataset.as_deref() {
            None | Some("uniform") => DataSource::Uniform,
            Some("gaussian") => DataSource::Gaussian,
            Some("circular-mixture") => DataSource::CircularMixture,
            Some(path) => DataSource::Csv {
                path: PathBuf::from(path),
                column: column
                    .ok_or_else(|| Error::Config("a CSV dataset needs `column`".into()))?,
                normalize,
            },
        };
        if cfg.mechanisms.is_empty() || cfg.epsilons.is_empty() || cfg.tasks.is_empty() {
            return Err(Error::Config(
                "mechanisms, epsilons and tasks must be non-empty".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::parse(&text)
    }

    /// Loads or synthesizes the data. Synthetic data is seeded from `seed`.
    pub fn dataset(&self) -> Result<Dataset> {
        match &self.data {
            DataSource::Uniform => Dataset::uniform(self.n, Interval::unit(), self.seed),
            DataSource::Gaussian => {
                Dataset::gaussian_clipped(self.n, 0.3, 0.15, Interval::unit(), self.seed)
            }
            DataSource::CircularMixture => {
                Dataset::wrapped_normal_mixture(self.n, &default_mixture(), self.seed)
            }
            DataSource::Csv {
                path,
                column,
                normalize,
            } => load_csv_dataset(path, column, *normalize),
        }
    }
}

/// Two bumps straddling the 0/2π seam.
pub fn default_mixture() -> [(f64, f64, f64); 2] {
    [(0.7, 0.4, 0.35), (0.3, TAU - 0.5, 0.3)]
}

/// Runs the experiment a config describes.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<EstimationReport>> {
    let data = config.dataset()?;
    run_experiment_on(
        &data,
        &config.mechanisms,
        &config.epsilons,
        &config.tasks,
        config.trials,
        config.seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::Identity;
    use std::f64::consts::PI;

    #[test]
    fn identity_is_exact() {
        let data = Dataset::uniform(1000, Interval::unit(), 4).unwrap();
        for k in [1, 7, 50] {
            let d = estimate_distribution_with(&data, &Identity, 1.0, k, 0).unwrap();
            assert_eq!(d.l1, 0.0);
        }
    }

    #[test]
    fn single_value_histogram() {
        let data = Dataset::new("one", vec![0.5], Interval::unit()).unwrap();
        let d = estimate_distribution_with(&data, &Identity, 1.0, 2, 0).unwrap();
        assert_eq!(d.truth, vec![0.0, 1.0]);
    }

    #[test]
    fn empty_data_is_rejected() {
        let data = Dataset::new("none", vec![], Interval::unit()).unwrap();
        let spec = MechanismSpec::by_name("ogpm").unwrap();
        assert!(estimate_distribution(&data, &spec, 1.0, 5, 0).is_err());
        assert!(estimate_mean(&data, &spec, 1.0, 0).is_err());
    }

    #[test]
    fn edge_bins_absorb_outliers() {
        let h = histogram(&[-3.0, 0.1, 7.0], &Interval::unit(), 4);
        assert_eq!(h, vec![2.0 / 3.0, 0.0, 0.0, 1.0 / 3.0]);
    }

    #[test]
    fn circular_means() {
        let data = Dataset::new("c", vec![0.5 * PI; 3], Interval::circle()).unwrap();
        let m = estimate_mean_with(&data, &Identity, 1.0, 0).unwrap();
        assert!((m.truth - 0.5 * PI).abs() < 1e-12);
        assert_eq!(m.abs_err, 0.0);
        let m = circular_mean(&[0.0, TAU - 0.1]).unwrap();
        assert!((m - (TAU - 0.05)).abs() < 1e-12);
        assert!(matches!(
            circular_mean(&[0.0, PI]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn experiment_shape_and_determinism() {
        let data = Dataset::uniform(200, Interval::unit(), 1).unwrap();
        let mechs = vec!["ogpm".to_string(), "sw-c".to_string()];
        let tasks = [Task::Distribution { bins: 10 }, Task::Mean];
        let a = run_experiment_on(&data, &mechs, &[1.0, 2.0, 4.0], &tasks, 3, 9).unwrap();
        assert_eq!(a.len(), 12);
        let b = run_experiment_on(&data, &mechs, &[1.0, 2.0, 4.0], &tasks, 3, 9).unwrap();
        assert_eq!(a, b);
        let bad = run_experiment_on(&data, &["nope".to_string()], &[1.0], &tasks, 3, 9);
        assert!(matches!(bad, Err(Error::Config(_))));
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::parse(
            "# demo\nmechanisms = ogpm, pm-c\nepsilons = 1,2\ntasks = mean\ntrials = 5\nseed = 3\ndataset = circular-mixture\n",
        )
        .unwrap();
        assert_eq!(cfg.mechanisms, vec!["ogpm", "pm-c"]);
        assert_eq!(cfg.epsilons, vec![1.0, 2.0]);
        assert_eq!(cfg.tasks, vec![Task::Mean]);
        assert_eq!(cfg.data, DataSource::CircularMixture);
        assert!(ExperimentConfig::parse("colour = red").is_err());
        assert!(ExperimentConfig::parse("dataset = data.csv").is_err());
        assert!(ExperimentConfig::parse("trials = many").is_err());
    }

    #[test]
    fn csv_loading() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "t,v\n0,2\n1,4\n2,6\n").unwrap();
        let d = load_csv_dataset(&path, "v", Normalize::ToUnit).unwrap();
        assert_eq!(d.values()[0], 0.0);
        assert_eq!(d.values()[1], 0.5);
        assert!(d.values()[2] < 1.0 && d.values()[2] > 1.0 - 1e-15);

        std::fs::write(&path, "a\n-1.5707963267948966\n").unwrap();
        let d = load_csv_dataset(&path, "a", Normalize::ToCircle).unwrap();
        assert!((d.values()[0] - 1.5 * PI).abs() < 1e-12);

        let err = load_csv_dataset(&path, "speed", Normalize::ToUnit).unwrap_err();
        assert!(err.to_string().contains("speed"));
        std::fs::write(&path, "a\nfast\n").unwrap();
        assert!(load_csv_dataset(&path, "a", Normalize::ToUnit).is_err());
        std::fs::write(&path, "a\n").unwrap();
        assert!(load_csv_dataset(&path, "a", Normalize::ToUnit).is_err());
        assert!(matches!(
            load_csv_dataset(&dir.path().join("missing.csv"), "a", Normalize::ToUnit),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn trial_seeds_differ() {
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
        assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
    }
}
