//! Option resolution: protocol defaults ← config file ← command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};

use spaql_core::env::{ArrivalKind, EnvConfig, EnvKind, SurveyKind};
use spaql_core::harness::{default_xi_values, Algorithm};
use spaql_core::spaql::TrainConfig;

use crate::CommonArgs;

/// Fully resolved options for one subcommand invocation.
#[derive(Debug, Clone)]
pub struct Settings {
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub algorithm: Algorithm,
    pub n_agents: u32,
    pub base_seed: u64,
    pub out: Option<PathBuf>,
    pub xi_values: Vec<f64>,
}

/// The flat `key = value` config file; keys match the long flag names
/// (hyphens and underscores are interchangeable), `#` starts a comment.
fn load_config(path: &PathBuf) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected 'key = value'", path.display(), lineno + 1);
        };
        map.insert(key.trim().replace('-', "_"), value.trim().to_string());
    }
    const KNOWN: &[&str] = &[
        "env", "survey", "lambda", "arrivals", "cost_weight", "horizon", "xi", "episodes",
        "rollouts", "agents", "seed", "out", "algorithm", "xi_values", "reset_splits",
    ];
    for key in map.keys() {
        if !KNOWN.contains(&key.as_str()) {
            bail!("{}: unknown config key '{key}'", path.display());
        }
    }
    Ok(map)
}

fn parsed<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| anyhow!("config key '{key}': {e}"))
        })
        .transpose()
}

struct Resolver {
    args: CommonArgs,
    file: BTreeMap<String, String>,
}

impl Resolver {
    fn new(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => load_config(path)?,
            None => BTreeMap::new(),
        };
        Ok(Self {
            args: args.clone(),
            file,
        })
    }

    fn pick<T: Clone + std::str::FromStr>(&self, flag: &Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        Ok(match flag {
            Some(v) => Some(v.clone()),
            None => parsed(&self.file, key)?,
        })
    }

    fn env_config(&self) -> Result<EnvConfig> {
        let kind = match self.pick(&self.args.env, "env")?.as_deref() {
            None | Some("oil") => EnvKind::Oil,
            Some("ambulance") => EnvKind::Ambulance,
            Some(other) => bail!("unknown environment '{other}' (expected oil|ambulance)"),
        };
        let survey = match self.pick(&self.args.survey, "survey")?.as_deref() {
            None | Some("quadratic") => SurveyKind::Quadratic,
            Some("laplace") => SurveyKind::Laplace,
            Some(other) => bail!("unknown survey '{other}' (expected laplace|quadratic)"),
        };
        let arrivals = match self.pick(&self.args.arrivals, "arrivals")?.as_deref() {
            None | Some("uniform") => ArrivalKind::Uniform,
            Some("beta") => ArrivalKind::Beta,
            Some(other) => bail!("unknown arrivals '{other}' (expected uniform|beta)"),
        };
        Ok(EnvConfig {
            kind,
            survey,
            lambda: self.pick(&self.args.lambda, "lambda")?.unwrap_or(1.0),
            arrivals,
            cost_weight: self.pick(&self.args.cost_weight, "cost_weight")?.unwrap_or(0.0),
            horizon: self.pick(&self.args.horizon, "horizon")?.unwrap_or(5),
        })
    }

    fn settings(&self) -> Result<Settings> {
        let env = self.env_config()?;
        // Protocol defaults depend on the environment: 5000 iterations and
        // 25 agents for oil, 2000 and 50 for the ambulance.
        let (default_episodes, default_agents) = match env.kind {
            EnvKind::Oil => (5000, 25),
            EnvKind::Ambulance => (2000, 50),
        };
        let episodes = self.pick(&self.args.episodes, "episodes")?.unwrap_or(default_episodes);
        let rollouts = self.pick(&self.args.rollouts, "rollouts")?.unwrap_or(20);
        let xi = self.pick(&self.args.xi, "xi")?.unwrap_or(1.0);
        let seed = self.pick(&self.args.seed, "seed")?.unwrap_or(0);
        let mut train = TrainConfig::new(episodes, env.horizon, rollouts, xi, seed);
        if let Some(reset) = self.pick(&self.args.reset_splits, "reset_splits")? {
            train.reset_splits = reset;
        }

        let algorithm = match self.pick(&self.args.algorithm, "algorithm")?.as_deref() {
            None => Algorithm::Spaql,
            Some(name) => name.parse::<Algorithm>()?,
        };
        let xi_values = match &self.args.xi_values {
            Some(values) => values.clone(),
            None => match self.file.get("xi_values") {
                Some(text) => text
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|e| anyhow!("xi_values: {e}")))
                    .collect::<Result<Vec<f64>>>()?,
                None => default_xi_values(),
            },
        };
        let out = match &self.args.out {
            Some(p) => Some(p.clone()),
            None => self.file.get("out").map(PathBuf::from),
        };

        Ok(Settings {
            env,
            train,
            algorithm,
            n_agents: self.pick(&self.args.agents, "agents")?.unwrap_or(default_agents),
            base_seed: seed,
            out,
            xi_values,
        })
    }
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        Resolver::new(args)?.settings()
    }

    /// The H = 50 scenario: oil with the Laplace survey at λ = 1, two
    /// agents of each trainer by default. Episode count, agents, scaling,
    /// rollouts, and seed remain overridable.
    pub fn resolve_long_horizon(args: &CommonArgs) -> Result<Self> {
        let mut forced = args.clone();
        forced.env = Some("oil".into());
        forced.survey = Some("laplace".into());
        forced.lambda = Some(1.0);
        forced.horizon = Some(50);
        forced.episodes = args.episodes.or(Some(5000));
        forced.agents = args.agents.or(Some(2));
        let mut settings = Resolver::new(&forced)?.settings()?;
        settings.algorithm = Algorithm::Spaql;
        Ok(settings)
    }

    pub fn experiment_spec(&self) -> spaql_core::harness::ExperimentSpec {
        let mut spec = spaql_core::harness::ExperimentSpec::new(self.algorithm, self.env, self.train)
            .with_agents(self.n_agents, self.base_seed);
        spec.output_dir = self.out.clone();
        spec
    }
}
