//! Episodic benchmark environments: oil discovery and ambulance routing.
//!
//! Both problems live on the unit interval: states and actions are in
//! `[0, 1]`, rewards are in `[0, 1]`, and dynamics are time-invariant (a
//! step never depends on the episode step index). Environments hold no
//! mutable state; all randomness comes from the caller-supplied generator,
//! so one instance can serve many threads as long as each thread owns its
//! generator.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Oil deposit location: `0.7 + π/60 ≈ 0.7524`, kept at full precision.
pub const DEPOSIT_LOCATION: f64 = 0.7 + PI / 60.0;

/// An episodic MDP over `[0,1]` states and actions with rewards in `[0,1]`.
pub trait Environment {
    /// Number of steps per episode.
    fn horizon(&self) -> u32;

    /// Draws the initial state of an episode.
    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;

    /// Plays one step: returns `(next_state, reward)`.
    fn step<R: Rng + ?Sized>(&self, state: f64, action: f64, rng: &mut R) -> (f64, f64);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurveyKind {
    Laplace,
    Quadratic,
}

/// Oil discovery: survey a 1-D map for a hidden deposit.
///
/// Moving to position `a` costs the travelled distance; the survey at `a`
/// pays `f(a)`. Transitions are deterministic (`x' = a`) and the reward is
/// `max{0, f(a) - |x - a|}`.
#[derive(Clone, Copy, Debug)]
pub struct OilEnv {
    pub survey: SurveyKind,
    pub lambda: f64,
    pub deposit: f64,
    pub horizon: u32,
}

impl OilEnv {
    pub fn new(survey: SurveyKind, lambda: f64, horizon: u32) -> Self {
        assert!(lambda > 0.0, "survey sharpness must be positive");
        Self {
            survey,
            lambda,
            deposit: DEPOSIT_LOCATION,
            horizon,
        }
    }

    /// The survey value at `a`: `exp(-λ|a - c|)` for the Laplace survey,
    /// `1 - λ(a - c)²` for the quadratic one (which may go negative; the
    /// reward clips at zero, not the survey).
    pub fn survey_value(&self, action: f64) -> f64 {
        let d = action - self.deposit;
        match self.survey {
            SurveyKind::Laplace => (-self.lambda * d.abs()).exp(),
            SurveyKind::Quadratic => 1.0 - self.lambda * d * d,
        }
    }
}

impl Environment for OilEnv {
    fn horizon(&self) -> u32 {
        self.horizon
    }

    /// The survey always starts at position 0.
    fn reset<R: Rng + ?Sized>(&self, _rng: &mut R) -> f64 {
        0.0
    }

    fn step<R: Rng + ?Sized>(&self, state: f64, action: f64, _rng: &mut R) -> (f64, f64) {
        let reward = (self.survey_value(action) - (state - action).abs()).max(0.0);
        (action, reward)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalKind {
    /// Requests arrive uniformly on `[0, 1]`.
    Uniform,
    /// Requests arrive as Beta(5, 2) draws, concentrated near 5/7.
    Beta,
}

/// Ambulance routing: relocate to `a`, serve a request arriving at
/// `x' ~ F`, and end up at the request location.
///
/// The reward `1 - [c|x - a| + (1 - c)|x' - a|]` trades the relocation cost
/// against the cost of travelling to the request; `c = 1` makes staying put
/// optimal, `c = 0` rewards anticipating the next arrival.
#[derive(Clone, Copy, Debug)]
pub struct AmbulanceEnv {
    pub arrivals: ArrivalKind,
    pub cost_weight: f64,
    pub horizon: u32,
}

impl AmbulanceEnv {
    pub fn new(arrivals: ArrivalKind, cost_weight: f64, horizon: u32) -> Self {
        assert!(
            (0.0..=1.0).contains(&cost_weight),
            "cost weight must lie in [0, 1]"
        );
        Self {
            arrivals,
            cost_weight,
            horizon,
        }
    }

    pub fn sample_arrival<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.arrivals {
            ArrivalKind::Uniform => rng.random(),
            ArrivalKind::Beta => sample_beta_5_2(rng),
        }
    }

    /// Analytic mean of the arrival distribution (the "Mean" heuristic's
    /// relocation target).
    pub fn arrival_mean(&self) -> f64 {
        match self.arrivals {
            ArrivalKind::Uniform => 0.5,
            ArrivalKind::Beta => 5.0 / 7.0,
        }
    }

    /// The step reward as a pure function of the transition.
    pub fn reward(&self, state: f64, action: f64, next_state: f64) -> f64 {
        let c = self.cost_weight;
        1.0 - (c * (state - action).abs() + (1.0 - c) * (next_state - action).abs())
    }
}

impl Environment for AmbulanceEnv {
    fn horizon(&self) -> u32 {
        self.horizon
    }

    /// The initial position is drawn from the arrival distribution, which
    /// keeps the state distribution stationary from the first step.
    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_arrival(rng)
    }

    fn step<R: Rng + ?Sized>(&self, state: f64, action: f64, rng: &mut R) -> (f64, f64) {
        let next = self.sample_arrival(rng);
        (next, self.reward(state, action, next))
    }
}

/// One exact Beta(5, 2) variate (mean 5/7, variance 10/392).
pub fn sample_beta_5_2<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    static BETA: OnceLock<Beta<f64>> = OnceLock::new();
    BETA.get_or_init(|| Beta::new(5.0, 2.0).expect("valid Beta parameters"))
        .sample(rng)
}

/// Upper bound on the oil cumulative reward under the optimal policy:
/// one travel penalty from 0 to the deposit, then the peak reward each
/// remaining step, i.e. `H - c`.
pub fn max_reward_bound(horizon: u32, deposit: f64) -> f64 {
    f64::from(horizon) - deposit
}

/// Cumulative reward of one episode under uniformly random actions.
pub fn random_rollout<E: Environment, R: Rng + ?Sized>(env: &E, rng: &mut R) -> f64 {
    let mut state = env.reset(rng);
    let mut total = 0.0;
    for _ in 0..env.horizon() {
        let action: f64 = rng.random();
        let (next, reward) = env.step(state, action, rng);
        total += reward;
        state = next;
    }
    total
}

/// Reference policies for the ambulance problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeuristicKind {
    /// `a = x`: never relocate; optimal when only relocation is penalized.
    NoMovement,
    /// `a = mean(F)`: park at the arrival mean; optimal when only the
    /// travel-to-request cost is penalized.
    Mean,
}

/// Cumulative reward of one episode under a reference heuristic.
/// Heuristics are defined for the ambulance problem only.
pub fn heuristic_rollout<R: Rng + ?Sized>(
    kind: HeuristicKind,
    env: &BuiltEnv,
    rng: &mut R,
) -> Result<f64> {
    let BuiltEnv::Ambulance(amb) = env else {
        return Err(Error::HeuristicNeedsAmbulance);
    };
    let mut state = amb.reset(rng);
    let mut total = 0.0;
    for _ in 0..amb.horizon() {
        let action = match kind {
            HeuristicKind::NoMovement => state,
            HeuristicKind::Mean => amb.arrival_mean(),
        };
        let (next, reward) = amb.step(state, action, rng);
        total += reward;
        state = next;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Oil,
    Ambulance,
}

/// Declarative environment selection, as read from config files and flags.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub survey: SurveyKind,
    pub lambda: f64,
    pub arrivals: ArrivalKind,
    pub cost_weight: f64,
    pub horizon: u32,
}

impl EnvConfig {
    pub fn oil(survey: SurveyKind, lambda: f64, horizon: u32) -> Self {
        Self {
            kind: EnvKind::Oil,
            survey,
            lambda,
            arrivals: ArrivalKind::Uniform,
            cost_weight: 0.0,
            horizon,
        }
    }

    pub fn ambulance(arrivals: ArrivalKind, cost_weight: f64, horizon: u32) -> Self {
        Self {
            kind: EnvKind::Ambulance,
            survey: SurveyKind::Quadratic,
            lambda: 1.0,
            arrivals,
            cost_weight,
            horizon,
        }
    }

    pub fn build(&self) -> Result<BuiltEnv> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        match self.kind {
            EnvKind::Oil => {
                if self.lambda <= 0.0 {
                    return Err(Error::Config("lambda must be positive".into()));
                }
                Ok(BuiltEnv::Oil(OilEnv::new(
                    self.survey,
                    self.lambda,
                    self.horizon,
                )))
            }
            EnvKind::Ambulance => {
                if !(0.0..=1.0).contains(&self.cost_weight) {
                    return Err(Error::Config("cost_weight must lie in [0, 1]".into()));
                }
                Ok(BuiltEnv::Ambulance(AmbulanceEnv::new(
                    self.arrivals,
                    self.cost_weight,
                    self.horizon,
                )))
            }
        }
    }

    /// Short instance label used in file names and reports,
    /// e.g. `oil_quadratic_l50` or `ambulance_beta_c0.25`.
    pub fn label(&self) -> String {
        match self.kind {
            EnvKind::Oil => {
                let survey = match self.survey {
                    SurveyKind::Laplace => "laplace",
                    SurveyKind::Quadratic => "quadratic",
                };
                format!("oil_{survey}_l{}", crate::util::fmt_g12(self.lambda))
            }
            EnvKind::Ambulance => {
                let arrivals = match self.arrivals {
                    ArrivalKind::Uniform => "uniform",
                    ArrivalKind::Beta => "beta",
                };
                format!(
                    "ambulance_{arrivals}_c{}",
                    crate::util::fmt_g12(self.cost_weight)
                )
            }
        }
    }
}

/// A constructed environment of either kind.
#[derive(Clone, Copy, Debug)]
pub enum BuiltEnv {
    Oil(OilEnv),
    Ambulance(AmbulanceEnv),
}

impl Environment for BuiltEnv {
    fn horizon(&self) -> u32 {
        match self {
            BuiltEnv::Oil(e) => e.horizon(),
            BuiltEnv::Ambulance(e) => e.horizon(),
        }
    }

    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            BuiltEnv::Oil(e) => e.reset(rng),
            BuiltEnv::Ambulance(e) => e.reset(rng),
        }
    }

    fn step<R: Rng + ?Sized>(&self, state: f64, action: f64, rng: &mut R) -> (f64, f64) {
        match self {
            BuiltEnv::Oil(e) => e.step(state, action, rng),
            BuiltEnv::Ambulance(e) => e.step(state, action, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::stream_rng;

    fn rng(seed: u64) -> rand_chacha::ChaCha12Rng {
        stream_rng(seed, 99)
    }

    #[test]
    fn laplace_survey_values() {
        let env = OilEnv::new(SurveyKind::Laplace, 50.0, 5);
        assert_eq!(env.survey_value(env.deposit), 1.0);
        assert!((env.survey_value(env.deposit + 0.01) - 0.6065306597126334).abs() < 1e-12);
        let env = OilEnv::new(SurveyKind::Laplace, 1.0, 5);
        assert!((env.survey_value(0.0) - 0.47125313978902555).abs() < 1e-12);
    }

    #[test]
    fn quadratic_survey_values() {
        let env = OilEnv::new(SurveyKind::Quadratic, 50.0, 5);
        assert_eq!(env.survey_value(env.deposit), 1.0);
        assert!((env.survey_value(env.deposit - 0.01) - 0.995).abs() < 1e-12);
        // Far from the deposit the quadratic survey goes negative; clipping
        // happens in the reward, not here.
        assert!(env.survey_value(0.0) < 0.0);
    }

    #[test]
    fn oil_step_is_deterministic() {
        let env = OilEnv::new(SurveyKind::Quadratic, 1.0, 5);
        let mut r = rng(1);

        let (next, reward) = env.step(env.deposit, env.deposit, &mut r);
        assert_eq!(next, env.deposit);
        assert_eq!(reward, 1.0);

        let (next, reward) = env.step(0.0, 0.5, &mut r);
        assert_eq!(next, 0.5);
        assert!((reward - 0.4363144921979877).abs() < 1e-12);
        // Pure function: same inputs, same outputs.
        assert_eq!(env.step(0.0, 0.5, &mut r), (next, reward));

        let env = OilEnv::new(SurveyKind::Laplace, 50.0, 5);
        let (_, reward) = env.step(0.0, 0.0, &mut r);
        assert!((reward - 4.5995234619815374e-17).abs() < 1e-28);
    }

    #[test]
    fn oil_reset_is_zero() {
        let mut r = rng(2);
        for survey in [SurveyKind::Laplace, SurveyKind::Quadratic] {
            let env = OilEnv::new(survey, 10.0, 5);
            assert_eq!(env.reset(&mut r), 0.0);
            assert_eq!(env.reset(&mut r), 0.0);
        }
    }

    #[test]
    fn ambulance_reward_formula() {
        let env = AmbulanceEnv::new(ArrivalKind::Uniform, 0.25, 5);
        assert!((env.reward(0.2, 0.6, 0.7) - 0.825).abs() < 1e-15);

        let stay = AmbulanceEnv::new(ArrivalKind::Uniform, 1.0, 5);
        assert_eq!(stay.reward(0.37, 0.37, 0.9), 1.0);

        let go = AmbulanceEnv::new(ArrivalKind::Uniform, 0.0, 5);
        assert_eq!(go.reward(0.1, 0.8, 0.8), 1.0);
    }

    #[test]
    fn ambulance_step_and_reset_ranges() {
        let mut r = rng(3);
        for arrivals in [ArrivalKind::Uniform, ArrivalKind::Beta] {
            let env = AmbulanceEnv::new(arrivals, 0.25, 5);
            let mut state = env.reset(&mut r);
            assert!((0.0..=1.0).contains(&state));
            for _ in 0..200 {
                let action: f64 = r.random();
                let (next, reward) = env.step(state, action, &mut r);
                assert!((0.0..=1.0).contains(&next));
                assert!((0.0..=1.0).contains(&reward));
                state = next;
            }
        }
        // Reset is reproducible under a fixed seed.
        let a = AmbulanceEnv::new(ArrivalKind::Uniform, 0.0, 5).reset(&mut rng(7));
        let b = AmbulanceEnv::new(ArrivalKind::Uniform, 0.0, 5).reset(&mut rng(7));
        assert_eq!(a, b);
    }

    #[test]
    fn beta_sampler_moments() {
        let mut r = rng(4);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_beta_5_2(&mut r)).collect();
        assert!(draws.iter().all(|&x| x > 0.0 && x < 1.0));
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!((mean - 5.0 / 7.0).abs() < 0.01, "mean {mean}");
        assert!((var - 0.025510204081632654).abs() < 0.002, "var {var}");
    }

    #[test]
    fn beta_sampler_ks_test() {
        // Kolmogorov-Smirnov against the Beta(5,2) CDF at α = 0.01.
        let mut r = rng(5);
        let n = 10_000;
        let mut draws: Vec<f64> = (0..n).map(|_| sample_beta_5_2(&mut r)).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = |x: f64| statrs::function::beta::beta_reg(5.0, 2.0, x);
        let mut d: f64 = 0.0;
        for (i, &x) in draws.iter().enumerate() {
            let f = cdf(x);
            d = d.max((f - i as f64 / n as f64).abs());
            d = d.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        let critical = 1.62762 / (n as f64).sqrt();
        assert!(d < critical, "KS statistic {d} exceeds {critical}");
    }

    #[test]
    fn arrivals_independent_of_state_action() {
        // Two-sample chi-square over binned next states for two very
        // different (x, a) pairs; must not reject homogeneity at α = 0.01.
        let env = AmbulanceEnv::new(ArrivalKind::Beta, 0.25, 5);
        let mut r = rng(6);
        let n = 10_000;
        let bins = 10;
        let mut counts = [[0u32; 10]; 2];
        for (j, (x, a)) in [(0.1, 0.9), (0.8, 0.2)].into_iter().enumerate() {
            for _ in 0..n {
                let (next, _) = env.step(x, a, &mut r);
                let b = ((next * bins as f64) as usize).min(bins - 1);
                counts[j][b] += 1;
            }
        }
        let mut chi2 = 0.0;
        for b in 0..bins {
            let pooled = f64::from(counts[0][b] + counts[1][b]) / 2.0;
            if pooled == 0.0 {
                continue; // bin empty in both samples contributes nothing
            }
            for sample in &counts {
                let diff = f64::from(sample[b]) - pooled;
                chi2 += diff * diff / pooled;
            }
        }
        // χ²(0.99, df = 9) = 21.666.
        assert!(chi2 < 21.665994333461924, "chi-square {chi2} rejects");
    }

    #[test]
    fn heuristics() {
        let mut r = rng(8);
        let oil = EnvConfig::oil(SurveyKind::Quadratic, 1.0, 5).build().unwrap();
        assert!(matches!(
            heuristic_rollout(HeuristicKind::NoMovement, &oil, &mut r),
            Err(Error::HeuristicNeedsAmbulance)
        ));

        // No movement with c = 1 collects exactly H.
        let env = EnvConfig::ambulance(ArrivalKind::Uniform, 1.0, 5).build().unwrap();
        for _ in 0..20 {
            let total = heuristic_rollout(HeuristicKind::NoMovement, &env, &mut r).unwrap();
            assert_eq!(total, 5.0);
        }

        // Mean heuristic with c = 0: per-step reward 1 - E|x' - mean|.
        let env = EnvConfig::ambulance(ArrivalKind::Uniform, 0.0, 5).build().unwrap();
        let n = 20_000;
        let mean = (0..n)
            .map(|_| heuristic_rollout(HeuristicKind::Mean, &env, &mut r).unwrap())
            .sum::<f64>()
            / f64::from(n);
        assert!((mean - 3.75).abs() < 0.02, "uniform mean heuristic {mean}");

        // Beta(5,2): E|x' - 5/7| = 0.13009989 by quadrature of the density.
        let env = EnvConfig::ambulance(ArrivalKind::Beta, 0.0, 5).build().unwrap();
        let mean = (0..n)
            .map(|_| heuristic_rollout(HeuristicKind::Mean, &env, &mut r).unwrap())
            .sum::<f64>()
            / f64::from(n);
        assert!(
            (mean - 4.349500529158575).abs() < 0.02,
            "beta mean heuristic {mean}"
        );
    }

    #[test]
    fn random_rollouts_in_range_and_near_table_values() {
        let mut r = rng(9);
        let env = OilEnv::new(SurveyKind::Quadratic, 1.0, 5);
        let n = 20_000;
        let mut mean = 0.0;
        for _ in 0..n {
            let total = random_rollout(&env, &mut r);
            assert!((0.0..=5.0).contains(&total));
            mean += total;
        }
        mean /= f64::from(n);
        assert!((mean - 2.50).abs() < 0.15, "oil random mean {mean}");

        let env = AmbulanceEnv::new(ArrivalKind::Uniform, 1.0, 5);
        let mean = (0..n).map(|_| random_rollout(&env, &mut r)).sum::<f64>() / f64::from(n);
        assert!((mean - 3.46).abs() < 0.15, "ambulance random mean {mean}");
    }

    #[test]
    fn oil_reward_bound() {
        assert!((max_reward_bound(5, DEPOSIT_LOCATION) - 4.24764012244).abs() < 1e-9);
        assert!((max_reward_bound(50, DEPOSIT_LOCATION) - 49.24764012244).abs() < 1e-9);
        assert_eq!(max_reward_bound(5, 0.0), 5.0);
    }

    #[test]
    fn config_build_and_labels() {
        let cfg = EnvConfig::oil(SurveyKind::Quadratic, 50.0, 5);
        assert_eq!(cfg.label(), "oil_quadratic_l50");
        assert!(matches!(cfg.build().unwrap(), BuiltEnv::Oil(_)));

        let cfg = EnvConfig::ambulance(ArrivalKind::Beta, 0.25, 5);
        assert_eq!(cfg.label(), "ambulance_beta_c0.25");
        assert!(matches!(cfg.build().unwrap(), BuiltEnv::Ambulance(_)));

        let mut bad = EnvConfig::oil(SurveyKind::Laplace, 1.0, 5);
        bad.lambda = -2.0;
        assert!(bad.build().is_err());
        let mut bad = EnvConfig::ambulance(ArrivalKind::Uniform, 0.5, 5);
        bad.cost_weight = 1.5;
        assert!(bad.build().is_err());
    }
}
