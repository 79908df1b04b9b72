//! Single-partition adaptive Q-learning.
//!
//! The trainer keeps one state-action partition shared across all time
//! steps and two copies of it: the best-performing partition found so far
//! and a working copy that the current episode modifies. Exploration mixes
//! an upper-confidence bonus inside the Q update with Boltzmann sampling
//! over the relevant balls, driven by a cyclic temperature schedule: the
//! temperature rises multiplicatively while performance stagnates and cold
//! restarts at the minimum whenever a better agent is found. If the working
//! partition accumulates splits without improving, it is thrown away and
//! retraining resumes from the best agent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::partition::{BallId, PartitionTree};
use crate::util::{stream_rng, EVAL_STREAM, TRAIN_STREAM};

pub const DEFAULT_TAU_MIN: f64 = 0.01;
pub const DEFAULT_TAU_MAX: f64 = 10.0;
pub const DEFAULT_HEAT_FACTOR: f64 = 2.0;
pub const DEFAULT_HEAT_DECAY: f64 = 0.8;
/// Splits tolerated without improvement before the agent is reset.
pub const DEFAULT_RESET_SPLITS: u32 = 2;

/// Parameters of one training run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of training iterations (episodes), `K`.
    pub episodes: u32,
    /// Steps per episode, `H`.
    pub horizon: u32,
    /// Rollouts per evaluation, `N`.
    pub eval_rollouts: u32,
    /// Scaling of the confidence bonus, `ξ`.
    pub scaling: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Initial temperature heating factor, `u > 1`.
    pub heat_factor: f64,
    /// Exponent applied to the heating factor on improvement, `d ∈ (0, 1)`.
    pub heat_decay: f64,
    /// Reset threshold on splits accumulated without improvement.
    pub reset_splits: u32,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(episodes: u32, horizon: u32, eval_rollouts: u32, scaling: f64, seed: u64) -> Self {
        assert!(episodes >= 1 && horizon >= 1 && eval_rollouts >= 1);
        assert!(scaling >= 0.0);
        Self {
            episodes,
            horizon,
            eval_rollouts,
            scaling,
            tau_min: DEFAULT_TAU_MIN,
            tau_max: DEFAULT_TAU_MAX,
            heat_factor: DEFAULT_HEAT_FACTOR,
            heat_decay: DEFAULT_HEAT_DECAY,
            reset_splits: DEFAULT_RESET_SPLITS,
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_scaling(mut self, scaling: f64) -> Self {
        self.scaling = scaling;
        self
    }
}

/// Learning rate after the `v`-th visit: `(H + 1) / (H + v)`.
pub fn learning_rate(visit: u32, horizon: u32) -> f64 {
    debug_assert!(visit >= 1);
    f64::from(horizon + 1) / f64::from(horizon + visit)
}

/// Confidence bonus after the `v`-th visit: `ξ / √v`.
pub fn bonus(scaling: f64, visit: u32) -> f64 {
    debug_assert!(visit >= 1);
    scaling / f64::from(visit).sqrt()
}

/// In-place Q update toward `reward + next_value + bonus`:
/// `Q ← (1 - α)Q + α(r + V̂(x') + b)`.
pub fn q_update(
    tree: &mut PartitionTree,
    ball: BallId,
    reward: f64,
    next_value: f64,
    alpha: f64,
    bonus: f64,
) {
    let old = tree.q_estimate(ball);
    tree.set_q_estimate(ball, (1.0 - alpha) * old + alpha * (reward + next_value + bonus));
}

/// The canonical action of a ball, played during evaluation rollouts: its
/// action-coordinate center.
pub fn action_from_ball(tree: &PartitionTree, ball: BallId) -> f64 {
    tree.center_action(ball)
}

/// A training-time action for a selected ball: uniform over the ball's
/// action interval. Any such action is consistent with the arm choice, and
/// the dispersion makes a coarse ball's Q estimate reflect the quality of
/// its whole action range, which is what pushes useful regions to split.
pub fn sample_action<R: Rng + ?Sized>(tree: &PartitionTree, ball: BallId, rng: &mut R) -> f64 {
    let center = tree.center_action(ball);
    let radius = tree.radius(ball);
    center + radius * (2.0 * rng.random::<f64>() - 1.0)
}

/// Draws one ball with probability proportional to `exp(Q_norm / τ)`.
///
/// Q values are first divided by their maximum when it is positive (the
/// usual overflow guard, which also makes the temperature scale-free); the
/// softmax itself is evaluated in shifted form, which leaves the
/// distribution unchanged.
pub fn boltzmann_sample<R: Rng + ?Sized>(
    tree: &PartitionTree,
    balls: &[BallId],
    tau: f64,
    rng: &mut R,
) -> BallId {
    assert!(!balls.is_empty(), "cannot sample from an empty ball list");
    assert!(tau > 0.0, "temperature must be positive");

    let max_q = balls
        .iter()
        .map(|&b| tree.q_estimate(b))
        .fold(f64::NEG_INFINITY, f64::max);
    let denom = if max_q > 0.0 { max_q } else { 1.0 };
    let top = max_q / denom;

    let weight = |b: BallId| ((tree.q_estimate(b) / denom - top) / tau).exp();
    let total: f64 = balls.iter().map(|&b| weight(b)).sum();
    let target = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    for &b in balls {
        cumulative += weight(b);
        if cumulative >= target {
            return b;
        }
    }
    *balls.last().unwrap()
}

/// One greedy episode; returns the cumulative reward.
pub fn rollout<E: Environment, R: Rng + ?Sized>(
    tree: &PartitionTree,
    env: &E,
    horizon: u32,
    rng: &mut R,
) -> f64 {
    let mut state = env.reset(rng);
    let mut total = 0.0;
    for _ in 0..horizon {
        let selected = tree.select_greedy(state);
        let (next, reward) = env.step(state, action_from_ball(tree, selected), rng);
        total += reward;
        state = next;
    }
    total
}

/// Mean cumulative reward over `rollouts` greedy episodes.
pub fn evaluate_agent<E: Environment, R: Rng + ?Sized>(
    tree: &PartitionTree,
    env: &E,
    horizon: u32,
    rollouts: u32,
    rng: &mut R,
) -> f64 {
    assert!(rollouts >= 1);
    let total: f64 = (0..rollouts).map(|_| rollout(tree, env, horizon, rng)).sum();
    total / f64::from(rollouts)
}

/// The trainer state: best and working partitions plus the temperature
/// schedule.
#[derive(Clone, Debug)]
pub struct SpaqlAgent {
    best: PartitionTree,
    working: PartitionTree,
    temperature: f64,
    tau_min: f64,
    tau_max: f64,
    heat_factor: f64,
    heat_decay: f64,
    best_performance: f64,
    splits_since_improvement: u32,
    reset_splits: u32,
    scaling: f64,
    horizon: u32,
    relevant: Vec<BallId>,
}

impl SpaqlAgent {
    /// Both partitions start as a single ball with the optimistic estimate
    /// `Q = H`; the temperature starts at its minimum.
    pub fn new(cfg: &TrainConfig) -> Self {
        let tree = PartitionTree::new(f64::from(cfg.horizon));
        Self {
            best: tree.clone(),
            working: tree,
            temperature: cfg.tau_min,
            tau_min: cfg.tau_min,
            tau_max: cfg.tau_max,
            heat_factor: cfg.heat_factor,
            heat_decay: cfg.heat_decay,
            best_performance: f64::NEG_INFINITY,
            splits_since_improvement: 0,
            reset_splits: cfg.reset_splits,
            scaling: cfg.scaling,
            horizon: cfg.horizon,
            relevant: Vec::new(),
        }
    }

    pub fn best(&self) -> &PartitionTree {
        &self.best
    }

    pub fn working(&self) -> &PartitionTree {
        &self.working
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn heat_factor(&self) -> f64 {
        self.heat_factor
    }

    pub fn best_performance(&self) -> f64 {
        self.best_performance
    }

    pub fn splits_since_improvement(&self) -> u32 {
        self.splits_since_improvement
    }

    /// Plays one training episode on the working partition and returns the
    /// number of splits performed. Per step: Boltzmann-sample a relevant
    /// ball, play its center action, bump its visit count, move its Q
    /// toward `r + V̂(x') + b`, and split it once its visit threshold is
    /// reached.
    pub fn train_episode<E: Environment, R: Rng + ?Sized>(
        &mut self,
        env: &E,
        rng: &mut R,
    ) -> u32 {
        let mut state = env.reset(rng);
        let mut splits = 0;
        for _ in 0..self.horizon {
            let (working, relevant) = (&self.working, &mut self.relevant);
            relevant.clear();
            working.relevant_balls_into(state, relevant);
            let selected = boltzmann_sample(working, relevant, self.temperature, rng);

            let action = sample_action(&self.working, selected, rng);
            let (next, reward) = env.step(state, action, rng);

            let visit = self.working.record_visit(selected);
            let alpha = learning_rate(visit, self.horizon);
            let b = bonus(self.scaling, visit);
            // The value of the next state uses the pre-update estimates.
            let next_value = self.working.value_estimate(next, self.horizon);
            q_update(&mut self.working, selected, reward, next_value, alpha, b);

            if self.working.should_split(selected) {
                self.working.split_ball(selected);
                splits += 1;
            }
            state = next;
        }
        splits
    }

    /// Applies the post-episode schedule. On improvement the working
    /// partition becomes the new best, the temperature cold-restarts, and
    /// the heating factor decays (`u ← u^d`). Otherwise the temperature
    /// heats up (clipped at the maximum) and, once enough splits have
    /// accumulated without improvement, the working partition is reset to
    /// the best one.
    pub fn temperature_step(&mut self, improved: bool, splits_this_episode: u32) {
        if improved {
            self.best = self.working.clone();
            self.temperature = self.tau_min;
            self.heat_factor = self.heat_factor.powf(self.heat_decay);
            self.splits_since_improvement = 0;
        } else {
            self.temperature = (self.heat_factor * self.temperature).min(self.tau_max);
            self.splits_since_improvement += splits_this_episode;
            if self.splits_since_improvement >= self.reset_splits {
                self.working = self.best.clone();
                self.temperature = self.tau_min;
                self.splits_since_improvement = 0;
            }
        }
    }

    /// Records an evaluation of the working partition and applies the
    /// schedule. Improvement means strictly beating the best performance.
    pub fn finish_iteration(&mut self, performance: f64, splits_this_episode: u32) -> bool {
        let improved = performance > self.best_performance;
        if improved {
            self.best_performance = performance;
        }
        self.temperature_step(improved, splits_this_episode);
        improved
    }

    fn record_initial_evaluation(&mut self, performance: f64) {
        self.best_performance = performance;
    }
}

/// Per-iteration traces of one training run. All vectors have `K + 1`
/// entries: the evaluation before training plus one per iteration.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TrainingLog {
    /// Evaluation of the partition being trained, per iteration.
    pub rewards: Vec<f64>,
    /// The agent's reported performance: best-so-far for this trainer.
    pub performance: Vec<f64>,
    /// Arm count of the partition being trained.
    pub arms: Vec<u32>,
    /// Temperature at the end of each iteration (empty for trainers
    /// without a temperature schedule).
    pub temperatures: Vec<f64>,
}

impl TrainingLog {
    fn with_capacity(n: usize) -> Self {
        Self {
            rewards: Vec::with_capacity(n),
            performance: Vec::with_capacity(n),
            arms: Vec::with_capacity(n),
            temperatures: Vec::with_capacity(n),
        }
    }
}

/// Result of one SPAQL training run.
#[derive(Clone, Debug)]
pub struct SpaqlRun {
    pub log: TrainingLog,
    /// The best partition found (the returned agent).
    pub best: PartitionTree,
    pub best_performance: f64,
}

/// Trains one agent. Deterministic: the same environment, config, and seed
/// produce a bit-identical run.
pub fn train<E: Environment>(env: &E, cfg: &TrainConfig) -> SpaqlRun {
    train_observed(env, cfg, |_, _| {})
}

/// [`train`], invoking `observer(iteration, agent)` after the initial
/// evaluation (iteration 0) and after each training iteration.
pub fn train_observed<E, F>(env: &E, cfg: &TrainConfig, mut observer: F) -> SpaqlRun
where
    E: Environment,
    F: FnMut(u32, &SpaqlAgent),
{
    assert_eq!(
        cfg.horizon,
        env.horizon(),
        "config and environment horizons must agree"
    );
    let mut train_rng = stream_rng(cfg.seed, TRAIN_STREAM);
    let mut eval_rng = stream_rng(cfg.seed, EVAL_STREAM);

    let mut agent = SpaqlAgent::new(cfg);
    let mut log = TrainingLog::with_capacity(cfg.episodes as usize + 1);

    // The pre-training evaluation seeds the best-performance record.
    let initial = evaluate_agent(&agent.working, env, cfg.horizon, cfg.eval_rollouts, &mut eval_rng);
    agent.record_initial_evaluation(initial);
    log.rewards.push(initial);
    log.performance.push(initial);
    log.arms.push(agent.working.num_arms());
    log.temperatures.push(agent.temperature);
    observer(0, &agent);

    for iteration in 1..=cfg.episodes {
        let splits = agent.train_episode(env, &mut train_rng);
        let perf = evaluate_agent(&agent.working, env, cfg.horizon, cfg.eval_rollouts, &mut eval_rng);
        agent.finish_iteration(perf, splits);
        log.rewards.push(perf);
        log.performance.push(agent.best_performance);
        log.arms.push(agent.working.num_arms());
        log.temperatures.push(agent.temperature);
        observer(iteration, &agent);
    }

    SpaqlRun {
        log,
        best_performance: agent.best_performance,
        best: agent.best,
    }
}
