//! Exact sampling from STERGMs and synthetic public-goods-game panels.
//!
//! Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`). Game `g` of a
//! simulated panel uses the generator seeded with `seed_from_u64(seed)` on
//! stream `g`, so each game is reproducible on its own and games can be
//! simulated concurrently.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{
    dyad_count, reconstruct_target, AttributeTable, Decision, DyadIndex, Game, GraphError, Panel, SmallGraph,
    Snapshot, MAX_NODES,
};
use crate::likelihood::table::walk_space;
use crate::likelihood::{LikelihoodError, ThetaVector, DEFAULT_STATE_BUDGET};
use crate::stats::{change_statistic, ModelSpec, Side, TermKernel, TermSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulateError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("replayed decisions: {0}")]
    Replay(String),
    #[error(transparent)]
    Likelihood(#[from] LikelihoodError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Payoff bookkeeping for one round: every cooperator pays
/// `cooperate_cost_per_neighbor` per tie and each of its neighbours gains
/// `benefit_per_cooperating_neighbor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WealthRule {
    pub cooperate_cost_per_neighbor: i64,
    pub benefit_per_cooperating_neighbor: i64,
    pub initial_wealth: i64,
}

impl Default for WealthRule {
    fn default() -> Self {
        WealthRule {
            cooperate_cost_per_neighbor: 50,
            benefit_per_cooperating_neighbor: 100,
            initial_wealth: 500,
        }
    }
}

impl WealthRule {
    /// Wealth after one round of `decisions` on `graph`.
    pub fn apply(&self, wealth: &[i64], decisions: &[Decision], graph: &SmallGraph) -> Vec<i64> {
        let mut out = wealth.to_vec();
        let adj = graph.adjacency();
        for (i, d) in decisions.iter().enumerate() {
            if *d != Decision::Cooperate {
                continue;
            }
            let deg = adj[i].count_ones() as i64;
            out[i] -= self.cooperate_cost_per_neighbor * deg;
            for (j, w) in out.iter_mut().enumerate() {
                if adj[i] & (1 << j) != 0 {
                    *w += self.benefit_per_cooperating_neighbor;
                }
            }
        }
        out
    }
}

/// Where each round's decisions come from.
#[derive(Debug, Clone, PartialEq)]
pub enum AttributeSource {
    /// Given trajectories, indexed `[game][time][node]` with `transitions + 1`
    /// time points per game (time 0 first).
    Replay(Vec<Vec<Vec<Decision>>>),
    /// Each node cooperates independently with this probability each round,
    /// otherwise defects. Time 0 records no decision.
    BernoulliRule { p_cooperate: f64 },
    /// Every node makes the same decision at every time.
    Constant(Decision),
}

impl AttributeSource {
    /// Replays the decisions recorded in an observed panel.
    pub fn replay_from_panel(panel: &Panel) -> Self {
        AttributeSource::Replay(
            panel
                .games()
                .iter()
                .map(|g| g.snapshots().iter().map(|s| s.attrs.decision().to_vec()).collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub initial_ties: usize,
    pub transitions: usize,
    pub games: usize,
    pub seed: u64,
    pub theta: ThetaVector,
    pub spec: ModelSpec,
    pub attribute_source: AttributeSource,
}

impl SimConfig {
    /// Six players, five initial ties, seven transitions and twenty games,
    /// with decisions drawn by a fair coin.
    pub fn new(spec: ModelSpec, theta: ThetaVector) -> Self {
        SimConfig {
            n: 6,
            initial_ties: 5,
            transitions: 7,
            games: 20,
            seed: 0,
            theta,
            spec,
            attribute_source: AttributeSource::BernoulliRule { p_cooperate: 0.5 },
        }
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        let bad = |m: String| Err(SimulateError::InvalidConfig(m));
        if !(2..=MAX_NODES).contains(&self.n) {
            return bad(format!("n must be between 2 and {MAX_NODES}, found {}", self.n));
        }
        if self.initial_ties > dyad_count(self.n) {
            return bad(format!(
                "{} initial ties exceed the {} dyads of a {}-node graph",
                self.initial_ties,
                dyad_count(self.n),
                self.n
            ));
        }
        if self.games == 0 {
            return bad("at least one game is required".into());
        }
        if self.transitions == 0 {
            return bad("at least one transition is required".into());
        }
        self.theta.validate(&self.spec)?;
        match &self.attribute_source {
            AttributeSource::BernoulliRule { p_cooperate } if !(0.0..=1.0).contains(p_cooperate) => {
                return bad(format!("cooperation probability {p_cooperate} is outside [0, 1]"));
            }
            AttributeSource::Replay(games) => {
                if games.len() != self.games {
                    return Err(SimulateError::Replay(format!(
                        "{} trajectories for {} games",
                        games.len(),
                        self.games
                    )));
                }
                for (g, times) in games.iter().enumerate() {
                    if times.len() != self.transitions + 1 {
                        return Err(SimulateError::Replay(format!(
                            "game {g} has {} time points, expected {}",
                            times.len(),
                            self.transitions + 1
                        )));
                    }
                    if let Some(t) = times.iter().position(|d| d.len() != self.n) {
                        return Err(SimulateError::Replay(format!(
                            "game {g}, time {t}: {} decisions for {} nodes",
                            times[t].len(),
                            self.n
                        )));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// How a side sampler draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMethod {
    /// Independent per-dyad draws when every term is dyadic-independent,
    /// enumeration otherwise.
    Auto,
    /// Independent logistic draw per free dyad. Only valid for
    /// dyadic-independent terms.
    Dyadic,
    /// Full enumeration of the space and inversion of the cumulative sum.
    Enumerate,
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One exact draw from the formation or persistence distribution.
pub fn sample_side<R: Rng + ?Sized>(
    side: Side,
    method: SampleMethod,
    theta: &[f64],
    y_prev: &SmallGraph,
    attrs: &AttributeTable,
    terms: &[TermSpec],
    rng: &mut R,
) -> Result<SmallGraph, SimulateError> {
    if theta.len() != terms.len() {
        return Err(LikelihoodError::ThetaLength {
            expected: terms.len(),
            found: theta.len(),
        }
        .into());
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(LikelihoodError::NonFiniteTheta.into());
    }
    let dyadic = terms.iter().all(TermSpec::is_dyadic_independent);
    let method = match method {
        SampleMethod::Auto if dyadic => SampleMethod::Dyadic,
        SampleMethod::Auto => SampleMethod::Enumerate,
        SampleMethod::Dyadic if !dyadic => {
            let t = terms.iter().find(|t| !t.is_dyadic_independent()).unwrap();
            return Err(LikelihoodError::NotDyadicIndependent(*t).into());
        }
        m => m,
    };
    let n = y_prev.n();
    match method {
        SampleMethod::Dyadic => {
            let mut g = *y_prev;
            for k in 0..y_prev.dyad_count() {
                let d = DyadIndex::from_linear(k, n)?;
                let held = y_prev.has_dyad(d);
                if held != (side == Side::Persistence) {
                    continue;
                }
                let mut eta = 0.0;
                for (term, c) in terms.iter().zip(theta) {
                    eta += c * change_statistic(term, y_prev, d, attrs).map_err(LikelihoodError::from)?;
                }
                let on = rng.random::<f64>() < logistic(eta);
                g = if on { g.with_dyad(d) } else { g.without_dyad(d) };
            }
            Ok(g)
        }
        _ => {
            let kernel = TermKernel::new(terms, n, attrs).map_err(LikelihoodError::from)?;
            let coef: Vec<f64> = kernel.scales().iter().zip(theta).map(|(s, t)| s * t).collect();
            let mut masks = Vec::new();
            let mut etas = Vec::new();
            walk_space(side, y_prev, &kernel, DEFAULT_STATE_BUDGET, |mask, counts| {
                masks.push(mask);
                etas.push(counts.iter().zip(&coef).map(|(&c, w)| c as f64 * w).sum::<f64>());
            })?;
            let max = etas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut cum = Vec::with_capacity(etas.len());
            let mut total = 0.0;
            for e in &etas {
                total += (e - max).exp();
                cum.push(total);
            }
            let u = rng.random::<f64>() * total;
            let idx = cum.partition_point(|&c| c <= u).min(masks.len() - 1);
            Ok(SmallGraph::from_mask(n, masks[idx])?)
        }
    }
}

/// Exact draw of the formation network `y+ ⊇ y_prev`.
pub fn sample_formation<R: Rng + ?Sized>(
    theta_plus: &[f64],
    y_prev: &SmallGraph,
    attrs: &AttributeTable,
    terms: &[TermSpec],
    rng: &mut R,
) -> Result<SmallGraph, SimulateError> {
    sample_side(Side::Formation, SampleMethod::Auto, theta_plus, y_prev, attrs, terms, rng)
}

/// Exact draw of the persistence network `y- ⊆ y_prev`.
pub fn sample_persistence<R: Rng + ?Sized>(
    theta_minus: &[f64],
    y_prev: &SmallGraph,
    attrs: &AttributeTable,
    terms: &[TermSpec],
    rng: &mut R,
) -> Result<SmallGraph, SimulateError> {
    sample_side(Side::Persistence, SampleMethod::Auto, theta_minus, y_prev, attrs, terms, rng)
}

/// Draws `y+` then `y-` independently and combines them into the next network.
pub fn sample_transition<R: Rng + ?Sized>(
    theta: &ThetaVector,
    y_prev: &SmallGraph,
    attrs: &AttributeTable,
    spec: &ModelSpec,
    rng: &mut R,
) -> Result<SmallGraph, SimulateError> {
    theta.validate(spec)?;
    let plus = sample_formation(&theta.formation, y_prev, attrs, &spec.formation, rng)?;
    let minus = sample_persistence(&theta.persistence, y_prev, attrs, &spec.persistence, rng)?;
    Ok(reconstruct_target(&plus, &minus, y_prev)?)
}

/// The generator used for game `game` of a panel simulated with `seed`.
pub fn game_rng(seed: u64, game: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(game as u64);
    rng
}

/// Uniform graph with exactly `m` edges.
pub fn random_graph_with_edges<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<SmallGraph, GraphError> {
    let d = dyad_count(n);
    let mask = sample(rng, d, m).iter().fold(0u64, |acc, k| acc | (1u64 << k));
    SmallGraph::from_mask(n, mask)
}

fn simulate_game(config: &SimConfig, rule: &WealthRule, g: usize) -> Result<Game, SimulateError> {
    let n = config.n;
    let mut rng = game_rng(config.seed, g);
    let mut graph = random_graph_with_edges(n, config.initial_ties, &mut rng)?;
    let decisions_at = |t: usize, rng: &mut ChaCha20Rng| -> Vec<Decision> {
        match &config.attribute_source {
            AttributeSource::Replay(games) => games[g][t].clone(),
            AttributeSource::Constant(d) => vec![*d; n],
            AttributeSource::BernoulliRule { .. } if t == 0 => vec![Decision::None; n],
            AttributeSource::BernoulliRule { p_cooperate } => (0..n)
                .map(|_| {
                    if rng.random::<f64>() < *p_cooperate {
                        Decision::Cooperate
                    } else {
                        Decision::Defect
                    }
                })
                .collect(),
        }
    };
    let mut wealth = vec![rule.initial_wealth; n];
    let mut snaps = vec![Snapshot {
        t: 0,
        graph,
        attrs: AttributeTable::new(decisions_at(0, &mut rng), wealth.clone())?,
    }];
    for t in 1..=config.transitions {
        let decisions = decisions_at(t, &mut rng);
        wealth = rule.apply(&wealth, &decisions, &graph);
        let attrs = AttributeTable::new(decisions, wealth.clone())?;
        graph = sample_transition(&config.theta, &graph, &attrs, &config.spec, &mut rng)?;
        snaps.push(Snapshot {
            t: t as i64,
            graph,
            attrs,
        });
    }
    Ok(Game::new(format!("sim-{g:04}"), snaps)?)
}

/// Simulates `config.games` independent games. In each round the decisions
/// are drawn first, payoffs are settled on the current ties, and then the
/// network moves to its next state under the round's attributes.
pub fn simulate_panel(config: &SimConfig, wealth_rule: &WealthRule) -> Result<Panel, SimulateError> {
    config.validate()?;
    let games = (0..config.games)
        .into_par_iter()
        .map(|g| simulate_game(config, wealth_rule, g))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Panel::new(games))
}
