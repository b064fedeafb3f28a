//! Direct simulation of the group surplus.
//!
//! Object `j` receives claims as a Poisson process of rate `λ` with
//! exponential sizes of mean `μ_j`. The group carries the share
//! `a_j = Σ_{i∈Q} A^i_j` of each object, so its deficit
//! `D(t) = Σ_j a_j (S_j(t) − c_j t) − U` jumps up at claims and drifts down
//! in between. Ruin can therefore only start at a claim epoch, and paths are
//! checked there. Truncating at a finite horizon makes every estimate here a
//! lower bound on the infinite-horizon probability.

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::model::{build_weights, AgentSubset, RiskParams, WeightMatrix};
use crate::netgen::{sample_graph, sample_types, BipartiteGraph, BlockModel};
use crate::rng::{network_stream, stream, Domain, Stream};
use crate::stats::{proportion, replicate_count, replicate_moments, EstimateWithCI};

pub const DEFAULT_HORIZON: f64 = 1e3;

/// Lane used to derive per-network path seeds in [`oracle_psi`].
const ORACLE_SEED_LANE: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct PathConfig {
    horizon: f64,
    replicates: usize,
    params: RiskParams,
    graph: BipartiteGraph,
    group: AgentSubset,
    weights: WeightMatrix,
    /// `(j, a_j)` for objects the group carries.
    active: Vec<(usize, f64)>,
    /// `Σ_j a_j c_j`, the rate at which the deficit drifts down.
    premium_rate: f64,
    total_reserve: f64,
}

impl PathConfig {
    pub fn new(
        params: RiskParams,
        graph: BipartiteGraph,
        group: AgentSubset,
        horizon: f64,
        replicates: usize,
    ) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("horizon must be finite and positive, got {horizon}")));
        }
        if replicates == 0 {
            return Err(Error::TooFewReplicates { min: 1, got: 0 });
        }
        if graph.agents() != params.agents() || graph.objects() != params.objects() {
            return Err(Error::DimensionMismatch(format!(
                "graph is {}x{}, parameters describe {}x{}",
                graph.agents(),
                graph.objects(),
                params.agents(),
                params.objects()
            )));
        }
        let total_reserve = params.total_reserve(&group);
        if total_reserve <= 0.0 {
            return Err(Error::ZeroReserve);
        }
        let weights = build_weights(&graph, &group, &params)?;
        let active: Vec<(usize, f64)> =
            weights.group_share(&group).into_iter().enumerate().filter(|&(_, a)| a > 0.0).collect();
        let premium_rate = active.iter().map(|&(j, a)| a * params.premium()[j]).sum();
        Ok(Self { horizon, replicates, params, graph, group, weights, active, premium_rate, total_reserve })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn params(&self) -> &RiskParams {
        &self.params
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn group(&self) -> &AgentSubset {
        &self.group
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    /// Same system observed up to a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.params.clone(), self.graph.clone(), self.group.clone(), horizon, self.replicates)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub ruined: bool,
    pub ruin_time: Option<f64>,
    /// Largest deficit seen at a claim epoch (or `−U` if there was none).
    pub peak_deficit: f64,
    /// Deficit at the horizon, or at the ruin epoch when the path stopped there.
    pub terminal_deficit: f64,
    pub claims: u64,
}

fn exponential(rng: &mut Stream, rate: f64) -> f64 {
    -(1.0 - rng.random::<f64>()).ln() / rate
}

struct Source {
    object: usize,
    share: f64,
    mean: f64,
    next: f64,
    rng: Stream,
}

/// Follows path `path` to the horizon, or to ruin if `stop_at_ruin`.
pub fn trace_path(cfg: &PathConfig, seed: u64, path: u64, stop_at_ruin: bool) -> PathOutcome {
    let lambda = cfg.params.lambda();
    let mut sources: Vec<Source> = cfg
        .active
        .iter()
        .map(|&(j, share)| {
            let mut rng = stream(seed, Domain::Claims, j as u64, path);
            let next = exponential(&mut rng, lambda);
            Source { object: j, share, mean: cfg.params.claim_mean()[j], next, rng }
        })
        .collect();

    let start = -cfg.total_reserve;
    let mut claimed = 0.0;
    let mut peak = start;
    let mut claims = 0;
    // earliest pending arrival; ties go to the lower object index
    while let Some(src) = sources.iter_mut().min_by(|a, b| a.next.total_cmp(&b.next).then(a.object.cmp(&b.object))) {
        let t = src.next;
        if t > cfg.horizon {
            break;
        }
        claimed += src.share * exponential(&mut src.rng, 1.0 / src.mean);
        src.next = t + exponential(&mut src.rng, lambda);
        claims += 1;
        let deficit = claimed - cfg.premium_rate * t + start;
        peak = peak.max(deficit);
        if deficit >= 0.0 && stop_at_ruin {
            return PathOutcome { ruined: true, ruin_time: Some(t), peak_deficit: peak, terminal_deficit: deficit, claims };
        }
    }
    let ruined = peak >= 0.0;
    PathOutcome {
        ruined,
        ruin_time: None,
        peak_deficit: peak,
        terminal_deficit: claimed - cfg.premium_rate * cfg.horizon + start,
        claims,
    }
}

/// Whether path `path` is ruined by the horizon.
pub fn simulate_ruin_path(cfg: &PathConfig, seed: u64, path: u64) -> bool {
    trace_path(cfg, seed, path, true).ruined
}

/// Fraction of the configured replicate paths that are ruined.
pub fn ruin_frequency(cfg: &PathConfig, seed: u64) -> EstimateWithCI {
    let n = cfg.replicates as u64;
    proportion(replicate_count(n, |b| simulate_ruin_path(cfg, seed, b)), n)
}

/// Nested estimate of `Ψ^Q(u)`: `outer` fresh networks, `inner` paths on each.
///
/// The standard error is that of the per-network ruin fractions, which
/// already contains the path-level noise.
pub fn oracle_psi(
    params: &RiskParams,
    model: &BlockModel,
    group: &AgentSubset,
    horizon: f64,
    outer: usize,
    inner: usize,
    seed: u64,
) -> Result<EstimateWithCI> {
    if outer < 2 {
        return Err(Error::TooFewReplicates { min: 2, got: outer });
    }
    if params.total_reserve(group) <= 0.0 {
        return Err(Error::ZeroReserve);
    }
    let (q, d) = (params.agents(), params.objects());
    // validate once so the per-network closure cannot fail
    PathConfig::new(params.clone(), BipartiteGraph::empty(q, d), group.clone(), horizon, inner)?;

    let moments = replicate_moments(outer as u64, |n| {
        let mut rng = network_stream(seed, n);
        let types = sample_types(model, q, d, &mut rng);
        let graph = sample_graph(model, &types, &mut rng);
        let cfg = PathConfig::new(params.clone(), graph, group.clone(), horizon, inner).expect("validated above");
        let path_seed = Stream::from_rng(&mut stream(seed, Domain::Claims, ORACLE_SEED_LANE, n)).random::<u64>();
        ruin_frequency(&cfg, path_seed).mean
    });
    Ok(moments.estimate())
}
