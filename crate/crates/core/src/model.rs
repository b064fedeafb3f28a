//! Risk parameters, safety loadings and proportional loss weights.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netgen::BipartiteGraph;

/// Slack allowed on the weight column-sum condition.
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-12;

/// Parameters of the `q`-agent, `d`-object exponential risk system.
///
/// Every object `j` carries a compound-Poisson claim process with intensity
/// `lambda`, exponential claims of mean `claim_mean[j]` and premium rate
/// `premium[j]`. Agent `i` holds initial reserve `reserve[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskParams {
    lambda: f64,
    premium: Vec<f64>,
    claim_mean: Vec<f64>,
    reserve: Vec<f64>,
}

impl RiskParams {
    pub fn new(lambda: f64, premium: Vec<f64>, claim_mean: Vec<f64>, reserve: Vec<f64>) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("claim intensity must be positive, got {lambda}")));
        }
        if premium.is_empty() {
            return Err(Error::invalid("at least one object is required"));
        }
        if reserve.is_empty() {
            return Err(Error::invalid("at least one agent is required"));
        }
        if premium.len() != claim_mean.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} premium rates but {} claim means",
                premium.len(),
                claim_mean.len()
            )));
        }
        if let Some((j, c)) = premium.iter().enumerate().find(|(_, c)| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::invalid(format!("premium rate c[{j}] = {c} must be positive")));
        }
        if let Some((j, m)) = claim_mean.iter().enumerate().find(|(_, m)| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::invalid(format!("claim mean mu[{j}] = {m} must be positive")));
        }
        if let Some((i, u)) = reserve.iter().enumerate().find(|(_, u)| !(u.is_finite() && **u >= 0.0)) {
            return Err(Error::invalid(format!("reserve u[{i}] = {u} must be nonnegative")));
        }
        Ok(Self { lambda, premium, claim_mean, reserve })
    }

    /// `q` agents and `d` objects sharing one claim mean, one premium and one reserve.
    pub fn uniform(lambda: f64, premium: f64, claim_mean: f64, reserve: f64, q: usize, d: usize) -> Result<Self> {
        Self::new(lambda, vec![premium; d], vec![claim_mean; d], vec![reserve; q])
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn premium(&self) -> &[f64] {
        &self.premium
    }
    pub fn claim_mean(&self) -> &[f64] {
        &self.claim_mean
    }
    pub fn reserve(&self) -> &[f64] {
        &self.reserve
    }
    pub fn agents(&self) -> usize {
        self.reserve.len()
    }
    pub fn objects(&self) -> usize {
        self.premium.len()
    }

    /// `Σ_{i∈Q} u^(i)`.
    pub fn total_reserve(&self, group: &AgentSubset) -> f64 {
        group.iter().map(|i| self.reserve[i]).sum()
    }

    /// Same system with a different reserve vector.
    pub fn with_reserves(&self, reserve: Vec<f64>) -> Result<Self> {
        Self::new(self.lambda, self.premium.clone(), self.claim_mean.clone(), reserve)
    }
}

/// Per-object safety loadings `ρ_j = λμ_j/c_j` and `ξ_j = 1/ρ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingVector {
    pub rho: Vec<f64>,
    pub xi: Vec<f64>,
}

pub fn compute_loadings(params: &RiskParams) -> LoadingVector {
    let (rho, xi) = params
        .premium
        .iter()
        .zip(&params.claim_mean)
        .map(|(&c, &mu)| (params.lambda * mu / c, c / (params.lambda * mu)))
        .unzip();
    LoadingVector { rho, xi }
}

/// Nonempty sorted set of agent indices (0-based internally).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgentSubset {
    indices: Vec<usize>,
}

impl AgentSubset {
    /// Builds a subset of `0..q`; duplicates and out-of-range indices are errors.
    pub fn new(mut indices: Vec<usize>, q: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("agent group must be nonempty"));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("agent group contains duplicates"));
        }
        if let Some(&last) = indices.last() {
            if last >= q {
                return Err(Error::invalid(format!("agent index {} out of range 1..={q}", last + 1)));
            }
        }
        Ok(Self { indices })
    }

    /// From 1-based agent labels.
    pub fn from_labels(labels: &[usize], q: usize) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::invalid("agent labels start at 1"));
        }
        Self::new(labels.iter().map(|l| l - 1).collect(), q)
    }

    /// The first `size` agents.
    pub fn prefix(size: usize, q: usize) -> Result<Self> {
        Self::new((0..size).collect(), q)
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

/// `r^Q = min_j μ_j / (q − |Q| + 1)`, the minimum taken over all objects.
pub fn proportional_r(params: &RiskParams, group: &AgentSubset) -> f64 {
    let min_mu = params.claim_mean.iter().copied().fold(f64::INFINITY, f64::min);
    min_mu / (params.agents() - group.size() + 1) as f64
}

/// Weighted adjacency `A^i_j = 1{i∼j} W^i_j` together with `r^Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    q: usize,
    d: usize,
    entries: Vec<f64>,
    r_q: f64,
}

impl WeightMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn r_q(&self) -> f64 {
        self.r_q
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.q).map(|i| self.get(i, j)).sum()
    }

    /// `a_j = Σ_{i∈Q} A^i_j`, the share of object `j` carried by the group.
    pub fn group_share(&self, group: &AgentSubset) -> Vec<f64> {
        (0..self.d).map(|j| group.iter().map(|i| self.get(i, j)).sum()).collect()
    }
}

/// Proportional weights with `r^Q` from [`proportional_r`].
pub fn build_weights(graph: &BipartiteGraph, group: &AgentSubset, params: &RiskParams) -> Result<WeightMatrix> {
    build_weights_with_r(graph, group, params, proportional_r(params, group))
}

/// Proportional weights for a caller-chosen `r^Q`; fails when a column sum
/// exceeds one.
pub fn build_weights_with_r(
    graph: &BipartiteGraph,
    group: &AgentSubset,
    params: &RiskParams,
    r_q: f64,
) -> Result<WeightMatrix> {
    let (q, d) = (graph.agents(), graph.objects());
    if q != params.agents() || d != params.objects() {
        return Err(Error::DimensionMismatch(format!(
            "graph is {q}x{d} but parameters describe {}x{}",
            params.agents(),
            params.objects()
        )));
    }
    if !(r_q.is_finite() && r_q > 0.0) {
        return Err(Error::invalid(format!("r^Q must be positive, got {r_q}")));
    }
    let mut entries = vec![0.0; q * d];
    for j in 0..d {
        let group_degree = group.iter().filter(|&i| graph.has_edge(i, j)).count();
        // 0/0 := 0: objects outside the group's reach carry no weight.
        if group_degree == 0 {
            continue;
        }
        let w = r_q / (group_degree as f64 * params.claim_mean[j]);
        let mut sum = 0.0;
        for i in 0..q {
            if graph.has_edge(i, j) {
                entries[i * d + j] = w;
                sum += w;
            }
        }
        if sum > 1.0 + COLUMN_SUM_TOLERANCE {
            return Err(Error::WeightViolation { column: j, sum });
        }
    }
    Ok(WeightMatrix { q, d, entries, r_q })
}

/// Classical Cramér–Lundberg ruin probability for exponential claims.
///
/// Returns 1 when `ρ = λμ/c ≥ 1`, otherwise `ρ · exp(−(c − λμ)u / (cμ))`.
pub fn classical_ruin(lambda: f64, claim_mean: f64, premium: f64, reserve: f64) -> f64 {
    let rho = lambda * claim_mean / premium;
    if rho >= 1.0 {
        return 1.0;
    }
    rho * (-(premium - lambda * claim_mean) * reserve / (premium * claim_mean)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn loadings_examples() {
        let p = RiskParams::new(1.0, vec![0.95, 1.0], vec![1.0, 1.0], vec![1.0]).unwrap();
        let l = compute_loadings(&p);
        assert!(close(l.rho[0], 1.0 / 0.95, 1e-15));
        assert!(close(l.xi[0], 0.95, 1e-15));
        assert_eq!(l.rho[1], 1.0);
        assert_eq!(l.xi[1], 1.0);

        let p = RiskParams::new(2.0, vec![1.05], vec![0.5], vec![1.0]).unwrap();
        let l = compute_loadings(&p);
        assert!(close(l.rho[0], 0.952_380_952_380_952_4, 1e-15));
        assert!(close(l.xi[0], 1.05, 1e-15));
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(RiskParams::new(0.0, vec![1.0], vec![1.0], vec![1.0]).is_err());
        assert!(RiskParams::new(1.0, vec![-1.0], vec![1.0], vec![1.0]).is_err());
        assert!(RiskParams::new(1.0, vec![1.0], vec![0.0], vec![1.0]).is_err());
        assert!(RiskParams::new(1.0, vec![1.0], vec![1.0], vec![-0.1]).is_err());
        assert!(matches!(
            RiskParams::new(1.0, vec![1.0, 1.0], vec![1.0], vec![1.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn subset_validation() {
        assert!(AgentSubset::new(vec![], 3).is_err());
        assert!(AgentSubset::new(vec![1, 1], 3).is_err());
        assert!(AgentSubset::new(vec![3], 3).is_err());
        let s = AgentSubset::from_labels(&[3, 1], 3).unwrap();
        assert_eq!(s.indices(), &[0, 2]);
        assert!(AgentSubset::from_labels(&[0], 3).is_err());
    }

    #[test]
    fn proportional_r_examples() {
        let p = RiskParams::uniform(1.0, 1.0, 1.0, 1.0, 10, 4).unwrap();
        assert_eq!(proportional_r(&p, &AgentSubset::prefix(1, 10).unwrap()), 0.1);
        assert_eq!(proportional_r(&p, &AgentSubset::prefix(10, 10).unwrap()), 1.0);
        let p = RiskParams::new(1.0, vec![1.0; 3], vec![2.0, 0.5, 1.0], vec![1.0; 5]).unwrap();
        assert_eq!(proportional_r(&p, &AgentSubset::prefix(2, 5).unwrap()), 0.125);
    }

    #[test]
    fn weights_examples() {
        // Two agents both on object 0, object 1 untouched.
        let g = BipartiteGraph::from_rows(&[vec![true, false], vec![true, false]]);
        let p = RiskParams::uniform(1.0, 1.0, 1.0, 1.0, 2, 2).unwrap();
        let q = AgentSubset::prefix(2, 2).unwrap();
        let w = build_weights(&g, &q, &p).unwrap();
        assert_eq!(w.r_q(), 1.0);
        assert_eq!(w.get(0, 0), 0.5);
        assert_eq!(w.get(1, 0), 0.5);
        assert_eq!(w.column_sum(0), 1.0);
        assert_eq!(w.column_sum(1), 0.0);

        let mut rows = vec![vec![false; 3]; 10];
        rows[0][1] = true;
        let g = BipartiteGraph::from_rows(&rows);
        let p = RiskParams::uniform(1.0, 1.0, 1.0, 1.0, 10, 3).unwrap();
        let w = build_weights(&g, &AgentSubset::prefix(1, 10).unwrap(), &p).unwrap();
        assert!(close(w.get(0, 1), 0.1, 1e-15));
        assert!(close(w.column_sum(1), 0.1, 1e-15));
    }

    #[test]
    fn outsiders_share_group_objects_only() {
        // Agent 1 is outside Q = {0}; it gets weight on object 0 (shared with Q)
        // but none on object 1, which Q does not reach.
        let g = BipartiteGraph::from_rows(&[vec![true, false], vec![true, true]]);
        let p = RiskParams::uniform(1.0, 1.0, 1.0, 1.0, 2, 2).unwrap();
        let w = build_weights(&g, &AgentSubset::prefix(1, 2).unwrap(), &p).unwrap();
        assert_eq!(w.r_q(), 0.5);
        assert_eq!(w.get(1, 0), 0.5);
        assert_eq!(w.get(1, 1), 0.0);
        assert_eq!(w.column_sum(0), 1.0);
    }

    #[test]
    fn oversized_custom_r_is_reported() {
        let g = BipartiteGraph::from_rows(&[vec![true], vec![true]]);
        let p = RiskParams::uniform(1.0, 1.0, 1.0, 1.0, 2, 1).unwrap();
        let q = AgentSubset::prefix(1, 2).unwrap();
        assert!(matches!(
            build_weights_with_r(&g, &q, &p, 0.9),
            Err(Error::WeightViolation { column: 0, .. })
        ));
    }

    #[test]
    fn classical_examples() {
        assert_eq!(classical_ruin(1.0, 1.0, 0.95, 1.0), 1.0);
        assert!(close(classical_ruin(1.0, 1.0, 1.05, 0.0), 1.0 / 1.05, 1e-15));
        assert!(close(classical_ruin(1.0, 1.0, 1.05, 1.0), 0.908_09, 1e-5));
    }

    proptest! {
        #[test]
        fn weights_satisfy_column_condition(
            rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 1..6), 1..6),
            mus in prop::collection::vec(0.1f64..5.0, 6),
            pick in prop::collection::vec(any::<bool>(), 6),
        ) {
            let d = rows[0].len();
            let rows: Vec<Vec<bool>> = rows.into_iter().map(|mut r| { r.resize(d, false); r }).collect();
            let q = rows.len();
            let mut members: Vec<usize> = (0..q).filter(|&i| pick[i]).collect();
            if members.is_empty() { members.push(0); }
            let group = AgentSubset::new(members, q).unwrap();
            let params = RiskParams::new(1.0, vec![1.0; d], mus[..d].to_vec(), vec![1.0; q]).unwrap();
            let g = BipartiteGraph::from_rows(&rows);
            let w = build_weights(&g, &group, &params).unwrap();
            for j in 0..d {
                let s = w.column_sum(j);
                prop_assert!((0.0..=1.0 + COLUMN_SUM_TOLERANCE).contains(&s));
                let reached = group.iter().any(|i| g.has_edge(i, j));
                for i in 0..q {
                    if w.get(i, j) > 0.0 {
                        prop_assert!(g.has_edge(i, j) && reached);
                    }
                }
            }
        }

        #[test]
        fn net_profit_sign_matches(lambda in 0.1f64..3.0, mu in 0.1f64..3.0, c in 0.1f64..3.0) {
            let p = RiskParams::new(lambda, vec![c], vec![mu], vec![0.0]).unwrap();
            let xi = compute_loadings(&p).xi[0];
            let lhs = xi - 1.0;
            let rhs = c - lambda * mu;
            prop_assert!(lhs.signum() == rhs.signum() || lhs.abs() < 1e-12);
        }

        #[test]
        fn classical_monotone(lambda in 0.1f64..2.0, mu in 0.1f64..2.0, c in 0.1f64..2.0,
                              u in 0.0f64..10.0, du in 0.0f64..5.0, dl in 0.0f64..1.0) {
            let base = classical_ruin(lambda, mu, c, u);
            prop_assert!(classical_ruin(lambda, mu, c, u + du) <= base + 1e-15);
            prop_assert!(classical_ruin(lambda + dl, mu, c, u) >= base - 1e-15);
            if lambda * mu / c >= 1.0 {
                prop_assert_eq!(base, 1.0);
            }
        }

        #[test]
        fn proportional_r_monotone(q in 1usize..20, extra in 0usize..5, size in 1usize..20) {
            let size = size.min(q);
            let p = RiskParams::uniform(1.0, 1.0, 1.0, 1.0, q, 2).unwrap();
            let p_big = RiskParams::uniform(1.0, 1.0, 1.0, 1.0, q + extra, 2).unwrap();
            let g = AgentSubset::prefix(size, q).unwrap();
            let g_big = AgentSubset::prefix(size, q + extra).unwrap();
            prop_assert!(proportional_r(&p_big, &g_big) <= proportional_r(&p, &g));
            if size < q {
                let g_next = AgentSubset::prefix(size + 1, q).unwrap();
                prop_assert!(proportional_r(&p, &g_next) >= proportional_r(&p, &g));
            }
        }
    }
}
