//! The four subcommands as library functions returning reports.

use serde::Serialize;

use super::config::{ApproxChoice, ExperimentConfig, DEFAULT_INNER_PATHS, DEFAULT_NS_GRID, DEFAULT_OUTER_NETWORKS, DEFAULT_REPLICATES, DEFAULT_SAMPLED_CONFIGS};
use super::output::{csv_string, fmt_g, fmt_opt, render_svg, Panel, PlotPoint};
use super::shape::{classify_shape, Shape};
use crate::approx::{mixture_probability, ApproxMode, ApproxResult};
use crate::error::{Error, Result};
use crate::model::{AgentSubset, RiskParams};
use crate::netgen::BlockModel;
use crate::pathsim::oracle_psi;
use crate::ruin::{estimate_psi_with, estimate_tail_with};

/// Largest `q·d` the path oracle accepts.
pub const ORACLE_MAX_CELLS: usize = 100;

/// A config together with the seed and replicate count actually used.
#[derive(Debug, Clone)]
pub struct Settings {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub replicates: usize,
}

impl Settings {
    pub fn resolve(config: ExperimentConfig, seed_flag: Option<u64>, replicates_flag: Option<usize>) -> Result<Self> {
        let seed = super::config::resolve_seed(seed_flag, config.seed)?;
        let replicates = replicates_flag.or(config.replicates).unwrap_or(DEFAULT_REPLICATES);
        Ok(Self { config, seed, replicates })
    }

    fn group_or_all(&self) -> Result<AgentSubset> {
        match self.config.group()? {
            Some(g) => Ok(g),
            None => AgentSubset::prefix(self.config.q, self.config.q),
        }
    }
}

/// Objects whose premium is below the expected claim rate.
fn underpriced(params: &RiskParams) -> usize {
    params.premium().iter().zip(params.claim_mean()).filter(|(&c, &mu)| c < params.lambda() * mu).count()
}

fn approx_for(cfg: &ExperimentConfig, params: &RiskParams, model: &BlockModel, size: usize, seed: u64) -> Result<ApproxResult> {
    match mixture_probability(params, model, size, cfg.approx_mode(model), seed) {
        Err(Error::NotEnumerable(_)) if cfg.approx == ApproxChoice::Auto => {
            let configs = cfg.approx_configs.unwrap_or(DEFAULT_SAMPLED_CONFIGS);
            mixture_probability(params, model, size, ApproxMode::Sampled { configs }, seed)
        }
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub qsize: usize,
    pub ns: usize,
    pub psi_hat: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub tail_hat: f64,
    pub tail_stderr: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl EstimateReport {
    pub fn to_csv(&self) -> Result<String> {
        csv_string(
            None,
            &["qsize", "ns", "psi_hat", "stderr", "ci_lo", "ci_hi", "tail_hat", "tail_stderr", "replicates", "seed"],
            &[vec![
                self.qsize.to_string(),
                self.ns.to_string(),
                fmt_g(self.psi_hat),
                fmt_g(self.stderr),
                fmt_g(self.ci_lo),
                fmt_g(self.ci_hi),
                fmt_g(self.tail_hat),
                fmt_g(self.tail_stderr),
                self.replicates.to_string(),
                self.seed.to_string(),
            ]],
        )
    }
}

pub fn cmd_estimate(s: &Settings) -> Result<EstimateReport> {
    let cfg = &s.config;
    let params = cfg.params(None)?;
    let model = cfg.model()?;
    let group = s.group_or_all()?;
    let psi = estimate_psi_with(&params, &model, &group, s.replicates, s.seed, cfg.sampler)?;
    let tail = estimate_tail_with(&params, &model, &group, s.replicates, s.seed, cfg.sampler)?;
    Ok(EstimateReport {
        qsize: group.size(),
        ns: cfg.scheme_ns().unwrap_or_else(|| underpriced(&params)),
        psi_hat: psi.mean,
        stderr: psi.stderr,
        ci_lo: (psi.mean - 2.0 * psi.stderr).max(0.0),
        ci_hi: (psi.mean + 2.0 * psi.stderr).min(1.0),
        tail_hat: tail.mean,
        tail_stderr: tail.stderr,
        replicates: s.replicates,
        seed: s.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub qsize: usize,
    pub ns: usize,
    pub psi_hat: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `None` when `psi_hat = 0`.
    pub log10_psi: Option<f64>,
    pub tail_hat: f64,
    pub approx_prob: f64,
    pub stein_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelShape {
    pub ns: usize,
    pub shape: Option<Shape>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub replicates: usize,
    pub rows: Vec<SweepRow>,
    pub shapes: Vec<PanelShape>,
}

pub const SWEEP_COMMENT: &str = "log10_psi is the base-10 logarithm of psi_hat; empty when psi_hat = 0";

impl SweepReport {
    pub fn to_csv(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.qsize.to_string(),
                    r.ns.to_string(),
                    fmt_g(r.psi_hat),
                    fmt_g(r.stderr),
                    fmt_g(r.ci_lo),
                    fmt_g(r.ci_hi),
                    fmt_opt(r.log10_psi),
                    fmt_g(r.tail_hat),
                    fmt_g(r.approx_prob),
                    fmt_g(r.stein_bound),
                ]
            })
            .collect();
        csv_string(
            Some(SWEEP_COMMENT),
            &["qsize", "ns", "psi_hat", "stderr", "ci_lo", "ci_hi", "log10_psi", "tail_hat", "approx_prob", "stein_bound"],
            &rows,
        )
    }

    pub fn panel_rows(&self, ns: usize) -> Vec<SweepRow> {
        self.rows.iter().filter(|r| r.ns == ns).cloned().collect()
    }

    pub fn to_svg(&self) -> String {
        let panels: Vec<Panel> = self
            .shapes
            .iter()
            .map(|p| Panel {
                title: format!("ns = {}", p.ns),
                points: self
                    .panel_rows(p.ns)
                    .iter()
                    .filter_map(|r| {
                        r.log10_psi.map(|y| PlotPoint {
                            x: r.qsize as f64,
                            y,
                            lo: (r.ci_lo > 0.0).then(|| r.ci_lo.log10()),
                            hi: Some(r.ci_hi.log10()),
                        })
                    })
                    .collect(),
            })
            .collect();
        render_svg(&panels, "size of Q", "log10 ruin probability")
    }
}

pub fn sweep_row(s: &Settings, params: &RiskParams, model: &BlockModel, ns: usize, size: usize) -> Result<SweepRow> {
    let cfg = &s.config;
    let group = AgentSubset::prefix(size, cfg.q)?;
    let psi = estimate_psi_with(params, model, &group, s.replicates, s.seed, cfg.sampler)?;
    let tail = estimate_tail_with(params, model, &group, s.replicates, s.seed, cfg.sampler)?;
    let approx = approx_for(cfg, params, model, size, s.seed)?;
    Ok(SweepRow {
        qsize: size,
        ns,
        psi_hat: psi.mean,
        stderr: psi.stderr,
        ci_lo: (psi.mean - 2.0 * psi.stderr).max(0.0),
        ci_hi: (psi.mean + 2.0 * psi.stderr).min(1.0),
        log10_psi: (psi.mean > 0.0).then(|| psi.mean.log10()),
        tail_hat: tail.mean,
        approx_prob: approx.probability,
        stein_bound: approx.stein_bound,
    })
}

/// `|Q| = 1..q` for every `ns` on the grid, with `Q = {1..|Q|}`.
pub fn cmd_sweep(s: &Settings) -> Result<SweepReport> {
    let cfg = &s.config;
    let model = cfg.model()?;
    let grid: Vec<Option<usize>> = match (&cfg.ns_grid, cfg.scheme_ns()) {
        (Some(g), _) => g.iter().copied().map(Some).collect(),
        (None, Some(_)) => DEFAULT_NS_GRID.iter().copied().filter(|&ns| ns <= cfg.d).map(Some).collect(),
        (None, None) => vec![None],
    };
    let mut rows = Vec::new();
    let mut shapes = Vec::new();
    for ns in grid {
        let params = cfg.params(ns)?;
        let ns = ns.unwrap_or_else(|| underpriced(&params));
        let panel: Vec<SweepRow> =
            (1..=cfg.q).map(|k| sweep_row(s, &params, &model, ns, k)).collect::<Result<_>>()?;
        let (shape, note) = match classify_shape(&panel) {
            Ok(sh) => (Some(sh), None),
            Err(e) => (None, Some(e.to_string())),
        };
        shapes.push(PanelShape { ns, shape, note });
        rows.extend(panel);
    }
    Ok(SweepReport { seed: s.seed, replicates: s.replicates, rows, shapes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub ns: usize,
    pub bound: f64,
    pub approximation: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub abs_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableReport {
    pub qsize: usize,
    pub seed: u64,
    pub replicates: usize,
    pub rows: Vec<TableRow>,
}

impl TableReport {
    pub fn to_csv(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.ns.to_string(),
                    fmt_g(r.bound),
                    fmt_g(r.approximation),
                    fmt_g(r.estimate),
                    fmt_g(r.stderr),
                    fmt_g(r.abs_difference),
                ]
            })
            .collect();
        csv_string(None, &["ns", "bound", "approximation", "estimate", "stderr", "abs_difference"], &rows)
    }
}

/// Closed-form approximation and bound next to the simulated `P(P^Q < 1)`.
pub fn cmd_table(s: &Settings) -> Result<TableReport> {
    let cfg = &s.config;
    let model = cfg.model()?;
    if !model.is_bernoulli() {
        return Err(Error::Config("table needs a bernoulli network".into()));
    }
    let group = s.group_or_all()?;
    let grid = match (&cfg.ns_grid, cfg.scheme_ns()) {
        (Some(g), _) => g.clone(),
        (None, Some(ns)) => vec![ns],
        (None, None) => return Err(Error::Config("table needs premiums given as {low, high, ns}".into())),
    };
    let rows = grid
        .into_iter()
        .map(|ns| {
            let params = cfg.params(Some(ns))?;
            let approx = mixture_probability(&params, &model, group.size(), ApproxMode::ClosedForm, s.seed)?;
            let est = estimate_tail_with(&params, &model, &group, s.replicates, s.seed, cfg.sampler)?;
            Ok(TableRow {
                ns,
                bound: approx.stein_bound,
                approximation: approx.probability,
                estimate: est.mean,
                stderr: est.stderr,
                abs_difference: (approx.probability - est.mean).abs(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(TableReport { qsize: group.size(), seed: s.seed, replicates: s.replicates, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub qsize: usize,
    pub psi_hat: f64,
    pub psi_stderr: f64,
    pub oracle: f64,
    pub oracle_stderr: f64,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub horizon: f64,
    pub outer_networks: usize,
    pub inner_paths: usize,
}

impl OracleReport {
    pub fn verdict(&self) -> &'static str {
        if self.pass { "PASS" } else { "FAIL" }
    }

    pub fn to_csv(&self) -> Result<String> {
        csv_string(
            None,
            &["qsize", "psi_hat", "psi_stderr", "oracle", "oracle_stderr", "discrepancy", "tolerance", "verdict"],
            &[vec![
                self.qsize.to_string(),
                fmt_g(self.psi_hat),
                fmt_g(self.psi_stderr),
                fmt_g(self.oracle),
                fmt_g(self.oracle_stderr),
                fmt_g(self.discrepancy),
                fmt_g(self.tolerance),
                self.verdict().into(),
            ]],
        )
    }
}

/// Formula-based estimate against direct path simulation on a small instance.
pub fn cmd_oracle(s: &Settings) -> Result<OracleReport> {
    let cfg = &s.config;
    if cfg.q * cfg.d > ORACLE_MAX_CELLS {
        return Err(Error::OracleTooLarge(cfg.q * cfg.d));
    }
    let params = cfg.params(None)?;
    let model = cfg.model()?;
    let group = s.group_or_all()?;
    let outer = cfg.outer_networks.unwrap_or(DEFAULT_OUTER_NETWORKS);
    let inner = cfg.inner_paths.unwrap_or(DEFAULT_INNER_PATHS);
    let horizon = cfg.horizon();
    let psi = estimate_psi_with(&params, &model, &group, s.replicates, s.seed, cfg.sampler)?;
    let oracle = oracle_psi(&params, &model, &group, horizon, outer, inner, s.seed)?;
    let discrepancy = (psi.mean - oracle.mean).abs();
    let tolerance = f64::max(0.02, 4.0 * psi.stderr.hypot(oracle.stderr));
    Ok(OracleReport {
        qsize: group.size(),
        psi_hat: psi.mean,
        psi_stderr: psi.stderr,
        oracle: oracle.mean,
        oracle_stderr: oracle.stderr,
        discrepancy,
        tolerance,
        pass: discrepancy <= tolerance,
        horizon,
        outer_networks: outer,
        inner_paths: inner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(json: &str, replicates: usize) -> Settings {
        Settings::resolve(ExperimentConfig::from_json(json).unwrap(), Some(5), Some(replicates)).unwrap()
    }

    const SINGLE: &str = r#"{"q": 1, "d": 1, "premiums": [1.05], "network": {"kind": "bernoulli", "p": 1}}"#;

    #[test]
    fn estimate_degenerate() {
        let r = cmd_estimate(&settings(SINGLE, 100)).unwrap();
        assert!((r.psi_hat - 0.90810).abs() < 1e-5);
        assert_eq!(r.stderr, 0.0);
        assert_eq!(r.tail_hat, 1.0);
        assert_eq!(r.ns, 0);
    }

    #[test]
    fn estimate_zero_reserve() {
        let s = settings(
            r#"{"q": 1, "d": 1, "premiums": [1.05], "reserves": 0, "network": {"kind": "bernoulli", "p": 1}}"#,
            100,
        );
        assert_eq!(cmd_estimate(&s).unwrap_err().to_string(), "total reserve must be positive");
    }

    #[test]
    fn single_agent_sweep_matches_estimate() {
        let s = settings(SINGLE, 100);
        let sweep = cmd_sweep(&s).unwrap();
        assert_eq!(sweep.rows.len(), 1);
        let est = cmd_estimate(&s).unwrap();
        assert_eq!(sweep.rows[0].psi_hat, est.psi_hat);
        assert_eq!(sweep.rows[0].stderr, est.stderr);
        assert!(sweep.shapes[0].shape.is_none());
    }

    #[test]
    fn table_without_underpriced_objects() {
        let s = settings(
            r#"{"q": 20, "d": 400, "premiums": {"low": 0.95, "high": 1.05, "ns": 0},
                "network": {"kind": "bernoulli", "p": 0.05}, "group": {"size": 20}}"#,
            200,
        );
        let t = cmd_table(&s).unwrap();
        assert!(t.rows[0].approximation >= 0.999);
        assert_eq!(t.rows[0].estimate, 1.0);
    }

    #[test]
    fn oracle_guard() {
        let s = settings(
            r#"{"q": 11, "d": 10, "premiums": {"low": 1, "high": 1, "ns": 0}, "network": {"kind": "bernoulli", "p": 0.5}}"#,
            100,
        );
        let e = cmd_oracle(&s).unwrap_err();
        assert!(e.to_string().contains("oracle mode limited to small instances"));
    }

    #[test]
    fn oracle_single_passes() {
        let s = Settings::resolve(
            ExperimentConfig::from_json(
                r#"{"q": 1, "d": 1, "premiums": [1.05], "network": {"kind": "bernoulli", "p": 1},
                    "outer_networks": 4, "inner_paths": 5000}"#,
            )
            .unwrap(),
            Some(1),
            Some(100),
        )
        .unwrap();
        let r = cmd_oracle(&s).unwrap();
        assert!(r.pass && r.discrepancy < 0.02, "{r:?}");
    }
}
