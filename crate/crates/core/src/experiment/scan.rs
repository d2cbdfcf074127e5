use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::format::HypothesisKind;
use crate::metrics::DEFAULT_CONFIDENCE;

use super::config::ExperimentConfig;
use super::distinguisher::{run_resolved, DistinguisherResult, Problem};

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

/// Cartesian grid over `(eta, d, m)`; the remaining fields are shared by
/// every point. An empty `m` list means "derive m per point".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub eta: Vec<f64>,
    pub d: Vec<usize>,
    #[serde(default)]
    pub m: Vec<usize>,
    pub kappa: u32,
    #[serde(rename = "Cprime", default, skip_serializing_if = "Option::is_none")]
    pub c_prime: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

impl GridSpec {
    /// Grid points in row order: eta outermost, then d, then m.
    pub fn points(&self) -> Vec<ExperimentConfig> {
        let ms: Vec<Option<usize>> = if self.m.is_empty() {
            vec![None]
        } else {
            self.m.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        if self.eta.is_empty() || self.d.is_empty() {
            return out;
        }
        for &eta in &self.eta {
            for &d in &self.d {
                for &m in &ms {
                    out.push(ExperimentConfig {
                        d,
                        eta,
                        kappa: self.kappa,
                        c_prime: self.c_prime,
                        m,
                        seed: self.seed,
                        confidence: self.confidence,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub eta: f64,
    pub d: usize,
    /// Resolved sample count, or the requested one (0 if derived) when
    /// resolution failed.
    pub m: usize,
    pub period: f64,
    pub sigma: f64,
    pub hypothesis: HypothesisKind,
    pub problem: Problem,
    pub outcome: Result<DistinguisherResult, String>,
}

fn point_rows(cfg: &ExperimentConfig, problem: Problem) -> Vec<ScanRow> {
    let hyps = [HypothesisKind::Alternative, HypothesisKind::Null];
    match cfg.resolve(problem) {
        Ok(r) => hyps
            .into_iter()
            .map(|h| ScanRow {
                eta: cfg.eta,
                d: cfg.d,
                m: r.m,
                period: r.period,
                sigma: r.sigma,
                hypothesis: h,
                problem,
                outcome: run_resolved(&r, problem, h).map_err(|e| e.to_string()),
            })
            .collect(),
        Err(e) => hyps
            .into_iter()
            .map(|h| ScanRow {
                eta: cfg.eta,
                d: cfg.d,
                m: cfg.m.unwrap_or(0),
                period: f64::NAN,
                sigma: f64::NAN,
                hypothesis: h,
                problem,
                outcome: Err(e.to_string()),
            })
            .collect(),
    }
}

/// Run every grid point under both hypotheses. Points run concurrently and
/// rows come back in grid order; a failing point records its error in-row.
pub fn scan_grid(grid: &GridSpec, problem: Problem) -> Vec<ScanRow> {
    grid.points()
        .par_iter()
        .map(|cfg| point_rows(cfg, problem))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::bands_advantage_bound;
    use crate::experiment::run_distinguisher;

    fn grid(eta: Vec<f64>, d: Vec<usize>, m: Vec<usize>) -> GridSpec {
        GridSpec {
            eta,
            d,
            m,
            kappa: 1,
            c_prime: None,
            seed: 9,
            confidence: 0.95,
        }
    }

    #[test]
    fn single_point_matches_run_distinguisher() {
        let g = grid(vec![20.0], vec![16], vec![50_000]);
        let rows = scan_grid(&g, Problem::Agnostic);
        assert_eq!(rows.len(), 2);
        let cfg = &g.points()[0];
        for row in &rows {
            let direct = run_distinguisher(cfg, Problem::Agnostic, row.hypothesis).unwrap();
            assert_eq!(row.outcome.as_ref().unwrap(), &direct);
        }
    }

    #[test]
    fn empty_grid_has_no_rows() {
        assert!(scan_grid(&grid(vec![], vec![10], vec![]), Problem::Reliable).is_empty());
    }

    #[test]
    fn bound_recomputed_per_point() {
        let g = grid(vec![10.0, 20.0], vec![16], vec![1000]);
        let rows = scan_grid(&g, Problem::Fairness);
        assert_eq!(rows.len(), 4);
        for row in &rows {
            let b = bands_advantage_bound(0, row.period, row.sigma).unwrap();
            assert_eq!(row.outcome.as_ref().unwrap().theoretical_bound, b);
        }
        // Default C' pins T at 1/pi, so doubling eta only halves sigma.
        let pi2 = std::f64::consts::PI.powi(2);
        for row in &rows {
            let t = row.period;
            let want = t * (-2.0 * pi2 * row.sigma * row.sigma / (t * t)).exp() / (4.0 * pi2);
            let got = row.outcome.as_ref().unwrap().theoretical_bound;
            assert!((got - want).abs() <= 1e-15 * want, "{got} vs {want}");
        }
        assert_eq!(rows[2].sigma, rows[0].sigma / 2.0);
    }

    #[test]
    fn failing_point_is_recorded_in_row() {
        let mut g = grid(vec![10.0, 20.0], vec![16], vec![1000]);
        g.c_prime = Some(1e-3);
        let rows = scan_grid(&g, Problem::Reliable);
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.outcome.as_ref().unwrap_err().contains("exceeds")));
    }
}
