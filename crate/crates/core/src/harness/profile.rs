use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;

/// Slack when comparing float errors with thresholds.
const TOL: f64 = 1e-9;

/// Error of one run as a step function of the budget spent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunCurve {
    pub trajectory_id: usize,
    pub method: String,
    pub seed: u64,
    /// `(steps, eps)` checkpoints in increasing step order.
    pub points: Vec<(u64, f64)>,
}

impl RunCurve {
    /// Error after `steps`; 1 before the first checkpoint.
    pub fn eps_at(&self, steps: u64) -> f64 {
        self.points.iter().take_while(|p| p.0 <= steps).last().map_or(1.0, |p| p.1)
    }
}

/// Geometric grid with factor 1.3 from 1000 up to `budget` (inclusive).
pub fn step_grid(budget: u64) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut x = 1000.0f64;
    while (x.round() as u64) < budget {
        grid.push(x.round() as u64);
        x *= 1.3;
    }
    grid.push(budget);
    grid
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub method: String,
    pub threshold: f64,
    pub steps: u64,
    /// Fraction of runs with error at most `threshold`.
    pub fraction: f64,
    /// Standard deviation across trajectories of the per-trajectory fraction.
    pub std: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub rows: Vec<ProfileRow>,
    /// First grid point where every run of the method is exact.
    pub converged_at: BTreeMap<String, Option<u64>>,
    pub std_across: String,
}

impl ProfileTable {
    pub fn methods(&self) -> Vec<String> {
        let mut m: Vec<String> = self.rows.iter().map(|r| r.method.clone()).collect();
        m.dedup();
        m
    }

    pub fn curve(&self, method: &str, threshold: f64) -> Vec<&ProfileRow> {
        self.rows.iter().filter(|r| r.method == method && (r.threshold - threshold).abs() < TOL).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), HarnessError> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Per method, threshold and grid point, the fraction of runs whose error
/// at that budget is at most the threshold.
pub fn performance_profile(curves: &[RunCurve], thresholds: &[f64], grid: &[u64]) -> ProfileTable {
    let mut by_method: BTreeMap<&str, BTreeMap<usize, Vec<&RunCurve>>> = BTreeMap::new();
    for c in curves {
        by_method.entry(&c.method).or_default().entry(c.trajectory_id).or_default().push(c);
    }
    let mut table = ProfileTable { std_across: "trajectories".into(), ..Default::default() };
    for (method, trajs) in &by_method {
        let runs = trajs.values().map(Vec::len).sum::<usize>() as f64;
        for &d in thresholds {
            for &s in grid {
                let per_traj: Vec<f64> = trajs
                    .values()
                    .map(|rs| rs.iter().filter(|c| c.eps_at(s) <= d + TOL).count() as f64 / rs.len() as f64)
                    .collect();
                let hits: f64 = trajs
                    .values()
                    .map(|rs| rs.iter().filter(|c| c.eps_at(s) <= d + TOL).count() as f64)
                    .sum();
                let mean = per_traj.iter().sum::<f64>() / per_traj.len() as f64;
                let var = per_traj.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / per_traj.len() as f64;
                table.rows.push(ProfileRow {
                    method: method.to_string(),
                    threshold: d,
                    steps: s,
                    fraction: hits / runs,
                    std: var.sqrt(),
                });
            }
        }
        let all: Vec<&RunCurve> = trajs.values().flatten().copied().collect();
        let converged = grid.iter().copied().find(|&s| all.iter().all(|c| c.eps_at(s) <= TOL));
        table.converged_at.insert(method.to_string(), converged);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(traj: usize, method: &str, points: Vec<(u64, f64)>) -> RunCurve {
        RunCurve { trajectory_id: traj, method: method.into(), seed: 0, points }
    }

    #[test]
    fn grid_is_geometric_and_ends_at_budget() {
        let g = step_grid(3000);
        assert_eq!(g, vec![1000, 1300, 1690, 2197, 2856, 3000]);
        assert_eq!(step_grid(500), vec![500]);
    }

    #[test]
    fn exact_from_the_start_is_flat_at_one() {
        let cs = vec![curve(0, "m", vec![(0, 0.0)]), curve(1, "m", vec![(0, 0.0)])];
        let t = performance_profile(&cs, &[0.0], &step_grid(5000));
        assert!(t.rows.iter().all(|r| r.fraction == 1.0 && r.std == 0.0));
        assert_eq!(t.converged_at["m"], Some(1000));
    }

    #[test]
    fn fractions_and_spread() {
        let cs = vec![
            curve(0, "m", vec![(0, 1.0), (1200, 0.0)]),
            curve(0, "m", vec![(0, 1.0), (2000, 0.0)]),
            curve(1, "m", vec![(0, 0.5)]),
            curve(1, "m", vec![(0, 0.5)]),
        ];
        let t = performance_profile(&cs, &[0.0, 0.5], &[1000, 1300, 2197]);
        let zero: Vec<f64> = t.curve("m", 0.0).iter().map(|r| r.fraction).collect();
        assert_eq!(zero, vec![0.0, 0.25, 0.5]);
        let half: Vec<f64> = t.curve("m", 0.5).iter().map(|r| r.fraction).collect();
        assert_eq!(half, vec![0.5, 0.75, 1.0]);
        assert_eq!(t.curve("m", 0.0)[2].std, 0.5);
        assert_eq!(t.converged_at["m"], None);
    }
}
