use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{prepare_agent, run_once, AvatarPlacement, GroupSpec};
use super::stats::{summarize, Summary};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_csv, write_json};
use crate::kuramoto::{make_ring_graph, FrequencyProcess, InitialPhases};
use crate::rng::derive_seed;

/// Robustness map of ⟨r_net⟩ over coupling and frequency spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatmapConfig {
    pub n_participants: usize,
    pub couplings: Vec<f64>,
    /// Half-widths δ of `U[center − δ, center + δ]`.
    pub deltas: Vec<f64>,
    pub center: f64,
    pub theta0: f64,
    pub duration: f64,
    pub dt: f64,
    pub repetitions: usize,
    pub threshold: f64,
    pub seed: u64,
    /// Runs the map a second time with this avatar.
    pub avatar: Option<AvatarPlacement>,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        HeatmapConfig {
            n_participants: 5,
            couplings: vec![0.25, 0.75, 1.25, 1.75, 2.25],
            deltas: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            center: 4.0,
            theta0: FRAC_PI_2,
            duration: 100.0,
            dt: 0.01,
            repetitions: 3,
            threshold: 0.9,
            seed: 0,
            avatar: None,
        }
    }
}

impl HeatmapConfig {
    /// 10×10 grid, 15 repetitions per cell.
    pub fn paper_scale(self) -> Self {
        HeatmapConfig {
            couplings: (1..=10).map(|i| 0.25 * i as f64).collect(),
            deltas: (1..=10).map(|i| 0.1 * i as f64).collect(),
            repetitions: 15,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.couplings.is_empty() || self.deltas.is_empty() {
            return Err(Error::config("couplings", "grids must not be empty"));
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions", "must be >= 1"));
        }
        if self.deltas.iter().any(|&d| !(d >= 0.0 && d < self.center)) {
            return Err(Error::config("deltas", "each δ must lie in [0, center)"));
        }
        Ok(())
    }

    pub fn group(&self, coupling: f64, delta: f64) -> Result<GroupSpec> {
        Ok(GroupSpec {
            graph: make_ring_graph(self.n_participants)?,
            coupling,
            freq_process: FrequencyProcess::uniform(self.n_participants, self.center, delta),
            initial_phases: InitialPhases::Explicit(vec![self.theta0; self.n_participants]),
            duration: self.duration,
            dt: self.dt,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub coupling: f64,
    pub delta: f64,
    pub without: Summary,
    pub with: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapResult {
    pub threshold: f64,
    pub repetitions: usize,
    /// Coupling-major order.
    pub cells: Vec<HeatmapCell>,
    pub count_without: usize,
    pub count_with: Option<usize>,
}

/// Each cell averages `repetitions` runs; run `r` of cell `(i, j)` uses the
/// same seed with and without the avatar.
pub fn run_heatmap(cfg: &HeatmapConfig, base: Option<&Path>) -> Result<HeatmapResult> {
    cfg.validate()?;
    let factory = prepare_agent(cfg.avatar.as_ref(), cfg.dt, base)?;
    let mut jobs = Vec::new();
    for (i, &c) in cfg.couplings.iter().enumerate() {
        for (j, &d) in cfg.deltas.iter().enumerate() {
            for r in 0..cfg.repetitions {
                let seed = derive_seed(cfg.seed, &[i as u64, j as u64, r as u64]);
                jobs.push((c, d, seed, false));
                if factory.is_some() {
                    jobs.push((c, d, seed, true));
                }
            }
        }
    }
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, d, seed, with)| {
            let group = cfg.group(c, d)?;
            let avatar = match (with, cfg.avatar.as_ref(), factory.as_ref()) {
                (true, Some(p), Some(f)) => Some((p, f)),
                _ => None,
            };
            Ok(run_once(&group, avatar, seed)?.summary.r_net)
        })
        .collect::<Result<_>>()?;

    let per_cell = cfg.repetitions * if factory.is_some() { 2 } else { 1 };
    let mut cells = Vec::new();
    for (k, chunk) in values.chunks(per_cell).enumerate() {
        let (i, j) = (k / cfg.deltas.len(), k % cfg.deltas.len());
        let step = if factory.is_some() { 2 } else { 1 };
        let without: Vec<f64> = chunk.iter().step_by(step).copied().collect();
        let with: Vec<f64> = chunk.iter().skip(1).step_by(2).copied().collect();
        cells.push(HeatmapCell {
            coupling: cfg.couplings[i],
            delta: cfg.deltas[j],
            without: summarize(&without),
            with: factory.as_ref().map(|_| summarize(&with)),
        });
    }
    let count_without = cells
        .iter()
        .filter(|c| c.without.mean >= cfg.threshold)
        .count();
    let count_with = factory.as_ref().map(|_| {
        cells
            .iter()
            .filter(|c| c.with.is_some_and(|s| s.mean >= cfg.threshold))
            .count()
    });
    Ok(HeatmapResult {
        threshold: cfg.threshold,
        repetitions: cfg.repetitions,
        cells,
        count_without,
        count_with,
    })
}

impl HeatmapResult {
    /// `heatmap.csv`, gnuplot blocks `heatmap_{without,with}.dat` and
    /// `heatmap.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let opt = |s: Option<Summary>, f: fn(Summary) -> f64| {
            s.map(|s| fmt_f64(f(s))).unwrap_or_default()
        };
        let rows: Vec<Vec<String>> = self
            .cells
            .iter()
            .map(|c| {
                vec![
                    fmt_f64(c.coupling),
                    fmt_f64(c.delta),
                    fmt_f64(c.without.mean),
                    fmt_f64(c.without.std),
                    opt(c.with, |s| s.mean),
                    opt(c.with, |s| s.std),
                ]
            })
            .collect();
        write_csv(
            &dir.join("heatmap.csv"),
            &[],
            &[
                "coupling",
                "delta",
                "r_net_without",
                "std_without",
                "r_net_with",
                "std_with",
            ],
            &rows,
        )?;
        self.write_gnuplot(&dir.join("heatmap_without.dat"), |c| Some(c.without.mean))?;
        if self.count_with.is_some() {
            self.write_gnuplot(&dir.join("heatmap_with.dat"), |c| c.with.map(|s| s.mean))?;
        }
        write_json(&dir.join("heatmap.json"), self)
    }

    fn write_gnuplot(
        &self,
        path: &Path,
        value: impl Fn(&HeatmapCell) -> Option<f64>,
    ) -> Result<()> {
        use std::io::Write;
        let mut w = crate::io::create_file(path)?;
        let io = |e| Error::io(path, e);
        writeln!(w, "# coupling delta r_net").map_err(io)?;
        let mut last = None;
        for c in &self.cells {
            if last.is_some_and(|l| l != c.coupling) {
                writeln!(w).map_err(io)?;
            }
            last = Some(c.coupling);
            let v = value(c).map(fmt_f64).unwrap_or_else(|| "NaN".into());
            writeln!(w, "{} {} {v}", fmt_f64(c.coupling), fmt_f64(c.delta)).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentSpec;

    fn small() -> HeatmapConfig {
        HeatmapConfig {
            couplings: vec![0.02, 3.0],
            deltas: vec![0.01, 1.0],
            duration: 20.0,
            repetitions: 2,
            ..HeatmapConfig::default()
        }
    }

    #[test]
    fn corners_behave() {
        let res = run_heatmap(&small(), None).unwrap();
        assert_eq!(res.cells.len(), 4);
        // strong coupling, nearly identical frequencies
        assert!(res.cells[2].without.mean > 0.99);
        // weak coupling, wide spread
        assert!(res.cells[1].without.mean < 0.9);
        assert!(res.cells.iter().all(|c| c.with.is_none()));
    }

    #[test]
    fn avatar_off_cells_do_not_depend_on_avatar() {
        let plain = run_heatmap(&small(), None).unwrap();
        let cfg = HeatmapConfig {
            avatar: Some(AvatarPlacement::connected_to_all(AgentSpec::fixed(4.0))),
            ..small()
        };
        let with = run_heatmap(&cfg, None).unwrap();
        for (a, b) in plain.cells.iter().zip(&with.cells) {
            assert_eq!(a.without, b.without);
        }
        assert!(with.count_with.is_some());
    }
}
