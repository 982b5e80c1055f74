//! Parameter sweeps: the cartesian product of the grid axes, replicated over
//! seeds, evaluated in parallel and written in canonical order.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use truwb_core::config::ChannelSource;
use truwb_core::metrics::REPORT_FIELDS;
use truwb_core::pipeline;
use truwb_core::{RunConfig, TruncationPolicy};

use crate::output::{self, Layout};
use crate::{CliError, CliResult};

/// JSON grid description. Empty axes fall back to the base config's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub base: RunConfig,
    pub channel: Vec<String>,
    pub n_avg: Vec<usize>,
    pub noise_sigma: Vec<f64>,
    pub energy_fraction: Vec<f64>,
    /// Explicit replicate seeds; takes precedence over `seed_count`.
    pub seeds: Vec<u64>,
    /// Replicates `base.seed .. base.seed + seed_count`.
    pub seed_count: Option<u64>,
    pub threads: Option<usize>,
}

/// One grid cell: a parameter point and a replicate seed.
#[derive(Debug, Clone)]
pub struct Cell {
    pub point: usize,
    pub config: RunConfig,
}

impl SweepGrid {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = output::read_text(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn seeds(&self) -> Vec<u64> {
        if !self.seeds.is_empty() {
            self.seeds.clone()
        } else if let Some(n) = self.seed_count {
            (0..n).map(|i| self.base.seed.wrapping_add(i)).collect()
        } else {
            vec![self.base.seed]
        }
    }

    /// Cells in canonical order: axes vary channel-major, then n_avg, noise
    /// and energy fraction, with seeds innermost.
    pub fn cells(&self) -> CliResult<Vec<Cell>> {
        fn axis<T: Clone>(v: &[T], base: T) -> Vec<T> {
            if v.is_empty() {
                vec![base]
            } else {
                v.to_vec()
            }
        }
        let channels = axis(
            &self.channel.iter().map(|c| ChannelSource::from_arg(c)).collect::<Vec<_>>(),
            self.base.channel.clone(),
        );
        let n_avgs = axis(&self.n_avg, self.base.n_avg);
        let sigmas = axis(&self.noise_sigma, self.base.noise_sigma);
        let truncs = if self.energy_fraction.is_empty() {
            vec![self.base.truncation]
        } else {
            self.energy_fraction
                .iter()
                .map(|&fraction| TruncationPolicy::EnergyFraction { fraction })
                .collect()
        };
        let seeds = self.seeds();
        if seeds.is_empty() {
            return Err(CliError::Config("sweep grid has no seeds".into()));
        }

        let mut cells = Vec::new();
        let mut point = 0;
        for ch in &channels {
            for &n_avg in &n_avgs {
                for &noise_sigma in &sigmas {
                    for trunc in &truncs {
                        for &seed in &seeds {
                            cells.push(Cell {
                                point,
                                config: RunConfig {
                                    channel: ch.clone(),
                                    n_avg,
                                    noise_sigma,
                                    truncation: *trunc,
                                    seed,
                                    ..self.base.clone()
                                },
                            });
                        }
                        point += 1;
                    }
                }
            }
        }
        Ok(cells)
    }
}

pub fn csv_header() -> String {
    let mut h = String::from("point,seed,channel,n_avg,noise_sigma,energy_fraction,status");
    for f in REPORT_FIELDS {
        h.push(',');
        h.push_str(f);
    }
    h.push_str(",noise_floor_v2,noise_rms_v,error");
    h
}

fn csv_field(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

/// Evaluates one cell. Failures become an error row.
pub fn evaluate(cell: &Cell) -> String {
    let cfg = &cell.config;
    let fraction = match cfg.truncation {
        TruncationPolicy::EnergyFraction { fraction } => fraction.to_string(),
        _ => String::new(),
    };
    let mut row = format!(
        "{},{},{},{},{},{}",
        cell.point,
        cfg.seed,
        csv_field(&cfg.channel.label()),
        cfg.n_avg,
        cfg.noise_sigma,
        fraction
    );
    match pipeline::run(cfg) {
        Ok(out) => {
            let _ = write!(
                row,
                ",ok,{},{},{},",
                out.report.csv_row(),
                out.noise_floor,
                out.noise_floor.sqrt()
            );
        }
        Err(e) => {
            row.push_str(",error");
            for _ in 0..REPORT_FIELDS.len() + 2 {
                row.push(',');
            }
            let _ = write!(row, ",{}", csv_field(&e.to_string()));
        }
    }
    row
}

/// Evaluates every cell on a pool of `threads` workers (all cores when
/// `None`). Row order never depends on the pool size.
pub fn run_sweep(grid: &SweepGrid, threads: Option<usize>) -> CliResult<String> {
    let cells = grid.cells()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads.or(grid.threads) {
        if n == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let rows: Vec<String> = pool.install(|| cells.par_iter().map(evaluate).collect());

    let mut out = csv_header();
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    Ok(out)
}

/// Runs the grid and writes `<out>/sweep.csv`; returns the number of rows.
pub fn cmd_sweep(grid: &SweepGrid, out_dir: &Path, threads: Option<usize>) -> CliResult<usize> {
    let csv = run_sweep(grid, threads)?;
    let layout = Layout::new(out_dir);
    output::ensure_dir(&layout.dir)?;
    output::write_text(&layout.sweep_csv(), &csv)?;
    Ok(csv.lines().count() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_and_seed_expansion() {
        let grid = SweepGrid {
            n_avg: vec![1, 4],
            seed_count: Some(3),
            base: RunConfig {
                seed: 10,
                ..RunConfig::default()
            },
            ..SweepGrid::default()
        };
        let cells = grid.cells().unwrap();
        let got: Vec<(usize, usize, u64)> = cells.iter().map(|c| (c.point, c.config.n_avg, c.config.seed)).collect();
        assert_eq!(
            got,
            vec![(0, 1, 10), (0, 1, 11), (0, 1, 12), (1, 4, 10), (1, 4, 11), (1, 4, 12)]
        );
    }

    #[test]
    fn failed_cell_keeps_column_count() {
        let cell = Cell {
            point: 0,
            config: RunConfig {
                n_avg: 0,
                ..RunConfig::default()
            },
        };
        let row = evaluate(&cell);
        assert_eq!(row.split(',').count(), csv_header().split(',').count());
        assert!(row.contains(",error,"));
    }
}
