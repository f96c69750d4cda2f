//! Parameter sweeps over good/bad environments and their manifests.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{path_in, sanitize, trace_csv, write_atomic, TRACE_HEADER};
use crate::engine::{run_replicas, AveragedTrace, GameConfig, HedgerSpec};
use crate::environments::{EnvironmentSpec, GoodBadSpec};
use crate::error::{Error, Result};
use crate::hedgers::EtaVariant;
use crate::rng::{PRNG_NAME, REPLICA_SEED_MULTIPLIER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// N = 1000, γ ∈ {0.2, 0.4, 0.6, 0.8}, f ∈ {0.001, 0.01, 0.1, 0.5}.
    Sim1,
    /// N ∈ {10, 100, 1000}, γ ∈ {0.2, 0.8}, f = 0.1.
    Sim2,
}

impl Preset {
    pub fn n_grid(self) -> Vec<usize> {
        match self {
            Preset::Sim1 => vec![1000],
            Preset::Sim2 => vec![10, 100, 1000],
        }
    }

    pub fn gamma_grid(self) -> Vec<f64> {
        match self {
            Preset::Sim1 => vec![0.2, 0.4, 0.6, 0.8],
            Preset::Sim2 => vec![0.2, 0.8],
        }
    }

    pub fn f_grid(self) -> Vec<f64> {
        match self {
            Preset::Sim1 => vec![0.001, 0.01, 0.1, 0.5],
            Preset::Sim2 => vec![0.1],
        }
    }
}

pub const DEFAULT_ALPHA: f64 = 0.001;
pub const DEFAULT_REPLICAS: usize = 50;
pub const DEFAULT_C_GRID: [f64; 3] = [1.0, 2.0, 4.0];
/// Default horizon in units of `1/α`.
pub const DEFAULT_HORIZON_MULTIPLE: f64 = 5.0;

/// One grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n_actions: usize,
    pub gamma: f64,
    pub f: f64,
}

impl Cell {
    pub fn key(&self) -> String {
        sanitize(&format!(
            "n{}_gamma{}_f{}",
            self.n_actions, self.gamma, self.f
        ))
    }
}

/// A fully resolved sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub preset: Option<Preset>,
    pub cells: Vec<Cell>,
    pub hedgers: Vec<HedgerSpec>,
    pub alpha: f64,
    pub horizon: usize,
    pub replicas: usize,
    pub seed: u64,
    pub record_every: usize,
    pub start: usize,
    pub shift_period: Option<usize>,
}

impl SimulationPlan {
    /// Standard defaults for a preset: α = 0.001, 50 replicas, horizon 5/α,
    /// Hedge at the simulation learning rate and NormalHedge with
    /// c ∈ {1, 2, 4}.
    pub fn preset(preset: Preset) -> Self {
        let alpha = DEFAULT_ALPHA;
        let mut hedgers = vec![HedgerSpec::hedge_tuned(EtaVariant::Simulation)];
        hedgers.extend(DEFAULT_C_GRID.iter().map(|&c| HedgerSpec::normalhedge(c)));
        Self::grid(
            Some(preset),
            &preset.n_grid(),
            &preset.gamma_grid(),
            &preset.f_grid(),
            hedgers,
            alpha,
            horizon_for(alpha, DEFAULT_HORIZON_MULTIPLE),
        )
    }

    pub fn grid(
        preset: Option<Preset>,
        ns: &[usize],
        gammas: &[f64],
        fs: &[f64],
        hedgers: Vec<HedgerSpec>,
        alpha: f64,
        horizon: usize,
    ) -> Self {
        let mut cells = Vec::new();
        for &n_actions in ns {
            for &gamma in gammas {
                for &f in fs {
                    cells.push(Cell {
                        n_actions,
                        gamma,
                        f,
                    });
                }
            }
        }
        Self {
            preset,
            cells,
            hedgers,
            alpha,
            horizon,
            replicas: DEFAULT_REPLICAS,
            seed: 0,
            record_every: 1,
            start: 0,
            shift_period: None,
        }
    }

    pub fn environment(&self, cell: &Cell) -> EnvironmentSpec {
        let mut spec = GoodBadSpec::with_alpha(cell.n_actions, cell.f, cell.gamma, self.alpha);
        spec.start = self.start;
        if let Some(p) = self.shift_period {
            spec.shift_period = p;
        }
        EnvironmentSpec::GoodBad(spec)
    }

    /// Every run of the sweep. All algorithms in a cell share one seed, so
    /// they face the same gain sequences.
    pub fn runs(&self) -> Result<Vec<PlannedRun>> {
        if self.cells.is_empty() || self.hedgers.is_empty() {
            return Err(Error::invalid("grid", "sweep is empty"));
        }
        let mut runs = Vec::new();
        for cell in &self.cells {
            for hedger in &self.hedgers {
                let mut config = GameConfig::new(
                    *hedger,
                    self.environment(cell),
                    self.alpha,
                    self.horizon,
                    self.seed,
                )
                .with_replicas(self.replicas);
                config.record_every = self.record_every;
                config.validate()?;
                let file = format!("{}__{}.csv", sanitize(&hedger.label()), cell.key());
                runs.push(PlannedRun {
                    file,
                    cell: *cell,
                    config,
                });
            }
        }
        Ok(runs)
    }

    /// Runs every grid point.
    pub fn execute(&self) -> Result<Vec<(PlannedRun, AveragedTrace)>> {
        self.runs()?
            .into_par_iter()
            .map(|run| {
                let trace = run_replicas(&run.config)?;
                Ok((run, trace))
            })
            .collect()
    }

    /// Runs the sweep, writes one CSV per run and then the manifest.
    pub fn write(&self, out_dir: &Path) -> Result<Manifest> {
        let results = self.execute()?;
        let mut entries = Vec::with_capacity(results.len());
        for (run, trace) in &results {
            write_atomic(&path_in(out_dir, &run.file), &trace_csv(&trace.rows))?;
            entries.push(ManifestRun::new(run, trace)?);
        }
        let manifest = Manifest {
            command: "simulate".to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            preset: self.preset,
            prng: PRNG_NAME.to_owned(),
            replica_seed_rule: format!("seed XOR (replica * {REPLICA_SEED_MULTIPLIER:#x})"),
            seed: self.seed,
            alpha: self.alpha,
            horizon: self.horizon,
            replicas: self.replicas,
            record_every: self.record_every,
            trace_columns: TRACE_HEADER.map(str::to_owned).to_vec(),
            runs: entries,
        };
        let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        write_atomic(&path_in(out_dir, MANIFEST_FILE), &json)?;
        Ok(manifest)
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// `round(multiple/α)`, at least 1.
pub fn horizon_for(alpha: f64, multiple: f64) -> usize {
    ((multiple / alpha).round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRun {
    pub file: String,
    pub cell: Cell,
    pub config: GameConfig,
}

/// Everything needed to reproduce one CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub file: String,
    pub algorithm: String,
    pub c: Option<f64>,
    pub eta: Option<f64>,
    pub n_actions: usize,
    pub gamma: f64,
    pub f: f64,
    pub n_good: usize,
    pub shift_period: usize,
    pub start: usize,
    pub seed: u64,
    pub final_regret_best: f64,
    pub config: GameConfig,
}

impl ManifestRun {
    fn new(run: &PlannedRun, trace: &AveragedTrace) -> Result<Self> {
        let EnvironmentSpec::GoodBad(env) = &run.config.environment else {
            unreachable!("sweeps use good/bad environments")
        };
        let c = match run.config.hedger {
            HedgerSpec::NormalHedge { c } => Some(c),
            HedgerSpec::Hedge { .. } => None,
        };
        Ok(Self {
            file: run.file.clone(),
            algorithm: run.config.hedger.label(),
            c,
            eta: run
                .config
                .hedger
                .resolve_eta(run.config.n_actions, run.config.alpha)?,
            n_actions: run.cell.n_actions,
            gamma: run.cell.gamma,
            f: run.cell.f,
            n_good: env.n_good(),
            shift_period: env.shift_period,
            start: env.start,
            seed: run.config.seed,
            final_regret_best: trace.final_regret_best(),
            config: run.config.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub preset: Option<Preset>,
    pub prng: String,
    pub replica_seed_rule: String,
    pub seed: u64,
    pub alpha: f64,
    pub horizon: usize,
    pub replicas: usize,
    pub record_every: usize,
    pub trace_columns: Vec<String>,
    pub runs: Vec<ManifestRun>,
}
