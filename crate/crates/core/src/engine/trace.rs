use serde::{Deserialize, Serialize};

/// One recorded iteration. Row `j` describes the game right after the
/// gains of iteration `j` were revealed and the regrets updated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// `g_A^j`.
    pub master_gain: f64,
    /// `max_i R_i^{j+1}`.
    pub regret_best: f64,
    /// `Ψ^{j+1}`.
    pub avg_potential: f64,
    /// `Ψ^{j+1} − Ψ^j`.
    pub delta_potential: f64,
}

/// Extremes over every iteration of a game, including rows that were not
/// recorded because of downsampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub max_potential: f64,
    pub max_delta_potential: f64,
    pub max_regret: f64,
    /// Iterations at which some `Φ(√α·R_i)` exceeded the saturation
    /// exponent.
    pub saturated_steps: usize,
}

impl TraceSummary {
    pub(crate) fn start(initial_potential: f64) -> Self {
        Self {
            max_potential: initial_potential,
            max_delta_potential: f64::NEG_INFINITY,
            max_regret: 0.0,
            saturated_steps: 0,
        }
    }

    pub(crate) fn observe(&mut self, row: &TraceRow, saturated: bool) {
        self.max_potential = self.max_potential.max(row.avg_potential);
        self.max_delta_potential = self.max_delta_potential.max(row.delta_potential);
        self.max_regret = self.max_regret.max(row.regret_best);
        if saturated {
            self.saturated_steps += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTrace {
    pub rows: Vec<TraceRow>,
    /// `Ψ⁰`, always 1.
    pub initial_avg_potential: f64,
    /// `R_i` after the last iteration.
    pub final_regrets: Vec<f64>,
    pub summary: TraceSummary,
    pub prng: String,
}

impl GameTrace {
    pub fn final_row(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn final_regret_best(&self) -> f64 {
        self.final_regrets
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-replica results kept alongside the averaged trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub index: usize,
    pub seed: u64,
    pub final_regrets: Vec<f64>,
    pub final_regret_best: f64,
    pub summary: TraceSummary,
}

/// Pointwise mean over replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedTrace {
    pub rows: Vec<TraceRow>,
    pub replicas: Vec<ReplicaSummary>,
    pub prng: String,
}

impl AveragedTrace {
    /// Worst case over replicas of every summary statistic.
    pub fn worst_summary(&self) -> TraceSummary {
        let mut it = self.replicas.iter().map(|r| r.summary);
        let first = it.next().expect("at least one replica");
        it.fold(first, |acc, s| TraceSummary {
            max_potential: acc.max_potential.max(s.max_potential),
            max_delta_potential: acc.max_delta_potential.max(s.max_delta_potential),
            max_regret: acc.max_regret.max(s.max_regret),
            saturated_steps: acc.saturated_steps.max(s.saturated_steps),
        })
    }

    pub fn final_regret_best(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.regret_best)
    }
}

/// Running mean: `m ← m + (x − m)/(k+1)`. Exact when every input is equal.
pub(crate) fn mean_rows(traces: &[GameTrace]) -> Vec<TraceRow> {
    let mut mean = traces[0].rows.clone();
    for (k, trace) in traces.iter().enumerate().skip(1) {
        let w = 1.0 / (k as f64 + 1.0);
        for (m, r) in mean.iter_mut().zip(&trace.rows) {
            debug_assert_eq!(m.iteration, r.iteration);
            m.master_gain += (r.master_gain - m.master_gain) * w;
            m.regret_best += (r.regret_best - m.regret_best) * w;
            m.avg_potential += (r.avg_potential - m.avg_potential) * w;
            m.delta_potential += (r.delta_potential - m.delta_potential) * w;
        }
    }
    mean
}
