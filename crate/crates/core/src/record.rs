//! Run trajectories: what was pulled, what was observed, what it cost.

/// One round of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundEntry {
    /// 1-based round index.
    pub t: usize,
    /// Phase the round belongs to (1 for algorithms without phases).
    pub phase: usize,
    /// Stable label of the pulled arm.
    pub action_label: usize,
    /// Observed (possibly heavy-tailed) reward.
    pub reward: f64,
    /// Instantaneous gap `⟨x*, θ*⟩ − ⟨x_t, θ*⟩` against the best mean.
    pub gap: f64,
}

/// The full trajectory of a single seeded run, with cumulative pseudo-regret
/// maintained as rounds are appended.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    seed: u64,
    rounds: Vec<RoundEntry>,
    cumulative_regret: f64,
}

impl RunRecord {
    pub fn new(seed: u64) -> Self {
        Self { seed, rounds: Vec::new(), cumulative_regret: 0.0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn push(&mut self, phase: usize, action_label: usize, reward: f64, gap: f64) {
        let t = self.rounds.len() + 1;
        self.cumulative_regret += gap;
        self.rounds.push(RoundEntry { t, phase, action_label, reward, gap });
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn rounds(&self) -> &[RoundEntry] {
        &self.rounds
    }

    /// Total pseudo-regret after the last recorded round.
    pub fn final_regret(&self) -> f64 {
        self.cumulative_regret
    }

    /// Cumulative pseudo-regret after each of the first `ts` rounds, for the
    /// given strictly increasing 1-based checkpoints.
    ///
    /// Checkpoints beyond the recorded horizon repeat the final value, so a
    /// truncated run still yields a full series.
    pub fn regret_at_checkpoints(&self, ts: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(ts.len());
        let mut acc = 0.0;
        let mut next = 0usize;
        for (i, r) in self.rounds.iter().enumerate() {
            acc += r.gap;
            while next < ts.len() && ts[next] == i + 1 {
                out.push(acc);
                next += 1;
            }
        }
        while next < ts.len() {
            out.push(acc);
            next += 1;
        }
        out
    }
}
