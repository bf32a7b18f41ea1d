//! Secondary-user protocol state machines.
//!
//! Every algorithm follows the same skeleton: a channel-ranking phase of
//! uniform hopping that estimates busy probabilities and collision fractions,
//! then one or more orthogonalization/estimation phases, then sequential
//! hopping over the optimized top-N* channels until the horizon. Agents are
//! observation-local: they see only their own selections and outcomes.
//!
//! - CDJ: jammer collisions are distinguishable, so one ranking phase yields
//!   both J-hat and N-hat; orthogonalization runs to the horizon.
//! - CNJ: ranking, then orthogonalize over all K, then a sequential
//!   jammer-estimation sweep, then final hopping over N*.
//! - CUJ: like CNJ but the ranking phase only reveals N+J; the sweep splits
//!   it into N-hat and J-hat.
//! - Myopic: ranking plus head-count, then sequential hopping over the top
//!   N+J-hat channels.
//! - Musical Chairs: like Myopic but locks onto the first settled channel.

use crate::channel::AgentOutcome;
use crate::estimators::{
    clamp_ratio, invert_n_given_j, invert_n_plus_j, j_from_fraction, j_sequential,
    optimize_window, rank_channels, JammerMode, PhaseSchedule,
};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Cdj,
    Cnj,
    Cuj,
    Myopic,
    #[serde(rename = "mc")]
    MusicalChairs,
}

impl Algorithm {
    pub fn is_baseline(self) -> bool {
        matches!(self, Algorithm::Myopic | Algorithm::MusicalChairs)
    }

    /// CDJ receivers can attribute collisions to jammers.
    pub fn distinguishable(self) -> bool {
        self == Algorithm::Cdj
    }
}

/// Protocol phase. OR appears twice: once as a learning stage (CNJ/CUJ) and
/// once as the final stage every algorithm ends in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    ChannelRanking,
    OrLearn,
    JammerEstimation,
    OrFinal,
    Locked,
}

/// One SU running one of the five algorithms.
#[derive(Debug, Clone)]
pub struct SuAgent {
    algo: Algorithm,
    k: usize,
    sched: PhaseSchedule,
    rng: ChaCha12Rng,
    t: u64,
    phase: Phase,
    // Channel-ranking counters.
    o: Vec<u64>,
    b: Vec<u64>,
    f: u64,
    c: u64,
    c_j: u64,
    // Estimates.
    p_hat: Vec<f64>,
    pi: Vec<usize>,
    rank_of: Vec<usize>,
    cr_ratio: f64,
    n_hat: usize,
    j_hat: usize,
    total_hat: usize,
    n_star: usize,
    degraded: bool,
    // Orthogonalization state.
    width: usize,
    settled: bool,
    x: usize,
    settle_slot: Option<u64>,
    // Jammer-estimation sweep state (channel-indexed counters).
    je_pos: usize,
    je_o: Vec<u64>,
    je_c: Vec<u64>,
    je_f: Vec<u64>,
    last_selection: usize,
}

impl SuAgent {
    pub fn new(algo: Algorithm, k: usize, sched: PhaseSchedule, rng: ChaCha12Rng) -> Self {
        assert!(k >= 1 && sched.t_c >= 1);
        Self {
            algo,
            k,
            sched,
            rng,
            t: 0,
            phase: Phase::ChannelRanking,
            o: vec![0; k],
            b: vec![0; k],
            f: 0,
            c: 0,
            c_j: 0,
            p_hat: vec![1.0; k],
            pi: (0..k).collect(),
            rank_of: (0..k).collect(),
            cr_ratio: 0.0,
            n_hat: 1,
            j_hat: 0,
            total_hat: 1,
            n_star: 1,
            degraded: false,
            width: k,
            settled: false,
            x: 0,
            settle_slot: None,
            je_pos: 0,
            je_o: vec![0; k],
            je_c: vec![0; k],
            je_f: vec![0; k],
            last_selection: 0,
        }
    }

    /// Picks this slot's channel. Must be followed by `observe` with the
    /// outcome for that channel before the next `select`.
    pub fn select(&mut self) -> usize {
        let sel = match self.phase {
            Phase::ChannelRanking => self.rng.gen_range(0..self.k),
            Phase::OrLearn | Phase::OrFinal => {
                if self.settled {
                    self.x = (self.x + 1) % self.width;
                    self.pi[self.x]
                } else {
                    self.pi[self.rng.gen_range(0..self.width)]
                }
            }
            Phase::JammerEstimation => {
                self.je_pos = (self.je_pos + 1) % self.k;
                self.pi[self.je_pos]
            }
            Phase::Locked => self.pi[self.x],
        };
        self.last_selection = sel;
        sel
    }

    /// Consumes the outcome of the previous `select` and advances the phase
    /// clock.
    pub fn observe(&mut self, out: &AgentOutcome) {
        debug_assert_eq!(out.channel, self.last_selection, "feedback/selection mismatch");
        let ch = out.channel;
        match self.phase {
            Phase::ChannelRanking => {
                self.o[ch] += 1;
                if out.busy {
                    self.b[ch] += 1;
                } else {
                    self.f += 1;
                    if out.collision {
                        self.c += 1;
                        if out.jammer_involved {
                            self.c_j += 1;
                        }
                    }
                }
            }
            Phase::OrLearn | Phase::OrFinal => {
                if !self.settled && !out.busy && !out.collision {
                    self.settled = true;
                    self.x = self.rank_of[ch];
                    self.settle_slot = Some(self.t);
                    if self.algo == Algorithm::MusicalChairs && self.phase == Phase::OrFinal {
                        self.phase = Phase::Locked;
                    }
                }
            }
            Phase::JammerEstimation => {
                self.je_o[ch] += 1;
                if !out.busy {
                    self.je_f[ch] += 1;
                    if out.collision {
                        self.je_c[ch] += 1;
                    }
                }
            }
            Phase::Locked => {}
        }
        self.t += 1;
        if self.t == self.sched.t_c {
            self.finalize_cr();
        }
        // Boundaries may coincide when t_o or t_j is zero, so these are not
        // mutually exclusive with the one above.
        if matches!(self.algo, Algorithm::Cnj | Algorithm::Cuj) {
            if self.t == self.sched.t_c + self.sched.t_o {
                self.enter_je();
            }
            if self.t == self.sched.t_c + self.sched.t_o + self.sched.t_j {
                self.finalize_je();
            }
        }
    }

    fn degrade(&mut self) {
        self.degraded = true;
        self.n_hat = 1;
        self.j_hat = 0;
        self.n_star = 1;
    }

    fn install_ranking(&mut self) {
        self.p_hat = (0..self.k)
            .map(|i| if self.o[i] == 0 { 1.0 } else { self.b[i] as f64 / self.o[i] as f64 })
            .collect();
        self.pi = rank_channels(&self.p_hat);
        self.rank_of = vec![0; self.k];
        for (rank, &ch) in self.pi.iter().enumerate() {
            self.rank_of[ch] = rank;
        }
    }

    fn sorted_p_hat(&self) -> Vec<f64> {
        self.pi.iter().map(|&ch| self.p_hat[ch]).collect()
    }

    fn finalize_cr(&mut self) {
        self.install_ranking();
        self.settled = false;
        self.x = 0;
        self.settle_slot = None;
        match self.algo {
            Algorithm::Cdj => {
                match j_from_fraction(self.c_j, self.f, self.k) {
                    Some(j_hat) => {
                        self.j_hat = j_hat;
                        self.n_hat =
                            invert_n_given_j(clamp_ratio(self.c as f64, self.f as f64), j_hat, self.k);
                        let (m, _) = optimize_window(
                            JammerMode::Coordinated,
                            self.n_hat,
                            self.j_hat,
                            &self.sorted_p_hat(),
                        )
                        .expect("n_hat in [1,k]");
                        self.n_star = (self.n_hat + m).min(self.k);
                    }
                    None => self.degrade(),
                }
                self.width = self.n_star;
                self.phase = Phase::OrFinal;
            }
            Algorithm::Cnj => {
                if self.f == 0 {
                    self.degraded = true;
                    self.cr_ratio = 0.0;
                } else {
                    self.cr_ratio = clamp_ratio(self.c as f64, self.f as f64);
                }
                self.width = self.k;
                self.phase = Phase::OrLearn;
            }
            Algorithm::Cuj => {
                if self.f == 0 {
                    self.degraded = true;
                    self.total_hat = 1;
                } else {
                    self.total_hat =
                        invert_n_plus_j(clamp_ratio(self.c as f64, self.f as f64), self.k);
                }
                self.width = self.total_hat;
                self.phase = Phase::OrLearn;
            }
            Algorithm::Myopic | Algorithm::MusicalChairs => {
                if self.f == 0 {
                    self.degraded = true;
                    self.total_hat = 1;
                } else {
                    self.total_hat =
                        invert_n_plus_j(clamp_ratio(self.c as f64, self.f as f64), self.k);
                }
                self.n_star = self.total_hat;
                self.width = self.total_hat;
                self.phase = Phase::OrFinal;
            }
        }
    }

    fn enter_je(&mut self) {
        // Sweep starts one past the channel held at the end of OR.
        self.je_pos = self.rank_of[self.last_selection];
        self.phase = Phase::JammerEstimation;
    }

    fn finalize_je(&mut self) {
        match j_sequential(&self.je_o, &self.je_c, &self.je_f, self.sched.t_j, self.k) {
            Some(j_hat) if !self.degraded => {
                self.j_hat = j_hat;
                let mode = match self.algo {
                    Algorithm::Cnj => {
                        self.n_hat = invert_n_given_j(self.cr_ratio, j_hat, self.k);
                        JammerMode::Coordinated
                    }
                    Algorithm::Cuj => {
                        self.n_hat = self.total_hat.saturating_sub(j_hat).max(1);
                        JammerMode::Uncoordinated
                    }
                    _ => unreachable!("only CNJ/CUJ run a jammer-estimation sweep"),
                };
                let (m, _) = optimize_window(mode, self.n_hat, self.j_hat, &self.sorted_p_hat())
                    .expect("n_hat in [1,k]");
                self.n_star = (self.n_hat + m).min(self.k);
            }
            _ => self.degrade(),
        }
        self.width = self.n_star;
        self.settled = false;
        self.x = 0;
        self.settle_slot = None;
        self.phase = Phase::OrFinal;
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algo
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn n_hat(&self) -> usize {
        self.n_hat
    }

    pub fn j_hat(&self) -> usize {
        self.j_hat
    }

    pub fn total_hat(&self) -> usize {
        self.total_hat
    }

    pub fn n_star(&self) -> usize {
        self.n_star
    }

    pub fn degraded(&self) -> bool {
        self.degraded
    }

    pub fn settled(&self) -> bool {
        self.settled
    }

    /// Slot at which the agent settled in its current OR stage.
    pub fn settle_slot(&self) -> Option<u64> {
        self.settle_slot
    }

    pub fn p_hat(&self) -> &[f64] {
        &self.p_hat
    }

    /// Channel chosen in the most recent slot.
    pub fn last_selection(&self) -> usize {
        self.last_selection
    }

    /// Ranking (0-based channel indices, best first).
    pub fn pi(&self) -> &[usize] {
        &self.pi
    }

    /// Current hopping width (N*, K or N+J-hat depending on phase/algorithm).
    pub fn width(&self) -> usize {
        self.width
    }

    /// Channel-ranking counters (o, b, f, c, c_j), exposed for tests.
    pub fn cr_counters(&self) -> (&[u64], &[u64], u64, u64, u64) {
        (&self.o, &self.b, self.f, self.c, self.c_j)
    }
}
