//! Episode orchestration, oracle benchmark and regret aggregation.
//!
//! One episode advances the environment, all SUs and all jammers in lockstep
//! and is strictly deterministic given (config, run index). Runs are
//! independent; aggregation folds run results in run-index order so that
//! serial and parallel execution produce bit-identical curves.

use crate::channel::{resolve_slot_into, AgentOutcome, ResolveScratch};
use crate::config::ResolvedConfig;
use crate::estimators::{optimize_window, JammerMode};
use crate::jammer::{CoordinatedJammer, UncoordinatedJammer};
use crate::rng::{derive_rng, DOMAIN_ENV, DOMAIN_JAMMER, DOMAIN_SU};
use crate::su::SuAgent;
use crate::Error;

/// Final per-agent record of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentReport {
    pub n_hat: usize,
    pub j_hat: usize,
    pub total_hat: usize,
    pub n_star: usize,
    pub degraded: bool,
    /// Slot at which the agent settled in its final hopping stage.
    pub settle_slot: Option<u64>,
    /// Ranking correct for every channel pair with true gap > epsilon
    /// (vacuously true when no epsilon is configured).
    pub ranking_eps_correct: bool,
}

/// Full per-slot record of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub run: u64,
    pub successes: Vec<u16>,
    pub su_su_collisions: Vec<u16>,
    pub su_jam_collisions: Vec<u16>,
    pub busy_selections: Vec<u16>,
    pub agents: Vec<AgentReport>,
    /// All agents settled in their final stage and share the same hopping
    /// order (identical width and ranking prefix) — the precondition of the
    /// orthogonality invariant.
    pub common_hop_order: bool,
    pub jammer_degraded: bool,
}

impl Trajectory {
    pub fn all_settled(&self) -> bool {
        self.agents.iter().all(|a| a.settle_slot.is_some())
    }

    /// Latest final-stage settle slot across agents.
    pub fn last_settle_slot(&self) -> Option<u64> {
        self.agents.iter().map(|a| a.settle_slot).collect::<Option<Vec<_>>>()?.into_iter().max()
    }

    /// SU-SU collision count in slots strictly after the last settle slot.
    pub fn post_settle_su_su(&self) -> Option<u64> {
        let last = self.last_settle_slot()?;
        Some(
            self.su_su_collisions
                .iter()
                .enumerate()
                .skip(last as usize + 1)
                .map(|(_, &c)| c as u64)
                .sum(),
        )
    }
}

/// Compact per-run result kept after the trajectory is folded away.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub run: u64,
    pub cum_successes: Vec<u32>,
    pub agents: Vec<AgentReport>,
    pub last_settle_slot: Option<u64>,
    pub post_settle_su_su: Option<u64>,
    pub common_hop_order: bool,
    pub jammer_degraded: bool,
}

impl RunResult {
    pub fn from_trajectory(t: &Trajectory) -> Self {
        let mut cum = Vec::with_capacity(t.successes.len());
        let mut acc = 0u32;
        for &s in &t.successes {
            acc += s as u32;
            cum.push(acc);
        }
        Self {
            run: t.run,
            cum_successes: cum,
            agents: t.agents.clone(),
            last_settle_slot: t.last_settle_slot(),
            post_settle_su_su: t.post_settle_su_su(),
            common_hop_order: t.common_hop_order,
            jammer_degraded: t.jammer_degraded,
        }
    }
}

/// Expected total SU successes per slot for the best sequential-hopping
/// policy under the same attack, from the true parameters.
pub fn oracle_throughput(p: &[f64], n: usize, j: usize, mode: JammerMode) -> Result<f64, Error> {
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (_, obj) = optimize_window(mode, n, j, &sorted)?;
    Ok(obj * n as f64)
}

fn ranking_eps_correct(pi: &[usize], true_p: &[f64], eps: f64) -> bool {
    let mut rank_of = vec![0usize; pi.len()];
    for (r, &ch) in pi.iter().enumerate() {
        rank_of[ch] = r;
    }
    for a in 0..true_p.len() {
        for b in 0..true_p.len() {
            if true_p[a] + eps < true_p[b] && rank_of[a] > rank_of[b] {
                return false;
            }
        }
    }
    true
}

/// Runs one deterministic episode.
pub fn run_episode(cfg: &ResolvedConfig, run: u64) -> Trajectory {
    let model = cfg.model();
    let k = cfg.k;
    let horizon = cfg.horizon as usize;
    let mut env_rng = derive_rng(cfg.seed, run, DOMAIN_ENV, 0);
    let mut agents: Vec<SuAgent> = (0..cfg.n)
        .map(|i| {
            SuAgent::new(cfg.algorithm, k, cfg.schedule, derive_rng(cfg.seed, run, DOMAIN_SU, i as u64))
        })
        .collect();
    let mut coord: Option<CoordinatedJammer> = None;
    let mut uncoord: Vec<UncoordinatedJammer> = Vec::new();
    if cfg.j > 0 {
        match cfg.jammer_mode {
            JammerMode::Coordinated => {
                coord = Some(CoordinatedJammer::new(
                    k,
                    cfg.j,
                    cfg.schedule.t_c,
                    derive_rng(cfg.seed, run, DOMAIN_JAMMER, 0),
                ));
            }
            JammerMode::Uncoordinated => {
                uncoord = (0..cfg.j)
                    .map(|i| {
                        UncoordinatedJammer::new(
                            k,
                            cfg.schedule.t_c,
                            derive_rng(cfg.seed, run, DOMAIN_JAMMER, i as u64),
                        )
                    })
                    .collect();
            }
        }
    }

    let mut busy = Vec::with_capacity(k);
    let mut su_sel = vec![0usize; cfg.n];
    let mut jam_sel: Vec<usize> = Vec::with_capacity(cfg.j);
    let mut jam_count = vec![0u8; k];
    let mut su_present = vec![false; k];
    let mut scratch = ResolveScratch::default();
    let mut outcomes: Vec<AgentOutcome> = Vec::with_capacity(cfg.n);

    let mut successes = vec![0u16; horizon];
    let mut su_su = vec![0u16; horizon];
    let mut su_jam = vec![0u16; horizon];
    let mut busy_sel = vec![0u16; horizon];

    let distinguishable = cfg.algorithm.distinguishable();

    for t in 0..horizon {
        model.draw_occupancy_into(&mut env_rng, &mut busy);
        for (i, agent) in agents.iter_mut().enumerate() {
            su_sel[i] = agent.select();
        }
        jam_sel.clear();
        if let Some(jam) = coord.as_mut() {
            jam_sel.extend_from_slice(jam.select());
        }
        for jam in uncoord.iter_mut() {
            jam_sel.push(jam.select());
        }
        resolve_slot_into(&busy, &su_sel, &jam_sel, distinguishable, &mut scratch, &mut outcomes)
            .expect("selections in range");

        for ch in 0..k {
            su_present[ch] = scratch.su_count()[ch] > 0;
        }
        jam_count.iter_mut().for_each(|c| *c = 0);
        for &ch in &jam_sel {
            jam_count[ch] += 1;
        }

        for (i, out) in outcomes.iter().enumerate() {
            if out.busy {
                busy_sel[t] += 1;
            } else if out.success {
                successes[t] += 1;
            } else if scratch.su_count()[out.channel] > 1 {
                su_su[t] += 1;
            } else {
                su_jam[t] += 1;
            }
            agents[i].observe(out);
        }
        if let Some(jam) = coord.as_mut() {
            jam.observe(&busy, &su_present);
        }
        for (idx, jam) in uncoord.iter_mut().enumerate() {
            let ch = jam_sel[idx];
            let others = !busy[ch] && (su_present[ch] || jam_count[ch] >= 2);
            jam.observe(&busy, others);
        }
    }

    let eps = cfg.epsilon;
    let reports: Vec<AgentReport> = agents
        .iter()
        .map(|a| AgentReport {
            n_hat: a.n_hat(),
            j_hat: a.j_hat(),
            total_hat: a.total_hat(),
            n_star: a.n_star(),
            degraded: a.degraded(),
            settle_slot: a.settle_slot(),
            ranking_eps_correct: match eps {
                Some(e) => ranking_eps_correct(a.pi(), &cfg.p, e),
                None => true,
            },
        })
        .collect();

    let common_hop_order = reports.iter().all(|r| r.settle_slot.is_some())
        && agents.windows(2).all(|w| {
            w[0].width() == w[1].width() && w[0].pi()[..w[0].width()] == w[1].pi()[..w[1].width()]
        });

    let jammer_degraded = coord.as_ref().map(|j| j.degraded()).unwrap_or(false)
        || uncoord.iter().any(|j| j.degraded());

    Trajectory {
        run,
        successes,
        su_su_collisions: su_su,
        su_jam_collisions: su_jam,
        busy_selections: busy_sel,
        agents: reports,
        common_hop_order,
        jammer_degraded,
    }
}

/// Order-stable aggregate over runs of one config.
#[derive(Debug, Clone)]
pub struct Aggregate {
    pub horizon: usize,
    pub runs: usize,
    sum_cum: Vec<f64>,
    sumsq_cum: Vec<f64>,
    pub results: Vec<RunResult>,
}

impl Aggregate {
    pub fn from_results(mut results: Vec<RunResult>, horizon: usize) -> Self {
        results.sort_by_key(|r| r.run);
        let mut sum = vec![0.0; horizon];
        let mut sumsq = vec![0.0; horizon];
        for r in &results {
            assert_eq!(r.cum_successes.len(), horizon, "mixed configs in aggregate");
            for (t, &c) in r.cum_successes.iter().enumerate() {
                let x = c as f64;
                sum[t] += x;
                sumsq[t] += x * x;
            }
        }
        Self { horizon, runs: results.len(), sum_cum: sum, sumsq_cum: sumsq, results }
    }

    /// Sub-aggregate over the runs satisfying `pred` (for example, runs whose
    /// agents share a common hopping order). Returns None if no run matches.
    pub fn filter<F: Fn(&RunResult) -> bool>(&self, pred: F) -> Option<Aggregate> {
        let picked: Vec<RunResult> = self.results.iter().filter(|r| pred(r)).cloned().collect();
        if picked.is_empty() {
            return None;
        }
        Some(Aggregate::from_results(picked, self.horizon))
    }

    pub fn mean_cum(&self, t: usize) -> f64 {
        self.sum_cum[t] / self.runs as f64
    }

    /// Standard error of the cumulative success count at slot t.
    pub fn stderr_cum(&self, t: usize) -> f64 {
        let n = self.runs as f64;
        if self.runs < 2 {
            return 0.0;
        }
        let mean = self.sum_cum[t] / n;
        let var = (self.sumsq_cum[t] / n - mean * mean).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Mean cumulative regret curve with standard errors.
#[derive(Debug, Clone)]
pub struct RegretCurve {
    pub oracle_rate: f64,
    pub mean_regret: Vec<f64>,
    pub stderr_regret: Vec<f64>,
    pub mean_throughput: Vec<f64>,
}

impl RegretCurve {
    pub fn from_aggregate(agg: &Aggregate, oracle_rate: f64) -> Self {
        let mut mean_regret = Vec::with_capacity(agg.horizon);
        let mut stderr = Vec::with_capacity(agg.horizon);
        let mut mean_tp = Vec::with_capacity(agg.horizon);
        for t in 0..agg.horizon {
            let cum = agg.mean_cum(t);
            mean_regret.push((t as f64 + 1.0) * oracle_rate - cum);
            stderr.push(agg.stderr_cum(t));
            mean_tp.push(cum);
        }
        Self { oracle_rate, mean_regret, stderr_regret: stderr, mean_throughput: mean_tp }
    }

    pub fn final_regret(&self) -> f64 {
        *self.mean_regret.last().expect("nonempty curve")
    }

    /// Mean per-slot regret slope over the final `window` slots.
    pub fn tail_slope(&self, window: usize) -> f64 {
        let t = self.mean_regret.len();
        assert!(window >= 1 && window < t);
        (self.mean_regret[t - 1] - self.mean_regret[t - 1 - window]) / window as f64
    }
}

/// Serial Monte Carlo over `cfg.runs` episodes.
pub fn run_many(cfg: &ResolvedConfig) -> Aggregate {
    let results: Vec<RunResult> = (0..cfg.runs as u64)
        .map(|run| RunResult::from_trajectory(&run_episode(cfg, run)))
        .collect();
    Aggregate::from_results(results, cfg.horizon as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, ScheduleSpec};
    use crate::su::Algorithm;

    fn cfg(algorithm: Algorithm) -> ResolvedConfig {
        ExperimentConfig {
            algorithm,
            k: 8,
            n: 4,
            j: 2,
            p: Some(vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]),
            horizon: 7000,
            schedule: ScheduleSpec::Explicit { t_c: 3000, t_o: 50, t_j: 1000 },
            runs: 4,
            seed: 99,
            theta: None,
            jammer_mode: None,
        }
        .resolve()
        .unwrap()
    }

    #[test]
    fn episodes_are_deterministic() {
        let c = cfg(Algorithm::Cnj);
        let a = run_episode(&c, 3);
        let b = run_episode(&c, 3);
        assert_eq!(a.successes, b.successes);
        assert_eq!(a.su_su_collisions, b.su_su_collisions);
        assert_eq!(a.agents, b.agents);
    }

    #[test]
    fn per_slot_outcomes_partition_the_agents() {
        let c = cfg(Algorithm::Cuj);
        let t = run_episode(&c, 0);
        for slot in 0..c.horizon as usize {
            let total = t.successes[slot]
                + t.su_su_collisions[slot]
                + t.su_jam_collisions[slot]
                + t.busy_selections[slot];
            assert_eq!(total as usize, c.n, "slot {slot}");
        }
    }

    #[test]
    fn lone_user_free_channels_never_fails() {
        let c = ExperimentConfig {
            algorithm: Algorithm::Cdj,
            k: 4,
            n: 1,
            j: 0,
            p: Some(vec![0.0, 0.1, 0.2, 0.3]),
            horizon: 500,
            schedule: ScheduleSpec::Explicit { t_c: 100, t_o: 0, t_j: 0 },
            runs: 1,
            seed: 5,
            theta: None,
            jammer_mode: None,
        }
        .resolve()
        .unwrap();
        let t = run_episode(&c, 0);
        // After learning, a lone SU on its (free) best channel succeeds every
        // slot; during learning it can only lose slots to busy channels.
        assert!(t.su_su_collisions.iter().all(|&c| c == 0));
        assert!(t.su_jam_collisions.iter().all(|&c| c == 0));
        let tail: u32 = t.successes[200..].iter().map(|&s| s as u32).sum();
        assert_eq!(tail, 300);
    }

    #[test]
    fn oracle_throughput_examples() {
        assert_eq!(oracle_throughput(&[0.0; 8], 4, 0, JammerMode::Coordinated).unwrap(), 4.0);
        let p = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
        let r = oracle_throughput(&p, 4, 2, JammerMode::Coordinated).unwrap();
        assert!((r - 1.36).abs() < 1e-12);
        let u = oracle_throughput(&p, 4, 2, JammerMode::Uncoordinated).unwrap();
        assert!((u - 1.664).abs() < 1e-12);
    }

    #[test]
    fn regret_curve_shapes() {
        let c = cfg(Algorithm::Cnj);
        let agg = run_many(&c);
        let rate = oracle_throughput(&c.p, c.n, c.j, c.jammer_mode).unwrap();
        let curve = RegretCurve::from_aggregate(&agg, rate);
        assert_eq!(curve.mean_regret.len(), c.horizon as usize);
        // Regret grows during learning.
        assert!(curve.mean_regret[2999] > 100.0);
        // Zero successes would mean regret(t) = (t+1) * rate; sanity: ours is below.
        assert!(curve.final_regret() < c.horizon as f64 * rate);
        for t in 0..c.horizon as usize {
            assert!(curve.stderr_regret[t] >= 0.0);
        }
    }

    #[test]
    fn orthogonality_invariant_over_full_trajectories() {
        for algo in [Algorithm::Cdj, Algorithm::Cnj, Algorithm::Cuj, Algorithm::Myopic] {
            let mut c = cfg(algo);
            c.runs = 8;
            for run in 0..c.runs as u64 {
                let t = run_episode(&c, run);
                if t.common_hop_order {
                    assert_eq!(
                        t.post_settle_su_su(),
                        Some(0),
                        "{algo:?} run {run}: settled agents with a common hopping order collided"
                    );
                }
            }
        }
    }

    #[test]
    fn filtered_aggregate_restricts_runs() {
        let c = cfg(Algorithm::Cnj);
        let agg = run_many(&c);
        let evens = agg.filter(|r| r.run % 2 == 0).unwrap();
        assert_eq!(evens.runs, 2);
        assert!(agg.filter(|_| false).is_none());
        let all = agg.filter(|_| true).unwrap();
        assert_eq!(all.mean_cum(100).to_bits(), agg.mean_cum(100).to_bits());
    }

    #[test]
    fn parallel_equals_serial_aggregation() {
        let c = cfg(Algorithm::Cdj);
        let serial = run_many(&c);
        // Simulate out-of-order arrival.
        let mut shuffled: Vec<RunResult> = (0..c.runs as u64)
            .rev()
            .map(|run| RunResult::from_trajectory(&run_episode(&c, run)))
            .collect();
        shuffled.swap(0, 1);
        let agg = Aggregate::from_results(shuffled, c.horizon as usize);
        for t in [0, 1000, 6999] {
            assert_eq!(serial.mean_cum(t).to_bits(), agg.mean_cum(t).to_bits());
        }
    }
}
