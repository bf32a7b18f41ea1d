//! Closed-form estimators, window optimizers and phase-length calculators.
//!
//! All the non-trivial arithmetic of the protocols lives here as pure
//! functions: collision-probability models for coordinated and uncoordinated
//! jammers, the inversions that turn empirical collision fractions into
//! population estimates, the throughput-per-channel window optimizers that
//! pick how many extra channels to hop over, and the sample-complexity
//! schedules that size the learning phases.

use crate::su::Algorithm;
use crate::Error;
use serde::{Deserialize, Serialize};

/// How the jammers behave: coordinated jammers emit J pairwise-distinct
/// channels per slot, uncoordinated jammers draw independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JammerMode {
    Coordinated,
    Uncoordinated,
}

/// Nearest integer, ties away from zero (the convention used by every
/// rounded estimate in the protocols).
pub fn round_half_away(x: f64) -> f64 {
    x.round()
}

/// Clamps an empirical collision fraction c/f away from 1 so that
/// log(1 - c/f) stays finite: cap at 1 - 1/(2f).
pub fn clamp_ratio(c: f64, f: f64) -> f64 {
    debug_assert!(f > 0.0);
    (c / f).clamp(0.0, 1.0 - 1.0 / (2.0 * f))
}

/// Probability that a given SU's transmission on a vacant channel collides,
/// when all N SUs hop uniformly over [K] and J jammers attack per `mode`.
pub fn collision_prob(mode: JammerMode, n: usize, j: usize, k: usize) -> Result<f64, Error> {
    if k == 0 || n == 0 {
        return Err(Error::RangeViolation("collision_prob needs n >= 1, k >= 1".into()));
    }
    let kf = k as f64;
    match mode {
        JammerMode::Coordinated => {
            if j >= k {
                return Err(Error::RangeViolation("coordinated jammers need j < k".into()));
            }
            Ok(1.0 - (1.0 - j as f64 / kf) * (1.0 - 1.0 / kf).powi(n as i32 - 1))
        }
        JammerMode::Uncoordinated => Ok(1.0 - (1.0 - 1.0 / kf).powi((n + j) as i32 - 1)),
    }
}

/// Inverts the coordinated collision probability for N with J known:
/// N = 1 + [log(1 - p_c) - log(1 - J/K)] / log(1 - 1/K), rounded and
/// clamped to [1, K].
pub fn invert_n_given_j(p_c_hat: f64, j: usize, k: usize) -> usize {
    debug_assert!((0.0..1.0).contains(&p_c_hat) && j < k);
    let kf = k as f64;
    let raw = 1.0 + ((1.0 - p_c_hat).ln() - (1.0 - j as f64 / kf).ln()) / (1.0 - 1.0 / kf).ln();
    (round_half_away(raw) as i64).clamp(1, k as i64) as usize
}

/// Inverts the uncoordinated collision probability for the total transmitter
/// count N+J: round(1 + log(1 - p_c)/log(1 - 1/K)), clamped to [1, K].
pub fn invert_n_plus_j(p_c_hat: f64, k: usize) -> usize {
    debug_assert!((0.0..1.0).contains(&p_c_hat) && k >= 1);
    let kf = k as f64;
    let raw = 1.0 + (1.0 - p_c_hat).ln() / (1.0 - 1.0 / kf).ln();
    (round_half_away(raw) as i64).clamp(1, k as i64) as usize
}

/// Jammer count from the fraction of free slots that had a jammer collision:
/// round(K * c_j / f), clamped to [0, K-1]. `None` when no free slots were
/// observed.
pub fn j_from_fraction(c_j: u64, f: u64, k: usize) -> Option<usize> {
    if f == 0 {
        return None;
    }
    let raw = k as f64 * c_j as f64 / f as f64;
    Some((round_half_away(raw) as i64).clamp(0, k as i64 - 1) as usize)
}

/// Jammer count from per-channel sequential-hopping counters:
/// round(Σ_i K * (o_i/t_j) * (c_i/f_i)); channels never observed free
/// contribute 0. `None` when no channel was ever observed free.
pub fn j_sequential(o: &[u64], c: &[u64], f: &[u64], t_j: u64, k: usize) -> Option<usize> {
    if t_j == 0 || f.iter().all(|&x| x == 0) {
        return None;
    }
    let mut sum = 0.0;
    for i in 0..o.len() {
        if f[i] > 0 {
            sum += k as f64 * (o[i] as f64 / t_j as f64) * (c[i] as f64 / f[i] as f64);
        }
    }
    Some((round_half_away(sum) as i64).clamp(0, k as i64 - 1) as usize)
}

/// The jammer's own inversion for N from its learning-phase counters:
/// round(log(1 - C/(J*T_C - B)) / log(1 - 1/K)), clamped to [1, K].
/// `None` when every attack opportunity was busy (denominator < 1).
///
/// Counts are f64 so exact expectations can be round-tripped in tests.
pub fn jammer_invert_n(c: f64, b: f64, j: usize, t_c: u64, k: usize) -> Option<usize> {
    let denom = j as f64 * t_c as f64 - b;
    if denom < 1.0 {
        return None;
    }
    let ratio = clamp_ratio(c, denom);
    let raw = (1.0 - ratio).ln() / (1.0 - 1.0 / k as f64).ln();
    Some((round_half_away(raw) as i64).clamp(1, k as i64) as usize)
}

/// Expected per-SU throughput when N SUs hop sequentially over the top n+w
/// channels of `p_sorted` (ascending busy probabilities) under J jammers in
/// `mode`. The uncoordinated branch follows the printed two-piece form.
pub fn window_objective(mode: JammerMode, n: usize, j: usize, p_sorted: &[f64], w: usize) -> f64 {
    let total = (n + w) as f64;
    let avail = |i: usize| 1.0 - p_sorted[i];
    match mode {
        JammerMode::Coordinated => {
            let jam_free = 1.0 - j as f64 / n as f64;
            let top: f64 = (0..n).map(avail).sum();
            let extra: f64 = (n..n + w).map(avail).sum();
            (top * jam_free + extra) / total
        }
        JammerMode::Uncoordinated => {
            let width = n + j - 1;
            let jam_free = if j == 0 {
                1.0
            } else {
                (1.0 - 1.0 / width as f64).powi(j as i32)
            };
            if j > 0 && w <= j - 1 {
                (0..n + w).map(avail).sum::<f64>() * jam_free / total
            } else {
                let attacked: f64 = (0..width.min(n + w)).map(avail).sum();
                let free: f64 = (width.min(n + w)..n + w).map(avail).sum();
                (attacked * jam_free + free) / total
            }
        }
    }
}

/// Exhaustive scan of `window_objective` over w in [0, K-N]; returns the
/// smallest maximizing w and its objective value.
pub fn optimize_window(
    mode: JammerMode,
    n: usize,
    j: usize,
    p_sorted: &[f64],
) -> Result<(usize, f64), Error> {
    let k = p_sorted.len();
    if n == 0 || n > k {
        return Err(Error::RangeViolation("optimize_window needs 1 <= n <= k".into()));
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for w in 0..=k - n {
        let obj = window_objective(mode, n, j, p_sorted, w);
        if obj > best.1 {
            best = (w, obj);
        }
    }
    Ok(best)
}

/// Stable ascending sort of channel indices by estimated busy probability;
/// ties break toward the lower index. Indices are 0-based.
pub fn rank_channels(p_hat: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p_hat.len()).collect();
    idx.sort_by(|&a, &b| p_hat[a].total_cmp(&p_hat[b]));
    idx
}

/// Confidence/tolerance knobs for the theorem-derived schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningParams {
    pub delta: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl LearningParams {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::RangeViolation("delta must lie in (0, 1]".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::RangeViolation("epsilon must lie in (0, 1)".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return Err(Error::RangeViolation("gamma must lie in (0, 0.5)".into()));
        }
        Ok(())
    }

    /// Tolerance for the jammer-count estimate's collision fraction.
    pub fn epsilon1(&self, algo: Algorithm, k: usize) -> f64 {
        match algo {
            Algorithm::Cuj => self.gamma / (std::f64::consts::E * k as f64),
            _ => self.gamma / (2.0 * std::f64::consts::E * k as f64),
        }
    }

    /// Tolerance for the user-count estimate's collision fraction.
    pub fn epsilon2(&self, algo: Algorithm, k: usize) -> f64 {
        match algo {
            Algorithm::Cuj => self.gamma / (std::f64::consts::E * k as f64),
            _ => self.gamma / k as f64,
        }
    }
}

/// Where a schedule came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleSource {
    Explicit,
    Theorem,
}

/// Lengths of the learning phases: channel ranking (t_c), orthogonalization
/// (t_o) and jammer estimation (t_j). CDJ and the baselines only use t_c.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub t_c: u64,
    pub t_o: u64,
    pub t_j: u64,
    pub source: ScheduleSource,
}

impl PhaseSchedule {
    pub fn explicit(t_c: u64, t_o: u64, t_j: u64) -> Self {
        Self { t_c, t_o, t_j, source: ScheduleSource::Explicit }
    }

    /// Total learning budget t_c + t_o + t_j.
    pub fn learning_slots(&self) -> u64 {
        self.t_c + self.t_o + self.t_j
    }
}

fn round_len(x: f64) -> u64 {
    round_half_away(x).max(0.0) as u64
}

/// Sample-complexity schedules from the high-probability guarantees.
///
/// `theta` is the availability floor; smaller theta or delta means longer
/// phases. The baselines borrow the CNJ channel-ranking length.
pub fn phase_lengths(
    algo: Algorithm,
    k: usize,
    theta: f64,
    params: &LearningParams,
) -> Result<PhaseSchedule, Error> {
    if k < 2 {
        return Err(Error::RangeViolation("phase_lengths needs k >= 2".into()));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::RangeViolation("theta must lie in (0, 1]".into()));
    }
    params.validate()?;
    let kf = k as f64;
    let (delta, eps) = (params.delta, params.epsilon);
    let e1 = params.epsilon1(algo, k);
    let e2 = params.epsilon2(algo, k);
    let max = |terms: &[f64]| terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let sched = match algo {
        Algorithm::Cdj => {
            let t_c = max(&[
                8.0 / theta * (18.0 * kf / delta).ln(),
                1.0 / (e1 * e1 * theta) * (12.0 * kf / delta).ln(),
                1.0 / (e2 * e2 * theta) * (24.0 * kf / delta).ln(),
                8.0 * kf * (4.0 * kf * kf / delta).ln(),
                4.0 * kf / (eps * eps) * (8.0 * kf * kf / delta).ln(),
            ]);
            PhaseSchedule { t_c: round_len(t_c), t_o: 0, t_j: 0, source: ScheduleSource::Theorem }
        }
        Algorithm::Cnj | Algorithm::Cuj | Algorithm::Myopic | Algorithm::MusicalChairs => {
            let t_c = max(&[
                8.0 / theta * (12.0 * kf / delta).ln(),
                1.0 / (e1 * e1 * theta) * (24.0 * kf / delta).ln(),
                8.0 * kf * (12.0 * kf * kf / delta).ln(),
                4.0 * kf / (eps * eps) * (24.0 * kf * kf / delta).ln(),
            ]);
            if matches!(algo, Algorithm::Myopic | Algorithm::MusicalChairs) {
                // Baselines only learn channel statistics and a head count.
                PhaseSchedule {
                    t_c: round_len(t_c),
                    t_o: 0,
                    t_j: 0,
                    source: ScheduleSource::Theorem,
                }
            } else {
                let settle = 1.0 - (theta / kf) * (1.0 - 1.0 / kf).powi(k as i32 - 1);
                let t_o = (delta / (3.0 * kf)).ln() / settle.ln();
                let t_j = max(&[
                    8.0 / theta * (6.0 * kf / delta).ln(),
                    1.0 / (e2 * e2 * theta) * (12.0 * kf / delta).ln(),
                ]);
                PhaseSchedule {
                    t_c: round_len(t_c),
                    t_o: round_len(t_o),
                    t_j: round_len(t_j),
                    source: ScheduleSource::Theorem,
                }
            }
        }
    };
    Ok(sched)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P8: [f64; 8] = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    const PARAMS: LearningParams = LearningParams { delta: 0.3, epsilon: 0.05, gamma: 0.4 };

    #[test]
    fn collision_prob_values() {
        assert_eq!(collision_prob(JammerMode::Coordinated, 1, 0, 5).unwrap(), 0.0);
        let c = collision_prob(JammerMode::Coordinated, 8, 4, 16).unwrap();
        assert!((c - 0.52261).abs() < 1e-4, "{c}");
        let u = collision_prob(JammerMode::Uncoordinated, 4, 2, 8).unwrap();
        assert!((u - (1.0 - 0.875f64.powi(5))).abs() < 1e-12);
        assert!((u - 0.48709).abs() < 1e-5);
        assert!(collision_prob(JammerMode::Coordinated, 1, 8, 8).is_err());
        assert!(collision_prob(JammerMode::Coordinated, 0, 0, 8).is_err());
    }

    #[test]
    fn inversion_identities_spot() {
        assert_eq!(invert_n_given_j(0.0, 0, 8), 1);
        let p = collision_prob(JammerMode::Coordinated, 8, 4, 16).unwrap();
        assert_eq!(invert_n_given_j(p, 4, 16), 8);
        assert_eq!(invert_n_plus_j(0.0, 8), 1);
        assert_eq!(invert_n_plus_j(1.0 - 0.875f64.powi(5), 8), 6);
    }

    #[test]
    fn j_from_fraction_examples() {
        assert_eq!(j_from_fraction(25, 100, 16), Some(4));
        assert_eq!(j_from_fraction(0, 50, 16), Some(0));
        assert_eq!(j_from_fraction(80, 80, 8), Some(7));
        assert_eq!(j_from_fraction(3, 0, 8), None);
    }

    #[test]
    fn j_sequential_examples() {
        let o = [100u64; 8];
        let c = [25u64; 8];
        let f = [100u64; 8];
        assert_eq!(j_sequential(&o, &c, &f, 800, 8), Some(2));
        assert_eq!(j_sequential(&o, &[0; 8], &f, 800, 8), Some(0));
        assert_eq!(j_sequential(&o, &c, &[0; 8], 800, 8), None);
    }

    #[test]
    fn jammer_inversion_examples() {
        assert_eq!(jammer_invert_n(0.0, 0.0, 4, 1000, 16), Some(1));
        assert_eq!(jammer_invert_n(1613.0, 0.0, 4, 1000, 16), Some(8));
        assert_eq!(jammer_invert_n(0.0, 4000.0, 4, 1000, 16), None);
        // Exact expectations round-trip.
        for n in 2..=10usize {
            let k = 16;
            let hit = 1.0 - (1.0 - 1.0 / k as f64).powi(n as i32);
            let c = 4.0 * 1000.0 * hit;
            assert_eq!(jammer_invert_n(c, 0.0, 4, 1000, k), Some(n));
        }
    }

    #[test]
    fn window_scan_coordinated_example() {
        let expect = [0.325, 0.34, 1.0 / 3.0, 2.2 / 7.0, 0.2875];
        for (w, &e) in expect.iter().enumerate() {
            let got = window_objective(JammerMode::Coordinated, 4, 2, &P8, w);
            assert!((got - e).abs() < 1e-10, "w={w}: {got} vs {e}");
        }
        let (m, obj) = optimize_window(JammerMode::Coordinated, 4, 2, &P8).unwrap();
        assert_eq!(m, 1);
        assert!((obj - 0.34).abs() < 1e-12);
    }

    #[test]
    fn window_scan_uncoordinated_example() {
        let (m, obj) = optimize_window(JammerMode::Uncoordinated, 4, 2, &P8).unwrap();
        assert_eq!(m, 0);
        assert!((obj - 0.65 * 0.64).abs() < 1e-12, "{obj}");
    }

    #[test]
    fn window_no_jammers_prefers_no_extras() {
        let (m, obj) = optimize_window(JammerMode::Coordinated, 4, 0, &P8).unwrap();
        assert_eq!(m, 0);
        assert!((obj - 0.65).abs() < 1e-12);
        let (m, _) = optimize_window(JammerMode::Uncoordinated, 4, 0, &P8).unwrap();
        assert_eq!(m, 0);
    }

    #[test]
    fn rank_channels_examples() {
        assert_eq!(rank_channels(&[0.3, 0.1, 0.2]), vec![1, 2, 0]);
        assert_eq!(rank_channels(&[0.5, 0.5]), vec![0, 1]);
        assert_eq!(rank_channels(&[0.1, 0.2, 0.3]), vec![0, 1, 2]);
    }

    #[test]
    fn phase_lengths_examples() {
        let s = phase_lengths(Algorithm::Cnj, 8, 0.45, &PARAMS).unwrap();
        assert_eq!(s.t_o, 196);
        assert_eq!(s.t_j, 5127);
        assert_eq!(s.source, ScheduleSource::Theorem);
        let cdj = phase_lengths(Algorithm::Cdj, 8, 0.45, &PARAMS).unwrap();
        assert_eq!((cdj.t_o, cdj.t_j), (0, 0));
        assert!(cdj.t_c > 0);
    }

    #[test]
    fn phase_lengths_monotone_in_delta_and_theta() {
        for algo in [Algorithm::Cdj, Algorithm::Cnj, Algorithm::Cuj] {
            let base = phase_lengths(algo, 8, 0.45, &PARAMS).unwrap();
            let tighter =
                phase_lengths(algo, 8, 0.45, &LearningParams { delta: 0.1, ..PARAMS }).unwrap();
            let lower_theta = phase_lengths(algo, 8, 0.2, &PARAMS).unwrap();
            for (a, b) in [(base, tighter), (base, lower_theta)] {
                assert!(b.t_c >= a.t_c && b.t_o >= a.t_o && b.t_j >= a.t_j);
            }
        }
    }

    #[test]
    fn epsilon_wiring_differs_between_cnj_and_cuj() {
        let e = std::f64::consts::E;
        assert!((PARAMS.epsilon1(Algorithm::Cnj, 8) - 0.4 / (16.0 * e)).abs() < 1e-15);
        assert!((PARAMS.epsilon2(Algorithm::Cnj, 8) - 0.05).abs() < 1e-15);
        assert!((PARAMS.epsilon1(Algorithm::Cuj, 8) - 0.4 / (8.0 * e)).abs() < 1e-15);
        assert!((PARAMS.epsilon2(Algorithm::Cuj, 8) - 0.4 / (8.0 * e)).abs() < 1e-15);
        let cnj = phase_lengths(Algorithm::Cnj, 8, 0.45, &PARAMS).unwrap();
        let cuj = phase_lengths(Algorithm::Cuj, 8, 0.45, &PARAMS).unwrap();
        assert_ne!(cnj.t_j, cuj.t_j);
    }

    #[test]
    fn invalid_learning_params_rejected() {
        for p in [
            LearningParams { delta: 0.0, ..PARAMS },
            LearningParams { epsilon: 1.0, ..PARAMS },
            LearningParams { gamma: 0.5, ..PARAMS },
        ] {
            assert!(phase_lengths(Algorithm::Cnj, 8, 0.45, &p).is_err());
        }
        assert!(phase_lengths(Algorithm::Cnj, 8, 0.0, &PARAMS).is_err());
    }

    #[test]
    fn clamp_ratio_keeps_logs_finite() {
        assert_eq!(clamp_ratio(50.0, 100.0), 0.5);
        assert_eq!(clamp_ratio(100.0, 100.0), 1.0 - 1.0 / 200.0);
        assert_eq!(clamp_ratio(120.0, 100.0), 1.0 - 1.0 / 200.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn inversion_monotone_in_p(j in 0usize..7, k in 8usize..20,
                                       a in 0.0f64..0.99, b in 0.0f64..0.99) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(invert_n_given_j(lo, j, k) <= invert_n_given_j(hi, j, k));
            }

            #[test]
            fn optimizer_dominates_every_window(n in 1usize..8, j in 0usize..4,
                                                p in proptest::collection::vec(0.0f64..0.95, 8..16)) {
                prop_assume!(j < n);
                let mut sorted = p.clone();
                sorted.sort_by(f64::total_cmp);
                if n > sorted.len() { return Ok(()); }
                for mode in [JammerMode::Coordinated, JammerMode::Uncoordinated] {
                    let (m, obj) = optimize_window(mode, n, j, &sorted).unwrap();
                    for w in 0..=sorted.len() - n {
                        let other = window_objective(mode, n, j, &sorted, w);
                        prop_assert!(obj >= other - 1e-12);
                        if w < m {
                            prop_assert!(obj > other); // smallest maximizer wins
                        }
                    }
                }
            }

            #[test]
            fn rank_is_sorted_permutation(p in proptest::collection::vec(0.0f64..1.0, 1..20)) {
                let pi = rank_channels(&p);
                let mut seen = vec![false; p.len()];
                for &i in &pi { seen[i] = true; }
                prop_assert!(seen.iter().all(|&s| s));
                for pair in pi.windows(2) {
                    prop_assert!(p[pair[0]] <= p[pair[1]]);
                }
            }

            #[test]
            fn roundtrip_inversions(n in 1usize..=10, j in 0usize..10, k in 2usize..=20) {
                prop_assume!(j < n && n + j <= k);
                let pc = collision_prob(JammerMode::Coordinated, n, j, k).unwrap();
                prop_assert_eq!(invert_n_given_j(pc, j, k), n);
                let pu = collision_prob(JammerMode::Uncoordinated, n, j, k).unwrap();
                prop_assert_eq!(invert_n_plus_j(pu, k), n + j);
            }
        }
    }
}
