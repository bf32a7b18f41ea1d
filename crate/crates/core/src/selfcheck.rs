//! Built-in verification suites: exact inversion identities and Monte Carlo
//! cross-checks of the closed-form collision probabilities.
//!
//! These back both the `selfcheck` CLI subcommand and the acceptance tests.

use crate::channel::{resolve_slot_into, ChannelModel, ResolveScratch};
use crate::config::generate_p;
use crate::estimators::{
    collision_prob, invert_n_given_j, invert_n_plus_j, jammer_invert_n, JammerMode,
};
use crate::rng::{derive_rng, DOMAIN_ENV, DOMAIN_JAMMER, DOMAIN_SU};
use rand::Rng;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckReport {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// Exhaustive exact round-trips of all three population inversions over
/// 1 <= n <= 10, 0 <= j < n, n + j <= k <= 20. Zero tolerance.
pub fn inversion_identities() -> CheckReport {
    let mut cases = 0u32;
    for n in 1..=10usize {
        for j in 0..n {
            for k in (n + j).max(2)..=20 {
                cases += 1;
                let pc = match collision_prob(JammerMode::Coordinated, n, j, k) {
                    Ok(p) => p,
                    Err(e) => {
                        return CheckReport::new(
                            "inversion-identities",
                            false,
                            format!("collision_prob failed at n={n} j={j} k={k}: {e}"),
                        )
                    }
                };
                if invert_n_given_j(pc, j, k) != n {
                    return CheckReport::new(
                        "inversion-identities",
                        false,
                        format!("invert_n_given_j broke at n={n} j={j} k={k}"),
                    );
                }
                let pu = collision_prob(JammerMode::Uncoordinated, n, j, k).expect("valid");
                if invert_n_plus_j(pu, k) != n + j {
                    return CheckReport::new(
                        "inversion-identities",
                        false,
                        format!("invert_n_plus_j broke at n={n} j={j} k={k}"),
                    );
                }
                if j >= 1 {
                    // The jammer's own inversion from the exact expected
                    // collision count with nothing busy.
                    let t_c = 1000u64;
                    let hit = 1.0 - (1.0 - 1.0 / k as f64).powi(n as i32);
                    let c = (j as f64) * (t_c as f64) * hit;
                    if jammer_invert_n(c, 0.0, j, t_c, k) != Some(n) {
                        return CheckReport::new(
                            "inversion-identities",
                            false,
                            format!("jammer_invert_n broke at n={n} j={j} k={k}"),
                        );
                    }
                }
            }
        }
    }
    CheckReport::new("inversion-identities", true, format!("{cases} (n, j, k) cases exact"))
}

/// Simulates `slots` slots of uniform hopping (n SUs, j jammers per `mode`)
/// and compares the empirical conditional collision rate of SU 0 against the
/// closed form. Returns (empirical, expected, allowed deviation).
fn mc_conditional_rate(
    mode: JammerMode,
    n: usize,
    j: usize,
    k: usize,
    slots: u64,
    seed: u64,
) -> (f64, f64, f64) {
    let model = ChannelModel::new(generate_p(k)).expect("generator in range");
    let mut env_rng = derive_rng(seed, 0, DOMAIN_ENV, 0);
    let mut su_rngs: Vec<_> = (0..n).map(|i| derive_rng(seed, 0, DOMAIN_SU, i as u64)).collect();
    let mut jam_rng = derive_rng(seed, 0, DOMAIN_JAMMER, 0);
    let mut busy = Vec::with_capacity(k);
    let mut su_sel = vec![0usize; n];
    let mut jam_sel: Vec<usize> = Vec::with_capacity(j);
    let mut scratch = ResolveScratch::default();
    let mut outcomes = Vec::with_capacity(n);
    let mut free = 0u64;
    let mut collisions = 0u64;
    for _ in 0..slots {
        model.draw_occupancy_into(&mut env_rng, &mut busy);
        for (i, rng) in su_rngs.iter_mut().enumerate() {
            su_sel[i] = rng.gen_range(0..k);
        }
        jam_sel.clear();
        match mode {
            JammerMode::Coordinated => {
                jam_sel.extend(rand::seq::index::sample(&mut jam_rng, k, j).iter());
            }
            JammerMode::Uncoordinated => {
                jam_sel.extend((0..j).map(|_| jam_rng.gen_range(0..k)));
            }
        }
        resolve_slot_into(&busy, &su_sel, &jam_sel, false, &mut scratch, &mut outcomes)
            .expect("in range");
        let me = &outcomes[0];
        if !me.busy {
            free += 1;
            collisions += me.collision as u64;
        }
    }
    let empirical = collisions as f64 / free as f64;
    let expected = collision_prob(mode, n, j, k).expect("valid triple");
    let se = (expected * (1.0 - expected) / free as f64).sqrt();
    (empirical, expected, 3.0 * se)
}

/// Closed-form vs Monte Carlo for both jammer modes over the benchmark
/// (k, n, j) triples.
pub fn mc_vs_closed_form(slots: u64, seed: u64) -> Vec<CheckReport> {
    let mut reports = Vec::new();
    for (k, n, j) in [(16, 8, 4), (8, 4, 2), (10, 5, 1)] {
        for mode in [JammerMode::Coordinated, JammerMode::Uncoordinated] {
            let (emp, exp, tol) = mc_conditional_rate(mode, n, j, k, slots, seed);
            let passed = (emp - exp).abs() < tol;
            reports.push(CheckReport::new(
                format!("mc-vs-closed-form k={k} n={n} j={j} {mode:?}"),
                passed,
                format!("empirical {emp:.6} vs {exp:.6} (tolerance {tol:.6})"),
            ));
        }
    }
    reports
}
