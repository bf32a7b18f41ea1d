//! Jammer strategies: learn the channel statistics and the SU population,
//! then attack where it hurts.
//!
//! Coordinated jammers act as one entity emitting J pairwise-distinct
//! channels per slot: during learning those are J random orthogonal channels
//! whose collision counts invert to N-hat; during attack they are a fresh
//! random J-subset of the estimated top N-hat channels each slot.
//!
//! Uncoordinated jammers are J independent copies of a single-channel
//! strategy: each estimates the total transmitter count the same way an SU
//! would and then attacks one uniform channel from its top N+J-hat - 1.

use crate::estimators::{
    clamp_ratio, invert_n_plus_j, jammer_invert_n, rank_channels,
};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// Single coordinated entity controlling J distinct channels per slot.
#[derive(Debug, Clone)]
pub struct CoordinatedJammer {
    k: usize,
    j: usize,
    t_c: u64,
    rng: ChaCha12Rng,
    t: u64,
    attacking: bool,
    o: Vec<u64>,
    b_i: Vec<u64>,
    b: u64,
    c: u64,
    p_hat: Vec<f64>,
    pi: Vec<usize>,
    n_hat: usize,
    degraded: bool,
    selection: Vec<usize>,
}

impl CoordinatedJammer {
    pub fn new(k: usize, j: usize, t_c: u64, rng: ChaCha12Rng) -> Self {
        assert!(j >= 1 && j <= k && t_c >= 1);
        Self {
            k,
            j,
            t_c,
            rng,
            t: 0,
            attacking: false,
            o: vec![0; k],
            b_i: vec![0; k],
            b: 0,
            c: 0,
            p_hat: vec![1.0; k],
            pi: (0..k).collect(),
            n_hat: 1,
            degraded: false,
            selection: Vec::new(),
        }
    }

    /// Channels hit this slot: J random orthogonal channels while learning,
    /// then a fresh random J-subset of the estimated top channels.
    pub fn select(&mut self) -> &[usize] {
        self.selection.clear();
        if self.attacking {
            // Degenerate estimates widen the set so the J picks stay distinct.
            let width = self.n_hat.max(self.j).min(self.k);
            let picks = rand::seq::index::sample(&mut self.rng, width, self.j);
            self.selection.extend(picks.iter().map(|r| self.pi[r]));
        } else {
            self.selection
                .extend(rand::seq::index::sample(&mut self.rng, self.k, self.j).iter());
        }
        &self.selection
    }

    /// Digests the slot: `busy` is the occupancy mask, `su_present[ch]` says
    /// whether some SU transmitted on `ch`.
    pub fn observe(&mut self, busy: &[bool], su_present: &[bool]) {
        if !self.attacking {
            // Clone-free split borrow: walk the recorded selections by index.
            for s in 0..self.selection.len() {
                let ch = self.selection[s];
                self.o[ch] += 1;
                if busy[ch] {
                    self.b_i[ch] += 1;
                    self.b += 1;
                } else if su_present[ch] {
                    self.c += 1;
                }
            }
        }
        self.t += 1;
        if self.t == self.t_c {
            self.finalize();
        }
    }

    fn finalize(&mut self) {
        self.p_hat = (0..self.k)
            .map(|i| if self.o[i] == 0 { 1.0 } else { self.b_i[i] as f64 / self.o[i] as f64 })
            .collect();
        self.pi = rank_channels(&self.p_hat);
        match jammer_invert_n(self.c as f64, self.b as f64, self.j, self.t_c, self.k) {
            Some(n_hat) => self.n_hat = n_hat,
            None => {
                self.degraded = true;
                self.n_hat = 1;
            }
        }
        self.attacking = true;
    }

    pub fn n_hat(&self) -> usize {
        self.n_hat
    }

    pub fn attacking(&self) -> bool {
        self.attacking
    }

    pub fn degraded(&self) -> bool {
        self.degraded
    }

    pub fn pi(&self) -> &[usize] {
        &self.pi
    }
}

/// One of J independent uncoordinated jammers.
#[derive(Debug, Clone)]
pub struct UncoordinatedJammer {
    k: usize,
    t_c: u64,
    rng: ChaCha12Rng,
    t: u64,
    attacking: bool,
    o: Vec<u64>,
    b_i: Vec<u64>,
    f: u64,
    c: u64,
    p_hat: Vec<f64>,
    pi: Vec<usize>,
    total_hat: usize,
    width: usize,
    degraded: bool,
    selection: usize,
}

impl UncoordinatedJammer {
    pub fn new(k: usize, t_c: u64, rng: ChaCha12Rng) -> Self {
        assert!(k >= 1 && t_c >= 1);
        Self {
            k,
            t_c,
            rng,
            t: 0,
            attacking: false,
            o: vec![0; k],
            b_i: vec![0; k],
            f: 0,
            c: 0,
            p_hat: vec![1.0; k],
            pi: (0..k).collect(),
            total_hat: 1,
            width: 1,
            degraded: false,
            selection: 0,
        }
    }

    pub fn select(&mut self) -> usize {
        self.selection = if self.attacking {
            self.pi[self.rng.gen_range(0..self.width)]
        } else {
            self.rng.gen_range(0..self.k)
        };
        self.selection
    }

    /// `others_present` says whether any SU or any *other* jammer hit the
    /// selected channel (to a lone jammer they are indistinguishable).
    pub fn observe(&mut self, busy: &[bool], others_present: bool) {
        if !self.attacking {
            let ch = self.selection;
            self.o[ch] += 1;
            if busy[ch] {
                self.b_i[ch] += 1;
            } else {
                self.f += 1;
                if others_present {
                    self.c += 1;
                }
            }
        }
        self.t += 1;
        if self.t == self.t_c {
            self.finalize();
        }
    }

    fn finalize(&mut self) {
        self.p_hat = (0..self.k)
            .map(|i| if self.o[i] == 0 { 1.0 } else { self.b_i[i] as f64 / self.o[i] as f64 })
            .collect();
        self.pi = rank_channels(&self.p_hat);
        if self.f == 0 {
            self.degraded = true;
            self.total_hat = 1;
        } else {
            self.total_hat = invert_n_plus_j(clamp_ratio(self.c as f64, self.f as f64), self.k);
        }
        // Attack the top N+J-hat - 1 channels: everything the other
        // transmitters will orthogonalize over.
        self.width = self.total_hat.saturating_sub(1).clamp(1, self.k);
        self.attacking = true;
    }

    pub fn total_hat(&self) -> usize {
        self.total_hat
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn attacking(&self) -> bool {
        self.attacking
    }

    pub fn degraded(&self) -> bool {
        self.degraded
    }

    pub fn pi(&self) -> &[usize] {
        &self.pi
    }
}
