//! Primary-user channel model and slot resolution.
//!
//! Each slot, channel i is busy with probability p_i independently of other
//! channels and other slots. Agents sense before transmitting (ideal
//! detector): nobody transmits on a busy channel. Two or more transmitters on
//! the same vacant channel collide; jammer selections on busy channels are
//! inert.

use crate::Error;
use rand::Rng;

/// The K busy probabilities plus derived scenario quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    p: Vec<f64>,
}

impl ChannelModel {
    pub fn new(p: Vec<f64>) -> Result<Self, Error> {
        if p.is_empty() {
            return Err(Error::InvalidParameter("channel model needs k >= 1".into()));
        }
        if p.iter().any(|&x| !(0.0..=1.0).contains(&x) || !x.is_finite()) {
            return Err(Error::RangeViolation("busy probabilities must lie in [0,1]".into()));
        }
        let sum: f64 = p.iter().sum();
        if sum >= p.len() as f64 {
            return Err(Error::RangeViolation(
                "sum of busy probabilities must be < k (no free capacity)".into(),
            ));
        }
        Ok(Self { p })
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Tight availability floor: 1 - (Σ p_i)/K.
    pub fn availability_floor(&self) -> f64 {
        1.0 - self.p.iter().sum::<f64>() / self.p.len() as f64
    }

    /// Busy probabilities sorted ascending (best channel first).
    pub fn p_sorted(&self) -> Vec<f64> {
        let mut s = self.p.clone();
        s.sort_by(f64::total_cmp);
        s
    }

    /// Availability gap between the n-th and (n+1)-th best channels.
    /// `None` when n covers all channels (no (n+1)-th exists).
    pub fn gap(&self, n: usize) -> Option<f64> {
        let s = self.p_sorted();
        if n == 0 || n >= s.len() {
            return None;
        }
        Some(s[n] - s[n - 1])
    }

    /// Draws one slot's busy mask into `busy`.
    pub fn draw_occupancy_into(&self, rng: &mut impl Rng, busy: &mut Vec<bool>) {
        busy.clear();
        busy.extend(self.p.iter().map(|&p| rng.gen_bool(p)));
    }

    pub fn draw_occupancy(&self, rng: &mut impl Rng) -> Vec<bool> {
        let mut busy = Vec::with_capacity(self.k());
        self.draw_occupancy_into(rng, &mut busy);
        busy
    }
}

/// One SU's view of a resolved slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentOutcome {
    pub channel: usize,
    pub busy: bool,
    pub transmitted: bool,
    pub success: bool,
    pub collision: bool,
    /// Set only in distinguishable mode: a jammer took part in the collision.
    pub jammer_involved: bool,
}

/// Reusable buffers for `resolve_slot_into`.
#[derive(Debug, Default)]
pub struct ResolveScratch {
    su_count: Vec<u32>,
    jammed: Vec<bool>,
}

impl ResolveScratch {
    /// SU selection counts per channel from the last resolved slot.
    pub fn su_count(&self) -> &[u32] {
        &self.su_count
    }

    /// Jammer presence per channel from the last resolved slot.
    pub fn jammed(&self) -> &[bool] {
        &self.jammed
    }
}

/// Resolves one slot of simultaneous selections into per-SU outcomes.
///
/// An SU succeeds iff its channel is vacant and no other SU and no jammer
/// selected it. The jammer-involved flag is surfaced only when
/// `distinguishable` is set; the underlying event is recorded either way in
/// the scratch buffers for the benefit of the trajectory bookkeeping.
pub fn resolve_slot_into(
    busy: &[bool],
    su_selections: &[usize],
    jammer_selections: &[usize],
    distinguishable: bool,
    scratch: &mut ResolveScratch,
    out: &mut Vec<AgentOutcome>,
) -> Result<(), Error> {
    let k = busy.len();
    if su_selections.iter().chain(jammer_selections).any(|&c| c >= k) {
        return Err(Error::InvalidParameter("channel index out of range".into()));
    }
    scratch.su_count.clear();
    scratch.su_count.resize(k, 0);
    scratch.jammed.clear();
    scratch.jammed.resize(k, false);
    for &c in su_selections {
        scratch.su_count[c] += 1;
    }
    for &c in jammer_selections {
        // Jammers on busy channels burn the slot silently.
        if !busy[c] {
            scratch.jammed[c] = true;
        }
    }
    out.clear();
    for &c in su_selections {
        if busy[c] {
            out.push(AgentOutcome {
                channel: c,
                busy: true,
                transmitted: false,
                success: false,
                collision: false,
                jammer_involved: false,
            });
            continue;
        }
        let jammed = scratch.jammed[c];
        let collision = scratch.su_count[c] > 1 || jammed;
        out.push(AgentOutcome {
            channel: c,
            busy: false,
            transmitted: true,
            success: !collision,
            collision,
            jammer_involved: distinguishable && jammed,
        });
    }
    Ok(())
}

/// Allocating convenience wrapper around `resolve_slot_into`.
pub fn resolve_slot(
    busy: &[bool],
    su_selections: &[usize],
    jammer_selections: &[usize],
    distinguishable: bool,
) -> Result<Vec<AgentOutcome>, Error> {
    let mut scratch = ResolveScratch::default();
    let mut out = Vec::with_capacity(su_selections.len());
    resolve_slot_into(busy, su_selections, jammer_selections, distinguishable, &mut scratch, &mut out)?;
    Ok(out)
}
