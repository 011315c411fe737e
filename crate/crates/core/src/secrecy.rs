//! Rates, secrecy rate and the coalition value.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelVector;
use crate::error::{Error, Result};
use crate::geometry::{AntennaLayout, Scenario, UserDrop};

/// A set of active antennas, stored as a bit mask (bit `i` = antenna `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coalition(u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);
    pub const MAX_PLAYERS: usize = 64;

    pub const fn from_mask(mask: u64) -> Self {
        Coalition(mask)
    }

    pub fn singleton(i: usize) -> Self {
        assert!(
            i < Self::MAX_PLAYERS,
            "antenna index {i} does not fit a 64-bit coalition"
        );
        Coalition(1 << i)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices.into_iter().fold(Coalition::EMPTY, |c, i| c.with(i))
    }

    /// All of `0..n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= Self::MAX_PLAYERS);
        if n == 64 {
            Coalition(u64::MAX)
        } else {
            Coalition((1u64 << n) - 1)
        }
    }

    pub const fn mask(self) -> u64 {
        self.0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < Self::MAX_PLAYERS && self.0 & (1 << i) != 0
    }

    #[must_use]
    pub fn with(self, i: usize) -> Self {
        Coalition(self.0 | Coalition::singleton(i).0)
    }

    #[must_use]
    pub fn without(self, i: usize) -> Self {
        Coalition(self.0 & !Coalition::singleton(i).0)
    }

    #[must_use]
    pub const fn union(self, other: Coalition) -> Self {
        Coalition(self.0 | other.0)
    }

    pub const fn is_subset_of(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    /// Member indices in ascending order.
    pub fn iter(self) -> Members {
        Members(self.0)
    }

    pub(crate) fn check_within(self, players: usize) -> Result<()> {
        if players < Self::MAX_PLAYERS && self.0 >> players != 0 {
            let index = 63 - self.0.leading_zeros() as usize;
            return Err(Error::IndexOutOfRange { index, len: players });
        }
        Ok(())
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<usize> for Coalition {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Coalition::from_indices(iter)
    }
}

pub struct Members(u64);

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Members {}

/// `P[W] = 10^((P[dBm] − 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub transmit_power_dbm: f64,
    pub transmit_power_w: f64,
    pub noise_power_w: f64,
}

impl LinkBudget {
    pub fn new(transmit_power_dbm: f64, noise_power_dbm: f64) -> Result<Self> {
        let transmit_power_w = dbm_to_watts(transmit_power_dbm);
        let noise_power_w = dbm_to_watts(noise_power_dbm);
        if !(transmit_power_w > 0.0 && transmit_power_w.is_finite()) {
            return Err(Error::invalid(format!(
                "transmit power {transmit_power_dbm} dBm is not usable"
            )));
        }
        if !(noise_power_w > 0.0 && noise_power_w.is_finite()) {
            return Err(Error::invalid(format!(
                "noise power {noise_power_dbm} dBm is not usable"
            )));
        }
        Ok(LinkBudget {
            transmit_power_dbm,
            transmit_power_w,
            noise_power_w,
        })
    }

    pub fn for_scenario(scenario: &Scenario, transmit_power_dbm: f64) -> Result<Self> {
        LinkBudget::new(transmit_power_dbm, scenario.noise_power_dbm)
    }

    /// Transmit SNR `ρ = P_t / (K σ²)` with power split evenly over `active` antennas.
    pub fn snr(&self, active: usize) -> f64 {
        self.transmit_power_w / (active as f64 * self.noise_power_w)
    }
}

fn rate_unchecked(channels: &ChannelVector, coalition: Coalition, budget: &LinkBudget) -> f64 {
    let gain = channels.sum_unchecked(coalition).norm_sqr();
    (budget.snr(coalition.len()) * gain).ln_1p() / std::f64::consts::LN_2
}

fn check_coalition(coalition: Coalition, players: usize) -> Result<()> {
    if coalition.is_empty() {
        return Err(Error::invalid("at least one antenna must be active"));
    }
    coalition.check_within(players)
}

/// `log₂(1 + ρ |Σ_{n∈S} h_n|²)` in bits/s/Hz.
pub fn rate(channels: &ChannelVector, coalition: Coalition, budget: &LinkBudget) -> Result<f64> {
    check_coalition(coalition, channels.len())?;
    Ok(rate_unchecked(channels, coalition, budget))
}

/// `R^Bob − R^Eve`, not clamped at zero.
pub fn secrecy_rate(
    bob: &ChannelVector,
    eve: &ChannelVector,
    coalition: Coalition,
    budget: &LinkBudget,
) -> Result<f64> {
    Ok(rate(bob, coalition, budget)? - rate(eve, coalition, budget)?)
}

/// A characteristic function over at most 64 players.
///
/// Implementations must return `0` for the empty coalition.
pub trait CoalitionValue {
    fn players(&self) -> usize;
    fn value(&self, coalition: Coalition) -> f64;
}

impl<V: CoalitionValue + ?Sized> CoalitionValue for &V {
    fn players(&self) -> usize {
        (**self).players()
    }

    fn value(&self, coalition: Coalition) -> f64 {
        (**self).value(coalition)
    }
}

/// Checked `v(S)`; the empty coalition evaluates to 0.
pub fn coalition_value<V: CoalitionValue + ?Sized>(v: &V, coalition: Coalition) -> Result<f64> {
    coalition.check_within(v.players())?;
    if coalition.is_empty() {
        return Ok(0.0);
    }
    Ok(v.value(coalition))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRates {
    pub bob: f64,
    pub eve: f64,
}

impl LinkRates {
    pub fn secrecy(&self) -> f64 {
        self.bob - self.eve
    }
}

/// Secrecy-rate characteristic function bound to one drop.
#[derive(Debug, Clone)]
pub struct SecrecyEvaluator {
    bob: ChannelVector,
    eve: ChannelVector,
    budget: LinkBudget,
}

impl SecrecyEvaluator {
    pub fn new(bob: ChannelVector, eve: ChannelVector, budget: LinkBudget) -> Result<Self> {
        if bob.len() != eve.len() {
            return Err(Error::invalid(format!(
                "Bob has {} coefficients but Eve has {}",
                bob.len(),
                eve.len()
            )));
        }
        if bob.is_empty() || bob.len() > Coalition::MAX_PLAYERS {
            return Err(Error::Capacity {
                what: "secrecy evaluator",
                size: bob.len(),
                cap: Coalition::MAX_PLAYERS,
            });
        }
        Ok(SecrecyEvaluator { bob, eve, budget })
    }

    pub fn for_drop(scenario: &Scenario, layout: &AntennaLayout, drop: &UserDrop, budget: LinkBudget) -> Result<Self> {
        SecrecyEvaluator::new(
            ChannelVector::pinching(scenario, layout, drop.bob),
            ChannelVector::pinching(scenario, layout, drop.eve),
            budget,
        )
    }

    pub fn bob(&self) -> &ChannelVector {
        &self.bob
    }

    pub fn eve(&self) -> &ChannelVector {
        &self.eve
    }

    pub fn budget(&self) -> &LinkBudget {
        &self.budget
    }

    pub fn rates(&self, coalition: Coalition) -> Result<LinkRates> {
        check_coalition(coalition, self.bob.len())?;
        Ok(LinkRates {
            bob: rate_unchecked(&self.bob, coalition, &self.budget),
            eve: rate_unchecked(&self.eve, coalition, &self.budget),
        })
    }
}

impl CoalitionValue for SecrecyEvaluator {
    fn players(&self) -> usize {
        self.bob.len()
    }

    fn value(&self, coalition: Coalition) -> f64 {
        if coalition.is_empty() {
            return 0.0;
        }
        rate_unchecked(&self.bob, coalition, &self.budget) - rate_unchecked(&self.eve, coalition, &self.budget)
    }
}

/// Per-run cache in front of a characteristic function.
///
/// Not `Sync`: one cache belongs to one game run on one worker.
#[derive(Debug)]
pub struct Memoized<V> {
    inner: V,
    cache: RefCell<HashMap<u64, f64>>,
    misses: Cell<u64>,
}

impl<V: CoalitionValue> Memoized<V> {
    pub fn new(inner: V) -> Self {
        Memoized {
            inner,
            cache: RefCell::new(HashMap::new()),
            misses: Cell::new(0),
        }
    }

    pub fn inner(&self) -> &V {
        &self.inner
    }

    /// Number of distinct coalitions evaluated by the wrapped function.
    pub fn evaluations(&self) -> u64 {
        self.misses.get()
    }
}

impl<V: CoalitionValue> CoalitionValue for Memoized<V> {
    fn players(&self) -> usize {
        self.inner.players()
    }

    fn value(&self, coalition: Coalition) -> f64 {
        if let Some(&v) = self.cache.borrow().get(&coalition.mask()) {
            return v;
        }
        let v = self.inner.value(coalition);
        self.misses.set(self.misses.get() + 1);
        self.cache.borrow_mut().insert(coalition.mask(), v);
        v
    }
}
