//! Coalitional antenna-activation game.
//!
//! Active antennas form a single coalition `S` whose value `v(S)` is the
//! secrecy rate. A member is paid its Shapley value inside `S`. An antenna's
//! outside payoff is the marginal contribution of staying out (if it is not a
//! member) or of leaving (if it is). An antenna merges when the Shapley value
//! it would earn after joining strictly beats its outside payoff, and splits
//! when leaving strictly beats its Shapley value, as long as it is not the
//! last member.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{AntennaLayout, Point3};
use crate::secrecy::{Coalition, CoalitionValue, Memoized};

/// Largest coalition whose Shapley values are computed by full enumeration.
pub const DEFAULT_SHAPLEY_CAP: usize = 24;
/// Cycle limit for the merge/split loop.
pub const DEFAULT_MAX_CYCLES: usize = 100;

/// Characteristic function given as a table over all `2^n` masks.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGame {
    players: usize,
    values: Vec<f64>,
}

impl TableGame {
    /// `values[mask]` is `v(mask)`; `values[0]` must be 0.
    pub fn new(players: usize, values: Vec<f64>) -> Result<Self> {
        if players > 24 {
            return Err(Error::Capacity {
                what: "table game",
                size: players,
                cap: 24,
            });
        }
        if values.len() != 1 << players {
            return Err(Error::invalid(format!(
                "table for {players} players needs {} entries, got {}",
                1usize << players,
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::invalid("the empty coalition must be worth 0"));
        }
        Ok(TableGame { players, values })
    }

    pub fn from_fn(players: usize, mut f: impl FnMut(Coalition) -> f64) -> Result<Self> {
        let values = (0..1u64 << players)
            .map(|m| if m == 0 { 0.0 } else { f(Coalition::from_mask(m)) })
            .collect();
        TableGame::new(players, values)
    }
}

impl CoalitionValue for TableGame {
    fn players(&self) -> usize {
        self.players
    }

    fn value(&self, coalition: Coalition) -> f64 {
        self.values[coalition.mask() as usize]
    }
}

fn value_of<V: CoalitionValue + ?Sized>(v: &V, c: Coalition) -> f64 {
    if c.is_empty() {
        0.0
    } else {
        v.value(c)
    }
}

/// Shapley value of member `n` in `coalition` by exact subset enumeration.
pub fn shapley_value<V: CoalitionValue + ?Sized>(v: &V, coalition: Coalition, n: usize) -> Result<f64> {
    shapley_value_capped(v, coalition, n, DEFAULT_SHAPLEY_CAP)
}

pub fn shapley_value_capped<V: CoalitionValue + ?Sized>(
    v: &V,
    coalition: Coalition,
    n: usize,
    cap: usize,
) -> Result<f64> {
    coalition.check_within(v.players())?;
    if !coalition.contains(n) {
        return Err(Error::invalid(format!("antenna {n} is not a member of {coalition}")));
    }
    let size = coalition.len();
    if size > cap {
        return Err(Error::Capacity {
            what: "Shapley enumeration",
            size,
            cap,
        });
    }

    // weight for a subset of k others: k!(s−k−1)!/s! = 1 / (s · C(s−1, k))
    let mut weights = Vec::with_capacity(size);
    let mut binom = 1.0f64;
    for k in 0..size {
        weights.push(1.0 / (size as f64 * binom));
        binom = binom * (size - 1 - k) as f64 / (k + 1) as f64;
    }

    let others = coalition.without(n).mask();
    let me = Coalition::singleton(n).mask();
    let mut total = 0.0;
    let mut sub = others;
    loop {
        let without = Coalition::from_mask(sub);
        let with = Coalition::from_mask(sub | me);
        total += weights[without.len()] * (v.value(with) - value_of(v, without));
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & others;
    }
    Ok(total)
}

/// Gain of staying out (`n ∉ S`) or of leaving (`n ∈ S`).
pub fn outside_payoff<V: CoalitionValue + ?Sized>(v: &V, coalition: Coalition, n: usize) -> Result<f64> {
    if coalition.is_empty() {
        return Err(Error::invalid("coalition must be nonempty"));
    }
    coalition.check_within(v.players())?;
    if n >= v.players() {
        return Err(Error::IndexOutOfRange {
            index: n,
            len: v.players(),
        });
    }
    if coalition.contains(n) {
        if coalition.len() == 1 {
            return Err(Error::InvalidMove(format!(
                "antenna {n} is the only active antenna and cannot leave"
            )));
        }
        Ok(v.value(coalition.without(n)) - v.value(coalition))
    } else {
        Ok(v.value(coalition) - v.value(coalition.with(n)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Merge,
    Split,
    None,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Merge => "merge",
            Action::Split => "split",
            Action::None => "none",
        }
    }
}

/// Outcome of checking one antenna against one rule.
///
/// `current` is the payoff the antenna has now and `deviation` the payoff it
/// would get by moving. The move is taken iff `deviation > current`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub action: Action,
    pub current: f64,
    pub deviation: f64,
}

impl Decision {
    fn compare(action: Action, current: f64, deviation: f64) -> Self {
        Decision {
            action: if deviation > current { action } else { Action::None },
            current,
            deviation,
        }
    }

    pub fn accepted(&self) -> bool {
        self.action != Action::None
    }
}

/// Merge rule: `n ∉ S` joins iff its Shapley value in `S ∪ {n}` strictly
/// exceeds its outside payoff.
pub fn merge_candidate<V: CoalitionValue + ?Sized>(v: &V, coalition: Coalition, n: usize) -> Result<Decision> {
    merge_candidate_capped(v, coalition, n, DEFAULT_SHAPLEY_CAP)
}

fn merge_candidate_capped<V: CoalitionValue + ?Sized>(
    v: &V,
    coalition: Coalition,
    n: usize,
    cap: usize,
) -> Result<Decision> {
    if coalition.contains(n) {
        return Err(Error::invalid(format!("antenna {n} is already in {coalition}")));
    }
    let stay_out = outside_payoff(v, coalition, n)?;
    let joined = shapley_value_capped(v, coalition.with(n), n, cap)?;
    Ok(Decision::compare(Action::Merge, stay_out, joined))
}

/// Split rule: `n ∈ S` leaves iff its outside payoff strictly exceeds its
/// Shapley value and it is not the only member.
pub fn split_candidate<V: CoalitionValue + ?Sized>(v: &V, coalition: Coalition, n: usize) -> Result<Decision> {
    split_candidate_capped(v, coalition, n, DEFAULT_SHAPLEY_CAP)
}

fn split_candidate_capped<V: CoalitionValue + ?Sized>(
    v: &V,
    coalition: Coalition,
    n: usize,
    cap: usize,
) -> Result<Decision> {
    if !coalition.contains(n) {
        return Err(Error::invalid(format!("antenna {n} is not in {coalition}")));
    }
    let share = shapley_value_capped(v, coalition, n, cap)?;
    if coalition.len() == 1 {
        return Ok(Decision {
            action: Action::None,
            current: share,
            deviation: f64::NAN,
        });
    }
    let leave = outside_payoff(v, coalition, n)?;
    Ok(Decision::compare(Action::Split, share, leave))
}

/// Nash stability: no outsider gains by joining and no member (of a coalition
/// with more than one member) gains by leaving.
pub fn is_nash_stable<V: CoalitionValue + ?Sized>(v: &V, coalition: Coalition) -> Result<bool> {
    if coalition.is_empty() {
        return Err(Error::invalid("coalition must be nonempty"));
    }
    for n in 0..v.players() {
        let decision = if coalition.contains(n) {
            split_candidate(v, coalition, n)?
        } else {
            merge_candidate(v, coalition, n)?
        };
        if decision.accepted() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Payoff of one antenna relative to a coalition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffReport {
    pub antenna: usize,
    pub in_coalition: bool,
    /// Shapley value for members, outside payoff otherwise.
    pub payoff: f64,
}

/// Payoffs of every antenna. The sole member of a singleton coalition is
/// reported with its Shapley value, `v(S)`.
pub fn payoff_report<V: CoalitionValue + ?Sized>(v: &V, coalition: Coalition) -> Result<Vec<PayoffReport>> {
    (0..v.players())
        .map(|n| {
            let in_coalition = coalition.contains(n);
            let payoff = if in_coalition {
                shapley_value(v, coalition, n)?
            } else {
                outside_payoff(v, coalition, n)?
            };
            Ok(PayoffReport {
                antenna: n,
                in_coalition,
                payoff,
            })
        })
        .collect()
}

/// How each antenna decides whether to move.
pub trait MoveRule {
    fn merge(&self, v: &dyn CoalitionValue, coalition: Coalition, n: usize) -> Result<Decision>;
    fn split(&self, v: &dyn CoalitionValue, coalition: Coalition, n: usize) -> Result<Decision>;
}

/// Shapley value against marginal contribution.
#[derive(Debug, Clone, Copy)]
pub struct ShapleyRule {
    pub cap: usize,
}

impl Default for ShapleyRule {
    fn default() -> Self {
        ShapleyRule {
            cap: DEFAULT_SHAPLEY_CAP,
        }
    }
}

impl MoveRule for ShapleyRule {
    fn merge(&self, v: &dyn CoalitionValue, coalition: Coalition, n: usize) -> Result<Decision> {
        merge_candidate_capped(v, coalition, n, self.cap)
    }

    fn split(&self, v: &dyn CoalitionValue, coalition: Coalition, n: usize) -> Result<Decision> {
        split_candidate_capped(v, coalition, n, self.cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanOrder {
    /// Antennas `0..N` every cycle.
    #[default]
    Ascending,
    /// A fresh permutation every cycle, drawn from the given seed.
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct ActivationOptions {
    pub max_cycles: usize,
    pub scan: ScanOrder,
}

impl Default for ActivationOptions {
    fn default() -> Self {
        ActivationOptions {
            max_cycles: DEFAULT_MAX_CYCLES,
            scan: ScanOrder::Ascending,
        }
    }
}

/// One examined antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    /// Zero-based cycle index.
    pub cycle: usize,
    pub antenna: usize,
    pub action: Action,
    /// Payoff of keeping the current status.
    pub current_payoff: f64,
    /// Payoff of switching; NaN when the move is not allowed.
    pub deviation_payoff: f64,
    pub coalition: Coalition,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameTrace {
    pub initial: Coalition,
    pub initial_value: f64,
    pub iterations: Vec<TraceStep>,
    pub converged: bool,
    pub cycles_used: usize,
}

impl GameTrace {
    pub fn final_coalition(&self) -> Coalition {
        self.iterations.last().map_or(self.initial, |s| s.coalition)
    }

    pub fn final_value(&self) -> f64 {
        self.iterations.last().map_or(self.initial_value, |s| s.value)
    }

    pub fn examined(&self) -> usize {
        self.iterations.len()
    }

    /// Examined antennas up to and including the last accepted move.
    pub fn iterations_to_last_move(&self) -> usize {
        self.iterations
            .iter()
            .rposition(|s| s.action != Action::None)
            .map_or(0, |i| i + 1)
    }

    pub fn moves(&self) -> usize {
        self.iterations.iter().filter(|s| s.action != Action::None).count()
    }
}

/// Merge/split dynamics from `initial` until a full cycle makes no change or
/// `max_cycles` cycles have run.
pub fn run_dynamics<V, R>(v: &V, initial: Coalition, rule: &R, options: &ActivationOptions) -> Result<GameTrace>
where
    V: CoalitionValue,
    R: MoveRule + ?Sized,
{
    let players = v.players();
    if initial.is_empty() {
        return Err(Error::invalid("initial coalition must be nonempty"));
    }
    initial.check_within(players)?;
    if options.max_cycles == 0 {
        return Err(Error::invalid("max_cycles must be at least 1"));
    }

    let mut order: Vec<usize> = (0..players).collect();
    let mut shuffler = match options.scan {
        ScanOrder::Ascending => None,
        ScanOrder::Shuffled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };

    let mut coalition = initial;
    let mut value = v.value(coalition);
    let mut trace = GameTrace {
        initial,
        initial_value: value,
        iterations: Vec::new(),
        converged: false,
        cycles_used: 0,
    };

    for cycle in 0..options.max_cycles {
        if let Some(rng) = shuffler.as_mut() {
            order.shuffle(rng);
        }
        let mut changed = false;
        for &n in &order {
            let decision = if coalition.contains(n) {
                rule.split(v, coalition, n)?
            } else {
                rule.merge(v, coalition, n)?
            };
            match decision.action {
                Action::Merge => coalition = coalition.with(n),
                Action::Split => coalition = coalition.without(n),
                Action::None => {}
            }
            if decision.accepted() {
                value = v.value(coalition);
                changed = true;
            }
            trace.iterations.push(TraceStep {
                cycle,
                antenna: n,
                action: decision.action,
                current_payoff: decision.current,
                deviation_payoff: decision.deviation,
                coalition,
                value,
            });
        }
        trace.cycles_used = cycle + 1;
        if !changed {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

/// Shapley-driven activation started from the antenna closest to Bob.
pub fn run_activation<V: CoalitionValue>(v: &V, layout: &AntennaLayout, bob: Point3) -> Result<(Coalition, GameTrace)> {
    run_activation_with(v, layout, bob, &ShapleyRule::default(), &ActivationOptions::default())
}

pub fn run_activation_with<V, R>(
    v: &V,
    layout: &AntennaLayout,
    bob: Point3,
    rule: &R,
    options: &ActivationOptions,
) -> Result<(Coalition, GameTrace)>
where
    V: CoalitionValue,
    R: MoveRule + ?Sized,
{
    if v.players() != layout.len() {
        return Err(Error::invalid(format!(
            "value function has {} players but the layout has {} antennas",
            v.players(),
            layout.len()
        )));
    }
    let memo = Memoized::new(v);
    let initial = Coalition::singleton(layout.closest_to(bob));
    let trace = run_dynamics(&memo, initial, rule, options)?;
    Ok((trace.final_coalition(), trace))
}
