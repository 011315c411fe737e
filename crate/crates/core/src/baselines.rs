//! Reference optimizers and the fixed-array benchmark.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{wavelengths, ChannelVector};
use crate::error::{Error, Result};
use crate::game::{run_activation_with, Action, ActivationOptions, Decision, GameTrace, MoveRule};
use crate::geometry::{AntennaLayout, Point3, Scenario, UserDrop};
use crate::secrecy::{rate, Coalition, CoalitionValue, LinkBudget, LinkRates};

/// Largest antenna count searched exhaustively.
pub const BRUTE_FORCE_CAP: usize = 24;

fn check_players<V: CoalitionValue + ?Sized>(v: &V, n_antennas: usize) -> Result<()> {
    if n_antennas == 0 {
        return Err(Error::invalid("need at least one antenna"));
    }
    if v.players() != n_antennas {
        return Err(Error::invalid(format!(
            "value function has {} players, expected {n_antennas}",
            v.players()
        )));
    }
    Ok(())
}

/// Exhaustive search over all nonempty coalitions. Ties go to the smallest mask.
pub fn brute_force_optimum<V: CoalitionValue + ?Sized>(v: &V, n_antennas: usize) -> Result<(Coalition, f64)> {
    check_players(v, n_antennas)?;
    if n_antennas > BRUTE_FORCE_CAP {
        return Err(Error::Capacity {
            what: "exhaustive search",
            size: n_antennas,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let mut best = Coalition::from_mask(1);
    let mut best_value = v.value(best);
    for mask in 2..(1u64 << n_antennas) {
        let c = Coalition::from_mask(mask);
        let value = v.value(c);
        if value > best_value {
            best = c;
            best_value = value;
        }
    }
    Ok((best, best_value))
}

/// Starting temperature, on the scale of the secrecy rates themselves (up to
/// ~15 bit/s/Hz). Colder starts freeze into interference-induced local optima.
pub const DEFAULT_INITIAL_TEMPERATURE: f64 = 10.0;
pub const DEFAULT_FINAL_TEMPERATURE: f64 = 1e-3;

/// Geometric cooling `T_k = T_0 · a^k` for `k = 0..steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealingSchedule {
    pub initial_temperature: f64,
    pub cooling_factor: f64,
    pub steps: usize,
}

impl AnnealingSchedule {
    pub fn new(initial_temperature: f64, cooling_factor: f64, steps: usize) -> Result<Self> {
        if !(initial_temperature > 0.0 && initial_temperature.is_finite()) {
            return Err(Error::invalid(format!(
                "initial temperature must be positive, got {initial_temperature}"
            )));
        }
        if !(cooling_factor > 0.0 && cooling_factor < 1.0) {
            return Err(Error::invalid(format!(
                "cooling factor must lie in (0, 1), got {cooling_factor}"
            )));
        }
        Ok(AnnealingSchedule {
            initial_temperature,
            cooling_factor,
            steps,
        })
    }

    /// Cooling factor chosen so the temperature decays from `initial` to
    /// `final_temperature` over `steps` steps.
    pub fn decaying(initial: f64, final_temperature: f64, steps: usize) -> Result<Self> {
        if !(final_temperature > 0.0 && final_temperature < initial) {
            return Err(Error::invalid("final temperature must lie in (0, initial)"));
        }
        let factor = (final_temperature / initial).powf(1.0 / steps.max(1) as f64);
        AnnealingSchedule::new(initial, factor, steps)
    }

    /// Default schedule: [`DEFAULT_INITIAL_TEMPERATURE`] decaying to
    /// [`DEFAULT_FINAL_TEMPERATURE`].
    pub fn with_steps(steps: usize) -> Self {
        AnnealingSchedule::decaying(DEFAULT_INITIAL_TEMPERATURE, DEFAULT_FINAL_TEMPERATURE, steps)
            .expect("default schedule is valid")
    }

    pub fn temperature(&self, step: usize) -> f64 {
        self.initial_temperature * self.cooling_factor.powi(step as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnealingStep {
    pub step: usize,
    pub temperature: f64,
    pub proposed: Coalition,
    /// `v(proposed) − v(current)`; NaN when the proposal would empty the coalition.
    pub delta: f64,
    pub accepted: bool,
    pub current_value: f64,
    pub best_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealingOutcome {
    pub start: Coalition,
    pub coalition: Coalition,
    pub value: f64,
    pub accepted_moves: usize,
    pub trace: Vec<AnnealingStep>,
}

/// Best coalition found by single-bit-flip Metropolis annealing.
pub fn simulated_annealing<V: CoalitionValue + ?Sized>(
    v: &V,
    n_antennas: usize,
    schedule: &AnnealingSchedule,
    seed: u64,
) -> Result<(Coalition, f64)> {
    let out = anneal(v, n_antennas, schedule, seed, false)?;
    Ok((out.coalition, out.value))
}

/// As [`simulated_annealing`], keeping one trace entry per step.
pub fn simulated_annealing_traced<V: CoalitionValue + ?Sized>(
    v: &V,
    n_antennas: usize,
    schedule: &AnnealingSchedule,
    seed: u64,
) -> Result<AnnealingOutcome> {
    anneal(v, n_antennas, schedule, seed, true)
}

fn anneal<V: CoalitionValue + ?Sized>(
    v: &V,
    n: usize,
    schedule: &AnnealingSchedule,
    seed: u64,
    record: bool,
) -> Result<AnnealingOutcome> {
    check_players(v, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = if n == 64 {
        loop {
            let m: u64 = rng.random();
            if m != 0 {
                break Coalition::from_mask(m);
            }
        }
    } else {
        Coalition::from_mask(rng.random_range(1..(1u64 << n)))
    };

    let mut current = start;
    let mut current_value = v.value(current);
    let mut best = current;
    let mut best_value = current_value;
    let mut accepted_moves = 0;
    let mut trace = Vec::with_capacity(if record { schedule.steps } else { 0 });
    let mut temperature = schedule.initial_temperature;

    for step in 0..schedule.steps {
        let flip = rng.random_range(0..n);
        let proposed = if current.contains(flip) {
            current.without(flip)
        } else {
            current.with(flip)
        };
        let (proposed_value, delta, accepted) = if proposed.is_empty() {
            (f64::NAN, f64::NAN, false)
        } else {
            let proposed_value = v.value(proposed);
            let delta = proposed_value - current_value;
            // always draw so the stream does not depend on the sign of delta
            let u: f64 = rng.random();
            (proposed_value, delta, delta >= 0.0 || u < (delta / temperature).exp())
        };
        if accepted {
            current = proposed;
            current_value = proposed_value;
            accepted_moves += 1;
            if current_value > best_value {
                best = current;
                best_value = current_value;
            }
        }
        if record {
            trace.push(AnnealingStep {
                step,
                temperature,
                proposed,
                delta,
                accepted,
                current_value,
                best_value,
            });
        }
        temperature *= schedule.cooling_factor;
    }

    Ok(AnnealingOutcome {
        start,
        coalition: best,
        value: best_value,
        accepted_moves,
        trace,
    })
}

/// Merge/split on the coalition value itself: join iff `v(S ∪ {n}) > v(S)`,
/// leave iff `v(S \ {n}) > v(S)` and `|S| ≠ 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ValueRule;

impl MoveRule for ValueRule {
    fn merge(&self, v: &dyn CoalitionValue, coalition: Coalition, n: usize) -> Result<Decision> {
        if coalition.contains(n) {
            return Err(Error::invalid(format!("antenna {n} is already in {coalition}")));
        }
        let current = v.value(coalition);
        let deviation = v.value(coalition.with(n));
        let action = if deviation > current {
            Action::Merge
        } else {
            Action::None
        };
        Ok(Decision {
            action,
            current,
            deviation,
        })
    }

    fn split(&self, v: &dyn CoalitionValue, coalition: Coalition, n: usize) -> Result<Decision> {
        if !coalition.contains(n) {
            return Err(Error::invalid(format!("antenna {n} is not in {coalition}")));
        }
        let current = v.value(coalition);
        if coalition.len() == 1 {
            return Ok(Decision {
                action: Action::None,
                current,
                deviation: f64::NAN,
            });
        }
        let deviation = v.value(coalition.without(n));
        let action = if deviation > current {
            Action::Split
        } else {
            Action::None
        };
        Ok(Decision {
            action,
            current,
            deviation,
        })
    }
}

pub fn coalition_value_activation<V: CoalitionValue>(
    v: &V,
    layout: &AntennaLayout,
    bob: Point3,
) -> Result<(Coalition, GameTrace)> {
    run_activation_with(v, layout, bob, &ValueRule, &ActivationOptions::default())
}

/// Element positions of an `n`-antenna, half-wavelength-spaced array along
/// `x`, centered over the middle of the region at the waveguide height.
pub fn ula_positions(scenario: &Scenario, n: usize) -> Vec<Point3> {
    let spacing = wavelengths(scenario).free_space / 2.0;
    let (y_lo, y_hi) = scenario.y_bounds();
    let center_x = scenario.region_x / 2.0;
    let center_y = (y_lo + y_hi) / 2.0;
    let mid = (n as f64 - 1.0) / 2.0;
    (0..n)
        .map(|k| {
            Point3::new(
                center_x + (k as f64 - mid) * spacing,
                center_y,
                scenario.waveguide_height,
            )
        })
        .collect()
}

/// Rates of the fixed array with every element active and equal power.
pub fn ula_secrecy_rate(
    scenario: &Scenario,
    drop: &UserDrop,
    n_antennas: usize,
    budget: &LinkBudget,
) -> Result<LinkRates> {
    if n_antennas == 0 || n_antennas > Coalition::MAX_PLAYERS {
        return Err(Error::invalid(format!("array size {n_antennas} outside 1..=64")));
    }
    let array = ula_positions(scenario, n_antennas);
    let all = Coalition::full(n_antennas);
    let bob = ChannelVector::free_space(scenario, &array, drop.bob);
    let eve = ChannelVector::free_space(scenario, &array, drop.eve);
    Ok(LinkRates {
        bob: rate(&bob, all, budget)?,
        eve: rate(&eve, all, budget)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::TableGame;
    use crate::geometry::{distance, uniform_layout};

    fn random_game(players: usize, seed: u64) -> TableGame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TableGame::from_fn(players, |_| rng.random_range(-2.0..2.0)).unwrap()
    }

    #[test]
    fn brute_force_examples() {
        let v = TableGame::new(1, vec![0.0, -3.0]).unwrap();
        assert_eq!(brute_force_optimum(&v, 1).unwrap(), (Coalition::singleton(0), -3.0));

        let table = vec![0.0, 0.4, 1.1, -0.2, 0.3, 1.1, 0.9, 0.0];
        let v = TableGame::new(3, table).unwrap();
        // masks 2 and 5 tie at 1.1; the smaller mask wins
        assert_eq!(brute_force_optimum(&v, 3).unwrap(), (Coalition::from_mask(2), 1.1));
    }

    #[test]
    fn brute_force_errors() {
        let v = random_game(3, 0);
        assert!(brute_force_optimum(&v, 4).is_err());
        assert!(brute_force_optimum(&v, 0).is_err());
        struct Wide;
        impl CoalitionValue for Wide {
            fn players(&self) -> usize {
                25
            }
            fn value(&self, _: Coalition) -> f64 {
                0.0
            }
        }
        assert!(matches!(brute_force_optimum(&Wide, 25), Err(Error::Capacity { .. })));
    }

    #[test]
    fn schedule_validation() {
        assert!(AnnealingSchedule::new(0.0, 0.5, 10).is_err());
        assert!(AnnealingSchedule::new(1.0, 1.0, 10).is_err());
        assert!(AnnealingSchedule::new(1.0, 0.0, 10).is_err());
        let s = AnnealingSchedule::with_steps(1000);
        assert!((s.temperature(1000) - 1e-3).abs() < 1e-12);
        assert!(s.temperature(1) < s.temperature(0));
    }

    #[test]
    fn zero_step_schedule_returns_start() {
        let v = random_game(5, 3);
        let schedule = AnnealingSchedule::new(1.0, 0.5, 0).unwrap();
        let out = simulated_annealing_traced(&v, 5, &schedule, 11).unwrap();
        assert_eq!(out.coalition, out.start);
        assert_eq!(out.value, v.value(out.start));
        assert!(out.trace.is_empty());
    }

    #[test]
    fn annealing_is_deterministic_and_monotone() {
        let v = random_game(8, 4);
        let schedule = AnnealingSchedule::with_steps(5000);
        let a = simulated_annealing_traced(&v, 8, &schedule, 99).unwrap();
        let b = simulated_annealing_traced(&v, 8, &schedule, 99).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert!(a.trace.windows(2).all(|w| w[1].best_value >= w[0].best_value));
        assert!(a.trace.iter().all(|s| !s.accepted || !s.proposed.is_empty()));
        assert_eq!(a.value, v.value(a.coalition));
        let (opt, opt_value) = brute_force_optimum(&v, 8).unwrap();
        assert!(a.value <= opt_value);
        assert_eq!(a.coalition, opt);
    }

    #[test]
    fn single_antenna_annealing_never_moves() {
        let v = TableGame::new(1, vec![0.0, 0.7]).unwrap();
        let out = simulated_annealing_traced(&v, 1, &AnnealingSchedule::with_steps(50), 1).unwrap();
        assert_eq!(out.coalition, Coalition::singleton(0));
        assert_eq!(out.accepted_moves, 0);
    }

    #[test]
    fn cold_annealing_rejects_worsening_moves() {
        let v = random_game(8, 12);
        let schedule = AnnealingSchedule::decaying(1.0, 1e-9, 20_000).unwrap();
        let out = simulated_annealing_traced(&v, 8, &schedule, 5).unwrap();
        let cold: Vec<_> = out
            .trace
            .iter()
            .filter(|s| s.temperature < 1e-4 && s.delta < -1e-3)
            .collect();
        assert!(cold.len() > 100);
        assert!(cold.iter().all(|s| !s.accepted));
        let hot: Vec<_> = out
            .trace
            .iter()
            .filter(|s| s.temperature > 0.5 && s.delta < 0.0)
            .collect();
        assert!(hot.iter().any(|s| s.accepted));
    }

    #[test]
    fn value_rule_activation() {
        let s = Scenario::default();
        let layout = uniform_layout(&s, 1).unwrap();
        let v = TableGame::new(1, vec![0.0, 0.1]).unwrap();
        let (c, _) = coalition_value_activation(&v, &layout, Point3::default()).unwrap();
        assert_eq!(c, Coalition::singleton(0));

        // additive: every positive-worth antenna is added in one scan
        let worth = [0.5, 0.2, -0.1, 0.3, 0.0];
        let layout = uniform_layout(&s, 5).unwrap();
        let v = TableGame::from_fn(5, |c| c.iter().map(|i| worth[i]).sum()).unwrap();
        let (c, trace) = coalition_value_activation(&v, &layout, Point3::default()).unwrap();
        assert_eq!(c, Coalition::from_indices([0, 1, 3]));
        assert_eq!(trace.cycles_used, 2);
        assert!(trace.converged);
        let mut last = trace.initial_value;
        for step in &trace.iterations {
            assert!(step.value >= last);
            last = step.value;
        }
    }

    #[test]
    fn ula_geometry() {
        let s = Scenario::default();
        let lambda = wavelengths(&s).free_space;
        let one = ula_positions(&s, 1);
        assert_eq!(one, vec![Point3::new(5.0, 0.0, 3.0)]);
        let four = ula_positions(&s, 4);
        for w in four.windows(2) {
            assert!((distance(w[0], w[1]) - lambda / 2.0).abs() < 1e-15);
        }
        assert!(((four[0].x + four[3].x) / 2.0 - 5.0).abs() < 1e-15);
    }

    #[test]
    fn ula_rates() {
        let s = Scenario::default();
        let b = LinkBudget::new(10.0, -90.0).unwrap();
        let p = Point3::new(2.0, 1.0, 0.0);
        let same = UserDrop { bob: p, eve: p };
        assert_eq!(ula_secrecy_rate(&s, &same, 20, &b).unwrap().secrecy(), 0.0);

        let drop = UserDrop {
            bob: p,
            eve: Point3::new(8.0, -2.0, 0.0),
        };
        let r = ula_secrecy_rate(&s, &drop, 1, &b).unwrap();
        let eta = wavelengths(&s).path_loss;
        let d = distance(p, Point3::new(5.0, 0.0, 3.0));
        let expected = (1.0 + b.snr(1) * (eta / d).powi(2)).log2();
        assert!((r.bob - expected).abs() < 1e-12);
        assert!(ula_secrecy_rate(&s, &drop, 0, &b).is_err());
    }
}
