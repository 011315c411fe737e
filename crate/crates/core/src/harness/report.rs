use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{brute_force_optimum, coalition_value_activation, ula_secrecy_rate, BRUTE_FORCE_CAP};
use crate::channel::total_phase;
use crate::error::Result;
use crate::game::{payoff_report, run_activation_with, ShapleyRule};
use crate::geometry::{sample_drop, uniform_layout};
use crate::secrecy::{Coalition, LinkBudget, SecrecyEvaluator};

use super::ExperimentConfig;

/// Human-readable dump of one drop: channels, the Shapley run's trace, final
/// payoffs and every method's result.
pub fn single_drop_report(config: &ExperimentConfig, antennas: usize, power_dbm: f64, seed: u64) -> Result<String> {
    config.validate()?;
    let scenario = &config.scenario;
    let layout = uniform_layout(scenario, antennas)?;
    let budget = LinkBudget::for_scenario(scenario, power_dbm)?;
    let drop = sample_drop(scenario, &mut ChaCha8Rng::seed_from_u64(seed));
    let v = SecrecyEvaluator::for_drop(scenario, &layout, &drop, budget)?;

    let mut s = String::new();
    let _ = writeln!(s, "seed {seed}, N = {antennas}, P_t = {power_dbm} dBm");
    let _ = writeln!(
        s,
        "bob = ({:.4}, {:.4}), eve = ({:.4}, {:.4})",
        drop.bob.x, drop.bob.y, drop.eve.x, drop.eve.y
    );
    let _ = writeln!(
        s,
        "\nantenna        x   |h_bob|      phase_bob   |h_eve|      phase_eve"
    );
    for n in 0..antennas {
        let hb = v.bob().coefficients()[n];
        let he = v.eve().coefficients()[n];
        let _ = writeln!(
            s,
            "{n:>7} {:>8.4} {:>11.4e} {:>12.6} {:>11.4e} {:>12.6}",
            layout.positions_x()[n],
            hb.norm(),
            total_phase(scenario, &layout, drop.bob, n)?.rem_euclid(TAU),
            he.norm(),
            total_phase(scenario, &layout, drop.eve, n)?.rem_euclid(TAU),
        );
    }

    let rule = ShapleyRule {
        cap: config.game.shapley_cap,
    };
    let (coalition, trace) = run_activation_with(&v, &layout, drop.bob, &rule, &config.game.options())?;
    let _ = writeln!(
        s,
        "\nshapley run: start {} (v = {:.6})",
        trace.initial, trace.initial_value
    );
    for step in trace
        .iterations
        .iter()
        .filter(|st| st.action != crate::game::Action::None)
    {
        let _ = writeln!(
            s,
            "  cycle {} antenna {:>2} {:<5} payoff {:.6} -> {:.6}  S = {} v = {:.6}",
            step.cycle,
            step.antenna,
            step.action.as_str(),
            step.current_payoff,
            step.deviation_payoff,
            step.coalition,
            step.value
        );
    }
    let _ = writeln!(
        s,
        "  converged = {}, cycles = {}, examined = {}",
        trace.converged,
        trace.cycles_used,
        trace.examined()
    );

    let _ = writeln!(s, "\npayoffs at {coalition}:");
    for p in payoff_report(&v, coalition)? {
        let tag = if p.in_coalition { "shapley" } else { "outside" };
        let _ = writeln!(s, "  antenna {:>2} {tag} {:+.6}", p.antenna, p.payoff);
    }

    let _ = writeln!(s, "\nmethod                   secrecy      bob      eve  coalition");
    let mut line = |name: &str, c: Coalition| -> Result<()> {
        let r = v.rates(c)?;
        let _ = writeln!(s, "{name:<22} {:>9.4} {:>8.4} {:>8.4}  {c}", r.secrecy(), r.bob, r.eve);
        Ok(())
    };
    line("initial-single-antenna", trace.initial)?;
    line("shapley", coalition)?;
    line("coalition-value", coalition_value_activation(&v, &layout, drop.bob)?.0)?;
    if antennas <= BRUTE_FORCE_CAP {
        line("brute-force", brute_force_optimum(&v, antennas)?.0)?;
    }
    let ula = ula_secrecy_rate(scenario, &drop, antennas, &budget)?;
    let _ = writeln!(
        s,
        "{:<22} {:>9.4} {:>8.4} {:>8.4}  (all)",
        "fixed-ula",
        ula.secrecy(),
        ula.bob,
        ula.eve
    );
    Ok(s)
}
