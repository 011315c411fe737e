//! Free-space plus in-waveguide channel model.
//!
//! The coefficient from antenna `n` to a receiver at `p` is
//! `η / r · exp(−j φ)`, where `r` is the free-space distance and the total
//! phase `φ = 2π r / λ + 2π ℓ / λ_g` adds the guided leg `ℓ` from the feed
//! point. Waveguide loss is not modeled.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{distance, AntennaLayout, Point3, Scenario};
use crate::secrecy::Coalition;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavelengths {
    /// Free-space wavelength `λ = c / f_c`.
    pub free_space: f64,
    /// Guided wavelength `λ_g = λ / n_eff`.
    pub guided: f64,
    /// Free-space path-loss constant `η = c / (4π f_c)`.
    pub path_loss: f64,
}

pub fn wavelengths(scenario: &Scenario) -> Wavelengths {
    let free_space = SPEED_OF_LIGHT / scenario.carrier_frequency;
    Wavelengths {
        free_space,
        guided: free_space / scenario.effective_refractive_index,
        path_loss: SPEED_OF_LIGHT / (4.0 * PI * scenario.carrier_frequency),
    }
}

fn phase_from_legs(w: &Wavelengths, free_leg: f64, guided_leg: f64) -> f64 {
    TAU * free_leg / w.free_space + TAU * guided_leg / w.guided
}

/// Unwrapped total phase of antenna `n` at `receiver`, in radians.
pub fn total_phase(scenario: &Scenario, layout: &AntennaLayout, receiver: Point3, n: usize) -> Result<f64> {
    let antenna = layout.position(n)?;
    let w = wavelengths(scenario);
    Ok(phase_from_legs(
        &w,
        distance(receiver, antenna),
        distance(scenario.feed_point(), antenna),
    ))
}

fn coefficient(w: &Wavelengths, free_leg: f64, guided_leg: f64) -> Complex64 {
    let phase = phase_from_legs(w, free_leg, guided_leg).rem_euclid(TAU);
    Complex64::from_polar(w.path_loss / free_leg, -phase)
}

pub fn channel_coefficient(
    scenario: &Scenario,
    layout: &AntennaLayout,
    receiver: Point3,
    n: usize,
) -> Result<Complex64> {
    let antenna = layout.position(n)?;
    let w = wavelengths(scenario);
    Ok(coefficient(
        &w,
        distance(receiver, antenna),
        distance(scenario.feed_point(), antenna),
    ))
}

/// `mod(φ_n − φ_m, 2π)` at `receiver`.
pub fn phase_gap(scenario: &Scenario, layout: &AntennaLayout, receiver: Point3, n: usize, m: usize) -> Result<f64> {
    if n == m {
        return Err(Error::invalid(format!(
            "phase gap needs two distinct antennas, got {n} twice"
        )));
    }
    let a = total_phase(scenario, layout, receiver, n)?;
    let b = total_phase(scenario, layout, receiver, m)?;
    let gap = (a - b).rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    Ok(if gap >= TAU { 0.0 } else { gap })
}

/// Coefficients of every antenna in a layout toward one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    coefficients: Vec<Complex64>,
    wavelength: f64,
    guided_wavelength: f64,
}

impl ChannelVector {
    /// Pinching-antenna channels: free-space leg plus guided leg from the feed.
    pub fn pinching(scenario: &Scenario, layout: &AntennaLayout, receiver: Point3) -> Self {
        let w = wavelengths(scenario);
        let feed = scenario.feed_point();
        let coefficients = layout
            .positions()
            .map(|a| coefficient(&w, distance(receiver, a), distance(feed, a)))
            .collect();
        ChannelVector {
            coefficients,
            wavelength: w.free_space,
            guided_wavelength: w.guided,
        }
    }

    /// Conventional fixed antennas: free-space leg only.
    pub fn free_space(scenario: &Scenario, antennas: &[Point3], receiver: Point3) -> Self {
        let w = wavelengths(scenario);
        let coefficients = antennas
            .iter()
            .map(|&a| coefficient(&w, distance(receiver, a), 0.0))
            .collect();
        ChannelVector {
            coefficients,
            wavelength: w.free_space,
            guided_wavelength: w.guided,
        }
    }

    pub fn from_coefficients(coefficients: Vec<Complex64>, wavelengths: Wavelengths) -> Self {
        ChannelVector {
            coefficients,
            wavelength: wavelengths.free_space,
            guided_wavelength: wavelengths.guided,
        }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn guided_wavelength(&self) -> f64 {
        self.guided_wavelength
    }

    /// Sum over members without validation; the empty coalition gives zero.
    pub(crate) fn sum_unchecked(&self, coalition: Coalition) -> Complex64 {
        coalition
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, i| acc + self.coefficients[i])
    }
}

/// Coherent sum `Σ_{n∈S} h_n` over the active antennas.
pub fn effective_channel(channels: &ChannelVector, coalition: Coalition) -> Result<Complex64> {
    if coalition.is_empty() {
        return Err(Error::invalid("at least one antenna must be active"));
    }
    coalition.check_within(channels.len())?;
    Ok(channels.sum_unchecked(coalition))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::uniform_layout;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Wraps a phase difference into `(−π, π]`.
    fn angle_diff(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(TAU);
        if d > PI {
            d - TAU
        } else {
            d
        }
    }

    #[test]
    fn wavelengths_at_28ghz() {
        let w = wavelengths(&Scenario::default());
        assert!(rel(w.free_space, 1.070_687_35e-2) < 1e-9);
        assert!(rel(w.guided, 7.647_766_785_714_286_5e-3) < 1e-9);
        assert!(rel(w.path_loss, 8.520_259_212_923_112e-4) < 1e-9);
        assert!(rel(w.path_loss, w.free_space / (4.0 * PI)) < 1e-15);
    }

    #[test]
    fn phase_with_antenna_at_feed() {
        let s = Scenario::default();
        let layout = AntennaLayout::new(&s, vec![0.0, 4.0]).unwrap();
        let w = wavelengths(&s);
        let below = Point3::new(0.0, 0.0, 0.0);
        let phi = total_phase(&s, &layout, below, 0).unwrap();
        assert!(rel(phi, TAU * 3.0 / w.free_space) < 1e-15);

        let s = Scenario {
            feed_point_x: 3.0,
            ..Default::default()
        };
        let layout = AntennaLayout::new(&s, vec![0.0, 4.0]).unwrap();
        let phi = total_phase(&s, &layout, Point3::new(4.0, 0.0, 0.0), 1).unwrap();
        let expected = TAU * (3.0 / w.free_space + 1.0 / w.guided);
        assert!(rel(phi, expected) < 1e-15);
    }

    #[test]
    fn index_out_of_range() {
        let s = Scenario::default();
        let layout = uniform_layout(&s, 3).unwrap();
        let p = Point3::default();
        assert!(matches!(
            total_phase(&s, &layout, p, 3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
        assert!(channel_coefficient(&s, &layout, p, 5).is_err());
    }

    #[test]
    fn vertical_link() {
        let s = Scenario::default();
        let layout = AntennaLayout::new(&s, vec![0.0]).unwrap();
        let w = wavelengths(&s);
        let h = channel_coefficient(&s, &layout, Point3::new(0.0, 0.0, 0.0), 0).unwrap();
        assert!(rel(h.norm(), w.path_loss / 3.0) < 1e-12);
        assert!(angle_diff(h.arg(), -TAU * 3.0 / w.free_space).abs() < 1e-9);
    }

    #[test]
    fn inverse_distance_law() {
        let s = Scenario::default();
        let layout = AntennaLayout::new(&s, vec![5.0]).unwrap();
        // free-space legs of 3 m and 6 m
        let near = channel_coefficient(&s, &layout, Point3::new(5.0, 0.0, 0.0), 0).unwrap();
        let far_y = (36.0f64 - 9.0).sqrt();
        let far = channel_coefficient(&s, &layout, Point3::new(5.0, far_y, 0.0), 0).unwrap();
        assert!(rel(far.norm(), near.norm() / 2.0) < 1e-12);
    }

    #[test]
    fn vector_matches_per_entry() {
        let s = Scenario::default();
        let layout = uniform_layout(&s, 9).unwrap();
        let p = Point3::new(3.3, -1.7, 0.0);
        let v = ChannelVector::pinching(&s, &layout, p);
        assert_eq!(v.len(), 9);
        for n in 0..9 {
            assert_eq!(v.coefficients()[n], channel_coefficient(&s, &layout, p, n).unwrap());
        }
        assert_eq!(v.wavelength(), wavelengths(&s).free_space);
        assert_eq!(v.guided_wavelength(), wavelengths(&s).guided);
    }

    #[test]
    fn effective_channel_basics() {
        let s = Scenario::default();
        let layout = uniform_layout(&s, 4).unwrap();
        let v = ChannelVector::pinching(&s, &layout, Point3::new(1.0, 1.0, 0.0));
        assert!(effective_channel(&v, Coalition::EMPTY).is_err());
        assert!(effective_channel(&v, Coalition::singleton(4)).is_err());
        assert_eq!(
            effective_channel(&v, Coalition::singleton(2)).unwrap(),
            v.coefficients()[2]
        );
    }

    /// Two antennas at 0 and `x`, receiver at the origin on the ground; the
    /// second antenna is nudged until its phase gap reaches `target`.
    fn aligned_pair(target: f64) -> (Scenario, AntennaLayout, Point3) {
        let s = Scenario::default();
        let receiver = Point3::new(0.0, 0.0, 0.0);
        let gap_at = |x: f64| {
            let layout = AntennaLayout::new(&s, vec![0.0, x]).unwrap();
            phase_gap(&s, &layout, receiver, 0, 1).unwrap()
        };
        // the gap decreases with x (φ_1 grows), so bisect on the wrapped error
        let err = |x: f64| angle_diff(gap_at(x), target);
        let (mut lo, mut hi) = (1.0, 1.01);
        // bracket a sign change of the wrapped error; one full cycle is ~6 mm
        let mut found = false;
        let steps = 1000;
        for i in 0..steps {
            let a = 1.0 + 0.01 * i as f64 / steps as f64;
            let b = 1.0 + 0.01 * (i + 1) as f64 / steps as f64;
            let (ea, eb) = (err(a), err(b));
            if ea.signum() != eb.signum() && (ea - eb).abs() < 1.0 {
                lo = a;
                hi = b;
                found = true;
                break;
            }
        }
        assert!(found);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if err(mid).signum() == err(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let layout = AntennaLayout::new(&s, vec![0.0, 0.5 * (lo + hi)]).unwrap();
        (s, layout, receiver)
    }

    #[test]
    fn constructive_alignment_adds_amplitudes() {
        let (s, layout, p) = aligned_pair(0.0);
        let v = ChannelVector::pinching(&s, &layout, p);
        let gap = phase_gap(&s, &layout, p, 0, 1).unwrap();
        assert!(angle_diff(gap, 0.0).abs() < 1e-9);
        let sum = effective_channel(&v, Coalition::from_indices([0, 1])).unwrap().norm();
        let h = v.coefficients();
        assert!((sum - (h[0].norm() + h[1].norm())).abs() < 1e-9 * sum);
    }

    #[test]
    fn destructive_alignment_subtracts_amplitudes() {
        let (s, layout, p) = aligned_pair(PI);
        let v = ChannelVector::pinching(&s, &layout, p);
        let gap = phase_gap(&s, &layout, p, 0, 1).unwrap();
        assert!((gap - PI).abs() < 1e-9);
        let sum = effective_channel(&v, Coalition::from_indices([0, 1])).unwrap().norm();
        let h = v.coefficients();
        let expected = (h[0].norm() - h[1].norm()).abs();
        assert!((sum - expected).abs() < 1e-9 * h[0].norm());
    }

    #[test]
    fn phase_gap_rules() {
        let s = Scenario::default();
        let layout = uniform_layout(&s, 3).unwrap();
        let p = Point3::new(2.0, 1.0, 0.0);
        assert!(phase_gap(&s, &layout, p, 1, 1).is_err());

        // equal free-space legs and equal guided legs: feed at the middle antenna
        let s = Scenario {
            feed_point_x: 5.0,
            ..Default::default()
        };
        let layout = AntennaLayout::new(&s, vec![4.0, 5.0, 6.0]).unwrap();
        let gap = phase_gap(&s, &layout, Point3::new(5.0, 2.0, 0.0), 0, 2).unwrap();
        assert!(gap.abs() < 1e-9 || (TAU - gap).abs() < 1e-9);
    }

    #[test]
    fn phase_gap_antisymmetry() {
        let s = Scenario::default();
        let layout = uniform_layout(&s, 6).unwrap();
        let p = Point3::new(7.1, -2.2, 0.0);
        for n in 0..6 {
            for m in 0..6 {
                if n == m {
                    continue;
                }
                let sum = phase_gap(&s, &layout, p, n, m).unwrap() + phase_gap(&s, &layout, p, m, n).unwrap();
                assert!(sum.abs() < 1e-9 || (sum - TAU).abs() < 1e-9, "{sum}");
            }
        }
    }

    /// Exact fractional number of cycles `(free_m / λ + guided_m / λ_g) mod 1`
    /// for integer-meter legs at 28 GHz and n_eff = 1.4, in integer arithmetic.
    fn exact_cycles_fraction(free_m: u128, guided_m: u128) -> f64 {
        // cycles = f·(10·free + 14·guided) / (10·c)
        let c = SPEED_OF_LIGHT as u128;
        let num = 28_000_000_000u128 * (10 * free_m + 14 * guided_m);
        let den = 10 * c;
        (num % den) as f64 / den as f64
    }

    #[test]
    fn phase_precision_against_exact_oracle() {
        // integer (dx, dy) with dx² + dy² + 9 a perfect square give integer legs
        let s = Scenario::default();
        let mut checked = 0;
        for dx in 0u64..=99 {
            for dy in 0u64..=99 {
                let sq = dx * dx + dy * dy + 9;
                let r = (sq as f64).sqrt().round() as u64;
                if r * r != sq || r > 100 {
                    continue;
                }
                for feed in [0u64, 7, 10] {
                    let s = Scenario {
                        feed_point_x: feed as f64,
                        waveguide_length: 100.0,
                        ..s.clone()
                    };
                    let ant_x = (feed + 1) as f64;
                    let layout = AntennaLayout::new(&s, vec![ant_x]).unwrap();
                    let receiver = Point3::new(ant_x + dx as f64, dy as f64, 0.0);
                    let frac = exact_cycles_fraction(r as u128, 1);
                    let h = channel_coefficient(&s, &layout, receiver, 0).unwrap();
                    let err = angle_diff(-h.arg(), TAU * frac);
                    assert!(err.abs() < 1e-9, "r = {r}, err = {err}");
                    let phi = total_phase(&s, &layout, receiver, 0).unwrap();
                    assert!(angle_diff(phi, TAU * frac).abs() < 1e-9);
                    checked += 1;
                }
            }
        }
        assert!(checked > 20);
    }

    proptest! {
        #[test]
        fn magnitude_and_phase_laws(
            n in 2usize..24,
            k in 0usize..24,
            x in 0.0..10.0f64,
            y in -3.0..3.0f64,
            feed in 0.0..10.0f64,
        ) {
            let s = Scenario { feed_point_x: feed, ..Default::default() };
            let layout = uniform_layout(&s, n).unwrap();
            let k = k % n;
            let p = Point3::new(x, y, 0.0);
            let h = channel_coefficient(&s, &layout, p, k).unwrap();
            let r = distance(p, layout.position(k).unwrap());
            let eta = wavelengths(&s).path_loss;
            prop_assert!(((h.norm() * r - eta) / eta).abs() < 1e-12);
            let phi = total_phase(&s, &layout, p, k).unwrap();
            prop_assert!(phi >= 0.0);
            prop_assert!(angle_diff(-h.arg(), phi).abs() < 1e-9);
        }

        #[test]
        fn effective_channel_is_additive(mask_a in 1u64..(1 << 12), mask_b in 1u64..(1 << 12)) {
            let s = Scenario::default();
            let layout = uniform_layout(&s, 12).unwrap();
            let v = ChannelVector::pinching(&s, &layout, Point3::new(4.0, 1.0, 0.0));
            let a = Coalition::from_mask(mask_a);
            let b = Coalition::from_mask(mask_b & !mask_a);
            prop_assume!(!b.is_empty());
            let joint = effective_channel(&v, a.union(b)).unwrap();
            let split = effective_channel(&v, a).unwrap() + effective_channel(&v, b).unwrap();
            prop_assert!((joint - split).norm() < 1e-15);
        }
    }
}
