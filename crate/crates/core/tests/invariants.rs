//! Cross-module invariants, mostly as property tests.

use std::f64::consts::PI;
use std::sync::OnceLock;

use collective::bounces::{delta_k, eta_s1, BounceDecomposition};
use collective::dynamics::{diagonalized_lattice, AtomicState, LatticeBasis, LatticeSpec};
use collective::greens::{self, collective_self_energy, eta_minus_real, eta_plus, principal_pole};
use collective::params::instability_margin;
use collective::sweep::{
    angular_factor, subradiance_roots, sweep_poles, uniform_grid, zero_decay_in_range, Dimension,
};
use collective::waveguide::{existence_check, solve_trap, Coupling, WaveguideParams};
use collective::{Channel, ModelParams, QuadratureSpec, SymmetrySector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn sector() -> impl Strategy<Value = SymmetrySector> {
    prop_oneof![Just(SymmetrySector::Symmetric), Just(SymmetrySector::Antisymmetric)]
}

fn channel() -> impl Strategy<Value = Channel> {
    prop_oneof![Just(Channel::OneAtom), Just(Channel::Symmetric), Just(Channel::Antisymmetric)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn margin_monotone(l1 in 0.01f64..0.3, dl in 0.001f64..0.1, w1 in 0.5f64..4.0, dw in 0.01f64..1.0) {
        let p = ModelParams { lambda: l1, omega1: w1, ..ModelParams::default() };
        let m = |p: &ModelParams| instability_margin(p, &q()).unwrap().margin;
        prop_assert!(m(&p.with_lambda(l1 + dl)) < m(&p));
        let hotter = ModelParams { omega1: w1 + dw, ..p };
        prop_assert!(m(&hotter) > m(&p));
    }

    #[test]
    fn mirror_branch_jump(w in 0.05f64..8.0, x in 0.5f64..40.0, ch in channel()) {
        let p = ModelParams::default();
        let plus = eta_plus(C64::new(w, 0.0), ch, x, &p, &q()).unwrap();
        let minus = eta_minus_real(w, ch, x, &p, &q()).unwrap();
        prop_assert!((minus - plus.conj()).norm() <= 1e-10 * plus.norm().max(1.0));
        let s = ch.sigma().map_or(1.0, |s| 1.0 + s * (w * x).cos());
        let jump = 4.0 * PI * p.coupling_sq(w) * s;
        prop_assert!(((plus - minus).im - jump).abs() <= 1e-10 * jump.max(1.0));
        prop_assert!((plus - minus).re.abs() <= 1e-10 * plus.norm().max(1.0));
    }

    #[test]
    fn continuation_is_first_order_continuous(w in 0.2f64..6.0, x in 0.5f64..30.0, ch in channel()) {
        let p = ModelParams::default();
        let gap = |d: f64| {
            (eta_plus(C64::new(w, d), ch, x, &p, &q()).unwrap() - eta_plus(C64::new(w, -d), ch, x, &p, &q()).unwrap()).norm()
        };
        let (a, b) = (gap(1e-4), gap(1e-5));
        prop_assert!(b < 1e-3 * (1.0 + x));
        prop_assert!(b <= 0.2 * a + 1e-12, "{a} {b}");
    }

    #[test]
    fn poles_are_certified(x in 1.0f64..40.0, s in sector()) {
        let p = ModelParams::default().with_separation(x);
        let z = principal_pole(Channel::from(s), x, &p, &q()).unwrap();
        prop_assert!(z.certified);
        let r = eta_plus(z.value, Channel::from(s), x, &p, &q()).unwrap().norm();
        prop_assert!(r < 1e-10 * z.value.norm().max(1.0));
        let h = 1e-3 / x;
        let f = |w: C64| eta_plus(w, Channel::from(s), x, &p, &q()).unwrap();
        let d = (f(z.value + h) - f(z.value - h)) * (2.0 / (3.0 * h)) - (f(z.value + 2.0 * h) - f(z.value - 2.0 * h)) / (12.0 * h);
        prop_assert!((z.normalization * d - 1.0).norm() < 1e-8);
    }

    #[test]
    fn self_energy_reconstructs_pole(x in 2.0f64..30.0, s in sector()) {
        let p = ModelParams::default().with_separation(x);
        let z = principal_pole(Channel::from(s), x, &p, &q()).unwrap();
        let reference = QuadratureSpec { cutoff: 5e4, max_panels: 200_000, ..q() };
        let rebuilt = collective_self_energy(z.value, s, &p, &reference).unwrap();
        prop_assert!((rebuilt - z.value).norm() < 1e-8, "{} vs {}", rebuilt, z.value);
    }

    #[test]
    fn decomposition_and_expansion_bound(k in 0.05f64..10.0, x in 1.0f64..40.0) {
        let p = ModelParams::default().with_separation(x);
        let kc = C64::new(k, 0.0);
        let s1 = eta_s1(kc, x, &p, &q()).unwrap();
        let d = delta_k(kc, x, &p).unwrap();
        let full = eta_plus(kc, Channel::Symmetric, x, &p, &q()).unwrap();
        prop_assert!((full - (s1 - d)).norm() <= 1e-10 * full.norm().max(1.0));
        prop_assert!(d.norm() <= s1.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn angular_factor_symmetric_in_3d_is_positive(u in 1e-6f64..50.0) {
        prop_assert!(angular_factor(Dimension::Three, SymmetrySector::Symmetric, u) > 0.0);
        prop_assert!(angular_factor(Dimension::Three, SymmetrySector::Antisymmetric, u) > 0.0);
    }

    #[test]
    fn waveguide_traps_are_safe(n in 1u32..6, g0 in 0.0f64..0.12, w in 0.75f64..1.0) {
        let wg = WaveguideParams {
            w_lead: w,
            coupling: Coupling { g0, ..Coupling::default() },
            ..WaveguideParams::default()
        };
        prop_assume!(wg.validate().is_ok());
        prop_assume!(existence_check(&wg, &q()).unwrap().holds);
        let s = if n % 2 == 1 { SymmetrySector::Symmetric } else { SymmetrySector::Antisymmetric };
        let wrong = if n % 2 == 1 { SymmetrySector::Antisymmetric } else { SymmetrySector::Symmetric };
        let t = solve_trap(&wg, n, s, &q()).unwrap();
        prop_assert!(t.xi_tilde > wg.threshold() && t.xi_tilde < wg.closed_threshold());
        prop_assert!(solve_trap(&wg, n, wrong, &q()).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lattice_is_unitary_and_complete(x in 1.0f64..20.0, t in 0.0f64..40.0, label in prop_oneof![Just("1"), Just("2"), Just("s"), Just("a")]) {
        let p = ModelParams::default().with_separation(x);
        let model = diagonalized_lattice(&p, &LatticeSpec { box_length: 80.0, n_modes: 201 }, LatticeBasis::Parity).unwrap();
        let st = model.evolve(&AtomicState::from_label(label).unwrap(), t).unwrap();
        let (c1, c2) = model.atom_amplitudes(&st);
        prop_assert!((c1.norm_sqr() + c2.norm_sqr() + model.field_norm(&st) - 1.0).abs() < 1e-10);
        let (tr, fr) = model.spectral_residuals().unwrap();
        prop_assert!(tr < 1e-8 && fr < 1e-8);
    }

    #[test]
    fn mirror_symmetric_intensity(x in 2.0f64..20.0, t in 1.0f64..30.0, s in sector(), probe in 0.0f64..30.0) {
        let p = ModelParams { x1: -0.5 * x, x2: 0.5 * x, ..ModelParams::default() };
        let model = diagonalized_lattice(&p, &LatticeSpec { box_length: 80.0, n_modes: 201 }, LatticeBasis::Sector(s)).unwrap();
        let f = model.field_intensity(&AtomicState::sector(s), &[probe, -probe], t).unwrap();
        prop_assert!((f.intensity[0] - f.intensity[1]).abs() <= 1e-10 * f.intensity[0].max(1e-300).max(1.0));
    }

    #[test]
    fn parity_basis_equals_full_basis(x in 1.0f64..15.0, label in prop_oneof![Just("1"), Just("2"), Just("s"), Just("a")]) {
        let p = ModelParams::default().with_separation(x);
        let spec = LatticeSpec { box_length: 60.0, n_modes: 151 };
        let times = uniform_grid(0.0, 25.0, 1.0).unwrap();
        let init = AtomicState::from_label(label).unwrap();
        let a = diagonalized_lattice(&p, &spec, LatticeBasis::Parity).unwrap().survival_probability(&init, &times).unwrap();
        let b = diagonalized_lattice(&p, &spec, LatticeBasis::Full).unwrap().survival_probability(&init, &times).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            prop_assert!((u - v).abs() < 1e-10);
        }
    }
}

/// Outside the light cone of both emitters, widened by `2π/ω_M`, the
/// field intensity must be negligible.
#[test]
fn causality_outside_light_cone() {
    let x = 10.0;
    let p = ModelParams { x1: -0.5 * x, x2: 0.5 * x, ..ModelParams::default() };
    let spec = LatticeSpec { box_length: 400.0, n_modes: 2001 };
    let smear = 2.0 * PI / p.omega_m;
    let mut worst: f64 = 0.0;
    for s in SymmetrySector::BOTH {
        let model = diagonalized_lattice(&p, &spec, LatticeBasis::Sector(s)).unwrap();
        for t in [5.0, 20.0, 60.0] {
            let edge = 0.5 * x + t + smear;
            let xs: Vec<f64> = (1..=20).map(|i| edge + 2.0 * i as f64).collect();
            let f = model.field_intensity(&AtomicState::sector(s), &xs, t).unwrap();
            worst = f.intensity.iter().fold(worst, |a, &v| a.max(v));
        }
    }
    assert!(worst < 1e-8, "largest intensity outside the light cone {worst:.3e}");
}

/// The root of `k − z_s1 − Δ(k)` against the exact symmetric pole.
#[test]
fn weak_form_pole_equation_matches_exact_pole() {
    let x = 29.025;
    let p = ModelParams::default().with_separation(x);
    let d = BounceDecomposition::new(x, &p, &q()).unwrap();
    let (z, _) = d.collective_pole().unwrap();
    let exact = principal_pole(Channel::Symmetric, x, &p, &q()).unwrap();
    let gap = (z - exact.value).norm();
    assert!(gap < 1e-8, "weak-form root {z} vs exact {}: {gap:.3e}", exact.value);
}

struct SweepData {
    z1: collective::ComplexEnergy,
    sweep: collective::sweep::Sweep,
    zeros: Vec<(SymmetrySector, Vec<collective::sweep::ZeroDecaySolution>)>,
}

fn sweep_data() -> &'static SweepData {
    static DATA: OnceLock<SweepData> = OnceLock::new();
    DATA.get_or_init(|| {
        let p = ModelParams::default();
        SweepData {
            z1: principal_pole(Channel::OneAtom, 1.0, &p, &q()).unwrap(),
            sweep: sweep_poles(&uniform_grid(5.0, 40.0, 0.05).unwrap(), &p, &q()).unwrap(),
            zeros: SymmetrySector::BOTH.iter().map(|&s| (s, zero_decay_in_range(s, 5.0, 40.0, &p, &q()).unwrap())).collect(),
        }
    })
}

#[test]
fn super_radiance_between_zero_decay_distances() {
    let d = sweep_data();
    let mut missing = Vec::new();
    for (s, zeros) in &d.zeros {
        for w in zeros.windows(2) {
            let peak = d
                .sweep
                .records
                .iter()
                .filter(|r| r.x21 > w[0].x21_zero && r.x21 < w[1].x21_zero)
                .filter_map(|r| r.pole(*s).map(|z| z.gamma))
                .fold(0.0, f64::max);
            if peak <= d.z1.gamma {
                missing.push(format!("{s} ({:.2}, {:.2}) max γ/γ₁ = {:.3}", w[0].x21_zero, w[1].x21_zero, peak / d.z1.gamma));
            }
        }
    }
    assert!(missing.is_empty(), "no super-radiant point in {missing:?}");
}

#[test]
fn frequency_oscillates_about_one_atom_value() {
    let d = sweep_data();
    for (s, zeros) in &d.zeros {
        let (a, b) = (zeros[0].x21_zero, zeros.last().unwrap().x21_zero);
        let vals: Vec<f64> = d
            .sweep
            .records
            .iter()
            .filter(|r| r.x21 >= a && r.x21 <= b)
            .filter_map(|r| r.pole(*s).map(|z| z.omega_tilde))
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((mean - d.z1.omega_tilde).abs() < 1e-2, "{s}: mean {mean}");
    }
}

#[test]
fn angular_roots_reproduce_zero_decay_distances() {
    for (s, zeros) in &sweep_data().zeros {
        for z in zeros {
            let u = z.x21_zero * z.omega_o;
            let roots = subradiance_roots(Dimension::One, *s, u - 1.0, u + 1.0).unwrap();
            assert!(roots.iter().any(|r| (r / z.omega_o - z.x21_zero).abs() < 1e-12 * z.x21_zero), "{s}{}", z.n);
        }
    }
}

#[test]
fn derivative_stencils_agree() {
    let p = ModelParams::default().with_separation(12.7);
    let f = |z: C64| eta_plus(z, Channel::Antisymmetric, 12.7, &p, &q());
    let z = C64::new(1.98, -0.01);
    let a = greens::derivative(&f, z, greens::derivative_step(12.7)).unwrap();
    let b = greens::derivative(&f, z, 0.5 * greens::derivative_step(12.7)).unwrap();
    assert!((a - b).norm() < 1e-8 * a.norm());
}
