use proptest::prelude::*;
use xoq_core::effective::{
    compare_with_oracle, effective_couplings, energy_differences, estimate_gate_time,
    hubbard_oracle_spectrum, hubbard_sz_blocks, DeviceParameters, HubbardParameters,
};
use xoq_core::{
    CompositionMode, Configuration, Layout, PulseSequence, PulseStep, SpinLabel, SpinPair,
};

fn pp(s: &str) -> SpinPair {
    s.parse().unwrap()
}

fn label(s: &str) -> SpinLabel {
    s.parse().unwrap()
}

/// Strong on-site repulsion, equal orbital energies, weak everything else.
fn symmetric_regime(layout: Layout, s: f64) -> HubbardParameters<f64> {
    let mut p = HubbardParameters::default();
    for k in SpinLabel::ALL {
        p.eps.insert(k, 0.0);
        p.u_site.insert(k, 100.0);
    }
    for q in ["a", "b"] {
        let pr = |x: &str, y: &str| pp(&format!("{q}{x}{q}{y}"));
        for (i, j) in [("1", "2"), ("1", "3"), ("2", "3")] {
            p.u_pair.insert(pr(i, j), 5.0);
        }
        p.t.insert(pr("1", "3"), 1.0 * s);
        p.t.insert(pr("2", "3"), 0.8 * s);
        p.je.insert(pr("1", "3"), 0.002);
        p.je.insert(pr("2", "3"), 0.003);
        p.je.insert(pr("1", "2"), 0.004);
        p.jt.insert(pr("1", "3"), 0.1 * s);
        p.jt.insert(pr("2", "3"), 0.05 * s);
        p.jp.insert(pr("1", "3"), 0.05);
        p.jp.insert(pr("1", "2"), 0.05);
        p.jp.insert(pr("2", "3"), 0.03);
    }
    match layout {
        Layout::A => {
            p.t.insert(pp("a3b1"), 0.9 * s);
            p.t.insert(pp("a3b2"), 0.7 * s);
            p.je.insert(pp("a3b1"), 0.001);
            p.jt.insert(pp("a3b1"), 0.05 * s);
            p.jp.insert(pp("a3b2"), 0.02);
        }
        Layout::B => {
            p.je.insert(pp("a1b1"), 0.01);
            p.je.insert(pp("a2b2"), 0.02);
            p.jp.insert(pp("a1b1"), 0.02);
        }
    }
    p
}

#[test]
fn oracle_error_shrinks_when_hopping_is_halved() {
    for layout in [Layout::A, Layout::B] {
        let errors: Vec<f64> = [1.0, 0.5, 0.25]
            .iter()
            .map(|&s| {
                compare_with_oracle(&symmetric_regime(layout, s), layout, 14)
                    .unwrap()
                    .relative_error
            })
            .collect();
        assert!(
            errors[1] < errors[0] && errors[2] < errors[1],
            "{layout}: {errors:?}"
        );
    }
}

#[test]
fn zero_hopping_spectrum_is_classical() {
    let mut p = symmetric_regime(Layout::A, 0.0);
    p.je.clear();
    p.jp.clear();
    p.eps.insert(label("a3"), 3.0);
    let levels = hubbard_oracle_spectrum(&p, Layout::A, 64).unwrap();
    let ground = p.occupation_energy(Layout::A, [1; 6]);
    // all 64 spin configurations of the singly occupied pattern are degenerate
    assert!(levels.iter().all(|e| (e - ground).abs() < 1e-12));
    let more = hubbard_oracle_spectrum(&p, Layout::A, 65).unwrap();
    let next = [
        [0, 1, 2, 1, 1, 1],
        [1, 0, 2, 1, 1, 1],
        [2, 0, 1, 1, 1, 1],
        [1, 1, 2, 0, 1, 1],
    ]
    .iter()
    .map(|o| p.occupation_energy(Layout::A, *o))
    .chain(std::iter::once(f64::INFINITY))
    .fold(f64::INFINITY, f64::min);
    assert!(more[64] <= next + 1e-12);
}

#[test]
fn distinct_levels_fill_from_the_bottom() {
    let mut p = HubbardParameters::<f64>::default();
    for (k, e) in SpinLabel::ALL.iter().zip([0.0, 1.0, 2.0, 3.0, 4.0, 5.0]) {
        p.eps.insert(*k, e);
        p.u_site.insert(*k, 1e-3);
    }
    let levels = hubbard_oracle_spectrum(&p, Layout::B, 2).unwrap();
    // two electrons in each of the three lowest orbitals
    assert!((levels[0] - (2.0 * (0.0 + 1.0 + 2.0) + 3e-3)).abs() < 1e-12);
}

#[test]
fn oracle_is_invariant_under_global_spin_flip() {
    for layout in [Layout::A, Layout::B] {
        let blocks = hubbard_sz_blocks(&symmetric_regime(layout, 1.0), layout).unwrap();
        let sizes: Vec<usize> = blocks.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 36, 225, 400, 225, 36, 1]);
        for n_up in 0..=6 {
            let (x, y) = (&blocks[n_up], &blocks[6 - n_up]);
            assert!(x.iter().zip(y).all(|(a, b)| (a - b).abs() < 1e-10));
        }
    }
}

#[test]
fn closed_form_j12_is_twice_the_oracle_splitting() {
    let mut p = HubbardParameters::<f64>::default();
    for k in SpinLabel::ALL {
        p.u_site.insert(k, 100.0);
    }
    p.jt.insert(pp("a1a2"), 1.0);
    let j = effective_couplings(&p, Layout::A).unwrap().get(pp("a1a2"));
    assert!((j - 0.08).abs() < 1e-15);
    let levels = hubbard_oracle_spectrum(&p, Layout::A, 64).unwrap();
    let gaps: Vec<f64> = levels.iter().map(|e| e - levels[0]).collect();
    let splitting = gaps.iter().copied().fold(0.0, f64::max);
    assert!((splitting - 0.04).abs() < 1e-3, "{splitting}");
}

#[test]
fn gate_time_fixture() {
    let dev = DeviceParameters::new(10.0, 100.0);
    let seq = PulseSequence::with_steps(Configuration::A, vec![PulseStep::Wait(10.0)]);
    let est = estimate_gate_time(&dev, &seq, CompositionMode::Simultaneous).unwrap();
    assert!((est.time_ns - 41.36).abs() < 0.01);
    let empty = PulseSequence::<f64>::new(Configuration::A);
    assert_eq!(
        estimate_gate_time(&dev, &empty, CompositionMode::Simultaneous)
            .unwrap()
            .time_ns,
        0.0
    );
}

fn random_params(layout: Layout, vals: &[f64]) -> HubbardParameters<f64> {
    let mut p = HubbardParameters::default();
    let mut it = vals.iter().copied();
    for k in SpinLabel::ALL {
        p.eps.insert(k, it.next().unwrap());
        p.u_site.insert(k, 10.0 + it.next().unwrap().abs());
    }
    let intra = ["a1a3", "a2a3", "a1a2", "b1b3", "b2b3", "b1b2"];
    let inter = match layout {
        Layout::A => ["a3b1", "a3b2"],
        Layout::B => ["a1b1", "a2b2"],
    };
    for name in intra.iter().chain(inter.iter()) {
        let pr = pp(name);
        p.u_pair.insert(pr, it.next().unwrap());
        p.je.insert(pr, it.next().unwrap());
        p.jt.insert(pr, it.next().unwrap());
        if name.ends_with('3') || inter.contains(name) {
            p.t.insert(pr, it.next().unwrap());
        }
    }
    p
}

proptest! {
    #[test]
    fn strong_on_site_repulsion_keeps_gaps_positive(
        vals in proptest::collection::vec(-1.0f64..1.0, 64),
        is_a in any::<bool>(),
    ) {
        let layout = if is_a { Layout::A } else { Layout::B };
        let mut p = random_params(layout, &vals);
        // on-site energies at least 10x every other magnitude
        for v in p.u_site.values_mut() { *v = 10.0 * (1.0 + *v); }
        for v in p.eps.values_mut() { *v *= 0.1; }
        for v in p.u_pair.values_mut() { *v = v.abs() * 0.1; }
        prop_assert!(energy_differences(&p, layout).is_ok());
    }

    #[test]
    fn uniform_energy_shift_leaves_gaps_unchanged(
        vals in proptest::collection::vec(-1.0f64..1.0, 64),
        shift in -50.0f64..50.0,
    ) {
        let p = random_params(Layout::A, &vals);
        let mut q = p.clone();
        for v in q.eps.values_mut() { *v += shift; }
        let a = energy_differences(&p, Layout::A).unwrap();
        let b = energy_differences(&q, Layout::A).unwrap();
        for (k, v) in &a.0 {
            prop_assert!((v - b.0[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn coupling_depends_on_hopping_difference_squared(
        t in -1.0f64..1.0, jt in -1.0f64..1.0, je in -0.1f64..0.1,
    ) {
        let base = random_params(Layout::A, &[0.0; 64]);
        let mut p = base.clone();
        p.t.insert(pp("a1a3"), t);
        p.jt.insert(pp("a1a3"), jt);
        p.je.insert(pp("a1a3"), je);
        let mut q = base;
        q.t.insert(pp("a1a3"), jt);
        q.jt.insert(pp("a1a3"), t);
        q.je.insert(pp("a1a3"), je);
        let a = effective_couplings(&p, Layout::A).unwrap().get(pp("a1a3"));
        let b = effective_couplings(&q, Layout::A).unwrap().get(pp("a1a3"));
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn gate_time_is_linear_in_duration_and_inverse_in_jmax(
        t in 0.0f64..50.0, tr in 1.0f64..50.0, de in 10.0f64..500.0,
    ) {
        let dev = DeviceParameters::new(tr, de);
        let seq = PulseSequence::with_steps(Configuration::A, vec![PulseStep::Wait(t)]);
        let double = PulseSequence::with_steps(Configuration::A, vec![PulseStep::Wait(t), PulseStep::Wait(t)]);
        let one = estimate_gate_time(&dev, &seq, CompositionMode::Simultaneous).unwrap();
        let two = estimate_gate_time(&dev, &double, CompositionMode::Simultaneous).unwrap();
        prop_assert!((two.time_ns - 2.0 * one.time_ns).abs() <= 1e-9 * (1.0 + one.time_ns));
        let strong = DeviceParameters::new(tr * 2f64.sqrt(), de);
        let half = estimate_gate_time(&strong, &seq, CompositionMode::Simultaneous).unwrap();
        prop_assert!((half.time_ns - 0.5 * one.time_ns).abs() <= 1e-9 * (1.0 + one.time_ns));
    }
}
