use std::f64::consts::{PI, TAU};

use classical_dj::complexbit::{
    apply_blackbox, params_from_truth_table, run_dequantised, BlackBoxParams, ComplexBit,
    TruthTable, Verdict,
};
use classical_dj::quantumref::run_quantum_dj;
use classical_dj::signal::{spectrum, synthesize_fid, Acquisition, Fid, Quadrant};
use classical_dj::spinsim::{
    compile_blackbox, embed, precess, readout, rotate, wrap_deg, CompileOptions, Magnetisation,
    Mode, SpinSpecies,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn magnetisation() -> impl Strategy<Value = Magnetisation> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Magnetisation::new(x, y, z))
}

fn in_plane() -> impl Strategy<Value = Magnetisation> {
    (-180.0..180.0f64, 0.1..3.0f64).prop_map(|(a, r)| Magnetisation::in_plane(a, r))
}

fn complex_bit() -> impl Strategy<Value = ComplexBit> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| ComplexBit::new(a, b))
}

fn params() -> impl Strategy<Value = BlackBoxParams> {
    prop_oneof![
        any::<(bool, bool)>().prop_map(|(a, b)| BlackBoxParams::One { a, b }),
        any::<(bool, bool, bool)>().prop_map(|(a, b, c)| BlackBoxParams::Two { a, b, c }),
    ]
}

fn close(a: &Magnetisation, b: &Magnetisation, tol: f64) -> bool {
    a.max_abs_diff(b) <= tol
}

/// Direct evaluation of the unitary DFT at an arbitrary frequency.
fn naive_dft(fid: &Fid, freq_hz: f64) -> Complex64 {
    let n = fid.samples.len() as f64;
    fid.samples
        .iter()
        .enumerate()
        .map(|(k, x)| x * Complex64::from_polar(1.0, -TAU * freq_hz * k as f64 * fid.dwell_s))
        .sum::<Complex64>()
        / n.sqrt()
}

fn random_fid() -> impl Strategy<Value = Fid> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 8..96).prop_map(|v| Fid {
        samples: v
            .into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect(),
        dwell_s: 1e-4,
    })
}

proptest! {
    #[test]
    fn rotation_preserves_norm(m in magnetisation(), phase in -360.0..360.0f64, flip in 0.0..TAU) {
        let r = rotate(&m, phase, flip);
        prop_assert!((r.norm() - m.norm()).abs() <= 1e-12 * (1.0 + m.norm()));
    }

    #[test]
    fn rotation_leaves_its_axis_fixed(phase in -180.0..180.0f64, flip in 0.0..TAU, k in 0.1..2.0f64) {
        let axis = Magnetisation::in_plane(phase, k);
        prop_assert!(close(&rotate(&axis, phase, flip), &axis, 1e-12));
    }

    #[test]
    fn two_pi_pulses_rotate_by_twice_the_axis_difference(
        m in in_plane(), p1 in -180.0..180.0f64, p2 in -180.0..180.0f64,
    ) {
        // reflections about two in-plane axes compose to a z-rotation
        let twice = rotate(&rotate(&m, p1, PI), p2, PI);
        let expected = Magnetisation::in_plane(m.phase_deg() + 2.0 * (p2 - p1), m.norm());
        prop_assert!(close(&twice, &expected, 1e-9));
    }

    #[test]
    fn pi_pulse_reflects_in_plane_angle(m in in_plane(), phase in -180.0..180.0f64) {
        let r = rotate(&m, phase, PI);
        let expected = wrap_deg(2.0 * phase - m.phase_deg());
        prop_assert!(wrap_deg(r.phase_deg() - expected).abs() < 1e-7);
    }

    #[test]
    fn precession_is_a_z_rotation(m in magnetisation(), off in -3000.0..3000.0f64, t in 0.0..0.01f64) {
        let p = precess(&m, off, t);
        prop_assert!((p.norm() - m.norm()).abs() < 1e-12 * (1.0 + m.norm()));
        prop_assert!((p.mz - m.mz).abs() < 1e-15);
        if m.transverse() > 1e-6 {
            let turned = wrap_deg(p.phase_deg() - m.phase_deg());
            prop_assert!(wrap_deg(turned - 360.0 * off * t).abs() < 1e-6);
        }
    }

    #[test]
    fn blackbox_is_an_involution(p in params(), z1 in complex_bit(), z2 in complex_bit()) {
        let inputs: Vec<ComplexBit> = [z1, z2][..p.arity()].to_vec();
        let twice = apply_blackbox(&p, &apply_blackbox(&p, &inputs).unwrap()).unwrap();
        for (t, z) in twice.iter().zip(&inputs) {
            prop_assert!(t.approx_eq(z, 1e-12));
        }
    }

    #[test]
    fn blackbox_is_linear(
        p in params(), z in complex_bit(), w in complex_bit(),
        alpha in -2.0..2.0f64, beta in -2.0..2.0f64,
    ) {
        let n = p.arity();
        let zs = vec![z; n];
        let ws = vec![w; n];
        let mixed: Vec<ComplexBit> = zs.iter().zip(&ws).map(|(&a, &b)| alpha * a + beta * b).collect();
        let lhs = apply_blackbox(&p, &mixed).unwrap();
        let cz = apply_blackbox(&p, &zs).unwrap();
        let cw = apply_blackbox(&p, &ws).unwrap();
        for i in 0..n {
            prop_assert!(lhs[i].approx_eq(&(alpha * cz[i] + beta * cw[i]), 1e-12));
        }
    }

    #[test]
    fn embed_readout_round_trip(z in complex_bit()) {
        prop_assume!(!z.is_zero());
        let m = embed(z).unwrap();
        prop_assert!(m.mz == 0.0);
        prop_assert!((m.norm() - (z.a * z.a + z.b * z.b).sqrt()).abs() < 1e-12);
        prop_assert!(readout(&m).unwrap().approx_eq(&z, 1e-12));
    }

    #[test]
    fn embedding_is_linear(z in complex_bit(), w in complex_bit(), alpha in -2.0..2.0f64) {
        let s = alpha * z + w;
        prop_assume!(!z.is_zero() && !w.is_zero() && !s.is_zero());
        let lhs = embed(s).unwrap();
        let rhs = embed(z).unwrap().scale(alpha).add(&embed(w).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn dft_matches_direct_evaluation(fid in random_fid()) {
        let sp = spectrum(&fid);
        prop_assert_eq!(sp.len(), fid.samples.len());
        for (bin, &f) in sp.bins.iter().zip(&sp.freq_axis) {
            prop_assert!((bin - naive_dft(&fid, f)).norm() < 1e-9);
        }
        prop_assert!(sp.freq_axis.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn dft_is_linear(a in random_fid(), alpha in -2.0..2.0f64, beta in -2.0..2.0f64, seed in any::<u64>()) {
        let b = Fid {
            samples: a.samples.iter().enumerate()
                .map(|(k, _)| Complex64::from_polar(1.0, (seed.wrapping_mul(k as u64 + 1) % 1000) as f64))
                .collect(),
            dwell_s: a.dwell_s,
        };
        let mix = Fid {
            samples: a.samples.iter().zip(&b.samples).map(|(x, y)| alpha * x + beta * y).collect(),
            dwell_s: a.dwell_s,
        };
        let (sa, sb, sm) = (spectrum(&a), spectrum(&b), spectrum(&mix));
        let scale = sm.energy().sqrt() + 1.0;
        for i in 0..sm.len() {
            prop_assert!((sm.bins[i] - (alpha * sa.bins[i] + beta * sb.bins[i])).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn dft_preserves_energy(fid in random_fid()) {
        let e = fid.energy();
        prop_assert!((spectrum(&fid).energy() - e).abs() <= 1e-9 * e.max(1e-300));
    }

    #[test]
    fn quadrant_windows(axis in 0usize..4, delta in -9.9..9.9f64) {
        let centre = [0.0, 180.0, 90.0, -90.0][axis];
        let q = Quadrant::from_phase(wrap_deg(centre + delta), 10.0).unwrap();
        let expected = [(1.0, 1.0), (-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0)][axis];
        let z = q.to_complex_bit();
        prop_assert_eq!((z.a, z.b), expected);
        prop_assert!(Quadrant::from_phase(centre + 45.0, 10.0).is_none());
    }

    #[test]
    fn realistic_equals_ideal_for_any_offset(
        abc in any::<(bool, bool, bool)>(),
        offset in prop_oneof![-4000.0..-50.0f64, 50.0..4000.0f64],
    ) {
        let (a, b, c) = abc;
        let p = BlackBoxParams::Two { a, b, c };
        let opts = CompileOptions {
            species: vec![
                SpinSpecies::new("A", 0.0, 0.5).unwrap(),
                SpinSpecies::new("B", offset, 0.5).unwrap(),
            ],
            ..CompileOptions::default()
        };
        let sim = classical_dj::spinsim::Simulator::new(opts.species.clone());
        let ideal = sim.run(&sim.equilibrium(), &compile_blackbox(&p, Mode::Ideal, &opts).unwrap()).unwrap();
        let real = sim.run(&sim.equilibrium(), &compile_blackbox(&p, Mode::Realistic, &opts).unwrap()).unwrap();
        for (i, r) in ideal.iter().zip(&real) {
            prop_assert!(close(i, r, 1e-9), "{} vs {}", i, r);
        }
    }

    #[test]
    fn fid_peak_phase_tracks_vector_angle(angle in -180.0..180.0f64) {
        let species = vec![SpinSpecies::new("A", 0.0, 0.5).unwrap()];
        let acq = Acquisition::default();
        let fid = synthesize_fid(&species, &[Magnetisation::in_plane(angle, 1.0)], &acq).unwrap();
        let sp = spectrum(&fid);
        let k = sp.nearest_bin(0.0);
        prop_assert!(wrap_deg(sp.bins[k].arg().to_degrees() - angle).abs() < 0.5);
    }

    #[test]
    fn every_promise_function_round_trips(n in 1usize..=2, idx in 0usize..8) {
        let fs = TruthTable::promise_functions(n);
        let f = &fs[idx % fs.len()];
        let r = run_dequantised(&params_from_truth_table(f).unwrap()).unwrap();
        prop_assert_eq!(&r.function, f);
    }

    #[test]
    fn quantum_verdict_is_deterministic(n in 1usize..=6, seed in any::<u64>(), constant in any::<bool>()) {
        let size = 1usize << n;
        let values: Vec<bool> = if constant {
            vec![seed % 2 == 1; size]
        } else {
            // balanced: a seeded permutation of half ones
            let mut v: Vec<bool> = (0..size).map(|i| i < size / 2).collect();
            let mut s = seed | 1;
            for i in (1..size).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                v.swap(i, (s % (i as u64 + 1)) as usize);
            }
            v
        };
        let f = TruthTable::new(n, values).unwrap();
        let q = run_quantum_dj(&f).unwrap();
        let expected = if constant { Verdict::Constant } else { Verdict::Balanced };
        prop_assert_eq!(q.verdict, expected);
        let zero_mass = if constant { 1.0 } else { 0.0 };
        prop_assert!((q.distribution[0] - zero_mass).abs() < 1e-12);
        prop_assert!((q.distribution.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
