use num_complex::Complex64;
use proptest::prelude::*;

use geomopt_core::hamiltonian::swap_permutation;
use geomopt_core::pite::{run_classical_pite, sample_histogram, InitialGuess};
use geomopt_core::potentials::{ExternalField, InteractionModel, PairPotential};
use geomopt_core::propagator::{ite_step, rte_step, PiteParams, TauSchedule};
use geomopt_core::registers::{ActiveCoordinate, Nucleus};
use geomopt_core::resources::{schedule_ee, schedule_en, GateKind};
use geomopt_core::{CompositeState, GeometryGrid, GridHamiltonian, RegisterLayout};

fn soft(s: f64) -> PairPotential {
    PairPotential::SoftCoulomb { softness_sq: s }
}

fn lih_grid() -> GeometryGrid {
    GeometryGrid::new(
        vec![
            Nucleus::new("H", 1.0, [6.0, 0.0, 0.0]),
            Nucleus::new("Li", 1.0, [6.55, 0.0, 0.0]),
        ],
        vec![ActiveCoordinate {
            nucleus: 1,
            axis: 0,
            qubits: 3,
            max_displacement: 4.0,
        }],
    )
    .unwrap()
}

fn small_hamiltonian() -> GridHamiltonian {
    let layout = RegisterLayout::new(2, 1, 3, 8.0).unwrap();
    let grid = GeometryGrid::new(
        vec![
            Nucleus::new("A", 1.0, [3.5, 0.0, 0.0]),
            Nucleus::new("B", 1.0, [4.5, 0.0, 0.0]),
        ],
        vec![ActiveCoordinate {
            nucleus: 1,
            axis: 0,
            qubits: 1,
            max_displacement: 1.0,
        }],
    )
    .unwrap();
    let model = InteractionModel {
        electron_electron: soft(0.6),
        electron_nucleus: vec![soft(0.7), soft(2.25)],
        nucleus_nucleus: vec![soft(2.35)],
        external: ExternalField::uniform([0.05, 0.0, 0.0], [4.0, 0.0, 0.0]),
    };
    GridHamiltonian::new(&layout, &grid, &model).unwrap()
}

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lih_register_round_trip(k in 0usize..4096, j in 0usize..8) {
        let layout = RegisterLayout::new(2, 1, 6, 15.0).unwrap();
        let grid = lih_grid();
        let digits = layout.electron_grid_indices(k).unwrap();
        prop_assert_eq!(layout.electron_flat_index(&digits).unwrap(), k);
        let m = grid.multi_index(j).unwrap();
        prop_assert_eq!(grid.flat_index(&m).unwrap(), j);
        let pos = layout.electron_positions(k).unwrap();
        for (d, p) in digits.iter().zip(&pos) {
            prop_assert!((p[0] - layout.coordinate(*d)).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rte_preserves_norm(amps in amplitudes(128), dt in 0.001f64..0.5) {
        let h = small_hamiltonian();
        let mut st = CompositeState::new(amps, 64, 2).unwrap();
        for _ in 0..5 {
            rte_step(&h, &mut st, dt).unwrap();
        }
        prop_assert!((st.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ite_weights_sum_to_one_and_keep_exchange_sector(amps in amplitudes(64), dtau in 0.01f64..0.4, sym in any::<bool>()) {
        let h = small_hamiltonian();
        let perm = swap_permutation(h.layout()).unwrap();
        let sign = if sym { 1.0 } else { -1.0 };
        let projected: Vec<Complex64> = (0..128)
            .map(|i| {
                let (j, k) = (i / 64, i % 64);
                0.5 * (amps[k] + sign * amps[perm[k]]) * (1.0 + j as f64)
            })
            .collect();
        prop_assume!(projected.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-6);
        let mut st = CompositeState::new(projected, 64, 2).unwrap();
        let shift = h.potential().min();
        for _ in 0..4 {
            let out = ite_step(&h, &mut st, dtau, 0.9, shift).unwrap();
            prop_assert!(out.success_probability > 0.0 && out.success_probability <= 1.0);
        }
        prop_assert!((st.weights().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let leak: f64 = (0..2)
            .map(|j| {
                let b = st.block(j);
                (0..64).map(|i| (0.5 * (b[i] - sign * b[perm[i]])).norm_sqr()).sum::<f64>()
            })
            .sum();
        prop_assert!(leak.sqrt() < 1e-10);
    }
}

proptest! {
    #[test]
    fn classical_weights_are_distributions(
        energies in prop::collection::vec(-50.0f64..50.0, 2..16),
        dtau in 0.001f64..0.2,
        steps in 1usize..25,
    ) {
        let n = energies.len();
        let r = run_classical_pite(
            &energies,
            &InitialGuess::uniform(n),
            &TauSchedule::constant(dtau),
            steps,
            &PiteParams::default(),
            0,
            0,
        )
        .unwrap();
        for row in &r.weights {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(row.iter().all(|w| *w >= 0.0));
        }
        let lowest = (0..n).fold(0, |b, j| if energies[j] < energies[b] { j } else { b });
        prop_assert!(r.final_weights()[lowest] >= 1.0 / n as f64 - 1e-12);
    }

    #[test]
    fn schedule_stays_in_range(min in 0.01f64..1.0, extra in 0.0f64..1.0, kappa in 0.5f64..20.0, k in 0usize..200) {
        let s = TauSchedule::new(min, min + extra, kappa).unwrap();
        let (a, b) = (s.tau_at(k), s.tau_at(k + 1));
        prop_assert!(a >= min - 1e-15 && a <= min + extra + 1e-15);
        prop_assert!(b >= a);
    }

    #[test]
    fn histogram_counts_every_shot(w in prop::collection::vec(0.0f64..1.0, 1..32), shots in 1u64..5000, seed in any::<u64>()) {
        prop_assume!(w.iter().sum::<f64>() > 1e-6);
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let h = sample_histogram(&w, shots, seed).unwrap();
        prop_assert_eq!(h.counts.iter().sum::<u64>(), shots);
        prop_assert_eq!(&h, &sample_histogram(&w, shots, seed).unwrap());
    }

    #[test]
    fn pair_schedules_cover_every_pair_once(n_e in 2usize..=8, regs in 1usize..=8, n_nucl in 1usize..=8) {
        let regs = regs.min(n_e);
        let ee = schedule_ee(n_e, regs).unwrap();
        prop_assert!(ee.is_register_disjoint());
        prop_assert_eq!(ee.count_of(GateKind::Ee), n_e * (n_e - 1) / 2);
        prop_assert!(ee.layers.iter().all(|l| l.len() <= regs));
        if n_nucl <= n_e {
            let en = schedule_en(n_e, n_nucl).unwrap();
            prop_assert!(en.is_register_disjoint());
            let mut pairs: Vec<_> = en.gates().filter_map(|g| g.particles()).collect();
            pairs.sort_unstable();
            pairs.dedup();
            prop_assert_eq!(pairs.len(), n_e * n_nucl);
        } else {
            prop_assert!(schedule_en(n_e, n_nucl).is_err());
        }
    }
}
