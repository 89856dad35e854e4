//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! and then asserts; run with `--nocapture` to see the lines.

use std::f64::consts::PI;
use std::sync::OnceLock;

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use geomopt_core::hamiltonian::{swap_permutation, DiagonalOperator, DEFAULT_DENSE_CAP};
use geomopt_core::pite::{
    argmax_geometry, ilj_candidate_energies, prepare_input, run_classical_pite, run_pite, GeometrySpectra,
    InitialGuess, PiteConfig, PiteReport, ReferenceSpec, SpectralWeightOracle,
};
use geomopt_core::potentials::{
    ilj_scan_xz, lih, ExternalField, IljParams, InteractionModel, MoleculeGeometry, PairPotential,
};
use geomopt_core::propagator::{evolve_ite, ite_step, rte_step, PiteParams, TauSchedule};
use geomopt_core::registers::{ActiveCoordinate, Nucleus};
use geomopt_core::resources::{
    depth_report, schedule_ee, schedule_ee_redundant, schedule_en, schedule_nn, CostModel, GateKind,
    GateSchedule,
};
use geomopt_core::vite::{
    ancilla_probabilities, apply_ansatz, derivative_circuit_state, gradient_states, m_matrix, run_vite, v_vector,
    PauliAxis, ViteAnsatz, ViteConfig,
};
use geomopt_core::{CompositeState, GeometryGrid, GridHamiltonian, RegisterLayout};

type C64 = Complex64;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn soft(s: f64) -> PairPotential {
    PairPotential::SoftCoulomb { softness_sq: s }
}

fn lih_model() -> InteractionModel {
    InteractionModel {
        electron_electron: soft(lih::SOFTNESS_EE),
        electron_nucleus: vec![soft(lih::SOFTNESS_EH), soft(lih::SOFTNESS_ELI)],
        nucleus_nucleus: vec![soft(lih::SOFTNESS_LIH)],
        external: ExternalField::zero(),
    }
}

fn lih_hamiltonian() -> &'static GridHamiltonian {
    static H: OnceLock<GridHamiltonian> = OnceLock::new();
    H.get_or_init(|| {
        let layout = RegisterLayout::new(2, 1, 6, 15.0).unwrap();
        let grid = GeometryGrid::new(
            vec![
                Nucleus::new("H", lih::CHARGE_H, [6.0, 0.0, 0.0]),
                Nucleus::new("Li", lih::CHARGE_LI, [6.55, 0.0, 0.0]),
            ],
            vec![ActiveCoordinate {
                nucleus: 1,
                axis: 0,
                qubits: 3,
                max_displacement: 4.0,
            }],
        )
        .unwrap();
        GridHamiltonian::new(&layout, &grid, &lih_model()).unwrap()
    })
}

fn lih_symmetric_spectra() -> &'static GeometrySpectra {
    static S: OnceLock<GeometrySpectra> = OnceLock::new();
    S.get_or_init(|| {
        GeometrySpectra::compute(lih_hamiltonian(), &lih_reference(true), DEFAULT_DENSE_CAP).unwrap()
    })
}

fn lih_reference(symmetric: bool) -> ReferenceSpec {
    if symmetric {
        ReferenceSpec::GaussianSymmetric { width: 3.0 }
    } else {
        ReferenceSpec::GaussianAntisymmetric { width: 3.0 }
    }
}

fn lih_config(symmetric: bool) -> PiteConfig {
    PiteConfig {
        guess: InitialGuess::uniform(8),
        reference: lih_reference(symmetric),
        n_steps: 19,
        schedule: TauSchedule::new(0.2, 0.3, 8.0).unwrap(),
        params: PiteParams::default(),
        shots: 10_000,
        seed: 0,
        ground_state_weights: false,
    }
}

fn lih_symmetric_run() -> &'static PiteReport {
    static R: OnceLock<PiteReport> = OnceLock::new();
    R.get_or_init(|| run_pite(lih_hamiltonian(), &lih_config(true), None).unwrap())
}

#[test]
fn c01_lih_equilibrium_geometry() {
    let h = lih_hamiltonian();
    let ground = lih_symmetric_spectra().ground_energies();
    let j = argmax_geometry(&ground.iter().map(|e| -e).collect::<Vec<_>>());
    let p = h.grid().positions(j).unwrap();
    let bond = p[1][0] - p[0][0];
    report(
        1,
        "LiH equilibrium geometry",
        j == 2 && (bond - 1.55).abs() < 1e-12,
        format!("argmin J={j}, bond length {bond:.4}, E0 = {:.6}", ground[j]),
    );
}

#[test]
fn c02_lih_pite_symmetric() {
    let r = lih_symmetric_run();
    let (a9, a19) = (argmax_geometry(&r.weights[9]), argmax_geometry(&r.weights[19]));
    let (w9, w19) = (r.weights[9][2], r.weights[19][2]);
    report(
        2,
        "LiH PITE, symmetric reference",
        a9 == 2 && a19 == 2 && w19 > w9,
        format!("argmax step 9 = {a9}, step 19 = {a19}, w_2: {w9:.4} -> {w19:.4}"),
    );
}

#[test]
fn c03_lih_pite_antisymmetric() {
    let r = run_pite(lih_hamiltonian(), &lih_config(false), None).unwrap();
    let w = &r.weights[19];
    let interior_peak = (1..w.len() - 1).find(|&j| w[j] > w[j - 1] && w[j] > w[j + 1]);
    let a = argmax_geometry(w);
    report(
        3,
        "LiH PITE, antisymmetric reference",
        interior_peak.is_none() && (a == 0 || a == 7),
        format!("interior peak {interior_peak:?}, argmax {a}, w = {w:.3?}"),
    );
}

#[test]
fn c04_benzene_argon() {
    let molecule = MoleculeGeometry::benzene_default();
    let params = IljParams::benzene_argon();
    let min = ilj_scan_xz(&molecule, &params, (-1.0, 1.0), (3.0, 4.5), 0.0, 0.005).unwrap();
    let grid = GeometryGrid::new(
        vec![Nucleus::new("Ar", 0.0, [-2.4, 0.0, 3.2])],
        vec![
            ActiveCoordinate {
                nucleus: 0,
                axis: 0,
                qubits: 3,
                max_displacement: 6.4,
            },
            ActiveCoordinate {
                nucleus: 0,
                axis: 2,
                qubits: 3,
                max_displacement: 3.2,
            },
        ],
    )
    .unwrap();
    let energies = ilj_candidate_energies(&grid, 0, &molecule, &params).unwrap();
    let r = run_classical_pite(
        &energies,
        &InitialGuess::uniform(64),
        &TauSchedule::constant(0.004),
        19,
        &PiteParams::default(),
        0,
        0,
    )
    .unwrap();
    let at = |s: usize| grid.multi_index(argmax_geometry(&r.weights[s])).unwrap();
    let (m11, m19) = (at(11), at(19));
    let pass = min.x.abs() <= 0.01 && (min.z - 3.57).abs() <= 0.01 && m11 == [3, 1] && m19 == [3, 1];
    report(
        4,
        "benzene-Ar surface and classical PITE",
        pass,
        format!(
            "minimum at x={:.3}, z={:.3} ({:.3} meV); argmax step 11 = {m11:?}, step 19 = {m19:?}",
            min.x, min.z, min.energy
        ),
    );
}

fn h2plus_hamiltonian() -> GridHamiltonian {
    let layout = RegisterLayout::new(1, 1, 6, 15.0).unwrap();
    let grid = GeometryGrid::new(
        vec![
            Nucleus::new("H_alpha", 1.0, [5.0, 0.0, 0.0]),
            Nucleus::new("H_beta", 1.0, [5.5, 0.0, 0.0]),
        ],
        vec![ActiveCoordinate {
            nucleus: 1,
            axis: 0,
            qubits: 3,
            max_displacement: 7.5,
        }],
    )
    .unwrap();
    GridHamiltonian::new(&layout, &grid, &InteractionModel::common(soft(1.0), 2)).unwrap()
}

#[test]
fn c05_h2plus_vite() {
    let h = h2plus_hamiltonian();
    let mut lines = Vec::new();
    let mut successes = 0;
    for seed in [0u64, 1, 2] {
        let cfg = ViteConfig {
            seed,
            ..ViteConfig::default()
        };
        let r = run_vite(&h, &cfg, |_| {}).unwrap();
        let j = r.tracked_geometry;
        let last = r.records.last().unwrap();
        let w_final = last.weights[j];
        let gs_step = r.records.iter().find(|x| x.eigen_weights[0] > 0.99).map(|x| x.step);
        let worst_rise = r
            .records
            .windows(2)
            .filter(|p| p[0].step >= 100)
            .map(|p| p[1].energy_error - p[0].energy_error)
            .fold(f64::NEG_INFINITY, f64::max);
        let ok = j == 2 && w_final > 0.9 && gs_step.is_some_and(|s| s <= 1500) && worst_rise <= 1e-8;
        successes += ok as usize;
        lines.push(format!(
            "seed {seed}: w_{j}={w_final:.3}, gs>0.99 at {gs_step:?}, worst rise {worst_rise:.1e}"
        ));
    }
    report(5, "H2+ VITE", successes >= 2, format!("{successes}/3 seeds; {}", lines.join("; ")));
}

/// Dense two-electron Hamiltonian built from explicit plane-wave sums.
fn dense_two_electron(h: &GridHamiltonian) -> Mat<f64> {
    let layout = h.layout();
    let n = layout.points_per_direction();
    let l = layout.spacing() * n as f64;
    let t1 = Mat::<f64>::from_fn(n, n, |a, b| {
        (0..n)
            .map(|m| {
                let c = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
                let k = 2.0 * PI * c / l;
                0.5 * k * k * (k * (a as f64 - b as f64) * l / n as f64).cos()
            })
            .sum::<f64>()
            / n as f64
    });
    let v = h.potential().values();
    Mat::from_fn(n * n, n * n, |i, j| {
        let (a0, a1, b0, b1) = (i % n, i / n, j % n, j / n);
        let mut x = 0.0;
        if a1 == b1 {
            x += t1[(a0, b0)];
        }
        if a0 == b0 {
            x += t1[(a1, b1)];
        }
        if i == j {
            x += v[i];
        }
        x
    })
}

fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn c06_propagator_order() {
    let layout = RegisterLayout::new(2, 1, 4, 8.0).unwrap();
    let grid = GeometryGrid::fixed(vec![
        Nucleus::new("H", 1.0, [3.5, 0.0, 0.0]),
        Nucleus::new("Li", 1.0, [4.5, 0.0, 0.0]),
    ])
    .unwrap();
    let h = GridHamiltonian::new(&layout, &grid, &lih_model()).unwrap();
    let dense = dense_two_electron(&h);
    let eig = dense.self_adjoint_eigen(Side::Lower).unwrap();
    let (s, u) = (eig.S(), eig.U());
    let dim = dense.nrows();

    let x = |k: usize| layout.spacing() * k as f64;
    let psi0: Vec<C64> = (0..dim)
        .map(|i| {
            let (a, b) = (x(i % 16), x(i / 16));
            let g = (-(a - 3.0).powi(2) / 2.0 - (b - 5.0).powi(2) / 1.5).exp();
            C64::new(g, 0.3 * g * (a - b).sin())
        })
        .collect();
    let psi0 = CompositeState::new(psi0, dim, 1).unwrap();

    let evolve_exact = |f: &dyn Fn(f64) -> C64| -> Vec<C64> {
        let c: Vec<C64> = (0..dim)
            .map(|n| (0..dim).map(|i| u[(i, n)] * psi0.amplitudes()[i]).sum::<C64>() * f(s[n]))
            .collect();
        let out: Vec<C64> = (0..dim).map(|i| (0..dim).map(|n| u[(i, n)] * c[n]).sum()).collect();
        let norm = out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        out.into_iter().map(|a| a / norm).collect()
    };
    let ite_exact = evolve_exact(&|e| C64::new((-e).exp(), 0.0));
    let rte_exact = evolve_exact(&|e| C64::from_polar(1.0, -e));

    let ite_error = |dt: f64| {
        let mut st = psi0.clone();
        for _ in 0..(1.0 / dt).round() as usize {
            ite_step(&h, &mut st, dt, 1.0, 0.0).unwrap();
        }
        distance(st.amplitudes(), &ite_exact)
    };
    let rte_error = |dt: f64| {
        let mut st = psi0.clone();
        for _ in 0..(1.0 / dt).round() as usize {
            rte_step(&h, &mut st, dt).unwrap();
        }
        distance(st.amplitudes(), &rte_exact)
    };
    let (i1, i2) = (ite_error(0.01), ite_error(0.005));
    let (r1, r2) = (rte_error(0.01), rte_error(0.005));
    let (ri, rr) = (i1 / i2, r1 / r2);
    report(
        6,
        "split-operator order",
        (ri - 2.0).abs() <= 0.2 && (rr - 2.0).abs() <= 0.2,
        format!("ITE {i1:.2e}/{i2:.2e} = {ri:.3}, RTE {r1:.2e}/{r2:.2e} = {rr:.3}"),
    );
}

#[test]
fn c07_spectral_oracle() {
    let r = lih_symmetric_run();
    let oracle = SpectralWeightOracle::new(&InitialGuess::uniform(8), lih_symmetric_spectra()).unwrap();
    let tau = r.accumulated_tau(19);
    let exact = oracle.weights_at(tau);
    let dev = r.weights[19]
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report(
        7,
        "Trotterized weights vs spectral oracle",
        dev <= 1e-3,
        format!("max deviation {dev:.2e} at tau = {tau:.4}"),
    );
}

#[test]
fn c08_classical_two_candidates() {
    let energies = [0.0, 0.7];
    let schedule = TauSchedule::constant(0.05);
    let r = run_classical_pite(
        &energies,
        &InitialGuess::uniform(2),
        &schedule,
        60,
        &PiteParams::default(),
        0,
        0,
    )
    .unwrap();
    let de = energies[1] - energies[0];
    let dev = (0..=60)
        .map(|s| {
            let tau = 0.05 * s as f64;
            (r.weights[s][0] - 1.0 / (1.0 + (-2.0 * de * tau).exp())).abs()
        })
        .fold(0.0, f64::max);
    report(8, "two-candidate closed form", dev <= 1e-12, format!("max deviation {dev:.1e}"));
}

#[test]
fn c09_vite_calculus() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let ansatz = ViteAnsatz::new(3, 2, PauliAxis::Y).unwrap();
    let theta: Vec<f64> = (0..ansatz.n_params()).map(|_| rng.random::<f64>() * 2.0 * PI).collect();

    let m = m_matrix(&ansatz, &theta).unwrap();
    let n = m.nrows();
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    let eig = m.self_adjoint_eigen(Side::Lower).unwrap();
    let min_eig = (0..n).map(|i| eig.S()[i]).fold(f64::INFINITY, f64::min);

    let (_, grads) = gradient_states(&ansatz, &theta).unwrap();
    let eps = 1e-5;
    let mut fd_err = 0.0f64;
    for (j, g) in grads.iter().enumerate() {
        let mut tp = theta.clone();
        let mut tm = theta.clone();
        tp[j] += eps;
        tm[j] -= eps;
        let (p, q) = (apply_ansatz(&ansatz, &tp).unwrap(), apply_ansatz(&ansatz, &tm).unwrap());
        for k in 0..g.len() {
            fd_err = fd_err.max((g[k] - (p[k] - q[k]) / (2.0 * eps)).norm());
        }
    }

    let one = ViteAnsatz::new(1, 0, PauliAxis::Y).unwrap();
    let sz = DiagonalOperator(vec![1.0, -1.0]);
    let mut analytic_err = 0.0f64;
    for th in [0.3, 1.1, 2.5, 4.0] {
        let m1 = m_matrix(&one, &[th]).unwrap()[(0, 0)];
        let v1 = v_vector(&one, &[th], &sz).unwrap()[0];
        analytic_err = analytic_err.max((m1 - 0.25).abs()).max((v1 - th.sin() / 2.0).abs());
    }

    let mut ancilla_err = 0.0f64;
    for _ in 0..10 {
        let a = ViteAnsatz::new(3, 1, PauliAxis::Y).unwrap();
        let th: Vec<f64> = (0..a.n_params()).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        let diag: Vec<f64> = (0..8).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let op = DiagonalOperator(diag.clone());
        let v = v_vector(&a, &th, &op).unwrap();
        let u = apply_ansatz(&a, &th).unwrap();
        for (j, vj) in v.iter().enumerate() {
            let w = derivative_circuit_state(&a, &th, j).unwrap();
            let (probe, value) = ancilla_probabilities(&w, &u, PI / 2.0, &diag, Some(j)).unwrap();
            let direct = -(w.iter().zip(&u).zip(&diag).map(|((x, y), d)| x.conj() * y * *d).sum::<C64>()).im;
            ancilla_err = ancilla_err
                .max((value - direct).abs())
                .max((value + 2.0 * vj).abs())
                .max((probe.total() - 1.0).abs());
        }
    }
    let pass = asym <= 1e-10 && min_eig >= -1e-10 && fd_err <= 1e-6 && analytic_err <= 1e-12 && ancilla_err <= 1e-10;
    report(
        9,
        "VITE calculus",
        pass,
        format!(
            "M asym {asym:.1e}, min eig {min_eig:.1e}, FD {fd_err:.1e}, 1-qubit {analytic_err:.1e}, ancilla {ancilla_err:.1e}"
        ),
    );
}

fn pairs_exactly_once(s: &GateSchedule, kind: GateKind, expected: Vec<(usize, usize)>, ordered: bool) -> bool {
    let mut seen: Vec<(usize, usize)> = s
        .gates()
        .filter(|g| g.kind == kind)
        .map(|g| {
            let (a, b) = g.particles().unwrap();
            if ordered {
                (a, b)
            } else {
                (a.min(b), a.max(b))
            }
        })
        .collect();
    seen.sort_unstable();
    let mut expected = expected;
    expected.sort_unstable();
    s.is_register_disjoint() && seen == expected
}

#[test]
fn c10_resource_schedules() {
    let ee = schedule_ee(4, 1).unwrap();
    let en = schedule_en(4, 3).unwrap();
    let nn = schedule_nn(3).unwrap();
    let red = schedule_ee_redundant(4).unwrap();
    let figures = (ee.gate_count(), ee.depth(), en.gate_count(), en.depth(), nn.gate_count(), red.depth_of(GateKind::Ee));
    let figures_ok = figures == (6, 6, 12, 4, 3, 3);

    let mut coverage_ok = true;
    for ne in 1..=8usize {
        let all: Vec<(usize, usize)> = (0..ne).flat_map(|a| (a + 1..ne).map(move |b| (a, b))).collect();
        if ne >= 2 {
            for regs in 1..=ne {
                coverage_ok &= pairs_exactly_once(&schedule_ee(ne, regs).unwrap(), GateKind::Ee, all.clone(), false);
            }
            coverage_ok &= pairs_exactly_once(&schedule_ee_redundant(ne).unwrap(), GateKind::Ee, all.clone(), false);
            coverage_ok &= pairs_exactly_once(&schedule_nn(ne).unwrap(), GateKind::Nn, all.clone(), false);
        }
        for nn in 1..=ne {
            let want: Vec<(usize, usize)> = (0..ne).flat_map(|e| (0..nn).map(move |n| (e, n))).collect();
            coverage_ok &= pairs_exactly_once(&schedule_en(ne, nn).unwrap(), GateKind::En, want, true);
        }
    }

    let cost = CostModel::default();
    let ee_depth = |ne: usize, redundant: bool| {
        depth_report(ne, 1, 4, 3, &cost, redundant).unwrap().term("V_ee").unwrap().depth
    };
    let mut ratios = Vec::new();
    let mut ratio_ok = true;
    for ne in [8usize, 16, 32] {
        let naive = ee_depth(2 * ne, false) / ee_depth(ne, false);
        let red = ee_depth(2 * ne, true) / ee_depth(ne, true);
        ratio_ok &= (naive - 4.0).abs() <= 0.5 && (red - 2.0).abs() <= 0.3;
        ratios.push(format!("{ne}->{}: {naive:.2}/{red:.2}", 2 * ne));
    }
    report(
        10,
        "resource schedules",
        figures_ok && coverage_ok && ratio_ok,
        format!("figures {figures:?}, coverage {coverage_ok}, doubling naive/redundant {}", ratios.join(", ")),
    );
}

#[test]
fn c11_universal_invariants() {
    let h = lih_hamiltonian();
    let r = lih_symmetric_run();
    let row_err = r.weights.iter().map(|w| (w.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);

    let cfg = lih_config(true);
    let mut st = prepare_input(&cfg.guess, &cfg.reference, h.layout(), h.grid()).unwrap();
    let mut rte = st.clone();
    for _ in 0..20 {
        rte_step(h, &mut rte, 0.05).unwrap();
    }
    let norm_err = (rte.norm() - 1.0).abs();

    let shift = cfg.params.resolve_shift(h);
    evolve_ite(h, &mut st, 19, &cfg.schedule, cfg.params.gamma, shift, |_, _| {}).unwrap();
    let perm = swap_permutation(h.layout()).unwrap();
    let ne = h.layout().electronic_dim();
    let leak = (0..h.grid().geometry_count())
        .map(|j| {
            let b = st.block(j);
            (0..ne).map(|i| (0.5 * (b[i] - b[perm[i]])).norm_sqr()).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt();

    let small = {
        let layout = RegisterLayout::new(2, 1, 4, 10.0).unwrap();
        let grid = GeometryGrid::new(
            vec![
                Nucleus::new("H", 1.0, [4.0, 0.0, 0.0]),
                Nucleus::new("Li", 1.0, [5.0, 0.0, 0.0]),
            ],
            vec![ActiveCoordinate {
                nucleus: 1,
                axis: 0,
                qubits: 2,
                max_displacement: 2.0,
            }],
        )
        .unwrap();
        GridHamiltonian::new(&layout, &grid, &lih_model()).unwrap()
    };
    let run_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut c = lih_config(true);
            c.guess = InitialGuess::uniform(4);
            c.reference = ReferenceSpec::GaussianSymmetric { width: 2.0 };
            c.ground_state_weights = true;
            format!("{:?}", run_pite(&small, &c, None).unwrap())
        })
    };
    let identical = run_with(1) == run_with(2);

    let pass = row_err <= 1e-10 && norm_err <= 1e-10 && leak <= 1e-10 && identical;
    report(
        11,
        "universal invariants",
        pass,
        format!(
            "row sums {row_err:.1e}, RTE norm {norm_err:.1e}, parity leak {leak:.1e}, thread-identical {identical}"
        ),
    );
}
