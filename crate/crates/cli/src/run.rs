use serde::Serialize;

use geomopt_core::hamiltonian::{diagonalize, ExchangeParity};
use geomopt_core::pite::{ilj_candidate_energies, run_classical_pite, run_pite, PiteReport};
use geomopt_core::potentials::{ilj_scan_xz, ScanMinimum};
use geomopt_core::propagator::TauSchedule;
use geomopt_core::resources::{
    depth_report, schedule_ee, schedule_ee_redundant, schedule_en, schedule_nn, DepthReport, GateSchedule,
};
use geomopt_core::vite::{run_vite, ViteReport};
use geomopt_core::{GeometryGrid, GridHamiltonian};

use crate::config::{ExperimentConfig, ResourcesSection};
use crate::output::{num, OutputDir};
use crate::CliError;

#[derive(Serialize)]
struct Candidate {
    index: usize,
    multi_index: Vec<usize>,
    /// Coordinates of every nucleus, in the config's length unit.
    positions: Vec<[f64; 3]>,
}

fn candidates(grid: &GeometryGrid) -> Result<Vec<Candidate>, CliError> {
    (0..grid.geometry_count())
        .map(|j| {
            Ok(Candidate {
                index: j,
                multi_index: grid.multi_index(j)?,
                positions: grid.positions(j)?,
            })
        })
        .collect()
}

fn hamiltonian(cfg: &ExperimentConfig) -> Result<GridHamiltonian, CliError> {
    let layout = cfg.layout()?;
    let grid = cfg.grid()?;
    let model = cfg.interactions()?;
    Ok(GridHamiltonian::new(&layout, &grid, &model)?)
}

fn weight_header(n: usize) -> Vec<String> {
    std::iter::once("step".to_string())
        .chain((0..n).map(|j| format!("w_{j}")))
        .collect()
}

fn weight_rows(rows: &[Vec<f64>]) -> Vec<Vec<String>> {
    rows.iter()
        .enumerate()
        .map(|(s, w)| std::iter::once(s.to_string()).chain(w.iter().map(|x| num(*x))).collect())
        .collect()
}

fn write_pite_tables(out: &mut OutputDir, report: &PiteReport) -> Result<(), CliError> {
    let g = report.geometry_count;
    out.write_csv("weights.csv", &weight_header(g), &weight_rows(&report.weights))?;
    if let Some(gs) = &report.ground_state_weights {
        out.write_csv("ground_state_weights.csv", &weight_header(g), &weight_rows(gs))?;
    }
    let header: Vec<String> = ["step", "dtau", "energy_before", "energy_after", "p_k", "cumulative_p"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut cumulative = 1.0;
    let rows: Vec<Vec<String>> = report
        .steps
        .iter()
        .enumerate()
        .map(|(k, s)| {
            cumulative *= s.success_probability;
            vec![
                (k + 1).to_string(),
                num(s.dtau),
                num(s.energy_before),
                num(s.energy_after),
                num(s.success_probability),
                num(cumulative),
            ]
        })
        .collect();
    out.write_csv("trajectory.csv", &header, &rows)
}

#[derive(Serialize)]
struct GeometrySpectrum {
    index: usize,
    multi_index: Vec<usize>,
    positions: Vec<[f64; 3]>,
    energies: Vec<f64>,
    exchange_parity: Option<Vec<ExchangeParity>>,
}

#[derive(Serialize)]
struct DiagonalizeReport<'a> {
    experiment: &'static str,
    system: &'a str,
    geometries: Vec<GeometrySpectrum>,
    ground_energies: Vec<f64>,
    argmin: usize,
}

pub fn diagonalize_cmd(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let h = hamiltonian(cfg)?;
    let settings = cfg.dense_settings();
    let cands = candidates(h.grid())?;
    let mut geometries = Vec::with_capacity(cands.len());
    for c in cands {
        let mut dec = diagonalize(&h.dense_block(c.index, settings.dense_cap)?)?;
        let keep = settings.eigenvalues.max(1).min(dec.len());
        let parity = if h.layout().n_electrons() == 2 {
            dec.truncate_vectors(keep);
            dec.label_exchange_parity(h.layout())?;
            dec.parity.clone()
        } else {
            None
        };
        geometries.push(GeometrySpectrum {
            index: c.index,
            multi_index: c.multi_index,
            positions: c.positions,
            energies: dec.energies[..keep].to_vec(),
            exchange_parity: parity,
        });
    }
    let ground: Vec<f64> = geometries.iter().map(|g| g.energies[0]).collect();
    let argmin = (0..ground.len()).fold(0, |b, j| if ground[j] < ground[b] { j } else { b });
    let k = geometries.iter().map(|g| g.energies.len()).min().unwrap_or(0);
    let header: Vec<String> = std::iter::once("geometry".to_string())
        .chain((0..k).map(|n| format!("e_{n}")))
        .collect();
    let rows: Vec<Vec<String>> = geometries
        .iter()
        .map(|g| {
            std::iter::once(g.index.to_string())
                .chain(g.energies[..k].iter().map(|e| num(*e)))
                .collect()
        })
        .collect();
    out.write_csv("energies.csv", &header, &rows)?;
    out.write_json(
        "report.json",
        &DiagonalizeReport {
            experiment: "diagonalize",
            system: &cfg.system,
            geometries,
            ground_energies: ground,
            argmin,
        },
    )?;
    Ok(format!("lowest ground-state energy at geometry {argmin}"))
}

#[derive(Serialize)]
struct PiteOutput<'a> {
    experiment: &'static str,
    system: &'a str,
    schedule: TauSchedule,
    candidates: Vec<Candidate>,
    optimal_geometry: usize,
    report: &'a PiteReport,
}

pub fn pite_cmd(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let h = hamiltonian(cfg)?;
    let pc = cfg.pite_parts(h.grid().geometry_count())?;
    let report = run_pite(&h, &pc, None)?;
    write_pite_tables(out, &report)?;
    let best = report.optimal_geometry();
    out.write_json(
        "report.json",
        &PiteOutput {
            experiment: "pite",
            system: &cfg.system,
            schedule: pc.schedule,
            candidates: candidates(h.grid())?,
            optimal_geometry: best,
            report: &report,
        },
    )?;
    Ok(format!("argmax geometry after {} steps: {best}", report.n_steps))
}

#[derive(Serialize)]
struct ClassicalOutput<'a> {
    experiment: &'static str,
    system: &'a str,
    energy_unit: &'static str,
    length_unit: &'static str,
    candidates: Vec<Candidate>,
    candidate_energies: Vec<f64>,
    argmax_multi_index: Vec<Vec<usize>>,
    surface_minimum: Option<ScanMinimum>,
    report: &'a PiteReport,
}

pub fn classical_cmd(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let sys = cfg.classical()?;
    let section = cfg.classical.as_ref().expect("validated");
    let energies = ilj_candidate_energies(&sys.grid, 0, &sys.molecule, &sys.params)?;
    let report = run_classical_pite(
        &energies,
        &sys.guess,
        &sys.schedule,
        section.n_steps,
        &sys.pite,
        section.shots,
        section.seed,
    )?;
    let scan = match &section.scan {
        Some(s) => Some(ilj_scan_xz(
            &sys.molecule,
            &sys.params,
            (s.x_range_angstrom[0], s.x_range_angstrom[1]),
            (s.z_range_angstrom[0], s.z_range_angstrom[1]),
            section.probe_base_angstrom[1],
            s.step_angstrom,
        )?),
        None => None,
    };
    write_pite_tables(out, &report)?;
    let cands = candidates(&sys.grid)?;
    let header: Vec<String> = ["geometry", "multi_index", "x_angstrom", "y_angstrom", "z_angstrom", "energy_mev"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = cands
        .iter()
        .zip(&energies)
        .map(|(c, e)| {
            let idx: Vec<String> = c.multi_index.iter().map(|i| i.to_string()).collect();
            let p = c.positions[0];
            vec![
                c.index.to_string(),
                idx.join(" "),
                num(p[0]),
                num(p[1]),
                num(p[2]),
                num(*e),
            ]
        })
        .collect();
    out.write_csv("candidates.csv", &header, &rows)?;
    let argmax_multi_index = report
        .argmax
        .iter()
        .map(|&j| sys.grid.multi_index(j))
        .collect::<Result<Vec<_>, _>>()?;
    let last = argmax_multi_index.last().cloned().unwrap_or_default();
    out.write_json(
        "report.json",
        &ClassicalOutput {
            experiment: "classical-pite",
            system: &cfg.system,
            energy_unit: "meV",
            length_unit: "angstrom",
            candidates: cands,
            candidate_energies: energies,
            argmax_multi_index,
            surface_minimum: scan,
            report: &report,
        },
    )?;
    Ok(format!("argmax candidate after {} steps: {last:?}", report.n_steps))
}

#[derive(Serialize)]
struct ViteOutput<'a> {
    experiment: &'static str,
    system: &'a str,
    n_qubits: usize,
    depth: usize,
    n_params: usize,
    layer_layout: &'a str,
    seed: u64,
    dtau: f64,
    lambda_reg: f64,
    exact_energy: f64,
    tracked_geometry: usize,
    tracked_energies: &'a [f64],
    final_energy_error: f64,
    final_weights: &'a [f64],
    final_eigen_weights: &'a [f64],
    theta_initial: &'a [f64],
    theta_final: &'a [f64],
}

pub fn vite_cmd(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<String, CliError> {
    let h = hamiltonian(cfg)?;
    let vc = cfg.vite_config()?;
    let r: ViteReport = run_vite(&h, &vc, |_| {})?;
    let g = h.grid().geometry_count();
    let labels: Vec<String> = (0..r.tracked_energies.len())
        .map(|n| if n == 0 { "gs".to_string() } else { format!("ex{n}") })
        .collect();
    let header: Vec<String> = ["step", "energy_error"]
        .iter()
        .map(|s| s.to_string())
        .chain((0..g).map(|j| format!("w_{j}")))
        .chain(labels.iter().map(|l| format!("w_{}_{l}", r.tracked_geometry)))
        .collect();
    let rows: Vec<Vec<String>> = r
        .records
        .iter()
        .map(|rec| {
            [rec.step.to_string(), num(rec.energy_error)]
                .into_iter()
                .chain(rec.weights.iter().map(|x| num(*x)))
                .chain(rec.eigen_weights.iter().map(|x| num(*x)))
                .collect()
        })
        .collect();
    out.write_csv("trajectory.csv", &header, &rows)?;
    let last = r.records.last().expect("initial record");
    out.write_json(
        "report.json",
        &ViteOutput {
            experiment: "vite",
            system: &cfg.system,
            n_qubits: r.n_qubits,
            depth: r.depth,
            n_params: r.n_params,
            layer_layout: &r.layer_layout,
            seed: r.seed,
            dtau: r.dtau,
            lambda_reg: r.lambda_reg,
            exact_energy: r.exact_energy,
            tracked_geometry: r.tracked_geometry,
            tracked_energies: &r.tracked_energies,
            final_energy_error: last.energy_error,
            final_weights: &last.weights,
            final_eigen_weights: &last.eigen_weights,
            theta_initial: &r.theta_initial,
            theta_final: &r.theta_final,
        },
    )?;
    Ok(format!(
        "final w_{} = {:.4}, energy error {:.3e}",
        r.tracked_geometry, last.weights[r.tracked_geometry], last.energy_error
    ))
}

#[derive(Serialize)]
struct Schedules {
    ee: Option<GateSchedule>,
    ee_redundant: Option<GateSchedule>,
    en: Option<GateSchedule>,
    nn: Option<GateSchedule>,
}

#[derive(Serialize)]
struct ResourcesOutput<'a> {
    experiment: &'static str,
    report: &'a DepthReport,
    schedules: Schedules,
}

pub fn resources_cmd(r: &ResourcesSection, out: &mut OutputDir) -> Result<String, CliError> {
    let report = depth_report(r.n_e, r.n_nucl, r.n_qe, r.n_qn, &r.cost, r.redundant)?;
    let schedules = Schedules {
        ee: (r.n_e >= 2).then(|| schedule_ee(r.n_e, r.cost.ee_registers)).transpose()?,
        ee_redundant: (r.n_e >= 2).then(|| schedule_ee_redundant(r.n_e)).transpose()?,
        en: (r.n_nucl >= 1).then(|| schedule_en(r.n_e, r.n_nucl)).transpose()?,
        nn: (r.n_nucl >= 2).then(|| schedule_nn(r.n_nucl)).transpose()?,
    };
    let mut net = String::new();
    for (name, s) in [
        ("ee", &schedules.ee),
        ("ee_redundant", &schedules.ee_redundant),
        ("en", &schedules.en),
        ("nn", &schedules.nn),
    ] {
        if let Some(s) = s {
            net.push_str(&format!("# {name}: {} gates, {} layers\n", s.gate_count(), s.depth()));
            net.push_str(&s.netlist());
        }
    }
    out.write_bytes("netlist.txt", net.as_bytes())?;
    out.write_json(
        "report.json",
        &ResourcesOutput {
            experiment: "resources",
            report: &report,
            schedules,
        },
    )?;
    Ok(report.table())
}
