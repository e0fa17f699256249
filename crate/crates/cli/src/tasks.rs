//! Per-point computations behind each subcommand.

use catarray::fock::FockSpace;
use catarray::linalg::{self, Ket, C64};
use catarray::model::{self, ModelInstance, ModelKind};
use catarray::solver::{self, ConservedQuantities, KernelOptions, SpectrumMethod};
use catarray::states::{self, DfsCoefficients, Parity};
use catarray::superop;
use catarray::wigner::{self, AnalyticCat, Axis, SliceSpec, StateRef};
use faer::Mat;

use crate::config::{unit_name, Point, RunConfig, StateChoice, Task, WignerPath};
use crate::output::Cell;

/// Columns shared by every table: the full parameter set of a row.
pub fn param_columns(kind: ModelKind) -> Vec<String> {
    let u = unit_name(kind);
    vec![
        "N".into(),
        u.into(),
        "phi_index".into(),
        format!("G_over_{u}"),
        format!("gamma_over_{u}"),
        format!("kappa_over_{u}"),
        "M_phi".into(),
        "M_d".into(),
    ]
}

fn param_cells(p: &Point) -> Vec<Cell> {
    vec![
        Cell::Int(p.n as i64),
        Cell::Float(p.unit),
        Cell::Int(p.phi_index as i64),
        Cell::Float(p.g / p.unit),
        Cell::Float(p.gamma / p.unit),
        Cell::Float(p.kappa / p.unit),
        Cell::Int(p.trunc.m_phi as i64),
        Cell::Int(p.trunc.m_d as i64),
    ]
}

/// Task-specific columns appended after [`param_columns`].
pub fn task_columns(cfg: &RunConfig) -> Vec<String> {
    let u = unit_name(cfg.kind);
    let names: Vec<String> = match cfg.task {
        Task::Steady => ["c_pp", "c_mm", "c_pm_re", "c_pm_im", "purity", "kernel_dim"]
            .map(String::from)
            .to_vec(),
        Task::Gap => vec![
            format!("gap_over_{u}"),
            format!("zeno_estimate_over_{u}"),
            format!("zeno_relation_over_{u}"),
            "kernel_dim".into(),
            "max_real_part".into(),
            "ambiguous".into(),
            "method".into(),
        ],
        Task::Evolve => vec![
            "t".into(),
            format!("t_times_{u}"),
            "c_pp".into(),
            "c_mm".into(),
            "purity".into(),
            "parity".into(),
            "trace".into(),
            "from_initial".into(),
        ],
        Task::Wigner => {
            let w = cfg.wigner.as_ref().expect("validated");
            let mut v: Vec<String> = w.axes.iter().map(|(s, q)| format!("{}{s}", q.name())).collect();
            v.push("W".into());
            v
        }
        Task::Conserved => [
            "kernel_dim",
            "biorthogonality_error",
            "c_pp",
            "c_mm",
            "c_pm_re",
            "c_pm_im",
            "jump_residual_plus",
            "hamiltonian_residual_plus",
            "jump_residual_minus",
            "hamiltonian_residual_minus",
            "truncation_floor",
        ]
        .map(String::from)
        .to_vec(),
        Task::ZenoCompare => [
            "hs_distance",
            "hs_norm",
            "c_pp_full",
            "c_mm_full",
            "c_pp_zeno",
            "c_mm_zeno",
            "purity_full",
        ]
        .map(String::from)
        .to_vec(),
    };
    names
}

fn kernel_options(cfg: &RunConfig) -> KernelOptions {
    KernelOptions {
        kernel_tol: cfg.kernel_tol,
        scale: None,
    }
}

fn vacuum(space: &FockSpace) -> Mat<C64> {
    let v = space.vacuum();
    linalg::outer(v.as_ref(), v.as_ref())
}

struct Steady {
    rho: Mat<C64>,
    coeffs: DfsCoefficients,
    cq: ConservedQuantities,
}

/// Vacuum-seeded steady state from the conserved quantities.
fn steady(m: &ModelInstance, opts: KernelOptions) -> catarray::Result<Steady> {
    let dfs = states::dfs_basis(m)?;
    let cq = solver::conserved_quantities(&superop::model_adjoint(m)?, &dfs, opts)?;
    let (rho, coeffs) = solver::steady_for_initial(vacuum(&m.space).as_ref(), &cq, &dfs)?;
    Ok(Steady {
        rho: rho.into_matrix(),
        coeffs,
        cq,
    })
}

/// Rows for one sweep point, each without the parameter prefix.
fn compute(cfg: &RunConfig, p: &Point) -> catarray::Result<Vec<Vec<Cell>>> {
    let opts = kernel_options(cfg);
    match cfg.task {
        Task::Steady => {
            let m = p.build(cfg.kind)?;
            let s = steady(&m, opts)?;
            let c = s.coeffs;
            Ok(vec![vec![
                Cell::Float(c.c_pp),
                Cell::Float(c.c_mm),
                Cell::Float(c.c_pm.re),
                Cell::Float(c.c_pm.im),
                Cell::Float(states::purity(s.rho.as_ref())),
                Cell::Int(s.cq.kernel.dim() as i64),
            ]])
        }
        Task::Conserved => {
            let m = p.build(cfg.kind)?;
            let s = steady(&m, opts)?;
            let c = s.coeffs;
            let mut row = vec![
                Cell::Int(s.cq.kernel.dim() as i64),
                Cell::Float(s.cq.biorthogonality_error),
                Cell::Float(c.c_pp),
                Cell::Float(c.c_mm),
                Cell::Float(c.c_pm.re),
                Cell::Float(c.c_pm.im),
            ];
            let mut floor: f64 = 0.0;
            for parity in [Parity::Even, Parity::Odd] {
                let r = states::verify_dark_state(&m, &states::model_cat(&m, parity)?.ket)?;
                row.push(Cell::Float(r.jump_residual));
                row.push(Cell::Float(r.hamiltonian_residual));
                floor = floor.max(r.truncation_floor);
            }
            row.push(Cell::Float(floor));
            Ok(vec![row])
        }
        Task::Gap => {
            let m = p.build(cfg.kind)?;
            let r = solver::dissipative_gap(&superop::model_liouvillian(&m)?, opts)?;
            let (estimate, relation) = if cfg.kind.is_kerr() {
                let k = p.kerr();
                (
                    solver::kerr_zeno_gap_estimate(&k)?,
                    solver::kerr_zeno_gap_relation(&k, p.trunc.m_phi)?.0,
                )
            } else {
                (solver::twophoton_zeno_gap_estimate(&p.twophoton()), f64::NAN)
            };
            if let Some((a, b)) = r.ambiguous {
                log::warn!("gap is ambiguous at this tolerance: {a:e} or {b:e}");
            }
            Ok(vec![vec![
                Cell::Float(r.dissipative_gap / p.unit),
                Cell::Float(estimate / p.unit),
                Cell::Float(relation / p.unit),
                Cell::Int(r.kernel_dim as i64),
                Cell::Float(r.max_real_part),
                Cell::Bool(r.ambiguous.is_some()),
                Cell::Text(
                    match r.method {
                        SpectrumMethod::Dense => "dense",
                        SpectrumMethod::ShiftInvert => "shift-invert",
                    }
                    .into(),
                ),
            ]])
        }
        Task::Evolve => {
            let ev = cfg.evolve.as_ref().expect("validated");
            let m = p.build(cfg.kind)?;
            let l = superop::model_liouvillian(&m)?;
            let rho0 = match ev.initial {
                StateChoice::Cat(parity) => {
                    let k = states::model_cat(&m, parity)?.ket;
                    linalg::outer(k.as_ref(), k.as_ref())
                }
                _ => vacuum(&m.space),
            };
            let traj = solver::evolve(&m, &l, rho0.as_ref(), &ev.grid.times(), ev.options)?;
            Ok(traj
                .records
                .iter()
                .map(|r| {
                    vec![
                        Cell::Float(r.t),
                        Cell::Float(r.t * p.unit),
                        Cell::Float(r.c_pp),
                        Cell::Float(r.c_mm),
                        Cell::Float(r.purity),
                        Cell::Float(r.parity),
                        Cell::Float(r.trace),
                        Cell::Float(r.from_initial),
                    ]
                })
                .collect())
        }
        Task::Wigner => wigner_rows(cfg, p, opts),
        Task::ZenoCompare => {
            let z = solver::zeno_distance(&p.kerr(), p.trunc, opts)?;
            Ok(vec![vec![
                Cell::Float(z.hs_distance),
                Cell::Float(z.hs_distance.sqrt()),
                Cell::Float(z.full.c_pp),
                Cell::Float(z.full.c_mm),
                Cell::Float(z.zeno.c_pp),
                Cell::Float(z.zeno.c_mm),
                Cell::Float(z.full_purity),
            ]])
        }
    }
}

enum Sampled {
    Pure(Ket),
    Mixed(Mat<C64>),
}

fn wigner_rows(cfg: &RunConfig, p: &Point, opts: KernelOptions) -> catarray::Result<Vec<Vec<Cell>>> {
    let w = cfg.wigner.as_ref().expect("validated");
    let m = p.build(cfg.kind)?;
    let amps = states::local_amplitudes(m.zeta, p.n, p.phi());
    let mut axes = Vec::new();
    for &(site, q) in &w.axes {
        let mut a = Axis::around(site, q, amps[site - 1].norm(), w.points);
        if let (Some(lo), Some(hi)) = (w.min, w.max) {
            a.min = lo;
            a.max = hi;
        }
        axes.push(a);
    }
    let mut spec = SliceSpec::through_origin(p.n, axes);
    for (&site, &xp) in &w.pins {
        spec.pinned[site - 1] = xp;
    }
    if w.rotated {
        spec = spec.with_frame(wigner::mode_rotation_note(p.phi(), p.n).angles);
    }

    let slice = match w.path {
        WignerPath::Analytic => {
            let an = match w.state {
                StateChoice::Cat(parity) => AnalyticCat::pure(amps, parity),
                _ => {
                    let c = steady(&m, opts)?.coeffs;
                    AnalyticCat {
                        amplitudes: amps,
                        c_pp: c.c_pp,
                        c_mm: c.c_mm,
                        c_pm: c.c_pm,
                    }
                }
            };
            an.slice(&spec)?
        }
        WignerPath::Numeric => {
            let state = match w.state {
                StateChoice::Cat(parity) => Sampled::Pure(states::model_cat(&m, parity)?.ket),
                _ => Sampled::Mixed(steady(&m, opts)?.rho),
            };
            // Zeno states live on the cat mode alone; the other plane-wave
            // modes are put back in their vacuum.
            let (space, state) = if cfg.kind.is_zeno() {
                let full = model::momentum_space(p.n, p.phi_index, p.trunc)?;
                let mode = p.phi_index - 1;
                let s = match state {
                    Sampled::Pure(k) => Sampled::Pure(states::embed_cat_mode_ket(&full, mode, &k)),
                    Sampled::Mixed(r) => Sampled::Mixed(states::with_vacuum_reservoir(&full, mode, r.as_ref())),
                };
                (full, s)
            } else {
                (m.space.clone(), state)
            };
            let sref = match &state {
                Sampled::Pure(k) => StateRef::Pure(k),
                Sampled::Mixed(r) => StateRef::Mixed(r.as_ref()),
            };
            wigner::Evaluator::new(&space, sref)?.slice(&spec)?
        }
    };
    Ok(slice
        .coords
        .iter()
        .zip(&slice.values)
        .map(|(x, &v)| x.iter().map(|&c| Cell::Float(c)).chain([Cell::Float(v)]).collect())
        .collect())
}

/// Failure of one sweep point.
#[derive(Debug)]
pub struct PointFailure {
    pub index: usize,
    pub point: Point,
    pub error: catarray::Error,
}

/// Runs every sweep point with up to `jobs` workers and returns the full
/// rows in sweep order.
pub fn run_points(cfg: &RunConfig, jobs: usize) -> Result<Vec<Vec<Cell>>, PointFailure> {
    let points: Vec<Point> = cfg
        .points()
        .into_iter()
        .map(|p| p.expect("points resolve after validation"))
        .collect();
    let results = crate::pool::ordered_map(&points, jobs, |_, p| compute(cfg, p));
    let mut rows = Vec::new();
    for (index, (p, r)) in points.iter().zip(results).enumerate() {
        match r {
            Ok(block) => {
                let prefix = param_cells(p);
                rows.extend(block.into_iter().map(|r| prefix.iter().cloned().chain(r).collect()));
            }
            Err(error) => {
                return Err(PointFailure {
                    index,
                    point: p.clone(),
                    error,
                })
            }
        }
    }
    Ok(rows)
}

/// Post-processed scalars of a finished table.
pub fn summary(cfg: &RunConfig, columns: &[String], rows: &[Vec<Cell>]) -> Vec<(String, Cell)> {
    if cfg.task != Task::ZenoCompare {
        return Vec::new();
    }
    let col = |name: &str| {
        let i = columns.iter().position(|c| c == name).expect("known column");
        rows.iter().map(|r| r[i].as_f64()).collect::<Vec<f64>>()
    };
    let gamma = col(&format!("gamma_over_{}", unit_name(cfg.kind)));
    let top = gamma.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::new();
    for name in ["hs_distance", "hs_norm"] {
        let d = col(name);
        let (x, y): (Vec<f64>, Vec<f64>) = gamma
            .iter()
            .zip(&d)
            .filter(|(&g, &v)| g >= top / 10.0 * (1.0 - 1e-12) && v > 0.0)
            .map(|(&g, &v)| (g, v))
            .unzip();
        let slope = if x.len() >= 2 { solver::fit_loglog_slope(&x, &y) } else { f64::NAN };
        out.push((format!("slope_top_decade_{name}"), Cell::Float(slope)));
        let (x, y): (Vec<f64>, Vec<f64>) = gamma.iter().zip(&d).filter(|(_, &v)| v > 0.0).map(|(&g, &v)| (g, v)).unzip();
        let slope = if x.len() >= 2 { solver::fit_loglog_slope(&x, &y) } else { f64::NAN };
        out.push((format!("slope_all_{name}"), Cell::Float(slope)));
    }
    out
}
