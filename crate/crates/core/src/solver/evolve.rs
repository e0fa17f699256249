use faer::linalg::solvers::Solve;
use faer::{Col, Mat, MatRef};

use super::BlockSplit;
use crate::linalg::{cr, C64};
use crate::model::ModelInstance;
use crate::states::{fidelity, hs_distance, model_cat, parity_operator, purity, Parity};
use crate::superop::{devectorize, vectorize, Superoperator};
use crate::{fock, Error, Result};

/// Largest superoperator block propagated by exact eigendecomposition.
pub const EXACT_BLOCK_LIMIT: usize = 1600;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvolveMethod {
    /// Exact when every occupied block fits [`EXACT_BLOCK_LIMIT`], else RK45.
    Auto,
    /// ρ(t) = V e^{Λt} V⁻¹ ρ(0) per block.
    Exact,
    /// Adaptive Dormand–Prince 5(4) on the matrix-free generator.
    RungeKutta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub method: EvolveMethod,
    pub rtol: f64,
    pub atol: f64,
    /// Largest tolerated |Tr ρ − 1| along the trajectory.
    pub trace_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            method: EvolveMethod::Auto,
            rtol: 1e-8,
            atol: 1e-10,
            trace_tol: 1e-6,
        }
    }
}

/// Observables of ρ(t).
#[derive(Clone, Debug)]
pub struct Observables {
    pub t: f64,
    pub c_pp: f64,
    pub c_mm: f64,
    pub purity: f64,
    /// ⟨P̂⟩.
    pub parity: f64,
    pub trace: f64,
    /// hs_distance(ρ(t), ρ(0)).
    pub from_initial: f64,
    /// ⟨b_k†b_k⟩ per mode in tensor order.
    pub photon_numbers: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<Observables>,
    pub method: EvolveMethod,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// (max c_++, time at which it is reached).
    pub fn peak_c_pp(&self) -> (f64, f64) {
        self.records
            .iter()
            .map(|r| (r.c_pp, r.t))
            .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a })
    }
}

/// Logarithmic grid from `t0` to `t1` with `per_decade` points per decade,
/// both ends included.
pub fn log_time_grid(t0: f64, t1: f64, per_decade: usize) -> Vec<f64> {
    let decades = (t1 / t0).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n)
        .map(|i| t0 * 10f64.powf(decades * i as f64 / n.max(1) as f64))
        .collect()
}

struct Observer {
    rho0: Mat<C64>,
    plus: Col<C64>,
    minus: Col<C64>,
    parity: Vec<f64>,
    numbers: Vec<Vec<f64>>,
}

impl Observer {
    fn new(model: &ModelInstance, rho0: MatRef<'_, C64>) -> Result<Self> {
        let p = parity_operator(&model.space);
        let d = model.dim();
        let parity = (0..d).map(|i| p.get(i, i).re).collect();
        let numbers = (0..model.space.n_modes())
            .map(|mode| (0..d).map(|i| model.space.occupations(i)[mode] as f64).collect())
            .collect();
        Ok(Observer {
            rho0: rho0.to_owned(),
            plus: model_cat(model, Parity::Even)?.ket,
            minus: model_cat(model, Parity::Odd)?.ket,
            parity,
            numbers,
        })
    }

    fn observe(&self, t: f64, rho: MatRef<'_, C64>) -> Observables {
        let diag: Vec<f64> = (0..rho.nrows()).map(|i| rho[(i, i)].re).collect();
        Observables {
            t,
            c_pp: fidelity(rho, &self.plus),
            c_mm: fidelity(rho, &self.minus),
            purity: purity(rho),
            parity: diag.iter().zip(&self.parity).map(|(a, b)| a * b).sum(),
            trace: diag.iter().sum(),
            from_initial: hs_distance(rho, self.rho0.as_ref()),
            photon_numbers: self
                .numbers
                .iter()
                .map(|n| diag.iter().zip(n).map(|(a, b)| a * b).sum())
                .collect(),
        }
    }
}

struct BlockPropagator {
    idx: Vec<usize>,
    vecs: Mat<C64>,
    lambda: Vec<C64>,
    coef: Vec<C64>,
}

fn exact_blocks(l: &Superoperator, v0: &Col<C64>) -> Result<Vec<BlockPropagator>> {
    let split = BlockSplit::new(l.matrix());
    let v0n = v0.norm_l2();
    let mut props = Vec::new();
    for (idx, b) in split.indices.iter().zip(&split.blocks) {
        let x0 = Col::from_fn(idx.len(), |p| v0[idx[p]]);
        if x0.norm_l2() <= 1e-15 * v0n {
            continue;
        }
        let eig = b
            .to_dense()
            .eigen()
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let vecs = eig.U().to_owned();
        let lambda: Vec<C64> = (0..idx.len()).map(|i| eig.S()[i]).collect();
        let coef_m = vecs.partial_piv_lu().solve(x0.as_mat());
        let coef: Vec<C64> = (0..idx.len()).map(|i| coef_m[(i, 0)]).collect();
        let rec = &vecs * &coef_m;
        let err = (0..idx.len()).map(|i| (rec[(i, 0)] - x0[i]).norm_sqr()).sum::<f64>().sqrt();
        // Size of the eigen-expansion relative to the vector it represents.
        let amp: f64 = (0..idx.len()).map(|i| coef[i].norm() * vecs.col(i).norm_l2()).sum();
        if err > 1e-10 * v0n || amp > 1e8 * x0.norm_l2() {
            return Err(Error::Integration(format!(
                "eigenbasis of a {}-block is too ill-conditioned for exact propagation (reconstruction error {err:.3e}, expansion size {amp:.3e})",
                idx.len()
            )));
        }
        props.push(BlockPropagator {
            idx: idx.clone(),
            vecs,
            lambda,
            coef,
        });
    }
    Ok(props)
}

fn propagate_exact(props: &[BlockPropagator], n: usize, t: f64) -> Col<C64> {
    let mut out = Col::zeros(n);
    for p in props {
        let w = Col::from_fn(p.lambda.len(), |i| p.coef[i] * (p.lambda[i] * t).exp());
        let v = &p.vecs * &w;
        for (q, &i) in p.idx.iter().enumerate() {
            out[i] = v[q];
        }
    }
    out
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Rk45<'a> {
    l: &'a Superoperator,
    rtol: f64,
    atol: f64,
    h: f64,
}

impl Rk45<'_> {
    fn f(&self, rho: &Mat<C64>) -> Mat<C64> {
        self.l.apply(rho.as_ref())
    }

    /// Advances `rho` from `t` to `t_end`.
    fn advance(&mut self, rho: &mut Mat<C64>, t: f64, t_end: f64) -> Result<()> {
        let mut t = t;
        let d = rho.nrows();
        let mut k1 = self.f(rho);
        while t < t_end {
            let h = self.h.min(t_end - t);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration(format!("step size underflow at t = {t:.6e}")));
            }
            let mut ks: Vec<Mat<C64>> = vec![k1.clone()];
            for s in 1..7 {
                let mut y = rho.clone();
                for (j, kj) in ks.iter().enumerate() {
                    if A[s][j] != 0.0 {
                        y += kj * faer::Scale(cr(h * A[s][j]));
                    }
                }
                ks.push(self.f(&y));
            }
            let mut y5 = rho.clone();
            let mut err = Mat::<C64>::zeros(d, d);
            for s in 0..7 {
                if B5[s] != 0.0 {
                    y5 += &ks[s] * faer::Scale(cr(h * B5[s]));
                }
                let e = B5[s] - B4[s];
                if e != 0.0 {
                    err += &ks[s] * faer::Scale(cr(h * e));
                }
            }
            let mut en = 0.0;
            for j in 0..d {
                for i in 0..d {
                    let sc = self.atol + self.rtol * rho[(i, j)].norm().max(y5[(i, j)].norm());
                    en += (err[(i, j)].norm() / sc).powi(2);
                }
            }
            let en = (en / (d * d) as f64).sqrt();
            if en <= 1.0 {
                t += h;
                *rho = y5;
                k1 = ks.swap_remove(6);
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                self.h = h * fac;
            } else {
                self.h = h * (0.9 * en.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        Ok(())
    }
}

/// Propagates ρ0 under `l` and records observables of `model` at each
/// time in the increasing grid `times`.
pub fn evolve(
    model: &ModelInstance,
    l: &Superoperator,
    rho0: MatRef<'_, C64>,
    times: &[f64],
    opts: EvolveOptions,
) -> Result<Trajectory> {
    if rho0.nrows() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: rho0.nrows(),
        });
    }
    let report = fock::density_report(rho0)?;
    if !report.is_valid() {
        return Err(Error::InvalidState(format!("initial state: {report:?}")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: "time grid must be non-negative and strictly increasing".into(),
        });
    }
    let obs = Observer::new(model, rho0)?;
    let v0 = vectorize(rho0);
    let method = match opts.method {
        EvolveMethod::Auto => {
            if BlockSplit::new(l.matrix()).max_block() <= EXACT_BLOCK_LIMIT {
                EvolveMethod::Exact
            } else {
                EvolveMethod::RungeKutta
            }
        }
        m => m,
    };
    let check = |r: &Observables| -> Result<()> {
        if (r.trace - 1.0).abs() > opts.trace_tol {
            return Err(Error::Integration(format!(
                "trace drifted to {:.12} at t = {:.6e}",
                r.trace, r.t
            )));
        }
        Ok(())
    };
    let mut records = Vec::with_capacity(times.len());
    match method {
        EvolveMethod::Exact => {
            let props = exact_blocks(l, &v0)?;
            for &t in times {
                let v = propagate_exact(&props, v0.nrows(), t);
                let rho = devectorize(v.as_ref())?;
                let r = obs.observe(t, rho.as_ref());
                check(&r)?;
                records.push(r);
            }
        }
        _ => {
            let mut rho = rho0.to_owned();
            let mut t = 0.0;
            let mut rk = Rk45 {
                l,
                rtol: opts.rtol,
                atol: opts.atol,
                h: 1e-3 / l.norm().max(1e-300),
            };
            for &tn in times {
                if tn > t {
                    rk.advance(&mut rho, t, tn)?;
                    t = tn;
                }
                let r = obs.observe(t, rho.as_ref());
                check(&r)?;
                records.push(r);
            }
        }
    }
    Ok(Trajectory { records, method })
}
