//! Multi-mode Wigner functions on lines and planes of site phase space.
//!
//! Site quadratures follow α_j = (x_j + i p_j)/√2. The numerical path uses
//! W(α⃗) = (2/π)^N Tr[ρ D(α⃗) P̂ D†(α⃗)] = (2/π)^N Tr[ρ D(2α⃗) P̂] and works on
//! any truncated state; site displacements are carried to plane-wave modes
//! by β_k = (1/√N) Σ_j α_j e^{ijk}. Only the in-truncation block of each
//! D(2β_k) is needed, and it is evaluated in closed form, so no padding is
//! involved. Cats built from product coherent states also have an analytic
//! path that sums the four cross-Wigner terms.

use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};
use std::sync::atomic::{AtomicBool, Ordering};

use faer::{Col, Mat, MatRef};

use crate::fock::{self, FockSpace, ModeLabel, LEAKAGE_WARN};
use crate::linalg::{self, c, cr, Ket, C64};
use crate::states::{cat_normalization, Parity};
use crate::{Error, Result};

/// Largest imaginary residue tolerated in a Wigner sample.
pub const IMAG_TOL: f64 = 1e-10;
/// Grid points per axis when none are given.
pub const DEFAULT_POINTS: usize = 81;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    pub fn name(&self) -> &'static str {
        match self {
            Quadrature::X => "x",
            Quadrature::P => "p",
        }
    }
}

/// One varying quadrature of a slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    /// Site index, 1-based.
    pub site: usize,
    pub quadrature: Quadrature,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    /// Symmetric axis over ±(2√2|ζ_j| + 3).
    pub fn around(site: usize, quadrature: Quadrature, local_amplitude: f64, points: usize) -> Self {
        let half = 2.0 * SQRT_2 * local_amplitude + 3.0;
        Axis {
            site,
            quadrature,
            min: -half,
            max: half,
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.min + step * i as f64).collect()
    }

    fn step(&self) -> f64 {
        if self.points > 1 {
            (self.max - self.min) / (self.points - 1) as f64
        } else {
            0.0
        }
    }
}

/// Varying axes plus the quadratures every site is pinned at.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSpec {
    pub axes: Vec<Axis>,
    /// (x_j, p_j) for each site; entries on varying axes are overwritten.
    pub pinned: Vec<(f64, f64)>,
    /// Per-site frame angles θ_j: coordinates are taken in the rotated
    /// frame α_j = e^{−iθ_j}(x_j + i p_j)/√2.
    pub frame: Option<Vec<f64>>,
}

impl SliceSpec {
    /// Slice through the origin of an `n`-site phase space.
    pub fn through_origin(n: usize, axes: Vec<Axis>) -> Self {
        SliceSpec {
            axes,
            pinned: vec![(0.0, 0.0); n],
            frame: None,
        }
    }

    pub fn with_frame(mut self, angles: Vec<f64>) -> Self {
        self.frame = Some(angles);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.pinned.len();
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::InvalidSlice(format!(
                "a slice varies 1 or 2 quadratures, got {}",
                self.axes.len()
            )));
        }
        for a in &self.axes {
            if a.site == 0 || a.site > n {
                return Err(Error::InvalidSlice(format!("site {} outside 1..={n}", a.site)));
            }
            if a.points == 0 || !(a.max >= a.min) || !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::InvalidSlice(format!("bad axis range or resolution: {a:?}")));
            }
        }
        if self.axes.len() == 2 && self.axes[0].site == self.axes[1].site && self.axes[0].quadrature == self.axes[1].quadrature {
            return Err(Error::InvalidSlice("both axes name the same quadrature".into()));
        }
        if let Some(f) = &self.frame {
            if f.len() != n {
                return Err(Error::InvalidSlice(format!("{} frame angles for {n} sites", f.len())));
            }
        }
        Ok(())
    }

    /// Sample coordinates (one per axis) and the site displacements α⃗ they map to.
    fn samples(&self) -> Vec<(Vec<f64>, Vec<C64>)> {
        let grids: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        let total: usize = grids.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total);
        for lin in 0..total {
            // Last axis fastest.
            let mut rem = lin;
            let mut coords = vec![0.0; grids.len()];
            for a in (0..grids.len()).rev() {
                coords[a] = grids[a][rem % grids[a].len()];
                rem /= grids[a].len();
            }
            let mut q = self.pinned.clone();
            for (a, ax) in self.axes.iter().enumerate() {
                let e = &mut q[ax.site - 1];
                match ax.quadrature {
                    Quadrature::X => e.0 = coords[a],
                    Quadrature::P => e.1 = coords[a],
                }
            }
            let alpha = q
                .iter()
                .enumerate()
                .map(|(j, &(x, p))| {
                    let a = c(x, p) / SQRT_2;
                    match &self.frame {
                        Some(f) => a * C64::from_polar(1.0, -f[j]),
                        None => a,
                    }
                })
                .collect();
            out.push((coords, alpha));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WignerMethod {
    DisplacedParity,
    Analytic,
}

/// Sampled Wigner slice; `coords[i]` holds one value per axis.
#[derive(Clone, Debug)]
pub struct PhaseSpaceSlice {
    pub spec: SliceSpec,
    pub coords: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub method: WignerMethod,
}

impl PhaseSpaceSlice {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// ∫ W d²α_j for an x_j–p_j plane: the trapezoidal sum of W dx dp / 2.
    /// `None` for slices of any other shape.
    pub fn plane_integral(&self) -> Option<f64> {
        let [a, b] = self.spec.axes.as_slice() else {
            return None;
        };
        if a.site != b.site || a.points < 2 || b.points < 2 {
            return None;
        }
        let w = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut s = 0.0;
        for i in 0..a.points {
            for j in 0..b.points {
                s += w(i, a.points) * w(j, b.points) * self.values[i * b.points + j];
            }
        }
        Some(s * a.step() * b.step() / 2.0)
    }
}

/// Per-site frame rotation for non-dissipative momentum φ.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationNote {
    /// θ_j = jφ reduced to [0, 2π), j = 1..N.
    pub angles: Vec<f64>,
    /// Every angle is 0 mod 2π.
    pub identity: bool,
}

/// Local coherent amplitudes ζ_j = (ζ/√N)e^{−ijφ} rotate by jφ from site
/// to site; slices that should show every lobe at the same place are taken
/// in per-site quadratures rotated by these angles.
pub fn mode_rotation_note(phi: f64, n: usize) -> RotationNote {
    let angles: Vec<f64> = (1..=n)
        .map(|j| {
            let t = (j as f64 * phi).rem_euclid(2.0 * PI);
            if (2.0 * PI - t).abs() < 1e-9 || t.abs() < 1e-9 {
                0.0
            } else {
                t
            }
        })
        .collect();
    let identity = angles.iter().all(|&t| t == 0.0);
    RotationNote { angles, identity }
}

/// State handed to the numerical path.
#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Pure(&'a Ket),
    Mixed(MatRef<'a, C64>),
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Generalized Laguerre L_n^{(a)}(x) by forward recurrence.
fn laguerre(n: usize, a: usize, x: f64) -> f64 {
    let a = a as f64;
    let mut l0 = 1.0;
    if n == 0 {
        return l0;
    }
    let mut l1 = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + a - x) * l1 - (kf + a) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// ⟨m|D(γ)|n⟩ for m, n < `dim`, the block of the untruncated displacement.
pub fn displacement_block(gamma: C64, dim: usize) -> Mat<C64> {
    let x = gamma.norm_sqr();
    let (r, th) = (gamma.norm(), gamma.arg());
    let lnf: Vec<f64> = (0..dim).map(ln_factorial).collect();
    Mat::from_fn(dim, dim, |m, n| {
        let (lo, hi) = (m.min(n), m.max(n));
        let d = hi - lo;
        let l = laguerre(lo, d, x);
        if l == 0.0 || (d > 0 && r == 0.0) {
            return cr(0.0);
        }
        let ln_r = if d == 0 { 0.0 } else { d as f64 * r.ln() };
        let mag = l.signum() * (0.5 * (lnf[lo] - lnf[hi]) + ln_r - 0.5 * x + l.abs().ln()).exp();
        // γ^{m−n} for m ≥ n, (−γ*)^{n−m} otherwise.
        let phase = if m >= n {
            C64::from_polar(1.0, d as f64 * th)
        } else {
            C64::from_polar(1.0, d as f64 * (PI - th))
        };
        phase * mag
    })
}

/// Site displacements α⃗ as amplitudes of the space's modes.
fn mode_displacements(space: &FockSpace, alpha: &[C64]) -> Result<Vec<C64>> {
    let labels = space.labels();
    let mut out = Vec::with_capacity(labels.len());
    for l in labels {
        match *l {
            ModeLabel::Site(j) => {
                let a = alpha.get(j).ok_or(Error::DimensionMismatch {
                    expected: j + 1,
                    found: alpha.len(),
                })?;
                out.push(*a);
            }
            ModeLabel::Momentum { n, .. } => {
                if alpha.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: alpha.len(),
                    });
                }
                let k = l.momentum().expect("momentum label");
                let s: C64 = alpha
                    .iter()
                    .enumerate()
                    .map(|(j, &a)| a * C64::from_polar(1.0, (j + 1) as f64 * k))
                    .sum();
                out.push(s / (n as f64).sqrt());
            }
        }
    }
    Ok(out)
}

/// Applies `op` to tensor factor `mode` of `v` on `space`.
fn apply_mode(space: &FockSpace, mode: usize, op: &Mat<C64>, v: &Col<C64>) -> Col<C64> {
    let dims = space.truncations();
    let m = dims[mode];
    let inner: usize = dims[mode + 1..].iter().product();
    let outer: usize = dims[..mode].iter().product();
    let mut out = Col::zeros(v.nrows());
    for o in 0..outer {
        for i in 0..inner {
            let base = o * m * inner + i;
            for r in 0..m {
                let mut s = cr(0.0);
                for q in 0..m {
                    let a = op[(r, q)];
                    if a != cr(0.0) {
                        s += a * v[base + q * inner];
                    }
                }
                out[base + r * inner] = s;
            }
        }
    }
    out
}

/// Numerical evaluator for one state on one space.
pub struct Evaluator<'a> {
    space: &'a FockSpace,
    /// Weighted pure components (weight, ket).
    components: Vec<(f64, Ket)>,
    parity: Vec<f64>,
    warned: AtomicBool,
}

impl<'a> Evaluator<'a> {
    pub fn new(space: &'a FockSpace, state: StateRef<'_>) -> Result<Self> {
        let d = space.total_dim();
        let components = match state {
            StateRef::Pure(k) => {
                if k.nrows() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: k.nrows(),
                    });
                }
                vec![(1.0, k.clone())]
            }
            StateRef::Mixed(rho) => {
                if rho.nrows() != d || rho.ncols() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: rho.nrows(),
                    });
                }
                let herm = linalg::hermiticity_error(rho);
                if herm > IMAG_TOL {
                    return Err(Error::InvalidState(format!(
                        "Wigner function of a non-Hermitian operator (‖ρ − ρ†‖ = {herm:.3e}) is not real"
                    )));
                }
                let eig = rho
                    .self_adjoint_eigen(faer::Side::Lower)
                    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
                let (u, s) = (eig.U(), eig.S());
                let top = (0..d).map(|i| s[i].re.abs()).fold(0.0, f64::max);
                (0..d)
                    .filter(|&i| s[i].re.abs() > 1e-14 * top)
                    .map(|i| (s[i].re, u.col(i).to_owned()))
                    .collect()
            }
        };
        let parity = (0..d)
            .map(|i| if space.occupations(i).iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        Ok(Evaluator {
            space,
            components,
            parity,
            warned: AtomicBool::new(false),
        })
    }

    /// W(α⃗) at site displacements `alpha`.
    pub fn point(&self, alpha: &[C64]) -> Result<f64> {
        let betas = mode_displacements(self.space, alpha)?;
        let dims = self.space.truncations();
        for (mode, b) in betas.iter().enumerate() {
            let leak = fock::coherent_leakage(b.norm_sqr(), dims[mode]);
            if leak > LEAKAGE_WARN && !self.warned.swap(true, Ordering::Relaxed) {
                log::warn!(
                    "displacement {b:.3} of mode {mode} is not resolved by {} levels (leakage {leak:.3e}); further leakage warnings for this state are suppressed",
                    dims[mode]
                );
            }
        }
        let blocks: Vec<Mat<C64>> = betas
            .iter()
            .zip(dims)
            .map(|(b, &m)| displacement_block(*b * 2.0, m))
            .collect();
        let mut w = cr(0.0);
        for (weight, psi) in &self.components {
            let pv = Col::from_fn(psi.nrows(), |i| psi[i] * self.parity[i]);
            let mut v = pv;
            for (mode, blk) in blocks.iter().enumerate() {
                v = apply_mode(self.space, mode, blk, &v);
            }
            w += cr(*weight) * linalg::inner(psi.as_ref(), v.as_ref());
        }
        let w = w * FRAC_2_PI.powi(alpha.len() as i32);
        if w.im.abs() > IMAG_TOL {
            return Err(Error::InvalidState(format!(
                "Wigner sample has imaginary residue {:.3e}",
                w.im
            )));
        }
        Ok(w.re)
    }

    pub fn slice(&self, spec: &SliceSpec) -> Result<PhaseSpaceSlice> {
        spec.validate()?;
        let mut coords = Vec::new();
        let mut values = Vec::new();
        for (x, alpha) in spec.samples() {
            values.push(self.point(&alpha)?);
            coords.push(x);
        }
        Ok(PhaseSpaceSlice {
            spec: spec.clone(),
            coords,
            values,
            method: WignerMethod::DisplacedParity,
        })
    }
}

/// W(α⃗) of a state on `space`, by displaced parity.
pub fn wigner_point(space: &FockSpace, state: StateRef<'_>, alpha: &[C64]) -> Result<f64> {
    Evaluator::new(space, state)?.point(alpha)
}

pub fn wigner_line(space: &FockSpace, state: StateRef<'_>, spec: &SliceSpec) -> Result<PhaseSpaceSlice> {
    if spec.axes.len() != 1 {
        return Err(Error::InvalidSlice(format!("a line varies one quadrature, got {}", spec.axes.len())));
    }
    Evaluator::new(space, state)?.slice(spec)
}

pub fn wigner_plane(space: &FockSpace, state: StateRef<'_>, spec: &SliceSpec) -> Result<PhaseSpaceSlice> {
    if spec.axes.len() != 2 {
        return Err(Error::InvalidSlice(format!("a plane varies two quadratures, got {}", spec.axes.len())));
    }
    Evaluator::new(space, state)?.slice(spec)
}

/// (2/π) exp(β*a − βa* − |b|²/2 − |2β − a|²/2 + b*(2β − a)), the Wigner
/// function of |a⟩⟨b| for coherent states.
pub fn cross_wigner(a: C64, b: C64, beta: C64) -> C64 {
    let d = beta * 2.0 - a;
    let e = beta.conj() * a - beta * a.conj() - 0.5 * b.norm_sqr() - 0.5 * d.norm_sqr() + b.conj() * d;
    e.exp() * FRAC_2_PI
}

/// State in the span of |C±⟩ = N_±(⊗_j|ζ_j⟩ ± ⊗_j|−ζ_j⟩), given by its
/// site amplitudes and DFS coefficients.
#[derive(Clone, Debug)]
pub struct AnalyticCat {
    pub amplitudes: Vec<C64>,
    pub c_pp: f64,
    pub c_mm: f64,
    pub c_pm: C64,
}

impl AnalyticCat {
    pub fn pure(amplitudes: Vec<C64>, parity: Parity) -> Self {
        let (c_pp, c_mm) = match parity {
            Parity::Even => (1.0, 0.0),
            Parity::Odd => (0.0, 1.0),
        };
        AnalyticCat {
            amplitudes,
            c_pp,
            c_mm,
            c_pm: cr(0.0),
        }
    }

    /// W of |C_a⟩⟨C_b|.
    fn term(&self, a: Parity, b: Parity, alpha: &[C64]) -> Result<C64> {
        let z2: f64 = self.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        let zeta = cr(z2.sqrt());
        let na = cat_normalization(zeta, a)?;
        let nb = cat_normalization(zeta, b)?;
        let mut s = cr(0.0);
        for u in [1.0, -1.0] {
            for v in [1.0, -1.0] {
                let su = if u < 0.0 { a.sign() } else { 1.0 };
                let sv = if v < 0.0 { b.sign() } else { 1.0 };
                let mut p = cr(su * sv);
                for (z, &al) in self.amplitudes.iter().zip(alpha) {
                    p *= cross_wigner(*z * u, *z * v, al);
                }
                s += p;
            }
        }
        Ok(s * (na * nb))
    }

    pub fn point(&self, alpha: &[C64]) -> Result<f64> {
        if alpha.len() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                found: alpha.len(),
            });
        }
        let mut w = cr(0.0);
        if self.c_pp != 0.0 {
            w += self.term(Parity::Even, Parity::Even, alpha)? * self.c_pp;
        }
        if self.c_mm != 0.0 {
            w += self.term(Parity::Odd, Parity::Odd, alpha)? * self.c_mm;
        }
        if self.c_pm != cr(0.0) {
            w += (self.term(Parity::Even, Parity::Odd, alpha)? * self.c_pm).re * 2.0;
        }
        if w.im.abs() > IMAG_TOL {
            return Err(Error::InvalidState(format!(
                "Wigner sample has imaginary residue {:.3e}",
                w.im
            )));
        }
        Ok(w.re)
    }

    pub fn slice(&self, spec: &SliceSpec) -> Result<PhaseSpaceSlice> {
        spec.validate()?;
        if spec.pinned.len() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                found: spec.pinned.len(),
            });
        }
        let mut coords = Vec::new();
        let mut values = Vec::new();
        for (x, alpha) in spec.samples() {
            values.push(self.point(&alpha)?);
            coords.push(x);
        }
        Ok(PhaseSpaceSlice {
            spec: spec.clone(),
            coords,
            values,
            method: WignerMethod::Analytic,
        })
    }
}
