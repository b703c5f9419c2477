//! Characteristic transport groups and the first-order system
//! `u_t = [[0, b d_x], [a d_x, 0]] u`, evolved after the change of basis
//! `u = M v`, `M = [[sqrt b, sqrt b], [sqrt a, -sqrt a]]`.
//!
//! In `v` the system reads `v_t = diag(c d_x, -c d_x) v + E v`, `c = sqrt(ab)`, with
//! `E = 1/2 [[al + be, be - al], [al - be, -al - be]]`, `al = sqrt(b) (sqrt a)'`,
//! `be = sqrt(a) (sqrt b)'`. The transport part is exact along characteristics; `E`
//! is resolved by Gauss collocation of the Duhamel formula, solved by Picard iteration.

use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::Arc;

use crate::coefficients::CoefficientProfile;
use crate::error::{LabError, Result};
use crate::field::{Field, Trajectory};
use crate::grid::Grid1D;
use crate::quadrature::{collocation_matrix, gauss_legendre_unit};

const CELL_NODES: usize = 16;
const NEWTON_ITERS: usize = 40;

type Speed = dyn Fn(f64) -> f64 + Send + Sync;

/// `phi(x) = int_0^x dy / speed(y)` on a periodic grid, with its inverse.
#[derive(Clone)]
pub struct FlowMap {
    grid: Grid1D,
    /// `phi` at `x_j`, `j = 0..=n`.
    table: Vec<f64>,
    /// Exact linear pieces `(start, phi(start), value)` for piecewise-constant speeds.
    segments: Option<Vec<(f64, f64, f64)>>,
    /// Per cell, Legendre coefficients of `1 / speed` in the local coordinate on `[-1, 1]`.
    cells: Arc<Vec<[f64; CELL_NODES]>>,
}

impl std::fmt::Debug for FlowMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowMap").field("grid", &self.grid).field("period_time", &self.period_time()).finish()
    }
}

fn check_periodic(p: &CoefficientProfile, g: &Grid1D) -> Result<()> {
    if let Some(period) = p.period() {
        let r = g.length() / period;
        if (r - r.round()).abs() > 1e-9 || r.round() < 1.0 {
            return Err(LabError::InvalidProfile(format!(
                "profile period {period} does not divide the torus length {}",
                g.length()
            )));
        }
    }
    Ok(())
}

pub fn build_flow(p: &CoefficientProfile, g: &Grid1D) -> Result<FlowMap> {
    check_periodic(p, g)?;
    let (lo, hi) = p.bounds();
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(LabError::InvalidProfile("flow needs an elliptic profile".into()));
    }
    if p.is_piecewise() {
        let period = p.period().unwrap();
        let copies = (g.length() / period).round() as usize;
        let mut segments = Vec::new();
        let mut acc = 0.0;
        let bps = p.breakpoints();
        let mut starts: Vec<f64> = (0..copies).flat_map(|c| bps.iter().map(move |b| b + c as f64 * period)).collect();
        starts.push(0.0);
        starts.sort_by(f64::total_cmp);
        starts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        starts.retain(|&s| s < g.length());
        for (i, &s) in starts.iter().enumerate() {
            let end = starts.get(i + 1).cloned().unwrap_or(g.length());
            let v = p.eval(0.5 * (s + end));
            segments.push((s, acc, v));
            acc += (end - s) / v;
        }
        let mut flow = FlowMap { grid: *g, table: Vec::new(), segments: Some(segments), cells: Arc::new(Vec::new()) };
        flow.table = (0..=g.n()).map(|j| flow.phi_exact_segments(g.point(j))).collect();
        return Ok(flow);
    }
    let q = p.clone();
    Ok(FlowMap::from_speed(*g, Arc::new(move |x| q.eval(x))))
}

impl FlowMap {
    /// Quadrature-built flow for a smooth positive periodic speed.
    pub fn from_speed(grid: Grid1D, speed: Arc<Speed>) -> FlowMap {
        let (nodes, weights) = gauss_legendre_unit(CELL_NODES);
        let h = grid.spacing();
        let local: Vec<f64> = nodes.iter().map(|s| 2.0 * s - 1.0).collect();
        let basis: Vec<[f64; CELL_NODES]> = local.iter().map(|&x| legendre_values(x)).collect();
        let mut cells = Vec::with_capacity(grid.n());
        let mut table = Vec::with_capacity(grid.n() + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for j in 0..grid.n() {
            let x0 = grid.point(j);
            let g: Vec<f64> = nodes.iter().map(|s| 1.0 / speed(x0 + s * h)).collect();
            let mut c = [0.0; CELL_NODES];
            for (k, ck) in c.iter_mut().enumerate() {
                *ck = (2 * k + 1) as f64 * (0..CELL_NODES).map(|i| weights[i] * g[i] * basis[i][k]).sum::<f64>();
            }
            acc += h * c[0];
            table.push(acc);
            cells.push(c);
        }
        FlowMap { grid, table, segments: None, cells: Arc::new(cells) }
    }

    /// `(phi(x) - phi(x_j), phi'(x))` for `x` in cell `j`.
    fn cell_eval(&self, j: usize, x: f64) -> (f64, f64) {
        let h = self.grid.spacing();
        let z = 2.0 * (x - self.grid.point(j)) / h - 1.0;
        let p = legendre_values_ext(z);
        let c = &self.cells[j];
        let mut integral = c[0] * (z + 1.0);
        let mut slope = c[0];
        for k in 1..CELL_NODES {
            integral += c[k] * (p[k + 1] - p[k - 1]) / (2 * k + 1) as f64;
            slope += c[k] * p[k];
        }
        (0.5 * h * integral, slope)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Travel time across one torus length.
    pub fn period_time(&self) -> f64 {
        self.table[self.grid.n()]
    }

    fn phi_exact_segments(&self, r: f64) -> f64 {
        let segs = self.segments.as_ref().unwrap();
        let i = segs.partition_point(|s| s.0 <= r).max(1) - 1;
        let (s0, p0, v) = segs[i];
        p0 + (r - s0) / v
    }

    pub fn phi(&self, x: f64) -> f64 {
        let len = self.grid.length();
        let wraps = (x / len).floor();
        let r = x - wraps * len;
        wraps * self.period_time() + self.phi_reduced(r)
    }

    fn phi_reduced(&self, r: f64) -> f64 {
        if self.segments.is_some() {
            return self.phi_exact_segments(r);
        }
        let h = self.grid.spacing();
        let j = ((r / h).floor() as usize).min(self.grid.n() - 1);
        let x0 = self.grid.point(j);
        if r == x0 {
            return self.table[j];
        }
        self.table[j] + self.cell_eval(j, r).0
    }

    pub fn phi_inv(&self, s: f64) -> f64 {
        let total = self.period_time();
        let wraps = (s / total).floor();
        let r = s - wraps * total;
        wraps * self.grid.length() + self.phi_inv_reduced(r)
    }

    fn phi_inv_reduced(&self, r: f64) -> f64 {
        if let Some(segs) = &self.segments {
            let i = segs.partition_point(|seg| seg.1 <= r).max(1) - 1;
            let (s0, p0, v) = segs[i];
            return s0 + (r - p0) * v;
        }
        let n = self.grid.n();
        let j = (self.table.partition_point(|&p| p <= r).max(1) - 1).min(n - 1);
        let (lo, hi) = (self.grid.point(j), self.grid.point(j) + self.grid.spacing());
        let (p_lo, p_hi) = (self.table[j], self.table[j + 1]);
        let mut x = lo + (r - p_lo) / (p_hi - p_lo) * (hi - lo);
        let mut last = f64::INFINITY;
        for _ in 0..NEWTON_ITERS {
            let (partial, slope) = self.cell_eval(j, x);
            let step = (self.table[j] + partial - r) / slope;
            if step.abs() >= last {
                break;
            }
            x = (x - step).clamp(lo, hi);
            if step.abs() <= 1e-13 * self.grid.spacing() {
                break;
            }
            last = step.abs();
        }
        x
    }

    /// Characteristic `chi(t, x) = phi^{-1}(t + phi(x))`.
    pub fn chi(&self, t: f64, x: f64) -> f64 {
        self.phi_inv(t + self.phi(x))
    }
}

fn legendre_values(x: f64) -> [f64; CELL_NODES] {
    let ext = legendre_values_ext(x);
    let mut out = [0.0; CELL_NODES];
    out.copy_from_slice(&ext[..CELL_NODES]);
    out
}

/// `P_0(x) .. P_CELL_NODES(x)`.
fn legendre_values_ext(x: f64) -> [f64; CELL_NODES + 1] {
    let mut p = [0.0; CELL_NODES + 1];
    p[0] = 1.0;
    p[1] = x;
    for k in 1..CELL_NODES {
        p[k + 1] = ((2 * k + 1) as f64 * x * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
    }
    p
}

/// Periodic Lagrange interpolation with an even number of points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interpolation {
    pub points: usize,
}

impl Default for Interpolation {
    fn default() -> Self {
        Self { points: 12 }
    }
}

impl Interpolation {
    pub const CUBIC: Interpolation = Interpolation { points: 4 };

    /// Base index and weights for position `y` in grid units.
    fn stencil(&self, y: f64) -> (i64, Vec<f64>) {
        let p = self.points as i64;
        let base = y.floor() as i64 - (p / 2 - 1);
        let t = y - base as f64;
        let w = (0..p)
            .map(|i| {
                (0..p).filter(|&k| k != i).map(|k| (t - k as f64) / (i - k) as f64).product::<f64>()
            })
            .collect();
        (base, w)
    }
}

/// Precomputed sampling of a field at the characteristic feet of every grid point.
#[derive(Clone, Debug)]
struct Resampler {
    n: usize,
    rows: Vec<(i64, Vec<f64>)>,
}

impl Resampler {
    fn new(flow: &FlowMap, t: f64, interp: Interpolation) -> Self {
        let g = flow.grid;
        let h = g.spacing();
        let rows = (0..g.n()).map(|j| interp.stencil(flow.chi(t, g.point(j)) / h)).collect();
        Resampler { n: g.n(), rows }
    }

    fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let n = self.n as i64;
        self.rows
            .iter()
            .map(|(base, w)| {
                w.iter().enumerate().map(|(i, wi)| u[(base + i as i64).rem_euclid(n) as usize] * wi).sum()
            })
            .collect()
    }
}

/// `(e^{t a d_x} u)(x) = u(chi(t, x))` for every component.
pub fn transport_apply(flow: &FlowMap, u: &Field, t: f64) -> Result<Field> {
    transport_apply_with(flow, u, t, Interpolation::default())
}

pub fn transport_apply_with(flow: &FlowMap, u: &Field, t: f64, interp: Interpolation) -> Result<Field> {
    if u.dim() != 1 || u.grids()[0] != flow.grid {
        return Err(LabError::Shape("field is not on the flow grid".into()));
    }
    let r = Resampler::new(flow, t, interp);
    let comps = (0..u.n_components())
        .map(|i| ndarray::ArrayD::from_shape_vec(ndarray::IxDyn(&[flow.grid.n()]), r.apply(&u.values(i))).unwrap())
        .collect();
    u.with_components(comps)
}

#[derive(Clone, Debug)]
pub struct DiracSystem {
    grid: Grid1D,
    a: CoefficientProfile,
    b: CoefficientProfile,
    sqrt_a: Vec<f64>,
    sqrt_b: Vec<f64>,
    /// Pointwise `E(x_j)` as `[[e00, e01], [e10, e11]]`.
    error_op: Vec<[[f64; 2]; 2]>,
    flow: FlowMap,
}

impl DiracSystem {
    /// Requires Lipschitz `a`, `b`; mollify piecewise-constant profiles first.
    pub fn new(a: &CoefficientProfile, b: &CoefficientProfile, grid: &Grid1D) -> Result<Self> {
        check_periodic(a, grid)?;
        check_periodic(b, grid)?;
        let pts = grid.points();
        let mut error_op = Vec::with_capacity(grid.n());
        let (mut sa, mut sb) = (Vec::new(), Vec::new());
        for &x in &pts {
            let (av, bv) = (a.eval(x), b.eval(x));
            let (da, db) = match (a.derivative(x), b.derivative(x)) {
                (Some(da), Some(db)) => (da, db),
                _ => {
                    return Err(LabError::InvalidProfile(
                        "Dirac error operator needs Lipschitz coefficients (mollify piecewise profiles)".into(),
                    ))
                }
            };
            let al = bv.sqrt() * da / (2.0 * av.sqrt());
            let be = av.sqrt() * db / (2.0 * bv.sqrt());
            error_op.push([[0.5 * (al + be), 0.5 * (be - al)], [0.5 * (al - be), -0.5 * (al + be)]]);
            sa.push(av.sqrt());
            sb.push(bv.sqrt());
        }
        let (pa, pb) = (a.clone(), b.clone());
        let flow = FlowMap::from_speed(*grid, Arc::new(move |x| (pa.eval(x) * pb.eval(x)).sqrt()));
        Ok(Self { grid: *grid, a: a.clone(), b: b.clone(), sqrt_a: sa, sqrt_b: sb, error_op, flow })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn a(&self) -> &CoefficientProfile {
        &self.a
    }

    pub fn b(&self) -> &CoefficientProfile {
        &self.b
    }

    /// Flow of the characteristic speed `sqrt(ab)`.
    pub fn flow(&self) -> &FlowMap {
        &self.flow
    }

    pub fn max_speed(&self) -> f64 {
        self.sqrt_a.iter().zip(&self.sqrt_b).map(|(x, y)| x * y).fold(0.0, f64::max)
    }

    pub fn m_at(&self, j: usize) -> [[f64; 2]; 2] {
        let (sa, sb) = (self.sqrt_a[j], self.sqrt_b[j]);
        [[sb, sb], [sa, -sa]]
    }

    pub fn m_inv_at(&self, j: usize) -> [[f64; 2]; 2] {
        let (sa, sb) = (self.sqrt_a[j], self.sqrt_b[j]);
        [[0.5 / sb, 0.5 / sa], [0.5 / sb, -0.5 / sa]]
    }

    pub fn error_at(&self, j: usize) -> [[f64; 2]; 2] {
        self.error_op[j]
    }

    /// `sup_x |E(x)|_2`.
    pub fn error_norm(&self) -> f64 {
        self.error_op.iter().map(spectral_norm_2x2).fold(0.0, f64::max)
    }

    /// `Delta t = min(0.5 h / sqrt(Lambda), 1 / (4 |E|))`.
    pub fn default_dt(&self) -> f64 {
        let upper = self.a.bounds().1.max(self.b.bounds().1);
        let cfl = 0.5 * self.grid.spacing() / upper.sqrt();
        let e = self.error_norm();
        if e > 0.0 {
            cfl.min(0.25 / e)
        } else {
            cfl
        }
    }

    pub fn default_steps(&self, t: f64) -> usize {
        ((t.abs() / self.default_dt()).ceil() as usize).max(1)
    }

    fn check(&self, u: &Field) -> Result<()> {
        if u.dim() != 1 || u.n_components() != 2 || u.grids()[0] != self.grid {
            return Err(LabError::Shape("Dirac state must be a 2-component field on the system grid".into()));
        }
        Ok(())
    }

    pub fn to_diagonal(&self, u: &Field) -> Result<[Vec<Complex64>; 2]> {
        self.check(u)?;
        let (u1, u2) = (u.values(0), u.values(1));
        let mut v = [Vec::with_capacity(u1.len()), Vec::with_capacity(u1.len())];
        for j in 0..u1.len() {
            let mi = self.m_inv_at(j);
            v[0].push(u1[j] * mi[0][0] + u2[j] * mi[0][1]);
            v[1].push(u1[j] * mi[1][0] + u2[j] * mi[1][1]);
        }
        Ok(v)
    }

    pub fn from_diagonal(&self, v: &[Vec<Complex64>; 2]) -> Result<Field> {
        let n = self.grid.n();
        let (mut u1, mut u2) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for j in 0..n {
            let m = self.m_at(j);
            u1.push(v[0][j] * m[0][0] + v[1][j] * m[0][1]);
            u2.push(v[0][j] * m[1][0] + v[1][j] * m[1][1]);
        }
        Field::spinor_1d(self.grid, u1, u2)
    }

    /// `int |u1|^2 / b + |u2|^2 / a`.
    pub fn weighted_norm_sq(&self, u: &Field) -> Result<f64> {
        self.check(u)?;
        let (u1, u2) = (u.values(0), u.values(1));
        let s: f64 = (0..u1.len())
            .map(|j| u1[j].norm_sqr() / self.sqrt_b[j].powi(2) + u2[j].norm_sqr() / self.sqrt_a[j].powi(2))
            .sum();
        Ok(s * self.grid.spacing())
    }

    fn apply_error(&self, v: &[Vec<Complex64>; 2]) -> [Vec<Complex64>; 2] {
        let n = self.grid.n();
        let mut out = [Vec::with_capacity(n), Vec::with_capacity(n)];
        for j in 0..n {
            let e = &self.error_op[j];
            out[0].push(v[0][j] * e[0][0] + v[1][j] * e[0][1]);
            out[1].push(v[0][j] * e[1][0] + v[1][j] * e[1][1]);
        }
        out
    }
}

fn spectral_norm_2x2(e: &[[f64; 2]; 2]) -> f64 {
    let f2 = e[0][0].powi(2) + e[0][1].powi(2) + e[1][0].powi(2) + e[1][1].powi(2);
    let det = e[0][0] * e[1][1] - e[0][1] * e[1][0];
    ((f2 + (f2 * f2 - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiracOptions {
    /// Gauss-Legendre collocation nodes per step.
    pub nodes: usize,
    pub picard_tol: f64,
    pub max_iterations: usize,
    pub interpolation: Interpolation,
}

impl Default for DiracOptions {
    fn default() -> Self {
        Self { nodes: 4, picard_tol: 1e-10, max_iterations: 60, interpolation: Interpolation::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiracStats {
    pub steps: usize,
    pub max_iterations: usize,
    /// Largest ratio of successive Picard updates.
    pub max_contraction: f64,
}

/// Transport of the diagonal pair: `v1 o chi(s, .)`, `v2 o chi(-s, .)`.
struct PairShift {
    forward: Resampler,
    backward: Resampler,
}

impl PairShift {
    fn new(flow: &FlowMap, s: f64, interp: Interpolation) -> Self {
        Self { forward: Resampler::new(flow, s, interp), backward: Resampler::new(flow, -s, interp) }
    }

    fn apply(&self, v: &[Vec<Complex64>; 2]) -> [Vec<Complex64>; 2] {
        [self.forward.apply(&v[0]), self.backward.apply(&v[1])]
    }
}

fn sup_norm(v: &[Vec<Complex64>; 2]) -> f64 {
    v.iter().flat_map(|c| c.iter()).map(|z| z.norm()).fold(0.0, f64::max)
}

fn axpy(acc: &mut [Vec<Complex64>; 2], alpha: f64, x: &[Vec<Complex64>; 2]) {
    for (a, b) in acc.iter_mut().zip(x) {
        a.iter_mut().zip(b).for_each(|(p, q)| *p += q * alpha);
    }
}

/// Stepper holding the transports for one step size.
struct Stepper<'a> {
    sys: &'a DiracSystem,
    dt: f64,
    opts: DiracOptions,
    weights: Vec<f64>,
    colloc: Vec<Vec<f64>>,
    to_node: Vec<PairShift>,
    between: HashMap<(usize, usize), PairShift>,
    node_to_end: Vec<PairShift>,
    full: PairShift,
}

impl<'a> Stepper<'a> {
    fn new(sys: &'a DiracSystem, dt: f64, opts: DiracOptions) -> Self {
        let (c, weights) = gauss_legendre_unit(opts.nodes);
        let colloc = collocation_matrix(&c);
        let flow = &sys.flow;
        let ip = opts.interpolation;
        let to_node = c.iter().map(|&cm| PairShift::new(flow, cm * dt, ip)).collect();
        let mut between = HashMap::new();
        for m in 0..c.len() {
            for j in 0..c.len() {
                between.insert((m, j), PairShift::new(flow, (c[m] - c[j]) * dt, ip));
            }
        }
        let node_to_end = c.iter().map(|&cj| PairShift::new(flow, (1.0 - cj) * dt, ip)).collect();
        let full = PairShift::new(flow, dt, ip);
        Self { sys, dt, opts, weights, colloc, to_node, between, node_to_end, full }
    }

    fn step(&self, v: &[Vec<Complex64>; 2], index: usize, stats: &mut DiracStats) -> Result<[Vec<Complex64>; 2]> {
        let m = self.weights.len();
        let free: Vec<[Vec<Complex64>; 2]> = self.to_node.iter().map(|s| s.apply(v)).collect();
        let mut stages = free.clone();
        let scale = sup_norm(v).max(f64::MIN_POSITIVE);
        let mut prev_update = f64::INFINITY;
        let mut converged = false;
        for it in 1..=self.opts.max_iterations {
            let forced: Vec<[Vec<Complex64>; 2]> = stages.iter().map(|s| self.sys.apply_error(s)).collect();
            let mut update: f64 = 0.0;
            let mut next = Vec::with_capacity(m);
            for mi in 0..m {
                let mut acc = free[mi].clone();
                for j in 0..m {
                    let moved = self.between[&(mi, j)].apply(&forced[j]);
                    axpy(&mut acc, self.dt * self.colloc[mi][j], &moved);
                }
                let diff = acc
                    .iter()
                    .zip(&stages[mi])
                    .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
                    .fold(0.0, f64::max);
                update = update.max(diff);
                next.push(acc);
            }
            stages = next;
            let rel = update / scale;
            if prev_update.is_finite() && prev_update > 0.0 {
                stats.max_contraction = stats.max_contraction.max(rel / prev_update);
            }
            stats.max_iterations = stats.max_iterations.max(it);
            if rel <= self.opts.picard_tol {
                converged = true;
                break;
            }
            if it > 3 && rel >= prev_update {
                return Err(LabError::PicardDivergence { step: index, update: rel, iterations: it });
            }
            prev_update = rel;
        }
        if !converged {
            return Err(LabError::PicardDivergence { step: index, update: prev_update, iterations: self.opts.max_iterations });
        }
        let mut out = self.full.apply(v);
        for j in 0..m {
            let forced = self.sys.apply_error(&stages[j]);
            let moved = self.node_to_end[j].apply(&forced);
            axpy(&mut out, self.dt * self.weights[j], &moved);
        }
        Ok(out)
    }
}

pub fn dirac_evolve(sys: &DiracSystem, u0: &Field, t: f64, steps: usize) -> Result<Field> {
    dirac_evolve_with(sys, u0, t, steps, DiracOptions::default()).map(|r| r.0)
}

pub fn dirac_evolve_with(
    sys: &DiracSystem,
    u0: &Field,
    t: f64,
    steps: usize,
    opts: DiracOptions,
) -> Result<(Field, DiracStats)> {
    if steps == 0 {
        return Err(LabError::InvalidArgument("at least one step required".into()));
    }
    let mut v = sys.to_diagonal(u0)?;
    let mut stats = DiracStats { steps, ..Default::default() };
    if t != 0.0 {
        let stepper = Stepper::new(sys, t / steps as f64, opts);
        for k in 0..steps {
            v = stepper.step(&v, k, &mut stats)?;
        }
    }
    Ok((sys.from_diagonal(&v)?, stats))
}

/// States at `k dt`, `k = 0..=count`.
pub fn dirac_trajectory(sys: &DiracSystem, u0: &Field, dt: f64, count: usize, opts: DiracOptions) -> Result<Vec<Field>> {
    let mut v = sys.to_diagonal(u0)?;
    let mut out = vec![u0.clone()];
    let stepper = Stepper::new(sys, dt, opts);
    let mut stats = DiracStats::default();
    for k in 0..count {
        v = stepper.step(&v, k, &mut stats)?;
        out.push(sys.from_diagonal(&v)?);
    }
    Ok(out)
}

pub fn dirac_time_series(sys: &DiracSystem, u0: &Field, t_end: f64, count: usize) -> Result<Trajectory> {
    let dt = t_end / count as f64;
    let states = dirac_trajectory(sys, u0, dt, count, DiracOptions::default())?;
    Trajectory::new((0..=count).map(|k| k as f64 * dt).collect(), states)
}

fn l1_norm(u: &Field) -> f64 {
    u.modulus().sum() * u.cell_volume()
}

/// `int_{-T}^{T} |u(t, x)| dt / ||u0||_1` with `|.|` the Euclidean norm of the pair.
pub fn transport_l1_profile(sys: &DiracSystem, u0: &Field, horizon: f64, x: f64) -> Result<f64> {
    let dt = sys.default_dt();
    let count = (horizon / dt).ceil() as usize;
    let dt = horizon / count as f64;
    let opts = DiracOptions::default();
    let g = sys.grid;
    let interp = Interpolation::default();
    let (base, w) = interp.stencil(x.rem_euclid(g.length()) / g.spacing());
    let n = g.n() as i64;
    let sample = |u: &Field| -> f64 {
        let comps: Vec<Complex64> = (0..2)
            .map(|c| {
                let vals = u.component(c);
                w.iter().enumerate().map(|(i, wi)| vals[(base + i as i64).rem_euclid(n) as usize] * wi).sum()
            })
            .collect();
        (comps[0].norm_sqr() + comps[1].norm_sqr()).sqrt()
    };
    let fwd = dirac_trajectory(sys, u0, dt, count, opts)?;
    let bwd = dirac_trajectory(sys, u0, -dt, count, opts)?;
    let trap = |states: &[Field]| -> f64 {
        let vals: Vec<f64> = states.iter().map(sample).collect();
        dt * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[vals.len() - 1]))
    };
    let mass = l1_norm(u0);
    if mass == 0.0 {
        return Err(LabError::InvalidArgument("zero initial data".into()));
    }
    Ok((trap(&fwd) + trap(&bwd)) / mass)
}

/// Fitted `C` with `||u(t)||_1 <= e^{C t} ||u0||_1` over `t = k dt`, `k = 1..=count`.
pub fn l1_growth_rate(sys: &DiracSystem, u0: &Field, dt: f64, count: usize) -> Result<f64> {
    let states = dirac_trajectory(sys, u0, dt, count, DiracOptions::default())?;
    let m0 = l1_norm(u0);
    Ok(states
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, s)| (l1_norm(s) / m0).ln() / (k as f64 * dt))
        .fold(0.0, f64::max))
}
