//! Coupled HJB/FPK fixed-point solver on 1-D or 2-D state grids.
//!
//! The state coordinates are mutual-information-like scalars driven by a
//! configurable drift `±φ(z) + u` with discrete control levels `u`. One
//! player minimizes (the sender), the other maximizes (the receiver); the
//! joint two-axis mode optimizes min over the first control and max over the
//! second.
//!
//! Both equations are discretized with the Markov-chain approximation:
//! upwind advection plus explicit central diffusion, which keeps the backward
//! value update monotone (every new value is a convex combination of old
//! values plus the running cost) and makes the forward density update a
//! conservative finite-volume scheme with reflecting walls. The CFL bound
//! `dt <= 0.5 dx²/σ²` is enforced on the grid, and the advective part is
//! re-checked per step against the actual drift.
//!
//! With fractional order `alpha < 1` the time updates convolve the full
//! history of fields with Grünwald–Letnikov weights (anchored at the initial
//! field so total mass is preserved); `alpha = 1` recovers the plain
//! single-step march.

use crate::error::{Error, Result};
use crate::frac::gl_weights;

/// One uniformly discretized state axis (finite-volume cell centers).
#[derive(Debug, Clone)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub cells: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, cells: usize) -> Result<Self> {
        if !(max > min) {
            return Err(Error::Config(format!(
                "axis needs max > min, got [{min},{max}]"
            )));
        }
        if cells < 3 {
            return Err(Error::Config(format!("axis needs >= 3 cells, got {cells}")));
        }
        Ok(Self { min, max, cells })
    }

    pub fn dx(&self) -> f64 {
        (self.max - self.min) / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.min + (i as f64 + 0.5) * self.dx()
    }
}

/// Discretization of the solver: axes, time step, horizon, noise scale, and
/// fractional order.
#[derive(Debug, Clone)]
pub struct MfgGrid {
    pub axes: Vec<Axis>,
    pub dt: f64,
    /// Number of time steps in the horizon.
    pub steps: usize,
    pub sigma: f64,
    pub alpha: f64,
}

impl MfgGrid {
    pub fn new(axes: Vec<Axis>, dt: f64, steps: usize, sigma: f64, alpha: f64) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::Config(format!(
                "grid supports 1 or 2 axes, got {}",
                axes.len()
            )));
        }
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        if steps == 0 {
            return Err(Error::Config("horizon must have at least one step".into()));
        }
        if sigma < 0.0 {
            return Err(Error::Config(format!("sigma must be >= 0, got {sigma}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0,1], got {alpha}"
            )));
        }
        if sigma > 0.0 {
            for ax in &axes {
                let bound = 0.5 * ax.dx() * ax.dx() / (sigma * sigma);
                if dt > bound {
                    return Err(Error::Config(format!(
                        "CFL violation: dt = {dt} exceeds 0.5 dx^2/sigma^2 = {bound}"
                    )));
                }
            }
        }
        Ok(Self {
            axes,
            dt,
            steps,
            sigma,
            alpha,
        })
    }

    pub fn ncells(&self) -> usize {
        self.axes.iter().map(|a| a.cells).product()
    }

    pub fn naxes(&self) -> usize {
        self.axes.len()
    }

    /// Multi-index of a flat cell index (row-major over axes).
    fn unravel(&self, i: usize) -> [usize; 2] {
        match self.axes.len() {
            1 => [i, 0],
            _ => [i % self.axes[0].cells, i / self.axes[0].cells],
        }
    }

    /// Cell-center coordinates.
    pub fn coords(&self, i: usize) -> Vec<f64> {
        let idx = self.unravel(i);
        self.axes
            .iter()
            .enumerate()
            .map(|(a, ax)| ax.center(idx[a]))
            .collect()
    }
}

/// Drift shape `φ(z)`; the control laws apply it with a fixed sign per
/// player, and the magnitude must not vanish on the grid interior when a
/// drift is configured at all.
#[derive(Debug, Clone, Copy)]
pub enum DriftKind {
    /// `φ(z) = gain·(z - center)`.
    Linear { gain: f64, center: f64 },
    /// `φ(z) = gain·tanh(z - center)`, bounded drift.
    Saturating { gain: f64, center: f64 },
}

impl DriftKind {
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            DriftKind::Linear { gain, center } => gain * (z - center),
            DriftKind::Saturating { gain, center } => gain * (z - center).tanh(),
        }
    }

    fn gain(&self) -> f64 {
        match *self {
            DriftKind::Linear { gain, .. } | DriftKind::Saturating { gain, .. } => gain,
        }
    }
}

/// Who optimizes what: minimize, maximize, or min-max over a control pair on
/// a two-axis grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameMode {
    AliceMin,
    BobMax,
    JointMinimax,
}

/// Running cost `c(z, u, m) = base + w_z Σ(z_a - z_ref)² + w_u Σ u² + w_m m`,
/// with `m` the (normalized) local density for mean-field congestion
/// coupling.
#[derive(Debug, Clone, Copy)]
pub struct CostSpec {
    pub base: f64,
    pub state_weight: f64,
    pub state_ref: f64,
    pub control_weight: f64,
    pub congestion: f64,
}

impl CostSpec {
    pub fn eval(&self, coords: &[f64], controls: &[f64], density: f64) -> f64 {
        let state: f64 = coords
            .iter()
            .map(|z| (z - self.state_ref) * (z - self.state_ref))
            .sum();
        let ctrl: f64 = controls.iter().map(|u| u * u).sum();
        self.base + self.state_weight * state + self.control_weight * ctrl
            + self.congestion * density
    }
}

/// Problem specification: drift, running cost, optimization mode, and the
/// discrete control levels available to each player.
#[derive(Debug, Clone)]
pub struct MfgProblem {
    pub drift: DriftKind,
    pub cost: CostSpec,
    pub mode: GameMode,
    pub controls: Vec<f64>,
}

impl MfgProblem {
    pub fn new(
        drift: DriftKind,
        cost: CostSpec,
        mode: GameMode,
        controls: Vec<f64>,
    ) -> Result<Self> {
        if controls.is_empty() {
            return Err(Error::Config("control set must be nonempty".into()));
        }
        Ok(Self {
            drift,
            cost,
            mode,
            controls,
        })
    }

    /// Per-axis drift sign: the minimizing player damps the coordinate, the
    /// maximizing player grows it. On a joint grid axis 0 belongs to the
    /// minimizer and axis 1 to the maximizer.
    fn axis_sign(&self, axis: usize) -> f64 {
        match self.mode {
            GameMode::AliceMin => -1.0,
            GameMode::BobMax => 1.0,
            GameMode::JointMinimax => {
                if axis == 0 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Effective drift on an axis at coordinate `z` under control `u`.
    pub fn drift_at(&self, axis: usize, z: f64, u: f64) -> f64 {
        self.axis_sign(axis) * self.drift.eval(z) + u
    }

    /// A configured drift must not vanish on the grid interior.
    fn validate_drift(&self, grid: &MfgGrid) -> Result<()> {
        if self.drift.gain() == 0.0 {
            return Ok(());
        }
        for ax in &grid.axes {
            for i in 1..ax.cells - 1 {
                if self.drift.eval(ax.center(i)) == 0.0 {
                    return Err(Error::Config(format!(
                        "drift magnitude vanishes at interior cell center {}",
                        ax.center(i)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Value, density, and drift fields over the grid. `control` stores the
/// per-cell effective drift for each axis, concatenated axis-major
/// (`naxes · ncells` entries).
#[derive(Debug, Clone)]
pub struct MfgState {
    pub value: Vec<f64>,
    pub density: Vec<f64>,
    pub control: Vec<f64>,
}

impl MfgState {
    pub fn new(
        grid: &MfgGrid,
        value: Vec<f64>,
        density: Vec<f64>,
        control: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.ncells();
        if value.len() != n || density.len() != n || control.len() != n * grid.naxes() {
            return Err(Error::ShapeMismatch(format!(
                "fields must have {n} (and {} control) entries",
                n * grid.naxes()
            )));
        }
        validate_density(&density)?;
        Ok(Self {
            value,
            density,
            control,
        })
    }

    /// Uniform density, zero value and drift.
    pub fn flat(grid: &MfgGrid) -> Self {
        let n = grid.ncells();
        Self {
            value: vec![0.0; n],
            density: vec![1.0 / n as f64; n],
            control: vec![0.0; n * grid.naxes()],
        }
    }
}

fn validate_density(density: &[f64]) -> Result<()> {
    if density.iter().any(|m| *m < 0.0 || !m.is_finite()) {
        return Err(Error::InvalidDistribution(
            "density has negative or non-finite entries".into(),
        ));
    }
    let mass: f64 = density.iter().sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!(
            "density mass {mass} differs from 1 beyond 1e-9"
        )));
    }
    Ok(())
}

/// Neighbor jump probabilities of one cell along one axis under the
/// Markov-chain approximation, with reflecting walls.
struct AxisStencil {
    down: f64,
    up: f64,
}

fn axis_stencil(
    grid: &MfgGrid,
    axis: usize,
    cell: usize,
    drift: f64,
    dt_eff: f64,
) -> Result<AxisStencil> {
    let ax = &grid.axes[axis];
    let dx = ax.dx();
    let diff = 0.5 * grid.sigma * grid.sigma / (dx * dx);
    let up = dt_eff * (drift.max(0.0) / dx + diff);
    let down = dt_eff * ((-drift).max(0.0) / dx + diff);
    if up + down > 1.0 + 1e-12 {
        return Err(Error::Config(format!(
            "CFL violation: outflow probability {} > 1 at cell {cell} (drift {drift})",
            up + down
        )));
    }
    Ok(AxisStencil { down, up })
}

/// Expected next value at `cell` for a control tuple: convex combination of
/// neighbor values under the stencil (reflecting at walls).
fn expected_value(
    grid: &MfgGrid,
    prob: &MfgProblem,
    value: &[f64],
    cell: usize,
    controls: &[f64],
    dt_eff: f64,
) -> Result<f64> {
    let idx = grid.unravel(cell);
    let mut acc = 0.0;
    let mut stay = 1.0;
    for (axis, ax) in grid.axes.iter().enumerate() {
        let z = ax.center(idx[axis]);
        let f = prob.drift_at(axis, z, controls[axis]);
        let st = axis_stencil(grid, axis, cell, f, dt_eff)?;
        let stride = if axis == 0 { 1 } else { grid.axes[0].cells };
        let i = idx[axis];
        // reflecting: outward probability collapses onto the cell itself
        if i + 1 < ax.cells {
            acc += st.up * value[cell + stride];
            stay -= st.up;
        }
        if i > 0 {
            acc += st.down * value[cell - stride];
            stay -= st.down;
        }
    }
    Ok(acc + stay * value[cell])
}

/// One backward value update: optimize the Bellman target over the discrete
/// control set (min, max, or min-max for the joint mode).
///
/// `state.value` holds the later-time value, `state.density` the current
/// density entering the congestion cost. Returns the earlier-time value. The
/// scheme is monotone: no new extrema appear beyond the running-cost source
/// term.
pub fn hjb_backward_step(state: &MfgState, prob: &MfgProblem, grid: &MfgGrid) -> Result<Vec<f64>> {
    hjb_backward_step_full(state, prob, grid, grid.dt).map(|(v, _)| v)
}

/// Backward step also reporting the per-axis optimal drift field.
pub fn hjb_backward_step_full(
    state: &MfgState,
    prob: &MfgProblem,
    grid: &MfgGrid,
    dt_eff: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    prob.validate_drift(grid)?;
    let n = grid.ncells();
    if state.value.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "value field has {} entries, grid has {n}",
            state.value.len()
        )));
    }
    let minimize = !matches!(prob.mode, GameMode::BobMax);

    let mut value = vec![0.0; n];
    let mut drifts = vec![0.0; n * grid.naxes()];
    for cell in 0..n {
        let coords = grid.coords(cell);
        let m_here = state.density[cell] * n as f64; // normalized local density
        let (q, tuple) = match prob.mode {
            GameMode::AliceMin | GameMode::BobMax => {
                let mut best: Option<(f64, f64)> = None;
                for &u in &prob.controls {
                    let q = prob.cost.eval(&coords, &[u], m_here) * dt_eff
                        + expected_value(grid, prob, &state.value, cell, &[u], dt_eff)?;
                    let better = match best {
                        None => true,
                        Some((bq, bu)) => {
                            let strict = if minimize { q < bq - 1e-15 } else { q > bq + 1e-15 };
                            // deterministic tie-break toward smaller |u|
                            strict || ((q - bq).abs() <= 1e-15 && u.abs() < bu.abs() - 1e-15)
                        }
                    };
                    if better {
                        best = Some((q, u));
                    }
                }
                let (q, u) = best.expect("nonempty control set");
                (q, vec![u])
            }
            GameMode::JointMinimax => {
                // min over u1 of max over u2 on the control pair grid
                let mut outer: Option<(f64, Vec<f64>)> = None;
                for &u1 in &prob.controls {
                    let mut inner: Option<(f64, Vec<f64>)> = None;
                    for &u2 in &prob.controls {
                        let tuple = vec![u1, u2];
                        let q = prob.cost.eval(&coords, &tuple, m_here) * dt_eff
                            + expected_value(grid, prob, &state.value, cell, &tuple, dt_eff)?;
                        if inner.as_ref().map_or(true, |(bq, _)| q > *bq + 1e-15) {
                            inner = Some((q, tuple));
                        }
                    }
                    let cand = inner.expect("nonempty control set");
                    if outer.as_ref().map_or(true, |(bq, _)| cand.0 < *bq - 1e-15) {
                        outer = Some(cand);
                    }
                }
                outer.expect("nonempty control set")
            }
        };
        value[cell] = q;
        for axis in 0..grid.naxes() {
            drifts[axis * n + cell] = prob.drift_at(axis, coords[axis], tuple[axis]);
        }
    }
    Ok((value, drifts))
}

/// One conservative forward transport-diffusion step of the density under
/// the state's drift field.
///
/// Donor-cell upwind fluxes plus central diffusion with zero-flux walls:
/// total mass is conserved to rounding and nonnegativity is preserved under
/// the CFL bound (checked; violation is a configuration error).
pub fn fpk_forward_step(state: &MfgState, prob: &MfgProblem, grid: &MfgGrid) -> Result<Vec<f64>> {
    let _ = prob;
    fpk_forward_step_scaled(state, grid, grid.dt)
}

fn fpk_forward_step_scaled(state: &MfgState, grid: &MfgGrid, dt_eff: f64) -> Result<Vec<f64>> {
    let n = grid.ncells();
    if state.density.len() != n || state.control.len() != n * grid.naxes() {
        return Err(Error::ShapeMismatch(format!(
            "density/control fields do not match grid ({n} cells)"
        )));
    }
    validate_density(&state.density)?;

    // outflow CFL check per cell across all axes
    for cell in 0..n {
        let mut outflow = 0.0;
        let idx = grid.unravel(cell);
        for (axis, ax) in grid.axes.iter().enumerate() {
            let dx = ax.dx();
            let f = state.control[axis * n + cell];
            let diff = 0.5 * grid.sigma * grid.sigma / (dx * dx);
            let mut o = dt_eff * f.abs() / dx;
            if idx[axis] > 0 {
                o += dt_eff * diff;
            }
            if idx[axis] + 1 < ax.cells {
                o += dt_eff * diff;
            }
            outflow += o;
        }
        if outflow > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "CFL violation: outflow {outflow} > 1 at cell {cell}"
            )));
        }
    }

    let mut next = state.density.to_vec();
    for axis in 0..grid.naxes() {
        let ax = &grid.axes[axis];
        let dx = ax.dx();
        let diff_flux = 0.5 * grid.sigma * grid.sigma;
        let stride = if axis == 0 { 1 } else { grid.axes[0].cells };
        let lanes = n / ax.cells;
        for lane in 0..lanes {
            let base = lane_base(grid, axis, lane);
            for face in 0..ax.cells - 1 {
                let left = base + face * stride;
                let right = left + stride;
                let f_face =
                    0.5 * (state.control[axis * n + left] + state.control[axis * n + right]);
                let advective = if f_face >= 0.0 {
                    f_face * state.density[left]
                } else {
                    f_face * state.density[right]
                };
                let diffusive = -diff_flux * (state.density[right] - state.density[left]) / dx;
                let flux = (advective + diffusive) * dt_eff / dx;
                next[left] -= flux;
                next[right] += flux;
            }
        }
    }
    // flux arithmetic can round a drained cell to a tiny negative
    for v in next.iter_mut() {
        if *v < 0.0 {
            debug_assert!(*v > -1e-12, "conservative step produced {v}");
            *v = 0.0;
        }
    }
    Ok(next)
}

/// Flat index of the first cell of the `lane`-th 1-D lane along `axis`.
fn lane_base(grid: &MfgGrid, axis: usize, lane: usize) -> usize {
    if grid.naxes() == 1 {
        0
    } else if axis == 0 {
        lane * grid.axes[0].cells
    } else {
        lane
    }
}

/// Options of the fixed-point solve.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relaxation weight on the new density path per sweep.
    pub relaxation: f64,
    /// Memory truncation depth for the fractional update (lags kept).
    pub history_depth: usize,
    pub initial_density: Option<Vec<f64>>,
    pub terminal_value: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            relaxation: 0.5,
            history_depth: usize::MAX,
            initial_density: None,
            terminal_value: None,
        }
    }
}

/// Converged fields and the convergence report of [`solve_mfg`].
#[derive(Debug, Clone)]
pub struct MfgSolution {
    /// Value field per time index (`steps + 1` entries, index 0 = start).
    pub value: Vec<Vec<f64>>,
    /// Density per time index (`steps + 1` entries).
    pub density: Vec<Vec<f64>>,
    /// Optimal per-axis drift per time step (`steps` entries).
    pub controls: Vec<Vec<f64>>,
    pub sweeps: usize,
    pub converged: bool,
    /// Successive change of the relaxed density path (sup over time of the
    /// L1 step) per sweep; the stopping rule. The raw fixed-point mismatch
    /// of a solution is available via [`fixed_point_residual`].
    pub residuals: Vec<f64>,
    /// Fixed-point mismatch measured during the final sweep.
    pub final_mismatch: f64,
}

impl MfgSolution {
    /// Start-time value with terminal density, as a plain state.
    pub fn terminal_state(&self) -> MfgState {
        MfgState {
            value: self.value[0].clone(),
            density: self.density.last().expect("nonempty").clone(),
            control: self.controls.last().cloned().unwrap_or_default(),
        }
    }

    /// Mean first-axis coordinate of the density at each time index.
    pub fn mean_trajectory(&self, grid: &MfgGrid) -> Vec<f64> {
        self.density
            .iter()
            .map(|m| {
                m.iter()
                    .enumerate()
                    .map(|(i, p)| p * grid.coords(i)[0])
                    .sum()
            })
            .collect()
    }
}

/// Fixed-point iteration alternating a full backward value pass and a full
/// forward density pass until the density path stops moving (sup-over-time L1
/// change below `tol`).
///
/// With `alpha < 1` both passes use the Grünwald–Letnikov memory over the
/// stored history (truncated at `options.history_depth` lags); `alpha = 1`
/// reduces to the plain march. On `max_sweeps` exhaustion the best iterate is
/// returned flagged `converged = false`.
pub fn solve_mfg(
    prob: &MfgProblem,
    grid: &MfgGrid,
    tol: f64,
    max_sweeps: usize,
    options: &SolveOptions,
) -> Result<MfgSolution> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive, got {tol}")));
    }
    prob.validate_drift(grid)?;
    let n = grid.ncells();
    let steps = grid.steps;
    let frac = grid.alpha < 1.0 - 1e-12;
    let weights = if frac {
        gl_weights(grid.alpha, steps + 1)
    } else {
        Vec::new()
    };
    let dt_eff = if frac { grid.dt.powf(grid.alpha) } else { grid.dt };

    let initial = match &options.initial_density {
        Some(d) => {
            if d.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "initial density has {} entries, grid has {n}",
                    d.len()
                )));
            }
            validate_density(d)?;
            d.clone()
        }
        None => vec![1.0 / n as f64; n],
    };
    let terminal = match &options.terminal_value {
        Some(v) => {
            if v.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "terminal value has {} entries, grid has {n}",
                    v.len()
                )));
            }
            v.clone()
        }
        None => vec![0.0; n],
    };

    let mut density_path: Vec<Vec<f64>> = vec![initial.clone(); steps + 1];
    let mut residuals: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    let mut value_path = vec![terminal.clone(); steps + 1];
    let mut control_path = vec![vec![0.0; n * grid.naxes()]; steps];
    let mut theta = options.relaxation.clamp(0.0, 1.0);
    let mut prev_mismatch = f64::INFINITY;
    let mut final_mismatch = f64::INFINITY;

    while sweeps < max_sweeps {
        sweeps += 1;
        let swept = sweep_once(
            prob,
            grid,
            dt_eff,
            &weights,
            options.history_depth,
            &initial,
            &terminal,
            &density_path,
        )?;
        value_path = swept.value_path;
        control_path = swept.control_path;
        // damp when the Picard map stops contracting (discrete-control flips)
        if swept.residual > prev_mismatch {
            theta = (theta * 0.7).max(0.01);
        }
        prev_mismatch = swept.residual;
        final_mismatch = swept.residual;

        let mut change = 0.0f64;
        for k in 0..=steps {
            let mut l1 = 0.0;
            for i in 0..n {
                let next = theta * swept.density_path[k][i] + (1.0 - theta) * density_path[k][i];
                l1 += (next - density_path[k][i]).abs();
                density_path[k][i] = next;
            }
            change = change.max(l1);
            let mass: f64 = density_path[k].iter().sum();
            if mass > 0.0 {
                density_path[k].iter_mut().for_each(|v| *v /= mass);
            }
        }
        residuals.push(change);

        if change < tol {
            converged = true;
            break;
        }
    }

    Ok(MfgSolution {
        value: value_path,
        density: density_path,
        controls: control_path,
        sweeps,
        converged,
        residuals,
        final_mismatch,
    })
}

struct Sweep {
    value_path: Vec<Vec<f64>>,
    control_path: Vec<Vec<f64>>,
    density_path: Vec<Vec<f64>>,
    residual: f64,
}

/// One full backward pass + forward pass against a given density path;
/// the residual is the sup-over-time L1 distance between the forward output
/// and the input path (the fixed-point mismatch).
#[allow(clippy::too_many_arguments)]
fn sweep_once(
    prob: &MfgProblem,
    grid: &MfgGrid,
    dt_eff: f64,
    weights: &[f64],
    history_depth: usize,
    initial: &[f64],
    terminal: &[f64],
    density_path: &[Vec<f64>],
) -> Result<Sweep> {
    let n = grid.ncells();
    let steps = grid.steps;
    let frac = !weights.is_empty();

    // backward value pass against the current density path
    let mut value_path = vec![terminal.to_vec(); steps + 1];
    let mut control_path = vec![vec![0.0; n * grid.naxes()]; steps];
    for k in (0..steps).rev() {
        let state = MfgState {
            value: value_path[k + 1].clone(),
            density: density_path[k].clone(),
            control: control_path[k].clone(),
        };
        let (bellman, drifts) = hjb_backward_step_full(&state, prob, grid, dt_eff)?;
        value_path[k] = if frac {
            // memory over later times, anchored at the terminal field
            let mut v = vec![0.0; n];
            let mut tail = 1.0;
            let depth = history_depth.min(steps - k);
            for j in 1..=depth {
                let c = -weights[j];
                tail -= c;
                for i in 0..n {
                    v[i] += c * value_path[k + j][i];
                }
            }
            for i in 0..n {
                v[i] += tail * terminal[i] + (bellman[i] - value_path[k + 1][i]);
            }
            v
        } else {
            bellman
        };
        control_path[k] = drifts;
    }

    // forward density pass under the new controls
    let mut new_path: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    new_path.push(initial.to_vec());
    for k in 0..steps {
        let state = MfgState {
            value: value_path[k].clone(),
            density: new_path[k].clone(),
            control: control_path[k].clone(),
        };
        let stepped = fpk_forward_step_scaled(&state, grid, dt_eff)?;
        let mut next = if frac {
            let mut m = vec![0.0; n];
            let mut tail = 1.0;
            let depth = history_depth.min(k + 1);
            for j in 1..=depth {
                let c = -weights[j];
                tail -= c;
                for i in 0..n {
                    m[i] += c * new_path[k + 1 - j][i];
                }
            }
            for i in 0..n {
                m[i] += tail * initial[i] + (stepped[i] - new_path[k][i]);
            }
            m
        } else {
            stepped
        };
        // the memory combination can undershoot zero by rounding;
        // clamp and renormalize (alpha = 1 never needs it)
        let mut mass = 0.0;
        for v in next.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
            mass += *v;
        }
        if (mass - 1.0).abs() > 1e-12 && mass > 0.0 {
            next.iter_mut().for_each(|v| *v /= mass);
        }
        new_path.push(next);
    }

    let mut residual = 0.0f64;
    for k in 0..=steps {
        let l1: f64 = new_path[k]
            .iter()
            .zip(&density_path[k])
            .map(|(a, b)| (a - b).abs())
            .sum();
        residual = residual.max(l1);
    }
    Ok(Sweep {
        value_path,
        control_path,
        density_path: new_path,
        residual,
    })
}

/// Fixed-point mismatch of one extra sweep run from a solution's converged
/// density path; a converged solution moves by less than the solve tolerance.
pub fn fixed_point_residual(
    prob: &MfgProblem,
    grid: &MfgGrid,
    sol: &MfgSolution,
    options: &SolveOptions,
) -> Result<f64> {
    let frac = grid.alpha < 1.0 - 1e-12;
    let weights = if frac {
        gl_weights(grid.alpha, grid.steps + 1)
    } else {
        Vec::new()
    };
    let dt_eff = if frac { grid.dt.powf(grid.alpha) } else { grid.dt };
    let initial = sol.density[0].clone();
    let terminal = sol.value[grid.steps].clone();
    let swept = sweep_once(
        prob,
        grid,
        dt_eff,
        &weights,
        options.history_depth,
        &initial,
        &terminal,
        &sol.density,
    )?;
    Ok(swept.residual)
}

/// A pure-strategy saddle point of a payoff matrix (rows minimize, columns
/// maximize), verified against both inequality chains.
#[derive(Debug, Clone, Copy)]
pub struct SaddlePoint {
    pub row: usize,
    pub col: usize,
    pub value: f64,
    /// True when `π(r*, c) <= π(r*, c*) <= π(r, c*)` holds for all r, c.
    pub verified: bool,
}

/// Scan all entries for a verified saddle; fall back to the minimax pair
/// (flagged unverified) when none exists.
pub fn saddle_check(payoff: &[Vec<f64>]) -> Result<SaddlePoint> {
    if payoff.is_empty() || payoff[0].is_empty() {
        return Err(Error::ShapeMismatch(
            "payoff matrix must be nonempty".into(),
        ));
    }
    let rows = payoff.len();
    let cols = payoff[0].len();
    if payoff.iter().any(|r| r.len() != cols) {
        return Err(Error::ShapeMismatch("ragged payoff matrix".into()));
    }

    for r in 0..rows {
        for c in 0..cols {
            let v = payoff[r][c];
            let col_max = payoff[r].iter().all(|&x| x <= v + 1e-12);
            let row_min = (0..rows).all(|i| payoff[i][c] >= v - 1e-12);
            if col_max && row_min {
                return Ok(SaddlePoint {
                    row: r,
                    col: c,
                    value: v,
                    verified: true,
                });
            }
        }
    }

    // minimax fallback
    let mut best = (0usize, f64::INFINITY);
    for r in 0..rows {
        let worst = payoff[r].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if worst < best.1 {
            best = (r, worst);
        }
    }
    let row = best.0;
    let col = (0..cols)
        .max_by(|&a, &b| payoff[row][a].partial_cmp(&payoff[row][b]).unwrap())
        .unwrap();
    Ok(SaddlePoint {
        row,
        col,
        value: payoff[row][col],
        verified: false,
    })
}

/// Minimum over the grid of `|V_A + V_B|`: zero flags a zero-sum degenerate
/// pair, strictly positive values witness the non-zero-sum regime.
pub fn value_sum_nonzero(value_a: &[f64], value_b: &[f64]) -> Result<f64> {
    if value_a.len() != value_b.len() || value_a.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "value fields differ in length ({} vs {})",
            value_a.len(),
            value_b.len()
        )));
    }
    Ok(value_a
        .iter()
        .zip(value_b)
        .map(|(a, b)| (a + b).abs())
        .fold(f64::INFINITY, f64::min))
}

/// Discounted accumulated squared increments of a trajectory,
/// `Σ_t e^{-ρt} |F(t+1) - F(t)|²`; small values certify a settled steady
/// state.
pub fn stability_criterion(trajectory: &[f64], rho: f64) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(Error::ShapeMismatch("empty trajectory".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::Config(format!("rho must be positive, got {rho}")));
    }
    Ok(trajectory
        .windows(2)
        .enumerate()
        .map(|(t, w)| (-rho * t as f64).exp() * (w[1] - w[0]) * (w[1] - w[0]))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1d(cells: usize, dt: f64, steps: usize, sigma: f64, alpha: f64) -> MfgGrid {
        MfgGrid::new(
            vec![Axis::new(0.0, 1.0, cells).unwrap()],
            dt,
            steps,
            sigma,
            alpha,
        )
        .unwrap()
    }

    fn no_drift() -> DriftKind {
        DriftKind::Linear {
            gain: 0.0,
            center: 0.0,
        }
    }

    fn zero_cost() -> CostSpec {
        CostSpec {
            base: 0.0,
            state_weight: 0.0,
            state_ref: 0.0,
            control_weight: 0.0,
            congestion: 0.0,
        }
    }

    fn flat_problem() -> MfgProblem {
        MfgProblem::new(no_drift(), zero_cost(), GameMode::AliceMin, vec![0.0]).unwrap()
    }

    #[test]
    fn grid_enforces_cfl_and_shape() {
        assert!(MfgGrid::new(vec![], 0.1, 5, 0.1, 1.0).is_err());
        assert!(Axis::new(0.0, 1.0, 2).is_err());
        // dx = 0.1, sigma = 1 -> bound = 0.005
        assert!(MfgGrid::new(
            vec![Axis::new(0.0, 1.0, 10).unwrap()],
            0.01,
            5,
            1.0,
            1.0
        )
        .is_err());
        assert_eq!(grid1d(10, 0.004, 5, 1.0, 1.0).ncells(), 10);
    }

    #[test]
    fn hjb_stationary_when_everything_vanishes() {
        let grid = grid1d(11, 0.01, 5, 0.0, 1.0);
        let prob = flat_problem();
        let mut state = MfgState::flat(&grid);
        state.value = (0..11).map(|i| (i as f64).sin()).collect();
        let v = hjb_backward_step(&state, &prob, &grid).unwrap();
        for (a, b) in v.iter().zip(&state.value) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn hjb_single_backup_of_constant_cost() {
        let grid = grid1d(11, 0.02, 1, 0.0, 1.0);
        let cost = CostSpec {
            base: 3.0,
            ..zero_cost()
        };
        let prob = MfgProblem::new(no_drift(), cost, GameMode::AliceMin, vec![0.0]).unwrap();
        let state = MfgState::flat(&grid);
        let v = hjb_backward_step(&state, &prob, &grid).unwrap();
        for x in v {
            assert!((x - 3.0 * 0.02).abs() < 1e-15);
        }
    }

    /// Independent dynamic-programming oracle: enumerate the discrete
    /// controls and propagate the Bellman recursion with transition
    /// probabilities built from first principles.
    fn dp_oracle(grid: &MfgGrid, prob: &MfgProblem, density: &[f64]) -> Vec<f64> {
        let n = grid.axes[0].cells;
        let dx = grid.axes[0].dx();
        let diff = 0.5 * grid.sigma * grid.sigma / (dx * dx);
        let mut v = vec![0.0; n];
        for _ in 0..grid.steps {
            let mut nv = vec![0.0; n];
            for i in 0..n {
                let z = grid.axes[0].center(i);
                let mut best = f64::INFINITY;
                for &u in &prob.controls {
                    let f = prob.drift_at(0, z, u);
                    let pu = grid.dt * (f.max(0.0) / dx + diff);
                    let pd = grid.dt * ((-f).max(0.0) / dx + diff);
                    let (up, down) = (
                        if i + 1 < n { v[i + 1] } else { v[i] },
                        if i > 0 { v[i - 1] } else { v[i] },
                    );
                    let q = prob.cost.eval(&[z], &[u], density[i] * n as f64) * grid.dt
                        + pu * up
                        + pd * down
                        + (1.0 - pu - pd) * v[i];
                    best = best.min(q);
                }
                nv[i] = best;
            }
            v = nv;
        }
        v
    }

    #[test]
    fn hjb_matches_dp_oracle() {
        let grid = grid1d(11, 0.02, 5, 0.3, 1.0);
        let cost = CostSpec {
            base: 0.0,
            state_weight: 2.0,
            state_ref: 0.3,
            control_weight: 0.5,
            congestion: 0.0,
        };
        let controls: Vec<f64> = (-4..=4).map(|i| i as f64 * 0.25).collect();
        let prob = MfgProblem::new(
            DriftKind::Linear {
                gain: 0.4,
                center: -0.1,
            },
            cost,
            GameMode::AliceMin,
            controls,
        )
        .unwrap();
        let state = MfgState::flat(&grid);
        let oracle = dp_oracle(&grid, &prob, &state.density);

        let mut value = vec![0.0; grid.ncells()];
        for _ in 0..grid.steps {
            let s = MfgState {
                value,
                density: state.density.clone(),
                control: vec![0.0; grid.ncells()],
            };
            value = hjb_backward_step(&s, &prob, &grid).unwrap();
        }
        for (a, b) in value.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn hjb_monotone_in_cost() {
        let grid = grid1d(9, 0.02, 3, 0.2, 1.0);
        let lo = CostSpec {
            base: 1.0,
            state_weight: 1.0,
            ..zero_cost()
        };
        let hi = CostSpec {
            base: 1.5,
            state_weight: 1.2,
            ..zero_cost()
        };
        let controls: Vec<f64> = (-2..=2).map(|i| i as f64 * 0.3).collect();
        let density = MfgState::flat(&grid).density;
        let mut v_lo = vec![0.0; 9];
        let mut v_hi = vec![0.0; 9];
        for _ in 0..3 {
            let s_lo = MfgState {
                value: v_lo,
                density: density.clone(),
                control: vec![0.0; 9],
            };
            let s_hi = MfgState {
                value: v_hi,
                density: density.clone(),
                control: vec![0.0; 9],
            };
            let p_lo =
                MfgProblem::new(no_drift(), lo, GameMode::AliceMin, controls.clone()).unwrap();
            let p_hi =
                MfgProblem::new(no_drift(), hi, GameMode::AliceMin, controls.clone()).unwrap();
            v_lo = hjb_backward_step(&s_lo, &p_lo, &grid).unwrap();
            v_hi = hjb_backward_step(&s_hi, &p_hi, &grid).unwrap();
        }
        for (a, b) in v_lo.iter().zip(&v_hi) {
            assert!(b >= a);
        }
    }

    #[test]
    fn fpk_identity_without_motion() {
        let grid = grid1d(16, 0.01, 5, 0.0, 1.0);
        let n = grid.ncells();
        let mut density = vec![1.0 / n as f64; n];
        density[3] += 0.2;
        density[7] += 0.05;
        let mass: f64 = density.iter().sum();
        density.iter_mut().for_each(|v| *v /= mass);
        let state = MfgState {
            value: vec![0.0; n],
            density: density.clone(),
            control: vec![0.0; n],
        };
        let next = fpk_forward_step(&state, &flat_problem(), &grid).unwrap();
        for (a, b) in next.iter().zip(&density) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn fpk_diffusion_variance_growth() {
        let sigma = 0.05f64;
        let grid = MfgGrid::new(
            vec![Axis::new(0.0, 1.0, 101).unwrap()],
            0.005,
            5,
            sigma,
            1.0,
        )
        .unwrap();
        let n = grid.ncells();
        let mut density = vec![0.0; n];
        density[n / 2] = 1.0;
        let steps = 40;
        for _ in 0..steps {
            let s = MfgState {
                value: vec![0.0; n],
                density,
                control: vec![0.0; n],
            };
            density = fpk_forward_step(&s, &flat_problem(), &grid).unwrap();
        }
        let mean: f64 = density
            .iter()
            .enumerate()
            .map(|(i, p)| p * grid.axes[0].center(i))
            .sum();
        let var: f64 = density
            .iter()
            .enumerate()
            .map(|(i, p)| p * (grid.axes[0].center(i) - mean).powi(2))
            .sum();
        let expected = sigma * sigma * grid.dt * steps as f64;
        assert!(
            (var - expected).abs() <= 0.02 * expected,
            "var {var} vs {expected}"
        );
    }

    #[test]
    fn fpk_uniform_stationary_under_diffusion() {
        let grid = grid1d(32, 0.0004, 5, 0.1, 1.0);
        let mut density = MfgState::flat(&grid).density;
        for _ in 0..100 {
            let s = MfgState {
                value: vec![0.0; 32],
                density,
                control: vec![0.0; 32],
            };
            density = fpk_forward_step(&s, &flat_problem(), &grid).unwrap();
        }
        for d in &density {
            assert!((d - 1.0 / 32.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fpk_mass_conserved_many_steps() {
        let grid = grid1d(64, 0.0001, 5, 0.08, 1.0);
        let n = grid.ncells();
        let mut density = vec![0.0; n];
        density[5] = 0.5;
        density[40] = 0.5;
        let control = vec![0.05; n];
        for _ in 0..1000 {
            let s = MfgState {
                value: vec![0.0; n],
                density: density.clone(),
                control: control.clone(),
            };
            density = fpk_forward_step(&s, &flat_problem(), &grid).unwrap();
        }
        let mass: f64 = density.iter().sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(density.iter().all(|d| *d >= 0.0));
    }

    #[test]
    fn fpk_rejects_cfl_violation() {
        let grid = grid1d(10, 0.05, 5, 0.0, 1.0);
        let n = grid.ncells();
        let state = MfgState {
            value: vec![0.0; n],
            density: vec![1.0 / n as f64; n],
            control: vec![5.0; n], // outflow 0.05*5/0.1 = 2.5 > 1
        };
        assert!(matches!(
            fpk_forward_step(&state, &flat_problem(), &grid),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn solve_trivial_cost_converges_immediately() {
        let grid = grid1d(11, 0.01, 8, 0.0, 1.0);
        let prob = flat_problem();
        let sol = solve_mfg(&prob, &grid, 1e-9, 50, &SolveOptions::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.sweeps, 1);
        for v in &sol.value[0] {
            assert_eq!(*v, 0.0);
        }
        for (a, b) in sol.density[grid.steps].iter().zip(&sol.density[0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn solve_fixed_point_is_stable_under_resweep() {
        let grid = grid1d(15, 0.01, 10, 0.1, 1.0);
        let cost = CostSpec {
            base: 0.0,
            state_weight: 1.0,
            state_ref: 0.4,
            control_weight: 0.5,
            congestion: 0.2,
        };
        let controls: Vec<f64> = (-3..=3).map(|i| i as f64 * 0.2).collect();
        let prob = MfgProblem::new(
            DriftKind::Saturating {
                gain: 0.1,
                center: -0.2,
            },
            cost,
            GameMode::AliceMin,
            controls,
        )
        .unwrap();
        let tol = 1e-8;
        let sol = solve_mfg(&prob, &grid, tol, 400, &SolveOptions::default()).unwrap();
        assert!(sol.converged, "residuals {:?}", sol.residuals.last());

        // one extra sweep from the converged path must not move it
        let res = fixed_point_residual(&prob, &grid, &sol, &SolveOptions::default()).unwrap();
        assert!(res < 100.0 * tol, "fixed point moved by {res}");
        assert!(sol.final_mismatch < 100.0 * tol);
    }

    #[test]
    fn fractional_memory_depth_matters_only_below_one() {
        let cost = CostSpec {
            base: 0.0,
            state_weight: 1.0,
            state_ref: 0.3,
            control_weight: 0.1,
            congestion: 0.2,
        };
        let controls: Vec<f64> = (-2..=2).map(|i| i as f64 * 0.25).collect();
        let prob = MfgProblem::new(no_drift(), cost, GameMode::AliceMin, controls).unwrap();
        let trunc_opts = SolveOptions {
            history_depth: 3,
            ..SolveOptions::default()
        };

        let grid_a = grid1d(15, 0.01, 30, 0.1, 0.8);
        let full = solve_mfg(&prob, &grid_a, 1e-9, 3, &SolveOptions::default()).unwrap();
        let trunc = solve_mfg(&prob, &grid_a, 1e-9, 3, &trunc_opts).unwrap();
        let diff: f64 = full.density[grid_a.steps]
            .iter()
            .zip(&trunc.density[grid_a.steps])
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(diff > 1e-9, "fractional truncation had no effect: {diff}");

        let grid_b = grid1d(15, 0.01, 30, 0.1, 1.0);
        let full1 = solve_mfg(&prob, &grid_b, 1e-9, 3, &SolveOptions::default()).unwrap();
        let trunc1 = solve_mfg(&prob, &grid_b, 1e-9, 3, &trunc_opts).unwrap();
        let diff1: f64 = full1.density[grid_b.steps]
            .iter()
            .zip(&trunc1.density[grid_b.steps])
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(diff1 < 1e-15, "integer order must ignore truncation: {diff1}");
    }

    #[test]
    fn saddle_separable_quadratic() {
        // π(a, b) = a² - b² on a symmetric grid: saddle at (0, 0)
        let axis: Vec<f64> = (-2..=2).map(|i| i as f64).collect();
        let payoff: Vec<Vec<f64>> = axis
            .iter()
            .map(|a| axis.iter().map(|b| a * a - b * b).collect())
            .collect();
        let s = saddle_check(&payoff).unwrap();
        assert!(s.verified);
        assert_eq!((s.row, s.col), (2, 2));
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn saddle_constant_everywhere() {
        let payoff = vec![vec![1.5; 4]; 3];
        let s = saddle_check(&payoff).unwrap();
        assert!(s.verified);
        assert_eq!(s.value, 1.5);
    }

    #[test]
    fn saddle_agrees_with_enumeration_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let payoff: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let s = saddle_check(&payoff).unwrap();
            // oracle: exhaustive scan with independent comparisons
            let mut found = None;
            for r in 0..5 {
                for c in 0..5 {
                    let v: f64 = payoff[r][c];
                    let mut ok = true;
                    for cc in 0..5 {
                        if payoff[r][cc] > v + 1e-12 {
                            ok = false;
                        }
                    }
                    for rr in 0..5 {
                        if payoff[rr][c] < v - 1e-12 {
                            ok = false;
                        }
                    }
                    if ok && found.is_none() {
                        found = Some((r, c));
                    }
                }
            }
            match found {
                Some(pair) => {
                    assert!(s.verified);
                    assert_eq!((s.row, s.col), pair);
                }
                None => assert!(!s.verified),
            }
        }
    }

    #[test]
    fn value_sum_detects_zero_sum_pairs() {
        let a = vec![1.0, -0.5, 2.0];
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert_eq!(value_sum_nonzero(&a, &neg).unwrap(), 0.0);
        let ones = vec![1.0; 3];
        assert_eq!(value_sum_nonzero(&ones, &ones).unwrap(), 2.0);
        assert!(value_sum_nonzero(&a, &[1.0]).is_err());
    }

    #[test]
    fn solved_min_max_pair_is_nonzero_sum() {
        use rand::{Rng, SeedableRng};
        // the minimizing and maximizing players of the same instance do not
        // cancel: min |V_A + V_B| stays strictly positive across seeds
        let cost = CostSpec {
            base: 0.1,
            state_weight: 1.0,
            state_ref: 0.4,
            control_weight: 0.3,
            congestion: 0.0,
        };
        let controls: Vec<f64> = (-2..=2).map(|i| i as f64 * 0.2).collect();
        for seed in 0..10u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let grid = grid1d(15, 0.01, 10, 0.1, 1.0);
            let n = grid.ncells();
            let center: f64 = rng.gen_range(0.3..0.7);
            let raw: Vec<f64> = (0..n)
                .map(|i| (-(grid.coords(i)[0] - center).powi(2) / 0.02).exp())
                .collect();
            let total: f64 = raw.iter().sum();
            let opts = SolveOptions {
                initial_density: Some(raw.iter().map(|v| v / total).collect()),
                ..SolveOptions::default()
            };
            let drift = DriftKind::Saturating {
                gain: 0.05,
                center: -0.2,
            };
            let lo = MfgProblem::new(drift, cost, GameMode::AliceMin, controls.clone()).unwrap();
            let hi = MfgProblem::new(drift, cost, GameMode::BobMax, controls.clone()).unwrap();
            let sol_a = solve_mfg(&lo, &grid, 1e-6, 200, &opts).unwrap();
            let sol_b = solve_mfg(&hi, &grid, 1e-6, 200, &opts).unwrap();
            let gap = value_sum_nonzero(&sol_a.value[0], &sol_b.value[0]).unwrap();
            assert!(gap > 1e-6, "seed {seed}: |V_A + V_B| min = {gap}");
        }
    }

    #[test]
    fn stability_of_constant_and_linear_series() {
        assert_eq!(stability_criterion(&[2.0; 50], 0.7).unwrap(), 0.0);

        // F(t) = t, rho = 1: Σ_{t=0}^{n-2} e^{-t}; frozen 50-digit value
        let traj: Vec<f64> = (0..200).map(|t| t as f64).collect();
        let got = stability_criterion(&traj, 1.0).unwrap();
        assert!((got - 1.581_976_706_869_326_4).abs() < 1e-9);

        assert!(stability_criterion(&[], 1.0).is_err());
        assert!(stability_criterion(&[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn joint_minimax_mode_runs_on_two_axes() {
        let grid = MfgGrid::new(
            vec![
                Axis::new(0.0, 1.0, 7).unwrap(),
                Axis::new(0.0, 1.0, 7).unwrap(),
            ],
            0.01,
            4,
            0.1,
            1.0,
        )
        .unwrap();
        let cost = CostSpec {
            base: 0.0,
            state_weight: 1.0,
            state_ref: 0.5,
            control_weight: 0.3,
            congestion: 0.0,
        };
        let prob = MfgProblem::new(
            DriftKind::Saturating {
                gain: 0.05,
                center: -0.5,
            },
            cost,
            GameMode::JointMinimax,
            vec![-0.2, 0.0, 0.2],
        )
        .unwrap();
        let sol = solve_mfg(&prob, &grid, 1e-7, 200, &SolveOptions::default()).unwrap();
        assert!(sol.converged);
        let mass: f64 = sol.density[grid.steps].iter().sum();
        assert!((mass - 1.0).abs() < 1e-9);
    }
}
