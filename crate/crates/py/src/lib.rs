//! Python bindings over the solver library.
//!
//! Exposes the information measures, the channel-design solvers, the
//! fractional-calculus operators, the bankruptcy allocation, the nested-game
//! solvers, simplex clustering, and an oscillator-network class. Build the
//! cdylib and rename `libinfogame.so` to `infogame.so` (see
//! `python/run_smoke.sh`), then `import infogame`.

use infogame_core as core;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand_chacha::rand_core::SeedableRng;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Shannon entropy in bits of a probability vector.
#[pyfunction]
fn entropy(probs: Vec<f64>) -> PyResult<f64> {
    let p = core::prob::Pmf::new(probs).map_err(err)?;
    Ok(core::prob::entropy(&p))
}

/// Mutual information in bits of a joint probability matrix.
#[pyfunction]
fn mutual_information(joint: Vec<Vec<f64>>) -> PyResult<f64> {
    let j = core::prob::JointPmf::new(joint).map_err(err)?;
    Ok(core::prob::mutual_information(&j))
}

/// KL divergence in bits between two probability vectors.
#[pyfunction]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    let p = core::prob::Pmf::new(p).map_err(err)?;
    let q = core::prob::Pmf::new(q).map_err(err)?;
    core::prob::kl_divergence(&p, &q).map_err(err)
}

/// Gamma function for positive arguments.
#[pyfunction]
fn gamma(x: f64) -> PyResult<f64> {
    core::frac::gamma_fn(x).map_err(err)
}

/// Fractional derivative of a uniformly sampled signal; returns `n-1`
/// values, the forward difference at order one.
#[pyfunction]
fn frac_derivative(samples: Vec<f64>, dt: f64, alpha: f64) -> PyResult<Vec<f64>> {
    let sig = core::frac::FracSignal::new(samples, dt, alpha).map_err(err)?;
    core::frac::frac_derivative(&sig).map_err(err)
}

fn solution_dict(py: Python<'_>, sol: &core::funnel::FunnelSolution) -> PyResult<Py<PyDict>> {
    let d = PyDict::new(py);
    d.set_item("leakage", sol.leakage)?;
    d.set_item("utility", sol.utility)?;
    d.set_item("iterations", sol.iterations)?;
    d.set_item("converged", sol.converged)?;
    let channel: Vec<Vec<f64>> = sol.channel.rows().map(|r| r.to_vec()).collect();
    d.set_item("channel", channel)?;
    Ok(d.into())
}

/// Design a leakage-minimizing channel: minimize I(S;Y) over P(Y|X) subject
/// to I(X;Y) >= rate. `joint` is p(s,x) with S on rows.
#[pyfunction]
#[pyo3(signature = (joint, y_size, rate, seed = 0, tol = 1e-6, max_iter = 20_000))]
fn solve_funnel(
    py: Python<'_>,
    joint: Vec<Vec<f64>>,
    y_size: usize,
    rate: f64,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> PyResult<Py<PyDict>> {
    let j = core::prob::JointPmf::new(joint).map_err(err)?;
    let prob = core::funnel::FunnelProblem::new(j, y_size, core::funnel::UtilityMode::MinRate(rate))
        .map_err(err)?;
    let sol = core::funnel::solve_funnel(&prob, core::funnel::Init::Seed(seed), tol, max_iter)
        .map_err(err)?;
    solution_dict(py, &sol)
}

/// Greedy steepest-descent baseline for the same problem.
#[pyfunction]
#[pyo3(signature = (joint, y_size, rate, tol = 1e-6, max_iter = 50_000))]
fn greedy_baseline(
    py: Python<'_>,
    joint: Vec<Vec<f64>>,
    y_size: usize,
    rate: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<Py<PyDict>> {
    let j = core::prob::JointPmf::new(joint).map_err(err)?;
    let prob = core::funnel::FunnelProblem::new(j, y_size, core::funnel::UtilityMode::MinRate(rate))
        .map_err(err)?;
    let sol = core::funnel::greedy_baseline(&prob, tol, max_iter).map_err(err)?;
    solution_dict(py, &sol)
}

/// Shapley allocation of an estate over claims; returns payoffs and the
/// per-player rights bounds.
#[pyfunction]
fn shapley(py: Python<'_>, estate: f64, claims: Vec<f64>) -> PyResult<Py<PyDict>> {
    let inst = core::bankruptcy::BankruptcyInstance::new(estate, claims).map_err(err)?;
    let alloc = core::bankruptcy::shapley(&inst);
    let d = PyDict::new(py);
    d.set_item("payoffs", alloc.payoffs)?;
    d.set_item("min_rights", alloc.min_rights)?;
    d.set_item("max_rights", alloc.max_rights)?;
    Ok(d.into())
}

/// Coalition worth under the bankruptcy characteristic function.
#[pyfunction]
fn coalition_worth(estate: f64, claims: Vec<f64>, coalition: Vec<usize>) -> PyResult<f64> {
    let inst = core::bankruptcy::BankruptcyInstance::new(estate, claims).map_err(err)?;
    inst.psi(&coalition).map_err(err)
}

/// Fuzzy KL clustering of probability vectors; returns memberships, centers,
/// and the objective trace.
#[pyfunction]
#[pyo3(signature = (data, clusters, fuzzifier = 2.0, tol = 1e-9, max_iter = 300, seed = 0))]
fn fuzzy_fit(
    py: Python<'_>,
    data: Vec<Vec<f64>>,
    clusters: usize,
    fuzzifier: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let pmfs: Vec<core::prob::Pmf> = data
        .into_iter()
        .map(core::prob::Pmf::new)
        .collect::<core::Result<_>>()
        .map_err(err)?;
    let inst = core::fuzzy::FuzzyInstance::new(pmfs, clusters, fuzzifier).map_err(err)?;
    let outcome = core::fuzzy::fit(&inst, tol, max_iter, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("memberships", outcome.state.memberships)?;
    let centers: Vec<Vec<f64>> = outcome
        .state
        .centers
        .iter()
        .map(|c| c.probs().to_vec())
        .collect();
    d.set_item("centers", centers)?;
    d.set_item("objective", outcome.objective)?;
    d.set_item("trace", outcome.trace)?;
    d.set_item("converged", outcome.converged)?;
    Ok(d.into())
}

/// One fixed-point solve of the pinned fractional-order comparison instance;
/// returns sweeps, convergence, and the final density.
#[pyfunction]
#[pyo3(signature = (alpha, seed = 0, cells = 21, steps = 30, tol = 2e-3, max_sweeps = 300))]
fn solve_mfg(
    py: Python<'_>,
    alpha: f64,
    seed: u64,
    cells: usize,
    steps: usize,
    tol: f64,
    max_sweeps: usize,
) -> PyResult<Py<PyDict>> {
    let grid = core::mfg::MfgGrid::new(
        vec![core::mfg::Axis::new(0.0, 1.0, cells).map_err(err)?],
        0.01,
        steps,
        0.1,
        alpha,
    )
    .map_err(err)?;
    let prob = core::mfg::MfgProblem::new(
        core::mfg::DriftKind::Saturating {
            gain: 0.08,
            center: -0.2,
        },
        core::mfg::CostSpec {
            base: 0.0,
            state_weight: 1.0,
            state_ref: 0.35,
            control_weight: 0.3,
            congestion: 0.15,
        },
        core::mfg::GameMode::AliceMin,
        vec![-0.4, -0.2, 0.0, 0.2, 0.4],
    )
    .map_err(err)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    use rand::Rng;
    let center: f64 = rng.gen_range(0.2..0.8);
    let raw: Vec<f64> = (0..cells)
        .map(|i| {
            let z = (i as f64 + 0.5) / cells as f64;
            (-(z - center) * (z - center) / 0.02).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let opts = core::mfg::SolveOptions {
        initial_density: Some(raw.iter().map(|v| v / total).collect()),
        ..core::mfg::SolveOptions::default()
    };
    let sol = core::mfg::solve_mfg(&prob, &grid, tol, max_sweeps, &opts).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("sweeps", sol.sweeps)?;
    d.set_item("converged", sol.converged)?;
    d.set_item("value_start", sol.value[0].clone())?;
    d.set_item("density_final", sol.density[steps].clone())?;
    Ok(d.into())
}

fn nested_config(
    k_b: usize,
    horizon: usize,
    players: usize,
    coalition: usize,
    lambda: f64,
    seed: u64,
) -> PyResult<(core::nested::NestedConfig, core::bankruptcy::BankruptcyInstance)> {
    let mut cfg =
        core::nested::NestedConfig::new(k_b, horizon, players, coalition, lambda).map_err(err)?;
    cfg.seed = seed;
    cfg.tol = 5e-3;
    cfg.max_iter = 400;
    let claims: Vec<f64> = (0..coalition).map(|i| 10.0 + (i % 7) as f64).collect();
    let inst = core::bankruptcy::BankruptcyInstance::new(0.7 * claims.iter().sum::<f64>(), claims)
        .map_err(err)?;
    Ok((cfg, inst))
}

/// Bi-level nested solve; returns iterations, convergence, and the residual
/// trace.
#[pyfunction]
#[pyo3(signature = (lambda_rate, seed = 0, k_b = 6, horizon = 60, players = 9, coalition = 5))]
fn solve_bilevel(
    py: Python<'_>,
    lambda_rate: f64,
    seed: u64,
    k_b: usize,
    horizon: usize,
    players: usize,
    coalition: usize,
) -> PyResult<Py<PyDict>> {
    let (cfg, inst) = nested_config(k_b, horizon, players, coalition, lambda_rate, seed)?;
    let (_, stats) = core::nested::solve_bilevel_admm(&cfg, &inst).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("iterations", stats.iterations)?;
    d.set_item("converged", stats.converged)?;
    d.set_item("residuals", stats.residuals)?;
    Ok(d.into())
}

/// Tri-level nested solve with phase-gated consensus.
#[pyfunction]
#[pyo3(signature = (lambda_rate, seed = 0, coupling = 1.5, k_b = 6, horizon = 60, players = 9, coalition = 5))]
#[allow(clippy::too_many_arguments)]
fn solve_trilevel(
    py: Python<'_>,
    lambda_rate: f64,
    seed: u64,
    coupling: f64,
    k_b: usize,
    horizon: usize,
    players: usize,
    coalition: usize,
) -> PyResult<Py<PyDict>> {
    let (cfg, inst) = nested_config(k_b, horizon, players, coalition, lambda_rate, seed)?;
    let (_, phase, stats) =
        core::nested::solve_trilevel_kuramoto(&cfg, &inst, coupling).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("iterations", stats.iterations)?;
    d.set_item("converged", stats.converged)?;
    d.set_item("residuals", stats.residuals)?;
    d.set_item("sync_utility", phase.sync_utility)?;
    Ok(d.into())
}

/// Coupled phase-oscillator network with RK4 stepping.
#[pyclass]
struct KuramotoNetwork {
    state: core::kuramoto::OscillatorState,
}

#[pymethods]
impl KuramotoNetwork {
    #[new]
    fn new(phases: Vec<f64>, omegas: Vec<f64>, coupling: f64) -> PyResult<Self> {
        Ok(Self {
            state: core::kuramoto::OscillatorState::new(phases, omegas, coupling).map_err(err)?,
        })
    }

    /// Advance `steps` RK4 steps of size `dt`.
    #[pyo3(signature = (dt, steps = 1))]
    fn step(&mut self, dt: f64, steps: usize) -> PyResult<()> {
        for _ in 0..steps {
            self.state = self.state.step(dt).map_err(err)?;
        }
        Ok(())
    }

    /// Wrapped phases in [0, 2π).
    fn phases(&self) -> Vec<f64> {
        self.state.phases.clone()
    }

    /// Unwrapped phases (drift diagnostics).
    fn unwrapped(&self) -> Vec<f64> {
        self.state.unwrapped.clone()
    }

    /// Coherence `(r, psi)`.
    fn order_parameter(&self) -> (f64, f64) {
        core::kuramoto::order_parameter(&self.state)
    }
}

#[pymodule]
fn infogame(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(frac_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(solve_funnel, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(shapley, m)?)?;
    m.add_function(wrap_pyfunction!(coalition_worth, m)?)?;
    m.add_function(wrap_pyfunction!(fuzzy_fit, m)?)?;
    m.add_function(wrap_pyfunction!(solve_mfg, m)?)?;
    m.add_function(wrap_pyfunction!(solve_bilevel, m)?)?;
    m.add_function(wrap_pyfunction!(solve_trilevel, m)?)?;
    m.add_class::<KuramotoNetwork>()?;
    Ok(())
}
