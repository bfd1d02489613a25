//! The figure pipelines behind each CLI subcommand.
//!
//! Every pipeline takes explicit options, writes its CSV artifacts into the
//! output directory, and returns the manifest of written files. All
//! randomness flows from the run seed through counter-based generators, so a
//! rerun with the same options is byte-identical.

use crate::bernoulli::{gen_bernoulli_source, write_samples};
use crate::manifest::Manifest;
use infogame_core::bankruptcy::{shapley, validate_allocation, BankruptcyInstance};
use infogame_core::funnel::{
    binary_instance, greedy_baseline, solve_funnel, tradeoff_sweep, FunnelProblem, FunnelSolution,
    Init, UtilityMode,
};
use infogame_core::fuzzy::{fit, FuzzyInstance};
use infogame_core::io::{fmt_f64, write_csv, write_matrix};
use infogame_core::kuramoto::{order_parameter, OscillatorState};
use infogame_core::mfg::{
    solve_mfg, stability_criterion, Axis, CostSpec, DriftKind, GameMode, MfgGrid, MfgProblem,
    SolveOptions,
};
use infogame_core::nested::{
    fit_complexity, iteration_cdf, solve_bilevel_admm, solve_trilevel_kuramoto, NestedConfig,
};
use infogame_core::prob::{entropy, mutual_information, Channel, JointPmf, Pmf};
use infogame_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Seeded two-symbol instance family used by the funnel pipelines: a biased
/// binary source passed through a seeded-noise flip, with a rate bound drawn
/// as a fraction of the signal entropy.
pub fn seeded_binary_problem(trial: u64, base_seed: u64) -> (JointPmf, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(trial));
    let p = rng.gen_range(0.2..0.8);
    let flip = rng.gen_range(0.05..0.3);
    let joint = binary_instance(p, flip).expect("parameters in range");
    let h_x = entropy(&joint.col_marginal());
    let rate = rng.gen_range(0.2..0.9) * h_x;
    (joint, rate)
}

/// Exhaustive 2x2 channel grid at the benchmark step: the oracle optimum for
/// a rate-mode binary instance.
pub fn grid_oracle_leakage(joint: &JointPmf, rate: f64, step: f64) -> f64 {
    let n = (1.0 / step).round() as usize;
    let px = joint.col_marginal();
    let mut best = f64::INFINITY;
    for ai in 0..=n {
        for bi in 0..=n {
            let a = ai as f64 * step;
            let b = bi as f64 * step;
            let ch = Channel::new(vec![vec![a, 1.0 - a], vec![b, 1.0 - b]]).expect("stochastic");
            let util = mutual_information(
                &JointPmf::from_marginal_and_channel(&px, &ch).expect("shapes"),
            );
            if util >= rate - 1e-12 {
                let leak = mutual_information(
                    &infogame_core::prob::compose_markov(joint, &ch).expect("shapes"),
                );
                best = best.min(leak);
            }
        }
    }
    best
}

/// Pinned configuration of the fractional-order comparison runs: the
/// fixed-point solver is run on one seeded family of initial densities at
/// each order in the sweep.
pub struct MfgSweepSpec {
    pub cells: usize,
    pub dt: f64,
    pub steps: usize,
    pub sigma: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for MfgSweepSpec {
    fn default() -> Self {
        Self {
            cells: 21,
            dt: 0.01,
            steps: 30,
            sigma: 0.1,
            tol: 2e-3,
            max_sweeps: 300,
        }
    }
}

fn seeded_bump(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let center = rng.gen_range(0.2..0.8);
    let width = 0.1;
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let z = (i as f64 + 0.5) / n as f64;
            (-(z - center) * (z - center) / (2.0 * width * width)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// One fractional-order solver run of the pinned comparison instance.
pub fn mfg_comparison_run(spec: &MfgSweepSpec, alpha: f64, seed: u64) -> Result<(usize, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = MfgGrid::new(
        vec![Axis::new(0.0, 1.0, spec.cells)?],
        spec.dt,
        spec.steps,
        spec.sigma,
        alpha,
    )?;
    let cost = CostSpec {
        base: 0.0,
        state_weight: 1.0,
        state_ref: 0.35,
        control_weight: 0.3,
        congestion: 0.15,
    };
    let prob = MfgProblem::new(
        DriftKind::Saturating {
            gain: 0.08,
            center: -0.2,
        },
        cost,
        GameMode::AliceMin,
        vec![-0.4, -0.2, 0.0, 0.2, 0.4],
    )?;
    let opts = SolveOptions {
        initial_density: Some(seeded_bump(spec.cells, &mut rng)),
        ..SolveOptions::default()
    };
    let sol = solve_mfg(&prob, &grid, spec.tol, spec.max_sweeps, &opts)?;
    Ok((sol.sweeps, sol.converged))
}

pub struct FunnelOptions {
    pub out: PathBuf,
    pub seed: u64,
    pub seeds: usize,
    pub alphas: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// When set, instances come from sampled sources of this size instead of
    /// the analytic joints.
    pub sample_n: Option<usize>,
}

/// Leakage-design comparison pipeline: iteration CDFs of the alternating
/// solver vs the greedy baseline (plus the fractional-order solver sweep),
/// the leakage/utility trade-off curve, and excess-leakage loss traces.
pub fn run_funnel(opts: &FunnelOptions) -> Result<Manifest> {
    ensure_dir(&opts.out)?;
    let mut manifest = Manifest::new();

    let mut solver_runs: Vec<(FunnelSolution, f64)> = Vec::new();
    let mut greedy_runs: Vec<(FunnelSolution, f64)> = Vec::new();
    for trial in 0..opts.seeds as u64 {
        let (joint, rate) = match opts.sample_n {
            None => seeded_binary_problem(trial, opts.seed),
            Some(n) => {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(trial));
                let p = rng.gen_range(0.2..0.8);
                let flip = rng.gen_range(0.05..0.3);
                let (samples, joint) =
                    gen_bernoulli_source(p, flip, n, opts.seed.wrapping_add(trial))?;
                if trial == 0 {
                    let path = opts.out.join("samples.csv");
                    write_samples(&path, &samples)?;
                    manifest.record(path);
                }
                let h_x = entropy(&joint.col_marginal());
                let rate = rng.gen_range(0.2..0.9) * h_x;
                (joint, rate)
            }
        };
        let oracle = grid_oracle_leakage(&joint, rate, 0.005);
        let prob = FunnelProblem::new(joint, 2, UtilityMode::MinRate(rate))?;
        let sol = solve_funnel(&prob, Init::Seed(trial), opts.tol, opts.max_iter)?;
        let greedy = greedy_baseline(&prob, opts.tol, opts.max_iter)?;
        solver_runs.push((sol, oracle));
        greedy_runs.push((greedy, oracle));
    }

    // fig1a: iteration CDFs per algorithm (and per order for the
    // fixed-point solver)
    let mut rows: Vec<Vec<String>> = Vec::new();
    let push_cdf = |rows: &mut Vec<Vec<String>>, algorithm: &str, alpha: &str, runs: &[usize]| {
        for (value, p) in iteration_cdf(runs) {
            rows.push(vec![
                algorithm.to_string(),
                alpha.to_string(),
                value.to_string(),
                fmt_f64(p),
            ]);
        }
    };
    let solver_its: Vec<usize> = solver_runs.iter().map(|(s, _)| s.iterations).collect();
    let greedy_its: Vec<usize> = greedy_runs.iter().map(|(s, _)| s.iterations).collect();
    push_cdf(&mut rows, "alternating", "na", &solver_its);
    push_cdf(&mut rows, "greedy", "na", &greedy_its);
    let spec = MfgSweepSpec::default();
    for &alpha in &opts.alphas {
        let mut sweeps = Vec::with_capacity(opts.seeds);
        for trial in 0..opts.seeds as u64 {
            let (s, _) = mfg_comparison_run(&spec, alpha, opts.seed.wrapping_add(trial))?;
            sweeps.push(s);
        }
        push_cdf(&mut rows, "mfg-fixed-point", &fmt_f64(alpha), &sweeps);
    }
    let fig1a = opts.out.join("fig1a.csv");
    write_csv(&fig1a, &["algorithm", "alpha", "iterations", "cdf"], &rows)?;
    manifest.record(fig1a);

    // fig1b: leakage vs normalized utility bound on the first instance
    let (joint, _) = seeded_binary_problem(0, opts.seed);
    let h_x = entropy(&joint.col_marginal());
    let bounds: Vec<f64> = (0..10).map(|i| h_x * i as f64 / 9.0).collect();
    let sweep = tradeoff_sweep(&joint, 2, &bounds, opts.tol, opts.max_iter, opts.seed)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for point in &sweep {
        rows.push(vec![
            "alternating".into(),
            fmt_f64(point.bound),
            fmt_f64(point.bound / h_x),
            fmt_f64(point.leakage),
            fmt_f64(point.utility),
            point.error.clone().unwrap_or_default(),
        ]);
    }
    for &bound in &bounds {
        let prob = FunnelProblem::new(joint.clone(), 2, UtilityMode::MinRate(bound))?;
        match greedy_baseline(&prob, opts.tol, opts.max_iter) {
            Ok(sol) => rows.push(vec![
                "greedy".into(),
                fmt_f64(bound),
                fmt_f64(bound / h_x),
                fmt_f64(sol.leakage),
                fmt_f64(sol.utility),
                String::new(),
            ]),
            Err(e) => rows.push(vec![
                "greedy".into(),
                fmt_f64(bound),
                fmt_f64(bound / h_x),
                String::new(),
                String::new(),
                e.to_string(),
            ]),
        }
    }
    let fig1b = opts.out.join("fig1b.csv");
    write_csv(
        &fig1b,
        &[
            "algorithm",
            "bound_bits",
            "bound_norm",
            "leakage_bits",
            "utility_bits",
            "error",
        ],
        &rows,
    )?;
    manifest.record(fig1b);

    // per-iteration operating-point trace of the first instance
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (name, runs) in [("alternating", &solver_runs), ("greedy", &greedy_runs)] {
        if let Some((sol, _)) = runs.first() {
            for (i, (leak, util)) in sol.trace.iter().enumerate() {
                rows.push(vec![
                    name.to_string(),
                    i.to_string(),
                    fmt_f64(*leak),
                    fmt_f64(*util),
                ]);
            }
        }
    }
    let trace = opts.out.join("trace.csv");
    write_csv(
        &trace,
        &["algorithm", "iter", "leakage_bits", "utility_bits"],
        &rows,
    )?;
    manifest.record(trace);

    // fig1c: relative excess leakage over the grid oracle vs normalized
    // iteration, averaged over instances at a fixed normalized grid
    let fig1c = opts.out.join("fig1c.csv");
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (name, runs) in [("alternating", &solver_runs), ("greedy", &greedy_runs)] {
        for step in 0..=20 {
            let frac = step as f64 / 20.0;
            let mut loss_sum = 0.0;
            let mut count = 0.0;
            for (sol, oracle) in runs.iter() {
                if sol.trace.is_empty() || *oracle <= 0.0 {
                    continue;
                }
                let idx = ((sol.trace.len() - 1) as f64 * frac).round() as usize;
                let leak = sol.trace[idx].0;
                loss_sum += 100.0 * (leak - oracle).max(0.0) / oracle;
                count += 1.0;
            }
            if count > 0.0 {
                rows.push(vec![
                    name.to_string(),
                    fmt_f64(frac),
                    fmt_f64(loss_sum / count),
                ]);
            }
        }
    }
    write_csv(&fig1c, &["algorithm", "iter_norm", "loss_pct"], &rows)?;
    manifest.record(fig1c);

    let path = manifest.write(&opts.out)?;
    manifest.record(path);
    Ok(manifest)
}

pub struct MfgOptions {
    pub out: PathBuf,
    pub seed: u64,
    pub seeds: usize,
    pub alphas: Vec<f64>,
    pub cells: usize,
    pub tol: f64,
    pub max_sweeps: usize,
}

/// Fixed-point solver pipeline: per-order iteration CDFs, convergence traces
/// and fields of the first run, plus the steady-state diagnostic of the mean
/// trajectory.
pub fn run_mfg(opts: &MfgOptions) -> Result<Manifest> {
    ensure_dir(&opts.out)?;
    let mut manifest = Manifest::new();
    let spec = MfgSweepSpec {
        cells: opts.cells,
        tol: opts.tol,
        max_sweeps: opts.max_sweeps,
        ..MfgSweepSpec::default()
    };

    let mut cdf_rows: Vec<Vec<String>> = Vec::new();
    let mut diag_rows: Vec<Vec<String>> = Vec::new();
    for &alpha in &opts.alphas {
        let mut sweeps = Vec::with_capacity(opts.seeds);
        for trial in 0..opts.seeds as u64 {
            let seed = opts.seed.wrapping_add(trial);
            let (s, converged) = mfg_comparison_run(&spec, alpha, seed)?;
            sweeps.push(s);

            if trial == 0 {
                // full artifacts for the first run of each order
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let grid = MfgGrid::new(
                    vec![Axis::new(0.0, 1.0, spec.cells)?],
                    spec.dt,
                    spec.steps,
                    spec.sigma,
                    alpha,
                )?;
                let cost = CostSpec {
                    base: 0.0,
                    state_weight: 1.0,
                    state_ref: 0.35,
                    control_weight: 0.3,
                    congestion: 0.15,
                };
                let prob = MfgProblem::new(
                    DriftKind::Saturating {
                        gain: 0.08,
                        center: -0.2,
                    },
                    cost,
                    GameMode::AliceMin,
                    vec![-0.4, -0.2, 0.0, 0.2, 0.4],
                )?;
                let solve_opts = SolveOptions {
                    initial_density: Some(seeded_bump(spec.cells, &mut rng)),
                    ..SolveOptions::default()
                };
                let sol = solve_mfg(&prob, &grid, spec.tol, spec.max_sweeps, &solve_opts)?;

                let tag = format!("alpha{alpha}");
                let value = opts.out.join(format!("value_{tag}.csv"));
                write_matrix(&value, &sol.value)?;
                manifest.record(value);
                let density = opts.out.join(format!("density_{tag}.csv"));
                write_matrix(&density, &sol.density)?;
                manifest.record(density);
                let residuals = opts.out.join(format!("residuals_{tag}.csv"));
                write_csv(
                    &residuals,
                    &["sweep", "residual"],
                    &sol.residuals
                        .iter()
                        .enumerate()
                        .map(|(i, r)| vec![(i + 1).to_string(), fmt_f64(*r)])
                        .collect::<Vec<_>>(),
                )?;
                manifest.record(residuals);

                let mean_traj = sol.mean_trajectory(&grid);
                let steady = stability_criterion(&mean_traj, 1.0)?;
                diag_rows.push(vec![
                    fmt_f64(alpha),
                    seed.to_string(),
                    sol.sweeps.to_string(),
                    converged.to_string(),
                    fmt_f64(steady),
                ]);
            }
        }
        for (value, p) in iteration_cdf(&sweeps) {
            cdf_rows.push(vec![fmt_f64(alpha), value.to_string(), fmt_f64(p)]);
        }
    }

    let cdf = opts.out.join("mfg_cdf.csv");
    write_csv(&cdf, &["alpha", "sweeps", "cdf"], &cdf_rows)?;
    manifest.record(cdf);
    let diag = opts.out.join("diagnostics.csv");
    write_csv(
        &diag,
        &["alpha", "seed", "sweeps", "converged", "steady_state"],
        &diag_rows,
    )?;
    manifest.record(diag);

    let path = manifest.write(&opts.out)?;
    manifest.record(path);
    Ok(manifest)
}

pub struct BankruptcyOptions {
    pub out: PathBuf,
    pub estate: f64,
    pub claims: Vec<f64>,
    /// Instance CSV (first data row the estate, second the claims); wins
    /// over the inline parameters when set.
    pub instance: Option<PathBuf>,
}

/// Load an instance from its CSV form: first data row the estate, second
/// the claims.
pub fn load_bankruptcy_instance<P: AsRef<Path>>(path: P) -> Result<BankruptcyInstance> {
    let rows = infogame_core::io::read_matrix(&path)?;
    if rows.len() < 2 || rows[0].is_empty() {
        return Err(Error::Parse(format!(
            "{}: expected an estate row followed by a claims row",
            path.as_ref().display()
        )));
    }
    BankruptcyInstance::new(rows[0][0], rows[1].clone())
}

/// Single-instance allocation pipeline.
pub fn run_bankruptcy(opts: &BankruptcyOptions) -> Result<Manifest> {
    ensure_dir(&opts.out)?;
    let mut manifest = Manifest::new();
    let inst = match &opts.instance {
        Some(path) => load_bankruptcy_instance(path)?,
        None => BankruptcyInstance::new(opts.estate, opts.claims.clone())?,
    };
    let alloc = shapley(&inst);
    let report = validate_allocation(&inst, &alloc.payoffs)?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, payoff) in alloc.payoffs.iter().enumerate() {
        rows.push(vec![
            i.to_string(),
            fmt_f64(inst.claims()[i]),
            fmt_f64(*payoff),
            fmt_f64(alloc.min_rights[i]),
            fmt_f64(alloc.max_rights[i]),
            report.claim_bounds[i].to_string(),
            report.rights_sandwich[i].to_string(),
        ]);
    }
    let allocation = opts.out.join("allocation.csv");
    write_csv(
        &allocation,
        &[
            "player",
            "claim",
            "payoff",
            "min_right",
            "max_right",
            "claim_bound_ok",
            "rights_ok",
        ],
        &rows,
    )?;
    manifest.record(allocation);

    let validation = opts.out.join("validation.csv");
    write_csv(
        &validation,
        &["estate", "bankrupt", "efficient", "all_ok"],
        &[vec![
            fmt_f64(inst.estate()),
            inst.is_bankrupt().to_string(),
            report.efficient.to_string(),
            report.all_ok().to_string(),
        ]],
    )?;
    manifest.record(validation);

    let path = manifest.write(&opts.out)?;
    manifest.record(path);
    Ok(manifest)
}

pub struct NestedOptions {
    pub out: PathBuf,
    pub seed: u64,
    pub seeds: usize,
    pub lambdas: Vec<f64>,
    pub k_b: usize,
    pub horizon: usize,
    pub players: usize,
    pub coalition: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub coupling: f64,
    /// Coalition sizes of the instrumented complexity runs.
    pub sizes: Vec<usize>,
}

impl NestedOptions {
    fn config(&self, lambda: f64, seed: u64) -> Result<NestedConfig> {
        let mut cfg = NestedConfig::new(self.k_b, self.horizon, self.players, self.coalition, lambda)?;
        cfg.seed = seed;
        cfg.tol = self.tol;
        cfg.max_iter = self.max_iter;
        cfg.coupling = self.coupling;
        Ok(cfg)
    }
}

fn nested_instance(coalition: usize) -> Result<BankruptcyInstance> {
    let claims: Vec<f64> = (0..coalition).map(|i| 10.0 + (i % 7) as f64).collect();
    BankruptcyInstance::new(0.7 * claims.iter().sum::<f64>(), claims)
}

/// Nested-game pipeline: iteration CDFs per dissatisfaction rate for both
/// solvers, instrumented cost counts across coalition sizes, and the fitted
/// cost models with the linear-coefficient ratio.
pub fn run_nested(opts: &NestedOptions) -> Result<Manifest> {
    ensure_dir(&opts.out)?;
    let mut manifest = Manifest::new();

    // fig2: CDFs per dissatisfaction rate, plus the per-run log
    let inst = nested_instance(opts.coalition)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut run_rows: Vec<Vec<String>> = Vec::new();
    for &lambda in &opts.lambdas {
        let mut bi = Vec::with_capacity(opts.seeds);
        let mut tri = Vec::with_capacity(opts.seeds);
        for trial in 0..opts.seeds as u64 {
            let seed = opts.seed.wrapping_add(trial);
            let cfg = opts.config(lambda, seed)?;
            let (_, bi_stats) = solve_bilevel_admm(&cfg, &inst)?;
            let (_, _, tri_stats) = solve_trilevel_kuramoto(&cfg, &inst, opts.coupling)?;
            for (name, stats) in [("bilevel", &bi_stats), ("trilevel", &tri_stats)] {
                run_rows.push(vec![
                    seed.to_string(),
                    fmt_f64(lambda),
                    name.to_string(),
                    stats.iterations.to_string(),
                    fmt_f64(stats.residuals.last().copied().unwrap_or(f64::NAN)),
                    stats.ops.linear.to_string(),
                    stats.ops.sort.to_string(),
                    stats.ops.quadratic.to_string(),
                ]);
            }
            bi.push(bi_stats.iterations);
            tri.push(tri_stats.iterations);
        }
        for (name, runs) in [("bilevel", &bi), ("trilevel", &tri)] {
            for (value, p) in iteration_cdf(runs) {
                rows.push(vec![
                    name.to_string(),
                    fmt_f64(lambda),
                    value.to_string(),
                    fmt_f64(p),
                ]);
            }
        }
    }
    let fig2 = opts.out.join("fig2.csv");
    write_csv(&fig2, &["algorithm", "lambda", "iterations", "cdf"], &rows)?;
    manifest.record(fig2);
    let runs_path = opts.out.join("runs.csv");
    write_csv(
        &runs_path,
        &[
            "seed",
            "lambda",
            "level",
            "iterations",
            "final_residual",
            "ops_linear",
            "ops_sort",
            "ops_quadratic",
        ],
        &run_rows,
    )?;
    manifest.record(runs_path);

    // fig3: instrumented operation counts across coalition sizes
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut bi_samples: Vec<(usize, f64)> = Vec::new();
    let mut tri_samples: Vec<(usize, f64)> = Vec::new();
    let mut bi_iters = 0.0;
    let mut tri_iters = 0.0;
    let complexity_seeds = 5usize;
    for &n in &opts.sizes {
        let inst = nested_instance(n)?;
        let mut acc = [0.0f64; 2];
        let mut iters = [0.0f64; 2];
        let mut per = [[0.0f64; 3]; 2];
        for trial in 0..complexity_seeds as u64 {
            let mut cfg = NestedConfig::new(opts.k_b, opts.horizon, n + 4, n, 0.3)?;
            cfg.seed = opts.seed.wrapping_add(trial);
            cfg.tol = opts.tol;
            cfg.max_iter = opts.max_iter;
            let (_, s1) = solve_bilevel_admm(&cfg, &inst)?;
            let (_, _, s2) = solve_trilevel_kuramoto(&cfg, &inst, opts.coupling)?;
            for (i, s) in [&s1, &s2].iter().enumerate() {
                acc[i] += s.ops.total() as f64;
                iters[i] += s.iterations as f64;
                per[i][0] += s.ops.linear as f64;
                per[i][1] += s.ops.sort as f64;
                per[i][2] += s.ops.quadratic as f64;
            }
        }
        let k = complexity_seeds as f64;
        bi_samples.push((n, acc[0] / k));
        tri_samples.push((n, acc[1] / k));
        bi_iters = iters[0] / k;
        tri_iters = iters[1] / k;
        for (i, name) in ["bilevel", "trilevel"].iter().enumerate() {
            rows.push(vec![
                name.to_string(),
                n.to_string(),
                fmt_f64(iters[i] / k),
                fmt_f64(per[i][0] / k),
                fmt_f64(per[i][1] / k),
                fmt_f64(per[i][2] / k),
                fmt_f64(acc[i] / k),
            ]);
        }
    }
    let fig3 = opts.out.join("fig3.csv");
    write_csv(
        &fig3,
        &[
            "algorithm",
            "n",
            "iterations_mean",
            "ops_linear",
            "ops_sort",
            "ops_quadratic",
            "ops_total",
        ],
        &rows,
    )?;
    manifest.record(fig3);

    let bi_fit = fit_complexity(&bi_samples)?;
    let tri_fit = fit_complexity(&tri_samples)?;
    let fit_path = opts.out.join("complexity_fit.csv");
    write_csv(
        &fit_path,
        &["algorithm", "linear", "nlogn", "quadratic", "r_squared"],
        &[
            vec![
                "bilevel".into(),
                fmt_f64(bi_fit.linear),
                fmt_f64(bi_fit.nlogn),
                fmt_f64(bi_fit.quadratic),
                fmt_f64(bi_fit.r_squared),
            ],
            vec![
                "trilevel".into(),
                fmt_f64(tri_fit.linear),
                fmt_f64(tri_fit.nlogn),
                fmt_f64(tri_fit.quadratic),
                fmt_f64(tri_fit.r_squared),
            ],
        ],
    )?;
    manifest.record(fit_path);

    let ratio_path = opts.out.join("complexity_ratio.csv");
    write_csv(
        &ratio_path,
        &[
            "per_run_linear_ratio",
            "per_iteration_linear_ratio",
            "bilevel_iterations_mean",
            "trilevel_iterations_mean",
        ],
        &[vec![
            fmt_f64(bi_fit.linear / tri_fit.linear),
            fmt_f64((bi_fit.linear / bi_iters) / (tri_fit.linear / tri_iters)),
            fmt_f64(bi_iters),
            fmt_f64(tri_iters),
        ]],
    )?;
    manifest.record(ratio_path);

    let path = manifest.write(&opts.out)?;
    manifest.record(path);
    Ok(manifest)
}

pub struct KuramotoOptions {
    pub out: PathBuf,
    pub seed: u64,
    pub n: usize,
    pub coupling: f64,
    pub dt: f64,
    pub steps: usize,
    pub noise: f64,
}

/// Oscillator trajectory pipeline: `t, φ_0..φ_{N-1}, r` per step.
pub fn run_kuramoto(opts: &KuramotoOptions) -> Result<Manifest> {
    ensure_dir(&opts.out)?;
    let mut manifest = Manifest::new();
    if opts.n == 0 {
        return Err(Error::Config("need at least one oscillator".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omegas: Vec<f64> = (0..opts.n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mut state = OscillatorState::random(omegas, opts.coupling, &mut rng)?;

    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..opts.n).map(|i| format!("phi_{i}")));
    header.push("r".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();

    let mut rows: Vec<Vec<String>> = Vec::with_capacity(opts.steps + 1);
    for step in 0..=opts.steps {
        let (r, _) = order_parameter(&state);
        let mut row = vec![fmt_f64(step as f64 * opts.dt)];
        row.extend(state.phases.iter().map(|p| fmt_f64(*p)));
        row.push(fmt_f64(r));
        rows.push(row);
        if step < opts.steps {
            state = if opts.noise > 0.0 {
                state.step_noisy(opts.dt, opts.noise, &mut rng)?
            } else {
                state.step(opts.dt)?
            };
        }
    }
    let traj = opts.out.join("trajectory.csv");
    write_csv(&traj, &header_refs, &rows)?;
    manifest.record(traj);

    let path = manifest.write(&opts.out)?;
    manifest.record(path);
    Ok(manifest)
}

pub struct FuzzyOptions {
    pub out: PathBuf,
    pub seed: u64,
    pub points: usize,
    pub clusters: usize,
    pub dim: usize,
    pub fuzzifier: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Data CSV (rows are points on the simplex); wins over generation.
    pub data: Option<PathBuf>,
}

/// Simplex clustering pipeline on a loaded matrix or a seeded mixture of
/// distribution bumps.
pub fn run_fuzzy(opts: &FuzzyOptions) -> Result<Manifest> {
    ensure_dir(&opts.out)?;
    let mut manifest = Manifest::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    if opts.dim < 2 {
        return Err(Error::Config("need at least a 2-symbol simplex".into()));
    }

    let data: Vec<Pmf> = match &opts.data {
        Some(path) => infogame_core::io::read_matrix(path)?
            .into_iter()
            .map(Pmf::new)
            .collect::<Result<_>>()?,
        None => {
            // seeded mixture: anchor distributions plus bounded noise
            let anchors: Vec<Vec<f64>> = (0..opts.clusters)
                .map(|_| {
                    let raw: Vec<f64> =
                        (0..opts.dim).map(|_| rng.gen_range(0.05..1.0)).collect();
                    let t: f64 = raw.iter().sum();
                    raw.iter().map(|v| v / t).collect()
                })
                .collect();
            (0..opts.points)
                .map(|j| {
                    let anchor = &anchors[j % opts.clusters];
                    let raw: Vec<f64> = anchor
                        .iter()
                        .map(|a| (a + rng.gen_range(-0.05..0.05f64)).max(0.01))
                        .collect();
                    Pmf::renormalized(raw).expect("positive entries")
                })
                .collect()
        }
    };

    let inst = FuzzyInstance::new(data.clone(), opts.clusters, opts.fuzzifier)?;
    let outcome = fit(&inst, opts.tol, opts.max_iter, opts.seed)?;

    let data_path = opts.out.join("data.csv");
    write_matrix(
        &data_path,
        &data.iter().map(|p| p.probs().to_vec()).collect::<Vec<_>>(),
    )?;
    manifest.record(data_path);
    let memberships = opts.out.join("memberships.csv");
    write_matrix(&memberships, &outcome.state.memberships)?;
    manifest.record(memberships);
    let centers = opts.out.join("centers.csv");
    write_matrix(
        &centers,
        &outcome
            .state
            .centers
            .iter()
            .map(|c| c.probs().to_vec())
            .collect::<Vec<_>>(),
    )?;
    manifest.record(centers);
    let trace = opts.out.join("trace.csv");
    write_csv(
        &trace,
        &["iteration", "objective_nats"],
        &outcome
            .trace
            .iter()
            .enumerate()
            .map(|(i, j)| vec![i.to_string(), fmt_f64(*j)])
            .collect::<Vec<_>>(),
    )?;
    manifest.record(trace);

    let path = manifest.write(&opts.out)?;
    manifest.record(path);
    Ok(manifest)
}

/// Static capability table: every supported computation mapped to the module
/// and operation implementing it.
pub const COVERAGE: &[(&str, &str, &str)] = &[
    ("finite-alphabet distributions and channels", "prob", "Pmf/JointPmf/Channel"),
    ("entropy", "prob", "entropy"),
    ("mutual information", "prob", "mutual_information"),
    ("KL divergence", "prob", "kl_divergence"),
    ("Markov-chain composition", "prob", "compose_markov"),
    ("information-gap distortion (two routes)", "prob", "distortion_gap/distortion_gap_expected_kl"),
    ("leakage-minimizing channel design", "funnel", "solve_funnel"),
    ("greedy design baseline", "funnel", "greedy_baseline"),
    ("leakage/utility trade-off sweep", "funnel", "tradeoff_sweep"),
    ("major-row (header) selection", "funnel", "header_rows"),
    ("nonzero-sum interaction diagnostic", "funnel", "diagnose"),
    ("gamma function", "frac", "gamma_fn"),
    ("fractional time derivative", "frac", "frac_derivative"),
    ("fractional gradient", "frac", "frac_gradient"),
    ("backward value recursion (min/max/min-max)", "mfg", "hjb_backward_step"),
    ("forward density transport", "mfg", "fpk_forward_step"),
    ("coupled fixed-point solve with fractional memory", "mfg", "solve_mfg"),
    ("saddle-point verification", "mfg", "saddle_check"),
    ("nonzero value-sum check", "mfg", "value_sum_nonzero"),
    ("discounted-increment stability criterion", "mfg", "stability_criterion"),
    ("coalition characteristic function", "bankruptcy", "psi"),
    ("marginal-contribution allocation", "bankruptcy", "shapley"),
    ("allocation validity conditions", "bankruptcy", "validate_allocation"),
    ("bankruptcy event probability", "bankruptcy", "bankruptcy_event_probability"),
    ("bi-level game with measure consensus", "nested", "solve_bilevel_admm"),
    ("tri-level game with phase-gated consensus", "nested", "solve_trilevel_kuramoto"),
    ("operation-count model fit", "nested", "fit_complexity"),
    ("iteration CDF", "nested", "iteration_cdf"),
    ("phase-oscillator dynamics", "kuramoto", "OscillatorState::step"),
    ("coherence order parameter", "kuramoto", "order_parameter"),
    ("seeded binary source generation", "cli::bernoulli", "gen_bernoulli_source"),
    ("dissatisfaction-rate sweep", "cli::pipelines", "run_nested"),
];

/// Emit the capability coverage table.
pub fn run_report(out: &Path) -> Result<Manifest> {
    ensure_dir(out)?;
    let mut manifest = Manifest::new();
    let rows: Vec<Vec<String>> = COVERAGE
        .iter()
        .map(|(capability, module, operation)| {
            vec![capability.to_string(), module.to_string(), operation.to_string()]
        })
        .collect();
    let path = out.join("coverage.csv");
    write_csv(&path, &["capability", "module", "operation"], &rows)?;
    manifest.record(path);
    let path = manifest.write(out)?;
    manifest.record(path);
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::COVERAGE;

    /// The supported-computation checklist the coverage table must span.
    const REQUIRED_CAPABILITIES: &[&str] = &[
        "entropy",
        "mutual information",
        "KL divergence",
        "Markov-chain composition",
        "information-gap distortion (two routes)",
        "leakage-minimizing channel design",
        "greedy design baseline",
        "leakage/utility trade-off sweep",
        "major-row (header) selection",
        "nonzero-sum interaction diagnostic",
        "gamma function",
        "fractional time derivative",
        "fractional gradient",
        "backward value recursion (min/max/min-max)",
        "forward density transport",
        "coupled fixed-point solve with fractional memory",
        "saddle-point verification",
        "nonzero value-sum check",
        "discounted-increment stability criterion",
        "coalition characteristic function",
        "marginal-contribution allocation",
        "allocation validity conditions",
        "bankruptcy event probability",
        "bi-level game with measure consensus",
        "tri-level game with phase-gated consensus",
        "operation-count model fit",
        "iteration CDF",
        "phase-oscillator dynamics",
        "coherence order parameter",
        "seeded binary source generation",
        "dissatisfaction-rate sweep",
    ];

    #[test]
    fn coverage_table_spans_every_required_capability() {
        for cap in REQUIRED_CAPABILITIES {
            assert!(
                COVERAGE.iter().any(|(c, _, _)| c == cap),
                "capability `{cap}` missing from the coverage table"
            );
        }
        // every row names a real module path
        for (_, module, operation) in COVERAGE {
            assert!(!module.is_empty() && !operation.is_empty());
        }
    }
}
