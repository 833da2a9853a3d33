//! Synthetic data-parallel training workload.
//!
//! The task is linear least squares: minimize `0.5 * ||X w - y||^2` by
//! synchronous gradient descent. It is chosen because the full-batch gradient
//! decomposes exactly across sample shards, which turns "distributed equals
//! serial" into a testable identity: summing shard gradients over any worker
//! count reproduces the single-worker gradient up to floating-point
//! accumulation order.
//!
//! Every step, each worker computes the gradient of its shard, the cluster
//! sums gradients with the configured collective, and every worker applies
//! the same update `w <- w - lr * g`. Workers therefore hold bitwise
//! identical parameters at all times. An optional artificial compute delay,
//! split proportionally to shard size, stands in for heavy per-step work so
//! communication/compute trade-offs can be benchmarked without one.

use std::ops::Range;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::buffer::GradientBuffer;
use crate::cluster::{ClusterConfig, ReduceOp, Strategy};
use crate::collectives::{ps_allreduce, ring_allreduce, serve_parameter_server};
use crate::error::{Error, Result};
use crate::partition::partition;
use crate::transport::{CommLedger, LinkProfile, TransportChoice};

/// Parameters for generating a [`LeastSquaresTask`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    /// Sample count S.
    pub samples: usize,
    /// Feature dimension D; the gradient length K equals D.
    pub dims: usize,
    /// Scale of the uniform noise added to the targets.
    pub noise: f64,
    pub seed: u64,
}

impl Default for TaskSpec {
    fn default() -> Self {
        TaskSpec {
            samples: 256,
            dims: 64,
            noise: 0.01,
            seed: 42,
        }
    }
}

/// A fixed least-squares dataset: `S x D` features and `S` targets.
#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquaresTask {
    samples: usize,
    dims: usize,
    features: Vec<f64>, // row-major S x D
    targets: Vec<f64>,
    seed: u64,
}

impl LeastSquaresTask {
    /// Deterministically generates a task from its spec: identical seeds give
    /// identical datasets on every platform.
    pub fn generate(spec: &TaskSpec) -> Result<Self> {
        if spec.samples == 0 {
            return Err(Error::invalid("task needs at least 1 sample"));
        }
        if spec.dims == 0 {
            return Err(Error::invalid("task needs at least 1 dimension"));
        }
        if !spec.noise.is_finite() || spec.noise < 0.0 {
            return Err(Error::invalid("noise must be finite and non-negative"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let features: Vec<f64> = (0..spec.samples * spec.dims)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let true_weights: Vec<f64> = (0..spec.dims).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let targets: Vec<f64> = (0..spec.samples)
            .map(|i| {
                let row = &features[i * spec.dims..(i + 1) * spec.dims];
                let clean: f64 = row.iter().zip(&true_weights).map(|(x, w)| x * w).sum();
                clean + spec.noise * rng.gen_range(-1.0..1.0)
            })
            .collect();
        Ok(LeastSquaresTask {
            samples: spec.samples,
            dims: spec.dims,
            features,
            targets,
            seed: spec.seed,
        })
    }

    /// Builds a task from explicit data; `features` is row-major `S x D`.
    pub fn from_parts(features: Vec<f64>, targets: Vec<f64>, dims: usize) -> Result<Self> {
        if dims == 0 {
            return Err(Error::invalid("task needs at least 1 dimension"));
        }
        if targets.is_empty() {
            return Err(Error::invalid("task needs at least 1 sample"));
        }
        if features.len() != targets.len() * dims {
            return Err(Error::invalid(format!(
                "feature matrix has {} values; expected {} samples x {} dims",
                features.len(),
                targets.len(),
                dims
            )));
        }
        Ok(LeastSquaresTask {
            samples: targets.len(),
            dims,
            features,
            targets,
            seed: 0,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.samples
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        &self.features[sample * self.dims..(sample + 1) * self.dims]
    }

    pub fn target(&self, sample: usize) -> f64 {
        self.targets[sample]
    }

    /// Contiguous balanced shards of the sample indices, one per worker.
    /// Shards are disjoint and cover every sample; with more workers than
    /// samples the trailing shards are empty.
    pub fn shards(&self, workers: usize) -> Result<Vec<Range<usize>>> {
        let part = partition(self.samples, workers)?;
        Ok((0..workers).map(|w| part.block_range(w)).collect())
    }

    /// A step size guaranteed to keep gradient descent stable on this task:
    /// `1 / ||X||_F^2`, which is below `2 / lambda_max(X^T X)`.
    pub fn suggested_learning_rate(&self) -> f64 {
        let frob_sq: f64 = self.features.iter().map(|x| x * x).sum();
        1.0 / frob_sq.max(1e-9)
    }
}

/// The model being trained; `weights` is the `w` every worker holds.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub weights: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(dims: usize) -> Self {
        ModelParams {
            weights: vec![0.0; dims],
        }
    }
}

/// Where one training step's wall time went, in seconds; aggregated as the
/// per-step maximum across workers (the critical path).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TimingBreakdown {
    /// Gradient computation (including any artificial compute delay).
    pub t1_compute: f64,
    /// Blocking inside the collective.
    pub t2_communication: f64,
    /// Whatever the step spent outside compute and communication.
    pub t3_overhead: f64,
    pub t_total: f64,
}

/// Gradient of `0.5 * ||X w - y||^2` restricted to `shard`'s rows.
///
/// Summing this over all shards of a partition reproduces the full-batch
/// gradient exactly in exact arithmetic. An empty shard yields zeros.
pub fn local_gradient(
    params: &ModelParams,
    task: &LeastSquaresTask,
    shard: Range<usize>,
) -> Result<GradientBuffer> {
    if params.weights.len() != task.dims() {
        return Err(Error::invalid(format!(
            "params have {} weights but the task has {} dims",
            params.weights.len(),
            task.dims()
        )));
    }
    if shard.end > task.sample_count() || shard.start > shard.end {
        return Err(Error::invalid(format!(
            "shard {shard:?} out of range for {} samples",
            task.sample_count()
        )));
    }
    let mut grad = vec![0.0; task.dims()];
    for i in shard {
        let row = task.row(i);
        let residual: f64 = row
            .iter()
            .zip(&params.weights)
            .map(|(x, w)| x * w)
            .sum::<f64>()
            - task.target(i);
        for (g, x) in grad.iter_mut().zip(row) {
            *g += residual * x;
        }
    }
    Ok(GradientBuffer::new(grad))
}

/// Knobs for one training run.
#[derive(Clone, Debug)]
pub struct TrainSettings {
    pub steps: usize,
    pub learning_rate: f64,
    /// Simulated link cost applied by the transport.
    pub profile: LinkProfile,
    /// Artificial seconds of compute per step for the whole batch; each
    /// worker sleeps its shard's proportional share. Zero disables it.
    pub compute_delay: f64,
    pub transport: TransportChoice,
    /// Record rank 0's parameters after every step (for equivalence tests).
    pub record_trajectory: bool,
}

impl TrainSettings {
    pub fn new(steps: usize, learning_rate: f64) -> Self {
        TrainSettings {
            steps,
            learning_rate,
            profile: LinkProfile::ZERO,
            compute_delay: 0.0,
            transport: TransportChoice::InProcess,
            record_trajectory: false,
        }
    }
}

/// Everything a training run produces.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Final parameters (identical on every worker).
    pub params: ModelParams,
    /// One breakdown per step, reduced across workers.
    pub step_timings: Vec<TimingBreakdown>,
    pub worker_ledgers: Vec<CommLedger>,
    /// Present for parameter-server runs.
    pub server_ledger: Option<CommLedger>,
    /// Present when `record_trajectory` was set.
    pub trajectory: Option<Vec<Vec<f64>>>,
}

struct StepTiming {
    compute: f64,
    comm: f64,
    wall: f64,
}

struct WorkerRun {
    weights: Vec<f64>,
    steps: Vec<StepTiming>,
    trajectory: Option<Vec<Vec<f64>>>,
    ledger: CommLedger,
}

/// Final weights, per-step timings, and the optional recorded trajectory.
type WorkerLoopOutput = (Vec<f64>, Vec<StepTiming>, Option<Vec<Vec<f64>>>);

fn worker_loop(
    task: &LeastSquaresTask,
    shard: Range<usize>,
    steps: usize,
    learning_rate: f64,
    compute_delay: f64,
    record_trajectory: bool,
    mut reduce: impl FnMut(&GradientBuffer) -> Result<GradientBuffer>,
) -> Result<WorkerLoopOutput> {
    let mut params = ModelParams::zeros(task.dims());
    let mut timings = Vec::with_capacity(steps);
    let mut trajectory = record_trajectory.then(Vec::new);
    let shard_share = shard.len() as f64 / task.sample_count() as f64;
    for step in 0..steps {
        let step_start = Instant::now();
        if compute_delay > 0.0 {
            std::thread::sleep(std::time::Duration::from_secs_f64(
                compute_delay * shard_share,
            ));
        }
        let grad = local_gradient(&params, task, shard.clone())?;
        let compute = step_start.elapsed().as_secs_f64();
        if grad.ensure_finite().is_err() {
            return Err(Error::Training {
                step,
                reason: "gradient is non-finite".to_string(),
            });
        }

        let comm_start = Instant::now();
        let reduced = reduce(&grad)?;
        let comm = comm_start.elapsed().as_secs_f64();

        for (w, g) in params.weights.iter_mut().zip(reduced.values()) {
            *w -= learning_rate * g;
        }
        if params.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Training {
                step,
                reason: "parameters diverged to non-finite values".to_string(),
            });
        }
        if let Some(trajectory) = &mut trajectory {
            trajectory.push(params.weights.clone());
        }
        timings.push(StepTiming {
            compute,
            comm,
            wall: step_start.elapsed().as_secs_f64(),
        });
    }
    Ok((params.weights, timings, trajectory))
}

/// Runs synchronous data-parallel gradient descent.
///
/// Each worker repeatedly computes its shard gradient, the cluster reduces
/// gradients with **Sum** (the training update needs the full-batch
/// gradient; `ClusterConfig::reduce_op` only affects collectives called
/// directly), and every worker applies the same update. The returned
/// parameters are bitwise identical across workers and, up to accumulation
/// order, match a serial full-batch run.
pub fn train(
    task: &LeastSquaresTask,
    config: &ClusterConfig,
    settings: &TrainSettings,
) -> Result<TrainOutcome> {
    if settings.steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    if !settings.learning_rate.is_finite() || settings.learning_rate < 0.0 {
        return Err(Error::invalid(
            "learning rate must be finite and non-negative",
        ));
    }
    if !settings.compute_delay.is_finite() || settings.compute_delay < 0.0 {
        return Err(Error::invalid(
            "compute delay must be finite and non-negative",
        ));
    }
    let n = config.worker_count;
    let shards = task.shards(n)?;
    let comm_config = config.with_reduce_op(ReduceOp::Sum);

    let (runs, server) = match config.strategy {
        Strategy::Ring => {
            let endpoints = settings
                .transport
                .connect_ring(&comm_config, settings.profile)?;
            let runs: Vec<Result<WorkerRun>> = std::thread::scope(|scope| {
                let handles: Vec<_> = endpoints
                    .into_iter()
                    .zip(&shards)
                    .enumerate()
                    .map(|(rank, (mut ep, shard))| {
                        let shard = shard.clone();
                        let record = settings.record_trajectory && rank == 0;
                        scope.spawn(move || {
                            let (weights, steps, trajectory) = worker_loop(
                                task,
                                shard,
                                settings.steps,
                                settings.learning_rate,
                                settings.compute_delay,
                                record,
                                |g| ring_allreduce(g, &comm_config, &mut ep),
                            )?;
                            Ok(WorkerRun {
                                weights,
                                steps,
                                trajectory,
                                ledger: ep.ledger().clone(),
                            })
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker thread panicked"))
                    .collect()
            });
            (runs, None)
        }
        Strategy::ParameterServer => {
            let (mut server, workers) = settings
                .transport
                .connect_star(&comm_config, settings.profile)?;
            let (runs, server_result) = std::thread::scope(|scope| {
                let server_handle = scope.spawn(|| {
                    let rounds = serve_parameter_server(&mut server, &comm_config)?;
                    Ok::<_, Error>((server.ledger().clone(), rounds))
                });
                let handles: Vec<_> = workers
                    .into_iter()
                    .zip(&shards)
                    .enumerate()
                    .map(|(rank, (mut ep, shard))| {
                        let shard = shard.clone();
                        let record = settings.record_trajectory && rank == 0;
                        scope.spawn(move || {
                            let (weights, steps, trajectory) = worker_loop(
                                task,
                                shard,
                                settings.steps,
                                settings.learning_rate,
                                settings.compute_delay,
                                record,
                                |g| ps_allreduce(g, &comm_config, &mut ep),
                            )?;
                            ep.send_done()?;
                            Ok(WorkerRun {
                                weights,
                                steps,
                                trajectory,
                                ledger: ep.ledger().clone(),
                            })
                        })
                    })
                    .collect();
                let runs: Vec<Result<WorkerRun>> = handles
                    .into_iter()
                    .map(|h| h.join().expect("worker thread panicked"))
                    .collect();
                let server_result = server_handle.join().expect("server thread panicked");
                (runs, server_result)
            });
            let (server_ledger, rounds) = server_result?;
            if !runs.iter().any(|r| r.is_err()) && rounds != settings.steps as u64 {
                return Err(Error::protocol(format!(
                    "server aggregated {rounds} rounds for a {}-step run",
                    settings.steps
                )));
            }
            (runs, Some(server_ledger))
        }
    };

    let mut workers = Vec::with_capacity(n);
    for run in runs {
        workers.push(run?);
    }

    let reference = &workers[0].weights;
    for (rank, run) in workers.iter().enumerate().skip(1) {
        let same = run
            .weights
            .iter()
            .zip(reference)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            return Err(Error::protocol(format!(
                "rank {rank} ended with parameters different from rank 0"
            )));
        }
    }

    let mut step_timings = Vec::with_capacity(settings.steps);
    for step in 0..settings.steps {
        let fold = |f: fn(&StepTiming) -> f64| {
            workers
                .iter()
                .map(|w| f(&w.steps[step]))
                .fold(0.0f64, f64::max)
        };
        let t1 = fold(|s| s.compute);
        let t2 = fold(|s| s.comm);
        let t_total = fold(|s| s.wall);
        let breakdown = TimingBreakdown {
            t1_compute: t1,
            t2_communication: t2,
            t3_overhead: (t_total - t1 - t2).max(0.0),
            t_total,
        };
        debug_assert!(
            breakdown.t_total
                >= breakdown
                    .t1_compute
                    .max(breakdown.t2_communication)
                    .max(breakdown.t3_overhead)
        );
        step_timings.push(breakdown);
    }

    let trajectory = workers[0].trajectory.take();
    let params = ModelParams {
        weights: std::mem::take(&mut workers[0].weights),
    };
    Ok(TrainOutcome {
        params,
        step_timings,
        worker_ledgers: workers.into_iter().map(|w| w.ledger).collect(),
        server_ledger: server,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_task() -> LeastSquaresTask {
        LeastSquaresTask::generate(&TaskSpec {
            samples: 48,
            dims: 6,
            noise: 0.05,
            seed: 9,
        })
        .unwrap()
    }

    /// Full-batch gradient computed by direct loops, independent of
    /// `local_gradient`.
    fn brute_force_gradient(task: &LeastSquaresTask, weights: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; task.dims()];
        for i in 0..task.sample_count() {
            let row = task.row(i);
            let mut pred = 0.0;
            for (x, w) in row.iter().zip(weights) {
                pred += x * w;
            }
            let r = pred - task.target(i);
            for (g, x) in grad.iter_mut().zip(row) {
                *g += r * x;
            }
        }
        grad
    }

    /// Serial full-batch descent, the oracle every distributed run must match.
    fn serial_descent(task: &LeastSquaresTask, steps: usize, lr: f64) -> Vec<Vec<f64>> {
        let mut w = vec![0.0; task.dims()];
        let mut trajectory = Vec::with_capacity(steps);
        for _ in 0..steps {
            let g = brute_force_gradient(task, &w);
            for (wi, gi) in w.iter_mut().zip(&g) {
                *wi -= lr * gi;
            }
            trajectory.push(w.clone());
        }
        trajectory
    }

    /// Gaussian elimination with partial pivoting; test-only oracle for the
    /// least-squares optimum.
    fn solve_normal_equations(task: &LeastSquaresTask) -> Vec<f64> {
        let d = task.dims();
        let mut a = vec![vec![0.0f64; d + 1]; d];
        for i in 0..task.sample_count() {
            let row = task.row(i);
            for j in 0..d {
                for k in 0..d {
                    a[j][k] += row[j] * row[k];
                }
                a[j][d] += row[j] * task.target(i);
            }
        }
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap();
            a.swap(col, pivot);
            for row in col + 1..d {
                let f = a[row][col] / a[col][col];
                for k in col..=d {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
        let mut w = vec![0.0; d];
        for i in (0..d).rev() {
            let mut sum = a[i][d];
            for j in i + 1..d {
                sum -= a[i][j] * w[j];
            }
            w[i] = sum / a[i][i];
        }
        w
    }

    #[test]
    fn gradient_of_single_hand_sample() {
        let task = LeastSquaresTask::from_parts(vec![1.0], vec![1.0], 1).unwrap();
        let g = local_gradient(&ModelParams::zeros(1), &task, 0..1).unwrap();
        assert_eq!(g.values(), &[-1.0]);
    }

    #[test]
    fn gradient_vanishes_at_the_least_squares_optimum() {
        let task = test_task();
        let optimum = ModelParams {
            weights: solve_normal_equations(&task),
        };
        let g = local_gradient(&optimum, &task, 0..task.sample_count()).unwrap();
        let norm: f64 = g.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm <= 1e-9, "gradient norm {norm} at optimum");
    }

    #[test]
    fn shard_gradients_sum_to_full_gradient() {
        let task = test_task();
        let params = ModelParams {
            weights: (0..task.dims()).map(|i| 0.1 * i as f64 - 0.2).collect(),
        };
        let full = local_gradient(&params, &task, 0..task.sample_count()).unwrap();
        let mut summed = vec![0.0; task.dims()];
        for shard in task.shards(4).unwrap() {
            let g = local_gradient(&params, &task, shard).unwrap();
            for (s, v) in summed.iter_mut().zip(g.values()) {
                *s += v;
            }
        }
        for (s, f) in summed.iter().zip(full.values()) {
            assert!((s - f).abs() <= 1e-10 * f.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_dimension_mismatch_rejected() {
        let task = test_task();
        let bad = ModelParams::zeros(task.dims() + 1);
        assert!(local_gradient(&bad, &task, 0..1).is_err());
    }

    #[test]
    fn empty_shard_gives_zero_gradient() {
        let task = test_task();
        let g = local_gradient(&ModelParams::zeros(task.dims()), &task, 5..5).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    fn run(
        task: &LeastSquaresTask,
        config: ClusterConfig,
        settings: &TrainSettings,
    ) -> TrainOutcome {
        train(task, &config, settings).unwrap()
    }

    #[test]
    fn distributed_runs_match_the_serial_oracle() {
        let task = test_task();
        let lr = task.suggested_learning_rate();
        let steps = 100;
        let oracle = serial_descent(&task, steps, lr);

        let mut settings = TrainSettings::new(steps, lr);
        settings.record_trajectory = true;

        for config in [
            ClusterConfig::ring(4).unwrap(),
            ClusterConfig::parameter_server(4).unwrap(),
        ] {
            let outcome = run(&task, config, &settings);
            let trajectory = outcome.trajectory.as_ref().unwrap();
            for (step, (got, want)) in trajectory.iter().zip(&oracle).enumerate() {
                for (g, w) in got.iter().zip(want) {
                    assert!(
                        (g - w).abs() <= 1e-6,
                        "strategy {:?} diverged from oracle at step {step}: {g} vs {w}",
                        config.strategy
                    );
                }
            }
        }
    }

    #[test]
    fn ring_and_ps_trajectories_agree_step_by_step() {
        let task = test_task();
        let lr = task.suggested_learning_rate();
        let mut settings = TrainSettings::new(60, lr);
        settings.record_trajectory = true;

        let ring = run(&task, ClusterConfig::ring(4).unwrap(), &settings);
        let ps = run(
            &task,
            ClusterConfig::parameter_server(4).unwrap(),
            &settings,
        );
        let ring_tr = ring.trajectory.unwrap();
        let ps_tr = ps.trajectory.unwrap();
        for (step, (a, b)) in ring_tr.iter().zip(&ps_tr).enumerate() {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-9, "step {step}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn final_params_invariant_to_worker_count() {
        let task = test_task();
        let lr = task.suggested_learning_rate();
        let settings = TrainSettings::new(50, lr);
        let reference = run(&task, ClusterConfig::ring(1).unwrap(), &settings);
        for n in [2usize, 4, 8] {
            let outcome = run(&task, ClusterConfig::ring(n).unwrap(), &settings);
            for (a, b) in outcome.params.weights.iter().zip(&reference.params.weights) {
                assert!((a - b).abs() <= 1e-6, "N={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let task = test_task();
        let lr = task.suggested_learning_rate();
        let settings = TrainSettings::new(20, lr);
        let config = ClusterConfig::parameter_server(3).unwrap();
        let a = run(&task, config, &settings);
        let b = run(&task, config, &settings);
        let bits = |w: &[f64]| w.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.params.weights), bits(&b.params.weights));
        assert_eq!(a.worker_ledgers, b.worker_ledgers);
        assert_eq!(a.server_ledger, b.server_ledger);
    }

    #[test]
    fn step_timing_invariants_hold() {
        let task = test_task();
        let lr = task.suggested_learning_rate();
        let mut settings = TrainSettings::new(5, lr);
        settings.compute_delay = 0.002;
        let outcome = run(&task, ClusterConfig::ring(2).unwrap(), &settings);
        assert_eq!(outcome.step_timings.len(), 5);
        for t in &outcome.step_timings {
            assert!(t.t1_compute >= 0.0 && t.t2_communication >= 0.0 && t.t3_overhead >= 0.0);
            assert!(t.t_total >= t.t1_compute.max(t.t2_communication).max(t.t3_overhead));
            // The artificial compute delay must show up in t1.
            assert!(t.t1_compute >= 0.001);
        }
    }

    #[test]
    fn zero_steps_rejected_and_zero_lr_is_a_no_op() {
        let task = test_task();
        assert!(train(
            &task,
            &ClusterConfig::ring(2).unwrap(),
            &TrainSettings::new(0, 0.1)
        )
        .is_err());

        let outcome = run(
            &task,
            ClusterConfig::ring(2).unwrap(),
            &TrainSettings::new(1, 0.0),
        );
        assert!(outcome.params.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn divergence_is_reported_with_its_step() {
        let task = test_task();
        let settings = TrainSettings::new(200, 1e6);
        match train(&task, &ClusterConfig::ring(2).unwrap(), &settings) {
            Err(Error::Training { step, reason }) => {
                assert!(step < 200);
                assert!(reason.contains("diverged") || reason.contains("non-finite"));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn tcp_and_inproc_training_agree_bitwise() {
        let task = test_task();
        let lr = task.suggested_learning_rate();
        let config = ClusterConfig::ring(2).unwrap();
        let inproc = run(&task, config, &TrainSettings::new(10, lr));
        let mut tcp_settings = TrainSettings::new(10, lr);
        tcp_settings.transport = TransportChoice::Tcp(crate::transport::Topology::localhost(2, 0));
        let tcp = run(&task, config, &tcp_settings);
        let bits = |w: &[f64]| w.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&inproc.params.weights), bits(&tcp.params.weights));
        assert_eq!(inproc.worker_ledgers, tcp.worker_ledgers);
    }

    #[test]
    fn more_workers_than_samples_still_trains() {
        let task = LeastSquaresTask::generate(&TaskSpec {
            samples: 3,
            dims: 2,
            noise: 0.0,
            seed: 1,
        })
        .unwrap();
        let lr = task.suggested_learning_rate();
        let outcome = run(
            &task,
            ClusterConfig::ring(8).unwrap(),
            &TrainSettings::new(5, lr),
        );
        assert!(outcome.params.weights.iter().all(|w| w.is_finite()));
    }
}
