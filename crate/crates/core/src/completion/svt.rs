use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::power::{adapt_power, PowerController};
use super::recycle::{recycle_q_counted, recycle_u};
use super::{shrink, Backend, Strategy, SvtParams};
use crate::error::{Error, ErrorClass, Result};
use crate::linalg::{oracle_svd_capped, DenseMatrix, RngState, SvdResult};
use crate::rsvd::{bki_with_sketch, call_seed, sketch_matrix, RsvdParams, Subspace};
use crate::sparse::{frobenius, frobenius_diff, spectral_norm_est, Observation, ObservationSet, PatternProjector, SparseMatrix};
use crate::timing::Stopwatch;

/// A relative residual above this means `X` has left the scale of the data:
/// the step `delta` is too large for the sampling pattern.
pub const DIVERGENCE_LIMIT: f64 = 1e3;

/// Basis kept from the last fresh rSVD-BKI for recycling.
#[derive(Debug, Clone)]
pub enum Cache {
    Q(Subspace),
    U(DenseMatrix),
}

impl Cache {
    pub fn width(&self) -> usize {
        match self {
            Cache::Q(sub) => sub.q.cols(),
            Cache::U(u) => u.cols(),
        }
    }
}

/// Solver state between outer iterations. `y` keeps the pattern of the
/// training set for the whole run; only its values change.
#[derive(Debug)]
pub struct SvtState {
    pub y: SparseMatrix,
    pub iteration: usize,
    pub r_prev: usize,
    pub power: PowerController,
    pub q: usize,
    pub err_history: Vec<f64>,
    pub cached: Option<Cache>,
}

/// One outer iteration. Times are cumulative since the start of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Rank of the last SVD computed in the escalation loop.
    pub k: usize,
    pub rank: usize,
    pub p: usize,
    pub q: usize,
    pub residual: f64,
    pub wall_secs: f64,
    pub cpu_secs: f64,
    /// Backend events of the escalation loop, `;`-separated.
    pub event: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub fresh_bki: usize,
    pub recycled: usize,
    pub oracle_svds: usize,
    /// Dense oracle used because rSVD-BKI could not run (sketch wider than
    /// the matrix, or a numerical failure).
    pub oracle_fallbacks: usize,
    /// Rank trims and small-SVD fallbacks inside rSVD-BKI.
    pub numeric_fallbacks: usize,
    /// Recycling attempts that failed numerically and were redone fresh.
    pub refreshes_forced: usize,
    /// Fresh rSVD-BKI calls whose power was lowered to fit the matrix.
    pub power_clamps: usize,
    /// Escalations stopped at `k = min(m, n)` with the last value still above tau.
    pub hard_stops: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub svd_secs: f64,
    pub update_secs: f64,
    pub total_wall_secs: f64,
    pub total_cpu_secs: f64,
}

/// Completed matrix `X = U diag(s) V^T` with post-shrinkage values `s`.
#[derive(Debug, Clone)]
pub struct CompletionResult {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
    pub rank: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Relative residual on the training entries of the returned iterate.
    pub residual: f64,
    /// Iteration that produced the returned iterate.
    pub result_iteration: usize,
    pub tau: f64,
    pub delta: f64,
    pub c: f64,
    pub trace: Vec<TraceRecord>,
    pub events: EventCounts,
    pub timing: Timing,
}

impl CompletionResult {
    pub fn rows(&self) -> usize {
        self.u.rows()
    }

    pub fn cols(&self) -> usize {
        self.v.rows()
    }

    pub fn predict(&self, i: usize, j: usize) -> f64 {
        (0..self.rank).map(|t| self.u.get(i, t) * self.s[t] * self.v.get(j, t)).sum()
    }

    pub fn predict_all<'a>(&self, obs: impl IntoIterator<Item = &'a Observation>) -> Vec<f64> {
        let mut proj = PatternProjector::default();
        proj.load(&self.u, &self.s, &self.v).expect("factor widths agree");
        obs.into_iter().map(|o| proj.entry(o.row, o.col)).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        if self.rank == 0 {
            return DenseMatrix::zeros(self.rows(), self.cols());
        }
        DenseMatrix::from_factors(&self.u, &self.s, &self.v).expect("factor widths agree")
    }
}

/// Hooks into a running solver. `before_update`/`after_update` bracket the
/// sampling of `X^i` on the pattern and the in-place update of `Y`.
pub trait SvtObserver {
    fn before_update(&mut self, _state: &SvtState) {}
    fn after_update(&mut self, _state: &SvtState) {}
    fn on_iteration(&mut self, _record: &TraceRecord) {}
}

pub struct NoObserver;

impl SvtObserver for NoObserver {}

/// Singular value thresholding with a chosen truncated-SVD backend.
pub fn svt_reference(obs: &ObservationSet, params: &SvtParams, backend: Backend) -> Result<CompletionResult> {
    svt_reference_observed(obs, params, backend, &mut NoObserver)
}

pub fn svt_reference_observed(
    obs: &ObservationSet,
    params: &SvtParams,
    backend: Backend,
    observer: &mut dyn SvtObserver,
) -> Result<CompletionResult> {
    let mode = match backend {
        Backend::Oracle => Mode::Oracle,
        Backend::RsvdBki => Mode::Bki(Strategy::None),
    };
    run(obs, params, mode, observer)
}

/// Fast SVT: rSVD-BKI backend with adaptive power and the configured
/// subspace recycling strategy.
pub fn svt_fast(obs: &ObservationSet, params: &SvtParams) -> Result<CompletionResult> {
    svt_fast_observed(obs, params, &mut NoObserver)
}

pub fn svt_fast_observed(
    obs: &ObservationSet,
    params: &SvtParams,
    observer: &mut dyn SvtObserver,
) -> Result<CompletionResult> {
    run(obs, params, Mode::Bki(params.strategy), observer)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Oracle,
    Bki(Strategy),
}

struct Engine<'a> {
    params: &'a SvtParams,
    mode: Mode,
    m: usize,
    n: usize,
    calls: u64,
    events: EventCounts,
}

impl Engine<'_> {
    fn kmax(&self) -> usize {
        self.m.min(self.n)
    }

    fn oracle(&mut self, y: &SparseMatrix) -> Result<SvdResult> {
        self.events.oracle_svds += 1;
        oracle_svd_capped(&y.to_dense(), self.params.oracle_cap)
    }

    /// Rank-`k` SVD of `Y` for the BKI modes, recycling when permitted.
    fn bki_step(&mut self, state: &mut SvtState, k: usize, strategy: Strategy, log: &mut Vec<&'static str>) -> Result<SvdResult> {
        let p = self.params;
        let may_recycle = strategy != Strategy::None
            && state.iteration >= p.i_reuse
            && state.q < p.q_reuse
            && state.cached.as_ref().is_some_and(|c| c.width() >= k);
        if may_recycle {
            let mut fb = 0;
            let attempt = match state.cached.as_mut().expect("checked above") {
                Cache::Q(sub) => recycle_q_counted(sub, &state.y, k, &mut fb).map(|r| (r, "recycle-q")),
                Cache::U(u) => recycle_u(u, &state.y).map(|r| {
                    *u = r.u.clone();
                    (r.truncated(k), "recycle-u")
                }),
            };
            match attempt {
                Ok((res, tag)) => {
                    state.q += 1;
                    self.events.recycled += 1;
                    self.events.numeric_fallbacks += fb;
                    log.push(tag);
                    return Ok(res);
                }
                Err(e) if e.class() == ErrorClass::Numerical => {
                    self.events.refreshes_forced += 1;
                }
                Err(e) => return Err(e),
            }
        }
        state.q = 0;
        let s = p.s;
        let kmax = self.kmax();
        if k + s > kmax {
            return self.oracle_fallback(state, k, log);
        }
        let want = state.power.p;
        let fit = kmax / (k + s) - 1;
        let power = want.min(fit);
        if power < want {
            self.events.power_clamps += 1;
        }
        let params = RsvdParams {
            k,
            s,
            p: power,
            seed: call_seed(p.seed, self.calls),
        };
        self.calls += 1;
        let omega = sketch_matrix(self.n, &params)?;
        match bki_with_sketch(&state.y, k, power, &omega) {
            Ok((res, sub)) => {
                self.events.fresh_bki += 1;
                self.events.numeric_fallbacks += sub.fallbacks;
                state.cached = match strategy {
                    Strategy::None => None,
                    Strategy::ReuseQ => Some(Cache::Q(sub)),
                    Strategy::ReuseU => Some(Cache::U(res.u.clone())),
                };
                log.push("fresh");
                Ok(res)
            }
            Err(e) if e.class() == ErrorClass::Numerical => self.oracle_fallback(state, k, log),
            Err(e) => Err(e),
        }
    }

    fn oracle_fallback(&mut self, state: &mut SvtState, k: usize, log: &mut Vec<&'static str>) -> Result<SvdResult> {
        self.events.oracle_fallbacks += 1;
        state.cached = None;
        log.push("oracle-fallback");
        Ok(self.oracle(&state.y)?.truncated(k))
    }
}

fn run(obs: &ObservationSet, params: &SvtParams, mode: Mode, observer: &mut dyn SvtObserver) -> Result<CompletionResult> {
    params.validate()?;
    let clock = Stopwatch::start();
    let pm = obs.train_matrix()?;
    let (m, n) = pm.shape();
    if mode == Mode::Oracle && m.min(n) > params.oracle_cap {
        return Err(Error::SizeCap {
            dim: m.min(n),
            cap: params.oracle_cap,
        });
    }
    let target = pm.values().to_vec();
    let norm_pm = frobenius(&target);
    if norm_pm == 0.0 {
        return Err(Error::Degenerate("all observed values are zero".into()));
    }
    let tau = params.tau.unwrap_or(5.0 * n as f64);
    let delta = params.delta.unwrap_or(1.2 * (m as f64 * n as f64) / pm.nnz() as f64);
    let spec = spectral_norm_est(&pm, &mut RngState::new(params.seed).fork(0))?;
    let c = (tau / (delta * spec)).ceil();

    let mut state = SvtState {
        y: pm.scaled(c * delta),
        iteration: 0,
        r_prev: 0,
        power: PowerController::new(params.p0, params.p_min),
        q: 0,
        err_history: Vec::new(),
        cached: None,
    };
    drop(pm);
    let mut engine = Engine {
        params,
        mode,
        m,
        n,
        calls: 0,
        events: EventCounts::default(),
    };
    let mut proj = PatternProjector::default();
    let mut px = vec![0.0; target.len()];
    let mut trace = Vec::new();
    let mut timing = Timing::default();
    let mut best: Option<(f64, usize, SvdResult)> = None;
    let mut converged = false;

    for i in 1..=params.i_max {
        state.iteration = i;
        if let Mode::Bki(_) = engine.mode {
            if params.adaptive_power {
                if let Some(&e) = state.err_history.last() {
                    adapt_power(&mut state.power, e);
                }
            }
        }

        let t_svd = Instant::now();
        let mut log: Vec<&'static str> = Vec::new();
        let dense = match engine.mode {
            Mode::Oracle => {
                log.push("oracle");
                Some(engine.oracle(&state.y)?)
            }
            Mode::Bki(_) => None,
        };
        let kmax = engine.kmax();
        let mut k = (state.r_prev + 1).min(kmax);
        let svd = loop {
            let svd = match (&dense, engine.mode) {
                (Some(full), _) => full.truncated(k),
                (None, Mode::Bki(strategy)) => engine.bki_step(&mut state, k, strategy, &mut log)?,
                (None, Mode::Oracle) => unreachable!("oracle mode always has the dense SVD"),
            };
            let last = svd.s.last().copied().unwrap_or(0.0);
            if last <= tau {
                break svd;
            }
            if k == kmax {
                engine.events.hard_stops += 1;
                break svd;
            }
            k = (k + params.l).min(kmax);
        };
        timing.svd_secs += t_svd.elapsed().as_secs_f64();

        let x = shrink(&svd, tau)?;
        let t_upd = Instant::now();
        proj.load(&x.u, &x.s, &x.v)?;
        observer.before_update(&state);
        proj.project_into(&state.y, &mut px)?;
        let residual = frobenius_diff(&px, &target) / norm_pm;
        if !(residual <= DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { iteration: i, residual });
        }
        converged = residual < params.epsilon;
        if !converged {
            let step = match params.delta_decay {
                Some(d) => delta * d.powi(i as i32),
                None => delta,
            };
            state.y.add_scaled_difference(step, &target, &px)?;
        }
        observer.after_update(&state);
        timing.update_secs += t_upd.elapsed().as_secs_f64();

        state.err_history.push(residual);
        state.r_prev = x.rank();
        let record = TraceRecord {
            iteration: i,
            k,
            rank: x.rank(),
            p: state.power.p,
            q: state.q,
            residual,
            wall_secs: clock.wall(),
            cpu_secs: clock.cpu(),
            event: log.join(";"),
        };
        observer.on_iteration(&record);
        trace.push(record);
        if converged || best.as_ref().is_none_or(|(r, _, _)| residual < *r) {
            best = Some((residual, i, x));
        }
        if converged {
            break;
        }
    }

    let (residual, result_iteration, x) = best.expect("at least one iteration ran");
    timing.total_wall_secs = clock.wall();
    timing.total_cpu_secs = clock.cpu();
    Ok(CompletionResult {
        rank: x.rank(),
        u: x.u,
        s: x.s,
        v: x.v,
        iterations: trace.len(),
        converged,
        residual,
        result_iteration,
        tau,
        delta,
        c,
        trace,
        events: engine.events,
        timing,
    })
}

/// Writes the per-iteration trace as CSV with a header row.
pub fn write_trace_csv(path: impl AsRef<Path>, trace: &[TraceRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "iteration,k,rank,p,q,residual,wall_secs,cpu_secs,event")?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{},{},{:.17e},{:.6},{:.6},{}",
            r.iteration, r.k, r.rank, r.p, r.q, r.residual, r.wall_secs, r.cpu_secs, r.event
        )?;
    }
    w.flush()?;
    Ok(())
}
