//! Matrix completion by singular value thresholding: the reference loop with
//! a pluggable truncated-SVD backend, and the fast variant built on rSVD-BKI
//! with adaptive power and subspace recycling.

mod power;
mod recycle;
mod svt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{SingularOrder, SvdResult, DEFAULT_ORACLE_CAP};

pub use power::{adapt_power, PowerController, DECREASE_STREAK};
pub use recycle::{recycle_q, recycle_u};
pub use svt::{
    svt_fast, svt_fast_observed, svt_reference, svt_reference_observed, write_trace_csv, Cache,
    CompletionResult, EventCounts, NoObserver, SvtObserver, SvtState, Timing, TraceRecord,
    DIVERGENCE_LIMIT,
};

/// Subspace recycling strategy of the fast solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "reuse-q")]
    ReuseQ,
    #[serde(rename = "reuse-u")]
    ReuseU,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Strategy::None),
            "reuse-q" => Ok(Strategy::ReuseQ),
            "reuse-u" => Ok(Strategy::ReuseU),
            other => Err(Error::InvalidParameter(format!(
                "unknown strategy {other:?} (expected none, reuse-q or reuse-u)"
            ))),
        }
    }
}

/// Truncated-SVD backend of [`svt_reference`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Densify `Y` and take the full Jacobi SVD (desk scale only).
    Oracle,
    RsvdBki,
}

/// Data kind a run is tuned for; selects tolerance and recycling defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Workload {
    Image,
    Ratings,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvtParams {
    /// Threshold; `None` means `5 n`.
    pub tau: Option<f64>,
    /// Step size; `None` means `1.2 m n / |Phi|`.
    pub delta: Option<f64>,
    /// Rank increment of the inner escalation loop.
    pub l: usize,
    pub epsilon: f64,
    pub i_max: usize,
    pub i_reuse: usize,
    pub q_reuse: usize,
    pub strategy: Strategy,
    /// Initial power parameter.
    pub p0: usize,
    pub p_min: usize,
    pub adaptive_power: bool,
    /// Oversampling of every randomized SVD.
    pub s: usize,
    /// Optional geometric step decay: `delta_i = delta * decay^i`.
    pub delta_decay: Option<f64>,
    pub seed: u64,
    /// Largest `min(m, n)` the dense oracle may be used for.
    pub oracle_cap: usize,
}

impl SvtParams {
    pub fn for_workload(w: Workload) -> Self {
        let (epsilon, i_reuse, strategy) = match w {
            Workload::Image => (0.05, 100, Strategy::ReuseU),
            Workload::Ratings => (0.17, 50, Strategy::ReuseQ),
            Workload::Generic => (1e-3, 50, Strategy::None),
        };
        SvtParams {
            tau: None,
            delta: None,
            l: 5,
            epsilon,
            i_max: 500,
            i_reuse,
            q_reuse: 10,
            strategy,
            p0: 3,
            p_min: 1,
            adaptive_power: true,
            s: crate::rsvd::DEFAULT_OVERSAMPLING,
            delta_decay: None,
            seed: 0,
            oracle_cap: DEFAULT_ORACLE_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("tau must be positive, got {t}"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("delta must be positive, got {d}"));
            }
        }
        if self.l == 0 {
            return bad("l must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.i_max == 0 {
            return bad("i_max must be at least 1".into());
        }
        if self.i_reuse == 0 {
            return bad("i_reuse must be at least 1".into());
        }
        if self.p_min == 0 || self.p0 < self.p_min {
            return bad(format!(
                "need 1 <= p_min <= p0, got p_min={} p0={}",
                self.p_min, self.p0
            ));
        }
        if let Some(d) = self.delta_decay {
            if !(d > 0.0 && d <= 1.0) {
                return bad(format!("delta decay must lie in (0, 1], got {d}"));
            }
        }
        Ok(())
    }
}

impl Default for SvtParams {
    fn default() -> Self {
        SvtParams::for_workload(Workload::Generic)
    }
}

/// Soft-thresholds a descending SVD at `tau`: keeps the `r` values strictly
/// above `tau`, shifted down by `tau`. `r = 0` gives empty factors.
pub fn shrink(svd: &SvdResult, tau: f64) -> Result<SvdResult> {
    if svd.order != SingularOrder::Descending {
        return Err(Error::InvalidParameter("shrink needs a descending SVD".into()));
    }
    let r = svd.s.iter().take_while(|&&x| x > tau).count();
    Ok(SvdResult {
        u: svd.u.columns(0, r),
        s: svd.s[..r].iter().map(|x| x - tau).collect(),
        v: svd.v.columns(0, r),
        order: SingularOrder::Descending,
    })
}

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} values",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Empty("mae of no values".into()));
    }
    let sum: f64 = pred.iter().zip(truth).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / pred.len() as f64)
}
