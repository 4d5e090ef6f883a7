//! Balancing solver for the four-segment spiral, divergence classification of
//! refinement traces, and empirical threshold scans.

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{ExampleConfig, GenError};
use crate::pslg::Pslg;
use crate::refine::{self, Algorithm, EventKind, RefineError, RefinementConfig, RefinementTrace, RunStatus};

/// Starting point for the balancing solve: (theta, a, alpha1, alpha2) with
/// angles in degrees.
pub const DEFAULT_GUESS: [f64; 4] = [75.0, 1.0, 29.0, 30.0];

const SOLVER_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 100;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("parameters outside the solver domain: {0}")]
    Domain(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian at iteration {0}")]
    Singular(usize),
    #[error("invalid bracket: {0}")]
    Bracket(String),
    #[error("inconclusive probe at alpha = {0} even with a widened budget")]
    Inconclusive(f64),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error("generator failed: {0}")]
    Generator(String),
}

impl From<GenError> for AnalysisError {
    fn from(e: GenError) -> Self {
        AnalysisError::Generator(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumSolution {
    pub theta_deg: f64,
    pub a: f64,
    pub alpha1_deg: f64,
    pub alpha2_deg: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn check_domain(theta: f64, a: f64, alpha1: f64, alpha2: f64) -> Result<(), AnalysisError> {
    let right = std::f64::consts::FRAC_PI_2;
    if !(theta > 0.0 && theta < right) {
        return Err(AnalysisError::Domain(format!("theta = {theta} rad")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(AnalysisError::Domain(format!("a = {a}")));
    }
    for (name, v) in [("alpha1", alpha1), ("alpha2", alpha2)] {
        if !(v > 0.0 && v < right) {
            return Err(AnalysisError::Domain(format!("{name} = {v} rad")));
        }
    }
    Ok(())
}

/// Residuals of the balancing system (angles in radians):
///
/// ```text
/// r1 = sin θ − cos θ − a/√2
/// r2 = cos θ − 2a + cos α1 · √(4a² + 1 − 4a cos θ)
/// r3 = sin θ − tan α2 · (cos θ + √2/a)
/// r4 = α1 − α2
/// ```
///
/// r1 puts the second skinny triangle's circumcenter on the diametral circle
/// of the segment it splits; r2 and r3 tie α1 and α2 to the two skinny
/// triangles; r4 balances them.
pub fn residuals(theta: f64, a: f64, alpha1: f64, alpha2: f64) -> Result<[f64; 4], AnalysisError> {
    check_domain(theta, a, alpha1, alpha2)?;
    let r2 = 2f64.sqrt();
    let (s, c) = theta.sin_cos();
    let d = (4.0 * a * a + 1.0 - 4.0 * a * c).sqrt();
    Ok([s - c - a / r2, c - 2.0 * a + alpha1.cos() * d, s - alpha2.tan() * (c + r2 / a), alpha1 - alpha2])
}

/// Analytic Jacobian of [`residuals`]; rows are residuals, columns
/// (θ, a, α1, α2).
pub fn jacobian(theta: f64, a: f64, alpha1: f64, alpha2: f64) -> Result<[[f64; 4]; 4], AnalysisError> {
    check_domain(theta, a, alpha1, alpha2)?;
    let r2 = 2f64.sqrt();
    let (s, c) = theta.sin_cos();
    let d = (4.0 * a * a + 1.0 - 4.0 * a * c).sqrt();
    let t2 = alpha2.tan();
    let sec2 = 1.0 + t2 * t2;
    Ok([
        [c + s, -1.0 / r2, 0.0, 0.0],
        [-s + alpha1.cos() * 2.0 * a * s / d, -2.0 + alpha1.cos() * (4.0 * a - 2.0 * c) / d, -alpha1.sin() * d, 0.0],
        [c + t2 * s, t2 * r2 / (a * a), 0.0, -sec2 * (c + r2 / a)],
        [0.0, 0.0, 1.0, -1.0],
    ])
}

fn norm(r: &[f64; 4]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton iteration from `guess` = (θ°, a, α1°, α2°).
pub fn solve_optimum(guess: [f64; 4]) -> Result<OptimumSolution, AnalysisError> {
    let mut x = Vector4::new(guess[0].to_radians(), guess[1], guess[2].to_radians(), guess[3].to_radians());
    let eval = |x: &Vector4<f64>| residuals(x[0], x[1], x[2], x[3]);
    let mut r = eval(&x)?;
    let mut iterations = 0;
    while norm(&r) >= SOLVER_TOL {
        if iterations == MAX_ITERATIONS {
            return Err(AnalysisError::NoConvergence { iterations, residual: norm(&r) });
        }
        iterations += 1;
        let j = Matrix4::from_fn({
            let j = jacobian(x[0], x[1], x[2], x[3])?;
            move |i, k| j[i][k]
        });
        let rhs = -Vector4::from_column_slice(&r);
        let step = j.lu().solve(&rhs).ok_or(AnalysisError::Singular(iterations))?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = x + step * lambda;
            if let Ok(rt) = eval(&trial) {
                if norm(&rt) < norm(&r) {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            lambda /= 2.0;
        }
        match accepted {
            Some((nx, nr)) => {
                x = nx;
                r = nr;
            }
            None => return Err(AnalysisError::NoConvergence { iterations, residual: norm(&r) }),
        }
    }
    Ok(OptimumSolution {
        theta_deg: x[0].to_degrees(),
        a: x[1],
        alpha1_deg: x[2].to_degrees(),
        alpha2_deg: x[3].to_degrees(),
        residual_norm: norm(&r),
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Terminated,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceVerdict {
    pub status: Verdict,
    /// Fitted length ratio per split event.
    pub decay_ratio: Option<f64>,
    /// Lineages of one period of the cascade, in event order.
    pub lineage_cycle: Option<Vec<usize>>,
}

/// Longest lineage period looked for.
pub const MAX_PERIOD: usize = 8;
/// Consecutive period-to-period ratios that must agree.
pub const WINDOW: usize = 8;
/// Relative agreement required of each ratio.
pub const RATIO_TOLERANCE: f64 = 0.01;

/// Classifies a run. Splits that set a new shortest length form the cascade
/// front; the run is diverging when the tail of that front repeats a lineage
/// cycle of period p and every length ratio p events apart agrees within 1%
/// over the last [`WINDOW`] pairs. The decay ratio is the p-th root.
pub fn classify(trace: &RefinementTrace, status: RunStatus) -> DivergenceVerdict {
    if status == RunStatus::Terminated {
        return DivergenceVerdict { status: Verdict::Terminated, decay_ratio: None, lineage_cycle: None };
    }
    let mut front: Vec<(usize, f64)> = Vec::new();
    for e in trace.events.iter().filter(|e| e.kind == EventKind::SegmentSplit) {
        let (Some(l), Some(len)) = (e.lineage, e.length) else { continue };
        // equal-length siblings differ only by rounding; they are not new fronts
        if front.last().is_none_or(|&(_, m)| len < m * (1.0 - 1e-9)) {
            front.push((l, len));
        }
    }
    for p in 1..=MAX_PERIOD {
        if front.len() < WINDOW + p {
            break;
        }
        let tail = &front[front.len() - WINDOW - p..];
        if (0..WINDOW).any(|k| tail[k].0 != tail[k + p].0) {
            continue;
        }
        let ratios: Vec<f64> = (0..WINDOW).map(|k| tail[k + p].1 / tail[k].1).collect();
        let fitted = (ratios.iter().map(|r| r.ln()).sum::<f64>() / WINDOW as f64).exp();
        if ratios.iter().all(|r| (r / fitted - 1.0).abs() <= RATIO_TOLERANCE) && fitted < 1.0 {
            let cycle = tail[WINDOW..].iter().map(|&(l, _)| l).collect();
            return DivergenceVerdict {
                status: Verdict::Diverging,
                decay_ratio: Some(fitted.powf(1.0 / p as f64)),
                lineage_cycle: Some(cycle),
            };
        }
    }
    DivergenceVerdict { status: Verdict::Inconclusive, decay_ratio: None, lineage_cycle: None }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub alpha_deg: f64,
    pub status: RunStatus,
    pub verdict: Verdict,
    pub insertions: usize,
    pub max_insertions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub algorithm: Algorithm,
    /// Midpoint of the final bracket.
    pub threshold_deg: f64,
    /// Largest probed angle that terminated.
    pub lo_deg: f64,
    /// Smallest probed angle that diverged.
    pub hi_deg: f64,
    pub tol_deg: f64,
    pub probes: Vec<Probe>,
}

/// One refinement run classified; an inconclusive result is retried once
/// with four times the budget.
pub fn probe(p: &Pslg, alg: Algorithm, base: &RefinementConfig, alpha: f64) -> Result<Probe, AnalysisError> {
    let mut cfg = RefinementConfig { alpha_deg: alpha, ..*base };
    for attempt in 0..2 {
        let out = refine::refine(p, &cfg, alg)?;
        let verdict = classify(&out.trace, out.status).status;
        if verdict != Verdict::Inconclusive {
            return Ok(Probe {
                alpha_deg: alpha,
                status: out.status,
                verdict,
                insertions: out.insertions,
                max_insertions: cfg.max_insertions,
            });
        }
        if attempt == 0 {
            cfg.max_insertions = cfg.max_insertions.saturating_mul(4);
        }
    }
    Err(AnalysisError::Inconclusive(alpha))
}

/// Number of angles probed concurrently per narrowing round.
const PROBES_PER_ROUND: usize = 3;

/// Narrows `[lo, hi]` to width `tol` around the largest angle at which
/// refinement still terminates. `lo` must terminate and `hi` diverge.
pub fn threshold_scan_pslg(
    p: &Pslg,
    alg: Algorithm,
    lo: f64,
    hi: f64,
    tol: f64,
    base: &RefinementConfig,
) -> Result<ScanReport, AnalysisError> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(AnalysisError::Bracket(format!("need lo < hi and tol > 0, got [{lo}, {hi}] tol {tol}")));
    }
    let ends: Vec<Result<Probe, AnalysisError>> = [lo, hi].par_iter().map(|&a| probe(p, alg, base, a)).collect();
    let mut probes = Vec::new();
    for r in ends {
        probes.push(r?);
    }
    if probes[0].verdict != Verdict::Terminated {
        return Err(AnalysisError::Bracket(format!("refinement does not terminate at lo = {lo}")));
    }
    if probes[1].verdict != Verdict::Diverging {
        return Err(AnalysisError::Bracket(format!("refinement does not diverge at hi = {hi}")));
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tol {
        let k = PROBES_PER_ROUND as f64 + 1.0;
        let alphas: Vec<f64> = (1..=PROBES_PER_ROUND).map(|i| lo + (hi - lo) * i as f64 / k).collect();
        let round: Vec<Result<Probe, AnalysisError>> = alphas.par_iter().map(|&a| probe(p, alg, base, a)).collect();
        let round: Vec<Probe> = round.into_iter().collect::<Result<_, _>>()?;
        // keep the bracket between the last termination below the first divergence
        let first_div = round.iter().position(|q| q.verdict == Verdict::Diverging);
        let below = &round[..first_div.unwrap_or(round.len())];
        if let Some(q) = below.iter().rev().find(|q| q.verdict == Verdict::Terminated) {
            lo = q.alpha_deg;
        }
        if let Some(i) = first_div {
            hi = round[i].alpha_deg;
        }
        probes.extend(round);
    }
    Ok(ScanReport { algorithm: alg, threshold_deg: (lo + hi) / 2.0, lo_deg: lo, hi_deg: hi, tol_deg: tol, probes })
}

/// [`threshold_scan_pslg`] on a generated configuration.
pub fn threshold_scan(
    example: &ExampleConfig,
    alg: Algorithm,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<ScanReport, AnalysisError> {
    let p = example.generate()?;
    threshold_scan_pslg(&p, alg, lo, hi, tol, &RefinementConfig::default())
}
