//! Per-subdomain threshold optimization and mask stitching.
//!
//! Each leaf's threshold maximizes the weighted objective over the histogram
//! of its context region (see [`crate::stratify::LeafContext`]). The
//! continuous optimum from the simplex is rounded, then refined by an integer
//! hill-climb so the reported threshold is a local maximum over `t +/- 1`.

mod objective;
mod simplex;

pub use objective::{objective, EffectiveWeights, ObjectiveWeights, ThresholdObjective};
pub use simplex::{nelder_mead_1d, SimplexParams, SimplexResult, INITIAL_STEP};

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::imgio::{region_histogram, GrayImage, Histogram256, ImageError, Rect};
use crate::stratify::{QuadTree, RegionStats};

/// Half-width of the integer refinement window around the rounded optimum.
pub const REFINE_RADIUS: i32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThresholdError {
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("invalid objective weights: {0}")]
    InvalidWeights(String),
    #[error("invalid simplex parameters: {0}")]
    InvalidParams(String),
    #[error("report does not match tree: {0}")]
    ReportTreeMismatch(String),
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeafOptimum {
    pub threshold: u8,
    /// Simplex optimum before rounding.
    pub t_continuous: f64,
    pub objective: f64,
    pub weights: EffectiveWeights,
    pub iterations: usize,
    pub converged: bool,
}

/// Scans `[center - 3, center + 3]`, keeping the smallest argmax, and
/// re-centers while a neighbor just outside the window is strictly better.
fn refine_integer(obj: &ThresholdObjective, start: i32) -> (u8, f64) {
    let eval = |t: i32| obj.eval(t as f64);
    let mut center = start.clamp(0, 255);
    loop {
        let lo = (center - REFINE_RADIUS).max(0);
        let hi = (center + REFINE_RADIUS).min(255);
        let (mut best_t, mut best_j) = (lo, eval(lo));
        for t in lo + 1..=hi {
            let j = eval(t);
            if j > best_j {
                best_t = t;
                best_j = j;
            }
        }
        let outer = if best_t == lo && lo > 0 {
            Some(lo - 1)
        } else if best_t == hi && hi < 255 {
            Some(hi + 1)
        } else {
            None
        };
        match outer {
            Some(o) if eval(o) > best_j => center = o,
            _ => return (best_t as u8, best_j),
        }
    }
}

pub fn optimize_leaf(
    hist: &Histogram256,
    complexity: f64,
    weights: &ObjectiveWeights,
    params: &SimplexParams,
) -> Result<LeafOptimum, ThresholdError> {
    params.validate()?;
    let obj = ThresholdObjective::new(hist, weights, complexity)?;
    let res = nelder_mead_1d(|t| obj.eval(t), obj.mean(), params);
    let rounded = res.x.clamp(0.0, 255.0).round() as i32;
    let (threshold, value) = refine_integer(&obj, rounded);
    Ok(LeafOptimum {
        threshold,
        t_continuous: res.x,
        objective: value,
        weights: obj.weights(),
        iterations: res.iterations,
        converged: res.converged,
    })
}

/// Exhaustive argmax of the objective over all 256 integer thresholds,
/// smallest threshold on ties.
pub fn oracle_best_threshold(
    hist: &Histogram256,
    complexity: f64,
    weights: &ObjectiveWeights,
) -> Result<(u8, f64), ThresholdError> {
    let obj = ThresholdObjective::new(hist, weights, complexity)?;
    let mut best = (0u8, obj.eval(0.0));
    for t in 1..=255u8 {
        let j = obj.eval(t as f64);
        if j > best.1 {
            best = (t, j);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdEntry {
    pub rect: Rect,
    /// Region whose histogram was optimized.
    pub context: Rect,
    pub threshold: u8,
    pub t_continuous: f64,
    pub objective: f64,
    pub weights: EffectiveWeights,
    pub iterations: usize,
    pub converged: bool,
    /// `J_oracle - J(threshold)`, when the oracle was run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub entries: Vec<ThresholdEntry>,
}

impl ThresholdReport {
    pub fn thresholds(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.threshold).collect()
    }

    /// Fills `oracle_gap` for every entry with an exhaustive scan.
    pub fn attach_oracle(
        &mut self,
        img: &GrayImage,
        tree: &QuadTree,
        weights: &ObjectiveWeights,
    ) -> Result<(), ThresholdError> {
        check_matches(tree, self)?;
        for entry in &mut self.entries {
            let hist = region_histogram(img, &entry.context)?;
            let cx = (RegionStats::from_histogram(&hist).entropy / 8.0).clamp(0.0, 1.0);
            let (_, best) = oracle_best_threshold(&hist, cx, weights)?;
            entry.oracle_gap = Some(best - entry.objective);
        }
        Ok(())
    }
}

/// Optimizes every leaf of `tree`. Entries follow the tree's leaf order
/// whatever the execution strategy.
pub fn optimize_tree(
    img: &GrayImage,
    tree: &QuadTree,
    weights: &ObjectiveWeights,
    params: &SimplexParams,
    exec: Execution,
) -> Result<ThresholdReport, ThresholdError> {
    weights.validate()?;
    params.validate()?;
    if (img.width(), img.height()) != (tree.width, tree.height) {
        return Err(ThresholdError::ReportTreeMismatch(format!(
            "tree built for {}x{}, image is {}x{}",
            tree.width,
            tree.height,
            img.width(),
            img.height()
        )));
    }
    let contexts = tree.leaf_contexts();
    let entries = exec.map(&contexts, |lc| {
        let hist = region_histogram(img, &lc.context.rect)?;
        let opt = optimize_leaf(&hist, lc.context.complexity(), weights, params)?;
        Ok(ThresholdEntry {
            rect: lc.leaf.rect,
            context: lc.context.rect,
            threshold: opt.threshold,
            t_continuous: opt.t_continuous,
            objective: opt.objective,
            weights: opt.weights,
            iterations: opt.iterations,
            converged: opt.converged,
            oracle_gap: None,
        })
    });
    Ok(ThresholdReport {
        entries: entries.into_iter().collect::<Result<_, ThresholdError>>()?,
    })
}

fn check_matches(tree: &QuadTree, report: &ThresholdReport) -> Result<(), ThresholdError> {
    let leaves = tree.leaves();
    if leaves.len() != report.entries.len() {
        return Err(ThresholdError::ReportTreeMismatch(format!(
            "{} leaves but {} report entries",
            leaves.len(),
            report.entries.len()
        )));
    }
    for (i, (leaf, entry)) in leaves.iter().zip(&report.entries).enumerate() {
        if leaf.rect != entry.rect {
            return Err(ThresholdError::ReportTreeMismatch(format!(
                "leaf {i} is {:?} but entry covers {:?}",
                leaf.rect, entry.rect
            )));
        }
    }
    Ok(())
}

/// Binary mask: within each leaf, intensity `<= threshold` maps to 0, else 255.
pub fn segment(
    img: &GrayImage,
    tree: &QuadTree,
    report: &ThresholdReport,
) -> Result<GrayImage, ThresholdError> {
    if (img.width(), img.height()) != (tree.width, tree.height) {
        return Err(ThresholdError::ReportTreeMismatch(format!(
            "tree built for {}x{}, image is {}x{}",
            tree.width,
            tree.height,
            img.width(),
            img.height()
        )));
    }
    check_matches(tree, report)?;
    let w = img.width();
    let mut mask = vec![0u8; w * img.height()];
    for entry in &report.entries {
        let r = entry.rect;
        for y in r.y0..r.y1() {
            let src = img.row_span(&r, y);
            let dst = &mut mask[y * w + r.x0..y * w + r.x1()];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = if s <= entry.threshold { 0 } else { 255 };
            }
        }
    }
    Ok(GrayImage::new(w, img.height(), mask)?)
}
