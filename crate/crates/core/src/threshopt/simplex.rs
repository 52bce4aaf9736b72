//! One-dimensional Nelder-Mead on a two-vertex simplex.

use serde::{Deserialize, Serialize};

use super::ThresholdError;

/// Offset of the second initial vertex, in gray levels.
pub const INITIAL_STEP: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexParams {
    pub max_iter: usize,
    /// Stop once the two vertices are closer than this.
    pub diameter_tol: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for SimplexParams {
    fn default() -> Self {
        Self {
            max_iter: 200,
            diameter_tol: 0.5,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

impl SimplexParams {
    pub fn validate(&self) -> Result<(), ThresholdError> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        let problem = if self.max_iter < 1 {
            Some("max_iter must be at least 1")
        } else if !(self.diameter_tol > 0.0 && self.diameter_tol.is_finite()) {
            Some("diameter_tol must be positive")
        } else if !(self.reflection > 0.0 && self.reflection.is_finite()) {
            Some("reflection must be positive")
        } else if !(self.expansion > self.reflection && self.expansion.is_finite()) {
            Some("expansion must exceed reflection")
        } else if !unit(self.contraction) {
            Some("contraction must lie in (0, 1)")
        } else if !unit(self.shrink) {
            Some("shrink must lie in (0, 1)")
        } else {
            None
        };
        match problem {
            Some(p) => Err(ThresholdError::InvalidParams(p.into())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexResult {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes `f` starting from the simplex `{x0, x0 + 16}`.
///
/// Internally minimizes `-f`. Always returns the best point evaluated.
pub fn nelder_mead_1d<F: Fn(f64) -> f64>(f: F, x0: f64, params: &SimplexParams) -> SimplexResult {
    let cost = |x: f64| -f(x);
    let mut verts = [(x0, cost(x0)), (x0 + INITIAL_STEP, cost(x0 + INITIAL_STEP))];
    let mut best_seen = if verts[1].1 < verts[0].1 {
        verts[1]
    } else {
        verts[0]
    };
    let track = |p: (f64, f64), best: &mut (f64, f64)| {
        if p.1 < best.1 {
            *best = p;
        }
        p
    };

    let mut iterations = 0;
    let mut converged = false;
    loop {
        // order: verts[0] best, verts[1] worst; ties keep the lower x first
        if verts[1].1 < verts[0].1 || (verts[1].1 == verts[0].1 && verts[1].0 < verts[0].0) {
            verts.swap(0, 1);
        }
        if (verts[1].0 - verts[0].0).abs() < params.diameter_tol {
            converged = true;
            break;
        }
        if iterations >= params.max_iter {
            break;
        }
        iterations += 1;

        let (xb, fb) = verts[0];
        let (xw, fw) = verts[1];
        // centroid of all vertices but the worst
        let c = xb;
        let xr = c + params.reflection * (c - xw);
        let r = track((xr, cost(xr)), &mut best_seen);

        if r.1 < fb {
            let xe = c + params.expansion * (xr - c);
            let e = track((xe, cost(xe)), &mut best_seen);
            verts[1] = if e.1 < r.1 { e } else { r };
            continue;
        }
        // with one non-worst vertex, "better than second worst" is "better than best"
        let contracted = if r.1 < fw {
            let xc = c + params.contraction * (xr - c);
            let p = track((xc, cost(xc)), &mut best_seen);
            (p.1 <= r.1).then_some(p)
        } else {
            let xc = c + params.contraction * (xw - c);
            let p = track((xc, cost(xc)), &mut best_seen);
            (p.1 < fw).then_some(p)
        };
        match contracted {
            Some(p) => verts[1] = p,
            None => {
                let xs = xb + params.shrink * (xw - xb);
                verts[1] = track((xs, cost(xs)), &mut best_seen);
            }
        }
    }

    SimplexResult {
        x: best_seen.0,
        value: -best_seen.1,
        iterations,
        converged,
    }
}
