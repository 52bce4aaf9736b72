//! Weighted two-class threshold objective.
//!
//! `J(t) = w_var * V(t) + w_ent * E(t)` where `V` is the Otsu between-class
//! variance normalized by the total variance and `E` is the Kapur entropy sum
//! normalized by `2 ln 256`. Class 0 holds intensities `<= t`.
//!
//! Cumulative mass and first moment are interpolated linearly between integer
//! gray levels: a fractional threshold `k + f` moves fraction `f` of bin
//! `k + 1` into class 0 (and `1 - f` into class 1). The class entropies treat
//! that fraction as a bin of its own mass, so `E` stays continuous and
//! nonnegative. At integer knots the value equals the discrete objective
//! exactly.

use serde::{Deserialize, Serialize};

use super::ThresholdError;
use crate::imgio::Histogram256;

const LN_256: f64 = 5.545_177_444_479_562; // ln 256

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub w_var: f64,
    pub w_ent: f64,
    pub adaptive: bool,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            w_var: 0.7,
            w_ent: 0.3,
            adaptive: true,
        }
    }
}

/// Weights actually applied to `V` and `E`; always nonnegative, summing to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveWeights {
    pub w_var: f64,
    pub w_ent: f64,
}

impl ObjectiveWeights {
    pub fn new(w_var: f64, w_ent: f64, adaptive: bool) -> Result<Self, ThresholdError> {
        let w = Self {
            w_var,
            w_ent,
            adaptive,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), ThresholdError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.w_var) || !ok(self.w_ent) || self.w_var + self.w_ent <= 0.0 {
            return Err(ThresholdError::InvalidWeights(format!(
                "weights ({}, {}) must be finite, nonnegative and not both zero",
                self.w_var, self.w_ent
            )));
        }
        Ok(())
    }

    /// Rescales so that `w_var + w_ent = 1`.
    pub fn normalized(&self) -> Self {
        let s = self.w_var + self.w_ent;
        Self {
            w_var: self.w_var / s,
            w_ent: self.w_ent / s,
            adaptive: self.adaptive,
        }
    }

    /// With `adaptive`, the entropy weight scales with region complexity so
    /// flat regions lean on the variance term alone.
    pub fn effective(&self, complexity: f64) -> EffectiveWeights {
        let n = self.normalized();
        if n.adaptive {
            let w_ent = n.w_ent * complexity.clamp(0.0, 1.0);
            EffectiveWeights {
                w_var: 1.0 - w_ent,
                w_ent,
            }
        } else {
            EffectiveWeights {
                w_var: n.w_var,
                w_ent: n.w_ent,
            }
        }
    }
}

/// Objective bound to one histogram, with prefix/suffix sums precomputed.
#[derive(Debug, Clone)]
pub struct ThresholdObjective {
    counts: [u64; 256],
    /// p_g ln p_g
    plogp: [f64; 256],
    // prefix sums over g <= k
    cum_n: [u64; 256],
    cum_s: [u64; 256],
    cum_plogp: [f64; 256],
    // suffix sums over g > k
    tail_n: [u64; 256],
    tail_s: [u64; 256],
    tail_plogp: [f64; 256],
    total: f64,
    variance: f64,
    weights: EffectiveWeights,
}

impl ThresholdObjective {
    pub fn new(
        hist: &Histogram256,
        weights: &ObjectiveWeights,
        complexity: f64,
    ) -> Result<Self, ThresholdError> {
        weights.validate()?;
        let counts = *hist.counts();
        let n = hist.total();
        if n == 0 {
            return Err(ThresholdError::EmptyHistogram);
        }
        let total = n as f64;
        let mut plogp = [0.0; 256];
        for (g, &c) in counts.iter().enumerate() {
            if c > 0 {
                let p = c as f64 / total;
                plogp[g] = p * p.ln();
            }
        }
        let mut cum_n = [0u64; 256];
        let mut cum_s = [0u64; 256];
        let mut cum_plogp = [0.0; 256];
        let (mut an, mut as_, mut ap) = (0u64, 0u64, 0.0);
        for g in 0..256 {
            an += counts[g];
            as_ += g as u64 * counts[g];
            ap += plogp[g];
            cum_n[g] = an;
            cum_s[g] = as_;
            cum_plogp[g] = ap;
        }
        let mut tail_n = [0u64; 256];
        let mut tail_s = [0u64; 256];
        let mut tail_plogp = [0.0; 256];
        let (mut bn, mut bs, mut bp) = (0u64, 0u64, 0.0);
        for g in (0..256).rev() {
            tail_n[g] = bn;
            tail_s[g] = bs;
            tail_plogp[g] = bp;
            bn += counts[g];
            bs += g as u64 * counts[g];
            bp += plogp[g];
        }
        let mean = as_ as f64 / total;
        let variance = counts
            .iter()
            .enumerate()
            .map(|(g, &c)| c as f64 * (g as f64 - mean).powi(2))
            .sum::<f64>()
            / total;
        Ok(Self {
            counts,
            plogp,
            cum_n,
            cum_s,
            cum_plogp,
            tail_n,
            tail_s,
            tail_plogp,
            total,
            variance,
            weights: weights.effective(complexity),
        })
    }

    pub fn weights(&self) -> EffectiveWeights {
        self.weights
    }

    pub fn mean(&self) -> f64 {
        self.cum_s[255] as f64 / self.total
    }

    /// Class masses, first moments and `p ln p` sums at a (clamped) threshold.
    fn split(&self, t: f64) -> [f64; 6] {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 255.0) };
        let k = t.floor() as usize;
        if k >= 255 {
            return [
                self.cum_n[255] as f64,
                self.cum_s[255] as f64,
                self.cum_plogp[255],
                0.0,
                0.0,
                0.0,
            ];
        }
        let f = t - k as f64;
        let m = k + 1;
        let cm = self.counts[m] as f64;
        let gm = m as f64;
        let pm = cm / self.total;
        // (a p) ln (a p) = a p ln p + a p ln a
        let piece = |a: f64| {
            if a <= 0.0 {
                0.0
            } else {
                a * self.plogp[m] + a * pm * a.ln()
            }
        };
        [
            self.cum_n[k] as f64 + f * cm,
            self.cum_s[k] as f64 + f * gm * cm,
            self.cum_plogp[k] + piece(f),
            self.tail_n[m] as f64 + (1.0 - f) * cm,
            self.tail_s[m] as f64 + (1.0 - f) * gm * cm,
            self.tail_plogp[m] + piece(1.0 - f),
        ]
    }

    /// Normalized between-class variance `V(t)`.
    pub fn between_class(&self, t: f64) -> f64 {
        let [n0, s0, _, n1, s1, _] = self.split(t);
        if self.variance <= 0.0 || n0 <= 0.0 || n1 <= 0.0 {
            return 0.0;
        }
        let w0 = n0 / self.total;
        let w1 = n1 / self.total;
        let d = s0 / n0 - s1 / n1;
        w0 * w1 * d * d / self.variance
    }

    /// Normalized Kapur entropy sum `E(t)`, clamped to `[0, 1]`.
    pub fn entropy(&self, t: f64) -> f64 {
        let [n0, _, p0, n1, _, p1] = self.split(t);
        let class_entropy = |n: f64, plogp: f64| {
            if n <= 0.0 {
                0.0
            } else {
                let w = n / self.total;
                w.ln() - plogp / w
            }
        };
        let h = class_entropy(n0, p0) + class_entropy(n1, p1);
        (h / (2.0 * LN_256)).clamp(0.0, 1.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let w = self.weights;
        let mut j = 0.0;
        if w.w_var > 0.0 {
            j += w.w_var * self.between_class(t);
        }
        if w.w_ent > 0.0 {
            j += w.w_ent * self.entropy(t);
        }
        j
    }
}

/// Evaluates the weighted objective at a (possibly fractional) threshold.
pub fn objective(
    hist: &Histogram256,
    t: f64,
    weights: &ObjectiveWeights,
    complexity: f64,
) -> Result<f64, ThresholdError> {
    Ok(ThresholdObjective::new(hist, weights, complexity)?.eval(t))
}
