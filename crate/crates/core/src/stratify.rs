//! Quadtree stratification of an image into homogeneity-bounded subdomains.
//!
//! A node splits into NW, NE, SW, SE quadrants when its intensity variance
//! exceeds the policy threshold, it is shallower than `max_depth`, and the
//! smaller half of each side still has at least `min_side` pixels. Splits
//! fall at `ceil(w/2)`, `ceil(h/2)`, so the NW child receives the larger share
//! on odd sides.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imgio::{region_histogram, GrayImage, Histogram256, Rect};

pub const MAX_DEPTH_LIMIT: u32 = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StratifyError {
    #[error("invalid split policy: {0}")]
    InvalidPolicy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPolicy {
    pub max_depth: u32,
    pub min_side: usize,
    pub var_threshold: f64,
}

impl Default for SplitPolicy {
    fn default() -> Self {
        Self {
            max_depth: 4,
            min_side: 16,
            var_threshold: 400.0,
        }
    }
}

impl SplitPolicy {
    pub fn validate(&self) -> Result<(), StratifyError> {
        if self.max_depth > MAX_DEPTH_LIMIT {
            return Err(StratifyError::InvalidPolicy(format!(
                "max_depth {} exceeds {MAX_DEPTH_LIMIT}",
                self.max_depth
            )));
        }
        if self.min_side < 2 {
            return Err(StratifyError::InvalidPolicy(format!(
                "min_side {} must be at least 2",
                self.min_side
            )));
        }
        if !self.var_threshold.is_finite() || self.var_threshold < 0.0 {
            return Err(StratifyError::InvalidPolicy(format!(
                "var_threshold {} must be finite and nonnegative",
                self.var_threshold
            )));
        }
        Ok(())
    }
}

/// Summary statistics of a region, derived from its histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub count: u64,
    pub mean: f64,
    /// Population variance (divides by `count`).
    pub variance: f64,
    /// Shannon entropy of the gray-level distribution, in bits.
    pub entropy: f64,
}

impl RegionStats {
    pub fn from_histogram(hist: &Histogram256) -> Self {
        let count = hist.total();
        if count == 0 {
            return Self {
                count: 0,
                mean: 0.0,
                variance: 0.0,
                entropy: 0.0,
            };
        }
        let n = count as f64;
        let counts = hist.counts();
        let sum: u64 = counts.iter().enumerate().map(|(g, &c)| g as u64 * c).sum();
        let mean = sum as f64 / n;
        let mut variance = 0.0;
        let mut entropy = 0.0;
        for (g, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let d = g as f64 - mean;
            variance += c as f64 * d * d;
            let p = c as f64 / n;
            entropy -= p * p.log2();
        }
        Self {
            count,
            mean,
            variance: variance / n,
            entropy: entropy.max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionNode {
    pub rect: Rect,
    pub depth: u32,
    pub stats: RegionStats,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<RegionNode>,
}

impl RegionNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Gray-level entropy over its 8-bit maximum, in `[0, 1]`.
    pub fn complexity(&self) -> f64 {
        region_complexity(self)
    }
}

pub fn region_complexity(node: &RegionNode) -> f64 {
    (node.stats.entropy / 8.0).clamp(0.0, 1.0)
}

/// A leaf together with the node whose histogram drives its threshold.
///
/// The context is the nearest ancestor-or-self whose variance exceeds the
/// split threshold, falling back to the root. Leaves that are themselves
/// homogeneous therefore borrow the mixed histogram of the region that was
/// split around them.
#[derive(Debug, Clone, Copy)]
pub struct LeafContext<'a> {
    pub leaf: &'a RegionNode,
    pub context: &'a RegionNode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadTree {
    pub width: usize,
    pub height: usize,
    pub policy: SplitPolicy,
    pub root: RegionNode,
}

fn quadrants(r: &Rect) -> [Rect; 4] {
    let wl = r.w.div_ceil(2);
    let ht = r.h.div_ceil(2);
    let wr = r.w - wl;
    let hb = r.h - ht;
    [
        Rect::new(r.x0, r.y0, wl, ht),
        Rect::new(r.x0 + wl, r.y0, wr, ht),
        Rect::new(r.x0, r.y0 + ht, wl, hb),
        Rect::new(r.x0 + wl, r.y0 + ht, wr, hb),
    ]
}

fn build_node(img: &GrayImage, rect: Rect, depth: u32, policy: &SplitPolicy) -> RegionNode {
    let hist = region_histogram(img, &rect).expect("quadtree rects stay inside the image");
    let stats = RegionStats::from_histogram(&hist);
    let fits = rect.w - rect.w.div_ceil(2) >= policy.min_side
        && rect.h - rect.h.div_ceil(2) >= policy.min_side;
    let split = stats.variance > policy.var_threshold && depth < policy.max_depth && fits;
    let children = if split {
        quadrants(&rect)
            .into_iter()
            .map(|q| build_node(img, q, depth + 1, policy))
            .collect()
    } else {
        Vec::new()
    };
    RegionNode {
        rect,
        depth,
        stats,
        children,
    }
}

pub fn build_quadtree(img: &GrayImage, policy: SplitPolicy) -> Result<QuadTree, StratifyError> {
    policy.validate()?;
    Ok(QuadTree {
        width: img.width(),
        height: img.height(),
        policy,
        root: build_node(img, img.full_rect(), 0, &policy),
    })
}

impl QuadTree {
    /// Leaves in depth-first NW, NE, SW, SE order.
    pub fn leaves(&self) -> Vec<&RegionNode> {
        fn walk<'a>(n: &'a RegionNode, out: &mut Vec<&'a RegionNode>) {
            if n.is_leaf() {
                out.push(n);
            } else {
                n.children.iter().for_each(|c| walk(c, out));
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Leaves in the same order as [`QuadTree::leaves`], each paired with its
    /// threshold context.
    pub fn leaf_contexts(&self) -> Vec<LeafContext<'_>> {
        fn walk<'a>(
            n: &'a RegionNode,
            ctx: &'a RegionNode,
            threshold: f64,
            out: &mut Vec<LeafContext<'a>>,
        ) {
            let ctx = if n.stats.variance > threshold { n } else { ctx };
            if n.is_leaf() {
                out.push(LeafContext {
                    leaf: n,
                    context: ctx,
                });
            } else {
                n.children.iter().for_each(|c| walk(c, ctx, threshold, out));
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &self.root, self.policy.var_threshold, &mut out);
        out
    }

    pub fn max_leaf_depth(&self) -> u32 {
        self.leaves().iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        fn count(n: &RegionNode) -> usize {
            1 + n.children.iter().map(count).sum::<usize>()
        }
        count(&self.root)
    }
}
