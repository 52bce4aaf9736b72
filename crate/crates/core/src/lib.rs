//! Quadtree-stratified adaptive threshold segmentation of 8-bit grayscale
//! images and kernel generalized discriminant analysis.
//!
//! * [`imgio`]: images, PGM I/O, region histograms.
//! * [`stratify`]: quadtree subdivision into homogeneous subdomains.
//! * [`threshopt`]: weighted threshold objective, simplex search, stitching.
//! * [`kgda`]: kernel scatter matrices and K-orthogonal discriminants.

pub mod exec;
pub mod imgio;
pub mod kgda;
pub mod stratify;
pub mod threshopt;

pub use exec::Execution;
pub use imgio::{load_pgm, region_histogram, save_pgm, GrayImage, Histogram256, ImageError, Rect};
pub use kgda::{
    classify_nearest_mean, compute_kernel_matrix, fisher_criterion, project, scatter_matrices,
    train_gda, train_gda_with, Extraction, GdaError, GdaModel, GdaOptions, KernelMatrix,
    KernelSpec, LabeledDataset, ScatterMatrices,
};
pub use stratify::{build_quadtree, region_complexity, QuadTree, RegionNode, SplitPolicy};
pub use threshopt::{
    objective, optimize_leaf, optimize_tree, oracle_best_threshold, segment, ObjectiveWeights,
    SimplexParams, ThresholdReport,
};
