//! Seeded synthetic data: nested Gaussian blobs whose centres form a small
//! hierarchy (pairs of blobs inside well-separated super-groups), the
//! academic-example shape used throughout the test suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DataTable;

/// Geometry of the nested-blob generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedBlobConfig {
    /// Number of leaf blobs (default 4).
    pub blobs: usize,
    /// Points drawn per blob (default 15).
    pub points_per_blob: usize,
    /// Depth of the centre hierarchy; each level splits every centre in two
    /// along an alternating axis (default 2, giving 4 nested blobs).
    pub nesting_levels: usize,
    /// Distance between the two halves at the top split (default 14).
    pub base_separation: f64,
    /// Per-level scale factor of the split distance (default ~sqrt(2)).
    pub decay: f64,
    /// Isotropic Gaussian noise around each blob centre (default 0.5).
    pub noise_sigma: f64,
    /// Feature dimension (default 3).
    pub dim: usize,
    pub seed: u64,
}

impl Default for NestedBlobConfig {
    fn default() -> Self {
        // Each parent splits along its own axis, so in 3-D the default two
        // levels place the four leaf blobs on two skew perpendicular
        // segments. With the second split wider by sqrt(2) those four
        // centres are equidistant (a regular tetrahedron): every blob is as
        // far from its sibling as from the other pair, which makes the
        // natural cluster count unambiguous.
        Self {
            blobs: 4,
            points_per_blob: 15,
            nesting_levels: 2,
            base_separation: 14.0,
            decay: std::f64::consts::SQRT_2,
            noise_sigma: 0.5,
            dim: 3,
            seed: 7,
        }
    }
}

/// One standard-normal draw via Box-Muller, keeping the dependency set to
/// the plain RNG.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Generates the nested-blob dataset; returns the points and the planted
/// blob label of every point.
pub fn nested_blobs(cfg: &NestedBlobConfig) -> Result<(DataTable, Vec<usize>)> {
    if cfg.blobs == 0 || cfg.points_per_blob == 0 || cfg.dim == 0 {
        return Err(Error::Config("blobs, points_per_blob and dim must be positive".into()));
    }
    if cfg.blobs > 1 << cfg.nesting_levels {
        return Err(Error::Config(format!(
            "{} blobs do not fit into {} nesting levels (max {})",
            cfg.blobs,
            cfg.nesting_levels,
            1usize << cfg.nesting_levels
        )));
    }
    if !(cfg.base_separation > 0.0 && cfg.decay > 0.0 && cfg.noise_sigma >= 0.0) {
        return Err(Error::Config("separation, decay and noise must be non-negative".into()));
    }

    // Build the centre hierarchy: start from the origin and split every
    // centre in two. The split axis rotates with both the level and the
    // parent's position, so sibling groups separate along different
    // directions instead of stacking up on one axis.
    let mut centers: Vec<Vec<f64>> = vec![vec![0.0; cfg.dim]];
    let mut separation = cfg.base_separation;
    for level in 0..cfg.nesting_levels {
        let mut next = Vec::with_capacity(centers.len() * 2);
        for (parent, c) in centers.iter().enumerate() {
            let axis = (level + parent) % cfg.dim;
            for sign in [-0.5, 0.5] {
                let mut child = c.clone();
                child[axis] += sign * separation;
                next.push(child);
            }
        }
        centers = next;
        separation *= cfg.decay;
    }
    centers.truncate(cfg.blobs);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.blobs * cfg.points_per_blob);
    let mut labels = Vec::with_capacity(cfg.blobs * cfg.points_per_blob);
    for (blob, center) in centers.iter().enumerate() {
        for _ in 0..cfg.points_per_blob {
            let point: Vec<f64> = center
                .iter()
                .map(|&c| c + cfg.noise_sigma * standard_normal(&mut rng))
                .collect();
            rows.push(point);
            labels.push(blob);
        }
    }
    Ok((DataTable::from_rows(&rows)?, labels))
}
