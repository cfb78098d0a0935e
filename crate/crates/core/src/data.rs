//! In-memory dataset generators.
//!
//! Two families cover the laboratory's needs:
//!
//! - **collage**: grayscale canvases with one class-defining glyph (bar,
//!   cross, disc, ring) at random position, size, and orientation over
//!   structured background clutter. The glyph occupies only part of the
//!   canvas, so rectangular crops frequently miss it — exactly the situation
//!   where a geometric mixing weight misstates the label mixture. Glyph ink
//!   is roughly mass-normalized across classes and everything else about the
//!   layout is randomized, so a linear probe on raw pixels stays near chance
//!   while a small conv net separates the classes comfortably.
//! - **blobs**: axis-aligned Gaussian clusters with a configurable pairwise
//!   mean distance, squashed coordinate-wise through sigmoid(x/3) into (0, 1)
//!   and laid out as a square single-channel image (zero-padded). Cheap,
//!   linearly separable at high separation, exactly chance at separation 0.
//!
//! Generators consume a caller-provided stream (train and test sets use
//! different streams of the same root seed) and are bit-reproducible.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::mathf;
use crate::sampling::RngState;
use crate::tensor::Tensor;

/// A labeled image set, images `[N, C, H, W]` with pixels in [0, 1].
#[derive(Debug, Clone)]
pub struct Dataset {
    pub images: Tensor,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Per-sample shape (C, H, W).
    pub fn input_shape(&self) -> (usize, usize, usize) {
        let s = self.images.shape();
        (s[1], s[2], s[3])
    }

    /// Copies the given samples into a fresh batch (images and labels).
    pub fn gather(&self, idx: &[usize]) -> Result<(Tensor, Vec<usize>), CoreError> {
        let (c, h, w) = self.input_shape();
        let plane = c * h * w;
        let mut data = Vec::with_capacity(idx.len() * plane);
        let src = self.images.as_slice();
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            if i >= self.len() {
                return Err(CoreError::param("Dataset::gather", format!("index {i} out of {}", self.len())));
            }
            data.extend_from_slice(&src[i * plane..(i + 1) * plane]);
            labels.push(self.labels[i]);
        }
        Ok((Tensor::from_vec(&[idx.len(), c, h, w], data)?, labels))
    }
}

/// Collage generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CollageSpec {
    pub n: usize,
    /// 2 to 4 glyph classes (bar, cross, disc, ring in that order).
    pub classes: usize,
    pub height: usize,
    pub width: usize,
    /// Glyph bounding-box area as a fraction of the canvas, lower bound.
    pub object_min_frac: f64,
    /// Upper bound of the same fraction.
    pub object_max_frac: f64,
    /// Amplitude of the background clutter rectangles.
    pub clutter: f64,
}

impl Default for CollageSpec {
    fn default() -> Self {
        CollageSpec {
            n: 0,
            classes: 4,
            height: 32,
            width: 32,
            object_min_frac: 0.1,
            object_max_frac: 0.4,
            clutter: 0.35,
        }
    }
}

fn glyph_mask(class: usize, s: usize, orient: usize) -> Vec<bool> {
    let mut mask = vec![false; s * s];
    let m = (s as f64 - 1.0) / 2.0;
    let thickness = (0.18 * s as f64).max(2.0);
    let half_len = s as f64 / 2.0;
    let bar_hit = |dx: f64, dy: f64, angle_steps: usize| -> bool {
        let ang = angle_steps as f64 * core::f64::consts::FRAC_PI_4;
        let (dirx, diry) = (mathf::cos(ang), mathf::sin(ang));
        let along = dx * dirx + dy * diry;
        let perp = -dx * diry + dy * dirx;
        mathf::abs(perp) <= thickness / 2.0 && mathf::abs(along) <= half_len
    };
    for y in 0..s {
        for x in 0..s {
            let dx = x as f64 - m;
            let dy = y as f64 - m;
            let r = mathf::sqrt(dx * dx + dy * dy);
            let hit = match class {
                // bar: one stroke at 0/45/90/135 degrees
                0 => bar_hit(dx, dy, orient % 4),
                // cross: two perpendicular strokes, upright or diagonal
                1 => bar_hit(dx, dy, orient % 2) || bar_hit(dx, dy, orient % 2 + 2),
                // disc: filled circle
                2 => r <= 0.46 * s as f64,
                // ring: annulus
                _ => r <= 0.46 * s as f64 && r >= 0.28 * s as f64,
            };
            if hit {
                mask[y * s + x] = true;
            }
        }
    }
    mask
}

/// Generates a collage dataset. Per-image draw order: label; background base,
/// gradient amplitude/angle/frequency/phase; clutter count, then per rectangle
/// size/position/delta; glyph area fraction, position (x then y), orientation,
/// mass jitter.
pub fn gen_collage(spec: &CollageSpec, rng: &mut RngState) -> Result<Dataset, CoreError> {
    if !(2..=4).contains(&spec.classes) {
        return Err(CoreError::param("gen_collage", format!("classes must be 2..=4, got {}", spec.classes)));
    }
    if spec.height < 8 || spec.width < 8 {
        return Err(CoreError::param("gen_collage", format!("canvas too small: {}x{}", spec.height, spec.width)));
    }
    if !(0.0 < spec.object_min_frac
        && spec.object_min_frac <= spec.object_max_frac
        && spec.object_max_frac <= 1.0)
    {
        return Err(CoreError::param(
            "gen_collage",
            format!("need 0 < min_frac <= max_frac <= 1, got {} and {}", spec.object_min_frac, spec.object_max_frac),
        ));
    }
    if !(0.0..=1.0).contains(&spec.clutter) {
        return Err(CoreError::param("gen_collage", format!("clutter must be in [0,1], got {}", spec.clutter)));
    }
    let (h, w) = (spec.height, spec.width);
    let mut images = vec![0.0; spec.n * h * w];
    let mut labels = Vec::with_capacity(spec.n);
    let two_pi = 2.0 * core::f64::consts::PI;
    for img in images.chunks_exact_mut(h * w) {
        let label = rng.uniform_int(spec.classes);
        labels.push(label);

        // Background: low base tone plus one soft directional wave.
        let base = 0.05 + 0.2 * rng.sample_uniform();
        let amp = 0.15 * rng.sample_uniform();
        let theta = two_pi * rng.sample_uniform();
        let freq = 0.5 + 1.5 * rng.sample_uniform();
        let phase = two_pi * rng.sample_uniform();
        let (ct, st) = (mathf::cos(theta), mathf::sin(theta));
        let scale = two_pi * freq / h.max(w) as f64;
        for y in 0..h {
            for x in 0..w {
                img[y * w + x] = base + amp * mathf::sin(scale * (ct * x as f64 + st * y as f64) + phase);
            }
        }

        // Clutter: a handful of faint rectangles.
        let k = 3 + rng.uniform_int(4);
        for _ in 0..k {
            let rw = 2 + rng.uniform_int(5.min(w - 1));
            let rh = 2 + rng.uniform_int(5.min(h - 1));
            let x0 = rng.uniform_int(w - rw + 1);
            let y0 = rng.uniform_int(h - rh + 1);
            let delta = spec.clutter * (2.0 * rng.sample_uniform() - 1.0);
            for y in y0..y0 + rh {
                for v in &mut img[y * w + x0..y * w + x0 + rw] {
                    *v += delta;
                }
            }
        }
        for v in img.iter_mut() {
            *v = v.clamp(0.0, 0.5);
        }

        // Glyph: side from the area fraction, uniform position, then ink
        // roughly mass-normalized across classes so total brightness carries
        // little class signal.
        let frac = spec.object_min_frac + (spec.object_max_frac - spec.object_min_frac) * rng.sample_uniform();
        let side = (mathf::round(mathf::sqrt(frac * (h * w) as f64)) as usize)
            .clamp(5, h.min(w));
        let x0 = rng.uniform_int(w - side + 1);
        let y0 = rng.uniform_int(h - side + 1);
        let orient = rng.uniform_int(4);
        let mass = (0.12 + 0.08 * rng.sample_uniform()) * (side * side) as f64;
        let mask = glyph_mask(label, side, orient);
        let ink = mask.iter().filter(|&&b| b).count().max(1);
        let a = (mass / ink as f64).clamp(0.4, 0.85);
        for dy in 0..side {
            for dx in 0..side {
                if mask[dy * side + dx] {
                    let p = &mut img[(y0 + dy) * w + x0 + dx];
                    *p = (*p + a).clamp(0.0, 1.0);
                }
            }
        }
    }
    Ok(Dataset {
        images: Tensor::from_vec(&[spec.n, 1, h, w], images)?,
        labels,
        num_classes: spec.classes,
    })
}

/// Blobs generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobsSpec {
    pub n: usize,
    pub classes: usize,
    /// Feature dimension; must be >= classes. Laid out as a ceil(sqrt(dim))
    /// square image, zero-padded.
    pub dim: usize,
    /// Pairwise distance between cluster means (before the sigmoid squash).
    pub separation: f64,
}

impl Default for BlobsSpec {
    fn default() -> Self {
        BlobsSpec { n: 0, classes: 4, dim: 16, separation: 10.0 }
    }
}

/// Generates a blobs dataset: class c's mean is (separation/sqrt(2)) * e_c,
/// unit-variance Gaussian noise, then sigmoid(x/3) per coordinate. Per-sample
/// draw order: label, then the dim noise draws.
pub fn gen_blobs(spec: &BlobsSpec, rng: &mut RngState) -> Result<Dataset, CoreError> {
    if spec.classes < 2 {
        return Err(CoreError::param("gen_blobs", format!("need at least 2 classes, got {}", spec.classes)));
    }
    if spec.dim < spec.classes {
        return Err(CoreError::param(
            "gen_blobs",
            format!("dim {} must be >= classes {}", spec.dim, spec.classes),
        ));
    }
    if !(spec.separation >= 0.0 && spec.separation.is_finite()) {
        return Err(CoreError::param("gen_blobs", format!("separation must be finite and >= 0, got {}", spec.separation)));
    }
    let side = {
        let mut s = 1;
        while s * s < spec.dim {
            s += 1;
        }
        s
    };
    let offset = spec.separation / mathf::sqrt(2.0);
    let mut images = vec![0.0; spec.n * side * side];
    let mut labels = Vec::with_capacity(spec.n);
    for img in images.chunks_exact_mut(side * side) {
        let label = rng.uniform_int(spec.classes);
        labels.push(label);
        for (d, v) in img.iter_mut().take(spec.dim).enumerate() {
            let mean = if d == label { offset } else { 0.0 };
            let x = mean + rng.sample_std_normal();
            *v = mathf::sigmoid(x / 3.0);
        }
        // Cells beyond dim stay exactly 0 (padding).
    }
    Ok(Dataset {
        images: Tensor::from_vec(&[spec.n, 1, side, side], images)?,
        labels,
        num_classes: spec.classes,
    })
}
