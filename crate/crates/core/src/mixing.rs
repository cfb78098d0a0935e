//! Input mixing: Mixup, CutMix, and the two stress variants (patch-shuffled
//! CutMix and per-patch lambda interpolation).
//!
//! Conventions, fixed across the whole workspace:
//! - Image batches are `[B, C, H, W]` tensors with pixel values in [0, 1].
//! - Sample i's mixing partner is `pairing[i]`; the partner is the "A" role
//!   (the crop source in CutMix) and carries weight lambda, the sample itself
//!   is the "B" role with weight 1 - lambda.
//! - Boxes are half-open `[x_lo, x_hi) x [y_lo, y_hi)`. The box side lengths
//!   are `round(W*sqrt(r))` / `round(H*sqrt(r))` for a raw area fraction `r`;
//!   the center is an integer drawn uniformly from the full canvas (cx before
//!   cy), and the box is clipped to the image. The effective lambda is
//!   recomputed from the clipped area: `lambda0 = w_c*h_c / (H*W)`, the exact
//!   f64 quotient of exact integers.
//! - One crop geometry / one lambda0 is shared by the whole batch; the random
//!   and prediction-derived label terms downstream are per-sample.
//!
//! Every `apply_*` function is a pure function of its arguments: all random
//! draws happen up front in [`sample_mix_plan`], so applying a plan is safe to
//! parallelize or replay.

use alloc::format;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::mathf;
use crate::sampling::RngState;
use crate::tensor::Tensor;

/// Image batches are plain tensors; the alias marks intent in signatures.
pub type ImageBatch = Tensor;

/// Half-open crop box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropBox {
    pub x_lo: usize,
    pub x_hi: usize,
    pub y_lo: usize,
    pub y_hi: usize,
}

impl CropBox {
    pub fn width(&self) -> usize {
        self.x_hi - self.x_lo
    }
    pub fn height(&self) -> usize {
        self.y_hi - self.y_lo
    }
    pub fn area(&self) -> usize {
        self.width() * self.height()
    }
}

/// How the batch-shared raw area fraction is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda0Dist {
    /// Beta(alpha, alpha); the laboratory default is alpha = 0.8.
    Beta(f64),
    /// Uniform on [0, 1).
    Uniform,
}

impl Lambda0Dist {
    fn sample(self, rng: &mut RngState) -> f64 {
        match self {
            Lambda0Dist::Beta(a) => rng.sample_beta(a, a),
            Lambda0Dist::Uniform => rng.sample_uniform(),
        }
    }
}

/// Mixing mode of one batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixMode {
    /// Convex pixel interpolation at the batch lambda.
    Mixup,
    /// Rectangular patch replacement.
    Cutmix,
    /// Cutmix followed by a per-image patch shuffle of the mixed result
    /// (lambda is unchanged: the permutation preserves patch areas).
    CutmixShuffle { grid: usize },
    /// Patchwise convex interpolation with one fresh lambda per patch cell,
    /// shared across the batch; the plan's lambda0 is the grid mean, which is
    /// the exact mixing proportion since all cells have equal area.
    PerPatchLambda { grid: usize },
}

/// All random choices of one batch's mixing, materialized up front.
#[derive(Debug, Clone)]
pub struct MixPlan {
    pub mode: MixMode,
    /// Partner index per sample; a permutation of 0..B.
    pub pairing: Vec<usize>,
    /// Shared crop, present for the two cutmix modes.
    pub crop: Option<CropBox>,
    /// Effective batch-shared lambda (partner weight) after any clipping.
    pub lambda0: f64,
    /// Row-major per-cell lambdas for `PerPatchLambda`.
    pub patch_lambdas: Option<Vec<f64>>,
    /// Per-image patch permutations for `CutmixShuffle`.
    pub shuffle_perms: Option<Vec<Vec<usize>>>,
}

/// Draws a crop box for the raw area fraction `lambda0_raw` on an HxW canvas
/// and returns it with the effective (post-clip) area fraction.
///
/// Draw order (one box = three draws): lambda0_raw is drawn by the caller,
/// then cx, then cy, each a uniform integer over the full side.
pub fn sample_cutmix_box(h: usize, w: usize, lambda0_raw: f64, rng: &mut RngState) -> (CropBox, f64) {
    debug_assert!((0.0..=1.0).contains(&lambda0_raw));
    let side = mathf::sqrt(lambda0_raw);
    let bw = mathf::round(w as f64 * side) as usize;
    let bh = mathf::round(h as f64 * side) as usize;
    let cx = rng.uniform_int(w);
    let cy = rng.uniform_int(h);
    // Offsets bw/2 and (bw+1)/2 sum to bw for both parities, so an unclipped
    // box has exactly the rounded side lengths.
    let x_lo = cx.saturating_sub(bw / 2);
    let x_hi = (cx + (bw + 1) / 2).min(w);
    let y_lo = cy.saturating_sub(bh / 2);
    let y_hi = (cy + (bh + 1) / 2).min(h);
    let crop = CropBox { x_lo, x_hi, y_lo, y_hi };
    let lambda0 = crop.area() as f64 / (h * w) as f64;
    (crop, lambda0)
}

fn check_images(images: &ImageBatch, context: &'static str) -> Result<(usize, usize, usize, usize), CoreError> {
    let s = images.shape();
    if s.len() != 4 {
        return Err(CoreError::shape(context, format!("expected [B, C, H, W] images, got {s:?}")));
    }
    Ok((s[0], s[1], s[2], s[3]))
}

fn check_pairing(pairing: &[usize], b: usize, context: &'static str) -> Result<(), CoreError> {
    if pairing.len() != b || pairing.iter().any(|&p| p >= b) {
        return Err(CoreError::param(
            context,
            format!("pairing must map batch of {b} into itself, got len {}", pairing.len()),
        ));
    }
    Ok(())
}

/// CutMix: copy the crop window from each sample's partner.
pub fn apply_cutmix(images: &ImageBatch, pairing: &[usize], crop: &CropBox) -> Result<ImageBatch, CoreError> {
    let (b, c, h, w) = check_images(images, "apply_cutmix")?;
    check_pairing(pairing, b, "apply_cutmix")?;
    if crop.x_hi > w || crop.y_hi > h || crop.x_lo > crop.x_hi || crop.y_lo > crop.y_hi {
        return Err(CoreError::param("apply_cutmix", format!("crop {crop:?} exceeds {h}x{w}")));
    }
    let mut out = images.clone();
    let src = images.as_slice();
    let dst = out.as_mut_slice();
    let plane = h * w;
    for i in 0..b {
        let partner = pairing[i];
        if partner == i {
            continue; // self-pair: the copy would be a no-op
        }
        for ch in 0..c {
            let src_base = (partner * c + ch) * plane;
            let dst_base = (i * c + ch) * plane;
            for y in crop.y_lo..crop.y_hi {
                let row = y * w;
                dst[dst_base + row + crop.x_lo..dst_base + row + crop.x_hi]
                    .copy_from_slice(&src[src_base + row + crop.x_lo..src_base + row + crop.x_hi]);
            }
        }
    }
    Ok(out)
}

/// Mixup: `out[i] = lambda * images[pairing[i]] + (1 - lambda) * images[i]`.
pub fn apply_mixup(images: &ImageBatch, pairing: &[usize], lambda: f64) -> Result<ImageBatch, CoreError> {
    let (b, c, h, w) = check_images(images, "apply_mixup")?;
    check_pairing(pairing, b, "apply_mixup")?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(CoreError::param("apply_mixup", format!("lambda {lambda} outside [0,1]")));
    }
    let plane = c * h * w;
    let src = images.as_slice();
    let mut out = images.clone();
    let dst = out.as_mut_slice();
    for i in 0..b {
        let partner = pairing[i];
        let a = &src[partner * plane..(partner + 1) * plane];
        let d = &mut dst[i * plane..(i + 1) * plane];
        for (dv, &av) in d.iter_mut().zip(a) {
            // dv currently holds the sample's own pixel (the B role).
            *dv = lambda * av + (1.0 - lambda) * *dv;
        }
    }
    Ok(out)
}

/// Rearranges each image's grid x grid patches: output patch p is input patch
/// `perms[i][p]`. Requires H and W divisible by the grid and one permutation
/// per image.
pub fn shuffle_patches(images: &ImageBatch, grid: usize, perms: &[Vec<usize>]) -> Result<ImageBatch, CoreError> {
    let (b, c, h, w) = check_images(images, "shuffle_patches")?;
    if grid == 0 || h % grid != 0 || w % grid != 0 {
        return Err(CoreError::param(
            "shuffle_patches",
            format!("grid {grid} must divide image dims {h}x{w}"),
        ));
    }
    let cells = grid * grid;
    if perms.len() != b || perms.iter().any(|p| p.len() != cells) {
        return Err(CoreError::param(
            "shuffle_patches",
            format!("need {b} permutations of {cells} cells"),
        ));
    }
    let (ph, pw) = (h / grid, w / grid);
    let mut out = Tensor::zeros(images.shape());
    let src = images.as_slice();
    let dst = out.as_mut_slice();
    let plane = h * w;
    for i in 0..b {
        for (p_out, &p_in) in perms[i].iter().enumerate() {
            if p_in >= cells {
                return Err(CoreError::param("shuffle_patches", format!("cell index {p_in} out of range")));
            }
            let (oy, ox) = (p_out / grid * ph, p_out % grid * pw);
            let (iy, ix) = (p_in / grid * ph, p_in % grid * pw);
            for ch in 0..c {
                let base = (i * c + ch) * plane;
                for dy in 0..ph {
                    let drow = base + (oy + dy) * w + ox;
                    let srow = base + (iy + dy) * w + ix;
                    dst[drow..drow + pw].copy_from_slice(&src[srow..srow + pw]);
                }
            }
        }
    }
    Ok(out)
}

/// Patchwise convex interpolation: cell p of every output uses
/// `patch_lambdas[p] * partner + (1 - patch_lambdas[p]) * own`.
pub fn per_patch_lambda_mix(
    images: &ImageBatch,
    pairing: &[usize],
    grid: usize,
    patch_lambdas: &[f64],
) -> Result<ImageBatch, CoreError> {
    let (b, c, h, w) = check_images(images, "per_patch_lambda_mix")?;
    check_pairing(pairing, b, "per_patch_lambda_mix")?;
    if grid == 0 || h % grid != 0 || w % grid != 0 {
        return Err(CoreError::param(
            "per_patch_lambda_mix",
            format!("grid {grid} must divide image dims {h}x{w}"),
        ));
    }
    if patch_lambdas.len() != grid * grid || patch_lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(CoreError::param(
            "per_patch_lambda_mix",
            format!("need {} lambdas in [0,1]", grid * grid),
        ));
    }
    let (ph, pw) = (h / grid, w / grid);
    let mut out = images.clone();
    let src = images.as_slice();
    let dst = out.as_mut_slice();
    let plane = h * w;
    for i in 0..b {
        let partner = pairing[i];
        for (p, &lam) in patch_lambdas.iter().enumerate() {
            let (py, px) = (p / grid * ph, p % grid * pw);
            for ch in 0..c {
                let own_base = (i * c + ch) * plane;
                let par_base = (partner * c + ch) * plane;
                for dy in 0..ph {
                    let drow = own_base + (py + dy) * w + px;
                    let srow = par_base + (py + dy) * w + px;
                    for (dv, &av) in dst[drow..drow + pw].iter_mut().zip(&src[srow..srow + pw]) {
                        *dv = lam * av + (1.0 - lam) * *dv;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Draws one batch's complete mixing plan.
///
/// Draw order is part of the persisted behaviour:
/// 1. the pairing permutation, from the pairing stream;
/// 2. the raw batch lambda (one draw), from the geometry stream;
/// 3. mode-specific geometry from the geometry stream: cutmix draws the box
///    center (cx then cy); the shuffle variant then draws one patch
///    permutation per image in batch order; the per-patch variant instead
///    draws its grid of cell lambdas row-major (replacing step 2's raw draw
///    as the first cell... see below).
///
/// `PerPatchLambda` consumes step 2's draw as cell 0 and draws the remaining
/// grid*grid - 1 cells, so the mode uses exactly one distribution draw per
/// cell.
pub fn sample_mix_plan(
    batch: usize,
    h: usize,
    w: usize,
    mode: MixMode,
    dist: Lambda0Dist,
    rng_pairing: &mut RngState,
    rng_geometry: &mut RngState,
) -> Result<MixPlan, CoreError> {
    if batch == 0 {
        return Err(CoreError::param("sample_mix_plan", "empty batch".into()));
    }
    let pairing = rng_pairing.permutation(batch);
    let raw = dist.sample(rng_geometry);
    match mode {
        MixMode::Mixup => Ok(MixPlan {
            mode,
            pairing,
            crop: None,
            lambda0: raw,
            patch_lambdas: None,
            shuffle_perms: None,
        }),
        MixMode::Cutmix => {
            let (crop, lambda0) = sample_cutmix_box(h, w, raw, rng_geometry);
            Ok(MixPlan { mode, pairing, crop: Some(crop), lambda0, patch_lambdas: None, shuffle_perms: None })
        }
        MixMode::CutmixShuffle { grid } => {
            if grid == 0 || h % grid != 0 || w % grid != 0 {
                return Err(CoreError::param(
                    "sample_mix_plan",
                    format!("shuffle grid {grid} must divide {h}x{w}"),
                ));
            }
            let (crop, lambda0) = sample_cutmix_box(h, w, raw, rng_geometry);
            let perms = (0..batch).map(|_| rng_geometry.permutation(grid * grid)).collect();
            Ok(MixPlan {
                mode,
                pairing,
                crop: Some(crop),
                lambda0,
                patch_lambdas: None,
                shuffle_perms: Some(perms),
            })
        }
        MixMode::PerPatchLambda { grid } => {
            if grid == 0 || h % grid != 0 || w % grid != 0 {
                return Err(CoreError::param(
                    "sample_mix_plan",
                    format!("patch grid {grid} must divide {h}x{w}"),
                ));
            }
            let cells = grid * grid;
            let mut lams = Vec::with_capacity(cells);
            lams.push(raw);
            for _ in 1..cells {
                lams.push(dist.sample(rng_geometry));
            }
            let lambda0 = lams.iter().sum::<f64>() / cells as f64;
            Ok(MixPlan {
                mode,
                pairing,
                crop: None,
                lambda0,
                patch_lambdas: Some(lams),
                shuffle_perms: None,
            })
        }
    }
}

/// Applies a materialized plan; pure, no randomness.
pub fn apply_mix_plan(images: &ImageBatch, plan: &MixPlan) -> Result<ImageBatch, CoreError> {
    match plan.mode {
        MixMode::Mixup => apply_mixup(images, &plan.pairing, plan.lambda0),
        MixMode::Cutmix => {
            let crop = plan.crop.as_ref().ok_or_else(|| CoreError::param("apply_mix_plan", "cutmix plan without crop".into()))?;
            apply_cutmix(images, &plan.pairing, crop)
        }
        MixMode::CutmixShuffle { grid } => {
            let crop = plan.crop.as_ref().ok_or_else(|| CoreError::param("apply_mix_plan", "cutmix plan without crop".into()))?;
            let perms = plan
                .shuffle_perms
                .as_ref()
                .ok_or_else(|| CoreError::param("apply_mix_plan", "shuffle plan without permutations".into()))?;
            let mixed = apply_cutmix(images, &plan.pairing, crop)?;
            shuffle_patches(&mixed, grid, perms)
        }
        MixMode::PerPatchLambda { grid } => {
            let lams = plan
                .patch_lambdas
                .as_ref()
                .ok_or_else(|| CoreError::param("apply_mix_plan", "per-patch plan without lambdas".into()))?;
            per_patch_lambda_mix(images, &plan.pairing, grid, lams)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Stream;
    use alloc::vec;

    fn rand_images(b: usize, c: usize, h: usize, w: usize, seed: u64) -> ImageBatch {
        let mut rng = RngState::stream(seed, Stream::DataTrain);
        let data = (0..b * c * h * w).map(|_| rng.sample_uniform()).collect();
        Tensor::from_vec(&[b, c, h, w], data).unwrap()
    }

    #[test]
    fn box_respects_bounds_and_exact_area_quotient() {
        let (h, w) = (32, 32);
        let mut lam_rng = RngState::stream(50, Stream::MixGeometry);
        let mut rng = RngState::stream(51, Stream::MixGeometry);
        for _ in 0..10_000 {
            let raw = lam_rng.sample_beta(0.8, 0.8);
            let (crop, lam) = sample_cutmix_box(h, w, raw, &mut rng);
            assert!(crop.x_hi <= w && crop.y_hi <= h);
            assert!(crop.x_lo <= crop.x_hi && crop.y_lo <= crop.y_hi);
            // Clipping can only shrink the rounded side lengths.
            let bw = mathf::round(w as f64 * mathf::sqrt(raw)) as usize;
            let bh = mathf::round(h as f64 * mathf::sqrt(raw)) as usize;
            assert!(crop.width() <= bw && crop.height() <= bh);
            // The effective lambda is the exact integer-area quotient.
            assert_eq!(lam, crop.area() as f64 / (h * w) as f64);
            assert!((0.0..=1.0).contains(&lam));
        }
    }

    #[test]
    fn unclipped_box_has_exact_rounded_sides() {
        // Center fixed mid-canvas by seeding until we get one; instead verify
        // directly: any box whose bounds stay interior has the rounded sides.
        let (h, w) = (32, 32);
        let mut rng = RngState::stream(52, Stream::MixGeometry);
        let mut interior_seen = 0;
        for _ in 0..2000 {
            let raw = 0.25; // side = 16
            let (crop, _) = sample_cutmix_box(h, w, raw, &mut rng);
            if crop.x_lo > 0 && crop.x_hi < w && crop.y_lo > 0 && crop.y_hi < h {
                assert_eq!(crop.width(), 16);
                assert_eq!(crop.height(), 16);
                interior_seen += 1;
            }
        }
        assert!(interior_seen > 100, "interior boxes should be common at raw=0.25");
    }

    #[test]
    fn expected_clipped_width_matches_discrete_oracle() {
        // Independent oracle: the exact expectation of the clipped width over
        // all W integer centers, computed by direct enumeration, compared to
        // the Monte-Carlo mean of the sampler at fixed raw lambda.
        let (h, w) = (32, 32);
        let raw = 0.49; // side fraction 0.7 -> bw = 22
        let bw = mathf::round(w as f64 * mathf::sqrt(raw)) as usize;
        let mut exact = 0.0;
        for cx in 0..w as usize {
            let lo = cx.saturating_sub(bw / 2);
            let hi = (cx + (bw + 1) / 2).min(w);
            exact += (hi - lo) as f64;
        }
        exact /= w as f64;

        let n = 20_000;
        let mut rng = RngState::stream(53, Stream::MixGeometry);
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for i in 0..n {
            let (crop, _) = sample_cutmix_box(h, w, raw, &mut rng);
            let x = crop.width() as f64;
            let d = x - mean;
            mean += d / (i + 1) as f64;
            m2 += d * (x - mean);
        }
        let sd_mean = mathf::sqrt(m2 / (n - 1) as f64 / n as f64);
        assert!(
            (mean - exact).abs() < 4.0 * sd_mean + 1e-9,
            "MC mean {mean} vs exact {exact} (4 sigma = {})",
            4.0 * sd_mean
        );
    }

    #[test]
    fn cutmix_copies_exactly_the_box() {
        let (b, c, h, w) = (4, 2, 8, 6);
        let images = rand_images(b, c, h, w, 54);
        let pairing = vec![1, 2, 3, 0];
        let crop = CropBox { x_lo: 1, x_hi: 4, y_lo: 2, y_hi: 7 };
        let out = apply_cutmix(&images, &pairing, &crop).unwrap();
        let src = images.as_slice();
        let dst = out.as_slice();
        let plane = h * w;
        for i in 0..b {
            for ch in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        let inside = (crop.y_lo..crop.y_hi).contains(&y) && (crop.x_lo..crop.x_hi).contains(&x);
                        let own = src[(i * c + ch) * plane + y * w + x];
                        let par = src[(pairing[i] * c + ch) * plane + y * w + x];
                        let got = dst[(i * c + ch) * plane + y * w + x];
                        assert_eq!(got, if inside { par } else { own });
                    }
                }
            }
        }
    }

    #[test]
    fn cutmix_mask_count_equals_box_area() {
        // Constant-valued images make replaced pixels countable exactly.
        let (b, c, h, w) = (5, 1, 16, 16);
        let data: Vec<f64> = (0..b).flat_map(|i| core::iter::repeat(i as f64).take(c * h * w)).collect();
        let images = Tensor::from_vec(&[b, c, h, w], data).unwrap();
        let pairing = vec![1, 2, 3, 4, 0];
        let mut rng = RngState::stream(55, Stream::MixGeometry);
        for _ in 0..200 {
            let raw = rng.sample_uniform();
            let (crop, lam) = sample_cutmix_box(h, w, raw, &mut rng);
            let out = apply_cutmix(&images, &pairing, &crop).unwrap();
            for i in 0..b {
                let par = pairing[i] as f64;
                let count = out.as_slice()[i * h * w..(i + 1) * h * w]
                    .iter()
                    .filter(|&&v| v == par)
                    .count();
                assert_eq!(count, crop.area());
            }
            assert_eq!(lam, crop.area() as f64 / (h * w) as f64);
        }
    }

    #[test]
    fn cutmix_preserves_total_pixel_mass() {
        // The pairing is a permutation and the box is batch-shared, so the
        // batch total is a rearrangement of the same pixel values.
        let images = rand_images(6, 2, 8, 8, 56);
        let pairing = vec![2, 0, 1, 5, 3, 4];
        let crop = CropBox { x_lo: 2, x_hi: 7, y_lo: 0, y_hi: 5 };
        let out = apply_cutmix(&images, &pairing, &crop).unwrap();
        let before: f64 = images.as_slice().iter().sum();
        let after: f64 = out.as_slice().iter().sum();
        assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn mixup_extremes_are_bit_exact_and_interior_matches_scalar_loop() {
        let images = rand_images(3, 1, 4, 4, 57);
        let pairing = vec![1, 2, 0];
        // lambda = 0: output is the sample itself, bitwise.
        let out0 = apply_mixup(&images, &pairing, 0.0).unwrap();
        assert_eq!(out0.as_slice(), images.as_slice());
        // lambda = 1: output is the partner, bitwise.
        let out1 = apply_mixup(&images, &pairing, 1.0).unwrap();
        let plane = 16;
        for i in 0..3 {
            assert_eq!(
                &out1.as_slice()[i * plane..(i + 1) * plane],
                &images.as_slice()[pairing[i] * plane..(pairing[i] + 1) * plane]
            );
        }
        // Interior lambda: elementwise convex combination.
        let lam = 0.3;
        let out = apply_mixup(&images, &pairing, lam).unwrap();
        for i in 0..3 {
            for p in 0..plane {
                let a = images.as_slice()[pairing[i] * plane + p];
                let bv = images.as_slice()[i * plane + p];
                let expect = lam * a + (1.0 - lam) * bv;
                assert!((out.as_slice()[i * plane + p] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn shuffle_preserves_pixel_multiset_and_inverts() {
        let images = rand_images(2, 1, 8, 8, 58);
        let mut rng = RngState::stream(59, Stream::MixGeometry);
        let perms: Vec<Vec<usize>> = (0..2).map(|_| rng.permutation(16)).collect();
        let out = shuffle_patches(&images, 4, &perms).unwrap();
        for i in 0..2 {
            let mut a: Vec<f64> = images.as_slice()[i * 64..(i + 1) * 64].to_vec();
            let mut b: Vec<f64> = out.as_slice()[i * 64..(i + 1) * 64].to_vec();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert_eq!(a, b);
        }
        // Applying the inverse permutation restores the original, bitwise.
        let inv: Vec<Vec<usize>> = perms
            .iter()
            .map(|p| {
                let mut inv = vec![0usize; p.len()];
                for (out_cell, &in_cell) in p.iter().enumerate() {
                    inv[in_cell] = out_cell;
                }
                inv
            })
            .collect();
        let restored = shuffle_patches(&out, 4, &inv).unwrap();
        assert_eq!(restored.as_slice(), images.as_slice());
        // grid = 1 with the identity permutation is the identity.
        let id = shuffle_patches(&images, 1, &[vec![0], vec![0]]).unwrap();
        assert_eq!(id.as_slice(), images.as_slice());
    }

    #[test]
    fn per_patch_mix_matches_scalar_oracle() {
        let (b, c, h, w) = (3, 2, 6, 6);
        let images = rand_images(b, c, h, w, 60);
        let pairing = vec![2, 0, 1];
        let grid = 3;
        let mut rng = RngState::stream(61, Stream::MixGeometry);
        let lams: Vec<f64> = (0..9).map(|_| rng.sample_uniform()).collect();
        let out = per_patch_lambda_mix(&images, &pairing, grid, &lams).unwrap();
        let (ph, pw) = (h / grid, w / grid);
        let plane = h * w;
        for i in 0..b {
            for ch in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        let cell = (y / ph) * grid + x / pw;
                        let a = images.as_slice()[(pairing[i] * c + ch) * plane + y * w + x];
                        let me = images.as_slice()[(i * c + ch) * plane + y * w + x];
                        let expect = lams[cell] * a + (1.0 - lams[cell]) * me;
                        let got = out.as_slice()[(i * c + ch) * plane + y * w + x];
                        assert!((got - expect).abs() < 1e-15);
                    }
                }
            }
        }
        // All-zero lambdas: unchanged input, bitwise.
        let zero = per_patch_lambda_mix(&images, &pairing, grid, &[0.0; 9]).unwrap();
        assert_eq!(zero.as_slice(), images.as_slice());
    }

    #[test]
    fn plan_sampling_is_deterministic_and_pairing_is_a_permutation() {
        let mk = |seed| {
            let mut rp = RngState::stream(seed, Stream::Pairing);
            let mut rg = RngState::stream(seed, Stream::MixGeometry);
            sample_mix_plan(16, 32, 32, MixMode::Cutmix, Lambda0Dist::Beta(0.8), &mut rp, &mut rg).unwrap()
        };
        let p1 = mk(9);
        let p2 = mk(9);
        assert_eq!(p1.pairing, p2.pairing);
        assert_eq!(p1.crop, p2.crop);
        assert_eq!(p1.lambda0, p2.lambda0);
        let mut sorted = p1.pairing.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..16).collect::<Vec<_>>());
        let p3 = mk(10);
        assert!(p3.pairing != p1.pairing || p3.crop != p1.crop);
    }

    #[test]
    fn per_patch_plan_mean_lambda_is_exact_grid_mean() {
        let mut rp = RngState::stream(12, Stream::Pairing);
        let mut rg = RngState::stream(12, Stream::MixGeometry);
        let plan = sample_mix_plan(4, 8, 8, MixMode::PerPatchLambda { grid: 4 }, Lambda0Dist::Uniform, &mut rp, &mut rg).unwrap();
        let lams = plan.patch_lambdas.as_ref().unwrap();
        assert_eq!(lams.len(), 16);
        let mean = lams.iter().sum::<f64>() / 16.0;
        assert_eq!(plan.lambda0, mean);
    }

    #[test]
    fn invalid_grids_and_pairings_are_rejected() {
        let images = rand_images(2, 1, 6, 6, 62);
        assert!(shuffle_patches(&images, 4, &[vec![0; 16], vec![0; 16]]).is_err()); // 4 doesn't divide 6
        assert!(per_patch_lambda_mix(&images, &[0, 1], 5, &[0.5; 25]).is_err());
        assert!(apply_cutmix(&images, &[0, 5], &CropBox { x_lo: 0, x_hi: 2, y_lo: 0, y_hi: 2 }).is_err());
        assert!(apply_mixup(&images, &[0], 0.5).is_err());
        assert!(apply_mixup(&images, &[0, 1], 1.5).is_err());
    }
}
