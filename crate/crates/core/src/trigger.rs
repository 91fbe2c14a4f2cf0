//! Recovered-trigger representation and the similarity metric: top-k energy
//! clipping followed by mean local SSIM of the clipped energy maps.

use crate::tensor::Tensor;

/// A reverse-engineered trigger candidate.
///
/// `values` live in `[-1, 1]` and are zero outside `mask`; `target` is the
/// inferred target label and `local_asr` the attack success rate the
/// candidate achieved on the detector's own validation set.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerCandidate {
    pub values: Tensor,
    pub mask: Vec<bool>,
    pub target: usize,
    pub local_asr: f64,
}

impl TriggerCandidate {
    pub fn spatial_dims(&self) -> (usize, usize) {
        let s = self.values.shape();
        (s[1], s[2])
    }

    /// Per-pixel energy: magnitude of the mean across channels.
    pub fn energy_map(&self) -> Vec<f64> {
        let s = self.values.shape();
        let (c, h, w) = (s[0], s[1], s[2]);
        let mut e = vec![0.0; h * w];
        for cc in 0..c {
            for (i, ev) in e.iter_mut().enumerate() {
                *ev += self.values.data()[cc * h * w + i];
            }
        }
        let inv = 1.0 / c as f64;
        for ev in &mut e {
            *ev = (*ev * inv).abs();
        }
        e
    }

    pub fn mask_size(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Keep the `k` highest-energy pixels of a map, zeroing the rest.
/// Ties break toward the earlier (row-major) position.
pub fn topk_clip_map(map: &[f64], k: usize) -> Vec<f64> {
    if k >= map.len() {
        return map.to_vec();
    }
    let mut order: Vec<usize> = (0..map.len()).collect();
    order.sort_by(|&a, &b| map[b].partial_cmp(&map[a]).unwrap().then(a.cmp(&b)));
    let mut out = vec![0.0; map.len()];
    for &i in order.iter().take(k) {
        out[i] = map[i];
    }
    out
}

/// Top-k clip a trigger candidate: pixels outside the k highest-energy set
/// have their values (all channels) and mask bit cleared.
pub fn topk_clip(cand: &TriggerCandidate, k: usize) -> TriggerCandidate {
    let (h, w) = cand.spatial_dims();
    if k >= h * w {
        return cand.clone();
    }
    let energy = cand.energy_map();
    let clipped = topk_clip_map(&energy, k);
    let mut out = cand.clone();
    let c = out.values.shape()[0];
    for (i, &v) in clipped.iter().enumerate() {
        if v == 0.0 {
            out.mask[i] = false;
            for cc in 0..c {
                out.values.data_mut()[cc * h * w + i] = 0.0;
            }
        }
    }
    out
}

/// Mean local SSIM of two equally sized maps with a uniform `win x win`
/// kernel, zero padding at borders, evaluated at every position.
///
/// The stabilizing constants use `L = max(max(a), max(b))`; when both maps
/// are all-zero the similarity is defined as 1.
pub fn ssim_maps(a: &[f64], b: &[f64], h: usize, w: usize, win: usize) -> f64 {
    assert_eq!(a.len(), h * w);
    assert_eq!(b.len(), h * w);
    assert!(win % 2 == 1 && win <= h.min(w), "window {win} for {h}x{w}");
    let l = a
        .iter()
        .chain(b)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if l <= 0.0 && a.iter().chain(b).all(|&v| v == 0.0) {
        return 1.0;
    }
    let c1 = (0.01 * l) * (0.01 * l);
    let c2 = (0.03 * l) * (0.03 * l);

    let pa = prefix_sum(a, h, w);
    let pb = prefix_sum(b, h, w);
    let paa = prefix_sum_prod(a, a, h, w);
    let pbb = prefix_sum_prod(b, b, h, w);
    let pab = prefix_sum_prod(a, b, h, w);

    let r = win / 2;
    let area = (win * win) as f64;
    let mut total = 0.0;
    for i in 0..h {
        for j in 0..w {
            let r0 = i.saturating_sub(r);
            let r1 = (i + r).min(h - 1);
            let c0 = j.saturating_sub(r);
            let c1b = (j + r).min(w - 1);
            let mu_a = box_sum(&pa, w, r0, c0, r1, c1b) / area;
            let mu_b = box_sum(&pb, w, r0, c0, r1, c1b) / area;
            let va = box_sum(&paa, w, r0, c0, r1, c1b) / area - mu_a * mu_a;
            let vb = box_sum(&pbb, w, r0, c0, r1, c1b) / area - mu_b * mu_b;
            let cov = box_sum(&pab, w, r0, c0, r1, c1b) / area - mu_a * mu_b;
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2);
            total += num / den;
        }
    }
    total / (h * w) as f64
}

fn prefix_sum(x: &[f64], h: usize, w: usize) -> Vec<f64> {
    prefix_sum_prod(x, &vec![1.0; x.len()], h, w)
}

/// Inclusive 2-D prefix sums of `x .* y`, with a padded first row/column.
fn prefix_sum_prod(x: &[f64], y: &[f64], h: usize, w: usize) -> Vec<f64> {
    let stride = w + 1;
    let mut p = vec![0.0; (h + 1) * stride];
    for i in 0..h {
        let mut row = 0.0;
        for j in 0..w {
            row += x[i * w + j] * y[i * w + j];
            p[(i + 1) * stride + j + 1] = p[i * stride + j + 1] + row;
        }
    }
    p
}

#[inline]
fn box_sum(p: &[f64], w: usize, r0: usize, c0: usize, r1: usize, c1: usize) -> f64 {
    let stride = w + 1;
    p[(r1 + 1) * stride + c1 + 1] - p[r0 * stride + c1 + 1] - p[(r1 + 1) * stride + c0]
        + p[r0 * stride + c0]
}

/// Similarity of two trigger candidates: SSIM of their (already clipped)
/// energy maps.
pub fn ssim_sim(a: &TriggerCandidate, b: &TriggerCandidate, win: usize) -> f64 {
    let (h, w) = a.spatial_dims();
    assert_eq!((h, w), b.spatial_dims(), "trigger dims must match");
    ssim_maps(&a.energy_map(), &b.energy_map(), h, w, win)
}
