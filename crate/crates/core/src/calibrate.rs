//! Offline similarity-threshold calibration.
//!
//! False-positive triggers are modeled as isotropic Gaussian random fields:
//! white noise convolved with a Gaussian kernel of scale `sigma` (truncated
//! at radius `ceil(3 sigma)`, zero padding). Sampling `M` independent pairs,
//! clipping each energy map to its top-k pixels and computing the SSIM
//! similarity yields the null distribution; the threshold `xi` is its
//! `q`-quantile (nearest rank).
//!
//! The whole procedure depends only on `(H, W, k, w, sigma)` — no training
//! data, no model weights.

use crate::seeds::{self, Domain};
use crate::trigger::{ssim_maps, topk_clip_map};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationParams {
    pub height: usize,
    pub width: usize,
    pub k: usize,
    pub window: usize,
    pub sigma: f64,
    pub samples: usize,
    pub quantile: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    pub xi: f64,
    pub mean_sim: f64,
    pub std_sim: f64,
    pub params: CalibrationParams,
}

impl CalibrationResult {
    /// Single-record JSON text form, the `calibrate` CLI output.
    pub fn to_json(&self) -> String {
        let p = &self.params;
        format!(
            "{{\"xi\": {:.6}, \"mean_sim\": {:.6}, \"std_sim\": {:.6}, \
             \"height\": {}, \"width\": {}, \"k\": {}, \"window\": {}, \
             \"sigma\": {}, \"samples\": {}, \"quantile\": {}, \"seed\": {}}}",
            self.xi,
            self.mean_sim,
            self.std_sim,
            p.height,
            p.width,
            p.k,
            p.window,
            p.sigma,
            p.samples,
            p.quantile,
            p.seed
        )
    }
}

/// Clipping size heuristic: about 5% of the pixels.
pub fn k_heuristic(height: usize, width: usize) -> usize {
    ((0.05 * (height * width) as f64).round() as usize).max(1)
}

/// SSIM window heuristic: about a third of the image height, odd.
pub fn window_heuristic(height: usize) -> usize {
    let w = (height as f64 / 3.0).round() as usize;
    let w = if w % 2 == 0 { w + 1 } else { w };
    w.max(3)
}

/// One-dimensional Gaussian taps truncated at `ceil(3 sigma)`.
fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// Sample one smoothed field: `G_sigma * Z`, `Z ~ N(0, I)`, zero padding.
/// Separable convolution, output the same size as the grid.
pub fn gaussian_field(h: usize, w: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let taps = gaussian_taps(sigma);
    let r = (taps.len() - 1) / 2;
    let z: Vec<f64> = (0..h * w).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    // horizontal pass
    let mut tmp = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let mut s = 0.0;
            for (t, &g) in taps.iter().enumerate() {
                let x = j as isize + t as isize - r as isize;
                if x >= 0 && (x as usize) < w {
                    s += g * z[i * w + x as usize];
                }
            }
            tmp[i * w + j] = s;
        }
    }
    // vertical pass
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let mut s = 0.0;
            for (t, &g) in taps.iter().enumerate() {
                let y = i as isize + t as isize - r as isize;
                if y >= 0 && (y as usize) < h {
                    s += g * tmp[y as usize * w + j];
                }
            }
            out[i * w + j] = s;
        }
    }
    out
}

/// Null similarity of one sampled pair, by pair index (deterministic).
fn null_pair_sim(p: &CalibrationParams, pair: usize) -> f64 {
    let mut rng = seeds::stream(p.seed, Domain::Calibration, &[pair as u64]);
    let fa = gaussian_field(p.height, p.width, p.sigma, &mut rng);
    let fb = gaussian_field(p.height, p.width, p.sigma, &mut rng);
    let ea: Vec<f64> = fa.iter().map(|v| v.abs()).collect();
    let eb: Vec<f64> = fb.iter().map(|v| v.abs()).collect();
    let ca = topk_clip_map(&ea, p.k);
    let cb = topk_clip_map(&eb, p.k);
    ssim_maps(&ca, &cb, p.height, p.width, p.window)
}

/// Run the Monte-Carlo calibration. Pairs are seeded independently by
/// index, so the result does not depend on worker scheduling.
pub fn calibrate_xi(params: &CalibrationParams) -> CalibrationResult {
    assert!(params.samples >= 1, "need at least one sample");
    assert!(
        params.quantile > 0.0 && params.quantile < 1.0,
        "quantile must be in (0,1)"
    );
    let mut sims: Vec<f64> = (0..params.samples)
        .into_par_iter()
        .map(|pair| null_pair_sim(params, pair))
        .collect();
    let m = params.samples as f64;
    let mean = sims.iter().sum::<f64>() / m;
    let var = sims.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / m;
    sims.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // nearest-rank quantile
    let rank = (params.quantile * m).ceil() as usize;
    let xi = sims[rank.clamp(1, params.samples) - 1];
    CalibrationResult {
        xi,
        mean_sim: mean,
        std_sim: var.sqrt(),
        params: *params,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heuristics() {
        assert_eq!(k_heuristic(32, 32), 51);
        assert_eq!(k_heuristic(28, 28), 39);
        assert_eq!(k_heuristic(64, 64), 205);
        assert_eq!(window_heuristic(32), 11);
        assert_eq!(window_heuristic(28), 9);
        assert_eq!(window_heuristic(64), 21);
        assert_eq!(window_heuristic(16), 5);
    }

    #[test]
    fn deterministic_given_seed() {
        let p = CalibrationParams {
            height: 16,
            width: 16,
            k: 13,
            window: 5,
            sigma: 2.0,
            samples: 50,
            quantile: 0.99,
            seed: 9,
        };
        let a = calibrate_xi(&p);
        let b = calibrate_xi(&p);
        assert_eq!(a, b);
    }

    #[test]
    fn smoothing_widens_with_sigma() {
        // larger sigma -> smoother fields -> higher null similarity
        let mk = |sigma| CalibrationParams {
            height: 16,
            width: 16,
            k: 13,
            window: 5,
            sigma,
            samples: 300,
            quantile: 0.99,
            seed: 4,
        };
        let lo = calibrate_xi(&mk(1.0));
        let hi = calibrate_xi(&mk(3.0));
        assert!(hi.mean_sim > lo.mean_sim);
    }

    #[test]
    fn field_has_expected_scale_structure() {
        let mut rng = seeds::stream(1, Domain::Calibration, &[]);
        let f = gaussian_field(24, 24, 2.0, &mut rng);
        // neighboring pixels should correlate strongly after smoothing
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..24 {
            for j in 0..23 {
                num += f[i * 24 + j] * f[i * 24 + j + 1];
                den += f[i * 24 + j] * f[i * 24 + j];
            }
        }
        assert!(num / den > 0.7, "lag-1 autocorrelation {}", num / den);
    }
}
