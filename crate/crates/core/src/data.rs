//! Toy image classification data: synthetic generation, optional IDX
//! loading, Dirichlet partitioning across nodes, and backdoor poisoning.

use crate::seeds::{self, Domain};
use crate::tensor::Tensor;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("degenerate dimensions: K={classes}, H={height}, W={width} (need K>=2, H,W>=8)")]
    DegenerateDims { classes: usize, height: usize, width: usize },
    #[error("{path}: bad magic {got:#010x}, want {want:#010x}")]
    BadMagic { path: String, got: u32, want: u32 },
    #[error("{path}: truncated file")]
    Truncated { path: String },
    #[error("image count {images} != label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("io error reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("empty node after {0} partition attempts")]
    EmptyNode(usize),
    #[error("trigger footprint out of bounds for {height}x{width} image")]
    FootprintOutOfBounds { height: usize, width: usize },
    #[error("trigger footprint {footprint} exceeds budget {budget} (10% of pixels)")]
    FootprintTooLarge { footprint: usize, budget: usize },
    #[error("poison fraction {0} outside (0, 1]")]
    BadFraction(f64),
}

/// Labeled image set. Pixel values live in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Vec<Tensor>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    /// Per-class sample counts.
    pub fn label_histogram(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.classes];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }

    /// (channels, height, width) of the first image.
    pub fn image_shape(&self) -> (usize, usize, usize) {
        let s = self.images[0].shape();
        (s[0], s[1], s[2])
    }
}

/// Synthetic data: each class is a distinct 2-D sinusoid plus pixel noise.
///
/// Class `c` uses frequency pair `FREQS[c mod 10]` and a class-specific
/// phase, which keeps the classes linearly separable enough for the small
/// conv net while staying nontrivial under noise.
const FREQS: [(f64, f64); 10] = [
    (1.0, 0.0),
    (0.0, 1.0),
    (1.0, 1.0),
    (2.0, 0.0),
    (0.0, 2.0),
    (2.0, 1.0),
    (1.0, 2.0),
    (2.0, 2.0),
    (3.0, 1.0),
    (1.0, 3.0),
];

pub fn gen_synthetic(
    classes: usize,
    height: usize,
    width: usize,
    n_per_class: usize,
    noise_std: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    if classes < 2 || height < 8 || width < 8 {
        return Err(DataError::DegenerateDims { classes, height, width });
    }
    let mut rng = seeds::stream(seed, Domain::DataGen, &[]);
    let noise = Normal::new(0.0, noise_std.max(0.0)).expect("valid std");
    let mut images = Vec::with_capacity(classes * n_per_class);
    let mut labels = Vec::with_capacity(classes * n_per_class);
    for c in 0..classes {
        let (fh, fw) = FREQS[c % FREQS.len()];
        let octave = (c / FREQS.len()) as f64 + 1.0;
        let phase = c as f64 * std::f64::consts::PI / 7.0;
        for _ in 0..n_per_class {
            let img = Tensor::from_fn(vec![1, height, width], |i| {
                let h = (i / width) as f64;
                let w = (i % width) as f64;
                let angle = 2.0 * std::f64::consts::PI
                    * octave
                    * (fh * h / height as f64 + fw * w / width as f64)
                    + phase;
                let base = 0.5 + 0.45 * angle.sin();
                let n = if noise_std > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                (base + n).clamp(0.0, 1.0)
            });
            images.push(img);
            labels.push(c);
        }
    }
    Ok(Dataset { images, labels, classes })
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(buf: &[u8], off: usize, path: &str) -> Result<u32, DataError> {
    buf.get(off..off + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| DataError::Truncated { path: path.to_string() })
}

/// Load an IDX image/label file pair (big-endian MNIST layout); pixel bytes
/// are scaled to `[0, 1]`.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset, DataError> {
    let ipath = images_path.display().to_string();
    let lpath = labels_path.display().to_string();
    let ibuf = fs::read(images_path).map_err(|source| DataError::Io { path: ipath.clone(), source })?;
    let lbuf = fs::read(labels_path).map_err(|source| DataError::Io { path: lpath.clone(), source })?;

    let imagic = read_u32_be(&ibuf, 0, &ipath)?;
    if imagic != IDX_IMAGES_MAGIC {
        return Err(DataError::BadMagic { path: ipath, got: imagic, want: IDX_IMAGES_MAGIC });
    }
    let lmagic = read_u32_be(&lbuf, 0, &lpath)?;
    if lmagic != IDX_LABELS_MAGIC {
        return Err(DataError::BadMagic { path: lpath, got: lmagic, want: IDX_LABELS_MAGIC });
    }
    let n_images = read_u32_be(&ibuf, 4, &ipath)? as usize;
    let rows = read_u32_be(&ibuf, 8, &ipath)? as usize;
    let cols = read_u32_be(&ibuf, 12, &ipath)? as usize;
    let n_labels = read_u32_be(&lbuf, 4, &lpath)? as usize;
    if n_images != n_labels {
        return Err(DataError::CountMismatch { images: n_images, labels: n_labels });
    }
    if ibuf.len() < 16 + n_images * rows * cols {
        return Err(DataError::Truncated { path: ipath });
    }
    if lbuf.len() < 8 + n_labels {
        return Err(DataError::Truncated { path: lpath });
    }

    let mut images = Vec::with_capacity(n_images);
    let mut labels = Vec::with_capacity(n_images);
    let mut max_label = 0usize;
    for i in 0..n_images {
        let off = 16 + i * rows * cols;
        let img = Tensor::from_fn(vec![1, rows, cols], |j| ibuf[off + j] as f64 / 255.0);
        images.push(img);
        let l = lbuf[8 + i] as usize;
        max_label = max_label.max(l);
        labels.push(l);
    }
    Ok(Dataset { images, labels, classes: max_label + 1 })
}

/// Per-node assignment of sample indices.
#[derive(Debug, Clone)]
pub struct Partition {
    pub node_indices: Vec<Vec<usize>>,
    /// Dirichlet concentration; `f64::INFINITY` means IID round-robin.
    pub alpha: f64,
}

/// Split a dataset across `n_nodes` with Dirichlet label heterogeneity.
///
/// For each class, proportions are drawn from `Dir(alpha * 1_n)` and the
/// class's samples are assigned by largest-remainder rounding. Lower `alpha`
/// means higher heterogeneity; `alpha = inf` assigns each class round-robin.
/// Redraws (up to 100 times) if some node ends up with no samples at all.
pub fn dirichlet_partition(
    ds: &Dataset,
    n_nodes: usize,
    alpha: f64,
    seed: u64,
) -> Result<Partition, DataError> {
    if n_nodes < 2 {
        return Err(DataError::TooFewNodes(n_nodes));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.classes];
    for (i, &l) in ds.labels.iter().enumerate() {
        by_class[l].push(i);
    }

    const MAX_ATTEMPTS: usize = 100;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = seeds::stream(seed, Domain::Partition, &[attempt as u64]);
        let mut node_indices: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for (c, samples) in by_class.iter().enumerate() {
            if samples.is_empty() {
                continue;
            }
            let counts = if alpha.is_infinite() {
                round_robin_counts(samples.len(), n_nodes)
            } else {
                let props = dirichlet_proportions(alpha, n_nodes, &mut rng);
                largest_remainder(&props, samples.len())
            };
            // shuffle within the class so node shares are not index-ordered
            let mut pool = samples.clone();
            pool.shuffle(&mut rng);
            let mut off = 0;
            for (node, &cnt) in counts.iter().enumerate() {
                let start_node = if alpha.is_infinite() { (node + c) % n_nodes } else { node };
                node_indices[start_node].extend_from_slice(&pool[off..off + cnt]);
                off += cnt;
            }
        }
        if node_indices.iter().all(|v| !v.is_empty()) {
            for v in &mut node_indices {
                v.sort_unstable();
            }
            return Ok(Partition { node_indices, alpha });
        }
    }
    Err(DataError::EmptyNode(MAX_ATTEMPTS))
}

fn dirichlet_proportions(alpha: f64, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha > 0");
    let mut draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng).max(1e-300)).collect();
    let sum: f64 = draws.iter().sum();
    for d in &mut draws {
        *d /= sum;
    }
    draws
}

fn round_robin_counts(total: usize, n: usize) -> Vec<usize> {
    let base = total / n;
    let extra = total % n;
    (0..n).map(|i| base + usize::from(i < extra)).collect()
}

/// Integer counts summing to `total`, proportional to `props`, by largest
/// remainder; ties broken by lower index.
fn largest_remainder(props: &[f64], total: usize) -> Vec<usize> {
    let raw: Vec<f64> = props.iter().map(|p| p * total as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..props.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for i in 0..(total - assigned) {
        counts[order[i % order.len()]] += 1;
    }
    counts
}

/// Trigger shapes; `twin_lines` is the non-contiguous pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerShape {
    Square,
    Cross,
    TwinLines,
    SinglePixel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerPosition {
    BottomRight,
    TopRight,
    Center,
    TopCenterLeft,
}

/// A patch trigger: shape, size, anchor position, pixel intensity, target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerSpec {
    pub shape: TriggerShape,
    pub size: usize,
    pub position: TriggerPosition,
    pub value: f64,
    pub target_label: usize,
}

impl TriggerSpec {
    /// Pixel coordinates of the trigger footprint, bounds-checked and
    /// capped at 10% of the image.
    pub fn footprint(&self, height: usize, width: usize) -> Result<Vec<(usize, usize)>, DataError> {
        let s = self.size;
        let oob = || DataError::FootprintOutOfBounds { height, width };
        if s == 0 || s > height || s > width {
            return Err(oob());
        }
        let (r0, c0) = match self.position {
            TriggerPosition::BottomRight => (height - s, width - s),
            TriggerPosition::TopRight => (0, width - s),
            TriggerPosition::Center => ((height - s) / 2, (width - s) / 2),
            TriggerPosition::TopCenterLeft => {
                if 1 + s > height || width / 4 + s > width {
                    return Err(oob());
                }
                (1, width / 4)
            }
        };
        let mut px = Vec::new();
        match self.shape {
            TriggerShape::SinglePixel => px.push((r0, c0)),
            TriggerShape::Square => {
                for r in r0..r0 + s {
                    for c in c0..c0 + s {
                        px.push((r, c));
                    }
                }
            }
            TriggerShape::Cross => {
                let mid = s / 2;
                for c in c0..c0 + s {
                    px.push((r0 + mid, c));
                }
                for r in r0..r0 + s {
                    if r != r0 + mid {
                        px.push((r, c0 + mid));
                    }
                }
                px.sort_unstable();
            }
            TriggerShape::TwinLines => {
                // two horizontal lines with a one-pixel gap: rows r0 and r0+2
                if r0 + 2 >= height {
                    return Err(oob());
                }
                for c in c0..c0 + s {
                    px.push((r0, c));
                    px.push((r0 + 2, c));
                }
                px.sort_unstable();
            }
        }
        let budget = height * width / 10;
        if px.len() > budget.max(1) {
            return Err(DataError::FootprintTooLarge { footprint: px.len(), budget });
        }
        if px.iter().any(|&(r, c)| r >= height || c >= width) {
            return Err(oob());
        }
        Ok(px)
    }
}

/// Stamp the trigger onto an image: footprint pixels (all channels) are
/// replaced by `spec.value`; everything else is untouched.
pub fn apply_trigger(x: &Tensor, spec: &TriggerSpec) -> Result<Tensor, DataError> {
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let px = spec.footprint(h, w)?;
    let mut out = x.clone();
    for cc in 0..c {
        for &(r, col) in &px {
            let idx = out.idx3(cc, r, col);
            out.data_mut()[idx] = spec.value;
        }
    }
    Ok(out)
}

/// Apply the trigger and flip the label on a seeded random
/// `floor(fraction * n)` subset; the rest is unchanged.
pub fn poison(ds: &Dataset, spec: &TriggerSpec, fraction: f64, seed: u64) -> Result<Dataset, DataError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DataError::BadFraction(fraction));
    }
    let n_poison = (fraction * ds.len() as f64).floor() as usize;
    let mut out = ds.clone();
    if n_poison == 0 {
        return Ok(out);
    }
    let mut rng = seeds::stream(seed, Domain::Poison, &[]);
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut rng);
    for &i in idx.iter().take(n_poison) {
        out.images[i] = apply_trigger(&ds.images[i], spec)?;
        out.labels[i] = spec.target_label;
    }
    Ok(out)
}

/// Number of 4-connected components among a set of pixels (trigger
/// footprint contiguity checks).
pub fn connected_components(pixels: &[(usize, usize)]) -> usize {
    let mut seen = vec![false; pixels.len()];
    let mut count = 0;
    for start in 0..pixels.len() {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (r, c) = pixels[i];
            for (j, &(r2, c2)) in pixels.iter().enumerate() {
                if !seen[j]
                    && ((r == r2 && c.abs_diff(c2) == 1) || (c == c2 && r.abs_diff(r2) == 1))
                {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}
