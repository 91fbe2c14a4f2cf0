//! Deterministic, seedable simulator of decentralized learning (D-PSGD)
//! under backdoor attack.
//!
//! The crate bundles:
//! - a minimal dense-tensor kernel and a small classifier with manual
//!   forward/backward passes, including input-image gradients ([`nn`]);
//! - toy data generation, Dirichlet partitioning and backdoor poisoning
//!   ([`data`]);
//! - communication graphs, gossip matrices and a Jacobi eigensolver
//!   ([`graph`]);
//! - the trigger reverse-engineering defense: local detection, top-k
//!   clipped SSIM comparison, collaborative verification, a per-neighbor
//!   trust state machine and offline threshold calibration ([`detect`],
//!   [`trigger`], [`trust`], [`calibrate`], [`defense`]);
//! - baseline defenses (oracle, local-only, multi-krum, norm clipping,
//!   curvature correction) ([`defense`]);
//! - a synchronous round engine over an in-process message bus ([`sim`]);
//! - closed-form evaluation and Monte-Carlo validation of the ejection
//!   and random-mixing spectral results ([`theory`]);
//! - experiment orchestration: config files, runs and sweeps ([`config`],
//!   [`harness`]).

pub mod calibrate;
pub mod config;
pub mod data;
pub mod defense;
pub mod detect;
pub mod graph;
pub mod harness;
pub mod nn;
pub mod seeds;
pub mod sim;
pub mod tensor;
pub mod theory;
pub mod trigger;
pub mod trust;

pub use tensor::Tensor;
