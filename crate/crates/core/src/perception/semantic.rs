//! Patch-level semantic similarity between the view and a query class.
//!
//! Class embeddings come from a provider. The synthetic provider draws a
//! deterministic unit vector per class and blends child classes toward
//! their parent, so related classes score visibly higher than unrelated
//! ones; it stands in for a learned encoder with the same interface.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::frame::ClassFrame;
use crate::rng::{child_seed, rng_from};
use crate::sim::VoxelScene;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemanticConfig {
    /// Patch grid; must divide the image width and height evenly.
    pub patches_x: usize,
    pub patches_y: usize,
    pub embed_dim: usize,
    /// Cosine pull of a child class toward its parent, in [0, 1).
    pub relatedness: f64,
    /// Weight of the background vector in patch means. Small, so any
    /// object pixels dominate the patch.
    pub background_weight: f64,
}

impl Default for SemanticConfig {
    fn default() -> Self {
        SemanticConfig {
            patches_x: 8,
            patches_y: 6,
            embed_dim: 32,
            relatedness: 0.6,
            background_weight: 0.1,
        }
    }
}

/// Source of class embeddings. Vectors must all share `dim` length.
pub trait EmbeddingProvider {
    fn dim(&self) -> usize;
    fn class_embedding(&self, class: &str) -> Vec<f64>;
    /// Embedding contributed by structure and empty pixels, already
    /// scaled by the background weight.
    fn background_embedding(&self) -> Vec<f64>;
}

/// Deterministic stand-in encoder: per-class unit vectors seeded by class
/// name, children blended toward their parent so that
/// cos(child, parent) is approximately the relatedness.
#[derive(Debug, Clone)]
pub struct SyntheticEmbedding {
    dim: usize,
    background: Vec<f64>,
    by_class: BTreeMap<String, Vec<f64>>,
}

fn unit_vector(seed: u64, label: &str, dim: usize) -> Vec<f64> {
    let mut rng = rng_from(child_seed(seed, label));
    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    v
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    v
}

impl SyntheticEmbedding {
    /// Builds embeddings for every class in the taxonomy. Parents listed
    /// in the taxonomy must themselves be taxonomy keys.
    pub fn new(
        cfg: &SemanticConfig,
        seed: u64,
        taxonomy: &BTreeMap<String, Option<String>>,
    ) -> Self {
        let dim = cfg.embed_dim;
        let raw = |class: &str| unit_vector(seed, &format!("embedding/{class}"), dim);
        let mut by_class = BTreeMap::new();
        for (class, parent) in taxonomy {
            let v = match parent.as_deref() {
                None => raw(class),
                Some(p) => {
                    let vp = raw(p);
                    let vc = raw(class);
                    let w = cfg.relatedness;
                    let orth = (1.0 - w * w).sqrt();
                    normalize((0..dim).map(|i| w * vp[i] + orth * vc[i]).collect())
                }
            };
            by_class.insert(class.clone(), v);
        }
        let background = unit_vector(seed, "embedding/__background__", dim)
            .into_iter()
            .map(|x| x * cfg.background_weight)
            .collect();
        SyntheticEmbedding { dim, background, by_class }
    }
}

impl EmbeddingProvider for SyntheticEmbedding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn class_embedding(&self, class: &str) -> Vec<f64> {
        self.by_class
            .get(class)
            .unwrap_or_else(|| panic!("no embedding for class {class:?}"))
            .clone()
    }

    fn background_embedding(&self) -> Vec<f64> {
        self.background.clone()
    }
}

/// Cosine similarity clamped to [-1, 1]; zero if either vector has zero
/// norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "cosine needs equal-length vectors");
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Per-patch cosine similarity between the view and the target class.
/// Patches run row-major, left to right then top to bottom. Each patch's
/// embedding is the mean of its pixels' class vectors, with non-object
/// pixels contributing the damped background vector.
pub fn semantic_map(
    class_frame: &ClassFrame,
    scene: &VoxelScene,
    provider: &dyn EmbeddingProvider,
    target_class: &str,
    cfg: &SemanticConfig,
) -> Vec<f64> {
    let (w, h) = (class_frame.width(), class_frame.height());
    assert!(
        cfg.patches_x > 0
            && cfg.patches_y > 0
            && w % cfg.patches_x == 0
            && h % cfg.patches_y == 0,
        "patch grid {}x{} must divide the {}x{} image",
        cfg.patches_x,
        cfg.patches_y,
        w,
        h
    );
    let (pw, ph) = (w / cfg.patches_x, h / cfg.patches_y);
    let query = provider.class_embedding(target_class);
    let background = provider.background_embedding();
    let dim = provider.dim();

    let mut out = Vec::with_capacity(cfg.patches_x * cfg.patches_y);
    for pj in 0..cfg.patches_y {
        for pi in 0..cfg.patches_x {
            // Count pixels per class id; the patch mean is then an exact
            // weighted sum regardless of pixel order.
            let mut counts: BTreeMap<u16, usize> = BTreeMap::new();
            for v in pj * ph..(pj + 1) * ph {
                for u in pi * pw..(pi + 1) * pw {
                    *counts.entry(class_frame.at(u, v)).or_insert(0) += 1;
                }
            }
            let mut mean = vec![0.0; dim];
            for (&id, &count) in &counts {
                let vec = match scene.class_name(id) {
                    Some(name) => provider.class_embedding(name),
                    None => background.clone(),
                };
                for (m, x) in mean.iter_mut().zip(&vec) {
                    *m += count as f64 * x;
                }
            }
            let total = (pw * ph) as f64;
            for m in mean.iter_mut() {
                *m /= total;
            }
            out.push(cosine(&mean, &query));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taxonomy(entries: &[(&str, Option<&str>)]) -> BTreeMap<String, Option<String>> {
        entries
            .iter()
            .map(|(c, p)| (c.to_string(), p.map(str::to_string)))
            .collect()
    }

    #[test]
    fn class_vectors_are_unit_and_reproducible() {
        let cfg = SemanticConfig::default();
        let tax = taxonomy(&[("crate", None), ("table", None)]);
        let a = SyntheticEmbedding::new(&cfg, 5, &tax);
        let b = SyntheticEmbedding::new(&cfg, 5, &tax);
        let va = a.class_embedding("crate");
        assert_eq!(va.len(), 32);
        assert!((va.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
        assert_eq!(va, b.class_embedding("crate"));
        let c = SyntheticEmbedding::new(&cfg, 6, &tax);
        assert_ne!(va, c.class_embedding("crate"));
    }

    #[test]
    fn children_lean_toward_their_parent() {
        let cfg = SemanticConfig::default();
        let tax = taxonomy(&[("table", None), ("mug", Some("table")), ("crate", None)]);
        for seed in [0, 1, 2, 3] {
            let e = SyntheticEmbedding::new(&cfg, seed, &tax);
            let related = cosine(&e.class_embedding("mug"), &e.class_embedding("table"));
            let unrelated = cosine(&e.class_embedding("crate"), &e.class_embedding("table"));
            assert!(
                (related - cfg.relatedness).abs() < 0.25,
                "seed {seed}: cos(mug, table) = {related}"
            );
            assert!(unrelated.abs() < 0.5, "seed {seed}: cos(crate, table) = {unrelated}");
            assert!(related > unrelated + 0.2);
        }
    }

    #[test]
    fn cosine_bounds_and_degenerate_inputs() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 0.0]), 0.0);
        assert!((cosine(&[1.0, 1.0], &[1.0, 1.0]) - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[-1.0, 0.0]), -1.0);
        // A sum of many aligned products can drift a hair above one; the
        // clamp pins it back.
        let v: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        assert!(cosine(&v, &v) <= 1.0);
    }

    mod patch_map {
        use super::*;
        use crate::sim::VoxelScene;

        fn scene() -> VoxelScene {
            let mut s = VoxelScene::new(0.15, [20, 20, 8], 0).unwrap();
            s.declare_class("table", None);
            s.declare_class("mug", Some("table"));
            s.declare_class("crate", None);
            s
        }

        #[test]
        fn pure_target_patches_score_one() {
            let s = scene();
            let cfg = SemanticConfig::default();
            let e = SyntheticEmbedding::new(&cfg, 0, s.taxonomy());
            let id = s.class_id("crate").unwrap();
            let mut frame = ClassFrame::new(80, 60);
            // Left half of the image is pure target.
            for v in 0..60 {
                for u in 0..40 {
                    frame.set(u, v, id);
                }
            }
            let map = semantic_map(&frame, &s, &e, "crate", &cfg);
            assert_eq!(map.len(), 48);
            for pj in 0..6 {
                for pi in 0..8 {
                    let sim = map[pj * 8 + pi];
                    if pi < 4 {
                        assert!((sim - 1.0).abs() < 1e-12, "patch ({pi},{pj}) = {sim}");
                    } else {
                        assert!(sim < 0.6, "background patch ({pi},{pj}) = {sim}");
                    }
                }
            }
        }

        #[test]
        fn parent_in_view_scores_between_target_and_background() {
            let s = scene();
            let cfg = SemanticConfig::default();
            let e = SyntheticEmbedding::new(&cfg, 0, s.taxonomy());
            let table = s.class_id("table").unwrap();
            let mut frame = ClassFrame::new(80, 60);
            for v in 0..60 {
                for u in 0..40 {
                    frame.set(u, v, table);
                }
            }
            let map = semantic_map(&frame, &s, &e, "mug", &cfg);
            let on_parent = map[0];
            let on_background = map[7];
            assert!(
                (on_parent - cfg.relatedness).abs() < 0.25,
                "parent patch = {on_parent}"
            );
            assert!(on_parent > on_background + 0.2);
        }

        #[test]
        fn zero_background_weight_gives_zero_similarity() {
            let s = scene();
            let cfg = SemanticConfig { background_weight: 0.0, ..SemanticConfig::default() };
            let e = SyntheticEmbedding::new(&cfg, 0, s.taxonomy());
            let frame = ClassFrame::new(80, 60);
            let map = semantic_map(&frame, &s, &e, "crate", &cfg);
            assert!(map.iter().all(|&x| x == 0.0));
        }

        #[test]
        fn seven_by_seven_grid_on_a_square_image() {
            let s = scene();
            let cfg =
                SemanticConfig { patches_x: 7, patches_y: 7, ..SemanticConfig::default() };
            let e = SyntheticEmbedding::new(&cfg, 0, s.taxonomy());
            let frame = ClassFrame::new(70, 70);
            let map = semantic_map(&frame, &s, &e, "crate", &cfg);
            assert_eq!(map.len(), 49);
        }

        #[test]
        #[should_panic(expected = "must divide")]
        fn indivisible_patch_grid_panics() {
            let s = scene();
            let cfg =
                SemanticConfig { patches_x: 7, patches_y: 7, ..SemanticConfig::default() };
            let e = SyntheticEmbedding::new(&cfg, 0, s.taxonomy());
            let frame = ClassFrame::new(80, 60);
            semantic_map(&frame, &s, &e, "crate", &cfg);
        }
    }
}
