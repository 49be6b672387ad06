#![allow(dead_code)]

use std::sync::LazyLock;

use finsler::cli::verify::{samples, Sample};
use finsler::gallery::{default_specs, make, GalleryEntry};
use proptest::prelude::*;

pub static GALLERY: LazyLock<Vec<GalleryEntry>> =
    LazyLock::new(|| default_specs().into_iter().map(|s| make(s).unwrap()).collect());

pub fn entry(name: &str) -> &'static GalleryEntry {
    GALLERY.iter().find(|e| e.name == name).unwrap()
}

pub fn randers() -> Vec<&'static GalleryEntry> {
    GALLERY.iter().filter(|e| e.randers.is_some()).collect()
}

/// One seeded sample `(x, y, u)` with `F(x, y) = 1`.
pub fn site(e: &GalleryEntry, seed: u64) -> Sample {
    samples(e, 1, seed).remove(0)
}

/// Gallery index and sample seed.
pub fn any_site() -> impl Strategy<Value = (usize, u64)> {
    (0..GALLERY.len(), any::<u64>())
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn vec_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs())) / scale
}

pub fn mat_rel(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (a, b): (Vec<f64>, Vec<f64>) = (a.concat(), b.concat());
    vec_rel(&a, &b)
}

pub fn max_abs(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|c| c * s).collect()
}
