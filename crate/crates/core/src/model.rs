//! Domain types shared by every other module: class ids and their label
//! registry, unit-norm embeddings, labeled stream records, the per-user
//! vector store and the common prototype set.
//!
//! Vectors are stored as `f32`; every dot product and mean accumulates in
//! `f64`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on `||v||_2 = 1` for vectors that claim to be normalized.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// Dense class identifier handed out by a [`LabelRegistry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub u32);

impl ClassId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Bijection between label strings and dense [`ClassId`]s.
///
/// Labels are compared byte-for-byte: no case folding, no Unicode
/// normalization.
#[derive(Debug, Clone, Default)]
pub struct LabelRegistry {
    ids: HashMap<String, ClassId>,
    labels: Vec<String>,
}

impl LabelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, label: &str) -> Result<ClassId> {
        if label.is_empty() {
            return Err(Error::invalid("class label must be non-empty"));
        }
        if let Some(&id) = self.ids.get(label) {
            return Ok(id);
        }
        let id = ClassId(
            u32::try_from(self.labels.len())
                .map_err(|_| Error::invalid("too many distinct labels"))?,
        );
        self.labels.push(label.to_owned());
        self.ids.insert(label.to_owned(), id);
        Ok(id)
    }

    pub fn get(&self, label: &str) -> Option<ClassId> {
        self.ids.get(label).copied()
    }

    pub fn resolve(&self, id: ClassId) -> Option<&str> {
        self.labels.get(id.index()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Free-standing form of [`LabelRegistry::intern`].
pub fn intern_label(label: &str, registry: &mut LabelRegistry) -> Result<ClassId> {
    registry.intern(label)
}

/// A unit-L2 feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f32>,
}

impl Embedding {
    /// Scales `raw` to unit norm. A zero vector is an error.
    pub fn normalize(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::invalid("embedding must have at least one component"));
        }
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::invalid("embedding has non-finite components"));
        }
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            values: raw.iter().map(|v| (v / norm) as f32).collect(),
        })
    }

    pub fn normalize_f32(raw: &[f32]) -> Result<Self> {
        let wide: Vec<f64> = raw.iter().map(|&v| f64::from(v)).collect();
        Self::normalize(&wide)
    }

    /// Accepts `values` as-is after checking that the norm is within
    /// [`UNIT_NORM_TOLERANCE`] of one.
    pub fn from_unit(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("embedding must have at least one component"));
        }
        let norm = norm(&values);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::invalid(format!(
                "embedding is not unit-norm (||v|| = {norm})"
            )));
        }
        Ok(Self { values })
    }

    #[inline]
    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.values
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        dot(&self.values, &other.values)
    }
}

/// Free-standing form of [`Embedding::normalize`].
pub fn normalize(raw: &[f64]) -> Result<Embedding> {
    Embedding::normalize(raw)
}

const LANES: usize = 16;

/// Dot product with `f64` accumulation.
///
/// Sixteen independent partial sums let the compiler vectorize the loop; the
/// summation order is fixed, so results are reproducible bit-for-bit and do
/// not depend on which instruction set the kernel runs on.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the running CPU supports AVX2.
            return unsafe { dot_avx2(a, b) };
        }
    }
    dot_lanes(a, b)
}

/// [`dot`] against a query already widened to `f64`; bit-identical to
/// `dot(query_as_f32, v)` but skips re-converting the query for every vector.
#[inline]
pub fn dot_wide(query: &[f64], v: &[f32]) -> f64 {
    debug_assert_eq!(query.len(), v.len());
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the running CPU supports AVX2.
            return unsafe { dot_wide_avx2(query, v) };
        }
    }
    dot_lanes(query, v)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn dot_avx2(a: &[f32], b: &[f32]) -> f64 {
    dot_lanes(a, b)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn dot_wide_avx2(query: &[f64], v: &[f32]) -> f64 {
    dot_lanes(query, v)
}

#[inline(always)]
fn dot_lanes<Q: Copy + Into<f64>>(a: &[Q], b: &[f32]) -> f64 {
    let mut acc = [0.0f64; LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..LANES {
            acc[i] += x[i].into() * f64::from(y[i]);
        }
    }
    let mut tail = 0.0f64;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += (*x).into() * f64::from(*y);
    }
    let mut width = LANES / 2;
    while width > 0 {
        for i in 0..width {
            acc[i] += acc[i + width];
        }
        width /= 2;
    }
    acc[0] + tail
}

/// Widens `v` into `out`, reusing its allocation.
pub fn widen_into(v: &[f32], out: &mut Vec<f64>) {
    out.clear();
    out.extend(v.iter().map(|&x| f64::from(x)));
}

pub fn norm(v: &[f32]) -> f64 {
    dot(v, v).sqrt()
}

/// One element of a user's stream.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub user: String,
    /// 1-based position in the user's stream.
    pub t: u32,
    pub class: ClassId,
    pub embedding: Embedding,
}

/// Read access to a labeled collection of vectors.
pub trait VectorSet {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn class_at(&self, i: usize) -> ClassId;
    fn vector_at(&self, i: usize) -> &[f32];

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-user append-only store `V_u` of `(embedding, class)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct UserStore {
    dim: usize,
    data: Vec<f32>,
    labels: Vec<ClassId>,
    present: Vec<bool>,
    class_set: Vec<ClassId>,
}

impl UserStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
            labels: Vec::new(),
            present: Vec::new(),
            class_set: Vec::new(),
        }
    }

    /// Appends one entry. Prior entries are never touched.
    pub fn push(&mut self, embedding: &Embedding, class: ClassId) -> Result<()> {
        if embedding.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: embedding.dim(),
            });
        }
        self.data.extend_from_slice(embedding.as_slice());
        self.labels.push(class);
        if self.present.len() <= class.index() {
            self.present.resize(class.index() + 1, false);
        }
        if !self.present[class.index()] {
            self.present[class.index()] = true;
            self.class_set.push(class);
        }
        Ok(())
    }

    /// `C_u`, in order of first appearance.
    pub fn classes(&self) -> &[ClassId] {
        &self.class_set
    }

    pub fn contains(&self, class: ClassId) -> bool {
        self.present.get(class.index()).copied().unwrap_or(false)
    }

    pub fn entries(&self) -> impl Iterator<Item = (ClassId, &[f32])> + '_ {
        self.labels
            .iter()
            .copied()
            .zip(self.data.chunks_exact(self.dim.max(1)))
    }
}

impl VectorSet for UserStore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    fn class_at(&self, i: usize) -> ClassId {
        self.labels[i]
    }

    fn vector_at(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// The common prototype set `V_m`: one unit-norm mean per class.
///
/// Each prototype optionally carries the number of training samples it was
/// averaged from, which the full-history mean-update baseline needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    dim: usize,
    data: Vec<f32>,
    labels: Vec<ClassId>,
    counts: Vec<u64>,
    slot: HashMap<ClassId, usize>,
}

impl PrototypeSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
            labels: Vec::new(),
            counts: Vec::new(),
            slot: HashMap::new(),
        }
    }

    /// Adds the prototype for `class`; `count` is its training sample count.
    pub fn insert(&mut self, class: ClassId, mean: Embedding, count: u64) -> Result<()> {
        if mean.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: mean.dim(),
            });
        }
        if self.slot.contains_key(&class) {
            return Err(Error::invalid(format!(
                "duplicate prototype for class {class}"
            )));
        }
        self.slot.insert(class, self.labels.len());
        self.data.extend_from_slice(mean.as_slice());
        self.labels.push(class);
        self.counts.push(count);
        Ok(())
    }

    /// `C_m`, in insertion order.
    pub fn classes(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn contains(&self, class: ClassId) -> bool {
        self.slot.contains_key(&class)
    }

    pub fn get(&self, class: ClassId) -> Option<&[f32]> {
        self.slot.get(&class).map(|&i| self.vector_at(i))
    }

    pub fn count(&self, class: ClassId) -> Option<u64> {
        self.slot.get(&class).map(|&i| self.counts[i])
    }

    pub fn entries(&self) -> impl Iterator<Item = (ClassId, &[f32])> + '_ {
        self.labels
            .iter()
            .copied()
            .zip(self.data.chunks_exact(self.dim.max(1)))
    }
}

impl VectorSet for PrototypeSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    fn class_at(&self, i: usize) -> ClassId {
        self.labels[i]
    }

    fn vector_at(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}
