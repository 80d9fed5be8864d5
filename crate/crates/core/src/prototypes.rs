//! Construction of the common classifier: initial class selection by record
//! count, per-class mean prototypes, and coverage of the selected subset.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ClassId, Embedding, LabelRegistry, LabeledRecord, PrototypeSet};

/// Per-class record counts over a training corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainIndex {
    counts: BTreeMap<ClassId, u64>,
    total: u64,
}

impl TrainIndex {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a LabeledRecord>) -> Self {
        let mut index = Self::default();
        for r in records {
            index.add(r.class, 1);
        }
        index
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (ClassId, u64)>) -> Self {
        let mut index = Self::default();
        for (c, n) in counts {
            index.add(c, n);
        }
        index
    }

    pub fn add(&mut self, class: ClassId, n: u64) {
        *self.counts.entry(class).or_insert(0) += n;
        self.total += n;
    }

    pub fn count(&self, class: ClassId) -> u64 {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.counts.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsetSpec {
    min_records: u64,
    per_class_cap: Option<usize>,
}

impl SubsetSpec {
    pub fn new(min_records: u64, per_class_cap: Option<usize>) -> Result<Self> {
        if min_records < 1 {
            return Err(Error::invalid("min records must be at least 1"));
        }
        if per_class_cap == Some(0) {
            return Err(Error::invalid("per-class cap must be positive"));
        }
        Ok(Self {
            min_records,
            per_class_cap,
        })
    }

    pub fn min_records(&self) -> u64 {
        self.min_records
    }

    pub fn per_class_cap(&self) -> Option<usize> {
        self.per_class_cap
    }
}

/// Classes with at least `spec.min_records` records.
pub fn select_classes(index: &TrainIndex, spec: &SubsetSpec) -> BTreeSet<ClassId> {
    index
        .counts
        .iter()
        .filter(|(_, &n)| n >= spec.min_records)
        .map(|(&c, _)| c)
        .collect()
}

/// Fraction of all records whose class lies in `subset`.
pub fn coverage(subset: &BTreeSet<ClassId>, index: &TrainIndex) -> Result<f64> {
    if index.total == 0 {
        return Err(Error::invalid("coverage of an empty corpus is undefined"));
    }
    let covered: u64 = subset.iter().map(|&c| index.count(c)).sum();
    Ok(covered as f64 / index.total as f64)
}

/// Rough real-world accuracy of a fixed-class classifier: its accuracy within
/// the subset scaled by the subset's coverage.
pub fn estimate_real_world_accuracy(acc_within: f64, coverage: f64) -> f64 {
    acc_within * coverage
}

/// Per-class unit means of the member embeddings.
///
/// With a per-class cap, each class draws its sample from its own generator
/// stream (keyed by the class id), so selecting a different class subset
/// never changes another class's sample.
pub fn build_prototypes(
    records: &[LabeledRecord],
    classes: &BTreeSet<ClassId>,
    spec: &SubsetSpec,
    seed: u64,
    registry: &LabelRegistry,
) -> Result<PrototypeSet> {
    let labels = |c: ClassId| {
        registry
            .resolve(c)
            .map(str::to_owned)
            .unwrap_or_else(|| c.to_string())
    };
    let dim = records.first().map(|r| r.embedding.dim()).unwrap_or(0);
    let mut members: BTreeMap<ClassId, Vec<&LabeledRecord>> =
        classes.iter().map(|&c| (c, Vec::new())).collect();
    for r in records {
        if r.embedding.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: r.embedding.dim(),
            });
        }
        if let Some(list) = members.get_mut(&r.class) {
            list.push(r);
        }
    }

    let means: Vec<(ClassId, Embedding, u64)> = members
        .into_par_iter()
        .map(|(class, list)| {
            if list.is_empty() {
                return Err(Error::EmptyClass(labels(class)));
            }
            let chosen: Vec<&LabeledRecord> = match spec.per_class_cap {
                Some(cap) if cap < list.len() => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(u64::from(class.0));
                    let mut picked = index::sample(&mut rng, list.len(), cap).into_vec();
                    picked.sort_unstable();
                    picked.into_iter().map(|i| list[i]).collect()
                }
                _ => list,
            };
            let mut sum = vec![0.0f64; dim];
            for r in &chosen {
                for (acc, &x) in sum.iter_mut().zip(r.embedding.as_slice()) {
                    *acc += f64::from(x);
                }
            }
            let n = chosen.len() as f64;
            sum.iter_mut().for_each(|s| *s /= n);
            let norm = sum.iter().map(|s| s * s).sum::<f64>().sqrt();
            if norm < 1e-12 {
                return Err(Error::ZeroMean(labels(class)));
            }
            let mean = Embedding::normalize(&sum)?;
            Ok((class, mean, chosen.len() as u64))
        })
        .collect::<Result<_>>()?;

    let mut set = PrototypeSet::new(dim);
    for (class, mean, count) in means {
        set.insert(class, mean, count)?;
    }
    Ok(set)
}
