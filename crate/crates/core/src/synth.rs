//! Seeded synthetic benchmark standing in for a real food-logging corpus.
//!
//! The generator models four properties of personal photo logs:
//!
//! - a skewed per-user class frequency (Zipf over the common classes, with a
//!   per-user permutation of which class is most frequent),
//! - user-private classes that no common prototype covers,
//! - inter-class similarity (groups of common classes whose directions lie
//!   close to a shared center),
//! - intra-class diversity (each user photographs a class in their own
//!   "mode", perturbed away from the class direction).
//!
//! Perturbation is Gaussian noise followed by renormalization. With
//! `rectify` set, negative components are clipped before renormalizing so
//! every vector lies in the non-negative orthant, like post-ReLU CNN
//! features; all similarities are then non-negative.
//!
//! Per-user class counts are allocated deterministically from the expected
//! frequencies (floor, then the remainder to the highest ranks), and the
//! resulting multiset of labels is shuffled into time order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_records;
use crate::model::{ClassId, Embedding, LabelRegistry, LabeledRecord};
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub dim: usize,
    /// Number of common classes.
    pub classes: usize,
    pub users: usize,
    /// Records per user.
    pub records: usize,
    /// Zipf exponent of each user's common-class frequencies.
    pub zipf_exponent: f64,
    pub novel_per_user: usize,
    /// Share of each user's records that belong to their private classes.
    pub novel_mass: f64,
    /// Spread of a user's class mode around the class direction.
    pub sigma_user: f64,
    /// Spread of one record around its user mode.
    pub sigma_sample: f64,
    pub confusable_groups: usize,
    pub group_size: usize,
    /// Angle (radians) between a grouped class direction and its group center.
    pub group_tightness: f64,
    /// Training samples of the most frequent common class; class `i` gets
    /// `max(train_min, train_max / (i + 1)^zipf_exponent)`.
    pub train_max: usize,
    pub train_min: usize,
    pub rectify: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            classes: 213,
            users: 200,
            records: 300,
            zipf_exponent: 1.0,
            novel_per_user: 10,
            novel_mass: 0.3,
            sigma_user: 0.8,
            sigma_sample: 0.9,
            confusable_groups: 20,
            group_size: 3,
            group_tightness: 0.35,
            train_max: 200,
            train_min: 20,
            rectify: true,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(m.to_string()));
        if self.dim < 2 {
            return fail("dim must be at least 2");
        }
        if self.classes < 1 {
            return fail("at least one common class is required");
        }
        if self.records < 1 {
            return fail("records per user must be at least 1");
        }
        if !(self.sigma_user >= 0.0 && self.sigma_sample >= 0.0)
            || !self.sigma_user.is_finite()
            || !self.sigma_sample.is_finite()
        {
            return fail("sigma values must be finite and non-negative");
        }
        if !(self.zipf_exponent >= 0.0 && self.zipf_exponent.is_finite()) {
            return fail("zipf exponent must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.novel_mass) {
            return fail("novel mass must be in [0, 1)");
        }
        if !(self.group_tightness >= 0.0 && self.group_tightness.is_finite()) {
            return fail("group tightness must be finite and non-negative");
        }
        if self.confusable_groups > 0 && self.group_size < 2 {
            return fail("confusable groups need at least 2 members");
        }
        if self.confusable_groups * self.group_size > self.classes {
            return fail("confusable groups need more classes than exist");
        }
        if self.train_min < 1 || self.train_max < self.train_min {
            return fail("training counts need 1 <= train_min <= train_max");
        }
        if self.novel_records() < self.novel_per_user {
            return fail("novel mass leaves fewer records than novel classes");
        }
        Ok(())
    }

    fn novel_records(&self) -> usize {
        if self.novel_per_user == 0 {
            0
        } else {
            (self.records as f64 * self.novel_mass).round() as usize
        }
    }

    fn train_count(&self, class: usize) -> usize {
        let share = self.train_max as f64 / ((class + 1) as f64).powf(self.zipf_exponent);
        (share.floor() as usize).max(self.train_min)
    }
}

/// Ground truth of one synthetic user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTruth {
    pub user: String,
    /// Common class labels from most to least frequent.
    pub common_rank: Vec<String>,
    pub novel: Vec<String>,
    /// Allocated record count per label.
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SynthConfig,
    pub common: Vec<String>,
    pub groups: Vec<Vec<String>>,
    pub users: Vec<UserTruth>,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub registry: LabelRegistry,
    pub train: Vec<LabeledRecord>,
    pub stream: Vec<LabeledRecord>,
    pub manifest: Manifest,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
        .collect()
}

fn unit(mut v: Vec<f64>, rectify: bool) -> Option<Vec<f64>> {
    if rectify {
        v.iter_mut().for_each(|x| *x = x.max(0.0));
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 1e-12).then(|| v.into_iter().map(|x| x / n).collect())
}

struct Sampler<'a> {
    rng: ChaCha8Rng,
    cfg: &'a SynthConfig,
}

impl Sampler<'_> {
    fn direction(&mut self) -> Vec<f64> {
        loop {
            let g = gaussian(&mut self.rng, self.cfg.dim, 1.0);
            if let Some(v) = unit(g, self.cfg.rectify) {
                return v;
            }
        }
    }

    /// `normalize(v + sigma * noise)`, with noise of expected norm one.
    fn perturb(&mut self, v: &[f64], sigma: f64) -> Vec<f64> {
        if sigma == 0.0 {
            return v.to_vec();
        }
        let scale = sigma / (self.cfg.dim as f64).sqrt();
        loop {
            let noise = gaussian(&mut self.rng, self.cfg.dim, scale);
            let moved: Vec<f64> = v.iter().zip(&noise).map(|(a, b)| a + b).collect();
            if let Some(u) = unit(moved, self.cfg.rectify) {
                return u;
            }
        }
    }

    /// A direction at angle `angle` from `center`.
    fn tilt(&mut self, center: &[f64], angle: f64) -> Vec<f64> {
        loop {
            let g = gaussian(&mut self.rng, self.cfg.dim, 1.0);
            let along: f64 = g.iter().zip(center).map(|(a, b)| a * b).sum();
            let perp: Vec<f64> = g.iter().zip(center).map(|(a, c)| a - along * c).collect();
            let Some(perp) = unit(perp, false) else {
                continue;
            };
            let v: Vec<f64> = center
                .iter()
                .zip(&perp)
                .map(|(c, p)| angle.cos() * c + angle.sin() * p)
                .collect();
            if let Some(u) = unit(v, self.cfg.rectify) {
                return u;
            }
        }
    }
}

fn embed(v: &[f64]) -> Embedding {
    Embedding::normalize(v).expect("generated vectors are unit")
}

/// Expected-frequency allocation of `total` records over `weights`
/// (non-increasing); the result is non-increasing as well.
fn allocate(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let mut counts: Vec<usize> = weights
        .iter()
        .map(|w| (total as f64 * w / sum).floor() as usize)
        .collect();
    let assigned: usize = counts.iter().sum();
    for c in counts.iter_mut().take(total.saturating_sub(assigned)) {
        *c += 1;
    }
    counts
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut s = Sampler {
        rng: rng_for(cfg.seed, "synth"),
        cfg,
    };
    let mut registry = LabelRegistry::new();
    let width = cfg.classes.saturating_sub(1).to_string().len().max(3);
    let common: Vec<String> = (0..cfg.classes).map(|i| format!("c{i:0width$}")).collect();
    let ids: Vec<ClassId> = common
        .iter()
        .map(|l| registry.intern(l))
        .collect::<Result<_>>()?;

    let mut dirs: Vec<Vec<f64>> = (0..cfg.classes).map(|_| s.direction()).collect();
    let mut groups = Vec::new();
    for g in 0..cfg.confusable_groups {
        let center = s.direction();
        let members: Vec<usize> = (g * cfg.group_size..(g + 1) * cfg.group_size).collect();
        for &m in &members {
            dirs[m] = s.tilt(&center, cfg.group_tightness);
        }
        groups.push(members.iter().map(|&m| common[m].clone()).collect());
    }

    let mut train = Vec::new();
    for (c, dir) in dirs.iter().enumerate() {
        for _ in 0..cfg.train_count(c) {
            let mode = s.perturb(dir, cfg.sigma_user);
            let v = s.perturb(&mode, cfg.sigma_sample);
            train.push(LabeledRecord {
                user: "train".into(),
                t: train.len() as u32 + 1,
                class: ids[c],
                embedding: embed(&v),
            });
        }
    }

    let zipf: Vec<f64> = (0..cfg.classes)
        .map(|r| ((r + 1) as f64).powf(-cfg.zipf_exponent))
        .collect();
    let novel_total = cfg.novel_records();
    let common_counts = allocate(cfg.records - novel_total, &zipf);
    let novel_counts = allocate(novel_total, &vec![1.0; cfg.novel_per_user]);
    let user_width = cfg.users.saturating_sub(1).to_string().len().max(4);

    let mut stream = Vec::with_capacity(cfg.users * cfg.records);
    let mut truths = Vec::with_capacity(cfg.users);
    for u in 0..cfg.users {
        let user = format!("u{u:0user_width$}");
        let mut order: Vec<usize> = (0..cfg.classes).collect();
        order.shuffle(&mut s.rng);

        let mut modes: Vec<(ClassId, Vec<f64>, usize)> = Vec::new();
        let mut counts = BTreeMap::new();
        for (rank, &c) in order.iter().enumerate() {
            let n = common_counts[rank];
            if n > 0 {
                let mode = s.perturb(&dirs[c], cfg.sigma_user);
                modes.push((ids[c], mode, n));
                counts.insert(common[c].clone(), n);
            }
        }
        let mut novel = Vec::with_capacity(cfg.novel_per_user);
        for (j, &n) in novel_counts.iter().enumerate() {
            let label = format!("{user}-n{j:02}");
            let id = registry.intern(&label)?;
            let dir = s.direction();
            let mode = s.perturb(&dir, cfg.sigma_user);
            modes.push((id, mode, n));
            counts.insert(label.clone(), n);
            novel.push(label);
        }

        let mut timeline: Vec<usize> = modes
            .iter()
            .enumerate()
            .flat_map(|(i, (_, _, n))| std::iter::repeat_n(i, *n))
            .collect();
        timeline.shuffle(&mut s.rng);
        for (t, &i) in timeline.iter().enumerate() {
            let (class, mode, _) = &modes[i];
            let v = s.perturb(mode, cfg.sigma_sample);
            stream.push(LabeledRecord {
                user: user.clone(),
                t: t as u32 + 1,
                class: *class,
                embedding: embed(&v),
            });
        }
        truths.push(UserTruth {
            user,
            common_rank: order.iter().map(|&c| common[c].clone()).collect(),
            novel,
            counts,
        });
    }

    Ok(SynthData {
        registry,
        train,
        stream,
        manifest: Manifest {
            config: cfg.clone(),
            common,
            groups,
            users: truths,
        },
    })
}

/// Paths written by [`write_synthetic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFiles {
    pub train: PathBuf,
    pub stream: PathBuf,
    pub manifest: PathBuf,
}

pub fn write_synthetic(data: &SynthData, dir: &Path) -> Result<SynthFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = SynthFiles {
        train: dir.join("train.jsonl"),
        stream: dir.join("stream.jsonl"),
        manifest: dir.join("manifest.json"),
    };
    let dim = data.manifest.config.dim;
    write_records(&files.train, dim, &data.train, &data.registry)?;
    write_records(&files.stream, dim, &data.stream, &data.registry)?;
    let mut json = serde_json::to_string_pretty(&data.manifest).expect("manifest serializes");
    json.push('\n');
    std::fs::write(&files.manifest, json).map_err(|e| Error::io(&files.manifest, e))?;
    Ok(files)
}
