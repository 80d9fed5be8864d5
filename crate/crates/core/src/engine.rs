//! The classification kernel.
//!
//! Class similarity is the best dot product between the query and any stored
//! vector of that class, or exactly `0` when the class has no stored vector.
//! The personalized ranking scores each class in `C_u ∪ C_m` by
//! `max(s_user, w * s_common)`; the linear variant scores
//! `(1 - w_s) * s_user + w_s * s_common`.
//!
//! Ties are broken deterministically: higher score first, then classes the
//! user has already registered, then the smaller [`ClassId`].

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{
    dot, dot_wide, widen_into, ClassId, Embedding, PrototypeSet, UserStore, VectorSet,
};

/// Weight of the common prototypes in the personalized ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpcConfig {
    w: f64,
}

impl SpcConfig {
    /// `w` must lie in `(0, 1]`; `w = 1` degenerates to plain 1-NN.
    pub fn new(w: f64) -> Result<Self> {
        if !(w > 0.0 && w <= 1.0) {
            return Err(Error::invalid(format!("w must be in (0, 1], got {w}")));
        }
        Ok(Self { w })
    }

    pub fn w(&self) -> f64 {
        self.w
    }
}

/// Balance of the linear-combination ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumConfig {
    ws: f64,
}

impl SumConfig {
    pub fn new(ws: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&ws) {
            return Err(Error::invalid(format!("w_s must be in [0, 1], got {ws}")));
        }
        Ok(Self { ws })
    }

    pub fn ws(&self) -> f64 {
        self.ws
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankEntry {
    pub class: ClassId,
    pub score: f64,
}

/// Candidate classes, best first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ranking {
    entries: Vec<RankEntry>,
}

impl Ranking {
    pub fn entries(&self) -> &[RankEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top1(&self) -> Option<ClassId> {
        self.entries.first().map(|e| e.class)
    }

    /// Zero-based rank of `class`, if it is a candidate at all.
    pub fn position(&self, class: ClassId) -> Option<usize> {
        self.entries.iter().position(|e| e.class == class)
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.entries.iter().map(|e| e.class)
    }
}

/// Shared ordering: score descending, then user classes, then class id.
pub(crate) fn tie_order(a: (f64, bool, ClassId), b: (f64, bool, ClassId)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .expect("scores are finite")
        .then_with(|| b.1.cmp(&a.1))
        .then_with(|| a.2.cmp(&b.2))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Similarity of `query` to class `class` within `store`.
pub fn class_similarity<V: VectorSet + ?Sized>(
    class: ClassId,
    query: &Embedding,
    store: &V,
) -> Result<f64> {
    if store.is_empty() {
        return Ok(0.0);
    }
    check_dim(store.dim(), query.dim())?;
    let mut best: Option<f64> = None;
    for i in 0..store.len() {
        if store.class_at(i) == class {
            let s = dot(store.vector_at(i), query.as_slice());
            best = Some(match best {
                Some(b) if b >= s => b,
                _ => s,
            });
        }
    }
    Ok(best.unwrap_or(0.0))
}

/// Adds `(embedding, class)` to the user's store.
pub fn register(store: &mut UserStore, embedding: &Embedding, class: ClassId) -> Result<()> {
    store.push(embedding, class)
}

/// Ranking engine with reusable scratch buffers and a dot-product counter.
///
/// A `Scorer` holds no model state; one instance per thread is enough.
#[derive(Debug, Default)]
pub struct Scorer {
    query: Vec<f64>,
    user_best: Vec<f64>,
    candidates: Vec<(f64, bool, ClassId)>,
    dot_products: u64,
}

impl Scorer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of vector-vector similarities computed so far.
    pub fn dot_products(&self) -> u64 {
        self.dot_products
    }

    pub fn reset_counter(&mut self) {
        self.dot_products = 0;
    }

    fn validate(&self, query: &Embedding, user: &UserStore, common: &PrototypeSet) -> Result<()> {
        check_dim(user.dim(), query.dim())?;
        if !common.is_empty() {
            check_dim(common.dim(), query.dim())?;
        }
        Ok(())
    }

    /// Fills `user_best[c]` with the best user similarity of every `c ∈ C_u`.
    fn score_user(&mut self, user: &UserStore) {
        if let Some(max) = user.classes().iter().map(|c| c.index()).max() {
            if self.user_best.len() <= max {
                self.user_best.resize(max + 1, f64::NEG_INFINITY);
            }
        }
        for c in user.classes() {
            self.user_best[c.index()] = f64::NEG_INFINITY;
        }
        for (class, v) in user.entries() {
            let s = dot_wide(&self.query, v);
            let slot = &mut self.user_best[class.index()];
            if s > *slot {
                *slot = s;
            }
        }
        self.dot_products += user.len() as u64;
    }

    fn user_sim(&self, user: &UserStore, class: ClassId) -> f64 {
        if user.contains(class) {
            self.user_best[class.index()]
        } else {
            0.0
        }
    }

    fn finish(&mut self) -> Ranking {
        self.candidates.sort_by(|a, b| tie_order(*a, *b));
        Ranking {
            entries: self
                .candidates
                .drain(..)
                .map(|(score, _, class)| RankEntry { class, score })
                .collect(),
        }
    }

    /// Personalized ranking: `max(s_user, w * s_common)` over `C_u ∪ C_m`.
    pub fn spc_rank(
        &mut self,
        query: &Embedding,
        user: &UserStore,
        common: &PrototypeSet,
        cfg: &SpcConfig,
    ) -> Result<Ranking> {
        self.validate(query, user, common)?;
        if user.is_empty() && common.is_empty() {
            return Err(Error::NoCandidates);
        }
        widen_into(query.as_slice(), &mut self.query);
        self.score_user(user);
        let w = cfg.w;
        self.candidates.clear();
        for (class, v) in common.entries() {
            let weighted = w * dot_wide(&self.query, v);
            let personal = user.contains(class);
            let su = self.user_sim(user, class);
            let score = if su >= weighted { su } else { weighted };
            self.candidates.push((score, personal, class));
        }
        self.dot_products += common.len() as u64;
        for &class in user.classes() {
            if !common.contains(class) {
                let su = self.user_best[class.index()];
                let weighted = w * 0.0;
                let score = if su >= weighted { su } else { weighted };
                self.candidates.push((score, true, class));
            }
        }
        Ok(self.finish())
    }

    /// Linear-combination ranking: `(1 - w_s) * s_user + w_s * s_common`.
    ///
    /// A side whose weight is exactly zero contributes no candidates, so the
    /// `w_s = 0` endpoint ranks `C_u` alone and `w_s = 1` ranks `C_m` alone.
    pub fn spc_sum_rank(
        &mut self,
        query: &Embedding,
        user: &UserStore,
        common: &PrototypeSet,
        cfg: &SumConfig,
    ) -> Result<Ranking> {
        self.validate(query, user, common)?;
        let ws = cfg.ws;
        let use_user = ws < 1.0;
        let use_common = ws > 0.0;
        let has_user = use_user && !user.is_empty();
        let has_common = use_common && !common.is_empty();
        if !has_user && !has_common {
            return Err(Error::NoCandidates);
        }
        widen_into(query.as_slice(), &mut self.query);
        self.candidates.clear();
        if has_user {
            self.score_user(user);
        }
        if use_common {
            for (class, v) in common.entries() {
                let sm = dot_wide(&self.query, v);
                let su = if use_user {
                    self.user_sim(user, class)
                } else {
                    0.0
                };
                let score = (1.0 - ws) * su + ws * sm;
                self.candidates.push((score, user.contains(class), class));
            }
            self.dot_products += common.len() as u64;
        }
        if use_user {
            for &class in user.classes() {
                if !use_common || !common.contains(class) {
                    let su = self.user_best[class.index()];
                    let score = (1.0 - ws) * su + ws * 0.0;
                    self.candidates.push((score, true, class));
                }
            }
        }
        Ok(self.finish())
    }

    /// Nearest-class-mean ranking over a prototype collection.
    pub fn ncm_rank<V: VectorSet + ?Sized>(
        &mut self,
        query: &Embedding,
        means: &V,
    ) -> Result<Ranking> {
        if means.is_empty() {
            return Err(Error::NoCandidates);
        }
        check_dim(means.dim(), query.dim())?;
        widen_into(query.as_slice(), &mut self.query);
        self.candidates.clear();
        for i in 0..means.len() {
            self.candidates.push((
                dot_wide(&self.query, means.vector_at(i)),
                false,
                means.class_at(i),
            ));
        }
        self.dot_products += means.len() as u64;
        Ok(self.finish())
    }
}

pub fn spc_rank(
    query: &Embedding,
    user: &UserStore,
    common: &PrototypeSet,
    cfg: &SpcConfig,
) -> Result<Ranking> {
    Scorer::new().spc_rank(query, user, common, cfg)
}

pub fn spc_sum_rank(
    query: &Embedding,
    user: &UserStore,
    common: &PrototypeSet,
    cfg: &SumConfig,
) -> Result<Ranking> {
    Scorer::new().spc_sum_rank(query, user, common, cfg)
}

pub fn ncm_rank(query: &Embedding, common: &PrototypeSet) -> Result<Ranking> {
    Scorer::new().ncm_rank(query, common)
}

/// How the incremental class-mean baseline seeds its counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeanMode {
    /// Each initial class starts with its true training sample count.
    FullHistory,
    /// Each initial prototype counts as a single sample.
    MeanAsOne,
}

/// Running class means for the incremental NCM baselines.
///
/// The accumulator is kept raw; the exposed prototype is
/// `normalize(accumulator / count)`, refreshed on every update.
#[derive(Debug, Clone)]
pub struct MeanState {
    dim: usize,
    classes: Vec<ClassId>,
    sums: Vec<f64>,
    counts: Vec<u64>,
    exposed: Vec<f32>,
    slot: HashMap<ClassId, usize>,
}

impl MeanState {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            classes: Vec::new(),
            sums: Vec::new(),
            counts: Vec::new(),
            exposed: Vec::new(),
            slot: HashMap::new(),
        }
    }

    /// Seeds one tracked class per prototype.
    ///
    /// In [`MeanMode::FullHistory`] the accumulator is `prototype * count`,
    /// so the prototype is weighted as `count` samples.
    pub fn seed(common: &PrototypeSet, mode: MeanMode) -> Result<Self> {
        let mut state = Self::new(common.dim());
        for (class, v) in common.entries() {
            let count = match mode {
                MeanMode::MeanAsOne => 1,
                MeanMode::FullHistory => match common.count(class) {
                    Some(n) if n >= 1 => n,
                    _ => {
                        return Err(Error::invalid(format!(
                            "prototype {class} has no training count; full-history means need one"
                        )))
                    }
                },
            };
            state.slot.insert(class, state.classes.len());
            state.classes.push(class);
            state
                .sums
                .extend(v.iter().map(|&x| f64::from(x) * count as f64));
            state.counts.push(count);
            state.exposed.extend_from_slice(v);
        }
        Ok(state)
    }

    pub fn count(&self, class: ClassId) -> Option<u64> {
        self.slot.get(&class).map(|&i| self.counts[i])
    }

    pub fn prototype(&self, class: ClassId) -> Option<&[f32]> {
        self.slot.get(&class).map(|&i| self.vector_at(i))
    }

    /// Adds one sample; a novel class starts at count 1 with the sample as mean.
    pub fn update(&mut self, embedding: &Embedding, class: ClassId) -> Result<()> {
        check_dim(self.dim, embedding.dim())?;
        let d = self.dim;
        let i = match self.slot.get(&class) {
            Some(&i) => {
                for (acc, &x) in self.sums[i * d..(i + 1) * d]
                    .iter_mut()
                    .zip(embedding.as_slice())
                {
                    *acc += f64::from(x);
                }
                self.counts[i] += 1;
                i
            }
            None => {
                let i = self.classes.len();
                self.slot.insert(class, i);
                self.classes.push(class);
                self.sums
                    .extend(embedding.as_slice().iter().map(|&x| f64::from(x)));
                self.counts.push(1);
                self.exposed.extend_from_slice(embedding.as_slice());
                return Ok(());
            }
        };
        let n = self.counts[i] as f64;
        let mean: Vec<f64> = self.sums[i * d..(i + 1) * d]
            .iter()
            .map(|s| s / n)
            .collect();
        let unit = Embedding::normalize(&mean).map_err(|_| Error::ZeroMean(class.to_string()))?;
        self.exposed[i * d..(i + 1) * d].copy_from_slice(unit.as_slice());
        Ok(())
    }
}

impl VectorSet for MeanState {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.classes.len()
    }

    fn class_at(&self, i: usize) -> ClassId {
        self.classes[i]
    }

    fn vector_at(&self, i: usize) -> &[f32] {
        &self.exposed[i * self.dim..(i + 1) * self.dim]
    }
}

/// Free-standing form of [`MeanState::update`].
pub fn ncm_update(state: &mut MeanState, embedding: &Embedding, class: ClassId) -> Result<()> {
    state.update(embedding, class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::normalize;
    use proptest::prelude::*;

    const A: ClassId = ClassId(0);
    const B: ClassId = ClassId(1);

    fn e(v: &[f64]) -> Embedding {
        normalize(v).unwrap()
    }

    /// Query `q` with `dot(q, user) = su` and `dot(q, common) = sm`, all in 3-d.
    fn pair_with_sims(su: f64, sm: f64) -> (Embedding, Embedding, Embedding) {
        let q = e(&[1.0, 0.0, 0.0]);
        let u = e(&[su, (1.0 - su * su).sqrt(), 0.0]);
        let m = e(&[sm, 0.0, (1.0 - sm * sm).sqrt()]);
        (q, u, m)
    }

    fn setup(su: f64, sm: f64) -> (Embedding, UserStore, PrototypeSet) {
        let (q, u, m) = pair_with_sims(su, sm);
        let mut store = UserStore::new(3);
        store.push(&u, A).unwrap();
        let mut common = PrototypeSet::new(3);
        common.insert(B, m, 1).unwrap();
        (q, store, common)
    }

    #[test]
    fn class_similarity_examples() {
        let mut store = UserStore::new(2);
        let q = e(&[1.0, 0.0]);
        assert_eq!(class_similarity(A, &q, &store).unwrap(), 0.0);
        store.push(&e(&[0.6, 0.8]), A).unwrap();
        store.push(&e(&[0.0, 1.0]), A).unwrap();
        assert!((class_similarity(A, &q, &store).unwrap() - 0.6).abs() < 1e-7);
        assert_eq!(class_similarity(B, &q, &store).unwrap(), 0.0);
        let v = e(&[0.0, 1.0]);
        assert!((class_similarity(A, &v, &store).unwrap() - 1.0).abs() < 1e-7);
        assert!(matches!(
            class_similarity(A, &e(&[1.0, 0.0, 0.0]), &store),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn weighting_prefers_user_vector() {
        let (q, store, common) = setup(0.9, 0.99);
        let r = spc_rank(&q, &store, &common, &SpcConfig::new(0.85).unwrap()).unwrap();
        assert_eq!(r.top1(), Some(A));
        assert!((r.entries()[0].score - 0.9).abs() < 1e-6);
        assert!((r.entries()[1].score - 0.99 * 0.85).abs() < 1e-6);
        let r = spc_rank(&q, &store, &common, &SpcConfig::new(1.0).unwrap()).unwrap();
        assert_eq!(r.top1(), Some(B));
    }

    #[test]
    fn sum_rank_example() {
        let (q, store, common) = setup(0.9, 0.99);
        let r = spc_sum_rank(&q, &store, &common, &SumConfig::new(0.5).unwrap()).unwrap();
        assert_eq!(r.top1(), Some(B));
        assert!((r.entries()[0].score - 0.495).abs() < 1e-6);
        assert!((r.entries()[1].score - 0.45).abs() < 1e-6);
    }

    #[test]
    fn sum_rank_endpoints_drop_zero_weight_side() {
        let (q, store, common) = setup(0.9, 0.99);
        let r = spc_sum_rank(&q, &store, &common, &SumConfig::new(0.0).unwrap()).unwrap();
        assert_eq!(r.classes().collect::<Vec<_>>(), vec![A]);
        let r = spc_sum_rank(&q, &store, &common, &SumConfig::new(1.0).unwrap()).unwrap();
        assert_eq!(r.classes().collect::<Vec<_>>(), vec![B]);
        let empty = UserStore::new(3);
        assert!(matches!(
            spc_sum_rank(&q, &empty, &common, &SumConfig::new(0.0).unwrap()),
            Err(Error::NoCandidates)
        ));
    }

    #[test]
    fn config_bounds() {
        assert!(SpcConfig::new(0.0).is_err());
        assert!(SpcConfig::new(1.01).is_err());
        assert!(SpcConfig::new(f64::NAN).is_err());
        assert!(SpcConfig::new(1.0).is_ok());
        assert!(SumConfig::new(-0.1).is_err());
        assert!(SumConfig::new(0.0).is_ok());
        assert!(SumConfig::new(1.0).is_ok());
    }

    #[test]
    fn empty_candidates_is_an_error() {
        let q = e(&[1.0, 0.0]);
        let r = spc_rank(
            &q,
            &UserStore::new(2),
            &PrototypeSet::new(2),
            &SpcConfig::new(0.85).unwrap(),
        );
        assert!(matches!(r, Err(Error::NoCandidates)));
        assert!(matches!(
            ncm_rank(&q, &PrototypeSet::new(2)),
            Err(Error::NoCandidates)
        ));
    }

    #[test]
    fn ncm_examples() {
        let mut common = PrototypeSet::new(2);
        common.insert(A, e(&[1.0, 0.0]), 1).unwrap();
        common.insert(B, e(&[0.0, 1.0]), 1).unwrap();
        let r = ncm_rank(&e(&[0.6, 0.8]), &common).unwrap();
        assert_eq!(r.classes().collect::<Vec<_>>(), vec![B, A]);
        assert!((r.entries()[0].score - 0.8).abs() < 1e-7);

        let r = ncm_rank(&e(&[1.0, 0.0]), &common).unwrap();
        assert_eq!(r.top1(), Some(A));
        assert_eq!(r.entries()[0].score, 1.0);

        let mut ortho = PrototypeSet::new(3);
        ortho.insert(B, e(&[1.0, 0.0, 0.0]), 1).unwrap();
        ortho.insert(A, e(&[0.0, 1.0, 0.0]), 1).unwrap();
        let r = ncm_rank(&e(&[0.0, 0.0, 1.0]), &ortho).unwrap();
        assert_eq!(r.classes().collect::<Vec<_>>(), vec![A, B]);
    }

    #[test]
    fn registration_examples() {
        let mut store = UserStore::new(2);
        let v = e(&[0.3, 0.7]);
        register(&mut store, &v, A).unwrap();
        assert_eq!(store.len(), 1);
        assert_eq!(store.classes(), &[A]);
        register(&mut store, &v, A).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.classes(), &[A]);
    }

    #[test]
    fn tie_prefers_user_class() {
        // The user vector equals the prototype of B exactly; at w = 1 both score 1.
        let v = e(&[0.0, 1.0]);
        let mut store = UserStore::new(2);
        store.push(&v, A).unwrap();
        let mut common = PrototypeSet::new(2);
        common.insert(B, v.clone(), 1).unwrap();
        let r = spc_rank(&v, &store, &common, &SpcConfig::new(1.0).unwrap()).unwrap();
        assert_eq!(r.entries()[0].score, r.entries()[1].score);
        assert_eq!(r.top1(), Some(A));
    }

    #[test]
    fn dot_product_count_is_store_plus_prototypes() {
        let (q, mut store, common) = setup(0.5, 0.5);
        let mut scorer = Scorer::new();
        scorer
            .spc_rank(&q, &store, &common, &SpcConfig::new(0.85).unwrap())
            .unwrap();
        assert_eq!(scorer.dot_products(), 2);
        store.push(&q, B).unwrap();
        scorer.reset_counter();
        scorer
            .spc_rank(&q, &store, &common, &SpcConfig::new(0.85).unwrap())
            .unwrap();
        assert_eq!(scorer.dot_products(), 3);
    }

    #[test]
    fn mean_update_examples() {
        let mut common = PrototypeSet::new(2);
        common.insert(A, e(&[1.0, 0.0]), 800).unwrap();
        let mut state = MeanState::seed(&common, MeanMode::MeanAsOne).unwrap();
        ncm_update(&mut state, &e(&[1.0, 0.0]), A).unwrap();
        assert_eq!(state.prototype(A).unwrap(), &[1.0, 0.0]);
        ncm_update(&mut state, &e(&[0.0, 1.0]), A).unwrap();
        // Sum (2, 1) over 3 samples.
        let p = state.prototype(A).unwrap();
        let expected = normalize(&[2.0, 1.0]).unwrap();
        assert!((p[0] - expected.as_slice()[0]).abs() < 1e-7);

        let mut fresh = MeanState::seed(&common, MeanMode::MeanAsOne).unwrap();
        fresh.update(&e(&[0.0, 1.0]), A).unwrap();
        let p = fresh.prototype(A).unwrap();
        assert!((f64::from(p[0]) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        assert!((f64::from(p[1]) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        assert_eq!(fresh.count(A), Some(2));

        fresh.update(&e(&[0.0, 1.0]), B).unwrap();
        assert_eq!(fresh.count(B), Some(1));
        assert_eq!(fresh.prototype(B).unwrap(), &[0.0, 1.0]);
        assert!(fresh.update(&e(&[1.0, 0.0, 0.0]), A).is_err());
    }

    #[test]
    fn full_history_needs_counts() {
        let mut common = PrototypeSet::new(2);
        common.insert(A, e(&[1.0, 0.0]), 0).unwrap();
        assert!(MeanState::seed(&common, MeanMode::FullHistory).is_err());
        assert!(MeanState::seed(&common, MeanMode::MeanAsOne).is_ok());
    }

    fn angle(a: &[f32], b: &[f32]) -> f64 {
        dot(a, b).clamp(-1.0, 1.0).acos()
    }

    fn unit(d: usize) -> impl Strategy<Value = Embedding> {
        prop::collection::vec(-1.0f64..1.0, d)
            .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
            .prop_map(|v| normalize(&v).unwrap())
    }

    fn nonneg_unit(d: usize) -> impl Strategy<Value = Embedding> {
        prop::collection::vec(0.0f64..1.0, d)
            .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
            .prop_map(|v| normalize(&v).unwrap())
    }

    #[test]
    fn empty_user_store_clamps_negative_common_scores() {
        // An absent user class scores 0, so max(0, w * s) hides negative prototype similarities.
        let mut common = PrototypeSet::new(2);
        common.insert(A, e(&[0.0, -1.0]), 1).unwrap();
        common.insert(B, e(&[-0.7, -0.7]), 1).unwrap();
        let q = e(&[0.0, 1.0]);
        let r = spc_rank(
            &q,
            &UserStore::new(2),
            &common,
            &SpcConfig::new(0.5).unwrap(),
        )
        .unwrap();
        assert!(r.entries().iter().all(|x| x.score == 0.0));
        assert_eq!(ncm_rank(&q, &common).unwrap().top1(), Some(B));
    }

    proptest! {
        #[test]
        fn mean_as_one_moves_farther_than_full_history(
            (old, new) in (2usize..16).prop_flat_map(|d| (unit(d), unit(d)))
        ) {
            prop_assume!(angle(old.as_slice(), new.as_slice()) > 1e-3);
            prop_assume!(angle(old.as_slice(), new.as_slice()) < std::f64::consts::PI - 1e-3);
            let mut common = PrototypeSet::new(old.dim());
            common.insert(A, old.clone(), 800).unwrap();
            let mut full = MeanState::seed(&common, MeanMode::FullHistory).unwrap();
            let mut one = MeanState::seed(&common, MeanMode::MeanAsOne).unwrap();
            full.update(&new, A).unwrap();
            one.update(&new, A).unwrap();
            let moved_full = angle(old.as_slice(), full.prototype(A).unwrap());
            let moved_one = angle(old.as_slice(), one.prototype(A).unwrap());
            prop_assert!(moved_one > moved_full);
        }

        #[test]
        fn self_retrieval_after_register(
            (vs, w) in (2usize..12).prop_flat_map(|d| (
                prop::collection::vec((unit(d), 0u32..5), 1..20),
                0.05f64..=1.0,
            ))
        ) {
            let d = vs[0].0.dim();
            let mut common = PrototypeSet::new(d);
            for (i, (v, _)) in vs.iter().enumerate().take(3) {
                common.insert(ClassId(10 + i as u32), v.clone(), 1).unwrap();
            }
            let mut store = UserStore::new(d);
            let cfg = SpcConfig::new(w).unwrap();
            for (v, c) in &vs {
                register(&mut store, v, ClassId(*c)).unwrap();
                let r = spc_rank(v, &store, &common, &cfg).unwrap();
                let top = r.top1().unwrap();
                // Another user class may hold an identical vector; it must score the same.
                prop_assert!(store.contains(top));
                prop_assert!((r.entries()[0].score - 1.0).abs() < 1e-6);
                if vs.iter().filter(|(u, _)| u == v).count() == 1 {
                    prop_assert_eq!(top, ClassId(*c));
                }
            }
        }

        #[test]
        fn empty_user_store_matches_ncm_order(
            (protos, q, w) in (2usize..12).prop_flat_map(|d| (
                prop::collection::vec(nonneg_unit(d), 1..20),
                nonneg_unit(d),
                0.05f64..=1.0,
            ))
        ) {
            let d = q.dim();
            let mut common = PrototypeSet::new(d);
            for (i, p) in protos.iter().enumerate() {
                common.insert(ClassId(i as u32), p.clone(), 1).unwrap();
            }
            let spc = spc_rank(&q, &UserStore::new(d), &common, &SpcConfig::new(w).unwrap()).unwrap();
            let ncm = ncm_rank(&q, &common).unwrap();
            // Scaling by w can merge two nearly equal scores into a tie; only
            // compare when every gap survives the scaling.
            let distinct = ncm.entries().windows(2).all(|p| w * p[0].score > w * p[1].score);
            prop_assume!(distinct);
            prop_assert_eq!(spc.classes().collect::<Vec<_>>(), ncm.classes().collect::<Vec<_>>());
        }

        #[test]
        fn adding_a_vector_only_changes_its_own_class(
            (protos, users, extra, q, w) in (2usize..10).prop_flat_map(|d| (
                prop::collection::vec(unit(d), 1..8),
                prop::collection::vec((unit(d), 0u32..8), 0..10),
                (unit(d), 0u32..12),
                unit(d),
                0.05f64..=1.0,
            ))
        ) {
            let d = q.dim();
            let mut common = PrototypeSet::new(d);
            for (i, p) in protos.iter().enumerate() {
                common.insert(ClassId(i as u32), p.clone(), 1).unwrap();
            }
            let mut store = UserStore::new(d);
            for (v, c) in &users {
                store.push(v, ClassId(*c)).unwrap();
            }
            let cfg = SpcConfig::new(w).unwrap();
            let before = spc_rank(&q, &store, &common, &cfg).unwrap();
            store.push(&extra.0, ClassId(extra.1)).unwrap();
            let after = spc_rank(&q, &store, &common, &cfg).unwrap();
            for entry in before.entries() {
                let now = after.entries().iter().find(|x| x.class == entry.class).unwrap();
                if entry.class == ClassId(extra.1) {
                    prop_assert!(now.score >= entry.score || !before_has_user(&users, entry.class));
                } else {
                    prop_assert_eq!(now.score, entry.score);
                }
            }
        }
    }

    fn before_has_user(users: &[(Embedding, u32)], class: ClassId) -> bool {
        users.iter().any(|(_, c)| ClassId(*c) == class)
    }
}
