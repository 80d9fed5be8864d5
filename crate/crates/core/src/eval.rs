//! Prequential replay of per-user streams and the report shapes built on top
//! of it.
//!
//! Each record is ranked first and learned afterwards: the store used for
//! record `t` holds exactly records `1..t`. The true class always enters the
//! store, modelling the user correcting a wrong prediction.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::engine::{MeanMode, MeanState, Ranking, Scorer, SpcConfig, SumConfig};
use crate::error::{Error, Result};
use crate::model::{ClassId, LabeledRecord, PrototypeSet, UserStore, VectorSet};
use crate::seed::rng_for;

/// Ranking strategy replayed over a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Personalized max-combination with weight `w`.
    Spc(SpcConfig),
    /// Linear combination with balance `w_s`.
    SpcSum(SumConfig),
    /// Fixed prototypes, no learning.
    NcmFixed,
    /// Class means updated with every record.
    NcmIncr(MeanMode),
    /// Nearest neighbor over prototypes and user vectors alike (`w = 1`).
    OneNn,
    /// Nearest neighbor over user vectors only.
    OneNnStar,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Spc(cfg) => write!(f, "SPC (w = {})", cfg.w()),
            Strategy::SpcSum(cfg) => write!(f, "SPC_sum (w_s = {})", cfg.ws()),
            Strategy::NcmFixed => f.write_str("NCM (fixed)"),
            Strategy::NcmIncr(MeanMode::FullHistory) => f.write_str("NCM (full history)"),
            Strategy::NcmIncr(MeanMode::MeanAsOne) => f.write_str("NCM (mean as one)"),
            Strategy::OneNn => f.write_str("1-NN"),
            Strategy::OneNnStar => f.write_str("1-NN*"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub strategy: Strategy,
    topk: Vec<usize>,
    /// When false, nothing is ever registered and every record is ranked
    /// against the initial state.
    pub learn: bool,
}

impl EvalConfig {
    pub fn new(strategy: Strategy, topk: &[usize]) -> Result<Self> {
        if topk.is_empty() || topk.contains(&0) {
            return Err(Error::invalid("top-k list must be non-empty and positive"));
        }
        let mut topk = topk.to_vec();
        topk.sort_unstable();
        topk.dedup();
        Ok(Self {
            strategy,
            topk,
            learn: true,
        })
    }

    pub fn without_learning(mut self) -> Self {
        self.learn = false;
        self
    }

    pub fn topk(&self) -> &[usize] {
        &self.topk
    }
}

/// Result of ranking one record.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub t: u32,
    pub true_class: ClassId,
    /// `hits[i]` is a hit within the top `topk[i]`.
    pub hits: Vec<bool>,
    /// The true class has a common prototype.
    pub in_initial: bool,
    /// The true class is a common class or was seen earlier in the stream.
    pub in_union: bool,
    pub predicted: Option<ClassId>,
    /// Similarities computed to rank this record.
    pub dot_products: u64,
}

/// One user's records, in `t` order.
#[derive(Debug, Clone, PartialEq)]
pub struct UserStream {
    pub user: String,
    pub records: Vec<LabeledRecord>,
}

/// Groups records by user (sorted by user id) and orders each stream by `t`.
///
/// Every stream must be contiguous from `t = 1`.
pub fn group_streams(records: Vec<LabeledRecord>) -> Result<Vec<UserStream>> {
    let mut by_user: BTreeMap<String, Vec<LabeledRecord>> = BTreeMap::new();
    for r in records {
        by_user.entry(r.user.clone()).or_default().push(r);
    }
    by_user
        .into_iter()
        .map(|(user, mut records)| {
            records.sort_by_key(|r| r.t);
            check_contiguous(&user, &records)?;
            Ok(UserStream { user, records })
        })
        .collect()
}

fn check_contiguous(user: &str, records: &[LabeledRecord]) -> Result<()> {
    for (i, r) in records.iter().enumerate() {
        let expected = i as u32 + 1;
        if r.t != expected {
            return Err(Error::NonContiguous {
                user: user.to_owned(),
                expected,
                found: r.t,
            });
        }
        if r.user != user {
            return Err(Error::invalid(format!(
                "record for user {:?} in stream of user {user:?}",
                r.user
            )));
        }
    }
    Ok(())
}

enum Learner {
    Store(UserStore),
    Means(MeanState),
    Nothing,
}

/// Replays one user's stream: rank, log, then register the true class.
pub fn run_user_stream(
    stream: &[LabeledRecord],
    common: &PrototypeSet,
    cfg: &EvalConfig,
) -> Result<Vec<Outcome>> {
    let Some(first) = stream.first() else {
        return Ok(Vec::new());
    };
    check_contiguous(&first.user, stream)?;
    let dim = first.embedding.dim();
    if !common.is_empty() && common.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: common.dim(),
            got: dim,
        });
    }

    let no_prototypes = PrototypeSet::new(dim);
    let one_nn = SpcConfig::new(1.0)?;
    let mut learner = match cfg.strategy {
        Strategy::NcmFixed => Learner::Nothing,
        Strategy::NcmIncr(mode) => Learner::Means(MeanState::seed(common, mode)?),
        _ => Learner::Store(UserStore::new(dim)),
    };
    let mut scorer = Scorer::new();
    let mut seen: HashSet<ClassId> = HashSet::new();
    let mut outcomes = Vec::with_capacity(stream.len());

    for record in stream {
        let query = &record.embedding;
        if query.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: query.dim(),
            });
        }
        scorer.reset_counter();
        let ranked = match (&cfg.strategy, &learner) {
            (Strategy::Spc(spc), Learner::Store(store)) => {
                scorer.spc_rank(query, store, common, spc)
            }
            (Strategy::OneNn, Learner::Store(store)) => {
                scorer.spc_rank(query, store, common, &one_nn)
            }
            (Strategy::OneNnStar, Learner::Store(store)) => {
                scorer.spc_rank(query, store, &no_prototypes, &one_nn)
            }
            (Strategy::SpcSum(sum), Learner::Store(store)) => {
                scorer.spc_sum_rank(query, store, common, sum)
            }
            (Strategy::NcmFixed, _) => scorer.ncm_rank(query, common),
            (Strategy::NcmIncr(_), Learner::Means(means)) => scorer.ncm_rank(query, means),
            _ => unreachable!("learner matches strategy"),
        };
        let ranking = match ranked {
            Ok(r) => r,
            Err(Error::NoCandidates) => Ranking::default(),
            Err(e) => return Err(e),
        };

        let position = ranking.position(record.class);
        let in_initial = common.contains(record.class);
        outcomes.push(Outcome {
            t: record.t,
            true_class: record.class,
            hits: cfg
                .topk
                .iter()
                .map(|&k| position.is_some_and(|p| p < k))
                .collect(),
            in_initial,
            in_union: in_initial || seen.contains(&record.class),
            predicted: ranking.top1(),
            dot_products: scorer.dot_products(),
        });

        seen.insert(record.class);
        if cfg.learn {
            match &mut learner {
                Learner::Store(store) => store.push(query, record.class)?,
                Learner::Means(means) => means.update(query, record.class)?,
                Learner::Nothing => {}
            }
        }
    }
    Ok(outcomes)
}

/// Per-record outcomes of every user, in user order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeLog {
    topk: Vec<usize>,
    users: Vec<(String, Vec<Outcome>)>,
}

impl OutcomeLog {
    pub fn new(topk: Vec<usize>, users: Vec<(String, Vec<Outcome>)>) -> Self {
        Self { topk, users }
    }

    pub fn topk(&self) -> &[usize] {
        &self.topk
    }

    pub fn users(&self) -> &[(String, Vec<Outcome>)] {
        &self.users
    }

    pub fn max_len(&self) -> usize {
        self.users.iter().map(|(_, o)| o.len()).max().unwrap_or(0)
    }

    pub fn is_ragged(&self) -> bool {
        let mut lens = self.users.iter().map(|(_, o)| o.len());
        match lens.next() {
            Some(first) => lens.any(|l| l != first),
            None => false,
        }
    }

    fn k_index(&self, k: usize) -> Result<usize> {
        self.topk
            .iter()
            .position(|&x| x == k)
            .ok_or_else(|| Error::invalid(format!("top-{k} was not recorded")))
    }

    /// Restricts the log to the given users (by position).
    pub fn subset(&self, users: &[usize]) -> OutcomeLog {
        OutcomeLog {
            topk: self.topk.clone(),
            users: users.iter().map(|&i| self.users[i].clone()).collect(),
        }
    }

    fn at(&self, t: usize) -> impl Iterator<Item = &Outcome> {
        self.users.iter().filter_map(move |(_, o)| o.get(t - 1))
    }

    /// Mean over `t` of [`mean_accuracy`], across the whole stream length.
    pub fn overall_accuracy(&self, k: usize) -> Result<f64> {
        let len = self.max_len();
        if len == 0 {
            return Err(Error::invalid("no outcomes"));
        }
        let mut sum = 0.0;
        for t in 1..=len {
            sum += mean_accuracy(self, t, k)?;
        }
        Ok(sum / len as f64)
    }
}

/// Replays every stream (users in parallel) and collects the outcomes.
pub fn run_streams(
    streams: &[UserStream],
    common: &PrototypeSet,
    cfg: &EvalConfig,
) -> Result<OutcomeLog> {
    let users = streams
        .par_iter()
        .map(|s| Ok((s.user.clone(), run_user_stream(&s.records, common, cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OutcomeLog::new(cfg.topk.clone(), users))
}

/// Fraction of users whose record at `t` (1-based) was a top-`k` hit.
///
/// Only users whose stream reaches `t` are counted.
pub fn mean_accuracy(log: &OutcomeLog, t: usize, k: usize) -> Result<f64> {
    let ki = log.k_index(k)?;
    let (hits, n) = log.at(t.max(1)).fold((0usize, 0usize), |(h, n), o| {
        (h + usize::from(o.hits[ki]), n + 1)
    });
    if t == 0 || n == 0 {
        return Err(Error::invalid(format!("no user has a record at t = {t}")));
    }
    Ok(hits as f64 / n as f64)
}

/// Aggregates over one window of consecutive `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub start: u32,
    pub end: u32,
    /// Narrower than the configured width (last bucket of an uneven split).
    pub partial: bool,
    /// Mean over `t` of the per-`t` mean accuracy, one per `k`.
    pub accuracy: Vec<f64>,
    /// Mean over `t` of the rate of records whose class has a prototype.
    pub upper_initial: f64,
    /// Mean over `t` of the rate of records whose class is a common class or
    /// was seen earlier.
    pub upper_union: f64,
    /// Pooled accuracy over records of common classes, one per `k`.
    pub initial_accuracy: Vec<Option<f64>>,
    /// Pooled accuracy over records of other classes, one per `k`.
    pub novel_accuracy: Vec<Option<f64>>,
}

impl Bucket {
    pub fn label(&self) -> String {
        format!("t{}-t{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketReport {
    pub topk: Vec<usize>,
    pub width: usize,
    pub buckets: Vec<Bucket>,
    /// Users have streams of different lengths.
    pub ragged: bool,
}

pub fn bucket_report(log: &OutcomeLog, width: usize) -> Result<BucketReport> {
    if width == 0 {
        return Err(Error::invalid("bucket width must be positive"));
    }
    let len = log.max_len();
    if len == 0 {
        return Err(Error::invalid("cannot report on empty outcomes"));
    }
    let nk = log.topk.len();
    let mut buckets = Vec::new();
    let mut start = 1;
    while start <= len {
        let end = (start + width - 1).min(len);
        let mut accuracy = vec![0.0; nk];
        let mut upper_initial = 0.0;
        let mut upper_union = 0.0;
        let mut init_hits = vec![0usize; nk];
        let mut novel_hits = vec![0usize; nk];
        let (mut init_n, mut novel_n) = (0usize, 0usize);
        for t in start..=end {
            let (mut n, mut ini, mut uni) = (0usize, 0usize, 0usize);
            let mut hits = vec![0usize; nk];
            for o in log.at(t) {
                n += 1;
                ini += usize::from(o.in_initial);
                uni += usize::from(o.in_union);
                for (ki, &h) in o.hits.iter().enumerate() {
                    hits[ki] += usize::from(h);
                    if o.in_initial {
                        init_hits[ki] += usize::from(h);
                    } else {
                        novel_hits[ki] += usize::from(h);
                    }
                }
                if o.in_initial {
                    init_n += 1;
                } else {
                    novel_n += 1;
                }
            }
            let n = n as f64;
            for ki in 0..nk {
                accuracy[ki] += hits[ki] as f64 / n;
            }
            upper_initial += ini as f64 / n;
            upper_union += uni as f64 / n;
        }
        let span = (end - start + 1) as f64;
        let pooled = |hits: &[usize], n: usize| -> Vec<Option<f64>> {
            hits.iter()
                .map(|&h| (n > 0).then(|| h as f64 / n as f64))
                .collect()
        };
        buckets.push(Bucket {
            start: start as u32,
            end: end as u32,
            partial: end - start + 1 < width,
            accuracy: accuracy.into_iter().map(|a| a / span).collect(),
            upper_initial: upper_initial / span,
            upper_union: upper_union / span,
            initial_accuracy: pooled(&init_hits, init_n),
            novel_accuracy: pooled(&novel_hits, novel_n),
        });
        start = end + 1;
    }
    Ok(BucketReport {
        topk: log.topk.clone(),
        width,
        buckets,
        ragged: log.is_ragged(),
    })
}

/// Runs a strategy and reports it in buckets of `width`.
pub fn evaluate(
    streams: &[UserStream],
    common: &PrototypeSet,
    cfg: &EvalConfig,
    width: usize,
) -> Result<BucketReport> {
    bucket_report(&run_streams(streams, common, cfg)?, width)
}

/// One personalized evaluation per `w`, in grid order.
pub fn sweep_w(
    streams: &[UserStream],
    common: &PrototypeSet,
    grid: &[f64],
    topk: &[usize],
    width: usize,
) -> Result<Vec<(f64, BucketReport)>> {
    if grid.is_empty() {
        return Err(Error::invalid("empty w grid"));
    }
    let cfgs = grid
        .iter()
        .map(|&w| EvalConfig::new(Strategy::Spc(SpcConfig::new(w)?), topk))
        .collect::<Result<Vec<_>>>()?;
    grid.iter()
        .zip(&cfgs)
        .map(|(&w, cfg)| Ok((w, evaluate(streams, common, cfg, width)?)))
        .collect()
}

/// One linear-combination evaluation per `w_s`, in grid order.
pub fn sweep_ws(
    streams: &[UserStream],
    common: &PrototypeSet,
    grid: &[f64],
    topk: &[usize],
    width: usize,
) -> Result<Vec<(f64, BucketReport)>> {
    if grid.is_empty() {
        return Err(Error::invalid("empty w_s grid"));
    }
    let cfgs = grid
        .iter()
        .map(|&ws| EvalConfig::new(Strategy::SpcSum(SumConfig::new(ws)?), topk))
        .collect::<Result<Vec<_>>>()?;
    grid.iter()
        .zip(&cfgs)
        .map(|(&ws, cfg)| Ok((ws, evaluate(streams, common, cfg, width)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    /// Indices (into the stream list) of the held-out users.
    pub held_out: Vec<usize>,
    /// Objective on the training users, one per grid value.
    pub train_scores: Vec<f64>,
    /// Objective on the held-out users, one per grid value.
    pub held_out_scores: Vec<f64>,
    /// Grid value maximizing the training objective.
    pub best_w: f64,
    /// Held-out objective at `best_w`.
    pub held_out_at_best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub grid: Vec<f64>,
    pub folds: Vec<FoldResult>,
    /// Held-out objective averaged across folds, one per grid value.
    pub mean_held_out: Vec<f64>,
    pub chosen_w: f64,
}

/// Index of the best score; ties go to the smaller grid value.
pub fn argmax_smallest(grid: &[f64], scores: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..grid.len() {
        if scores[i] > scores[best] || (scores[i] == scores[best] && grid[i] < grid[best]) {
            best = i;
        }
    }
    best
}

/// Chooses `w` by k-fold cross-validation over users.
///
/// Users are split into folds by a seeded shuffle. The objective is the
/// top-`objective_k` accuracy averaged over every `t`. Each fold picks the
/// best `w` on its training users and reports the held-out score; the final
/// choice maximizes the held-out score averaged across folds.
pub fn cross_validate_w(
    streams: &[UserStream],
    common: &PrototypeSet,
    grid: &[f64],
    folds: usize,
    objective_k: usize,
    seed: u64,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::invalid("empty w grid"));
    }
    if folds < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    if streams.len() < folds {
        return Err(Error::invalid(format!(
            "{} users cannot be split into {folds} folds",
            streams.len()
        )));
    }
    let mut order: Vec<usize> = (0..streams.len()).collect();
    order.shuffle(&mut rng_for(seed, "cv-folds"));
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for (i, &u) in order.iter().enumerate() {
        members[i % folds].push(u);
    }
    for m in &mut members {
        m.sort_unstable();
    }

    let logs = grid
        .iter()
        .map(|&w| {
            let cfg = EvalConfig::new(Strategy::Spc(SpcConfig::new(w)?), &[objective_k])?;
            run_streams(streams, common, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut fold_results = Vec::with_capacity(folds);
    for held in &members {
        let train: Vec<usize> = (0..streams.len()).filter(|u| !held.contains(u)).collect();
        let mut train_scores = Vec::with_capacity(grid.len());
        let mut held_out_scores = Vec::with_capacity(grid.len());
        for log in &logs {
            train_scores.push(log.subset(&train).overall_accuracy(objective_k)?);
            held_out_scores.push(log.subset(held).overall_accuracy(objective_k)?);
        }
        let best = argmax_smallest(grid, &train_scores);
        fold_results.push(FoldResult {
            held_out: held.clone(),
            best_w: grid[best],
            held_out_at_best: held_out_scores[best],
            train_scores,
            held_out_scores,
        });
    }
    let mean_held_out: Vec<f64> = (0..grid.len())
        .map(|i| {
            fold_results
                .iter()
                .map(|f| f.held_out_scores[i])
                .sum::<f64>()
                / folds as f64
        })
        .collect();
    let chosen = argmax_smallest(grid, &mean_held_out);
    Ok(CvResult {
        grid: grid.to_vec(),
        folds: fold_results,
        mean_held_out,
        chosen_w: grid[chosen],
    })
}
