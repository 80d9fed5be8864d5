//! Stream replay checked against a from-scratch re-ranking at every step.

use proptest::prelude::*;
use spc_core::{
    bucket_report, dot, normalize, run_streams, run_user_stream, ClassId, Embedding, EvalConfig,
    LabeledRecord, PrototypeSet, SpcConfig, Strategy as Method, SumConfig, UserStream, VectorSet,
};

#[derive(Debug, Clone)]
struct Case {
    protos: Vec<(ClassId, Embedding)>,
    stream: Vec<LabeledRecord>,
}

fn vector(dim: usize, signed: bool) -> impl Strategy<Value = Embedding> {
    let lo = if signed { -1.0 } else { 0.0 };
    prop::collection::vec(lo..1.0f64, dim)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| normalize(&v).unwrap())
}

/// Streams drawn from a small vector pool so that exact score ties are common.
fn case() -> impl Strategy<Value = Case> {
    (2usize..7, any::<bool>()).prop_flat_map(|(dim, signed)| {
        (
            prop::collection::vec(vector(dim, signed), 1..6),
            prop::collection::btree_set(0u32..8, 0..6),
            prop::collection::vec((0usize..6, 0u32..10), 0..30),
        )
            .prop_map(|(pool, proto_classes, picks)| {
                let protos = proto_classes
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| (ClassId(c), pool[i % pool.len()].clone()))
                    .collect();
                let stream = picks
                    .into_iter()
                    .enumerate()
                    .map(|(t, (v, c))| LabeledRecord {
                        user: "u".into(),
                        t: t as u32 + 1,
                        class: ClassId(c),
                        embedding: pool[v % pool.len()].clone(),
                    })
                    .collect();
                Case { protos, stream }
            })
    })
}

fn prototype_set(case: &Case, dim: usize) -> PrototypeSet {
    let mut set = PrototypeSet::new(dim);
    for (c, v) in &case.protos {
        set.insert(*c, v.clone(), 1).unwrap();
    }
    set
}

enum Rule {
    Max(f64),
    Sum(f64),
    Common,
}

/// Literal scoring over the classes each side contributes, full sort, shared tie rule.
fn oracle_top(
    query: &Embedding,
    history: &[(ClassId, Embedding)],
    protos: &[(ClassId, Embedding)],
    rule: &Rule,
) -> Vec<ClassId> {
    let (user_side, common_side) = match rule {
        Rule::Max(_) => (true, true),
        Rule::Sum(ws) => (*ws < 1.0, *ws > 0.0),
        Rule::Common => (false, true),
    };
    let mut classes: Vec<ClassId> = Vec::new();
    if user_side {
        classes.extend(history.iter().map(|(c, _)| *c));
    }
    if common_side {
        classes.extend(protos.iter().map(|(c, _)| *c));
    }
    classes.sort();
    classes.dedup();
    let q = query.as_slice();
    let mut scored: Vec<(f64, bool, ClassId)> = classes
        .into_iter()
        .map(|c| {
            let own: Vec<f64> = history
                .iter()
                .filter(|(h, _)| *h == c)
                .map(|(_, v)| dot(v.as_slice(), q))
                .collect();
            let su = own
                .iter()
                .copied()
                .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
            let sm = protos
                .iter()
                .find(|(p, _)| *p == c)
                .map(|(_, v)| dot(v.as_slice(), q))
                .unwrap_or(0.0);
            let personal = su.is_some() && !matches!(rule, Rule::Common);
            let su = su.unwrap_or(0.0);
            let score = match rule {
                Rule::Max(w) => su.max(w * sm),
                Rule::Sum(ws) => (1.0 - ws) * su + ws * sm,
                Rule::Common => sm,
            };
            (score, personal, c)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(b.1.cmp(&a.1))
            .then(a.2.cmp(&b.2))
    });
    scored.into_iter().map(|(_, _, c)| c).collect()
}

fn check(
    case: &Case,
    strategy: Method,
    rule: Rule,
    with_protos: bool,
) -> Result<(), TestCaseError> {
    let Some(first) = case.stream.first() else {
        return Ok(());
    };
    let dim = first.embedding.dim();
    let common = prototype_set(case, dim);
    let cfg = EvalConfig::new(strategy, &[1, 3]).unwrap();
    let outcomes = run_user_stream(&case.stream, &common, &cfg).unwrap();
    let protos: &[(ClassId, Embedding)] = if with_protos { &case.protos } else { &[] };
    let learns = !matches!(rule, Rule::Common);
    let mut history: Vec<(ClassId, Embedding)> = Vec::new();
    for (i, (record, outcome)) in case.stream.iter().zip(&outcomes).enumerate() {
        let ranking = oracle_top(&record.embedding, &history, protos, &rule);
        let pos = ranking.iter().position(|c| *c == record.class);
        prop_assert_eq!(outcome.predicted, ranking.first().copied(), "t = {}", i + 1);
        prop_assert_eq!(
            &outcome.hits,
            &vec![pos.is_some_and(|p| p < 1), pos.is_some_and(|p| p < 3)]
        );
        let in_initial = case.protos.iter().any(|(c, _)| *c == record.class);
        prop_assert_eq!(outcome.in_initial, in_initial);
        let seen = case.stream[..i].iter().any(|r| r.class == record.class);
        prop_assert_eq!(outcome.in_union, in_initial || seen);
        if learns {
            history.push((record.class, record.embedding.clone()));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn spc_replay_matches_oracle(case in case(), w in 0.05f64..=1.0) {
        check(&case, Method::Spc(SpcConfig::new(w).unwrap()), Rule::Max(w), true)?;
    }

    #[test]
    fn one_nn_replays_match_oracle(case in case()) {
        check(&case, Method::OneNn, Rule::Max(1.0), true)?;
        check(&case, Method::OneNnStar, Rule::Max(1.0), false)?;
    }

    #[test]
    fn sum_replay_matches_oracle(case in case(), ws in prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0]) {
        check(&case, Method::SpcSum(SumConfig::new(ws).unwrap()), Rule::Sum(ws), true)?;
    }

    #[test]
    fn fixed_ncm_replay_matches_oracle(case in case()) {
        prop_assume!(!case.protos.is_empty());
        check(&case, Method::NcmFixed, Rule::Common, true)?;
    }

    #[test]
    fn similarity_count_is_prototypes_plus_history(case in case(), w in 0.05f64..=1.0) {
        let Some(first) = case.stream.first() else { return Ok(()) };
        let common = prototype_set(&case, first.embedding.dim());
        let cfg = EvalConfig::new(Method::Spc(SpcConfig::new(w).unwrap()), &[1]).unwrap();
        for o in run_user_stream(&case.stream, &common, &cfg).unwrap() {
            prop_assert_eq!(o.dot_products, common.len() as u64 + u64::from(o.t) - 1);
        }
    }

    #[test]
    fn user_order_does_not_change_reports(cases in prop::collection::vec(case(), 2..5), w in 0.05f64..=1.0) {
        let dim = 4;
        let streams: Vec<UserStream> = cases
            .iter()
            .enumerate()
            .filter(|(_, c)| c.stream.first().is_some_and(|r| r.embedding.dim() == dim))
            .map(|(i, c)| UserStream {
                user: format!("u{i}"),
                records: c.stream.iter().map(|r| LabeledRecord { user: format!("u{i}"), ..r.clone() }).collect(),
            })
            .collect();
        prop_assume!(!streams.is_empty());
        let mut common = PrototypeSet::new(dim);
        for r in streams[0].records.iter().take(3) {
            if !common.contains(r.class) {
                common.insert(r.class, r.embedding.clone(), 1).unwrap();
            }
        }
        let cfg = EvalConfig::new(Method::Spc(SpcConfig::new(w).unwrap()), &[1, 5]).unwrap();
        let forward = bucket_report(&run_streams(&streams, &common, &cfg).unwrap(), 7).unwrap();
        let mut reversed = streams.clone();
        reversed.reverse();
        let backward = bucket_report(&run_streams(&reversed, &common, &cfg).unwrap(), 7).unwrap();
        prop_assert_eq!(forward, backward);
    }
}
