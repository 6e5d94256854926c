use gazeq_core::ingest::WordFixation;
use gazeq_core::thesaurus::{levenshtein, session_topics, Thesaurus, ThesaurusEntry, ThesaurusError, TopicParams};
use gazeq_core::PageCategory;
use proptest::prelude::*;
use std::collections::BTreeSet;

/// Textbook full-matrix edit distance.
fn reference_distance(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn word() -> impl Strategy<Value = String> {
    "[abcö]{0,7}"
}

fn entries() -> impl Strategy<Value = Vec<ThesaurusEntry>> {
    prop::collection::btree_set("[abc]{1,5}", 1..6).prop_flat_map(|descs| {
        let descs: Vec<String> = descs.into_iter().collect();
        let n = descs.len();
        (
            Just(descs),
            prop::collection::vec(prop::collection::btree_set("[abc]{1,6}", 0..3), n),
            prop::collection::vec(prop::option::of(0..n), n),
        )
            .prop_map(|(descs, syns, broader)| {
                descs
                    .iter()
                    .enumerate()
                    .map(|(i, d)| ThesaurusEntry {
                        descriptor: d.clone(),
                        synonyms: syns[i].clone(),
                        broader: broader[i].map(|b| descs[b].clone()),
                    })
                    .collect()
            })
    })
}

/// Exhaustive scan of every label with the tie order spelled out.
fn reference_annotate(entries: &[ThesaurusEntry], term: &str, threshold: usize) -> Option<String> {
    entries
        .iter()
        .flat_map(|e| std::iter::once(&e.descriptor).chain(&e.synonyms).map(move |l| (e, l)))
        .map(|(e, l)| (reference_distance(term, l), l.chars().count(), l.clone(), e.descriptor.clone(), e.concept().to_string()))
        .filter(|c| c.0 <= threshold)
        .min()
        .map(|c| c.4)
}

fn wf(stem: &str, dur: u64) -> WordFixation {
    WordFixation {
        stem: stem.into(),
        dur,
        freq: 1,
        time_f: 0,
        time_l: 0,
        time_len: 0,
        viewed_f: PageCategory::Detail,
        viewed_l: PageCategory::Detail,
        serp_before: 0,
        detail_before: 0,
        surfaces: [(stem.to_string(), 1)].into(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(300) })]

    #[test]
    fn levenshtein_matches_reference(a in word(), b in word()) {
        prop_assert_eq!(levenshtein(&a, &b), reference_distance(&a, &b));
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
    }

    #[test]
    fn levenshtein_triangle_inequality(a in word(), b in word(), c in word()) {
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
    }

    #[test]
    fn annotate_matches_exhaustive_scan(es in entries(), term in "[abc]{1,6}", threshold in 0usize..4) {
        let th = Thesaurus::new(es.clone()).unwrap();
        prop_assert_eq!(th.annotate(&term, threshold).map(str::to_string), reference_annotate(&es, &term, threshold));
    }

    #[test]
    fn raising_threshold_never_loses_annotations(es in entries(), terms in prop::collection::vec("[abc]{1,6}", 1..10)) {
        let th = Thesaurus::new(es).unwrap();
        for t in 0..4 {
            let lo = terms.iter().filter(|w| th.annotate(w, t).is_some()).count();
            let hi = terms.iter().filter(|w| th.annotate(w, t + 1).is_some()).count();
            prop_assert!(lo <= hi);
        }
    }

    #[test]
    fn topics_are_a_prefix_of_the_ranking(
        es in entries(),
        terms in prop::collection::btree_map("[abc]{1,6}", 0u64..1000, 1..12),
        k in 1usize..6,
    ) {
        let th = Thesaurus::new(es).unwrap();
        let wfs: Vec<WordFixation> = terms.iter().map(|(s, &d)| wf(s, d)).collect();
        let params = TopicParams { k, ..Default::default() };
        match session_topics(&wfs, &th, &params) {
            Ok(p) => {
                prop_assert!(p.topic_set.len() <= k);
                prop_assert_eq!(&p.topic_set[..], &p.ranked.iter().take(k).map(|(c, _)| c.clone()).collect::<Vec<_>>()[..]);
                prop_assert!(p.ranked.windows(2).all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0)));
                let members: BTreeSet<&str> = p.topic_stems();
                for s in members {
                    prop_assert!(terms[s] > params.min_dur_ms);
                }
                let total: u64 = p.ranked.iter().map(|(_, d)| d).sum();
                let annotated: u64 = wfs
                    .iter()
                    .filter(|w| w.dur > params.min_dur_ms && th.annotate(&w.stem, params.lev_threshold).is_some())
                    .map(|w| w.dur)
                    .sum();
                prop_assert_eq!(total, annotated);
            }
            Err(ThesaurusError::NoAnnotatableTerms) => {
                prop_assert!(wfs.iter().all(|w| w.dur <= params.min_dur_ms || th.annotate(&w.stem, params.lev_threshold).is_none()));
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}

#[test]
fn entry_without_broader_resolves_to_itself() {
    let th = Thesaurus::parse_tsv("education\t\tschooling|teaching\nlearning\teducation\t\n").unwrap();
    assert_eq!(th.annotate("education", 0), Some("education"));
    assert_eq!(th.annotate("teachin", 1), Some("education"));
    assert_eq!(th.annotate("learning", 0), Some("education"));
    assert_eq!(th.annotate("zzzzzzzzz", 3), None);
}

#[test]
fn invalid_thesaurus_is_rejected() {
    assert!(matches!(Thesaurus::parse_tsv("a\tmissing\t\n"), Err(ThesaurusError::UnknownBroader { .. })));
    assert!(matches!(Thesaurus::parse_tsv("a\t\t\na\t\t\n"), Err(ThesaurusError::DuplicateDescriptor(_))));
    let th = Thesaurus::parse_tsv("a\t\t\n").unwrap();
    let params = TopicParams { k: 0, ..Default::default() };
    assert!(matches!(session_topics(&[wf("a", 500)], &th, &params), Err(ThesaurusError::InvalidK)));
}
