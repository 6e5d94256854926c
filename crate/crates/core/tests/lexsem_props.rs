//! Taxonomy measures against a brute-force reference on random DAGs, plus
//! cosine properties.

use gazeq_core::lexsem::{cosine, LexsemError, TaxMeasure, Taxonomy, TaxonomyBuilder, VIRTUAL_ROOT};
use proptest::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone)]
struct Dag {
    ids: Vec<String>,
    counts: Vec<f64>,
    parents: Vec<Vec<usize>>,
}

fn dag() -> impl Strategy<Value = Dag> {
    (1usize..9)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(0u32..4, n),
                prop::collection::vec(prop::collection::vec(any::<prop::sample::Index>(), 0..3), n),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
        .prop_filter_map("zero mass", |(n, counts, picks, perm)| {
            if counts.iter().all(|&c| c == 0) {
                return None;
            }
            let parents = (0..n)
                .map(|i| {
                    let set: BTreeSet<usize> = if i == 0 { BTreeSet::new() } else { picks[i].iter().map(|p| p.index(i)).collect() };
                    set.into_iter().collect()
                })
                .collect();
            // names deliberately out of index order so id tie-breaks matter
            let ids = perm.iter().map(|p| format!("k{p}")).collect();
            Some(Dag {
                ids,
                counts: counts.into_iter().map(f64::from).collect(),
                parents,
            })
        })
}

fn build(d: &Dag) -> Taxonomy {
    let mut b = TaxonomyBuilder::new();
    for (id, &c) in d.ids.iter().zip(&d.counts) {
        b = b.concept(id.clone(), c);
    }
    for (i, ps) in d.parents.iter().enumerate() {
        for &p in ps {
            b = b.edge(d.ids[i].clone(), d.ids[p].clone());
        }
    }
    b.build().unwrap()
}

/// Reference model with an explicit virtual root when needed.
struct Oracle {
    ids: Vec<String>,
    counts: Vec<f64>,
    parents: Vec<Vec<usize>>,
    root: usize,
}

impl Oracle {
    fn new(d: &Dag) -> Self {
        let mut o = Oracle {
            ids: d.ids.clone(),
            counts: d.counts.clone(),
            parents: d.parents.clone(),
            root: 0,
        };
        let tops: Vec<usize> = (0..o.ids.len()).filter(|&i| o.parents[i].is_empty()).collect();
        if tops.len() == 1 {
            o.root = tops[0];
        } else {
            let r = o.ids.len();
            for t in tops {
                o.parents[t].push(r);
            }
            o.ids.push(VIRTUAL_ROOT.into());
            o.counts.push(0.0);
            o.parents.push(vec![]);
            o.root = r;
        }
        o
    }

    /// Shortest upward distance to every ancestor, by breadth-first search.
    fn up(&self, c: usize) -> BTreeMap<usize, u32> {
        let mut dist = BTreeMap::from([(c, 0)]);
        let mut frontier = vec![c];
        while !frontier.is_empty() {
            let mut next = vec![];
            for x in frontier {
                for &p in &self.parents[x] {
                    if !dist.contains_key(&p) {
                        dist.insert(p, dist[&x] + 1);
                        next.push(p);
                    }
                }
            }
            frontier = next;
        }
        dist
    }

    fn cum(&self, c: usize) -> f64 {
        (0..self.ids.len()).filter(|&d| self.up(d).contains_key(&c)).map(|d| self.counts[d]).sum()
    }

    fn ic(&self, c: usize) -> f64 {
        let total = self.cum(self.root);
        let m = self.cum(c);
        if c == self.root {
            0.0
        } else if m == 0.0 {
            (2.0 * total).ln()
        } else {
            (-(m / total).ln()).max(0.0)
        }
    }

    fn depth_nodes(&self) -> u32 {
        fn longest(o: &Oracle, c: usize) -> u32 {
            o.parents[c].iter().map(|&p| longest(o, p) + 1).max().unwrap_or(0)
        }
        (0..self.ids.len()).map(|c| longest(self, c)).max().unwrap() + 1
    }

    fn lcs(&self, a: usize, b: usize) -> usize {
        let (ua, ub) = (self.up(a), self.up(b));
        let mut common: Vec<usize> = ua.keys().filter(|c| ub.contains_key(c)).copied().collect();
        common.sort_by(|&x, &y| self.ic(y).partial_cmp(&self.ic(x)).unwrap().then(self.ids[x].cmp(&self.ids[y])));
        common[0]
    }

    fn path_nodes(&self, a: usize, b: usize) -> u32 {
        let (ua, ub) = (self.up(a), self.up(b));
        ua.iter().filter_map(|(c, da)| ub.get(c).map(|db| da + db)).min().unwrap() + 1
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(200) })]

    #[test]
    fn measures_match_brute_force(d in dag()) {
        let tax = build(&d);
        let o = Oracle::new(&d);
        prop_assert_eq!(tax.len(), o.ids.len());
        prop_assert_eq!(tax.id(tax.root()), o.ids[o.root].as_str());
        prop_assert_eq!(tax.max_depth() + 1, o.depth_nodes());
        for a in 0..o.ids.len() {
            let ca = tax.concept(&o.ids[a]).unwrap();
            prop_assert!(close(tax.cum_count(ca), o.cum(a)));
            prop_assert!(close(tax.ic(ca), o.ic(a)), "ic {}: {} vs {}", o.ids[a], tax.ic(ca), o.ic(a));
            for b in 0..o.ids.len() {
                let cb = tax.concept(&o.ids[b]).unwrap();
                prop_assert_eq!(tax.id(tax.lcs(ca, cb)), o.ids[o.lcs(a, b)].as_str());
                prop_assert_eq!(tax.path_nodes(ca, cb), o.path_nodes(a, b));
                let lch = -(f64::from(o.path_nodes(a, b)) / (2.0 * f64::from(o.depth_nodes()))).ln();
                prop_assert!(close(tax.lch_sim(ca, cb), lch));
                let res = o.ic(o.lcs(a, b));
                prop_assert!(close(tax.res_sim(ca, cb), res));
                let den = o.ic(a) + o.ic(b);
                match tax.lin_sim(ca, cb) {
                    Ok(v) => prop_assert!(den > 0.0 && close(v, 2.0 * res / den)),
                    Err(LexsemError::UndefinedSimilarity) => prop_assert!(den == 0.0),
                    Err(e) => prop_assert!(false, "unexpected {e}"),
                }
            }
        }
    }

    #[test]
    fn measure_invariants(d in dag()) {
        let tax = build(&d);
        let all: Vec<_> = tax.concepts().collect();
        let lch_self = (2.0 * f64::from(tax.max_depth() + 1)).ln();
        for &a in &all {
            prop_assert!(tax.ic(a) >= 0.0);
            prop_assert!(close(tax.lch_sim(a, a), lch_self));
            for &b in &all {
                prop_assert_eq!(tax.lcs(a, b), tax.lcs(b, a));
                prop_assert!(close(tax.lch_sim(a, b), tax.lch_sim(b, a)));
                prop_assert!(tax.lch_sim(a, b) <= lch_self + 1e-12);
                let res = tax.res_sim(a, b);
                prop_assert!(res <= tax.ic(a).min(tax.ic(b)) + 1e-12);
                if let Ok(l) = tax.lin_sim(a, b) {
                    prop_assert!((-1e-12..=1.0 + 1e-12).contains(&l));
                }
            }
        }
    }

    #[test]
    fn word_sims_take_sense_maximum(d in dag(), senses in prop::collection::vec((0usize..2, any::<prop::sample::Index>()), 1..6)) {
        let mut b = TaxonomyBuilder::new();
        for (id, &c) in d.ids.iter().zip(&d.counts) {
            b = b.concept(id.clone(), c);
        }
        for (i, ps) in d.parents.iter().enumerate() {
            for &p in ps {
                b = b.edge(d.ids[i].clone(), d.ids[p].clone());
            }
        }
        for (w, idx) in &senses {
            b = b.lemma(format!("w{w}"), d.ids[idx.index(d.ids.len())].clone());
        }
        let tax = b.build().unwrap();
        let s0 = tax.senses("w0").to_vec();
        let s1 = tax.senses("w1").to_vec();
        let sims = tax.word_sims("w0", "w1");
        if s0.is_empty() || s1.is_empty() {
            prop_assert_eq!(sims.lch, 0.0);
            prop_assert_eq!(tax.word_sim("w0", "w1", TaxMeasure::Res), 0.0);
        } else {
            let pairs: Vec<_> = s0.iter().flat_map(|&a| s1.iter().map(move |&b| (a, b))).collect();
            let max = |f: &dyn Fn(_, _) -> f64| pairs.iter().map(|&(a, b)| f(a, b)).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(close(sims.lch, max(&|a, b| tax.lch_sim(a, b))));
            prop_assert!(close(sims.res, max(&|a, b| tax.res_sim(a, b))));
            prop_assert!(close(sims.lin, max(&|a, b| tax.lin_sim(a, b).unwrap_or(0.0))));
            prop_assert!(close(tax.word_sim("w0", "w1", TaxMeasure::Lin), sims.lin));
        }
    }

    #[test]
    fn cosine_is_bounded_symmetric_and_scale_free(
        v in prop::collection::vec(-10.0f32..10.0, 1..8).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3)),
        w in prop::collection::vec(-10.0f32..10.0, 8),
        scale in 0.1f32..50.0,
    ) {
        let w = &w[..v.len()];
        prop_assume!(w.iter().any(|x| x.abs() > 1e-3));
        let c = cosine(&v, w).unwrap();
        prop_assert!((-1.0..=1.0).contains(&c));
        prop_assert!((c - cosine(w, &v).unwrap()).abs() < 1e-12);
        let scaled: Vec<f32> = v.iter().map(|x| x * scale).collect();
        prop_assert!((c - cosine(&scaled, w).unwrap()).abs() < 1e-5);
        prop_assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn cosine_rejects_degenerate_input() {
    assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(LexsemError::ZeroVector)));
    assert!(matches!(cosine(&[1.0], &[1.0, 0.0]), Err(LexsemError::DimensionMismatch(1, 2))));
}

#[test]
fn zero_mass_is_rejected() {
    let r = TaxonomyBuilder::new().concept("a", 0.0).concept("b", 0.0).edge("b", "a").build();
    assert!(matches!(r, Err(LexsemError::ZeroMass)));
}

#[test]
fn cycles_are_rejected() {
    let r = TaxonomyBuilder::new()
        .concept("r", 1.0)
        .concept("a", 1.0)
        .concept("b", 1.0)
        .edge("a", "r")
        .edge("a", "b")
        .edge("b", "a")
        .build();
    assert!(matches!(r, Err(LexsemError::CycleDetected(_))));
}
