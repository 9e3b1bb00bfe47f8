use std::collections::BTreeSet;

use iplc_core::context::{box_contexts, ContextError};
use iplc_core::{Context, ContextSet, DimensionName, Tag, TagDomain};
use proptest::prelude::*;

const DIMS: &[&str] = &["a", "b", "c", "d"];

fn dim(s: &str) -> DimensionName {
    DimensionName::new(s).unwrap()
}

fn tag() -> impl Strategy<Value = Tag> {
    prop_oneof![
        (-3i64..4).prop_map(Tag::Int),
        prop::sample::select(vec!["x", "y", "a b", "q\"t"]).prop_map(Tag::from),
        any::<bool>().prop_map(Tag::Bool),
        prop::sample::select(vec![0.5, -1.25, 1e-7, 3.0]).prop_map(Tag::Float),
    ]
}

fn context() -> impl Strategy<Value = Context> {
    prop::collection::btree_map(prop::sample::select(DIMS.to_vec()), tag(), 0..=DIMS.len())
        .prop_map(|m| Context::from_pairs(m.into_iter().map(|(d, t)| (dim(d), t))))
}

fn int_context() -> impl Strategy<Value = Context> {
    prop::collection::btree_map(prop::sample::select(DIMS[..3].to_vec()), 0i64..3, 0..=3)
        .prop_map(|m| Context::from_pairs(m.into_iter().map(|(d, t)| (dim(d), Tag::Int(t)))))
}

fn context_set() -> impl Strategy<Value = ContextSet> {
    prop::collection::vec(int_context(), 0..6).prop_map(|v| v.into_iter().collect())
}

/// Cross product built by extending partial contexts one dimension at a
/// time, filtered afterwards.
fn brute_force_box(domains: &[(DimensionName, Vec<Tag>)], keep: impl Fn(&Context) -> bool) -> ContextSet {
    let mut partial = vec![Context::new()];
    for (d, values) in domains {
        partial = partial
            .into_iter()
            .flat_map(|c| values.iter().map(move |t| c.clone().with(d.clone(), t.clone())))
            .collect();
    }
    partial.into_iter().filter(|c| keep(c)).collect()
}

fn box_instance() -> impl Strategy<Value = (Vec<(DimensionName, Vec<Tag>)>, Vec<i64>, i64)> {
    let domain = prop::collection::btree_set(-2i64..6, 1..=4);
    (prop::collection::vec(domain, 1..=3), prop::collection::vec(-2i64..3, 3), -4i64..8).prop_map(
        |(doms, coeffs, bound)| {
            let doms = doms
                .into_iter()
                .enumerate()
                .map(|(i, values)| (dim(DIMS[i]), values.into_iter().map(Tag::Int).collect()))
                .collect();
            (doms, coeffs, bound)
        },
    )
}

fn linear(c: &Context, coeffs: &[i64]) -> i64 {
    c.iter().zip(coeffs).map(|((_, t), k)| t.as_int().unwrap() * k).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn override_is_associative(a in context(), b in context(), c in context()) {
        prop_assert_eq!(a.override_with(&b).override_with(&c), a.override_with(&b.override_with(&c)));
    }

    #[test]
    fn empty_context_is_override_identity(c in context()) {
        prop_assert_eq!(c.override_with(&Context::new()), c.clone());
        prop_assert_eq!(Context::new().override_with(&c), c);
    }

    #[test]
    fn override_is_right_biased(a in context(), b in context()) {
        let r = a.override_with(&b);
        for d in DIMS {
            let expected = b.get(d).or_else(|| a.get(d));
            prop_assert_eq!(r.get(d), expected);
        }
    }

    #[test]
    fn dot_agrees_with_lookup(c in context()) {
        for d in c.dims() {
            prop_assert_eq!(c.dot(d).unwrap(), c.lookup(d).unwrap().clone());
        }
        prop_assert!(matches!(c.dot(&dim("zz")), Err(ContextError::UnboundDimension(_))));
    }

    #[test]
    fn project_keeps_only_requested_dims(c in context(), keep in prop::sample::subsequence(DIMS.to_vec(), 0..=4)) {
        let dims: Vec<DimensionName> = keep.iter().map(|d| dim(d)).collect();
        let p = c.project(&dims);
        for d in DIMS {
            let expected = if keep.contains(d) { c.get(d) } else { None };
            prop_assert_eq!(p.get(d), expected);
        }
        prop_assert_eq!(p.override_with(&c.hide(&dims)), c);
    }

    #[test]
    fn merge_is_union_when_compatible(a in int_context(), b in int_context()) {
        let agree = a.iter().all(|(d, t)| b.lookup(d).map_or(true, |u| u == t));
        match a.merge(&b) {
            Ok(m) => {
                prop_assert!(agree);
                prop_assert_eq!(m, a.override_with(&b));
            }
            Err(e) => {
                prop_assert!(!agree);
                let is_conflict = matches!(e, ContextError::ConflictingTags { .. });
                prop_assert!(is_conflict);
            }
        }
    }

    #[test]
    fn context_text_round_trips(c in context()) {
        prop_assert_eq!(c.to_string().parse::<Context>().unwrap(), c);
    }

    #[test]
    fn context_set_text_round_trips(s in context_set()) {
        prop_assert_eq!(s.to_string().parse::<ContextSet>().unwrap(), s);
    }

    #[test]
    fn set_operator_laws(a in context_set(), b in context_set()) {
        prop_assert_eq!(a.union(&b), b.union(&a));
        prop_assert_eq!(a.intersect(&b), b.intersect(&a));
        prop_assert_eq!(a.union(&a), a.clone());
        prop_assert_eq!(a.intersect(&a), a.clone());
        prop_assert!(a.difference(&a).is_empty());
        let sa: BTreeSet<String> = a.iter().map(|c| c.to_string()).collect();
        let sb: BTreeSet<String> = b.iter().map(|c| c.to_string()).collect();
        let union: BTreeSet<String> = a.union(&b).iter().map(|c| c.to_string()).collect();
        let inter: BTreeSet<String> = a.intersect(&b).iter().map(|c| c.to_string()).collect();
        let diff: BTreeSet<String> = a.difference(&b).iter().map(|c| c.to_string()).collect();
        prop_assert_eq!(union, &sa | &sb);
        prop_assert_eq!(inter, &sa & &sb);
        prop_assert_eq!(diff, &sa - &sb);
    }

    #[test]
    fn box_matches_brute_force((doms, coeffs, bound) in box_instance()) {
        let domains: Vec<TagDomain> =
            doms.iter().map(|(d, v)| TagDomain::new(d.clone(), v.clone()).unwrap()).collect();
        let pred = |c: &Context| linear(c, &coeffs) <= bound;
        let got = box_contexts::<ContextError, _>(&domains, |c| Ok(pred(c))).unwrap();
        prop_assert_eq!(&got, &brute_force_box(&doms, pred));

        let all = box_contexts::<ContextError, _>(&domains, |_| Ok(true)).unwrap();
        let product: usize = doms.iter().map(|(_, v)| v.len()).product();
        prop_assert_eq!(all.len(), product);
        prop_assert!(got.is_subset(&all));
        for c in got.iter() {
            prop_assert!(pred(c));
            prop_assert_eq!(c.len(), doms.len());
        }
    }
}

#[test]
fn box_errors_propagate() {
    let domains = [TagDomain::range(dim("a"), 0, 3).unwrap()];
    let r = box_contexts::<Wrapped, _>(&domains, |c| {
        if c.get("a") == Some(&Tag::Int(2)) {
            Err(Wrapped("boom".into()))
        } else {
            Ok(true)
        }
    });
    assert_eq!(r, Err(Wrapped("boom".into())));
}

impl From<ContextError> for Wrapped {
    fn from(e: ContextError) -> Self {
        Wrapped(e.to_string())
    }
}

#[derive(Debug, PartialEq)]
struct Wrapped(String);

#[test]
fn box_of_always_false_is_empty() {
    let domains = [TagDomain::new(dim("d"), vec![Tag::Int(1), Tag::Int(2), Tag::Int(3)]).unwrap()];
    assert!(box_contexts::<Wrapped, _>(&domains, |_| Ok(false)).unwrap().is_empty());
}
