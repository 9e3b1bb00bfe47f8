use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use iplc_core::corpus::{CorpusProgram, CORPUS};
use iplc_core::gee::{
    demand_key_of, eval_eductive, eval_naive, DemandKey, Eductive, Naive, ProcedureRegistry, Rule, TraceEvent,
    Warehouse, ROOT_SUBJECT,
};
use iplc_core::lang::EntryKind;
use iplc_core::{compile, Context, ContextSet, EvalError, Geer, Tag, Value};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ctx(s: &str) -> Context {
    s.parse().unwrap()
}

fn naive(src: &str, at: &str) -> Result<Value, EvalError> {
    eval_naive(&compile(src).unwrap(), &ctx(at), &ProcedureRegistry::standard())
}

fn eductive(src: &str, at: &str) -> Result<Value, EvalError> {
    let g = compile(src).unwrap();
    eval_eductive(&g, ROOT_SUBJECT, &ctx(at), &Warehouse::new(), &ProcedureRegistry::standard()).map(|(v, _)| v)
}

fn random_point(p: &CorpusProgram, rng: &mut ChaCha8Rng) -> Context {
    let mut c = Context::new();
    for (d, range) in p.ranges {
        c = c.with(d.parse().unwrap(), range.tags().choose(rng).unwrap().clone());
    }
    c
}

const NATURALS: &str = "N where dimension t; N = 0 fby.t (N + 1); end";

#[test]
fn one_dimensional_rainfall() {
    let src = "raining where dimension day; raining = <false,false,true,true,true,false,false,false,true> day; end";
    assert_eq!(naive(src, "[day:3]"), Ok(Value::Bool(true)));
    assert_eq!(eductive(src, "[day:3]"), Ok(Value::Bool(true)));
}

#[test]
fn spec_examples() {
    assert_eq!(naive("#t where dimension t; end", "[]"), Ok(Value::Int(0)));
    assert_eq!(naive("N @ t 5 where dimension t; N = 0 fby.t (N + 1); end", "[]"), Ok(Value::Int(5)));
    assert_eq!(eductive("N @ t 5 where dimension t; N = 0 fby.t (N + 1); end", "[]"), Ok(Value::Int(5)));
    let set = "X @ {[d:1],[d:2]} where dimension d; X = #d * 10; end";
    let expected = Value::ValueSet([Value::Int(10), Value::Int(20)].into_iter().collect());
    assert_eq!(naive(set, "[]"), Ok(expected.clone()));
    assert_eq!(eductive(set, "[]"), Ok(expected));
}

#[test]
fn error_kinds() {
    let name = |r: Result<Value, EvalError>| r.unwrap_err().name().to_string();
    assert_eq!(name(naive("if 1 then 2 else 3", "[]")), "NotABoolean");
    assert_eq!(name(naive("#(3)", "[]")), "NonDimensionAt");
    assert_eq!(name(naive("X @ (3) 4 where X = 1 + 1; end", "[]")), "NonDimensionAt");
    assert_eq!(name(naive("<1> t + 1 where dimension t; end", "[t:1]")), "EodArith");
    assert_eq!(name(naive("1 + true", "[]")), "TypeError");
    assert_eq!(name(naive("#t where dimension t; end", "[s:1]")), "UnboundDimension");
    assert_eq!(name(naive("f(1) where f(a, b) = a; end", "[]")), "ArityMismatch");
    assert_eq!(name(naive("merge([x: 1], [x: 2]) where dimension x; end", "[]")), "ConflictingTags");
    assert_eq!(name(naive("1 / 0", "[]")), "DivisionByZero");
}

#[test]
fn procedures_are_called_with_evaluated_arguments() {
    assert_eq!(naive("hypot(3, 4) where procedure hypot/2; end", "[]"), Ok(Value::Float(5.0)));
    assert_eq!(eductive("hypot(1 + 2, 4) where procedure hypot/2; end", "[]"), Ok(Value::Float(5.0)));
    let err = naive("hypot(3) where procedure hypot/2; end", "[]").unwrap_err();
    assert!(matches!(err, EvalError::ArityMismatch { .. }), "{err}");
    let err = naive("nope(3) where procedure nope/1; end", "[]").unwrap_err();
    assert_eq!(err, EvalError::UnknownProcedure("nope".into()));
}

#[test]
fn eductive_agrees_with_naive_on_corpus() {
    let reg = ProcedureRegistry::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(0xed0c);
    for p in CORPUS {
        let g = compile(p.source).unwrap();
        let wh = Warehouse::new();
        for _ in 0..50 {
            let point = random_point(p, &mut rng);
            let oracle = eval_naive(&g, &point, &reg);
            let (v, _) = eval_eductive(&g, ROOT_SUBJECT, &point, &wh, &reg)
                .unwrap_or_else(|e| panic!("{} at {point}: {e}", p.name));
            assert_eq!(Ok(v), oracle, "{} at {point}", p.name);
        }
        assert_eq!(wh.stats().recomputations, 0, "{}", p.name);
    }
}

#[test]
fn corpus_exercises_every_rule() {
    let reg = ProcedureRegistry::standard();
    let mut used = BTreeSet::new();
    for p in CORPUS {
        let g = compile(p.source).unwrap();
        let n = Naive::new(&g, &reg);
        for point in p.points() {
            n.run(&point).unwrap();
        }
        used.extend(n.coverage());
    }
    let missing: Vec<&str> = Rule::all().filter(|r| !used.contains(r)).map(Rule::name).collect();
    assert!(missing.is_empty(), "rules never used: {missing:?}");
    assert_eq!(Rule::GIPL.len(), 15);
    assert_eq!(Rule::LUCX.len(), 11);
}

fn fib(n: u32) -> i64 {
    let (mut a, mut b) = (0i64, 1i64);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

#[test]
fn fibonacci_is_memoized() {
    let g = compile(iplc_core::corpus::find("fib").unwrap().source).unwrap();
    let reg = ProcedureRegistry::new();
    let wh = Warehouse::new();
    let (v, trace) = eval_eductive(&g, ROOT_SUBJECT, &ctx("[t:20]"), &wh, &reg).unwrap();
    assert_eq!(v, Value::Int(fib(20)));
    assert_eq!(fib(20), 6765);
    let issued = trace.count(TraceEvent::Issued);
    assert!(issued <= 3 * 20 + 10, "{issued} demands issued");
    assert_eq!(wh.stats().recomputations, 0);

    let before = wh.stats();
    let (again, trace) = eval_eductive(&g, ROOT_SUBJECT, &ctx("[t:20]"), &wh, &reg).unwrap();
    assert_eq!(again, v);
    assert_eq!(trace.count(TraceEvent::Issued), 1);
    assert_eq!(trace.count(TraceEvent::Hit), 1);
    assert_eq!(trace.count(TraceEvent::Computed), 0);
    assert_eq!(wh.stats().misses, before.misses);
}

#[test]
fn self_dependency_is_a_cyclic_demand() {
    let src = "X where dimension t; X = X + 1; end";
    for at in ["[]", "[t:3]"] {
        assert!(matches!(eductive(src, at), Err(EvalError::CyclicDemand(_))));
    }
    assert!(matches!(naive(src, "[]"), Err(EvalError::DepthExceeded(_))));
    let wh = Warehouse::new();
    let g = compile(src).unwrap();
    let _ = eval_eductive(&g, ROOT_SUBJECT, &Context::new(), &wh, &ProcedureRegistry::new());
    assert!(wh.is_empty());
}

#[test]
fn demand_keys_drop_off_rank_dimensions() {
    let g = compile("N + C where dimension t, s; N = 0 fby.t (N + 1); C = #s * 0 + 4; K = 3; end").unwrap();
    let k = demand_key_of(&g, "N", &ctx("[s:9,t:3]")).unwrap();
    assert_eq!(k.context, ctx("[t:3]"));
    assert_eq!(demand_key_of(&g, "K", &ctx("[t:3]")).unwrap().context, Context::new());
    assert!(matches!(demand_key_of(&g, "Q", &ctx("[t:3]")), Err(EvalError::UnresolvedIdentifier(_))));
    let text = k.to_string();
    assert_eq!(text.parse::<DemandKey>().unwrap(), k);
    assert!(text.starts_with(g.program_id()));
}

#[test]
fn off_rank_dimensions_do_not_change_values() {
    let reg = ProcedureRegistry::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in CORPUS {
        let g = compile(p.source).unwrap();
        let vars: Vec<(&String, _)> = g.entries().iter().filter(|(_, e)| e.kind == EntryKind::Var).collect();
        for _ in 0..10 {
            let point = iplc_core::gee::ops::initial_point(&g, &random_point(p, &mut rng)).unwrap();
            for (name, entry) in &vars {
                let ast = entry.ast.as_ref().unwrap();
                let base = Naive::new(&g, &reg).eval_at(ast, &point);
                for d in g.dimensions() {
                    if entry.rank.contains(&d) {
                        continue;
                    }
                    let moved = point.clone().with(d.clone(), Tag::Int(7));
                    assert_eq!(Naive::new(&g, &reg).eval_at(ast, &moved), base, "{}::{name} along {d}", p.name);
                }
            }
        }
    }
}

#[test]
fn tuple_streams_index_from_zero_and_end_in_eod() {
    let g = compile("<10, 20, 30> d where dimension d; end").unwrap();
    let reg = ProcedureRegistry::new();
    for i in 0..6i64 {
        let v = eval_naive(&g, &Context::new().with("d".parse().unwrap(), i), &reg).unwrap();
        let expected = if i < 3 { Value::Int(10 * (i + 1)) } else { Value::Eod };
        assert_eq!(v, expected);
    }
}

#[test]
fn hash_is_the_point_restricted_to_declared_dimensions() {
    let v = naive("# where dimension a, b; end", "[b:4]").unwrap();
    assert_eq!(v, Value::Ctx(ctx("[a:0,b:4]")));
    let v = naive("(# @ [a: 2]) where dimension a; end", "[]").unwrap();
    assert_eq!(v, Value::Ctx(ctx("[a:2]")));
}

#[test]
fn select_reads_the_stream_at_the_given_context() {
    assert_eq!(naive("select([t: 4], N) where dimension t; N = 0 fby.t (N + 1); end", "[t:1]"), Ok(Value::Int(4)));
}

#[test]
fn context_set_results_collapse_duplicates() {
    let src = "X @ Box[d in 0..5 | true] where dimension d; X = #d % 2; end";
    let v = naive(src, "[]").unwrap();
    let Value::ValueSet(vs) = v else { panic!("{v}") };
    assert_eq!(vs.len(), 2);
    let set: ContextSet = "{[d:0],[d:1],[d:2],[d:3],[d:4],[d:5]}".parse().unwrap();
    assert!(vs.len() <= set.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tag_query_after_context_switch(v in -1000i64..1000, d in prop::sample::select(vec!["t", "s", "day"])) {
        let src = format!("#{d} @ {d} ({v}) where dimension {d}; end");
        prop_assert_eq!(naive(&src, "[]"), Ok(Value::Int(v)));
        prop_assert_eq!(eductive(&src, "[]"), Ok(Value::Int(v)));
    }

    #[test]
    fn tuple_law(elems in prop::collection::vec(-50i64..50, 1..6), i in 0i64..8) {
        let list: Vec<String> = elems.iter().map(|e| e.to_string()).collect();
        let src = format!("(<{}> d) @ d {i} where dimension d; end", list.join(", "));
        let expected = elems.get(i as usize).map_or(Value::Eod, |e| Value::Int(*e));
        prop_assert_eq!(naive(&src, "[]"), Ok(expected.clone()));
        prop_assert_eq!(eductive(&src, "[]"), Ok(expected));
    }

    #[test]
    fn naturals_at_any_tag(t in 0i64..200) {
        let src = format!("N @ t {t} where dimension t; N = 0 fby.t (N + 1); end");
        prop_assert_eq!(eductive(&src, "[]"), Ok(Value::Int(t)));
    }
}

#[test]
fn naturals_root_demand() {
    assert_eq!(eductive(NATURALS, "[t:5]"), Ok(Value::Int(5)));
}

#[test]
fn concurrent_engines_compute_each_key_once() {
    let g = Arc::new(compile(iplc_core::corpus::find("fib").unwrap().source).unwrap());
    let wh = Arc::new(Warehouse::new());
    let handles: Vec<_> = (0..8u32)
        .map(|i| {
            let (g, wh) = (g.clone(), wh.clone());
            std::thread::Builder::new()
                .stack_size(64 << 20)
                .spawn(move || {
                    let reg = ProcedureRegistry::new();
                    let t = 12 + i;
                    let e = Eductive::new(&g, &wh, &reg);
                    let at = Context::new().with("t".parse().unwrap(), t as i64);
                    (t, e.demand(ROOT_SUBJECT, &at).unwrap())
                })
                .unwrap()
        })
        .collect();
    for h in handles {
        let (t, v) = h.join().unwrap();
        assert_eq!(v, Value::Int(fib(t)));
    }
    assert_eq!(wh.stats().recomputations, 0);
}

fn check_trace(g: &Geer, at: &str) {
    let wh = Warehouse::new();
    let (_, trace) = eval_eductive(g, ROOT_SUBJECT, &ctx(at), &wh, &ProcedureRegistry::standard()).unwrap();
    let mut issued: BTreeMap<String, usize> = BTreeMap::new();
    let mut computed = BTreeSet::new();
    let mut last = 0;
    for r in trace.records() {
        assert!(r.ns >= last);
        last = r.ns;
        let key = r.key.to_string();
        match r.event {
            TraceEvent::Issued => *issued.entry(key).or_default() += 1,
            TraceEvent::Hit => assert!(issued.contains_key(&key)),
            TraceEvent::Computed => {
                assert!(issued.contains_key(&key), "{key} computed before being issued");
                assert!(computed.insert(key), "computed twice");
            }
        }
    }
    for line in trace.to_text().lines() {
        let parts: Vec<&str> = line.split(' ').collect();
        assert!(matches!(parts[0], "issued" | "hit" | "computed"));
        assert!(parts.last().unwrap().parse::<u64>().is_ok());
    }
}

#[test]
fn traces_are_well_formed() {
    for p in CORPUS {
        let g = compile(p.source).unwrap();
        let point = p.points().pop().unwrap();
        check_trace(&g, &point.to_string());
    }
}
