use std::collections::{BTreeMap, BTreeSet};

use iplc_core::corpus::CORPUS;
use iplc_core::gee::{Naive, ProcedureRegistry};
use iplc_core::gipc::{lower, parse, parse_expr, tokenize, Phase, TokenKind};
use iplc_core::lang::geer::{EntryKind, GeerError};
use iplc_core::lang::{free_dims, Decl, Expr, NavOp};
use iplc_core::{compile, compile_surface, Context, Geer, Tag, Value};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn expr(src: &str) -> Expr {
    parse_expr(&tokenize(src).unwrap()).unwrap()
}

fn dims(g: &Geer, name: &str) -> Vec<String> {
    g.entry(name).unwrap().rank.iter().map(|d| d.to_string()).collect()
}

#[test]
fn newton_statement_has_fourteen_tokens() {
    let toks = tokenize("F = (G * m1 * m2) / r * r;").unwrap();
    assert_eq!(toks.len(), 15);
    assert_eq!(toks.last().unwrap().kind, TokenKind::Eof);
}

#[test]
fn where_program_parses_into_declarations() {
    let p = parse(&tokenize("N where dimension t; N = 0 fby.t (N+1); end").unwrap()).unwrap();
    assert_eq!(p.root, Expr::id("N"));
    assert_eq!(p.decls.len(), 2);
    assert!(matches!(&p.decls[0], Decl::Dim { name, domain: None, .. } if name == "t"));
    let Decl::Var { name, expr: body, .. } = &p.decls[1] else { panic!("{:?}", p.decls[1]) };
    assert_eq!(name, "N");
    let expected = Expr::Navigate {
        op: NavOp::Fby,
        dim: "t".into(),
        args: vec![Expr::int(0), Expr::binary("+", Expr::id("N"), Expr::int(1))],
    };
    assert_eq!(body, &expected);
}

#[test]
fn at_forms_are_told_apart_by_operand_shape() {
    assert!(matches!(expr("X @ t 3"), Expr::At3(..)));
    assert!(matches!(expr("X @ [t: 3]"), Expr::AtCtx(..)));
    assert!(matches!(expr("X @ {[t: 3]}"), Expr::AtCtx(..)));
    assert!(matches!(expr("X @ C"), Expr::AtCtx(..)));
}

#[test]
fn analysis_errors_carry_positions() {
    let errs = compile("N where dimension t; N = 1; N = 2; end").unwrap_err();
    assert_eq!(errs[0].phase, Phase::Analyze);
    assert!(errs[0].message.contains("duplicate"), "{}", errs[0]);
    assert_eq!((errs[0].line, errs[0].column), (1, 29));

    let errs = compile("x\nwhere\n  x = q + 1;\nend").unwrap_err();
    assert!(errs[0].message.contains("unresolved identifier `q`"));
    assert_eq!((errs[0].line, errs[0].column), (3, 7));

    let errs = compile("1 +").unwrap_err();
    assert_eq!(errs[0].phase, Phase::Parse);
    let errs = compile("\"open").unwrap_err();
    assert_eq!((errs[0].phase, errs[0].line, errs[0].column), (Phase::Lex, 1, 1));
}

#[test]
fn lowering_examples() {
    assert_eq!(lower(&expr("first.t X")), expr("X @ t 0"));
    assert_eq!(lower(&expr("next.t X")), expr("X @ t (#t + 1)"));
    assert_eq!(lower(&expr("0 fby.t (N + 1)")), expr("if #t <= 0 then 0 else ((N + 1) @ t (#t - 1))"));
    assert_eq!(lower(&Expr::int(42)), Expr::int(42));
}

#[test]
fn lowered_fby_agrees_with_surface_fby() {
    let reg = ProcedureRegistry::new();
    let surface = compile_surface("N where dimension t; N = 0 fby.t (N + 1); end").unwrap();
    let lowered = compile("N where dimension t; N = 0 fby.t (N + 1); end").unwrap();
    for t in 0..=5 {
        let p = Context::new().with("t".parse().unwrap(), t);
        let a = Naive::new(&surface, &reg).run(&p).unwrap();
        let b = Naive::new(&lowered, &reg).run(&p).unwrap();
        assert_eq!(a, Value::Int(t));
        assert_eq!(a, b);
    }
}

#[test]
fn free_dimension_examples() {
    let g = compile("42").unwrap();
    assert!(free_dims(&Expr::int(42), &g).unwrap().is_empty());
    let g = compile("#t where dimension t; end").unwrap();
    assert_eq!(free_dims(g.root(), &g).unwrap().iter().map(|d| d.as_str()).collect::<Vec<_>>(), ["t"]);
    let g = compile("N where dimension t, s; N = 0 fby.t (N + 1); end").unwrap();
    assert_eq!(dims(&g, "N"), ["t"]);
}

#[test]
fn ranks_follow_mutual_recursion() {
    let src = "A where dimension s, t; A = if #s > 0 then B @ s (#s - 1) else 0; B = A + #t; C = 7; end";
    let g = compile(src).unwrap();
    assert_eq!(dims(&g, "A"), ["s", "t"]);
    assert_eq!(dims(&g, "B"), ["s", "t"]);
    assert!(dims(&g, "C").is_empty());
    assert_eq!(g.entry("C").unwrap().kind, EntryKind::Const);
}

#[test]
fn adding_a_tag_query_never_shrinks_free_dims() {
    for p in CORPUS {
        let g = compile(p.source).unwrap();
        let before = free_dims(g.root(), &g).unwrap();
        for d in g.dimensions() {
            let grown = Expr::binary("+", g.root().clone(), Expr::tag_of(d.as_str()));
            let after = free_dims(&grown, &g).unwrap();
            assert!(before.is_subset(&after));
            assert!(after.contains(&d));
        }
    }
}

#[test]
fn corpus_pretty_print_parses_back() {
    for p in CORPUS {
        let surface = parse(&tokenize(p.source).unwrap()).unwrap().into_expr();
        let printed = surface.to_string();
        let reparsed = parse(&tokenize(&printed).unwrap()).unwrap_or_else(|e| panic!("{}: {e}\n{printed}", p.name));
        assert_eq!(reparsed.into_expr(), surface, "{}", p.name);

        let g = compile(p.source).unwrap();
        let root = g.root().to_string();
        assert_eq!(parse_expr(&tokenize(&root).unwrap()).unwrap(), *g.root(), "{}", p.name);
    }
}

#[test]
fn lowering_is_idempotent_on_corpus() {
    for p in CORPUS {
        let surface = parse(&tokenize(p.source).unwrap()).unwrap().into_expr();
        let once = lower(&surface);
        assert_eq!(lower(&once), once, "{}", p.name);
        let g = compile(p.source).unwrap();
        for (name, e) in g.entries() {
            if let Some(ast) = &e.ast {
                assert_eq!(&lower(ast), ast, "{}::{name}", p.name);
            }
        }
    }
}

fn random_point(p: &iplc_core::corpus::CorpusProgram, rng: &mut ChaCha8Rng) -> Context {
    let mut c = Context::new();
    for (d, range) in p.ranges {
        let tags = range.tags();
        c = c.with(d.parse().unwrap(), tags.choose(rng).unwrap().clone());
    }
    c
}

#[test]
fn lowering_preserves_meaning_on_corpus() {
    let reg = ProcedureRegistry::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(0x10_2024);
    for p in CORPUS {
        let surface = compile_surface(p.source).unwrap();
        let lowered = compile(p.source).unwrap();
        for _ in 0..20 {
            let point = random_point(p, &mut rng);
            let a = Naive::new(&surface, &reg).run(&point);
            let b = Naive::new(&lowered, &reg).run(&point);
            assert_eq!(a, b, "{} at {point}", p.name);
            assert!(a.is_ok(), "{} at {point}: {a:?}", p.name);
        }
    }
}

fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a str>) {
    if let Expr::IdRef { name, .. } = e {
        out.push(name);
    }
    for c in e.children() {
        walk(c, out);
    }
}

#[test]
fn every_identifier_in_a_compiled_program_resolves() {
    for p in CORPUS {
        let g = compile(p.source).unwrap();
        g.check_references().unwrap();
        let mut scopes: Vec<(Option<&Vec<String>>, &Expr)> = vec![(None, g.root())];
        for e in g.entries().values() {
            if let Some(ast) = &e.ast {
                scopes.push((Some(&e.params), ast));
            }
        }
        for (params, ast) in scopes {
            let mut ids = Vec::new();
            walk(ast, &mut ids);
            for id in ids {
                let ok = g.entry(id).is_some()
                    || params.is_some_and(|ps| ps.iter().any(|q| q == id))
                    || iplc_core::lang::builtins::is_named(id);
                assert!(ok, "{}: `{id}` does not resolve", p.name);
            }
        }
    }
}

#[test]
fn geer_is_deterministic_and_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut ids = BTreeSet::new();
    for p in CORPUS {
        let a = compile(p.source).unwrap();
        let b = compile(p.source).unwrap();
        assert_eq!(a.serialize(), b.serialize(), "{}", p.name);
        let parsed = Geer::parse(&a.serialize()).unwrap();
        assert_eq!(parsed, a);
        assert_eq!(parsed.program_id(), a.program_id());

        let mut entries: Vec<_> = a.entries().clone().into_iter().collect();
        entries.shuffle(&mut rng);
        let shuffled: BTreeMap<_, _> = entries.into_iter().rev().collect();
        let rebuilt = Geer::new(shuffled, a.root().clone());
        assert_eq!(rebuilt.serialize(), a.serialize());
        assert!(ids.insert(a.program_id().to_string()), "{} collides", p.name);
    }
}

#[test]
fn geer_rejects_damaged_bytes() {
    let g = compile(CORPUS[0].source).unwrap();
    let bytes = g.serialize();
    assert!(matches!(Geer::parse(&bytes[..bytes.len() / 2]), Err(GeerError::MalformedGeer(_))));
    let text = String::from_utf8(bytes).unwrap();
    let edited = text.replacen("true", "false", 1);
    assert!(matches!(Geer::parse(edited.as_bytes()), Err(GeerError::HashMismatch { .. })));
    let bumped = text.replacen("GEER/1", "GEER/9", 1);
    assert!(matches!(Geer::parse(bumped.as_bytes()), Err(GeerError::VersionMismatch(_))));
}

#[test]
fn tuple_dimension_is_declared_automatically() {
    let g = compile("<1, 2> k").unwrap();
    assert!(g.is_dimension("k"));
    let reg = ProcedureRegistry::new();
    let at = |k: i64| Naive::new(&g, &reg).run(&Context::new().with("k".parse().unwrap(), Tag::Int(k))).unwrap();
    assert_eq!((at(0), at(1), at(2)), (Value::Int(1), Value::Int(2), Value::Eod));
}
