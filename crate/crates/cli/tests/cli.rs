use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::Duration;

use iplc_core::corpus::{find, CORPUS};
use iplc_core::gee::{eval_naive, ProcedureRegistry};
use iplc_core::{compile, Context, Geer};
use iplc_tiers::net::TcpNetwork;
use iplc_tiers::{Address, Client};

fn iplc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iplc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn corpus_file(dir: &Path, name: &str) -> PathBuf {
    let path = dir.join(format!("{name}.ipl"));
    std::fs::write(&path, find(name).unwrap().source).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn compile_writes_a_parseable_geer() {
    let dir = tempfile::tempdir().unwrap();
    let src = corpus_file(dir.path(), "raining");
    let out = iplc(&["compile", s(&src)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let geer = Geer::parse(&std::fs::read(src.with_extension("geer")).unwrap()).unwrap();
    assert_eq!(geer, compile(find("raining").unwrap().source).unwrap());
    assert!(stdout(&out).starts_with(geer.program_id()));
}

#[test]
fn compile_reports_syntax_errors_with_positions() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("bad.ipl");
    std::fs::write(&src, "X where\n  X = 1 + ;\nend").unwrap();
    let out = iplc(&["compile", s(&src)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.ipl:2:11"), "{}", stderr(&out));
    assert!(!src.with_extension("geer").exists());
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.ipl");
    assert_eq!(iplc(&["compile", s(&missing)]).status.code(), Some(1));
    assert_eq!(iplc(&["run", s(&missing)]).status.code(), Some(1));
}

#[test]
fn run_prints_the_root_value() {
    let dir = tempfile::tempdir().unwrap();
    let naturals = corpus_file(dir.path(), "naturals");
    let g = compile(find("naturals").unwrap().source).unwrap();
    let at: Context = "[t:5]".parse().unwrap();
    let oracle = eval_naive(&g, &at, &ProcedureRegistry::standard()).unwrap();
    let out = iplc(&["run", s(&naturals), "--ctx", "[t:5]"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), format!("{oracle}\n"));
    assert_eq!(stdout(&out), "5\n");

    let raining = corpus_file(dir.path(), "raining");
    assert_eq!(stdout(&iplc(&["run", s(&raining), "--ctx", "[day:3]"])), "true\n");
}

#[test]
fn malformed_context_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let src = corpus_file(dir.path(), "naturals");
    let out = iplc(&["run", s(&src), "--ctx", "[t:]"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluation_errors_exit_three_with_their_name() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("div.ipl");
    std::fs::write(&src, "1 / 0").unwrap();
    let out = iplc(&["run", s(&src)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("DivisionByZero"), "{}", stderr(&out));
}

#[test]
fn source_and_compiled_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    for p in CORPUS {
        let src = corpus_file(dir.path(), p.name);
        assert_eq!(iplc(&["compile", s(&src)]).status.code(), Some(0));
        let at = p.points().pop().unwrap().to_string();
        let a = iplc(&["run", s(&src), "--ctx", &at]);
        let b = iplc(&["run", s(&src.with_extension("geer")), "--ctx", &at]);
        assert_eq!(a.status.code(), Some(0), "{}: {}", p.name, stderr(&a));
        assert_eq!(stdout(&a), stdout(&b), "{}", p.name);
    }
}

#[test]
fn trace_file_lists_demands() {
    let dir = tempfile::tempdir().unwrap();
    let src = corpus_file(dir.path(), "fib");
    let out = iplc(&["run", s(&src), "--ctx", "[t:5]", "--trace"]);
    assert_eq!(stdout(&out), "5\n");
    let trace = std::fs::read_to_string(src.with_extension("trace")).unwrap();
    let first = trace.lines().next().unwrap();
    assert!(first.starts_with("issued ") && first.contains(":<root>:[t:5]"), "{first}");
    assert!(trace.lines().any(|l| l.starts_with("computed ")));

    let custom = dir.path().join("custom.txt");
    iplc(&["run", s(&src), "--ctx", "[t:5]", "--trace-out", s(&custom)]);
    assert!(custom.exists());
}

fn repl(input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_iplc"))
        .arg("repl")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn repl_session() {
    let out = repl("dimension t;\n#t\n:ctx [t:4]\n#t\n1 +\nX = #t * 2;\nX\n:quit\n#t\n");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "0\n[t:4]\n4\n8\n");
    assert!(stderr(&out).contains("parse error"), "{}", stderr(&out));
}

#[test]
fn demo_prints_value_and_statistics() {
    let out = iplc(&["demo", "raining", "--topology", "gim:1,dgt:2,dst:2,dwt:2", "--ctx", "[day:3]"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("true"));
    assert!(text.contains("migrated=") && text.contains("stored="), "{text}");
}

#[test]
fn demo_survives_a_worker_crash() {
    let out = iplc(&["demo", "collatz_sum", "--ctx", "[n:59]", "--kill", "dwt@50%"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let g = compile(find("collatz_sum").unwrap().source).unwrap();
    let oracle = eval_naive(&g, &"[n:59]".parse().unwrap(), &ProcedureRegistry::standard()).unwrap();
    assert_eq!(text.lines().next(), Some(oracle.to_string().as_str()));
    assert!(text.contains(": crashed"), "{text}");
    let redispatched: u64 = text
        .split_whitespace()
        .find_map(|w| w.strip_prefix("redispatched="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(redispatched >= 1, "{text}");
}

#[test]
fn demo_rejects_empty_tier_kinds() {
    let out = iplc(&["demo", "raining", "--topology", "gim:1,dgt:0,dst:1,dwt:1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(iplc(&["demo", "raining", "--kill", "dst@50%"]).status.code(), Some(2));
}

struct Served {
    child: Child,
    fields: Vec<String>,
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn serve(args: &[&str]) -> Served {
    let mut child = Command::new(env!("CARGO_BIN_EXE_iplc"))
        .arg("serve")
        .args(args)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    Served { child, fields: line.split_whitespace().map(str::to_string).collect() }
}

#[test]
fn served_tiers_register_and_shut_down() {
    let gim = serve(&["--tier", "gim"]);
    assert_eq!(gim.fields[0], "GIM");
    let gim_addr = Address::from(gim.fields[1].as_str());
    let mut dst = serve(&["--tier", "dst", "--gim", gim_addr.as_str(), "--node", "A"]);
    assert_eq!(dst.fields[0], "DST");

    let client = Client::connect(TcpNetwork::new(5_000), "127.0.0.1:0", Duration::from_secs(5)).unwrap();
    let st = client.status(&gim_addr).unwrap();
    let nodes = st["stats"]["nodes"].as_object().unwrap();
    assert_eq!(nodes.len(), 1);
    assert_eq!(st["stats"]["stores"].as_u64(), Some(1));

    let dst_addr = Address::from(dst.fields[1].as_str());
    client.put(&dst_addr, "k", "1").unwrap();
    assert_eq!(client.get(&dst_addr, "k").unwrap(), "1");
    client.shutdown(&dst_addr).unwrap();
    assert_eq!(dst.child.wait().unwrap().code(), Some(0));
}

#[test]
fn served_cluster_runs_programs() {
    let gim = serve(&["--tier", "gim"]);
    let g = gim.fields[1].as_str();
    let dst = serve(&["--tier", "dst", "--gim", g]);
    let _dwt = serve(&["--tier", "dwt", "--gim", g]);
    let _dgt = serve(&["--tier", "dgt", "--gim", g]);
    let dir = tempfile::tempdir().unwrap();
    let src = corpus_file(dir.path(), "hypotenuse");
    let out = iplc(&["run", s(&src), "--ctx", "[k:2]", "--dst", &dst.fields[1]]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), "15.0\n");
}

#[test]
fn serve_with_unreachable_manager_fails() {
    let out = iplc(&["serve", "--tier", "dst", "--gim", "127.0.0.1:1"]);
    assert_eq!(out.status.code(), Some(4));
    let out = iplc(&["serve", "--tier", "dwt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shutdown_demand_stops_a_served_manager() {
    let mut gim = serve(&["--tier", "gim"]);
    let client = Client::connect(TcpNetwork::new(5_000), "127.0.0.1:0", Duration::from_secs(5)).unwrap();
    client.shutdown(&Address::from(gim.fields[1].as_str())).unwrap();
    assert_eq!(gim.child.wait().unwrap().code(), Some(0));
}
