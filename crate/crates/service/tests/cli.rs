use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

fn sources() -> Vec<String> {
    [
        ("--index", "desk/index.jsonl"),
        ("--ontology", "desk/ontology.jsonl"),
        ("--contexts", "desk/contexts.xml"),
    ]
    .iter()
    .flat_map(|(flag, rel)| [flag.to_string(), fixture(rel).display().to_string()])
    .collect()
}

fn run<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conceptnav"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ingest(dir: &tempfile::TempDir, name: &str) -> (PathBuf, Output) {
    let out = dir.path().join(name);
    let mut args = vec!["ingest".to_string()];
    args.extend(sources());
    args.extend(["--out".to_string(), out.display().to_string()]);
    (out.clone(), run(&args))
}

#[test]
fn ingest_reports_counts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, out) = ingest(&dir, "a.json");
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).starts_with("3 contexts, 16 concepts, 3 videos, 12 shots"));
    let (b, _) = ingest(&dir, "b.json");
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn invalid_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.xml");
    std::fs::write(
        &bad,
        "<contextes>\n  <Contexte Num=\"1\" Name=\"x\" Nbrconcept=\"1\">\n</contextes>\n",
    )
    .unwrap();
    let mut args = sources();
    let pos = args.iter().position(|a| a == "--contexts").unwrap();
    args[pos + 1] = bad.display().to_string();
    let mut ingest = vec![
        "ingest".to_string(),
        "--out".into(),
        dir.path().join("c.json").display().to_string(),
    ];
    ingest.extend(args);
    let out = run(&ingest);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.xml"));

    assert_eq!(
        run(&["rank", "--cache", "/nonexistent/cache.json", "Birds"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["rank", "Birds"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        run(&["evalstats", "0", "0", "0", "0", "0"]).status.code(),
        Some(1)
    );

    let corrupt = dir.path().join("corrupt.json");
    std::fs::write(&corrupt, "{\"format\":\"conceptnav-cache/1\"").unwrap();
    assert_eq!(
        run(&["weights", "--cache", corrupt.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn rank_from_cache_equals_rank_from_sources() {
    let dir = tempfile::tempdir().unwrap();
    let (cache, _) = ingest(&dir, "c.json");
    for name in ["Birds", "Dogs", "Animal", "Person", "Adult", "Old_People"] {
        let from_cache = run(&["rank", "--cache", cache.to_str().unwrap(), name]);
        let mut args = vec!["rank".to_string()];
        args.extend(sources());
        args.push(name.into());
        let from_sources = run(&args);
        assert_eq!(from_cache.status.code(), Some(0));
        assert_eq!(stdout(&from_cache), stdout(&from_sources));
        assert!(stdout(&from_cache).starts_with("rank,video_id,weight\n"));
    }
    // v1: 1/4 of the shots, 2 similar among 6 concepts, 2 videos: 1/24.
    // v2: 1/5 of the shots, 1 similar among 7 concepts: 1/70.
    assert_eq!(
        stdout(&run(&["rank", "--cache", cache.to_str().unwrap(), "Birds"])),
        "rank,video_id,weight\n1,v1,0.041666666666666664\n2,v2,0.014285714285714285\n"
    );
    // A concept without occurrences has an empty listing.
    assert_eq!(
        stdout(&run(&[
            "rank",
            "--cache",
            cache.to_str().unwrap(),
            "Old_People"
        ])),
        "rank,video_id,weight\n"
    );
    let unknown = run(&["rank", "--cache", cache.to_str().unwrap(), "Unicorn"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Unicorn"));
}

#[test]
fn exports() {
    let dir = tempfile::tempdir().unwrap();
    let (cache, _) = ingest(&dir, "c.json");
    let c = cache.to_str().unwrap();
    let matrix = stdout(&run(&["simmatrix", "--cache", c]));
    let lines: Vec<&str> = matrix.lines().collect();
    assert_eq!(lines.len(), 17);
    assert!(lines[0].starts_with("concept_id,2,3,4,"));
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 17));

    let weights = stdout(&run(&["weights", "--cache", c]));
    assert!(weights.starts_with("concept_id,video_id,p1,p2,p\n"));
    let out = dir.path().join("w.csv");
    assert_eq!(
        run(&["weights", "--cache", c, "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(std::fs::read_to_string(out).unwrap(), weights);

    let mut global = vec![
        "weights".to_string(),
        "--scope".into(),
        "global".into(),
        "--sim-threshold".into(),
        "0".into(),
    ];
    global.extend(sources());
    let global = run(&global);
    assert_eq!(global.status.code(), Some(0));
    assert_ne!(stdout(&global), weights);
}

#[test]
fn evalstats_table() {
    let out = run(&["evalstats", "9", "20", "66", "115", "72"]);
    assert_eq!(out.status.code(), Some(0));
    let percents: Vec<String> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect();
    assert_eq!(percents, ["3", "7", "23", "41", "26"]);

    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("votes.json");
    std::fs::write(&votes, r#"{"1": 0, "2": 0, "3": 0, "4": 5, "5": 0}"#).unwrap();
    let out = run(&["evalstats", "--json", "--votes", votes.to_str().unwrap()]);
    let shares: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let p: Vec<u64> = shares
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["percent"].as_u64().unwrap())
        .collect();
    assert_eq!(p, [0, 0, 0, 100, 0]);

    std::fs::write(&votes, r#"{"1": 1, "2": 1, "3": 1, "4": 1}"#).unwrap();
    assert_eq!(
        run(&["evalstats", "--votes", votes.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn replay_prints_transcript() {
    let trace = fixture("desk/traces/animal_birds.jsonl");
    let mut args = vec![
        "replay".to_string(),
        "--trace".into(),
        trace.display().to_string(),
    ];
    args.extend(sources());
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["state"]["level"], "VIDEOS");
    assert_eq!(last["state"]["selectedConcept"], 14);
    assert_eq!(stdout(&run(&args)), text);

    // Rebinding "suivant" to BACK leaves the focus on the first context.
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("map.json");
    std::fs::write(&map, r#"{"suivant": "BACK", "SWIPE_RIGHT": "PREV_ITEM"}"#).unwrap();
    args.extend(["--command-map".to_string(), map.display().to_string()]);
    let text = stdout(&run(&args));
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["state"]["selectedContext"], 2);

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"voice\":\"suivant\"}\nnot json\n").unwrap();
    let mut args = vec![
        "replay".to_string(),
        "--trace".into(),
        bad.display().to_string(),
    ];
    args.extend(sources());
    let out = run(&args);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn serve_answers_health() {
    let mut args = vec!["serve".to_string(), "--listen".into(), "127.0.0.1:0".into()];
    args.extend(sources());
    let mut child = Command::new(env!("CARGO_BIN_EXE_conceptnav"))
        .args(&args)
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.as_mut().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .expect(&line)
        .to_string();

    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(
        stream,
        "GET /health HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("\"status\":\"ok\""));

    // A busy port is a startup failure.
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let mut args = vec![
        "serve".to_string(),
        "--listen".into(),
        taken.local_addr().unwrap().to_string(),
    ];
    args.extend(sources());
    let out = run(&args);
    assert_eq!(out.status.code(), Some(1));
}
