use std::path::Path;
use std::process::{Command, Output};

const GRID: [&str; 4] = ["--grid", "16,16,32", "--box", "10,10,24"];

fn nlslab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlslab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn groundstate(dir: &Path, out: &str) -> Output {
    let mut args = vec!["groundstate"];
    args.extend(GRID);
    args.extend(["--r", "0.1", "--out", out]);
    nlslab(dir, &args)
}

#[test]
fn flags_override_file_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "p = 2.5\nr = 0.2\nt-final = 3\n").unwrap();
    let o = nlslab(dir.path(), &["--config", "run.cfg", "--print-config", "groundstate", "--r", "0.3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for line in ["p = 2.5", "r = 0.3", "chi = 4", "grid = 32,32,64"] {
        assert!(text.lines().any(|l| l == line), "{line:?} missing from\n{text}");
    }
    assert!(!text.contains("t-final"));
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "colour = red\n").unwrap();
    let o = nlslab(dir.path(), &["--config", "run.cfg", "spectrum"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectrum_starts_at_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["spectrum"];
    args.extend(GRID);
    args.extend(["--cutoff", "10"]);
    let o = nlslab(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 2.0);
    let rq: f64 = rows[0][4].parse().unwrap();
    assert!((rq - 2.0).abs() < 1e-6);
}

#[test]
fn groundstate_feeds_rearrange_and_evolve() {
    let dir = tempfile::tempdir().unwrap();
    let o = groundstate(dir.path(), "gs.nls3");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let row = rdr.records().next().unwrap().unwrap();
    let energy: f64 = row[3].parse().unwrap();
    assert!(energy < 0.01);
    assert_eq!(&row[13], "interior");

    let o = nlslab(dir.path(), &["rearrange", "--in", "gs.nls3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(dir.path().join("rearranged.nls3").exists());
    assert!(stdout(&o).starts_with("claim,anchor,value,threshold,pass"));

    let o = nlslab(dir.path(), &["evolve", "--in", "gs.nls3", "--t-final", "0.5", "--perturb", "0.01"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,mass,energy,d,maxamp\n"));
    assert_eq!(traj.lines().count(), 1 + 6);
}

#[test]
fn bad_magic_exits_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("junk.nls3"), b"XXXX0000000000000000").unwrap();
    let o = nlslab(dir.path(), &["rearrange", "--in", "junk.nls3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("rearranged.nls3").exists());
    assert!(!dir.path().join("rearrange_checks.csv").exists());
    let o = nlslab(dir.path(), &["evolve", "--in", "missing.nls3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = groundstate(dir.path(), "a.nls3");
    let b = groundstate(dir.path(), "b.nls3");
    assert_eq!(a.stdout, b.stdout);
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.nls3"), read("b.nls3"));

    let mut args = vec!["sweep"];
    args.extend(GRID);
    args.extend(["--r-list", "0.1,0.2", "--cutoff", "10"]);
    let s1 = nlslab(dir.path(), &[&args[..], &["--out", "s1.csv"]].concat());
    let s2 = nlslab(dir.path(), &[&args[..], &["--out", "s2.csv", "--jobs", "2"]].concat());
    assert_ne!(s1.status.code(), Some(2), "{}", String::from_utf8_lossy(&s1.stderr));
    assert_ne!(s2.status.code(), Some(2));
    assert_eq!(read("s1.csv"), read("s2.csv"));
}
