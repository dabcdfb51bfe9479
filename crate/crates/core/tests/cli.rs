use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bss(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bss")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines().find_map(|l| l.strip_prefix(&format!("{key}: "))).unwrap_or_default().to_string()
}

const GEN: [&str; 17] = [
    "gen", "--p", "12", "--n", "60", "--corr", "constant", "--rho", "0.8", "--example", "2", "--k0", "4", "--snr", "5",
    "--seed", "1",
];

#[test]
fn gen_is_deterministic_and_writes_truth() {
    let dir = tempfile::tempdir().unwrap();
    let a = bss(dir.path(), &[&GEN[..], &["--out", "a.bin"]].concat());
    let b = bss(dir.path(), &[&GEN[..], &["--out", "b.bin"]].concat());
    assert!(a.status.success() && b.status.success());
    assert_eq!(fs::read(dir.path().join("a.bin")).unwrap(), fs::read(dir.path().join("b.bin")).unwrap());
    let out = stdout(&a);
    assert_eq!(field(&out, "p"), "12");
    assert_eq!(field(&out, "support"), "{1, 2, 3, 4}");
    assert_eq!(field(&out, "seed"), "1");
    let truth = fs::read_to_string(dir.path().join("a.bin.truth.toml")).unwrap();
    assert!(truth.contains("support = [1, 2, 3, 4]"));
}

#[test]
fn solve_exit_codes_and_records() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bss(dir.path(), &[&GEN[..], &["--out", "d.bin"]].concat()).status.success());
    let fs_run = bss(dir.path(), &["solve", "--data", "d.bin", "--solver", "fs", "--k", "5", "--record", "r.csv"]);
    assert_eq!(fs_run.status.code(), Some(0));
    assert_eq!(field(&stdout(&fs_run), "support").split(',').count(), 5);

    let bad_t = bss(dir.path(), &["solve", "--data", "d.bin", "--solver", "sfs", "--t", "2", "--k", "1"]);
    assert_eq!(bad_t.status.code(), Some(2));
    let unknown = bss(dir.path(), &["solve", "--data", "d.bin", "--solver", "lasso", "--k", "2"]);
    assert_eq!(unknown.status.code(), Some(2));
    let big_k = bss(dir.path(), &["solve", "--data", "d.bin", "--solver", "fs", "--k", "13"]);
    assert_eq!(big_k.status.code(), Some(2));
    let flag = bss(dir.path(), &["solve", "--data", "d.bin", "--solver", "fs", "--k", "2", "--bogus"]);
    assert_eq!(flag.status.code(), Some(2));
    let missing = bss(dir.path(), &["solve", "--data", "nope.bin", "--solver", "fs", "--k", "2"]);
    assert_eq!(missing.status.code(), Some(1));

    let store = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(store.starts_with("problem_id,solver_id,k,replication,seed,rss,cpu_seconds,stop_reason,support\n"));
    assert_eq!(store.lines().count(), 2);
}

#[test]
fn usage_errors_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = bss(dir.path(), &["gen", "--p", "12", "--n", "60", "--example", "2", "--k0", "40", "--snr", "5", "--out", "x.bin"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("x.bin").exists());
    assert!(!dir.path().join("x.bin.truth.toml").exists());
}

#[test]
fn oracle_dominates_heuristics() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bss(dir.path(), &[&GEN[..], &["--out", "d.csv"]].concat()).status.success());
    let oracle = bss(dir.path(), &["oracle", "--data", "d.csv", "--k", "4"]);
    assert!(oracle.status.success());
    let f_star: f64 = field(&stdout(&oracle), "f_star").parse().unwrap();
    let exhaustive = bss(dir.path(), &["solve", "--data", "d.csv", "--solver", "exhaustive", "--k", "4"]);
    assert_eq!(field(&stdout(&exhaustive), "rss").parse::<f64>().unwrap(), f_star);
    for s in ["fs", "sffs", "sfs1", "sfs2", "dfo", "dfon", "ga"] {
        let o = bss(dir.path(), &["solve", "--data", "d.csv", "--solver", s, "--k", "4", "--seed", "3"]);
        assert!(o.status.success(), "{s}");
        let rss: f64 = field(&stdout(&o), "rss").parse().unwrap();
        assert!(rss >= f_star * (1.0 - 1e-9), "{s}: {rss} < {f_star}");
    }
}

#[test]
fn raw_tables_with_expansion() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("a,b,c,y\n");
    for i in 0..30 {
        let (a, b, c) = (i as f64, ((i * 7) % 11) as f64, ((i * 5) % 13) as f64);
        csv.push_str(&format!("{a},{b},{c},{}\n", a * b - 2.0 * c + ((i * 3) % 5) as f64));
    }
    fs::write(dir.path().join("t.csv"), csv).unwrap();
    let o = bss(dir.path(), &["solve", "--data", "t.csv", "--response", "y", "--quadratic", "--solver", "fs", "--k", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(field(&stdout(&o), "support").contains('5'), "a*b is column 5");
}

#[test]
fn bench_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let plan = r#"
seed = 2
[budget]
cpu_seconds_limit = 10.0
[grid]
dims = ["small-1"]
regimes = ["OD"]
examples = [1, 2]
correlations = ["constant"]
snrs = [5.0]
ks = [5]
[[solvers]]
name = "fs"
[[solvers]]
name = "sfs2"
[[solvers]]
name = "exhaustive"
"#;
    fs::write(dir.path().join("p.toml"), plan).unwrap();
    let b = bss(dir.path(), &["bench", "--plan", "p.toml", "--out", "s.csv"]);
    assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    assert_eq!(field(&stdout(&b), "executed"), "6");
    let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(text.lines().count(), 7);
    let r = bss(dir.path(), &["report", "--store", "s.csv", "--out", "rep"]);
    assert!(r.status.success());
    for f in ["cpu_table.csv", "profile_OD.csv", "gap_small-1_OD_k5.csv"] {
        assert!(dir.path().join("rep").join(f).exists(), "{f}");
    }
    let again = bss(dir.path(), &["bench", "--plan", "p.toml", "--out", "s.csv"]);
    assert_eq!(field(&stdout(&again), "skipped"), "6");
}
