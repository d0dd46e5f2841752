use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use genmetrics_core::experiments::shifted_gaussian_pair;
use genmetrics_core::report::read_reports;
use genmetrics_core::{write_array, Dtype, EmbeddingSet, Report};
use tempfile::TempDir;

fn genmetrics(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genmetrics"))
        .args(args)
        .env_remove("GENMETRICS_THREADS")
        .output()
        .expect("spawn genmetrics")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn save(dir: &TempDir, name: &str, x: &EmbeddingSet) -> PathBuf {
    let p = dir.path().join(name);
    write_array(x, &p, Dtype::F8).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Value from the plain `metric = value (...)` line.
fn plain_value(o: &Output) -> f64 {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    stdout(o).split_whitespace().nth(2).unwrap().parse().unwrap()
}

fn gaussian_files(dir: &TempDir, n: usize, d: usize) -> (PathBuf, PathBuf) {
    let (r, g) = shifted_gaussian_pair(n, d, 0.5, 7).unwrap();
    (save(dir, "ref.npy", &r), save(dir, "gen.npy", &g))
}

#[test]
fn mmd_on_two_point_fixture() {
    let dir = TempDir::new().unwrap();
    let a = save(&dir, "a.npy", &EmbeddingSet::from_rows(&[[0.0], [0.0]]).unwrap());
    let b = save(&dir, "b.npy", &EmbeddingSet::from_rows(&[[10.0], [10.0]]).unwrap());
    let v = plain_value(&genmetrics(&["compute", "mmd", "--sigma", "10", "--scale", "1", s(&a), s(&b)]));
    assert!((v - 2.0 * (1.0 - (-0.5f64).exp())).abs() < 1e-12, "{v}");
    assert!((v - 0.7869387).abs() < 1e-7);
    let zero = plain_value(&genmetrics(&["compute", "mmd", "--sigma", "10", "--scale", "1", s(&a), s(&a)]));
    assert_eq!(zero, 0.0);
}

#[test]
fn fid_of_a_file_with_itself_is_zero() {
    let dir = TempDir::new().unwrap();
    let (r, _) = gaussian_files(&dir, 300, 8);
    assert_eq!(plain_value(&genmetrics(&["compute", "fid", s(&r), s(&r)])), 0.0);
}

#[test]
fn cmmd_self_comparison_bound_and_json() {
    let dir = TempDir::new().unwrap();
    let (r, _) = gaussian_files(&dir, 200, 16);
    let o = genmetrics(&["compute", "cmmd", s(&r), s(&r), "--json"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    let reports = read_reports(&text).unwrap();
    let Report::Metric(m) = &reports[0] else {
        panic!("expected a metric report: {text}")
    };
    assert_eq!(m.metric, "cmmd");
    assert!(m.value.abs() <= 1000.0 * 4.0 / 200.0);
    let k = m.config.kernel.unwrap();
    assert_eq!((k.bandwidth_sigma, k.output_scale, k.l2_normalize), (10.0, 1000.0, true));
    assert_eq!((m.n_ref, m.n_gen, m.d), (200, 200, 16));
}

#[test]
fn every_subcommand_emits_parseable_json() {
    let dir = TempDir::new().unwrap();
    let (r, g) = gaussian_files(&dir, 400, 4);
    let runs: Vec<Vec<&str>> = vec![
        vec!["compute", "fid", s(&r), s(&g), "--divisor", "biased"],
        vec!["compute", "fid-inf", s(&r), s(&g), "--points", "5", "--seed", "3"],
        vec!["compute", "mmd", s(&r), s(&g), "--sigma", "2", "--block-size", "64", "--l2-normalize"],
        vec!["compute", "cmmd", s(&r), s(&g), "--no-l2-normalize"],
        vec!["normality", s(&r), "--alpha", "0.01"],
        vec!["mog", "--n", "400", "--lambdas", "0,1"],
        vec!["sample-efficiency", s(&r), s(&g), "--sizes", "100,400", "--seeds", "0,1"],
        vec!["bench", "--n", "200", "--d", "8", "--reps", "3"],
    ];
    let mut all = String::new();
    for mut args in runs {
        args.push("--json");
        let o = genmetrics(&args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert_eq!(text.lines().count(), 1, "{args:?}");
        all.push_str(&text);
    }
    let reports = read_reports(&all).unwrap();
    assert_eq!(reports.len(), 8);
    assert!(matches!(&reports[1], Report::Metric(m) if m.points.len() == 5 && m.config.extrapolation.unwrap().seed == 3));
    assert!(matches!(&reports[4], Report::Normality(n) if n.report.alpha == 0.01 && n.report.d == 4));
    assert!(matches!(&reports[5], Report::Mog(m) if m.rows.len() == 2 && m.rows[0].fd_analytic == 0.0));
    assert!(matches!(&reports[6], Report::SampleEfficiency(e) if e.rows.len() == 4));
    assert!(matches!(&reports[7], Report::Bench(b) if b.bench.frechet_samples_ms.len() == 3));
    for r in &reports {
        assert_eq!(Report::parse(&r.to_json_line().unwrap()).unwrap(), *r);
    }
}

#[test]
fn csv_outputs_are_deterministic_with_lf_endings() {
    let dir = TempDir::new().unwrap();
    let (r, g) = gaussian_files(&dir, 500, 4);
    let se = ["sample-efficiency", s(&r), s(&g), "--sizes", "100,250,500", "--seeds", "1,2"];
    let a = genmetrics(&se);
    let b = genmetrics(&se);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "size,seed,fid,cmmd,fid_rel,cmmd_rel");
    assert_eq!(lines.len(), 1 + 6);
    // subsets equal to the full set reproduce the full-size values
    for line in &lines[5..] {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0], "500");
        assert_eq!(f[4].parse::<f64>().unwrap(), 1.0, "{line}");
        assert_eq!(f[5].parse::<f64>().unwrap(), 1.0, "{line}");
    }

    let mog = ["mog", "--n", "300", "--lambdas", "0,0.5,1.4", "--seed", "2"];
    let a = genmetrics(&mog);
    assert_eq!(a.stdout, genmetrics(&mog).stdout);
    let text = stdout(&a);
    assert!(text.starts_with("lambda,fd_analytic,fd_sampled,fd_inf,mmd\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn normality_plain_output() {
    let dir = TempDir::new().unwrap();
    let (r, _) = gaussian_files(&dir, 300, 3);
    let o = genmetrics(&["normality", s(&r)]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "test,statistic,df,p_value,decision");
    assert!(lines[1].starts_with("mardia_skewness,") && lines[1].contains(",10,"));
    assert_eq!(lines.len(), 4);
}

#[test]
fn failures_exit_nonzero_with_message_on_stderr() {
    let dir = TempDir::new().unwrap();
    let (r, _) = gaussian_files(&dir, 50, 3);
    let junk = dir.path().join("junk.npy");
    std::fs::write(&junk, b"definitely not an array").unwrap();
    let other = save(&dir, "other.npy", &EmbeddingSet::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
    let missing = dir.path().join("missing.npy");
    let cases: Vec<Vec<&str>> = vec![
        vec!["compute", "fid", s(&r), s(&junk)],
        vec!["compute", "cmmd", s(&r), s(&missing)],
        vec!["compute", "mmd", s(&r), s(&other)],
        vec!["normality", s(&r), "--alpha", "1.5"],
        vec!["mog", "--sigma", "1", "--lambdas", "2"],
        vec!["sample-efficiency", s(&r), s(&r), "--sizes", "51"],
        vec!["compute", "mmd", s(&r), s(&r), "--sigma", "-1"],
    ];
    for args in cases {
        let o = genmetrics(&args);
        assert!(!o.status.success(), "{args:?} should fail");
        assert!(o.stdout.is_empty(), "{args:?} wrote to stdout");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let (r, g) = gaussian_files(&dir, 600, 8);
    let run = |threads: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_genmetrics"));
        c.args(["compute", "cmmd", s(&r), s(&g), "--block-size", "50", "--json"]);
        match threads {
            Some(t) => c.env("GENMETRICS_THREADS", t),
            None => c.env_remove("GENMETRICS_THREADS"),
        };
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let Report::Metric(m) = Report::parse(&stdout(&o)).unwrap() else { panic!() };
        m.value
    };
    let base = run(None);
    assert_eq!(base.to_bits(), run(Some("1")).to_bits());
    assert_eq!(base.to_bits(), run(Some("3")).to_bits());
    let o = Command::new(env!("CARGO_BIN_EXE_genmetrics"))
        .args(["compute", "cmmd", s(&r), s(&g)])
        .env("GENMETRICS_THREADS", "many")
        .output()
        .unwrap();
    assert!(!o.status.success());
}
