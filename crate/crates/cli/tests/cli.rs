use std::process::{Command, Output};

fn ogpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ogpm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn curves_rows_and_determinism() {
    let args = [
        "curves",
        "--mechanisms",
        "ogpm,pm-c,sw-c",
        "--epsilon",
        "2",
        "--metric",
        "l1",
    ];
    let a = ogpm(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = stdout(&a);
    assert_eq!(text.lines().next(), Some("mechanism,epsilon,metric,x,err"));
    assert_eq!(text.lines().count(), 1 + 3 * 1001);
    assert_eq!(text, stdout(&ogpm(&args)));
}

#[test]
fn circular_curve_is_flat() {
    let o = ogpm(&[
        "curves",
        "--mechanisms",
        "ogpm-circular",
        "--epsilon",
        "2",
        "--metric",
        "l2",
    ]);
    let errs: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let max = errs.iter().copied().fold(f64::MIN, f64::max);
    let min = errs.iter().copied().fold(f64::MAX, f64::min);
    assert!(max - min < 1e-9);
}

#[test]
fn unknown_mechanism_is_a_config_error() {
    let o = ogpm(&["curves", "--mechanisms", "gaussian", "--epsilon", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gaussian"));
}

#[test]
fn solve_recovers_the_closed_form() {
    let o = ogpm(&["solve", "--m", "3", "--epsilon", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("piece_index,density,left,right"));
    let high = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!((high - 0.5f64.exp()).abs() < 1e-4, "{high}");
}

#[test]
fn verify_prints_a_pass_line() {
    let o = ogpm(&["verify-m", "--m", "3", "--samples", "10", "--seed", "7"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("PASS m=3 vs m=4"), "{}", stdout(&o));
}

#[test]
fn fit_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("p.csv");
    let mut text = String::from("epsilon,value\n");
    for i in 1..20 {
        let e = 0.4 * i as f64;
        text.push_str(&format!("{e},{}\n", (0.5 * e).exp()));
    }
    std::fs::write(&input, text).unwrap();
    let out = dir.path().join("fit.csv");
    let o = ogpm(&[
        "fit",
        "--feature",
        "exp-half",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let written = std::fs::read_to_string(out).unwrap();
    let row: Vec<&str> = written.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "exp-half");
    assert!((row[1].parse::<f64>().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn estimate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "mechanisms = ogpm, sw-c\nepsilons = 1, 4\ntrials = 5\nn = 500\nseed = 3\n",
    )
    .unwrap();
    let run = || stdout(&ogpm(&["estimate", "--config", cfg.to_str().unwrap()]));
    let a = run();
    assert!(a.starts_with("mechanism,epsilon,task,error_mean,error_std,trials,seed"));
    // 2 mechanisms × 2 ε × 2 tasks
    assert_eq!(a.lines().count(), 1 + 8);
    assert_eq!(a, run());
}

#[test]
fn estimate_missing_dataset_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "dataset = /nonexistent/data.csv\ncolumn = x\n").unwrap();
    let o = ogpm(&["estimate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let o = ogpm(&[
        "estimate",
        "--config",
        dir.path().join("none.cfg").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn polar_split_curve() {
    let o = ogpm(&[
        "polar-split",
        "--epsilon-total",
        "7.283185307179586",
        "--d",
        "1",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("epsilon1,total_error\n"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon1=1.29"));
}

#[test]
fn sample_is_seeded_and_in_range() {
    let args = [
        "sample",
        "--mechanism",
        "ogpm",
        "--epsilon",
        "1",
        "--values",
        "0.1,0.5,0.9",
        "--seed",
        "4",
    ];
    let a = stdout(&ogpm(&args));
    assert_eq!(a, stdout(&ogpm(&args)));
    for line in a.lines().skip(1) {
        let y: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.0..1.0).contains(&y));
    }
    let o = ogpm(&[
        "sample",
        "--mechanism",
        "ogpm",
        "--epsilon",
        "1",
        "--values",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
