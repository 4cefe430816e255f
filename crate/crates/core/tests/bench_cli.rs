use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn run_profile_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "small.cfg",
        "# two solvers\nsolvers = rlsmcg, lbfgs(5)\nproblems = quad_diag(10), ext_rosenbrock(10), tridia(10)\noutput = res.csv\n",
    );
    let out = bench(&["run", "--config", "small.cfg"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("res.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "solver,problem,dim,n_iter,n_f,n_g,wall_time_s,status,final_gnorm_inf");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("lbfgs(5),ext_rosenbrock(10),10,"));

    let out = bench(&["profile", "--metric", "ng", "--in", "res.csv", "--out", "prof.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let prof = std::fs::read_to_string(dir.path().join("prof.csv")).unwrap();
    assert!(prof.starts_with("tau,lbfgs(5),rlsmcg\n1,"));
    let last: Vec<f64> = prof.lines().last().unwrap().split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(last, vec![1.0, 1.0]);
    assert!(std::fs::read_to_string(dir.path().join("prof.gp")).unwrap().contains("'prof.csv' using 1:3"));
}

#[test]
fn unconverged_runs_still_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cap.cfg", "solvers = bbsd\nproblems = ext_rosenbrock(10)\nparam.max_iter = 2\n");
    let out = bench(&["run", "--config", "cap.cfg", "--out", "cap.csv"], dir.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("cap.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",ITER_CAP,"));
}

#[test]
fn config_and_io_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.cfg", "solvers = rlsmcg\nproblems = quad_diag(10)\nparam.xi1 = abc\n");
    let out = bench(&["run", "--config", "bad.cfg"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert!(!bench(&["run", "--config", "missing.cfg"], dir.path()).status.success());
    assert!(!bench(&["profile", "--in", "missing.csv", "--out", "p.csv"], dir.path()).status.success());
    assert!(!bench(&["trace", "--problem", "nosuch(3)"], dir.path()).status.success());
}

#[test]
fn trace_emits_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(&["trace", "--solver", "rlsmcg", "--problem", "quad_hilbert(8)"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,case,alpha,gnorm_inf,Ck,state,mu");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(!rows.is_empty());
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), 7);
        assert_eq!(r[0].parse::<usize>().unwrap(), i);
    }
    assert_eq!(rows[0][1], "NEG_GRAD");

    let out = bench(&["trace", "--solver", "hs", "--problem", "quad_diag(10)", "--out", "t.csv", "--param", "max_iter=3"], dir.path());
    assert!(out.status.success());
    let t = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(t.lines().count(), 4);
    assert!(t.lines().nth(1).unwrap().contains(",HS,"));
}

#[test]
fn list_names_every_problem() {
    let out = bench(&["list"], Path::new("."));
    let names = String::from_utf8(out.stdout).unwrap();
    assert_eq!(names.lines().count(), rlsmcg::problems::registry().len());
    assert!(names.lines().any(|l| l == "palmer_poly(8)"));
}
