use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uniqcube")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_slice(&run(args).stdout).expect("json output")
}

#[test]
fn uniq_verdicts_and_exit_codes() {
    let v = json(&["uniq", "-k", "4", "-q", "2", "--levels", "0,2", "--space", "cone"]);
    assert_eq!(v["verdict"], "Unique");
    assert_eq!(code(&["uniq", "-k", "4", "-q", "2", "--levels", "0,2", "--space", "cone"]), 0);

    let v = json(&["uniq", "-k", "4", "-q", "2", "--levels", "0,1", "--space", "cone"]);
    assert_eq!(v["verdict"], "NotUnique");
    assert_eq!(v["witness"].as_array().unwrap().len(), 4);
    assert_eq!(code(&["uniq", "-k", "4", "-q", "2", "--levels", "0,1"]), 1);

    assert_eq!(json(&["uniq", "-k", "3", "-q", "1", "--points", "---,+++"])["verdict"], "Unique");
    assert_eq!(code(&["uniq", "-k", "3", "-q", "1", "--points", "---,+x+"]), 2);
    assert_eq!(code(&["uniq", "-k", "3", "-q", "1", "--points", "---,++++"]), 2);
    assert_eq!(code(&["uniq", "-k", "3", "-q", "1", "--levels", "0", "--points", "---"]), 2);
    assert_eq!(code(&["uniq", "-k", "3", "-q", "4", "--levels", "0"]), 2);
}

#[test]
fn polygon_output() {
    let out = run(&["polygon", "-k", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert_eq!(text.lines().nth(2), Some("1,2,3,1,3"));
    let two = String::from_utf8(run(&["polygon", "-k", "2"]).stdout).unwrap();
    assert_eq!(two, "j,x_num,x_den,y_num,y_den\n0,1,1,0,1\n1,0,1,1,1\n2,0,1,0,1\n");
    assert_eq!(code(&["polygon", "-k", "1"]), 2);
    assert!(json(&["polygon", "-k", "3", "--format", "json"]).is_array());
}

#[test]
fn extremal_rows() {
    let out = String::from_utf8(run(&["extremal", "u", "-k", "3", "-q", "2", "--format", "csv"]).stdout).unwrap();
    assert!(out.lines().nth(1).unwrap().starts_with("3,2,u,4,exhaustive,"));
    let g = json(&["extremal", "g", "-k", "4", "-q", "2"]);
    assert_eq!(g["value"], 5);
    assert_eq!(g["formula"], 5);
    assert_eq!(json(&["extremal", "u", "-k", "3", "-q", "3"])["value"], 8);
    assert_eq!(code(&["extremal", "g", "-k", "6", "-q", "4", "--budget", "10"]), 3);
}

#[test]
fn verify_suites() {
    assert_eq!(code(&["verify", "polygon", "--k", "3..20"]), 0);
    assert_eq!(code(&["verify", "remarks", "--k", "3..5"]), 0);
    assert_eq!(code(&["verify", "level-theorem", "--k", "3..5"]), 0);
    assert_eq!(code(&["verify", "level-theorem", "--k", "12"]), 3);
    assert_eq!(code(&["verify", "nonsense", "--k", "3"]), 2);
}

#[test]
fn ising_commands() {
    let dir = std::env::temp_dir().join(format!("uniqcube-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let w01 = dir.join("w01.txt");
    std::fs::write(&w01, "---- 5\n+--- 2\n-+-- 1\n--+- 3\n---+ 1\n").unwrap();
    let path = w01.to_str().unwrap();
    let v = json(&["ising", "fit", "--sample", path, "-k", "4", "--tol", "1e-10"]);
    assert_eq!(v["status"], "NonExistent");
    assert!(v["witness"].is_array());
    assert_eq!(code(&["ising", "fit", "--sample", path, "-k", "4"]), 1);
    assert_eq!(code(&["ising", "fit", "--sample", path, "-k", "3"]), 2);
    assert_eq!(code(&["ising", "fit", "--sample", dir.join("missing.txt").to_str().unwrap()]), 2);

    let sim = run(&["ising", "simulate", "-k", "3", "--n", "500", "--seed", "5", "--field", "0.2", "--beta", "-0.1"]);
    assert!(sim.status.success());
    let total: u64 = String::from_utf8(sim.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 500);
    let sample = dir.join("sim.txt");
    std::fs::write(&sample, &sim.stdout).unwrap();
    let fit = json(&["ising", "fit", "--sample", sample.to_str().unwrap()]);
    assert_eq!(fit["status"], "Fitted");
    assert_eq!(fit["params"]["theta_ij"].as_array().unwrap().len(), 3);

    assert_eq!(code(&["ising", "simulate", "-k", "3", "--n", "10"]), 2);
    assert_eq!(code(&["ising", "curve", "-k", "3", "-q", "2", "--n", "4,8"]), 2);
    assert_eq!(code(&["ising", "curve", "-k", "3", "-q", "2", "--n", "4,8", "--reps", "10", "--seed", "1"]), 2);
    let curve = String::from_utf8(run(&["ising", "curve", "-k", "3", "-q", "1", "--n", "1,200", "--reps", "100", "--seed", "2"]).stdout).unwrap();
    assert!(curve.starts_with("n,estimate,ci_low,ci_high\n1,0.000000,"));
    assert!(curve.lines().nth(2).unwrap().starts_with("200,1.000000,"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn thread_variable_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_uniqcube"))
        .args(["polygon", "-k", "3"])
        .env("UNIQCUBE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
