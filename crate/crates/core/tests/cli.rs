use std::fs;
use std::path::Path;
use std::process::Command;

use loadbal::cli::config::{read_coefficients_file, Overrides};
use loadbal::cli::{cmd_calibrate, cmd_partition, cmd_replay, cmd_report, csvio};
use loadbal::estimator::{EstimatorCoefficients, Part};
use loadbal::replay::Strategy;
use loadbal::scenario::{make_preset, quantity_trace, synthesize_timings, unclamped};
use loadbal::BlockGrid;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_loadbal"))
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn calibrate_recovers_reference_table() {
    let dir = tempfile::tempdir().unwrap();
    let truth = EstimatorCoefficients::reference_profile();
    let mut samples = Vec::new();
    for (b, d) in [(24, 10.0), (32, 10.0), (48, 16.0)] {
        let mut cfg = loadbal::scenario::build_preset("settling-box", 0.5, Some(b), Some(d)).unwrap();
        cfg.duration = 1500;
        let trace = quantity_trace(&cfg, 100).unwrap();
        samples.extend(synthesize_timings(&trace, &truth, 0.0, 0).unwrap());
    }
    samples.retain(|s| unclamped(&s.quantities, &truth));
    let csv = dir.path().join("samples.csv");
    csvio::write_file(&csv, &csvio::render_timing_csv(&samples)).unwrap();
    let out = dir.path().join("coef.toml");

    let q = cmd_calibrate(&csv, &out).unwrap();
    assert_eq!(q.samples, samples.len());
    assert_eq!(q.fraction_within_10_percent, 1.0);
    let fitted = read_coefficients_file(&out).unwrap();
    for p in Part::ALL {
        for (a, b) in fitted.part(p).iter().zip(truth.part(p)) {
            assert!((a - b).abs() <= 1e-6 * b.abs(), "{p:?}: {a} vs {b}");
        }
    }

    let status = bin()
        .args(["calibrate", csv.to_str().unwrap(), "-o", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(String::from_utf8_lossy(&status.stdout).contains("100.0%"));
}

#[test]
fn calibrate_data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.toml");
    let empty = write(dir.path(), "empty.csv", "");
    let o = bin().args(["calibrate", empty.to_str().unwrap(), "-o", out.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    let header = "block_id,step,C,F,B,P_L,P_S,K,S,m_lbm,m_bh,m_coup1,m_coup2,m_rb\n";
    let nan = write(
        dir.path(),
        "nan.csv",
        &format!("{header}0,0,8,8,0,0,0,0,1,1,1,1,1,1\n1,0,8,8,0,0,0,0,1,NaN,1,1,1,1\n"),
    );
    let o = bin().args(["calibrate", nan.to_str().unwrap(), "-o", out.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":3:"));

    let few = write(dir.path(), "few.csv", &format!("{header}0,0,8,8,0,0,0,0,1,1,1,1,1,1\n"));
    let err = cmd_calibrate(&few, &out).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("lbm"), "{err}");
}

#[test]
fn partition_examples() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(dir.path(), "w.csv", "block_id,weight\n0,3\n1,1\n2,1\n3,1\n4,2\n");
    let grid = BlockGrid::new([5, 1, 1], 8).unwrap();
    let p = cmd_partition(&w, &grid, 2, Strategy::Hilbert, 1.05).unwrap();
    assert_eq!(p.loads, vec![4.0, 4.0]);
    assert_eq!(p.load_imbalance, 0.0);

    let uniform = write(dir.path(), "u.csv", "block_id,weight\n0,1\n1,1\n2,1\n3,1\n4,1\n5,1\n6,1\n7,1\n");
    let g = BlockGrid::new([2, 2, 2], 8).unwrap();
    assert_eq!(cmd_partition(&uniform, &g, 2, Strategy::Morton, 1.05).unwrap().load_imbalance, 0.0);

    let out = dir.path().join("a.csv");
    let o = bin()
        .args(["partition", uniform.to_str().unwrap(), "--dims", "2,2,2", "--block-size", "8"])
        .args(["--procs", "4", "--strategy", "refine", "-o", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = csvio::read_assignment_csv(&out, &g, 4).unwrap();
    assert_eq!(a.block_counts(), vec![2, 2, 2, 2]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("LI: 0"));

    let o = bin()
        .args(["partition", uniform.to_str().unwrap(), "--dims", "2,2,2", "--block-size", "8", "--procs", "9"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());

    let partial = write(dir.path(), "p.csv", "block_id,weight\n0,1\n");
    let err = cmd_partition(&partial, &g, 2, Strategy::Hilbert, 1.05).unwrap_err();
    assert!(err.to_string().contains("block 1"), "{err}");
}

fn replay_config(dir: &Path, strategy: &str, report: &str) -> std::path::PathBuf {
    write(
        dir,
        &format!("{strategy}.toml"),
        &format!(
            "[scenario]\nscale = 0.5\nseed = 3\nsteps = 1200\n\n[balance]\nstrategy = \"{strategy}\"\n\n\
             [output]\nreport = \"{report}\"\nsummary = \"{strategy}-summary.toml\"\n"
        ),
    )
}

#[test]
fn replay_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let none = replay_config(dir.path(), "none", "none.csv");
    let hilbert = replay_config(dir.path(), "hilbert", "hilbert.csv");
    let s_none = cmd_replay(&none, &Overrides::default()).unwrap();
    let s_hil = cmd_replay(&hilbert, &Overrides::default()).unwrap();
    assert_eq!(s_none.intervals, 13);
    assert!(s_hil.mean_load_imbalance < s_none.mean_load_imbalance);
    assert!(dir.path().join("hilbert-summary.toml").exists());

    let paths = [dir.path().join("none.csv"), dir.path().join("hilbert.csv")];
    let lines = cmd_report(&paths).unwrap();
    assert_eq!(lines[0].relative_makespan, 100.0);
    assert!(lines[1].relative_makespan < 100.0);
    assert!((lines[1].makespan - s_hil.makespan).abs() < 1e-9 * s_hil.makespan);

    let o = bin().arg("report").args(&paths).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("100.0%") && text.contains("hilbert"), "{text}");

    // a run with another step count is not comparable
    let o = bin()
        .args(["replay", hilbert.to_str().unwrap(), "--steps", "600"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let err = cmd_report(&paths).unwrap_err().to_string();
    assert!(err.contains("incomparable reports"), "{err}");
}

#[test]
fn replay_with_zero_steps_reports_initial_interval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = replay_config(dir.path(), "diffusive", "d.csv");
    let s = cmd_replay(&cfg, &Overrides { steps: Some(0), ..Default::default() }).unwrap();
    assert_eq!(s.intervals, 1);
    assert_eq!(csvio::read_report_csv(&dir.path().join("d.csv")).unwrap().len(), 1);
}

#[test]
fn report_halved_maxima() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "a.csv",
        "step,strategy,n_procs,LI,edge_cut,max_load,total_load\n0,none,2,1,10,4,4\n100,none,2,1,10,6,6\n",
    );
    let b = write(
        dir.path(),
        "b.csv",
        "step,strategy,n_procs,LI,edge_cut,max_load,total_load\n0,x,2,0,12,2,4\n100,x,2,0,14,3,6\n",
    );
    let lines = cmd_report(&[a.clone(), b]).unwrap();
    assert_eq!(lines[1].relative_makespan, 50.0);
    assert_eq!(lines[1].mean_edge_cut, 13.0);
    assert_eq!(cmd_report(&[a]).unwrap()[0].relative_makespan, 100.0);
}

#[test]
fn bad_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[balance]\nrebalance = 3\n");
    let o = bin().arg("replay").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin()
        .args(["replay", cfg.to_str().unwrap(), "--strategy", "metis"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synthesize_writes_parseable_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = bin()
        .args(["synthesize", "--steps", "200", "--noise", "0.05", "--noise-seed", "4", "-o"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let samples = csvio::read_timing_csv(&out).unwrap();
    assert_eq!(samples.len(), 3 * make_preset("settling-box", 0.5).unwrap().grid().len());
}
