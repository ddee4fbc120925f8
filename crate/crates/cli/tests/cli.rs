use std::path::{Path, PathBuf};
use std::process::Command;

use cda_eit::config::RunConfig;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cda_eit(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cda-eit")).args(args).output().unwrap()
}

fn short_run_config(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(configs().join("circle_two_mesh.ini")).unwrap();
    let path = dir.join("short.ini");
    std::fs::write(&path, text.replace("max_iters = 100", "max_iters = 3") + "\n[output]\ntiming = false\n").unwrap();
    path
}

#[test]
fn bundled_configs_parse() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "ini") {
            RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 6);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = cda_eit(&["run", "--config", dir.path().join("nope.ini").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));

    let bad = dir.path().join("bad.ini");
    std::fs::write(&bad, "[cda]\nstrategy = three_mesh\n").unwrap();
    let out = cda_eit(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strategy"));

    std::fs::write(&bad, "[cda]\ntoll = 1e-3\n").unwrap();
    assert_eq!(cda_eit(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn run_writes_consistent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_run_config(dir.path());
    let out = dir.path().join("out");
    let status = cda_eit(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for f in ["records.csv", "initial.mesh", "final.mesh", "final_descent.mesh", "interface.svg", "final.vtk"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }

    let csv = std::fs::read_to_string(out.join("records.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.ends_with(",0e0")));

    let svg = std::fs::read_to_string(out.join("interface.svg")).unwrap();
    for id in ["initial", "target", "final"] {
        assert!(svg.contains(&format!("<g id=\"{id}\"")), "layer {id} missing");
    }
    assert_eq!(svg.matches("<g ").count(), 3);

    let vtk = std::fs::read_to_string(out.join("final.vtk")).unwrap();
    let lines: Vec<&str> = vtk.lines().collect();
    assert_eq!(lines[0], "# vtk DataFile Version 3.0");
    assert_eq!(&lines[2..4], &["ASCII", "DATASET UNSTRUCTURED_GRID"]);
    let count = |key: &str| -> (usize, usize) {
        let i = lines.iter().position(|l| l.starts_with(key)).unwrap();
        (i, lines[i].split_whitespace().nth(1).unwrap().parse().unwrap())
    };
    let (p, np) = count("POINTS");
    let (c, nc) = count("CELLS");
    let (ct, nct) = count("CELL_TYPES");
    let (_, npd) = count("POINT_DATA");
    assert_eq!(c, p + np + 1);
    assert_eq!(ct, c + nc + 1);
    assert_eq!((nct, npd), (nc, np));
    for l in &lines[c + 1..=c + nc] {
        let ids: Vec<usize> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
        assert_eq!(ids[0], 3);
        assert!(ids[1..].iter().all(|&v| v < np));
    }
    assert!(lines[ct + 1..=ct + nc].iter().all(|&l| l == "5"));
    for field in ["SCALARS u_N", "SCALARS u_D", "VECTORS theta"] {
        assert!(vtk.contains(field), "{field} missing");
    }

    let mesh = cda_core::mesh::read_mesh(&out.join("final_descent.mesh")).unwrap();
    mesh.check().unwrap();
}

#[test]
fn gradcheck_and_forward_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("gradcheck.ini");
    let out = dir.path().join("g");
    let g = cda_eit(&["gradcheck", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
    let rows = std::fs::read_to_string(out.join("gradcheck.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 3 * 6 * 3);

    let f = cda_eit(&["forward", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(f.status.success());
    assert!(String::from_utf8_lossy(&f.stdout).starts_with("J "));
}
