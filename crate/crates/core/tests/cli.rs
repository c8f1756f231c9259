use std::path::{Path, PathBuf};

use decorated_flows::cli::{cli_main, EXIT_BUDGET, EXIT_ERROR, EXIT_OK};
use decorated_flows::dpm::read_dpm;

fn dflow(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli_main(std::iter::once("dflow").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn temp(dir: &tempfile::TempDir, name: &str) -> (PathBuf, String) {
    let p = dir.path().join(name);
    let s = p.to_string_lossy().into_owned();
    (p, s)
}

#[test]
fn bundled_files_validate_and_round_trip() {
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("data")).unwrap() {
        let path = entry.unwrap().path();
        let (code, out, err) = dflow(&["validate", &path.to_string_lossy()]);
        assert_eq!(code, EXIT_OK, "{}: {err}", path.display());
        assert!(out.ends_with("valid\n"));
        let first = read_dpm(&path).unwrap();
        let text = decorated_flows::emit_dpm(&first.metric, first.target.as_deref());
        let second = decorated_flows::parse_dpm(&text).unwrap();
        assert_eq!(decorated_flows::emit_dpm(&second.metric, second.target.as_deref()), text);
    }
}

#[test]
fn symmetric_tetrahedron_file() {
    let (code, out, _) = dflow(&["validate", &data("tetra_sym.dpm")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("vertices 4 edges 6 triangles 4 euler_characteristic 2\n"));
    assert!(out.contains("delaunay_violations 0\n"));

    let (code, out, _) = dflow(&["curvature", &data("tetra_sym.dpm")]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5);
    for (i, line) in lines[..4].iter().enumerate() {
        let (idx, k) = line.split_once(' ').unwrap();
        assert_eq!(idx.parse::<usize>().unwrap(), i);
        assert!((k.parse::<f64>().unwrap() - std::f64::consts::PI).abs() < 1e-12);
    }
    let residual: f64 = lines[4].strip_prefix("gauss_bonnet_residual ").unwrap().parse().unwrap();
    assert!(residual.abs() < 1e-12);
}

#[test]
fn one_vertex_torus_curvature() {
    let (code, out, _) = dflow(&["curvature", &data("one_vertex_torus.dpm")]);
    assert_eq!(code, EXIT_OK);
    let k: f64 = out.lines().next().unwrap().split_once(' ').unwrap().1.parse().unwrap();
    assert!(k.abs() < 1e-12);
}

#[test]
fn errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let (bad, bad_s) = temp(&dir, "bad.dpm");
    std::fs::write(&bad, "{ \"format\": \"dpm-1\", ").unwrap();
    let (code, _, err) = dflow(&["validate", &bad_s]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("line"), "{err}");
    assert_eq!(dflow(&["curvature", "/nonexistent/file.dpm"]).0, EXIT_ERROR);
    assert_eq!(dflow(&["flow", &data("tetra_sym.dpm"), "--flow", "fractional"]).0, EXIT_ERROR);
    assert_eq!(dflow(&["flow", &data("tetra_sym.dpm"), "--flow", "p-calabi", "--p", "1"]).0, EXIT_ERROR);
    assert_eq!(dflow(&["flow", &data("tetra_sym.dpm"), "--flow", "heat"]).0, EXIT_ERROR);
}

#[test]
fn flow_writes_trace_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let (_, input_s) = temp(&dir, "in.dpm");
    let (trace, trace_s) = temp(&dir, "trace.csv");
    let (output, output_s) = temp(&dir, "out.dpm");
    let (code, _, _) = dflow(&["generate", "tetrahedron", "--perturb", "0.2", "--seed", "3", "--out", &input_s]);
    assert_eq!(code, EXIT_OK);
    let (code, out, err) = dflow(&["flow", &input_s, "--trace", &trace_s, "--out", &output_s]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("converged flow calabi steps "), "{out}");

    let csv = std::fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "step,t,max_curv_err,calabi_energy,W_est,flips_total,min_margin,h");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 1);
    assert!(rows.last().unwrap()[2] < 1e-8);

    let result = read_dpm(&output).unwrap();
    assert!(result.metric.u().iter().all(|&x| x == 0.0));
    let k = decorated_flows::curvature(&result.metric).unwrap();
    assert!(k.max_abs_diff(result.target.as_ref().unwrap()) < 1e-8);
}

#[test]
fn step_budget_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let (_, input_s) = temp(&dir, "in.dpm");
    dflow(&["generate", "icosahedron", "--perturb", "0.2", "--out", &input_s]);
    let (code, out, err) = dflow(&["flow", &input_s, "--max-steps", "2"]);
    assert_eq!(code, EXIT_BUDGET);
    assert!(out.starts_with("budget "));
    assert!(err.contains("budget"));
}

#[test]
fn ricci_and_fractional_zero_traces_match() {
    let dir = tempfile::tempdir().unwrap();
    let (_, input_s) = temp(&dir, "in.dpm");
    dflow(&["generate", "torus_grid", "--radius", "0.1", "--perturb", "0.3", "--seed", "5", "--out", &input_s]);
    let (ricci, ricci_s) = temp(&dir, "ricci.csv");
    let (frac, frac_s) = temp(&dir, "frac.csv");
    assert_eq!(dflow(&["flow", &input_s, "--flow", "ricci", "--trace", &ricci_s]).0, EXIT_OK);
    assert_eq!(
        dflow(&["flow", &input_s, "--flow", "fractional", "--s", "0", "--trace", &frac_s]).0,
        EXIT_OK
    );
    assert_eq!(std::fs::read_to_string(ricci).unwrap(), std::fs::read_to_string(frac).unwrap());
}

#[test]
fn explicit_target_file() {
    let dir = tempfile::tempdir().unwrap();
    let (target, target_s) = temp(&dir, "target.json");
    let pi = std::f64::consts::PI;
    let values = [pi + 0.2, pi - 0.2, pi + 0.1, pi - 0.1];
    std::fs::write(&target, serde_json::to_string(&values).unwrap()).unwrap();
    let (code, out, err) = dflow(&["flow", &data("tetra_sym.dpm"), "--target", &target_s]);
    assert_eq!(code, EXIT_OK, "{out}{err}");

    std::fs::write(&target, "[3, 3, 3, 3]").unwrap();
    let (code, _, err) = dflow(&["flow", &data("tetra_sym.dpm"), "--target", &target_s]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("Gauss-Bonnet"), "{err}");
}

#[test]
fn jacobian_check_on_file() {
    let (code, out, _) = dflow(&["jacobian-check", &data("icosahedron_perturbed.dpm")]);
    assert_eq!(code, EXIT_OK);
    let err: f64 = out.trim().strip_prefix("max_relative_error ").unwrap().parse().unwrap();
    assert!(err < 1e-5);
    assert_eq!(dflow(&["jacobian-check", "--preset", "torus_grid(3)", "--seed", "4"]).0, EXIT_OK);
}

#[test]
fn no_surgery_flag_is_honoured() {
    let (code, out, _) = dflow(&["flow", &data("icosahedron_perturbed.dpm"), "--no-surgery"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.trim_end().ends_with("flips 0"), "{out}");
}
