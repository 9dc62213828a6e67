//! Replays the checked-in fuzz seeds through the same entry points the fuzz
//! targets exercise, so the corpus stays meaningful without a fuzzing toolchain.

use std::fs;
use std::path::{Path, PathBuf};

use weakprobe::config::{format_complex, parse_complex, KernelSpec, RunConfig};
use weakprobe::io::{read_probe_csv, read_spectrum_csv, write_probe_csv, write_spectrum_csv};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    assert!(!paths.is_empty(), "no seeds for {target}");
    paths
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn accepted(target: &str, ok: impl Fn(&[u8]) -> bool) -> Vec<String> {
    seeds(target).into_iter().filter(|(_, d)| ok(d)).map(|(n, _)| n).collect()
}

#[test]
fn parse_complex_seeds() {
    let ok = accepted("parse_complex", |d| {
        let Ok(text) = std::str::from_utf8(d) else { return false };
        match parse_complex(text) {
            Ok(z) => {
                assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
                true
            }
            Err(_) => false,
        }
    });
    assert!(ok.contains(&"plain".to_string()));
    assert!(!ok.contains(&"truncated".to_string()));
}

#[test]
fn probe_csv_seeds() {
    let ok = accepted("probe_csv", |d| match read_probe_csv(d) {
        Ok(p) => {
            let mut out = Vec::new();
            write_probe_csv(&p, &mut out).unwrap();
            assert_eq!(out, d, "writer must reproduce a canonical file");
            true
        }
        Err(_) => false,
    });
    assert_eq!(ok, ["optimal_32.csv"]);
}

#[test]
fn spectrum_csv_seeds() {
    let ok = accepted("spectrum_csv", |d| match read_spectrum_csv(d) {
        Ok(a) => {
            let mut out = Vec::new();
            write_spectrum_csv(&a, &mut out).unwrap();
            assert_eq!(read_spectrum_csv(out.as_slice()).unwrap(), a);
            true
        }
        Err(_) => false,
    });
    assert_eq!(ok, ["optimal_32.csv", "single.csv"]);
}

#[test]
fn kernel_spec_seeds() {
    let ok = accepted("kernel_spec", |d| {
        let text = std::str::from_utf8(d).unwrap();
        KernelSpec::from_json(text).map(|s| s.kernel().is_ok()).unwrap_or(false)
    });
    assert_eq!(ok, ["states.json", "states_complex.json", "weak_value.json"]);
}

#[test]
fn run_config_seeds() {
    let ok = accepted("run_config", |d| RunConfig::from_json(std::str::from_utf8(d).unwrap()).is_ok());
    assert_eq!(ok, ["empty.json", "gaussian.json", "optimize.json", "sweep.json"]);
}
