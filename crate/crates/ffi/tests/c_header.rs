//! Compiles a C program against the generated header and links it to the
//! static library built alongside this test.

use std::path::{Path, PathBuf};
use std::process::Command;

fn staticlib() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libomegascale_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    lib
}

#[test]
fn c_program_links_and_runs() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(staticlib())
        .args(["-lm", "-lpthread", "-ldl"])
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let vals: Vec<f64> = String::from_utf8_lossy(&run.stdout).split_whitespace().map(|s| s.parse().unwrap()).collect();
    assert_eq!(vals.len(), 2);
    assert!(vals[0] > 0.0 && vals[1] > 1.0);
}
