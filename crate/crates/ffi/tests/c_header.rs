use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "rsma_sim.h"

int main(void) {
    RsmaChannelSet *set = NULL;
    if (rsma_channel_set_generate_pair(0.2, -3.0, 2, 20.0, 7, &set) != RSMA_STATUS_OK) return 1;
    double rsma[2], sdma[2];
    RsmaRateSummary a, b;
    if (rsma_rsma_rates(set, RSMA_PRIVATE_PRECODER_MMSE, RSMA_COMMON_PRECODER_MAX_MIN,
                        RSMA_ALLOCATION_POLICY_MAX_MIN, 101, rsma, 2, &a) != RSMA_STATUS_OK) return 2;
    if (rsma_sdma_rates(set, RSMA_PRIVATE_PRECODER_MMSE, sdma, 2, &b) != RSMA_STATUS_OK) return 3;
    rsma_channel_set_free(set);
    if (a.sum_rate < b.sum_rate - 1e-9) return 4;
    if (rsma_channel_set_generate_pair(2.0, 0.0, 2, 20.0, 7, &set) != RSMA_STATUS_NUMERICAL) return 5;
    if (rsma_last_error_message() == NULL) return 6;
    printf("%.6f %.6f\n", a.sum_rate, b.sum_rate);
    return 0;
}
"#;

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc)
        .arg("--version")
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|_| cc)
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let header = include_dir().join("rsma_sim.h");
    for lang in ["c", "c++"] {
        let status = Command::new(&cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .status()
            .unwrap();
        assert!(status.success(), "header rejected as {lang}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    // Test binaries live in <target>/<profile>/deps.
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().parent().unwrap().join("librsma_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(&cc)
        .arg("-I")
        .arg(include_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8(out.stdout).unwrap().split_whitespace().count(), 2);
}
