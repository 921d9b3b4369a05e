use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "mrati.h"

int main(void) {
    const char *src =
        "sorts:\n  place = {a, b}\n  robot = {rob}\nfluents basic:\n  loc(robot, place)\n"
        "actions agent:\n  move(robot, place)\naxioms:\n  move(R, P) causes loc(R, P).\n"
        "  -loc(R, P2) if loc(R, P1), P1 != P2.\n";
    MratiDomain *d = NULL;
    if (mrati_domain_parse(src, &d) != MRATI_STATUS_OK) return 1;
    MratiPlan *p = NULL;
    if (mrati_plan(d, "loc(rob, a)", "loc(rob, b)", 5, &p) != MRATI_STATUS_OK) return 2;
    if (mrati_plan_len(p) != 1 || strcmp(mrati_plan_step(p, 0), "move(rob, b)") != 0) return 3;
    mrati_plan_free(p);
    if (mrati_plan(d, "loc(rob, q)", "loc(rob, b)", 5, &p) != MRATI_STATUS_PARSE) return 4;
    if (mrati_last_error() == NULL) return 5;
    mrati_domain_free(d);
    puts("ok");
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/mrati.h")).unwrap();
    let source = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|l| l.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = target_dir().join("libmrati_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipped: no C compiler or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
