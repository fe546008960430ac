//! End-to-end check of the C ABI: compile a C client against the generated
//! header, link the static library, run it, and compare its output with the
//! Rust-side estimate.

use std::path::PathBuf;
use std::process::Command;

const C_CLIENT: &str = r#"
#include <stdio.h>
#include <stdlib.h>
#include "lrv.h"

int main(void) {
    LrvConfig cfg = lrv_config_default(1, 1.0);
    cfg.auto_select = 0;
    cfg.psi_coeff = 1.0;
    cfg.psi_exp = 1.0 / 3.0;
    cfg.theta_coeff = 2.0;
    cfg.theta_exp = 1.0 / 3.0;
    cfg.s_floor = 0;
    cfg.t_floor = 1;

    LrvEstimator *est = NULL;
    if (lrv_estimator_new(cfg, 0.6, &est) != LrvStatus_Ok) return 2;
    for (int i = 1; i < 400; i++) {
        double x = 0.8 * ((i * 2654435761u) % 1000) / 1000.0 - 0.4;
        if (lrv_estimator_update(est, x) != LrvStatus_Ok) return 3;
    }
    double value = 0.0;
    if (lrv_estimator_estimate(est, &value) != LrvStatus_Ok) return 4;
    uint64_t n = 0, s = 0, t = 0;
    if (lrv_estimator_shape(est, &n, &s, &t) != LrvStatus_Ok) return 5;
    if (n != 400) return 6;
    lrv_estimator_free(est);
    if (lrv_halfwidth_stop(100000, 1.0, 0.05, 0.05, 500) != 1) return 7;
    printf("%.17e\n", value);
    return 0;
}
"#;

fn workspace_target_dir() -> PathBuf {
    // target/<profile>/ of the build that compiled this test.
    let mut dir = std::env::current_exe().unwrap();
    dir.pop(); // test binary
    dir.pop(); // deps/
    dir
}

#[test]
fn c_client_links_and_matches_rust() {
    let target = workspace_target_dir();
    let lib = target.join("liblrv_ffi.a");
    assert!(
        lib.exists(),
        "static library missing at {} (built alongside the tests)",
        lib.display()
    );
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("lrv.h").exists(), "generated header missing");

    let scratch = target.join("c-abi-test");
    std::fs::create_dir_all(&scratch).unwrap();
    let src = scratch.join("client.c");
    std::fs::write(&src, C_CLIENT).unwrap();
    let exe = scratch.join("client");

    let compile = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("cc is available");
    assert!(
        compile.status.success(),
        "compile/link failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "client exited with {:?}", run.status);
    let printed: f64 = String::from_utf8_lossy(&run.stdout).trim().parse().unwrap();

    // Rust reference over the same deterministic stream.
    let mut st = lrv::LaserState::init(
        lrv::LaserConfig::explicit(1, 1.0, 1.0, 1.0 / 3.0, 2.0, 1.0 / 3.0),
        0.6,
    )
    .unwrap();
    for i in 1..400u32 {
        // The C client multiplies in 32-bit unsigned arithmetic.
        let x = 0.8 * (i.wrapping_mul(2654435761) % 1000) as f64 / 1000.0 - 0.4;
        st.update(x).unwrap();
    }
    assert!(
        (printed - st.estimate()).abs() <= 1e-15 * st.estimate().abs().max(1.0),
        "C client printed {printed}, Rust computed {}",
        st.estimate()
    );
}
