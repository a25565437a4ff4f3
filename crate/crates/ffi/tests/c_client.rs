//! Compiles a C program against the generated header and runs it against
//! the shared library built next to this test.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include <string.h>
#include "parc.h"

#define CHECK(call) do { ParcStatus s_ = (call); if (s_ != PARC_STATUS_OK) { \
    fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, parc_last_error_message()); return 1; } } while (0)

int main(void) {
    double x[200], y[100];
    for (int k = 0; k < 100; k++) {
        double a = k / 49.5 - 1.0, b = (k % 10) / 4.5 - 1.0;
        x[2 * k] = a;
        x[2 * k + 1] = b;
        y[k] = (a > 0 ? 2.0 * a : -a) + b;
    }
    ParcDataset *ds = NULL;
    CHECK(parc_dataset_from_arrays(x, y, 100, 2, 1, &ds));
    ParcFitOptions *opts = parc_fit_options_new();
    CHECK(parc_fit_options_set_k(opts, 2));
    CHECK(parc_fit_options_set_separation(opts, PARC_SEPARATION_SOFTMAX));
    ParcModel *model = NULL;
    CHECK(parc_fit(ds, opts, &model));

    double q[2] = {0.5, 0.0}, out[1];
    CHECK(parc_model_predict_numeric(model, q, 2, out, 1));
    double y_ref[1] = {0.25}, xs[2], eps;
    size_t region;
    CHECK(parc_optimize_tracking(model, y_ref, 1, 0.05, 1e-9, 0, xs, 2, &eps, &region));
    char *lp = NULL;
    CHECK(parc_export_lp(model, y_ref, 1, 0.05, &lp));
    int has_binaries = strstr(lp, "Binaries") != NULL;
    parc_string_free(lp);

    ParcStatus bad = parc_model_predict_numeric(model, q, 1, out, 1);
    printf("regions %zu\npredict %.6f\neps %.3e\nbinaries %d\nbad %d %s\nversion %s\n",
           parc_model_n_regions(model), out[0], eps, has_binaries, (int)bad,
           parc_last_error_message(), parc_version());

    parc_model_free(model);
    parc_fit_options_free(opts);
    parc_dataset_free(ds);
    return 0;
}
"#;

#[test]
fn c_program_builds_and_runs() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<this test> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    assert!(lib_dir.join("libparc_ffi.so").exists(), "cdylib not found in {}", lib_dir.display());

    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("client.c");
    let bin = work.path().join("client");
    std::fs::write(&src, PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .args(["-lparc_ffi", "-lm"])
        .status()
        .expect("C compiler available");
    assert!(status.success());

    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    let field = |name: &str| -> String {
        stdout
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{name} ")))
            .unwrap_or_else(|| panic!("no {name} in {stdout}"))
            .to_string()
    };
    assert_eq!(field("regions"), "2");
    assert!((field("predict").parse::<f64>().unwrap() - 1.0).abs() < 0.15, "{stdout}");
    assert!(field("eps").parse::<f64>().unwrap() < 1e-6);
    assert_eq!(field("binaries"), "1");
    assert!(field("bad").starts_with("3 x has length 1"), "{stdout}");
    assert_eq!(field("version"), env!("CARGO_PKG_VERSION"));
}
