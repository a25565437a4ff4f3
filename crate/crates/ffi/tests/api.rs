use std::ffi::{CStr, CString};
use std::ptr;

use parc::mip::{parse_lp, FeatureBox};
use parc::predictor::predict;
use parc_ffi::*;

/// `y = |x1| + 0.5 x2` on a 20 x 20 grid over [-1, 1]^2.
fn grid() -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..20 {
        for j in 0..20 {
            let (a, b) = (f64::from(i) / 9.5 - 1.0, f64::from(j) / 9.5 - 1.0);
            x.extend([a, b]);
            y.push(a.abs() + 0.5 * b);
        }
    }
    (x, y)
}

fn last_error() -> String {
    let p = parc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn trained(k: usize) -> *mut ParcModel {
    let (x, y) = grid();
    let mut ds = ptr::null_mut();
    assert_eq!(parc_dataset_from_arrays(x.as_ptr(), y.as_ptr(), 400, 2, 1, &mut ds), ParcStatus::Ok);
    let opts = parc_fit_options_new();
    assert_eq!(parc_fit_options_set_k(opts, k), ParcStatus::Ok);
    assert_eq!(parc_fit_options_set_seed(opts, 1), ParcStatus::Ok);
    let mut model = ptr::null_mut();
    assert_eq!(parc_fit(ds, opts, &mut model), ParcStatus::Ok);
    parc_fit_options_free(opts);
    parc_dataset_free(ds);
    model
}

#[test]
fn fit_predict_and_round_trip_through_a_file() {
    unsafe {
        let model = trained(2);
        assert_eq!(parc_model_n_regions(model), 2);
        assert_eq!(parc_model_n_features(model), 2);
        assert_eq!(parc_model_n_numeric_targets(model), 1);
        assert_eq!(parc_model_n_categorical_targets(model), 0);

        let x = [0.3, -0.2];
        let mut y = [0.0];
        assert_eq!(parc_model_predict_numeric(model, x.as_ptr(), 2, y.as_mut_ptr(), 1), ParcStatus::Ok);
        let mut region = usize::MAX;
        assert_eq!(parc_model_region_of(model, x.as_ptr(), 2, &mut region), ParcStatus::Ok);
        assert!(region < 2);
        assert!((y[0] - 0.2).abs() < 0.1, "{}", y[0]);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
        assert_eq!(parc_model_save(model, path.as_ptr()), ParcStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(parc_model_load(path.as_ptr(), &mut loaded), ParcStatus::Ok);
        let mut y2 = [0.0];
        assert_eq!(parc_model_predict_numeric(loaded, x.as_ptr(), 2, y2.as_mut_ptr(), 1), ParcStatus::Ok);
        assert_eq!(y, y2);

        let direct = parc::parc::ParcModel::load(dir.path().join("m.json")).unwrap();
        assert_eq!(predict(&direct, &x).numeric[0], y[0]);
        parc_model_free(loaded);
        parc_model_free(model);
    }
}

#[test]
fn datasets_from_csv_and_r2() {
    unsafe {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("d.csv");
        let (x, y) = grid();
        let mut text = String::from("a,b,y\n");
        for k in 0..400 {
            text.push_str(&format!("{},{},{}\n", x[2 * k], x[2 * k + 1], y[k]));
        }
        std::fs::write(&csv, text).unwrap();
        let path = CString::new(csv.to_str().unwrap()).unwrap();
        let target = CString::new("y").unwrap();
        let targets = [target.as_ptr()];
        let mut ds = ptr::null_mut();
        assert_eq!(parc_dataset_from_csv(path.as_ptr(), targets.as_ptr(), 1, &mut ds), ParcStatus::Ok);
        assert_eq!(parc_dataset_n_samples(ds), 400);
        assert_eq!(parc_dataset_n_features(ds), 2);
        let toml = CString::new("seed = 2\n[parc]\nk = 2\n").unwrap();
        let mut opts = ptr::null_mut();
        assert_eq!(parc_fit_options_from_toml(toml.as_ptr(), &mut opts), ParcStatus::Ok);
        let mut model = ptr::null_mut();
        assert_eq!(parc_fit(ds, opts, &mut model), ParcStatus::Ok);
        let mut r2 = [0.0];
        assert_eq!(parc_model_r2(model, ds, r2.as_mut_ptr(), 1), ParcStatus::Ok);
        assert!(r2[0] > 0.95, "{}", r2[0]);

        let missing = CString::new("nope").unwrap();
        let bad = [missing.as_ptr()];
        let mut ds2 = ptr::null_mut();
        assert_eq!(parc_dataset_from_csv(path.as_ptr(), bad.as_ptr(), 1, &mut ds2), ParcStatus::Data);
        assert!(ds2.is_null());
        assert!(last_error().contains("nope"));
        parc_model_free(model);
        parc_fit_options_free(opts);
        parc_dataset_free(ds);
    }
}

#[test]
fn tracking_and_lp_export() {
    unsafe {
        let model = trained(2);
        let y_ref = [0.4];
        let mut x = [0.0; 2];
        let (mut eps, mut region) = (f64::NAN, usize::MAX);
        let st = parc_optimize_tracking(model, y_ref.as_ptr(), 1, 0.05, 1e-9, 0, x.as_mut_ptr(), 2, &mut eps, &mut region);
        assert_eq!(st, ParcStatus::Ok);
        assert!(eps.abs() < 1e-6);
        let mut y = [0.0];
        parc_model_predict_numeric(model, x.as_ptr(), 2, y.as_mut_ptr(), 1);
        assert!((y[0] - 0.4).abs() < 1e-6);
        let mut r = 0;
        parc_model_region_of(model, x.as_ptr(), 2, &mut r);
        assert_eq!(r, region);

        let mut text = ptr::null_mut();
        assert_eq!(parc_export_lp(model, y_ref.as_ptr(), 1, 0.05, &mut text), ParcStatus::Ok);
        let lp = CStr::from_ptr(text).to_str().unwrap().to_string();
        parc_string_free(text);
        let milp = parse_lp(&lp).unwrap();
        assert_eq!(milp.binaries().len(), 2);
        let inner = parc::parc::ParcModel::from_json(&{
            let dir = tempfile::tempdir().unwrap();
            let p = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
            parc_model_save(model, p.as_ptr());
            std::fs::read_to_string(dir.path().join("m.json")).unwrap()
        })
        .unwrap();
        assert!(FeatureBox::from_model(&inner, 0.05).unwrap().contains(&x, 1e-9));
        parc_model_free(model);
    }
}

#[test]
fn errors_set_codes_and_messages() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(parc_fit(ptr::null(), ptr::null(), &mut model), ParcStatus::NullPointer);
        assert!(last_error().contains("dataset"));

        let (x, y) = grid();
        let mut ds = ptr::null_mut();
        assert_eq!(parc_dataset_from_arrays(x.as_ptr(), y.as_ptr(), 400, 2, 1, &mut ds), ParcStatus::Ok);
        let opts = parc_fit_options_new();
        parc_fit_options_set_k(opts, 0);
        assert_eq!(parc_fit(ds, opts, &mut model), ParcStatus::InvalidArgument);
        parc_fit_options_set_k(opts, 500);
        assert_eq!(parc_fit(ds, opts, &mut model), ParcStatus::Training);
        assert_eq!(parc_fit_options_set_separation(opts, 7), ParcStatus::InvalidArgument);
        assert_eq!(parc_fit_options_set_separation(opts, ParcSeparation::Voronoi as u32), ParcStatus::Ok);
        assert!(model.is_null());

        let m = trained(2);
        let short = [0.0];
        let mut out = [0.0];
        assert_eq!(parc_model_predict_numeric(m, short.as_ptr(), 1, out.as_mut_ptr(), 1), ParcStatus::Dimension);
        let nan = [f64::NAN, 0.0];
        assert_eq!(parc_model_predict_numeric(m, nan.as_ptr(), 2, out.as_mut_ptr(), 1), ParcStatus::Data);
        let missing = CString::new("/nonexistent/m.json").unwrap();
        let mut loaded = ptr::null_mut();
        assert_eq!(parc_model_load(missing.as_ptr(), &mut loaded), ParcStatus::Io);
        let bad_toml = CString::new("[parc]\nk = \"two\"").unwrap();
        let mut o2 = ptr::null_mut();
        assert_eq!(parc_fit_options_from_toml(bad_toml.as_ptr(), &mut o2), ParcStatus::Parse);

        // null handles are harmless for queries and frees
        assert_eq!(parc_model_n_regions(ptr::null()), 0);
        parc_model_free(ptr::null_mut());
        parc_dataset_free(ptr::null_mut());
        parc_string_free(ptr::null_mut());

        parc_model_free(m);
        parc_fit_options_free(opts);
        parc_dataset_free(ds);
        let v = CStr::from_ptr(parc_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
