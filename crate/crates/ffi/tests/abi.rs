use std::ffi::{CStr, CString};
use std::ptr;

use corrlife::corr::full_period_matrix;
use corrlife::lifetime::{mltc_curve, portfolio_mltc, LifetimeParams};
use corrlife::synth::{generate_panel, MarketSpec};
use corrlife_ffi::*;

fn last_error() -> String {
    let p = corrlife_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Handle(*mut CorrlifePanel);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { corrlife_panel_free(self.0) }
    }
}

fn synthetic(n: usize, rho: f64, length: usize, seed: u64) -> Handle {
    let mut p = ptr::null_mut();
    let status = unsafe { corrlife_panel_synthetic(n, rho, 0.01, length, seed, &mut p) };
    assert_eq!(status, CorrlifeStatus::Ok);
    Handle(p)
}

#[test]
fn pearson_matches_hand_value_and_flags_constant_series() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let y = [2.0, 4.0, 5.0, 4.0, 5.0];
    let mut rho = 0.0;
    assert_eq!(unsafe { corrlife_pearson(x.as_ptr(), y.as_ptr(), 5, &mut rho) }, CorrlifeStatus::Ok);
    assert!((rho - 0.7745966692414834).abs() < 1e-12);

    let flat = [3.0; 5];
    assert_eq!(unsafe { corrlife_pearson(x.as_ptr(), flat.as_ptr(), 5, &mut rho) }, CorrlifeStatus::Ok);
    assert!(rho.is_nan());
    assert_eq!(corrlife_classify(rho, 0.5), CorrlifeLevel::Undefined);
}

#[test]
fn null_pointers_are_reported_not_dereferenced() {
    let x = [1.0, 2.0, 3.0];
    let mut rho = 0.0;
    let status = unsafe { corrlife_pearson(x.as_ptr(), ptr::null(), 3, &mut rho) };
    assert_eq!(status, CorrlifeStatus::NullPointer);
    assert!(last_error().contains("`y`"));
    assert_eq!(unsafe { corrlife_distance(0.1, ptr::null_mut()) }, CorrlifeStatus::NullPointer);
    assert_eq!(unsafe { corrlife_panel_tickers(ptr::null()) }, 0);
    unsafe { corrlife_panel_free(ptr::null_mut()) };
}

#[test]
fn error_kinds_map_to_status_codes() {
    let mut d = 0.0;
    assert_eq!(unsafe { corrlife_distance(0.5, &mut d) }, CorrlifeStatus::Ok);
    assert_eq!(d, 1.0);
    assert_eq!(unsafe { corrlife_distance(1.5, &mut d) }, CorrlifeStatus::Usage);

    let x = [1.0];
    let mut rho = 0.0;
    assert_eq!(unsafe { corrlife_pearson(x.as_ptr(), x.as_ptr(), 1, &mut rho) }, CorrlifeStatus::Data);

    let missing = CString::new("/nonexistent/prices.csv").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { corrlife_panel_load(missing.as_ptr(), ptr::null(), &mut p) }, CorrlifeStatus::Data);
    assert!(p.is_null());
}

#[test]
fn classify_levels() {
    assert_eq!(corrlife_classify(0.5, 0.5), CorrlifeLevel::Strong);
    assert_eq!(corrlife_classify(0.0, 0.5), CorrlifeLevel::Weak);
    assert_eq!(corrlife_classify(-0.01, 0.5), CorrlifeLevel::Negative);
    assert_eq!(corrlife_classify(f64::NAN, 0.5), CorrlifeLevel::Undefined);
}

#[test]
fn panel_from_returns_round_trips_through_matrix() {
    let rows = [[0.01, -0.02, 0.03, 0.0], [0.02, -0.01, 0.02, 0.01], [0.0, 0.0, 0.0, 0.0]];
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let names: Vec<CString> = ["A", "B", "C"].iter().map(|s| CString::new(*s).unwrap()).collect();
    let name_ptrs: Vec<_> = names.iter().map(|s| s.as_ptr()).collect();
    let mut p = ptr::null_mut();
    let status = unsafe { corrlife_panel_from_returns(flat.as_ptr(), 3, 4, name_ptrs.as_ptr(), &mut p) };
    assert_eq!(status, CorrlifeStatus::Ok);
    let h = Handle(p);
    assert_eq!(unsafe { corrlife_panel_tickers(h.0) }, 3);
    assert_eq!(unsafe { corrlife_panel_len(h.0) }, 4);

    let mut m = [0.0; 9];
    assert_eq!(unsafe { corrlife_correlation_matrix(h.0, m.as_mut_ptr(), 9) }, CorrlifeStatus::Ok);
    let mut direct = 0.0;
    unsafe { corrlife_pearson(flat.as_ptr(), flat[4..].as_ptr(), 4, &mut direct) };
    assert_eq!(m[1], direct);
    assert_eq!(m[1], m[3]);
    assert!(m[2].is_nan() && m[6].is_nan());

    assert_eq!(
        unsafe { corrlife_correlation_matrix(h.0, m.as_mut_ptr(), 8) },
        CorrlifeStatus::BufferTooSmall
    );
}

#[test]
fn handle_results_match_the_library() {
    let h = synthetic(6, 0.4, 501, 11);
    let panel = generate_panel(&MarketSpec::uniform(MarketSpec::numbered_tickers(6), 0.4, 0.01, 501, 11))
        .unwrap()
        .returns;

    let matrix = full_period_matrix(&panel).unwrap();
    let mut m = vec![0.0; 36];
    assert_eq!(unsafe { corrlife_correlation_matrix(h.0, m.as_mut_ptr(), 36) }, CorrlifeStatus::Ok);
    for i in 0..6 {
        for j in 0..6 {
            assert_eq!(m[i * 6 + j], matrix.get(i, j).unwrap());
        }
    }

    let widths = [5usize, 10, 20];
    let mut curve = [0.0; 3];
    let status = unsafe { corrlife_mltc_curve(h.0, 0, 1, widths.as_ptr(), 3, 0.5, curve.as_mut_ptr(), 3) };
    assert_eq!(status, CorrlifeStatus::Ok);
    let expected = mltc_curve(&panel, (0, 1), &widths, &LifetimeParams::default()).unwrap();
    assert_eq!(curve.to_vec(), expected.iter().map(|c| c.1).collect::<Vec<_>>());

    let (mut mean, mut sd) = (0.0, 0.0);
    assert_eq!(unsafe { corrlife_portfolio_mltc(h.0, 10, 0.5, &mut mean, &mut sd) }, CorrlifeStatus::Ok);
    let p = portfolio_mltc(&panel, 10, &LifetimeParams::default()).unwrap();
    assert_eq!((mean, sd), (p.mean, p.stddev));
}

#[test]
fn out_of_range_pair_is_a_usage_error() {
    let h = synthetic(3, 0.0, 101, 1);
    let widths = [10usize];
    let mut out = [0.0];
    let status = unsafe { corrlife_mltc_curve(h.0, 0, 7, widths.as_ptr(), 1, 0.5, out.as_mut_ptr(), 1) };
    assert_ne!(status, CorrlifeStatus::Ok);
    assert!(!last_error().is_empty());
}

#[test]
fn half_life_reported_for_stationary_market() {
    let h = synthetic(8, 0.3, 1201, 5);
    let (mut hl, mut found) = (0usize, 0i32);
    assert_eq!(unsafe { corrlife_tree_half_life(h.0, 40, 1, &mut hl, &mut found) }, CorrlifeStatus::Ok);
    assert_eq!(found, 1);
    assert!(hl >= 1);

    let two = synthetic(2, 0.3, 301, 5);
    assert_eq!(unsafe { corrlife_tree_half_life(two.0, 40, 1, &mut hl, &mut found) }, CorrlifeStatus::Ok);
    assert_eq!(found, 0);
}

#[test]
fn epps_correlation_grows_with_interval() {
    let intervals = [1.0, 390.0];
    let mut out = [0.0; 2];
    let status = unsafe { corrlife_epps(0.7, 50.0, intervals.as_ptr(), 2, 300.0, 3, out.as_mut_ptr(), 2) };
    assert_eq!(status, CorrlifeStatus::Ok);
    assert!(out[0] < out[1], "{out:?}");
    assert!((out[1] - 0.7).abs() < 0.15, "{out:?}");
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(corrlife_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
