use std::f64::consts::PI;
use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use muhs_ffi::*;

fn grid(n: usize) -> *mut MuhsGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { muhs_grid_new(n, &mut g) }, MuhsStatus::Ok);
    g
}

fn sample(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..n).map(|j| f(j as f64 / n as f64)).collect()
}

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        muhs_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn grid_lifecycle_and_errors() {
    let g = grid(16);
    assert_eq!(unsafe { muhs_grid_size(g) }, 16);
    unsafe { muhs_grid_free(g) };
    unsafe { muhs_grid_free(ptr::null_mut()) };
    assert_eq!(unsafe { muhs_grid_size(ptr::null()) }, 0);

    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { muhs_grid_new(7, &mut h) },
        MuhsStatus::InvalidArgument
    );
    assert!(h.is_null());
    assert!(last_error().contains('7'));
    assert_eq!(
        unsafe { muhs_grid_new(8, ptr::null_mut()) },
        MuhsStatus::NullPointer
    );
}

#[test]
fn error_message_truncates() {
    let mut h = ptr::null_mut();
    unsafe { muhs_grid_new(3, &mut h) };
    let full = unsafe { muhs_last_error_message(ptr::null_mut(), 0) };
    assert!(full > 8);
    let mut buf = [1 as std::ffi::c_char; 5];
    unsafe { muhs_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(buf[4], 0);
}

#[test]
fn derivative_and_mean() {
    let n = 32;
    let g = grid(n);
    let v = sample(n, |x| 2.0 + (2.0 * PI * x).sin());
    let mut d = vec![0.0; n];
    let mut m = 0.0;
    unsafe {
        assert_eq!(muhs_deriv(g, v.as_ptr(), d.as_mut_ptr()), MuhsStatus::Ok);
        assert_eq!(muhs_mean(g, v.as_ptr(), &mut m), MuhsStatus::Ok);
        assert_eq!(
            muhs_deriv(g, ptr::null(), d.as_mut_ptr()),
            MuhsStatus::NullPointer
        );
        assert_eq!(
            muhs_mean(ptr::null(), v.as_ptr(), &mut m),
            MuhsStatus::NullPointer
        );
        muhs_grid_free(g);
    }
    assert!((m - 2.0).abs() < 1e-14);
    for (j, dj) in d.iter().enumerate() {
        let x = j as f64 / n as f64;
        assert!((dj - 2.0 * PI * (2.0 * PI * x).cos()).abs() < 1e-12);
    }
}

#[test]
fn ainv_routes_agree() {
    let n = 256;
    let g = grid(n);
    let w = sample(n, |x| {
        0.5 + (2.0 * PI * x).cos() - 0.3 * (6.0 * PI * x).sin()
    });
    let mut outs = vec![vec![0.0; n]; 3];
    for (route, out) in [
        MuhsAinvRoute::Formula,
        MuhsAinvRoute::Spectral,
        MuhsAinvRoute::Convolution,
    ]
    .iter()
    .zip(outs.iter_mut())
    {
        let s = unsafe { muhs_ainv(g, *route as u32, w.as_ptr(), out.as_mut_ptr()) };
        assert_eq!(s, MuhsStatus::Ok);
    }
    let mut scratch = vec![0.0; n];
    assert_eq!(
        unsafe { muhs_ainv(g, 9, w.as_ptr(), scratch.as_mut_ptr()) },
        MuhsStatus::InvalidArgument
    );
    unsafe { muhs_grid_free(g) };
    for j in 0..n {
        let x = j as f64 / n as f64;
        let exact = 0.5 + (2.0 * PI * x).cos() / (4.0 * PI * PI)
            - 0.3 * (6.0 * PI * x).sin() / (36.0 * PI * PI);
        for o in &outs {
            assert!((o[j] - exact).abs() < 1e-9);
        }
    }
}

#[test]
fn mollify_preserves_mean() {
    let n = 64;
    let g = grid(n);
    let v = sample(n, |x| if x < 0.5 { 2.0 } else { 1.0 });
    let mut out = vec![0.0; n];
    unsafe {
        assert_eq!(
            muhs_mollify(g, 8, v.as_ptr(), out.as_mut_ptr()),
            MuhsStatus::Ok
        );
        assert_eq!(
            muhs_mollify(g, 1, v.as_ptr(), out.as_mut_ptr()),
            MuhsStatus::InvalidArgument
        );
        muhs_grid_free(g);
    }
    let mean: f64 = out.iter().sum::<f64>() / n as f64;
    assert!((mean - 1.5).abs() < 1e-13);
    assert!(out
        .iter()
        .all(|&x| (1.0 - 1e-12..=2.0 + 1e-12).contains(&x)));
}

#[test]
fn simulate_and_read_back() {
    let n = 64;
    let g = grid(n);
    let u = sample(n, |x| 0.05 * (2.0 * PI * x).sin());
    let rho = vec![1.0; n];
    let mut traj = ptr::null_mut();
    let s = unsafe {
        muhs_simulate(
            g,
            u.as_ptr(),
            rho.as_ptr(),
            0.3,
            0.5,
            0.01,
            0.3,
            5,
            &mut traj,
        )
    };
    assert_eq!(s, MuhsStatus::Ok);
    let len = unsafe { muhs_trajectory_len(traj) };
    assert!(len >= 2);
    let mut first = MuhsDiagnostics::default();
    let mut last = MuhsDiagnostics::default();
    let mut ubuf = vec![0.0; n];
    let mut rbuf = vec![0.0; n];
    let mut t = 0.0;
    unsafe {
        assert_eq!(
            muhs_trajectory_diagnostics(traj, 0, &mut first),
            MuhsStatus::Ok
        );
        assert_eq!(
            muhs_trajectory_diagnostics(traj, len - 1, &mut last),
            MuhsStatus::Ok
        );
        assert_eq!(
            muhs_trajectory_diagnostics(traj, len, &mut last),
            MuhsStatus::InvalidArgument
        );
        assert_eq!(
            muhs_trajectory_state(traj, 0, ubuf.as_mut_ptr(), rbuf.as_mut_ptr(), &mut t),
            MuhsStatus::Ok
        );
        muhs_trajectory_free(traj);
        muhs_grid_free(g);
    }
    assert_eq!(ubuf, u);
    assert_eq!(t, 0.0);
    assert_eq!(last.t, 0.5);
    assert!(((last.energy - first.energy) / first.energy).abs() < 1e-8);
}

#[test]
fn simulate_reports_blowup_and_bad_config() {
    let n = 64;
    let g = grid(n);
    let u = sample(n, |x| (2.0 * PI * x).sin());
    let rho = vec![0.0; n];
    let mut traj = ptr::null_mut();
    // default blow-up threshold 1e6 is reached before t = 5 for ρ ≡ 0
    let s = unsafe {
        muhs_simulate(
            g,
            u.as_ptr(),
            rho.as_ptr(),
            0.0,
            5.0,
            1e-3,
            0.3,
            100,
            &mut traj,
        )
    };
    assert_eq!(s, MuhsStatus::BlowUp);
    assert!(!traj.is_null());
    assert!(unsafe { muhs_trajectory_len(traj) } >= 1);
    unsafe { muhs_trajectory_free(traj) };

    let mut traj = ptr::null_mut();
    let s = unsafe {
        muhs_simulate(
            g,
            u.as_ptr(),
            rho.as_ptr(),
            0.0,
            1.0,
            -1.0,
            0.3,
            1,
            &mut traj,
        )
    };
    assert_eq!(s, MuhsStatus::InvalidArgument);
    assert!(traj.is_null());
    unsafe { muhs_grid_free(g) };
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/muhs.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "muhs_grid_new",
        "muhs_ainv",
        "muhs_simulate",
        "muhs_trajectory_free",
        "MUHS_STATUS_BLOW_UP",
        "typedef struct MuhsGrid MuhsGrid",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler found; skipped compiling the header");
        return;
    };
    assert!(status.success());
}
