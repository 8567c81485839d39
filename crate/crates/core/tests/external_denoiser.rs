//! The framed-protocol bridge against the bundled reference endpoint.

use std::time::Duration;

use proxnest::denoiser::{Denoiser, ExternalDenoiser, GaussianSmoothingDenoiser};
use proxnest::{Error, ImageVector};

const ENDPOINT: &str = env!("CARGO_BIN_EXE_pndz-endpoint");

fn spawn(args: &[&str], timeout_ms: u64) -> ExternalDenoiser {
    let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    ExternalDenoiser::spawn(ENDPOINT, &args, 0.1, Duration::from_millis(timeout_ms)).unwrap()
}

fn image(shape: (usize, usize)) -> ImageVector {
    let n = shape.0 * shape.1;
    ImageVector::new((0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3).collect(), shape).unwrap()
}

#[test]
fn echo_returns_input() {
    let d = spawn(&["echo"], 5000);
    for _ in 0..3 {
        let x = image((4, 8));
        assert_eq!(d.apply(&x).unwrap(), x);
    }
}

#[test]
fn smoothing_endpoint_matches_in_process_bitwise() {
    let d = spawn(&["smoothing", "1.2", "8", "16"], 5000);
    let local = GaussianSmoothingDenoiser::new(1.2, 0.1).unwrap();
    let x = image((8, 16));
    let remote = d.apply(&x).unwrap();
    let here = local.apply(&x).unwrap();
    for (a, b) in remote.as_slice().iter().zip(here.as_slice()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn wrong_length_is_a_shape_error() {
    let d = spawn(&["wrong-length"], 5000);
    assert!(matches!(
        d.apply(&image((2, 2))),
        Err(Error::DenoiserShapeMismatch { expected: 4, found: 3 })
    ));
}

#[test]
fn non_finite_output_is_reported() {
    let d = spawn(&["nan"], 5000);
    assert!(matches!(d.apply(&image((2, 2))), Err(Error::DenoiserNonFinite { index: 0 })));
}

#[test]
fn slow_endpoint_times_out() {
    let d = spawn(&["sleep", "2000"], 100);
    assert!(matches!(d.apply(&image((2, 2))), Err(Error::DenoiserTimeout(_))));
    assert!(matches!(d.apply(&image((2, 2))), Err(Error::Protocol(_))));
}
