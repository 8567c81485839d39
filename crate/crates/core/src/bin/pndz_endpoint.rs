//! Reference denoiser endpoint for the framed stdin/stdout protocol.
//!
//! Usage: `pndz-endpoint <mode>` with mode one of
//!
//! * `echo`
//! * `smoothing <width> <rows> <cols>`: periodic Gaussian blur
//! * `wrong-length`: drops the last value
//! * `nan`: replaces the first value with NaN
//! * `sleep <millis>`: echoes after a delay

use std::io::{self, BufReader, BufWriter};
use std::process::ExitCode;
use std::thread;
use std::time::Duration;

use proxnest::denoiser::{read_frame, write_frame, Denoiser, GaussianSmoothingDenoiser};
use proxnest::ImageVector;

enum Mode {
    Echo,
    Smoothing(GaussianSmoothingDenoiser, (usize, usize)),
    WrongLength,
    Nan,
    Sleep(Duration),
}

fn parse(args: &[String]) -> Result<Mode, String> {
    let num = |i: usize, what: &str| -> Result<f64, String> {
        args.get(i)
            .ok_or(format!("missing {what}"))?
            .parse::<f64>()
            .map_err(|e| format!("bad {what}: {e}"))
    };
    match args.first().map(String::as_str) {
        Some("echo") => Ok(Mode::Echo),
        Some("smoothing") => {
            let width = num(1, "width")?;
            let shape = (num(2, "rows")? as usize, num(3, "cols")? as usize);
            let d = GaussianSmoothingDenoiser::new(width, 1.0).map_err(|e| e.to_string())?;
            Ok(Mode::Smoothing(d, shape))
        }
        Some("wrong-length") => Ok(Mode::WrongLength),
        Some("nan") => Ok(Mode::Nan),
        Some("sleep") => Ok(Mode::Sleep(Duration::from_millis(num(1, "millis")? as u64))),
        Some(other) => Err(format!("unknown mode {other}")),
        None => Err("usage: pndz-endpoint <echo|smoothing W R C|wrong-length|nan|sleep MS>".into()),
    }
}

fn respond(mode: &Mode, mut values: Vec<f64>) -> Result<Vec<f64>, String> {
    match mode {
        Mode::Echo => {}
        Mode::Smoothing(d, shape) => {
            let x = ImageVector::new(values, *shape).map_err(|e| e.to_string())?;
            values = d.apply(&x).map_err(|e| e.to_string())?.into_vec();
        }
        Mode::WrongLength => {
            values.pop();
        }
        Mode::Nan => {
            if let Some(v) = values.first_mut() {
                *v = f64::NAN;
            }
        }
        Mode::Sleep(delay) => thread::sleep(*delay),
    }
    Ok(values)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode = match parse(&args) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("pndz-endpoint: {e}");
            return ExitCode::from(2);
        }
    };
    let mut input = BufReader::new(io::stdin().lock());
    let mut output = BufWriter::new(io::stdout().lock());
    loop {
        let values = match read_frame(&mut input) {
            Ok(Some(v)) => v,
            Ok(None) => return ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("pndz-endpoint: {e}");
                return ExitCode::FAILURE;
            }
        };
        let reply = match respond(&mode, values) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("pndz-endpoint: {e}");
                return ExitCode::FAILURE;
            }
        };
        if write_frame(&mut output, &reply).is_err() {
            return ExitCode::FAILURE;
        }
    }
}
