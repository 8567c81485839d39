//! Prints the wavelet sparsity scale `n / ‖Ψ†x‖₁` of a synthetic truth image.

use proxnest::ops::{WaveletDictionary, WaveletFamily};
use proxnest_cli::simulate::blobs;

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let size = args.next().unwrap_or(32);
    let count = args.next().unwrap_or(4);
    let seed = args.next().unwrap_or(7) as u64;
    let truth = blobs((size, size), count, seed).expect("valid shape");
    let dict = WaveletDictionary::new(WaveletFamily::Daubechies6, 3, truth.shape()).expect("compatible shape");
    let l1: f64 = dict.analysis(&truth).expect("shape matches").iter().map(|c| c.abs()).sum();
    println!("mu = {}", truth.len() as f64 / l1);
}
