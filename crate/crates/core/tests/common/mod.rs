#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rangevol::cli_io::dispatch;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Arguments that regenerate `synthetic_bars.csv`.
pub const SYNTHETIC_SIMULATE: [&str; 13] = [
    "simulate",
    "--mu-s",
    "0.05",
    "--sigma",
    "0.3",
    "--f",
    "0.25",
    "--days",
    "150",
    "--steps-per-day",
    "2000",
    "--seed",
    "20100618",
];

/// Run the CLI in-process, returning (status, stdout, stderr).
pub fn run_cli<S: AsRef<str>>(args: &[S]) -> (i32, Vec<u8>, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("rangevol".to_string()).chain(args.iter().map(|a| a.as_ref().to_string()));
    let code = dispatch(argv, &mut out, &mut err);
    (code, out, String::from_utf8_lossy(&err).into_owned())
}

/// Quotes on the last weeks of `synthetic_bars.csv`, for two strikes expiring
/// on its final bar.
pub const SYNTHETIC_QUOTES: &str = "\
timestamp,expiry,strike,bid,ask
2000-07-13,2000-07-28,100,3.10,3.30
2000-07-14,2000-07-28,100,2.40,2.50
2000-07-17,2000-07-28,100,4.20,4.40
2000-07-18,2000-07-28,100,4.10,4.30
2000-07-19,2000-07-28,100,6.80,7.00
2000-07-20,2000-07-28,100,3.90,4.10
2000-07-28,2000-07-28,100,0.00,0.05
2000-07-13,2000-07-28,105,0.60,0.70
2000-07-14T11:15,2000-07-28,105,0.25,0.35
2000-07-17,2000-07-28,105,1.10,1.20
2000-07-18,2000-07-28,105,0.70,0.80
2000-07-19,2000-07-28,105,2.90,3.10
2000-07-24,2000-07-28,105,0.40,0.50
2000-07-28,2000-07-28,105,0.00,0.05
";
