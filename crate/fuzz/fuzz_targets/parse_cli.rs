#![no_main]

use hetnet_comp::runner::parse_cli;
use libfuzzer_sys::fuzz_target;

// NUL-separated argument list
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let argv = std::iter::once("hetnet-comp").chain(text.split('\0'));
    let _ = parse_cli(argv);
});
