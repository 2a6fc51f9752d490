#![no_main]

use hetnet_comp::runner::{ConfigFile, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = ConfigFile::parse(text) {
        let mut cfg = RunConfig::default();
        file.apply(&mut cfg);
        let _ = cfg.validate();
    }
});
