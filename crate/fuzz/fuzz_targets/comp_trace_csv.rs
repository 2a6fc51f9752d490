#![no_main]

use hetnet_comp::controller::{read_comp_trace, verify_cadence, write_comp_trace};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_comp_trace(data) {
        let _ = verify_cadence(&rows, 3);
        let mut out = Vec::new();
        write_comp_trace(&mut out, &rows).expect("rows that parsed can be written");
        assert_eq!(read_comp_trace(out.as_slice()).expect("written trace reads back"), rows);
    }
});
