#![no_main]

use libfuzzer_sys::fuzz_target;
use weakprobe::io::{read_probe_csv, write_probe_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = read_probe_csv(data) {
        let mut out = Vec::new();
        write_probe_csv(&p, &mut out).unwrap();
        let q = read_probe_csv(out.as_slice()).unwrap();
        assert_eq!(p.values(), q.values());
    }
});
