#![no_main]

use libfuzzer_sys::fuzz_target;
use weakprobe::io::{read_spectrum_csv, write_spectrum_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(amps) = read_spectrum_csv(data) {
        let mut out = Vec::new();
        write_spectrum_csv(&amps, &mut out).unwrap();
        assert_eq!(read_spectrum_csv(out.as_slice()).unwrap(), amps);
    }
});
