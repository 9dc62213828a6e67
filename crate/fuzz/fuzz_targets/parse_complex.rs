#![no_main]

use libfuzzer_sys::fuzz_target;
use weakprobe::config::{format_complex, parse_complex};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(z) = parse_complex(text) {
        // anything accepted must survive a format/parse cycle
        if z.re.is_finite() && z.im.is_finite() {
            assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
    }
});
