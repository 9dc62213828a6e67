#![no_main]

use libfuzzer_sys::fuzz_target;
use weakprobe::config::KernelSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = KernelSpec::from_json(text) {
            let _ = spec.kernel();
        }
    }
});
