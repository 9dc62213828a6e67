#![no_main]

use libfuzzer_sys::fuzz_target;
use weakprobe::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = RunConfig::from_json(text) {
            let _ = cfg.mu_tilde();
            let _ = cfg.kernel.as_ref().map(|k| k.kernel());
        }
    }
});
