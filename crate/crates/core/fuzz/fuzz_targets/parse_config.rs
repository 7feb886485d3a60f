#![no_main]

use libfuzzer_sys::fuzz_target;

// The TOML config parser and validator must never panic on arbitrary input.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = kksolve::config::RunConfig::parse(text) {
            let _ = cfg.build(true);
            let _ = cfg.to_toml();
        }
    }
});
