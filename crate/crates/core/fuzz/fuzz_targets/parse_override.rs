#![no_main]

use libfuzzer_sys::fuzz_target;

// KEY=VALUE override parsing applied to an empty document must never panic.
fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = std::str::from_utf8(data) {
        let mut doc = toml_value_empty();
        let _ = kksolve::config::apply_override(&mut doc, spec);
    }
});

fn toml_value_empty() -> toml::Value {
    "".parse().unwrap()
}
