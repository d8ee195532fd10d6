#![no_main]

use fme_cli::config::{load_config, Sources};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let overrides: Vec<String> = text.lines().map(str::to_owned).collect();
    if let Ok((cfg, _)) = load_config(&Sources { preset: Some("rb85-87"), file: None, overrides: &overrides }) {
        cfg.to_protocol().expect("validated config converts");
    }
});
