#![no_main]

use fme_cli::config::load_config_text;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = load_config_text(text) {
        // a config that loads must convert
        cfg.to_protocol().expect("validated config converts");
    }
});
