#![no_main]

use fme_cli::config::{load_config, Sources};
use fme_cli::grid::{apply, parse_axis, points};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(axes) = text.lines().map(parse_axis).collect::<Result<Vec<_>, _>>() else { return };
    let Ok(pts) = points(&axes) else { return };
    let (base, _) = load_config(&Sources { preset: Some("rb85-87"), ..Default::default() }).unwrap();
    for p in pts.iter().take(16) {
        if let Ok(cfg) = apply(&base, p) {
            cfg.to_protocol().expect("applied point converts");
        }
    }
});
