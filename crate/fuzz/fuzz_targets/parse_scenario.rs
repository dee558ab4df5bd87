#![no_main]

use ffsched::harness::parse_scenario;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Anything accepted must also pass validation on its own.
    if let Ok(cfg) = parse_scenario(text) {
        cfg.validate().expect("parsed scenario validates");
    }
});
