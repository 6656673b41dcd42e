#![no_main]

use libfuzzer_sys::fuzz_target;
use starisac::harness::ScenarioFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = ScenarioFile::from_json(text) else { return };
    if let Ok(cfg) = file.resolve() {
        // the resolved form must load back to the same scenario
        let again = ScenarioFile::from_json(&cfg.resolved.to_json()).expect("resolved scenario parses");
        assert_eq!(again, cfg.resolved);
        assert!(again.resolve().is_ok());
    }
});
