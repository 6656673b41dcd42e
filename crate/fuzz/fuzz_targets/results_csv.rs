#![no_main]

use libfuzzer_sys::fuzz_target;
use starisac::harness::MetricsRecord;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rec) = MetricsRecord::from_csv(text) {
        assert!(!rec.is_empty());
        let csv = rec.to_csv().expect("parsed rows serialize");
        let back = MetricsRecord::from_csv(&csv).expect("written rows parse");
        assert_eq!(back.len(), rec.len());
        assert_eq!(back.to_csv().unwrap(), csv);
    }
});
