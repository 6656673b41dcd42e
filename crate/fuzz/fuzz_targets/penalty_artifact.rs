#![no_main]

use libfuzzer_sys::fuzz_target;
use starisac::radar::PenaltyArtifact;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(art) = PenaltyArtifact::parse(text) {
        let back = PenaltyArtifact::parse(&art.to_text()).expect("written artifact parses");
        assert_eq!(back.to_text(), art.to_text());
        assert_eq!(back.key.file_name(), art.key.file_name());
    }
});
