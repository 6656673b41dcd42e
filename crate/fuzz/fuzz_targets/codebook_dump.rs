#![no_main]

use libfuzzer_sys::fuzz_target;
use starisac::codebook::Codebook;
use starisac::geometry::HalfSpace;

fuzz_target!(|data: &[u8]| {
    let Some((&first, rest)) = data.split_first() else { return };
    let side = if first & 1 == 0 { HalfSpace::Transmissive } else { HalfSpace::Reflective };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(book) = Codebook::from_text(side, text) {
        assert_eq!(book.len(), 1 << book.bits());
        let back = Codebook::from_text(side, &book.to_text()).expect("dump parses");
        assert_eq!(back, book);
    }
});
