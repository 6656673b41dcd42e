#![no_main]

use libfuzzer_sys::fuzz_target;
use num_complex::Complex64;
use starisac::codebook::{build_codebooks, ColumnOrder};
use starisac::comm::{ml_decode_slot, UserSlotObservation};

// Layout: [log2 M][b][side][L] then little-endian f32 (re, im) pairs, row-major M × L.
fuzz_target!(|data: &[u8]| {
    if data.len() < 4 {
        return;
    }
    let m = 1usize << (1 + data[0] % 5);
    let b = u32::from(data[1]) % (m.trailing_zeros());
    let reflective = data[2] & 1 == 1;
    let taps = 1 + usize::from(data[3] % 16);
    let Ok(books) = build_codebooks(m, b, ColumnOrder::ReversedTr) else { return };
    let book = if reflective { &books.reflective } else { &books.transmissive };

    let mut values = data[4..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])));
    let samples: Vec<Complex64> = (0..m * taps)
        .map(|_| Complex64::new(values.next().unwrap_or(0.0), values.next().unwrap_or(0.0)))
        .collect();
    let y = UserSlotObservation::from_row_major(m, taps, samples).expect("dimensions match");
    let decoded = ml_decode_slot(&y, book).expect("well-formed slot decodes");
    assert!(decoded.index < book.len());
    assert_eq!(decoded.bits, book.bits_of(decoded.index));
});
