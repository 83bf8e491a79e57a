#![no_main]

use libfuzzer_sys::fuzz_target;
use relu_dc::cli::format_number;

fuzz_target!(|bits: u64| {
    let v = f64::from_bits(bits);
    let text = format_number(v);
    let back: f64 = text.parse().expect("formatted numbers parse");
    if v.is_nan() {
        assert!(back.is_nan());
    } else {
        assert_eq!(back.to_bits(), v.to_bits(), "{text}");
    }
});
