#![no_main]

use libfuzzer_sys::fuzz_target;
use relu_dc::convnets::Kernel;

fuzz_target!(|text: &str| {
    if let Ok(k) = text.parse::<Kernel>() {
        assert!(!k.is_empty());
        assert!(k.taps().iter().all(|t| t.is_finite()));
    }
});
