#![no_main]

use libfuzzer_sys::fuzz_target;
use relu_dc::cli::RunManifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = RunManifest::from_json(data) {
        let text = m.to_json().expect("decoded manifest re-encodes");
        let again = RunManifest::from_json(text.as_bytes()).expect("encoded manifest decodes");
        assert_eq!(again.to_json().unwrap(), text);
    }
});
