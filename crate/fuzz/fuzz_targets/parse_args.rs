#![no_main]

use libfuzzer_sys::fuzz_target;

// argv is the input split on NUL bytes; parsing only, nothing executes
fuzz_target!(|data: &[u8]| {
    let argv: Vec<String> = String::from_utf8_lossy(data).split('\0').map(str::to_string).collect();
    let _ = relu_dc::cli::parse_args(&argv);
});
