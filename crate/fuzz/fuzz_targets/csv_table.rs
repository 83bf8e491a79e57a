#![no_main]

use libfuzzer_sys::fuzz_target;
use relu_dc::cli::parse_table;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = parse_table(data) {
        for name in &table.header {
            let _ = table.column(name);
        }
    }
});
