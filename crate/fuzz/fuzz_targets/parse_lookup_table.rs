#![no_main]

use ffsched::fuzzy::{LookupTable, TableOrigin};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = LookupTable::parse(text, TableOrigin::Golden) {
        let again = LookupTable::parse(&table.to_text(), TableOrigin::Golden).expect("re-parse");
        assert_eq!(table.cells(), again.cells());
    }
});
