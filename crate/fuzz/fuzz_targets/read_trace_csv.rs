#![no_main]

use ffsched::harness::{read_trace_csv, summarize, trace_to_csv_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(trace) = read_trace_csv(data) {
        let _ = summarize(&trace);
        let text = trace_to_csv_string(&trace).expect("write");
        let again = read_trace_csv(text.as_bytes()).expect("re-read");
        assert_eq!(trace.records.len(), again.records.len());
    }
});
