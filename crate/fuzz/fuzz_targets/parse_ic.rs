#![no_main]

use asep_cli::parse::parse_ic;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_ic(text) {
        // Display is the canonical spelling and must parse back.
        assert_eq!(parse_ic(&spec.to_string()).as_ref(), Ok(&spec));
    }
});
