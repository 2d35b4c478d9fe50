#![no_main]

use asep_cli::parse::parse_range;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((lo, hi)) = parse_range(text) {
        assert!(lo <= hi);
        let again = if lo == hi { lo.to_string() } else { format!("{lo}..{hi}") };
        assert_eq!(parse_range(&again), Ok((lo, hi)));
    }
});
