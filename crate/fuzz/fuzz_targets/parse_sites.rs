#![no_main]

use asep_cli::parse::parse_sites;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sites) = parse_sites(text) {
        assert!(sites.windows(2).all(|w| w[0] < w[1]));
    }
});
