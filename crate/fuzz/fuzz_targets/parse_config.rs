#![no_main]

use asep_cli::parse::{parse_config, CONFIG_KEYS};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config(text) {
        for (key, _) in &cfg.entries {
            assert!(CONFIG_KEYS.contains(&key.as_str()));
        }
    }
});
