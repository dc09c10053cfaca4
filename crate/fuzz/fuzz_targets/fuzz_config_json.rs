#![no_main]

use bwretrieve::harness::HarnessConfig;
use libfuzzer_sys::fuzz_target;

// The config loader must reject arbitrary JSON gracefully: no panic in the
// deserializer and no panic in the follow-up validation pass.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = serde_json::from_str::<HarnessConfig>(text) {
            let _ = cfg.validate();
        }
    }
});
