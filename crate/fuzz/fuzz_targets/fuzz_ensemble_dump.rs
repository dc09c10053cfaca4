#![no_main]

use bwretrieve::sensing::{decode_ensemble_dump, encode_ensemble_dump};
use libfuzzer_sys::fuzz_target;

// The dump decoder must never panic or over-allocate on arbitrary bytes, and
// anything it accepts must re-encode to the identical byte string.
fuzz_target!(|data: &[u8]| {
    if let Ok(ensemble) = decode_ensemble_dump(data) {
        assert_eq!(encode_ensemble_dump(&ensemble), data);
    }
});
