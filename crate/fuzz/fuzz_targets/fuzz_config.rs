#![no_main]

use libfuzzer_sys::fuzz_target;

// Flat key=value config files: accepted pairs must survive a
// serialize/parse cycle unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(pairs) = robin_lab::io::parse_config(text) else { return };

    let mut canonical = String::new();
    for (k, v) in &pairs {
        canonical.push_str(k);
        canonical.push('=');
        canonical.push_str(v);
        canonical.push('\n');
    }
    let reparsed = robin_lab::io::parse_config(&canonical).expect("canonical config must parse");
    assert_eq!(pairs, reparsed, "config round-trip not stable");
});
