#![no_main]

use libfuzzer_sys::fuzz_target;

// Domain files are the primary untrusted input surface: parse, and when a
// domain is accepted check that serialization round-trips bit-exactly and
// that the basic geometric queries hold their invariants without panicking.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(domain) = robin_lab::io::parse_domain(text) else { return };

    let written = robin_lab::io::write_domain(&domain);
    let reparsed = robin_lab::io::parse_domain(&written).expect("canonical output must parse");
    assert_eq!(written, robin_lab::io::write_domain(&reparsed), "round-trip not stable");

    // accepted domains must support the geometric queries
    let d = domain.diameter();
    assert!(d.is_finite() && d > 0.0);
    if domain.area() > 1e-9 {
        if let Ok((rho, c)) = domain.inradius_incenter() {
            assert!(rho > 0.0 && rho <= 0.5 * d + 1e-9);
            assert!(domain.contains(c, 1e-9));
        }
    }
});
