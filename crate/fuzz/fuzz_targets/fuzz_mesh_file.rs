#![no_main]

use libfuzzer_sys::fuzz_target;

// Mesh files carry node/triangle/boundary records with cross-referencing
// indices; the parser must validate all of it (positive areas, a single
// closed boundary loop, outward normals) or reject, never panic.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(mesh) = robin_lab::io::parse_mesh(text) else { return };

    let written = robin_lab::io::write_mesh(&mesh);
    let reparsed = robin_lab::io::parse_mesh(&written).expect("canonical output must parse");
    assert_eq!(written, robin_lab::io::write_mesh(&reparsed), "round-trip not stable");

    // accepted meshes satisfy the structural invariants
    mesh.validate().expect("parsed mesh must validate");
    assert!(mesh.total_area() > 0.0);
});
