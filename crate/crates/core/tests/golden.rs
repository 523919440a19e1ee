//! Cross-read of a committed snapshot file.

use std::path::PathBuf;

use cylns_core::io::{decode_snapshot, encode_snapshot};
use cylns_core::{make_grid, MeridianScalar, ModalVectorField};

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden.snap")
}

/// Closed-form field on an 8×8 grid with K = 1; every coefficient is a
/// short dyadic-friendly expression so the bytes do not depend on libm.
fn golden_field() -> ModalVectorField {
    let g = make_grid(8, 8, 2.0, 1.0).unwrap();
    let mut u = ModalVectorField::zeros(&g, 1);
    *u.r.cos_mut(0) = MeridianScalar::from_fn(&g, |r, z| r * (1.0 - z));
    *u.theta.sin_mut(1) = MeridianScalar::from_fn(&g, |r, z| r * r + 0.5 * z);
    *u.z.cos_mut(1) = MeridianScalar::from_fn(&g, |r, z| -r - z * z);
    *u.z.sin_mut(1) = MeridianScalar::from_fn(&g, |_, z| 0.25 * z);
    u
}

#[test]
fn golden_snapshot_cross_reads() {
    let path = golden_path();
    if std::env::var_os("CYLNS_REGEN_GOLDEN").is_some() {
        std::fs::write(&path, encode_snapshot(&golden_field(), 0.125)).unwrap();
    }
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 44 + 3 * 3 * 64 * 8 + 8);
    assert_eq!(
        u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap()),
        GOLDEN_CHECKSUM
    );
    let snap = decode_snapshot(&bytes).unwrap();
    assert_eq!(snap.time, 0.125);
    assert_eq!(snap.field, golden_field());
    assert_eq!(encode_snapshot(&snap.field, snap.time), bytes);
}

const GOLDEN_CHECKSUM: u64 = 15815482033645526391;
