//! Canonical JSON emission helpers shared by all file-writing paths.
//!
//! Every file this project emits must be byte-identical across repeated runs
//! with the same configuration. Struct field order is fixed by the serde
//! derive, and floats are quantized to 9 significant decimal digits before
//! serialization so that last-ulp wobble from platform math differences
//! cannot leak into the output.

use serde_json::Value;

/// Round to 9 significant decimal digits, the fixed float precision of all
/// emitted files.
pub fn canon_f64(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.8e}").parse().expect("canonical float reparse")
}

/// Apply [`canon_f64`] to every number in a JSON value tree.
pub fn canonicalize_floats(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(canon) = serde_json::Number::from_f64(canon_f64(f)) {
                        *n = canon;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(canonicalize_floats),
        Value::Object(map) => map.values_mut().for_each(canonicalize_floats),
        _ => {}
    }
}

/// Serialize a JSON value in the canonical form used for all emitted files:
/// quantized floats, two-space indentation, trailing newline.
pub fn to_canonical_json(mut value: Value) -> String {
    canonicalize_floats(&mut value);
    let mut s = serde_json::to_string_pretty(&value).expect("json serialization");
    s.push('\n');
    s
}

/// FNV-1a 64-bit content hash, used to bind run files to the network file
/// they were produced from.
pub fn fnv1a64(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("fnv1a64:{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canon_is_idempotent() {
        for x in [0.1, 10.1, 27.200000000000003, 1.0 / 3.0, -42.125, 0.0] {
            assert_eq!(canon_f64(canon_f64(x)), canon_f64(x));
        }
    }

    #[test]
    fn canon_strips_accumulation_noise() {
        let mut t = 0.0;
        for _ in 0..101 {
            t += 0.1;
        }
        assert_eq!(canon_f64(t), 10.1);
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(fnv1a64(b""), "fnv1a64:cbf29ce484222325");
        assert_ne!(fnv1a64(b"a"), fnv1a64(b"b"));
    }
}
