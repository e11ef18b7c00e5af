use serde::Serialize;
use sha2::{Digest, Sha256};

/// Short content hash of any serializable configuration, used to link
/// trajectories, reports, and manifests to the configuration that produced
/// them. serde_json emits object keys in a stable order, so the digest is
/// reproducible.
pub fn short_digest<T: Serialize>(value: &T) -> String {
    let text = serde_json::to_string(value).expect("digest serialization cannot fail");
    let hash = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in hash.iter().take(8) {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
