use serde::Serialize;
use sha2::{Digest, Sha256};

/// Stable short hash of a serializable configuration: the first 16 hex digits
/// of the SHA-256 of its compact JSON encoding.
pub fn config_digest<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration serializes to JSON");
    hex::encode(&Sha256::digest(&bytes)[..8])
}
