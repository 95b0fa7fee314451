//! Canonical JSON: sorted object keys, no insignificant whitespace, binary
//! as unpadded base64url.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use serde_json::{Map, Value};

pub fn b64(bytes: &[u8]) -> Value {
    Value::String(URL_SAFE_NO_PAD.encode(bytes))
}

pub fn write_canonical(value: &Value, out: &mut Vec<u8>) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push(b'{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_string(k, out);
                out.push(b':');
                write_canonical(&map[k], out);
            }
            out.push(b'}');
        }
        Value::Array(items) => {
            out.push(b'[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_canonical(v, out);
            }
            out.push(b']');
        }
        Value::String(s) => write_string(s, out),
        Value::Number(n) => out.extend_from_slice(n.to_string().as_bytes()),
        Value::Bool(b) => out.extend_from_slice(if *b { b"true" } else { b"false" }),
        Value::Null => out.extend_from_slice(b"null"),
    }
}

fn write_string(s: &str, out: &mut Vec<u8>) {
    let escaped = serde_json::to_string(s).expect("strings always serialize");
    out.extend_from_slice(escaped.as_bytes());
}

pub fn to_canonical_bytes(value: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    write_canonical(value, &mut out);
    out
}

/// Field access over a JSON object with path-aware error messages.
pub struct Fields<'a> {
    pub path: &'a str,
    pub map: &'a Map<String, Value>,
}

pub type FieldResult<T> = Result<T, String>;

impl<'a> Fields<'a> {
    pub fn of(path: &'a str, value: &'a Value) -> FieldResult<Self> {
        match value {
            Value::Object(map) => Ok(Fields { path, map }),
            _ => Err(alloc::format!("{path}: expected an object")),
        }
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> FieldResult<()> {
        match self.map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(alloc::format!("{}: unexpected field `{k}`", self.path)),
            None => Ok(()),
        }
    }

    pub fn get(&self, key: &str) -> FieldResult<&'a Value> {
        self.map
            .get(key)
            .ok_or_else(|| alloc::format!("{}: missing field `{key}`", self.path))
    }

    pub fn opt(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }

    pub fn u64(&self, key: &str) -> FieldResult<u64> {
        self.get(key)?
            .as_u64()
            .ok_or_else(|| alloc::format!("{}: `{key}` must be an unsigned integer", self.path))
    }

    pub fn str(&self, key: &str) -> FieldResult<&'a str> {
        self.get(key)?
            .as_str()
            .ok_or_else(|| alloc::format!("{}: `{key}` must be a string", self.path))
    }

    pub fn bytes(&self, key: &str) -> FieldResult<Vec<u8>> {
        decode_b64(self.str(key)?).map_err(|e| alloc::format!("{}: `{key}` {e}", self.path))
    }

    pub fn array<const N: usize>(&self, key: &str) -> FieldResult<[u8; N]> {
        let v = self.bytes(key)?;
        v.try_into()
            .map_err(|_| alloc::format!("{}: `{key}` must be {N} bytes", self.path))
    }
}

pub fn decode_b64(s: &str) -> Result<Vec<u8>, &'static str> {
    URL_SAFE_NO_PAD
        .decode(s)
        .map_err(|_| "is not unpadded base64url")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_compact() {
        let v = json!({"b": 1, "a": {"d": [1, 2], "c": "x\"y"}, "e": null});
        assert_eq!(
            to_canonical_bytes(&v),
            br#"{"a":{"c":"x\"y","d":[1,2]},"b":1,"e":null}"#
        );
    }

    #[test]
    fn base64url_round_trip() {
        let Value::String(s) = b64(&[0xfb, 0xff]) else { unreachable!() };
        assert_eq!(s, "-_8");
        assert_eq!(decode_b64(&s).unwrap(), [0xfb, 0xff]);
        assert!(decode_b64("-_8=").is_err());
    }
}
