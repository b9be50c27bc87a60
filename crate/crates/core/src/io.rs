//! JSON helpers shared by the data types and the command line.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// A big integer as a decimal string.
pub mod bigint_string {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse().map_err(|_| serde::de::Error::custom(format!("not a decimal integer: {s:?}")))
    }
}

/// A map of big integers as decimal strings.
pub mod bigint_map {
    use std::collections::BTreeMap;

    use num_bigint::BigInt;
    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::graph::EdgeId;

    pub fn serialize<S: Serializer>(m: &BTreeMap<EdgeId, BigInt>, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(k, &v.to_str_radix(10))?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<EdgeId, BigInt>, D::Error> {
        let raw = BTreeMap::<EdgeId, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                v.trim()
                    .parse()
                    .map(|x| (k, x))
                    .map_err(|_| serde::de::Error::custom(format!("edge {k}: not a decimal integer: {v:?}")))
            })
            .collect()
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)? + "\n").map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
