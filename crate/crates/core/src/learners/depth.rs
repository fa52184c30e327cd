//! Serde form of an optional depth limit: an integer, or `"unlimited"`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Limit(usize),
    Word(String),
}

fn to_repr(d: Option<usize>) -> Repr {
    match d {
        Some(n) => Repr::Limit(n),
        None => Repr::Word("unlimited".into()),
    }
}

fn from_repr<E: serde::de::Error>(r: Repr) -> Result<Option<usize>, E> {
    match r {
        Repr::Limit(n) => Ok(Some(n)),
        Repr::Word(w) if w == "unlimited" => Ok(None),
        Repr::Word(w) => Err(E::custom(format!("expected a depth or \"unlimited\", got {w:?}"))),
    }
}

pub fn serialize<S: Serializer>(d: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
    to_repr(*d).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
    from_repr(Repr::deserialize(d)?)
}

pub mod list {
    use super::*;

    pub fn serialize<S: Serializer>(d: &[Option<usize>], s: S) -> Result<S::Ok, S::Error> {
        d.iter().map(|&x| to_repr(x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Option<usize>>, D::Error> {
        Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
    }
}
