//! Serde adapters that keep rationals exact on the wire (`"p/q"` strings).

use std::str::FromStr;

use crate::matrix::Rational;

fn parse(s: &str) -> Result<Rational, String> {
    Rational::from_str(s).map_err(|e| format!("bad rational '{s}': {e}"))
}

pub mod rat {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::*;

    pub fn serialize<S: Serializer>(v: &Rational, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(de)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

pub mod rat_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Rational>, ser: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => ser.serialize_some(&r.to_string()),
            None => ser.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<Rational>, D::Error> {
        let s: Option<String> = Option::deserialize(de)?;
        s.map(|s| parse(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

pub mod rat_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq(v.iter().map(|r| r.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Rational>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(de)?;
        raw.iter()
            .map(|s| parse(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    use crate::matrix::frac;

    use super::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Probe {
        #[serde(with = "rat")]
        a: Rational,
        #[serde(with = "rat_opt")]
        b: Option<Rational>,
        #[serde(with = "rat_vec")]
        c: Vec<Rational>,
    }

    #[test]
    fn round_trips_and_stays_textual() {
        let p = Probe {
            a: frac(-7, 3),
            b: None,
            c: vec![frac(1, 2), frac(4, 2)],
        };
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"a":"-7/3","b":null,"c":["1/2","2"]}"#);
        let back: Probe = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }
}
