//! Serialization helpers and the schema version shared by every artifact.

pub const SCHEMA_VERSION: &str = "lamina-report/1";

/// Rationals as "p/q" strings.
pub mod rational {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn to_string(x: &BigRational) -> String {
        if x.denom() == &BigInt::from(1) {
            x.numer().to_string()
        } else {
            format!("{}/{}", x.numer(), x.denom())
        }
    }

    pub fn parse(s: &str) -> Option<BigRational> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d == BigInt::from(0) {
                return None;
            }
            return Some(BigRational::new(n, d));
        }
        if let Some((i, f)) = s.split_once('.') {
            let neg = i.starts_with('-');
            let digits = format!("{}{}", i.trim_start_matches('-'), f);
            let n: BigInt = digits.parse().ok()?;
            let d = num_traits::pow(BigInt::from(10), f.len());
            let v = BigRational::new(n, d);
            return Some(if neg { -v } else { v });
        }
        Some(BigRational::from_integer(s.parse().ok()?))
    }

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
    }
}
