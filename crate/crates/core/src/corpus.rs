//! Map files, corpus files and the built-in corpus.
//!
//! A map file is
//! `{"p": 3, "precision": 20, "numerator": ["0", "0", "3"], "denominator": ["1"]}`
//! with coefficients in ascending degree. A corpus file is
//! `{"maps": [{"name": "...", ...map fields...}, ...]}` with an optional
//! `"fault_injection": "multiplicity"` switch for negative controls.

use serde::{Deserialize, Serialize};

use crate::dynamics::Fault;
use crate::error::{Error, Result};
use crate::map::{Mobius, RationalMap};
use crate::poly::Poly;
use crate::rational::{format_rat, int, parse_rat, Rat};
use crate::valuation::FieldContext;

pub const DEFAULT_PRECISION: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub p: u64,
    #[serde(default = "default_precision")]
    pub precision: u32,
    pub numerator: Vec<String>,
    pub denominator: Vec<String>,
}

fn default_precision() -> u32 {
    DEFAULT_PRECISION
}

fn parse_coeffs(cs: &[String]) -> Result<Poly> {
    Ok(Poly::new(cs.iter().map(|c| parse_rat(c)).collect::<Result<Vec<_>>>()?))
}

impl MapSpec {
    pub fn from_map(phi: &RationalMap) -> Self {
        let coeffs = |q: &Poly| q.coeffs().iter().map(format_rat).collect();
        Self {
            p: phi.ctx().prime(),
            precision: phi.ctx().precision(),
            numerator: coeffs(phi.numerator()),
            denominator: coeffs(phi.denominator()),
        }
    }

    pub fn to_map(&self) -> Result<RationalMap> {
        let ctx = FieldContext::new(self.p, self.precision)?;
        RationalMap::new(parse_coeffs(&self.numerator)?, parse_coeffs(&self.denominator)?, &ctx)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    #[serde(flatten)]
    pub map: MapSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultInjection {
    Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corpus {
    pub maps: Vec<CorpusEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_injection: Option<FaultInjection>,
}

impl Corpus {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn fault(&self) -> Fault {
        match self.fault_injection {
            Some(FaultInjection::Multiplicity) => Fault::Multiplicity,
            None => Fault::None,
        }
    }

    /// Parsed maps in file order.
    pub fn load(&self) -> Result<Vec<(String, RationalMap)>> {
        if self.maps.is_empty() {
            return Err(Error::Empty("corpus has no maps"));
        }
        self.maps.iter().map(|e| Ok((e.name.clone(), e.map.to_map()?))).collect()
    }
}

/// `z + 1`, `p z` and `1/z`.
pub fn generators(ctx: &FieldContext) -> Vec<Mobius> {
    vec![
        Mobius::translation(int(1)),
        Mobius::scaling(int(ctx.prime() as i64)).expect("p is nonzero"),
        Mobius::inversion(),
    ]
}

/// Parses `a,b,c,d` as the Mobius map `(a z + b) / (c z + d)`.
pub fn parse_mobius(s: &str) -> Result<Mobius> {
    let parts: Vec<Rat> = s.split(',').map(|t| parse_rat(t.trim())).collect::<Result<_>>()?;
    match <[Rat; 4]>::try_from(parts) {
        Ok([a, b, c, d]) => Mobius::new(a, b, c, d),
        Err(v) => Err(Error::Parse(format!("a Mobius map needs 4 coefficients, got {}", v.len()))),
    }
}

fn entry(name: &str, p: u64, num: &[&str], den: &[&str]) -> CorpusEntry {
    let s = |v: &[&str]| v.iter().map(|c| c.to_string()).collect();
    CorpusEntry {
        name: name.into(),
        map: MapSpec { p, precision: DEFAULT_PRECISION, numerator: s(num), denominator: s(den) },
    }
}

/// Maps whose preimage trees, and those of their conjugates by [`generators`],
/// stay inside `Q_p` through level 4.
pub fn builtin() -> Corpus {
    Corpus {
        maps: vec![
            entry("z^2 over Q_2", 2, &["0", "0", "1"], &["1"]),
            entry("z^2 over Q_5", 5, &["0", "0", "1"], &["1"]),
            entry("2z^2 over Q_2", 2, &["0", "0", "2"], &["1"]),
            entry("3z^2 over Q_3", 3, &["0", "0", "3"], &["1"]),
            entry("5z^2 over Q_5", 5, &["0", "0", "5"], &["1"]),
            entry("z^2+3 over Q_3", 3, &["3", "0", "1"], &["1"]),
            entry("z^2+1 over Q_5", 5, &["1", "0", "1"], &["1"]),
            entry("z^2+z over Q_3", 3, &["0", "1", "1"], &["1"]),
            entry("z+z^2/3 over Q_3", 3, &["0", "1", "1/3"], &["1"]),
            entry("z+z^2/2 over Q_2", 2, &["0", "1", "1/2"], &["1"]),
            entry("z^2-1/9 over Q_3", 3, &["-1/9", "0", "1"], &["1"]),
            entry("z^2-1/25 over Q_5", 5, &["-1/25", "0", "1"], &["1"]),
            entry("z^2-1/64 over Q_2", 2, &["-1/64", "0", "1"], &["1"]),
            entry("1/z^2 over Q_3", 3, &["1"], &["0", "0", "1"]),
            entry("z^2/(z+1) over Q_5", 5, &["0", "0", "1"], &["1", "1"]),
            entry("z^2/(z^2-1/25) over Q_5", 5, &["0", "0", "1"], &["-1/25", "0", "1"]),
            entry("z^2+2z over Q_3", 3, &["0", "2", "1"], &["1"]),
        ],
        fault_injection: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_file_round_trip() {
        let file =
            MapSpec::parse(r#"{"p": 3, "precision": 10, "numerator": ["0", "0", "3"], "denominator": ["1"]}"#).unwrap();
        let phi = file.to_map().unwrap();
        assert_eq!(phi.degree(), 2);
        let canonical = MapSpec::from_map(&phi);
        assert_eq!(canonical.numerator, vec!["0/1", "0/1", "3/1"]);
        assert_eq!(canonical.to_map().unwrap(), phi);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(MapSpec::parse("{\"p\": 3}"), Err(Error::Parse(_))));
        let bad = MapSpec { p: 4, precision: 5, numerator: vec!["1".into()], denominator: vec!["1".into()] };
        assert_eq!(bad.to_map().unwrap_err(), Error::NotPrime(4));
        assert!(Corpus::parse(r#"{"maps": []}"#).unwrap().load().is_err());
        assert!(parse_mobius("1,2,3").is_err());
        assert!(parse_mobius("1,2,2,4").is_err());
    }

    #[test]
    fn builtin_parses() {
        let c = builtin();
        let maps = c.load().unwrap();
        assert!(maps.len() >= 10);
        let primes: std::collections::BTreeSet<u64> = maps.iter().map(|(_, m)| m.ctx().prime()).collect();
        assert_eq!(primes.into_iter().collect::<Vec<_>>(), vec![2, 3, 5]);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(Corpus::parse(&text).unwrap(), c);
        let with_fault = Corpus::parse(r#"{"maps": [], "fault_injection": "multiplicity"}"#).unwrap();
        assert_eq!(with_fault.fault(), Fault::Multiplicity);
    }
}
