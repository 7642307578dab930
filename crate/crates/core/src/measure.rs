//! Finitely supported signed measures with exact weights.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::point::BerkPoint;
use crate::rational::{format_rat, Rat};
use crate::valuation::LogValue;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiscreteMeasure {
    atoms: BTreeMap<BerkPoint, Rat>,
}

impl DiscreteMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(pt: BerkPoint) -> Self {
        let mut m = Self::zero();
        m.add_atom(pt, Rat::from_integer(1.into()));
        m
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (BerkPoint, Rat)>) -> Self {
        let mut m = Self::zero();
        for (p, w) in atoms {
            m.add_atom(p, w);
        }
        m
    }

    /// Adds weight at a point, merging with an existing atom and dropping zeros.
    pub fn add_atom(&mut self, pt: BerkPoint, w: Rat) {
        if w.is_zero() {
            return;
        }
        let e = self.atoms.entry(pt).or_insert_with(Rat::zero);
        *e += w;
        if e.is_zero() {
            self.atoms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&BerkPoint, &Rat)> {
        self.atoms.iter()
    }

    pub fn weight(&self, pt: &BerkPoint) -> Rat {
        self.atoms.get(pt).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> Rat {
        self.atoms.values().sum()
    }

    pub fn scale(&self, k: &Rat) -> Self {
        Self::from_atoms(self.atoms.iter().map(|(p, w)| (p.clone(), w * k)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = self.clone();
        for (p, w) in &other.atoms {
            m.add_atom(p.clone(), w.clone());
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&Rat::from_integer((-1).into())))
    }

    /// Positive and negative parts.
    pub fn jordan(&self) -> (Self, Self) {
        let pos = self.atoms.iter().filter(|(_, w)| w > &&Rat::zero());
        let neg = self.atoms.iter().filter(|(_, w)| w < &&Rat::zero());
        (
            Self::from_atoms(pos.map(|(p, w)| (p.clone(), w.clone()))),
            Self::from_atoms(neg.map(|(p, w)| (p.clone(), w.clone()))),
        )
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.atoms.iter().map(|(p, w)| json!({"point": p.to_json(), "weight": format_rat(w)})).collect())
    }
}

/// `Σ w f(atom)`; fails when `f` is infinite on an atom.
pub fn integrate<F>(f: F, mu: &DiscreteMeasure) -> Result<Rat>
where
    F: Fn(&BerkPoint) -> Result<LogValue>,
{
    let mut acc = Rat::zero();
    for (p, w) in mu.atoms() {
        match f(p)? {
            LogValue::Finite(v) => acc += w * v,
            _ => return Err(Error::SingularIntegrand(p.to_string())),
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::log_diam_infinity;
    use crate::rational::{frac, int};
    use crate::valuation::FieldContext;

    #[test]
    fn merging_and_integration() {
        let ctx = FieldContext::new(3, 10).unwrap();
        let a = BerkPoint::disc(&int(0), int(-1), &ctx);
        let b = BerkPoint::disc(&int(0), int(-3), &ctx);
        let mu = DiscreteMeasure::from_atoms([(a.clone(), frac(1, 2)), (b, frac(1, 2))]);
        assert_eq!(integrate(log_diam_infinity, &mu), Ok(int(-2)));
        assert_eq!(integrate(log_diam_infinity, &DiscreteMeasure::zero()), Ok(int(0)));
        assert_eq!(integrate(log_diam_infinity, &DiscreteMeasure::dirac(BerkPoint::gauss())), Ok(int(0)));
        let typed = DiscreteMeasure::dirac(BerkPoint::type_i(int(1)));
        assert!(matches!(integrate(log_diam_infinity, &typed), Err(Error::SingularIntegrand(_))));

        let d = DiscreteMeasure::dirac(a.clone()).sub(&DiscreteMeasure::dirac(a));
        assert!(d.is_empty());
    }
}
