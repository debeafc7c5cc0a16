//! Interchangeable permanent evaluators behind one trait object registry.
//!
//! The three general kernels (expansion, inclusion-exclusion trace, Gray-code
//! float) accept any square rational matrix up to their order guard. The
//! cycle-product evaluator is different in kind: it scores the complement
//! permanent `per(I - A)` directly from the cycle structure of a functional
//! digraph and has no sensible reading as a plain permanent, so it rejects
//! [`PermanentStrategy::permanent`] calls instead of guessing.

use serde::{Deserialize, Serialize};

use crate::cycles::per_via_cycles;
use crate::error::{Error, Result};
use crate::matrix::{Matrix, Rational};
use crate::permanent::{
    permanent_gray, permanent_naive, permanent_ryser, FloatMatrix, OrderGuards,
};

/// Outcome of one strategy evaluation. Exact kernels report rationals; the
/// Gray-code kernel reports the float it actually computed rather than a
/// rational dressed up as exact.
///
/// On the wire this is `{"kind": "exact", "value": "p/q"}` or
/// `{"kind": "approximate", "value": f}`; rationals stay strings so no
/// precision is lost in JSON.
#[derive(Debug, Clone, PartialEq)]
pub enum PermanentValue {
    Exact(Rational),
    Approximate(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
enum PermanentValueWire {
    Exact(String),
    Approximate(f64),
}

impl Serialize for PermanentValue {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let wire = match self {
            PermanentValue::Exact(v) => PermanentValueWire::Exact(v.to_string()),
            PermanentValue::Approximate(v) => PermanentValueWire::Approximate(*v),
        };
        wire.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for PermanentValue {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use std::str::FromStr;
        match PermanentValueWire::deserialize(de)? {
            PermanentValueWire::Exact(s) => Rational::from_str(&s)
                .map(PermanentValue::Exact)
                .map_err(|e| serde::de::Error::custom(format!("bad rational '{s}': {e}"))),
            PermanentValueWire::Approximate(v) => Ok(PermanentValue::Approximate(v)),
        }
    }
}

impl PermanentValue {
    /// Float view of either variant, for tolerance comparisons.
    pub fn as_f64(&self) -> f64 {
        match self {
            PermanentValue::Exact(v) => {
                use num::ToPrimitive;
                v.to_f64().unwrap_or(f64::NAN)
            }
            PermanentValue::Approximate(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            PermanentValue::Exact(v) => Some(v),
            PermanentValue::Approximate(_) => None,
        }
    }
}

/// A permanent evaluator that can be swapped at the call site.
pub trait PermanentStrategy: Send + Sync {
    /// Stable lookup key, also the CLI `--method` value.
    fn name(&self) -> &'static str;

    /// One-line human description for listings.
    fn description(&self) -> &'static str;

    /// Largest order the strategy accepts.
    fn max_order(&self) -> usize;

    /// `per(a)`.
    fn permanent(&self, a: &Matrix) -> Result<PermanentValue>;

    /// `per(I - a)`, the lab objective. Strategies with structure-specific
    /// kernels override this; the default routes through [`Self::permanent`].
    fn complement_permanent(&self, a: &Matrix) -> Result<PermanentValue> {
        self.permanent(&a.i_minus())
    }
}

struct NaiveStrategy {
    guards: OrderGuards,
}

impl PermanentStrategy for NaiveStrategy {
    fn name(&self) -> &'static str {
        "naive"
    }

    fn description(&self) -> &'static str {
        "exact permutation expansion; the reference oracle"
    }

    fn max_order(&self) -> usize {
        self.guards.naive_max
    }

    fn permanent(&self, a: &Matrix) -> Result<PermanentValue> {
        Ok(PermanentValue::Exact(permanent_naive(a)?))
    }
}

struct RyserStrategy {
    guards: OrderGuards,
}

impl PermanentStrategy for RyserStrategy {
    fn name(&self) -> &'static str {
        "ryser"
    }

    fn description(&self) -> &'static str {
        "exact inclusion-exclusion over column subsets in trace form"
    }

    fn max_order(&self) -> usize {
        self.guards.ryser_max
    }

    fn permanent(&self, a: &Matrix) -> Result<PermanentValue> {
        Ok(PermanentValue::Exact(permanent_ryser(a)?.total))
    }
}

struct GrayStrategy {
    guards: OrderGuards,
}

impl PermanentStrategy for GrayStrategy {
    fn name(&self) -> &'static str {
        "gray"
    }

    fn description(&self) -> &'static str {
        "floating-point Ryser with Gray-code subset updates"
    }

    fn max_order(&self) -> usize {
        self.guards.gray_max
    }

    fn permanent(&self, a: &Matrix) -> Result<PermanentValue> {
        let float = FloatMatrix::from_exact(a);
        float.validate_finite()?;
        Ok(PermanentValue::Approximate(permanent_gray(&float)?))
    }
}

struct CycleStrategy;

impl PermanentStrategy for CycleStrategy {
    fn name(&self) -> &'static str {
        "cycles"
    }

    fn description(&self) -> &'static str {
        "exact complement permanent via the cycle product, functional digraphs only"
    }

    fn max_order(&self) -> usize {
        usize::MAX
    }

    fn permanent(&self, _a: &Matrix) -> Result<PermanentValue> {
        Err(Error::Precondition {
            op: "cycles",
            detail: "the cycle product evaluates per(I - A) only; pass --complement".into(),
        })
    }

    fn complement_permanent(&self, a: &Matrix) -> Result<PermanentValue> {
        Ok(PermanentValue::Exact(per_via_cycles(a)?))
    }
}

/// Name-indexed collection of evaluators.
pub struct StrategyRegistry {
    entries: Vec<Box<dyn PermanentStrategy>>,
}

impl StrategyRegistry {
    /// Registry with the four built-in evaluators at default order guards.
    pub fn with_builtins() -> Self {
        StrategyRegistry {
            entries: vec![
                Box::new(NaiveStrategy { guards: OrderGuards::default() }),
                Box::new(RyserStrategy { guards: OrderGuards::default() }),
                Box::new(GrayStrategy { guards: OrderGuards::default() }),
                Box::new(CycleStrategy),
            ],
        }
    }

    /// Adds a strategy, replacing any existing one with the same name.
    pub fn register(&mut self, strategy: Box<dyn PermanentStrategy>) {
        self.entries.retain(|e| e.name() != strategy.name());
        self.entries.push(strategy);
    }

    pub fn get(&self, name: &str) -> Result<&dyn PermanentStrategy> {
        self.entries
            .iter()
            .map(|e| e.as_ref())
            .find(|e| e.name() == name)
            .ok_or_else(|| {
                Error::UnknownStrategy(format!("{name} (known: {})", self.names().join(", ")))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn PermanentStrategy> {
        self.entries.iter().map(|e| e.as_ref())
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::construct_extremal;
    use crate::matrix::{frac, whole};

    fn sample() -> Matrix {
        Matrix::from_rows(vec![
            vec![whole(0), whole(1), whole(0), whole(0)],
            vec![whole(1), whole(0), whole(0), whole(0)],
            vec![whole(0), whole(0), whole(0), frac(1, 2)],
            vec![whole(0), whole(0), frac(1, 2), whole(0)],
        ])
        .unwrap()
    }

    #[test]
    fn builtin_names_are_stable() {
        let registry = StrategyRegistry::with_builtins();
        assert_eq!(registry.names(), vec!["naive", "ryser", "gray", "cycles"]);
    }

    #[test]
    fn unknown_names_list_the_alternatives() {
        let registry = StrategyRegistry::with_builtins();
        let text = match registry.get("sinkhorn") {
            Ok(_) => panic!("lookup should fail"),
            Err(err) => err.to_string(),
        };
        assert!(text.contains("sinkhorn") && text.contains("naive"));
    }

    #[test]
    fn exact_strategies_agree_on_the_block_example() {
        let registry = StrategyRegistry::with_builtins();
        let a = sample();
        let reference = registry.get("naive").unwrap().permanent(&a).unwrap();
        let ryser = registry.get("ryser").unwrap().permanent(&a).unwrap();
        assert_eq!(reference, ryser);
        assert_eq!(reference.exact().unwrap(), &frac(1, 4));
    }

    #[test]
    fn complement_permanents_agree_across_all_four() {
        let registry = StrategyRegistry::with_builtins();
        let a = construct_extremal(9, &frac(5, 1)).unwrap();
        let expected = whole(5);
        for strategy in registry.iter() {
            let value = strategy.complement_permanent(&a).unwrap();
            match value {
                PermanentValue::Exact(v) => assert_eq!(v, expected, "{}", strategy.name()),
                PermanentValue::Approximate(v) => {
                    assert!((v - 5.0).abs() < 1e-9, "{}: {v}", strategy.name())
                }
            }
        }
    }

    #[test]
    fn cycles_rejects_plain_permanent_calls() {
        let registry = StrategyRegistry::with_builtins();
        let err = registry.get("cycles").unwrap().permanent(&sample());
        assert!(err.is_err());
    }

    #[test]
    fn registration_replaces_by_name() {
        struct Stub;
        impl PermanentStrategy for Stub {
            fn name(&self) -> &'static str {
                "naive"
            }
            fn description(&self) -> &'static str {
                "stub"
            }
            fn max_order(&self) -> usize {
                0
            }
            fn permanent(&self, _a: &Matrix) -> Result<PermanentValue> {
                Ok(PermanentValue::Approximate(0.0))
            }
        }
        let mut registry = StrategyRegistry::with_builtins();
        registry.register(Box::new(Stub));
        assert_eq!(registry.names().len(), 4);
        assert_eq!(registry.get("naive").unwrap().description(), "stub");
    }
}
