use std::fmt;

use thiserror::Error;

use crate::values::Value;

/// A resolved type. Every inhabitant set is finite.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SemType {
    Bool,
    /// Integers in `lo..=hi`.
    Int { lo: i64, hi: i64 },
    Set(Box<SemType>),
    Tuple(Vec<SemType>),
    Record(Vec<(String, SemType)>),
    Array(usize, Box<SemType>),
    /// Total map from the domain to the codomain.
    Map(Box<SemType>, Box<SemType>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("type has more values than can be counted")]
pub struct CardinalityOverflow;

impl SemType {
    /// `ℕ[n]`
    pub fn nat(n: i64) -> SemType {
        SemType::Int { lo: 0, hi: n }
    }

    /// The integer type used for results of arithmetic.
    pub fn any_int() -> SemType {
        SemType::Int {
            lo: i64::MIN,
            hi: i64::MAX,
        }
    }

    pub fn is_int(&self) -> bool {
        matches!(self, SemType::Int { .. })
    }

    pub fn is_bool(&self) -> bool {
        matches!(self, SemType::Bool)
    }

    /// Number of values of the type.
    pub fn cardinality(&self) -> Result<u128, CardinalityOverflow> {
        match self {
            SemType::Bool => Ok(2),
            SemType::Int { lo, hi } => {
                if hi < lo {
                    Ok(0)
                } else {
                    Ok((*hi as i128 - *lo as i128 + 1) as u128)
                }
            }
            SemType::Set(e) => {
                let n = e.cardinality()?;
                if n >= 127 {
                    return Err(CardinalityOverflow);
                }
                Ok(1u128 << n)
            }
            SemType::Tuple(ts) => ts
                .iter()
                .try_fold(1u128, |acc, t| acc.checked_mul(t.cardinality()?).ok_or(CardinalityOverflow)),
            SemType::Record(fs) => fs.iter().try_fold(1u128, |acc, (_, t)| {
                acc.checked_mul(t.cardinality()?).ok_or(CardinalityOverflow)
            }),
            SemType::Array(n, e) => checked_pow(e.cardinality()?, *n as u128),
            SemType::Map(d, c) => checked_pow(c.cardinality()?, d.cardinality()?),
        }
    }

    /// Same shape, ignoring integer bounds and array lengths; those are
    /// checked on values at run time.
    pub fn compatible(&self, other: &SemType) -> bool {
        match (self, other) {
            (SemType::Bool, SemType::Bool) => true,
            (SemType::Int { .. }, SemType::Int { .. }) => true,
            (SemType::Set(a), SemType::Set(b)) => a.compatible(b),
            (SemType::Tuple(a), SemType::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.compatible(y))
            }
            (SemType::Record(a), SemType::Record(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|((n, x), (m, y))| n == m && x.compatible(y))
            }
            (SemType::Array(_, a), SemType::Array(_, b)) => a.compatible(b),
            (SemType::Map(d1, c1), SemType::Map(d2, c2)) => d1.compatible(d2) && c1.compatible(c2),
            _ => false,
        }
    }

    /// Least type covering both; the operands must be compatible.
    pub fn join(&self, other: &SemType) -> SemType {
        match (self, other) {
            (SemType::Int { lo: a, hi: b }, SemType::Int { lo: c, hi: d }) => SemType::Int {
                lo: *a.min(c),
                hi: *b.max(d),
            },
            (SemType::Set(a), SemType::Set(b)) => SemType::Set(Box::new(a.join(b))),
            (SemType::Tuple(a), SemType::Tuple(b)) => {
                SemType::Tuple(a.iter().zip(b).map(|(x, y)| x.join(y)).collect())
            }
            (SemType::Record(a), SemType::Record(b)) => SemType::Record(
                a.iter()
                    .zip(b)
                    .map(|((n, x), (_, y))| (n.clone(), x.join(y)))
                    .collect(),
            ),
            (SemType::Array(n, a), SemType::Array(_, b)) => SemType::Array(*n, Box::new(a.join(b))),
            (SemType::Map(d1, c1), SemType::Map(d2, c2)) => {
                SemType::Map(Box::new(d1.join(d2)), Box::new(c1.join(c2)))
            }
            _ => self.clone(),
        }
    }

    /// Whether `v` is an inhabitant of this type.
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (SemType::Bool, Value::Bool(_)) => true,
            (SemType::Int { lo, hi }, Value::Int(i)) => lo <= i && i <= hi,
            (SemType::Set(e), Value::Set(items)) => items.iter().all(|x| e.contains(x)),
            (SemType::Tuple(ts), Value::Tuple(items)) => {
                ts.len() == items.len() && ts.iter().zip(items.iter()).all(|(t, x)| t.contains(x))
            }
            (SemType::Record(fs), Value::Record(items)) => {
                fs.len() == items.len()
                    && fs
                        .iter()
                        .zip(items.iter())
                        .all(|((n, t), (m, x))| n.as_str() == &**m && t.contains(x))
            }
            (SemType::Array(n, e), Value::Array(items)) => {
                *n == items.len() && items.iter().all(|x| e.contains(x))
            }
            (SemType::Map(d, c), Value::Map(entries)) => {
                d.cardinality().is_ok_and(|k| k == entries.len() as u128)
                    && entries.iter().all(|(k, x)| d.contains(k) && c.contains(x))
            }
            _ => false,
        }
    }

    /// Bound-free rendering used in operation signatures, e.g. `Set[Tuple[ℤ,ℤ]]`.
    pub fn signature(&self) -> String {
        match self {
            SemType::Bool => "Bool".into(),
            SemType::Int { .. } => "ℤ".into(),
            SemType::Set(e) => format!("Set[{}]", e.signature()),
            SemType::Tuple(ts) => format!(
                "Tuple[{}]",
                ts.iter().map(|t| t.signature()).collect::<Vec<_>>().join(",")
            ),
            SemType::Record(fs) => format!(
                "Record[{}]",
                fs.iter()
                    .map(|(n, t)| format!("{n}:{}", t.signature()))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            SemType::Array(_, e) => format!("Array[{}]", e.signature()),
            SemType::Map(d, c) => format!("Map[{},{}]", d.signature(), c.signature()),
        }
    }
}

fn checked_pow(base: u128, exp: u128) -> Result<u128, CardinalityOverflow> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base).ok_or(CardinalityOverflow)?;
        if acc == 0 {
            return Ok(0);
        }
    }
    Ok(acc)
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemType::Bool => write!(f, "Bool"),
            SemType::Int { lo, hi } if *lo == i64::MIN && *hi == i64::MAX => write!(f, "ℤ"),
            SemType::Int { lo, hi } => write!(f, "ℤ[{lo},{hi}]"),
            SemType::Set(e) => write!(f, "Set[{e}]"),
            SemType::Tuple(ts) => {
                write!(f, "Tuple[")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, "]")
            }
            SemType::Record(fs) => {
                write!(f, "Record[")?;
                for (i, (n, t)) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{n}:{t}")?;
                }
                write!(f, "]")
            }
            SemType::Array(n, e) => write!(f, "Array[{n},{e}]"),
            SemType::Map(d, c) => write!(f, "Map[{d},{c}]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(n: i64) -> SemType {
        SemType::Tuple(vec![SemType::nat(n), SemType::nat(n)])
    }

    #[test]
    fn cardinalities() {
        assert_eq!(SemType::nat(20).cardinality(), Ok(21));
        assert_eq!(SemType::Set(Box::new(pair(2))).cardinality(), Ok(512));
        let array = SemType::Array(3, Box::new(SemType::Int { lo: -2, hi: 2 }));
        let index = SemType::Int { lo: -3, hi: 3 };
        assert_eq!(SemType::Tuple(vec![array, index]).cardinality(), Ok(875));
        assert_eq!(
            SemType::Map(Box::new(SemType::Bool), Box::new(SemType::nat(2))).cardinality(),
            Ok(9)
        );
        assert_eq!(SemType::Array(0, Box::new(SemType::Bool)).cardinality(), Ok(1));
    }

    #[test]
    fn overflow_is_reported() {
        let big = SemType::Set(Box::new(SemType::nat(200)));
        assert_eq!(big.cardinality(), Err(CardinalityOverflow));
        assert_eq!(SemType::any_int().cardinality(), Ok(1u128 << 64));
        let huge = SemType::Tuple(vec![SemType::any_int(), SemType::any_int(), SemType::any_int()]);
        assert_eq!(huge.cardinality(), Err(CardinalityOverflow));
    }

    #[test]
    fn signatures() {
        assert_eq!(SemType::Set(Box::new(pair(2))).signature(), "Set[Tuple[ℤ,ℤ]]");
        assert_eq!(SemType::Array(3, Box::new(SemType::nat(1))).signature(), "Array[ℤ]");
    }
}
