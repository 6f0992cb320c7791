//! Closed semantic values, their canonical order, enumeration of type
//! domains, and the textual value syntax used in transcripts.

mod enumerate;
mod lazy;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

pub use enumerate::{enumerate_type, materialize, TypeCursor};
pub use lazy::LazySeq;

/// A closed value.
///
/// Sets are kept sorted and duplicate-free under [`Ord`], so equal sets are
/// structurally equal. Map entries are sorted by key and cover the whole
/// domain type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Set(Arc<Vec<Value>>),
    Tuple(Arc<Vec<Value>>),
    Record(Arc<Vec<(Arc<str>, Value)>>),
    Array(Arc<Vec<Value>>),
    Map(Arc<Vec<(Value, Value)>>),
}

impl Value {
    /// Builds a set from elements in any order, with duplicates.
    pub fn set_from(mut items: Vec<Value>) -> Value {
        items.sort();
        items.dedup();
        Value::Set(Arc::new(items))
    }

    pub fn empty_set() -> Value {
        Value::Set(Arc::new(Vec::new()))
    }

    pub fn tuple(items: Vec<Value>) -> Value {
        Value::Tuple(Arc::new(items))
    }

    pub fn array(items: Vec<Value>) -> Value {
        Value::Array(Arc::new(items))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&[Value]> {
        match self {
            Value::Set(items) => Some(items),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Bool(_) => 0,
            Value::Int(_) => 1,
            Value::Set(_) => 2,
            Value::Tuple(_) => 3,
            Value::Record(_) => 4,
            Value::Array(_) => 5,
            Value::Map(_) => 6,
        }
    }
}

/// Three-way canonical comparison.
pub fn compare_values(a: &Value, b: &Value) -> Ordering {
    a.cmp(b)
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            // smaller sets first, then lexicographic over the sorted elements
            (Value::Set(a), Value::Set(b)) => a.len().cmp(&b.len()).then_with(|| a.cmp(b)),
            (Value::Tuple(a), Value::Tuple(b)) | (Value::Array(a), Value::Array(b)) => a.cmp(b),
            (Value::Record(a), Value::Record(b)) => a.cmp(b),
            (Value::Map(a), Value::Map(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sorted-slice set algebra.
pub mod setops {
    use super::Value;
    use std::cmp::Ordering;

    pub fn contains(set: &[Value], x: &Value) -> bool {
        set.binary_search(x).is_ok()
    }

    pub fn is_subset(a: &[Value], b: &[Value]) -> bool {
        if a.len() > b.len() {
            return false;
        }
        let mut j = 0;
        for x in a {
            loop {
                if j == b.len() {
                    return false;
                }
                match b[j].cmp(x) {
                    Ordering::Less => j += 1,
                    Ordering::Equal => {
                        j += 1;
                        break;
                    }
                    Ordering::Greater => return false,
                }
            }
        }
        true
    }

    pub fn union(a: &[Value], b: &[Value]) -> Vec<Value> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push(a[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out
    }

    pub fn intersection(a: &[Value], b: &[Value]) -> Vec<Value> {
        a.iter().filter(|x| contains(b, x)).cloned().collect()
    }

    pub fn difference(a: &[Value], b: &[Value]) -> Vec<Value> {
        a.iter().filter(|x| !contains(b, x)).cloned().collect()
    }
}

fn write_list<'a>(
    f: &mut fmt::Formatter<'_>,
    open: &str,
    items: impl Iterator<Item = &'a Value>,
    close: &str,
) -> fmt::Result {
    f.write_str(open)?;
    for (i, v) in items.enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{v}")?;
    }
    f.write_str(close)
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Set(items) => write_list(f, "{", items.iter(), "}"),
            Value::Tuple(items) | Value::Array(items) => write_list(f, "[", items.iter(), "]"),
            Value::Record(fields) => {
                f.write_str("[")?;
                for (i, (n, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{n}:{v}")?;
                }
                f.write_str("]")
            }
            Value::Map(entries) => {
                f.write_str("[")?;
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}:{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// The user-visible rendering of a value.
pub fn format_value(v: &Value) -> String {
    v.to_string()
}

/// Comma-separated rendering of an argument list.
pub fn format_args(args: &[Value]) -> String {
    args.iter().map(format_value).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(i: i64) -> Value {
        Value::Int(i)
    }

    fn pair(a: i64, b: i64) -> Value {
        Value::tuple(vec![int(a), int(b)])
    }

    #[test]
    fn comparisons() {
        assert_eq!(compare_values(&int(1), &int(2)), Ordering::Less);
        assert_eq!(
            compare_values(&Value::empty_set(), &Value::set_from(vec![int(0)])),
            Ordering::Less
        );
        assert_eq!(
            compare_values(&Value::set_from(vec![int(5)]), &Value::set_from(vec![int(0), int(1)])),
            Ordering::Less
        );
        assert_eq!(compare_values(&pair(1, 0), &pair(0, 2)), Ordering::Greater);
    }

    #[test]
    fn formatting() {
        assert_eq!(format_value(&Value::array(vec![int(-2), int(0), int(0)])), "[-2,0,0]");
        assert_eq!(
            format_value(&Value::set_from(vec![pair(1, 0), pair(0, 1)])),
            "{[0,1],[1,0]}"
        );
        assert_eq!(format_value(&Value::empty_set()), "{}");
        assert_eq!(format_value(&Value::Bool(true)), "true");
        let m = Value::Map(Arc::new(vec![(Value::Bool(false), int(1)), (Value::Bool(true), int(2))]));
        assert_eq!(format_value(&m), "[false:1,true:2]");
    }

    #[test]
    fn set_algebra() {
        let a = [int(1), int(3), int(5)];
        let b = [int(3), int(4)];
        assert_eq!(setops::union(&a, &b), vec![int(1), int(3), int(4), int(5)]);
        assert_eq!(setops::intersection(&a, &b), vec![int(3)]);
        assert_eq!(setops::difference(&a, &b), vec![int(1), int(5)]);
        assert!(setops::is_subset(&[int(3)], &a));
        assert!(!setops::is_subset(&b, &a));
        assert!(setops::is_subset(&[], &[]));
    }

    proptest::proptest! {
        #[test]
        fn canonical_sets(mut xs in proptest::collection::vec(0i64..10, 0..12), seed in 0u64..1000) {
            let a = Value::set_from(xs.iter().copied().map(Value::Int).collect());
            // any permutation, with duplicates, yields the same value
            let n = xs.len().max(1);
            xs.rotate_left((seed as usize) % n);
            xs.reverse();
            let b = Value::set_from(xs.into_iter().map(Value::Int).collect());
            proptest::prop_assert_eq!(a, b);
        }
    }
}
