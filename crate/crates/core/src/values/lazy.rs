use std::sync::Arc;

type Step<T> = dyn Fn() -> Option<(T, LazySeq<T>)> + Send + Sync;

/// A demand-driven, purely functional sequence: forcing it yields either the
/// end or a head together with the rest. Forcing the same sequence twice
/// produces the same elements.
pub struct LazySeq<T> {
    step: Arc<Step<T>>,
}

impl<T> Clone for LazySeq<T> {
    fn clone(&self) -> Self {
        LazySeq {
            step: self.step.clone(),
        }
    }
}

impl<T: Clone + Send + Sync + 'static> LazySeq<T> {
    pub fn new(step: impl Fn() -> Option<(T, LazySeq<T>)> + Send + Sync + 'static) -> Self {
        LazySeq { step: Arc::new(step) }
    }

    pub fn empty() -> Self {
        LazySeq::new(|| None)
    }

    pub fn single(v: T) -> Self {
        LazySeq::from_vec(vec![v])
    }

    /// A sequence over an already computed vector.
    pub fn from_vec(items: Vec<T>) -> Self {
        Self::from_shared(Arc::new(items), 0)
    }

    fn from_shared(items: Arc<Vec<T>>, at: usize) -> Self {
        LazySeq::new(move || {
            items
                .get(at)
                .map(|v| (v.clone(), LazySeq::from_shared(items.clone(), at + 1)))
        })
    }

    /// Unfolds a sequence from a seed; `step` must be pure.
    pub fn unfold<S>(seed: S, step: impl Fn(&S) -> Option<(T, S)> + Send + Sync + 'static) -> Self
    where
        S: Clone + Send + Sync + 'static,
    {
        Self::unfold_arc(seed, Arc::new(step))
    }

    #[allow(clippy::type_complexity)]
    fn unfold_arc<S>(seed: S, step: Arc<dyn Fn(&S) -> Option<(T, S)> + Send + Sync>) -> Self
    where
        S: Clone + Send + Sync + 'static,
    {
        LazySeq::new(move || {
            step(&seed).map(|(v, next)| (v, LazySeq::unfold_arc(next, step.clone())))
        })
    }

    /// Forces the first cell.
    pub fn next(&self) -> Option<(T, LazySeq<T>)> {
        (self.step)()
    }

    pub fn iter(&self) -> LazySeqIter<T> {
        LazySeqIter {
            cur: Some(self.clone()),
        }
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.iter().collect()
    }
}

pub struct LazySeqIter<T> {
    cur: Option<LazySeq<T>>,
}

impl<T: Clone + Send + Sync + 'static> Iterator for LazySeqIter<T> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        let seq = self.cur.take()?;
        let (head, tail) = seq.next()?;
        self.cur = Some(tail);
        Some(head)
    }
}
