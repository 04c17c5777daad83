//! Data-parallel helpers with a sequential fallback.
//!
//! Everything here is order-preserving, so results do not depend on the
//! executor. Without the `parallel` feature, [`Exec::Parallel`] runs
//! sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exec {
    Parallel,
    Sequential,
}

impl Default for Exec {
    fn default() -> Exec {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `items.iter().map(f)`, in input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Like [`Exec::map`] over `0..n`.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Ordered product `one * items[0] * items[1] * ...` of an associative
    /// operation. Blocks of `block` consecutive items are folded
    /// independently, then the block results are combined left to right.
    pub fn product<T, M>(self, items: &[T], one: T, block: usize, mul: M) -> T
    where
        T: Clone + Send + Sync,
        M: Fn(&T, &T) -> T + Sync + Send,
    {
        let block = block.max(1);
        let fold = |chunk: &[T]| -> Option<T> {
            let mut it = chunk.iter();
            let first = it.next()?.clone();
            Some(it.fold(first, |acc, x| mul(&acc, x)))
        };
        let partial: Vec<Option<T>> = {
            #[cfg(feature = "parallel")]
            {
                if self.is_parallel() {
                    items.par_chunks(block).map(fold).collect()
                } else {
                    items.chunks(block).map(fold).collect()
                }
            }
            #[cfg(not(feature = "parallel"))]
            {
                items.chunks(block).map(fold).collect()
            }
        };
        partial.into_iter().flatten().fold(one, |acc, x| mul(&acc, &x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_is_ordered() {
        // String concatenation is associative but not commutative.
        let items: Vec<String> = (0..37).map(|i| format!("{},", i)).collect();
        let expect: String = items.concat();
        for exec in [Exec::Parallel, Exec::Sequential] {
            for block in [1, 2, 5, 64] {
                let got = exec.product(&items, String::new(), block, |a, b| format!("{}{}", a, b));
                assert_eq!(got, expect);
            }
        }
    }

    #[test]
    fn map_keeps_order() {
        let v: Vec<u64> = (0..100).collect();
        assert_eq!(Exec::Parallel.map(&v, |x| x * x), Exec::Sequential.map(&v, |x| x * x));
        assert_eq!(Exec::Parallel.map_range(5, |i| i + 1), vec![1, 2, 3, 4, 5]);
    }
}
