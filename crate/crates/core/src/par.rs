//! Data-parallel helpers. With the `parallel` feature these dispatch to
//! rayon; without it, or with [`Execution::Sequential`], they run in order.
//! Results never depend on the execution mode: every output element is
//! computed independently.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// `Parallel` if the crate was built with rayon, else `Sequential`.
    pub fn effective(self) -> Self {
        if cfg!(feature = "parallel") {
            self
        } else {
            Execution::Sequential
        }
    }
}

pub fn map<T, U, F>(items: &[T], exec: Execution, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec.effective() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

pub fn map_range<U, F>(n: usize, exec: Execution, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    match exec.effective() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Overwrite `out[i] = f(i)`.
pub fn fill<T, F>(out: &mut [T], exec: Execution, f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec.effective() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i)),
        _ => out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = map(&xs, Execution::Sequential, |x| x * x);
        let b = map(&xs, Execution::Parallel, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(
            map_range(50, Execution::Parallel, |i| i + 1),
            map_range(50, Execution::Sequential, |i| i + 1)
        );
        let mut out = vec![0usize; 64];
        fill(&mut out, Execution::Parallel, |i| 2 * i);
        assert_eq!(out[63], 126);
    }
}
