//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (on by default) work runs on rayon; without it
//! every mode falls back to a plain sequential loop. Output order always
//! matches input order.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    /// rayon's global pool (one thread per core).
    #[default]
    Available,
    Threads(usize),
}

impl Parallelism {
    /// `0` means all cores, `1` sequential.
    pub fn from_count(n: usize) -> Self {
        match n {
            0 => Parallelism::Available,
            1 => Parallelism::Sequential,
            n => Parallelism::Threads(n),
        }
    }
}

impl fmt::Display for Parallelism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parallelism::Sequential => f.write_str("1"),
            Parallelism::Available => f.write_str("0"),
            Parallelism::Threads(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Parallelism {
    type Err = std::num::ParseIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Parallelism::from_count(s.trim().parse()?))
    }
}

pub fn par_map<T, U, F>(items: &[T], mode: Parallelism, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match mode {
            Parallelism::Sequential | Parallelism::Threads(1) => items.iter().map(f).collect(),
            Parallelism::Available => items.par_iter().map(f).collect(),
            Parallelism::Threads(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                Err(_) => items.iter().map(f).collect(),
            },
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = mode;
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        for mode in [Parallelism::Sequential, Parallelism::Available, Parallelism::Threads(3)] {
            let out = par_map(&items, mode, |x| x * x);
            assert_eq!(out, items.iter().map(|x| x * x).collect::<Vec<_>>());
        }
    }

    #[test]
    fn parse_counts() {
        assert_eq!("1".parse::<Parallelism>().unwrap(), Parallelism::Sequential);
        assert_eq!("0".parse::<Parallelism>().unwrap(), Parallelism::Available);
        assert_eq!("8".parse::<Parallelism>().unwrap(), Parallelism::Threads(8));
        assert!("x".parse::<Parallelism>().is_err());
    }
}
