use rayon::prelude::*;

use crate::error::{Error, Result};

/// Maps `f` over `items` on a pool of `workers` threads. Results come back in
/// input order whatever the scheduling.
pub fn par_map<T, R, F>(workers: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if workers == 0 {
        return Err(Error::InvalidArgument("workers must be at least 1".into()));
    }
    if workers == 1 || items.len() <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..100).collect();
        let one = par_map(1, &items, |x| x * x).unwrap();
        let four = par_map(4, &items, |x| x * x).unwrap();
        assert_eq!(one, four);
        assert!(par_map(0, &items, |x| *x).is_err());
    }
}
