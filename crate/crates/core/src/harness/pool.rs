//! Ordered parallel map. Results come back in index order whatever the
//! thread count, which is what makes runs reproducible.

#[cfg(feature = "parallel")]
pub fn ordered_map<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if threads <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn ordered_map<T, F>(n: usize, _threads: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_kept() {
        let serial = ordered_map(100, 1, |i| i * i);
        let parallel = ordered_map(100, 4, |i| i * i);
        assert_eq!(serial, parallel);
        assert_eq!(serial[7], 49);
    }
}
