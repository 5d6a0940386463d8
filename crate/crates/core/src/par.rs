//! Data-parallel map helpers. With the `parallel` feature (default) these
//! fan out over rayon; without it they fall back to sequential iteration.
//! Output order matches input order in both builds.

#[cfg(feature = "parallel")]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Fallible variant; the first error wins.
pub fn try_map_slice<T, U, E, F>(items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    map_slice(items, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let input: Vec<u64> = (0..1000).collect();
        let out = map_slice(&input, |x| x * 2);
        assert_eq!(out, input.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn try_map_propagates_error() {
        let input = vec![1, 2, 3];
        let out: Result<Vec<i32>, &str> =
            try_map_slice(&input, |&x| if x == 2 { Err("two") } else { Ok(x) });
        assert_eq!(out, Err("two"));
    }
}
