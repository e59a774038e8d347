//! Node loops that run on rayon when the `parallel` feature is on.

use alloc::vec::Vec;

/// `(0..len).map(f)` with per-worker scratch state built by `init`.
pub(crate) fn map_indexed<T, S, I, F>(len: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map_init(init, f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut s = init();
        (0..len).map(|i| f(&mut s, i)).collect()
    }
}
