//! Worker count from `ANTIPLANE_THREADS` and an order-preserving parallel map.

use std::num::NonZeroUsize;

pub const THREADS_VAR: &str = "ANTIPLANE_THREADS";

/// Unset: all available cores. `0`: one worker, deterministic. `n`: at most `n`.
pub fn parse_workers(value: Option<&str>) -> Result<usize, String> {
    let available = std::thread::available_parallelism().map_or(1, NonZeroUsize::get);
    match value.map(str::trim) {
        None | Some("") => Ok(available),
        Some(s) => match s.parse::<usize>() {
            Ok(0) => Ok(1),
            Ok(n) => Ok(n),
            Err(_) => Err(format!("{THREADS_VAR} must be a nonnegative integer, got '{s}'")),
        },
    }
}

pub fn workers_from_env() -> Result<usize, String> {
    parse_workers(std::env::var(THREADS_VAR).ok().as_deref())
}

/// `items.iter().map(f)` on up to `workers` scoped threads; output order
/// matches input order whatever the worker count.
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        for (inp, out) in items.chunks(chunk).zip(slots.chunks_mut(chunk)) {
            let f = &f;
            s.spawn(move || {
                for (x, slot) in inp.iter().zip(out.iter_mut()) {
                    *slot = Some(f(x));
                }
            });
        }
    });
    slots.into_iter().map(|r| r.expect("worker filled its slot")).collect()
}
