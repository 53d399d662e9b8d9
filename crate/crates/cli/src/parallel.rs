//! Order-preserving parallel map for per-layout work. Results land at their
//! input index, so the output never depends on scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Worker cap: `COMPACT_PLACE_THREADS` when set to a positive integer, else
/// the machine's available parallelism.
pub fn thread_cap() -> usize {
    match std::env::var("COMPACT_PLACE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n >= 1 => n,
        _ => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
}

pub fn parallel_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync,
{
    let workers = thread_cap().min(items.len());
    if workers <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<U>>> =
        Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let u = f(i, &items[i]);
                out.lock().expect("no poisoned workers")[i] = Some(u);
            });
        }
    });
    out.into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|u| u.expect("every slot filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_order_matches_input_order() {
        let items: Vec<u64> = (0..200).collect();
        let got = parallel_map(&items, |i, &v| {
            assert_eq!(i as u64, v);
            v * v
        });
        let want: Vec<u64> = items.iter().map(|v| v * v).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn empty_input_yields_empty_output() {
        let got: Vec<u32> = parallel_map(&[] as &[u32], |_, v| *v);
        assert!(got.is_empty());
    }
}
