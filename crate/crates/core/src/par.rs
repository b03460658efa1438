//! Fork-join helper: run one closure per slot on scoped threads and collect
//! the results by slot index.

use std::time::{Duration, Instant};

/// Runs `f(slot)` for every slot in `0..k`. Slot 0 runs on the calling
/// thread. Results are returned in slot order; arrival order is never
/// observed.
pub fn fork_join<T, F>(k: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if k <= 1 {
        return (0..k).map(&f).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (1..k).map(|slot| scope.spawn({
            let f = &f;
            move || f(slot)
        })).collect();
        let mut out = Vec::with_capacity(k);
        out.push(f(0));
        for h in handles {
            out.push(h.join().expect("worker thread panicked"));
        }
        out
    })
}

/// Like [`fork_join`] over owned per-slot inputs, also measuring each slot's
/// busy time and the phase wall time. Timings feed reporting only.
pub fn fork_join_timed<I, T, F>(inputs: Vec<I>, f: F) -> (Vec<T>, Vec<Duration>, Duration)
where
    I: Send,
    T: Send,
    F: Fn(usize, I) -> T + Sync,
{
    let start = Instant::now();
    let timed = |slot: usize, input: I| {
        let t0 = Instant::now();
        let out = f(slot, input);
        (out, t0.elapsed())
    };
    let results: Vec<(T, Duration)> = if inputs.len() <= 1 {
        inputs.into_iter().enumerate().map(|(s, i)| timed(s, i)).collect()
    } else {
        std::thread::scope(|scope| {
            let mut iter = inputs.into_iter().enumerate();
            let (_, first) = iter.next().expect("non-empty inputs");
            let handles: Vec<_> = iter
                .map(|(slot, input)| {
                    let timed = &timed;
                    scope.spawn(move || timed(slot, input))
                })
                .collect();
            let mut out = Vec::with_capacity(handles.len() + 1);
            out.push(timed(0, first));
            for h in handles {
                out.push(h.join().expect("worker thread panicked"));
            }
            out
        })
    };
    let wall = start.elapsed();
    let (values, busy) = results.into_iter().unzip();
    (values, busy, wall)
}
