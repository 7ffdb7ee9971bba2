//! Order-preserving parallel map over a slice.
//!
//! Work splits into contiguous chunks across scoped threads and results
//! come back in input order, so parallel and sequential runs produce
//! identical output.

pub fn par_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let threads = threads.max(1).min(items.len().max(1));
    if threads <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk_size = items.len().div_ceil(threads);
    let mut out: Vec<Option<R>> = Vec::with_capacity(items.len());
    out.resize_with(items.len(), || None);

    std::thread::scope(|scope| {
        let mut rest: &mut [Option<R>] = &mut out;
        let mut offset = 0usize;
        let f = &f;
        while offset < items.len() {
            let len = chunk_size.min(items.len() - offset);
            let (slot, tail) = rest.split_at_mut(len);
            rest = tail;
            let input = &items[offset..offset + len];
            scope.spawn(move || {
                for (slot, item) in slot.iter_mut().zip(input) {
                    *slot = Some(f(item));
                }
            });
            offset += len;
        }
    });

    out.into_iter().map(|v| v.expect("all chunks ran")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let items: Vec<u32> = (0..23).collect();
        let seq: Vec<u32> = items.iter().map(|v| v * 3).collect();
        for threads in [1, 2, 4, 9, 64] {
            assert_eq!(par_map(&items, threads, |v| v * 3), seq);
        }
    }

    #[test]
    fn empty_input() {
        let out: Vec<u32> = par_map(&[] as &[u32], 4, |v| *v);
        assert!(out.is_empty());
    }
}
