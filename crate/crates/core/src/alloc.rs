//! Peak-allocation accounting.
//!
//! [`CountingAllocator`] wraps the system allocator and keeps a per-thread
//! running total of live bytes and its high-water mark. A binary opts in with
//!
//! ```no_run
//! #[global_allocator]
//! static ALLOC: smomp_core::alloc::CountingAllocator = smomp_core::alloc::CountingAllocator;
//! ```
//!
//! after which [`measure_peak`] reports how far a closure pushed the live
//! total above its starting point. Counters are per thread, so concurrent
//! trials on a worker pool do not see each other's allocations.

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::sync::atomic::{AtomicBool, Ordering};

pub struct CountingAllocator;

static INSTALLED: AtomicBool = AtomicBool::new(false);

thread_local! {
    static CURRENT: Cell<isize> = const { Cell::new(0) };
    static PEAK: Cell<isize> = const { Cell::new(0) };
}

fn record(delta: isize) {
    // try_with: the thread-local may already be gone during thread teardown
    let _ = CURRENT.try_with(|c| {
        let now = c.get() + delta;
        c.set(now);
        let _ = PEAK.try_with(|p| {
            if now > p.get() {
                p.set(now);
            }
        });
    });
}

unsafe impl GlobalAlloc for CountingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        INSTALLED.store(true, Ordering::Relaxed);
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            record(layout.size() as isize);
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        INSTALLED.store(true, Ordering::Relaxed);
        let p = unsafe { System.alloc_zeroed(layout) };
        if !p.is_null() {
            record(layout.size() as isize);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        record(-(layout.size() as isize));
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = unsafe { System.realloc(ptr, layout, new_size) };
        if !p.is_null() {
            record(new_size as isize - layout.size() as isize);
        }
        p
    }
}

/// Whether a [`CountingAllocator`] is serving allocations in this process.
pub fn is_installed() -> bool {
    INSTALLED.load(Ordering::Relaxed)
}

/// Runs `f` and returns its result together with the peak number of bytes
/// allocated on this thread beyond what was live when `f` started. `None`
/// when no counting allocator is installed.
pub fn measure_peak<R>(f: impl FnOnce() -> R) -> (R, Option<usize>) {
    let start = CURRENT.with(Cell::get);
    let outer_peak = PEAK.with(|p| p.replace(start));
    let out = f();
    let peak = PEAK.with(Cell::get);
    PEAK.with(|p| p.set(outer_peak.max(peak)));
    let used = (peak - start).max(0) as usize;
    (out, is_installed().then_some(used))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_none_without_the_allocator() {
        // unit tests run with the system allocator
        let (v, peak) = measure_peak(|| vec![0u8; 1024].len());
        assert_eq!(v, 1024);
        assert_eq!(peak, None);
    }
}
