//! Counting allocator and scoped peak-allocation measurement.
//!
//! Counters are per thread, so a measured job must do its allocating on the
//! calling thread. Install the allocator in the final binary:
//!
//! ```ignore
//! #[global_allocator]
//! static ALLOC: deepactif::bench::CountingAllocator = deepactif::bench::CountingAllocator;
//! ```

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};

pub struct CountingAllocator;

static INSTALLED: AtomicBool = AtomicBool::new(false);

thread_local! {
    static CURRENT: Cell<isize> = const { Cell::new(0) };
    static PEAK: Cell<isize> = const { Cell::new(0) };
}

fn record(delta: isize) {
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
        let ptr = System.alloc(layout);
        if !ptr.is_null() {
            record(layout.size() as isize);
        }
        ptr
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        INSTALLED.store(true, Ordering::Relaxed);
        let ptr = System.alloc_zeroed(layout);
        if !ptr.is_null() {
            record(layout.size() as isize);
        }
        ptr
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        record(-(layout.size() as isize));
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let out = System.realloc(ptr, layout, new_size);
        if !out.is_null() {
            record(new_size as isize - layout.size() as isize);
        }
        out
    }
}

/// Whether [`CountingAllocator`] is the process allocator.
pub fn tracking_available() -> bool {
    if INSTALLED.load(Ordering::Relaxed) {
        return true;
    }
    // Any allocation through the hook flips the flag.
    drop(std::hint::black_box(Box::new(0u64)));
    INSTALLED.load(Ordering::Relaxed)
}

/// Runs `job` and returns its output with the high-water mark of live bytes
/// it allocated on this thread, relative to the level at entry.
pub fn measure_peak<T>(job: impl FnOnce() -> T) -> Result<(T, u64)> {
    if !tracking_available() {
        return Err(Error::Unsupported(
            "allocation tracking needs deepactif::bench::CountingAllocator as the global allocator".into(),
        ));
    }
    let start = CURRENT.with(|c| c.get());
    PEAK.with(|p| p.set(start));
    let out = job();
    let peak = PEAK.with(|p| p.get());
    Ok((out, (peak - start).max(0) as u64))
}

/// Peak live bytes allocated by `job`.
pub fn peak_allocation<T>(job: impl FnOnce() -> T) -> Result<u64> {
    measure_peak(job).map(|(_, b)| b)
}
