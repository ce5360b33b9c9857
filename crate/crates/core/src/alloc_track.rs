//! A global-allocator wrapper that records the largest single allocation.
//!
//! Install it in a binary or test target:
//!
//! ```ignore
//! #[global_allocator]
//! static ALLOC: lowrank_spgd::alloc_track::TrackingAllocator =
//!     lowrank_spgd::alloc_track::TrackingAllocator;
//! ```
//!
//! The counters are process-wide. Without the allocator installed they stay
//! at zero and [`is_active`] reports `false`.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

static LARGEST: AtomicUsize = AtomicUsize::new(0);
static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

pub struct TrackingAllocator;

unsafe impl GlobalAlloc for TrackingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let ptr = System.alloc(layout);
        if !ptr.is_null() {
            note_alloc(layout.size());
        }
        ptr
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let ptr = System.alloc_zeroed(layout);
        if !ptr.is_null() {
            note_alloc(layout.size());
        }
        ptr
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let out = System.realloc(ptr, layout, new_size);
        if !out.is_null() {
            CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
            note_alloc(new_size);
        }
        out
    }
}

fn note_alloc(size: usize) {
    LARGEST.fetch_max(size, Ordering::Relaxed);
    let now = CURRENT.fetch_add(size, Ordering::Relaxed) + size;
    PEAK.fetch_max(now, Ordering::Relaxed);
}

/// Largest single allocation, in bytes, since the last [`reset`].
pub fn largest_allocation() -> usize {
    LARGEST.load(Ordering::Relaxed)
}

/// High-water mark of live heap bytes since the last [`reset`].
pub fn peak_live_bytes() -> usize {
    PEAK.load(Ordering::Relaxed)
}

pub fn live_bytes() -> usize {
    CURRENT.load(Ordering::Relaxed)
}

/// Clears the largest-allocation record and restarts the peak from the
/// current live size.
pub fn reset() {
    LARGEST.store(0, Ordering::Relaxed);
    PEAK.store(CURRENT.load(Ordering::Relaxed), Ordering::Relaxed);
}

/// Whether a [`TrackingAllocator`] is installed in this process.
pub fn is_active() -> bool {
    let probe = Box::new([0u8; 64]);
    std::hint::black_box(&probe);
    drop(probe);
    LARGEST.load(Ordering::Relaxed) > 0 || PEAK.load(Ordering::Relaxed) > 0
}
