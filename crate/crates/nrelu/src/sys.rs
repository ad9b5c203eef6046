//! Process-level settings for long training runs.

/// Makes glibc keep freed tensor buffers for reuse instead of unmapping
/// them. Each training step allocates and frees tens of megabytes; with the
/// default settings most of that turns into page faults.
pub fn retain_freed_memory() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    // SAFETY: mallopt only adjusts allocator tunables.
    unsafe {
        libc::mallopt(libc::M_MMAP_THRESHOLD, 32 << 20);
        libc::mallopt(libc::M_TRIM_THRESHOLD, 1 << 30);
        libc::mallopt(libc::M_TOP_PAD, 64 << 20);
    }
}
