//! Latest-value exchange between the two loops.

use std::sync::{Arc, Mutex, MutexGuard};

/// Last-writer-wins cell. Readers always get a complete value; nothing is
/// queued, so a slow reader simply skips intermediate values.
#[derive(Debug)]
pub struct Slot<T> {
    inner: Mutex<Arc<T>>,
}

impl<T> Slot<T> {
    pub fn new(value: T) -> Self {
        Self {
            inner: Mutex::new(Arc::new(value)),
        }
    }

    fn lock(&self) -> MutexGuard<'_, Arc<T>> {
        // A panicking writer cannot leave a partial value behind: the Arc is
        // swapped whole.
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn store(&self, value: T) {
        *self.lock() = Arc::new(value);
    }

    pub fn load(&self) -> Arc<T> {
        Arc::clone(&self.lock())
    }
}

impl<T: Clone> Slot<T> {
    /// Read-modify-write under the slot lock. `f` must be short.
    pub fn update<R>(&self, f: impl FnOnce(&mut T) -> R) -> R {
        let mut g = self.lock();
        let mut v = T::clone(&g);
        let r = f(&mut v);
        *g = Arc::new(v);
        r
    }
}
