use std::sync::{Condvar, Mutex};

/// Counting semaphore capping outstanding requests per provider.
#[derive(Debug)]
pub struct InFlightLimiter {
    limit: usize,
    state: Mutex<State>,
    freed: Condvar,
}

#[derive(Debug, Default)]
struct State {
    active: usize,
    peak: usize,
}

pub struct Slot<'a> {
    owner: &'a InFlightLimiter,
}

impl InFlightLimiter {
    pub fn new(limit: usize) -> Self {
        InFlightLimiter {
            limit: limit.max(1),
            state: Mutex::new(State::default()),
            freed: Condvar::new(),
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn acquire(&self) -> Slot<'_> {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        while st.active >= self.limit {
            st = self.freed.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        st.active += 1;
        st.peak = st.peak.max(st.active);
        Slot { owner: self }
    }

    /// Highest number of simultaneously held slots so far.
    pub fn peak(&self) -> usize {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).peak
    }
}

impl Drop for Slot<'_> {
    fn drop(&mut self) {
        let mut st = self.owner.state.lock().unwrap_or_else(|e| e.into_inner());
        st.active -= 1;
        drop(st);
        self.owner.freed.notify_one();
    }
}
