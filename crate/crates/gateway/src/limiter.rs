//! Ceiling on concurrent in-flight requests.

use std::sync::{Condvar, Mutex};

#[derive(Debug, Default)]
struct State {
    in_flight: usize,
    peak: usize,
}

#[derive(Debug)]
pub struct RateLimiter {
    max_in_flight: usize,
    state: Mutex<State>,
    freed: Condvar,
}

/// Held while a request is in flight; releases its slot on drop.
pub struct Permit<'a> {
    limiter: &'a RateLimiter,
}

impl RateLimiter {
    pub fn new(max_in_flight: usize) -> RateLimiter {
        assert!(max_in_flight > 0, "ceiling must be positive");
        RateLimiter { max_in_flight, state: Mutex::new(State::default()), freed: Condvar::new() }
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }

    /// Blocks until a slot is free.
    pub fn acquire(&self) -> Permit<'_> {
        let mut st = self.state.lock().unwrap();
        while st.in_flight >= self.max_in_flight {
            st = self.freed.wait(st).unwrap();
        }
        st.in_flight += 1;
        st.peak = st.peak.max(st.in_flight);
        Permit { limiter: self }
    }

    /// Highest concurrency observed so far.
    pub fn peak(&self) -> usize {
        self.state.lock().unwrap().peak
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut st = self.limiter.state.lock().unwrap();
        st.in_flight -= 1;
        drop(st);
        self.limiter.freed.notify_one();
    }
}
