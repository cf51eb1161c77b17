//! Client-side request pacing: a token bucket plus a cap on requests in
//! flight, shared by every episode using the same client.

use std::num::NonZeroU32;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use governor::clock::{Clock, DefaultClock};
use governor::{DefaultDirectRateLimiter, Quota, RateLimiter};

/// Pacing settings. `requests_per_second <= 0` disables the bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrottleConfig {
    pub requests_per_second: f64,
    pub burst: u32,
    pub max_in_flight: usize,
}

impl Default for ThrottleConfig {
    fn default() -> Self {
        Self {
            requests_per_second: 2.0,
            burst: 4,
            max_in_flight: 4,
        }
    }
}

pub struct Throttle {
    bucket: Option<DefaultDirectRateLimiter>,
    clock: DefaultClock,
    in_flight: Mutex<usize>,
    released: Condvar,
    max_in_flight: usize,
}

/// Held while a request is outstanding; dropping it frees the slot.
pub struct Permit<'a> {
    throttle: &'a Throttle,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.throttle.in_flight.lock().expect("throttle lock");
        *n -= 1;
        self.throttle.released.notify_one();
    }
}

impl Throttle {
    pub fn new(config: ThrottleConfig) -> Self {
        let bucket = (config.requests_per_second > 0.0)
            .then(|| Quota::with_period(Duration::from_secs_f64(1.0 / config.requests_per_second)))
            .flatten()
            .map(|q| q.allow_burst(NonZeroU32::new(config.burst.max(1)).expect("non-zero burst")))
            .map(RateLimiter::direct);
        Self {
            bucket,
            clock: DefaultClock::default(),
            in_flight: Mutex::new(0),
            released: Condvar::new(),
            max_in_flight: config.max_in_flight.max(1),
        }
    }

    /// Blocks until both a token and an in-flight slot are available.
    pub fn acquire(&self) -> Permit<'_> {
        {
            let mut n = self.in_flight.lock().expect("throttle lock");
            while *n >= self.max_in_flight {
                n = self.released.wait(n).expect("throttle lock");
            }
            *n += 1;
        }
        if let Some(bucket) = &self.bucket {
            while let Err(not_until) = bucket.check() {
                std::thread::sleep(not_until.wait_time_from(self.clock.now()));
            }
        }
        Permit { throttle: self }
    }

    pub fn in_flight(&self) -> usize {
        *self.in_flight.lock().expect("throttle lock")
    }
}
