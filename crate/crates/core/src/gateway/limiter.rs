//! Sliding-window rate limiting with an injectable clock.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

/// Time source used by the rate limiter and retry backoff.
pub trait Clock: Send + Sync {
    fn now(&self) -> Instant;
    fn sleep(&self, duration: Duration);
}

/// Wall-clock time; sleeps block the calling thread.
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Instant {
        Instant::now()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Simulated clock: `sleep` advances virtual time instantly.
pub struct VirtualClock {
    base: Instant,
    elapsed: Mutex<Duration>,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self {
            base: Instant::now(),
            elapsed: Mutex::new(Duration::ZERO),
        }
    }

    /// Virtual time elapsed since construction.
    pub fn elapsed(&self) -> Duration {
        *self.elapsed.lock().unwrap()
    }
}

impl Default for VirtualClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Instant {
        self.base + *self.elapsed.lock().unwrap()
    }

    fn sleep(&self, duration: Duration) {
        *self.elapsed.lock().unwrap() += duration;
    }
}

/// Sliding-window limiter: at most `capacity` acquisitions per `window`.
///
/// Shared, contention-safe state; any number of threads may call
/// [`RateLimiter::acquire`] concurrently.
pub struct RateLimiter {
    capacity: usize,
    window: Duration,
    clock: Arc<dyn Clock>,
    stamps: Mutex<VecDeque<Instant>>,
}

impl RateLimiter {
    pub fn new(capacity: usize, window: Duration, clock: Arc<dyn Clock>) -> Self {
        assert!(capacity > 0, "rate limiter capacity must be positive");
        Self {
            capacity,
            window,
            clock,
            stamps: Mutex::new(VecDeque::new()),
        }
    }

    /// One request per minute times `requests_per_minute`.
    pub fn per_minute(requests_per_minute: u32, clock: Arc<dyn Clock>) -> Self {
        Self::new(
            requests_per_minute as usize,
            Duration::from_secs(60),
            clock,
        )
    }

    /// Block until a slot is free, then claim it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut stamps = self.stamps.lock().unwrap();
                let now = self.clock.now();
                while let Some(front) = stamps.front() {
                    if now.duration_since(*front) >= self.window {
                        stamps.pop_front();
                    } else {
                        break;
                    }
                }
                if stamps.len() < self.capacity {
                    stamps.push_back(now);
                    return;
                }
                // Oldest stamp leaves the window at front + window.
                let front = *stamps.front().expect("non-empty at capacity");
                (front + self.window).saturating_duration_since(now)
            };
            self.clock.sleep(wait.max(Duration::from_millis(1)));
        }
    }
}
