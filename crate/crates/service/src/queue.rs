//! Per-grow outgoing frame buffer: at most `capacity` progress frames are
//! held; a new one supersedes the oldest. The terminal frame is never
//! dropped and is always delivered last.

use std::collections::VecDeque;
use std::sync::Mutex;

#[derive(Debug)]
struct Inner<T> {
    progress: VecDeque<T>,
    terminal: Option<T>,
    closed: bool,
    superseded: u64,
}

#[derive(Debug)]
pub struct ProgressQueue<T> {
    capacity: usize,
    inner: Mutex<Inner<T>>,
}

/// What [`ProgressQueue::pop`] found.
#[derive(Debug, PartialEq)]
pub enum Popped<T> {
    Frame(T),
    /// The terminal frame; nothing follows.
    Terminal(T),
    Empty,
    /// The terminal frame was already taken.
    Done,
}

impl<T> ProgressQueue<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            inner: Mutex::new(Inner {
                progress: VecDeque::new(),
                terminal: None,
                closed: false,
                superseded: 0,
            }),
        }
    }

    /// Queues a progress frame. Ignored once the terminal frame is in.
    pub fn push(&self, frame: T) {
        let mut q = self.inner.lock().unwrap();
        if q.closed {
            return;
        }
        if q.progress.len() == self.capacity {
            q.progress.pop_front();
            q.superseded += 1;
        }
        q.progress.push_back(frame);
    }

    pub fn finish(&self, frame: T) {
        let mut q = self.inner.lock().unwrap();
        if !q.closed {
            q.closed = true;
            q.terminal = Some(frame);
        }
    }

    pub fn pop(&self) -> Popped<T> {
        let mut q = self.inner.lock().unwrap();
        if let Some(f) = q.progress.pop_front() {
            return Popped::Frame(f);
        }
        match q.terminal.take() {
            Some(t) => Popped::Terminal(t),
            None if q.closed => Popped::Done,
            None => Popped::Empty,
        }
    }

    /// Undelivered progress frames.
    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().progress.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Progress frames dropped in favor of newer ones.
    pub fn superseded(&self) -> u64 {
        self.inner.lock().unwrap().superseded
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_the_latest_and_the_terminal() {
        let q = ProgressQueue::new(2);
        for i in 0..5 {
            q.push(i);
        }
        assert_eq!(q.len(), 2);
        q.finish(99);
        q.push(7);
        assert_eq!(q.pop(), Popped::Frame(3));
        assert_eq!(q.pop(), Popped::Frame(4));
        assert_eq!(q.pop(), Popped::Terminal(99));
        assert_eq!(q.pop(), Popped::Done);
        assert_eq!(q.superseded(), 3);
    }
}
