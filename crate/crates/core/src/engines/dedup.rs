//! Deduplication of streams in which every answer occurs at most `m` times.
//!
//! After `t` pulls from the inner stream at least `ceil(t/m)` distinct
//! answers have been seen. Releasing one buffered answer per `m` pulls
//! therefore never runs dry before the inner stream ends, and the remaining
//! buffer is flushed afterwards.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::AnswerStream;
use crate::error::{Error, Result};
use crate::symbol::Value;

/// Factor by which the maximal delay may grow. One output costs at most `m`
/// inner delays plus `m + 1` bookkeeping steps, and an inner delay is at
/// least one step.
pub fn delay_bound(m: usize) -> u64 {
    2 * m as u64 + 1
}

pub struct CheatersDedup<S> {
    inner: S,
    m: usize,
    seen: FxHashMap<Vec<Value>, usize>,
    buffer: VecDeque<Vec<Value>>,
    inner_done: bool,
    own_steps: u64,
}

impl<S: AnswerStream> CheatersDedup<S> {
    pub fn new(inner: S, m: usize) -> Self {
        assert!(m >= 1, "multiplicity bound must be positive");
        CheatersDedup {
            inner,
            m,
            seen: FxHashMap::default(),
            buffer: VecDeque::new(),
            inner_done: false,
            own_steps: 0,
        }
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: AnswerStream> AnswerStream for CheatersDedup<S> {
    fn next_answer(&mut self) -> Result<Option<Vec<Value>>> {
        let mut pulls = 0;
        while pulls < self.m && !self.inner_done {
            pulls += 1;
            self.own_steps += 1;
            match self.inner.next_answer()? {
                None => self.inner_done = true,
                Some(a) => {
                    let n = self.seen.entry(a.clone()).or_insert(0);
                    *n += 1;
                    if *n > self.m {
                        return Err(Error::MultiplicityExceeded { m: self.m });
                    }
                    if *n == 1 {
                        self.buffer.push_back(a);
                    }
                }
            }
        }
        self.own_steps += 1;
        Ok(self.buffer.pop_front())
    }

    fn steps(&self) -> u64 {
        self.inner.steps() + self.own_steps
    }
}
