//! Event queue ordered by (time, sequence number).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::time::SimTime;
use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimEventKind {
    TxStart,
    RxArrival,
    TimerFire,
    Measurement,
}

impl SimEventKind {
    pub fn label(self) -> &'static str {
        match self {
            SimEventKind::TxStart => "tx_start",
            SimEventKind::RxArrival => "rx_arrival",
            SimEventKind::TimerFire => "timer_fire",
            SimEventKind::Measurement => "measurement",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent<P> {
    pub time: SimTime,
    /// Unique, monotonically increasing tie-breaker.
    pub seq: u64,
    pub kind: SimEventKind,
    pub payload: P,
}

struct Entry<P>(SimEvent<P>);

impl<P> PartialEq for Entry<P> {
    fn eq(&self, o: &Self) -> bool {
        (self.0.time, self.0.seq) == (o.0.time, o.0.seq)
    }
}
impl<P> Eq for Entry<P> {}
impl<P> PartialOrd for Entry<P> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<P> Ord for Entry<P> {
    // Reversed so the max-heap yields the earliest (time, seq).
    fn cmp(&self, o: &Self) -> Ordering {
        (o.0.time, o.0.seq).cmp(&(self.0.time, self.0.seq))
    }
}

/// Min-queue of events that refuses to schedule into the past.
pub struct EventQueue<P> {
    heap: BinaryHeap<Entry<P>>,
    next_seq: u64,
    now: SimTime,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self { heap: BinaryHeap::new(), next_seq: 0, now: SimTime::ZERO }
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Time of the last dequeued event.
    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, time: SimTime, kind: SimEventKind, payload: P) -> Result<u64, SimError> {
        if time < self.now {
            return Err(SimError::Causality(format!(
                "event at {time} ms scheduled after {} ms was processed",
                self.now
            )));
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(SimEvent { time, seq, kind, payload }));
        Ok(seq)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.0.time)
    }

    pub fn pop(&mut self) -> Option<SimEvent<P>> {
        let e = self.heap.pop()?.0;
        debug_assert!(e.time >= self.now);
        self.now = e.time;
        Some(e)
    }

    /// Remaining events in dequeue order.
    pub fn drain_ordered(&mut self) -> Vec<SimEvent<P>> {
        let mut out = Vec::with_capacity(self.heap.len());
        while let Some(e) = self.heap.pop() {
            out.push(e.0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_by_time_then_seq() {
        let mut q = EventQueue::new();
        q.schedule(SimTime(10), SimEventKind::TxStart, "b").unwrap();
        q.schedule(SimTime(5), SimEventKind::TxStart, "a").unwrap();
        q.schedule(SimTime(10), SimEventKind::TxStart, "c").unwrap();
        let order: Vec<&str> = std::iter::from_fn(|| q.pop()).map(|e| e.payload).collect();
        assert_eq!(order, vec!["a", "b", "c"]);
    }

    #[test]
    fn rejects_past_events() {
        let mut q = EventQueue::new();
        q.schedule(SimTime(10), SimEventKind::TimerFire, ()).unwrap();
        q.pop();
        assert!(matches!(q.schedule(SimTime(9), SimEventKind::TimerFire, ()), Err(SimError::Causality(_))));
        assert!(q.schedule(SimTime(10), SimEventKind::TimerFire, ()).is_ok());
    }
}
