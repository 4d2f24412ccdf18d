use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;

/// In-process stand-in for a partitioned topic: `P` FIFO partitions keyed
/// by `key mod P`.
#[derive(Debug)]
pub struct PartitionedQueue<T> {
    partitions: Vec<Mutex<VecDeque<T>>>,
    enqueued: AtomicUsize,
    dequeued: AtomicUsize,
}

impl<T: Send> PartitionedQueue<T> {
    pub fn new(n_partitions: usize) -> Self {
        assert!(n_partitions >= 1, "at least one partition");
        Self {
            partitions: (0..n_partitions)
                .map(|_| Mutex::new(VecDeque::new()))
                .collect(),
            enqueued: AtomicUsize::new(0),
            dequeued: AtomicUsize::new(0),
        }
    }

    pub fn n_partitions(&self) -> usize {
        self.partitions.len()
    }

    pub fn partition_of(&self, key: usize) -> usize {
        key % self.partitions.len()
    }

    pub fn push(&self, key: usize, item: T) {
        self.partitions[self.partition_of(key)]
            .lock()
            .expect("queue lock")
            .push_back(item);
        self.enqueued.fetch_add(1, Ordering::SeqCst);
    }

    pub fn pop(&self, partition: usize) -> Option<T> {
        let item = self.partitions[partition]
            .lock()
            .expect("queue lock")
            .pop_front();
        if item.is_some() {
            self.dequeued.fetch_add(1, Ordering::SeqCst);
        }
        item
    }

    pub fn len(&self) -> usize {
        self.partitions
            .iter()
            .map(|p| p.lock().expect("queue lock").len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn enqueued(&self) -> usize {
        self.enqueued.load(Ordering::SeqCst)
    }

    pub fn dequeued(&self) -> usize {
        self.dequeued.load(Ordering::SeqCst)
    }

    /// One worker per partition drains it in FIFO order through `work`, on
    /// the current rayon pool. Results come back grouped by partition.
    pub fn consume<R: Send>(&self, work: impl Fn(T) -> R + Sync) -> Vec<Vec<R>> {
        (0..self.partitions.len())
            .into_par_iter()
            .map(|p| std::iter::from_fn(|| self.pop(p)).map(&work).collect())
            .collect()
    }
}
