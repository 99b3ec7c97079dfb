//! Array-of-lists max-priority structure over integer keys in [1, U].
//!
//! Under front-loaded insertion and a non-increasing served maximum, the
//! total work for n inserts, x find-max and y decrease-key/delete operations
//! is O(n + x + y + U): the running maximum only moves downward, so all
//! downward scans together cost at most the key range.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Handle {
    slot: usize,
    generation: u32,
}

#[derive(Debug, Clone)]
struct Slot {
    key: usize,
    index: usize,
    prev: Option<usize>,
    next: Option<usize>,
    generation: u32,
    live: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct Bucket {
    head: Option<usize>,
    tail: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct HeapCounters {
    pub inserts: u64,
    pub find_max: u64,
    pub deletes: u64,
    pub decrease_keys: u64,
    /// Downward moves of the running maximum over empty buckets.
    pub scan_steps: u64,
}

impl HeapCounters {
    /// Instrumented elementary-step total (decrease-key counts as its
    /// internal delete + insert).
    pub fn elementary_steps(&self) -> u64 {
        self.inserts + self.find_max + self.deletes + 2 * self.decrease_keys + self.scan_steps
    }

    pub fn total_ops(&self) -> u64 {
        self.inserts + self.find_max + self.deletes + self.decrease_keys
    }
}

#[derive(Debug, Clone)]
pub struct BucketHeap {
    universe: usize,
    buckets: Vec<Bucket>,
    slots: Vec<Slot>,
    free: Vec<usize>,
    present: Vec<bool>,
    current_max: usize,
    len: usize,
    strict: bool,
    served_find_max: bool,
    raised_after_find_max: bool,
    pub counters: HeapCounters,
}

impl BucketHeap {
    /// Empty heap over keys 1..=universe holding at most `capacity` indices.
    pub fn new(universe: usize, capacity: usize) -> Result<Self> {
        if universe < 1 {
            return Err(Error::InvalidInput("key universe must be >= 1".into()));
        }
        if universe > capacity {
            return Err(Error::InvalidInput(format!(
                "universe {universe} exceeds capacity {capacity}"
            )));
        }
        Ok(BucketHeap {
            universe,
            buckets: vec![Bucket::default(); universe + 1],
            slots: Vec::with_capacity(capacity),
            free: Vec::new(),
            present: vec![false; capacity],
            current_max: 0,
            len: 0,
            strict: false,
            served_find_max: false,
            raised_after_find_max: false,
            counters: HeapCounters::default(),
        })
    }

    /// Error on any insert that raises the maximum after a find-max was
    /// served (the amortization bound assumes front-loaded insertion).
    pub fn strict(mut self) -> Self {
        self.strict = true;
        self
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Whether an insert ever raised the maximum after a served find-max.
    pub fn max_raised_after_find_max(&self) -> bool {
        self.raised_after_find_max
    }

    pub fn insert(&mut self, key: usize, index: usize) -> Result<Handle> {
        if key < 1 || key > self.universe {
            return Err(Error::InvalidInput(format!(
                "key {key} outside [1, {}]",
                self.universe
            )));
        }
        if index >= self.present.len() || self.present[index] {
            return Err(Error::InvalidInput(format!(
                "index {index} out of range or already present"
            )));
        }
        self.counters.inserts += 1;
        if key > self.current_max {
            if self.served_find_max {
                if self.strict {
                    return Err(Error::ContractViolation(
                        "insert raised the maximum after a served find-max".into(),
                    ));
                }
                self.raised_after_find_max = true;
            }
            self.current_max = key;
        }
        let slot = match self.free.pop() {
            Some(s) => s,
            None => {
                self.slots.push(Slot {
                    key: 0,
                    index: 0,
                    prev: None,
                    next: None,
                    generation: 0,
                    live: false,
                });
                self.slots.len() - 1
            }
        };
        let generation = self.slots[slot].generation;
        self.slots[slot] = Slot {
            key,
            index,
            prev: self.buckets[key].tail,
            next: None,
            generation,
            live: true,
        };
        match self.buckets[key].tail {
            Some(t) => self.slots[t].next = Some(slot),
            None => self.buckets[key].head = Some(slot),
        }
        self.buckets[key].tail = Some(slot);
        self.present[index] = true;
        self.len += 1;
        Ok(Handle { slot, generation })
    }

    /// Maximum-key element (FIFO within a bucket), or None when empty. O(1):
    /// the running maximum is maintained eagerly by delete.
    pub fn find_max(&mut self) -> Option<(usize, usize)> {
        self.counters.find_max += 1;
        self.served_find_max = true;
        if self.len == 0 {
            return None;
        }
        let head = self.buckets[self.current_max].head.expect("max bucket non-empty");
        Some((self.current_max, self.slots[head].index))
    }

    fn check(&self, handle: Handle) -> Result<()> {
        match self.slots.get(handle.slot) {
            Some(s) if s.live && s.generation == handle.generation => Ok(()),
            _ => Err(Error::InvalidHandle),
        }
    }

    fn unlink(&mut self, slot: usize) {
        let (key, prev, next) = {
            let s = &self.slots[slot];
            (s.key, s.prev, s.next)
        };
        match prev {
            Some(p) => self.slots[p].next = next,
            None => self.buckets[key].head = next,
        }
        match next {
            Some(nx) => self.slots[nx].prev = prev,
            None => self.buckets[key].tail = prev,
        }
    }

    fn settle_max(&mut self) {
        while self.current_max > 0 && self.buckets[self.current_max].head.is_none() {
            self.current_max -= 1;
            self.counters.scan_steps += 1;
        }
    }

    pub fn delete(&mut self, handle: Handle) -> Result<()> {
        self.check(handle)?;
        self.counters.deletes += 1;
        self.unlink(handle.slot);
        let s = &mut self.slots[handle.slot];
        s.live = false;
        s.generation = s.generation.wrapping_add(1);
        self.present[s.index] = false;
        self.free.push(handle.slot);
        self.len -= 1;
        if self.len == 0 {
            self.current_max = 0;
        } else {
            self.settle_max();
        }
        Ok(())
    }

    /// Relocate the element to a smaller key. Equal key is a no-op; a raise
    /// attempt is an error. The handle stays valid.
    pub fn decrease_key(&mut self, handle: Handle, new_key: usize) -> Result<Handle> {
        self.check(handle)?;
        let old_key = self.slots[handle.slot].key;
        if new_key > old_key {
            return Err(Error::InvalidInput(format!(
                "decrease-key from {old_key} to {new_key} would increase"
            )));
        }
        if new_key < 1 {
            return Err(Error::InvalidInput("key must be >= 1".into()));
        }
        self.counters.decrease_keys += 1;
        if new_key == old_key {
            return Ok(handle);
        }
        self.unlink(handle.slot);
        let s = &mut self.slots[handle.slot];
        s.key = new_key;
        s.prev = self.buckets[new_key].tail;
        s.next = None;
        match self.buckets[new_key].tail {
            Some(t) => self.slots[t].next = Some(handle.slot),
            None => self.buckets[new_key].head = Some(handle.slot),
        }
        self.buckets[new_key].tail = Some(handle.slot);
        self.settle_max();
        Ok(handle)
    }

    pub fn key_of(&self, handle: Handle) -> Result<usize> {
        self.check(handle)?;
        Ok(self.slots[handle.slot].key)
    }
}
