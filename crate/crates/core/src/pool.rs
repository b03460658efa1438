//! Aging pool shared by cuts and conflict constraints.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::encode::Encoder;

/// Bookkeeping carried by every pooled item.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolMeta {
    pub id: u64,
    pub age: u32,
    /// Rounds in which the item was binding (cuts) or propagated (conflicts).
    pub times_used: u32,
}

pub trait PoolItem: Clone {
    fn meta(&self) -> &PoolMeta;
    fn meta_mut(&mut self) -> &mut PoolMeta;
    /// Whether `self` and `other` describe the same inequality.
    fn duplicates(&self, other: &Self) -> bool;
    fn encode(&self, enc: &mut Encoder);
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pool<T> {
    items: Vec<T>,
    next_id: u64,
    pub max_age: u32,
    pub capacity: usize,
}

impl<T: PoolItem> Pool<T> {
    pub fn new(max_age: u32, capacity: usize) -> Self {
        Self {
            items: Vec::new(),
            next_id: 0,
            max_age,
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items in increasing id order.
    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn get(&self, id: u64) -> Option<&T> {
        self.items
            .binary_search_by_key(&id, |c| c.meta().id)
            .ok()
            .map(|k| &self.items[k])
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Assigns sequential ids to the non-duplicate items, then evicts down to
    /// capacity. Returns the number of items accepted.
    pub fn add(&mut self, new: impl IntoIterator<Item = T>) -> usize {
        let mut accepted = 0;
        for mut item in new {
            if self.items.iter().any(|c| c.duplicates(&item)) {
                continue;
            }
            *item.meta_mut() = PoolMeta {
                id: self.next_id,
                age: 0,
                times_used: 0,
            };
            self.next_id += 1;
            self.items.push(item);
            accepted += 1;
        }
        while self.items.len() > self.capacity {
            self.evict_one();
        }
        accepted
    }

    /// Eviction order: largest age, then fewest uses, then highest id.
    fn evict_one(&mut self) {
        let victim = (0..self.items.len())
            .max_by(|&a, &b| {
                let (ma, mb) = (self.items[a].meta(), self.items[b].meta());
                ma.age
                    .cmp(&mb.age)
                    .then(mb.times_used.cmp(&ma.times_used))
                    .then(ma.id.cmp(&mb.id))
            })
            .expect("evicting from an empty pool");
        self.items.remove(victim);
    }

    /// Ages every item not in `used`, resets the used ones, and removes items
    /// older than `max_age`. Returns the number evicted.
    pub fn age(&mut self, used: &BTreeSet<u64>) -> usize {
        for item in &mut self.items {
            let meta = item.meta_mut();
            if used.contains(&meta.id) {
                meta.age = 0;
                meta.times_used += 1;
            } else {
                meta.age += 1;
            }
        }
        let before = self.items.len();
        let max_age = self.max_age;
        self.items.retain(|c| c.meta().age <= max_age);
        before - self.items.len()
    }

    /// Copy holding only the `r` most recent items.
    pub fn truncated(&self, r: usize) -> Self {
        let skip = self.items.len().saturating_sub(r);
        Self {
            items: self.items[skip..].to_vec(),
            next_id: self.next_id,
            max_age: self.max_age,
            capacity: self.capacity,
        }
    }

    pub fn encode(&self, enc: &mut Encoder) {
        enc.put_u64(self.next_id);
        enc.put_usize(self.items.len());
        for item in &self.items {
            let meta = item.meta();
            enc.put_u64(meta.id);
            enc.put_u64(meta.age as u64);
            enc.put_u64(meta.times_used as u64);
            item.encode(enc);
        }
    }
}
