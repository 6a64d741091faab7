//! Hash index over one relation, keyed on a (possibly empty) attribute
//! subset. Buckets keep insertion order and support deletion while an
//! iteration over the same bucket is in progress.

use std::collections::HashMap;

use super::{CatalogError, Relation, Tuple, Value};

/// Handle returned by [`HashIndex::probe`]. Stays valid for iteration and
/// deletion until the index is dropped; no second hash lookup is needed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BucketId(usize);

#[derive(Debug)]
struct Entry {
    row: usize,
    alive: bool,
}

#[derive(Debug)]
struct Bucket {
    entries: Vec<Entry>,
    live: usize,
}

/// Invariants:
///   - every source tuple sits in exactly one bucket, under the projection
///     of its values onto the key attributes;
///   - live tuples across all buckets plus `deleted_count` equals the
///     source relation's cardinality;
///   - a bucket whose tuples were all deleted probes as a miss.
#[derive(Debug)]
pub struct HashIndex<'r> {
    rel: &'r Relation,
    key_attrs: Vec<String>,
    key_cols: Vec<usize>,
    map: HashMap<Vec<Value>, usize>,
    buckets: Vec<Bucket>,
    deleted: u64,
}

impl<'r> HashIndex<'r> {
    /// Keys named by attributes of the relation's schema.
    pub fn build(rel: &'r Relation, key_attrs: &[&str]) -> Result<HashIndex<'r>, CatalogError> {
        let mut cols = Vec::with_capacity(key_attrs.len());
        for attr in key_attrs {
            match rel.schema().position(attr) {
                Some(c) => cols.push(c),
                None => return Err(CatalogError::UnknownAttr((*attr).to_string())),
            }
        }
        Ok(HashIndex::build_on_columns(rel, cols))
    }

    /// Keys given as column positions. The executors resolve variable names
    /// to positions once and come through here.
    pub fn build_on_columns(rel: &'r Relation, key_cols: Vec<usize>) -> HashIndex<'r> {
        let key_attrs = key_cols
            .iter()
            .map(|&c| rel.schema().attrs()[c].clone())
            .collect();
        let mut map: HashMap<Vec<Value>, usize> = HashMap::new();
        let mut buckets: Vec<Bucket> = Vec::new();
        for (row, tuple) in rel.tuples().iter().enumerate() {
            let key: Vec<Value> = key_cols.iter().map(|&c| tuple.values[c].clone()).collect();
            let id = *map.entry(key).or_insert_with(|| {
                buckets.push(Bucket {
                    entries: Vec::new(),
                    live: 0,
                });
                buckets.len() - 1
            });
            buckets[id].entries.push(Entry { row, alive: true });
            buckets[id].live += 1;
        }
        HashIndex {
            rel,
            key_attrs,
            key_cols,
            map,
            buckets,
            deleted: 0,
        }
    }

    pub fn source(&self) -> &'r Relation {
        self.rel
    }

    pub fn key_attrs(&self) -> &[String] {
        &self.key_attrs
    }

    /// Single hash lookup. Misses on an absent key and on a bucket emptied
    /// by deletions; the two are indistinguishable to the caller.
    pub fn probe(&self, key: &[Value]) -> Option<BucketId> {
        debug_assert_eq!(key.len(), self.key_cols.len());
        match self.map.get(key) {
            Some(&id) if self.buckets[id].live > 0 => Some(BucketId(id)),
            _ => None,
        }
    }

    pub fn bucket_live(&self, b: BucketId) -> usize {
        self.buckets[b.0].live
    }

    /// Next live tuple at entry position >= `from`, with its position.
    /// Iterating by increasing position visits each tuple present at loop
    /// start exactly once, minus those deleted before their turn.
    pub fn next_live(&self, b: BucketId, from: usize) -> Option<(usize, &'r Tuple)> {
        let bucket = &self.buckets[b.0];
        for (pos, e) in bucket.entries.iter().enumerate().skip(from) {
            if e.alive {
                return Some((pos, &self.rel.tuples()[e.row]));
            }
        }
        None
    }

    /// Deletion addressed by probe handle and entry position, as obtained
    /// from `next_live`. Panics on a position that is out of range or
    /// already dead; executors only ever delete the entry they are visiting.
    pub fn delete_entry(&mut self, b: BucketId, pos: usize) {
        let bucket = &mut self.buckets[b.0];
        let entry = &mut bucket.entries[pos];
        assert!(entry.alive, "entry {} in bucket {} deleted twice", pos, b.0);
        entry.alive = false;
        bucket.live -= 1;
        self.deleted += 1;
    }

    /// Deletion addressed by key and row id. Fails if no live tuple with
    /// that row id sits under the key.
    pub fn delete_tuple(&mut self, key: &[Value], row_id: u64) -> Result<(), CatalogError> {
        let id = match self.map.get(key) {
            Some(&id) => id,
            None => {
                return Err(CatalogError::NotInBucket {
                    relation: self.rel.name().to_string(),
                    row_id,
                })
            }
        };
        let pos = self.buckets[id].entries.iter().position(|e| {
            e.alive && self.rel.tuples()[e.row].row_id == row_id
        });
        match pos {
            Some(pos) => {
                self.delete_entry(BucketId(id), pos);
                Ok(())
            }
            None => Err(CatalogError::NotInBucket {
                relation: self.rel.name().to_string(),
                row_id,
            }),
        }
    }

    pub fn deleted_count(&self) -> u64 {
        self.deleted
    }

    pub fn live_total(&self) -> usize {
        self.buckets.iter().map(|b| b.live).sum()
    }
}
