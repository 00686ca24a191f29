use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::test_case::Value;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
struct Collection {
    items: Vec<Value>,
    next_id: i64,
}

/// Abstract application state: named variables and named collections.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AppState {
    variables: BTreeMap<String, Value>,
    collections: BTreeMap<String, Collection>,
}

impl AppState {
    pub fn new(variables: BTreeMap<String, Value>, collections: BTreeMap<String, Vec<Value>>) -> Self {
        let collections = collections
            .into_iter()
            .map(|(name, items)| {
                let next_id = items
                    .iter()
                    .filter_map(Value::as_int)
                    .max()
                    .map_or(0, |m| m + 1);
                (name, Collection { items, next_id })
            })
            .collect();
        AppState {
            variables,
            collections,
        }
    }

    pub fn variable(&self, name: &str) -> Option<&Value> {
        self.variables.get(name)
    }

    pub fn collection(&self, name: &str) -> Option<&[Value]> {
        self.collections.get(name).map(|c| c.items.as_slice())
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.variables.contains_key(name)
    }

    pub fn has_collection(&self, name: &str) -> bool {
        self.collections.contains_key(name)
    }

    pub(crate) fn set_variable(&mut self, name: &str, v: Value) {
        if let Some(slot) = self.variables.get_mut(name) {
            *slot = v;
        }
    }

    pub(crate) fn insert_next_id(&mut self, name: &str) {
        if let Some(c) = self.collections.get_mut(name) {
            c.items.push(Value::Int(c.next_id));
            c.next_id += 1;
        }
    }

    pub(crate) fn insert(&mut self, name: &str, v: Value) {
        if let Some(c) = self.collections.get_mut(name) {
            if let Value::Int(i) = v {
                c.next_id = c.next_id.max(i + 1);
            }
            c.items.push(v);
        }
    }

    pub(crate) fn remove(&mut self, name: &str, v: &Value) {
        if let Some(c) = self.collections.get_mut(name) {
            if let Some(pos) = c.items.iter().position(|x| x == v) {
                c.items.remove(pos);
            }
        }
    }

    pub(crate) fn clear(&mut self, name: &str) {
        if let Some(c) = self.collections.get_mut(name) {
            c.items.clear();
        }
    }
}
