use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

fn adjacent_in(order: &[String], a: &str, b: &str) -> bool {
    order.windows(2).any(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a))
}

fn contiguous_in(order: &[String], seq: &[String]) -> bool {
    order.windows(seq.len()).any(|w| w == seq)
}

/// Smallest sequence (lexicographic over distinct symbols, length ≥ 2)
/// that is no contiguous piece of a training order and whose adjacent
/// pairs never sit next to each other, in either direction, in training.
pub fn recompose_primitives(train_orders: &[Vec<String>], alphabet: &BTreeSet<String>) -> Result<Vec<String>> {
    if train_orders.is_empty() {
        return Err(Error::Precondition("no training orders".into()));
    }
    if alphabet.len() < 2 {
        return Err(Error::Precondition("alphabet needs at least two symbols".into()));
    }
    let symbols: Vec<&String> = alphabet.iter().collect();
    let mut seq = Vec::new();
    if search(train_orders, &symbols, &mut seq) {
        Ok(seq)
    } else {
        Err(Error::NoNovelComposition)
    }
}

fn search(train: &[Vec<String>], symbols: &[&String], seq: &mut Vec<String>) -> bool {
    for s in symbols {
        if seq.contains(*s) {
            continue;
        }
        if let Some(last) = seq.last() {
            if train.iter().any(|o| adjacent_in(o, last, s)) {
                continue;
            }
        }
        seq.push((*s).clone());
        if seq.len() >= 2 && !train.iter().any(|o| contiguous_in(o, seq)) {
            return true;
        }
        if search(train, symbols, seq) {
            return true;
        }
        seq.pop();
    }
    false
}
