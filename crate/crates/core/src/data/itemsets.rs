//! SPMF-style frequent-itemset files: one set per line, whitespace-separated
//! integer item ids, optionally followed by `#SUP: k`.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::AssortmentCollection;

/// Dense item index (1-based) to external id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemMap {
    ids: Vec<u64>,
}

impl ItemMap {
    /// Sorted, distinct external ids; position `k` is dense item `k + 1`.
    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn external(&self, item: u32) -> u64 {
        self.ids[item as usize - 1]
    }

    pub fn dense(&self, id: u64) -> Option<u32> {
        self.ids.binary_search(&id).ok().map(|k| k as u32 + 1)
    }
}

/// Parses itemset lines. Blank lines and lines starting with `#`, `@` or `%`
/// are skipped; an item repeated within a line is an error.
pub fn parse_itemsets<R: BufRead>(reader: R, label: &str) -> Result<Vec<Vec<u64>>> {
    let mut sets = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let body = line.split_once('#').map_or(line.as_str(), |(head, _)| head).trim();
        if body.is_empty() || body.starts_with('@') || body.starts_with('%') {
            continue;
        }
        let err = |msg: String| Error::Parse { path: label.to_string(), line: lineno, msg };
        let mut items = Vec::new();
        let mut seen = BTreeSet::new();
        for tok in body.split_whitespace() {
            let id: u64 = tok.parse().map_err(|_| err(format!("invalid item id {tok:?}")))?;
            if !seen.insert(id) {
                return Err(err(format!("item {id} repeated")));
            }
            items.push(id);
        }
        sets.push(items);
    }
    Ok(sets)
}

/// Keeps sets with `min_card <= |S| <= max_card` and relabels their items to
/// a dense `1..=n` in ascending external-id order.
pub fn filter_and_index(
    sets: Vec<Vec<u64>>,
    min_card: usize,
    max_card: usize,
) -> Result<(AssortmentCollection, ItemMap)> {
    let kept: Vec<Vec<u64>> =
        sets.into_iter().filter(|s| !s.is_empty() && (min_card..=max_card).contains(&s.len())).collect();
    if kept.is_empty() {
        return Err(Error::EmptyAfterFilter { min: min_card, max: max_card });
    }
    let ids: Vec<u64> = kept.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let map = ItemMap { ids };
    let dense: HashMap<u64, u32> = map.ids.iter().enumerate().map(|(k, &id)| (id, k as u32 + 1)).collect();
    let c = AssortmentCollection::from_item_lists(
        map.len(),
        kept.into_iter().map(|s| s.iter().map(|id| dense[id]).collect()),
    )?;
    Ok((c, map))
}

/// Reads an itemset file and keeps sets with cardinality in
/// `[min_card, max_card]`.
pub fn load_itemsets(path: &Path, min_card: usize, max_card: usize) -> Result<(AssortmentCollection, ItemMap)> {
    let file = File::open(path)?;
    let sets = parse_itemsets(BufReader::new(file), &path.display().to_string())?;
    filter_and_index(sets, min_card, max_card)
}

/// Writes one line per set, listing external ids.
pub fn write_itemsets<W: Write>(mut w: W, sets: impl IntoIterator<Item = Vec<u64>>) -> Result<()> {
    for s in sets {
        let line: Vec<String> = s.iter().map(u64::to_string).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_itemsets(path: &Path, sets: impl IntoIterator<Item = Vec<u64>>) -> Result<()> {
    write_itemsets(BufWriter::new(File::create(path)?), sets)
}
