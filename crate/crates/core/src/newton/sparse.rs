use std::hash::{DefaultHasher, Hasher};

/// Receiver for Jacobian entries. Entries with the same position are summed.
pub trait EntrySink {
    fn add(&mut self, row: usize, col: usize, value: f64);
}

impl EntrySink for Vec<(usize, usize, f64)> {
    fn add(&mut self, row: usize, col: usize, value: f64) {
        self.push((row, col, value));
    }
}

/// Emission sequence of the first assembly mapped onto compressed-column
/// storage.
#[derive(Debug, Clone)]
struct Pattern {
    emitted: Vec<(usize, usize)>,
    /// Value slot of each emission.
    slot: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    hash: u64,
}

/// The entry sequence differs from the one recorded at the first assembly.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("Jacobian pattern changed at emission {index}: expected {expected:?}, got {got:?}")]
pub struct PatternMismatch {
    pub index: usize,
    pub expected: Option<(usize, usize)>,
    pub got: Option<(usize, usize)>,
}

/// Square sparse matrix whose structure is fixed by its first assembly.
/// Later assemblies must emit the identical `(row, col)` sequence and only
/// overwrite values.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    n: usize,
    pattern: Option<Pattern>,
    values: Vec<f64>,
    last_hash: u64,
}

impl SystemMatrix {
    pub fn new(n: usize) -> Self {
        SystemMatrix {
            n,
            pattern: None,
            values: Vec::new(),
            last_hash: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn assemble(&mut self, emit: impl FnOnce(&mut dyn EntrySink)) -> Result<(), PatternMismatch> {
        match &self.pattern {
            None => {
                let mut entries: Vec<(usize, usize, f64)> = Vec::new();
                emit(&mut entries);
                self.build(entries);
                Ok(())
            }
            Some(pattern) => {
                let mut refill = Refill {
                    pattern,
                    values: &mut self.values,
                    cursor: 0,
                    hasher: DefaultHasher::new(),
                    error: None,
                };
                refill.values.iter_mut().for_each(|v| *v = 0.0);
                emit(&mut refill);
                let (cursor, hash, error) = (refill.cursor, refill.hasher.finish(), refill.error);
                if let Some(e) = error {
                    return Err(e);
                }
                if cursor != pattern.emitted.len() {
                    return Err(PatternMismatch {
                        index: cursor,
                        expected: pattern.emitted.get(cursor).copied(),
                        got: None,
                    });
                }
                self.last_hash = hash;
                Ok(())
            }
        }
    }

    fn build(&mut self, entries: Vec<(usize, usize, f64)>) {
        let mut hasher = DefaultHasher::new();
        for &(r, c, _) in &entries {
            assert!(r < self.n && c < self.n, "entry ({r}, {c}) outside {}", self.n);
            hasher.write_usize(r);
            hasher.write_usize(c);
        }
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by_key(|&k| (entries[k].1, entries[k].0));
        let mut col_ptr = vec![0usize; self.n + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        let mut slot = vec![0usize; entries.len()];
        let mut last = None;
        for k in order {
            let (r, c, v) = entries[k];
            if last != Some((r, c)) {
                row_idx.push(r);
                values.push(0.0);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
            let s = values.len() - 1;
            values[s] += v;
            slot[k] = s;
        }
        for c in 0..self.n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let hash = hasher.finish();
        self.values = values;
        self.last_hash = hash;
        self.pattern = Some(Pattern {
            emitted: entries.iter().map(|&(r, c, _)| (r, c)).collect(),
            slot,
            col_ptr,
            row_idx,
            hash,
        });
    }

    /// Hash of the emission sequence recorded at the first assembly.
    pub fn pattern_hash(&self) -> Option<u64> {
        self.pattern.as_ref().map(|p| p.hash)
    }

    /// Hash of the emission sequence of the most recent assembly.
    pub fn last_emission_hash(&self) -> u64 {
        self.last_hash
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        self.pattern.as_ref().map_or(&[], |p| &p.col_ptr)
    }

    pub fn row_idx(&self) -> &[usize] {
        self.pattern.as_ref().map_or(&[], |p| &p.row_idx)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        let (col_ptr, row_idx) = (self.col_ptr(), self.row_idx());
        for c in 0..self.n.min(col_ptr.len().saturating_sub(1)) {
            for k in col_ptr[c]..col_ptr[c + 1] {
                dense[row_idx[k]][c] = self.values[k];
            }
        }
        dense
    }
}

struct Refill<'a> {
    pattern: &'a Pattern,
    values: &'a mut Vec<f64>,
    cursor: usize,
    hasher: DefaultHasher,
    error: Option<PatternMismatch>,
}

impl EntrySink for Refill<'_> {
    fn add(&mut self, row: usize, col: usize, value: f64) {
        if self.error.is_some() {
            return;
        }
        let k = self.cursor;
        if self.pattern.emitted.get(k) != Some(&(row, col)) {
            self.error = Some(PatternMismatch {
                index: k,
                expected: self.pattern.emitted.get(k).copied(),
                got: Some((row, col)),
            });
            return;
        }
        self.hasher.write_usize(row);
        self.hasher.write_usize(col);
        self.values[self.pattern.slot[k]] += value;
        self.cursor += 1;
    }
}
