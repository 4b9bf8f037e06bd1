//! GF(2) linear algebra for the graphic matroid of a complete graph:
//! binary representation matrices, rank, wedge vectors (vectors of p-by-p
//! minors), and weighted max q-representative families computed by
//! incremental elimination in weight order.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatroidError {
    #[error("set size {got} does not match declared p = {expected}")]
    WrongMemberSize { got: usize, expected: usize },
    #[error("p + q = {pq} but matrix rank space has {rows} rows")]
    RankMismatch { pq: usize, rows: usize },
    #[error("subset size {p} exceeds row count {rows}")]
    TooManyRows { p: usize, rows: usize },
    #[error("column {0} out of range ({1} columns)")]
    ColumnOutOfRange(u32, usize),
}

/// Dense bit matrix over GF(2), row-major, rows packed into u64 words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BinaryMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64).max(1);
        BinaryMatrix {
            rows,
            cols,
            words_per_row,
            bits: vec![0; rows * words_per_row],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        self.bits[r * self.words_per_row + c / 64] >> (c % 64) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let word = &mut self.bits[r * self.words_per_row + c / 64];
        if value {
            *word |= 1 << (c % 64);
        } else {
            *word &= !(1 << (c % 64));
        }
    }

    /// The selected column as a bitset over rows.
    fn column_bits(&self, c: usize) -> Vec<u64> {
        let words = self.rows.div_ceil(64).max(1);
        let mut out = vec![0u64; words];
        for r in 0..self.rows {
            if self.get(r, c) {
                out[r / 64] |= 1 << (r % 64);
            }
        }
        out
    }
}

/// Binary representation of the graphic matroid of the complete graph on
/// `k` vertices: one row per vertex except the last, one column per edge
/// (lexicographic order), column of {u, v} = indicator of u plus indicator
/// of v. A column set is independent iff the edge set is a forest.
pub fn complete_graph_representation(k: usize) -> BinaryMatrix {
    let rows = k.saturating_sub(1);
    let cols = k * k.saturating_sub(1) / 2;
    let mut m = BinaryMatrix::new(rows, cols);
    let mut c = 0;
    for u in 0..k {
        for v in u + 1..k {
            if u < rows {
                m.set(u, c, true);
            }
            if v < rows {
                m.set(v, c, true);
            }
            c += 1;
        }
    }
    m
}

/// Lexicographic column id of edge {a, b} (a < b) in `complete_graph_representation(k)`.
pub fn complete_graph_column(k: usize, a: usize, b: usize) -> u32 {
    debug_assert!(a < b && b < k);
    (a * k - a * (a + 1) / 2 + (b - a - 1)) as u32
}

/// Rank over GF(2) of the selected columns; a set is independent iff its
/// rank equals its size.
pub fn gf2_rank(m: &BinaryMatrix, columns: &[u32]) -> usize {
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut rank = 0;
    for &c in columns {
        let mut v = m.column_bits(c as usize);
        for b in &basis {
            let pivot = first_set_bit(b).unwrap();
            if bit_at(&v, pivot) {
                xor_into(&mut v, b);
            }
        }
        if first_set_bit(&v).is_some() {
            basis.push(v);
            rank += 1;
        }
    }
    rank
}

/// Bit vector indexed by p-subsets of rows in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WedgeVector {
    pub len: usize,
    pub bits: Vec<u64>,
}

impl WedgeVector {
    fn zeros(len: usize) -> Self {
        WedgeVector {
            len,
            bits: vec![0; len.div_ceil(64).max(1)],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }
}

/// Entry at row-subset I is the determinant over GF(2) of the p x p
/// submatrix m[I, s]. The vector is zero iff `s` is dependent; for p = 0
/// it is the single entry 1.
pub fn wedge_vector(m: &BinaryMatrix, s: &[u32]) -> Result<WedgeVector, MatroidError> {
    let p = s.len();
    if p > m.rows() {
        return Err(MatroidError::TooManyRows { p, rows: m.rows() });
    }
    for &c in s {
        if c as usize >= m.cols() {
            return Err(MatroidError::ColumnOutOfRange(c, m.cols()));
        }
    }
    let len = binomial(m.rows(), p);
    let mut out = WedgeVector::zeros(len);
    if p == 0 {
        out.set(0);
        return Ok(out);
    }
    let mut subset: Vec<usize> = (0..p).collect();
    let mut index = 0;
    loop {
        if submatrix_determinant(m, &subset, s) {
            out.set(index);
        }
        index += 1;
        if !advance_subset(&mut subset, m.rows()) {
            break;
        }
    }
    debug_assert_eq!(index, len);
    Ok(out)
}

/// Determinant over GF(2) of m[rows, cols] via elimination, with each
/// selected row packed into one u64 (|cols| <= 64 always holds here).
fn submatrix_determinant(m: &BinaryMatrix, rows: &[usize], cols: &[u32]) -> bool {
    let p = rows.len();
    debug_assert!(p <= 64);
    let mut packed: Vec<u64> = rows
        .iter()
        .map(|&r| {
            let mut word = 0u64;
            for (j, &c) in cols.iter().enumerate() {
                if m.get(r, c as usize) {
                    word |= 1 << j;
                }
            }
            word
        })
        .collect();
    for col in 0..p {
        let pivot = match (col..p).find(|&i| packed[i] >> col & 1 == 1) {
            Some(i) => i,
            None => return false,
        };
        packed.swap(col, pivot);
        let row = packed[col];
        for other in packed.iter_mut().skip(col + 1) {
            if *other >> col & 1 == 1 {
                *other ^= row;
            }
        }
    }
    true
}

/// Advances a sorted p-subset of 0..n to its lexicographic successor.
fn advance_subset(subset: &mut [usize], n: usize) -> bool {
    let p = subset.len();
    let mut i = p;
    while i > 0 {
        i -= 1;
        if subset[i] < n - (p - i) {
            subset[i] += 1;
            for j in i + 1..p {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: usize = 1;
    for i in 0..k {
        out = out * (n - i) / (i + 1);
    }
    out
}

/// One family member: a p-column set with a weight and an opaque caller id.
#[derive(Debug, Clone)]
pub struct WeightedSet {
    pub columns: Vec<u32>,
    pub weight: u64,
    pub payload: usize,
}

/// Computes a weighted max q-representative subfamily of `family` in the
/// graphic matroid represented by `ground`, returning the payload ids of
/// the kept members.
///
/// Members are processed in non-increasing weight order (ties by insertion
/// order); one is kept iff its wedge vector falls outside the GF(2) span of
/// the vectors kept so far. Dependent members (zero wedge vector) are
/// discarded. The output size is at most C(p+q, p).
pub fn max_q_representative(
    ground: &BinaryMatrix,
    family: &[WeightedSet],
    p: usize,
    q: usize,
) -> Result<Vec<usize>, MatroidError> {
    if p + q != ground.rows() {
        return Err(MatroidError::RankMismatch {
            pq: p + q,
            rows: ground.rows(),
        });
    }
    for member in family {
        if member.columns.len() != p {
            return Err(MatroidError::WrongMemberSize {
                got: member.columns.len(),
                expected: p,
            });
        }
        for &c in &member.columns {
            if c as usize >= ground.cols() {
                return Err(MatroidError::ColumnOutOfRange(c, ground.cols()));
            }
        }
    }
    let mut order: Vec<usize> = (0..family.len()).collect();
    order.sort_by(|&a, &b| family[b].weight.cmp(&family[a].weight));

    if p == 0 {
        // Rank-0 fast path: every wedge vector is [1]; keep the heaviest.
        return Ok(order.first().map(|&i| family[i].payload).into_iter().collect());
    }

    let bound = binomial(p + q, p);
    let mut basis: Vec<WedgeVector> = Vec::new();
    let mut kept = Vec::new();
    for &i in &order {
        let mut v = wedge_vector(ground, &family[i].columns)?;
        for b in &basis {
            let pivot = first_set_bit(&b.bits).unwrap();
            if bit_at(&v.bits, pivot) {
                xor_into(&mut v.bits, &b.bits);
            }
        }
        if !v.is_zero() {
            basis.push(v);
            kept.push(family[i].payload);
        }
    }
    debug_assert!(kept.len() <= bound);
    Ok(kept)
}

fn first_set_bit(words: &[u64]) -> Option<usize> {
    for (i, &w) in words.iter().enumerate() {
        if w != 0 {
            return Some(i * 64 + w.trailing_zeros() as usize);
        }
    }
    None
}

fn bit_at(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

fn xor_into(target: &mut [u64], source: &[u64]) {
    for (t, s) in target.iter_mut().zip(source) {
        *t ^= s;
    }
}
