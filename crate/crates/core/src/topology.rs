//! Coordinates and the neighbor oracle of a single meatball `M_k`.
//!
//! A meatball lives inside the product `H3` of two hyperbolic pieces that
//! share a height function:
//!
//! * `W`, a binary tiling over a finite base path: row `i` has `L * 2^i`
//!   positions, consecutive positions are joined horizontally, and `(i, b)`
//!   has parent `(i - 1, b / 2)`;
//! * `H2`, the rooted ternary tree, addressed by digit strings over `{0,1,2}`.
//!
//! A vertex `(t, w)` pairs a ternary address with a `W` vertex of the same
//! height. Vertical edges step both coordinates to a child at once (six
//! children per vertex); horizontal edges move `w` along its row with `t`
//! fixed. `M_k` keeps rows `0..=k` over a base path of length
//! `(k-1)^2 + k^2 + k^4`, split left to right into `L_k` (`k^2`), `A_k`
//! (`k^4`) and `R_k` (`(k-1)^2`).

use std::fmt;
use std::str::FromStr;

use crate::graph::Graph;
use crate::{Error, Result};

#[allow(clippy::manual_div_ceil)]
mod wide {
    uint::construct_uint! {
        /// Position along a row of `W`; rows reach `2^200` times the base length.
        pub struct U256(4);
    }
}

pub use wide::U256;

/// Largest supported meatball height.
pub const MAX_HEIGHT: u32 = 200;

const T_WORDS: usize = 7;

/// Address in the rooted ternary tree: a string over `{0, 1, 2}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TAddress {
    len: u16,
    packed: [u64; T_WORDS],
}

impl TAddress {
    pub const ROOT: TAddress = TAddress {
        len: 0,
        packed: [0; T_WORDS],
    };

    pub fn from_digits(digits: &[u8]) -> Result<Self> {
        if digits.len() > MAX_HEIGHT as usize {
            return Err(Error::CoordinateOutOfRange(format!(
                "ternary address longer than {MAX_HEIGHT}"
            )));
        }
        let mut t = TAddress::ROOT;
        for &c in digits {
            if c > 2 {
                return Err(Error::CoordinateOutOfRange(format!("ternary digit {c}")));
            }
            t = t.child(c);
        }
        Ok(t)
    }

    /// The address of height `height` whose base-3 value is `index`
    /// (first digit most significant).
    pub fn from_index(height: u32, mut index: u64) -> Self {
        let mut digits = vec![0u8; height as usize];
        for slot in digits.iter_mut().rev() {
            *slot = (index % 3) as u8;
            index /= 3;
        }
        debug_assert_eq!(index, 0);
        Self::from_digits(&digits).expect("valid digits")
    }

    pub fn height(&self) -> u32 {
        self.len as u32
    }

    pub fn digit(&self, i: u32) -> u8 {
        debug_assert!(i < self.height());
        let bit = 2 * i as usize;
        ((self.packed[bit / 64] >> (bit % 64)) & 3) as u8
    }

    fn set_digit(&mut self, i: u32, c: u8) {
        let bit = 2 * i as usize;
        let word = &mut self.packed[bit / 64];
        *word &= !(3u64 << (bit % 64));
        *word |= (c as u64) << (bit % 64);
    }

    pub fn child(&self, c: u8) -> Self {
        assert!(c < 3 && self.height() < MAX_HEIGHT);
        let mut t = *self;
        t.set_digit(self.height(), c);
        t.len += 1;
        t
    }

    pub fn parent(&self) -> Option<Self> {
        if self.len == 0 {
            return None;
        }
        let mut t = *self;
        t.set_digit(self.height() - 1, 0);
        t.len -= 1;
        Some(t)
    }

    pub fn digits(&self) -> Vec<u8> {
        (0..self.height()).map(|i| self.digit(i)).collect()
    }

    /// Base-3 value of the digit string. Only meaningful for heights up to 40.
    pub fn index(&self) -> u64 {
        (0..self.height()).fold(0u64, |acc, i| acc * 3 + self.digit(i) as u64)
    }

    pub fn has_prefix(&self, prefix: &TAddress) -> bool {
        prefix.height() <= self.height() && (0..prefix.height()).all(|i| self.digit(i) == prefix.digit(i))
    }

    /// Applies the transposition `a <-> b` to the digit right after `prefix`,
    /// for addresses extending `prefix`; other addresses are unchanged. This
    /// is the ternary-subtree swap used as a symmetry of `H3`.
    pub fn swap_below(&self, prefix: &TAddress, a: u8, b: u8) -> Self {
        let m = prefix.height();
        if self.height() <= m || !self.has_prefix(prefix) {
            return *self;
        }
        let c = self.digit(m);
        let mut t = *self;
        if c == a {
            t.set_digit(m, b);
        } else if c == b {
            t.set_digit(m, a);
        }
        t
    }
}

impl fmt::Display for TAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return f.write_str("-");
        }
        for i in 0..self.height() {
            write!(f, "{}", self.digit(i))?;
        }
        Ok(())
    }
}

impl fmt::Debug for TAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t:{self}")
    }
}

impl FromStr for TAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "-" {
            return Ok(TAddress::ROOT);
        }
        let digits = s
            .bytes()
            .map(|b| match b {
                b'0'..=b'2' => Ok(b - b'0'),
                _ => Err(Error::Parse(format!("bad ternary address {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if digits.is_empty() {
            return Err(Error::Parse("empty ternary address (use '-')".into()));
        }
        TAddress::from_digits(&digits)
    }
}

/// Vertex of the binary tiling `W`: row (height) and position within the row.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct WVertex {
    pub row: u32,
    pub pos: U256,
}

impl WVertex {
    pub fn new(row: u32, pos: u64) -> Self {
        WVertex {
            row,
            pos: U256::from(pos),
        }
    }

    pub fn parent(&self) -> Option<Self> {
        (self.row > 0).then(|| WVertex {
            row: self.row - 1,
            pos: self.pos >> 1,
        })
    }

    pub fn child(&self, bit: u8) -> Self {
        WVertex {
            row: self.row + 1,
            pos: (self.pos << 1) | U256::from(bit),
        }
    }

    /// Base position this vertex lies above: `pos / 2^row`.
    pub fn base_position(&self) -> u64 {
        (self.pos >> self.row as usize).low_u64()
    }

    /// Position relative to the start of the column over base position `base`.
    pub fn shifted(&self, delta_base: i64) -> Self {
        let delta = U256::from(delta_base.unsigned_abs()) << self.row as usize;
        let pos = if delta_base >= 0 {
            self.pos + delta
        } else {
            self.pos - delta
        };
        WVertex { row: self.row, pos }
    }
}

/// Vertex of `H3`: ternary address and `W` vertex of equal height.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct H3Vertex {
    pub t: TAddress,
    pub w: WVertex,
}

impl H3Vertex {
    pub fn new(t: TAddress, w: WVertex) -> Result<Self> {
        if t.height() != w.row {
            return Err(Error::CoordinateOutOfRange(format!(
                "ternary height {} differs from row {}",
                t.height(),
                w.row
            )));
        }
        Ok(H3Vertex { t, w })
    }

    /// Base vertex `(root, (0, pos))`.
    pub fn base(pos: u64) -> Self {
        H3Vertex {
            t: TAddress::ROOT,
            w: WVertex::new(0, pos),
        }
    }

    pub fn row(&self) -> u32 {
        self.w.row
    }

    pub fn base_position(&self) -> u64 {
        self.w.base_position()
    }

    pub fn parent(&self) -> Option<Self> {
        Some(H3Vertex {
            t: self.t.parent()?,
            w: self.w.parent()?,
        })
    }

    /// The six children, ordered by ternary digit then `W` bit.
    pub fn children(&self) -> impl Iterator<Item = H3Vertex> + '_ {
        (0..3u8).flat_map(move |c| {
            (0..2u8).map(move |b| H3Vertex {
                t: self.t.child(c),
                w: self.w.child(b),
            })
        })
    }

    /// The always-left lift of this vertex through ternary child `c`.
    pub fn left_child(&self, c: u8) -> Self {
        H3Vertex {
            t: self.t.child(c),
            w: self.w.child(0),
        }
    }

    pub fn shifted(&self, delta_base: i64) -> Self {
        H3Vertex {
            t: self.t,
            w: self.w.shifted(delta_base),
        }
    }
}

impl fmt::Display for H3Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t:{}/w:{},{}", self.t, self.w.row, self.w.pos)
    }
}

impl fmt::Debug for H3Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for H3Vertex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad vertex {s:?}"));
        let (t, w) = s.split_once("/w:").ok_or_else(bad)?;
        let t = t.strip_prefix("t:").ok_or_else(bad)?;
        let (row, pos) = w.split_once(',').ok_or_else(bad)?;
        let row: u32 = row.parse().map_err(|_| bad())?;
        if pos.is_empty() || !pos.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let pos = U256::from_dec_str(pos).map_err(|_| bad())?;
        H3Vertex::new(t.parse()?, WVertex { row, pos })
    }
}

/// Which side of the `M^L_k` / `M^R_k` split a vertex lies on.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Side {
    Left,
    Right,
}

/// Segment class of a base position.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Segment {
    L,
    A,
    R,
}

/// Parameters of the meatball `M_k` and its gadget.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct MeatballSpec {
    pub k: u32,
    pub d: u32,
}

impl MeatballSpec {
    pub fn new(k: u32, d: u32) -> Result<Self> {
        if k == 0 || k > MAX_HEIGHT {
            return Err(Error::InvalidParameter(format!(
                "meatball level k={k} outside 1..={MAX_HEIGHT}"
            )));
        }
        if d <= 6 {
            return Err(Error::InvalidParameter(format!("branching d={d} must exceed 6")));
        }
        Ok(MeatballSpec { k, d })
    }

    pub fn len_l(&self) -> u64 {
        let k = self.k as u64;
        k * k
    }

    pub fn len_a(&self) -> u64 {
        let k = self.k as u64;
        k * k * k * k
    }

    pub fn len_r(&self) -> u64 {
        let k = self.k as u64 - 1;
        k * k
    }

    pub fn base_len(&self) -> u64 {
        self.len_l() + self.len_a() + self.len_r()
    }

    /// First base position of `R_k`, i.e. `k^2 + k^4`.
    pub fn split(&self) -> u64 {
        self.len_l() + self.len_a()
    }

    pub fn height_cap(&self) -> u32 {
        self.k
    }

    pub fn segment_of(&self, base: u64) -> Segment {
        if base < self.len_l() {
            Segment::L
        } else if base < self.split() {
            Segment::A
        } else {
            Segment::R
        }
    }

    /// Number of positions in `row`.
    pub fn row_width(&self, row: u32) -> U256 {
        U256::from(self.base_len()) << row as usize
    }

    pub fn validate(&self, v: &H3Vertex) -> Result<()> {
        if v.t.height() != v.w.row {
            return Err(Error::CoordinateOutOfRange(format!("{v}: ternary height differs from row")));
        }
        if v.w.row > self.k {
            return Err(Error::CoordinateOutOfRange(format!(
                "{v}: row above height cap {}",
                self.k
            )));
        }
        if v.w.pos >= self.row_width(v.w.row) {
            return Err(Error::CoordinateOutOfRange(format!(
                "{v}: position outside base length {}",
                self.base_len()
            )));
        }
        Ok(())
    }

    pub fn contains(&self, v: &H3Vertex) -> bool {
        self.validate(v).is_ok()
    }

    /// `|M^L_k|`, the closed-form volume `(6^{k+1} - 1)/5 * (k^4 + k^2)`.
    pub fn left_volume(&self) -> u128 {
        geometric6(self.k) * self.split() as u128
    }

    /// `|M_k| = baseLen * (6^{k+1} - 1)/5`.
    pub fn full_volume(&self) -> u128 {
        geometric6(self.k) * self.base_len() as u128
    }
}

/// `sum_{i=0}^{k} 6^i`, saturating.
pub fn geometric6(k: u32) -> u128 {
    let mut total: u128 = 0;
    let mut p: u128 = 1;
    for _ in 0..=k {
        total = total.saturating_add(p);
        p = p.saturating_mul(6);
    }
    total
}

/// Which side of the split `v` lies on: left iff its base position is
/// below `k^2 + k^4`.
pub fn side_of(spec: &MeatballSpec, v: &H3Vertex) -> Side {
    if v.base_position() < spec.split() {
        Side::Left
    } else {
        Side::Right
    }
}

/// Neighbors of `v` inside `M_k`: horizontal (same `t`), the parent, and the
/// six children below the height cap.
pub fn neighbors_in_meatball(spec: &MeatballSpec, v: &H3Vertex) -> Result<Vec<H3Vertex>> {
    spec.validate(v)?;
    let mut out = Vec::with_capacity(9);
    if v.w.pos > U256::zero() {
        out.push(H3Vertex {
            t: v.t,
            w: WVertex {
                row: v.w.row,
                pos: v.w.pos - 1,
            },
        });
    }
    if v.w.pos + 1 < spec.row_width(v.w.row) {
        out.push(H3Vertex {
            t: v.t,
            w: WVertex {
                row: v.w.row,
                pos: v.w.pos + 1,
            },
        });
    }
    if let Some(p) = v.parent() {
        out.push(p);
    }
    if v.w.row < spec.k {
        out.extend(v.children());
    }
    Ok(out)
}

/// The left endpoints of the horizontal edges joining `M^L_k` to `M^R_k`:
/// one vertex per row and ternary address, at position `(k^2+k^4) 2^i - 1`.
pub fn boundary_bk(spec: &MeatballSpec) -> Vec<H3Vertex> {
    let mut out = Vec::new();
    for row in 0..=spec.k {
        let pos = (U256::from(spec.split()) << row as usize) - 1;
        for ti in 0..3u64.pow(row) {
            out.push(H3Vertex {
                t: TAddress::from_index(row, ti),
                w: WVertex { row, pos },
            });
        }
    }
    out
}

/// Which part of a meatball to materialize.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Part {
    Full,
    LeftOnly,
}

/// Dense numbering of the vertices of `M_k` (or of `M^L_k`) ordered by row,
/// ternary index, then position. Practical for `k` up to about 12.
#[derive(Clone, Debug)]
pub struct MeatballIndex {
    spec: MeatballSpec,
    width0: u64,
    row_offsets: Vec<u64>,
}

impl MeatballIndex {
    pub fn new(spec: MeatballSpec, part: Part) -> Result<Self> {
        if spec.k > 20 {
            return Err(Error::InvalidParameter(format!(
                "dense meatball index needs k <= 20, got {}",
                spec.k
            )));
        }
        let width0 = match part {
            Part::Full => spec.base_len(),
            Part::LeftOnly => spec.split(),
        };
        let mut row_offsets = vec![0u64];
        for i in 0..=spec.k {
            let count = 6u64.pow(i) * width0;
            row_offsets.push(row_offsets[i as usize] + count);
        }
        Ok(MeatballIndex {
            spec,
            width0,
            row_offsets,
        })
    }

    pub fn len(&self) -> u64 {
        *self.row_offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spec(&self) -> &MeatballSpec {
        &self.spec
    }

    pub fn index(&self, v: &H3Vertex) -> Option<u64> {
        let row = v.w.row;
        if row > self.spec.k || v.t.height() != row {
            return None;
        }
        let width = self.width0 << row;
        if v.w.pos >= U256::from(width) {
            return None;
        }
        Some(self.row_offsets[row as usize] + v.t.index() * width + v.w.pos.low_u64())
    }

    pub fn vertex(&self, idx: u64) -> H3Vertex {
        let row = self.row_offsets.partition_point(|&o| o <= idx) as u32 - 1;
        let width = self.width0 << row;
        let rel = idx - self.row_offsets[row as usize];
        H3Vertex {
            t: TAddress::from_index(row, rel / width),
            w: WVertex::new(row, rel % width),
        }
    }
}

/// Per-row vertex counts of `M^L_k` found by breadth-first search through
/// the neighbor oracle from the base segment `L_k ∪ A_k`. Uses a dense
/// visited bitmap over `M_k` instead of materializing adjacency.
pub fn enumerate_left_rows(spec: &MeatballSpec, budget: u64) -> Result<Vec<u64>> {
    let estimate = spec.full_volume();
    if estimate > budget as u128 {
        return Err(Error::budget(format!("enumeration of M_{}", spec.k), estimate, budget));
    }
    let index = MeatballIndex::new(*spec, Part::Full)?;
    let mut seen = vec![0u64; (index.len() as usize).div_ceil(64)];
    let mut visit = |i: u64| {
        let (w, b) = ((i / 64) as usize, i % 64);
        let fresh = seen[w] >> b & 1 == 0;
        seen[w] |= 1 << b;
        fresh
    };
    let mut queue: std::collections::VecDeque<u64> = std::collections::VecDeque::new();
    for p in 0..spec.split() {
        let i = index.index(&H3Vertex::base(p)).expect("base vertex");
        visit(i);
        queue.push_back(i);
    }
    let mut rows = vec![0u64; spec.k as usize + 1];
    while let Some(i) = queue.pop_front() {
        let v = index.vertex(i);
        rows[v.row() as usize] += 1;
        for u in neighbors_in_meatball(spec, &v)? {
            if side_of(spec, &u) == Side::Left {
                let j = index.index(&u).expect("neighbor inside M_k");
                if visit(j) {
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(rows)
}

/// Materializes `M_k` or `M^L_k` as an explicit graph.
pub fn materialize_meatball(spec: &MeatballSpec, part: Part, budget: u64) -> Result<Graph<H3Vertex>> {
    let estimate = match part {
        Part::Full => spec.full_volume(),
        Part::LeftOnly => spec.left_volume(),
    };
    if estimate > budget as u128 {
        return Err(Error::budget(format!("meatball M_{} ({part:?})", spec.k), estimate, budget));
    }
    let index = MeatballIndex::new(*spec, part)?;
    let n = index.len();
    let vertices: Vec<H3Vertex> = (0..n).map(|i| index.vertex(i)).collect();
    let adjacency = vertices
        .iter()
        .map(|v| {
            neighbors_in_meatball(spec, v)
                .expect("enumerated vertex is valid")
                .iter()
                .filter_map(|u| index.index(u).map(|i| i as u32))
                .collect()
        })
        .collect();
    Ok(Graph::from_adjacency(vertices, adjacency))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: u32) -> MeatballSpec {
        MeatballSpec::new(k, 7).unwrap()
    }

    fn v(t: &str, row: u32, pos: u64) -> H3Vertex {
        H3Vertex::new(t.parse().unwrap(), WVertex::new(row, pos)).unwrap()
    }

    #[test]
    fn ternary_addresses() {
        let t: TAddress = "0212".parse().unwrap();
        assert_eq!(t.height(), 4);
        assert_eq!(t.to_string(), "0212");
        assert_eq!(t.parent().unwrap().to_string(), "021");
        assert_eq!(TAddress::from_index(4, t.index()), t);
        assert_eq!(TAddress::ROOT.to_string(), "-");
        assert!("03".parse::<TAddress>().is_err());
        let p: TAddress = "02".parse().unwrap();
        assert_eq!(t.swap_below(&p, 1, 2).to_string(), "0222");
        assert_eq!(t.swap_below(&"1".parse().unwrap(), 1, 2), t);
    }

    #[test]
    fn w_parent_and_children() {
        let w = WVertex::new(3, 11);
        assert_eq!(w.parent().unwrap(), WVertex::new(2, 5));
        assert_eq!(WVertex::new(1, 39).base_position(), 19);
        assert_eq!(WVertex::new(2, 5).child(1), WVertex::new(3, 11));
    }

    #[test]
    fn text_grammar() {
        let x = v("01", 2, 77);
        assert_eq!(x.to_string(), "t:01/w:2,77");
        assert_eq!("t:01/w:2,77".parse::<H3Vertex>().unwrap(), x);
        assert_eq!(H3Vertex::base(3).to_string(), "t:-/w:0,3");
        assert!("t:0/w:2,1".parse::<H3Vertex>().is_err());
        assert!("t:-/w:0,-1".parse::<H3Vertex>().is_err());
    }

    #[test]
    fn segment_lengths() {
        let s = spec(3);
        assert_eq!((s.len_l(), s.len_a(), s.len_r()), (9, 81, 4));
        assert_eq!(s.base_len(), 94);
        assert_eq!(s.segment_of(8), Segment::L);
        assert_eq!(s.segment_of(89), Segment::A);
        assert_eq!(s.segment_of(90), Segment::R);
        assert!(MeatballSpec::new(2, 6).is_err());
        assert!(MeatballSpec::new(0, 7).is_err());
    }

    #[test]
    fn corner_degree_k1() {
        let n = neighbors_in_meatball(&spec(1), &H3Vertex::base(0)).unwrap();
        assert_eq!(n.len(), 7);
        assert!(n.contains(&H3Vertex::base(1)));
        assert_eq!(n.iter().filter(|u| u.row() == 1).count(), 6);
    }

    #[test]
    fn out_of_range_is_rejected() {
        let s = spec(1);
        assert!(matches!(
            neighbors_in_meatball(&s, &H3Vertex::base(2)),
            Err(Error::CoordinateOutOfRange(_))
        ));
        assert!(neighbors_in_meatball(&s, &v("00", 2, 0)).is_err());
    }

    #[test]
    fn side_threshold() {
        let s = spec(2);
        assert_eq!(side_of(&s, &H3Vertex::base(19)), Side::Left);
        assert_eq!(side_of(&s, &H3Vertex::base(20)), Side::Right);
        assert_eq!(side_of(&s, &v("0", 1, 39)), Side::Left);
        assert_eq!(side_of(&s, &v("0", 1, 40)), Side::Right);
    }

    #[test]
    fn boundary_counts() {
        let b1 = boundary_bk(&spec(1));
        assert_eq!(b1[0], H3Vertex::base(1));
        assert_eq!(b1.iter().filter(|x| x.row() == 1).count(), 3);
        assert!(b1.iter().filter(|x| x.row() == 1).all(|x| x.w.pos == U256::from(3)));
        assert_eq!(boundary_bk(&spec(2)).len(), 13);
    }

    #[test]
    fn volumes_match_enumeration() {
        let g = materialize_meatball(&spec(1), Part::LeftOnly, 1000).unwrap();
        assert_eq!(g.len(), 14);
        let g = materialize_meatball(&spec(2), Part::Full, 10_000).unwrap();
        assert_eq!(g.len(), 903);
        let left = materialize_meatball(&spec(2), Part::LeftOnly, 10_000).unwrap();
        assert_eq!(left.vertices().iter().filter(|x| x.row() == 1).count(), 120);
        assert_eq!(enumerate_left_rows(&spec(2), 10_000).unwrap(), vec![20, 120, 720]);
    }

    #[test]
    fn budget_is_enforced() {
        let err = materialize_meatball(&spec(4), Part::Full, 1000).unwrap_err();
        match err {
            Error::BudgetExceeded { estimate, .. } => assert_eq!(estimate, 281 * 1555),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn interior_degree_nine() {
        let s = spec(3);
        let n = neighbors_in_meatball(&s, &v("1", 1, 50)).unwrap();
        assert_eq!(n.len(), 9);
        let top = neighbors_in_meatball(&s, &v("120", 3, 400)).unwrap();
        assert_eq!(top.len(), 3);
    }

    #[test]
    fn dense_index_roundtrip() {
        let idx = MeatballIndex::new(spec(2), Part::Full).unwrap();
        assert_eq!(idx.len(), 903);
        for i in [0, 20, 21, 146, 147, 902] {
            assert_eq!(idx.index(&idx.vertex(i)), Some(i));
        }
    }
}
