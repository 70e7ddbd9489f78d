//! Kůrka cover systems `{J_i}, {V_s}, {W_s}` for concrete compact spaces, the
//! projection `π: Λ → X`, Lebesgue numbers and lex-least ball location.
//!
//! Open sets are [`Cell`]s, closed sets are [`Region`]s. All geometry is exact.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::rational::{fmt_rational, integer, pow2_neg, ratio, Rational};
use crate::symbolic::{fmt_word, SymbolicSpace, Word};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoverError {
    #[error("InvalidBranch: symbol {symbol} at level {level} (alphabet {alphabet})")]
    InvalidBranch { level: usize, symbol: u64, alphabet: u64 },
    #[error("NoCell: no level-{k} cell extending `{constraint}` contains the ball of radius {radius} around {region}")]
    NoCell { k: usize, constraint: String, radius: String, region: String },
    #[error("prefix has length {got}, resolution {k} requested")]
    ShortPrefix { k: usize, got: usize },
    #[error("invalid finite metric: {0}")]
    BadMetric(String),
}

/// Rational distance matrix of a finite metric space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMetric {
    dist: Vec<Vec<Rational>>,
}

impl FiniteMetric {
    pub fn new(dist: Vec<Vec<Rational>>) -> Result<Self, CoverError> {
        let n = dist.len();
        if n == 0 {
            return Err(CoverError::BadMetric("empty space".into()));
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(CoverError::BadMetric(format!("row {i} has {} entries", row.len())));
            }
            for j in 0..n {
                let d = &row[j];
                if (i == j) != d.is_zero() || d.is_negative() {
                    return Err(CoverError::BadMetric(format!("d({i},{j}) = {}", fmt_rational(d))));
                }
                if *d != dist[j][i] {
                    return Err(CoverError::BadMetric(format!("d({i},{j}) ≠ d({j},{i})")));
                }
                for k in 0..n {
                    if *d > &dist[i][k] + &dist[k][j] {
                        return Err(CoverError::BadMetric(format!("triangle inequality fails at {i},{k},{j}")));
                    }
                }
            }
        }
        Ok(FiniteMetric { dist })
    }

    /// `n` points at pairwise distance `d`.
    pub fn uniform(n: usize, d: Rational) -> Self {
        let dist =
            (0..n).map(|i| (0..n).map(|j| if i == j { Rational::zero() } else { d.clone() }).collect()).collect();
        FiniteMetric { dist }
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn d(&self, i: usize, j: usize) -> &Rational {
        &self.dist[i][j]
    }

    pub fn min_distance(&self) -> Option<Rational> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.dist[i][j].clone())
            .min()
    }
}

/// Underlying metric spaces. Products carry the max metric; symbolic spaces
/// carry `d(x, y) = 2^{-(n+1)}` with `n` the first differing position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Space {
    Interval,
    Circle,
    Cantor,
    Baire,
    Finite(FiniteMetric),
    Product(Box<Space>, Box<Space>),
}

/// An open set: `(lo, hi) ∩ [0, 1]` on the interval, the arc `(lo, hi)`
/// mod 1 on the circle (whole circle once `hi - lo > 1`), a cylinder, a set
/// of points, or a product.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cell {
    Interval { lo: Rational, hi: Rational },
    Cylinder(Word),
    Points(BTreeSet<usize>),
    Product(Box<Cell>, Box<Cell>),
}

/// A closed set: `[lo, hi]` (an arc when on the circle, whole circle once
/// `hi - lo ≥ 1`), a cylinder, a finite point set, or a product.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Region {
    Interval { lo: Rational, hi: Rational },
    Cylinder(Word),
    Points(BTreeSet<usize>),
    Product(Box<Region>, Box<Region>),
}

impl Region {
    pub fn point(x: Rational) -> Self {
        Region::Interval { lo: x.clone(), hi: x }
    }

    pub fn interval(lo: Rational, hi: Rational) -> Self {
        Region::Interval { lo, hi }
    }

    pub fn width(&self) -> Option<Rational> {
        match self {
            Region::Interval { lo, hi } => Some(hi - lo),
            _ => None,
        }
    }

    /// Smallest region of the same shape containing both; `None` on shape
    /// mismatch. Circle arcs are joined on the unwrapped line.
    pub fn hull(&self, other: &Region) -> Option<Region> {
        match (self, other) {
            (Region::Interval { lo: a, hi: b }, Region::Interval { lo: c, hi: d }) => {
                Some(Region::Interval { lo: a.min(c).clone(), hi: b.max(d).clone() })
            }
            (Region::Cylinder(u), Region::Cylinder(v)) => {
                Some(Region::Cylinder(u.iter().zip(v).take_while(|(a, b)| a == b).map(|(a, _)| *a).collect()))
            }
            (Region::Points(p), Region::Points(q)) => Some(Region::Points(p.union(q).copied().collect())),
            (Region::Product(a1, b1), Region::Product(a2, b2)) => {
                Some(Region::Product(Box::new(a1.hull(a2)?), Box::new(b1.hull(b2)?)))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Interval { lo, hi } if lo == hi => write!(f, "{{{}}}", fmt_rational(lo)),
            Region::Interval { lo, hi } => write!(f, "[{}, {}]", fmt_rational(lo), fmt_rational(hi)),
            Region::Cylinder(w) => write!(f, "[{}]", fmt_word(w)),
            Region::Points(p) => write!(f, "{p:?}"),
            Region::Product(a, b) => write!(f, "{a} × {b}"),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Interval { lo, hi } => write!(f, "({}, {})", fmt_rational(lo), fmt_rational(hi)),
            Cell::Cylinder(w) => write!(f, "[{}]", fmt_word(w)),
            Cell::Points(p) => write!(f, "{p:?}"),
            Cell::Product(a, b) => write!(f, "{a} × {b}"),
        }
    }
}

fn floor(x: &Rational) -> BigInt {
    x.floor().to_integer()
}

fn ceil(x: &Rational) -> BigInt {
    x.ceil().to_integer()
}

fn rat(n: &BigInt) -> Rational {
    Rational::from_integer(n.clone())
}

/// Smallest `n ≥ 0` with `2^{-(n+1)} < r`; balls of radius `r` in a symbolic
/// space are cylinders of that length.
fn cylinder_len_for_radius(r: &Rational) -> usize {
    let mut n = 0;
    while pow2_neg(n + 1) >= *r {
        n += 1;
    }
    n
}

/// Integer shifts `z` that could align the arc `(lo2, hi2)` with `(lo1, hi1)`.
fn circle_shifts(lo1: &Rational, lo2: &Rational) -> impl Iterator<Item = Rational> {
    let base = floor(&(lo1 - lo2));
    (-1..=2).map(move |d| rat(&(&base + BigInt::from(d))))
}

impl Space {
    pub fn whole_cell(&self) -> Cell {
        match self {
            Space::Interval | Space::Circle => Cell::Interval { lo: integer(-1), hi: integer(2) },
            Space::Cantor | Space::Baire => Cell::Cylinder(Vec::new()),
            Space::Finite(m) => Cell::Points((0..m.len()).collect()),
            Space::Product(a, b) => Cell::Product(Box::new(a.whole_cell()), Box::new(b.whole_cell())),
        }
    }

    pub fn whole_region(&self) -> Region {
        match self {
            Space::Interval | Space::Circle => Region::Interval { lo: integer(0), hi: integer(1) },
            Space::Cantor | Space::Baire => Region::Cylinder(Vec::new()),
            Space::Finite(m) => Region::Points((0..m.len()).collect()),
            Space::Product(a, b) => Region::Product(Box::new(a.whole_region()), Box::new(b.whole_region())),
        }
    }

    pub fn diam_whole(&self) -> Rational {
        self.region_diam(&self.whole_region())
    }

    pub fn closure(&self, cell: &Cell) -> Option<Region> {
        match (self, cell) {
            (Space::Interval, Cell::Interval { lo, hi }) => {
                let lo = lo.max(&integer(0)).clone();
                let hi = hi.min(&integer(1)).clone();
                (lo <= hi).then_some(Region::Interval { lo, hi })
            }
            (Space::Circle, Cell::Interval { lo, hi }) => {
                if hi - lo > integer(1) {
                    Some(Region::Interval { lo: integer(0), hi: integer(1) })
                } else {
                    (lo < hi).then(|| Region::Interval { lo: lo.clone(), hi: hi.clone() })
                }
            }
            (Space::Cantor | Space::Baire, Cell::Cylinder(w)) => Some(Region::Cylinder(w.clone())),
            (Space::Finite(_), Cell::Points(p)) => (!p.is_empty()).then(|| Region::Points(p.clone())),
            (Space::Product(a, b), Cell::Product(x, y)) => {
                Some(Region::Product(Box::new(a.closure(x)?), Box::new(b.closure(y)?)))
            }
            _ => panic!("cell {cell} does not belong to {self:?}"),
        }
    }

    pub fn region_diam(&self, region: &Region) -> Rational {
        match (self, region) {
            (Space::Interval, Region::Interval { lo, hi }) => hi - lo,
            (Space::Circle, Region::Interval { lo, hi }) => (hi - lo).min(ratio(1, 2)),
            (Space::Cantor | Space::Baire, Region::Cylinder(w)) => pow2_neg(w.len() + 1),
            (Space::Finite(m), Region::Points(p)) => p
                .iter()
                .flat_map(|&i| p.iter().map(move |&j| (i, j)))
                .map(|(i, j)| m.d(i, j).clone())
                .max()
                .unwrap_or_else(Rational::zero),
            (Space::Product(a, b), Region::Product(x, y)) => a.region_diam(x).max(b.region_diam(y)),
            _ => panic!("region {region} does not belong to {self:?}"),
        }
    }

    pub fn cell_diam(&self, cell: &Cell) -> Rational {
        self.closure(cell).map(|r| self.region_diam(&r)).unwrap_or_else(Rational::zero)
    }

    /// `None` for the empty set.
    pub fn intersect(&self, a: &Cell, b: &Cell) -> Option<Cell> {
        match (self, a, b) {
            (Space::Interval, Cell::Interval { lo: l1, hi: h1 }, Cell::Interval { lo: l2, hi: h2 }) => {
                let lo = l1.max(l2).clone();
                let hi = h1.min(h2).clone();
                let empty = lo >= hi || hi <= integer(0) || lo >= integer(1);
                (!empty).then_some(Cell::Interval { lo, hi })
            }
            (Space::Circle, Cell::Interval { lo: l1, hi: h1 }, Cell::Interval { lo: l2, hi: h2 }) => {
                if h2 - l2 > integer(1) {
                    return Some(a.clone());
                }
                if h1 - l1 > integer(1) {
                    return Some(b.clone());
                }
                let mut best: Option<Cell> = None;
                for z in circle_shifts(l1, l2) {
                    let lo = l1.max(&(l2 + &z)).clone();
                    let hi = h1.min(&(h2 + &z)).clone();
                    if lo < hi {
                        let better = match &best {
                            Some(Cell::Interval { lo: bl, hi: bh }) => hi.clone() - &lo > bh - bl,
                            _ => true,
                        };
                        if better {
                            best = Some(Cell::Interval { lo, hi });
                        }
                    }
                }
                best
            }
            (Space::Cantor | Space::Baire, Cell::Cylinder(u), Cell::Cylinder(v)) => {
                if u.starts_with(v) {
                    Some(a.clone())
                } else if v.starts_with(u) {
                    Some(b.clone())
                } else {
                    None
                }
            }
            (Space::Finite(_), Cell::Points(p), Cell::Points(q)) => {
                let r: BTreeSet<usize> = p.intersection(q).copied().collect();
                (!r.is_empty()).then_some(Cell::Points(r))
            }
            (Space::Product(sa, sb), Cell::Product(x1, y1), Cell::Product(x2, y2)) => {
                Some(Cell::Product(Box::new(sa.intersect(x1, x2)?), Box::new(sb.intersect(y1, y2)?)))
            }
            _ => panic!("cells {a}, {b} do not belong to {self:?}"),
        }
    }

    /// `region ⊆ cell`.
    pub fn region_in_cell(&self, region: &Region, cell: &Cell) -> bool {
        match (self, region, cell) {
            (Space::Interval, Region::Interval { lo: c, hi: d }, Cell::Interval { lo: a, hi: b }) => a < c && d < b,
            (Space::Circle, Region::Interval { lo: c, hi: d }, Cell::Interval { lo: a, hi: b }) => {
                if b - a > integer(1) {
                    return true;
                }
                d - c < integer(1) && circle_shifts(a, c).any(|z| *a < c + &z && d + &z < *b)
            }
            (Space::Cantor | Space::Baire, Region::Cylinder(w), Cell::Cylinder(u)) => w.starts_with(u),
            (Space::Finite(_), Region::Points(p), Cell::Points(q)) => p.is_subset(q),
            (Space::Product(sa, sb), Region::Product(x, y), Cell::Product(u, v)) => {
                sa.region_in_cell(x, u) && sb.region_in_cell(y, v)
            }
            _ => panic!("region {region} / cell {cell} do not belong to {self:?}"),
        }
    }

    /// `region ∩ cell ≠ ∅`.
    pub fn region_meets_cell(&self, region: &Region, cell: &Cell) -> bool {
        match (self, region, cell) {
            (Space::Interval, Region::Interval { lo: c, hi: d }, Cell::Interval { lo: a, hi: b }) => a < d && c < b,
            (Space::Circle, Region::Interval { lo: c, hi: d }, Cell::Interval { lo: a, hi: b }) => {
                if b - a > integer(1) || d - c >= integer(1) {
                    return true;
                }
                circle_shifts(a, c).any(|z| *a < d + &z && c + &z < *b)
            }
            (Space::Cantor | Space::Baire, Region::Cylinder(w), Cell::Cylinder(u)) => {
                w.starts_with(u) || u.starts_with(w)
            }
            (Space::Finite(_), Region::Points(p), Cell::Points(q)) => !p.is_disjoint(q),
            (Space::Product(sa, sb), Region::Product(x, y), Cell::Product(u, v)) => {
                sa.region_meets_cell(x, u) && sb.region_meets_cell(y, v)
            }
            _ => panic!("region {region} / cell {cell} do not belong to {self:?}"),
        }
    }

    /// `{y : d(y, region) < r} ⊆ cell`; `r = 0` means `region ⊆ cell`.
    pub fn ball_in_cell(&self, region: &Region, r: &Rational, cell: &Cell) -> bool {
        if r.is_zero() {
            return self.region_in_cell(region, cell);
        }
        match (self, region, cell) {
            (Space::Interval, Region::Interval { lo: c, hi: d }, Cell::Interval { lo: a, hi: b }) => {
                let lo_ok = *a <= c - r || a.is_negative();
                let hi_ok = d + r <= *b || *b > integer(1);
                lo_ok && hi_ok
            }
            (Space::Circle, Region::Interval { lo: c, hi: d }, Cell::Interval { lo: a, hi: b }) => {
                if b - a > integer(1) {
                    return true;
                }
                let (lo, hi) = (c - r, d + r);
                &hi - &lo <= integer(1) && circle_shifts(a, &lo).any(|z| *a <= &lo + &z && &hi + &z <= *b)
            }
            (Space::Cantor | Space::Baire, Region::Cylinder(w), Cell::Cylinder(u)) => {
                let m = cylinder_len_for_radius(r).min(w.len());
                w[..m].starts_with(u)
            }
            (Space::Finite(metric), Region::Points(p), Cell::Points(q)) => {
                (0..metric.len()).filter(|&y| p.iter().any(|&x| metric.d(x, y) < r)).all(|y| q.contains(&y))
            }
            (Space::Product(sa, sb), Region::Product(x, y), Cell::Product(u, v)) => {
                sa.ball_in_cell(x, r, u) && sb.ball_in_cell(y, r, v)
            }
            _ => panic!("region {region} / cell {cell} do not belong to {self:?}"),
        }
    }

    /// `region ⊆ ⋃ cells`; on failure returns a description of an uncovered part.
    pub fn cells_cover_region(&self, cells: &[Cell], region: &Region) -> Result<(), String> {
        match (self, region) {
            (Space::Interval | Space::Circle, Region::Interval { lo: c, hi: d }) => {
                let mut pieces: Vec<(Rational, Rational)> = Vec::new();
                for cell in cells {
                    let Cell::Interval { lo, hi } = cell else { panic!("foreign cell {cell}") };
                    if *self == Space::Circle {
                        if hi - lo > integer(1) {
                            return Ok(());
                        }
                        for z in -2..=2 {
                            pieces.push((lo + integer(z), hi + integer(z)));
                        }
                    } else {
                        pieces.push((lo.clone(), hi.clone()));
                    }
                }
                let (c, d) = if *self == Space::Circle && d - c >= integer(1) {
                    (integer(0), integer(1))
                } else {
                    (c.clone(), d.clone())
                };
                sweep_open(&pieces, &c, &d).map_err(|x| format!("point {} uncovered", fmt_rational(&x)))
            }
            (Space::Cantor | Space::Baire, Region::Cylinder(w)) => {
                let words: Vec<&Word> = cells
                    .iter()
                    .map(|c| match c {
                        Cell::Cylinder(u) => u,
                        other => panic!("foreign cell {other}"),
                    })
                    .collect();
                let alphabet = match self {
                    Space::Cantor => 2,
                    _ => return cylinder_cover_baire(&words, w),
                };
                cylinder_cover(&words, w, alphabet)
            }
            (Space::Finite(_), Region::Points(p)) => {
                let mut covered = BTreeSet::new();
                for c in cells {
                    let Cell::Points(q) = c else { panic!("foreign cell {c}") };
                    covered.extend(q.iter().copied());
                }
                match p.iter().find(|i| !covered.contains(i)) {
                    Some(i) => Err(format!("point {i} uncovered")),
                    None => Ok(()),
                }
            }
            (Space::Product(sa, sb), Region::Product(x, y)) => {
                let split: Vec<(&Cell, &Cell)> = cells
                    .iter()
                    .map(|c| match c {
                        Cell::Product(u, v) => (u.as_ref(), v.as_ref()),
                        other => panic!("foreign cell {other}"),
                    })
                    .collect();
                if let (Space::Finite(_), Region::Points(p)) = (sb.as_ref(), y.as_ref()) {
                    for &pt in p {
                        let slice: Vec<Cell> = split
                            .iter()
                            .filter(|(_, v)| matches!(v, Cell::Points(q) if q.contains(&pt)))
                            .map(|(u, _)| (*u).clone())
                            .collect();
                        sa.cells_cover_region(&slice, x).map_err(|e| format!("{e} over point {pt}"))?;
                    }
                    return Ok(());
                }
                if let (Space::Finite(_), Region::Points(p)) = (sa.as_ref(), x.as_ref()) {
                    for &pt in p {
                        let slice: Vec<Cell> = split
                            .iter()
                            .filter(|(u, _)| matches!(u, Cell::Points(q) if q.contains(&pt)))
                            .map(|(_, v)| (*v).clone())
                            .collect();
                        sb.cells_cover_region(&slice, y).map_err(|e| format!("point {pt} × {e}"))?;
                    }
                    return Ok(());
                }
                // Grid-shaped families only: every first factor paired with every second.
                let firsts: BTreeSet<String> = split.iter().map(|(u, _)| u.to_string()).collect();
                let seconds: BTreeSet<String> = split.iter().map(|(_, v)| v.to_string()).collect();
                let pairs: BTreeSet<(String, String)> =
                    split.iter().map(|(u, v)| (u.to_string(), v.to_string())).collect();
                if pairs.len() != firsts.len() * seconds.len() {
                    return Err("product family is not grid-shaped".into());
                }
                let us: Vec<Cell> = split.iter().map(|(u, _)| (*u).clone()).collect();
                let vs: Vec<Cell> = split.iter().map(|(_, v)| (*v).clone()).collect();
                sa.cells_cover_region(&us, x)?;
                sb.cells_cover_region(&vs, y)
            }
            _ => panic!("region {region} does not belong to {self:?}"),
        }
    }
}

/// Covers `[c, d]` by open intervals; returns an uncovered point on failure.
fn sweep_open(pieces: &[(Rational, Rational)], c: &Rational, d: &Rational) -> Result<(), Rational> {
    sweep(pieces, c, d, false)
}

/// Covers `[c, d]` by closed intervals.
fn sweep_closed(pieces: &[(Rational, Rational)], c: &Rational, d: &Rational) -> Result<(), Rational> {
    sweep(pieces, c, d, true)
}

fn sweep(pieces: &[(Rational, Rational)], c: &Rational, d: &Rational, closed: bool) -> Result<(), Rational> {
    let mut sorted: Vec<&(Rational, Rational)> = pieces.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut cur = c.clone();
    let mut reach: Option<&Rational> = None;
    let mut idx = 0;
    loop {
        while idx < sorted.len() && (sorted[idx].0 < cur || (closed && sorted[idx].0 == cur)) {
            let hi = &sorted[idx].1;
            if reach.is_none_or(|r| hi > r) {
                reach = Some(hi);
            }
            idx += 1;
        }
        match reach {
            Some(hi) if hi > d || (closed && hi == d) => return Ok(()),
            Some(hi) if *hi > cur => cur = hi.clone(),
            _ => return Err(cur),
        }
    }
}

fn cylinder_cover(words: &[&Word], w: &[u64], alphabet: u64) -> Result<(), String> {
    if words.iter().any(|u| w.starts_with(u)) {
        return Ok(());
    }
    if !words.iter().any(|u| u.len() > w.len() && u.starts_with(w)) {
        return Err(format!("cylinder [{}] uncovered", fmt_word(w)));
    }
    for a in 0..alphabet {
        let mut child = w.to_vec();
        child.push(a);
        cylinder_cover(words, &child, alphabet)?;
    }
    Ok(())
}

/// Finitely many cylinders cover `[w]` in `ℕ^ℕ` only if one contains it.
fn cylinder_cover_baire(words: &[&Word], w: &[u64]) -> Result<(), String> {
    if words.iter().any(|u| w.starts_with(u)) {
        Ok(())
    } else {
        Err(format!("cylinder [{}] uncovered", fmt_word(w)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Scheme {
    Interval,
    Circle,
    Cantor,
    Finite(FiniteMetric),
    Product(Box<CoverSystem>, Box<CoverSystem>),
}

/// A cover system on one of the shipped spaces.
///
/// Interval and circle: level-`k` cells are grid cells
/// `((m-1)/2^{k+2}, (m+1)/2^{k+2})`; the children of `V_s` are the grid
/// cells centred on `[floor(c/h), ceil(d/h)]·h` for `cl V_s = [c, d]`.
/// Cantor: cylinders. Finite: singletons. Products: pairs of cells, with
/// symbol `a·J_B + b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverSystem {
    scheme: Scheme,
    corruption: Option<(Word, u64)>,
}

/// Outcome of [`CoverSystem::verify`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverFailure {
    pub prefix: Word,
    pub condition: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverReport {
    pub space: String,
    pub depth: usize,
    /// Number of cells per level `1..=depth`.
    pub cells_per_level: Vec<usize>,
    pub failures: Vec<CoverFailure>,
}

impl CoverReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

const GRID_CHILDREN: u64 = 5;

impl CoverSystem {
    fn of(scheme: Scheme) -> Self {
        CoverSystem { scheme, corruption: None }
    }

    pub fn interval() -> Self {
        Self::of(Scheme::Interval)
    }

    pub fn circle() -> Self {
        Self::of(Scheme::Circle)
    }

    pub fn cantor() -> Self {
        Self::of(Scheme::Cantor)
    }

    pub fn finite(metric: FiniteMetric) -> Self {
        Self::of(Scheme::Finite(metric))
    }

    pub fn product(a: CoverSystem, b: CoverSystem) -> Self {
        Self::of(Scheme::Product(Box::new(a), Box::new(b)))
    }

    /// All shipped systems: interval, circle, Cantor, three equidistant
    /// points, Cantor × three points.
    pub fn shipped() -> Vec<CoverSystem> {
        let three = || CoverSystem::finite(FiniteMetric::uniform(3, integer(1)));
        vec![
            CoverSystem::interval(),
            CoverSystem::circle(),
            CoverSystem::cantor(),
            three(),
            CoverSystem::product(CoverSystem::cantor(), three()),
        ]
    }

    /// Shrinks `W_{prefix·symbol}` to a sliver that misses the centre of the
    /// original cell. Used as a negative control.
    pub fn corrupted(mut self, prefix: Word, symbol: u64) -> Self {
        self.corruption = Some((prefix, symbol));
        self
    }

    pub fn name(&self) -> String {
        match &self.scheme {
            Scheme::Interval => "interval".into(),
            Scheme::Circle => "circle".into(),
            Scheme::Cantor => "cantor".into(),
            Scheme::Finite(m) => format!("finite({})", m.len()),
            Scheme::Product(a, b) => format!("{}×{}", a.name(), b.name()),
        }
    }

    pub fn space(&self) -> Space {
        match &self.scheme {
            Scheme::Interval => Space::Interval,
            Scheme::Circle => Space::Circle,
            Scheme::Cantor => Space::Cantor,
            Scheme::Finite(m) => Space::Finite(m.clone()),
            Scheme::Product(a, b) => Space::Product(Box::new(a.space()), Box::new(b.space())),
        }
    }

    /// `|J_level|` for `level ≥ 1`.
    pub fn alphabet(&self, level: usize) -> u64 {
        match &self.scheme {
            Scheme::Interval => {
                if level == 1 {
                    9
                } else {
                    GRID_CHILDREN
                }
            }
            Scheme::Circle => {
                if level == 1 {
                    8
                } else {
                    GRID_CHILDREN
                }
            }
            Scheme::Cantor => 2,
            Scheme::Finite(m) => {
                if level == 1 {
                    (m.len() as u64).max(2)
                } else {
                    2
                }
            }
            Scheme::Product(a, b) => a.alphabet(level) * b.alphabet(level),
        }
    }

    /// `Λ = ∏ J_i`.
    pub fn symbolic_space(&self) -> SymbolicSpace {
        let (first, rest) = (self.alphabet(1), self.alphabet(2));
        if first == rest {
            SymbolicSpace::lambda(Vec::new(), rest)
        } else {
            SymbolicSpace::lambda(vec![first], rest)
        }
    }

    fn check_symbol(&self, level: usize, symbol: u64) -> Result<(), CoverError> {
        let alphabet = self.alphabet(level);
        if symbol >= alphabet {
            return Err(CoverError::InvalidBranch { level, symbol, alphabet });
        }
        Ok(())
    }

    /// `W_{s·j}` given `V_s`, where `level = |s| + 1`.
    fn w_child(&self, s: &[u64], v_s: &Cell, j: u64) -> Cell {
        let level = s.len() + 1;
        let cell = match (&self.scheme, v_s) {
            (Scheme::Interval | Scheme::Circle, Cell::Interval { lo, hi }) => {
                let h = pow2_neg(level + 2);
                let m = if level == 1 {
                    BigInt::from(j)
                } else {
                    let (zero, one) = (integer(0), integer(1));
                    let clamp = matches!(self.scheme, Scheme::Interval);
                    let c = if clamp { lo.max(&zero) } else { lo };
                    let d = if clamp { hi.min(&one) } else { hi };
                    let m0 = floor(&(c / &h));
                    let m1 = ceil(&(d / &h));
                    (m0 + BigInt::from(j)).min(m1)
                };
                let centre = rat(&m) * &h;
                Cell::Interval { lo: &centre - &h, hi: &centre + &h }
            }
            (Scheme::Cantor, _) => {
                let mut w = s.to_vec();
                w.push(j);
                Cell::Cylinder(w)
            }
            (Scheme::Finite(m), Cell::Points(p)) => {
                if level == 1 {
                    Cell::Points(BTreeSet::from([(j as usize).min(m.len() - 1)]))
                } else {
                    Cell::Points(p.clone())
                }
            }
            (Scheme::Product(a, b), Cell::Product(u, v)) => {
                let jb = b.alphabet(level);
                let (sa, sb) = self.split_word(s);
                Cell::Product(Box::new(a.w_child(&sa, u, j / jb)), Box::new(b.w_child(&sb, v, j % jb)))
            }
            _ => unreachable!("cell shape matches the scheme"),
        };
        match &self.corruption {
            Some((p, sym)) if p.as_slice() == s && *sym == j => shrink(cell),
            _ => cell,
        }
    }

    /// Splits a product word into its component words.
    pub fn split_word(&self, s: &[u64]) -> (Word, Word) {
        let Scheme::Product(_, b) = &self.scheme else { panic!("not a product system") };
        s.iter()
            .enumerate()
            .map(|(i, &x)| {
                let jb = b.alphabet(i + 1);
                (x / jb, x % jb)
            })
            .unzip()
    }

    pub fn join_words(&self, sa: &[u64], sb: &[u64]) -> Word {
        let Scheme::Product(_, b) = &self.scheme else { panic!("not a product system") };
        sa.iter().zip(sb).enumerate().map(|(i, (&x, &y))| x * b.alphabet(i + 1) + y).collect()
    }

    /// `W_s` for `|s| ≥ 1`.
    pub fn w_cell(&self, s: &[u64]) -> Result<Cell, CoverError> {
        let (parent, last) = s.split_at(s.len() - 1);
        let v = self.v_cell(parent)?;
        self.check_symbol(s.len(), last[0])?;
        Ok(self.w_child(parent, &v, last[0]))
    }

    /// `V_s`; `V_∅` is the whole space.
    pub fn v_cell(&self, s: &[u64]) -> Result<Cell, CoverError> {
        let space = self.space();
        let mut v = space.whole_cell();
        for (i, &j) in s.iter().enumerate() {
            self.check_symbol(i + 1, j)?;
            let w = self.w_child(&s[..i], &v, j);
            v = space.intersect(&v, &w).unwrap_or(w);
        }
        Ok(v)
    }

    /// Children `V_{s·j}`, `j ∈ J_{|s|+1}`, in symbol order.
    pub fn children(&self, s: &[u64], v_s: &Cell) -> Vec<(u64, Cell, Cell)> {
        let space = self.space();
        (0..self.alphabet(s.len() + 1))
            .map(|j| {
                let w = self.w_child(s, v_s, j);
                let v = space.intersect(v_s, &w).unwrap_or_else(|| w.clone());
                (j, w, v)
            })
            .collect()
    }

    /// Upper bound on `diam(V_s)` for `|s| = level`.
    pub fn cell_diam_bound(&self, level: usize) -> Rational {
        match &self.scheme {
            Scheme::Interval | Scheme::Circle | Scheme::Cantor => pow2_neg(level + 1),
            Scheme::Finite(m) => {
                if level == 0 {
                    self.space().region_diam(&Region::Points((0..m.len()).collect()))
                } else {
                    Rational::zero()
                }
            }
            Scheme::Product(a, b) => a.cell_diam_bound(level).max(b.cell_diam_bound(level)),
        }
    }

    /// A radius `ε < 2^{-|s|}` such that every ball of radius `ε` centred in
    /// `cl V_s` lies inside some `W_{s·j}`.
    pub fn lebesgue_number(&self, s: &[u64]) -> Rational {
        let k = s.len();
        match &self.scheme {
            Scheme::Interval | Scheme::Circle => pow2_neg(k + 4),
            Scheme::Cantor => pow2_neg(k + 2),
            Scheme::Finite(m) => {
                let cap = pow2_neg(k + 2);
                match m.min_distance() {
                    Some(d) => (d / integer(2)).min(cap),
                    None => cap,
                }
            }
            Scheme::Product(a, b) => {
                let (sa, sb) = self.split_word(s);
                a.lebesgue_number(&sa).min(b.lebesgue_number(&sb))
            }
        }
    }

    /// Exact check of the Lebesgue property of `eps` at `s`.
    fn lebesgue_holds(&self, s: &[u64], v_s: &Cell, eps: &Rational) -> Result<(), String> {
        let space = self.space();
        let closure = space.closure(v_s).ok_or("empty cell")?;
        let ws: Vec<Cell> = self.children(s, v_s).into_iter().map(|(_, w, _)| w).collect();
        match (&self.scheme, &closure) {
            (Scheme::Interval | Scheme::Circle, Region::Interval { lo: c, hi: d }) => {
                let circle = matches!(self.scheme, Scheme::Circle);
                let mut pieces = Vec::new();
                for w in &ws {
                    let Cell::Interval { lo, hi } = w else { unreachable!() };
                    let lo = if !circle && lo.is_negative() { integer(-1) } else { lo + eps };
                    let hi = if !circle && *hi > integer(1) { integer(2) } else { hi - eps };
                    let shifts: Vec<i64> = if circle { (-2..=2).collect() } else { vec![0] };
                    for z in shifts {
                        pieces.push((&lo + integer(z), &hi + integer(z)));
                    }
                }
                sweep_closed(&pieces, c, d).map_err(|x| format!("ball around {} escapes", fmt_rational(&x)))
            }
            (Scheme::Cantor, Region::Cylinder(w)) => {
                if cylinder_len_for_radius(eps) > w.len() {
                    Ok(())
                } else {
                    Err(format!("radius {} exceeds the children of [{}]", fmt_rational(eps), fmt_word(w)))
                }
            }
            (Scheme::Finite(m), Region::Points(p)) => {
                for &x in p {
                    let ball: BTreeSet<usize> = (0..m.len()).filter(|&y| m.d(x, y) < eps).collect();
                    if !ws.iter().any(|w| matches!(w, Cell::Points(q) if ball.is_subset(q))) {
                        return Err(format!("ball around point {x} escapes"));
                    }
                }
                Ok(())
            }
            (Scheme::Product(a, b), _) => {
                let (sa, sb) = self.split_word(s);
                let Cell::Product(u, v) = v_s else { unreachable!() };
                a.lebesgue_holds(&sa, u, eps)?;
                b.lebesgue_holds(&sb, v, eps)
            }
            _ => unreachable!(),
        }
    }

    /// `cl V_{α|k}`.
    pub fn project(&self, alpha: &[u64], k: usize) -> Result<Region, CoverError> {
        if alpha.len() < k {
            return Err(CoverError::ShortPrefix { k, got: alpha.len() });
        }
        let cell = self.v_cell(&alpha[..k])?;
        Ok(self.space().closure(&cell).expect("cells are nonempty"))
    }

    /// The lex-least `t` of length `k` extending `constraint` with
    /// `B(region, radius) ⊆ V_t`.
    pub fn locate_ball(
        &self,
        region: &Region,
        radius: &Rational,
        k: usize,
        constraint: &[u64],
    ) -> Result<Word, CoverError> {
        if constraint.len() > k {
            return Err(CoverError::ShortPrefix { k: constraint.len(), got: k });
        }
        let space = self.space();
        let start = self.v_cell(constraint)?;
        let no_cell = || CoverError::NoCell {
            k,
            constraint: fmt_word(constraint),
            radius: fmt_rational(radius),
            region: region.to_string(),
        };
        if !space.ball_in_cell(region, radius, &start) {
            return Err(no_cell());
        }
        let mut t = constraint.to_vec();
        if self.search(&space, region, radius, k, &mut t, &start) {
            Ok(t)
        } else {
            Err(no_cell())
        }
    }

    fn search(&self, space: &Space, region: &Region, radius: &Rational, k: usize, t: &mut Word, v: &Cell) -> bool {
        if t.len() == k {
            return true;
        }
        for (j, _, child) in self.children(t, v) {
            if space.ball_in_cell(region, radius, &child) {
                t.push(j);
                if self.search(space, region, radius, k, t, &child) {
                    return true;
                }
                t.pop();
            }
        }
        false
    }

    /// Checks, for every `s` with `|s| ≤ depth`: cell diameters, that the
    /// `W_{s·j}` cover `cl V_s`, `V_{s·j} = V_s ∩ W_{s·j}`, the Lebesgue
    /// number, and that each level covers the space.
    pub fn verify(&self, depth: usize) -> CoverReport {
        let space = self.space();
        let mut report =
            CoverReport { space: self.name(), depth, cells_per_level: vec![0; depth], failures: Vec::new() };
        let mut level: Vec<(Word, Cell)> = vec![(Vec::new(), space.whole_cell())];
        for k in 0..depth {
            let mut next = Vec::new();
            for (s, v) in &level {
                let closure = space.closure(v).expect("cells are nonempty");
                let kids = self.children(s, v);
                let ws: Vec<Cell> = kids.iter().map(|(_, w, _)| w.clone()).collect();
                if let Err(e) = space.cells_cover_region(&ws, &closure) {
                    report.failures.push(CoverFailure {
                        prefix: s.clone(),
                        condition: "W children cover cl V_s",
                        detail: e,
                    });
                }
                let eps = self.lebesgue_number(s);
                if eps >= pow2_neg(s.len()) {
                    report.failures.push(CoverFailure {
                        prefix: s.clone(),
                        condition: "Lebesgue number below 2^-|s|",
                        detail: fmt_rational(&eps),
                    });
                }
                if let Err(e) = self.lebesgue_holds(s, v, &eps) {
                    report.failures.push(CoverFailure { prefix: s.clone(), condition: "Lebesgue number", detail: e });
                }
                let bound = pow2_neg(k + 1);
                for (j, w, child) in kids {
                    let mut t = s.clone();
                    t.push(j);
                    for (name, cell) in [("diam W_s", &w), ("diam V_s", &child)] {
                        let d = space.cell_diam(cell);
                        if d >= bound {
                            report.failures.push(CoverFailure {
                                prefix: t.clone(),
                                condition: name,
                                detail: format!("{} ≥ {}", fmt_rational(&d), fmt_rational(&bound)),
                            });
                        }
                    }
                    match space.intersect(v, &w) {
                        Some(meet) if meet == child => {}
                        other => report.failures.push(CoverFailure {
                            prefix: t.clone(),
                            condition: "V_sn = V_s ∩ W_sn",
                            detail: format!("{child} vs {other:?}"),
                        }),
                    }
                    next.push((t, child));
                }
            }
            report.cells_per_level[k] = next.len();
            let cells: Vec<Cell> = next.iter().map(|(_, c)| c.clone()).collect();
            if let Err(e) = space.cells_cover_region(&cells, &space.whole_region()) {
                report.failures.push(CoverFailure {
                    prefix: Vec::new(),
                    condition: "level covers X",
                    detail: format!("level {}: {e}", k + 1),
                });
            }
            level = next;
        }
        report
    }

    /// Parses `interval`, `circle`, `cantor`, `finite(n)` (pairwise distance
    /// 1), `finite(n, p/q)`, and `a*b` products.
    pub fn parse(spec: &str) -> Result<Self, CoverError> {
        let spec = spec.trim();
        if let Some((a, b)) = spec.split_once('*') {
            return Ok(CoverSystem::product(Self::parse(a)?, Self::parse(b)?));
        }
        match spec {
            "interval" => Ok(Self::interval()),
            "circle" => Ok(Self::circle()),
            "cantor" => Ok(Self::cantor()),
            "product" => Ok(Self::shipped().remove(4)),
            other => {
                let inner = other
                    .strip_prefix("finite(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| CoverError::BadMetric(format!("unknown space `{other}`")))?;
                let mut parts = inner.split(',');
                let n: usize = parts
                    .next()
                    .and_then(|p| p.trim().parse().ok())
                    .ok_or_else(|| CoverError::BadMetric(format!("bad point count in `{other}`")))?;
                let d = match parts.next() {
                    Some(p) => {
                        crate::rational::parse_rational(p.trim()).map_err(|e| CoverError::BadMetric(e.to_string()))?
                    }
                    None => Rational::one(),
                };
                if n == 0 || !d.is_positive() {
                    return Err(CoverError::BadMetric(format!("`{other}` is not a metric space")));
                }
                Ok(Self::finite(FiniteMetric::uniform(n, d)))
            }
        }
    }
}

fn shrink(cell: Cell) -> Cell {
    match cell {
        Cell::Interval { lo, hi } => {
            let q = (&hi - &lo) / integer(8);
            let mid = (&lo + &hi) / integer(2);
            Cell::Interval { lo: &mid + &q, hi: &mid + &q * integer(2) }
        }
        Cell::Cylinder(mut w) => {
            w.push(0);
            Cell::Cylinder(w)
        }
        Cell::Points(_) => Cell::Points(BTreeSet::new()),
        Cell::Product(a, b) => Cell::Product(Box::new(shrink(*a)), b),
    }
}

/// Polish presentations over finite sequences of ℕ: `ℕ^ℕ` by cylinders, and
/// `[0, 1]` with the children of `V_t` being every dyadic grid cell of level
/// `≥ |t| + 1` whose closure lies in `V_t`, listed level by level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolishPresentation {
    Baire,
    Interval,
}

impl PolishPresentation {
    pub fn space(&self) -> Space {
        match self {
            PolishPresentation::Baire => Space::Baire,
            PolishPresentation::Interval => Space::Interval,
        }
    }

    /// Admissible grid indices `m` at grid step `h` inside `V = (a, b)`.
    fn grid_range(a: &Rational, b: &Rational, h: &Rational) -> Option<(BigInt, BigInt)> {
        // (m-1)h > a unless a < 0; (m+1)h < b unless b > 1; 0 ≤ m ≤ 1/h.
        let top = floor(&(integer(1) / h));
        let lo = if a.is_negative() { BigInt::zero() } else { floor(&(a / h)) + BigInt::from(2) };
        let hi = if *b > integer(1) { top.clone() } else { ceil(&(b / h)) - BigInt::from(2) };
        let lo = lo.max(BigInt::zero());
        let hi = hi.min(top);
        (lo <= hi).then_some((lo, hi))
    }

    fn level_step(t_len: usize, level: usize) -> Rational {
        pow2_neg((t_len + 1 + level) + 2)
    }

    fn interval_child(v: &Cell, t_len: usize, n: u64) -> Cell {
        let Cell::Interval { lo: a, hi: b } = v else { unreachable!() };
        let mut n = BigInt::from(n);
        for level in 0.. {
            let h = Self::level_step(t_len, level);
            if let Some((lo, hi)) = Self::grid_range(a, b, &h) {
                let count = &hi - &lo + BigInt::one();
                if n < count {
                    let centre = rat(&(lo + n)) * &h;
                    return Cell::Interval { lo: &centre - &h, hi: &centre + &h };
                }
                n -= count;
            }
        }
        unreachable!()
    }

    pub fn cell(&self, t: &[u64]) -> Cell {
        match self {
            PolishPresentation::Baire => Cell::Cylinder(t.to_vec()),
            PolishPresentation::Interval => {
                let mut v = Space::Interval.whole_cell();
                for (i, &n) in t.iter().enumerate() {
                    v = Self::interval_child(&v, i, n);
                }
                v
            }
        }
    }

    pub fn closure(&self, t: &[u64]) -> Region {
        self.space().closure(&self.cell(t)).expect("cells are nonempty")
    }

    /// Lex-least child `n` with `region ⊆ V_{t·n}`.
    pub fn child_containing(&self, t: &[u64], v: &Cell, region: &Region) -> Option<u64> {
        match (self, region) {
            (PolishPresentation::Baire, Region::Cylinder(w)) => {
                (w.len() > t.len() && w.starts_with(t)).then(|| w[t.len()])
            }
            (PolishPresentation::Interval, Region::Interval { lo: c, hi: d }) => {
                let Cell::Interval { lo: a, hi: b } = v else { unreachable!() };
                if !Space::Interval.region_in_cell(region, v) {
                    return None;
                }
                let width = d - c;
                let mut offset = BigInt::zero();
                for level in 0..256 {
                    let h = Self::level_step(t.len(), level);
                    if &h * integer(2) <= width {
                        return None;
                    }
                    if let Some((lo, hi)) = Self::grid_range(a, b, &h) {
                        let mut m = (floor(&(d / &h)) - BigInt::one()).max(lo.clone());
                        let last = (ceil(&(c / &h)) + BigInt::one()).min(hi.clone());
                        while m <= last {
                            let centre = rat(&m) * &h;
                            let cell = Cell::Interval { lo: &centre - &h, hi: &centre + &h };
                            if Space::Interval.region_in_cell(region, &cell) {
                                return (&offset + (&m - &lo)).to_u64();
                            }
                            m += 1;
                        }
                        offset += &hi - &lo + BigInt::one();
                    }
                }
                None
            }
            _ => None,
        }
    }

    /// Checks diameters, `cl V_{tn} ⊆ V_t` for the first `fanout` children,
    /// and that children exhaust `V_t` on a grid of sample points.
    pub fn verify(&self, depth: usize, fanout: u64) -> Vec<CoverFailure> {
        let space = self.space();
        let mut failures = Vec::new();
        let mut level: Vec<Word> = vec![Vec::new()];
        for k in 0..depth {
            let mut next = Vec::new();
            for t in &level {
                let v = self.cell(t);
                for n in 0..fanout {
                    let mut tn = t.clone();
                    tn.push(n);
                    let child = self.cell(&tn);
                    let closure = space.closure(&child).expect("nonempty");
                    if space.region_diam(&closure) >= pow2_neg(k + 1) {
                        failures.push(CoverFailure {
                            prefix: tn.clone(),
                            condition: "diam V_t",
                            detail: closure.to_string(),
                        });
                    }
                    if !space.region_in_cell(&closure, &v) {
                        failures.push(CoverFailure {
                            prefix: tn.clone(),
                            condition: "cl V_tn ⊆ V_t",
                            detail: closure.to_string(),
                        });
                    }
                    next.push(tn);
                }
                if let PolishPresentation::Interval = self {
                    let Region::Interval { lo: c, hi: d } = space.closure(&v).expect("nonempty") else {
                        unreachable!()
                    };
                    let step = pow2_neg(k + 6);
                    let mut x = c.clone();
                    while x <= d {
                        let pt = Region::point(x.clone());
                        if space.region_in_cell(&pt, &v) && self.child_containing(t, &v, &pt).is_none() {
                            failures.push(CoverFailure {
                                prefix: t.clone(),
                                condition: "V_t = ⋃ V_tn",
                                detail: format!("point {} in no child", fmt_rational(&x)),
                            });
                        }
                        x += &step;
                    }
                }
            }
            level = next;
        }
        failures
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: Rational, hi: Rational) -> Region {
        Region::interval(lo, hi)
    }

    #[test]
    fn shipped_systems_pass_at_depth_four() {
        for cs in CoverSystem::shipped() {
            let r = cs.verify(4);
            assert!(r.passed(), "{}: {:?}", cs.name(), &r.failures[..r.failures.len().min(3)]);
        }
    }

    #[test]
    fn cantor_passes_at_depth_eight() {
        assert!(CoverSystem::cantor().verify(8).passed());
    }

    #[test]
    fn corrupted_system_fails_with_witness() {
        let bad = CoverSystem::interval().corrupted(vec![], 4);
        let r = bad.verify(2);
        assert!(!r.passed());
        assert!(r.failures.iter().any(|f| f.prefix.is_empty() && f.condition == "W children cover cl V_s"));
        let bad = CoverSystem::cantor().corrupted(vec![1, 0], 1);
        let r = bad.verify(4);
        assert_eq!(r.failures[0].prefix, vec![1, 0]);
    }

    #[test]
    fn projection_examples() {
        let cs = CoverSystem::interval();
        let left = vec![0u64; 8];
        let mut prev: Option<Region> = None;
        for k in 1..=5 {
            let r = cs.project(&left, k).unwrap();
            let Region::Interval { lo, hi } = &r else { panic!() };
            assert!(lo.is_zero());
            assert!((hi - lo) <= pow2_neg(5.min(k)));
            if let Some(Region::Interval { lo: pl, hi: ph }) = prev {
                assert!(pl <= *lo && *hi <= ph);
            }
            prev = Some(r);
        }
        assert_eq!(CoverSystem::cantor().project(&[0, 1, 0, 1], 3).unwrap(), Region::Cylinder(vec![0, 1, 0]));
        let circle = CoverSystem::circle();
        let alt = [0u64, 1, 0, 1, 0];
        let arc = circle.project(&alt, 4).unwrap();
        assert!(Space::Circle.region_diam(&arc) < ratio(1, 16));
        assert!(matches!(cs.project(&[9], 1), Err(CoverError::InvalidBranch { .. })));
    }

    #[test]
    fn lebesgue_examples() {
        assert_eq!(CoverSystem::cantor().lebesgue_number(&[0, 1]), ratio(1, 16));
        assert_eq!(CoverSystem::interval().lebesgue_number(&[3, 2]), pow2_neg(6));
        let three = CoverSystem::finite(FiniteMetric::uniform(3, integer(1)));
        assert_eq!(three.lebesgue_number(&[]), ratio(1, 4));
    }

    #[test]
    fn locate_examples() {
        let cs = CoverSystem::interval();
        let t = cs.locate_ball(&Region::point(ratio(1, 2)), &ratio(1, 64), 3, &[]).unwrap();
        assert_eq!(t.len(), 3);
        assert!(Space::Interval.ball_in_cell(&Region::point(ratio(1, 2)), &ratio(1, 64), &cs.v_cell(&t).unwrap()));
        // The lex-least level-1 cell around 1/2 is (3/8, 5/8) = symbol 4.
        assert_eq!(t[0], 4);

        let cantor = CoverSystem::cantor();
        let t = cantor.locate_ball(&Region::Cylinder(vec![0, 1, 0, 1, 0, 1, 0, 1]), &pow2_neg(6), 4, &[]).unwrap();
        assert_eq!(t, vec![0, 1, 0, 1]);

        assert!(matches!(
            cs.locate_ball(&Region::point(ratio(1, 2)), &ratio(1, 4), 3, &[]),
            Err(CoverError::NoCell { .. })
        ));
    }

    #[test]
    fn finite_metric_validation() {
        let bad = vec![vec![integer(0), integer(3)], vec![integer(3), integer(1)]];
        assert!(FiniteMetric::new(bad).is_err());
        let tri = vec![
            vec![integer(0), integer(1), integer(5)],
            vec![integer(1), integer(0), integer(1)],
            vec![integer(5), integer(1), integer(0)],
        ];
        assert!(FiniteMetric::new(tri).is_err());
    }

    #[test]
    fn parse_spaces() {
        assert_eq!(CoverSystem::parse("interval").unwrap(), CoverSystem::interval());
        assert_eq!(CoverSystem::parse("cantor*finite(3)").unwrap(), CoverSystem::shipped()[4]);
        assert!(CoverSystem::parse("finite(0)").is_err());
        assert!(CoverSystem::parse("sphere").is_err());
    }

    #[test]
    fn polish_presentations_verify() {
        assert!(PolishPresentation::Baire.verify(3, 4).is_empty());
        let f = PolishPresentation::Interval.verify(3, 4);
        assert!(f.is_empty(), "{:?}", &f[..f.len().min(3)]);
    }

    #[test]
    fn polish_interval_child_search_matches_enumeration() {
        let p = PolishPresentation::Interval;
        let v = p.cell(&[2]);
        let region = iv(ratio(12, 64), ratio(13, 64));
        let n = p.child_containing(&[2], &v, &region).unwrap();
        assert!(Space::Interval.region_in_cell(&region, &p.cell(&[2, n])));
        for m in 0..n {
            assert!(!Space::Interval.region_in_cell(&region, &p.cell(&[2, m])));
        }
    }

    proptest! {
        #[test]
        fn locate_is_monotone_in_radius(num in 0i64..=256, shrink in 1i64..8) {
            let cs = CoverSystem::interval();
            let centre = Region::point(ratio(num, 256));
            let r = ratio(1, 128);
            if let Ok(t) = cs.locate_ball(&centre, &r, 4, &[]) {
                let smaller = &r / integer(shrink + 1);
                let v = cs.v_cell(&t).unwrap();
                prop_assert!(Space::Interval.ball_in_cell(&centre, &smaller, &v));
            }
        }

        #[test]
        fn project_then_locate_is_coherent(alpha in proptest::collection::vec(0u64..5, 8)) {
            let cs = CoverSystem::interval();
            let mut alpha = alpha;
            alpha[0] %= 9;
            for k in 0..5 {
                let Region::Interval { lo, hi } = cs.project(&alpha, k + 3).unwrap() else { unreachable!() };
                let x = Region::point((lo + hi) / integer(2));
                let r = Rational::zero();
                let t = cs.locate_ball(&x, &r, k + 1, &alpha[..k]).unwrap();
                prop_assert_eq!(&t[..k], &alpha[..k]);
                prop_assert!(Space::Interval.ball_in_cell(&x, &r, &cs.v_cell(&t).unwrap()));
            }
        }

        #[test]
        fn cantor_projection_is_nested(alpha in proptest::collection::vec(0u64..2, 10)) {
            let cs = CoverSystem::cantor();
            for k in 1..10 {
                let inner = cs.project(&alpha, k + 1).unwrap();
                prop_assert!(Space::Cantor.region_in_cell(&inner, &cs.v_cell(&alpha[..k]).unwrap()));
            }
        }
    }
}
