//! Finite-depth towers of disjoint open intervals around a finite invariant
//! set, with each level mapped into the level above.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;
use rayon::prelude::*;

use crate::covers::{Region, Space};
use crate::maps::PointMap;
use crate::rational::{fmt_rational, integer, pow2_neg, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TowerError {
    #[error("NotInvariant: T({point}) = {image} is not in Z")]
    NotInvariant { point: String, image: String },
    #[error("ModulusTooCoarse: no radius around {point} at level {level} maps into the level above")]
    ModulusTooCoarse { point: String, level: usize },
    #[error("map `{0}` cannot be evaluated exactly on [0, 1]")]
    Unsupported(String),
    #[error("Z is empty")]
    Empty,
}

/// The open interval `(centre - radius, centre + radius)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerCell {
    pub centre: Rational,
    pub radius: Rational,
}

impl TowerCell {
    pub fn lo(&self) -> Rational {
        &self.centre - &self.radius
    }

    pub fn hi(&self) -> Rational {
        &self.centre + &self.radius
    }

    /// The part of the closure inside `[0, 1]`.
    fn closure_in_unit(&self) -> Region {
        Region::interval(self.lo().max(integer(0)), self.hi().min(integer(1)))
    }

    fn contains_strictly(&self, region: &Region) -> bool {
        let Region::Interval { lo, hi } = region else { return false };
        self.lo() < *lo && *hi < self.hi()
    }
}

impl fmt::Display for TowerCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", fmt_rational(&self.lo()), fmt_rational(&self.hi()))
    }
}

/// Levels `1..=depth`; level `j` has one cell per point of `Z`. Level 0 is
/// the whole space.
#[derive(Debug, Clone)]
pub struct Tower {
    pub map: String,
    pub points: Vec<Rational>,
    pub frontier: BTreeSet<usize>,
    pub levels: Vec<Vec<TowerCell>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerReport {
    pub disjoint: bool,
    pub diameters: bool,
    pub containment: bool,
    pub nesting: bool,
    pub covers: bool,
    pub failures: Vec<String>,
}

impl TowerReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Builds the tower for `T` on `[0, 1]` around `Z`. Points listed in
/// `frontier` belong to `Z` but their images need not; every other point
/// must satisfy `T(z) ∈ Z` exactly.
pub fn invariant_refinement_tower(
    map: &dyn PointMap,
    z: &[Rational],
    frontier: &[Rational],
    depth: usize,
) -> Result<Tower, TowerError> {
    let mut points: Vec<Rational> = z.iter().chain(frontier).cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if points.is_empty() {
        return Err(TowerError::Empty);
    }
    points.sort();
    let frontier_idx: BTreeSet<usize> = frontier.iter().map(|f| points.binary_search(f).expect("listed")).collect();
    let mut target = vec![None; points.len()];
    for (i, p) in points.iter().enumerate() {
        if frontier_idx.contains(&i) {
            continue;
        }
        let image = map.eval(p).ok_or_else(|| TowerError::Unsupported(map.name()))?;
        match points.binary_search(&image) {
            Ok(t) => target[i] = Some(t),
            Err(_) => {
                return Err(TowerError::NotInvariant { point: fmt_rational(p), image: fmt_rational(&image) });
            }
        }
    }
    let gaps: Vec<Rational> = (0..points.len())
        .map(|i| {
            let left = (i > 0).then(|| &points[i] - &points[i - 1]);
            let right = points.get(i + 1).map(|q| q - &points[i]);
            match (left, right) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => integer(1),
            }
        })
        .collect();
    let mut levels: Vec<Vec<TowerCell>> = Vec::new();
    for j in 1..=depth {
        let level: Vec<TowerCell> = (0..points.len())
            .into_par_iter()
            .map(|i| {
                let mut r = pow2_neg(j + 2).min(&gaps[i] / integer(2));
                if let Some(prev) = levels.last() {
                    r = r.min(prev[i].radius.clone());
                }
                let cell = |r: &Rational| TowerCell { centre: points[i].clone(), radius: r.clone() };
                let Some(t) = target[i] else { return Ok(cell(&r)) };
                let Some(prev) = levels.last() else { return Ok(cell(&r)) };
                for _ in 0..256 {
                    if prev[t].contains_strictly(&map.image(&cell(&r).closure_in_unit())) {
                        return Ok(cell(&r));
                    }
                    r /= integer(2);
                }
                Err(TowerError::ModulusTooCoarse { point: fmt_rational(&points[i]), level: j })
            })
            .collect::<Result<_, _>>()?;
        levels.push(level);
    }
    Ok(Tower { map: map.name(), points, frontier: frontier_idx, levels })
}

impl Tower {
    /// Independent exact checks: pairwise disjointness per level,
    /// `diam < 2^{-j}`, that the image of every non-frontier cell lies in
    /// some cell of the level above, nesting `U^j_n ⊆ U^{j-1}_n`, and that
    /// every level covers `Z`.
    pub fn verify(&self, map: &dyn PointMap) -> TowerReport {
        let mut report = TowerReport {
            disjoint: true,
            diameters: true,
            containment: true,
            nesting: true,
            covers: true,
            failures: Vec::new(),
        };
        for (idx, level) in self.levels.iter().enumerate() {
            let j = idx + 1;
            for (a, c) in level.iter().enumerate() {
                for d in &level[a + 1..] {
                    if c.lo() < d.hi() && d.lo() < c.hi() {
                        report.disjoint = false;
                        report.failures.push(format!("level {j}: {c} meets {d}"));
                    }
                }
                if &c.radius * integer(2) >= pow2_neg(j) || c.radius <= Rational::zero() {
                    report.diameters = false;
                    report.failures.push(format!("level {j}: diam {c} ≥ 2^-{j}"));
                }
                if !(c.lo() < self.points[a] && self.points[a] < c.hi()) {
                    report.covers = false;
                    report.failures.push(format!("level {j}: {} is not covered", fmt_rational(&self.points[a])));
                }
                if idx > 0 {
                    let up = &self.levels[idx - 1][a];
                    if c.lo() < up.lo() || c.hi() > up.hi() {
                        report.nesting = false;
                        report.failures.push(format!("level {j}: {c} is not inside {up}"));
                    }
                    if !self.frontier.contains(&a) {
                        let image = map.image(&c.closure_in_unit());
                        if !self.levels[idx - 1].iter().any(|u| u.contains_strictly(&image)) {
                            report.containment = false;
                            report.failures.push(format!("level {j}: T{c} = {image} fits no cell of level {}", j - 1));
                        }
                    }
                }
            }
        }
        report
    }

    /// One line per level listing its cells.
    pub fn to_text(&self) -> String {
        self.levels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let cells: Vec<String> = l.iter().map(ToString::to_string).collect();
                format!("level {}: {}", i + 1, cells.join(" "))
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Whether `x` lies in `⋂_{j ≤ level} ⋃_n U^j_n`.
    pub fn in_intersection(&self, x: &Rational, level: usize) -> bool {
        self.levels[..level].iter().all(|l| l.iter().any(|c| c.lo() < *x && *x < c.hi()))
    }

    pub fn space(&self) -> Space {
        Space::Interval
    }
}

/// `{0, 1, 1/2, …, 2^{-n}}` with frontier `{2^{-n}}` for `T(x) = x/2`.
pub fn dyadic_points(n: usize) -> (Vec<Rational>, Vec<Rational>) {
    let mut z = vec![integer(0)];
    z.extend((0..n).map(pow2_neg));
    (z, vec![pow2_neg(n)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Builtin;
    use crate::rational::ratio;
    use proptest::prelude::*;

    #[test]
    fn halving_tower() {
        let half = Builtin::affine(ratio(1, 2), integer(0)).unwrap();
        let (z, f) = dyadic_points(8);
        let tower = invariant_refinement_tower(&half, &z, &f, 6).unwrap();
        assert_eq!(tower.levels.len(), 6);
        let report = tower.verify(&half);
        assert!(report.passed(), "{:?}", report.failures);
        assert!(tower.in_intersection(&ratio(1, 4), 6));
        assert!(!tower.in_intersection(&ratio(3, 4), 6));
    }

    #[test]
    fn identity_tower_shrinks() {
        let id = Builtin::Identity(Space::Interval);
        let tower = invariant_refinement_tower(&id, &[integer(0)], &[], 5).unwrap();
        assert!(tower.verify(&id).passed());
        assert_eq!(tower.levels[4][0].radius, pow2_neg(7));
    }

    #[test]
    fn non_invariant_set_rejected() {
        let err = invariant_refinement_tower(&Builtin::Square, &[ratio(1, 3)], &[], 3).unwrap_err();
        assert_eq!(err, TowerError::NotInvariant { point: "1/3".into(), image: "1/9".into() });
    }

    #[test]
    fn corrupted_tower_fails() {
        let half = Builtin::affine(ratio(1, 2), integer(0)).unwrap();
        let (z, f) = dyadic_points(4);
        let mut tower = invariant_refinement_tower(&half, &z, &f, 4).unwrap();
        tower.levels[2][1].radius = ratio(1, 2);
        assert!(!tower.verify(&half).passed());
    }

    proptest! {
        #[test]
        fn towers_verify_for_affine_contractions(n in 2usize..7, b in 0i64..4) {
            let shift = ratio(b, 8);
            let map = Builtin::affine(ratio(1, 2), shift.clone()).unwrap();
            let fixed = &shift * integer(2);
            let mut z = vec![fixed.clone()];
            let mut x = integer(1);
            for _ in 0..n {
                z.push(x.clone());
                x = map.eval(&x).unwrap();
            }
            let frontier = vec![z.pop().unwrap()];
            let tower = invariant_refinement_tower(&map, &z, &frontier, 5).unwrap();
            prop_assert!(tower.verify(&map).passed());
        }
    }
}
