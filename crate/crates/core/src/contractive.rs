//! Families with uniformly controlled powers: contractions of `[0, 1]`, the
//! compact model `E` of orbit maps, and falsification for families whose
//! powers drift apart.

use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::common::MapFamily;
use crate::covers::Space;
use crate::maps::{point_distance, PointMap, SharedMap};
use crate::rational::{fmt_rational, integer, ratio, Rational};
use crate::symbolic::{fmt_word, Word};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContractiveError {
    #[error("LipschitzRefuted: |{map}({x}) - {map}({y})| > {c}·|{x} - {y}|")]
    LipschitzRefuted { map: String, x: String, y: String, c: String },
    #[error("NetTooCoarse: {point} is farther than {eps} from the net")]
    NetTooCoarse { point: String, eps: String },
    #[error("map `{0}` cannot be evaluated exactly on [0, 1]")]
    Unsupported(String),
}

fn grid(n: i64) -> Vec<Rational> {
    (0..=n).map(|i| ratio(i, n)).collect()
}

/// Spot-checks `d(S(x), S(y)) ≤ c·d(x, y)` on a grid of `[0, 1]`.
pub fn check_lipschitz(map: &dyn PointMap, c: &Rational) -> Result<(), ContractiveError> {
    let space = map.space();
    let pts = grid(16);
    let values: Vec<Rational> = pts
        .iter()
        .map(|x| map.eval(x).ok_or_else(|| ContractiveError::Unsupported(map.name())))
        .collect::<Result<_, _>>()?;
    for (i, x) in pts.iter().enumerate() {
        for (j, y) in pts.iter().enumerate().skip(i + 1) {
            if point_distance(&space, &values[i], &values[j]) > c * point_distance(&space, x, y) {
                return Err(ContractiveError::LipschitzRefuted {
                    map: map.name(),
                    x: fmt_rational(x),
                    y: fmt_rational(y),
                    c: fmt_rational(c),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedPointApprox {
    pub value: Rational,
    pub iterations: usize,
    pub error_bound: Rational,
}

/// `S^i(a)` with `i` minimal such that `c^i · diam / (1 - c) ≤ tol`.
pub fn contraction_fixed_point(
    map: &dyn PointMap,
    c: &Rational,
    start: &Rational,
    tol: &Rational,
) -> Result<FixedPointApprox, ContractiveError> {
    assert!(c.is_positive() && *c < Rational::one(), "contraction constant must lie in (0, 1)");
    check_lipschitz(map, c)?;
    let scale = Rational::one() / (Rational::one() - c);
    let mut bound = scale.clone();
    let mut x = start.clone();
    let mut iterations = 0;
    while bound > *tol {
        x = map.eval(&x).ok_or_else(|| ContractiveError::Unsupported(map.name()))?;
        bound *= c;
        iterations += 1;
    }
    Ok(FixedPointApprox { value: x, iterations, error_bound: bound })
}

/// `α(S)` exactly when known, otherwise to within `tol`.
fn fixed_point(map: &dyn PointMap, c: &Rational, tol: &Rational) -> Result<(Rational, Rational), ContractiveError> {
    match map.fixed_point() {
        Some(a) => Ok((a, Rational::zero())),
        None => {
            let fp = contraction_fixed_point(map, c, &Rational::zero(), tol)?;
            Ok((fp.value, fp.error_bound))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PowersCertificate {
    /// `sup_x d(S^i(x), α(S)) ≤ ε_i = c^i · diam` for every member.
    Contractive {
        c: Rational,
        schedule: Vec<Rational>,
        defects: Vec<Rational>,
    },
    /// A finite family that is not contractive: controlled trivially.
    FiniteFamily {
        members: usize,
    },
    /// `S` and `S′` are `distance` apart but `S^i(x)` and `S′^i(x)` are
    /// `drift` apart.
    Falsified {
        s: String,
        s_prime: String,
        distance: Rational,
        i: usize,
        x: Rational,
        drift: Rational,
    },
    Inconclusive {
        pairs: usize,
    },
}

impl PowersCertificate {
    /// `true` unless falsified or a tabulated defect exceeds its bound.
    pub fn passed(&self) -> bool {
        match self {
            PowersCertificate::Contractive { schedule, defects, .. } => {
                defects.iter().zip(schedule).all(|(d, e)| d <= e) && schedule.windows(2).all(|w| w[1] <= w[0])
            }
            PowersCertificate::FiniteFamily { .. } | PowersCertificate::Inconclusive { .. } => true,
            PowersCertificate::Falsified { .. } => false,
        }
    }
}

impl fmt::Display for PowersCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowersCertificate::Contractive { c, schedule, .. } => {
                write!(f, "contractive c={} with schedule up to i={}", fmt_rational(c), schedule.len() - 1)
            }
            PowersCertificate::FiniteFamily { members } => write!(f, "finite family of {members} maps"),
            PowersCertificate::Falsified { s, s_prime, distance, i, x, drift } => write!(
                f,
                "falsified: d({s}, {s_prime}) = {} but d({s}^{i}({}), {s_prime}^{i}({})) = {}",
                fmt_rational(distance),
                fmt_rational(x),
                fmt_rational(x),
                fmt_rational(drift)
            ),
            PowersCertificate::Inconclusive { pairs } => write!(f, "inconclusive after {pairs} pairs"),
        }
    }
}

/// `sup` over grid points of `d(S^i(x), α(S))`, `i = 0..=depth`.
fn defect_profile(map: &dyn PointMap, alpha: &Rational, depth: usize, pts: &[Rational]) -> Vec<Rational> {
    let space = map.space();
    let mut xs: Vec<Rational> = pts.to_vec();
    let mut out = Vec::with_capacity(depth + 1);
    for i in 0..=depth {
        if i > 0 {
            xs = xs.iter().map(|x| map.eval(x).expect("exact evaluation")).collect();
        }
        out.push(xs.iter().map(|x| point_distance(&space, x, alpha)).max().unwrap_or_else(Rational::zero));
    }
    out
}

/// Certifies contractive families with `ε_i = c^i · diam`, accepts other
/// finite families, and searches parameterized families for a pair of
/// nearby maps whose powers drift apart.
pub fn controlled_powers_check<R: Rng>(
    family: &MapFamily,
    c: Option<Rational>,
    depth: usize,
    pairs: usize,
    rng: &mut R,
) -> Result<PowersCertificate, ContractiveError> {
    match family {
        MapFamily::Finite(maps) => {
            let lip = maps.iter().map(|m| m.lipschitz()).max().unwrap_or_else(Rational::zero);
            let c = c.unwrap_or(lip);
            if maps.is_empty() || c >= Rational::one() || c.is_zero() {
                return Ok(PowersCertificate::FiniteFamily { members: maps.len() });
            }
            let diam = maps[0].space().diam_whole();
            let schedule: Vec<Rational> = (0..=depth)
                .scan(diam, |e, _| {
                    let cur = e.clone();
                    *e *= &c;
                    Some(cur)
                })
                .collect();
            let pts = grid(64);
            let tol = schedule[depth].clone() * &c;
            let profiles: Vec<Vec<Rational>> = maps
                .par_iter()
                .map(|m| {
                    check_lipschitz(m.as_ref(), &c)?;
                    let (alpha, err) = fixed_point(m.as_ref(), &c, &tol)?;
                    Ok(defect_profile(m.as_ref(), &alpha, depth, &pts).into_iter().map(|d| d + &err).collect())
                })
                .collect::<Result<_, ContractiveError>>()?;
            let defects = (0..=depth).map(|i| profiles.iter().map(|p| p[i].clone()).max().expect("nonempty")).collect();
            Ok(PowersCertificate::Contractive { c, schedule, defects })
        }
        MapFamily::Parameterized { family, .. } => {
            let pts = grid(8);
            let space = family.space();
            let mut best: Option<PowersCertificate> = None;
            for _ in 0..pairs {
                let mut p: Word = (0..16).map(|_| rng.gen_range(0..2)).collect();
                let j = rng.gen_range(0..p.len());
                let s = family.at(&p);
                let name = format!("G[{}]", fmt_word(&p));
                p[j] ^= 1;
                let s2 = family.at(&p);
                let name2 = format!("G[{}]", fmt_word(&p));
                let Some(w) = drift_witness(s.as_ref(), s2.as_ref(), &space, depth, &pts) else { continue };
                let (distance, i, x, drift) = w;
                let closer = match &best {
                    Some(PowersCertificate::Falsified { distance: d, .. }) => distance < *d,
                    _ => true,
                };
                if closer {
                    best = Some(PowersCertificate::Falsified { s: name, s_prime: name2, distance, i, x, drift });
                }
            }
            Ok(best.unwrap_or(PowersCertificate::Inconclusive { pairs }))
        }
    }
}

/// `(d(S, S′), i, x, drift)` when the drift `d(S^i x, S′^i x)` reaches
/// `1/4`, is at least four times `d(S, S′)`, and peaks strictly inside
/// `1..depth`.
fn drift_witness(
    s: &dyn PointMap,
    s2: &dyn PointMap,
    space: &Space,
    depth: usize,
    pts: &[Rational],
) -> Option<(Rational, usize, Rational, Rational)> {
    let mut distance = Rational::zero();
    let mut peak: Option<(usize, Rational, Rational)> = None;
    for x in pts {
        let (mut a, mut b) = (x.clone(), x.clone());
        for i in 1..=depth {
            a = s.eval(&a)?;
            b = s2.eval(&b)?;
            let d = point_distance(space, &a, &b);
            if i == 1 {
                distance = distance.max(d.clone());
            }
            if peak.as_ref().is_none_or(|(_, _, best)| d > *best) {
                peak = Some((i, x.clone(), d));
            }
        }
    }
    let (i, x, drift) = peak?;
    let ok = drift >= ratio(1, 4) && drift >= &distance * integer(4) && i < depth && distance.is_positive();
    ok.then_some((distance, i, x, drift))
}

/// The compact model `E = {e_{i,a} : i ≤ I, a ∈ net} ∪ {α}` with
/// `e_{i,a}(S) = S^i(a)`, tabulated exactly.
#[derive(Debug, Clone)]
pub struct ContractiveModel {
    pub members: Vec<SharedMap>,
    pub c: Rational,
    pub depth: usize,
    pub net: Vec<Rational>,
    /// `orbits[i][a][S] = S^i(net[a])` for `i ≤ depth + 1`.
    orbits: Vec<Vec<Vec<Rational>>>,
    pub alpha: Vec<Rational>,
    pub alpha_error: Rational,
    /// `max d(U(e_{I,a})(S), α(S))`.
    pub frontier_defect: Rational,
    pub frontier_bound: Rational,
}

/// Checks that `net` is an `eps`-net of `[0, 1]`.
pub fn check_net(net: &[Rational], eps: &Rational) -> Result<(), ContractiveError> {
    let mut sorted = net.to_vec();
    sorted.sort();
    let too_coarse = |p: Rational| ContractiveError::NetTooCoarse { point: fmt_rational(&p), eps: fmt_rational(eps) };
    let (Some(first), Some(last)) = (sorted.first(), sorted.last()) else {
        return Err(too_coarse(Rational::zero()));
    };
    if first > eps {
        return Err(too_coarse(Rational::zero()));
    }
    if integer(1) - last > *eps {
        return Err(too_coarse(integer(1)));
    }
    for w in sorted.windows(2) {
        if &w[1] - &w[0] > eps * integer(2) {
            return Err(too_coarse((&w[0] + &w[1]) / integer(2)));
        }
    }
    Ok(())
}

/// `{i/n : 0 ≤ i ≤ n}`.
pub fn uniform_net(n: i64) -> Vec<Rational> {
    grid(n)
}

pub fn contractive_common_extension(
    members: Vec<SharedMap>,
    c: Rational,
    depth: usize,
    net: Vec<Rational>,
    eps: &Rational,
) -> Result<ContractiveModel, ContractiveError> {
    check_net(&net, eps)?;
    let frontier_bound = num_traits::pow(c.clone(), depth);
    let tol = &frontier_bound * &c * &c;
    let mut alpha = Vec::new();
    let mut alpha_error = Rational::zero();
    for m in &members {
        if m.space() != Space::Interval {
            return Err(ContractiveError::Unsupported(m.name()));
        }
        check_lipschitz(m.as_ref(), &c)?;
        let (a, e) = fixed_point(m.as_ref(), &c, &tol)?;
        alpha.push(a);
        alpha_error = alpha_error.max(e);
    }
    let mut orbits = vec![net.iter().map(|a| vec![a.clone(); members.len()]).collect::<Vec<_>>()];
    for i in 0..=depth {
        let next: Vec<Vec<Rational>> = orbits[i]
            .par_iter()
            .map(|row| row.iter().zip(&members).map(|(x, m)| m.eval(x).expect("exact evaluation")).collect())
            .collect();
        orbits.push(next);
    }
    let frontier_defect = orbits[depth + 1]
        .iter()
        .flat_map(|row| row.iter().zip(&alpha).map(|(x, a)| (x - a).abs()))
        .max()
        .unwrap_or_else(Rational::zero)
        + &alpha_error;
    Ok(ContractiveModel { members, c, depth, net, orbits, alpha, alpha_error, frontier_defect, frontier_bound })
}

impl ContractiveModel {
    /// `e_{i,a}` as the tuple `(S^i(a))_S`.
    pub fn element(&self, i: usize, a: usize) -> &[Rational] {
        &self.orbits[i][a]
    }

    /// Every element of `E`, the `α`-map last.
    pub fn elements(&self) -> Vec<Vec<Rational>> {
        let mut out: Vec<Vec<Rational>> = self.orbits[..=self.depth].iter().flatten().cloned().collect();
        out.push(self.alpha.clone());
        out
    }

    /// `U_N(e)(S) = S(e(S))`.
    pub fn apply_u(&self, e: &[Rational]) -> Vec<Rational> {
        e.iter().zip(&self.members).map(|(x, m)| m.eval(x).expect("exact evaluation")).collect()
    }

    /// `U(e_{i,a}) = e_{i+1,a}` for `i < I` and `U(α) = α`, checked exactly
    /// (the latter within the fixed-point error when `α` is approximate).
    /// Returns the number of identities checked.
    pub fn check_diagrams(&self) -> Result<usize, String> {
        let mut checks = 0;
        for i in 0..self.depth {
            for a in 0..self.net.len() {
                checks += 1;
                if self.apply_u(self.element(i, a)) != self.element(i + 1, a) {
                    return Err(format!(
                        "U(e[{i},{}]) ≠ e[{},{}]",
                        fmt_rational(&self.net[a]),
                        i + 1,
                        fmt_rational(&self.net[a])
                    ));
                }
            }
        }
        let image = self.apply_u(&self.alpha);
        for (s, (x, a)) in image.iter().zip(&self.alpha).enumerate() {
            checks += 1;
            if (x - a).abs() > self.alpha_error {
                return Err(format!("α is not fixed by member {s}"));
            }
        }
        Ok(checks)
    }

    /// `{e_{0,a}(S)}` is an `eps`-net for every `S`.
    pub fn check_surjectivity(&self, eps: &Rational) -> Result<(), ContractiveError> {
        for s in 0..self.members.len() {
            let values: Vec<Rational> = (0..self.net.len()).map(|a| self.element(0, a)[s].clone()).collect();
            check_net(&values, eps)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessCheck {
    pub invariant_checked: usize,
    pub failure: Option<String>,
}

impl WitnessCheck {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Checks `U_N(E) ⊆ E` within `tol` in the max metric and that every
/// evaluation `e ↦ e(S)` maps `E` onto an `eps`-net of `[0, 1]`.
pub fn invariant_witness_check(
    members: &[SharedMap],
    elements: &[Vec<Rational>],
    tol: &Rational,
    eps: &Rational,
) -> WitnessCheck {
    for s in 0..members.len() {
        let values: Vec<Rational> = elements.iter().map(|e| e[s].clone()).collect();
        if let Err(e) = check_net(&values, eps) {
            return WitnessCheck {
                invariant_checked: 0,
                failure: Some(format!("evaluation at {}: {e}", members[s].name())),
            };
        }
    }
    let missing = elements.par_iter().find_map_first(|e| {
        let image: Vec<Rational> = e.iter().zip(members).map(|(x, m)| m.eval(x).expect("exact evaluation")).collect();
        let close = elements.iter().any(|f| image.iter().zip(f).all(|(x, y)| (x - y).abs() <= *tol));
        (!close).then(|| {
            let show = |v: &[Rational]| v.iter().map(fmt_rational).collect::<Vec<_>>().join(", ");
            format!("U({}) = ({}) is not within {} of E", show(e), show(&image), fmt_rational(tol))
        })
    });
    WitnessCheck { invariant_checked: elements.len(), failure: missing }
}
