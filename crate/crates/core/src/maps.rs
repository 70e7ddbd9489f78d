//! Uniformly continuous self-maps of the shipped spaces, evaluated on closed
//! regions with exact rational hulls.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::covers::{Region, Space};
use crate::rational::{frac, integer, parse_rational, pow2_neg, Rational};
use crate::symbolic::Word;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MapError {
    #[error("unknown map `{0}`")]
    Unknown(String),
    #[error("map `{0}` does not send [0, 1] into itself")]
    LeavesSpace(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// A self-map `T` of a shipped space.
pub trait PointMap: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn space(&self) -> Space;
    /// A closed region containing `T(region)`.
    fn image(&self, region: &Region) -> Region;
    /// `diam T(R) ≤ L · diam R` for the regions produced by [`Self::image`].
    fn lipschitz(&self) -> Rational;
    /// Exact value at a rational point of the interval or circle.
    fn eval(&self, x: &Rational) -> Option<Rational>;
    /// The unique fixed point, when known in closed form.
    fn fixed_point(&self) -> Option<Rational> {
        None
    }
}

pub type SharedMap = Arc<dyn PointMap>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Builtin {
    Identity(Space),
    Square,
    Tent,
    /// `a·x + b` on `[0, 1]`.
    Affine {
        a: Rational,
        b: Rational,
    },
    /// `x + θ` mod 1.
    Rotation(Rational),
    Shift,
    Odometer,
}

fn odometer_word(w: &[u64]) -> Word {
    let mut out = w.to_vec();
    for a in out.iter_mut() {
        if *a == 0 {
            *a = 1;
            return out;
        }
        *a = 0;
    }
    out
}

/// Rotates `[lo, hi]` by `shift` and renormalizes so that `lo ∈ [0, 1)`.
fn rotate(lo: &Rational, hi: &Rational, shift_lo: &Rational, shift_hi: &Rational) -> Region {
    let lo = lo + shift_lo;
    let hi = hi + shift_hi;
    let z = Rational::from_integer(lo.floor().to_integer());
    Region::Interval { lo: &lo - &z, hi: &hi - &z }
}

impl Builtin {
    pub fn affine(a: Rational, b: Rational) -> Result<Self, MapError> {
        let one = Rational::one();
        let ends = [b.clone(), &a + &b];
        if ends.iter().any(|e| e.is_negative() || *e > one) {
            return Err(MapError::LeavesSpace(format!("{}x + {}", a, b)));
        }
        Ok(Builtin::Affine { a, b })
    }

    pub fn shared(self) -> SharedMap {
        Arc::new(self)
    }

    /// `id`, `square`, `tent`, `affine(a, b)`, `rotation(θ)`, `shift`,
    /// `odometer`; the space is used by `id`.
    pub fn parse(spec: &str, space: &Space) -> Result<Self, MapError> {
        let spec = spec.trim();
        let args = |name: &str| -> Option<Vec<String>> {
            spec.strip_prefix(name)?
                .trim()
                .strip_prefix('(')?
                .strip_suffix(')')
                .map(|inner| inner.split(',').map(|s| s.trim().to_string()).collect())
        };
        let num = |s: &str| parse_rational(s).map_err(|e| MapError::Parse(e.to_string()));
        match spec {
            "id" | "identity" => return Ok(Builtin::Identity(space.clone())),
            "square" | "x^2" => return Ok(Builtin::Square),
            "tent" => return Ok(Builtin::Tent),
            "shift" => return Ok(Builtin::Shift),
            "odometer" => return Ok(Builtin::Odometer),
            _ => {}
        }
        if let Some(a) = args("affine") {
            if a.len() != 2 {
                return Err(MapError::Parse(format!("`{spec}` needs two arguments")));
            }
            return Builtin::affine(num(&a[0])?, num(&a[1])?);
        }
        if let Some(a) = args("rotation") {
            if a.len() != 1 {
                return Err(MapError::Parse(format!("`{spec}` needs one argument")));
            }
            return Ok(Builtin::Rotation(frac(&num(&a[0])?)));
        }
        Err(MapError::Unknown(spec.to_string()))
    }
}

impl PointMap for Builtin {
    fn name(&self) -> String {
        match self {
            Builtin::Identity(_) => "id".into(),
            Builtin::Square => "x^2".into(),
            Builtin::Tent => "tent".into(),
            Builtin::Affine { a, b } => format!("{a}x+{b}"),
            Builtin::Rotation(t) => format!("rotation({t})"),
            Builtin::Shift => "shift".into(),
            Builtin::Odometer => "odometer".into(),
        }
    }

    fn space(&self) -> Space {
        match self {
            Builtin::Identity(s) => s.clone(),
            Builtin::Square | Builtin::Tent | Builtin::Affine { .. } => Space::Interval,
            Builtin::Rotation(_) => Space::Circle,
            Builtin::Shift | Builtin::Odometer => Space::Cantor,
        }
    }

    fn image(&self, region: &Region) -> Region {
        match (self, region) {
            (Builtin::Identity(_), r) => r.clone(),
            (Builtin::Square, Region::Interval { lo, hi }) => Region::Interval { lo: lo * lo, hi: hi * hi },
            (Builtin::Tent, Region::Interval { lo, hi }) => {
                let half = Rational::new(1.into(), 2.into());
                let t = |x: &Rational| if *x <= half { x * integer(2) } else { integer(2) - x * integer(2) };
                if *hi <= half || *lo >= half {
                    let (a, b) = (t(lo), t(hi));
                    Region::Interval { lo: a.clone().min(b.clone()), hi: a.max(b) }
                } else {
                    Region::Interval { lo: t(lo).min(t(hi)), hi: integer(1) }
                }
            }
            (Builtin::Affine { a, b }, Region::Interval { lo, hi }) => {
                let (x, y) = (a * lo + b, a * hi + b);
                Region::Interval { lo: x.clone().min(y.clone()), hi: x.max(y) }
            }
            (Builtin::Rotation(t), Region::Interval { lo, hi }) => rotate(lo, hi, t, t),
            (Builtin::Shift, Region::Cylinder(w)) => Region::Cylinder(w.get(1..).unwrap_or(&[]).to_vec()),
            (Builtin::Odometer, Region::Cylinder(w)) => Region::Cylinder(odometer_word(w)),
            _ => panic!("{} cannot act on {region}", self.name()),
        }
    }

    fn lipschitz(&self) -> Rational {
        match self {
            Builtin::Identity(_) | Builtin::Rotation(_) | Builtin::Odometer => Rational::one(),
            Builtin::Square | Builtin::Tent | Builtin::Shift => integer(2),
            Builtin::Affine { a, .. } => a.abs(),
        }
    }

    fn eval(&self, x: &Rational) -> Option<Rational> {
        match self {
            Builtin::Identity(Space::Interval | Space::Circle) => Some(x.clone()),
            Builtin::Square => Some(x * x),
            Builtin::Tent => Some(integer(1) - (x * integer(2) - integer(1)).abs()),
            Builtin::Affine { a, b } => Some(a * x + b),
            Builtin::Rotation(t) => Some(frac(&(x + t))),
            _ => None,
        }
    }

    fn fixed_point(&self) -> Option<Rational> {
        match self {
            Builtin::Affine { a, b } if !a.is_one() => Some(b / (integer(1) - a)),
            _ => None,
        }
    }
}

/// A family `p ↦ G(p)` of self-maps indexed by `p ∈ 2^ℕ`.
pub trait ParamMap: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn space(&self) -> Space;
    /// A closed region containing `G(p)(x)` for every `p` extending `q` and
    /// every `x ∈ region`.
    fn image(&self, q: &[u64], region: &Region) -> Region;
    /// Lipschitz constant in `x`, uniform in `p`.
    fn lipschitz(&self) -> Rational;
    /// Extra diameter caused by knowing only `l` parameter symbols.
    fn parameter_spread(&self, l: usize) -> Rational;
    /// `G(p)` for the parameter `p` followed by zeros.
    fn at(&self, p: &[u64]) -> SharedMap;
}

pub type SharedFamily = Arc<dyn ParamMap>;

/// `G(p) = T` for every `p`.
#[derive(Debug, Clone)]
pub struct Fixed(pub SharedMap);

impl ParamMap for Fixed {
    fn name(&self) -> String {
        self.0.name()
    }

    fn space(&self) -> Space {
        self.0.space()
    }

    fn image(&self, _q: &[u64], region: &Region) -> Region {
        self.0.image(region)
    }

    fn lipschitz(&self) -> Rational {
        self.0.lipschitz()
    }

    fn parameter_spread(&self, _l: usize) -> Rational {
        Rational::zero()
    }

    fn at(&self, _p: &[u64]) -> SharedMap {
        self.0.clone()
    }
}

/// Rotation of the circle by `θ(p) = Σ p_i 2^{-i-2}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RotationFamily;

impl RotationFamily {
    pub fn theta(q: &[u64]) -> Rational {
        q.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| pow2_neg(i + 2)).sum()
    }
}

impl ParamMap for RotationFamily {
    fn name(&self) -> String {
        "rotation-family".into()
    }

    fn space(&self) -> Space {
        Space::Circle
    }

    fn image(&self, q: &[u64], region: &Region) -> Region {
        let Region::Interval { lo, hi } = region else { panic!("rotations act on arcs") };
        let base = Self::theta(q);
        let top = &base + self.parameter_spread(q.len());
        rotate(lo, hi, &base, &top)
    }

    fn lipschitz(&self) -> Rational {
        Rational::one()
    }

    fn parameter_spread(&self, l: usize) -> Rational {
        pow2_neg(l + 1)
    }

    fn at(&self, p: &[u64]) -> SharedMap {
        Builtin::Rotation(Self::theta(p)).shared()
    }
}

/// Distance on the circle `ℝ/ℤ`.
pub fn circle_distance(x: &Rational, y: &Rational) -> Rational {
    let d = frac(&(x - y));
    let e = integer(1) - &d;
    d.min(e)
}

/// Distance in the space of `m`: `|x - y|` on the interval, arc length on
/// the circle.
pub fn point_distance(space: &Space, x: &Rational, y: &Rational) -> Rational {
    match space {
        Space::Circle => circle_distance(x, y),
        _ => (x - y).abs(),
    }
}

/// `T^i(x)`.
pub fn iterate(map: &dyn PointMap, x: &Rational, i: usize) -> Option<Rational> {
    let mut y = x.clone();
    for _ in 0..i {
        y = map.eval(&y)?;
    }
    Some(y)
}
