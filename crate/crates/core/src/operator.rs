//! The universal operator `U(e_n) = e_{μ(n)}` on ℓ₁ and the exact synthesis
//! of linear factor maps `π` with `T π = π (ρ U)`.
//!
//! Target spaces are finite-dimensional with rational coordinates, so every
//! commutation identity below is checked as an exact rational equality.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::injection::{
    embed_injection, mu_successor, EmbeddingCertificate, InjectionError, PartialInjection, UniversalInjection,
};
use crate::pairing::{pair, unpair};
use crate::rational::{fmt_rational, integer, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OperatorError {
    #[error("NormBoundViolated: ‖T‖ = {norm} exceeds ρ = {rho}")]
    NormBoundViolated { norm: String, rho: String },
    #[error("ρ must be positive, got {0}")]
    NonPositiveRho(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("base point {0} lies outside the unit ball")]
    OutsideBall(usize),
    #[error(transparent)]
    Injection(#[from] InjectionError),
    #[error("parse error: {0}")]
    Parse(String),
}

/// A finitely supported vector of ℓ₁ with exact rational coefficients.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseL1Vector {
    coeffs: BTreeMap<u64, Rational>,
}

impl SparseL1Vector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(i: u64) -> Self {
        Self::from_pairs([(i, Rational::one())])
    }

    /// Sums repeated indices and drops zeros.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, Rational)>) -> Self {
        let mut v = Self::zero();
        for (i, c) in pairs {
            v.add_term(i, &c);
        }
        v
    }

    fn add_term(&mut self, i: u64, c: &Rational) {
        let slot = self.coeffs.entry(i).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&i);
        }
    }

    pub fn get(&self, i: u64) -> Rational {
        self.coeffs.get(&i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Rational)> {
        self.coeffs.iter().map(|(&i, c)| (i, c))
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_l1(&self) -> Rational {
        self.coeffs.values().map(|c| c.abs()).sum()
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self::from_pairs(self.iter().map(|(i, c)| (i, c * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, c) in other.iter() {
            out.add_term(i, c);
        }
        out
    }
}

/// `U(x)`: relabels the support through μ. Coefficients are untouched, so
/// `‖U(x)‖₁ = ‖x‖₁`.
pub fn apply_universal(x: &SparseL1Vector) -> Result<SparseL1Vector, InjectionError> {
    let mut out = SparseL1Vector::zero();
    for (i, c) in x.iter() {
        out.coeffs.insert(mu_successor(i)?, c.clone());
    }
    Ok(out)
}

/// Component `n` (1-based) of the product operator is `n · U(x_n)`.
pub fn frechet_universal_apply(xs: &[SparseL1Vector]) -> Result<Vec<SparseL1Vector>, InjectionError> {
    xs.iter().enumerate().map(|(k, x)| Ok(apply_universal(x)?.scale(&integer(k as i64 + 1)))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    L1,
    Linf,
    /// Membership is decided through the squared norm.
    L2,
}

impl std::str::FromStr for NormKind {
    type Err = OperatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Ok(NormKind::L1),
            "linf" | "l_inf" | "sup" => Ok(NormKind::Linf),
            "l2" => Ok(NormKind::L2),
            other => Err(OperatorError::Parse(format!("unknown norm `{other}`"))),
        }
    }
}

/// `(ℚ^d, ‖·‖)` with exactly decidable ball membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BanachModel {
    pub dim: usize,
    pub norm: NormKind,
}

impl BanachModel {
    pub fn new(dim: usize, norm: NormKind) -> Self {
        BanachModel { dim, norm }
    }

    /// Exact norm; `None` for L2 (use [`Self::squared_norm`]).
    pub fn norm(&self, v: &[Rational]) -> Option<Rational> {
        match self.norm {
            NormKind::L1 => Some(v.iter().map(|x| x.abs()).sum()),
            NormKind::Linf => Some(v.iter().map(|x| x.abs()).max().unwrap_or_else(Rational::zero)),
            NormKind::L2 => None,
        }
    }

    pub fn squared_norm(&self, v: &[Rational]) -> Rational {
        match self.norm(v) {
            Some(n) => &n * &n,
            None => v.iter().map(|x| x * x).sum(),
        }
    }

    /// `‖v‖ ≤ bound` for a nonnegative bound, decided exactly.
    pub fn norm_at_most(&self, v: &[Rational], bound: &Rational) -> bool {
        match self.norm(v) {
            Some(n) => n <= *bound,
            None => self.squared_norm(v) <= bound * bound,
        }
    }

    pub fn in_unit_ball(&self, v: &[Rational]) -> bool {
        self.norm_at_most(v, &Rational::one())
    }
}

/// Dense row-major rational matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, OperatorError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(OperatorError::DimensionMismatch { expected: c, got: row.len() });
            }
            data.extend(row);
        }
        Ok(RationalMatrix { rows: r, cols: c, data })
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zero(d);
        for i in 0..d {
            m.data[i * d + i] = Rational::one();
        }
        m
    }

    pub fn zero(d: usize) -> Self {
        RationalMatrix { rows: d, cols: d, data: vec![Rational::zero(); d * d] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn scaled(&self, s: &Rational) -> Self {
        RationalMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn apply(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols, "matrix/vector dimension mismatch");
        (0..self.rows).map(|r| (0..self.cols).map(|c| self.get(r, c) * &v[c]).sum()).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix dimension mismatch");
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                data.push((0..self.cols).map(|k| self.get(r, k) * other.get(k, c)).sum());
            }
        }
        RationalMatrix { rows: self.rows, cols: other.cols, data }
    }

    /// Exact operator norm for L1 (max column sum) and L∞ (max row sum).
    pub fn operator_norm(&self, kind: NormKind) -> Option<Rational> {
        match kind {
            NormKind::L1 => (0..self.cols)
                .map(|c| (0..self.rows).map(|r| self.get(r, c).abs()).sum::<Rational>())
                .max()
                .or_else(|| Some(Rational::zero())),
            NormKind::Linf => (0..self.rows)
                .map(|r| (0..self.cols).map(|c| self.get(r, c).abs()).sum::<Rational>())
                .max()
                .or_else(|| Some(Rational::zero())),
            NormKind::L2 => None,
        }
    }

    /// Rows separated by `;`, entries by whitespace, each `p` or `p/q`.
    pub fn parse(text: &str) -> Result<Self, OperatorError> {
        let rows = text
            .split(';')
            .filter(|r| !r.trim().is_empty())
            .map(|r| {
                r.split_whitespace()
                    .map(|t| parse_rational(t).map_err(|e| OperatorError::Parse(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(rows)
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            if r > 0 {
                f.write_str("; ")?;
            }
            let row: Vec<String> = (0..self.cols).map(|c| fmt_rational(self.get(r, c))).collect();
            f.write_str(&row.join(" "))?;
        }
        Ok(())
    }
}

pub fn fmt_vector(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(fmt_rational).collect();
    format!("({})", parts.join(", "))
}

/// Rational points of the closed unit ball by increasing denominator `q`.
/// Within one denominator, numerator vectors run through a mixed-radix
/// counter (coordinate 0 fastest) with digits ordered `0, 1, -1, …, q, -q`.
pub struct BallGrid {
    model: BanachModel,
    denom: i64,
    digits: Vec<usize>,
    seen: HashSet<Vec<Rational>>,
    done_denom: bool,
}

impl BallGrid {
    pub fn new(model: BanachModel) -> Self {
        BallGrid { model, denom: 1, digits: vec![0; model.dim], seen: HashSet::new(), done_denom: false }
    }

    fn digit_value(k: usize) -> i64 {
        if k == 0 {
            0
        } else if k % 2 == 1 {
            k.div_ceil(2) as i64
        } else {
            -((k / 2) as i64)
        }
    }

    fn advance(&mut self) {
        let radix = 2 * self.denom as usize + 1;
        for d in self.digits.iter_mut() {
            *d += 1;
            if *d < radix {
                return;
            }
            *d = 0;
        }
        self.done_denom = true;
    }
}

impl Iterator for BallGrid {
    type Item = Vec<Rational>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.model.dim == 0 {
            return if self.seen.insert(Vec::new()) { Some(Vec::new()) } else { None };
        }
        loop {
            if self.done_denom {
                self.denom += 1;
                self.done_denom = false;
            }
            let point: Vec<Rational> =
                self.digits.iter().map(|&k| Rational::new(Self::digit_value(k).into(), self.denom.into())).collect();
            self.advance();
            if self.model.in_unit_ball(&point) && self.seen.insert(point.clone()) {
                return Some(point);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationConfig {
    pub base_count: usize,
    pub orbit_depth: usize,
    /// Repetitions `r < repetitions` of every point enter σ's domain.
    pub repetitions: u64,
}

/// A ball-dense point list `D` closed under `x ↦ T(x)/ρ` up to a recorded
/// frontier, its infinitely-repeating enumeration `z_{pair(e, r)} = D[e]`, and
/// the injection σ with `T(z_i)/ρ = z_{σ(i)}`.
#[derive(Debug, Clone)]
pub struct DynamicDenseEnumeration {
    pub model: BanachModel,
    pub operator: RationalMatrix,
    pub rho: Rational,
    pub points: Vec<Vec<Rational>>,
    /// Index in `points` of `T(D[e])/ρ`, or `None` past the frontier.
    pub image_of: Vec<Option<usize>>,
    pub repetitions: u64,
    pub sigma: PartialInjection,
    /// Enumeration indices omitted from σ's domain because their image lies
    /// past the frontier.
    pub frontier: Vec<u64>,
}

impl DynamicDenseEnumeration {
    /// `z_n`, or `None` when `n` does not index a point of `D`.
    pub fn z(&self, n: u64) -> Option<&[Rational]> {
        let (e, _) = unpair(n);
        self.points.get(e as usize).map(Vec::as_slice)
    }

    pub fn covered_indices(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.points.len() as u64).flat_map(move |e| (0..self.repetitions).map(move |r| pair(e, r)))
    }
}

fn check_rho(operator: &RationalMatrix, model: BanachModel, rho: &Rational) -> Result<(), OperatorError> {
    if operator.rows() != model.dim || operator.cols() != model.dim {
        return Err(OperatorError::DimensionMismatch { expected: model.dim, got: operator.rows() });
    }
    if !rho.is_positive() {
        return Err(OperatorError::NonPositiveRho(fmt_rational(rho)));
    }
    if let Some(norm) = operator.operator_norm(model.norm) {
        if norm > *rho {
            return Err(OperatorError::NormBoundViolated { norm: fmt_rational(&norm), rho: fmt_rational(rho) });
        }
    }
    Ok(())
}

/// Builds `D` from the first `base_count` grid points of the ball.
pub fn build_dynamic_dense_enumeration(
    operator: &RationalMatrix,
    model: BanachModel,
    rho: &Rational,
    config: EnumerationConfig,
) -> Result<DynamicDenseEnumeration, OperatorError> {
    check_rho(operator, model, rho)?;
    let base: Vec<_> = BallGrid::new(model).take(config.base_count).collect();
    build_from_base(operator, model, rho, base, config)
}

/// Same as [`build_dynamic_dense_enumeration`] with explicit base points.
pub fn build_from_base(
    operator: &RationalMatrix,
    model: BanachModel,
    rho: &Rational,
    base: Vec<Vec<Rational>>,
    config: EnumerationConfig,
) -> Result<DynamicDenseEnumeration, OperatorError> {
    check_rho(operator, model, rho)?;
    let scaled = operator.scaled(&(Rational::one() / rho));

    let mut points: Vec<Vec<Rational>> = Vec::new();
    let mut index: HashMap<Vec<Rational>, usize> = HashMap::new();
    for (k, p) in base.into_iter().enumerate() {
        if p.len() != model.dim {
            return Err(OperatorError::DimensionMismatch { expected: model.dim, got: p.len() });
        }
        if !model.in_unit_ball(&p) {
            return Err(OperatorError::OutsideBall(k));
        }
        if !index.contains_key(&p) {
            index.insert(p.clone(), points.len());
            points.push(p);
        }
    }
    // Forward orbits, breadth first, to the requested depth.
    let mut layer: Vec<usize> = (0..points.len()).collect();
    for _ in 0..config.orbit_depth {
        let mut next = Vec::new();
        for e in layer {
            let img = scaled.apply(&points[e]);
            if !index.contains_key(&img) {
                index.insert(img.clone(), points.len());
                next.push(points.len());
                points.push(img);
            }
        }
        layer = next;
    }
    let image_of: Vec<Option<usize>> = points.iter().map(|p| index.get(&scaled.apply(p)).copied()).collect();

    // Greedy least-unused repetition counters, in increasing index order.
    let mut domain: Vec<u64> = Vec::new();
    let mut frontier = Vec::new();
    for e in 0..points.len() as u64 {
        for r in 0..config.repetitions {
            if image_of[e as usize].is_some() {
                domain.push(pair(e, r));
            } else {
                frontier.push(pair(e, r));
            }
        }
    }
    domain.sort_unstable();
    frontier.sort_unstable();
    let mut counters = vec![0u64; points.len()];
    let mut edges = Vec::with_capacity(domain.len());
    for &n in &domain {
        let (e, _) = unpair(n);
        let target = image_of[e as usize].expect("domain index has an image");
        edges.push((n, pair(target as u64, counters[target])));
        counters[target] += 1;
    }
    let all: Vec<u64> = domain.iter().chain(&frontier).copied().collect();
    let sigma = PartialInjection::new(edges)?.with_nodes(all);

    Ok(DynamicDenseEnumeration {
        model,
        operator: operator.clone(),
        rho: rho.clone(),
        points,
        image_of,
        repetitions: config.repetitions,
        sigma,
        frontier,
    })
}

/// `π(e_i) = z_{π_A⁻¹(i)}` for `i ∈ A`, else `0`.
#[derive(Debug, Clone)]
pub struct FactorMap {
    pub enumeration: DynamicDenseEnumeration,
    pub embedding: EmbeddingCertificate,
}

/// Outcome of the exact commutation sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommutationReport {
    /// Basis indices `i ∈ A` whose σ-edge is covered; checked exactly.
    pub covered: usize,
    /// Indices outside every claimed μ-component; both sides are 0.
    pub outside: usize,
    /// Indices inside claimed components but off the finite construction.
    pub frontier: usize,
    pub failures: Vec<String>,
}

impl CommutationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn synthesize_factor_map(enumeration: DynamicDenseEnumeration, depth: usize) -> Result<FactorMap, OperatorError> {
    let embedding = embed_injection(&enumeration.sigma, depth)?;
    Ok(FactorMap { enumeration, embedding })
}

impl FactorMap {
    pub fn dim(&self) -> usize {
        self.enumeration.model.dim
    }

    /// `π(e_i)`; `None` encodes the zero vector.
    pub fn basis_image(&self, i: u64) -> Option<&[Rational]> {
        self.embedding.pi_a_inverse(i).and_then(|n| self.enumeration.z(n))
    }

    pub fn apply(&self, x: &SparseL1Vector) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.dim()];
        for (i, c) in x.iter() {
            if let Some(z) = self.basis_image(i) {
                for (o, zk) in out.iter_mut().zip(z) {
                    *o += c * zk;
                }
            }
        }
        out
    }

    /// Checks `T π(e_i) = π(ρ U e_i)` exactly on every covered basis index,
    /// and `π(e_i) = π(U e_i) = 0` on indices `< scan_limit` outside `A`.
    pub fn commutation_check(&self, scan_limit: u64) -> CommutationReport {
        let en = &self.enumeration;
        let mu = UniversalInjection;
        let zero = vec![Rational::zero(); self.dim()];
        let mut report = CommutationReport { covered: 0, outside: 0, frontier: 0, failures: Vec::new() };
        for (n, _) in en.sigma.edges() {
            let Some(i) = self.embedding.pi_a(n) else { continue };
            let lhs = en.operator.apply(self.basis_image(i).unwrap_or(&zero));
            let image = match mu.successor(i) {
                Ok(j) => j,
                Err(e) => {
                    report.failures.push(e.to_string());
                    continue;
                }
            };
            let rhs: Vec<Rational> = self.basis_image(image).unwrap_or(&zero).iter().map(|x| x * &en.rho).collect();
            if lhs != rhs {
                report.failures.push(format!(
                    "i = {i}: T π(e_i) = {} but π(ρ U e_i) = {}",
                    fmt_vector(&lhs),
                    fmt_vector(&rhs)
                ));
            }
            report.covered += 1;
        }
        for i in 0..scan_limit {
            let Ok(slot) = mu.decode(i) else { continue };
            if self.embedding.is_claimed(slot.kind.code(), slot.copy) {
                let covered = self.embedding.pi_a_inverse(i).map(|n| en.sigma.get(n).is_some()).unwrap_or(false);
                if !covered {
                    report.frontier += 1;
                }
                continue;
            }
            let j = mu.successor(i).expect("decoded index has a successor");
            if self.basis_image(i).is_some() || self.basis_image(j).is_some() {
                report.failures.push(format!("i = {i} outside A but π does not vanish"));
            }
            report.outside += 1;
        }
        report
    }

    /// Every `D[e]` equals `π(e_{π_A(pair(e, 0))})`. Returns the first `e`
    /// that fails.
    pub fn check_d_surjectivity(&self) -> Result<usize, usize> {
        for (e, p) in self.enumeration.points.iter().enumerate() {
            let ok = self
                .embedding
                .pi_a(pair(e as u64, 0))
                .and_then(|i| self.basis_image(i))
                .map(|z| z == p.as_slice())
                .unwrap_or(false);
            if !ok {
                return Err(e);
            }
        }
        Ok(self.enumeration.points.len())
    }

    /// `‖π(x)‖ ≤ ‖x‖₁`.
    pub fn contracts(&self, x: &SparseL1Vector) -> bool {
        self.enumeration.model.norm_at_most(&self.apply(x), &x.norm_l1())
    }
}

/// The factor of the product operator realized by projecting component `n`.
#[derive(Debug, Clone)]
pub struct FrechetFactor {
    /// 1-based component index; the operator factors through `n · U`.
    pub component: usize,
    pub factor: FactorMap,
}

impl FrechetFactor {
    /// Uses `n = max(1, ⌈‖T‖⌉)`. The norm must be exactly computable.
    pub fn synthesize(
        operator: &RationalMatrix,
        model: BanachModel,
        config: EnumerationConfig,
        depth: usize,
    ) -> Result<Self, OperatorError> {
        let norm = operator
            .operator_norm(model.norm)
            .ok_or_else(|| OperatorError::Parse("L2 needs an explicit component index".into()))?;
        let n = norm.ceil().to_integer().max(1.into());
        let n: usize = n.to_string().parse().expect("small component index");
        Self::synthesize_at(operator, model, config, depth, n)
    }

    pub fn synthesize_at(
        operator: &RationalMatrix,
        model: BanachModel,
        config: EnumerationConfig,
        depth: usize,
        component: usize,
    ) -> Result<Self, OperatorError> {
        let rho = integer(component as i64);
        let en = build_dynamic_dense_enumeration(operator, model, &rho, config)?;
        Ok(FrechetFactor { component, factor: synthesize_factor_map(en, depth)? })
    }

    /// `π̃(x₁, x₂, …) = π(x_n)`.
    pub fn apply(&self, xs: &[SparseL1Vector]) -> Vec<Rational> {
        match xs.get(self.component - 1) {
            Some(x) => self.factor.apply(x),
            None => vec![Rational::zero(); self.factor.dim()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormGrowthReport {
    pub t_norms: Vec<Rational>,
    /// `‖Tⁿ‖ / ‖Uⁿ‖`; `None` when `‖Uⁿ‖ = 0 < ‖Tⁿ‖`.
    pub ratios: Vec<Option<Rational>>,
    /// Smallest admissible `C` over the tested range, `None` if unbounded.
    pub min_constant: Option<Rational>,
    /// Ratios strictly increase over every tested `n`.
    pub unbounded_evidence: bool,
    /// `‖Tⁿ‖ ≤ ‖T‖ⁿ` held for every tested `n`.
    pub submultiplicative: bool,
}

/// Computes `‖Tⁿ‖` exactly for `n = 1..=max_power` and compares with the
/// supplied `‖Uⁿ‖`. Reports ratios only; never claims a converse.
pub fn norm_growth_certificate(
    operator: &RationalMatrix,
    kind: NormKind,
    u_norm: impl Fn(usize) -> Rational,
    max_power: usize,
) -> Result<NormGrowthReport, OperatorError> {
    let norm1 =
        operator.operator_norm(kind).ok_or_else(|| OperatorError::Parse("norm growth needs L1 or Linf".into()))?;
    let mut power = operator.clone();
    let mut t_norms = Vec::new();
    let mut ratios = Vec::new();
    let mut submultiplicative = true;
    let mut bound = Rational::one();
    for n in 1..=max_power {
        if n > 1 {
            power = power.mul(operator);
        }
        let tn = power.operator_norm(kind).expect("exact norm");
        bound *= &norm1;
        submultiplicative &= tn <= bound;
        let un = u_norm(n);
        let ratio = if un.is_zero() {
            if tn.is_zero() {
                Some(Rational::zero())
            } else {
                None
            }
        } else {
            Some(&tn / &un)
        };
        t_norms.push(tn);
        ratios.push(ratio);
    }
    let min_constant = if ratios.iter().any(Option::is_none) { None } else { ratios.iter().flatten().max().cloned() };
    let unbounded_evidence = ratios.len() >= 2
        && ratios.windows(2).all(|w| match (&w[0], &w[1]) {
            (Some(a), Some(b)) => b > a,
            (_, None) => true,
            (None, Some(_)) => false,
        });
    Ok(NormGrowthReport { t_norms, ratios, min_constant, unbounded_evidence, submultiplicative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn m(rows: &[&[i64]]) -> RationalMatrix {
        RationalMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| integer(x)).collect()).collect()).unwrap()
    }

    #[test]
    fn universal_examples() {
        assert_eq!(apply_universal(&SparseL1Vector::basis(6)).unwrap(), SparseL1Vector::basis(6));
        let x = SparseL1Vector::from_pairs([(1, integer(1)), (4, ratio(1, 2))]);
        let y = SparseL1Vector::from_pairs([(4, integer(1)), (8, ratio(1, 2))]);
        assert_eq!(apply_universal(&x).unwrap(), y);
        assert!(apply_universal(&SparseL1Vector::zero()).unwrap().is_zero());
    }

    #[test]
    fn frechet_examples() {
        let e1 = SparseL1Vector::basis(1);
        let e4 = SparseL1Vector::basis(4);
        assert_eq!(frechet_universal_apply(&[e1.clone(), e1]).unwrap(), vec![e4.clone(), e4.scale(&integer(2))]);
        let z = SparseL1Vector::zero();
        let out = frechet_universal_apply(&[z.clone(), SparseL1Vector::basis(6), z.clone()]).unwrap();
        assert_eq!(out, vec![z.clone(), SparseL1Vector::basis(6).scale(&integer(2)), z]);
    }

    #[test]
    fn ball_grid_starts_with_small_points() {
        let pts: Vec<_> = BallGrid::new(BanachModel::new(1, NormKind::L1)).take(5).collect();
        assert_eq!(
            pts,
            vec![vec![integer(0)], vec![integer(1)], vec![integer(-1)], vec![ratio(1, 2)], vec![ratio(-1, 2)]]
        );
        let pts: Vec<_> = BallGrid::new(BanachModel::new(2, NormKind::L1)).take(2).collect();
        assert_eq!(pts[1], vec![integer(1), integer(0)]);
        let l2: Vec<_> = BallGrid::new(BanachModel::new(2, NormKind::L2)).take(40).collect();
        assert!(l2.iter().all(|p| BanachModel::new(2, NormKind::L2).in_unit_ball(p)));
    }

    #[test]
    fn zero_operator_maps_everything_to_zero() {
        let model = BanachModel::new(2, NormKind::L1);
        let cfg = EnumerationConfig { base_count: 2, orbit_depth: 2, repetitions: 3 };
        let en = build_dynamic_dense_enumeration(&RationalMatrix::zero(2), model, &integer(1), cfg).unwrap();
        assert_eq!(en.points[1], vec![integer(1), integer(0)]);
        let zero_idx = en.points.iter().position(|p| p.iter().all(Zero::is_zero)).unwrap() as u64;
        for (_, j) in en.sigma.edges() {
            assert_eq!(unpair(j).0, zero_idx);
        }
    }

    #[test]
    fn identity_maps_points_to_repetitions_of_themselves() {
        let model = BanachModel::new(1, NormKind::L1);
        let cfg = EnumerationConfig { base_count: 3, orbit_depth: 1, repetitions: 4 };
        let en = build_dynamic_dense_enumeration(&RationalMatrix::identity(1), model, &integer(1), cfg).unwrap();
        assert_eq!(en.points, vec![vec![integer(0)], vec![integer(1)], vec![integer(-1)]]);
        for (i, j) in en.sigma.edges() {
            assert_eq!(unpair(i).0, unpair(j).0);
        }
        let fm = synthesize_factor_map(en, 64).unwrap();
        let rep = fm.commutation_check(2_000);
        assert!(rep.passed(), "{:?}", rep.failures);
        assert_eq!(rep.covered, 12);
        assert_eq!(fm.check_d_surjectivity(), Ok(3));
    }

    #[test]
    fn nilpotent_chain() {
        let model = BanachModel::new(2, NormKind::L1);
        let t = m(&[&[0, 1], &[0, 0]]);
        let e1 = vec![integer(1), integer(0)];
        let e2 = vec![integer(0), integer(1)];
        let zero = vec![integer(0), integer(0)];
        let cfg = EnumerationConfig { base_count: 0, orbit_depth: 3, repetitions: 2 };
        let en = build_from_base(&t, model, &integer(1), vec![e2.clone()], cfg).unwrap();
        assert_eq!(en.points, vec![e2.clone(), e1.clone(), zero.clone()]);
        let first = en.sigma.get(pair(0, 0)).unwrap();
        assert_eq!(en.z(first).unwrap(), e1.as_slice());
        let second = en.sigma.get(first).unwrap();
        assert_eq!(en.z(second).unwrap(), zero.as_slice());

        let fm = synthesize_factor_map(en, 64).unwrap();
        let i = fm.embedding.pi_a(pair(0, 0)).unwrap();
        let lhs = t.apply(fm.basis_image(i).unwrap());
        let rhs = fm.basis_image(mu_successor(i).unwrap()).unwrap().to_vec();
        assert_eq!(lhs, e1);
        assert_eq!(rhs, e1);
        assert!(fm.commutation_check(5_000).passed());
    }

    #[test]
    fn factor_map_outside_a_is_zero_and_contracts() {
        let model = BanachModel::new(2, NormKind::Linf);
        let t = RationalMatrix::parse("1/2 1/3; -1/4 0").unwrap();
        let cfg = EnumerationConfig { base_count: 12, orbit_depth: 2, repetitions: 3 };
        let en = build_dynamic_dense_enumeration(&t, model, &ratio(5, 6), cfg).unwrap();
        let fm = synthesize_factor_map(en, 64).unwrap();
        let outside = (0..10_000u64).find(|&i| fm.embedding.pi_a_inverse(i).is_none()).unwrap();
        assert!(fm.apply(&SparseL1Vector::basis(outside)).iter().all(Zero::is_zero));
        let a: Vec<u64> = fm.embedding.map().values().copied().take(2).collect();
        let x = SparseL1Vector::from_pairs([(a[0], ratio(1, 2)), (a[1], ratio(1, 2))]);
        let mid = fm.apply(&x);
        let p = fm.basis_image(a[0]).unwrap();
        let q = fm.basis_image(a[1]).unwrap();
        let expect: Vec<_> = p.iter().zip(q).map(|(u, v)| (u + v) * ratio(1, 2)).collect();
        assert_eq!(mid, expect);
        assert!(fm.contracts(&x));
        assert!(fm.apply(&SparseL1Vector::zero()).iter().all(Zero::is_zero));
        assert!(fm.commutation_check(3_000).passed());
    }

    #[test]
    fn rho_below_norm_is_rejected() {
        let model = BanachModel::new(2, NormKind::L1);
        let t = m(&[&[0, 1], &[0, 0]]);
        let cfg = EnumerationConfig { base_count: 4, orbit_depth: 1, repetitions: 1 };
        assert!(matches!(
            build_dynamic_dense_enumeration(&t, model, &ratio(1, 2), cfg),
            Err(OperatorError::NormBoundViolated { .. })
        ));
        assert!(matches!(
            build_dynamic_dense_enumeration(&t, model, &integer(0), cfg),
            Err(OperatorError::NonPositiveRho(_))
        ));
    }

    #[test]
    fn frechet_factor_projects_a_component() {
        let model = BanachModel::new(1, NormKind::L1);
        let t = m(&[&[3]]);
        let cfg = EnumerationConfig { base_count: 5, orbit_depth: 2, repetitions: 2 };
        let ff = FrechetFactor::synthesize(&t, model, cfg, 64).unwrap();
        assert_eq!(ff.component, 3);
        let i = *ff.factor.embedding.map().values().next().unwrap();
        let mut xs = vec![SparseL1Vector::zero(); 3];
        xs[2] = SparseL1Vector::basis(i);
        let lhs = t.apply(&ff.apply(&xs));
        let rhs = ff.apply(&frechet_universal_apply(&xs).unwrap());
        if ff.factor.enumeration.sigma.get(ff.factor.embedding.pi_a_inverse(i).unwrap()).is_some() {
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn norm_growth_examples() {
        let two = m(&[&[2]]);
        let rep = norm_growth_certificate(&two, NormKind::L1, |_| integer(1), 10).unwrap();
        assert!(rep.unbounded_evidence);
        assert_eq!(rep.ratios[9], Some(integer(1024)));
        let id = RationalMatrix::identity(1);
        let rep = norm_growth_certificate(&id, NormKind::L1, |_| integer(1), 10).unwrap();
        assert_eq!(rep.min_constant, Some(integer(1)));
        assert!(!rep.unbounded_evidence);
        let nil = m(&[&[0, 1], &[0, 0]]);
        let rep = norm_growth_certificate(&nil, NormKind::L1, |_| integer(1), 6).unwrap();
        assert_eq!(rep.t_norms[0], integer(1));
        assert!(rep.t_norms[1..].iter().all(Zero::is_zero));
        assert_eq!(rep.min_constant, Some(integer(1)));
        assert!(rep.submultiplicative);
    }

    #[test]
    fn matrix_text_roundtrip() {
        let t = RationalMatrix::parse("0 1/2; -3 4").unwrap();
        assert_eq!(t.to_string(), "0 1/2; -3 4");
        assert_eq!(RationalMatrix::parse(&t.to_string()).unwrap(), t);
        assert!(RationalMatrix::parse("1 2; 3").is_err());
    }
}
