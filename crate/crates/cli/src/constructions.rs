use std::fmt::Write as _;
use std::sync::Arc;

use dynext_core::certificate::Certificate;
use dynext_core::common::{common_extension_baire, MapFamily, Piece};
use dynext_core::contractive::{
    contractive_common_extension, controlled_powers_check, invariant_witness_check, uniform_net, PowersCertificate,
};
use dynext_core::covers::{CoverSystem, Space};
use dynext_core::hyperspace::common_generalized_extension;
use dynext_core::injection::{embed_injection, mu_successor, PartialInjection};
use dynext_core::lift::StrongExtension;
use dynext_core::maps::{Builtin, RotationFamily, SharedMap};
use dynext_core::operator::{
    build_dynamic_dense_enumeration, norm_growth_certificate, synthesize_factor_map, BanachModel, EnumerationConfig,
    NormKind, RationalMatrix,
};
use dynext_core::rational::{fmt_rational, ratio, Rational};
use dynext_core::scenario::{ScenarioError, Section};
use dynext_core::symbolic::{fmt_word, parse_word, SymbolicSpace, Word};
use dynext_core::tower::{dyadic_points, invariant_refinement_tower};
use rand_chacha::ChaCha8Rng;

use crate::{Construction, Options};

type Built = Result<Certificate, ScenarioError>;

const DEFAULT_INJECTION: &str = "0 -> 1\n1 -> 2\n2 -> 0\n3 -> 4\n4 -> 3\n5 -> 6\n6 -> 7\n# component 5: ray\n";
const ROTATION_FAMILY: &str = "rotation-family";

pub(crate) fn run(kind: Construction, sec: &Section, opts: &Options, rng: &mut ChaCha8Rng) -> Built {
    let cert = match kind {
        Construction::EmbedInjection => embed(sec, opts)?,
        Construction::FactorOperator => factor_operator(sec, opts)?,
        Construction::LiftMap => lift_map(sec, opts, rng)?,
        Construction::CommonExtension => common(sec, opts, rng)?,
        Construction::ContractiveExtension => contractive(sec, opts, rng)?,
        Construction::GeneralizedExtension => generalized(sec, opts, rng)?,
        Construction::InvariantTower => tower(sec, opts)?,
        Construction::VerifyCovers => covers(sec, opts)?,
    };
    Ok(cert)
}

fn depth(sec: &Section, opts: &Options, default: usize) -> Result<usize, ScenarioError> {
    opts.depth.map_or_else(|| sec.parse_or("depth", default), Ok)
}

fn samples(sec: &Section, opts: &Options, default: usize) -> Result<usize, ScenarioError> {
    opts.samples.map_or_else(|| sec.parse_or("samples", default), Ok)
}

fn space_spec<'a>(sec: &'a Section, opts: &'a Options, default: &'a str) -> &'a str {
    opts.space.as_deref().or_else(|| sec.get("space")).unwrap_or(default)
}

fn cover_system(sec: &Section, spec: &str) -> Result<CoverSystem, ScenarioError> {
    CoverSystem::parse(spec).map_err(|e| sec.invalid("space", e))
}

fn embed(sec: &Section, opts: &Options) -> Built {
    let mut text = String::new();
    for edges in sec.get_all("edge") {
        for e in edges.split(',') {
            let _ = writeln!(text, "{}", e.trim());
        }
    }
    for n in sec.get_all("node") {
        let _ = writeln!(text, "# node {n}");
    }
    for c in sec.get_all("component") {
        let _ = writeln!(text, "# component {c}");
    }
    if text.is_empty() {
        text = DEFAULT_INJECTION.into();
    }
    let sigma = PartialInjection::parse(&text).map_err(|e| sec.invalid("edge", e))?;
    let depth = depth(sec, opts, 64)?;
    let mut c =
        Certificate::new(sec.name.clone()).detail(format!("{} edges, classification depth {depth}", sigma.len()));
    let cert = match embed_injection(&sigma, depth) {
        Ok(cert) => cert,
        Err(e) => return Ok(c.child(Certificate::fail("embedding", e.to_string()))),
    };
    c.push(Certificate::new("layout").detail(cert.layout));
    let broken = sigma.edges().find(|&(i, j)| {
        let image = cert.pi_a(i).and_then(|n| mu_successor(n).ok());
        image.and_then(|m| cert.pi_a_inverse(m)) != Some(j)
    });
    let title = format!("σ = π_A⁻¹ μ π_A on {} edges", sigma.len());
    c.push(match broken {
        None => Certificate::pass(title),
        Some((i, j)) => Certificate::fail(title, format!("edge {i} -> {j}")),
    });
    let mut comps = Certificate::new(format!("{} components", cert.components.len()));
    for k in &cert.components {
        let state = if k.resolved { "resolved" } else { "unresolved" };
        comps = comps.detail(format!(
            "σ-component {}: {} members -> μ {} copy {} ({state})",
            k.sigma_component, k.members, k.mu_kind, k.copy
        ));
    }
    c.push(comps);
    Ok(c)
}

fn factor_operator(sec: &Section, opts: &Options) -> Built {
    let matrix =
        RationalMatrix::parse(sec.get("matrix").unwrap_or("0 1; 0 0")).map_err(|e| sec.invalid("matrix", e))?;
    let norm: NormKind = sec.parse_or("norm", NormKind::L1)?;
    let rho = match sec.get("rho") {
        Some(_) => sec.rational("rho")?,
        None => matrix.operator_norm(norm).ok_or_else(|| sec.invalid("rho", "must be given for the L2 norm"))?,
    };
    let scan = depth(sec, opts, 10_000)?;
    let config = EnumerationConfig {
        base_count: sec.parse_or("base", 40)?,
        orbit_depth: sec.parse_or("orbit", 3)?,
        repetitions: sec.parse_or("repetitions", 8)?,
    };
    let powers: usize = sec.parse_or("powers", 8)?;
    let mut c = Certificate::new(sec.name.clone())
        .detail(format!("T = {matrix}, ρ = {}, norm {norm:?}", fmt_rational(&rho)))
        .detail(format!(
            "{} base points, orbit depth {}, {} repetitions, scan limit {scan}",
            config.base_count, config.orbit_depth, config.repetitions
        ));
    let en = match build_dynamic_dense_enumeration(&matrix, BanachModel::new(matrix.rows(), norm), &rho, config) {
        Ok(en) => en,
        Err(e) => return Ok(c.child(Certificate::fail("enumeration", e.to_string()))),
    };
    c.push(
        Certificate::new("enumeration")
            .detail(format!("|D| = {}", en.points.len()))
            .detail(format!("{} indices held back at the frontier", en.frontier.len())),
    );
    let fm = match synthesize_factor_map(en, sec.parse_or("classify", 64)?) {
        Ok(fm) => fm,
        Err(e) => return Ok(c.child(Certificate::fail("factor map", e.to_string()))),
    };
    let report = fm.commutation_check(scan as u64);
    let mut commute = Certificate::check("T π(e_i) = π(ρ U e_i)", report.passed())
        .detail(format!("{} covered basis indices", report.covered))
        .detail(format!("{} indices outside A below the scan limit", report.outside))
        .detail(format!("{} frontier indices", report.frontier));
    if let Some(w) = report.failures.first() {
        commute = commute.with_witness(w.clone());
    }
    c.push(commute);
    c.push(match fm.check_d_surjectivity() {
        Ok(n) => Certificate::pass(format!("every point of D is π of a basis vector ({n} points)")),
        Err(e) => Certificate::fail("D-surjectivity", format!("D[{e}] is not attained")),
    });
    let scaled = matrix.scaled(&(Rational::from_integer(1.into()) / &rho));
    match norm_growth_certificate(&scaled, norm, |_| Rational::from_integer(1.into()), powers) {
        Ok(g) => {
            let mut growth = Certificate::check(format!("‖(T/ρ)ⁿ‖ ≤ ‖T/ρ‖ⁿ for n ≤ {powers}"), g.submultiplicative);
            for (n, r) in g.ratios.iter().enumerate() {
                let r = r.as_ref().map_or("∞".to_string(), fmt_rational);
                growth = growth.detail(format!("n = {}: ‖(T/ρ)ⁿ‖ / ‖Uⁿ‖ = {r}", n + 1));
            }
            c.push(growth);
        }
        Err(e) => c.push(Certificate::new("norm growth").detail(format!("skipped: {e}"))),
    }
    Ok(c)
}

fn random_samples(cs: &CoverSystem, n: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<(Word, Word)> {
    let cantor = SymbolicSpace::cantor();
    let lambda = cs.symbolic_space();
    (0..n).map(|_| (cantor.random_word(rng, len, 2), lambda.random_word(rng, len, 2))).collect()
}

fn lift_map(sec: &Section, opts: &Options, rng: &mut ChaCha8Rng) -> Built {
    let spec = space_spec(sec, opts, "interval");
    let cs = cover_system(sec, spec)?;
    let default_map = match cs.space() {
        Space::Circle => "rotation(1/3)",
        Space::Cantor => "odometer",
        _ => "square",
    };
    let map = sec.get("map").unwrap_or(default_map);
    let max_k = depth(sec, opts, 6)?;
    let n = samples(sec, opts, 100)?;
    let len: usize = sec.parse_or("length", 64)?;
    let ext = if map == ROTATION_FAMILY {
        StrongExtension::new(cs.clone(), Arc::new(RotationFamily))
    } else {
        let m = Builtin::parse(map, &cs.space()).map_err(|e| sec.invalid("map", e))?;
        StrongExtension::of_map(cs.clone(), m.shared())
    };
    let mut c =
        Certificate::new(sec.name.clone()).detail(format!("{map} on {}, {n} samples of length {len}", cs.name()));
    let ext = match ext {
        Ok(ext) => ext,
        Err(e) => return Ok(c.child(Certificate::fail("lift", e.to_string()))),
    };
    let mut moduli = Certificate::new("moduli");
    for k in 1..=max_k {
        let (l, m) = ext.moduli(k);
        moduli = moduli.detail(format!("k = {k}: parameter {l}, input {m}"));
    }
    c.push(moduli);
    let cert = ext.certify(&random_samples(&cs, n, len, rng), max_k);
    let mut inclusion = Certificate::check(format!("T(cl V[α|m_k]) ⊆ V[S(α)|k] for k ≤ {max_k}"), cert.passed())
        .detail(format!("{} checks", cert.checks));
    if let Some(f) = cert.failures.first() {
        inclusion = inclusion.with_witness(f.to_string()).detail(format!("{} failures", cert.failures.len()));
    }
    c.push(inclusion);
    Ok(c)
}

/// `space: map; map` where every map is a built-in or every map is
/// `rotation-family[bits]`.
fn parse_piece(sec: &Section, key: &str, value: &str) -> Result<(CoverSystem, MapFamily), ScenarioError> {
    let (space, maps) =
        value.split_once(':').ok_or_else(|| sec.invalid(key, format!("expected `space: map; map`, got `{value}`")))?;
    let cs = CoverSystem::parse(space).map_err(|e| sec.invalid(key, e))?;
    let tokens: Vec<&str> = maps.split(';').map(str::trim).filter(|t| !t.is_empty()).collect();
    if tokens.is_empty() {
        return Err(sec.invalid(key, "a piece needs at least one map"));
    }
    let members: Vec<Option<&str>> = tokens
        .iter()
        .map(|t| t.strip_prefix(ROTATION_FAMILY).and_then(|r| r.strip_prefix('[')?.strip_suffix(']')))
        .collect();
    if members.iter().all(Option::is_some) {
        let parameters = members
            .into_iter()
            .map(|p| parse_word(p.expect("checked")).map_err(|e| sec.invalid(key, e)))
            .collect::<Result<_, _>>()?;
        return Ok((cs, MapFamily::Parameterized { family: Arc::new(RotationFamily), parameters }));
    }
    let maps = tokens
        .iter()
        .map(|t| Builtin::parse(t, &cs.space()).map(Builtin::shared).map_err(|e| sec.invalid(key, e)))
        .collect::<Result<_, _>>()?;
    Ok((cs, MapFamily::Finite(maps)))
}

fn pieces(sec: &Section, defaults: &[&str]) -> Result<Vec<(CoverSystem, MapFamily)>, ScenarioError> {
    let given = sec.get_all("piece");
    let values = if given.is_empty() { defaults.to_vec() } else { given };
    values.into_iter().map(|v| parse_piece(sec, "piece", v)).collect()
}

fn describe(family: &MapFamily) -> String {
    match family {
        MapFamily::Finite(maps) => maps.iter().map(|m| m.name()).collect::<Vec<_>>().join(", "),
        MapFamily::Parameterized { parameters, .. } => {
            parameters.iter().map(|p| format!("{ROTATION_FAMILY}[{}]", fmt_word(p))).collect::<Vec<_>>().join(", ")
        }
    }
}

fn common(sec: &Section, opts: &Options, rng: &mut ChaCha8Rng) -> Built {
    let pieces = pieces(
        sec,
        &["interval: square; tent", "circle: rotation-family[1]; rotation-family[011]; rotation-family[1101]"],
    )?;
    let max_k = depth(sec, opts, 4)?;
    let n = samples(sec, opts, 10)?;
    let bound: u64 = sec.parse_or("bound", 12)?;
    let surjectivity: usize = sec.parse_or("surjectivity", 3)?;
    let mut c = Certificate::new(sec.name.clone());
    for (i, (cs, fam)) in pieces.iter().enumerate() {
        c = c.detail(format!("piece {i}: {} with {}", cs.name(), describe(fam)));
    }
    let ext = match common_extension_baire(pieces.into_iter().map(|(cs, family)| Piece { cs, family }).collect()) {
        Ok(ext) => ext,
        Err(e) => return Ok(c.child(Certificate::fail("lifts", e.to_string()))),
    };
    let cert = ext.certify(n, max_k, bound, rng);
    let mut diagrams = Certificate::check(format!("{} factor diagrams at k ≤ {max_k}", cert.diagrams), cert.passed())
        .detail(format!("{} samples per diagram, symbols below {bound}, {} checks", n, cert.checks));
    if let Some(f) = cert.failures.first() {
        diagrams = diagrams.with_witness(f.to_string());
    }
    c.push(diagrams);
    c.push(match ext.check_surjectivity(surjectivity) {
        Ok(hits) => Certificate::pass(format!("factor maps onto every prefix of length ≤ {surjectivity}"))
            .detail(format!("{hits} prefixes")),
        Err(f) => Certificate::fail("surjectivity", f.to_string()),
    });
    Ok(c)
}

fn contractive(sec: &Section, opts: &Options, rng: &mut ChaCha8Rng) -> Built {
    let i_max = depth(sec, opts, 10)?;
    let mut c = Certificate::new(sec.name.clone());
    if sec.get("family") == Some(ROTATION_FAMILY) {
        let pairs = samples(sec, opts, 200)?;
        let fam = MapFamily::Parameterized { family: Arc::new(RotationFamily), parameters: Vec::new() };
        let cert =
            controlled_powers_check(&fam, None, i_max.max(2), pairs, rng).map_err(|e| sec.invalid("family", e))?;
        let mut powers = Certificate::check("controlled powers", cert.passed());
        powers = if cert.passed() { powers.detail(cert.to_string()) } else { powers.with_witness(cert.to_string()) };
        return Ok(c.detail(format!("{ROTATION_FAMILY}, {pairs} parameter pairs")).child(powers));
    }
    let maps: Vec<SharedMap> = sec
        .get("maps")
        .unwrap_or("affine(1/2, 0); affine(1/2, 1/4)")
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| Builtin::parse(t, &Space::Interval).map(Builtin::shared).map_err(|e| sec.invalid("maps", e)))
        .collect::<Result<_, _>>()?;
    let contraction = match sec.get("c") {
        Some(_) => sec.rational("c")?,
        None => ratio(1, 2),
    };
    let net: i64 = sec.parse_or("net", 16)?;
    let eps = match sec.get("eps") {
        Some(_) => sec.rational("eps")?,
        None => ratio(1, net.max(1)),
    };
    c = c.detail(format!(
        "{} maps, c = {}, I = {i_max}, net step 1/{net}, ε = {}",
        maps.len(),
        fmt_rational(&contraction),
        fmt_rational(&eps)
    ));
    let family = MapFamily::Finite(maps.clone());
    match controlled_powers_check(&family, Some(contraction.clone()), i_max, 0, rng) {
        Ok(cert @ PowersCertificate::Contractive { .. }) => {
            let PowersCertificate::Contractive { schedule, defects, .. } = &cert else { unreachable!() };
            let mut powers = Certificate::check(format!("sup defect ≤ ε_i for i ≤ {i_max}"), cert.passed());
            for (i, (e, d)) in schedule.iter().zip(defects).enumerate() {
                powers = powers.detail(format!("i = {i}: ε = {}, defect ≤ {}", fmt_rational(e), fmt_rational(d)));
            }
            c.push(powers);
        }
        Ok(other) => c.push(Certificate::new("controlled powers").detail(other.to_string())),
        Err(e) => return Ok(c.child(Certificate::fail("controlled powers", e.to_string()))),
    }
    let model = match contractive_common_extension(maps.clone(), contraction, i_max, uniform_net(net), &eps) {
        Ok(m) => m,
        Err(e) => return Ok(c.child(Certificate::fail("model", e.to_string()))),
    };
    let frontier_ok = model.frontier_defect <= model.frontier_bound;
    c.push(Certificate::check("frontier defect ≤ c^I", frontier_ok).detail(format!(
        "defect {}, bound {}",
        fmt_rational(&model.frontier_defect),
        fmt_rational(&model.frontier_bound)
    )));
    c.push(Certificate::from_result(
        format!("evaluation onto X at ε = {}", fmt_rational(&eps)),
        &model.check_surjectivity(&eps),
    ));
    let diagrams = model.check_diagrams();
    let mut d = Certificate::from_result("U(e_{i,a}) = e_{i+1,a} and U(α) = α", &diagrams);
    if let Ok(n) = diagrams {
        d = d.detail(format!("{n} identities"));
    }
    c.push(d);
    let witness = invariant_witness_check(&maps, &model.elements(), &model.frontier_bound, &eps);
    let mut w = Certificate::check("E is U-invariant and evaluates onto X", witness.passed())
        .detail(format!("{} elements checked", witness.invariant_checked));
    if let Some(f) = witness.failure {
        w = w.with_witness(f);
    }
    c.push(w);
    let empty = invariant_witness_check(&maps, &[], &model.frontier_bound, &eps);
    c.push(Certificate::check("the empty set is rejected", !empty.passed()));
    Ok(c)
}

fn generalized(sec: &Section, opts: &Options, rng: &mut ChaCha8Rng) -> Built {
    let pieces = pieces(sec, &["interval: square; tent", "cantor: odometer; shift"])?;
    let k = depth(sec, opts, 4)?;
    let relations = samples(sec, opts, 20)?;
    let singletons: usize = sec.parse_or("singletons", 10)?;
    let mut c = Certificate::new(sec.name.clone());
    for (i, (cs, fam)) in pieces.iter().enumerate() {
        c = c.detail(format!("piece {i}: {} with {}", cs.name(), describe(fam)));
    }
    let ext = match common_generalized_extension(pieces) {
        Ok(ext) => ext,
        Err(e) => return Ok(c.child(Certificate::fail("lifts", e.to_string()))),
    };
    let cert = ext.certify(relations, singletons, k, rng);
    let mut check = Certificate::check(format!("cross sections, factors and singletons at k = {k}"), cert.passed())
        .detail(format!("{relations} relation tuples, {singletons} singleton witnesses, {} checks", cert.checks));
    if let Some(f) = cert.failures.first() {
        check = check.with_witness(f.clone());
    }
    c.push(check);
    Ok(c)
}

fn tower(sec: &Section, opts: &Options) -> Built {
    let spec = sec.get("map").unwrap_or("affine(1/2, 0)");
    let map = Builtin::parse(spec, &Space::Interval).map_err(|e| sec.invalid("map", e))?;
    let depth = depth(sec, opts, 6)?;
    let (z, frontier) = if sec.get("points").is_some() {
        (sec.rationals("points")?, sec.rationals("frontier")?)
    } else {
        dyadic_points(sec.parse_or("dyadic", 8)?)
    };
    let fmt_all = |v: &[Rational]| v.iter().map(fmt_rational).collect::<Vec<_>>().join(", ");
    let mut c = Certificate::new(sec.name.clone())
        .detail(format!("T = {spec}, depth {depth}"))
        .detail(format!("Z = {{{}}}", fmt_all(&z)))
        .detail(format!("frontier = {{{}}}", fmt_all(&frontier)));
    let tower = match invariant_refinement_tower(&map, &z, &frontier, depth) {
        Ok(t) => t,
        Err(e) => return Ok(c.child(Certificate::fail("tower", e.to_string()))),
    };
    let report = tower.verify(&map);
    let first = |pattern: &str| report.failures.iter().find(|f| f.contains(pattern)).cloned();
    for (title, ok, pattern) in [
        ("cells of each level are disjoint", report.disjoint, "meets"),
        ("diam U^j_n < 2^-j", report.diameters, "diam"),
        ("T(U^j_n) lies in a cell of level j-1", report.containment, "fits no cell"),
        ("U^j_n ⊆ U^(j-1)_n", report.nesting, "is not inside"),
        ("every level covers Z", report.covers, "not covered"),
    ] {
        let mut check = Certificate::check(title, ok);
        if let Some(w) = first(pattern).filter(|_| !ok) {
            check = check.with_witness(w);
        }
        c.push(check);
    }
    let mut cells = Certificate::new("levels");
    for line in tower.to_text().lines() {
        cells = cells.detail(line);
    }
    c.push(cells);
    Ok(c)
}

fn covers(sec: &Section, opts: &Options) -> Built {
    let spec = space_spec(sec, opts, "all");
    let systems = if spec == "all" { CoverSystem::shipped() } else { vec![cover_system(sec, spec)?] };
    let depth = depth(sec, opts, 6)?;
    let mut c = Certificate::new(sec.name.clone()).detail(format!("depth {depth}"));
    for cs in systems {
        let report = cs.verify(depth);
        let mut check = Certificate::check(cs.name(), report.passed())
            .detail(format!("cells per level: {:?}", report.cells_per_level));
        if let Some(f) = report.failures.first() {
            check = check.with_witness(format!("{} at [{}]: {}", f.condition, fmt_word(&f.prefix), f.detail));
        }
        c.push(check);
    }
    Ok(c)
}
