use std::fs;

use anyhow::{anyhow, bail};
use num_complex::Complex64;
use serde_json::json;
use szego::basis::{
    dimension, enumerate_multiindices, sphere_monomial_norm_sq, FourierBasis, MeasureSource,
    DEFAULT_GRAM_SAMPLES,
};
use szego::cache::Cache;
use szego::embedding::{
    build_embedding, confirmed_strata, immersion_report, separation_report, PointClass, IMMERSION_FLOOR,
    SEPARATION_DELTA, SEPARATION_FLOOR,
};
use szego::fourier::{orbit_components, parseval_defect, OrbitQuadrature};
use szego::integrate::Quadrature;
use szego::kernel::{
    diagonal_series, fit_expansion, ratio_report, stratum_vanishing_check, szego_kernel, RatioConfig,
};
use szego::poly::{Polynomial, TermSpec};
use szego::{Error, Manifold, ManifoldKind, ManifoldSpec, SurfacePoint};

use crate::args::{Command, CommonArgs, LevelRange, MeasureChoice};
use crate::report::{fmt, CampaignConfig, Contract, Outcome, Table};

const DEFAULT_FIT_LEVELS: LevelRange = LevelRange { start: 20, end: 60 };
const DEFAULT_IMMERSION_SAMPLES: usize = 100;
const DEFAULT_PAIRS: usize = 10_000;
const EMBED_QUADRATURE_SAMPLES: usize = 50_000;
const KERNEL_SYMMETRY_TOL: f64 = 1e-10;
const NORM_IDENTITY_TOL: f64 = 1e-12;
const PARSEVAL_TOL: f64 = 1e-10;
const FIT_TOL_ROUND: f64 = 0.01;
const FIT_TOL_COMPLIANT: f64 = 0.10;
const DIMS_ENUMERATION_CAP: u64 = 1_000_000;

/// Rejected input; maps to exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub struct Context {
    pub manifold: Manifold,
    pub config: CampaignConfig,
    cache: Option<Cache>,
    warnings: Vec<String>,
}

impl Context {
    pub fn new(command: &Command) -> anyhow::Result<Self> {
        let a = command.args();
        let (source, spec) = resolve_manifold(a)?;
        let manifold = Manifold::new(&spec)?;
        let function = a.function.as_deref().map(read_function).transpose()?;
        let mut ctx = Self {
            warnings: manifold.warnings().to_vec(),
            config: CampaignConfig {
                command: command.name().into(),
                manifold_source: source,
                manifold: spec,
                levels: a.m,
                m0: a.m0,
                extra_levels: a.extra_levels.clone(),
                point: None,
                point2: None,
                function,
                seed: a.seed,
                samples: a.samples,
                points: a.points,
                pairs: a.pairs,
                tolerance: a.tolerance,
                measure: a.measure,
                out: a.out.as_ref().map(|p| p.display().to_string()),
            },
            cache: a.cache.as_ref().map(Cache::new).transpose()?,
            manifold,
        };
        if let Some(t) = a.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                bail!(config_err(format!("tolerance must be positive, got {t}")));
            }
        }
        if let Some(p) = &a.point {
            ctx.config.point = Some(ctx.project(&p.0)?.coords);
        }
        if let Some(p) = &a.point2 {
            ctx.config.point2 = Some(ctx.project(&p.0)?.coords);
        }
        Ok(ctx)
    }

    fn project(&self, coords: &[Complex64]) -> anyhow::Result<SurfacePoint> {
        if coords.len() != self.manifold.n() {
            bail!(config_err(format!(
                "point has {} coordinates, manifold has n = {}",
                coords.len(),
                self.manifold.n()
            )));
        }
        Ok(self.manifold.project_radial(coords)?)
    }

    fn point(&self) -> anyhow::Result<Option<SurfacePoint>> {
        self.config
            .point
            .as_ref()
            .map(|c| Ok(self.manifold.point(c.clone())?))
            .transpose()
    }

    /// `--point`, or a point with every coordinate nonzero.
    fn point_or_regular(&mut self) -> anyhow::Result<SurfacePoint> {
        if let Some(p) = self.point()? {
            return Ok(p);
        }
        let coords: Vec<Complex64> = (0..self.manifold.n())
            .map(|j| Complex64::new(1.0 / (j + 1) as f64, 0.1 * j as f64))
            .collect();
        let p = self.project(&coords)?;
        self.config.point = Some(p.coords.clone());
        Ok(p)
    }

    /// `--point`, or a point on the stratum of largest order.
    fn point_or_singular(&mut self) -> anyhow::Result<SurfacePoint> {
        if let Some(p) = self.point()? {
            return Ok(p);
        }
        let k = confirmed_strata(&self.manifold).into_iter().max().unwrap_or(1);
        if k <= 1 {
            bail!(config_err("the action is free; pass --point"));
        }
        let support = self.manifold.supports_with_order(k).into_iter().next().expect("confirmed stratum has a support");
        let mut coords = vec![Complex64::new(0.0, 0.0); self.manifold.n()];
        for j in support {
            coords[j] = Complex64::new(1.0, 0.0);
        }
        let p = self.project(&coords)?;
        self.config.point = Some(p.coords.clone());
        Ok(p)
    }

    fn levels(&mut self, default: Option<LevelRange>) -> anyhow::Result<Vec<u32>> {
        if self.config.levels.is_none() {
            self.config.levels = default;
        }
        self.config
            .levels
            .map(|r| r.levels())
            .ok_or_else(|| config_err(format!("{} needs --m", self.config.command)))
    }

    /// Compliant quadrature when the measure choice calls for one.
    fn quadrature(&self, asymptotic: bool) -> anyhow::Result<Option<Quadrature>> {
        self.quadrature_with(asymptotic, DEFAULT_GRAM_SAMPLES)
    }

    fn quadrature_with(&self, asymptotic: bool, default_samples: usize) -> anyhow::Result<Option<Quadrature>> {
        let m = &self.manifold;
        let compliant = match self.config.measure {
            MeasureChoice::Round => {
                if m.kind() != ManifoldKind::Sphere {
                    bail!(config_err("the round measure is only available on spheres"));
                }
                false
            }
            MeasureChoice::Compliant => true,
            MeasureChoice::Auto => !(m.is_standard_sphere() || (m.kind() == ManifoldKind::Sphere && !asymptotic)),
        };
        if !compliant {
            return Ok(None);
        }
        let samples = self.config.samples.unwrap_or(default_samples);
        Ok(Some(Quadrature::compliant(m, samples, self.config.seed)?))
    }

    fn basis(&self, level: u32, source: &MeasureSource<'_>) -> anyhow::Result<FourierBasis> {
        Ok(match &self.cache {
            Some(c) => c.basis(&self.manifold, level, source)?,
            None => FourierBasis::build(&self.manifold, level, source)?,
        })
    }
}

fn resolve_manifold(a: &CommonArgs) -> anyhow::Result<(String, ManifoldSpec)> {
    if let Some(path) = &a.manifold {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("reading {}: {e}", path.display())))?;
        let spec = ManifoldSpec::from_json(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        return Ok((format!("file:{}", path.display()), spec));
    }
    let name = a.preset.as_deref().unwrap_or("sphere");
    let spec = ManifoldSpec::preset(name, a.n, a.weights.as_deref())?;
    Ok((format!("preset:{name}"), spec))
}

fn read_function(arg: &str) -> anyhow::Result<Vec<TermSpec>> {
    let text = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| config_err(format!("reading {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| config_err(format!("function: {e}")))
}

pub fn run(command: &Command, ctx: &mut Context) -> anyhow::Result<Outcome> {
    let mut out = match command {
        Command::Dims(_) => dims(ctx),
        Command::Norms(_) => norms(ctx),
        Command::Kernel(_) => kernel(ctx),
        Command::Fit(_) => fit(ctx),
        Command::Vanish(_) => vanish(ctx),
        Command::Ratio(_) => ratio(ctx),
        Command::Project(_) => project(ctx),
        Command::Embed(_) => embed(ctx),
    }?;
    let mut warnings = std::mem::take(&mut ctx.warnings);
    warnings.append(&mut out.warnings);
    out.warnings = warnings;
    Ok(out)
}

fn outcome(table: Table, contracts: Vec<Contract>, result: serde_json::Value) -> Outcome {
    Outcome {
        table,
        contracts,
        warnings: Vec::new(),
        result,
    }
}

fn dims(ctx: &mut Context) -> anyhow::Result<Outcome> {
    let levels = ctx.levels(None)?;
    let w = ctx.manifold.weights();
    let mut table = Table::new(&["m", "dimension"]);
    let mut mismatches = Vec::new();
    let mut rows = Vec::new();
    for &m in &levels {
        let d = dimension(w, m);
        if d <= DIMS_ENUMERATION_CAP && enumerate_multiindices(w, m).len() as u64 != d {
            mismatches.push(m);
        }
        table.push(vec![m.to_string(), d.to_string()]);
        rows.push(json!({ "m": m, "dimension": d }));
    }
    let contract = Contract::new(
        "enumeration-count",
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "enumerated monomials match the counted dimension".to_string()
        } else {
            format!("count mismatch at levels {mismatches:?}")
        },
    );
    Ok(outcome(table, vec![contract], json!({ "rows": rows })))
}

fn norms(ctx: &mut Context) -> anyhow::Result<Outcome> {
    if ctx.manifold.kind() != ManifoldKind::Sphere {
        bail!(config_err("exact norms are defined on the unit sphere"));
    }
    let levels = ctx.levels(None)?;
    let n = ctx.manifold.n();
    let unit = ctx.manifold.weights().is_unit();
    let area = Manifold::sphere_area(n);
    let mut table = Table::new(&["m", "exponents", "rational", "pi_power", "value"]);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for &m in &levels {
        let mut multinomial_sum = 0.0;
        for a in enumerate_multiindices(ctx.manifold.weights(), m) {
            let norm = sphere_monomial_norm_sq(&a, n);
            let v = norm.to_f64();
            let coeff = a.exponents().iter().fold(factorial(a.total_degree()), |acc, &e| acc / factorial(e));
            multinomial_sum += coeff * v;
            let exps = a.exponents().iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
            table.push(vec![
                m.to_string(),
                exps.clone(),
                norm.rational_part.to_string(),
                norm.pi_power.to_string(),
                fmt(v),
            ]);
            rows.push(json!({ "m": m, "exponents": a.exponents(), "norm": norm, "value": v }));
        }
        if unit {
            worst = worst.max((multinomial_sum - area).abs() / area);
        }
    }
    let mut contracts = Vec::new();
    if unit {
        contracts.push(Contract::new(
            "multinomial-identity",
            worst <= NORM_IDENTITY_TOL,
            format!("max relative defect of Σ (|α|!/α!)·‖z^α‖² against the sphere area: {}", fmt(worst)),
        ));
    }
    Ok(outcome(table, contracts, json!({ "rows": rows })))
}

fn factorial(k: u32) -> f64 {
    (2..=k).map(f64::from).product()
}

fn kernel(ctx: &mut Context) -> anyhow::Result<Outcome> {
    let levels = ctx.levels(None)?;
    let x = ctx.point_or_regular()?;
    let y = match &ctx.config.point2 {
        Some(c) => ctx.manifold.point(c.clone())?,
        None => x.clone(),
    };
    let q = ctx.quadrature(false)?;
    let source = MeasureSource::from_quadrature(q.as_ref());
    let diagonal = x.coords == y.coords;
    let stderr = if diagonal {
        diagonal_series(&ctx.manifold, &x, &levels, &source)?.1
    } else {
        None
    };
    let mut table = Table::new(&["m", "re", "im", "stderr"]);
    let mut rows = Vec::new();
    let mut symmetry = 0.0f64;
    let mut cauchy_schwarz = 0.0f64;
    for (i, &m) in levels.iter().enumerate() {
        let b = ctx.basis(m, &source)?;
        let s = szego_kernel(&b, &x, &y).value;
        let t = szego_kernel(&b, &y, &x).value;
        let sxx = szego_kernel(&b, &x, &x).value.re;
        let syy = szego_kernel(&b, &y, &y).value.re;
        let scale = s.norm().max(1.0);
        symmetry = symmetry.max((s - t.conj()).norm() / scale);
        cauchy_schwarz = cauchy_schwarz.max((s.norm_sqr() - sxx * syy) / (sxx * syy).max(f64::MIN_POSITIVE));
        let err = stderr.as_ref().map(|e| e[i]);
        table.push(vec![
            m.to_string(),
            fmt(s.re),
            fmt(s.im),
            err.map(fmt).unwrap_or_default(),
        ]);
        rows.push(json!({ "m": m, "value": [s.re, s.im], "stderr": err, "dim": b.dim() }));
    }
    let contracts = vec![
        Contract::new(
            "hermitian-symmetry",
            symmetry <= KERNEL_SYMMETRY_TOL,
            format!("max |S(x,y) − conj S(y,x)| / max(1, |S|) = {}", fmt(symmetry)),
        ),
        Contract::new(
            "cauchy-schwarz",
            cauchy_schwarz <= KERNEL_SYMMETRY_TOL,
            format!("max (|S(x,y)|² − S(x,x)S(y,y)) / S(x,x)S(y,y) = {}", fmt(cauchy_schwarz)),
        ),
    ];
    Ok(outcome(table, contracts, json!({ "rows": rows })))
}

fn fit(ctx: &mut Context) -> anyhow::Result<Outcome> {
    let levels = ctx.levels(Some(DEFAULT_FIT_LEVELS))?;
    let x = ctx.point_or_regular()?;
    let q = ctx.quadrature(true)?;
    let source = MeasureSource::from_quadrature(q.as_ref());
    let (lo, hi) = (levels[0], *levels.last().expect("nonempty range"));
    let f = fit_expansion(&ctx.manifold, &x, lo, hi, &source)?;
    let tol = ctx
        .config
        .tolerance
        .unwrap_or(if q.is_some() { FIT_TOL_COMPLIANT } else { FIT_TOL_ROUND });
    let mut table = Table::new(&["m", "value", "stderr"]);
    for (i, (&m, &v)) in f.levels.iter().zip(&f.values).enumerate() {
        let err = f.stderr.as_ref().map(|e| fmt(e[i])).unwrap_or_default();
        table.push(vec![m.to_string(), fmt(v), err]);
    }
    let contract = Contract::new(
        "leading-coefficient",
        f.relative_error <= tol,
        format!(
            "fitted {} vs predicted {}: relative error {} (tolerance {})",
            fmt(f.c_lead),
            fmt(f.predicted),
            fmt(f.relative_error),
            tol
        ),
    );
    Ok(outcome(table, vec![contract], serde_json::to_value(&f)?))
}

fn vanish(ctx: &mut Context) -> anyhow::Result<Outcome> {
    let levels = ctx.levels(None)?;
    let x0 = ctx.point_or_singular()?;
    let k = ctx.manifold.stratum_order(&x0, szego::geometry::ZERO_TOLERANCE)?;
    if k <= 1 {
        bail!(config_err("--point lies on the free stratum; vanishing needs a point with nontrivial stabilizer"));
    }
    let checked: Vec<u32> = levels.iter().copied().filter(|m| m % k != 0).collect();
    let skipped: Vec<u32> = levels.iter().copied().filter(|m| m % k == 0).collect();
    if checked.is_empty() {
        bail!(config_err(format!("every level in range is divisible by the stratum order {k}")));
    }
    let q = ctx.quadrature(false)?;
    let source = MeasureSource::from_quadrature(q.as_ref());
    let mut table = Table::new(&["m", "max_abs", "scale", "pass"]);
    let mut certs = Vec::new();
    for &m in &checked {
        let b = ctx.basis(m, &source)?;
        let c = stratum_vanishing_check(&b, &x0, &ctx.manifold)?;
        table.push(vec![m.to_string(), fmt(c.max_abs), fmt(c.scale), c.pass.to_string()]);
        certs.push(c);
    }
    let failing: Vec<u32> = certs.iter().filter(|c| !c.pass).map(|c| c.level).collect();
    let worst = certs.iter().map(|c| c.max_abs / c.scale).fold(0.0, f64::max);
    let contract = Contract::new(
        "stratum-vanishing",
        failing.is_empty(),
        if failing.is_empty() {
            format!("{} levels vanish at the order-{k} point; max scaled value {}", checked.len(), fmt(worst))
        } else {
            format!("nonzero values at levels {failing:?}")
        },
    );
    let mut out = outcome(
        table,
        vec![contract],
        json!({ "stratum_order": k, "skipped_levels": skipped, "certificates": certs }),
    );
    if !skipped.is_empty() {
        out.warnings.push(format!("levels {skipped:?} are divisible by {k} and were skipped"));
    }
    Ok(out)
}

fn ratio(ctx: &mut Context) -> anyhow::Result<Outcome> {
    let defaults = RatioConfig::default();
    let levels = ctx.levels(Some(LevelRange {
        start: 1,
        end: defaults.max_multiplier,
    }))?;
    let x0 = ctx.point_or_singular()?;
    let q = ctx.quadrature(true)?;
    let source = MeasureSource::from_quadrature(q.as_ref());
    let config = RatioConfig {
        max_multiplier: *levels.last().expect("nonempty range"),
        sigma: ctx.config.tolerance.unwrap_or(defaults.sigma),
        points: ctx.config.points.unwrap_or(defaults.points),
        seed: ctx.config.seed,
        ..defaults
    };
    let report = ratio_report(&ctx.manifold, &x0, &source, &config)?;
    let mut table = Table::new(&["multiplier", "radius", "max_real_defect", "max_imag", "undefined", "pass"]);
    for r in &report.rows {
        table.push(vec![
            r.multiplier.to_string(),
            r.radius.to_string(),
            fmt(r.max_real_defect),
            fmt(r.max_imag),
            r.undefined.to_string(),
            r.pass.to_string(),
        ]);
    }
    let contract = Contract::new(
        "ratio-neighbourhood",
        report.first_pass.is_some(),
        match report.first_pass {
            Some((m, r)) => format!("first pass at multiplier {m}, radius {r}"),
            None => format!("no multiplier up to {} passes", config.max_multiplier),
        },
    );
    Ok(outcome(table, vec![contract], serde_json::to_value(&report)?))
}

fn project(ctx: &mut Context) -> anyhow::Result<Outcome> {
    let specs = ctx
        .config
        .function
        .clone()
        .ok_or_else(|| config_err("project needs --function"))?;
    let poly = Polynomial::from_specs(ctx.manifold.n(), &specs)?;
    let levels = ctx.levels(None)?;
    let x = ctx.point_or_regular()?;
    let weights = ctx.manifold.weights().as_slice();
    let degrees: Vec<i64> = {
        let mut d: Vec<i64> = poly.terms().iter().map(|t| t.orbit_degree(weights)).collect();
        d.sort_unstable();
        d.dedup();
        d
    };
    let top = degrees
        .iter()
        .map(|d| d.unsigned_abs())
        .chain(levels.iter().map(|&m| m as u64))
        .max()
        .unwrap_or(0);
    let q = OrbitQuadrature::for_max_level(u32::try_from(top).map_err(|_| anyhow!("orbit degree {top} too large"))?);
    let u = |p: &SurfacePoint| poly.eval(&p.coords);
    let signed: Vec<i64> = levels.iter().map(|&m| m as i64).collect();
    let comps = orbit_components(u, &x, &signed, &ctx.manifold, &q);
    let mut table = Table::new(&["m", "re", "im"]);
    let mut rows = Vec::new();
    for (&m, c) in levels.iter().zip(&comps) {
        table.push(vec![m.to_string(), fmt(c.re), fmt(c.im)]);
        rows.push(json!({ "m": m, "value": [c.re, c.im] }));
    }
    let energy = (0..q.node_count())
        .map(|s| poly.eval(&ctx.manifold.act(q.node(s), &x).coords).norm_sqr())
        .sum::<f64>()
        / q.node_count() as f64;
    let defect = parseval_defect(u, &x, &degrees, &ctx.manifold, &q);
    let tol = ctx.config.tolerance.unwrap_or(PARSEVAL_TOL);
    let contract = Contract::new(
        "parseval",
        defect <= tol * energy.max(1.0),
        format!("defect {} over orbit degrees {degrees:?}, orbit energy {}", fmt(defect), fmt(energy)),
    );
    Ok(outcome(
        table,
        vec![contract],
        json!({ "orbit_degrees": degrees, "nodes": q.node_count(), "rows": rows }),
    ))
}

fn embed(ctx: &mut Context) -> anyhow::Result<Outcome> {
    let levels = ctx.levels(None)?;
    if levels.len() != 1 {
        bail!(config_err("embed takes a single --m"));
    }
    let m = levels[0];
    let q = ctx.quadrature_with(false, EMBED_QUADRATURE_SAMPLES)?;
    let source = MeasureSource::from_quadrature(q.as_ref());
    let samples = ctx.config.points.unwrap_or(DEFAULT_IMMERSION_SAMPLES);
    let pairs = ctx.config.pairs.unwrap_or(DEFAULT_PAIRS);
    let map = match build_embedding(&ctx.manifold, m, ctx.config.m0, &ctx.config.extra_levels, &source) {
        Err(Error::MinWeight { min_weight, m0 }) => {
            let contract = Contract::new(
                "min-weight",
                false,
                format!("minimal weight {min_weight} does not exceed m0 = {m0}"),
            );
            return Ok(outcome(
                Table::new(&["index", "class", "smallest_singular_value"]),
                vec![contract],
                json!({ "min_weight": min_weight, "m0": m0 }),
            ));
        }
        other => other?,
    };
    let imm = immersion_report(&map, &ctx.manifold, samples, ctx.config.seed)?;
    let sep = separation_report(&map, &ctx.manifold, pairs, SEPARATION_DELTA, SEPARATION_FLOOR, ctx.config.seed)?;
    let mut table = Table::new(&["index", "class", "smallest_singular_value"]);
    for s in &imm.samples {
        table.push(vec![s.index.to_string(), class_label(&s.class), fmt(s.smallest)]);
    }
    let mut contracts = Vec::new();
    if let Some(m0) = ctx.config.m0 {
        contracts.push(Contract::new(
            "min-weight",
            map.min_weight() > m0,
            format!("minimal weight {} against m0 = {m0}", map.min_weight()),
        ));
    }
    contracts.push(Contract::new(
        "immersion",
        imm.pass,
        format!(
            "min singular value {} over {} samples, floor {}; {} below floor",
            fmt(imm.min_singular_value),
            imm.samples.len(),
            IMMERSION_FLOOR,
            imm.failures.len()
        ),
    ));
    contracts.push(Contract::new(
        "separation",
        sep.pass,
        format!(
            "{} violations among {} checked pairs, min image distance {}",
            sep.violations.len(),
            sep.checked,
            fmt(sep.min_image_distance)
        ),
    ));
    let failing_classes: Vec<String> = imm.failures.iter().map(|&i| class_label(&imm.samples[i].class)).collect();
    let result = json!({
        "N_m": map.total_dim(),
        "levels": map.plan.levels,
        "dims": map.plan.dims,
        "min_weight": map.min_weight(),
        "immersion_floor": IMMERSION_FLOOR,
        "separation_floor": SEPARATION_FLOOR,
        "separation_delta": SEPARATION_DELTA,
        "min_singular_value": imm.min_singular_value,
        "immersion_failures": imm.failures,
        "immersion_failure_classes": failing_classes,
        "max_reeb_residual": imm.max_reeb_residual,
        "pairs_checked": sep.checked,
        "min_image_distance": sep.min_image_distance,
        "violations": sep.violations,
    });
    let mut out = outcome(table, contracts, result);
    out.warnings.extend(map.plan.warnings.iter().cloned());
    Ok(out)
}

fn class_label(c: &PointClass) -> String {
    match c {
        PointClass::Regular => "regular".into(),
        PointClass::Singular { order } => format!("singular-{order}"),
        PointClass::NearSingular { order } => format!("near-singular-{order}"),
    }
}

/// Library errors caused by the input rather than the computation.
pub fn is_config_error(e: &anyhow::Error) -> bool {
    if e.downcast_ref::<ConfigError>().is_some() {
        return true;
    }
    match e.downcast_ref::<Error>() {
        Some(err) => matches!(
            err,
            Error::InvalidSpec(_)
                | Error::NonInvariant { .. }
                | Error::NonReal(_)
                | Error::OffManifold { .. }
                | Error::OriginPoint
                | Error::SingularPoint(_)
                | Error::NotPseudoconvex { .. }
                | Error::Precondition(_)
                | Error::InsufficientData(_)
                | Error::Json(_)
        ),
        None => e.chain().any(|c| c.downcast_ref::<ConfigError>().is_some()),
    }
}
