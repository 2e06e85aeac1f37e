//! Environments: assignments of right-step probabilities to integer sites.
//!
//! Two shapes are supported:
//!
//! * [`FiniteEnvironment`]: the segment `{0, .., N}` reflecting at `0`
//!   (right-step probability exactly 1), absorbing at `N`, with drift
//!   sites `L` of strength `p` and fair sites everywhere else.
//! * [`LineEnvironment`]: an environment on all of `Z`, stored by kind and
//!   answered lazily site by site. Periodic kinds answer in O(1).
//!
//! Probabilities and densities are exact rationals; the simulator reads the
//! precompiled integer thresholds from [`LineEnvironment::threshold`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num::{One, Signed, Zero};
use serde_json::{json, Map, Value};

use crate::error::{invalid, Error, Result};
use crate::rational::{self, int, ratio, Rational};
use crate::rng;

/// A probability in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Probability(Rational);

impl Probability {
    pub fn new(value: Rational) -> Result<Self> {
        if value.is_negative() || value > Rational::one() {
            return Err(invalid(format!(
                "probability {} outside [0, 1]",
                rational::format(&value)
            )));
        }
        Ok(Self(value))
    }

    pub fn from_ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(invalid("zero denominator"));
        }
        Self::new(ratio(num, den))
    }

    pub fn half() -> Self {
        Self(ratio(1, 2))
    }

    pub fn one() -> Self {
        Self(Rational::one())
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        rational::to_f64(&self.0)
    }

    /// Drift strength check: `1/2 < p <= 1`.
    pub fn ensure_drift(&self) -> Result<()> {
        if self.0 <= ratio(1, 2) {
            return Err(invalid(format!(
                "drift probability must exceed 1/2, got {}",
                rational::format(&self.0)
            )));
        }
        Ok(())
    }

    /// `(1 - p) / p`, the left/right odds at a site.
    pub fn odds(&self) -> Rational {
        (Rational::one() - &self.0) / &self.0
    }
}

impl std::fmt::Display for Probability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&rational::format(&self.0))
    }
}

/// Components of a density written as `n / (m n + l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructuredDensity {
    pub n: u64,
    pub m: u64,
    pub l: u64,
}

impl StructuredDensity {
    /// Validates `n > 1`, `0 < l < n`, `m >= 1`.
    pub fn new(n: u64, m: u64, l: u64) -> Result<Self> {
        if n <= 1 || l == 0 || l >= n || m == 0 {
            return Err(invalid(format!(
                "need n > 1, 0 < l < n, m >= 1; got n={n}, m={m}, l={l}"
            )));
        }
        Ok(Self { n, m, l })
    }

    pub fn lambda(&self) -> Rational {
        Rational::new(
            (self.n as i64).into(),
            ((self.m * self.n + self.l) as i64).into(),
        )
    }
}

/// A drift density `λ ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Density(Rational);

impl Density {
    pub fn new(value: Rational) -> Result<Self> {
        if value.is_negative() || value > Rational::one() {
            return Err(invalid(format!(
                "density {} outside [0, 1]",
                rational::format(&value)
            )));
        }
        Ok(Self(value))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    /// Lowest-terms structured form, when `λ` is not of the form `1/k`.
    pub fn structured(&self) -> Option<StructuredDensity> {
        let a = rational::as_i128_pair(&self.0)?;
        let (n, d) = (a.0 as u64, a.1 as u64);
        if n <= 1 || d == 0 {
            return None;
        }
        StructuredDensity::new(n, d / n, d % n).ok()
    }
}

/// The reflected segment `{0, .., N}` with drifts at `L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteEnvironment {
    n: u64,
    p: Probability,
    drifts: Vec<u64>,
}

/// Builds a validated reflected segment.
///
/// `N = 1` (necessarily drift-free) is accepted so that the plain reflected
/// walk is expressible at every length.
pub fn make_finite_env(n: u64, p: Probability, drifts: &[u64]) -> Result<FiniteEnvironment> {
    if n < 1 {
        return Err(invalid("segment length N must be at least 1"));
    }
    p.ensure_drift()?;
    for w in drifts.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidDrifts(format!(
                "positions must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
    }
    if let Some(&bad) = drifts.iter().find(|&&l| l == 0 || l >= n) {
        return Err(Error::InvalidDrifts(format!(
            "position {bad} outside the open interval (0, {n})"
        )));
    }
    Ok(FiniteEnvironment {
        n,
        p,
        drifts: drifts.to_vec(),
    })
}

impl FiniteEnvironment {
    /// Right endpoint `N` (the absorbing site).
    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn p(&self) -> &Probability {
        &self.p
    }

    pub fn drifts(&self) -> &[u64] {
        &self.drifts
    }

    pub fn k(&self) -> usize {
        self.drifts.len()
    }

    pub fn is_drift(&self, x: u64) -> bool {
        self.drifts.binary_search(&x).is_ok()
    }

    /// Right-step probability at `x < N`.
    pub fn prob(&self, x: u64) -> Rational {
        if x == 0 {
            Rational::one()
        } else if self.is_drift(x) {
            self.p.value().clone()
        } else {
            ratio(1, 2)
        }
    }

    /// Gaps between consecutive points of `{0} ∪ L ∪ {N}`.
    pub fn intervals(&self) -> Vec<u64> {
        let mut last = 0;
        let mut out = Vec::with_capacity(self.drifts.len() + 1);
        for &l in self.drifts.iter().chain(std::iter::once(&self.n)) {
            out.push(l - last);
            last = l;
        }
        out
    }

    /// Inverse of [`intervals`](Self::intervals).
    pub fn from_intervals(p: Probability, lengths: &[u64]) -> Result<Self> {
        if lengths.is_empty() || lengths.contains(&0) {
            return Err(Error::InvalidDrifts(
                "interval lengths must be positive".into(),
            ));
        }
        let mut drifts = Vec::with_capacity(lengths.len() - 1);
        let mut acc = 0;
        for &len in &lengths[..lengths.len() - 1] {
            acc += len;
            drifts.push(acc);
        }
        let n = acc + lengths[lengths.len() - 1];
        make_finite_env(n, p, &drifts)
    }

    /// Exact thresholds for `x = 0..N-1` (see [`rational::unit_threshold`]).
    pub fn thresholds(&self) -> Vec<u64> {
        let drift = rational::unit_threshold(self.p.value());
        let fair = 1u64 << 52;
        (0..self.n)
            .map(|x| {
                if x == 0 {
                    1u64 << 53
                } else if self.is_drift(x) {
                    drift
                } else {
                    fair
                }
            })
            .collect()
    }
}

/// What a [`LineEnvironment`] is made of.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnvKind {
    /// Listed sites; everything else is fair.
    Explicit { sites: BTreeMap<i64, Probability> },
    /// Drifts at every `x` with `x mod period ∈ offsets`.
    Periodic { period: u64, offsets: BTreeSet<u64> },
    /// Drifts at `⌈(i + (1-p)/(2p-1)) / λ⌉` for every integer `i`.
    Ceil { lambda: Rational },
    /// Intervals of lengths `m` and `m + 1` only, realizing density `λ`.
    Upsilon { m: u64, lambda: Rational },
    /// Independent drifts with probability `λ`, keyed by `seed`. Sites in
    /// `window` are materialized; the rest are computed on demand from the
    /// same per-site hash.
    Iid {
        lambda: Rational,
        seed: u64,
        window: (i64, i64),
    },
}

#[derive(Clone, Debug)]
enum Compiled {
    Explicit(HashMap<i64, u64>),
    Pattern(Vec<bool>),
    Ceil {
        // x is a drift iff floor(t/d) * d > t - a*cd, t = a*x*cd - cn*b
        a: i128,
        b: i128,
        cn: i128,
        cd: i128,
    },
    Iid {
        lo: i64,
        cells: Vec<bool>,
        lambda_threshold: u64,
    },
}

/// An environment on `Z`.
#[derive(Clone, Debug)]
pub struct LineEnvironment {
    kind: EnvKind,
    p: Probability,
    offset: i64,
    drift_threshold: u64,
    compiled: Compiled,
}

impl PartialEq for LineEnvironment {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.p == other.p && self.offset == other.offset
    }
}

impl Eq for LineEnvironment {}

const FAIR_THRESHOLD: u64 = 1 << 52;

fn iid_site_is_drift(seed: u64, site: i64, lambda_threshold: u64) -> bool {
    rng::draw53(rng::derive_seed(seed, site as u64)) < lambda_threshold
}

impl LineEnvironment {
    fn build(kind: EnvKind, p: Probability, offset: i64) -> Result<Self> {
        let compiled = match &kind {
            EnvKind::Explicit { sites } => Compiled::Explicit(
                sites
                    .iter()
                    .map(|(&x, q)| (x, rational::unit_threshold(q.value())))
                    .collect(),
            ),
            EnvKind::Periodic { period, offsets } => {
                if *period == 0 {
                    return Err(invalid("period must be at least 1"));
                }
                if let Some(o) = offsets.iter().find(|&&o| o >= *period) {
                    return Err(invalid(format!("offset {o} not below period {period}")));
                }
                let mut cells = vec![false; *period as usize];
                for &o in offsets {
                    cells[o as usize] = true;
                }
                Compiled::Pattern(cells)
            }
            EnvKind::Upsilon { m, lambda } => Compiled::Pattern(upsilon_cells(*m, lambda)?),
            EnvKind::Ceil { lambda } => {
                p.ensure_drift()?;
                if !lambda.is_positive() || *lambda > Rational::one() {
                    return Err(invalid("ceiling construction needs 0 < λ <= 1"));
                }
                let c = ceil_shift(&p);
                let (a, b) = rational::as_i128_pair(lambda)
                    .ok_or_else(|| invalid("λ too large for the ceiling construction"))?;
                let (cn, cd) = rational::as_i128_pair(&c)
                    .ok_or_else(|| invalid("p too large for the ceiling construction"))?;
                Compiled::Ceil { a, b, cn, cd }
            }
            EnvKind::Iid {
                lambda,
                seed,
                window,
            } => {
                Density::new(lambda.clone())?;
                if window.0 > window.1 {
                    return Err(invalid("iid window must satisfy lo <= hi"));
                }
                let lambda_threshold = rational::unit_threshold(lambda);
                let cells = (window.0..window.1)
                    .map(|x| iid_site_is_drift(*seed, x, lambda_threshold))
                    .collect();
                Compiled::Iid {
                    lo: window.0,
                    cells,
                    lambda_threshold,
                }
            }
        };
        let offset = match &compiled {
            Compiled::Pattern(cells) => offset.rem_euclid(cells.len() as i64),
            _ => offset,
        };
        Ok(Self {
            drift_threshold: rational::unit_threshold(p.value()),
            kind,
            p,
            offset,
            compiled,
        })
    }

    pub fn kind(&self) -> &EnvKind {
        &self.kind
    }

    pub fn p(&self) -> &Probability {
        &self.p
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// `ω(x) == p`. For explicit environments this is an exact comparison.
    pub fn is_drift(&self, x: i64) -> bool {
        let y = x + self.offset;
        match &self.compiled {
            Compiled::Explicit(_) => match &self.kind {
                EnvKind::Explicit { sites } => sites.get(&y) == Some(&self.p),
                _ => unreachable!(),
            },
            Compiled::Pattern(cells) => cells[y.rem_euclid(cells.len() as i64) as usize],
            Compiled::Ceil { a, b, cn, cd } => {
                let y = y as i128;
                let t = a * y * cd - cn * b;
                let d = b * cd;
                t.div_euclid(d) * d > t - a * cd
            }
            Compiled::Iid {
                lo,
                cells,
                lambda_threshold,
            } => {
                let idx = y - lo;
                if idx >= 0 && (idx as usize) < cells.len() {
                    cells[idx as usize]
                } else {
                    iid_site_is_drift(self.iid_seed(), y, *lambda_threshold)
                }
            }
        }
    }

    fn iid_seed(&self) -> u64 {
        match &self.kind {
            EnvKind::Iid { seed, .. } => *seed,
            _ => 0,
        }
    }

    /// Exact right-step probability `ω(x)`.
    pub fn prob(&self, x: i64) -> Rational {
        if let EnvKind::Explicit { sites } = &self.kind {
            return sites
                .get(&(x + self.offset))
                .map(|q| q.value().clone())
                .unwrap_or_else(|| ratio(1, 2));
        }
        if self.is_drift(x) {
            self.p.value().clone()
        } else {
            ratio(1, 2)
        }
    }

    /// Integer threshold `t(x)`: a 53-bit draw `k` steps right iff `k < t(x)`.
    #[inline]
    pub fn threshold(&self, x: i64) -> u64 {
        if let Compiled::Explicit(map) = &self.compiled {
            return map
                .get(&(x + self.offset))
                .copied()
                .unwrap_or(FAIR_THRESHOLD);
        }
        if self.is_drift(x) {
            self.drift_threshold
        } else {
            FAIR_THRESHOLD
        }
    }

    /// The density this environment was built to have, where one is declared.
    pub fn declared_density(&self) -> Option<Rational> {
        match &self.kind {
            EnvKind::Explicit { .. } => None,
            EnvKind::Periodic { period, offsets } => {
                Some(ratio(offsets.len() as i64, *period as i64))
            }
            EnvKind::Ceil { lambda } | EnvKind::Upsilon { lambda, .. } => Some(lambda.clone()),
            EnvKind::Iid { lambda, .. } => Some(lambda.clone()),
        }
    }

    /// `θ^x ω`: the environment `n ↦ ω(n + x)`.
    pub fn shift(&self, x: i64) -> Self {
        let mut out = self.clone();
        out.offset = match &self.compiled {
            Compiled::Pattern(cells) => (self.offset + x).rem_euclid(cells.len() as i64),
            _ => self.offset + x,
        };
        out
    }

    /// Fraction of drift sites in `[0, n]`, exactly.
    pub fn density_prefix(&self, n: u64) -> Rational {
        let count = (0..=n as i64).filter(|&x| self.is_drift(x)).count();
        ratio(count as i64, n as i64 + 1)
    }

    /// Drift sites in `[from, to]`.
    pub fn drift_sites(&self, from: i64, to: i64) -> Vec<i64> {
        (from..=to).filter(|&x| self.is_drift(x)).collect()
    }
}

/// Equally spaced drifts at every multiple of `m`.
pub fn make_equally_spaced(m: u64, p: Probability) -> Result<LineEnvironment> {
    if m < 1 {
        return Err(invalid("spacing m must be at least 1"));
    }
    make_periodic(m, [0].into_iter().collect(), p)
}

pub fn make_periodic(
    period: u64,
    offsets: BTreeSet<u64>,
    p: Probability,
) -> Result<LineEnvironment> {
    p.ensure_drift()?;
    LineEnvironment::build(EnvKind::Periodic { period, offsets }, p, 0)
}

fn ceil_shift(p: &Probability) -> Rational {
    let one = Rational::one();
    (&one - p.value()) / (p.value() * int(2) - one)
}

fn check_ceil_params(p: &Probability, lambda: &Rational) -> Result<()> {
    p.ensure_drift()?;
    if lambda.is_zero() {
        return Err(invalid("ceiling construction needs λ > 0"));
    }
    if lambda.is_negative() || *lambda > Rational::one() {
        return Err(invalid("ceiling construction needs 0 < λ <= 1"));
    }
    Ok(())
}

/// Drift positions `l_1, .., l_count` of the ceiling construction,
/// `l_i = ⌈(i + (1-p)/(2p-1)) / λ⌉`.
pub fn make_ceil_env(p: &Probability, lambda: &Rational, count: usize) -> Result<Vec<i64>> {
    check_ceil_params(p, lambda)?;
    let c = ceil_shift(p);
    (1..=count as i64)
        .map(|i| {
            rational::ceil_i64(&((int(i) + &c) / lambda))
                .ok_or_else(|| invalid("drift position overflows i64"))
        })
        .collect()
}

/// The ceiling construction as a lazy environment on all of `Z`.
pub fn make_ceil_line_env(p: Probability, lambda: Rational) -> Result<LineEnvironment> {
    check_ceil_params(&p, &lambda)?;
    LineEnvironment::build(EnvKind::Ceil { lambda }, p, 0)
}

/// Splits `λ = a/b` against spacing `m` into `(n, l)` with `λ = n/(mn + l)`
/// and `0 <= l <= n`.
fn upsilon_split(m: u64, lambda: &Rational) -> Result<(u64, u64)> {
    if m == 0 {
        return Err(invalid("Υ spacing m must be at least 1"));
    }
    let lo = ratio(1, m as i64 + 1);
    let hi = ratio(1, m as i64);
    if *lambda < lo || *lambda > hi {
        return Err(invalid(format!(
            "λ = {} outside [1/{}, 1/{}]",
            rational::format(lambda),
            m + 1,
            m
        )));
    }
    let (a, b) = rational::as_i128_pair(lambda).ok_or_else(|| invalid("λ too large"))?;
    let (n, period) = (a as u64, b as u64);
    Ok((n, period - m * n))
}

/// One period of Υ interval lengths for `(m, λ)`: `n - l` intervals of
/// length `m` and `l` of length `m + 1`, interleaved as evenly as possible.
pub fn upsilon_pattern(m: u64, lambda: &Rational) -> Result<Vec<u64>> {
    let cells = upsilon_cells(m, lambda)?;
    let period = cells.len() as u64;
    let starts: Vec<u64> = (0..period).filter(|&x| cells[x as usize]).collect();
    Ok(starts
        .iter()
        .enumerate()
        .map(|(j, &s)| starts.get(j + 1).copied().unwrap_or(period) - s)
        .collect())
}

fn upsilon_cells(m: u64, lambda: &Rational) -> Result<Vec<bool>> {
    let (n, l) = upsilon_split(m, lambda)?;
    let period = m * n + l;
    let mut cells = vec![false; period as usize];
    // Drift j sits at ⌈j·period/n⌉; consecutive gaps are ⌊period/n⌋ or ⌈period/n⌉.
    for j in 0..n {
        cells[(j * period).div_ceil(n) as usize] = true;
    }
    Ok(cells)
}

/// Υ environment: drift gaps only `m` or `m + 1`, density exactly `λ`.
pub fn make_upsilon_env(m: u64, lambda: &Density, p: Probability) -> Result<LineEnvironment> {
    p.ensure_drift()?;
    upsilon_split(m, lambda.value())?;
    LineEnvironment::build(
        EnvKind::Upsilon {
            m,
            lambda: lambda.value().clone(),
        },
        p,
        0,
    )
}

/// I.i.d. environment: every site is a drift independently with
/// probability `λ`. Sites in `[window.0, window.1)` are materialized.
pub fn sample_iid_env(
    p: Probability,
    lambda: &Density,
    window: (i64, i64),
    seed: u64,
) -> Result<LineEnvironment> {
    p.ensure_drift()?;
    LineEnvironment::build(
        EnvKind::Iid {
            lambda: lambda.value().clone(),
            seed,
            window,
        },
        p,
        0,
    )
}

/// General environment from explicit site probabilities; unlisted sites are
/// fair. Entries equal to `1/2` are dropped.
pub fn make_explicit(
    sites: impl IntoIterator<Item = (i64, Probability)>,
    p: Probability,
) -> Result<LineEnvironment> {
    let half = Probability::half();
    let sites = sites.into_iter().filter(|(_, q)| *q != half).collect();
    LineEnvironment::build(EnvKind::Explicit { sites }, p, 0)
}

/// `shift(env, x)(n) = env(n + x)`.
pub fn shift(env: &LineEnvironment, x: i64) -> LineEnvironment {
    env.shift(x)
}

/// Exact prefix density `#{x ∈ [0, n] : ω(x) = p} / (n + 1)`.
pub fn density_prefix(env: &LineEnvironment, n: u64) -> Rational {
    env.density_prefix(n)
}

/// Either environment shape; the unit of (de)serialization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Environment {
    Line(LineEnvironment),
    Finite(FiniteEnvironment),
}

impl Environment {
    /// JSON description `{"kind", "p", "lambda", "params"}`.
    pub fn to_json(&self) -> Value {
        let (kind, p, lambda, params) = match self {
            Environment::Finite(env) => (
                "finite",
                env.p.clone(),
                None,
                json!({ "N": env.n, "drifts": env.drifts }),
            ),
            Environment::Line(env) => {
                let mut params = Map::new();
                params.insert("offset".into(), json!(env.offset));
                let kind = match &env.kind {
                    EnvKind::Explicit { sites } => {
                        let list: Vec<Value> = sites
                            .iter()
                            .map(|(x, q)| json!([x, q.to_string()]))
                            .collect();
                        params.insert("sites".into(), Value::Array(list));
                        "explicit"
                    }
                    EnvKind::Periodic { period, offsets } => {
                        params.insert("period".into(), json!(period));
                        params.insert("offsets".into(), json!(offsets));
                        "periodic"
                    }
                    EnvKind::Ceil { .. } => "ceil",
                    EnvKind::Upsilon { m, .. } => {
                        params.insert("m".into(), json!(m));
                        "upsilon"
                    }
                    EnvKind::Iid { seed, window, .. } => {
                        params.insert("seed".into(), json!(seed));
                        params.insert("window".into(), json!([window.0, window.1]));
                        "iid"
                    }
                };
                (
                    kind,
                    env.p.clone(),
                    env.declared_density(),
                    Value::Object(params),
                )
            }
        };
        json!({
            "kind": kind,
            "p": p.to_string(),
            "lambda": lambda.map(|l| rational::format(&l)),
            "params": params,
        })
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("environment JSON: {msg}"));
        let kind = doc
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing string field `kind`"))?;
        let p = doc
            .get("p")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing string field `p`"))?;
        let p = Probability::new(rational::parse(p)?)?;
        let lambda = match doc.get("lambda") {
            Some(Value::String(s)) => Some(rational::parse(s)?),
            Some(Value::Null) | None => None,
            Some(_) => return Err(bad("`lambda` must be a string or null")),
        };
        let empty = Map::new();
        let params = doc
            .get("params")
            .and_then(Value::as_object)
            .unwrap_or(&empty);
        let get_u64 = |key: &str| {
            params
                .get(key)
                .and_then(Value::as_u64)
                .ok_or_else(|| bad(&format!("missing unsigned `params.{key}`")))
        };
        let offset = params.get("offset").and_then(Value::as_i64).unwrap_or(0);
        let need_lambda = || lambda.clone().ok_or_else(|| bad("missing `lambda`"));

        let line = match kind {
            "finite" => {
                let n = get_u64("N")?;
                let drifts = params
                    .get("drifts")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("missing `params.drifts`"))?
                    .iter()
                    .map(|v| {
                        v.as_u64()
                            .ok_or_else(|| bad("drift positions must be unsigned"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                return Ok(Environment::Finite(make_finite_env(n, p, &drifts)?));
            }
            "explicit" => {
                let list = params
                    .get("sites")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("missing `params.sites`"))?;
                let mut sites = Vec::with_capacity(list.len());
                for entry in list {
                    let pair = entry.as_array().filter(|a| a.len() == 2);
                    let (x, q) = pair
                        .and_then(|a| Some((a[0].as_i64()?, a[1].as_str()?)))
                        .ok_or_else(|| bad("sites entries must be [site, \"num/den\"]"))?;
                    sites.push((x, Probability::new(rational::parse(q)?)?));
                }
                make_explicit(sites, p)?
            }
            "periodic" => {
                let offsets = params
                    .get("offsets")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("missing `params.offsets`"))?
                    .iter()
                    .map(|v| v.as_u64().ok_or_else(|| bad("offsets must be unsigned")))
                    .collect::<Result<BTreeSet<_>>>()?;
                make_periodic(get_u64("period")?, offsets, p)?
            }
            "ceil" => make_ceil_line_env(p, need_lambda()?)?,
            "upsilon" => make_upsilon_env(get_u64("m")?, &Density::new(need_lambda()?)?, p)?,
            "iid" => {
                let window = params
                    .get("window")
                    .and_then(Value::as_array)
                    .filter(|a| a.len() == 2)
                    .and_then(|a| Some((a[0].as_i64()?, a[1].as_i64()?)))
                    .ok_or_else(|| bad("`params.window` must be [lo, hi]"))?;
                let seed = get_u64("seed")?;
                sample_iid_env(p, &Density::new(need_lambda()?)?, window, seed)?
            }
            other => return Err(bad(&format!("unknown kind `{other}`"))),
        };
        Ok(Environment::Line(line.shift(offset)))
    }

    /// Inline form `kind:key=val,key=val`. Lists use `;` as separator.
    ///
    /// Kinds: `equally-spaced:m=4,p=3/4`, `periodic:period=5,offsets=0;2,p=1`,
    /// `ceil:p=3/4,lambda=1/2`, `upsilon:m=2,lambda=2/5[,p=1]`,
    /// `iid:p=3/4,lambda=1/2,seed=3[,lo=-1000,hi=1000]`,
    /// `explicit:p=3/4,drifts=0;4;7`, `finite:N=8,p=3/4,drifts=3;5`.
    /// Every line kind also accepts `offset=x`.
    pub fn parse_inline(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut params: BTreeMap<&str, &str> = BTreeMap::new();
        for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{item}`")))?;
            params.insert(k.trim(), v.trim());
        }
        let get = |key: &str| {
            params
                .get(key)
                .copied()
                .ok_or_else(|| Error::Parse(format!("`{kind}` needs `{key}=`")))
        };
        let get_u64 = |key: &str| -> Result<u64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Parse(format!("`{key}` must be a non-negative integer")))
        };
        let get_i64_or = |key: &str, default: i64| -> Result<i64> {
            match params.get(key) {
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::Parse(format!("`{key}` must be an integer"))),
                None => Ok(default),
            }
        };
        let get_rat = |key: &str| -> Result<Rational> { rational::parse(get(key)?) };
        let get_p = |default: Option<Rational>| -> Result<Probability> {
            match (params.get("p"), default) {
                (Some(v), _) => Probability::new(rational::parse(v)?),
                (None, Some(d)) => Probability::new(d),
                (None, None) => Err(Error::Parse(format!("`{kind}` needs `p=`"))),
            }
        };
        let list = |key: &str| -> Result<Vec<i64>> {
            match params.get(key) {
                None | Some(&"") => Ok(Vec::new()),
                Some(v) => v
                    .split(';')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad integer `{s}` in `{key}`")))
                    })
                    .collect(),
            }
        };
        let offset = get_i64_or("offset", 0)?;
        let env = match kind.trim() {
            "finite" => {
                let drifts: Vec<u64> = list("drifts")?
                    .into_iter()
                    .map(|x| u64::try_from(x).map_err(|_| invalid("negative drift position")))
                    .collect::<Result<_>>()?;
                return Ok(Environment::Finite(make_finite_env(
                    get_u64("N")?,
                    get_p(None)?,
                    &drifts,
                )?));
            }
            "equally-spaced" => make_equally_spaced(get_u64("m")?, get_p(None)?)?,
            "periodic" => {
                let offsets = list("offsets")?
                    .into_iter()
                    .map(|x| u64::try_from(x).map_err(|_| invalid("negative offset")))
                    .collect::<Result<_>>()?;
                make_periodic(get_u64("period")?, offsets, get_p(None)?)?
            }
            "ceil" => make_ceil_line_env(get_p(None)?, get_rat("lambda")?)?,
            "upsilon" => make_upsilon_env(
                get_u64("m")?,
                &Density::new(get_rat("lambda")?)?,
                get_p(Some(Rational::one()))?,
            )?,
            "iid" => sample_iid_env(
                get_p(None)?,
                &Density::new(get_rat("lambda")?)?,
                (get_i64_or("lo", -1024)?, get_i64_or("hi", 1024)?),
                get_u64("seed")?,
            )?,
            "explicit" => {
                let p = get_p(None)?;
                let sites: Vec<(i64, Probability)> = list("drifts")?
                    .into_iter()
                    .map(|x| (x, p.clone()))
                    .collect();
                make_explicit(sites, p)?
            }
            other => return Err(Error::Parse(format!("unknown environment kind `{other}`"))),
        };
        Ok(Environment::Line(env.shift(offset)))
    }
}

/// `site,prob` rows for `[from, to]`, probabilities as `num/den`.
pub fn window_csv(env: &LineEnvironment, from: i64, to: i64) -> String {
    let mut out = String::from("site,prob\n");
    for x in from..=to {
        out.push_str(&format!("{},{}\n", x, rational::format(&env.prob(x))));
    }
    out
}

/// Parses `site,prob` rows into an explicit environment with drift value `p`.
pub fn parse_window_csv(text: &str, p: Probability) -> Result<LineEnvironment> {
    let mut sites = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("site")) {
            continue;
        }
        let (x, q) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `site,prob`", lineno + 1)))?;
        let x: i64 = x
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad site `{x}`", lineno + 1)))?;
        sites.push((x, Probability::new(rational::parse(q)?)?));
    }
    make_explicit(sites, p)
}
