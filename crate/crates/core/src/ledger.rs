//! Exact exponent bookkeeping over the rationals extended by `∞`.
//!
//! Nothing here touches floating point.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A rational number or `+∞`, with `1/∞ = 0` and `1/0 = ∞`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExtRational {
    Finite(BigRational),
    Infinity,
}

pub use ExtRational::Infinity;

impl ExtRational {
    pub fn new(num: i64, den: i64) -> Self {
        ExtRational::Finite(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn int(n: i64) -> Self {
        Self::new(n, 1)
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Infinity)
    }

    pub fn finite(&self) -> Option<&BigRational> {
        match self {
            ExtRational::Finite(r) => Some(r),
            Infinity => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtRational::Finite(r) if r.is_zero())
    }

    pub fn is_negative(&self) -> bool {
        matches!(self, ExtRational::Finite(r) if r.is_negative())
    }

    /// Reciprocal with `1/∞ = 0`, `1/0 = ∞`. Negative values invert normally.
    pub fn recip(&self) -> Self {
        match self {
            Infinity => Self::zero(),
            ExtRational::Finite(r) if r.is_zero() => Infinity,
            ExtRational::Finite(r) => ExtRational::Finite(r.recip()),
        }
    }

    /// Largest integer not exceeding a finite value.
    pub fn floor(&self) -> Option<BigInt> {
        self.finite().map(|r| r.numer().div_floor(r.denom()))
    }

    /// Lossy conversion for reporting only.
    pub fn to_f64_lossy(&self) -> f64 {
        match self {
            Infinity => f64::INFINITY,
            ExtRational::Finite(r) => r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN),
        }
    }
}

impl From<i64> for ExtRational {
    fn from(v: i64) -> Self {
        Self::int(v)
    }
}

impl From<BigRational> for ExtRational {
    fn from(v: BigRational) -> Self {
        ExtRational::Finite(v)
    }
}

impl fmt::Display for ExtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infinity => write!(f, "inf"),
            ExtRational::Finite(r) if r.denom().is_one() => write!(f, "{}", r.numer()),
            ExtRational::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl FromStr for ExtRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "inf" || s == "∞" {
            return Ok(Infinity);
        }
        let bad = || Error::InvalidArgument(format!("cannot parse exponent {s:?}"));
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(ExtRational::Finite(BigRational::new(n, d)))
    }
}

impl Serialize for ExtRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Infinity => s.serialize_str("inf"),
            ExtRational::Finite(r) => s.serialize_str(&format!("{}/{}", r.numer(), r.denom())),
        }
    }
}

impl<'de> Deserialize<'de> for ExtRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl PartialOrd for ExtRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Infinity, Infinity) => Ordering::Equal,
            (Infinity, _) => Ordering::Greater,
            (_, Infinity) => Ordering::Less,
            (ExtRational::Finite(a), ExtRational::Finite(b)) => a.cmp(b),
        }
    }
}

impl Add for &ExtRational {
    type Output = ExtRational;
    fn add(self, o: &ExtRational) -> ExtRational {
        match (self, o) {
            (ExtRational::Finite(a), ExtRational::Finite(b)) => ExtRational::Finite(a + b),
            _ => Infinity,
        }
    }
}

impl Neg for &ExtRational {
    type Output = ExtRational;
    fn neg(self) -> ExtRational {
        match self {
            ExtRational::Finite(a) => ExtRational::Finite(-a),
            Infinity => panic!("negative infinity is not representable"),
        }
    }
}

impl Sub for &ExtRational {
    type Output = ExtRational;
    fn sub(self, o: &ExtRational) -> ExtRational {
        match (self, o) {
            (ExtRational::Finite(a), ExtRational::Finite(b)) => ExtRational::Finite(a - b),
            (Infinity, ExtRational::Finite(_)) => Infinity,
            _ => panic!("subtraction of infinity is undefined"),
        }
    }
}

impl Mul for &ExtRational {
    type Output = ExtRational;
    /// Uses `0 · ∞ = 0`.
    fn mul(self, o: &ExtRational) -> ExtRational {
        match (self, o) {
            (ExtRational::Finite(a), ExtRational::Finite(b)) => ExtRational::Finite(a * b),
            (ExtRational::Finite(a), Infinity) | (Infinity, ExtRational::Finite(a)) => {
                if a.is_zero() {
                    ExtRational::zero()
                } else if a.is_positive() {
                    Infinity
                } else {
                    panic!("negative infinity is not representable")
                }
            }
            (Infinity, Infinity) => Infinity,
        }
    }
}

impl Div for &ExtRational {
    type Output = ExtRational;
    fn div(self, o: &ExtRational) -> ExtRational {
        self * &o.recip()
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ExtRational {
            type Output = ExtRational;
            fn $m(self, o: ExtRational) -> ExtRational {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

fn r(n: i64, d: i64) -> ExtRational {
    ExtRational::new(n, d)
}

fn recip(x: &ExtRational) -> ExtRational {
    x.recip()
}

/// A named predicate with its exact verdict and the arithmetic behind it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub predicate: String,
    pub verdict: bool,
    pub witness: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentLedger {
    pub inputs: Vec<(String, ExtRational)>,
    pub chain: Vec<(String, ExtRational)>,
    pub conditions: Vec<Condition>,
}

impl ExponentLedger {
    fn input(&mut self, name: &str, v: &ExtRational) {
        self.inputs.push((name.to_string(), v.clone()));
    }

    fn derived(&mut self, name: impl Into<String>, v: &ExtRational) {
        self.chain.push((name.into(), v.clone()));
    }

    fn check(&mut self, name: impl Into<String>, predicate: impl Into<String>, verdict: bool, witness: String) {
        self.conditions.push(Condition { name: name.into(), predicate: predicate.into(), verdict, witness });
    }

    pub fn get(&self, name: &str) -> Option<&ExtRational> {
        self.inputs.iter().chain(&self.chain).find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.verdict)
    }

    /// Plain-text table of inputs, chain and conditions.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let width = self
            .inputs
            .iter()
            .chain(&self.chain)
            .map(|(n, _)| n.chars().count())
            .max()
            .unwrap_or(4)
            .max(4);
        for (title, rows) in [("inputs", &self.inputs), ("chain", &self.chain)] {
            if rows.is_empty() {
                continue;
            }
            s.push_str(&format!("{title}\n"));
            for (n, v) in rows {
                s.push_str(&format!("  {n:<width$}  {v}\n"));
            }
        }
        if !self.conditions.is_empty() {
            s.push_str("conditions\n");
            for c in &self.conditions {
                let mark = if c.verdict { "pass" } else { "FAIL" };
                s.push_str(&format!("  [{mark}] {}: {}  ({})\n", c.name, c.predicate, c.witness));
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SerrinClass {
    Subcritical,
    Critical,
    Supercritical,
}

fn in_open_closed(x: &ExtRational, lo: i64) -> bool {
    x > &ExtRational::int(lo)
}

/// Classifies `(q, s)` by comparing `3/q + 2/s` with 1.
pub fn serrin_classify(q: &ExtRational, s: &ExtRational) -> Result<(SerrinClass, ExtRational)> {
    if !in_open_closed(q, 1) {
        return Err(Error::ExponentOutOfRange(format!("q must lie in (1, inf], got {q}")));
    }
    if s < &ExtRational::one() {
        return Err(Error::ExponentOutOfRange(format!("s must lie in [1, inf], got {s}")));
    }
    let v = &(&r(3, 1) * &recip(q)) + &(&r(2, 1) * &recip(s));
    let class = match v.cmp(&ExtRational::one()) {
        Ordering::Less => SerrinClass::Subcritical,
        Ordering::Equal => SerrinClass::Critical,
        Ordering::Greater => SerrinClass::Supercritical,
    };
    Ok((class, v))
}

fn sigma_ok(k: &BigInt, gap: &ExtRational) -> bool {
    if !k.is_positive() {
        return false;
    }
    let sigma = ExtRational::Finite(BigRational::new(BigInt::from(2), BigInt::from(3) * k));
    sigma < &r(1, 5) * gap
}

/// Integrability bootstrap from `p₀ = 3/2` to `p_K = ∞`.
pub fn bootstrap_schedule(q: &ExtRational, s: &ExtRational) -> Result<ExponentLedger> {
    if !(q > &ExtRational::int(3)) {
        return Err(Error::ExponentOutOfRange(format!("need q > 3, got {q}")));
    }
    if s < &ExtRational::int(3) {
        return Err(Error::ExponentOutOfRange(format!("need s >= 3, got {s}")));
    }
    let (class, value) = serrin_classify(q, s)?;
    if class != SerrinClass::Subcritical {
        return Err(Error::ExponentOutOfRange(format!("3/q + 2/s = {value} is not below 1")));
    }
    let gap = &ExtRational::one() - &value;
    let mut led = ExponentLedger::default();
    led.input("q", q);
    led.input("s", s);
    led.derived("gap", &gap);
    // least K with 2/(3K) < gap/5, i.e. K > 10/(3 gap)
    let bound = &r(10, 3) / &gap;
    let k = bound.floor().expect("finite bound") + BigInt::one();
    let kk = ExtRational::Finite(BigRational::from_integer(k.clone()));
    let sigma = &r(2, 3) / &kk;
    led.derived("K", &kk);
    led.derived("sigma", &sigma);
    led.check(
        "sigma_bound",
        "sigma < (1/5)(1 - 3/q - 2/s)",
        sigma_ok(&k, &gap),
        format!("{sigma} < {}", &r(1, 5) * &gap),
    );
    let km1 = &k - BigInt::one();
    led.check(
        "K_minimal",
        "K - 1 violates the sigma bound",
        !sigma_ok(&km1, &gap),
        format!("K - 1 = {km1}"),
    );
    let kn = k.to_u64().ok_or_else(|| Error::ExponentOutOfRange("K too large".into()))?;
    let mut all_a = true;
    let mut all_b = true;
    for step in 0..=kn {
        let inv_p = &r(2, 3) - &(&ExtRational::int(step as i64) * &sigma);
        let inv_a = &inv_p + &recip(s);
        let inv_b = &inv_p + &recip(q);
        led.derived(format!("p_{step}"), &recip(&inv_p));
        led.derived(format!("a_{step}"), &recip(&inv_a));
        led.derived(format!("b_{step}"), &recip(&inv_b));
        all_a &= inv_a <= ExtRational::one() && !inv_a.is_negative();
        all_b &= inv_b <= ExtRational::one() && !inv_b.is_negative();
    }
    led.check("a_k>=1", "a_k >= 1 for all k", all_a, "1/a_k = 1/p_k + 1/s <= 1".into());
    led.check("b_k>=1", "b_k >= 1 for all k", all_b, "1/b_k = 1/p_k + 1/q <= 1".into());
    let terminal = led.get(&format!("p_{kn}")).cloned().expect("terminal exponent");
    led.check("p_K=inf", "terminal exponent is infinite", terminal.is_infinite(), format!("p_K = {terminal}"));
    Ok(led)
}

/// Extracts `K`, `σ` and the `p` chain from a bootstrap ledger.
pub fn bootstrap_chain(led: &ExponentLedger) -> (ExtRational, ExtRational, Vec<ExtRational>) {
    let k = led.get("K").cloned().expect("K");
    let sigma = led.get("sigma").cloned().expect("sigma");
    let p = led.chain.iter().filter(|(n, _)| n.starts_with("p_")).map(|(_, v)| v.clone()).collect();
    (k, sigma, p)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MConditionVerdict {
    pub q: ExtRational,
    pub m: ExtRational,
    pub threshold: ExtRational,
    pub pass: bool,
    pub implied_by_m_ge_1: bool,
}

/// `m > 2q / (3(q - 2))`; for `q = ∞` the threshold is `2/3`.
pub fn pressure_m_condition(q: &ExtRational, m: &ExtRational) -> Result<MConditionVerdict> {
    if !(q > &ExtRational::int(2)) {
        return Err(Error::ExponentOutOfRange(format!("need q > 2, got {q}")));
    }
    let threshold = match q {
        Infinity => r(2, 3),
        _ => &(&r(2, 1) * q) / &(&r(3, 1) * &(q - &r(2, 1))),
    };
    Ok(MConditionVerdict {
        q: q.clone(),
        m: m.clone(),
        pass: m > &threshold,
        implied_by_m_ge_1: threshold < ExtRational::one(),
        threshold,
    })
}

/// Step-1 exponent system for the critical case `3/q + 2/s = 1`.
pub fn step1_conditions(
    q: &ExtRational,
    s: &ExtRational,
    m: &ExtRational,
    delta: &ExtRational,
) -> Result<ExponentLedger> {
    if !(q > &ExtRational::int(3)) || q.is_infinite() {
        return Err(Error::ExponentOutOfRange(format!("need finite q > 3, got {q}")));
    }
    if delta.is_negative() || delta.is_infinite() {
        return Err(Error::ExponentOutOfRange(format!("need finite delta >= 0, got {delta}")));
    }
    if m < &ExtRational::one() {
        return Err(Error::ExponentOutOfRange(format!("need m >= 1, got {m}")));
    }
    let (class, value) = serrin_classify(q, s)?;
    if class != SerrinClass::Critical {
        return Err(Error::InvalidArgument(format!("inconsistent exponent system: 3/q + 2/s = {value}, not 1")));
    }
    let one = ExtRational::one();
    let qd = q + delta;
    let inv_a = &(&recip(&qd) - &(&r(2, 1) / q)) + &one;
    let inv_b = &(&recip(&qd) - &recip(q)) + &one;
    let inv_rho = &(&recip(s) - &recip(m)) + &one;
    if inv_rho.is_negative() || inv_a.is_negative() || inv_b.is_negative() {
        return Err(Error::InvalidArgument(format!(
            "inconsistent exponent system: 1/a = {inv_a}, 1/b = {inv_b}, 1/rho = {inv_rho}"
        )));
    }
    let (a, b, rho) = (recip(&inv_a), recip(&inv_b), recip(&inv_rho));
    let mut led = ExponentLedger::default();
    for (n, v) in [("q", q), ("s", s), ("m", m), ("delta", delta)] {
        led.input(n, v);
    }
    led.derived("a", &a);
    led.derived("b", &b);
    led.derived("r", q);
    led.derived("rho", &rho);
    led.check(
        "b_window",
        "1 <= b < 3/2",
        b >= one && b < r(3, 2),
        format!("b = {b}"),
    );
    let coef = &r(3, 2) - &(&r(3, 2) * &inv_a);
    let lhs = &coef * &rho;
    let product = lhs < one;
    led.check("step1_product", "(3/2 - 3/(2a)) rho < 1", product, format!("{lhs} < 1"));
    let rhs = &(&r(3, 1) / s) + &(&r(3, 2) / &qd);
    let equiv = recip(m) < rhs;
    led.check(
        "step1_reduced",
        "1/m < 3/s + 3/(2(q + delta))",
        equiv,
        format!("{} < {rhs}", recip(m)),
    );
    led.check(
        "equivalence_consistent",
        "product and reduced forms agree",
        product == equiv,
        format!("{product} == {equiv}"),
    );
    Ok(led)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaWindow {
    pub lower: ExtRational,
    /// Excluded upper end.
    pub upper: ExtRational,
}

impl DeltaWindow {
    pub fn contains(&self, d: &ExtRational) -> bool {
        d >= &self.lower && d < &self.upper
    }
}

/// Admissible `δ ∈ [0, 3(m - 2)/2)` for `m > 2`.
pub fn delta_window(m: &ExtRational) -> Result<DeltaWindow> {
    if !(m > &ExtRational::int(2)) || m.is_infinite() {
        return Err(Error::ExponentOutOfRange(format!("need finite m > 2, got {m}")));
    }
    Ok(DeltaWindow { lower: ExtRational::zero(), upper: &r(3, 2) * &(m - &r(2, 1)) })
}

/// Companion inequality `1/m < 3 / (2(3 + δ))`.
pub fn delta_companion(m: &ExtRational, delta: &ExtRational) -> bool {
    recip(m) < &r(3, 1) / &(&r(2, 1) * &(&r(3, 1) + delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YoungKind {
    Strong,
    Weak,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YoungVerdict {
    pub kind: YoungKind,
    pub lhs: ExtRational,
    pub rhs: ExtRational,
    pub pass: bool,
}

/// Checks `1/c = 1/a + 1/b - 1` exactly. Exponents must lie in `[1, ∞]`.
pub fn young_convolution_check(
    a: &ExtRational,
    b: &ExtRational,
    c: &ExtRational,
    kind: YoungKind,
) -> Result<YoungVerdict> {
    for (n, v) in [("a", a), ("b", b), ("c", c)] {
        if v < &ExtRational::one() {
            return Err(Error::ExponentOutOfRange(format!("{n} must be at least 1, got {v}")));
        }
    }
    let lhs = recip(c);
    let rhs = &(&recip(a) + &recip(b)) - &ExtRational::one();
    Ok(YoungVerdict { kind, pass: lhs == rhs, lhs, rhs })
}

/// Seeded admissible `(q, s)` pairs with `3 < q`, `3 <= s` and
/// `3/q + 2/s < 1`, including infinite endpoints.
pub fn random_subcritical_pairs(seed: u64, count: usize) -> Vec<(ExtRational, ExtRational)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let q = if rng.gen_ratio(1, 10) { Infinity } else { r(rng.gen_range(31..400), rng.gen_range(1..10)) };
        let s = if rng.gen_ratio(1, 10) { Infinity } else { r(rng.gen_range(30..400), rng.gen_range(1..10)) };
        if !(q > r(3, 1)) || s < r(3, 1) {
            continue;
        }
        if let Ok((SerrinClass::Subcritical, _)) = serrin_classify(&q, &s) {
            out.push((q, s));
        }
    }
    out
}

/// Seeded critical tuples `(q, s, m, δ)` for the step-1 system.
pub fn random_step1_tuples(seed: u64, count: usize) -> Vec<[ExtRational; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let q = r(rng.gen_range(31..200), rng.gen_range(1..10));
        if !(q > r(3, 1)) {
            continue;
        }
        // 2/s = 1 - 3/q
        let s = &r(2, 1) / &(&ExtRational::one() - &(&r(3, 1) / &q));
        let m = r(rng.gen_range(10..80), 10);
        let delta = r(rng.gen_range(0..40), rng.gen_range(1..8));
        out.push([q, s, m, delta]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> ExtRational {
        s.parse().unwrap()
    }

    #[test]
    fn parse_display_and_order() {
        assert_eq!(p("6/4").to_string(), "3/2");
        assert_eq!(p("inf"), Infinity);
        assert_eq!(Infinity.recip(), ExtRational::zero());
        assert_eq!(ExtRational::zero().recip(), Infinity);
        assert!(p("1000000") < Infinity);
        assert!(p("-1/2") < p("0"));
        assert_eq!(serde_json::to_string(&p("3")).unwrap(), "\"3/1\"");
        assert_eq!(serde_json::from_str::<ExtRational>("\"inf\"").unwrap(), Infinity);
        assert!("1/0".parse::<ExtRational>().is_err());
        assert_eq!(&ExtRational::zero() * &Infinity, ExtRational::zero());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(serrin_classify(&p("6"), &p("6")).unwrap(), (SerrinClass::Subcritical, p("5/6")));
        assert_eq!(serrin_classify(&p("3"), &Infinity).unwrap(), (SerrinClass::Critical, p("1")));
        assert_eq!(serrin_classify(&p("3"), &p("3")).unwrap(), (SerrinClass::Supercritical, p("5/3")));
        assert!(serrin_classify(&p("1"), &p("3")).is_err());
        assert!(serrin_classify(&p("4"), &p("1/2")).is_err());
    }

    #[test]
    fn bootstrap_nine_nine() {
        let led = bootstrap_schedule(&p("9"), &p("9")).unwrap();
        let (k, sigma, chain) = bootstrap_chain(&led);
        assert_eq!(k, p("8"));
        assert_eq!(sigma, p("1/12"));
        let want: Vec<ExtRational> =
            ["3/2", "12/7", "2", "12/5", "3", "4", "6", "12", "inf"].iter().map(|s| p(s)).collect();
        assert_eq!(chain, want);
        assert!(led.all_pass());
        assert!(bootstrap_schedule(&p("3"), &p("9")).is_err());
        assert!(bootstrap_schedule(&p("4"), &p("4")).is_err());
    }

    #[test]
    fn m_condition_examples() {
        assert_eq!(pressure_m_condition(&p("4"), &p("1")).unwrap().threshold, p("4/3"));
        let v = pressure_m_condition(&p("12"), &p("1")).unwrap();
        assert_eq!(v.threshold, p("4/5"));
        assert!(v.implied_by_m_ge_1 && v.pass);
        let v = pressure_m_condition(&p("6"), &p("1")).unwrap();
        assert_eq!(v.threshold, p("1"));
        assert!(!v.pass && !v.implied_by_m_ge_1);
        assert!(pressure_m_condition(&p("2"), &p("1")).is_err());
    }

    #[test]
    fn step1_example_and_b_window() {
        let led = step1_conditions(&p("4"), &p("8"), &p("2"), &p("0")).unwrap();
        assert!(led.conditions.iter().find(|c| c.name == "step1_product").unwrap().verdict);
        assert!(led.conditions.iter().find(|c| c.name == "step1_reduced").unwrap().verdict);
        // r = q, δ = 0 gives 1/b = 1
        assert_eq!(led.get("b"), Some(&p("1")));
        assert!(step1_conditions(&p("4"), &p("9"), &p("2"), &p("0")).is_err());
    }

    #[test]
    fn delta_window_examples() {
        let w = delta_window(&p("3")).unwrap();
        assert_eq!((w.lower.clone(), w.upper.clone()), (p("0"), p("3/2")));
        assert!(delta_window(&p("2")).is_err());
        let w = delta_window(&p("4")).unwrap();
        assert_eq!(w.upper, p("3"));
        for k in 0..300 {
            let d = ExtRational::new(k, 100);
            assert!(w.contains(&d));
            assert!(delta_companion(&p("4"), &d));
        }
        assert!(!delta_companion(&p("4"), &w.upper));
    }

    #[test]
    fn young_examples() {
        assert!(!young_convolution_check(&p("3/2"), &p("3"), &p("3"), YoungKind::Weak).unwrap().pass);
        for (num, den) in [(3, 2), (2, 1), (5, 2), (11, 4)] {
            let rr = ExtRational::new(num, den);
            let q = recip(&(&recip(&rr) - &r(1, 3)));
            assert!(young_convolution_check(&p("3/2"), &rr, &q, YoungKind::Weak).unwrap().pass);
        }
        for v in ["1", "2", "7/3", "inf"] {
            assert!(young_convolution_check(&p("1"), &p(v), &p(v), YoungKind::Strong).unwrap().pass);
        }
    }

    #[test]
    fn table_rendering() {
        let led = bootstrap_schedule(&p("9"), &p("9")).unwrap();
        let t = led.to_table();
        assert!(t.contains("p_8"));
        assert!(t.contains("inf"));
        assert!(t.contains("[pass] K_minimal"));
    }
}
