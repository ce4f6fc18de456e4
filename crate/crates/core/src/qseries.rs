//! Laurent polynomials in one variable `q` with big-integer coefficients,
//! the two q-binomial symbols and truncated power series.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::cell::RefCell;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{invalid, Error, Result};

/// Sparse Laurent polynomial `Σ c_e q^e`; zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LaurentPolyQ {
    coeffs: BTreeMap<i64, BigInt>,
}

impl LaurentPolyQ {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The constant 1.
    pub fn one() -> Self {
        Self::monomial(0, BigInt::one())
    }

    /// `c q^e`.
    pub fn monomial(e: i64, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero();
        p.add_term(e, c.into());
        p
    }

    /// Builds from `(exponent, coefficient)` pairs, summing repeats.
    pub fn from_terms<I, C>(terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, C)>,
        C: Into<BigInt>,
    {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, c.into());
        }
        p
    }

    /// Adds `c q^e` in place.
    pub fn add_term(&mut self, e: i64, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(e).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&e);
        }
    }

    /// True for the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `q^e`.
    pub fn coeff(&self, e: i64) -> BigInt {
        self.coeffs.get(&e).cloned().unwrap_or_default()
    }

    /// Iterates `(exponent, coefficient)` in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigInt)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    /// Number of non-zero terms.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// True when there are no terms.
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest exponent, if any.
    pub fn min_degree(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    /// Highest exponent, if any.
    pub fn max_degree(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    /// Multiplies by `q^k`.
    pub fn shift(&self, k: i64) -> Self {
        LaurentPolyQ { coeffs: self.coeffs.iter().map(|(e, c)| (e + k, c.clone())).collect() }
    }

    /// Multiplies every coefficient by `k`.
    pub fn scale(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        LaurentPolyQ { coeffs: self.coeffs.iter().map(|(e, c)| (*e, c * k)).collect() }
    }

    /// Value at `q = 1`.
    pub fn eval_at_one(&self) -> BigInt {
        self.coeffs.values().sum()
    }

    /// Substitutes `q -> q^{-1}`.
    pub fn invert_q(&self) -> Self {
        LaurentPolyQ { coeffs: self.coeffs.iter().map(|(e, c)| (-e, c.clone())).collect() }
    }

    /// True if every coefficient is non-negative.
    pub fn has_nonnegative_coeffs(&self) -> bool {
        self.coeffs.values().all(|c| !c.is_negative())
    }

    /// True if no exponent is positive, i.e. the polynomial is in `Z[q^{-1}]`.
    pub fn in_q_inverse_ring(&self) -> bool {
        self.max_degree().is_none_or(|e| e <= 0)
    }

    /// Truncates to exponents `<= cap`.
    pub fn truncate(&self, cap: i64) -> TruncatedSeriesQ {
        TruncatedSeriesQ::from_poly(self, cap)
    }

    /// Serializes as `{"exp": "coef"}` with decimal strings.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .coeffs
            .iter()
            .map(|(e, c)| (e.to_string(), serde_json::Value::String(c.to_string())))
            .collect();
        serde_json::Value::Object(map)
    }

    /// Parses `{"exp": "coef"}`; coefficients may be strings or integers.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("polynomial must be a JSON object".into()))?;
        let mut p = Self::zero();
        for (k, c) in obj {
            let e: i64 = k
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent '{k}'")))?;
            let coef: BigInt = match c {
                serde_json::Value::String(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coefficient '{s}'")))?,
                serde_json::Value::Number(n) => n
                    .as_i64()
                    .map(BigInt::from)
                    .ok_or_else(|| Error::Parse(format!("bad coefficient {n}")))?,
                _ => return Err(Error::Parse("coefficient must be string or integer".into())),
            };
            p.add_term(e, coef);
        }
        Ok(p)
    }

    /// Parses the JSON text form.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("polynomial JSON: {e}")))?;
        Self::from_json(&v)
    }
}

impl fmt::Display for LaurentPolyQ {
    /// Renders as `q^6 + 2q^7`, lowest exponent first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.coeffs {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            let mono = match *e {
                0 => String::new(),
                1 => "q".to_string(),
                _ => format!("q^{e}"),
            };
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{mag}{mono}")?;
            }
        }
        Ok(())
    }
}

impl Add<&LaurentPolyQ> for &LaurentPolyQ {
    type Output = LaurentPolyQ;
    fn add(self, rhs: &LaurentPolyQ) -> LaurentPolyQ {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&LaurentPolyQ> for LaurentPolyQ {
    fn add_assign(&mut self, rhs: &LaurentPolyQ) {
        for (e, c) in &rhs.coeffs {
            self.add_term(*e, c.clone());
        }
    }
}

impl Neg for &LaurentPolyQ {
    type Output = LaurentPolyQ;
    fn neg(self) -> LaurentPolyQ {
        LaurentPolyQ { coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c)).collect() }
    }
}

impl Sub<&LaurentPolyQ> for &LaurentPolyQ {
    type Output = LaurentPolyQ;
    fn sub(self, rhs: &LaurentPolyQ) -> LaurentPolyQ {
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, -c);
        }
        out
    }
}

impl Mul<&LaurentPolyQ> for &LaurentPolyQ {
    type Output = LaurentPolyQ;
    fn mul(self, rhs: &LaurentPolyQ) -> LaurentPolyQ {
        let (Some(lo_a), Some(hi_a), Some(lo_b), Some(hi_b)) =
            (self.min_degree(), self.max_degree(), rhs.min_degree(), rhs.max_degree())
        else {
            return LaurentPolyQ::zero();
        };
        let width = (hi_a - lo_a + hi_b - lo_b + 1) as usize;
        let mut dense = vec![BigInt::zero(); width];
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &rhs.coeffs {
                dense[(ea - lo_a + eb - lo_b) as usize] += ca * cb;
            }
        }
        let base = lo_a + lo_b;
        LaurentPolyQ {
            coeffs: dense
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| (base + i as i64, c))
                .collect(),
        }
    }
}

thread_local! {
    static BRACKET_CACHE: RefCell<HashMap<(i64, i64), LaurentPolyQ>> = RefCell::new(HashMap::new());
}

/// Dense coefficients of the Gaussian binomial `[n choose k]_q`, `0 <= k <= n`.
fn gaussian_dense(n: i64, k: i64) -> Vec<BigInt> {
    // Row-by-row Pascal recursion [n,k] = [n-1,k-1] + q^k [n-1,k].
    let k = k.min(n - k) as usize;
    let n = n as usize;
    let mut row: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]; k + 1];
    for kk in 1..=k {
        row[kk] = Vec::new();
    }
    for m in 1..=n {
        for kk in (1..=k.min(m)).rev() {
            let prev_same = if kk <= m - 1 { row[kk].clone() } else { Vec::new() };
            let prev_lower = &row[kk - 1];
            let deg = kk * (m - kk);
            let mut next = vec![BigInt::zero(); deg + 1];
            for (i, c) in prev_lower.iter().enumerate() {
                next[i] += c;
            }
            for (i, c) in prev_same.iter().enumerate() {
                next[i + kk] += c;
            }
            row[kk] = next;
        }
    }
    row[k].clone()
}

/// `[p+m choose m]_q` for `p >= 0`, zero for `p < 0`.
pub fn qbinom_bracket(p: i64, m: i64) -> Result<LaurentPolyQ> {
    if m < 0 {
        return invalid(format!("q-binomial needs m >= 0, got {m}"));
    }
    if p < 0 {
        return Ok(LaurentPolyQ::zero());
    }
    if m == 0 || p == 0 {
        return Ok(LaurentPolyQ::one());
    }
    if let Some(v) = BRACKET_CACHE.with(|c| c.borrow().get(&(p, m)).cloned()) {
        return Ok(v);
    }
    let dense = gaussian_dense(p + m, m);
    let poly = LaurentPolyQ::from_terms(dense.into_iter().enumerate().map(|(i, c)| (i as i64, c)));
    BRACKET_CACHE.with(|c| c.borrow_mut().insert((p, m), poly.clone()));
    Ok(poly)
}

/// The brace symbol `{p+m choose m}_q`: the bracket for `p >= 0`, zero for
/// `-m <= p <= -1`, and `(-1)^m q^{mp + m(m+1)/2} [-p-1 choose m]_q` below.
pub fn qbinom_brace(p: i64, m: i64) -> Result<LaurentPolyQ> {
    if m < 0 {
        return invalid(format!("q-binomial needs m >= 0, got {m}"));
    }
    if p >= 0 {
        return qbinom_bracket(p, m);
    }
    if m == 0 {
        return Ok(LaurentPolyQ::one());
    }
    if p >= -m {
        return Ok(LaurentPolyQ::zero());
    }
    let base = qbinom_bracket(-p - 1 - m, m)?;
    let sign = if m % 2 == 0 { BigInt::one() } else { -BigInt::one() };
    Ok(base.shift(m * p + m * (m + 1) / 2).scale(&sign))
}

/// `(q)_k = Π_{j=1}^k (1 - q^j)`.
pub fn poch_q(k: i64) -> Result<LaurentPolyQ> {
    if k < 0 {
        return invalid(format!("(q)_k needs k >= 0, got {k}"));
    }
    let mut acc = LaurentPolyQ::one();
    for j in 1..=k {
        let f = LaurentPolyQ::from_terms([(0, 1), (j, -1)]);
        acc = &acc * &f;
    }
    Ok(acc)
}

/// Classical binomial `C(n, k)` as a big integer, zero outside `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// The brace symbol at `q = 1`.
pub fn brace_at_one(p: i64, m: i64) -> BigInt {
    if m == 0 {
        return BigInt::one();
    }
    if p >= 0 {
        binomial(p + m, m)
    } else if p >= -m {
        BigInt::zero()
    } else {
        let b = binomial(-p - 1, m);
        if m % 2 == 0 {
            b
        } else {
            -b
        }
    }
}

/// A power series in `q` known up to and including `q^cap`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeriesQ {
    coeffs: BTreeMap<i64, BigInt>,
    cap: i64,
}

impl TruncatedSeriesQ {
    /// Truncates a Laurent polynomial at `cap`.
    pub fn from_poly(p: &LaurentPolyQ, cap: i64) -> Self {
        TruncatedSeriesQ {
            coeffs: p.coeffs.range(..=cap).map(|(e, c)| (*e, c.clone())).collect(),
            cap,
        }
    }

    /// Degree cap.
    pub fn cap(&self) -> i64 {
        self.cap
    }

    /// Coefficient of `q^e` for `e <= cap`.
    pub fn coeff(&self, e: i64) -> BigInt {
        self.coeffs.get(&e).cloned().unwrap_or_default()
    }

    /// The retained terms as a polynomial.
    pub fn to_poly(&self) -> LaurentPolyQ {
        LaurentPolyQ::from_terms(self.coeffs.iter().map(|(e, c)| (*e, c.clone())))
    }

    /// Sum; the cap is the smaller one.
    pub fn add(&self, other: &Self) -> Self {
        let cap = self.cap.min(other.cap);
        let p = &self.to_poly() + &other.to_poly();
        Self::from_poly(&p, cap)
    }

    /// Product; valid when neither factor has negative exponents.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.coeffs.keys().next().is_some_and(|&e| e < 0)
            || other.coeffs.keys().next().is_some_and(|&e| e < 0)
        {
            return invalid("truncated product needs power series without negative exponents");
        }
        let cap = self.cap.min(other.cap);
        let mut out: BTreeMap<i64, BigInt> = BTreeMap::new();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in other.coeffs.range(..=cap - ea) {
                *out.entry(ea + eb).or_default() += ca * cb;
            }
        }
        out.retain(|_, c| !c.is_zero());
        Ok(TruncatedSeriesQ { coeffs: out, cap })
    }

    /// Multiplicative inverse; needs constant term `±1` and no negative exponents.
    pub fn inverse(&self) -> Result<Self> {
        let c0 = self.coeff(0);
        if !(c0.is_one() || (-&c0).is_one()) || self.coeffs.keys().next().is_some_and(|&e| e < 0) {
            return invalid("series inverse needs a unit constant term");
        }
        let mut inv: Vec<BigInt> = vec![BigInt::zero(); (self.cap.max(0) + 1) as usize];
        inv[0] = c0.clone();
        for k in 1..inv.len() {
            let mut acc = BigInt::zero();
            for (e, c) in self.coeffs.range(1..=k as i64) {
                acc += c * &inv[k - *e as usize];
            }
            inv[k] = -(acc * &c0);
        }
        let poly = LaurentPolyQ::from_terms(inv.into_iter().enumerate().map(|(i, c)| (i as i64, c)));
        Ok(Self::from_poly(&poly, self.cap))
    }
}
