//! Characters of finite-dimensional modules as Laurent polynomials in
//! `x_a = e^{Λ̄_a}`, the domino-sum solutions `χ^{(a)}_j` of the Q-system for
//! the classical types, and the checks built on them.
//!
//! Weyl characters are computed by exact division of the alternating orbit
//! sum `Σ_w det(w) x^{w(λ+ρ̄)}` by the Weyl denominator, written as
//! `x^{ρ̄} Π_{α>0} (1 - x^{-α})`, one root factor at a time.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::root_data::{
    is_dominant, rat, signed_regular_orbit, AlgebraData, AlgebraId, Family, Rat, DEFAULT_WEYL_BOUND,
};

/// Sparse Laurent polynomial `Σ c_μ x^μ` over `x_1..x_n`; zero coefficients
/// are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CharacterPoly {
    rank: usize,
    terms: BTreeMap<Vec<i64>, BigInt>,
}

impl CharacterPoly {
    /// The zero polynomial in `rank` variables.
    pub fn zero(rank: usize) -> Self {
        CharacterPoly { rank, terms: BTreeMap::new() }
    }

    /// The constant 1.
    pub fn one(rank: usize) -> Self {
        Self::monomial(vec![0; rank], BigInt::one())
    }

    /// `c x^μ`.
    pub fn monomial(mu: Vec<i64>, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(mu.len());
        p.add_term(&mu, c.into());
        p
    }

    /// Number of variables.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Adds `c x^μ` in place.
    pub fn add_term(&mut self, mu: &[i64], c: BigInt) {
        debug_assert_eq!(mu.len(), self.rank);
        if c.is_zero() {
            return;
        }
        if let Some(entry) = self.terms.get_mut(mu) {
            *entry += c;
            if entry.is_zero() {
                self.terms.remove(mu);
            }
        } else {
            self.terms.insert(mu.to_vec(), c);
        }
    }

    /// True for the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of monomials.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// True when there are no monomials.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `x^μ`.
    pub fn coeff(&self, mu: &[i64]) -> BigInt {
        self.terms.get(mu).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Monomials in lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &BigInt)> {
        self.terms.iter()
    }

    /// Multiplies every coefficient by `k`.
    pub fn scale(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return Self::zero(self.rank);
        }
        CharacterPoly { rank: self.rank, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect() }
    }

    /// Multiplies by the monomial `x^μ`.
    pub fn shift(&self, mu: &[i64]) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.iter().zip(mu).map(|(x, y)| x + y).collect(), c.clone()))
            .collect();
        CharacterPoly { rank: self.rank, terms }
    }

    /// `self^k` by repeated squaring.
    pub fn pow(&self, mut k: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.rank);
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Value at `x = (1, .., 1)`, the dimension for a character.
    pub fn eval_at_one(&self) -> BigInt {
        self.terms.values().sum()
    }

    /// Floating-point value at a point with positive coordinates.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        let logs: Vec<f64> = point.iter().map(|x| x.ln()).collect();
        self.terms
            .iter()
            .map(|(e, c)| {
                let s: f64 = e.iter().zip(&logs).map(|(&k, l)| k as f64 * l).sum();
                c.to_f64().unwrap_or(f64::NAN) * s.exp()
            })
            .sum()
    }

    /// Image under the simple reflection `s_a`, acting on exponents.
    pub fn reflect(&self, data: &AlgebraData, a: usize) -> Result<Self> {
        let mut out = Self::zero(self.rank);
        for (e, c) in &self.terms {
            out.add_term(&data.reflect(a, e)?, c.clone());
        }
        Ok(out)
    }

    /// True when the coefficients are constant on every simple-reflection
    /// orbit, hence Weyl invariant.
    pub fn is_weyl_invariant(&self, data: &AlgebraData) -> bool {
        self.terms.iter().all(|(e, c)| {
            (1..=data.rank()).all(|a| match data.reflect(a, e) {
                Ok(img) => self.terms.get(&img) == Some(c),
                Err(_) => false,
            })
        })
    }

    /// Monomials with dominant exponent.
    pub fn dominant_part(&self) -> BTreeMap<Vec<i64>, BigInt> {
        self.terms.iter().filter(|(e, _)| is_dominant(e)).map(|(e, c)| (e.clone(), c.clone())).collect()
    }

    /// Serializes as `{"e1,e2,..": "coef"}`.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .terms
            .iter()
            .map(|(e, c)| (join(e), serde_json::Value::String(c.to_string())))
            .collect();
        serde_json::Value::Object(map)
    }

    /// Parses the JSON form produced by [`CharacterPoly::to_json`];
    /// coefficients may be strings or integers.
    pub fn from_json(rank: usize, v: &serde_json::Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("character must be a JSON object".into()))?;
        let mut p = Self::zero(rank);
        for (k, c) in obj {
            let e: Vec<i64> = if k.trim().is_empty() {
                Vec::new()
            } else {
                k.split(',')
                    .map(|x| x.trim().parse::<i64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Parse(format!("bad exponent vector '{k}'")))?
            };
            if e.len() != rank {
                return Err(Error::Parse(format!("exponent vector '{k}' does not have {rank} entries")));
            }
            let coef: BigInt = match c {
                serde_json::Value::String(s) => {
                    s.trim().parse().map_err(|_| Error::Parse(format!("bad coefficient '{s}'")))?
                }
                serde_json::Value::Number(n) => n
                    .as_i64()
                    .map(BigInt::from)
                    .ok_or_else(|| Error::Parse(format!("bad coefficient {n}")))?,
                _ => return Err(Error::Parse("coefficient must be string or integer".into())),
            };
            p.add_term(&e, coef);
        }
        Ok(p)
    }
}

fn join(e: &[i64]) -> String {
    e.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for CharacterPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().rev().map(|(e, c)| format!("{c}*x^({})", join(e))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add<&CharacterPoly> for &CharacterPoly {
    type Output = CharacterPoly;

    fn add(self, rhs: &CharacterPoly) -> CharacterPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e, c.clone());
        }
        out
    }
}

impl Neg for &CharacterPoly {
    type Output = CharacterPoly;

    fn neg(self) -> CharacterPoly {
        CharacterPoly { rank: self.rank, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }
}

impl Sub<&CharacterPoly> for &CharacterPoly {
    type Output = CharacterPoly;

    fn sub(self, rhs: &CharacterPoly) -> CharacterPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e, -c);
        }
        out
    }
}

impl Mul<&CharacterPoly> for &CharacterPoly {
    type Output = CharacterPoly;

    fn mul(self, rhs: &CharacterPoly) -> CharacterPoly {
        let mut acc: HashMap<Vec<i64>, BigInt> = HashMap::with_capacity(self.len() + rhs.len());
        let mut key = vec![0i64; self.rank];
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                for (k, (x, y)) in key.iter_mut().zip(e1.iter().zip(e2)) {
                    *k = x + y;
                }
                let prod = c1 * c2;
                match acc.get_mut(&key) {
                    Some(v) => *v += prod,
                    None => {
                        acc.insert(key.clone(), prod);
                    }
                }
            }
        }
        CharacterPoly { rank: self.rank, terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }
}

/// Integer height functional `ℓ(μ) = N · ht(μ)`, with `N` clearing the
/// denominators of `C^{-1}`; every positive root has `ℓ > 0`.
fn height_weights(data: &AlgebraData) -> Vec<i64> {
    let n = data.rank();
    let denom = data
        .inv_cartan
        .iter()
        .flatten()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    (0..n)
        .map(|a| {
            let h: Rat = (0..n).fold(Rat::zero(), |acc, b| acc + &data.inv_cartan[b][a]);
            (h * Rat::from_integer(denom.clone())).to_integer().to_i64().expect("small height")
        })
        .collect()
}

fn height(h: &[i64], mu: &[i64]) -> i64 {
    h.iter().zip(mu).map(|(x, y)| x * y).sum()
}

/// Divides `f` by `1 - x^{-α}` by long division from the top, failing when
/// the division is not exact.
fn divide_one_minus(f: &CharacterPoly, alpha: &[i64], h: &[i64]) -> Result<CharacterPoly> {
    let mut rem: BTreeMap<(i64, Vec<i64>), BigInt> =
        f.terms.iter().map(|(e, c)| ((height(h, e), e.clone()), c.clone())).collect();
    let floor = rem.keys().next().map(|k| k.0).unwrap_or(0);
    let mut out = CharacterPoly::zero(f.rank);
    while let Some(((ht, mu), c)) = rem.pop_last() {
        if ht < floor {
            return Err(Error::Internal("Weyl numerator is not divisible by the denominator".into()));
        }
        let down: Vec<i64> = mu.iter().zip(alpha).map(|(x, y)| x - y).collect();
        let key = (height(h, &down), down);
        let entry = rem.entry(key.clone()).or_insert_with(BigInt::zero);
        *entry += &c;
        if entry.is_zero() {
            rem.remove(&key);
        }
        out.add_term(&mu, c);
    }
    Ok(out)
}

fn positive_roots_as_weights(data: &AlgebraData) -> Vec<Vec<i64>> {
    data.positive_roots().iter().map(|r| data.from_root_coords(r)).collect()
}

/// `ch V(λ)` for a dominant `λ`, cached per algebra and weight.
///
/// Refused when the Weyl group is larger than [`DEFAULT_WEYL_BOUND`].
pub fn weyl_character(data: &AlgebraData, lambda: &[i64]) -> Result<Arc<CharacterPoly>> {
    type Cache = Mutex<HashMap<(AlgebraId, Vec<i64>), Arc<CharacterPoly>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    if lambda.len() != data.rank() {
        return invalid(format!("weight {lambda:?} does not have {} entries", data.rank()));
    }
    if !is_dominant(lambda) {
        return invalid(format!("weight {lambda:?} is not dominant"));
    }
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (data.id, lambda.to_vec());
    if let Some(hit) = cache.lock().expect("character cache").get(&key) {
        return Ok(hit.clone());
    }
    let ch = Arc::new(weyl_character_uncached(data, lambda)?);
    cache.lock().expect("character cache").insert(key, ch.clone());
    Ok(ch)
}

fn weyl_character_uncached(data: &AlgebraData, lambda: &[i64]) -> Result<CharacterPoly> {
    let n = data.rank();
    let shifted: Vec<i64> = lambda.iter().map(|x| x + 1).collect();
    let mut f = CharacterPoly::zero(n);
    for (mu, sign) in signed_regular_orbit(data, &shifted, DEFAULT_WEYL_BOUND)? {
        f.add_term(&mu, BigInt::from(sign));
    }
    let h = height_weights(data);
    for alpha in positive_roots_as_weights(data) {
        f = divide_one_minus(&f, &alpha, &h)?;
    }
    Ok(f.shift(&vec![-1; n]))
}

/// Weyl dimension formula `Π_{α>0} (λ+ρ̄|α)/(ρ̄|α)`, evaluated in exact
/// rationals from the positive roots in simple-root coordinates.
pub fn weyl_dimension(data: &AlgebraData, lambda: &[i64]) -> BigInt {
    // (Λ̄_b|α_a) = δ_ab / t_a, so (μ|α) = Σ_a α_a μ_a / t_a.
    let pair = |mu: &[i64], alpha: &[i64]| -> Rat {
        alpha
            .iter()
            .enumerate()
            .fold(Rat::zero(), |acc, (a, &k)| acc + rat(k * mu[a], data.t_values[a]))
    };
    let shifted: Vec<i64> = lambda.iter().map(|x| x + 1).collect();
    let rho = vec![1; data.rank()];
    let mut acc = Rat::one();
    for alpha in data.positive_roots() {
        acc *= pair(&shifted, &alpha) / pair(&rho, &alpha);
    }
    acc.to_integer()
}

/// Irreducible decomposition: dominant highest weight to multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IrrDecomposition {
    /// Multiplicities, all non-zero.
    pub mult: BTreeMap<Vec<i64>, BigInt>,
}

impl IrrDecomposition {
    /// Multiplicity of `V(λ)`.
    pub fn get(&self, lambda: &[i64]) -> BigInt {
        self.mult.get(lambda).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Entries ordered by decreasing height, then decreasing lexicographic
    /// weight; a weight never follows one it dominates.
    pub fn sorted(&self, data: &AlgebraData) -> Vec<(Vec<i64>, BigInt)> {
        let h = height_weights(data);
        let mut v: Vec<(Vec<i64>, BigInt)> = self.mult.iter().map(|(k, c)| (k.clone(), c.clone())).collect();
        v.sort_by(|x, y| (height(&h, &y.0), &y.0).cmp(&(height(&h, &x.0), &x.0)));
        v
    }

    /// JSON list `[{"lambda": [...], "mult": k}]` in [`IrrDecomposition::sorted`] order.
    pub fn to_json(&self, data: &AlgebraData) -> serde_json::Value {
        serde_json::Value::Array(
            self.sorted(data)
                .into_iter()
                .map(|(l, m)| serde_json::json!({ "lambda": l, "mult": m.to_string() }))
                .collect(),
        )
    }
}

/// Greedy decomposition of a Weyl-invariant polynomial into irreducible
/// characters.
///
/// The leading term is the dominant monomial of largest height, ties broken
/// by the lexicographically largest exponent; such a monomial is maximal for
/// the dominance order. Only dominant parts are subtracted, which suffices
/// because a Weyl-invariant polynomial is determined by its dominant part.
pub fn decompose(data: &AlgebraData, f: &CharacterPoly) -> Result<IrrDecomposition> {
    if f.rank() != data.rank() {
        return invalid(format!("character in {} variables for rank {}", f.rank(), data.rank()));
    }
    if !f.is_weyl_invariant(data) {
        return invalid("polynomial is not Weyl invariant, so it is not a character");
    }
    let h = height_weights(data);
    let mut rem: BTreeMap<(i64, Vec<i64>), BigInt> =
        f.dominant_part().into_iter().map(|(e, c)| ((height(&h, &e), e), c)).collect();
    let mut out = IrrDecomposition::default();
    let cap = rem.len().saturating_mul(4) + 16;
    let mut steps = 0usize;
    while let Some(((_, mu), c)) = rem.pop_last() {
        steps += 1;
        if steps > cap {
            return invalid("decomposition did not terminate within its step bound");
        }
        if c.is_negative() {
            return invalid(format!("negative multiplicity {c} at {mu:?}: not a character"));
        }
        let ch = weyl_character(data, &mu)?;
        for (e, k) in ch.terms() {
            if e == &mu || !is_dominant(e) {
                continue;
            }
            let key = (height(&h, e), e.clone());
            let entry = rem.entry(key.clone()).or_insert_with(BigInt::zero);
            *entry -= k * &c;
            if entry.is_zero() {
                rem.remove(&key);
            }
        }
        out.mult.insert(mu, c);
    }
    Ok(out)
}

/// `Σ mult · ch V(λ)`.
pub fn reconstruct(data: &AlgebraData, dec: &IrrDecomposition) -> Result<CharacterPoly> {
    let mut out = CharacterPoly::zero(data.rank());
    for (l, m) in &dec.mult {
        out = &out + &weyl_character(data, l)?.scale(m);
    }
    Ok(out)
}

fn fundamental(n: usize, a: usize, k: i64) -> Vec<i64> {
    let mut v = vec![0; n];
    if a >= 1 {
        v[a - 1] = k;
    }
    v
}

/// Highest weights (with multiplicity one each) of the domino-sum solution
/// `χ^{(a)}_j` for the classical families.
pub fn chi_q_weights(data: &AlgebraData, a: usize, j: i64) -> Result<Vec<Vec<i64>>> {
    let n = data.rank();
    if a == 0 || a > n {
        return invalid(format!("color {a} outside 1..={n}"));
    }
    if j < 0 {
        return invalid("Q-system index must be non-negative");
    }
    let single = || Ok(vec![fundamental(n, a, j)]);
    match data.id.family() {
        Family::A => single(),
        Family::C if a == n => single(),
        Family::D if a + 1 >= n => single(),
        Family::C => {
            // k_1 + .. + k_a <= j, k_b even for b < a, k_a = j mod 2.
            let mut out = Vec::new();
            let mut k = vec![0i64; a];
            loop {
                let sum: i64 = k.iter().sum();
                let parity_ok = k.iter().enumerate().all(|(b, &x)| {
                    let want = if b + 1 == a { j.rem_euclid(2) } else { 0 };
                    x.rem_euclid(2) == want
                });
                if sum <= j && parity_ok {
                    let mut w = vec![0; n];
                    w[..a].copy_from_slice(&k);
                    out.push(w);
                }
                let mut i = 0;
                loop {
                    if i == a {
                        return Ok(out);
                    }
                    k[i] += 1;
                    if k.iter().sum::<i64>() <= j {
                        break;
                    }
                    k[i] = 0;
                    i += 1;
                }
            }
        }
        Family::B | Family::D => {
            // Nodes a0, a0+2, .., a with a0 = a mod 2 in {0, 1}, Λ̄_0 = 0,
            // and t_a (k_{a0} + .. + k_{a-2}) + k_a = j.
            let ta = data.t_values[a - 1];
            let lower: Vec<usize> = ((a % 2)..a).step_by(2).collect();
            let mut out = Vec::new();
            for s in 0..=j / ta {
                let ka = j - ta * s;
                for comp in compositions(s, lower.len()) {
                    let mut w = vec![0; n];
                    w[a - 1] += ka;
                    for (&node, &x) in lower.iter().zip(&comp) {
                        if node >= 1 {
                            w[node - 1] += x;
                        }
                    }
                    out.push(w);
                }
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!(
            "no closed Q-system solution for {}; supply a Q-provider",
            data.id
        ))),
    }
}

/// Weak compositions of `s` into `parts` non-negative parts.
fn compositions(s: i64, parts: usize) -> Vec<Vec<i64>> {
    if parts == 0 {
        return if s == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 0..=s {
        for mut rest in compositions(s - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `χ^{(a)}_j` as a character; `χ^{(a)}_0 = 1`.
pub fn chi_q(data: &AlgebraData, a: usize, j: i64) -> Result<CharacterPoly> {
    let mut out = CharacterPoly::zero(data.rank());
    for w in chi_q_weights(data, a, j)? {
        out = &out + weyl_character(data, &w)?.as_ref();
    }
    Ok(out)
}

/// Source of the values `Q^{(a)}_j` fed to the Q-system checks.
pub trait QProvider: Sync {
    /// `Q^{(a)}_j` for a color `1 <= a <= n` and `j >= 1`.
    fn get(&self, a: usize, j: i64) -> Result<CharacterPoly>;
}

impl<F> QProvider for F
where
    F: Fn(usize, i64) -> Result<CharacterPoly> + Sync,
{
    fn get(&self, a: usize, j: i64) -> Result<CharacterPoly> {
        self(a, j)
    }
}

/// The domino-sum solution as a provider, memoized.
pub struct ChiProvider {
    data: AlgebraData,
    cache: Mutex<HashMap<(usize, i64), CharacterPoly>>,
}

impl ChiProvider {
    /// Provider for a classical type.
    pub fn new(data: &AlgebraData) -> Result<Self> {
        if !matches!(data.id.family(), Family::A | Family::B | Family::C | Family::D) {
            return Err(Error::Unsupported(format!(
                "no closed Q-system solution for {}; supply a Q-provider",
                data.id
            )));
        }
        Ok(ChiProvider { data: data.clone(), cache: Mutex::new(HashMap::new()) })
    }
}

impl QProvider for ChiProvider {
    fn get(&self, a: usize, j: i64) -> Result<CharacterPoly> {
        if let Some(hit) = self.cache.lock().expect("chi cache").get(&(a, j)) {
            return Ok(hit.clone());
        }
        let v = chi_q(&self.data, a, j)?;
        self.cache.lock().expect("chi cache").insert((a, j), v.clone());
        Ok(v)
    }
}

/// Value of `Q^{(b)}_k` with the conventions `Q^{(b)}_0 = 1` and `Q = 1` for
/// colors outside `1..=n`.
fn q_value(data: &AlgebraData, provider: &dyn QProvider, b: usize, k: i64) -> Result<CharacterPoly> {
    if b == 0 || b > data.rank() || k == 0 {
        return Ok(CharacterPoly::one(data.rank()));
    }
    if k < 0 {
        return invalid(format!("Q^({b})_{k} has a negative index"));
    }
    provider.get(b, k)
}

/// Neighbour factors `(b, k)` of the generic Q-system equation for `Q^{(a)}_j`:
/// `Π_{b∼a} Π_{k=0}^{-C_{ab}-1} Q^{(b)}_{⌊(C_{ba} j - k)/C_{ab}⌋}`.
pub fn generic_neighbor_factors(data: &AlgebraData, a: usize, j: i64) -> Vec<(usize, i64)> {
    let mut out = Vec::new();
    for &b in &data.neighbors[a - 1] {
        let cab = data.cartan[a - 1][b];
        let cba = data.cartan[b][a - 1];
        for k in 0..-cab {
            out.push((b + 1, Integer::div_floor(&(cba * j - k), &cab)));
        }
    }
    out.sort_unstable();
    out
}

/// Neighbour factors of the equation for `Q^{(a)}_j` written out family by
/// family for the non-simply-laced types, with the parity-split branches.
/// Returns the branch label with the factors; colors outside `1..=n` are
/// dropped since their `Q` is 1.
pub fn explicit_neighbor_factors(data: &AlgebraData, a: usize, j: i64) -> Option<(&'static str, Vec<(usize, i64)>)> {
    let n = data.rank();
    let (m, r2, r3) = (j.div_euclid(2), j.rem_euclid(2), j.rem_euclid(3));
    let (label, mut f): (&'static str, Vec<(usize, i64)>) = match data.id.family() {
        Family::B => {
            if a + 2 <= n {
                ("B a<=n-2", vec![(a - 1, j), (a + 1, j)])
            } else if a + 1 == n {
                ("B a=n-1", vec![(n - 2, j), (n, 2 * j)])
            } else if r2 == 0 {
                ("B a=n even", vec![(n - 1, m), (n - 1, m)])
            } else {
                ("B a=n odd", vec![(n - 1, m), (n - 1, m + 1)])
            }
        }
        Family::C => {
            if a + 2 <= n {
                ("C a<=n-2", vec![(a - 1, j), (a + 1, j)])
            } else if a + 1 == n {
                if r2 == 0 {
                    ("C a=n-1 even", vec![(n - 2, j), (n, m), (n, m)])
                } else {
                    ("C a=n-1 odd", vec![(n - 2, j), (n, m), (n, m + 1)])
                }
            } else {
                ("C a=n", vec![(n - 1, 2 * j)])
            }
        }
        Family::F => match a {
            1 => ("F a=1", vec![(2, j)]),
            2 => ("F a=2", vec![(1, j), (3, 2 * j)]),
            3 if r2 == 0 => ("F a=3 even", vec![(2, m), (2, m), (4, j)]),
            3 => ("F a=3 odd", vec![(2, m), (2, m + 1), (4, j)]),
            _ => ("F a=4", vec![(3, j)]),
        },
        Family::G => {
            let m3 = j.div_euclid(3);
            match (a, r3) {
                (1, _) => ("G a=1", vec![(2, 3 * j)]),
                (_, 0) => ("G a=2 j=0 mod 3", vec![(1, m3), (1, m3), (1, m3)]),
                (_, 1) => ("G a=2 j=1 mod 3", vec![(1, m3), (1, m3), (1, m3 + 1)]),
                _ => ("G a=2 j=2 mod 3", vec![(1, m3), (1, m3 + 1), (1, m3 + 1)]),
            }
        }
        _ => return None,
    };
    f.retain(|&(b, _)| b >= 1 && b <= n);
    f.sort_unstable();
    Some((label, f))
}

/// `LHS - RHS` of the Q-system equation for `Q^{(a)}_j`, `j >= 1`:
/// `(Q^{(a)}_j)^2 - Q^{(a)}_{j+1} Q^{(a)}_{j-1} - (neighbour product)`.
///
/// Simply-laced types use the generic neighbour product; the others use the
/// family-by-family branch forms. A zero result verifies the equation.
pub fn qsystem_residual(data: &AlgebraData, a: usize, j: i64, provider: &dyn QProvider) -> Result<CharacterPoly> {
    if a == 0 || a > data.rank() {
        return invalid(format!("color {a} outside 1..={}", data.rank()));
    }
    if j < 1 {
        return invalid("Q-system equations start at j = 1");
    }
    let factors = match explicit_neighbor_factors(data, a, j) {
        Some((_, f)) => f,
        None => generic_neighbor_factors(data, a, j),
    };
    let qj = q_value(data, provider, a, j)?;
    let lhs = &qj * &qj;
    let mut rhs = &q_value(data, provider, a, j + 1)? * &q_value(data, provider, a, j - 1)?;
    let mut prod = CharacterPoly::one(data.rank());
    for (b, k) in factors {
        prod = &prod * &q_value(data, provider, b, k)?;
    }
    rhs = &rhs + &prod;
    Ok(&lhs - &rhs)
}

/// Theorem-style support condition on `χ^{(a)}_j`: the coefficient of
/// `x^{jΛ̄_a}` is 1 and every highest weight of its decomposition lies in
/// `jΛ̄_a` minus the non-negative span of the simple roots.
pub fn top_term_condition(data: &AlgebraData, a: usize, j: i64, chi: &CharacterPoly) -> Result<bool> {
    let top = fundamental(data.rank(), a, j);
    if chi.coeff(&top) != BigInt::one() {
        return Ok(false);
    }
    let dec = decompose(data, chi)?;
    Ok(dec.mult.keys().all(|l| {
        let diff: Vec<i64> = top.iter().zip(l).map(|(x, y)| x - y).collect();
        data.to_integral_root_coords(&diff).is_some_and(|r| r.iter().all(|&x| x >= 0))
    }))
}

/// `Q(λ) = det(Q^{(1)}_{λ_i - i + j})` with `Q^{(1)}_0 = 1` and
/// `Q^{(1)}_i = 0` for `i < 0`; zero parts of `λ` are ignored.
pub fn jacobi_trudi_q(data: &AlgebraData, lambda: &[i64], provider: &dyn QProvider) -> Result<CharacterPoly> {
    let parts: Vec<i64> = lambda.iter().copied().filter(|&x| x != 0).collect();
    if parts.iter().any(|&x| x < 0) || parts.windows(2).any(|w| w[0] < w[1]) {
        return invalid(format!("{lambda:?} is not a partition"));
    }
    let l = parts.len();
    let mut entries: Vec<Vec<Option<CharacterPoly>>> = vec![vec![None; l]; l];
    for (i, row) in entries.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let idx = parts[i] - i as i64 + j as i64;
            if idx >= 0 {
                *cell = Some(q_value(data, provider, 1, idx)?);
            }
        }
    }
    let mut out = CharacterPoly::zero(data.rank());
    for (perm, sign) in permutations(l) {
        let mut term = CharacterPoly::one(data.rank());
        let mut vanished = false;
        for (i, &j) in perm.iter().enumerate() {
            match &entries[i][j] {
                Some(p) => term = &term * p,
                None => {
                    vanished = true;
                    break;
                }
            }
        }
        if !vanished {
            out = if sign > 0 { &out + &term } else { &out - &term };
        }
    }
    Ok(out)
}

/// All permutations of `0..l` with their signs.
fn permutations(l: usize) -> Vec<(Vec<usize>, i8)> {
    if l == 0 {
        return vec![(Vec::new(), 1)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(l - 1) {
        // Insert l-1 at position k; moving it from the end costs l-1-k swaps.
        for k in 0..l {
            let mut q = p.clone();
            q.insert(k, l - 1);
            let sign = if (l - 1 - k) % 2 == 0 { s } else { -s };
            out.push((q, sign));
        }
    }
    out
}

/// Outcome of the `B_n` determinant identities for one `(a, j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobiTrudiReport {
    /// `Q^{(a)}_{t_a j} = Q((j^a))`.
    pub rectangle: bool,
    /// For `a = n`: `Q^{(n)}_{2j+1} = Q^{(n)}_1 Σ_k (-1)^{j-k} Q((j^{n-1}, k))`.
    pub odd_spin: Option<bool>,
}

impl JacobiTrudiReport {
    /// True when every applicable identity holds.
    pub fn holds(&self) -> bool {
        self.rectangle && self.odd_spin.unwrap_or(true)
    }
}

/// Compares the domino-sum `χ` of `B_n` with the Jacobi-Trudi determinants.
pub fn jacobi_trudi_check(data: &AlgebraData, a: usize, j: i64) -> Result<JacobiTrudiReport> {
    if data.id.family() != Family::B {
        return Err(Error::Unsupported("the determinant identities are stated for B_n".into()));
    }
    let n = data.rank();
    if a == 0 || a > n || j < 0 {
        return invalid(format!("need 1 <= a <= {n} and j >= 0"));
    }
    let chi = ChiProvider::new(data)?;
    let ta = data.t_values[a - 1];
    let rect = jacobi_trudi_q(data, &vec![j; a], &chi)?;
    let rectangle = q_value(data, &chi, a, ta * j)? == rect;
    let odd_spin = if a == n {
        let mut alt = CharacterPoly::zero(n);
        for k in 0..=j {
            let mut shape = vec![j; n - 1];
            shape.push(k);
            let d = jacobi_trudi_q(data, &shape, &chi)?;
            // The top shape k = j must enter with sign +1, so the signs are
            // (-1)^(j-k); this differs from (-1)^k by (-1)^j.
            alt = if (j - k) % 2 == 0 { &alt + &d } else { &alt - &d };
        }
        let rhs = &q_value(data, &chi, n, 1)? * &alt;
        Some(q_value(data, &chi, n, 2 * j + 1)? == rhs)
    } else {
        None
    };
    Ok(JacobiTrudiReport { rectangle, odd_spin })
}

/// Numeric diagnostics for `χ^{(a)}_j / χ^{(a)}_{j+1} → x_a^{-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioReport {
    /// The sample point `x`.
    pub point: Vec<f64>,
    /// `|χ_j(x)/χ_{j+1}(x) · x_a - 1|` for `j = 1..`.
    pub errors: Vec<f64>,
    /// True when the errors never increase.
    pub monotone: bool,
    /// True when every ratio is exactly 1 (a constant provider).
    pub degenerate: bool,
    /// True when `|e^{α_b}| > 1` at the sample for every `b`.
    pub domain_ok: bool,
}

/// Default sample `x_b = exp(y (Λ̄_b|ρ̄))` with `y = 2`.
pub fn default_sample(data: &AlgebraData) -> Vec<f64> {
    (0..data.rank())
        .map(|b| {
            let s: Rat = data.bilinear_weights[b].iter().fold(Rat::zero(), |acc, x| acc + x);
            (2.0 * s.to_f64().unwrap_or(0.0)).exp()
        })
        .collect()
}

/// Evaluates the ratios for `j = 1..=j_max` at `sample` (or the default).
pub fn asymptotic_ratio_check(
    data: &AlgebraData,
    a: usize,
    j_max: i64,
    sample: Option<&[f64]>,
    provider: &dyn QProvider,
) -> Result<RatioReport> {
    let n = data.rank();
    if a == 0 || a > n {
        return invalid(format!("color {a} outside 1..={n}"));
    }
    let point = sample.map(|s| s.to_vec()).unwrap_or_else(|| default_sample(data));
    if point.len() != n || point.iter().any(|&x| !(x > 0.0)) {
        return invalid("sample point needs n positive coordinates");
    }
    let domain_ok = (0..n).all(|b| {
        let e: f64 = (0..n).map(|c| data.cartan[c][b] as f64 * point[c].ln()).sum();
        e > 0.0
    });
    let values: Vec<f64> = (1..=j_max + 1)
        .map(|j| q_value(data, provider, a, j).map(|p| p.eval_f64(&point)))
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = values.windows(2).map(|w| w[0] / w[1]).collect();
    let degenerate = ratios.iter().all(|&r| r == 1.0);
    let errors: Vec<f64> = ratios.iter().map(|r| (r * point[a - 1] - 1.0).abs()).collect();
    let monotone = errors.windows(2).all(|w| w[1] <= w[0]);
    Ok(RatioReport { point, errors, monotone, degenerate, domain_ok })
}
