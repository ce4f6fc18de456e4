//! Fermionic forms `M`, `M_l` and `N_l`.
//!
//! A configuration is an array `m^{(a)}_i` of non-negative integers. For
//! each color `a` it is a partition; the main enumerator walks the
//! conjugate partitions column by column, so that at index `i` the column
//! lengths `c^{(b)}_k = #{parts of color b of size >= k}` for `k <= i`
//! determine the vacancy number `p^{(a)}_i` exactly. This gives early
//! pruning for the `p >= 0` condition of `M` and `M_l`.
//!
//! The eliminated form of `M_l` over `H̄_l` and the plain partition
//! enumerator are separate code paths used for cross-checks.

use std::collections::{BTreeMap, HashMap};
use std::cell::RefCell;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qseries::{brace_at_one, poch_q, qbinom_brace, qbinom_bracket, LaurentPolyQ, TruncatedSeriesQ};
use crate::root_data::{algebra_data, kernel_k, rat, rat_to_i64, AlgebraData, AlgebraId, Family, Rat};

/// The multiset `ν^{(a)}_j` describing `W = ⊗ (W^{(a)}_j)^{⊗ ν^{(a)}_j}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TensorSpec {
    algebra: AlgebraId,
    nu: BTreeMap<(usize, i64), u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorJson {
    a: usize,
    s: i64,
    #[serde(default = "one_count")]
    count: u64,
}

fn one_count() -> u64 {
    1
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorSpecJson {
    algebra: AlgebraId,
    factors: Vec<FactorJson>,
}

impl TensorSpec {
    /// The empty tensor product.
    pub fn new(algebra: AlgebraId) -> Self {
        TensorSpec { algebra, nu: BTreeMap::new() }
    }

    /// Adds `count` copies of `W^{(a)}_j`.
    pub fn add(&mut self, a: usize, j: i64, count: u64) -> Result<()> {
        if a == 0 || a > self.algebra.rank() {
            return invalid(format!("color {a} outside 1..={} for {}", self.algebra.rank(), self.algebra));
        }
        if j < 1 {
            return invalid(format!("W^({a})_{j} needs j >= 1"));
        }
        if count > 0 {
            *self.nu.entry((a, j)).or_insert(0) += count;
        }
        Ok(())
    }

    /// Builder form of [`TensorSpec::add`].
    pub fn with(mut self, a: usize, j: i64, count: u64) -> Result<Self> {
        self.add(a, j, count)?;
        Ok(self)
    }

    /// Builds from `(a, j, count)` triples.
    pub fn from_factors(algebra: AlgebraId, factors: &[(usize, i64, u64)]) -> Result<Self> {
        let mut s = Self::new(algebra);
        for &(a, j, c) in factors {
            s.add(a, j, c)?;
        }
        Ok(s)
    }

    /// The algebra.
    pub fn algebra(&self) -> AlgebraId {
        self.algebra
    }

    /// `ν^{(a)}_j`.
    pub fn nu(&self, a: usize, j: i64) -> u64 {
        self.nu.get(&(a, j)).copied().unwrap_or(0)
    }

    /// Non-zero entries `((a, j), ν)`.
    pub fn support(&self) -> impl Iterator<Item = ((usize, i64), u64)> + '_ {
        self.nu.iter().map(|(k, v)| (*k, *v))
    }

    /// True for the empty product.
    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// Highest weight `Σ j ν^{(a)}_j Λ̄_a` in fundamental-weight coordinates.
    pub fn top_weight(&self) -> Vec<i64> {
        let mut w = vec![0i64; self.algebra.rank()];
        for (&(a, j), &c) in &self.nu {
            w[a - 1] += j * c as i64;
        }
        w
    }

    /// Largest `j` with `ν^{(a)}_j > 0` over all colors, 0 if empty.
    pub fn max_index(&self) -> i64 {
        self.nu.keys().map(|&(_, j)| j).max().unwrap_or(0)
    }

    /// True if every `(a, j)` in the support lies in `H_l`.
    pub fn inside_h(&self, data: &AlgebraData, l: i64) -> bool {
        self.nu.keys().all(|&(a, j)| j <= data.t_values[a - 1] * l)
    }

    /// Parses `{"algebra":"C2","factors":[{"a":1,"s":2,"count":1}]}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: TensorSpecJson =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("tensor spec: {e}")))?;
        let mut spec = TensorSpec::new(raw.algebra);
        for f in raw.factors {
            spec.add(f.a, f.s, f.count)?;
        }
        Ok(spec)
    }

    /// Serializes to the factor-list JSON form.
    pub fn to_json(&self) -> serde_json::Value {
        let raw = TensorSpecJson {
            algebra: self.algebra,
            factors: self.nu.iter().map(|(&(a, s), &count)| FactorJson { a, s, count }).collect(),
        };
        serde_json::to_value(raw).expect("serializable")
    }

    fn nu_table(&self) -> Vec<Vec<(i64, i64)>> {
        let mut t = vec![Vec::new(); self.algebra.rank()];
        for (&(a, j), &c) in &self.nu {
            t[a - 1].push((j, c as i64));
        }
        t
    }
}

/// `γ^{(a)}_j = Σ_k ν^{(a)}_k min(j, k)` and `μ_a = γ^{(a)}_∞ - λ_a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaMu {
    /// `γ^{(a)}_j` for `j = 1..=max index` of the tensor product (constant afterwards).
    pub gamma: Vec<Vec<i64>>,
    /// `μ_a`.
    pub mu: Vec<i64>,
}

/// Computes `γ` and `μ` for a spec and weight.
pub fn gamma_mu(spec: &TensorSpec, lambda: &[i64]) -> GammaMu {
    let n = spec.algebra.rank();
    let jmax = spec.max_index().max(1);
    let nu = spec.nu_table();
    let gamma = (0..n)
        .map(|a| (1..=jmax).map(|j| nu[a].iter().map(|&(k, c)| c * j.min(k)).sum()).collect())
        .collect();
    let top = spec.top_weight();
    let mu = (0..n).map(|a| top[a] - lambda[a]).collect();
    GammaMu { gamma, mu }
}

/// Per-color totals `N_a = (C^{-1}(Σ jν Λ̄ - λ))_a`, if they are all
/// non-negative integers.
pub fn weight_totals(data: &AlgebraData, spec: &TensorSpec, lambda: &[i64]) -> Option<Vec<i64>> {
    let top = spec.top_weight();
    let diff: Vec<i64> = top.iter().zip(lambda).map(|(a, b)| a - b).collect();
    let r = data.to_integral_root_coords(&diff)?;
    if r.iter().all(|&x| x >= 0) {
        Some(r)
    } else {
        None
    }
}

/// An array `m^{(a)}_i`; `m[a-1][i-1]` holds `m^{(a)}_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    /// Multiplicities per color, trailing zeros trimmed.
    pub m: Vec<Vec<i64>>,
}

impl Configuration {
    /// Builds and trims trailing zeros.
    pub fn new(mut m: Vec<Vec<i64>>) -> Self {
        for row in m.iter_mut() {
            while row.last() == Some(&0) {
                row.pop();
            }
        }
        Configuration { m }
    }

    /// `m^{(a)}_i` (1-based), zero outside the stored range.
    pub fn get(&self, a: usize, i: i64) -> i64 {
        if i < 1 {
            return 0;
        }
        self.m
            .get(a - 1)
            .and_then(|row| row.get((i - 1) as usize))
            .copied()
            .unwrap_or(0)
    }

    /// `Σ_i i m^{(a)}_i` per color.
    pub fn totals(&self) -> Vec<i64> {
        self.m
            .iter()
            .map(|row| row.iter().enumerate().map(|(i, &x)| (i as i64 + 1) * x).sum())
            .collect()
    }

    /// Largest part of color `a` (1-based), 0 if none.
    pub fn max_part(&self, a: usize) -> i64 {
        self.m.get(a - 1).map(|r| r.len() as i64).unwrap_or(0)
    }
}

/// Whether sums range over all `i` or over the window `H_l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// All `i >= 1`.
    Unrestricted,
    /// `(a, i) ∈ H_l`.
    Level(i64),
}

/// `p^{(a)}_i` by the direct formula; level mode restricts both sums to `H_l`.
pub fn vacancy(data: &AlgebraData, spec: &TensorSpec, m: &Configuration, a: usize, i: i64, mode: Mode) -> Result<i64> {
    let n = data.rank();
    if a == 0 || a > n || i < 1 {
        return invalid(format!("vacancy index ({a},{i}) out of range"));
    }
    let t = data.t;
    let ta = data.t_values[a - 1];
    let (jcap, kcap): (Box<dyn Fn(usize) -> i64>, i64) = match mode {
        Mode::Unrestricted => (Box::new(|_| i64::MAX), i64::MAX),
        Mode::Level(l) => {
            if i > ta * l {
                return invalid(format!("({a},{i}) is outside H_{l}"));
            }
            let tv = data.t_values.clone();
            (Box::new(move |b| tv[b] * l), ta * l)
        }
    };
    let mut scaled = 0i64;
    for ((aa, j), c) in spec.support() {
        if aa == a && j <= kcap {
            scaled += t * c as i64 * i.min(j);
        }
    }
    for b in 0..n {
        let f = data.form_t[a - 1][b];
        if f == 0 {
            continue;
        }
        let tb = data.t_values[b];
        let mut s = 0i64;
        for (k0, &mk) in m.m.get(b).map(|r| r.as_slice()).unwrap_or(&[]).iter().enumerate() {
            let k = k0 as i64 + 1;
            if mk != 0 && k <= jcap(b) {
                s += (tb * i).min(ta * k) * mk;
            }
        }
        scaled -= f * s;
    }
    if scaled % t != 0 {
        return Err(Error::Internal(format!("non-integral vacancy number at ({a},{i})")));
    }
    Ok(scaled / t)
}

/// `p^{(a)}_i = γ^{(a)}_i - μ_a + Σ_b C_{ab} Σ_{(t_b/t_a) i < k <= t_b l} (k - (t_b/t_a) i) m^{(b)}_k`.
///
/// Valid for configurations satisfying the weight constraint with `λ`.
pub fn vacancy_gamma_mu(data: &AlgebraData, spec: &TensorSpec, m: &Configuration, lambda: &[i64], a: usize, i: i64, l: i64) -> Rat {
    let gm = gamma_mu(spec, lambda);
    let ta = data.t_values[a - 1];
    let g: i64 = spec.support().filter(|&((aa, _), _)| aa == a).map(|((_, j), c)| c as i64 * i.min(j)).sum();
    let mut acc = rat(g - gm.mu[a - 1], 1);
    for b in 0..data.rank() {
        let cab = data.cartan[a - 1][b];
        if cab == 0 {
            continue;
        }
        let tb = data.t_values[b];
        let thr = rat(tb * i, ta);
        for k in 1..=tb * l {
            let mk = m.get(b + 1, k);
            if mk != 0 && rat(k, 1) > thr {
                acc += (rat(k, 1) - &thr) * rat(cab * mk, 1);
            }
        }
    }
    acc
}

/// `c({m})`, or the level form `c_l` restricted to `H_l`.
pub fn cocharge(data: &AlgebraData, spec: &TensorSpec, m: &Configuration, mode: Mode) -> Rat {
    let n = data.rank();
    let cap = |b: usize| match mode {
        Mode::Unrestricted => i64::MAX,
        Mode::Level(l) => data.t_values[b] * l,
    };
    let mut quad = rat(0, 1);
    for a in 0..n {
        for b in 0..n {
            let f = &data.bilinear_roots[a][b];
            if f.is_zero() {
                continue;
            }
            let (ta, tb) = (data.t_values[a], data.t_values[b]);
            let mut s = 0i64;
            for (j0, &mj) in m.m.get(a).map(|r| r.as_slice()).unwrap_or(&[]).iter().enumerate() {
                let j = j0 as i64 + 1;
                if mj == 0 || j > cap(a) {
                    continue;
                }
                for (k0, &mk) in m.m.get(b).map(|r| r.as_slice()).unwrap_or(&[]).iter().enumerate() {
                    let k = k0 as i64 + 1;
                    if mk != 0 && k <= cap(b) {
                        s += (tb * j).min(ta * k) * mj * mk;
                    }
                }
            }
            quad += f * rat(s, 1);
        }
    }
    let mut lin = 0i64;
    for ((a, j), c) in spec.support() {
        if j > cap(a - 1) {
            continue;
        }
        for (k0, &mk) in m.m.get(a - 1).map(|r| r.as_slice()).unwrap_or(&[]).iter().enumerate() {
            let k = k0 as i64 + 1;
            if k <= cap(a - 1) {
                lin += c as i64 * j.min(k) * mk;
            }
        }
    }
    quad / rat(2, 1) - rat(lin, 1)
}

/// `c_l` by the eliminated kernel form over `H̄_l`, including the
/// `-|Λ|^2/(2l)` constant.
pub fn cocharge_eliminated(data: &AlgebraData, spec: &TensorSpec, m: &Configuration, l: i64) -> Rat {
    let n = data.rank();
    let mut quad = rat(0, 1);
    for a in 0..n {
        let ta = data.t_values[a];
        for b in 0..n {
            let f = &data.bilinear_roots[a][b];
            if f.is_zero() {
                continue;
            }
            let tb = data.t_values[b];
            for j in 1..ta * l {
                let mj = m.get(a + 1, j);
                if mj == 0 {
                    continue;
                }
                for k in 1..tb * l {
                    let mk = m.get(b + 1, k);
                    if mk == 0 {
                        continue;
                    }
                    let kk = kernel_k(ta * tb * l, tb * j, ta * k).expect("l >= 1");
                    quad += f * kk * rat(mj * mk, 1);
                }
            }
        }
    }
    let mut lin = rat(0, 1);
    for a in 0..n {
        let ta = data.t_values[a];
        for j in 1..ta * l {
            let mj = m.get(a + 1, j);
            if mj == 0 {
                continue;
            }
            for i in 1..ta * l {
                let v = spec.nu(a + 1, i);
                if v != 0 {
                    lin += kernel_k(ta * l, i, j).expect("l >= 1") * rat(v as i64 * mj, 1);
                }
            }
        }
    }
    let lam: Vec<i64> = {
        let mut w = vec![0; n];
        for ((a, j), c) in spec.support() {
            if j <= data.t_values[a - 1] * l {
                w[a - 1] += j * c as i64;
            }
        }
        w
    };
    quad / rat(2, 1) - lin - data.weight_form(&lam, &lam) / rat(2 * l, 1)
}

/// `p^{(a)}_i` for `(a, i) ∈ H̄_l` by the kernel form.
pub fn vacancy_eliminated(data: &AlgebraData, spec: &TensorSpec, m: &Configuration, a: usize, i: i64, l: i64) -> Rat {
    let ta = data.t_values[a - 1];
    let mut acc = rat(0, 1);
    for j in 1..ta * l {
        let v = spec.nu(a, j);
        if v != 0 {
            acc += kernel_k(ta * l, i, j).expect("l >= 1") * rat(v as i64, 1);
        }
    }
    for b in 0..data.rank() {
        let f = &data.bilinear_roots[a - 1][b];
        if f.is_zero() {
            continue;
        }
        let tb = data.t_values[b];
        for k in 1..tb * l {
            let mk = m.get(b + 1, k);
            if mk != 0 {
                acc -= f * kernel_k(ta * tb * l, tb * i, ta * k).expect("l >= 1") * rat(mk, 1);
            }
        }
    }
    acc
}

/// One contributing configuration of a fermionic sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerRow {
    /// The configuration.
    pub m: Configuration,
    /// Vacancy numbers `p^{(a)}_i` for `i` up to the largest part of color `a`.
    pub p: Vec<Vec<i64>>,
    /// Exponent `c({m})`.
    pub cocharge: i64,
    /// `q^c Π [p+m, m]` (or the brace product).
    pub contribution: LaurentPolyQ,
}

/// Value of a fermionic sum with bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FermionicResult {
    /// The polynomial in the internal `q` convention.
    pub value: LaurentPolyQ,
    /// Configurations with non-zero contribution.
    pub configuration_count: u64,
    /// All configurations satisfying the weight constraint.
    pub total_configurations: BigInt,
    /// Per-configuration rows, sorted by configuration, when requested.
    pub ledger: Option<Vec<LedgerRow>>,
}

/// Knobs shared by the sum routines.
#[derive(Clone, Copy, Debug, Default)]
pub struct SumOptions {
    /// Collect a per-configuration ledger.
    pub ledger: bool,
    /// Shard the enumeration across the rayon pool.
    pub parallel: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symbol {
    Bracket,
    Brace,
}

thread_local! {
    static SYMBOL_CACHE: RefCell<HashMap<(bool, i64, i64), LaurentPolyQ>> = RefCell::new(HashMap::new());
}

fn symbol_poly(sym: Symbol, p: i64, m: i64) -> LaurentPolyQ {
    let key = (sym == Symbol::Brace, p, m);
    if let Some(v) = SYMBOL_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return v;
    }
    let v = match sym {
        Symbol::Bracket => qbinom_bracket(p, m),
        Symbol::Brace => qbinom_brace(p, m),
    }
    .expect("m >= 0");
    SYMBOL_CACHE.with(|c| c.borrow_mut().insert(key, v.clone()));
    v
}

/// Number of partitions of `n` with parts at most `k`.
fn partition_count(n: i64, k: i64) -> BigInt {
    if n < 0 {
        return BigInt::zero();
    }
    let n = n as usize;
    let mut dp = vec![BigInt::zero(); n + 1];
    dp[0] = BigInt::one();
    for part in 1..=(k.max(0) as usize).min(n) {
        for s in part..=n {
            let add = dp[s - part].clone();
            dp[s] += add;
        }
    }
    dp[n].clone()
}

/// Column-wise configuration enumerator shared by `M`, `M_l`, `N_l`.
struct Engine {
    n: usize,
    t: i64,
    ta: Vec<i64>,
    sa: Vec<i64>,
    form_t: Vec<Vec<i64>>,
    deps: Vec<Vec<usize>>,
    nu: Vec<Vec<(i64, i64)>>,
    totals: Vec<i64>,
    level: Option<i64>,
    symbol: Symbol,
    order: Vec<usize>,
}

#[derive(Clone)]
struct State {
    cols: Vec<Vec<i64>>,
    pref: Vec<Vec<i64>>,
    vac: Vec<Vec<i64>>,
    factors: Vec<(i64, i64)>,
}

struct Sink {
    value: BTreeMap<i64, BigInt>,
    count: u64,
    ledger: Option<Vec<LedgerRow>>,
    at_one: Option<BigInt>,
    frontier: Option<(i64, Vec<State>)>,
}

impl Sink {
    fn new(ledger: bool) -> Self {
        Sink { value: BTreeMap::new(), count: 0, ledger: ledger.then(Vec::new), at_one: None, frontier: None }
    }

    fn merge(&mut self, other: Sink) {
        for (e, c) in other.value {
            *self.value.entry(e).or_default() += c;
        }
        self.count += other.count;
        if let (Some(a), Some(b)) = (self.ledger.as_mut(), other.ledger) {
            a.extend(b);
        }
        if let (Some(a), Some(b)) = (self.at_one.as_mut(), other.at_one) {
            *a += b;
        }
    }
}

impl Engine {
    fn new(data: &AlgebraData, spec: &TensorSpec, totals: Vec<i64>, level: Option<i64>, symbol: Symbol) -> Self {
        let n = data.rank();
        let t = data.t;
        let ta = data.t_values.clone();
        let sa = ta.iter().map(|&x| t / x).collect();
        let deps = (0..n)
            .map(|a| {
                let mut d = vec![a];
                d.extend(data.neighbors[a].iter().copied());
                d
            })
            .collect();
        // Breadth-first order along the Dynkin tree from node 1.
        let mut order = vec![0usize];
        let mut k = 0;
        while k < order.len() {
            for &b in &data.neighbors[order[k]] {
                if !order.contains(&b) {
                    order.push(b);
                }
            }
            k += 1;
        }
        Engine {
            n,
            t,
            ta,
            sa,
            form_t: data.form_t.clone(),
            deps,
            nu: spec.nu_table(),
            totals,
            level,
            symbol,
            order,
        }
    }

    fn gamma(&self, a: usize, i: i64) -> i64 {
        self.nu[a].iter().map(|&(j, c)| c * i.min(j)).sum()
    }

    fn cap(&self, b: usize) -> Option<i64> {
        self.level.map(|l| self.ta[b] * l)
    }

    /// `t · S_ab(i)` contribution uses prefix sums of color `b`.
    fn vacancy_now(&self, st: &State, a: usize, i: i64) -> i64 {
        let mut scaled = self.t * self.gamma(a, i);
        let u = self.ta[a];
        for &b in &self.deps[a] {
            let y = self.ta[b] * i;
            let q = y / u;
            let r = y % u;
            let pref = &st.pref[b];
            let rq = pref[(q as usize).min(pref.len() - 1)];
            let extra = if r != 0 {
                st.cols[b].get(q as usize).copied().unwrap_or(0)
            } else {
                0
            };
            let s = u * rq + r * extra;
            scaled -= self.form_t[a][b] * s;
        }
        debug_assert_eq!(scaled % self.t, 0);
        scaled / self.t
    }

    fn schedule(&self, x: i64) -> (Vec<usize>, Vec<Vec<usize>>) {
        let choosing: Vec<usize> = self.order.iter().copied().filter(|&b| (x - 1) % self.sa[b] == 0).collect();
        let mut eval_before: Vec<Vec<usize>> = vec![Vec::new(); choosing.len() + 1];
        for a in 0..self.n {
            if x % self.sa[a] != 0 {
                continue;
            }
            let i = x / self.sa[a];
            if let Some(c) = self.cap(a) {
                if i > c {
                    continue;
                }
            }
            let trigger = self.deps[a]
                .iter()
                .filter_map(|b| choosing.iter().position(|c| c == b))
                .map(|p| p + 1)
                .max()
                .unwrap_or(0);
            eval_before[trigger].push(a);
        }
        (choosing, eval_before)
    }

    fn finished(&self, st: &State, x: i64) -> bool {
        for b in 0..self.n {
            if *st.pref[b].last().expect("nonempty") != self.totals[b] {
                return false;
            }
            if st.cols[b].last().copied().unwrap_or(1) != 0 {
                return false;
            }
        }
        match self.level {
            Some(l) => x % self.t == 0 || x > self.t * l,
            None => x % self.t == 0,
        }
    }

    fn run(&self, st: &mut State, x: i64, sink: &mut Sink) {
        if let Some((depth, ref mut out)) = sink.frontier {
            if x > depth {
                out.push(st.clone());
                return;
            }
        }
        let (choosing, eval_before) = self.schedule(x);
        self.choose(st, x, 0, &choosing, &eval_before, sink);
    }

    fn evaluate(&self, st: &mut State, x: i64, list: &[usize]) -> Option<usize> {
        for (done, &a) in list.iter().enumerate() {
            let i = x / self.sa[a];
            let p = self.vacancy_now(st, a, i);
            if self.symbol == Symbol::Bracket && p < 0 {
                for &b in &list[..done] {
                    st.vac[b].pop();
                }
                return None;
            }
            st.vac[a].push(p);
        }
        Some(list.len())
    }

    fn unevaluate(&self, st: &mut State, list: &[usize]) {
        for &a in list {
            st.vac[a].pop();
        }
    }

    fn choose(&self, st: &mut State, x: i64, pos: usize, choosing: &[usize], eval_before: &[Vec<usize>], sink: &mut Sink) {
        if self.evaluate(st, x, &eval_before[pos]).is_none() {
            return;
        }
        if pos == choosing.len() {
            if self.finished(st, x) {
                self.leaf(st, sink);
            } else {
                self.run(st, x + 1, sink);
            }
            self.unevaluate(st, &eval_before[pos]);
            return;
        }
        let b = choosing[pos];
        let k = st.cols[b].len() as i64 + 1;
        let r = *st.pref[b].last().expect("nonempty");
        let remaining = self.totals[b] - r;
        let prev = st.cols[b].last().copied().unwrap_or(self.totals[b]);
        let (lo, hi) = if remaining == 0 {
            (0, 0)
        } else {
            match self.cap(b) {
                Some(c) if k > c => (1, 0),
                Some(c) => {
                    let slots = c - k + 1;
                    ((remaining + slots - 1) / slots, prev.min(remaining))
                }
                None => (1, prev.min(remaining)),
            }
        };
        let mut v = hi;
        while v >= lo {
            // The multiplicity m^{(b)}_{k-1} becomes known with this column.
            let mut pushed_factor = false;
            if k >= 2 {
                let mprev = st.cols[b][(k - 2) as usize] - v;
                if mprev > 0 {
                    let p = st.vac[b].get((k - 2) as usize).copied();
                    match p {
                        Some(p) => {
                            st.factors.push((p, mprev));
                            pushed_factor = true;
                        }
                        None => {
                            // Index beyond the level window: only allowed when p is not needed.
                            debug_assert!(self.level.is_some());
                        }
                    }
                }
            }
            st.cols[b].push(v);
            st.pref[b].push(r + v);
            self.choose(st, x, pos + 1, choosing, eval_before, sink);
            st.cols[b].pop();
            st.pref[b].pop();
            if pushed_factor {
                st.factors.pop();
            }
            v -= 1;
        }
        self.unevaluate(st, &eval_before[pos]);
    }

    fn configuration(&self, st: &State) -> Configuration {
        let m = st
            .cols
            .iter()
            .map(|c| (0..c.len()).map(|i| c[i] - c.get(i + 1).copied().unwrap_or(0)).collect())
            .collect();
        Configuration::new(m)
    }

    /// `2t · c({m})` from the configuration, restricted by level when set.
    fn cocharge2t(&self, cfg: &Configuration) -> i64 {
        let mut quad = 0i64;
        for a in 0..self.n {
            for &b in &self.deps[a] {
                let f = self.form_t[a][b];
                let (ta, tb) = (self.ta[a], self.ta[b]);
                let mut s = 0i64;
                for (j0, &mj) in cfg.m[a].iter().enumerate() {
                    if mj == 0 {
                        continue;
                    }
                    for (k0, &mk) in cfg.m[b].iter().enumerate() {
                        if mk != 0 {
                            s += (tb * (j0 as i64 + 1)).min(ta * (k0 as i64 + 1)) * mj * mk;
                        }
                    }
                }
                quad += f * s;
            }
        }
        let mut lin = 0i64;
        for a in 0..self.n {
            for &(j, c) in &self.nu[a] {
                for (k0, &mk) in cfg.m[a].iter().enumerate() {
                    lin += c * j.min(k0 as i64 + 1) * mk;
                }
            }
        }
        quad - 2 * self.t * lin
    }

    fn leaf(&self, st: &State, sink: &mut Sink) {
        if let Some(acc) = sink.at_one.as_mut() {
            let mut prod = BigInt::one();
            for &(p, m) in &st.factors {
                prod *= brace_at_one(p, m);
                if prod.is_zero() {
                    return;
                }
            }
            *acc += prod;
            sink.count += 1;
            return;
        }
        let mut poly = LaurentPolyQ::one();
        for &(p, m) in &st.factors {
            if self.symbol == Symbol::Bracket && (p == 0 || m == 0) {
                continue;
            }
            let f = symbol_poly(self.symbol, p, m);
            if f.is_zero() {
                return;
            }
            poly = &poly * &f;
        }
        let cfg = self.configuration(st);
        let c2t = self.cocharge2t(&cfg);
        assert_eq!(c2t % (2 * self.t), 0, "non-integral cocharge");
        let c = c2t / (2 * self.t);
        let contribution = poly.shift(c);
        for (e, coef) in contribution.terms() {
            *sink.value.entry(e).or_default() += coef;
        }
        sink.count += 1;
        if let Some(ledger) = sink.ledger.as_mut() {
            let p = (0..self.n).map(|a| st.vac[a][..cfg.m[a].len()].to_vec()).collect();
            ledger.push(LedgerRow { m: cfg, p, cocharge: c, contribution });
        }
    }

    fn initial_state(&self) -> State {
        State {
            cols: vec![Vec::new(); self.n],
            pref: vec![vec![0]; self.n],
            vac: vec![Vec::new(); self.n],
            factors: Vec::new(),
        }
    }

    fn execute(&self, opts: SumOptions, at_one: bool) -> Sink {
        let mut st = self.initial_state();
        let fresh = || {
            let mut s = Sink::new(opts.ledger);
            if at_one {
                s.at_one = Some(BigInt::zero());
            }
            s
        };
        if !opts.parallel {
            let mut sink = fresh();
            self.run(&mut st, 1, &mut sink);
            return sink;
        }
        let depth = 2 * self.t;
        let mut head = fresh();
        head.frontier = Some((depth, Vec::new()));
        self.run(&mut st, 1, &mut head);
        let (_, shards) = head.frontier.take().expect("frontier set");
        let parts: Vec<Sink> = shards
            .into_par_iter()
            .map(|mut s| {
                let mut sink = fresh();
                self.run(&mut s, depth + 1, &mut sink);
                sink
            })
            .collect();
        for p in parts {
            head.merge(p);
        }
        head
    }
}

fn finish(sink: Sink, total: BigInt) -> FermionicResult {
    let mut ledger = sink.ledger;
    if let Some(l) = ledger.as_mut() {
        l.sort_by(|a, b| a.m.cmp(&b.m));
    }
    let value = LaurentPolyQ::from_terms(sink.value);
    FermionicResult { value, configuration_count: sink.count, total_configurations: total, ledger }
}

fn total_count(totals: &[i64], caps: impl Fn(usize) -> i64) -> BigInt {
    totals.iter().enumerate().fold(BigInt::one(), |acc, (b, &nb)| acc * partition_count(nb, caps(b)))
}

fn empty_result() -> FermionicResult {
    FermionicResult {
        value: LaurentPolyQ::zero(),
        configuration_count: 0,
        total_configurations: BigInt::zero(),
        ledger: None,
    }
}

fn check_algebra(data: &AlgebraData, spec: &TensorSpec) -> Result<()> {
    if data.id != spec.algebra {
        return invalid(format!("spec is for {} but data is for {}", spec.algebra, data.id));
    }
    Ok(())
}

/// `M(W, λ, q)`: sum over configurations with all `p^{(a)}_i >= 0` of
/// `q^{c} Π [p+m, m]_q`.
pub fn fermionic_m(data: &AlgebraData, spec: &TensorSpec, lambda: &[i64], opts: SumOptions) -> Result<FermionicResult> {
    check_algebra(data, spec)?;
    let Some(totals) = weight_totals(data, spec, lambda) else {
        return Ok(empty_result());
    };
    if lambda.iter().any(|&x| x < 0) {
        // p_∞ = λ_a must be non-negative.
        return Ok(FermionicResult { total_configurations: total_count(&totals, |_| i64::MAX), ..empty_result() });
    }
    let engine = Engine::new(data, spec, totals.clone(), None, Symbol::Bracket);
    let sink = engine.execute(opts, false);
    let res = finish(sink, total_count(&totals, |b| totals[b]));
    if !res.value.has_nonnegative_coeffs() || !res.value.in_q_inverse_ring() {
        return Err(Error::Internal(format!("M outside Z>=0[q^-1]: {}", res.value)));
    }
    Ok(res)
}

/// `M_l(W, q)` via the window `H_l` with `p^{(a)}_{t_a l} = 0` built in.
pub fn fermionic_m_l(data: &AlgebraData, spec: &TensorSpec, l: i64, opts: SumOptions) -> Result<FermionicResult> {
    check_algebra(data, spec)?;
    if l < 1 {
        return invalid("level needs l >= 1");
    }
    if !spec.inside_h(data, l) {
        return invalid(format!("spec support is not inside H_{l}"));
    }
    let zero = vec![0; data.rank()];
    let Some(totals) = weight_totals(data, spec, &zero) else {
        return Ok(empty_result());
    };
    let engine = Engine::new(data, spec, totals.clone(), Some(l), Symbol::Bracket);
    let sink = engine.execute(opts, false);
    let res = finish(sink, total_count(&totals, |b| data.t_values[b] * l));
    if !res.value.has_nonnegative_coeffs() || !res.value.in_q_inverse_ring() {
        return Err(Error::Internal(format!("M_l outside Z>=0[q^-1]: {}", res.value)));
    }
    Ok(res)
}

/// `M_l(W, q)` via the eliminated form over `H̄_l`.
pub fn fermionic_m_l_eliminated(data: &AlgebraData, spec: &TensorSpec, l: i64) -> Result<LaurentPolyQ> {
    check_algebra(data, spec)?;
    if l < 1 {
        return invalid("level needs l >= 1");
    }
    if !spec.inside_h(data, l) {
        return invalid(format!("spec support is not inside H_{l}"));
    }
    let n = data.rank();
    let zero = vec![0; n];
    let Some(totals) = weight_totals(data, spec, &zero) else {
        return Ok(LaurentPolyQ::zero());
    };
    // Per color: all m_1..m_{t_a l - 1} with Σ k m_k <= N_a and
    // N_a - Σ k m_k divisible by t_a l.
    let per_color: Vec<Vec<Vec<i64>>> = (0..n)
        .map(|a| {
            let top = data.t_values[a] * l - 1;
            let mut out = Vec::new();
            let mut cur = vec![0i64; top.max(0) as usize];
            fn rec(k: i64, left: i64, modulus: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
                if k == 0 {
                    if left % modulus == 0 {
                        out.push(cur.clone());
                    }
                    return;
                }
                let mut x = 0;
                while x * k <= left {
                    cur[(k - 1) as usize] = x;
                    rec(k - 1, left - x * k, modulus, cur, out);
                    x += 1;
                }
                cur[(k - 1) as usize] = 0;
            }
            rec(top, totals[a], top + 1, &mut cur, &mut out);
            out
        })
        .collect();
    let mut value = LaurentPolyQ::zero();
    let mut idx = vec![0usize; n];
    if per_color.iter().any(|v| v.is_empty()) {
        return Ok(value);
    }
    loop {
        let mut rows: Vec<Vec<i64>> = (0..n).map(|a| per_color[a][idx[a]].clone()).collect();
        for a in 0..n {
            let used: i64 = rows[a].iter().enumerate().map(|(k, &x)| (k as i64 + 1) * x).sum();
            let last = data.t_values[a] * l;
            rows[a].push((totals[a] - used) / last);
        }
        let cfg = Configuration::new(rows);
        let mut ok = true;
        let mut poly = LaurentPolyQ::one();
        'outer: for a in 1..=n {
            for i in 1..data.t_values[a - 1] * l {
                let p = vacancy_eliminated(data, spec, &cfg, a, i, l);
                let p = rat_to_i64(&p).ok_or_else(|| Error::Internal("fractional vacancy".into()))?;
                if p < 0 {
                    ok = false;
                    break 'outer;
                }
                let m = cfg.get(a, i);
                if m > 0 && p > 0 {
                    poly = &poly * &symbol_poly(Symbol::Bracket, p, m);
                }
            }
        }
        if ok {
            let c = cocharge_eliminated(data, spec, &cfg, l);
            let c = rat_to_i64(&c).ok_or_else(|| Error::Internal(format!("fractional c_l = {c}")))?;
            value += &poly.shift(c);
        }
        // Odometer over the per-color choices.
        let mut a = 0;
        loop {
            if a == n {
                return Ok(value);
            }
            idx[a] += 1;
            if idx[a] < per_color[a].len() {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// `N_l(W, λ, q)` with brace symbols; `level = None` gives `N_∞`.
pub fn fermionic_n_l(data: &AlgebraData, spec: &TensorSpec, lambda: &[i64], level: Option<i64>, opts: SumOptions) -> Result<FermionicResult> {
    check_algebra(data, spec)?;
    if let Some(l) = level {
        if l < 1 {
            return invalid("level needs l >= 1");
        }
        if !spec.inside_h(data, l) {
            return invalid(format!("spec support is not inside H_{l}"));
        }
    }
    let Some(totals) = weight_totals(data, spec, lambda) else {
        return Ok(empty_result());
    };
    let engine = Engine::new(data, spec, totals.clone(), level, Symbol::Brace);
    let sink = engine.execute(opts, false);
    let caps = |b: usize| level.map(|l| data.t_values[b] * l).unwrap_or(totals[b]);
    Ok(finish(sink, total_count(&totals, caps)))
}

/// `N_∞(W, λ, 1)` as an exact integer.
pub fn fermionic_n_at_one(data: &AlgebraData, spec: &TensorSpec, lambda: &[i64], parallel: bool) -> Result<BigInt> {
    check_algebra(data, spec)?;
    let Some(totals) = weight_totals(data, spec, lambda) else {
        return Ok(BigInt::zero());
    };
    let engine = Engine::new(data, spec, totals, None, Symbol::Brace);
    let sink = engine.execute(SumOptions { ledger: false, parallel }, true);
    Ok(sink.at_one.expect("at_one mode"))
}

/// Which weight constraint an explicit enumeration honours.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// `Σ_i i m^{(a)}_i = N_a` for weight `λ`, parts unbounded.
    Lambda(Vec<i64>),
    /// Level window `H_l` with `λ = 0`.
    Level(i64),
    /// Level window `H_l` with weight `λ`.
    LevelLambda(i64, Vec<i64>),
}

/// Lists every configuration satisfying the constraint, color-major and
/// length-minor, with no vacancy condition.
pub fn enumerate_configurations(data: &AlgebraData, spec: &TensorSpec, constraint: &Constraint) -> Vec<Configuration> {
    let n = data.rank();
    let zero = vec![0; n];
    let (lambda, level) = match constraint {
        Constraint::Lambda(l) => (l.as_slice(), None),
        Constraint::Level(l) => (zero.as_slice(), Some(*l)),
        Constraint::LevelLambda(l, lam) => (lam.as_slice(), Some(*l)),
    };
    let Some(totals) = weight_totals(data, spec, lambda) else {
        return Vec::new();
    };
    let per_color: Vec<Vec<Vec<i64>>> = (0..n)
        .map(|a| {
            let cap = level.map(|l| data.t_values[a] * l).unwrap_or(totals[a]).max(0);
            partitions_as_multiplicities(totals[a], cap)
        })
        .collect();
    let mut out = Vec::new();
    let mut cur: Vec<Vec<i64>> = Vec::new();
    fn rec(a: usize, per: &[Vec<Vec<i64>>], cur: &mut Vec<Vec<i64>>, out: &mut Vec<Configuration>) {
        if a == per.len() {
            out.push(Configuration::new(cur.clone()));
            return;
        }
        for p in &per[a] {
            cur.push(p.clone());
            rec(a + 1, per, cur, out);
            cur.pop();
        }
    }
    rec(0, &per_color, &mut cur, &mut out);
    out
}

/// All partitions of `n` with parts `<= cap`, as multiplicity vectors,
/// ordered by number of parts then lexicographically.
pub fn partitions_as_multiplicities(n: i64, cap: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![0i64; cap.max(0) as usize];
    fn rec(k: i64, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        if k == 0 {
            return;
        }
        let mut x = left / k;
        while x >= 0 {
            cur[(k - 1) as usize] = x;
            rec(k - 1, left - x * k, cur, out);
            x -= 1;
        }
        cur[(k - 1) as usize] = 0;
    }
    if n >= 0 {
        rec(cap.max(0), n, &mut cur, &mut out);
    }
    out.sort_by_key(|m| (m.iter().sum::<i64>(), m.clone()));
    out
}

/// Level-one reduction to the subalgebra `Z_n`: returns `(ν', t)` with
/// `M̄_1(W) for X_n = M̄_t(W') for Z_n`.
pub fn reduce_level_one(data: &AlgebraData, spec: &TensorSpec) -> Result<(TensorSpec, i64)> {
    check_algebra(data, spec)?;
    if data.id.is_simply_laced() {
        return invalid(format!("{} is simply laced; the level-one sum is trivial", data.id));
    }
    if !spec.inside_h(data, 1) {
        return invalid("spec support is not inside H_1");
    }
    let zero = vec![0; data.rank()];
    if data.to_integral_root_coords(&spec.top_weight()).is_none()
        || weight_totals(data, spec, &zero).is_none()
    {
        return invalid("level-one integrality fails: Σ jν Λ̄ is not in the root lattice");
    }
    let n = data.rank();
    let z = data.z_algebra.expect("non-simply-laced");
    let nu = |a: usize, j: i64| rat(spec.nu(a, j) as i64, 1);
    let mut entries: Vec<(usize, i64, Rat)> = Vec::new();
    match data.id.family() {
        Family::B => {
            entries.push((1, 1, nu(n, 1)));
            let mut v = rat(0, 1);
            for a in 1..n {
                v += rat(a as i64, 1) * nu(a, 1);
            }
            v += rat(n as i64 - 1, 2) * nu(n, 1) + rat(n as i64, 1) * nu(n, 2);
            entries.push((1, 2, v));
        }
        Family::C => {
            let mut s = rat(0, 1);
            for a in 1..n {
                s += rat(a as i64, 1) * (nu(a, 1) + rat(2, 1) * nu(a, 2));
            }
            s += rat(n as i64, 1) * nu(n, 1);
            for a in 1..n {
                entries.push((a, 1, nu(a, 1)));
                let mut v = nu(a, 2);
                if a == n - 1 {
                    v += &s / rat(2, 1);
                }
                entries.push((a, 2, v));
            }
        }
        Family::F => {
            entries.push((1, 1, nu(3, 1)));
            entries.push((2, 1, nu(4, 1)));
            entries.push((2, 2, nu(4, 2)));
            let v = rat(3, 1) * nu(1, 1) + rat(6, 1) * nu(2, 1) + rat(4, 1) * nu(3, 1) + rat(9, 1) * nu(3, 2)
                + rat(2, 1) * nu(4, 1)
                + rat(4, 1) * nu(4, 2);
            entries.push((1, 2, v));
        }
        Family::G => {
            // ν^(2)_3 sits on the boundary of H_1 and does not enter ν'.
            entries.push((1, 1, nu(2, 1)));
            entries.push((1, 2, nu(2, 2)));
            entries.push((1, 3, rat(2, 1) * nu(1, 1) + nu(2, 1) + rat(2, 1) * nu(2, 2)));
        }
        _ => unreachable!("simply-laced handled above"),
    }
    let mut out = TensorSpec::new(z);
    for (a, j, v) in entries {
        let k = rat_to_i64(&v).ok_or_else(|| Error::Invalid(format!("ν'^({a})_{j} = {v} is not an integer")))?;
        if k < 0 {
            return Err(Error::Internal("negative ν'".into()));
        }
        out.add(a, j, k as u64)?;
    }
    Ok((out, data.t))
}

/// The exponent `|Λ|^2/(2l)` with `Λ = Σ jν Λ̄` relating `M̄_l = q^{|Λ|^2/(2l)} M_l`.
pub fn m_bar_shift(data: &AlgebraData, spec: &TensorSpec, l: i64) -> Rat {
    let lam = spec.top_weight();
    data.weight_form(&lam, &lam) / rat(2 * l, 1)
}

/// Checks `M̄_1(W)` for `X_n` against `M̄_t(W')` for `Z_n`.
///
/// The `M̄` shifts may be fractional; only their difference must be an
/// integer, and a fractional difference counts as a mismatch.
pub fn level_one_reduction_holds(data: &AlgebraData, spec: &TensorSpec) -> Result<bool> {
    let (w2, t) = reduce_level_one(data, spec)?;
    let z = algebra_data(w2.algebra());
    let lhs = fermionic_m_l(data, spec, 1, SumOptions::default())?.value;
    let rhs = fermionic_m_l(&z, &w2, t, SumOptions::default())?.value;
    let delta = m_bar_shift(data, spec, 1) - m_bar_shift(&z, &w2, t);
    Ok(match rat_to_i64(&delta) {
        Some(k) => lhs.shift(k) == rhs,
        None => lhs.is_zero() && rhs.is_zero(),
    })
}

/// Rational configuration `m^{(a)}_{j,0}` at the minimum of `c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalConfiguration {
    /// Non-zero entries `((a, j), m)`.
    pub entries: BTreeMap<(usize, i64), Rat>,
}

/// The stationary point of `c` for `W = (W^{(r)}_s)^{⊗L}`.
///
/// Verifies the stationarity equations and `Σ j m α = Ls Λ̄_r` exactly;
/// an error signals a formula mismatch.
pub fn critical_configuration(data: &AlgebraData, r: usize, s: i64, big_l: &Rat) -> Result<CriticalConfiguration> {
    let n = data.rank();
    if r == 0 || r > n || s < 1 {
        return invalid("critical configuration needs 1 <= r <= n and s >= 1");
    }
    let tr = data.t_values[r - 1];
    let ta = |a: usize| data.t_values[a - 1];
    let mut e: BTreeMap<(usize, i64), Rat> = BTreeMap::new();
    let mut put = |a: usize, j: Rat, v: Rat| -> Result<()> {
        if v.is_zero() {
            return Ok(());
        }
        let j = rat_to_i64(&j).ok_or_else(|| Error::Internal("fractional string length".into()))?;
        // A delta at j = 0 selects no string.
        if j == 0 {
            return Ok(());
        }
        if j < 0 {
            return Err(Error::Internal(format!("string length {j} < 0")));
        }
        let slot = e.entry((a, j)).or_insert_with(|| rat(0, 1));
        *slot += v;
        if slot.is_zero() {
            e.remove(&(a, j));
        }
        Ok(())
    };
    let l = big_l.clone();
    if s % tr == 0 {
        for a in 1..=n {
            put(a, rat(ta(a) * s, tr), &l * &data.inv_cartan[r - 1][a - 1])?;
        }
    } else {
        match data.id.family() {
            Family::B => {
                for a in 1..n {
                    let v = &l * rat(a as i64, 2);
                    put(a, rat(s - 1, 2), v.clone())?;
                    put(a, rat(s + 1, 2), v)?;
                }
                let v = &l * rat(n as i64 - 1, 4);
                put(n, rat(s - 1, 1), v.clone())?;
                put(n, rat(s + 1, 1), v)?;
                put(n, rat(s, 1), &l * rat(2, 4))?;
            }
            Family::C => {
                let nn = n as i64;
                for a in 1..=n {
                    let ai = a as i64;
                    let v = &l * rat(ai * r as i64, 2 * nn);
                    put(a, rat(ta(a) * (s - 1), 2), v.clone())?;
                    put(a, rat(ta(a) * (s + 1), 2), v)?;
                    let w = &l * (rat(ai.min(r as i64), 1) - rat(ai * r as i64, nn));
                    put(a, rat(ta(a) * s, 2), w)?;
                }
            }
            Family::F => {
                let d = |x: bool| if x { 1i64 } else { 0 };
                let c1 = &l * rat(2 * d(r == 3) + d(r == 4), 3);
                let c2 = &l * rat(d(r == 3) + 2 * d(r == 4), 3);
                for a in 1..=n {
                    let v = &c1 * &data.inv_cartan[1][a - 1];
                    put(a, rat(ta(a) * (s - 1), 2), v.clone())?;
                    put(a, rat(ta(a) * (s + 1), 2), v)?;
                    if a == 3 {
                        put(a, rat(s, 1), c1.clone())?;
                    }
                    if a == 4 {
                        put(a, rat(s, 1), c2.clone())?;
                    }
                }
            }
            Family::G => {
                if s % 3 == 1 {
                    put(1, rat(s - 1, 3), &l * rat(2, 1))?;
                    put(1, rat(s + 2, 3), l.clone())?;
                    put(2, rat(s - 1, 1), l.clone())?;
                    put(2, rat(s, 1), &l * rat(1, 2))?;
                    put(2, rat(s + 2, 1), &l * rat(1, 2))?;
                } else {
                    put(1, rat(s - 2, 3), l.clone())?;
                    put(1, rat(s + 1, 3), &l * rat(2, 1))?;
                    put(2, rat(s - 2, 1), &l * rat(1, 2))?;
                    put(2, rat(s, 1), &l * rat(1, 2))?;
                    put(2, rat(s + 1, 1), l.clone())?;
                }
            }
            _ => unreachable!("simply-laced types have t_r = 1"),
        }
    }
    let cc = CriticalConfiguration { entries: e };
    let res = critical_residual(data, r, s, big_l, &cc);
    if !res.is_zero() {
        return Err(Error::Internal(format!("stationarity residual {res} for {} r={r} s={s}", data.id)));
    }
    let mut lhs = vec![rat(0, 1); n];
    for (&(a, j), v) in &cc.entries {
        lhs[a - 1] += rat(j, 1) * v;
    }
    let mut rhs_w = vec![0i64; n];
    rhs_w[r - 1] = s;
    let rhs: Vec<Rat> = data.to_root_coords(&rhs_w).into_iter().map(|x| x * big_l).collect();
    if lhs != rhs {
        return Err(Error::Internal("Σ j m α differs from Ls Λ̄_r".into()));
    }
    Ok(cc)
}

/// Largest absolute residual of the stationarity equations over `j <= jmax`.
pub fn critical_residual(data: &AlgebraData, r: usize, s: i64, big_l: &Rat, cc: &CriticalConfiguration) -> Rat {
    let n = data.rank();
    let jmax = cc.entries.keys().map(|&(_, j)| j).max().unwrap_or(1).max(s) * data.t + 2;
    let mut worst = rat(0, 1);
    for a in 1..=n {
        let ta = data.t_values[a - 1];
        for j in 1..=jmax {
            let mut acc = rat(0, 1);
            for (&(b, k), v) in &cc.entries {
                let tb = data.t_values[b - 1];
                acc += &data.bilinear_roots[a - 1][b - 1] * rat((tb * j).min(ta * k), 1) * v;
            }
            if a == r {
                acc -= big_l * rat(s.min(j), 1);
            }
            if acc.abs() > worst {
                worst = acc.abs();
            }
        }
    }
    worst
}

/// Largest ζ box radius tried before giving up on convergence.
pub const MAX_ZETA_BOX: i64 = 12;

/// Outcome of the truncated stabilization check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinonReport {
    /// Degree cap.
    pub cap: i64,
    /// Right-hand side coefficients for exponents `0..=cap`.
    pub rhs: Vec<BigInt>,
    /// Per `L`: `(L, c0, coefficients of q^{-c0} M for 0..=cap)`.
    pub lhs: Vec<(i64, i64, Vec<BigInt>)>,
    /// Smallest `L` from which every later `L` matches the right side.
    pub stable_from: Option<i64>,
    /// ζ-box radius used for the right side.
    pub zeta_box: i64,
    /// True if enlarging the ζ box by one did not change the right side.
    pub zeta_converged: bool,
}

/// Compares `q^{-c0} M((W^{(r)}_s)^{⊗L}, λ, q)` truncated at `cap` with
/// the ζ-sum of products of `M(W(ζ), λ, q^{-1})` and
/// `M_{s/t_r}(W(ζ), q^{-1})` over `Π (q)_{ζ_a}`.
pub fn spinon_stabilization_check(
    data: &AlgebraData,
    r: usize,
    s: i64,
    lambda: &[i64],
    cap: i64,
    l_list: &[i64],
) -> Result<SpinonReport> {
    let n = data.rank();
    let tr = data.t_values[r - 1];
    if s % tr != 0 {
        return Err(Error::Unsupported(
            "s/t_r is not an integer; the half- and third-integer limits are not implemented".into(),
        ));
    }
    let level = s / tr;
    let mut lhs = Vec::new();
    for &big_l in l_list {
        let adm = (1..=n).all(|a| (&data.inv_cartan[r - 1][a - 1] * rat(big_l, 1)).is_integer());
        if !adm {
            return invalid(format!("L = {big_l} is not admissible: L C^-1_ra must be integral"));
        }
        let c0 = -(rat(big_l * big_l * s, 1) * &data.inv_cartan[r - 1][r - 1]) / rat(2, 1);
        let c0 = rat_to_i64(&c0).ok_or_else(|| Error::Internal("c0 not integral".into()))?;
        let spec = TensorSpec::new(data.id).with(r, s, big_l as u64)?;
        let m = fermionic_m(data, &spec, lambda, SumOptions { ledger: false, parallel: true })?.value;
        let shifted = m.shift(-c0);
        if shifted.min_degree().is_some_and(|e| e < 0) {
            return Err(Error::Internal("q^{-c0} M has negative exponents".into()));
        }
        lhs.push((big_l, c0, (0..=cap).map(|e| shifted.coeff(e)).collect()));
    }
    let mut terms: HashMap<Vec<i64>, LaurentPolyQ> = HashMap::new();
    let mut zeta_term = |zeta: &[i64]| -> Result<LaurentPolyQ> {
        if let Some(t) = terms.get(zeta) {
            return Ok(t.clone());
        }
        let mut w = TensorSpec::new(data.id);
        for (a, &z) in zeta.iter().enumerate() {
            w.add(a + 1, 1, z as u64)?;
        }
        let m1 = fermionic_m(data, &w, lambda, SumOptions::default())?.value.invert_q();
        let term = if m1.is_zero() || !w.inside_h(data, level) {
            LaurentPolyQ::zero()
        } else {
            let m2 = fermionic_m_l(data, &w, level, SumOptions::default())?.value.invert_q();
            let num = TruncatedSeriesQ::from_poly(&(&m1 * &m2), cap);
            let mut den = TruncatedSeriesQ::from_poly(&LaurentPolyQ::one(), cap);
            for &z in zeta {
                den = den.mul(&TruncatedSeriesQ::from_poly(&poch_q(z)?, cap))?;
            }
            num.mul(&den.inverse()?)?.to_poly()
        };
        terms.insert(zeta.to_vec(), term.clone());
        Ok(term)
    };
    let mut rhs_for_box = |radius: i64| -> Result<Vec<BigInt>> {
        let mut acc = LaurentPolyQ::zero();
        let mut zeta = vec![0i64; n];
        loop {
            acc += &zeta_term(&zeta)?;
            let mut a = 0;
            loop {
                if a == n {
                    return Ok((0..=cap).map(|e| acc.coeff(e)).collect());
                }
                zeta[a] += 1;
                if zeta[a] <= radius {
                    break;
                }
                zeta[a] = 0;
                a += 1;
            }
        }
    };
    // The ζ box grows until the truncated right side is unchanged for two steps.
    let mut radius = 2;
    let mut rhs = rhs_for_box(radius)?;
    let mut converged = false;
    while radius < MAX_ZETA_BOX {
        let next = rhs_for_box(radius + 1)?;
        let next2 = rhs_for_box(radius + 2)?;
        if next == rhs && next2 == rhs {
            converged = true;
            break;
        }
        radius += 1;
        rhs = next;
    }
    let mut stable_from = None;
    for (idx, (big_l, _, _)) in lhs.iter().enumerate() {
        if lhs[idx..].iter().all(|(_, _, c)| *c == rhs) {
            stable_from = Some(*big_l);
            break;
        }
    }
    Ok(SpinonReport { cap, rhs, lhs, stable_from, zeta_box: radius, zeta_converged: converged })
}

/// Convenience: algebra data for a spec.
pub fn data_for(spec: &TensorSpec) -> AlgebraData {
    algebra_data(spec.algebra())
}

/// Integer-valued rational check used by callers that build specs from
/// rational formulas.
pub fn rat_to_count(x: &BigRational) -> Option<u64> {
    if x.is_integer() && !x.is_negative() {
        x.to_integer().to_u64()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2() -> AlgebraData {
        algebra_data("C2".parse().unwrap())
    }

    fn worked_spec() -> TensorSpec {
        TensorSpec::from_factors("C2".parse().unwrap(), &[(1, 2, 1), (2, 1, 3), (1, 1, 2)]).unwrap()
    }

    fn poly(terms: &[(i64, i64)]) -> LaurentPolyQ {
        LaurentPolyQ::from_terms(terms.iter().copied())
    }

    #[test]
    fn worked_example_polynomials() {
        let d = c2();
        let w = worked_spec();
        let m = fermionic_m(&d, &w, &[0, 0], SumOptions::default()).unwrap();
        assert_eq!(
            m.value.invert_q(),
            poly(&[(6, 1), (7, 2), (8, 2), (9, 3), (10, 2), (11, 3), (12, 2), (13, 1), (15, 1)])
        );
        let m2 = fermionic_m_l(&d, &w, 2, SumOptions::default()).unwrap();
        assert_eq!(m2.value.invert_q(), poly(&[(8, 1), (9, 2), (10, 2), (11, 3), (12, 2), (13, 1), (15, 1)]));
        let m1 = fermionic_m_l(&d, &w, 1, SumOptions::default()).unwrap();
        assert_eq!(m1.value.invert_q(), poly(&[(15, 1)]));
        for l in 1..=2 {
            assert_eq!(fermionic_m_l_eliminated(&d, &w, l).unwrap(), fermionic_m_l(&d, &w, l, SumOptions::default()).unwrap().value);
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let d = c2();
        let w = worked_spec();
        let a = fermionic_m(&d, &w, &[0, 0], SumOptions { ledger: true, parallel: false }).unwrap();
        let b = fermionic_m(&d, &w, &[0, 0], SumOptions { ledger: true, parallel: true }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn worked_example_ledger() {
        let d = c2();
        let w = worked_spec();
        let m = fermionic_m(&d, &w, &[0, 0], SumOptions { ledger: true, parallel: false }).unwrap();
        assert_eq!(m.total_configurations, BigInt::from(105));
        assert_eq!(m.configuration_count, 6);
        let rows: Vec<_> = m
            .ledger
            .unwrap()
            .into_iter()
            .map(|r| (r.m.m, r.p, r.contribution.invert_q()))
            .collect();
        let expect = vec![
            (vec![vec![0, 0, 1, 1], vec![1, 2]], vec![vec![2, 2, 0, 0], vec![1, 0]], poly(&[(8, 1), (9, 1)])),
            (vec![vec![1, 0, 0, 0, 0, 1], vec![0, 1, 1]], vec![vec![1, 2, 2, 2, 1, 0], vec![2, 0, 0]], poly(&[(6, 1), (7, 1)])),
            (vec![vec![1, 0, 0, 0, 0, 1], vec![2, 0, 1]], vec![vec![2, 4, 3, 2, 1, 0], vec![0, 0, 0]], poly(&[(7, 1), (8, 1), (9, 1)])),
            (vec![vec![1, 1, 0, 1], vec![1, 2]], vec![vec![0, 0, 0, 0], vec![2, 0]], poly(&[(9, 1), (10, 1), (11, 1)])),
            (vec![vec![1, 1, 0, 1], vec![3, 1]], vec![vec![1, 2, 1, 0], vec![0, 0]], poly(&[(10, 1), (11, 2), (12, 2), (13, 1)])),
            (vec![vec![1, 3], vec![5]], vec![vec![0, 0], vec![0]], poly(&[(15, 1)])),
        ];
        assert_eq!(rows, expect);
    }

    /// Oracle: plain enumeration with the direct vacancy and cocharge formulas.
    fn brute(d: &AlgebraData, w: &TensorSpec, c: &Constraint, brace: bool) -> LaurentPolyQ {
        let mode = match c {
            Constraint::Lambda(_) => Mode::Unrestricted,
            Constraint::Level(l) | Constraint::LevelLambda(l, _) => Mode::Level(*l),
        };
        let mut out = LaurentPolyQ::zero();
        for cfg in enumerate_configurations(d, w, c) {
            let mut term = LaurentPolyQ::one();
            let mut ok = true;
            for a in 1..=d.rank() {
                let imax = match mode {
                    Mode::Level(l) => d.t_values[a - 1] * l,
                    Mode::Unrestricted => cfg.max_part(a).max(w.max_index()) + 8,
                };
                for i in 1..=imax {
                    let p = vacancy(d, w, &cfg, a, i, mode).unwrap();
                    let m = cfg.get(a, i);
                    if !brace && p < 0 {
                        ok = false;
                    }
                    let f = if brace { qbinom_brace(p, m) } else { qbinom_bracket(p, m) }.unwrap();
                    term = &term * &f;
                }
            }
            if ok {
                let cc = rat_to_i64(&cocharge(d, w, &cfg, mode)).unwrap();
                out += &term.shift(cc);
            }
        }
        out
    }

    fn small_specs() -> Vec<TensorSpec> {
        let mut v = Vec::new();
        for (alg, factors) in [
            ("A2", vec![(1, 1, 2), (2, 1, 1)]),
            ("A2", vec![(1, 2, 1), (2, 1, 2)]),
            ("B2", vec![(1, 1, 2), (2, 1, 2)]),
            ("B2", vec![(2, 2, 1), (1, 1, 1)]),
            ("C2", vec![(1, 1, 2), (2, 1, 1)]),
            ("C2", vec![(1, 2, 1), (2, 1, 1), (1, 1, 1)]),
            ("G2", vec![(1, 1, 1), (2, 1, 1)]),
            ("G2", vec![(2, 2, 1)]),
            ("A1", vec![(1, 1, 4), (1, 2, 1)]),
        ] {
            v.push(TensorSpec::from_factors(alg.parse().unwrap(), &factors).unwrap());
        }
        v
    }

    fn dominant_targets(d: &AlgebraData, w: &TensorSpec) -> Vec<Vec<i64>> {
        let top = w.top_weight();
        let mut out = Vec::new();
        let n = d.rank();
        let mut lam = vec![0i64; n];
        loop {
            if weight_totals(d, w, &lam).is_some() {
                out.push(lam.clone());
            }
            let mut a = 0;
            loop {
                if a == n {
                    return out;
                }
                lam[a] += 1;
                if lam[a] <= top.iter().sum::<i64>() * 2 {
                    break;
                }
                lam[a] = 0;
                a += 1;
            }
        }
    }

    #[test]
    fn engine_matches_direct_enumeration() {
        for w in small_specs() {
            let d = algebra_data(w.algebra());
            for lam in dominant_targets(&d, &w) {
                let c = Constraint::Lambda(lam.clone());
                let m = fermionic_m(&d, &w, &lam, SumOptions::default()).unwrap();
                assert_eq!(m.value, brute(&d, &w, &c, false), "M {} {:?} {lam:?}", w.algebra(), w);
                let nn = fermionic_n_l(&d, &w, &lam, None, SumOptions::default()).unwrap();
                assert_eq!(nn.value, brute(&d, &w, &c, true), "N {:?} {lam:?}", w);
                let at1 = fermionic_n_at_one(&d, &w, &lam, false).unwrap();
                assert_eq!(at1, nn.value.eval_at_one());
            }
            for l in 1..=3 {
                if !w.inside_h(&d, l) {
                    continue;
                }
                let ml = fermionic_m_l(&d, &w, l, SumOptions::default()).unwrap();
                assert_eq!(ml.value, brute(&d, &w, &Constraint::Level(l), false), "M_{l} {:?}", w);
                assert_eq!(ml.value, fermionic_m_l_eliminated(&d, &w, l).unwrap(), "M_{l} routes {:?}", w);
                let zero = vec![0; d.rank()];
                let nl = fermionic_n_l(&d, &w, &zero, Some(l), SumOptions::default()).unwrap();
                assert_eq!(nl.value, brute(&d, &w, &Constraint::Level(l), true), "N_{l} {:?}", w);
            }
        }
    }

    #[test]
    fn vacancy_forms_agree() {
        for w in small_specs() {
            let d = algebra_data(w.algebra());
            let l = 3;
            if !w.inside_h(&d, l) {
                continue;
            }
            for cfg in enumerate_configurations(&d, &w, &Constraint::Level(l)) {
                for a in 1..=d.rank() {
                    for i in 1..=d.t_values[a - 1] * l {
                        let p = vacancy(&d, &w, &cfg, a, i, Mode::Level(l)).unwrap();
                        let zero = vec![0; d.rank()];
                        assert_eq!(rat(p, 1), vacancy_gamma_mu(&d, &w, &cfg, &zero, a, i, l));
                        if i < d.t_values[a - 1] * l {
                            assert_eq!(rat(p, 1), vacancy_eliminated(&d, &w, &cfg, a, i, l));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_spec_json_round_trip() {
        let w = worked_spec();
        let back = TensorSpec::from_json_str(&w.to_json().to_string()).unwrap();
        assert_eq!(w, back);
        assert!(TensorSpec::from_json_str(r#"{"algebra":"C2","factors":[{"a":3,"s":1}]}"#).is_err());
        assert!(TensorSpec::from_json_str(r#"{"algebra":"C2","factors":[],"x":1}"#).is_err());
    }

    #[test]
    fn partition_helpers() {
        assert_eq!(partition_count(7, 7), BigInt::from(15));
        assert_eq!(partitions_as_multiplicities(7, 7).len(), 15);
        assert_eq!(partitions_as_multiplicities(5, 2).len(), 3);
    }

    fn check_reduction(alg: &str, factors: &[(usize, i64, u64)]) -> Result<bool> {
        let d = algebra_data(alg.parse().unwrap());
        let w = TensorSpec::from_factors(d.id, factors).unwrap();
        level_one_reduction_holds(&d, &w)
    }

    #[test]
    fn level_one_reduction_samples() {
        for (alg, f) in [
            ("B2", vec![(2, 1, 2)]),
            ("B2", vec![(1, 1, 1), (2, 1, 2)]),
            ("B2", vec![(2, 2, 1)]),
            ("B3", vec![(3, 1, 2), (1, 1, 1)]),
            ("B3", vec![(3, 2, 1), (2, 1, 1)]),
            ("C2", vec![(1, 1, 2)]),
            ("C2", vec![(1, 1, 1), (2, 1, 1), (1, 1, 1)]),
            ("C3", vec![(1, 1, 2), (3, 1, 2)]),
            ("C3", vec![(2, 2, 1)]),
            ("G2", vec![(2, 1, 2)]),
            ("G2", vec![(2, 2, 1), (2, 1, 1)]),
            ("G2", vec![(1, 1, 1), (2, 1, 1)]),
            ("G2", vec![(2, 3, 1), (1, 1, 1)]),
            ("G2", vec![(2, 3, 2)]),
            ("F4", vec![(4, 1, 2)]),
            ("F4", vec![(3, 1, 1)]),
            ("F4", vec![(1, 1, 1)]),
            ("F4", vec![(2, 1, 1)]),
            ("F4", vec![(3, 2, 1)]),
            ("F4", vec![(4, 2, 1)]),
        ] {
            assert!(check_reduction(alg, &f).unwrap(), "{alg} {f:?}");
        }
    }

    #[test]
    fn critical_configurations_are_stationary() {
        for alg in ["A3", "B2", "B3", "C2", "C3", "D4", "G2", "F4", "E6"] {
            let d = algebra_data(alg.parse().unwrap());
            for r in 1..=d.rank() {
                for s in 1..=6 {
                    let cc = critical_configuration(&d, r, s, &rat(12, 1)).unwrap();
                    assert!(critical_residual(&d, r, s, &rat(12, 1), &cc).is_zero());
                }
            }
        }
    }

    #[test]
    fn spinon_check_a1() {
        let d = algebra_data("A1".parse().unwrap());
        let rep = spinon_stabilization_check(&d, 1, 1, &[0], 3, &[2, 4, 6, 8, 10]).unwrap();
        eprintln!("{rep:?}");
        assert!(rep.zeta_converged);
        assert!(rep.stable_from.is_some());
    }
}
