//! Finite affine crystals `B^{r,s}` for the supported cases, tensor
//! products, the combinatorial R-matrix and the energy function.
//!
//! Supported crystals:
//! - `A_n`, `B^{1,s}`: tuples `(x_1, ..., x_{n+1})` with sum `s`;
//! - `C_n`, `B^{1,s}`: tuples `(x_1..x_n, x̄_n..x̄_1)` with sum `<= s` and of
//!   the parity of `s`;
//! - `C_n`, `B^{r,1}`, `r >= 2`: 0/1 tuples with sum `r` and the one-column
//!   condition.
//!
//! Tensor products use the rule where `ẽ_i` acts on the left factor when
//! `φ_i(b_1) >= ε_i(b_2)`. R and H are obtained by propagating along the
//! crystal graph of `B_1 ⊗ B_2` from the product of highest elements.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::root_data::{AlgebraId, Family};

/// Label of a supported crystal `B^{r,s}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrystalId {
    /// Finite algebra `X_n`.
    pub algebra: AlgebraId,
    /// Node `r`.
    pub r: usize,
    /// Length `s`.
    pub s: i64,
}

/// The concrete model behind a [`CrystalId`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    /// Type A row.
    ARow,
    /// Type C row.
    CRow,
    /// Type C single column.
    CColumn,
}

impl CrystalId {
    /// Validates against the supported list.
    pub fn new(algebra: AlgebraId, r: usize, s: i64) -> Result<Self> {
        let n = algebra.rank();
        let ok = match algebra.family() {
            Family::A => r == 1 && s >= 1,
            Family::C => (r == 1 && s >= 1) || (1 <= r && r <= n && s == 1),
            _ => false,
        };
        if !ok {
            return Err(Error::Unsupported(format!(
                "no crystal model for B^{{{r},{s}}} of {algebra}; supported: A_n B^{{1,s}}, C_n B^{{1,s}}, C_n B^{{r,1}}"
            )));
        }
        Ok(CrystalId { algebra, r, s })
    }

    /// The tuple model used for this crystal.
    pub fn model(&self) -> Model {
        match (self.algebra.family(), self.r) {
            (Family::A, _) => Model::ARow,
            (Family::C, 1) => Model::CRow,
            _ => Model::CColumn,
        }
    }

    /// Rank of the finite algebra.
    pub fn rank(&self) -> usize {
        self.algebra.rank()
    }

    /// Length of the element tuples.
    pub fn tuple_len(&self) -> usize {
        match self.model() {
            Model::ARow => self.rank() + 1,
            _ => 2 * self.rank(),
        }
    }

    /// Level `⌈s / t_r⌉` of the crystal (all supported cases have this form).
    pub fn expected_level(&self) -> i64 {
        match self.model() {
            Model::ARow => self.s,
            Model::CRow => (self.s + 1) / 2,
            Model::CColumn => 1,
        }
    }
}

impl fmt::Display for CrystalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{},{}", self.algebra, self.r, self.s)
    }
}

impl FromStr for CrystalId {
    type Err = Error;

    /// Parses `ALG:r,s`, e.g. `C2:1,2`.
    fn from_str(s: &str) -> Result<Self> {
        let (alg, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("crystal `{s}`: expected ALG:r,s")))?;
        let (r, len) = rest
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("crystal `{s}`: expected ALG:r,s")))?;
        let algebra: AlgebraId = alg.trim().parse()?;
        let r: usize = r.trim().parse().map_err(|_| Error::Parse(format!("crystal `{s}`: bad r")))?;
        let len: i64 = len.trim().parse().map_err(|_| Error::Parse(format!("crystal `{s}`: bad s")))?;
        CrystalId::new(algebra, r, len)
    }
}

/// Parses whitespace-separated factors `ALG:r,s[xCOUNT]`, e.g.
/// `"C2:1,2 C2:2,1x3 C2:1,1x2"`, into the ordered list of factors.
pub fn parse_crystal_shorthand(text: &str) -> Result<Vec<CrystalId>> {
    let mut out = Vec::new();
    for tok in text.split_whitespace() {
        let (base, count) = match tok.rsplit_once('x') {
            Some((b, c)) if !c.is_empty() && c.chars().all(|ch| ch.is_ascii_digit()) => {
                let c: usize = c.parse().map_err(|_| Error::Parse(format!("bad count in `{tok}`")))?;
                (b, c)
            }
            _ => (tok, 1),
        };
        if count == 0 || count > 64 {
            return Err(Error::Parse(format!("count in `{tok}` must be in 1..=64")));
        }
        let id: CrystalId = base.parse()?;
        out.extend(std::iter::repeat_n(id, count));
    }
    if out.is_empty() {
        return Err(Error::Parse("empty crystal list".into()));
    }
    if out.iter().any(|c| c.algebra != out[0].algebra) {
        return Err(Error::Parse("all factors must share one algebra".into()));
    }
    Ok(out)
}

/// One crystal with its elements enumerated and operators tabulated.
#[derive(Debug)]
pub struct Crystal {
    /// Label.
    pub id: CrystalId,
    /// Elements as tuples, sorted.
    pub elements: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
    /// `e[i][b]`: index of `ẽ_i b`, for `i = 0..=n`.
    e: Vec<Vec<Option<usize>>>,
    /// `f[i][b]`.
    f: Vec<Vec<Option<usize>>>,
    /// `ε_i(b)` by iteration.
    eps: Vec<Vec<i64>>,
    /// `φ_i(b)` by iteration.
    phi: Vec<Vec<i64>>,
}

fn is_member(id: &CrystalId, x: &[i64]) -> bool {
    if x.len() != id.tuple_len() || x.iter().any(|&v| v < 0) {
        return false;
    }
    let total: i64 = x.iter().sum();
    match id.model() {
        Model::ARow => total == id.s,
        Model::CRow => total <= id.s && (id.s - total) % 2 == 0,
        Model::CColumn => {
            let n = id.rank();
            if x.iter().any(|&v| v > 1) || total != id.r as i64 {
                return false;
            }
            // x_k = x̄_k = 1 requires Σ_{i<=k} (x_i + x̄_i) <= k.
            let bar = |k: usize| x[2 * n - k];
            let mut acc = 0;
            for k in 1..=n {
                acc += x[k - 1] + bar(k);
                if x[k - 1] == 1 && bar(k) == 1 && acc > k as i64 {
                    return false;
                }
            }
            true
        }
    }
}

/// Raw `ẽ_i` on a tuple, before the membership check.
fn raw_e(id: &CrystalId, x: &[i64], i: usize) -> Option<Vec<i64>> {
    let n = id.rank();
    let mut y = x.to_vec();
    let last = y.len() - 1;
    // Positions: x_k at k-1, x̄_k at 2n-k.
    let xb = |k: usize| 2 * n - k;
    match id.model() {
        Model::ARow => {
            if i == 0 {
                y[0] -= 1;
                y[last] += 1;
            } else {
                y[i - 1] += 1;
                y[i] -= 1;
            }
        }
        Model::CRow => {
            if i == 0 {
                let (x1, b1) = (x[0], x[xb(1)]);
                if x1 >= b1 + 2 {
                    y[0] -= 2;
                } else if x1 == b1 + 1 {
                    y[0] -= 1;
                    y[xb(1)] += 1;
                } else {
                    y[xb(1)] += 2;
                }
            } else if i < n {
                if x[i] > x[xb(i + 1)] {
                    y[i - 1] += 1;
                    y[i] -= 1;
                } else {
                    y[xb(i + 1)] += 1;
                    y[xb(i)] -= 1;
                }
            } else {
                y[n - 1] += 1;
                y[xb(n)] -= 1;
            }
        }
        Model::CColumn => {
            if i == 0 {
                y[0] -= 1;
                y[xb(1)] += 1;
            } else if i < n {
                let bars = (x[xb(i + 1)], x[xb(i)]);
                let unb = (x[i - 1], x[i]);
                if bars == (0, 1) && unb != (1, 0) {
                    y[xb(i + 1)] += 1;
                    y[xb(i)] -= 1;
                } else if bars != (0, 1) && unb == (0, 1) {
                    y[i - 1] += 1;
                    y[i] -= 1;
                } else {
                    return None;
                }
            } else {
                y[n - 1] += 1;
                y[xb(n)] -= 1;
            }
        }
    }
    Some(y)
}

/// Raw `f̃_i` on a tuple, before the membership check.
fn raw_f(id: &CrystalId, x: &[i64], i: usize) -> Option<Vec<i64>> {
    let n = id.rank();
    let mut y = x.to_vec();
    let last = y.len() - 1;
    let xb = |k: usize| 2 * n - k;
    match id.model() {
        Model::ARow => {
            if i == 0 {
                y[0] += 1;
                y[last] -= 1;
            } else {
                y[i - 1] -= 1;
                y[i] += 1;
            }
        }
        Model::CRow => {
            if i == 0 {
                let (x1, b1) = (x[0], x[xb(1)]);
                if x1 >= b1 {
                    y[0] += 2;
                } else if x1 == b1 - 1 {
                    y[0] += 1;
                    y[xb(1)] -= 1;
                } else {
                    y[xb(1)] -= 2;
                }
            } else if i < n {
                if x[i] >= x[xb(i + 1)] {
                    y[i - 1] -= 1;
                    y[i] += 1;
                } else {
                    y[xb(i + 1)] -= 1;
                    y[xb(i)] += 1;
                }
            } else {
                y[n - 1] -= 1;
                y[xb(n)] += 1;
            }
        }
        Model::CColumn => {
            if i == 0 {
                y[0] += 1;
                y[xb(1)] -= 1;
            } else if i < n {
                let bars = (x[xb(i + 1)], x[xb(i)]);
                let unb = (x[i - 1], x[i]);
                if unb == (1, 0) && bars != (0, 1) {
                    y[i - 1] -= 1;
                    y[i] += 1;
                } else if unb != (1, 0) && bars == (1, 0) {
                    y[xb(i + 1)] -= 1;
                    y[xb(i)] += 1;
                } else {
                    return None;
                }
            } else {
                y[n - 1] -= 1;
                y[xb(n)] += 1;
            }
        }
    }
    Some(y)
}

fn all_tuples(id: &CrystalId) -> Vec<Vec<i64>> {
    let len = id.tuple_len();
    let bound = match id.model() {
        Model::CColumn => 1,
        _ => id.s,
    };
    let mut out = Vec::new();
    let mut cur = vec![0i64; len];
    fn rec(pos: usize, left: i64, bound: i64, cur: &mut Vec<i64>, id: &CrystalId, out: &mut Vec<Vec<i64>>) {
        if pos == cur.len() {
            if is_member(id, cur) {
                out.push(cur.clone());
            }
            return;
        }
        for v in 0..=bound.min(left) {
            cur[pos] = v;
            rec(pos + 1, left - v, bound, cur, id, out);
        }
        cur[pos] = 0;
    }
    let total = match id.model() {
        Model::CColumn => id.r as i64,
        _ => id.s,
    };
    rec(0, total, bound, &mut cur, id, &mut out);
    out.sort();
    out
}

impl Crystal {
    /// Builds the crystal and its operator tables.
    pub fn new(id: CrystalId) -> Crystal {
        let elements = all_tuples(&id);
        let index: HashMap<Vec<i64>, usize> = elements.iter().cloned().enumerate().map(|(k, v)| (v, k)).collect();
        let n = id.rank();
        let look = |y: Option<Vec<i64>>| y.filter(|y| is_member(&id, y)).and_then(|y| index.get(&y).copied());
        let e: Vec<Vec<Option<usize>>> =
            (0..=n).map(|i| elements.iter().map(|x| look(raw_e(&id, x, i))).collect()).collect();
        let f: Vec<Vec<Option<usize>>> =
            (0..=n).map(|i| elements.iter().map(|x| look(raw_f(&id, x, i))).collect()).collect();
        let count = |table: &Vec<Option<usize>>, mut b: usize| {
            let mut k = 0;
            while let Some(c) = table[b] {
                k += 1;
                b = c;
                assert!(k <= 10_000, "operator cycle in {id}");
            }
            k
        };
        let eps = (0..=n).map(|i| (0..elements.len()).map(|b| count(&e[i], b)).collect()).collect();
        let phi = (0..=n).map(|i| (0..elements.len()).map(|b| count(&f[i], b)).collect()).collect();
        Crystal { id, elements, index, e, f, eps, phi }
    }

    /// Shared cached instance.
    pub fn get(id: CrystalId) -> Arc<Crystal> {
        static CACHE: OnceLock<Mutex<HashMap<CrystalId, Arc<Crystal>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("crystal cache poisoned");
        guard.entry(id).or_insert_with(|| Arc::new(Crystal::new(id))).clone()
    }

    /// Number of elements.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    /// Always false: every supported crystal is non-empty.
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Index of a tuple, if it is an element.
    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        self.index.get(x).copied()
    }

    /// `ẽ_i b` (`None` for 0).
    pub fn apply_e(&self, i: usize, b: usize) -> Option<usize> {
        self.e[i][b]
    }

    /// `f̃_i b` (`None` for 0).
    pub fn apply_f(&self, i: usize, b: usize) -> Option<usize> {
        self.f[i][b]
    }

    /// `ε_i(b)`.
    pub fn epsilon(&self, i: usize, b: usize) -> i64 {
        self.eps[i][b]
    }

    /// `φ_i(b)`.
    pub fn phi(&self, i: usize, b: usize) -> i64 {
        self.phi[i][b]
    }

    /// Classical weight `φ_i - ε_i` for `i = 1..=n`.
    pub fn weight(&self, b: usize) -> Vec<i64> {
        (1..=self.id.rank()).map(|i| self.phi[i][b] - self.eps[i][b]).collect()
    }

    /// `⟨c, ε(b)⟩`; all dual Kac labels are 1 for the supported types.
    pub fn level_of(&self, b: usize) -> i64 {
        (0..=self.id.rank()).map(|i| self.eps[i][b]).sum()
    }

    /// `lev B`.
    pub fn level(&self) -> i64 {
        (0..self.len()).map(|b| self.level_of(b)).min().unwrap_or(0)
    }

    /// `B_min`.
    pub fn minimal_elements(&self) -> Vec<usize> {
        let k = self.level();
        (0..self.len()).filter(|&b| self.level_of(b) == k).collect()
    }

    /// Elements with `φ(b) = k Λ_0`, `k = lev B`.
    pub fn ground_candidates(&self) -> Vec<usize> {
        let k = self.level();
        (0..self.len())
            .filter(|&b| self.phi[0][b] == k && (1..=self.id.rank()).all(|i| self.phi[i][b] == 0))
            .collect()
    }

    /// The unique `b_0` with `φ(b_0) = k Λ_0`.
    pub fn ground_element(&self) -> Result<usize> {
        match self.ground_candidates().as_slice() {
            [b] => Ok(*b),
            [] => Err(Error::Unsupported(format!("no element with φ = kΛ_0 in {}", self.id))),
            many => Err(Error::Unsupported(format!("{} elements with φ = kΛ_0 in {}", many.len(), self.id))),
        }
    }

    /// The classical highest element of weight `s Λ̄_r`.
    pub fn highest(&self) -> usize {
        let n = self.id.rank();
        let mut target = vec![0i64; n];
        target[self.id.r - 1] = self.id.s;
        (0..self.len())
            .find(|&b| (1..=n).all(|i| self.eps[i][b] == 0) && self.weight(b) == target)
            .expect("highest element exists")
    }

    /// Tableau-style label: letters `1..n` then `n̄..1̄` with multiplicity,
    /// `φ` for the empty row.
    pub fn render(&self, b: usize) -> String {
        render_tuple(&self.id, &self.elements[b])
    }

    /// Parses a label produced by [`Crystal::render`]; a bar may also be
    /// written as a leading `-` (e.g. `1-2` for `1 2̄`) and `phi` for `φ`.
    pub fn parse_element(&self, s: &str) -> Result<usize> {
        let n = self.id.rank();
        let mut x = vec![0i64; self.id.tuple_len()];
        let t = s.trim();
        if t != "φ" && t != "phi" {
            let chars: Vec<char> = t.chars().collect();
            let mut k = 0;
            while k < chars.len() {
                let neg_prefix = chars[k] == '-';
                if neg_prefix {
                    k += 1;
                }
                let d = chars
                    .get(k)
                    .and_then(|c| c.to_digit(10))
                    .ok_or_else(|| Error::Parse(format!("bad element `{s}`")))? as usize;
                k += 1;
                let bar_suffix = chars.get(k) == Some(&'\u{0304}');
                if bar_suffix {
                    k += 1;
                }
                let barred = neg_prefix || bar_suffix;
                if d == 0 || d > n + usize::from(self.id.model() == Model::ARow) {
                    return Err(Error::Parse(format!("letter {d} out of range in `{s}`")));
                }
                if barred {
                    if self.id.model() == Model::ARow {
                        return Err(Error::Parse("type A letters have no bars".into()));
                    }
                    x[2 * n - d] += 1;
                } else {
                    x[d - 1] += 1;
                }
            }
        }
        self.index_of(&x).ok_or_else(|| Error::Parse(format!("`{s}` is not an element of {}", self.id)))
    }

    /// DOT export of the crystal graph (edges `b -> f̃_i b` labelled `i`).
    pub fn to_dot(&self) -> String {
        let mut out = format!("digraph \"B{}\" {{\n", self.id);
        for b in 0..self.len() {
            out += &format!("  n{b} [label=\"{} {:?}\"];\n", self.render(b), self.elements[b]);
        }
        for i in 0..=self.id.rank() {
            for b in 0..self.len() {
                if let Some(c) = self.f[i][b] {
                    out += &format!("  n{b} -> n{c} [label=\"{i}\"];\n");
                }
            }
        }
        out + "}\n"
    }
}

/// Renders a tuple as a letter word.
pub fn render_tuple(id: &CrystalId, x: &[i64]) -> String {
    let n = id.rank();
    let mut s = String::new();
    match id.model() {
        Model::ARow => {
            for (k, &m) in x.iter().enumerate() {
                for _ in 0..m {
                    s += &(k + 1).to_string();
                }
            }
        }
        _ => {
            for k in 1..=n {
                for _ in 0..x[k - 1] {
                    s += &k.to_string();
                }
            }
            for k in (1..=n).rev() {
                for _ in 0..x[2 * n - k] {
                    s += &format!("{k}\u{0304}");
                }
            }
        }
    }
    if s.is_empty() {
        "φ".into()
    } else {
        s
    }
}

/// A tensor product `B_1 ⊗ ... ⊗ B_L`; elements are index vectors.
#[derive(Clone, Debug)]
pub struct Tensor {
    /// Factors, left to right.
    pub factors: Vec<Arc<Crystal>>,
}

impl Tensor {
    /// Builds from crystal ids.
    pub fn new(ids: &[CrystalId]) -> Result<Tensor> {
        if ids.is_empty() {
            return invalid("empty tensor product");
        }
        if ids.iter().any(|c| c.algebra != ids[0].algebra) {
            return invalid("tensor factors must share one algebra");
        }
        Ok(Tensor { factors: ids.iter().map(|&c| Crystal::get(c)).collect() })
    }

    /// Rank of the algebra.
    pub fn rank(&self) -> usize {
        self.factors[0].id.rank()
    }

    /// `(ε_i, φ_i)` of the product by folding left to right.
    pub fn eps_phi(&self, i: usize, b: &[usize]) -> (i64, i64) {
        let mut eps = 0;
        let mut phi = 0;
        for (k, c) in self.factors.iter().enumerate() {
            let (e2, p2) = (c.epsilon(i, b[k]), c.phi(i, b[k]));
            let new_eps = eps + (e2 - phi).max(0);
            let new_phi = p2 + (phi - e2).max(0);
            eps = new_eps;
            phi = new_phi;
        }
        (eps, phi)
    }

    /// Position acted on by `ẽ_i` (rightmost unmatched `-` of the signature).
    fn e_position(&self, i: usize, b: &[usize]) -> Option<usize> {
        // Signature per factor: ε minuses then φ pluses; `+` cancels a later `-`.
        let mut open_plus = 0i64;
        let mut minus_stack: Vec<usize> = Vec::new();
        for (k, c) in self.factors.iter().enumerate() {
            let e = c.epsilon(i, b[k]);
            let cancel = e.min(open_plus);
            open_plus -= cancel;
            if e > cancel {
                minus_stack.push(k);
            }
            open_plus += c.phi(i, b[k]);
        }
        minus_stack.last().copied()
    }

    /// Position acted on by `f̃_i` (leftmost unmatched `+`).
    fn f_position(&self, i: usize, b: &[usize]) -> Option<usize> {
        let mut unmatched: Vec<(usize, i64)> = Vec::new();
        for (k, c) in self.factors.iter().enumerate() {
            let mut e = c.epsilon(i, b[k]);
            while e > 0 {
                match unmatched.last_mut() {
                    Some((_, cnt)) => {
                        let take = e.min(*cnt);
                        *cnt -= take;
                        e -= take;
                        if *cnt == 0 {
                            unmatched.pop();
                        }
                    }
                    None => break,
                }
            }
            let p = c.phi(i, b[k]);
            if p > 0 {
                unmatched.push((k, p));
            }
        }
        unmatched.first().map(|&(k, _)| k)
    }

    /// `ẽ_i b`.
    pub fn apply_e(&self, i: usize, b: &[usize]) -> Option<Vec<usize>> {
        let k = self.e_position(i, b)?;
        let mut out = b.to_vec();
        out[k] = self.factors[k].apply_e(i, b[k])?;
        Some(out)
    }

    /// `f̃_i b`.
    pub fn apply_f(&self, i: usize, b: &[usize]) -> Option<Vec<usize>> {
        let k = self.f_position(i, b)?;
        let mut out = b.to_vec();
        out[k] = self.factors[k].apply_f(i, b[k])?;
        Some(out)
    }

    /// Classical weight.
    pub fn weight(&self, b: &[usize]) -> Vec<i64> {
        let mut w = vec![0i64; self.rank()];
        for (k, c) in self.factors.iter().enumerate() {
            for (a, x) in c.weight(b[k]).into_iter().enumerate() {
                w[a] += x;
            }
        }
        w
    }

    /// True if `ẽ_i b = 0` for all `i != 0`.
    pub fn is_classical_highest(&self, b: &[usize]) -> bool {
        (1..=self.rank()).all(|i| self.eps_phi(i, b).0 == 0)
    }

    /// Every element of the product, lexicographic.
    pub fn elements(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for c in &self.factors {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..c.len()).map(move |x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// Label like `11 ⊗ a ⊗ 1̄` using [`Crystal::render`].
    pub fn render(&self, b: &[usize]) -> String {
        b.iter()
            .enumerate()
            .map(|(k, &x)| self.factors[k].render(x))
            .collect::<Vec<_>>()
            .join(" ⊗ ")
    }
}

/// Dominant weights with the number of classical highest elements of that
/// weight, found by pruned enumeration.
pub fn classical_decompose(ids: &[CrystalId]) -> Result<BTreeMap<Vec<i64>, u64>> {
    let t = Tensor::new(ids)?;
    let mut out = BTreeMap::new();
    let n = t.rank();
    let mut cur: Vec<usize> = Vec::new();
    fn rec(t: &Tensor, n: usize, cur: &mut Vec<usize>, out: &mut BTreeMap<Vec<i64>, u64>) {
        if cur.len() == t.factors.len() {
            *out.entry(t.weight(cur)).or_insert(0) += 1;
            return;
        }
        let k = cur.len();
        for x in 0..t.factors[k].len() {
            cur.push(x);
            let sub = Tensor { factors: t.factors[..=k].to_vec() };
            if (1..=n).all(|i| sub.eps_phi(i, cur).0 == 0) {
                rec(t, n, cur, out);
            }
            cur.pop();
        }
    }
    rec(&t, n, &mut cur, &mut out);
    Ok(out)
}

/// The combinatorial R-matrix `B_1 ⊗ B_2 -> B_2 ⊗ B_1` and energy `H`.
#[derive(Clone, Debug)]
pub struct RMatrix {
    /// Left crystal of the source.
    pub left: CrystalId,
    /// Right crystal of the source.
    pub right: CrystalId,
    /// `r[(b1, b2)] = (b2', b1')`.
    map: HashMap<(usize, usize), (usize, usize)>,
    /// `H(b1 ⊗ b2)` normalized by `H(u_1 ⊗ u_2) = 0`.
    energy: HashMap<(usize, usize), i64>,
}

impl RMatrix {
    /// Builds R and H by propagation from `u_1 ⊗ u_2 ↦ u_2 ⊗ u_1`.
    pub fn new(left: CrystalId, right: CrystalId) -> Result<RMatrix> {
        if left.algebra != right.algebra {
            return invalid("R-matrix factors must share one algebra");
        }
        let src = Tensor::new(&[left, right])?;
        let dst = Tensor::new(&[right, left])?;
        let n = src.rank();
        let u = vec![src.factors[0].highest(), src.factors[1].highest()];
        let v = vec![dst.factors[0].highest(), dst.factors[1].highest()];
        let mut map: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let mut energy: HashMap<(usize, usize), i64> = HashMap::new();
        map.insert((u[0], u[1]), (v[0], v[1]));
        energy.insert((u[0], u[1]), 0);
        let mut queue = VecDeque::from([u.clone()]);
        let delta = |b: &[usize], img: &[usize]| -> i64 {
            // Change of H along ẽ_0 applied to b.
            let c1 = &src.factors[0];
            let c2 = &src.factors[1];
            let d1 = &dst.factors[0];
            let d2 = &dst.factors[1];
            let left_src = c1.phi(0, b[0]) >= c2.epsilon(0, b[1]);
            let left_dst = d1.phi(0, img[0]) >= d2.epsilon(0, img[1]);
            match (left_src, left_dst) {
                (true, true) => 1,
                (false, false) => -1,
                _ => 0,
            }
        };
        while let Some(b) = queue.pop_front() {
            let img = map[&(b[0], b[1])];
            let img = [img.0, img.1];
            let hb = energy[&(b[0], b[1])];
            for i in 0..=n {
                for forward in [true, false] {
                    let (nb, nimg) = if forward {
                        (src.apply_e(i, &b), dst.apply_e(i, &img))
                    } else {
                        (src.apply_f(i, &b), dst.apply_f(i, &img))
                    };
                    match (nb, nimg) {
                        (None, None) => {}
                        (Some(nb), Some(nimg)) => {
                            let h = if i != 0 {
                                hb
                            } else if forward {
                                hb + delta(&b, &img)
                            } else {
                                hb - delta(&nb, &nimg)
                            };
                            let key = (nb[0], nb[1]);
                            match map.get(&key) {
                                Some(&prev) => {
                                    if prev != (nimg[0], nimg[1]) || energy[&key] != h {
                                        return Err(Error::Internal(format!(
                                            "R-matrix propagation conflict on {left} ⊗ {right}"
                                        )));
                                    }
                                }
                                None => {
                                    map.insert(key, (nimg[0], nimg[1]));
                                    energy.insert(key, h);
                                    queue.push_back(nb);
                                }
                            }
                        }
                        _ => {
                            return Err(Error::Internal(format!(
                                "R-matrix does not commute with operator {i} on {left} ⊗ {right}"
                            )))
                        }
                    }
                }
            }
        }
        let total = src.factors[0].len() * src.factors[1].len();
        if map.len() != total {
            return Err(Error::Unsupported(format!(
                "{left} ⊗ {right} is not connected ({} of {total} reached)",
                map.len()
            )));
        }
        Ok(RMatrix { left, right, map, energy })
    }

    /// Shared cached instance.
    pub fn get(left: CrystalId, right: CrystalId) -> Result<Arc<RMatrix>> {
        static CACHE: OnceLock<Mutex<HashMap<(CrystalId, CrystalId), Arc<RMatrix>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(r) = cache.lock().expect("R cache poisoned").get(&(left, right)) {
            return Ok(r.clone());
        }
        let r = Arc::new(RMatrix::new(left, right)?);
        cache.lock().expect("R cache poisoned").insert((left, right), r.clone());
        Ok(r)
    }

    /// `R(b1 ⊗ b2) = (b2', b1')`.
    pub fn apply(&self, b1: usize, b2: usize) -> (usize, usize) {
        self.map[&(b1, b2)]
    }

    /// `H(b1 ⊗ b2)`.
    pub fn energy(&self, b1: usize, b2: usize) -> i64 {
        self.energy[&(b1, b2)]
    }

    /// Table rows `(b1, b2, R image, -H)` in element order, rendered.
    pub fn table(&self) -> Vec<(String, String, String, i64)> {
        let c1 = Crystal::get(self.left);
        let c2 = Crystal::get(self.right);
        let mut out = Vec::new();
        for b1 in 0..c1.len() {
            for b2 in 0..c2.len() {
                let (x, y) = self.apply(b1, b2);
                out.push((
                    c1.render(b1),
                    c2.render(b2),
                    format!("{} ⊗ {}", c2.render(x), c1.render(y)),
                    -self.energy(b1, b2),
                ));
            }
        }
        out
    }

    /// JSON dump of the table.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .table()
            .into_iter()
            .map(|(a, b, img, h)| serde_json::json!({"b1": a, "b2": b, "image": img, "minus_h": h}))
            .collect();
        serde_json::json!({"left": self.left.to_string(), "right": self.right.to_string(), "rows": rows})
    }
}
