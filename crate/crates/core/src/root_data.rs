//! Lie-theoretic constants for the finite simple types `A` through `G`.
//!
//! Nodes are numbered as in Kac's tables:
//!
//! * `E6`: chain 1-2-3-4-5 with node 6 attached to 3.
//! * `E7`: chain 1-..-6 with node 7 attached to 3.
//! * `E8`: chain 1-..-7 with node 8 attached to 5.
//! * `B_n`: node `n` is short; `C_n`: node `n` is long.
//! * `F4`: 1-2=>3-4 with nodes 1, 2 long; `G2`: node 1 long, node 2 short.
//!
//! Weights are stored in fundamental-weight coordinates and converted to
//! simple-root coordinates by `r = C^{-1} λ`, so that
//! `α_a = Σ_b C_{ba} Λ̄_b`.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Exact rational number.
pub type Rat = BigRational;

/// Builds the rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Converts an integral rational to `i64`, if it is one.
pub fn rat_to_i64(r: &Rat) -> Option<i64> {
    if r.is_integer() {
        r.to_integer().to_i64()
    } else {
        None
    }
}

/// Cartan-Killing family letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl Family {
    fn letter(self) -> char {
        match self {
            Family::A => 'A',
            Family::B => 'B',
            Family::C => 'C',
            Family::D => 'D',
            Family::E => 'E',
            Family::F => 'F',
            Family::G => 'G',
        }
    }
}

/// A finite simple type `X_n`, for example `C2` or `E8`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AlgebraId {
    family: Family,
    rank: usize,
}

impl AlgebraId {
    /// Validates the rank constraint of the family.
    pub fn new(family: Family, rank: usize) -> Result<Self> {
        let ok = match family {
            Family::A => rank >= 1,
            Family::B | Family::C => rank >= 2,
            Family::D => rank >= 4,
            Family::E => (6..=8).contains(&rank),
            Family::F => rank == 4,
            Family::G => rank == 2,
        };
        if !ok {
            let rule = match family {
                Family::A => "A_n needs n >= 1",
                Family::B => "B_n needs n >= 2",
                Family::C => "C_n needs n >= 2",
                Family::D => "D_n needs n >= 4",
                Family::E => "E_n needs n in {6,7,8}",
                Family::F => "F_n needs n = 4",
                Family::G => "G_n needs n = 2",
            };
            return invalid(format!("rank {rank} rejected: {rule}"));
        }
        Ok(AlgebraId { family, rank })
    }

    /// Family letter.
    pub fn family(&self) -> Family {
        self.family
    }

    /// Rank `n`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// True for `A`, `D`, `E`.
    pub fn is_simply_laced(&self) -> bool {
        matches!(self.family, Family::A | Family::D | Family::E)
    }
}

impl fmt::Display for AlgebraId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.family.letter(), self.rank)
    }
}

impl FromStr for AlgebraId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        let letter = chars
            .next()
            .ok_or_else(|| Error::Parse("empty algebra id".into()))?;
        let family = match letter.to_ascii_uppercase() {
            'A' => Family::A,
            'B' => Family::B,
            'C' => Family::C,
            'D' => Family::D,
            'E' => Family::E,
            'F' => Family::F,
            'G' => Family::G,
            other => return Err(Error::Parse(format!("unknown family letter '{other}'"))),
        };
        let digits = chars.as_str();
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) || digits.len() > 4 {
            return Err(Error::Parse(format!("bad rank in algebra id '{s}'")));
        }
        let rank: usize = digits
            .parse()
            .map_err(|_| Error::Parse(format!("bad rank in algebra id '{s}'")))?;
        AlgebraId::new(family, rank)
    }
}

impl Serialize for AlgebraId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AlgebraId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All constants attached to a simple type.
///
/// Matrices are indexed from 0, so node `a` of the Dynkin diagram sits at
/// index `a - 1`.
#[derive(Clone, Debug)]
pub struct AlgebraData {
    /// The type.
    pub id: AlgebraId,
    /// Cartan matrix `C_{ab} = <α_a^∨, α_b>`.
    pub cartan: Vec<Vec<i64>>,
    /// Exact inverse of the Cartan matrix.
    pub inv_cartan: Vec<Vec<Rat>>,
    /// `t = max_a t_a`.
    pub t: i64,
    /// `t_a = 2 / (α_a|α_a)`.
    pub t_values: Vec<i64>,
    /// `(α_a|α_b)`, long roots of squared length 2.
    pub bilinear_roots: Vec<Vec<Rat>>,
    /// `(Λ̄_a|Λ̄_b)`.
    pub bilinear_weights: Vec<Vec<Rat>>,
    /// Integer matrix `t (α_a|α_b)`, used in hot loops.
    pub form_t: Vec<Vec<i64>>,
    /// Dynkin neighbours of each node (0-based).
    pub neighbors: Vec<Vec<usize>>,
    /// Overalgebra `Y_n` (non-simply-laced only).
    pub y_algebra: Option<AlgebraId>,
    /// Subalgebra `Z_n` on the nodes with `t_a = t` (non-simply-laced only).
    pub z_algebra: Option<AlgebraId>,
    /// 1-based nodes with `t_a = t`, indexing `d_inverse`.
    pub d_nodes: Vec<usize>,
    /// Inverse Cartan matrix of `Z_n` on `d_nodes`.
    pub d_inverse: Vec<Vec<Rat>>,
}

fn edges(id: AlgebraId) -> Vec<(usize, usize)> {
    let n = id.rank;
    let chain = |k: usize| (1..k).map(|a| (a, a + 1)).collect::<Vec<_>>();
    match id.family {
        Family::A | Family::B | Family::C | Family::F | Family::G => chain(n),
        Family::D => {
            let mut e = chain(n - 1);
            e.push((n - 2, n));
            e
        }
        Family::E => match n {
            6 => {
                let mut e = chain(5);
                e.push((3, 6));
                e
            }
            7 => {
                let mut e = chain(6);
                e.push((3, 7));
                e
            }
            _ => {
                let mut e = chain(7);
                e.push((5, 8));
                e
            }
        },
    }
}

fn t_values(id: AlgebraId) -> Vec<i64> {
    let n = id.rank;
    (1..=n)
        .map(|a| match id.family {
            Family::A | Family::D | Family::E => 1,
            Family::B => {
                if a == n {
                    2
                } else {
                    1
                }
            }
            Family::C => {
                if a < n {
                    2
                } else {
                    1
                }
            }
            Family::F => {
                if a >= 3 {
                    2
                } else {
                    1
                }
            }
            Family::G => {
                if a == 2 {
                    3
                } else {
                    1
                }
            }
        })
        .collect()
}

/// Exact inverse of a square rational matrix by Gauss-Jordan elimination.
pub fn invert_matrix(m: &[Vec<Rat>]) -> Result<Vec<Vec<Rat>>> {
    let n = m.len();
    let mut a: Vec<Vec<Rat>> = m.to_vec();
    let mut inv: Vec<Vec<Rat>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Invalid("singular matrix".into()))?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = &a[col][j] / &p;
            inv[col][j] = &inv[col][j] / &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    let x = &f * &a[col][j];
                    a[r][j] = &a[r][j] - x;
                    let y = &f * &inv[col][j];
                    inv[r][j] = &inv[r][j] - y;
                }
            }
        }
    }
    Ok(inv)
}

/// Builds the full constant set for `id`.
pub fn algebra_data(id: AlgebraId) -> AlgebraData {
    let n = id.rank;
    let tv = t_values(id);
    let t = *tv.iter().max().expect("rank >= 1");
    let mut neighbors = vec![Vec::new(); n];
    let mut bil = vec![vec![Rat::zero(); n]; n];
    for a in 0..n {
        bil[a][a] = rat(2, tv[a]);
    }
    for (a, b) in edges(id) {
        let (a, b) = (a - 1, b - 1);
        neighbors[a].push(b);
        neighbors[b].push(a);
        // Adjacent roots: (α_a|α_b) = -max(1/t_a, 1/t_b).
        let v = -rat(1, tv[a].min(tv[b]));
        bil[a][b] = v.clone();
        bil[b][a] = v;
    }
    for nb in neighbors.iter_mut() {
        nb.sort_unstable();
    }
    let cartan: Vec<Vec<i64>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| rat_to_i64(&(&bil[a][b] * rat(tv[a], 1))).expect("integral Cartan entry"))
                .collect()
        })
        .collect();
    let cart_rat: Vec<Vec<Rat>> = cartan
        .iter()
        .map(|row| row.iter().map(|&x| rat(x, 1)).collect())
        .collect();
    let inv_cartan = invert_matrix(&cart_rat).expect("Cartan matrices are invertible");
    let bilinear_weights: Vec<Vec<Rat>> = (0..n)
        .map(|a| (0..n).map(|b| &inv_cartan[a][b] / rat(tv[a], 1)).collect())
        .collect();
    let form_t: Vec<Vec<i64>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| rat_to_i64(&(&bil[a][b] * rat(t, 1))).expect("t(α|α) is integral"))
                .collect()
        })
        .collect();
    let (y_algebra, z_algebra) = match id.family {
        Family::B => (Some(AlgebraId { family: Family::D, rank: n + 1 }), Some(AlgebraId { family: Family::A, rank: 1 })),
        Family::C => (
            Some(AlgebraId { family: Family::A, rank: 2 * n - 1 }),
            Some(AlgebraId { family: Family::A, rank: n - 1 }),
        ),
        Family::F => (Some(AlgebraId { family: Family::E, rank: 6 }), Some(AlgebraId { family: Family::A, rank: 2 })),
        Family::G => (Some(AlgebraId { family: Family::B, rank: 3 }), Some(AlgebraId { family: Family::A, rank: 1 })),
        _ => (None, None),
    };
    let (d_nodes, d_inverse) = if t > 1 {
        let nodes: Vec<usize> = (1..=n).filter(|&a| tv[a - 1] == t).collect();
        let sub: Vec<Vec<Rat>> = nodes
            .iter()
            .map(|&a| nodes.iter().map(|&b| cart_rat[a - 1][b - 1].clone()).collect())
            .collect();
        let inv = invert_matrix(&sub).expect("sub-Cartan invertible");
        (nodes, inv)
    } else {
        (Vec::new(), Vec::new())
    };
    AlgebraData {
        id,
        cartan,
        inv_cartan,
        t,
        t_values: tv,
        bilinear_roots: bil,
        bilinear_weights,
        form_t,
        neighbors,
        y_algebra,
        z_algebra,
        d_nodes,
        d_inverse,
    }
}

/// `K^{(l)}_{ij} = min(i,j) - ij/l`.
pub fn kernel_k(l: i64, i: i64, j: i64) -> Result<Rat> {
    if l == 0 {
        return invalid("kernel K^(l) needs l != 0");
    }
    Ok(rat(i.min(j), 1) - rat(i * j, l))
}

/// Which of the index sets `H_l`, `H̄_l`, `H_l[i]` to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HVariant {
    /// `H_l = {(a,j) : 1 <= j <= t_a l}`.
    Full,
    /// `H̄_l = {(a,j) : 1 <= j <= t_a l - 1}`.
    Bar,
    /// `H_l[i] = {(a,j) : (t_a/t)(i-1) < j <= t_a l}`.
    FromI(i64),
}

/// Lists the pairs `(a, j)` (1-based `a`) of the requested index set.
pub fn index_set_h(data: &AlgebraData, l: i64, variant: HVariant) -> Result<Vec<(usize, i64)>> {
    if l < 1 {
        return invalid("index sets need l >= 1");
    }
    if let HVariant::FromI(i) = variant {
        if i < 1 || i > data.t * l + 1 {
            return invalid(format!("H_l[i] needs 1 <= i <= tl+1, got i={i}"));
        }
    }
    let mut out = Vec::new();
    for (a0, &ta) in data.t_values.iter().enumerate() {
        for j in 1..=ta * l {
            let keep = match variant {
                HVariant::Full => true,
                HVariant::Bar => j <= ta * l - 1,
                HVariant::FromI(i) => ta * (i - 1) < data.t * j,
            };
            if keep {
                out.push((a0 + 1, j));
            }
        }
    }
    Ok(out)
}

impl AlgebraData {
    /// Rank `n`.
    pub fn rank(&self) -> usize {
        self.id.rank
    }

    /// Converts a weight to simple-root coordinates `C^{-1} λ`.
    pub fn to_root_coords(&self, lambda: &[i64]) -> Vec<Rat> {
        (0..self.rank())
            .map(|a| {
                lambda
                    .iter()
                    .enumerate()
                    .fold(Rat::zero(), |acc, (b, &x)| acc + &self.inv_cartan[a][b] * rat(x, 1))
            })
            .collect()
    }

    /// Root coordinates if all of them are integers.
    pub fn to_integral_root_coords(&self, lambda: &[i64]) -> Option<Vec<i64>> {
        self.to_root_coords(lambda).iter().map(rat_to_i64).collect()
    }

    /// Converts root coordinates back to a weight, `λ_b = Σ_a C_{ba} r_a`.
    pub fn from_root_coords(&self, r: &[i64]) -> Vec<i64> {
        let n = self.rank();
        (0..n)
            .map(|b| (0..n).map(|a| self.cartan[b][a] * r[a]).sum())
            .collect()
    }

    /// The simple root `α_a` (1-based) in weight coordinates.
    pub fn simple_root_weight(&self, a: usize) -> Vec<i64> {
        (0..self.rank()).map(|b| self.cartan[b][a - 1]).collect()
    }

    /// `(λ|μ)` for two weights.
    pub fn weight_form(&self, lambda: &[i64], mu: &[i64]) -> Rat {
        let mut acc = Rat::zero();
        for (a, &x) in lambda.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (b, &y) in mu.iter().enumerate() {
                if y != 0 {
                    acc += &self.bilinear_weights[a][b] * rat(x * y, 1);
                }
            }
        }
        acc
    }

    /// Simple reflection `s_a(λ) = λ - λ_a α_a` (1-based `a`).
    pub fn reflect(&self, a: usize, lambda: &[i64]) -> Result<Vec<i64>> {
        if a == 0 || a > self.rank() {
            return invalid(format!("reflection index {a} outside 1..={}", self.rank()));
        }
        let la = lambda[a - 1];
        Ok(lambda
            .iter()
            .enumerate()
            .map(|(b, &x)| x - la * self.cartan[b][a - 1])
            .collect())
    }

    /// Positive roots in simple-root coordinates, sorted by height.
    pub fn positive_roots(&self) -> Vec<Vec<i64>> {
        let n = self.rank();
        let mut roots: Vec<Vec<i64>> = (0..n)
            .map(|a| (0..n).map(|b| i64::from(a == b)).collect())
            .collect();
        let mut set: std::collections::HashSet<Vec<i64>> = roots.iter().cloned().collect();
        let mut k = 0;
        while k < roots.len() {
            let beta = roots[k].clone();
            for a in 0..n {
                // <β, α_a^∨> = Σ_b β_b C_{ab}.
                let pair: i64 = (0..n).map(|b| beta[b] * self.cartan[a][b]).sum();
                let mut p = 0;
                let mut down = beta.clone();
                loop {
                    down[a] -= 1;
                    if set.contains(&down) {
                        p += 1;
                    } else {
                        break;
                    }
                }
                let q = p - pair;
                if q > 0 {
                    let mut up = beta.clone();
                    up[a] += 1;
                    if set.insert(up.clone()) {
                        roots.push(up);
                    }
                }
            }
            k += 1;
        }
        roots.sort_by_key(|r| (r.iter().sum::<i64>(), r.clone()));
        roots
    }
}

/// Order of the Weyl group from the classical product formulas.
pub fn weyl_group_order(id: AlgebraId) -> BigInt {
    let n = id.rank;
    let fact = |k: usize| (1..=k).fold(BigInt::one(), |acc, x| acc * BigInt::from(x));
    match id.family {
        Family::A => fact(n + 1),
        Family::B | Family::C => fact(n) * (BigInt::one() << n),
        Family::D => fact(n) * (BigInt::one() << (n - 1)),
        Family::E => BigInt::from(match n {
            6 => 51_840u64,
            7 => 2_903_040,
            _ => 696_729_600,
        }),
        Family::F => BigInt::from(1152),
        Family::G => BigInt::from(12),
    }
}

/// Default bound on the Weyl group size for explicit enumeration.
pub const DEFAULT_WEYL_BOUND: u64 = 1_000_000;

/// A Weyl group element as a word in simple reflections, with its sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylElement {
    /// Reflection indices (1-based), applied right to left.
    pub word: Vec<usize>,
    /// `det w = (-1)^{len(word)}`.
    pub sign: i8,
}

impl WeylElement {
    /// Applies the element to a weight.
    pub fn act(&self, data: &AlgebraData, lambda: &[i64]) -> Vec<i64> {
        let mut v = lambda.to_vec();
        for &a in self.word.iter().rev() {
            v = data.reflect(a, &v).expect("word indices are valid");
        }
        v
    }
}

fn check_weyl_bound(id: AlgebraId, bound: u64) -> Result<()> {
    let order = weyl_group_order(id);
    if order > BigInt::from(bound) {
        return Err(Error::Unsupported(format!(
            "Weyl group of {id} has order {order}, above the enumeration bound {bound}"
        )));
    }
    Ok(())
}

/// Enumerates each Weyl group element once, by closure of the generators
/// acting on `ρ̄`. Refused when `|W|` exceeds `bound`.
pub fn weyl_elements(data: &AlgebraData, bound: u64) -> Result<Vec<WeylElement>> {
    check_weyl_bound(data.id, bound)?;
    let rho = vec![1i64; data.rank()];
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut out = vec![WeylElement { word: Vec::new(), sign: 1 }];
    seen.insert(rho.clone(), 0);
    let mut queue = VecDeque::from([(rho, 0usize)]);
    while let Some((v, idx)) = queue.pop_front() {
        for a in 1..=data.rank() {
            let w = data.reflect(a, &v)?;
            if !seen.contains_key(&w) {
                let mut word = vec![a];
                word.extend_from_slice(&out[idx].word);
                let sign = -out[idx].sign;
                seen.insert(w.clone(), out.len());
                out.push(WeylElement { word, sign });
                queue.push_back((w, out.len() - 1));
            }
        }
    }
    Ok(out)
}

/// The signed orbit `{(w μ, det w)}` of a strictly dominant weight `μ`.
pub fn signed_regular_orbit(data: &AlgebraData, mu: &[i64], bound: u64) -> Result<Vec<(Vec<i64>, i8)>> {
    check_weyl_bound(data.id, bound)?;
    if mu.iter().any(|&x| x <= 0) {
        return invalid("signed orbit needs a strictly dominant weight");
    }
    let mut seen: HashMap<Vec<i64>, i8> = HashMap::new();
    seen.insert(mu.to_vec(), 1);
    let mut queue = VecDeque::from([mu.to_vec()]);
    let mut out = vec![(mu.to_vec(), 1i8)];
    while let Some(v) = queue.pop_front() {
        let s = seen[&v];
        for a in 1..=data.rank() {
            let w = data.reflect(a, &v)?;
            if !seen.contains_key(&w) {
                seen.insert(w.clone(), -s);
                out.push((w.clone(), -s));
                queue.push_back(w);
            }
        }
    }
    Ok(out)
}

/// True when every coordinate is non-negative.
pub fn is_dominant(lambda: &[i64]) -> bool {
    lambda.iter().all(|&x| x >= 0)
}

/// `|x|` for a rational, used by diagnostics.
pub fn rat_abs(x: &Rat) -> Rat {
    x.abs()
}
