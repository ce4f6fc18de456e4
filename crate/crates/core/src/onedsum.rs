//! Classically restricted and level-restricted one-dimensional sums.
//!
//! For factors `B_1 ⊗ ... ⊗ B_L` and a fixed `b_0 ∈ B_0` the sum runs over
//! paths `b_1 ⊗ ... ⊗ b_L` of weight `λ` with `ẽ_i` killing the path for
//! `i != 0` (and, in the level form, `ẽ_0^{l+1}` as well), weighted by
//! `q^{Σ_{0<=i<j<=L} H(b_i ⊗ b_j^{(i+1)})}`. Here `b_j^{(i+1)}` is `b_j`
//! carried left past `b_{j-1}, ..., b_{i+1}` by the R-matrix.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::crystals::{Crystal, CrystalId, RMatrix, Tensor};
use crate::error::{invalid, Error, Result};
use crate::qseries::LaurentPolyQ;

/// How `b_0` is chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum B0Policy {
    /// `B_0` is the crystal of the first factor and `b_0` the unique
    /// element with `φ(b_0) = k Λ_0`, `k = lev B_0`.
    Automatic,
    /// An explicit crystal and element index.
    Explicit(CrystalId, usize),
}

/// Which paths are summed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Restriction {
    /// Classical highest paths of weight `λ`.
    Classical(Vec<i64>),
    /// Additionally `ε_0(b_1 ⊗ ... ⊗ b_L) <= l`.
    Level(i64, Vec<i64>),
}

impl Restriction {
    fn lambda(&self) -> &[i64] {
        match self {
            Restriction::Classical(l) | Restriction::Level(_, l) => l,
        }
    }
}

/// Input of a one-dimensional sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSumSpec {
    /// Factors `B_1, ..., B_L` in order.
    pub factors: Vec<CrystalId>,
    /// Choice of `b_0`.
    pub b0: B0Policy,
    /// Path restriction.
    pub restriction: Restriction,
}

/// One contributing path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathRow {
    /// Element indices `b_1..b_L`.
    pub path: Vec<usize>,
    /// Rendered path.
    pub label: String,
    /// `Σ H(b_i ⊗ b_j^{(i+1)})`.
    pub energy: i64,
    /// `-E = -(energy - c)`.
    pub minus_e: i64,
    /// `ε_0(b_1 ⊗ ... ⊗ b_L)`.
    pub eps0: i64,
}

/// Value of a one-dimensional sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneDSumResult {
    /// `X(q)` with exponents `Σ H`.
    pub value: LaurentPolyQ,
    /// Normalization `c` for the highest paths `b^♮`.
    pub c: i64,
    /// Contributing paths in lexicographic order, when requested.
    pub ledger: Option<Vec<PathRow>>,
}

impl OneDSumResult {
    /// `q^{-c} X(q)`, the polynomial to compare with `M`.
    pub fn normalized(&self) -> LaurentPolyQ {
        self.value.shift(-self.c)
    }
}

struct Setup {
    tensor: Tensor,
    b0: usize,
    /// `rm[i][j]` = R-matrix on `B_i ⊗ B_j` (index 0 is `B_0`).
    rm: Vec<Vec<Option<Arc<RMatrix>>>>,
}

impl Setup {
    fn new(spec: &PathSumSpec) -> Result<Setup> {
        if spec.factors.is_empty() {
            return invalid("one-dimensional sum needs at least one factor");
        }
        let tensor = Tensor::new(&spec.factors)?;
        let (b0_crystal, b0) = match &spec.b0 {
            B0Policy::Automatic => {
                let c = Crystal::get(spec.factors[0]);
                (spec.factors[0], c.ground_element()?)
            }
            B0Policy::Explicit(id, b) => {
                if id.algebra != spec.factors[0].algebra {
                    return invalid("b_0 crystal must share the algebra");
                }
                if *b >= Crystal::get(*id).len() {
                    return invalid("b_0 index out of range");
                }
                (*id, *b)
            }
        };
        if spec.restriction.lambda().len() != tensor.rank() {
            return invalid("λ has the wrong length");
        }
        let all: Vec<CrystalId> = std::iter::once(b0_crystal).chain(spec.factors.iter().copied()).collect();
        let l = all.len();
        let mut rm = vec![vec![None; l]; l];
        for i in 0..l {
            for j in i + 1..l {
                if rm[i][j].is_none() {
                    rm[i][j] = Some(RMatrix::get(all[i], all[j])?);
                }
            }
        }
        Ok(Setup { tensor, b0, rm })
    }

    /// `Σ_{0<=i<j<=L} H(b_i ⊗ b_j^{(i+1)})` with `b_0` prepended.
    fn energy(&self, path: &[usize]) -> i64 {
        let full: Vec<usize> = std::iter::once(self.b0).chain(path.iter().copied()).collect();
        let mut total = 0;
        for j in 1..full.len() {
            let mut cur = full[j];
            for i in (0..j).rev() {
                let r = self.rm[i][j].as_ref().expect("built");
                total += r.energy(full[i], cur);
                cur = r.apply(full[i], cur).0;
            }
        }
        total
    }
}

/// Evaluates the sum, optionally keeping a per-path ledger.
pub fn one_d_sum(spec: &PathSumSpec, ledger: bool) -> Result<OneDSumResult> {
    let setup = Setup::new(spec)?;
    let t = &setup.tensor;
    let n = t.rank();
    let lambda = spec.restriction.lambda().to_vec();
    let level = match spec.restriction {
        Restriction::Level(l, _) => {
            if l < 0 {
                return invalid("level must be non-negative");
            }
            Some(l)
        }
        Restriction::Classical(_) => None,
    };
    let naturals: Vec<usize> = t.factors.iter().map(|c| c.highest()).collect();
    let c = setup.energy(&naturals);
    // Paths are extended left to right; the prefix conditions ε_i = 0
    // (i != 0) and ε_0 <= l are monotone under appending a factor.
    let first = &t.factors[0];
    let prefix_ok = |path: &[usize]| -> bool {
        let sub = Tensor { factors: t.factors[..path.len()].to_vec() };
        (1..=n).all(|i| sub.eps_phi(i, path).0 == 0) && level.is_none_or(|l| sub.eps_phi(0, path).0 <= l)
    };
    let rows: Vec<PathRow> = (0..first.len())
        .into_par_iter()
        .flat_map_iter(|b1| {
            let mut out = Vec::new();
            let mut path = vec![b1];
            fn rec(
                setup: &Setup,
                lambda: &[i64],
                prefix_ok: &dyn Fn(&[usize]) -> bool,
                path: &mut Vec<usize>,
                out: &mut Vec<PathRow>,
                c: i64,
            ) {
                if !prefix_ok(path) {
                    return;
                }
                let t = &setup.tensor;
                if path.len() == t.factors.len() {
                    if t.weight(path) == lambda {
                        let energy = setup.energy(path);
                        out.push(PathRow {
                            path: path.clone(),
                            label: t.render(path),
                            energy,
                            minus_e: -(energy - c),
                            eps0: t.eps_phi(0, path).0,
                        });
                    }
                    return;
                }
                for x in 0..t.factors[path.len()].len() {
                    path.push(x);
                    rec(setup, lambda, prefix_ok, path, out, c);
                    path.pop();
                }
            }
            rec(&setup, &lambda, &prefix_ok, &mut path, &mut out, c);
            out
        })
        .collect();
    let mut value = LaurentPolyQ::zero();
    for r in &rows {
        value.add_term(r.energy, BigInt::from(1));
    }
    Ok(OneDSumResult { value, c, ledger: ledger.then_some(rows) })
}

/// The `b_j^{(i)}` matrix for `b_0 ⊗ b_1 ⊗ ... ⊗ b_L`: entry `[i][j]` for
/// `i <= j` holds the index of `b_j^{(i)}` in `B_j`, others `None`.
pub fn corner_elements(spec: &PathSumSpec, path: &[usize]) -> Result<Vec<Vec<Option<usize>>>> {
    let setup = Setup::new(spec)?;
    if path.len() != spec.factors.len() {
        return invalid("path length differs from the number of factors");
    }
    let full: Vec<usize> = std::iter::once(setup.b0).chain(path.iter().copied()).collect();
    let l = full.len();
    let mut out = vec![vec![None; l]; l];
    for j in 0..l {
        out[j][j] = Some(full[j]);
        let mut cur = full[j];
        for i in (0..j).rev() {
            let r = setup.rm[i][j].as_ref().expect("built");
            cur = r.apply(full[i], cur).0;
            out[i][j] = Some(cur);
        }
    }
    Ok(out)
}

/// The normalization `c = Σ H(b^♮_i ⊗ (b^♮_j)^{(i+1)})`.
pub fn normalization_c(spec: &PathSumSpec) -> Result<i64> {
    let setup = Setup::new(spec)?;
    let naturals: Vec<usize> = setup.tensor.factors.iter().map(|c| c.highest()).collect();
    Ok(setup.energy(&naturals))
}

/// `Σ_{j=0}^{L-1} (L - j) H(b_j ⊗ b_{j+1})` for a homogeneous product.
pub fn homogeneous_energy(factor: CrystalId, b0: usize, path: &[usize]) -> Result<i64> {
    let r = RMatrix::get(factor, factor)?;
    let full: Vec<usize> = std::iter::once(b0).chain(path.iter().copied()).collect();
    let l = path.len() as i64;
    Ok((0..path.len()).map(|j| (l - j as i64) * r.energy(full[j], full[j + 1])).sum())
}

/// Path counts per weight at `q = 1`, by direct enumeration.
pub fn path_count(spec: &PathSumSpec) -> Result<u64> {
    Ok(one_d_sum(spec, false)?.value.eval_at_one().try_into().map_err(|_| Error::Internal("count overflow".into()))?)
}

/// Groups ledger rows by `ε_0`.
pub fn eps0_histogram(rows: &[PathRow]) -> BTreeMap<i64, usize> {
    let mut h = BTreeMap::new();
    for r in rows {
        *h.entry(r.eps0).or_insert(0) += 1;
    }
    h
}
