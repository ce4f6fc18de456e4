//! Property tests for the structural invariants of each module.

use std::collections::BTreeMap;

use fermisum::characters::{chi_q, decompose, weyl_character, weyl_dimension, CharacterPoly};
use fermisum::crystals::{classical_decompose, CrystalId, RMatrix, Tensor};
use fermisum::fermionic::{fermionic_m, fermionic_m_l, fermionic_m_l_eliminated, SumOptions, TensorSpec};
use fermisum::onedsum::{normalization_c, one_d_sum, B0Policy, PathSumSpec, Restriction};
use fermisum::qseries::{qbinom_bracket, LaurentPolyQ};
use fermisum::root_data::{algebra_data, AlgebraId};
use fermisum::verifier::{check_weyl_antisymmetry, dominant_cone, spec_from_crystals, AtQ};
use num_bigint::BigInt;
use num_traits::{One, Signed};
use proptest::prelude::*;

fn id(s: &str) -> AlgebraId {
    s.parse().unwrap()
}

fn any_algebra() -> impl Strategy<Value = AlgebraId> {
    prop_oneof![
        (1usize..=8).prop_map(|n| id(&format!("A{n}"))),
        (2usize..=8).prop_map(|n| id(&format!("B{n}"))),
        (2usize..=8).prop_map(|n| id(&format!("C{n}"))),
        (4usize..=8).prop_map(|n| id(&format!("D{n}"))),
        (6usize..=8).prop_map(|n| id(&format!("E{n}"))),
        Just(id("F4")),
        Just(id("G2")),
    ]
}

fn small_spec(algs: &'static [&'static str], max_s: i64) -> impl Strategy<Value = TensorSpec> {
    (0..algs.len()).prop_flat_map(move |k| {
        let alg = id(algs[k]);
        let n = alg.rank();
        proptest::collection::vec((1..=n, 1..=max_s), 1..=3).prop_map(move |fs| {
            let mut spec = TensorSpec::new(alg);
            for (a, s) in fs {
                spec.add(a, s, 1).unwrap();
            }
            spec
        })
    })
}

fn crystal_product(atoms: &'static [&'static str], max_len: usize) -> impl Strategy<Value = Vec<CrystalId>> {
    proptest::collection::vec(0..atoms.len(), 1..=max_len)
        .prop_map(move |ix| ix.into_iter().map(|i| atoms[i].parse().unwrap()).collect())
}

const A2_ATOMS: &[&str] = &["A2:1,1", "A2:1,2", "A2:1,3"];
const C2_ATOMS: &[&str] = &["C2:1,1", "C2:2,1", "C2:1,2"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn root_coordinates_round_trip(alg in any_algebra(), seed in proptest::collection::vec(-3i64..=3, 8)) {
        let data = algebra_data(alg);
        let r: Vec<i64> = seed[..data.rank()].to_vec();
        let lam = data.from_root_coords(&r);
        prop_assert_eq!(data.to_integral_root_coords(&lam), Some(r));
    }

    #[test]
    fn qbinomial_shape(p in 0i64..=8, m in 0i64..=8) {
        let b = qbinom_bracket(p, m).unwrap();
        prop_assert!(b.has_nonnegative_coeffs());
        prop_assert_eq!(b.min_degree(), Some(0));
        prop_assert_eq!(b.max_degree(), Some(p * m));
        prop_assert_eq!(b.invert_q().shift(m * p), b.clone());
        if p >= 1 && m >= 1 {
            let pascal = &qbinom_bracket(p - 1, m).unwrap() + &qbinom_bracket(p, m - 1).unwrap().shift(p);
            prop_assert_eq!(b, pascal);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn level_routes_agree(spec in small_spec(&["A1", "A2", "B2", "C2", "G2"], 2), extra in 0i64..=1) {
        let data = algebra_data(spec.algebra());
        let need = spec.support().map(|((a, j), _)| (j + data.t_values[a - 1] - 1) / data.t_values[a - 1]).max().unwrap();
        let l = need + extra;
        let direct = fermionic_m_l(&data, &spec, l, SumOptions::default()).unwrap().value;
        prop_assert!(direct.has_nonnegative_coeffs() && direct.in_q_inverse_ring());
        prop_assert_eq!(direct, fermionic_m_l_eliminated(&data, &spec, l).unwrap());
    }

    #[test]
    fn m_vanishes_outside_the_cone(spec in small_spec(&["A2", "B2", "C2"], 2), shift in proptest::collection::vec(-2i64..=2, 2)) {
        let data = algebra_data(spec.algebra());
        let top = spec.top_weight();
        let lam: Vec<i64> = top.iter().zip(&shift).map(|(t, s)| t + s).collect();
        let m = fermionic_m(&data, &spec, &lam, SumOptions::default()).unwrap().value;
        let inside = dominant_cone(&data, &top).contains(&lam);
        prop_assert!(inside || m.is_zero(), "λ={:?} outside the cone gives {}", lam, m);
        prop_assert!(m.has_nonnegative_coeffs() && m.in_q_inverse_ring());
    }

    #[test]
    fn antisymmetry_at_one(spec in small_spec(&["A2", "B2", "C2", "G2"], 2), a in 1usize..=2, lam in proptest::collection::vec(-2i64..=3, 2)) {
        let rep = check_weyl_antisymmetry(&spec, &lam, &[a], AtQ::One).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep);
    }

    #[test]
    fn r_matrix_is_a_crystal_morphism(l in 0usize..3, r in 0usize..3) {
        let (li, ri): (CrystalId, CrystalId) = (C2_ATOMS[l].parse().unwrap(), C2_ATOMS[r].parse().unwrap());
        let rm = RMatrix::get(li, ri).unwrap();
        let src = Tensor::new(&[li, ri]).unwrap();
        let dst = Tensor::new(&[ri, li]).unwrap();
        for b in src.elements() {
            let (x, y) = rm.apply(b[0], b[1]);
            prop_assert_eq!(dst.weight(&[x, y]), src.weight(&b));
            for i in 0..=src.rank() {
                let e = src.apply_e(i, &b).map(|v| rm.apply(v[0], v[1]));
                prop_assert_eq!(e.map(|(p, q)| vec![p, q]), dst.apply_e(i, &[x, y]));
                let f = src.apply_f(i, &b).map(|v| rm.apply(v[0], v[1]));
                prop_assert_eq!(f.map(|(p, q)| vec![p, q]), dst.apply_f(i, &[x, y]));
                if i != 0 {
                    if let Some(v) = src.apply_e(i, &b) {
                        prop_assert_eq!(rm.energy(v[0], v[1]), rm.energy(b[0], b[1]));
                    }
                }
            }
        }
        if li == ri {
            for b in src.elements() {
                prop_assert_eq!(rm.apply(b[0], b[1]), (b[0], b[1]));
            }
        }
    }

    #[test]
    fn path_count_matches_highest_elements(factors in crystal_product(C2_ATOMS, 3), lam in proptest::collection::vec(0i64..=3, 2)) {
        let t = Tensor::new(&factors).unwrap();
        let brute = t.elements().into_iter().filter(|b| t.is_classical_highest(b) && t.weight(b) == lam).count();
        let spec = PathSumSpec { factors, b0: B0Policy::Automatic, restriction: Restriction::Classical(lam) };
        prop_assert_eq!(one_d_sum(&spec, false).unwrap().value.eval_at_one(), BigInt::from(brute));
    }

    #[test]
    fn normalized_sum_ignores_factor_order(factors in crystal_product(A2_ATOMS, 3), rot in 0usize..3) {
        let data = algebra_data(id("A2"));
        let mut other = factors.clone();
        let k = rot % other.len();
        other.rotate_left(k);
        other.reverse();
        let top = spec_from_crystals(&factors).unwrap().top_weight();
        for lam in dominant_cone(&data, &top) {
            let x = |f: &Vec<CrystalId>| {
                let spec = PathSumSpec { factors: f.clone(), b0: B0Policy::Automatic, restriction: Restriction::Classical(lam.clone()) };
                one_d_sum(&spec, false).unwrap().normalized()
            };
            prop_assert_eq!(x(&factors), x(&other));
        }
    }

    #[test]
    fn level_restriction_is_monotone(factors in crystal_product(C2_ATOMS, 3)) {
        let sum = |r: Restriction| {
            one_d_sum(&PathSumSpec { factors: factors.clone(), b0: B0Policy::Automatic, restriction: r }, false).unwrap().value
        };
        let full = sum(Restriction::Classical(vec![0, 0]));
        let mut prev = LaurentPolyQ::zero();
        for l in 1..=4 {
            let cur = sum(Restriction::Level(l, vec![0, 0]));
            prop_assert!((&cur - &prev).has_nonnegative_coeffs());
            prop_assert!((&full - &cur).has_nonnegative_coeffs());
            prev = cur;
        }
    }

    #[test]
    fn irreducible_characters_decompose_to_themselves(alg in prop_oneof![Just("A2"), Just("A3"), Just("B2"), Just("B3"), Just("C3"), Just("G2")], lam in proptest::collection::vec(0i64..=2, 3)) {
        let data = algebra_data(id(alg));
        let lam = lam[..data.rank()].to_vec();
        let ch = weyl_character(&data, &lam).unwrap();
        let dec = decompose(&data, &ch).unwrap();
        prop_assert_eq!(dec.mult.len(), 1);
        prop_assert!(dec.get(&lam).is_one());
        prop_assert_eq!(ch.eval_at_one(), weyl_dimension(&data, &lam));
    }

    #[test]
    fn chi_q_is_consistent(alg in prop_oneof![Just("A2"), Just("B2"), Just("B3"), Just("C2"), Just("C3"), Just("D4")], a in 1usize..=4, j in 1i64..=3) {
        let data = algebra_data(id(alg));
        prop_assume!(a <= data.rank());
        let chi = chi_q(&data, a, j).unwrap();
        let dec = decompose(&data, &chi).unwrap();
        let total: BigInt = dec.mult.iter().map(|(l, m)| m * weyl_dimension(&data, l)).sum();
        prop_assert_eq!(chi.eval_at_one(), total);
        let mut top = vec![0; data.rank()];
        top[a - 1] = j;
        for (l, m) in &dec.mult {
            prop_assert!(m.is_positive());
            let diff: Vec<i64> = top.iter().zip(l).map(|(x, y)| x - y).collect();
            let r = data.to_integral_root_coords(&diff);
            prop_assert!(r.is_some_and(|r| r.iter().all(|&x| x >= 0)), "{:?} below {:?}", l, top);
        }
    }

    #[test]
    fn character_products_match_crystals(s1 in 1i64..=3, s2 in 1i64..=3) {
        // Row crystals of A3 are classically irreducible, B(1,s) ≅ V(sΛ1).
        let data = algebra_data(id("A3"));
        let (r1, r2) = (1, 1);
        let f = weyl_character(&data, &[s1, 0, 0]).unwrap();
        let g = weyl_character(&data, &[s2, 0, 0]).unwrap();
        let fg = &*f * &*g;
        prop_assert_eq!(&fg, &(&*g * &*f));
        let dec: BTreeMap<Vec<i64>, BigInt> = decompose(&data, &fg).unwrap().mult;
        let ids = [CrystalId::new(id("A3"), r1, s1).unwrap(), CrystalId::new(id("A3"), r2, s2).unwrap()];
        let crystal: BTreeMap<Vec<i64>, BigInt> =
            classical_decompose(&ids).unwrap().into_iter().map(|(l, m)| (l, BigInt::from(m))).collect();
        prop_assert_eq!(dec, crystal);
    }
}

#[test]
fn character_multiplication_is_associative() {
    let data = algebra_data(id("B2"));
    let v = |l: &[i64]| (*weyl_character(&data, l).unwrap()).clone();
    let (a, b, c) = (v(&[1, 0]), v(&[0, 1]), v(&[1, 1]));
    assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    assert!(!(&a * &b).is_zero());
    assert_eq!(CharacterPoly::one(2).eval_at_one(), BigInt::one());
}

/// The `A_1` spin-chain sum written directly: configurations `m_i >= 0`
/// with `2 Σ i m_i = L - k`, `p_i = L - 2 Σ_j min(i, j) m_j >= 0`, weight
/// `q^{Σ min(i,j) m_i m_j - L Σ m_i + L(L-1)/2} Π [p_i + m_i, m_i]_q`.
fn spin_chain_sum(len: i64, k: i64) -> LaurentPolyQ {
    fn rec(i: i64, left: i64, m: &mut Vec<i64>, len: i64, out: &mut LaurentPolyQ) {
        if left == 0 {
            let n = m.len();
            let mut c = len * (len - 1) / 2;
            let mut term = LaurentPolyQ::one();
            for a in 0..n {
                c -= len * m[a];
                for b in 0..n {
                    c += (a.min(b) as i64 + 1) * m[a] * m[b];
                }
                let p = len - 2 * (0..n).map(|b| (a.min(b) as i64 + 1) * m[b]).sum::<i64>();
                if p < 0 {
                    return;
                }
                term = &term * &qbinom_bracket(p, m[a]).unwrap();
            }
            *out = &*out + &term.shift(c);
            return;
        }
        if 2 * i > left {
            return;
        }
        for mi in 0..=left / (2 * i) {
            m.push(mi);
            rec(i + 1, left - 2 * i * mi, m, len, out);
            m.pop();
        }
    }
    let mut out = LaurentPolyQ::zero();
    rec(1, len - k, &mut Vec::new(), len, &mut out);
    out
}

#[test]
fn spin_chain_sum_is_shifted_by_the_triangular_number() {
    let data = algebra_data(id("A1"));
    for len in 1..=8i64 {
        let spec = TensorSpec::new(id("A1")).with(1, 1, len as u64).unwrap();
        for k in (len % 2..=len).step_by(2) {
            let m = fermionic_m(&data, &spec, &[k], SumOptions::default()).unwrap().value;
            assert_eq!(spin_chain_sum(len, k), m.shift(len * (len - 1) / 2), "L = {len}, k = {k}");
            // H(1 ⊗ 1) = 0 for the row crystal, so the path normalization vanishes.
            let factors = vec![CrystalId::new(id("A1"), 1, 1).unwrap(); len as usize];
            let paths = PathSumSpec { factors, b0: B0Policy::Automatic, restriction: Restriction::Classical(vec![k]) };
            assert_eq!(normalization_c(&paths).unwrap(), 0);
            assert_eq!(one_d_sum(&paths, false).unwrap().normalized(), m);
        }
    }
}
