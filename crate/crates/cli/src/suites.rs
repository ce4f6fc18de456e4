//! The `verify` suites: batches of checks over fixed and seeded random
//! instances.

use fermisum::characters::{explicit_neighbor_factors, jacobi_trudi_check, qsystem_residual, ChiProvider};
use fermisum::crystals::{parse_crystal_shorthand, CrystalId};
use fermisum::fermionic::{fermionic_m, fermionic_m_l, SumOptions, TensorSpec};
use fermisum::onedsum::{one_d_sum, B0Policy, PathSumSpec, Restriction};
use fermisum::qseries::LaurentPolyQ;
use fermisum::root_data::{algebra_data, AlgebraId};
use fermisum::verifier::{
    exceptional_table_keys, check_exceptional_table, check_closed_form_oracle, check_completeness,
    check_m_equals_ninf, check_ml_equals_nl, check_recursion, check_weyl_antisymmetry, check_x_equals_m,
    dominant_cone, random_recursion_instance, random_spec, recursion_level, spec_from_crystals, AtQ, CheckReport,
    Kind, RecursionForm, Status, Witness, XMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which batch of checks to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Proved identities: recursion, completeness, Q-system, determinants.
    Theorems,
    /// Conjectures: X = M, M = N, M_l = N_l, antisymmetry at generic q.
    Conjectures,
    /// Agreement with printed tables.
    Golden,
}

impl Suite {
    /// Name used in reports.
    pub fn name(self) -> &'static str {
        match self {
            Suite::Theorems => "theorems",
            Suite::Conjectures => "conjectures",
            Suite::Golden => "golden",
        }
    }
}

/// Size knobs for the random parts of the suites.
#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    /// Seed of the instance generator.
    pub seed: u64,
    /// Random instances per algebra family.
    pub samples: usize,
    /// Include the largest exceptional tables in the golden suite.
    pub full: bool,
    /// Shard sums across the thread pool.
    pub parallel: bool,
}

/// The worked example of a `C_2` tensor product used by the golden suite.
pub const WORKED_EXAMPLE: &str = "C2:1,2 C2:2,1x3 C2:1,1x2";

/// The printed values of `X`, `X_2` and `X_1` for [`WORKED_EXAMPLE`] at `λ = 0`.
pub fn worked_example_printed() -> [(&'static str, LaurentPolyQ); 3] {
    [
        ("X", LaurentPolyQ::from_terms([(6, 1), (7, 2), (8, 2), (9, 3), (10, 2), (11, 3), (12, 2), (13, 1), (15, 1)])),
        ("X_2", LaurentPolyQ::from_terms([(8, 1), (9, 2), (10, 2), (11, 3), (12, 2), (13, 1), (15, 1)])),
        ("X_1", LaurentPolyQ::from_terms([(15, 1)])),
    ]
}

/// Exceptional tables whose check takes minutes; run only with `--full`.
const SLOW_TABLES: &[(&str, usize, i64)] = &[("E8", 4, 1), ("E8", 5, 1), ("E8", 3, 1), ("E8", 6, 1), ("E7", 4, 1)];

fn id(s: &str) -> AlgebraId {
    s.parse().expect("built-in algebra id")
}

fn golden(name: &str, instance: String, left: &LaurentPolyQ, right: &LaurentPolyQ) -> CheckReport {
    let ok = left == right;
    CheckReport {
        name: name.into(),
        instance,
        kind: Kind::Golden,
        status: if ok { Status::ProvedIdentityPass } else { Status::Fail },
        witness: (!ok).then(|| Witness {
            left: left.to_string(),
            right: right.to_string(),
            difference: (left - right).to_string(),
        }),
    }
}

fn theorem(name: &str, instance: String, ok: bool, detail: String) -> CheckReport {
    CheckReport {
        name: name.into(),
        instance,
        kind: Kind::Theorem,
        status: if ok { Status::ProvedIdentityPass } else { Status::Fail },
        witness: (!ok).then(|| Witness { left: detail, right: "0".into(), difference: String::new() }),
    }
}

/// Runs one suite and returns its reports in a fixed order.
pub fn run(suite: Suite, opts: SuiteOptions) -> fermisum::Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    match suite {
        Suite::Theorems => theorems(&mut rng, opts),
        Suite::Conjectures => conjectures(&mut rng, opts),
        Suite::Golden => golden_suite(opts),
    }
}

fn theorems(rng: &mut ChaCha8Rng, opts: SuiteOptions) -> fermisum::Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for alg in ["A2", "B2", "C2", "G2"] {
        for _ in 0..opts.samples {
            let (spec, a0, j0, lam) = random_recursion_instance(rng, id(alg));
            let l = recursion_level(&spec, a0, j0)?;
            for form in [RecursionForm::M, RecursionForm::Ml(l), RecursionForm::Nl(l)] {
                out.push(check_recursion(&spec, a0, j0, &lam, form)?);
            }
        }
    }
    for alg in ["A2", "B2", "C2", "C3", "D4"] {
        let rank = id(alg).rank();
        for _ in 0..opts.samples {
            let spec = random_spec(rng, id(alg), 3, 2);
            out.push(check_completeness(&spec, None)?);
            let lam: Vec<i64> = spec.top_weight().iter().map(|&t| rng.gen_range(-2..=t)).collect();
            for a in 1..=rank {
                out.push(check_weyl_antisymmetry(&spec, &lam, &[a], AtQ::One)?);
            }
        }
    }
    for alg in ["A1", "A2", "A3", "B2", "B3", "C2", "C3", "D4"] {
        let data = algebra_data(id(alg));
        let chi = ChiProvider::new(&data)?;
        for a in 1..=data.rank() {
            for j in 1..=3 {
                let residual = qsystem_residual(&data, a, j, &chi)?;
                let branch = explicit_neighbor_factors(&data, a, j).map(|(l, _)| format!(" [{l}]")).unwrap_or_default();
                out.push(theorem(
                    "q-system",
                    format!("{alg} a={a} j={j}{branch}"),
                    residual.is_zero(),
                    residual.to_string(),
                ));
            }
        }
    }
    for alg in ["B2", "B3"] {
        let data = algebra_data(id(alg));
        for a in 1..=data.rank() {
            for j in 0..=2 {
                let rep = jacobi_trudi_check(&data, a, j)?;
                out.push(theorem("jacobi-trudi", format!("{alg} a={a} j={j}"), rep.holds(), format!("{rep:?}")));
            }
        }
    }
    Ok(out)
}

fn products(atoms: &[&str], max_len: usize) -> Vec<Vec<CrystalId>> {
    let atoms: Vec<CrystalId> = atoms.iter().map(|s| s.parse().expect("built-in crystal")).collect();
    let mut layer: Vec<Vec<CrystalId>> = vec![Vec::new()];
    let mut all = Vec::new();
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|p| {
                atoms.iter().map(move |a| {
                    let mut q = p.clone();
                    q.push(*a);
                    q
                })
            })
            .collect();
        all.extend(layer.iter().cloned());
    }
    all
}

fn conjectures(rng: &mut ChaCha8Rng, opts: SuiteOptions) -> fermisum::Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for (alg, atoms) in [("A2", &["A2:1,1", "A2:1,2"][..]), ("C2", &["C2:1,1", "C2:2,1", "C2:1,2"][..])] {
        let data = algebra_data(id(alg));
        for factors in products(atoms, 3) {
            let spec = spec_from_crystals(&factors)?;
            for lam in dominant_cone(&data, &spec.top_weight()) {
                out.push(check_x_equals_m(&factors, &lam, XMode::Classical)?);
            }
            for l in 1..=2 {
                if spec.inside_h(&data, l) {
                    out.push(check_x_equals_m(&factors, &vec![0; data.rank()], XMode::Level(l))?);
                }
            }
        }
    }
    for alg in ["A1", "A2", "A3", "B2", "B3", "C2", "C3", "G2"] {
        let data = algebra_data(id(alg));
        for a in 1..=data.rank() {
            let spec = TensorSpec::new(id(alg)).with(a, 1, 1)?;
            for lam in dominant_cone(&data, &spec.top_weight()) {
                out.push(check_m_equals_ninf(&spec, &lam)?);
            }
        }
    }
    for alg in ["A2", "B2", "C2", "G2"] {
        let data = algebra_data(id(alg));
        for _ in 0..opts.samples {
            let spec = random_spec(rng, id(alg), 3, 2);
            let l = spec
                .support()
                .map(|((a, j), _)| (j + data.t_values[a - 1] - 1) / data.t_values[a - 1])
                .max()
                .unwrap_or(1);
            out.push(check_ml_equals_nl(&spec, l)?);
            let lam: Vec<i64> = spec.top_weight().iter().map(|&t| rng.gen_range(-2..=t)).collect();
            let a = rng.gen_range(1..=data.rank());
            out.push(check_weyl_antisymmetry(&spec, &lam, &[a], AtQ::Generic)?);
        }
    }
    Ok(out)
}

fn golden_suite(opts: SuiteOptions) -> fermisum::Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    let factors = parse_crystal_shorthand(WORKED_EXAMPLE)?;
    let spec = spec_from_crystals(&factors)?;
    let data = algebra_data(spec.algebra());
    let sum_opts = SumOptions { ledger: false, parallel: opts.parallel };
    for (name, printed) in worked_example_printed() {
        let restriction = match name {
            "X" => Restriction::Classical(vec![0, 0]),
            "X_2" => Restriction::Level(2, vec![0, 0]),
            _ => Restriction::Level(1, vec![0, 0]),
        };
        let x = one_d_sum(&PathSumSpec { factors: factors.clone(), b0: B0Policy::Automatic, restriction }, false)?;
        out.push(golden("worked-example-x", format!("{WORKED_EXAMPLE} {name}"), &x.normalized().invert_q(), &printed));
        let m = match name {
            "X" => fermionic_m(&data, &spec, &[0, 0], sum_opts)?,
            "X_2" => fermionic_m_l(&data, &spec, 2, sum_opts)?,
            _ => fermionic_m_l(&data, &spec, 1, sum_opts)?,
        };
        out.push(golden("worked-example-m", format!("{WORKED_EXAMPLE} {name}"), &m.value.invert_q(), &printed));
    }
    let counted = fermionic_m(&data, &spec, &[0, 0], sum_opts)?;
    let counts_ok = counted.total_configurations == 105.into() && counted.configuration_count == 6;
    out.push(CheckReport {
        name: "worked-example-configurations".into(),
        instance: format!("{WORKED_EXAMPLE} λ=0"),
        kind: Kind::Golden,
        status: if counts_ok { Status::ProvedIdentityPass } else { Status::Fail },
        witness: (!counts_ok).then(|| Witness {
            left: format!("{} / {}", counted.total_configurations, counted.configuration_count),
            right: "105 / 6".into(),
            difference: String::new(),
        }),
    });
    for alg in ["G2", "F4", "E6", "E7", "E8"] {
        for (r, s) in exceptional_table_keys(id(alg))? {
            if !opts.full && SLOW_TABLES.contains(&(alg, r, s)) {
                continue;
            }
            out.push(check_exceptional_table(id(alg), r, s, opts.parallel)?);
        }
    }
    for alg in ["A1", "A2", "A3", "B2", "B3", "C2", "C3", "D4"] {
        for r in 1..=id(alg).rank() {
            for s in 1..=2 {
                out.push(check_closed_form_oracle(id(alg), r, s)?);
            }
        }
    }
    Ok(out)
}
