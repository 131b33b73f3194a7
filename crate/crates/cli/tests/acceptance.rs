//! Acceptance suite: one test per criterion, each printing a PASS line.
//! Run with `cargo test -p gasket-cli --test acceptance -- --nocapture`.

use std::collections::HashSet;
use std::path::PathBuf;
use std::process::Command;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use gasket_core::coupling::oracle::{
    censored_prefix_probability, enumerate_folded_prefix_masses, folded_prefix_probability,
    srw_prefix_probability, zero_subtree_paths_from_zero,
};
use gasket_core::exact::{exit_distribution, first_step_system, truncated_green_with_budget};
use gasket_core::geometry::{adjacent_combinatorial, adjacent_geometric, words_up_to_length};
use gasket_core::measures::{
    all_invariant_zero_sets, rational_to_f64, reflection_union_identity_holds,
    verify_group_invariance, verify_selfsimilar, VerifySpec,
};
use gasket_core::symbolic::{GasketConfig, Word};
use gasket_core::symmetry::{act_word, all_elements};
use gasket_core::walk::{limit_cell_histogram, SimulationSpec};

fn cfg(d: usize) -> GasketConfig {
    GasketConfig::new(d).unwrap()
}

fn passed(number: usize, description: &str) {
    println!("ACCEPTANCE {number:2} PASS  {description}");
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gasket-walk"))
}

/// Criterion 1: the exit law from the root is exactly uniform for
/// d in 1..=3 and levels 1..=5.
#[test]
fn criterion_01_uniform_exit_law() {
    for d in 1..=3 {
        let c = cfg(d);
        for level in 1..=5 {
            let dist = exit_distribution(&Word::root(), level, &c).unwrap();
            let expect = BigRational::new(
                BigInt::one(),
                BigInt::from((d + 1) as u64).pow(level as u32),
            );
            assert_eq!(
                dist.entries().len(),
                (d + 1).pow(level as u32),
                "d={d} level={level}: support size"
            );
            for (word, p) in dist.entries() {
                assert_eq!(*p, expect, "d={d} level={level} word={word}");
            }
        }
    }
    passed(1, "exit_distribution(root, N) exactly uniform, d<=3, N<=5");
}

/// Criterion 2: the first-step system solves to q = 1/(d+1) exactly for
/// d in 1..=5.
#[test]
fn criterion_02_first_step_system() {
    for d in 1..=5 {
        let c = cfg(d);
        let q = first_step_system(&c).unwrap();
        let expect = BigRational::new(BigInt::one(), BigInt::from((d + 1) as u64));
        assert_eq!(q.len(), d + 2);
        for (i, v) in q.iter().enumerate() {
            assert_eq!(*v, expect, "d={d} entry {i}");
        }
    }
    passed(2, "first_step_system = 1/(d+1) exactly, d<=5");
}

/// Criterion 3: the folded walk is exactly the simple random walk on the
/// 0-subtree. Two zero-tolerance routes:
/// (a) the full folded-prefix law, computed by exact excursion chains with
///     no horizon, equals the product of subgraph degrees;
/// (b) exhaustive path enumeration pushed through the real fold equals the
///     independently computed censored law at the stated horizons
///     (8 for d=1, 6 for d=2).
#[test]
fn criterion_03_coupling_exactness() {
    struct Case {
        d: usize,
        full_law_len: usize,
        horizon: usize,
        censored_len: usize,
    }
    let cases = [
        Case {
            d: 1,
            full_law_len: 7,
            horizon: 8,
            censored_len: 5,
        },
        Case {
            d: 2,
            full_law_len: 5,
            horizon: 6,
            censored_len: 4,
        },
    ];
    for case in cases {
        let c = cfg(case.d);

        let full_targets = zero_subtree_paths_from_zero(case.full_law_len, &c);
        for z in &full_targets {
            let got = folded_prefix_probability(z, &c);
            let expect = srw_prefix_probability(z, &c);
            assert_eq!(got, expect, "d={} full law, prefix {:?}", case.d, z);
        }

        let masses = enumerate_folded_prefix_masses(case.horizon, case.censored_len, &c);
        let censored_targets = zero_subtree_paths_from_zero(case.censored_len, &c);
        let valid: HashSet<Vec<Word>> = censored_targets.iter().cloned().collect();
        for key in masses.keys() {
            assert!(
                valid.contains(key),
                "d={}: fold produced a stray prefix {:?}",
                case.d,
                key
            );
        }
        for z in &censored_targets {
            let enumerated = masses.get(z).cloned().unwrap_or_else(BigRational::zero);
            let dp = censored_prefix_probability(z, case.horizon, &c);
            assert_eq!(
                enumerated, dp,
                "d={} horizon {} prefix {:?}",
                case.d, case.horizon, z
            );
            assert!(
                enumerated <= srw_prefix_probability(z, &c),
                "censored mass exceeds the law for {:?}",
                z
            );
        }
    }
    passed(
        3,
        "folded law = SRW on 0X exactly (full law + censored enumeration, d=1 H=8, d=2 H=6)",
    );
}

/// Criterion 4: the CLI reproduces the worked sample-path table, with the
/// documented correction of position 6 to 011.
#[test]
fn criterion_04_golden_trace() {
    let out = binary()
        .args([
            "coupling",
            "--d",
            "1",
            "--path",
            "-,0,-,1,10,100,011,01,00",
        ])
        .output()
        .expect("run gasket-walk");
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9);

    // (n, k, y, l, g-image-vector, z_tilde); identity encodes as "01".
    let expected = [
        (1, 0, "0", 0, "01", "0"),
        (4, 1, "10", 1, "10", "01"),
        (5, 2, "100", 1, "10", "011"),
        (7, 3, "01", 2, "01", "01"),
        (8, 4, "00", 2, "01", "00"),
    ];
    let jump_rows: Vec<&serde_json::Value> = rows
        .iter()
        .filter(|r| !r["k"].is_null())
        .collect();
    assert_eq!(jump_rows.len(), expected.len());
    for (row, (n, k, y, l, g, zt)) in jump_rows.iter().zip(expected) {
        assert_eq!(row["n"].as_u64().unwrap(), n as u64);
        assert_eq!(row["k"].as_u64().unwrap(), k as u64);
        assert_eq!(row["y"].as_str().unwrap(), y);
        assert_eq!(row["l"].as_u64().unwrap(), l as u64);
        assert_eq!(row["g"].as_str().unwrap(), g);
        assert_eq!(row["z_tilde"].as_str().unwrap(), zt);
    }
    // Skipped positions carry no jump data.
    for row in rows.iter().filter(|r| r["k"].is_null()) {
        assert!(row["y"].is_null() && row["g"].is_null() && row["z_tilde"].is_null());
    }
    passed(4, "CLI coupling reproduces the worked trace (position 6 read as 011)");
}

/// Criterion 5: at N=3 with burn 15 and 1e6 walks, the limit-cell histogram
/// is uniform within TV < 0.01 and every cell sits within 4 binomial
/// standard errors of (d+1)^-3, for d in {1, 2}.
#[test]
fn criterion_05_hitting_measure_is_uniform_at_desk_scale() {
    for (d, seed) in [(1usize, 101u64), (2, 102)] {
        let c = cfg(d);
        let level = 3;
        let walks = 1_000_000u64;
        let hist = limit_cell_histogram(
            &SimulationSpec::new(c, Word::root(), level, 15, walks).with_seed(seed),
        )
        .unwrap();
        let cells = (d + 1).pow(level as u32) as f64;
        let p = 1.0 / cells;
        let se = (p * (1.0 - p) / walks as f64).sqrt();

        let mut tv = 0.0;
        for word in gasket_core::geometry::words_of_length(level, &c) {
            let f = hist.fraction(&word);
            tv += (f - p).abs();
            assert!(
                (f - p).abs() <= 4.0 * se,
                "d={d} cell {word}: fraction {f} vs {p} (4se = {})",
                4.0 * se
            );
        }
        tv /= 2.0;
        assert!(tv < 0.01, "d={d}: tv = {tv}");
    }
    passed(5, "limit-cell histogram uniform: TV < 0.01 and all cells within 4 SE (d=1,2)");
}

/// Criterion 6: group invariance. Exact: the exit law from the root is
/// invariant and exit laws from moved starts are equivariant, for d<=3,
/// N<=4, zero tolerance. Statistical: 20 sampled cell sets at d=2, N=3,
/// 1e6 walks, within 4 SE against every group element.
#[test]
fn criterion_06_group_invariance() {
    for d in 1..=3 {
        let c = cfg(d);
        let group = all_elements(&c);
        for level in 1..=4 {
            let root_dist = exit_distribution(&Word::root(), level, &c).unwrap();
            for g in &group {
                assert_eq!(
                    root_dist.pushforward(g),
                    root_dist,
                    "d={d} N={level} g={g}: root invariance"
                );
            }
            if level >= 2 {
                let start = Word::parse("0", &c).unwrap();
                let base = exit_distribution(&start, level, &c).unwrap();
                for g in &group {
                    let moved = exit_distribution(&act_word(g, &start), level, &c).unwrap();
                    assert_eq!(
                        base.pushforward(g),
                        moved,
                        "d={d} N={level} g={g}: equivariance"
                    );
                }
            }
        }
    }

    let mut spec = VerifySpec::new(cfg(2), 3, 1_000_000, 601);
    spec.sample_sets = 20;
    spec.burn = 15;
    let report = verify_group_invariance(&spec).unwrap();
    assert!(report.exact_pass);
    assert_eq!(report.comparisons.len(), 20 * 6);
    for cmp in &report.comparisons {
        assert!(
            cmp.pass,
            "{} vs {}: z = {}, se = {}",
            cmp.lhs, cmp.rhs, cmp.z, cmp.se
        );
    }
    passed(6, "group invariance: exact equivariance (d<=3,N<=4) + 20 sampled sets at 4 SE");
}

/// Criterion 7: the self-similar identity. Exact set algebra for every
/// stabilizer-invariant union of 0-cells (d<=3, levels<=4), and Monte Carlo
/// agreement of the shift-preimage and reflected-union masses at d in {1,2},
/// N=3.
#[test]
fn criterion_07_selfsimilar_identity() {
    for d in 1..=3 {
        let c = cfg(d);
        for level in 1..=4 {
            let sets = all_invariant_zero_sets(level, &c);
            for b in &sets {
                assert!(
                    reflection_union_identity_holds(b, &c),
                    "d={d} level={level}: reflected-union identity fails for {b:?}"
                );
            }
        }
    }

    for (d, seed) in [(1usize, 701u64), (2, 702)] {
        let mut spec = VerifySpec::new(cfg(d), 3, 1_000_000, seed);
        spec.sample_sets = 8;
        spec.burn = 15;
        let report = verify_selfsimilar(&spec).unwrap();
        assert!(report.exact_pass, "d={d}: exact set algebra in verifier");
        for cmp in &report.comparisons {
            assert!(
                cmp.pass,
                "d={d}: {} vs {}: z = {}, se = {}",
                cmp.lhs, cmp.rhs, cmp.z, cmp.se
            );
        }
    }
    passed(7, "self-similar identity: exhaustive set algebra (d<=3,n<=4) + 4 SE Monte Carlo");
}

/// Criterion 8: the combinatorial and geometric adjacency oracles agree on
/// every pair of words up to level 5 for d in 1..=3.
#[test]
fn criterion_08_adjacency_oracles_agree() {
    for d in 1..=3 {
        let c = cfg(d);
        let words = words_up_to_length(5, &c);
        for a in &words {
            for b in &words {
                assert_eq!(
                    adjacent_combinatorial(a, b),
                    adjacent_geometric(a, b, &c),
                    "d={d} a={a} b={b}"
                );
            }
        }
    }
    passed(8, "combinatorial == geometric adjacency, all pairs to level 5, d<=3");
}

/// Criterion 9: killed Green functions satisfy reversibility exactly and
/// the Martin kernel normalizes at the root, for d<=2, R<=6.
#[test]
fn criterion_09_green_martin_invariants() {
    for d in 1..=2 {
        let c = cfg(d);
        for radius in 1..=6 {
            let green = truncated_green_with_budget(radius, &c, 800).unwrap();
            assert!(green.is_reversible(), "d={d} R={radius}: reversibility");
            for y in green.words() {
                assert_eq!(
                    green.martin_kernel(&Word::root(), y).unwrap(),
                    BigRational::one(),
                    "d={d} R={radius} y={y}: kernel at root"
                );
                assert!(
                    green.value(y, y).unwrap() >= BigRational::one(),
                    "d={d} R={radius} y={y}: diagonal"
                );
            }
        }
    }
    passed(9, "deg(x)G(x,y) = deg(y)G(y,x) and K(root,y) = 1 exactly, d<=2, R<=6");
}

/// Criterion 10: `simulate` output is byte-identical across worker counts
/// and repeated runs.
#[test]
fn criterion_10_simulate_determinism() {
    let dir = std::env::temp_dir().join(format!("gasket-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run = |jobs: Option<&str>, name: &str| -> Vec<u8> {
        let path: PathBuf = dir.join(name);
        let mut cmd = binary();
        cmd.args([
            "simulate",
            "--d",
            "2",
            "--level",
            "2",
            "--burn",
            "6",
            "--walks",
            "30000",
            "--seed",
            "5",
            "--start",
            "-",
        ]);
        if let Some(j) = jobs {
            cmd.args(["--jobs", j]);
        }
        cmd.args(["--out", path.to_str().unwrap()]);
        let out = cmd.output().expect("run gasket-walk simulate");
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(&path).unwrap()
    };
    let serial = run(Some("1"), "serial.csv");
    let parallel = run(Some("4"), "parallel.csv");
    let default = run(None, "default.csv");
    let repeat = run(Some("4"), "repeat.csv");
    assert_eq!(serial, parallel, "jobs=1 vs jobs=4");
    assert_eq!(serial, default, "jobs=1 vs default pool");
    assert_eq!(parallel, repeat, "repeated run");
    // Header carries the build identifier.
    let text = String::from_utf8(serial).unwrap();
    assert!(text.starts_with("# gasket-walk "));
    let fractions: f64 = text
        .lines()
        .skip(2)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((fractions - 1.0).abs() < 1e-9);
    std::fs::remove_dir_all(&dir).ok();
    passed(10, "simulate output byte-identical across worker counts and reruns");
}

/// Exact-versus-simulation cross-check used by several criteria's examples:
/// the exit law from an interior start matches Monte Carlo within 4 SE.
#[test]
fn supplementary_exact_law_matches_monte_carlo() {
    let c = cfg(1);
    let start = Word::parse("0", &c).unwrap();
    let exact = exit_distribution(&start, 2, &c).unwrap();
    let walks = 1_000_000u64;
    let hist = limit_cell_histogram(
        &SimulationSpec::new(c, start, 2, 0, walks).with_seed(4242),
    )
    .unwrap();
    for (word, p) in exact.entries() {
        let expect = rational_to_f64(p);
        let got = hist.fraction(word);
        let se = (expect * (1.0 - expect) / walks as f64).sqrt();
        assert!(
            (got - expect).abs() <= 4.0 * se,
            "{word}: {got} vs {expect}"
        );
    }
    passed(0, "supplementary: exact exit law matches 1e6-walk Monte Carlo within 4 SE");
}
