//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_bigint::BigInt;
use serde_json::Value;
use twisted_core::ccomplex::{euler_check, les_check, reconstruction_check, tot_squares_to_zero, Chirality};
use twisted_core::cli::{self, audit_config, d2_pairs, monoidal_samples, triangle_suite, Options};
use twisted_core::document::Document;
use twisted_core::monoidal::{monoidal_audit, DualExponent};
use twisted_core::pretr::{
    compose_pretr, d_squared_audit, leibniz_holds, sign_audit, unit_laws_hold, PreTrHom,
    SignConvention,
};
use twisted_core::random::{
    as_twisted, audit_suite, random_ccomplex, random_choice_instance, random_complex, random_pretr_element,
    random_twisted, ComplexConfig, Rng, TwistedConfig,
};
use twisted_core::tr::{choice_independence, tr_hom};
use twisted_core::zmodule::snf;
use twisted_core::{FgAbGroup, IntMatrix, ZComplex};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn d_squared() -> Outcome {
    let start = Instant::now();
    let pairs = d2_pairs(7, 200);
    let r = d_squared_audit(&pairs);
    let secs = start.elapsed().as_secs_f64();
    let max_terms = pairs.iter().map(|(a, b)| a.indices().len().max(b.indices().len())).max().unwrap_or(0);
    ensure(
        r.violations == 0 && secs < 30.0 && audit_config().max_terms == 4,
        format!("200 pairs (max {max_terms} terms), {} violations, {secs:.2}s", r.violations),
    )
}

fn c_complexes_square_to_zero() -> Outcome {
    let mut rng = Rng::seed(17);
    let mut bad = 0;
    for ch in [Chirality::Left, Chirality::Right] {
        for _ in 0..200 {
            let c = random_ccomplex(&mut rng, ch, 4);
            if !(c.is_valid() && tot_squares_to_zero(&c)) {
                bad += 1;
            }
        }
    }
    ensure(bad == 0, format!("400 C-complexes (200 left, 200 right), {bad} violations"))
}

fn reconstruction() -> Outcome {
    let mut rng = Rng::seed(23);
    let cfg = TwistedConfig { max_terms: 3, max_summands: 2, ..Default::default() };
    let ccfg = ComplexConfig { max_len: 3, ..Default::default() };
    let (mut rows, mut cols, mut bad) = (0, 0, 0);
    for k in 0..100 {
        let (a, b) = match k % 3 {
            0 => (as_twisted(&rng.fresh("s"), random_complex(&mut rng, &ccfg), 0), random_twisted(&mut rng, &cfg, "b")),
            1 => (random_twisted(&mut rng, &cfg, "a"), as_twisted(&rng.fresh("s"), random_complex(&mut rng, &ccfg), 0)),
            _ => (random_twisted(&mut rng, &cfg, "a"), random_twisted(&mut rng, &cfg, "b")),
        };
        let r = reconstruction_check(&a, &b).map_err(|e| e.to_string())?;
        rows += usize::from(r.row.is_some());
        cols += usize::from(r.col.is_some());
        bad += usize::from(!r.passed());
    }
    ensure(bad == 0 && rows > 0 && cols > 0, format!("100 instances ({rows} row, {cols} col, 100 rl), {bad} mismatches"))
}

fn sign_conventions() -> Outcome {
    let samples = audit_suite(29, 100, &TwistedConfig { max_terms: 3, ..Default::default() });
    let r = sign_audit(&samples).map_err(|e| e.to_string())?;
    let pinned = SignConvention::PINNED;
    let mut rng = Rng::seed(30);
    let mut bad = 0;
    for s in &samples {
        let leibniz = leibniz_holds(s).map_err(|e| e.to_string())?;
        let units = unit_laws_hold(pinned, &s.a, &s.b, &s.f) && unit_laws_hold(pinned, &s.b, &s.c, &s.g);
        let h = random_pretr_element(&mut rng, &PreTrHom::new(&s.c, &s.a), 0, 2);
        let assoc = compose_pretr(&h, &compose_pretr(&s.g, &s.f)) == compose_pretr(&compose_pretr(&h, &s.g), &s.f);
        bad += usize::from(!(leibniz && units && assoc));
    }
    ensure(
        !r.consistent.is_empty() && r.consistent.contains(&pinned) && bad == 0,
        format!(
            "{} candidates, {} Leibniz-consistent, {} fully consistent, pinned exponent {}; {bad} failing triples of 100",
            r.candidates,
            r.leibniz.len(),
            r.consistent.len(),
            pinned.describe()
        ),
    )
}

fn triangulated() -> Outcome {
    let v = triangle_suite(37, 50, 25).map_err(|e| e.to_string())?;
    ensure(v["passed"] == Value::Bool(true), format!("50 cones of identities, 25 squares: failures {}", v["failures"]))
}

fn choice_independent() -> Outcome {
    let mut rng = Rng::seed(41);
    let cfg = TwistedConfig { max_terms: 2, ..Default::default() };
    let mut bad = 0;
    for _ in 0..20 {
        let ci = random_choice_instance(&mut rng, &cfg);
        let r = choice_independence(&ci.a, &ci.b, &ci.instance, &ci.first, &ci.second, &ci.meet)
            .map_err(|e| e.to_string())?;
        bad += usize::from(!r.passed());
    }
    ensure(bad == 0, format!("20 restricted instances, {bad} without an isomorphic zig-zag"))
}

fn monoidal() -> Outcome {
    let r = monoidal_audit(&monoidal_samples(43, 50)).map_err(|e| e.to_string())?;
    let sensitive = r.corrupted_failures > 0
        && !r.passing_exponents.contains(&DualExponent::CORRUPTED)
        && r.passing_exponents.contains(&DualExponent::STANDARD);
    let fails: usize = r.checks.iter().map(|(_, f)| f).sum();
    ensure(
        r.passed() && sensitive,
        format!("50 samples, {fails} identity failures; corrupted exponent rejected on {} sample(s)", r.corrupted_failures),
    )
}

// Independent oracles over machine integers.

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Invariant factors of a 2x2 matrix from determinantal divisors.
fn oracle_snf_2x2(m: [[i128; 2]; 2]) -> (i128, i128) {
    let d1 = m.iter().flatten().fold(0, |g, &x| gcd(g, x));
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    (d1, if d1 == 0 { 0 } else { det / d1 })
}

/// Whether `v` lies in the lattice spanned by the columns of an invertible 2x2 matrix (Cramer's rule).
fn in_lattice(m: [[i128; 2]; 2], v: [i128; 2]) -> bool {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let x = v[0] * m[1][1] - m[0][1] * v[1];
    let y = m[0][0] * v[1] - v[0] * m[1][0];
    x % det == 0 && y % det == 0
}

/// `Z^2 / im(m)` for invertible `m`: order and exponent, by enumerating a box of representatives.
fn oracle_cokernel(m: [[i128; 2]; 2]) -> (i128, i128) {
    let order = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    let mut reps: Vec<[i128; 2]> = Vec::new();
    let mut exponent = 1;
    for x in 0..order {
        for y in 0..order {
            let v = [x, y];
            if reps.iter().any(|r| in_lattice(m, [v[0] - r[0], v[1] - r[1]])) {
                continue;
            }
            reps.push(v);
            let k = (1..=order).find(|&k| in_lattice(m, [k * x, k * y])).expect("finite order");
            exponent = exponent.max(k);
        }
    }
    assert_eq!(reps.len() as i128, order);
    (order, exponent)
}

/// `H^0` of `Hom(Z[0], Z -2-> Z)`: cocycles `a` modulo `{2h}`, classes counted on a window.
fn oracle_tr_hom_classes() -> usize {
    let boundary = |x: i64| (-20..=20).any(|h| 2 * h == x);
    let mut reps: Vec<i64> = Vec::new();
    for a in -10..=10 {
        if !reps.iter().any(|&r| boundary(a - r)) {
            reps.push(a);
        }
    }
    reps.len()
}

fn concrete_values() -> Outcome {
    let (d1, d2) = oracle_snf_2x2([[2, 4], [6, 8]]);
    let s = snf(&IntMatrix::from_rows(&[[2, 4], [6, 8]]));
    let snf_ok = s.diagonal() == vec![BigInt::from(d1), BigInt::from(d2)] && (d1, d2) == (2, 4);

    let (order, exponent) = oracle_cokernel([[2, 0], [0, 3]]);
    let c = ZComplex::new(0, vec![2, 2], vec![IntMatrix::from_rows(&[[2, 0], [0, 3]])]).map_err(|e| e.to_string())?;
    let h = c.homology(1).map_err(|e| e.to_string())?;
    let cyclic = order == exponent;
    let h_ok = cyclic && h == FgAbGroup::cyclic(order as u64) && h == FgAbGroup::cyclic(6);

    let z = as_twisted("Z", ZComplex::concentrated(0, 1), 0);
    let r = as_twisted("R", ZComplex::two_term(-1, IntMatrix::from_rows(&[[2]])), 0);
    let classes = oracle_tr_hom_classes();
    let g = tr_hom(&z, &r).map_err(|e| e.to_string())?.group;
    let tr_ok = g == FgAbGroup::cyclic(classes as u64) && classes == 2;
    ensure(
        snf_ok && h_ok && tr_ok,
        format!("SNF [[2,4],[6,8]] = diag({d1},{d2}); H(diag(2,3)) = {h}; Hom_Tr(Z[0], Z-2->Z) = {g}"),
    )
}

fn spectral_sequence() -> Outcome {
    let mut rng = Rng::seed(47);
    let mut bad = 0;
    for k in 0..50 {
        let ch = if k % 2 == 0 { Chirality::Left } else { Chirality::Right };
        let c = random_ccomplex(&mut rng, ch, 2);
        let les = les_check(&c).map_err(|e| e.to_string())?;
        let (e1, tot) = euler_check(&c).map_err(|e| e.to_string())?;
        bad += usize::from(!(les.passed() && e1 == tot));
    }
    ensure(bad == 0, format!("50 C-complexes, {bad} failing exactness or Euler characteristic"))
}

fn cli_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/tests")
}

fn transcript(case: &Value) -> Result<String, String> {
    let str_of = |v: &Value| v.as_str().map(str::to_string).ok_or("malformed case");
    let mut texts = Vec::new();
    for f in case["inputs"].as_array().ok_or("inputs")? {
        let path = cli_dir().join("fixtures").join(str_of(f)?);
        texts.push(std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?);
    }
    let args: Vec<String> = case["args"].as_array().ok_or("args")?.iter().map(str_of).collect::<Result<_, _>>()?;
    let mut opts = Options::default();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let val = it.next().ok_or("flag without value")?;
        match flag.as_str() {
            "--trials" => opts.trials = Some(val.parse().map_err(|_| "trials")?),
            "--seed" => opts.seed = val.parse().map_err(|_| "seed")?,
            "--choice" => opts.choice = Some(val.clone()),
            "--by" => opts.by = val.parse().map_err(|_| "by")?,
            "--format" => opts.format = if val == "text" { cli::Format::Text } else { cli::Format::Json },
            _ => return Err(format!("unknown flag {flag}")),
        }
    }
    let docs: Vec<Document> = cli::load(&texts).map_err(|e| e.to_string())?;
    let out = cli::run(&str_of(&case["command"])?, &docs, &opts);
    Ok(format!("exit: {}\n{}", out.code, out.output))
}

fn golden_transcripts() -> Outcome {
    let text = std::fs::read_to_string(cli_dir().join("golden/cases.json")).map_err(|e| e.to_string())?;
    let cases: Vec<Value> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    let mut commands: Vec<String> = Vec::new();
    for case in &cases {
        let name = case["name"].as_str().unwrap_or("?").to_string();
        let first = transcript(case)?;
        let second = transcript(case)?;
        let golden = std::fs::read_to_string(cli_dir().join(format!("golden/{name}.txt"))).unwrap_or_default();
        if first != second || first != golden {
            bad.push(name);
        }
        commands.push(case["command"].as_str().unwrap_or("").to_string());
    }
    let missing: Vec<&str> = cli::COMMANDS.iter().copied().filter(|c| !commands.iter().any(|x| x == c)).collect();
    ensure(
        bad.is_empty() && missing.is_empty(),
        format!("{} transcripts over {} commands; unstable or changed: {bad:?}; uncovered: {missing:?}", cases.len(), cli::COMMANDS.len()),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("D∘D = 0 on twisted pairs", d_squared),
        ("C-complex total differentials square to zero", c_complexes_square_to_zero),
        ("row/col/RL assemblies equal Hom_PreTr", reconstruction),
        ("sign convention audit", sign_conventions),
        ("triangulated structure", triangulated),
        ("independence of distinguished choices", choice_independent),
        ("monoidal identities and negative control", monoidal),
        ("concrete values against oracles", concrete_values),
        ("two-column exactness and Euler characteristic", spectral_sequence),
        ("CLI golden transcripts", golden_transcripts),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (status, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {status} {name}: {detail} [{:.2}s]", k + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
