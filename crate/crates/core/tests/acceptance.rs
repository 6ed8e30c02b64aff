//! Acceptance suite: one test per criterion, each printing a single
//! `PASS`/`FAIL` line with the measured quantity, its tolerance and the
//! runtime. Lines are written straight to the process stdout so they show up
//! even when the test harness captures output.
//!
//! Criterion 8 has two parts. The bound part passes; the sharpness probe
//! (`criterion_08b_free_sharpness_probe`) asks for the truncated norm of
//! `ξ_0^{⋄2}(e⊗e)` to be within 2% of its limit 3 already at `N = 12`. The
//! truncated norm behaves like `3 − O(1/N²)` and is about 2.84 there, so that
//! test fails by design and documents the gap.

use std::io::Write;
use std::time::Instant;

use itertools::Itertools;
use qfock::combinat::{crossing_number, enumerate_pairings, mirror_double, IndexSet, Pairing};
use qfock::fock::{
    operator_norm, pq_spectrum, q_factorial, FockTensor, FockVector, Metric, TruncatedOperator,
};
use qfock::polywick::{
    counterterm_polynomial, delta_r, disentangle_check, phi4_2d_configs, phi4_3d_configs,
    CountertermConfig, DeltaPolynomial, InsertionPattern, Slot,
};
use qfock::qsde::{bphz_constant, chen_residual, ito_report, ito_step_on_grid, Convention, Mollifier, Side, TimeGrid};
use qfock::wickalg::{
    moment, multiply, to_operator, to_operator_upto, triple_norm, NormConstants, WickElement,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Prints the criterion line and fails the test when `pass` is false.
fn verdict(id: &str, title: &str, start: Instant, limit_s: Option<f64>, pass: bool, detail: String) {
    let elapsed = start.elapsed().as_secs_f64();
    let in_time = limit_s.is_none_or(|l| elapsed < l);
    let ok = pass && in_time;
    let limit = limit_s.map_or(String::new(), |l| format!(" (limit {l} s)"));
    let line = format!(
        "criterion {id:<3} {}  {title}: {detail}; {elapsed:.2} s{limit}\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded its time limit: {elapsed:.2} s{limit}");
}

fn random_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn random_tensor(rng: &mut ChaCha8Rng, d: usize, degree: usize) -> FockTensor {
    let coeffs = (0..d.pow(degree as u32)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    FockTensor::from_coeffs(d, degree, coeffs).unwrap()
}

/// A random element whose chaos components up to `max_chaos` are each present with probability ¾.
fn random_element(rng: &mut ChaCha8Rng, d: usize, max_chaos: usize) -> WickElement {
    let mut a = WickElement::zero(d);
    for k in 0..=max_chaos {
        if rng.gen_bool(0.75) {
            a.add_tensor(1.0, &random_tensor(rng, d, k)).unwrap();
        }
    }
    a
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn criterion_01_moment_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cutoff = 6;
    let q_grid = [-1.0, -0.9, -0.5, 0.0, 0.5, 0.9, 1.0];
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for d in 1..=3 {
        for &q in &q_grid {
            let basis: Vec<TruncatedOperator> = (0..d)
                .map(|i| {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    TruncatedOperator::field(&e, q, cutoff).unwrap()
                })
                .collect();
            for n in 0..=cutoff {
                for _ in 0..4 {
                    let fs: Vec<Vec<f64>> = (0..n).map(|_| random_vector(&mut rng, d)).collect();
                    let mut v = FockVector::vacuum(d);
                    for f in fs.iter().rev() {
                        let mut next = FockVector::zero(d);
                        for (i, op) in basis.iter().enumerate() {
                            next.add_scaled(f[i], &op.apply(&v).unwrap()).unwrap();
                        }
                        v = next;
                    }
                    let oracle = v.sector(0).map_or(0.0, |t| t.coeffs()[0]);
                    let value = if n == 0 { 1.0 } else { moment(&fs, q).unwrap() };
                    worst = worst.max((value - oracle).abs());
                    cases += 1;
                }
            }
        }
    }
    let e = vec![1.0];
    let four = |q: f64| moment(&[e.clone(), e.clone(), e.clone(), e.clone()], q).unwrap();
    let six = moment(&vec![e.clone(); 6], 1.0).unwrap();
    let spots = (four(1.0) - 3.0).abs() < 1e-12
        && (four(0.0) - 2.0).abs() < 1e-12
        && (four(-1.0) - 1.0).abs() < 1e-12
        && (four(0.5) - 2.5).abs() < 1e-12
        && (six - 15.0).abs() < 1e-12;
    verdict(
        "1",
        "q-Wick moments vs Fock matrices",
        start,
        Some(10.0),
        worst <= 1e-10 && spots,
        format!(
            "{cases} cases, max deviation {worst:.2e} ≤ 1e-10; 4th moment at q=1,0,−1 = {}, {}, {}; 6th at q=1 = {six}",
            four(1.0),
            four(0.0),
            four(-1.0)
        ),
    );
}

#[test]
fn criterion_02_commutation_relation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q_grid = [-1.0, -0.5, 0.0, 0.5, 0.9];
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let d = rng.gen_range(1..=4);
        let cutoff = rng.gen_range(1..=5);
        let q = q_grid[i % q_grid.len()];
        let (f, g) = (random_vector(&mut rng, d), random_vector(&mut rng, d));
        let ann = TruncatedOperator::annihilation(&f, q, cutoff).unwrap();
        let cre = TruncatedOperator::creation(&g, cutoff).unwrap();
        let lhs = ann
            .compose(&cre)
            .unwrap()
            .linear_combination(1.0, &cre.compose(&ann).unwrap(), -q)
            .unwrap();
        let rhs = TruncatedOperator::identity(d, cutoff).unwrap().scaled(dot(&f, &g));
        worst = worst.max(lhs.max_abs_diff(&rhs).unwrap());
    }
    verdict(
        "2",
        "commutation relation on exact sectors",
        start,
        Some(5.0),
        worst <= 1e-12,
        format!("200 instances, max entry deviation {worst:.2e} ≤ 1e-12"),
    );
}

#[test]
fn criterion_03_wick_algebra_vs_matrices() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cutoff = 8;
    let q_grid = [-0.9, -0.5, 0.0, 0.5, 0.9];
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let d = rng.gen_range(1..=3);
        let q = q_grid[i % q_grid.len()];
        let a = random_element(&mut rng, d, 3);
        let b = random_element(&mut rng, d, 3);
        let (ta, tb) = (a.max_chaos().unwrap_or(0), b.max_chaos().unwrap_or(0));
        let upto = cutoff - ta - tb;
        let product = multiply(&a, &b, q).unwrap();
        let op_ab = to_operator_upto(&product, q, cutoff, upto).unwrap();
        let op_b = to_operator_upto(&b, q, cutoff, upto).unwrap();
        let op_a = to_operator_upto(&a, q, cutoff, upto + tb).unwrap();
        let composed = op_a.compose(&op_b).unwrap();
        assert_eq!(composed.exact_upto(), Some(upto));
        worst = worst.max(op_ab.max_abs_diff(&composed).unwrap());
    }
    verdict(
        "3",
        "Wick-algebra product vs operator product",
        start,
        Some(60.0),
        worst <= 1e-10,
        format!("500 pairs, max deviation {worst:.2e} ≤ 1e-10"),
    );
}

#[test]
fn criterion_04_intertwining_example_and_doubling() {
    let start = Instant::now();
    let pi = Pairing::new(vec![(1, 4), (2, 5)], IndexSet::first_n(6)).unwrap();
    let stats = pi.stats();
    let example = (stats.cr, stats.sp, stats.crb) == (1, 2, 3);
    let mut checked = 0;
    let mut mismatches = 0;
    for n in 0..=6 {
        for p in enumerate_pairings(&IndexSet::first_n(n), None) {
            checked += 1;
            if 2 * p.stats().crb != crossing_number(&mirror_double(&p)) {
                mismatches += 1;
            }
        }
    }
    verdict(
        "4",
        "intertwining number example and doubling identity",
        start,
        Some(5.0),
        example && mismatches == 0,
        format!(
            "{{(1,4),(2,5)}} in [6]: cr={}, sp={}, crb={} (want 1, 2, 3); doubling identity on {checked} pairings, {mismatches} mismatches",
            stats.cr, stats.sp, stats.crb
        ),
    );
}

#[test]
fn criterion_05_renormalised_product_examples() {
    let start = Instant::now();
    let q: f64 = 0.37;
    let (f2, f3) = (vec![0.4, -0.3, 0.8], vec![-0.5, 0.6, 0.2]);
    let (g1, g2) = (vec![1.1, 0.2, -0.7], vec![0.3, -0.9, 0.5]);
    let d = 3;
    let pattern = InsertionPattern::new(vec![Slot::Leg, Slot::Insert, Slot::Leg, Slot::Insert, Slot::Leg]).unwrap();
    let pair = |s, t| Pairing::new(vec![(s, t)], pattern.legs()).unwrap();
    let cubic = |a: &[f64], b: &[f64], c: &[f64]| {
        FockTensor::product_of(d, &[a.to_vec(), b.to_vec(), c.to_vec()]).unwrap()
    };
    let build = |terms: Vec<(f64, FockTensor)>| {
        let mut e = WickElement::zero(d);
        for (c, t) in terms {
            e.add_tensor(c, &t).unwrap();
        }
        e
    };
    let v = |x: &[f64]| FockTensor::vector(x);
    let one = WickElement::one(d);

    // Single fields inserted.
    let fields = [one.clone(), WickElement::field(&g1), WickElement::field(&g2), one.clone()];
    let case_13 = delta_r(&pattern, &pair(1, 3), &v(&f2), &fields, q).unwrap();
    let want_13 = build(vec![
        (q.powi(3), cubic(&g1, &f2, &g2)),
        (q * q * dot(&g1, &g2), v(&f2)),
        (q * dot(&f2, &g2), v(&g1)),
        (q * dot(&g1, &f2), v(&g2)),
    ]);
    let case_12 = delta_r(&pattern, &pair(1, 2), &v(&f3), &fields, q).unwrap();
    let want_12 = build(vec![
        (q, cubic(&g1, &g2, &f3)),
        (q * dot(&g1, &g2), v(&f3)),
        (q * dot(&g2, &f3), v(&g1)),
        (q * q * dot(&g1, &f3), v(&g2)),
    ]);

    // A product of two fields inserted in the first slot.
    let pair_insert = multiply(&WickElement::field(&g1), &WickElement::field(&g2), q).unwrap();
    let product_ops = [one.clone(), pair_insert, one.clone(), one.clone()];
    let case_13b = delta_r(&pattern, &pair(1, 3), &v(&f2), &product_ops, q).unwrap();
    let want_13b = build(vec![
        (q.powi(3), cubic(&g1, &g2, &f2)),
        (q * dot(&g1, &g2), v(&f2)),
        (q * dot(&g2, &f2), v(&g1)),
        (q * q * dot(&g1, &f2), v(&g2)),
    ]);
    let case_12b = delta_r(&pattern, &pair(1, 2), &v(&f3), &product_ops, q).unwrap();
    let want_12b = build(vec![
        (q * q, cubic(&g1, &g2, &f3)),
        (dot(&g1, &g2), v(&f3)),
        (q * q * dot(&g2, &f3), v(&g1)),
        (q.powi(3) * dot(&g1, &f3), v(&g2)),
    ]);

    let devs = [
        case_13.max_abs_diff(&want_13),
        case_12.max_abs_diff(&want_12),
        case_13b.max_abs_diff(&want_13b),
        case_12b.max_abs_diff(&want_12b),
    ];
    let worst = devs.iter().copied().fold(0.0, f64::max);
    verdict(
        "5",
        "renormalised multiplication examples, (1,3) and (1,2) with field and product insertions",
        start,
        None,
        worst <= 1e-12,
        format!("deviations {:.1e}, {:.1e}, {:.1e}, {:.1e} ≤ 1e-12", devs[0], devs[1], devs[2], devs[3]),
    );
}

#[test]
fn criterion_06_disentanglement() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = 2;
    let q_grid = [-0.9, -0.5, 0.0, 0.5, 0.9];
    // Every word with three legs and two insertions.
    let words: Vec<Vec<Slot>> = (0..5)
        .combinations(2)
        .map(|ins| (0..5).map(|i| if ins.contains(&i) { Slot::Insert } else { Slot::Leg }).collect())
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let pattern = InsertionPattern::new(words[i % words.len()].clone()).unwrap();
        let q = q_grid[i % q_grid.len()];
        let fs: Vec<Vec<f64>> = (0..3).map(|_| random_vector(&mut rng, d)).collect();
        let ops = vec![
            random_element(&mut rng, d, 1),
            random_element(&mut rng, d, 2),
            random_element(&mut rng, d, 2),
            random_element(&mut rng, d, 1),
        ];
        let out = disentangle_check(&pattern, &fs, &ops, q).unwrap();
        worst = worst.max(out.lhs.max_abs_diff(&out.rhs));
    }
    verdict(
        "6",
        "disentanglement into renormalised products",
        start,
        Some(60.0),
        worst <= 1e-10,
        format!("100 instances over all 10 leg/insertion words, max deviation {worst:.2e} ≤ 1e-10"),
    );
}

#[test]
fn criterion_07_submultiplicativity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = 2;
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for q in [-0.9, -0.5, 0.5, 0.9] {
        for _ in 0..1000 {
            let a = random_element(&mut rng, d, 3);
            let b = random_element(&mut rng, d, 3);
            let lhs = triple_norm(&multiply(&a, &b, q).unwrap(), q).unwrap();
            let rhs = triple_norm(&a, q).unwrap() * triple_norm(&b, q).unwrap();
            if lhs > rhs + 1e-9 {
                violations += 1;
            }
            if rhs > 0.0 {
                worst_ratio = worst_ratio.max(lhs / rhs);
            }
        }
    }
    verdict(
        "7",
        "submultiplicativity of the graded norm",
        start,
        Some(60.0),
        violations == 0,
        format!("4000 pairs, {violations} violations, largest ratio {worst_ratio:.4}"),
    );
}

#[test]
fn criterion_08a_wick_power_operator_bound() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (d, cutoff) = (2, 6);
    let mut worst_ratio: f64 = 0.0;
    for q in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let c = NormConstants::new(q).unwrap();
        for i in 0..100 {
            let n = 1 + i % 3;
            let f = random_tensor(&mut rng, d, n);
            let op = to_operator(&WickElement::from_tensor(f.clone()), q, cutoff).unwrap();
            let est = operator_norm(&op, 0..=cutoff - n, Metric::Free).unwrap();
            let bound = (n as f64 + 1.0) * c.d_q.powi(n as i32) * c.c_q * f.norm();
            worst_ratio = worst_ratio.max(est / bound);
        }
    }
    verdict(
        "8a",
        "operator-norm bound for Wick powers",
        start,
        None,
        worst_ratio <= 1.0 + 1e-9,
        format!("500 tensors, largest estimate/bound ratio {worst_ratio:.4} ≤ 1"),
    );
}

#[test]
fn criterion_08b_free_sharpness_probe() {
    let start = Instant::now();
    let cutoff = 12;
    let e = FockTensor::product_of(1, &[vec![1.0], vec![1.0]]).unwrap();
    let op = to_operator(&WickElement::from_tensor(e), 0.0, cutoff).unwrap();
    let est = operator_norm(&op, 0..=cutoff - 2, Metric::Free).unwrap();
    let rel = (3.0 - est).abs() / 3.0;
    verdict(
        "8b",
        "free Wick square sharpness probe at N = 12",
        start,
        None,
        rel <= 0.02,
        format!("norm estimate {est:.6}, relative gap to 3 is {:.2}% (want ≤ 2%)", 100.0 * rel),
    );
}

#[test]
fn criterion_09_counterterm_polynomials() {
    let start = Instant::now();
    let two_d = counterterm_polynomial(&phi4_2d_configs()).unwrap();
    let configs: Vec<CountertermConfig> = phi4_3d_configs().into_iter().map(|c| c.config).collect();
    let three_d = counterterm_polynomial(&configs).unwrap();
    let want_2d = DeltaPolynomial::from_terms(&[(0, 0, 2), (0, 1, 1)]);
    let want_3d = DeltaPolynomial::from_terms(&[
        (0, 0, 3),
        (1, 0, 2),
        (0, 1, 4),
        (1, 1, 4),
        (0, 2, 2),
        (1, 2, 3),
    ]);
    let count = three_d.evaluate(1.0, 1.0);
    verdict(
        "9",
        "mass counterterm polynomials",
        start,
        Some(1.0),
        two_d == want_2d && three_d == want_3d && count == configs.len() as f64 && configs.len() == 18,
        format!("2d: {two_d}; 3d: {three_d}; value at q=Δ=1 is {count} for {} configs", configs.len()),
    );
}

#[test]
fn criterion_10_chen_identity() {
    let start = Instant::now();
    let m = 16;
    let grid = TimeGrid::new(1.0, m).unwrap();
    let one = WickElement::one(m);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for q in [-0.5, 0.0, 0.5] {
        for side in [Side::Left, Side::Right] {
            for c in [0.0, 0.5] {
                for i in 0..=m {
                    for j in i..=m {
                        for k in j..=m {
                            let [s, u, t] = [i, j, k].map(|x| x as f64 / m as f64);
                            let r = chen_residual(s, u, t, &one, side, &grid, q, c).unwrap();
                            worst = worst.max(r.max_abs());
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    verdict(
        "10",
        "Chen identity for left and right Lévy areas",
        start,
        Some(30.0),
        worst <= 1e-12,
        format!("{count} residuals, max coefficient {worst:.2e} ≤ 1e-12"),
    );
}

#[test]
fn criterion_11_bphz_constant() {
    let start = Instant::now();
    let mut values = Vec::new();
    for moll in [Mollifier::quartic(), Mollifier::triangle()] {
        for eps in [0.1, 0.01] {
            values.push((moll.name(), eps, bphz_constant(&moll, eps).unwrap()));
        }
    }
    let worst = values.iter().map(|v| (v.2 - 0.5).abs()).fold(0.0, f64::max);
    let listing = values
        .iter()
        .map(|(n, e, v)| format!("{n}@{e}={v:.10}"))
        .join(", ");
    verdict(
        "11",
        "BPHZ constant",
        start,
        Some(5.0),
        worst <= 1e-6,
        format!("{listing}; max |C − ½| = {worst:.1e} ≤ 1e-6"),
    );
}

#[test]
fn criterion_12_ito_residual() {
    let start = Instant::now();
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let mut exact = true;
    let mut reference: Option<WickElement> = None;
    for q in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let step = ito_step_on_grid(2, 0.5, &grid, q).unwrap();
        exact &= step.defect(2, Convention::Unordered).unwrap().max_abs() == 0.0;
        if let Some(r) = &reference {
            exact &= r.max_abs_diff(&step.residual) == 0.0;
        }
        reference = Some(step.residual);
    }
    let report = ito_report(3, 0.5, 1.0, &[16, 32, 64, 128], 0.5).unwrap();
    let slope = report.fit_slope.unwrap_or(f64::NAN);
    verdict(
        "12",
        "Itô residual",
        start,
        Some(120.0),
        exact && (1.4..=1.6).contains(&slope),
        format!(
            "p=2 exact and q-independent: {exact}; p=3 slope {slope:.4} in [1.4, 1.6]; matched convention: {}",
            report.matched_convention
        ),
    );
}

#[test]
fn criterion_13_symmetriser_spectrum() {
    let start = Instant::now();
    let mut pd = true;
    let mut bounded = true;
    let mut report = Vec::new();
    let mut nonneg_match = true;
    for q in [-0.9, -0.5, 0.5, 0.9] {
        let dq = 1.0 / (1.0 - f64::abs(q));
        for d in 1..=3 {
            for n in 1..=4 {
                let spec = pq_spectrum(d, n, q).unwrap();
                pd &= spec.min > 0.0;
                bounded &= spec.norm() <= dq.powi(n as i32) + 1e-10;
                let closed = q_factorial(n, q.abs());
                let gap = closed - spec.norm();
                if q > 0.0 {
                    nonneg_match &= gap.abs() < 1e-10;
                } else if gap.abs() > 1e-10 {
                    report.push(format!("q={q} d={d} n={n}: ‖P‖={:.6} < {closed:.6}", spec.norm()));
                }
            }
        }
    }
    let mut out = std::io::stdout().lock();
    for line in &report {
        writeln!(out, "    symmetriser norm below the q-factorial: {line}").unwrap();
    }
    drop(out);
    verdict(
        "13",
        "symmetriser positivity, norm bound and q-factorial comparison",
        start,
        None,
        pd && bounded && nonneg_match,
        format!(
            "positive definite: {pd}; ‖P_q|n‖ ≤ D_q^n: {bounded}; equals [n]_|q|! for q > 0: {nonneg_match}; {} strict gaps for q < 0 (all with d < n)",
            report.len()
        ),
    );
}
