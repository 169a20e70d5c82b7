//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test --test acceptance`; extra arguments filter criteria by name.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use code_surgery::analysis::{compare_schemes, overhead, CodeParams};
use code_surgery::codes::{
    estimate_css_distance, estimate_distance, exhaustive_css_distance, exhaustive_distance, CssCode, Distance, Side,
};
use code_surgery::constructions::{
    cyclic_repetition, hamming, hgp, product_complex, repetition, sc_hgp, tensor_code, ClassicalCode, ScHgpSpec,
};
use code_surgery::f2core::BitMatrix;
use code_surgery::io::{read_alist, read_code, read_json, read_text, to_json, write_alist, CodeJson};
use code_surgery::randomized::{construct, measures_exactly, random_basis_targets, GrowthConfig};
use code_surgery::surgery::{
    check_z_distance_preserved, map_degree, measured_space, merge, random_diagram, soundness_certificate,
    transversal_ancilla, verify_diagram, Soundness, SurgeryDiagram, ZDistanceCheck,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn steane() -> CssCode {
    let h = hamming(3).h;
    CssCode::new(h.clone(), h).unwrap()
}

/// Small data codes whose merged codes stay within exhaustive reach.
fn small_codes() -> Vec<(&'static str, CssCode)> {
    vec![
        ("hgp(rep2, rep2T)", hgp(&repetition(2), &repetition(2).transpose())),
        ("hgp(rep3, rep3T)", hgp(&repetition(3), &repetition(3).transpose())),
        ("steane", steane()),
    ]
}

fn classical_k(c: &ClassicalCode) -> usize {
    c.n() - c.h.rank()
}

fn kunneth() -> Outcome {
    let start = Instant::now();
    let h = hamming(3);
    let code = hgp(&h, &h.transpose());
    let dx = estimate_css_distance(&code, Side::X, 0, 200, 1).d_upper;
    let dz = estimate_css_distance(&code, Side::Z, 0, 200, 1).d_upper;
    ensure!(
        code.n() == 58 && code.k() == 16 && dx == Distance::Finite(3) && dz == Distance::Finite(3),
        "hgp(hamming3, hamming3T) gave n={} k={} d_x<={dx} d_z<={dz}",
        code.n(),
        code.k()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(58);
    for i in 0..50 {
        let (rb, nb, rd, nd) = (rng.gen_range(1..5), rng.gen_range(1..7), rng.gen_range(1..5), rng.gen_range(1..7));
        let b = ClassicalCode::new(BitMatrix::random(rb, nb, 0.5, &mut rng));
        let d = ClassicalCode::new(BitMatrix::random(rd, nd, 0.5, &mut rng));
        let pc = product_complex(&b, &d);
        let k1 = classical_k(&b.transpose()) * classical_k(&d) + classical_k(&b) * classical_k(&d.transpose());
        let k2 = classical_k(&b) * classical_k(&d);
        ensure!(pc.code.n() == nb * rd + rb * nd, "pair {i}: qubit count {}", pc.code.n());
        ensure!(pc.code.k() == k1, "pair {i}: middle homology {} != {k1}", pc.code.k());
        ensure!(classical_k(&tensor_code(&b, &d)) == k2, "pair {i}: top homology differs from {k2}");
        ensure!(pc.code.hz.mul(&pc.code.hx.transpose()).unwrap().is_zero(), "pair {i}: boundary of boundary nonzero");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("[[58,16,3]] exact; 50 random pairs; {:.2}s", elapsed.as_secs_f64()))
}

/// Reference SC-HGP instances: n, (r_C, n_C, L), (qubit degree, check weight) caps.
const SC_TABLE: [(usize, (usize, usize, usize), (usize, usize)); 4] =
    [(136, (3, 5, 2), (5, 8)), (405, (3, 6, 3), (6, 9)), (720, (3, 6, 4), (4, 6)), (1125, (3, 6, 5), (6, 9))];

fn sc_parameters() -> Outcome {
    let mut summary = Vec::new();
    for (n, (r_c, n_c, l), (qdeg, cw)) in SC_TABLE {
        let spec: ScHgpSpec = read_json(&data_dir().join(format!("sc_spec_{n}.json"))).map_err(|e| e.to_string())?;
        ensure!((spec.r_c, spec.n_c, spec.l) == (r_c, n_c, l), "sc_spec_{n}: wrong shape");
        let code = sc_hgp(&spec).map_err(|e| e.to_string())?;
        ensure!(code.n() == n, "sc({r_c},{n_c},{l}) has n = {}", code.n());
        let k_min = match n {
            1125 => 225,
            136 => 16,
            _ => spec.k_lower_bound(),
        };
        ensure!(code.k() >= k_min, "sc n={n}: k = {} < {k_min}", code.k());
        let p = code.degree_profile();
        ensure!(
            p.max_qubit_degree <= qdeg && p.max_check_weight_x.max(p.max_check_weight_z) <= cw,
            "sc n={n}: degree profile {p:?} exceeds ({qdeg}, {cw})"
        );
        let (shipped, _) = read_code(&data_dir().join(format!("sc_{n}.json"))).map_err(|e| e.to_string())?;
        ensure!(shipped.hx == code.hx && shipped.hz == code.hz, "sc_{n}.json differs from its spec");
        summary.push(format!("n={n} k={}", code.k()));
    }
    Ok(summary.join(", "))
}

fn all_vectors(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << n).map(move |m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
}

fn span(m: &BitMatrix) -> BTreeSet<Vec<usize>> {
    all_vectors(m.n_rows())
        .map(|sel| {
            let mut acc = vec![false; m.n_cols()];
            sel.iter().for_each(|&r| m.row(r).iter().for_each(|&c| acc[c] ^= true));
            (0..m.n_cols()).filter(|&c| acc[c]).collect()
        })
        .collect()
}

fn measured_space_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let codes = small_codes();
    let mut checked = 0;
    while checked < 100 {
        let (_, data) = &codes[checked % codes.len()];
        let checks = rng.gen_range(1..=12);
        let diag = random_diagram(data, checks, rng.gen_range(0..3), &mut rng);
        // kernel vectors found by enumerating every ancilla X-check subset
        let mut images = BTreeSet::new();
        for x in all_vectors(diag.a1()) {
            let col = BitMatrix::from_index_rows(diag.a1(), [x]).transpose();
            if diag.d1a.mul(&col).unwrap().is_zero() {
                images.insert(diag.gamma1.mul(&col).unwrap().transpose().row(0).to_vec());
            }
        }
        let ms = measured_space(&diag).map_err(|e| e.to_string())?;
        ensure!(span(&ms.m) == images, "diagram {checked}: measured space differs from the enumeration");
        checked += 1;
    }
    Ok(format!("{checked} random diagrams, kernel dimension <= 12"))
}

/// Diagrams on small codes: transversal ancillas on logical supports,
/// random valid diagrams, and randomized constructions.
fn small_diagrams() -> Vec<SurgeryDiagram> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (_, data) in small_codes() {
        for l in data.lx.rows() {
            out.push(transversal_ancilla(&data, l));
        }
        for i in 0..20 {
            out.push(random_diagram(&data, 1 + i % 5, i % 3, &mut rng));
        }
        for seed in 0..3 {
            let (code, targets) = random_basis_targets(&data, 1, seed).unwrap();
            let target_d = exhaustive_css_distance(&code, Side::X).unwrap().finite().unwrap();
            let cfg = GrowthConfig { target_d, seed, max_layers: 2, ..Default::default() };
            if let Ok(c) = construct(&code, &targets, &cfg) {
                out.push(c.diagram);
            }
        }
    }
    out
}

fn z_distance() -> Outcome {
    let mut checked = 0;
    for diag in small_diagrams() {
        let merged = merge(&diag).map_err(|e| e.to_string())?;
        if merged.n() > 28 {
            continue;
        }
        let dz = exhaustive_css_distance(&diag.data, Side::Z).map_err(|e| e.to_string())?;
        let check = check_z_distance_preserved(&merged, dz, 0, 0).map_err(|e| e.to_string())?;
        ensure!(check == ZDistanceCheck::Pass { exhaustive: true }, "merged code on {} qubits: {check:?}", merged.n());
        checked += 1;
    }
    ensure!(checked >= 50, "only {checked} merged codes within 28 qubits");
    // fault injection: drop X checks from a merged code that keeps a bare logical;
    // toric checks are redundant in pairs, so single drops can leave the group intact
    let data = hgp(&cyclic_repetition(3), &cyclic_repetition(3));
    let dz = exhaustive_css_distance(&data, Side::Z).unwrap();
    let merged = merge(&transversal_ancilla(&data, data.lx.row(0))).unwrap();
    let rows = merged.code.stabilizer_x.n_rows();
    let witness = (0..rows).flat_map(|a| (a..rows).map(move |b| (a, b))).find_map(|(a, b)| {
        let keep: Vec<usize> = (0..rows).filter(|&r| r != a && r != b).collect();
        let mut bad = merged.clone();
        bad.code.stabilizer_x = merged.code.stabilizer_x.select_rows(&keep);
        match check_z_distance_preserved(&bad, dz, 0, 0).unwrap() {
            ZDistanceCheck::Witness { weight, .. } => Some(weight),
            ZDistanceCheck::Pass { .. } => None,
        }
    });
    ensure!(witness.is_some(), "fault-injected merged code shows no witness");
    Ok(format!("{checked} merged codes exhaustive; injected fault witness weight {}", witness.unwrap()))
}

fn reduced_weight(h: &BitMatrix, x: &[usize]) -> usize {
    span(&h.kernel_basis())
        .iter()
        .map(|u| u.iter().collect::<BTreeSet<_>>().symmetric_difference(&x.iter().collect()).count())
        .min()
        .unwrap()
}

fn syndrome_weight(h: &BitMatrix, x: &[usize]) -> usize {
    h.mul(&BitMatrix::from_index_rows(h.n_cols(), [x.to_vec()]).transpose()).unwrap().row_weights().iter().sum()
}

fn soundness() -> Outcome {
    let start = Instant::now();
    for t in 1..=4 {
        let rho = soundness_certificate(&BitMatrix::identity(4), t).map_err(|e| e.to_string())?;
        ensure!(rho == Some(Soundness { num: 1, den: 1 }), "identity at t={t}: {rho:?}");
    }
    let h = tensor_code(&repetition(3), &repetition(3)).h;
    for x in all_vectors(9) {
        let s = syndrome_weight(&h, &x);
        // soundness constrains syndromes lighter than min(d_B, d_D) = 3
        if s < 3 {
            ensure!(4 * reduced_weight(&h, &x) <= s * s, "tensor rep3 violates the quadratic bound at {x:?}");
        }
    }
    let mut checked = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut diagrams = small_diagrams();
    for (_, data) in small_codes() {
        for seed in 0..30 {
            // transversal ancilla plus random redundant X checks, which create gauge logicals
            let mut diag = transversal_ancilla(&data, data.lx.row(seed % data.k()));
            for _ in 0..rng.gen_range(1..3) {
                let row: Vec<usize> = (0..diag.a1()).filter(|_| rng.gen_bool(0.4)).collect();
                let mut rows = diag.d1a.rows().to_vec();
                rows.push(row);
                diag.d1a = BitMatrix::from_index_rows(diag.a1(), rows);
                diag.gamma0 = diag.gamma0.embed_columns(diag.gamma0.n_cols() + 1, 0);
                diag.d0a = BitMatrix::zeros(0, diag.d1a.n_rows());
            }
            diagrams.push(diag);
        }
    }
    for diag in diagrams {
        let Ok(merged) = merge(&diag) else { continue };
        if merged.n() > 24 {
            continue;
        }
        let (boundary, chain) = merged.gauged_maps(&diag);
        if boundary.n_cols() > 24 {
            continue;
        }
        let d = exhaustive_css_distance(&diag.data, Side::X).unwrap().finite().unwrap();
        let bound = match soundness_certificate(&boundary, d).map_err(|e| e.to_string())? {
            Some(rho) => rho.distance_bound(map_degree(&chain), d),
            None => d as f64,
        };
        let dm = exhaustive_distance(&merged.code, Side::X).map_err(|e| e.to_string())?;
        if let Distance::Finite(w) = dm {
            ensure!(w as f64 >= bound - 1e-9, "merged distance {w} below the certified bound {bound}");
        }
        checked += 1;
    }
    ensure!(checked >= 50, "only {checked} instances within 24 qubits");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!("identity 1, tensor rep3 quadratic, {checked} distance bounds; {:.1}s", elapsed.as_secs_f64()))
}

fn gross_end_to_end(t: usize) -> Outcome {
    let cfg_file: serde_json::Value =
        serde_json::from_str(&read_text(&data_dir().join("gross_seeds.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let (base, _) = read_code(&data_dir().join(cfg_file["code"].as_str().unwrap())).map_err(|e| e.to_string())?;
    let target_d = cfg_file["target_d"].as_u64().unwrap() as usize;
    let probe_seed = cfg_file["probe_seed"].as_u64().unwrap();
    let probe_trials = cfg_file["probe_trials"].as_u64().unwrap() as usize;
    let seeds: Vec<u64> =
        cfg_file["seeds"][t.to_string()].as_array().unwrap().iter().map(|s| s.as_u64().unwrap()).collect();
    let data_degree = base.degree_profile().max_degree();
    let mut lines = Vec::new();
    let mut passed = false;
    for seed in seeds {
        let start = Instant::now();
        let (code, targets) = random_basis_targets(&base, t, seed).map_err(|e| e.to_string())?;
        let cfg = GrowthConfig { target_d, seed, ..Default::default() };
        let c = construct(&code, &targets, &cfg).map_err(|e| e.to_string())?;
        let a = verify_diagram(&c.diagram).map_err(|e| e.to_string())?.is_certificate();
        let b = measures_exactly(&code, &c.merged.measured_logical, &targets);
        let merged_degree = c.merged.degree_profile.max_degree();
        let cc = merged_degree <= data_degree + 2;
        let wx = estimate_distance(&c.merged.code, Side::X, target_d - 1, probe_trials, probe_seed).witnesses.n_rows();
        let wz = estimate_distance(&c.merged.code, Side::Z, target_d - 1, probe_trials, probe_seed).witnesses.n_rows();
        let d = wx == 0 && wz == 0;
        let size = c.diagram.ancilla_size();
        let e = size <= 144;
        let ratio = overhead(&c.diagram, target_d, t, 1).ratio_to_memory;
        let f = ratio <= 2.5;
        let elapsed = start.elapsed().as_secs_f64();
        let within_budget = elapsed <= 1800.0;
        let all = a && b && cc && d && e && f && within_budget;
        passed |= all;
        lines.push(format!(
            "seed {seed}: a={a} b={b} c={cc}(deg {merged_degree}) d={d}(witnesses {wx}/{wz}) e={e}(|A|={size}, qubits {}) f={f}(ratio {ratio:.3}) {elapsed:.1}s",
            c.diagram.a0()
        ));
    }
    let detail = lines.join("\n    ");
    if passed {
        Ok(detail)
    } else {
        Err(format!("no shipped seed passes (a)-(f)\n    {detail}"))
    }
}

fn overhead_tables() -> Outcome {
    let p = CodeParams { n: 144, k: 12, d: 12, total_size: 288 };
    let mut worst: f64 = 0.0;
    for t in 1..=12 {
        let rows = compare_schemes(&p, t, None);
        ensure!(rows[0].ratio_to_memory == 1.0, "memory row ratio {}", rows[0].ratio_to_memory);
        if t >= 3 {
            let high = rows[3].alpha;
            ensure!(
                high <= rows[1].alpha && high <= rows[2].alpha,
                "t={t}: high-rate alpha {high} exceeds a low-rate scheme"
            );
            ensure!(rows[3].ratio_to_memory <= 2.5, "t={t}: high-rate ratio {}", rows[3].ratio_to_memory);
            worst = worst.max(rows[3].ratio_to_memory);
        }
    }
    Ok(format!("high rate lowest for t >= 3; worst high-rate ratio {worst:.3}"))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out =
        Command::new(env!("CARGO_BIN_EXE_surgery")).current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
    if out.status.code() == Some(0) {
        Ok(())
    } else {
        Err(format!("surgery {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn cli_pipeline(dir: &Path) -> Result<(), String> {
    // relative paths, since file references are part of the outputs
    let run = |args: &[&str]| run_cli(dir, args);
    run(&[
        "--seed",
        "3",
        "build",
        "hgp",
        "--b",
        "hamming3",
        "--d",
        "hamming3T",
        "--out",
        "code.json",
        "--alist",
        "code",
    ])?;
    run(&[
        "--seed",
        "3",
        "build",
        "sc",
        "--rc",
        "3",
        "--nc",
        "5",
        "--L",
        "2",
        "--search",
        "4",
        "--cap",
        "5,8",
        "--out",
        "sc.json",
        "--spec-out",
        "sc_spec.json",
    ])?;
    run(&["--seed", "3", "--jobs", "2", "surger", "--code", "code.json", "--random", "2", "--out-dir", "run"])?;
    run(&["surger", "--code", "code.json", "--rows", "0,5", "--seed", "8", "--out-dir", "rows"])?;
    run(&["report", "--merged", "run/merged.json", "--t-max", "3", "--csv", "report.csv", "--json", "report.json"])?;
    run(&["verify", "--diagram", "run/diagram.json"])
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files(&path));
        } else if path.file_name().unwrap() != "timing.json" {
            out.push(path);
        }
    }
    out.sort();
    out
}

fn reproducibility() -> Outcome {
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for r in &runs {
        cli_pipeline(r.path())?;
    }
    let (a, b) = (files(runs[0].path()), files(runs[1].path()));
    ensure!(a.len() == b.len() && a.len() >= 10, "output file sets differ: {} vs {}", a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        ensure!(x.strip_prefix(runs[0].path()) == y.strip_prefix(runs[1].path()), "file names differ");
        ensure!(std::fs::read(x).unwrap() == std::fs::read(y).unwrap(), "{} differs between runs", x.display());
    }
    // the library entry point too, on the Gross code
    let (base, _) = read_code(&data_dir().join("gross_code.json")).map_err(|e| e.to_string())?;
    let (code, targets) = random_basis_targets(&base, 3, 2).unwrap();
    let cfg = GrowthConfig { target_d: 12, seed: 2, ..Default::default() };
    let first = to_json(&construct(&code, &targets, &cfg).unwrap().report).unwrap();
    let second = to_json(&construct(&code, &targets, &cfg).unwrap().report).unwrap();
    ensure!(first == second, "Gross construction report differs between runs");
    Ok(format!("{} CLI outputs and a Gross report byte-identical", a.len()))
}

fn round_trips() -> Outcome {
    let mut codes = 0;
    let mut alists = 0;
    for path in files(&data_dir()) {
        let text = read_text(&path).map_err(|e| e.to_string())?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => {
                let Ok(file) = serde_json::from_str::<CodeJson>(&text) else { continue };
                let code = file.to_code().map_err(|e| e.to_string())?;
                let again = to_json(&CodeJson::from_code(&code, file.meta.clone())).unwrap();
                ensure!(again == text, "{} does not round-trip", path.display());
                codes += 1;
            }
            Some("alist") => {
                let m = read_alist(&text).map_err(|e| e.to_string())?;
                ensure!(write_alist(&m) == text, "{} does not round-trip", path.display());
                let stem = path.file_stem().unwrap().to_str().unwrap();
                let (prefix, side) = stem.rsplit_once('_').unwrap();
                let (code, _) = read_code(&data_dir().join(code_file(prefix))).map_err(|e| e.to_string())?;
                let expected = if side == "hx" { &code.hx } else { &code.hz };
                ensure!(&m == expected, "{} disagrees with its code file", path.display());
                alists += 1;
            }
            _ => {}
        }
    }
    ensure!(codes >= 6 && alists >= 12, "only {codes} code files and {alists} alist files");
    Ok(format!("{codes} code files, {alists} alist files bit-exact"))
}

fn code_file(alist_prefix: &str) -> String {
    match alist_prefix {
        "gross" => "gross_code.json".into(),
        other => format!("{other}.json"),
    }
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 kunneth", Box::new(kunneth)),
        ("2 sc_parameters", Box::new(sc_parameters)),
        ("3 measured_space_oracle", Box::new(measured_space_oracle)),
        ("4 z_distance", Box::new(z_distance)),
        ("5 soundness", Box::new(soundness)),
        ("6 gross_t3", Box::new(|| gross_end_to_end(3))),
        ("6 gross_t7", Box::new(|| gross_end_to_end(7))),
        ("6 gross_t11", Box::new(|| gross_end_to_end(11))),
        ("7 overhead_tables", Box::new(overhead_tables)),
        ("8 reproducibility", Box::new(reproducibility)),
        ("9 round_trips", Box::new(round_trips)),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({secs:.1}s) {detail}"),
            Err(detail) => {
                println!("criterion {name}: FAIL ({secs:.1}s) {detail}");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: {} failing: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}
