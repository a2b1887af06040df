//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use dimprobe_core::corpus::{
    load_catalog, materialize_prompts, Catalog, CatalogPaths, CountryRecord, EntityKind,
    LexicalSimilarityTable, LoadOptions, PrestigeClass, PromptRecord, SetKind, Side,
};
use dimprobe_core::crosslang::{job_axis_matrix, second_order, CrossLanguageMatrix};
use dimprobe_core::embed::{mock_generate, planted_direction, EmbeddingVector, MockSpec};
use dimprobe_core::numerics::{
    fit_first_pc, haversine_km, pearson, project, Coordinate, CorrelationMethod,
};
use dimprobe_core::probe::{
    analyze_dominant_dimension, analyze_language, concept_embeddings, fit_job_axis,
    summarize_language, ConceptEmbedding, ProbeContext,
};
use dimprobe_core::report::{aggregate, aggregate_markdown, fmt3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn catalog() -> Catalog {
    load_catalog(
        &CatalogPaths::in_dir(repo_root().join("data")),
        &LoadOptions::default(),
    )
    .expect("shipped catalog loads")
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn pearson_oracle() -> Outcome {
    let start = Instant::now();
    let fixed: [(&[f64], &[f64], f64); 3] = [
        (&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], 1.0),
        (&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0], -1.0),
        (&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0], 0.8),
    ];
    for (x, y, want) in fixed {
        let r = pearson(x, y).map_err(|e| e.to_string())?;
        check!(
            (r - want).abs() <= 1e-12,
            "fixed case {x:?},{y:?}: {r} != {want}"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(3..=100);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let r = pearson(&x, &y).map_err(|e| e.to_string())?;
        worst = worst.max((r - naive_pearson(&x, &y)).abs());
    }
    let elapsed = start.elapsed();
    check!(worst <= 1e-12, "max deviation {worst:e} over 1000 pairs");
    check!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "1000 pairs, max deviation {worst:.1e}, {elapsed:.2?}"
    ))
}

fn dense(rows: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let (n, d) = (rows.len(), rows[0].len());
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, d);
    for (i, r) in rows.iter().enumerate() {
        for (j, x) in r.iter().enumerate() {
            m[(i, j)] = *x;
        }
    }
    let means = m.row_mean();
    for mut row in m.row_iter_mut() {
        row -= &means;
    }
    let cov = m.transpose() * &m / (n as f64 - 1.0);
    let eig = nalgebra::SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imax();
    (
        eig.eigenvalues[k],
        eig.eigenvectors.column(k).iter().copied().collect(),
    )
}

fn pca_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_cos, mut worst_eig, mut worst_inv) = (1.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = rng.gen_range(3..=50);
        let d = rng.gen_range(2..=64);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let pd = fit_first_pc(&rows).map_err(|e| e.to_string())?;
        let (lambda, v) = dense(&rows);
        worst_cos = worst_cos.min(cos(&pd.direction, &v).abs());
        worst_eig = worst_eig.max((pd.eigenvalue - lambda).abs() / lambda);

        let shift: Vec<f64> = (0..d).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let c = rng.gen_range(0.5..5.0);
        let moved: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip(&shift).map(|(x, s)| c * x + s).collect())
            .collect();
        let q = fit_first_pc(&moved).map_err(|e| e.to_string())?;
        for (a, b) in pd.direction.iter().zip(&q.direction) {
            worst_inv = worst_inv.max((a - b).abs());
        }
        check!(
            (q.eigenvalue - c * c * pd.eigenvalue).abs() <= 1e-9 * q.eigenvalue,
            "eigenvalue not scaled by c^2 (n={n}, d={d})"
        );
        let p = project(&rows, &pd).map_err(|e| e.to_string())?;
        let mean = p.iter().sum::<f64>() / n as f64;
        let var = p.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        check!(mean.abs() <= 1e-9, "projection mean {mean:e}");
        check!(
            (var - pd.eigenvalue).abs() <= 1e-6 * pd.eigenvalue,
            "projection variance {var} vs {}",
            pd.eigenvalue
        );
    }
    let elapsed = start.elapsed();
    check!(worst_cos >= 1.0 - 1e-9, "min |cos| {worst_cos}");
    check!(
        worst_eig <= 1e-9,
        "max relative eigenvalue error {worst_eig:e}"
    );
    check!(
        worst_inv <= 1e-9,
        "translation/scale moved the direction by {worst_inv:e}"
    );
    check!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "200 matrices, min |cos| 1-{:.1e}, eigenvalue rel err {worst_eig:.1e}, invariance {worst_inv:.1e}, {elapsed:.2?}",
        1.0 - worst_cos
    ))
}

fn origin_prompts(cat: &Catalog) -> Vec<PromptRecord> {
    materialize_prompts(
        &cat.templates_for(SetKind::CountryOrigin, "en"),
        &cat.entities_of(EntityKind::Country),
        "en",
    )
    .expect("origin prompts")
}

fn embed_all(
    prompts: &[PromptRecord],
    group: impl Fn(&PromptRecord) -> Option<&'static str>,
    spec: &MockSpec,
) -> Vec<EmbeddingVector> {
    prompts
        .iter()
        .map(|p| mock_generate(&p.text, group(p), spec).expect("mock vector"))
        .collect()
}

fn side_group(cat: &Catalog, country: &str) -> Option<&'static str> {
    match cat.label_table.country_side(country) {
        Side::West => Some("west"),
        Side::East => Some("east"),
        Side::Neutral => None,
    }
}

fn planted_recovery() -> Outcome {
    let cat = catalog();
    let prompts = origin_prompts(&cat);
    check!(
        cat.countries.len() == 42,
        "{} countries",
        cat.countries.len()
    );
    let spec = MockSpec {
        seed: 7,
        dim: 64,
        noise: 0.01,
        offsets: [("west".to_string(), 1.0), ("east".to_string(), -1.0)].into(),
        axis: None,
    };
    let vectors = embed_all(&prompts, |p| side_group(&cat, &p.entity_id), &spec);
    let concepts = concept_embeddings(&prompts, &vectors).map_err(|e| e.to_string())?;
    let offset = |id: &str| match side_group(&cat, id) {
        Some("west") => 1.0,
        Some(_) => -1.0,
        None => 0.0,
    };
    let gdp: BTreeMap<String, f64> = cat
        .country_ids()
        .into_iter()
        .map(|c| {
            let g = 30_000.0 + 20_000.0 * offset(&c);
            (c, g)
        })
        .collect();
    let a = analyze_dominant_dimension(
        "en",
        SetKind::CountryOrigin,
        &concepts,
        &cat.label_table,
        &gdp,
        CorrelationMethod::Pearson,
    )
    .map_err(|e| e.to_string())?;
    let c = cos(&a.direction.direction, &planted_direction(&spec)).abs();
    check!(c >= 0.99, "|cos| with plant {c}");
    check!(a.interpretation.east_west, "east_west false");
    check!(
        a.interpretation.gdp_r >= 0.95,
        "gdp_r {}",
        a.interpretation.gdp_r
    );

    let real_gdp = cat.gdp();
    let mut passes = 0;
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let spec = MockSpec {
            seed,
            dim: 64,
            noise: 1.0,
            offsets: BTreeMap::new(),
            axis: None,
        };
        let vectors = embed_all(&prompts, |_| None, &spec);
        let concepts = concept_embeddings(&prompts, &vectors).map_err(|e| e.to_string())?;
        let a = analyze_dominant_dimension(
            "en",
            SetKind::CountryOrigin,
            &concepts,
            &cat.label_table,
            &real_gdp,
            CorrelationMethod::Pearson,
        )
        .map_err(|e| e.to_string())?;
        let r = a.interpretation.gdp_r.abs();
        worst = worst.max(r);
        if r < 0.31 {
            passes += 1;
        }
    }
    check!(
        passes >= 95,
        "isotropic noise: |gdp_r| < 0.31 in only {passes}/100 seeds (max {worst:.3})"
    );
    Ok(format!(
        "|cos| {c:.5}, east_west, gdp_r {:.3}; isotropic |gdp_r| < .31 in {passes}/100 seeds",
        a.interpretation.gdp_r
    ))
}

struct JobWorld {
    cat: Catalog,
    jobs: Vec<PromptRecord>,
    prestige: Vec<PromptRecord>,
}

impl JobWorld {
    fn new() -> Self {
        let cat = catalog();
        let jobs = materialize_prompts(
            &cat.templates_for(SetKind::JobPrestige, "en"),
            &cat.entities_of(EntityKind::Job),
            "en",
        )
        .expect("job prompts");
        let prestige = materialize_prompts(
            &cat.templates_for(SetKind::CountryPrestige, "en"),
            &cat.entities_of(EntityKind::Country),
            "en",
        )
        .expect("prestige prompts");
        Self {
            cat,
            jobs,
            prestige,
        }
    }

    fn concepts(&self, spec: &MockSpec) -> (Vec<ConceptEmbedding>, Vec<ConceptEmbedding>) {
        let classes = self.cat.job_classes();
        let group = |p: &PromptRecord| match classes.get(&p.entity_id) {
            Some(PrestigeClass::High) => Some("high"),
            Some(PrestigeClass::Low) => Some("low"),
            None => None,
        };
        let side = |p: &PromptRecord| {
            side_group(&self.cat, &p.entity_id).filter(|g| spec.offsets.contains_key(*g))
        };
        let jv = embed_all(&self.jobs, group, spec);
        let cv = embed_all(&self.prestige, side, spec);
        (
            concept_embeddings(&self.jobs, &jv).expect("job concepts"),
            concept_embeddings(&self.prestige, &cv).expect("prestige concepts"),
        )
    }

    fn origin_concepts(&self, spec: &MockSpec) -> Vec<ConceptEmbedding> {
        let prompts = origin_prompts(&self.cat);
        let v = embed_all(&prompts, |_| None, spec);
        concept_embeddings(&prompts, &v).expect("origin concepts")
    }
}

/// Independent accuracy: dense eigensolve, explicit centering, both sign
/// assignments counted directly.
fn brute_force_accuracy(
    jobs: &[ConceptEmbedding],
    classes: &BTreeMap<String, PrestigeClass>,
) -> f64 {
    let rows: Vec<Vec<f64>> = jobs.iter().map(|c| c.vector.clone()).collect();
    let (_, v) = dense(&rows);
    let d = v.len();
    let mean: Vec<f64> = (0..d)
        .map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64)
        .collect();
    let scores: Vec<f64> = rows
        .iter()
        .map(|r| (0..d).map(|k| (r[k] - mean[k]) * v[k]).sum())
        .collect();
    let mut best = 0.0f64;
    for sign in [1.0, -1.0] {
        let mut credit = 0.0;
        for (c, s) in jobs.iter().zip(&scores) {
            let s = sign * s;
            let high = classes[&c.entity_id] == PrestigeClass::High;
            credit += if s == 0.0 {
                0.5
            } else if (s > 0.0) == high {
                1.0
            } else {
                0.0
            };
        }
        best = best.max(credit / jobs.len() as f64);
    }
    best
}

fn job_axis() -> Outcome {
    let w = JobWorld::new();
    let classes = w.cat.job_classes();
    let gdp = w.cat.gdp();
    for sign in [1.0, -1.0] {
        let spec = MockSpec {
            seed: 3,
            dim: 32,
            noise: 0.0,
            offsets: [
                ("high", sign),
                ("low", -sign),
                ("west", 0.5),
                ("east", -0.5),
            ]
            .into_iter()
            .map(|(g, o)| (g.to_string(), o))
            .collect(),
            axis: None,
        };
        let (jc, cc) = w.concepts(&spec);
        let r = fit_job_axis(
            "en",
            &jc,
            &cc,
            &classes,
            &w.cat.label_table,
            &gdp,
            CorrelationMethod::Pearson,
        )
        .map_err(|e| e.to_string())?;
        check!(
            r.accuracy == 1.0,
            "separable plant with sign {sign}: accuracy {}",
            r.accuracy
        );
    }

    let mut min_acc = 1.0f64;
    for seed in 0..500u64 {
        let spec = MockSpec {
            seed,
            dim: 32,
            noise: 0.6,
            offsets: [("high".to_string(), 0.15), ("low".to_string(), -0.15)].into(),
            axis: None,
        };
        let (jc, cc) = w.concepts(&spec);
        let r = fit_job_axis(
            "en",
            &jc,
            &cc,
            &classes,
            &w.cat.label_table,
            &gdp,
            CorrelationMethod::Pearson,
        )
        .map_err(|e| e.to_string())?;
        let oracle = brute_force_accuracy(&jc, &classes);
        check!(
            r.accuracy == oracle,
            "seed {seed}: accuracy {} vs oracle {oracle}",
            r.accuracy
        );
        check!(
            r.accuracy >= 0.5,
            "seed {seed}: accuracy {} below .5",
            r.accuracy
        );
        min_acc = min_acc.min(r.accuracy);
    }

    let spec = MockSpec {
        seed: 5,
        dim: 32,
        noise: 0.6,
        offsets: [("high".to_string(), 0.3), ("low".to_string(), -0.3)].into(),
        axis: None,
    };
    let (mut jc, cc) = w.concepts(&spec);
    let oc = w.origin_concepts(&spec);
    jc.extend(cc);
    jc.extend(oc);
    let ctx = ProbeContext {
        labels: &w.cat.label_table,
        gdp: &gdp,
        job_classes: &classes,
        method: CorrelationMethod::Pearson,
    };
    let analysis = analyze_language("en", &jc, ctx).map_err(|e| e.to_string())?;
    let row = summarize_language(&analysis);
    let agg = aggregate("mock", &[row]).map_err(|e| e.to_string())?;
    let md = aggregate_markdown(&agg);
    let line = md
        .lines()
        .find(|l| l.starts_with("Job class. accuracy: "))
        .ok_or("no accuracy line in aggregate table")?;
    let value = line.trim_start_matches("Job class. accuracy: ");
    check!(
        value == fmt3(agg.mean_job_accuracy),
        "accuracy cell {value:?}"
    );
    let digits = value.trim_start_matches(['-', '1', '0']);
    check!(
        value.len() - digits.len() <= 1 && digits.starts_with('.') && digits.len() == 4,
        "accuracy cell {value:?} is not 3-decimal"
    );
    check!(
        (0.0..=1.0).contains(&agg.mean_job_accuracy),
        "accuracy {} outside [0, 1]",
        agg.mean_job_accuracy
    );
    Ok(format!("separable plant 1.000 under both signs; 500 noisy seeds match oracle, min {min_acc:.3}; cell {value}"))
}

fn crosslang_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let jobs: Vec<String> = (0..60).map(|j| format!("job{j:02}")).collect();
    let classes: BTreeMap<String, PrestigeClass> = jobs
        .iter()
        .enumerate()
        .map(|(i, j)| {
            (
                j.clone(),
                if i % 2 == 0 {
                    PrestigeClass::High
                } else {
                    PrestigeClass::Low
                },
            )
        })
        .collect();
    let mut worst = 0.0f64;
    for l in 3..=13 {
        for _ in 0..5 {
            let per: Vec<(String, BTreeMap<String, f64>)> = (0..l)
                .map(|i| {
                    (
                        format!("l{i:02}"),
                        jobs.iter()
                            .map(|j| (j.clone(), rng.gen_range(-2.0..2.0)))
                            .collect(),
                    )
                })
                .collect();
            let m = job_axis_matrix(&per, &classes).map_err(|e| e.to_string())?;
            for i in 0..l {
                check!(m.values[i][i] == 1.0, "diagonal {}", m.values[i][i]);
                for j in 0..l {
                    check!(m.values[i][j] == m.values[j][i], "asymmetric at {i},{j}");
                }
            }
            let aligned: Vec<Vec<f64>> = per
                .iter()
                .map(|(_, s)| {
                    let v: Vec<f64> = s.values().copied().collect();
                    let hi: f64 = v.iter().step_by(2).sum();
                    let lo: f64 = v.iter().skip(1).step_by(2).sum();
                    if hi < lo {
                        v.iter().map(|x| -x).collect()
                    } else {
                        v
                    }
                })
                .collect();
            for i in 0..l {
                for j in 0..l {
                    if i != j {
                        worst = worst
                            .max((m.values[i][j] - naive_pearson(&aligned[i], &aligned[j])).abs());
                    }
                }
            }
        }
    }
    check!(worst <= 1e-12, "matrix deviates from oracle by {worst:e}");

    // Four languages on the equator 10 degrees apart, so distances are
    // proportional to 1, 2, 3, 1, 2, 1 and GDP gaps to 1, 2, 4, 1, 3, 2.
    let langs: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    let r = [
        [1.0, 0.9, 0.7, 0.4],
        [0.9, 1.0, 0.8, 0.5],
        [0.7, 0.8, 1.0, 0.6],
        [0.4, 0.5, 0.6, 1.0],
    ];
    let matrix = CrossLanguageMatrix {
        languages: langs.clone(),
        jobs: vec![],
        values: r.iter().map(|row| row.to_vec()).collect(),
    };
    let gdp = [10_000.0, 25_000.0, 40_000.0, 70_000.0];
    let countries: Vec<CountryRecord> = langs
        .iter()
        .enumerate()
        .map(|(i, l)| CountryRecord {
            id: l.to_uppercase(),
            name_en: l.to_uppercase(),
            gdp_ppp_2019: gdp[i],
            coordinate: Coordinate::new(0.0, 10.0 * i as f64).unwrap(),
            labels: Default::default(),
        })
        .collect();
    let map: BTreeMap<String, String> = langs
        .iter()
        .map(|l| (l.clone(), l.to_uppercase()))
        .collect();
    let mut lex = LexicalSimilarityTable::default();
    for ((a, b), s) in [
        ("a", "b"),
        ("a", "c"),
        ("a", "d"),
        ("b", "c"),
        ("b", "d"),
        ("c", "d"),
    ]
    .into_iter()
    .zip([0.6, 0.3, 0.1, 0.5, 0.2, 0.4])
    {
        lex.insert(a, b, s).unwrap();
    }
    let s = second_order(&matrix, &map, &countries, &lex).map_err(|e| e.to_string())?;
    let hand = [
        ("geo", s.geo_r.value(), 0.7855844048495726),
        ("gdp", s.gdp_diff_r.value(), 0.9601829094043463),
        ("lexsim", s.lexsim_r.value(), 33.0 / 35.0),
    ];
    for (name, got, want) in hand {
        let got = got.ok_or(format!("{name} component undefined"))?;
        check!((got - want).abs() <= 1e-9, "{name}: {got} vs hand {want}");
    }
    check!(s.n_pairs == 6, "{} pairs", s.n_pairs);
    Ok(format!(
        "3-13 languages, max deviation {worst:.1e}; 4-language second order matches hand values"
    ))
}

fn corpus_counts() -> Outcome {
    let cat = catalog();
    let count = |kind: SetKind, entities: EntityKind| {
        materialize_prompts(
            &cat.templates_for(kind, "en"),
            &cat.entities_of(entities),
            "en",
        )
        .map(|p| p.len())
    };
    let origin = count(SetKind::CountryOrigin, EntityKind::Country).map_err(|e| e.to_string())?;
    let prestige =
        count(SetKind::CountryPrestige, EntityKind::Country).map_err(|e| e.to_string())?;
    let jobs = count(SetKind::JobPrestige, EntityKind::Job).map_err(|e| e.to_string())?;
    check!(origin == 13 * 42, "origin {origin}");
    check!(prestige == 7 * 42, "prestige {prestige}");
    check!(jobs == 7 * 60, "jobs {jobs}");
    let out = Command::new(env!("CARGO_BIN_EXE_dimprobe"))
        .arg("--config")
        .arg(repo_root().join("dimprobe.toml"))
        .arg("validate")
        .output()
        .map_err(|e| e.to_string())?;
    check!(
        out.status.code() == Some(0),
        "validate exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout)
    );
    Ok(format!(
        "{origin}/{prestige}/{jobs} prompts; validate exit 0"
    ))
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = Command::new(env!("CARGO_BIN_EXE_dimprobe"))
            .arg("--config")
            .arg(repo_root().join("dimprobe.toml"))
            .args(["--provider", "mock", "--seed", "7", "--out"])
            .arg(d.path())
            .arg("run-all")
            .output()
            .map_err(|e| e.to_string())?;
        check!(
            out.status.success(),
            "run-all failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let (a, b) = (tree(dirs[0].path()), tree(dirs[1].path()));
    check!(!a.is_empty(), "empty output tree");
    check!(a.keys().eq(b.keys()), "file sets differ");
    let differing: Vec<_> = a
        .iter()
        .filter(|(k, v)| b[*k] != **v)
        .map(|(k, _)| k.display().to_string())
        .collect();
    check!(differing.is_empty(), "differing files: {differing:?}");
    Ok(format!("{} files byte-identical across two runs", a.len()))
}

fn cosine_law_km(a: Coordinate, b: Coordinate) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dl = (b.lon - a.lon).to_radians();
    let c = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()).clamp(-1.0, 1.0);
    6371.0 * c.acos()
}

fn haversine() -> Outcome {
    let at = |lat, lon| Coordinate::new(lat, lon).unwrap();
    let anti = haversine_km(at(0.0, 0.0), at(0.0, 180.0)).map_err(|e| e.to_string())?;
    check!((anti - 20015.1).abs() <= 0.1, "antipodal {anti}");
    let (berlin, paris) = (at(52.5200, 13.4050), at(48.8566, 2.3522));
    let bp = haversine_km(berlin, paris).map_err(|e| e.to_string())?;
    let oracle = cosine_law_km(berlin, paris);
    check!((bp - 877.5).abs() <= 1.0, "Berlin-Paris {bp}");
    check!(
        (bp - oracle).abs() <= 1.0,
        "Berlin-Paris {bp} vs law of cosines {oracle}"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut point = || at(rng.gen_range(-90.0..=90.0), rng.gen_range(-180.0..=180.0));
    for _ in 0..1000 {
        let (p, q, s) = (point(), point(), point());
        let pq = haversine_km(p, q).unwrap();
        check!(
            (pq - haversine_km(q, p).unwrap()).abs() <= 1e-9,
            "asymmetric at {p:?} {q:?}"
        );
        check!(
            pq <= haversine_km(p, s).unwrap() + haversine_km(s, q).unwrap() + 1e-6,
            "triangle inequality fails at {p:?} {q:?} {s:?}"
        );
    }
    Ok(format!(
        "antipodal {anti:.2} km, Berlin-Paris {bp:.2} km (oracle {oracle:.2}); 1000 triples"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("pearson oracle", pearson_oracle),
        ("pca oracle", pca_oracle),
        ("planted-direction recovery", planted_recovery),
        ("job axis", job_axis),
        ("cross-language matrix", crosslang_oracle),
        ("corpus counts", corpus_counts),
        ("determinism", determinism),
        ("haversine", haversine),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
