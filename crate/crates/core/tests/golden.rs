//! Report files from a fixed mock run, compared byte for byte against
//! `tests/golden/`. Set `UPDATE_GOLDEN=1` to rewrite them.

use std::fs;
use std::path::{Path, PathBuf};

use dimprobe_core::corpus::write_prompts;
use dimprobe_core::pipeline::{Pipeline, RunConfig};

const LANGUAGES: [&str; 3] = ["en", "de", "fr"];

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn config(out: &Path, prompts: &Path) -> RunConfig {
    let root = repo_root();
    let text = format!(
        r#"
[run]
languages = {languages:?}
output_dir = "{out}"

[data]
dir = "{data}"
prompts_dir = "{prompts}"

[provider]
kind = "mock"
model_id = "mock"

[mock]
seed = 11
dim = 16
noise = 0.5

[mock.offsets]
west = 0.4
east = -0.4
high = 0.5
low = -0.5
"#,
        languages = LANGUAGES,
        out = out.display(),
        data = root.join("data").display(),
        prompts = prompts.display(),
    );
    RunConfig::parse(&text, &root).unwrap()
}

fn run(out: &Path) {
    let prompts = tempfile::tempdir().unwrap();
    let scratch = tempfile::tempdir().unwrap();
    let en = Pipeline::new(config(scratch.path(), prompts.path()))
        .unwrap()
        .source_prompts("en")
        .unwrap();
    for lang in &LANGUAGES[1..] {
        let translated: Vec<_> = en
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.language = lang.to_string();
                r.text = format!("<{lang}> {}", r.text);
                r
            })
            .collect();
        write_prompts(
            &prompts.path().join(format!("prompts.{lang}.jsonl")),
            &translated,
        )
        .unwrap();
    }
    Pipeline::new(config(out, prompts.path()))
        .unwrap()
        .run_all()
        .unwrap();
}

fn outputs(out: &Path) -> Vec<(String, PathBuf)> {
    let mut files: Vec<(String, PathBuf)> = fs::read_dir(out.join("report"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), p)
        })
        .collect();
    files.push(("crosslang.csv".into(), out.join("crosslang/crosslang.csv")));
    files.sort();
    files
}

#[test]
fn mock_run_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path());
    let golden = golden_dir();
    let files = outputs(dir.path());
    assert!(files.len() >= 7, "{files:?}");

    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(&golden).unwrap();
        for (name, path) in &files {
            fs::copy(path, golden.join(name)).unwrap();
        }
        return;
    }

    let mut expected: Vec<String> = fs::read_dir(&golden)
        .unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1", golden.display()))
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    expected.sort();
    let produced: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    assert_eq!(produced, expected);
    for (name, path) in &files {
        let got = fs::read_to_string(path).unwrap();
        let want = fs::read_to_string(golden.join(name)).unwrap();
        assert!(got == want, "{name} differs from its golden copy");
    }
}
