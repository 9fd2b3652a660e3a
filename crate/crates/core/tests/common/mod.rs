#![allow(dead_code)]

use std::path::PathBuf;

use sockkt::kkt::LocalModel;
use sockkt::problem::Problem;
use sockkt::report::ProblemFile;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_paths() -> Vec<PathBuf> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .expect("fixture directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
}

pub struct Fixture {
    pub name: String,
    pub file: ProblemFile,
    pub problem: Problem,
}

pub fn fixtures() -> Vec<Fixture> {
    fixture_paths()
        .into_iter()
        .map(|p| {
            let file = ProblemFile::load(&p).unwrap();
            let problem = file.problem().unwrap();
            Fixture {
                name: p.file_stem().unwrap().to_string_lossy().into_owned(),
                file,
                problem,
            }
        })
        .collect()
}

pub fn fixture(name: &str) -> Fixture {
    fixtures()
        .into_iter()
        .find(|f| f.name == name)
        .unwrap_or_else(|| panic!("no fixture {name}"))
}

pub fn problem(obj: &[&str], cons: &[&str], s: usize) -> Problem {
    let vars: Vec<String> = (1..=s).map(|k| format!("x{k}")).collect();
    let obj: Vec<String> = obj.iter().map(|x| x.to_string()).collect();
    let cons: Vec<String> = cons.iter().map(|x| x.to_string()).collect();
    Problem::new("t", &vars, &obj, &cons).unwrap()
}

/// A local model with every constraint active and every index in J and K.
pub fn model(grad_f: Vec<Vec<f64>>, f2: Vec<f64>, grad_g: Vec<Vec<f64>>, g2: Vec<f64>) -> LocalModel {
    let dim = grad_f[0].len();
    let n = grad_f.len();
    let m = grad_g.len();
    LocalModel {
        dim,
        grad_f,
        active: (0..m).collect(),
        grad_g,
        g_values: vec![0.0; m],
        f_second: f2.into_iter().map(Some).collect(),
        g_second: g2.into_iter().map(Some).collect(),
        j_set: (0..n).collect(),
        k_set: (0..m).collect(),
        critical: true,
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Whether `w` satisfies `strict·w < 0` and `weak·w ≤ 0`.
pub fn satisfies(strict: &[Vec<f64>], weak: &[Vec<f64>], w: &[f64]) -> bool {
    strict.iter().all(|r| dot(r, w) < 0.0) && weak.iter().all(|r| dot(r, w) <= 0.0)
}
