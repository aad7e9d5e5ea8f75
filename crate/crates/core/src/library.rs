//! Built-in problems.

use crate::error::{Error, Result};
use crate::problem_file::{load_problem, Problem};

const BUILTINS: [(&str, &str); 6] = [
    ("example1", include_str!("../problems/example1.json")),
    ("example2", include_str!("../problems/example2.json")),
    ("example3", include_str!("../problems/example3.json")),
    ("example4", include_str!("../problems/example4.json")),
    ("remark5", include_str!("../problems/remark5.json")),
    ("rotation", include_str!("../problems/rotation.json")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(name, _)| *name)
}

pub fn builtin_text(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn builtin(name: &str) -> Result<Problem> {
    let text = builtin_text(name).ok_or_else(|| {
        let known: Vec<_> = builtin_names().collect();
        Error::ProblemFile(format!("no built-in problem {name:?} (known: {})", known.join(", ")))
    })?;
    load_problem(text)
}
