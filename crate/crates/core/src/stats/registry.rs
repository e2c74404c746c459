use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{MatchError, Result};
use crate::stats::{anderson_darling_p, welch_t_p};

pub const WELCH_T: &str = "welch_t";
pub const ANDERSON_DARLING: &str = "anderson_darling";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    TwoSample,
    KSample,
}

type PValueFn = dyn Fn(&[&[f64]]) -> Result<f64> + Send + Sync;

/// A named statistical test mapping a list of samples to a p-value.
///
/// The wrapped function must be pure. Cloning shares the function.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    arity: Arity,
    eval: Arc<PValueFn>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .finish()
    }
}

impl TestFunction {
    pub fn new<F>(name: impl Into<String>, arity: Arity, eval: F) -> Self
    where
        F: Fn(&[&[f64]]) -> Result<f64> + Send + Sync + 'static,
    {
        TestFunction {
            name: name.into(),
            arity,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    /// Runs the test. A p-value outside `[0, 1]` (or NaN) is reported as an
    /// undefined test rather than passed through.
    pub fn evaluate(&self, samples: &[&[f64]]) -> Result<f64> {
        match self.arity {
            Arity::TwoSample if samples.len() != 2 => {
                return Err(MatchError::UndefinedTest(format!(
                    "{} takes exactly 2 samples, got {}",
                    self.name,
                    samples.len()
                )))
            }
            Arity::KSample if samples.len() < 2 => {
                return Err(MatchError::UndefinedTest(format!(
                    "{} takes at least 2 samples, got {}",
                    self.name,
                    samples.len()
                )))
            }
            _ => {}
        }
        let p = (self.eval)(samples)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(MatchError::UndefinedTest(format!(
                "{} returned p = {p}, outside [0, 1]",
                self.name
            )));
        }
        Ok(p)
    }

    /// True when both handles wrap the same function object.
    pub fn same_as(&self, other: &TestFunction) -> bool {
        Arc::ptr_eq(&self.eval, &other.eval)
    }
}

/// Name → test lookup used to resolve criteria.
#[derive(Debug, Clone, Default)]
pub struct TestRegistry {
    tests: BTreeMap<String, TestFunction>,
}

impl TestRegistry {
    pub fn empty() -> Self {
        TestRegistry::default()
    }

    /// Registry holding `welch_t` and `anderson_darling`.
    pub fn with_builtins() -> Self {
        let mut reg = TestRegistry::empty();
        reg.register(TestFunction::new(WELCH_T, Arity::TwoSample, |s| {
            welch_t_p(s[0], s[1])
        }))
        .expect("fresh registry");
        reg.register(TestFunction::new(
            ANDERSON_DARLING,
            Arity::KSample,
            anderson_darling_p,
        ))
        .expect("fresh registry");
        reg
    }

    /// Adds a test under its own name and returns a handle to it.
    pub fn register(&mut self, test: TestFunction) -> Result<TestFunction> {
        if self.tests.contains_key(test.name()) {
            return Err(MatchError::Registry(format!(
                "test `{}` is already registered",
                test.name()
            )));
        }
        self.tests.insert(test.name.clone(), test.clone());
        Ok(test)
    }

    pub fn resolve(&self, name: &str) -> Option<&TestFunction> {
        self.tests.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tests.keys().map(String::as_str)
    }
}
