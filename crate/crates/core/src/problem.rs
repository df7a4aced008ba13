//! Problem definitions: the six data functions of the wave problem, the two
//! built-in reference problems, JSON loading, and the compatibility checks
//! between initial, boundary, and nonlocal data.
//!
//! A problem file is a UTF-8 JSON object with string fields `name`, `phi`,
//! `f`, `g`, `h`, `nu` and optional `exact`, `h_prime`, `nu_prime`; every
//! value is an expression in the syntax of [`crate::expr`]. `phi` and
//! `exact` may use `x` and `t`, `f` and `g` only `x`, the rest only `t`.
//! Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use crate::error::Error;
use crate::expr::{self, Expression};

/// Default number of Simpson subintervals across a unit interval.
pub const DEFAULT_QUAD_N: usize = 4096;

/// Composite Simpson quadrature with a fallible integrand. `n` must be
/// even and at least 2; an empty interval integrates to zero.
pub fn try_quad_simpson<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    n: usize,
) -> Result<f64, E> {
    assert!(n >= 2 && n % 2 == 0, "Simpson needs an even subinterval count");
    assert!(a <= b, "inverted interval");
    if a == b {
        return Ok(0.0);
    }
    let h = (b - a) / n as f64;
    let mut sum = f(a)? + f(b)?;
    for q in 1..n {
        let w = if q % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + q as f64 * h)?;
    }
    Ok(sum * h / 3.0)
}

/// Composite Simpson quadrature of an infallible integrand.
pub fn quad_simpson(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let result: Result<_, std::convert::Infallible> = try_quad_simpson(|x| Ok(f(x)), a, b, n);
    match result {
        Ok(v) => v,
    }
}

/// One wave problem: the source, initial/boundary/nonlocal data, and an
/// optional exact solution with optional analytic time derivatives of the
/// boundary and nonlocal data.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub phi: Expression,
    pub f: Expression,
    pub g: Expression,
    pub h: Expression,
    pub nu: Expression,
    pub exact: Option<Expression>,
    pub h_prime: Option<Expression>,
    pub nu_prime: Option<Expression>,
}

/// Step for the central-difference fallback of `h'` and `nu'`.
const DERIVATIVE_STEP: f64 = 1e-6;

impl ProblemSpec {
    /// Parses a problem from expression sources and validates it.
    pub fn from_sources(
        name: &str,
        phi: &str,
        f: &str,
        g: &str,
        h: &str,
        nu: &str,
        exact: Option<&str>,
        h_prime: Option<&str>,
        nu_prime: Option<&str>,
    ) -> Result<ProblemSpec, Error> {
        let field = |field: &str, src: &str, vars: &[&str]| {
            expr::parse(src, vars).map_err(|source| Error::FieldParse {
                field: field.into(),
                source,
            })
        };
        let spec = ProblemSpec {
            name: name.to_string(),
            phi: field("phi", phi, &["x", "t"])?,
            f: field("f", f, &["x"])?,
            g: field("g", g, &["x"])?,
            h: field("h", h, &["t"])?,
            nu: field("nu", nu, &["t"])?,
            exact: exact.map(|s| field("exact", s, &["x", "t"])).transpose()?,
            h_prime: h_prime.map(|s| field("h_prime", s, &["t"])).transpose()?,
            nu_prime: nu_prime.map(|s| field("nu_prime", s, &["t"])).transpose()?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// When an exact solution is declared, it must reproduce the initial
    /// and boundary data: `exact(x,0) = f(x)` and `exact(0,t) = h(t)` at
    /// sampled points, to 1e-10 (relative above magnitude one).
    fn validate(&self) -> Result<(), Error> {
        let Some(exact) = &self.exact else {
            return Ok(());
        };
        let samples = 33;
        for q in 0..samples {
            let x = q as f64 / (samples - 1) as f64;
            let ex = exact.evaluate(&[x, 0.0])?;
            let fx = self.f.evaluate(&[x])?;
            if (ex - fx).abs() > 1e-10 * fx.abs().max(1.0) {
                return Err(Error::ProblemInvalid {
                    message: format!(
                        "exact(x,0) = {ex} disagrees with f(x) = {fx} at x = {x}"
                    ),
                });
            }
            let t = x;
            let e0 = exact.evaluate(&[0.0, t])?;
            let ht = self.h.evaluate(&[t])?;
            if (e0 - ht).abs() > 1e-10 * ht.abs().max(1.0) {
                return Err(Error::ProblemInvalid {
                    message: format!(
                        "exact(0,t) = {e0} disagrees with h(t) = {ht} at t = {t}"
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn phi(&self, x: f64, t: f64) -> Result<f64, Error> {
        Ok(self.phi.evaluate(&[x, t])?)
    }

    pub fn f(&self, x: f64) -> Result<f64, Error> {
        Ok(self.f.evaluate(&[x])?)
    }

    pub fn g(&self, x: f64) -> Result<f64, Error> {
        Ok(self.g.evaluate(&[x])?)
    }

    pub fn h(&self, t: f64) -> Result<f64, Error> {
        Ok(self.h.evaluate(&[t])?)
    }

    pub fn nu(&self, t: f64) -> Result<f64, Error> {
        Ok(self.nu.evaluate(&[t])?)
    }

    /// Exact solution value, if the problem declares one.
    pub fn exact(&self, x: f64, t: f64) -> Option<Result<f64, Error>> {
        self.exact
            .as_ref()
            .map(|e| e.evaluate(&[x, t]).map_err(Error::from))
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// `h'(t)`: analytic when declared, else a central difference.
    pub fn h_prime(&self, t: f64) -> Result<f64, Error> {
        match &self.h_prime {
            Some(e) => Ok(e.evaluate(&[t])?),
            None => {
                let hi = self.h.evaluate(&[t + DERIVATIVE_STEP])?;
                let lo = self.h.evaluate(&[t - DERIVATIVE_STEP])?;
                Ok((hi - lo) / (2.0 * DERIVATIVE_STEP))
            }
        }
    }

    /// `nu'(t)`: analytic when declared, else a central difference.
    pub fn nu_prime(&self, t: f64) -> Result<f64, Error> {
        match &self.nu_prime {
            Some(e) => Ok(e.evaluate(&[t])?),
            None => {
                let hi = self.nu.evaluate(&[t + DERIVATIVE_STEP])?;
                let lo = self.nu.evaluate(&[t - DERIVATIVE_STEP])?;
                Ok((hi - lo) / (2.0 * DERIVATIVE_STEP))
            }
        }
    }
}

struct BuiltinSources {
    name: &'static str,
    phi: &'static str,
    f: &'static str,
    g: &'static str,
    h: &'static str,
    nu: &'static str,
    exact: &'static str,
    h_prime: &'static str,
    nu_prime: &'static str,
}

/// Damped standing wave with a source term.
const EXAMPLE1: BuiltinSources = BuiltinSources {
    name: "example1",
    phi: "(1/4 + pi^2) * exp(-t/2) * sin(pi*x)",
    f: "sin(pi*x)",
    g: "-0.5 * sin(pi*x)",
    h: "0",
    nu: "(2/pi) * exp(-t/2)",
    exact: "exp(-t/2) * sin(pi*x)",
    h_prime: "0",
    nu_prime: "-(1/pi) * exp(-t/2)",
};

/// Source-free superposition of two traveling cosine waves.
const EXAMPLE2: BuiltinSources = BuiltinSources {
    name: "example2",
    phi: "0",
    f: "cos(pi*x)",
    g: "0",
    h: "cos(pi*t)",
    nu: "0",
    exact: "(cos(pi*(x+t)) + cos(pi*(x-t))) / 2",
    h_prime: "-pi * sin(pi*t)",
    nu_prime: "0",
};

/// Names of the built-in problems, in listing order.
pub fn builtin_names() -> &'static [&'static str] {
    &["example1", "example2"]
}

/// Returns a built-in problem by name.
pub fn builtin(name: &str) -> Result<ProblemSpec, Error> {
    let sources = match name {
        "example1" => &EXAMPLE1,
        "example2" => &EXAMPLE2,
        _ => {
            return Err(Error::UnknownProblem {
                name: name.to_string(),
            })
        }
    };
    ProblemSpec::from_sources(
        sources.name,
        sources.phi,
        sources.f,
        sources.g,
        sources.h,
        sources.nu,
        Some(sources.exact),
        Some(sources.h_prime),
        Some(sources.nu_prime),
    )
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    name: String,
    phi: String,
    f: String,
    g: String,
    h: String,
    nu: String,
    exact: Option<String>,
    h_prime: Option<String>,
    nu_prime: Option<String>,
}

/// Loads and validates a problem from a JSON file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemSpec, Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ProblemFile =
        serde_json::from_str(&text).map_err(|e| Error::ProblemFormat {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    ProblemSpec::from_sources(
        &file.name,
        &file.phi,
        &file.f,
        &file.g,
        &file.h,
        &file.nu,
        file.exact.as_deref(),
        file.h_prime.as_deref(),
        file.nu_prime.as_deref(),
    )
}

/// The four consistency residuals between the problem data functions.
///
/// In order: `|f(0) - h(0)|`, `|int f - nu(0)|`, `|g(0) - h'(0)|`,
/// `|int g - nu'(0)|`.
#[derive(Debug, Clone)]
pub struct CompatibilityReport {
    pub residuals: [f64; 4],
    pub pass: [bool; 4],
    pub tolerance: f64,
}

impl CompatibilityReport {
    pub const LABELS: [&'static str; 4] = [
        "f(0) = h(0)",
        "integral of f = nu(0)",
        "g(0) = h'(0)",
        "integral of g = nu'(0)",
    ];

    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|p| *p)
    }
}

/// Checks whether the initial data meets the boundary and nonlocal data at
/// t = 0. Integrals use Simpson with `quad_n` subintervals.
pub fn check_compatibility(
    spec: &ProblemSpec,
    tolerance: f64,
    quad_n: usize,
) -> Result<CompatibilityReport, Error> {
    let r1 = (spec.f(0.0)? - spec.h(0.0)?).abs();
    let int_f = try_quad_simpson(|x| spec.f(x), 0.0, 1.0, quad_n)?;
    let r2 = (int_f - spec.nu(0.0)?).abs();
    let r3 = (spec.g(0.0)? - spec.h_prime(0.0)?).abs();
    let int_g = try_quad_simpson(|x| spec.g(x), 0.0, 1.0, quad_n)?;
    let r4 = (int_g - spec.nu_prime(0.0)?).abs();
    let residuals = [r1, r2, r3, r4];
    let pass = [
        r1 <= tolerance,
        r2 <= tolerance,
        r3 <= tolerance,
        r4 <= tolerance,
    ];
    Ok(CompatibilityReport {
        residuals,
        pass,
        tolerance,
    })
}
