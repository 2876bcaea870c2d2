//! Experiment configuration: line-oriented `key = value` files with `#`
//! comments.

use std::path::{Path, PathBuf};

use opcond::assembly::QuadratureProfile;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// α-shifted hypersingular operator on the unit cube surface, single
    /// layer as opposite operator.
    CubeHypersingular,
    /// Hypersingular operator on the screen (0,1), single layer opposite.
    IntervalHypersingular,
    /// Dirichlet Laplacian on (0,1) against its Green's function.
    IntervalLaplaceS1,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::CubeHypersingular => "cube_hypersingular",
            Problem::IntervalHypersingular => "interval_hypersingular",
            Problem::IntervalLaplaceS1 => "interval_laplace_s1",
        }
    }

    pub fn is_interval(self) -> bool {
        !matches!(self, Problem::CubeHypersingular)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    Uniform,
    /// Repeated conforming bisection of every triangle touching a cube corner.
    CornerLocal,
}

impl Refinement {
    pub fn name(self) -> &'static str {
        match self {
            Refinement::Uniform => "uniform",
            Refinement::CornerLocal => "corner_local",
        }
    }
}

/// Which preconditioned columns to compute. `DiagJacobi` computes both
/// dual-pairing variants and the Jacobi comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantSelection {
    Pwc,
    Cpl,
    Both,
    DiagJacobi,
}

impl VariantSelection {
    pub fn name(self) -> &'static str {
        match self {
            VariantSelection::Pwc => "pwc",
            VariantSelection::Cpl => "cpl",
            VariantSelection::Both => "both",
            VariantSelection::DiagJacobi => "diag_jacobi",
        }
    }

    pub fn pwc(self) -> bool {
        !matches!(self, VariantSelection::Cpl)
    }

    pub fn cpl(self) -> bool {
        !matches!(self, VariantSelection::Pwc)
    }

    pub fn jacobi(self) -> bool {
        matches!(self, VariantSelection::DiagJacobi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Standard,
    High,
}

impl Quadrature {
    pub fn name(self) -> &'static str {
        match self {
            Quadrature::Standard => "standard",
            Quadrature::High => "high",
        }
    }

    pub fn profile(self) -> QuadratureProfile {
        match self {
            Quadrature::Standard => QuadratureProfile::standard(),
            Quadrature::High => QuadratureProfile::high(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Text,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub refinement: Refinement,
    pub levels: usize,
    pub variant: VariantSelection,
    pub ell: usize,
    pub alpha: f64,
    pub beta1_pwc: f64,
    pub beta1_cpl: f64,
    pub beta2: f64,
    pub s: f64,
    pub quadrature: Quadrature,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// Corner-marking sweeps between two reported levels.
    pub sweeps_per_level: usize,
    /// Uniform bisections applied to the coarse cube before level 1.
    pub initial_bisections: usize,
    /// Uniform bisections between two reported levels.
    pub bisections_per_level: usize,
    /// Elements of the level-1 interval mesh.
    pub initial_elements: usize,
    /// Logarithmic kernel scale for interval problems; `None` is twice the
    /// domain diameter.
    pub kernel_scale: Option<f64>,
    pub lanczos_tol: f64,
    pub max_iter: Option<usize>,
    /// Also count PCG iterations (zero start, seeded random right-hand side).
    pub pcg: bool,
    pub pcg_tol: f64,
    /// Compare against dense oracles on small levels.
    pub cross_check: bool,
    /// Largest dimension for the dense eigenvalue cross-check.
    pub cross_check_max_dofs: usize,
}

pub const KEYS: &[&str] = &[
    "problem",
    "refinement",
    "levels",
    "variant",
    "ell",
    "alpha",
    "beta1",
    "beta1_pwc",
    "beta1_cpl",
    "beta2",
    "s",
    "quadrature",
    "seed",
    "output",
    "format",
    "sweeps_per_level",
    "initial_bisections",
    "bisections_per_level",
    "initial_elements",
    "kernel_scale",
    "lanczos_tol",
    "max_iter",
    "pcg",
    "pcg_tol",
    "cross_check",
    "cross_check_max_dofs",
];

#[derive(Default)]
struct Raw {
    entries: Vec<(String, String, usize)>,
}

impl Raw {
    fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.0 == key)
            .map(|e| (e.1.as_str(), e.2))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<(T, usize)>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(|x| Some((x, line))).map_err(|_| ConfigError::Line {
                line,
                message: format!("cannot parse `{v}` as a value for `{key}`"),
            }),
        }
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> Result<Option<(T, usize)>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => options
                .iter()
                .find(|o| o.0 == v)
                .map(|o| Some((o.1, line)))
                .ok_or_else(|| ConfigError::Line {
                    line,
                    message: format!(
                        "`{key}` must be one of {}, got `{v}`",
                        options.iter().map(|o| o.0).collect::<Vec<_>>().join(", ")
                    ),
                }),
        }
    }
}

fn range_error(line: usize, message: String) -> ConfigError {
    ConfigError::Line { line, message }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = Raw::default();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(range_error(n, format!("expected `key = value`, got `{body}`")));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(range_error(n, format!("unknown key `{k}`")));
        }
        if v.is_empty() {
            return Err(range_error(n, format!("missing value for `{k}`")));
        }
        raw.entries.push((k.to_string(), v.to_string(), n));
    }

    let problem = raw
        .choice(
            "problem",
            &[
                ("cube_hypersingular", Problem::CubeHypersingular),
                ("interval_hypersingular", Problem::IntervalHypersingular),
                ("interval_laplace_s1", Problem::IntervalLaplaceS1),
            ],
        )?
        .ok_or_else(|| ConfigError::Invalid("`problem` is required".into()))?
        .0;
    let refinement = raw.choice(
        "refinement",
        &[("uniform", Refinement::Uniform), ("corner_local", Refinement::CornerLocal)],
    )?;
    if let Some((Refinement::CornerLocal, line)) = refinement {
        if problem.is_interval() {
            return Err(range_error(line, "corner_local refinement needs the cube surface".into()));
        }
    }
    let refinement = refinement.map_or(Refinement::Uniform, |r| r.0);

    let default_variant = match problem {
        Problem::IntervalLaplaceS1 => VariantSelection::Pwc,
        _ => VariantSelection::Both,
    };
    let variant = raw.choice(
        "variant",
        &[
            ("pwc", VariantSelection::Pwc),
            ("cpl", VariantSelection::Cpl),
            ("both", VariantSelection::Both),
            ("diag_jacobi", VariantSelection::DiagJacobi),
        ],
    )?;
    if let Some((v, line)) = variant {
        if problem == Problem::IntervalLaplaceS1 && v.cpl() {
            return Err(range_error(
                line,
                "interval_laplace_s1 supports only the pwc variant (its Green's-function operator acts on piecewise constants)".into(),
            ));
        }
    }
    let variant = variant.map_or(default_variant, |v| v.0);

    let ell = match raw.parse::<usize>("ell")? {
        Some((e, line)) => {
            if !(1..=3).contains(&e) {
                return Err(range_error(line, format!("ell must be 1, 2 or 3, got {e}")));
            }
            if e > 1 && problem.is_interval() {
                return Err(range_error(line, "interval problems use linear elements (ell = 1)".into()));
            }
            e
        }
        None => 1,
    };

    let levels = positive_usize(&raw, "levels")?.unwrap_or(4);
    let alpha = match raw.parse::<f64>("alpha")? {
        Some((a, line)) if !(a >= 0.0 && a.is_finite()) => {
            return Err(range_error(line, format!("alpha must be nonnegative, got {a}")))
        }
        Some((a, _)) => a,
        None => 0.05,
    };
    let beta1 = positive_f64(&raw, "beta1")?;
    let beta1_pwc = positive_f64(&raw, "beta1_pwc")?.or(beta1).unwrap_or(0.65);
    let beta1_cpl = positive_f64(&raw, "beta1_cpl")?.or(beta1).unwrap_or(0.34);
    let beta2 = positive_f64(&raw, "beta2")?.unwrap_or(0.065);
    let default_s = match problem {
        Problem::IntervalLaplaceS1 => 1.0,
        _ => 0.5,
    };
    let s = match raw.parse::<f64>("s")? {
        Some((s, line)) if !(0.0..=1.0).contains(&s) => {
            return Err(range_error(line, format!("s must lie in [0,1], got {s}")))
        }
        Some((s, _)) => s,
        None => default_s,
    };
    let quadrature = raw
        .choice("quadrature", &[("standard", Quadrature::Standard), ("high", Quadrature::High)])?
        .map_or(Quadrature::Standard, |q| q.0);
    let seed = raw.parse::<u64>("seed")?.map_or(opcond::spectral::DEFAULT_SEED, |s| s.0);
    let output = raw.get("output").map(|(v, _)| PathBuf::from(v));
    let format = raw
        .choice("format", &[("csv", Format::Csv), ("text", Format::Text)])?
        .map_or(Format::Csv, |f| f.0);
    let sweeps_per_level = positive_usize(&raw, "sweeps_per_level")?.unwrap_or(5);
    let initial_bisections = raw.parse::<usize>("initial_bisections")?.map(|x| x.0).unwrap_or(
        match (refinement, ell) {
            (Refinement::Uniform, 1) => 1,
            _ => 0,
        },
    );
    let bisections_per_level = positive_usize(&raw, "bisections_per_level")?.unwrap_or(
        if problem.is_interval() { 1 } else { 2 },
    );
    let min_elements = if problem.is_interval() { 2 } else { 1 };
    let initial_elements = match raw.parse::<usize>("initial_elements")? {
        Some((n, line)) if n < min_elements => {
            return Err(range_error(
                line,
                format!("initial_elements must be at least {min_elements} so a free vertex exists"),
            ))
        }
        Some((n, _)) => n,
        None => 128,
    };
    let kernel_scale = positive_f64(&raw, "kernel_scale")?;
    let lanczos_tol = positive_f64(&raw, "lanczos_tol")?.unwrap_or(opcond::spectral::DEFAULT_TOL);
    let max_iter = positive_usize(&raw, "max_iter")?;
    let pcg = bool_key(&raw, "pcg")?.unwrap_or(false);
    let pcg_tol = positive_f64(&raw, "pcg_tol")?.unwrap_or(1e-8);
    let cross_check = bool_key(&raw, "cross_check")?.unwrap_or(false);
    let cross_check_max_dofs = positive_usize(&raw, "cross_check_max_dofs")?.unwrap_or(2000);

    Ok(ExperimentConfig {
        problem,
        refinement,
        levels,
        variant,
        ell,
        alpha,
        beta1_pwc,
        beta1_cpl,
        beta2,
        s,
        quadrature,
        seed,
        output,
        format,
        sweeps_per_level,
        initial_bisections,
        bisections_per_level,
        initial_elements,
        kernel_scale,
        lanczos_tol,
        max_iter,
        pcg,
        pcg_tol,
        cross_check,
        cross_check_max_dofs,
    })
}

fn positive_usize(raw: &Raw, key: &str) -> Result<Option<usize>, ConfigError> {
    match raw.parse::<usize>(key)? {
        Some((0, line)) => Err(range_error(line, format!("`{key}` must be at least 1"))),
        other => Ok(other.map(|x| x.0)),
    }
}

fn positive_f64(raw: &Raw, key: &str) -> Result<Option<f64>, ConfigError> {
    match raw.parse::<f64>(key)? {
        Some((x, line)) if !(x > 0.0 && x.is_finite()) => {
            Err(range_error(line, format!("`{key}` must be positive, got {x}")))
        }
        other => Ok(other.map(|x| x.0)),
    }
}

fn bool_key(raw: &Raw, key: &str) -> Result<Option<bool>, ConfigError> {
    match raw.get(key) {
        None => Ok(None),
        Some((v, line)) => parse_bool(v)
            .map(Some)
            .ok_or_else(|| range_error(line, format!("`{key}` must be true or false, got `{v}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_for_the_cube() {
        let c = parse_config_str("problem = cube_hypersingular\n").unwrap();
        assert_eq!(c.alpha, 0.05);
        assert_eq!(c.beta1_pwc, 0.65);
        assert_eq!(c.beta1_cpl, 0.34);
        assert_eq!(c.beta2, 0.065);
        assert_eq!(c.s, 0.5);
        assert_eq!(c.seed, 42);
        assert_eq!(c.variant, VariantSelection::Both);
        assert_eq!((c.initial_bisections, c.bisections_per_level), (1, 2));
    }

    #[test]
    fn comments_and_overrides() {
        let c = parse_config_str(
            "# cubic elements\nproblem = cube_hypersingular # the cube\n\nell = 3\nbeta1 = 0.5\nbeta1_cpl = 0.2\nquadrature = high\n",
        )
        .unwrap();
        assert_eq!(c.ell, 3);
        assert_eq!(c.initial_bisections, 0);
        assert_eq!((c.beta1_pwc, c.beta1_cpl), (0.5, 0.2));
        assert_eq!(c.quadrature, Quadrature::High);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config_str("problem = cube_hypersingular\nbeta1 = -1\n").unwrap_err();
        assert!(matches!(e, ConfigError::Line { line: 2, .. }), "{e}");
        let e = parse_config_str("problem = cube_hypersingular\n\nfoo = 1\n").unwrap_err();
        assert!(matches!(e, ConfigError::Line { line: 3, .. }));
        let e = parse_config_str("problem cube\n").unwrap_err();
        assert!(matches!(e, ConfigError::Line { line: 1, .. }));
        let e = parse_config_str("problem = sphere\n").unwrap_err();
        assert!(matches!(e, ConfigError::Line { line: 1, .. }));
    }

    #[test]
    fn problem_is_required() {
        assert!(matches!(parse_config_str(""), Err(ConfigError::Invalid(_))));
        assert!(matches!(parse_config_str("# nothing\n"), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn inconsistent_choices_are_rejected() {
        assert!(parse_config_str("problem = interval_laplace_s1\nvariant = cpl\n").is_err());
        assert!(parse_config_str("problem = interval_hypersingular\nrefinement = corner_local\n").is_err());
        assert!(parse_config_str("problem = interval_hypersingular\nell = 2\n").is_err());
        assert!(parse_config_str("problem = cube_hypersingular\nell = 4\n").is_err());
        assert!(parse_config_str("problem = cube_hypersingular\nlevels = 0\n").is_err());
        assert!(parse_config_str("problem = cube_hypersingular\ns = 1.5\n").is_err());
        assert!(parse_config_str("problem = interval_hypersingular\ninitial_elements = 1\n").is_err());
    }
}
