//! Runs a configured experiment level by level: build the mesh, assemble
//! `A` and the opposite-order matrices, compose the preconditioners and
//! estimate condition numbers.

use std::sync::Arc;
use std::time::Instant;

use opcond::assembly::{
    assemble_greens_1d, assemble_hypersingular_1d, assemble_hypersingular_3d, assemble_single_layer_1d,
    assemble_single_layer_3d, assemble_stiffness, hypersingular_3d_from_single_layer, DenseOperator,
    QuadratureProfile, Space1d,
};
use opcond::duals::{
    assemble_d, assemble_p, assemble_q, bubble_diagonal, lagrange_node_diagonal, DualVariant,
};
use opcond::precond::{
    CplPreconditioner, DiagonalOperator, HigherOrderPreconditioner, Identity, LinearOperator,
    PwcPreconditioner,
};
use opcond::spectral::{dense_condition, lanczos_condition, pcg_solve, LanczosOptions, SpectralReport};
use opcond::space::LagrangeSpace;
use opcond::{Error, GammaSpec, PatchTable, SimplicialMesh};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::config::{ExperimentConfig, Problem, Refinement};

/// A condition-number estimate of one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub kappa: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<SpectralReport> for Estimate {
    fn from(r: SpectralReport) -> Self {
        Estimate {
            kappa: r.kappa,
            lambda_min: r.lambda_min,
            lambda_max: r.lambda_max,
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

/// Preconditioned operator columns of a table row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Column {
    /// No preconditioner.
    A,
    Pwc,
    Cpl,
    Jacobi,
}

impl Column {
    pub fn name(self) -> &'static str {
        match self {
            Column::A => "A",
            Column::Pwc => "G_pwc",
            Column::Cpl => "G_cpl",
            Column::Jacobi => "jacobi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgCount {
    pub iterations: usize,
    pub converged: bool,
}

/// Lanczos against the dense generalised eigenvalue solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck {
    pub column: Column,
    pub lanczos: f64,
    pub dense: f64,
}

impl CrossCheck {
    pub fn relative_gap(&self) -> f64 {
        (self.lanczos - self.dense).abs() / self.dense
    }
}

/// Matrix-free application against the dense materialisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApplyCheck {
    pub column: Column,
    pub defect: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub assembly: f64,
    pub precond: f64,
    pub lanczos: f64,
    pub checks: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub level: usize,
    pub dofs: usize,
    pub elements: usize,
    pub h_min: f64,
    pub kappa: Vec<(Column, Estimate)>,
    pub pcg: Vec<(Column, PcgCount)>,
    pub cross_checks: Vec<CrossCheck>,
    pub apply_checks: Vec<ApplyCheck>,
    pub timings: Timings,
}

impl LevelRow {
    pub fn kappa(&self, c: Column) -> Option<f64> {
        self.kappa.iter().find(|e| e.0 == c).map(|e| e.1.kappa)
    }

    pub fn estimate(&self, c: Column) -> Option<&Estimate> {
        self.kappa.iter().find(|e| e.0 == c).map(|e| &e.1)
    }

    pub fn pcg_iterations(&self, c: Column) -> Option<usize> {
        self.pcg.iter().find(|e| e.0 == c).map(|e| e.1.iterations)
    }
}

#[derive(Debug)]
pub struct LevelFailure {
    pub level: usize,
    pub error: Error,
}

#[derive(Debug)]
pub struct RunOutput {
    pub rows: Vec<LevelRow>,
    pub failure: Option<LevelFailure>,
}

/// Columns this configuration produces, in table order. Corner-graded
/// meshes leave out the unpreconditioned column: its condition number
/// grows like `h_min⁻²` and loses all digits long before `h_min = 1e-10`.
pub fn columns(cfg: &ExperimentConfig) -> Vec<Column> {
    let mut c = Vec::new();
    if cfg.refinement != Refinement::CornerLocal {
        c.push(Column::A);
    }
    if cfg.variant.pwc() {
        c.push(Column::Pwc);
    }
    if cfg.variant.cpl() {
        c.push(Column::Cpl);
    }
    if cfg.variant.jacobi() {
        c.push(Column::Jacobi);
    }
    c
}

/// Dimension up to which matrix-free applications are compared with the
/// dense materialisation.
pub const APPLY_CHECK_MAX_DIM: usize = 200;

/// The mesh sequence of the configuration, one mesh per level.
pub struct MeshSequence<'a> {
    cfg: &'a ExperimentConfig,
    current: Option<SimplicialMesh>,
}

impl<'a> MeshSequence<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Self {
        MeshSequence { cfg, current: None }
    }

    pub fn next_mesh(&mut self) -> opcond::Result<&SimplicialMesh> {
        let cfg = self.cfg;
        let next = match self.current.take() {
            None => {
                if cfg.problem.is_interval() {
                    SimplicialMesh::interval(cfg.initial_elements, GammaSpec::Both)?
                } else {
                    let mut m = SimplicialMesh::cube_surface();
                    for _ in 0..cfg.initial_bisections {
                        m = m.refine_uniform_bisection();
                    }
                    m
                }
            }
            Some(mut m) => {
                match cfg.refinement {
                    Refinement::Uniform => {
                        for _ in 0..cfg.bisections_per_level {
                            m = m.refine_uniform_bisection();
                        }
                    }
                    Refinement::CornerLocal => {
                        let corners: Vec<usize> = (0..8).collect();
                        for _ in 0..cfg.sweeps_per_level {
                            let marked = m.elements_touching(&corners);
                            m = m.refine_nvb_conforming(&marked)?;
                        }
                    }
                }
                m
            }
        };
        Ok(self.current.insert(next))
    }
}

/// Everything needed to estimate one level.
pub struct LevelOperators {
    pub a: Arc<DenseOperator>,
    pub preconditioners: Vec<(Column, Box<dyn LinearOperator>)>,
}

/// Assembles `A` and the requested preconditioners on `mesh`.
pub fn build_level(
    cfg: &ExperimentConfig,
    mesh: &SimplicialMesh,
    timings: &mut Timings,
) -> opcond::Result<LevelOperators> {
    let t0 = Instant::now();
    let profile = cfg.quadrature.profile();
    let patches = PatchTable::new(mesh);
    let dim = mesh.dim();
    let (a, b_pwc, b_cpl) = match cfg.problem {
        Problem::CubeHypersingular => cube_operators(cfg, mesh, profile)?,
        Problem::IntervalHypersingular => {
            let a = assemble_hypersingular_1d(mesh, cfg.kernel_scale)?;
            let bp = cfg
                .variant
                .pwc()
                .then(|| assemble_single_layer_1d(mesh, Space1d::Pwc0, cfg.kernel_scale))
                .transpose()?;
            let bc = cfg
                .variant
                .cpl()
                .then(|| assemble_single_layer_1d(mesh, Space1d::Cpl1, cfg.kernel_scale))
                .transpose()?;
            (a, bp, bc)
        }
        Problem::IntervalLaplaceS1 => {
            let space = LagrangeSpace::new(mesh, 1)?;
            (assemble_stiffness(mesh, &space)?, Some(assemble_greens_1d(mesh)?), None)
        }
    };
    timings.assembly += t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut linear: Vec<(Column, Box<dyn LinearOperator>)> = Vec::new();
    if let Some(b) = b_pwc {
        let d = assemble_d(&patches, DualVariant::Pwc)?;
        let bubble = bubble_diagonal(&d, dim, cfg.s, cfg.beta1_pwc)?;
        let p = assemble_p(mesh, &patches);
        linear.push((Column::Pwc, Box::new(PwcPreconditioner::new(&d, p, Arc::new(b), &bubble)?)));
    }
    if let Some(b) = b_cpl {
        let d = assemble_d(&patches, DualVariant::Cpl)?;
        let bubble = bubble_diagonal(&d, dim, cfg.s, cfg.beta1_cpl)?;
        linear.push((Column::Cpl, Box::new(CplPreconditioner::new(&d, Arc::new(b), &bubble)?)));
    }
    let preconditioners = if cfg.ell > 1 {
        let space = LagrangeSpace::new(mesh, cfg.ell)?;
        let q = assemble_q(&space)?;
        let g2 = lagrange_node_diagonal(mesh, &space, cfg.s, cfg.beta2)?;
        linear
            .into_iter()
            .map(|(c, g1)| -> opcond::Result<(Column, Box<dyn LinearOperator>)> {
                Ok((c, Box::new(HigherOrderPreconditioner::new(q.clone(), g1, g2.clone())?)))
            })
            .collect::<opcond::Result<Vec<_>>>()?
    } else {
        linear
    };
    let mut preconditioners = preconditioners;
    if cfg.variant.jacobi() {
        let diag = DiagonalOperator::new(a.diagonal()).inverse();
        preconditioners.push((Column::Jacobi, Box::new(diag)));
    }
    timings.precond += t1.elapsed().as_secs_f64();
    Ok(LevelOperators {
        a: Arc::new(a),
        preconditioners,
    })
}

type Matrices = (DenseOperator, Option<DenseOperator>, Option<DenseOperator>);

fn cube_operators(
    cfg: &ExperimentConfig,
    mesh: &SimplicialMesh,
    profile: QuadratureProfile,
) -> opcond::Result<Matrices> {
    let want_pwc = cfg.variant.pwc();
    let want_cpl = cfg.variant.cpl();
    if cfg.ell == 1 {
        // one panel sweep gives the single layers and, via the curl
        // reduction, the hypersingular matrix
        let sl = assemble_single_layer_3d(mesh, profile, true, want_cpl)?;
        let space = LagrangeSpace::new(mesh, 1)?;
        let v = sl.pwc.expect("requested");
        let a = hypersingular_3d_from_single_layer(mesh, &space, cfg.alpha, &v)?;
        Ok((a, want_pwc.then_some(v), sl.cpl))
    } else {
        let space = LagrangeSpace::new(mesh, cfg.ell)?;
        let a = assemble_hypersingular_3d(mesh, &space, cfg.alpha, profile)?;
        let sl = if want_pwc || want_cpl {
            assemble_single_layer_3d(mesh, profile, want_pwc, want_cpl)?
        } else {
            opcond::assembly::SingleLayer { pwc: None, cpl: None }
        };
        Ok((a, sl.pwc, sl.cpl))
    }
}

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Estimates every column of one level.
pub fn estimate_level(
    cfg: &ExperimentConfig,
    level: usize,
    mesh: &SimplicialMesh,
) -> opcond::Result<LevelRow> {
    let mut timings = Timings::default();
    let ops = build_level(cfg, mesh, &mut timings)?;
    let a: &dyn LinearOperator = ops.a.as_ref();
    let n = a.dim();
    let opts = LanczosOptions {
        tol: cfg.lanczos_tol,
        max_iter: cfg.max_iter,
        seed: cfg.seed,
    };

    let t = Instant::now();
    let identity = Identity(n);
    let mut all: Vec<(Column, &dyn LinearOperator)> = Vec::new();
    if columns(cfg).contains(&Column::A) {
        all.push((Column::A, &identity));
    }
    for (c, g) in &ops.preconditioners {
        all.push((*c, g.as_ref()));
    }
    let mut kappa = Vec::new();
    for (c, g) in &all {
        kappa.push((*c, Estimate::from(lanczos_condition(*g, a, opts)?)));
    }
    let mut pcg = Vec::new();
    if cfg.pcg {
        let b = random_vector(n, cfg.seed.wrapping_add(1));
        let cap = n.max(1000);
        for (c, g) in &all {
            if *c == Column::Jacobi {
                continue;
            }
            let r = pcg_solve(a, *g, &b, cfg.pcg_tol, cap)?;
            pcg.push((
                *c,
                PcgCount {
                    iterations: r.iterations,
                    converged: r.converged,
                },
            ));
        }
    }
    timings.lanczos = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut cross_checks = Vec::new();
    let mut apply_checks = Vec::new();
    if cfg.cross_check && n <= cfg.cross_check_max_dofs {
        let a_dense = a.to_dense();
        for ((c, g), (_, est)) in all.iter().zip(&kappa) {
            let dense = dense_condition(&g.to_dense(), &a_dense, n)?;
            cross_checks.push(CrossCheck {
                column: *c,
                lanczos: est.kappa,
                dense,
            });
        }
        if n <= APPLY_CHECK_MAX_DIM {
            let x = random_vector(n, cfg.seed.wrapping_add(2));
            for (c, g) in all.iter().filter(|e| e.0 != Column::A) {
                let y = g.apply(&x)?;
                let gd = g.to_dense();
                let mut num: f64 = 0.0;
                let mut den: f64 = 0.0;
                for i in 0..n {
                    let yi: f64 = (0..n).map(|j| gd[i * n + j] * x[j]).sum();
                    num = num.max((yi - y[i]).abs());
                    den = den.max(yi.abs());
                }
                apply_checks.push(ApplyCheck {
                    column: *c,
                    defect: num / den,
                });
            }
        }
    }
    timings.checks = t.elapsed().as_secs_f64();

    Ok(LevelRow {
        level,
        dofs: n,
        elements: mesh.n_elements(),
        h_min: mesh.h_min(),
        kappa,
        pcg,
        cross_checks,
        apply_checks,
        timings,
    })
}

/// Runs all levels; `on_row` sees each row as soon as it is finished.
/// A failing level stops the run and is reported with the rows so far.
pub fn run_experiment_with(cfg: &ExperimentConfig, mut on_row: impl FnMut(&LevelRow)) -> RunOutput {
    let mut rows = Vec::new();
    let mut meshes = MeshSequence::new(cfg);
    for level in 1..=cfg.levels {
        let result = meshes.next_mesh().and_then(|m| estimate_level(cfg, level, m));
        match result {
            Ok(row) => {
                on_row(&row);
                rows.push(row);
            }
            Err(error) => {
                return RunOutput {
                    rows,
                    failure: Some(LevelFailure { level, error }),
                }
            }
        }
    }
    RunOutput { rows, failure: None }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> RunOutput {
    run_experiment_with(cfg, |_| {})
}
