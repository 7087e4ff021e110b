//! Conic formulations of convex entanglement measures.
//!
//! Each measure is realized as a constraint block certifying that a pair
//! (omega, rho) lies in the measure's cone: omega bounds the measure value
//! of rho from above, and both may be affine expressions in program
//! variables. Separability constraints are realized either exactly through
//! the positive-partial-transpose characterization (valid for dA*dB <= 6)
//! or through a level-2 symmetric-extension outer approximation.

use crate::builder::{BuildError, HermVar, LinExpr, MatExpr, ProgramBuilder};
use crate::linalg::{ComplexMatrix, DimPair};
use crate::solver::{solve, SolveStatus, SolverError, SolverSettings};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConeError {
    #[error("exact separability formulation requires dA*dB <= 6, got {0}x{1}")]
    DimensionTooLarge(usize, usize),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solve terminated with status {0:?}")]
    SolveFailed(SolveStatus),
}

/// The five supported entanglement measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Negativity,
    RandomRobustness,
    AbsoluteRobustness,
    GeneralizedRobustness,
    Dub,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::Negativity,
        Measure::RandomRobustness,
        Measure::AbsoluteRobustness,
        Measure::GeneralizedRobustness,
        Measure::Dub,
    ];

    /// Whether values are comparable across Hilbert-space dimensions.
    /// Random robustness is not; reports should flag it.
    pub fn dimension_independent(&self) -> bool {
        !matches!(self, Measure::RandomRobustness)
    }

    /// Whether the natural reporting scale is log2 of the cone value.
    pub fn reports_log2(&self) -> bool {
        matches!(self, Measure::Dub)
    }

    pub fn needs_sep_cone(&self) -> bool {
        matches!(
            self,
            Measure::RandomRobustness | Measure::AbsoluteRobustness | Measure::GeneralizedRobustness
        )
    }
}

/// Separable-cone realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SepApprox {
    #[serde(rename = "ppt")]
    ExactPpt,
    #[serde(rename = "dps2")]
    Dps2,
}

/// A measure together with its separable-cone realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureKind {
    pub measure: Measure,
    #[serde(rename = "sepApprox")]
    pub sep_approx: SepApprox,
}

impl MeasureKind {
    pub fn new(measure: Measure, sep_approx: SepApprox) -> Self {
        MeasureKind {
            measure,
            sep_approx,
        }
    }

    /// Exact PPT realization when the dimensions admit it, level-2
    /// extension otherwise.
    pub fn auto(measure: Measure, dims: DimPair) -> Self {
        let sep_approx = if dims.total() <= 6 {
            SepApprox::ExactPpt
        } else {
            SepApprox::Dps2
        };
        MeasureKind {
            measure,
            sep_approx,
        }
    }
}

/// Record of an emitted cone-membership block.
#[derive(Debug, Clone)]
pub struct ConeBlock {
    /// Affine expression bounding the measure of the coupled state.
    pub omega: LinExpr,
    /// Auxiliary PSD variables by recipe symbol.
    pub variables: Vec<(&'static str, HermVar)>,
    /// Auxiliary scalar columns by recipe symbol.
    pub scalars: Vec<(&'static str, usize)>,
}

/// A realized separable-membership gadget: `member` is the expression
/// constrained to lie in the (approximate) separable cone.
#[derive(Debug, Clone)]
pub struct SepMembership {
    pub member: MatExpr,
    pub variables: Vec<(&'static str, HermVar)>,
}

fn pt_a(expr: &MatExpr, dims: DimPair) -> MatExpr {
    expr.partial_transpose(&[dims.dim_a, dims.dim_b], &[true, false])
}

fn pt_b(expr: &MatExpr, dims: DimPair) -> MatExpr {
    expr.partial_transpose(&[dims.dim_a, dims.dim_b], &[false, true])
}

/// Exact separable membership (PPT characterization): a PSD variable sigma
/// whose A-partial-transpose is also PSD.
pub fn sep_cone_exact(
    b: &mut ProgramBuilder,
    dims: DimPair,
) -> Result<SepMembership, ConeError> {
    if dims.total() > 6 {
        return Err(ConeError::DimensionTooLarge(dims.dim_a, dims.dim_b));
    }
    let d = dims.total();
    let sigma = b.add_herm(d);
    let sigma_pt = b.add_herm(d);
    let member = MatExpr::from_var(&sigma);
    b.eq_hermitian(&MatExpr::from_var(&sigma_pt), &pt_a(&member, dims))?;
    Ok(SepMembership {
        member,
        variables: vec![("sigma", sigma), ("sigmaPT", sigma_pt)],
    })
}

/// Level-2 symmetric-extension membership: a PSD extension tau on
/// A (x) B (x) B' that is invariant under the B-B' swap, PSD under the
/// B-partial transpose and under the joint B,B'-partial transpose; the
/// member is tr_B'[tau].
pub fn sep_cone_dps2(
    b: &mut ProgramBuilder,
    dims: DimPair,
) -> Result<SepMembership, ConeError> {
    let (da, db) = (dims.dim_a, dims.dim_b);
    let d_ext = da * db * db;
    let tau = b.add_herm(d_ext);
    let tau_expr = MatExpr::from_var(&tau);

    // swap of the B and B' factors as a basis permutation
    let mut swap = vec![0usize; d_ext];
    for a in 0..da {
        for b1 in 0..db {
            for b2 in 0..db {
                swap[(a * db + b1) * db + b2] = (a * db + b2) * db + b1;
            }
        }
    }
    // swap-invariance (equivalent to commuting with the swap for a
    // Hermitian tau); redundant component rows are deduplicated
    b.eq_hermitian(&tau_expr.permute_indices(&swap), &tau_expr)?;

    let ext_dims = [da, db, db];
    let sigma1 = b.add_herm(d_ext);
    b.eq_hermitian(
        &MatExpr::from_var(&sigma1),
        &tau_expr.partial_transpose(&ext_dims, &[false, true, false]),
    )?;
    let sigma2 = b.add_herm(d_ext);
    b.eq_hermitian(
        &MatExpr::from_var(&sigma2),
        &tau_expr.partial_transpose(&ext_dims, &[false, true, true]),
    )?;

    let member = tau_expr.partial_trace(&ext_dims, 2);
    Ok(SepMembership {
        member,
        variables: vec![("tau", tau), ("sigma1", sigma1), ("sigma2", sigma2)],
    })
}

fn sep_cone(
    b: &mut ProgramBuilder,
    dims: DimPair,
    approx: SepApprox,
) -> Result<SepMembership, ConeError> {
    match approx {
        SepApprox::ExactPpt => sep_cone_exact(b, dims),
        SepApprox::Dps2 => sep_cone_dps2(b, dims),
    }
}

/// Negativity cone: rho's A-partial-transpose splits as sigma+ - sigma-
/// with both parts PSD; omega = tr[sigma-].
pub fn negativity_block(
    b: &mut ProgramBuilder,
    rho: &MatExpr,
    dims: DimPair,
) -> Result<ConeBlock, ConeError> {
    let d = dims.total();
    let sigma_p = b.add_herm(d);
    let sigma_m = b.add_herm(d);
    b.eq_hermitian(
        &pt_a(rho, dims),
        &MatExpr::from_var(&sigma_p).sub(&MatExpr::from_var(&sigma_m)),
    )?;
    Ok(ConeBlock {
        omega: sigma_m.trace(),
        variables: vec![("sigmaPlus", sigma_p), ("sigmaMinus", sigma_m)],
        scalars: vec![],
    })
}

/// Random robustness cone: d*rho + omega*1 separable, omega >= 0.
pub fn random_robustness_block(
    b: &mut ProgramBuilder,
    rho: &MatExpr,
    dims: DimPair,
    approx: SepApprox,
) -> Result<ConeBlock, ConeError> {
    let d = dims.total();
    let omega = b.add_nonneg_scalar();
    let sep = sep_cone(b, dims, approx)?;
    let mix = rho
        .scale(d as f64)
        .add(&MatExpr::scaled_identity(&LinExpr::var(omega), d));
    b.eq_hermitian(&sep.member, &mix)?;
    Ok(ConeBlock {
        omega: LinExpr::var(omega),
        variables: sep.variables,
        scalars: vec![("omega", omega)],
    })
}

/// Absolute robustness cone: rho + tau separable for some separable tau;
/// omega = tr[tau].
pub fn absolute_robustness_block(
    b: &mut ProgramBuilder,
    rho: &MatExpr,
    dims: DimPair,
    approx: SepApprox,
) -> Result<ConeBlock, ConeError> {
    let tau = sep_cone(b, dims, approx)?;
    let sigma = sep_cone(b, dims, approx)?;
    b.eq_hermitian(&sigma.member, &rho.add(&tau.member))?;
    let mut variables = tau.variables;
    variables.extend(sigma.variables);
    Ok(ConeBlock {
        omega: tau.member.trace(),
        variables,
        scalars: vec![],
    })
}

/// Generalized robustness cone: rho + tau separable for some PSD tau;
/// omega = tr[tau].
pub fn generalized_robustness_block(
    b: &mut ProgramBuilder,
    rho: &MatExpr,
    dims: DimPair,
    approx: SepApprox,
) -> Result<ConeBlock, ConeError> {
    let tau = b.add_herm(dims.total());
    let sigma = sep_cone(b, dims, approx)?;
    b.eq_hermitian(&sigma.member, &rho.add(&MatExpr::from_var(&tau)))?;
    let mut variables = vec![("tau", tau)];
    variables.extend(sigma.variables);
    Ok(ConeBlock {
        omega: tau.trace(),
        variables,
        scalars: vec![],
    })
}

/// Distillable-entanglement upper-bound cone: PSD U, V, sigma with
/// (U - V)^(T_B) - rho = sigma; omega = tr[U + V]. The associated measure
/// value is log2 of the optimal omega.
pub fn dub_block(
    b: &mut ProgramBuilder,
    rho: &MatExpr,
    dims: DimPair,
) -> Result<ConeBlock, ConeError> {
    let d = dims.total();
    let u = b.add_herm(d);
    let v = b.add_herm(d);
    let sigma = b.add_herm(d);
    let uv_pt = pt_b(&MatExpr::from_var(&u).sub(&MatExpr::from_var(&v)), dims);
    b.eq_hermitian(&MatExpr::from_var(&sigma), &uv_pt.sub(rho))?;
    Ok(ConeBlock {
        omega: u.trace().add(&v.trace()),
        variables: vec![("U", u), ("V", v), ("sigma", sigma)],
        scalars: vec![],
    })
}

/// Emit the membership block of `kind` coupling `rho`; returns the omega
/// handle and the auxiliary variables.
pub fn emit_measure_cone(
    b: &mut ProgramBuilder,
    kind: MeasureKind,
    rho: &MatExpr,
    dims: DimPair,
) -> Result<ConeBlock, ConeError> {
    match kind.measure {
        Measure::Negativity => negativity_block(b, rho, dims),
        Measure::RandomRobustness => random_robustness_block(b, rho, dims, kind.sep_approx),
        Measure::AbsoluteRobustness => absolute_robustness_block(b, rho, dims, kind.sep_approx),
        Measure::GeneralizedRobustness => {
            generalized_robustness_block(b, rho, dims, kind.sep_approx)
        }
        Measure::Dub => dub_block(b, rho, dims),
    }
}

/// Measure value of a single state.
#[derive(Debug, Clone, Copy)]
pub struct MeasureValue {
    /// Optimal cone value omega*.
    pub omega: f64,
    /// log2(omega*); populated for measures reported on that scale.
    pub log2_omega: Option<f64>,
}

impl MeasureValue {
    /// Value on the measure's reporting scale.
    pub fn reported(&self) -> f64 {
        self.log2_omega.unwrap_or(self.omega)
    }
}

/// Evaluate a measure on one state by solving `min omega` subject to
/// (omega, rho) in the measure cone. The zero matrix maps to zero by
/// convention.
pub fn evaluate_measure(
    rho: &ComplexMatrix,
    kind: MeasureKind,
    dims: DimPair,
    settings: &SolverSettings,
) -> Result<MeasureValue, ConeError> {
    if rho.max_abs() < 1e-14 {
        return Ok(MeasureValue {
            omega: 0.0,
            log2_omega: kind.measure.reports_log2().then_some(0.0),
        });
    }
    let mut b = ProgramBuilder::new();
    let rho_expr = MatExpr::from_const(rho);
    let block = emit_measure_cone(&mut b, kind, &rho_expr, dims)?;
    b.minimize(&block.omega);
    let program = b.build()?;
    let result = solve(&program, settings)?;
    if result.status != SolveStatus::Optimal {
        return Err(ConeError::SolveFailed(result.status));
    }
    let omega = result.p_star.max(0.0);
    let log2_omega = kind
        .measure
        .reports_log2()
        .then(|| if omega > 0.0 { omega.log2() } else { 0.0 });
    Ok(MeasureValue { omega, log2_omega })
}

/// Feasibility probe: is `rho` accepted by the separable-cone realization?
pub fn sep_member(
    rho: &ComplexMatrix,
    dims: DimPair,
    approx: SepApprox,
    settings: &SolverSettings,
) -> Result<bool, ConeError> {
    let mut b = ProgramBuilder::new();
    let sep = sep_cone(&mut b, dims, approx)?;
    b.eq_hermitian(&sep.member, &MatExpr::from_const(rho))?;
    b.minimize(&LinExpr::zero());
    let program = b.build()?;
    let result = solve(&program, settings)?;
    match result.status {
        SolveStatus::Optimal => Ok(true),
        SolveStatus::PrimalInfeasible => Ok(false),
        other => Err(ConeError::SolveFailed(other)),
    }
}
