//! Sequential products and conditioning of instruments and sub-observables.

use crate::effects::Effect;
use crate::error::{Error, Result};
use crate::instruments::{Instrument, Operation, SubInstrument};
use crate::linalg::{Matrix, Tolerance};
use crate::observables::{OutcomeSpace, SubObservable};

/// Separator used in product outcome labels.
pub const PAIR_SEPARATOR: &str = "⊗";

/// `Ω_L × Ω_R` with labels `"x⊗y"`, ordered with the left coordinate outermost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductOutcomeSpace {
    left: OutcomeSpace,
    right: OutcomeSpace,
    space: OutcomeSpace,
}

impl ProductOutcomeSpace {
    pub fn new(left: &OutcomeSpace, right: &OutcomeSpace) -> Result<Self> {
        let labels = left
            .labels()
            .iter()
            .flat_map(|x| right.labels().iter().map(move |y| pair_label(x, y)));
        Ok(ProductOutcomeSpace {
            left: left.clone(),
            right: right.clone(),
            space: OutcomeSpace::new(labels)?,
        })
    }

    pub fn left(&self) -> &OutcomeSpace {
        &self.left
    }

    pub fn right(&self) -> &OutcomeSpace {
        &self.right
    }

    /// The flattened label space.
    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// Flat index of `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.right.len() + j
    }

    /// Flat indices of `Δ × Γ`.
    pub fn rectangle(&self, left: &[usize], right: &[usize]) -> Vec<usize> {
        left.iter()
            .flat_map(|&i| right.iter().map(move |&j| self.index(i, j)))
            .collect()
    }
}

pub fn pair_label(x: &str, y: &str) -> String {
    format!("{x}{PAIR_SEPARATOR}{y}")
}

/// `I∘J`: measure `I`, then `J`. `(I∘J)(x, y)(ρ) = J(y)[I(x)(ρ)]`.
pub fn instr_seq_product(i: &Instrument, j: &Instrument) -> Result<Instrument> {
    i.ops()[0].kraus()[0].check_dim(&j.ops()[0].kraus()[0])?;
    let product = ProductOutcomeSpace::new(i.space(), j.space())?;
    let ops = i
        .ops()
        .iter()
        .flat_map(|first| j.ops().iter().map(move |second| first.then(second)))
        .collect();
    Ok(Instrument::from_trusted(SubInstrument::from_trusted(
        product.space().clone(),
        ops,
    )))
}

/// `(J|I)(y)(ρ) = J(y)[Ī(ρ)]`: `J` run after `I` with `I`'s outcome discarded.
pub fn instr_conditioned(j: &Instrument, i: &Instrument) -> Result<Instrument> {
    i.ops()[0].kraus()[0].check_dim(&j.ops()[0].kraus()[0])?;
    let total = Operation::from_trusted(
        i.ops()
            .iter()
            .flat_map(|op| op.kraus().iter().cloned())
            .collect(),
    );
    let ops = j.ops().iter().map(|second| total.then(second)).collect();
    Ok(Instrument::from_trusted(SubInstrument::from_trusted(
        j.space().clone(),
        ops,
    )))
}

/// Index of the extension point when `instrument` measures the minimal extension of `a`.
///
/// `None` means `a` is already an observable and the instrument uses `Ω_A` itself.
fn check_measures_extension(
    a: &SubObservable,
    instrument: &Instrument,
    tol: Tolerance,
) -> Result<Option<usize>> {
    a.effects()[0]
        .matrix()
        .check_dim(&instrument.ops()[0].kraus()[0])?;
    let space = instrument.space();
    for l in a.labels() {
        if !space.contains(l) {
            return Err(Error::OutcomeSpaceMismatch);
        }
    }
    let extra = match space.len() - a.len() {
        0 => None,
        1 => space.labels().iter().position(|l| !a.space().contains(l)),
        _ => return Err(Error::OutcomeSpaceMismatch),
    };
    let measured = instrument.measured_observable();
    let mut residual: f64 = 0.0;
    for (l, e) in a.labels().iter().zip(a.effects()) {
        residual = residual.max(measured.effect(l)?.matrix().max_abs_diff(e.matrix()));
    }
    let rest = a.total().complement();
    match extra {
        Some(k) => {
            residual = residual.max(measured.effects()[k].matrix().max_abs_diff(rest.matrix()));
        }
        None => residual = residual.max(rest.matrix().max_abs()),
    }
    if residual > tol.eps() {
        return Err(Error::MeasuredObservableMismatch { residual });
    }
    Ok(extra)
}

/// `A[I]B(x, y) = I*(x)(b_y)` on `Ω_A × Ω_B`, where `I` measures the minimal
/// extension of `A`. The extension point is dropped from the first coordinate.
pub fn sob_seq_product(
    a: &SubObservable,
    b: &SubObservable,
    instrument: &Instrument,
) -> Result<SubObservable> {
    check_measures_extension(a, instrument, Tolerance::DEFAULT)?;
    b.effects()[0].matrix().check_dim(a.effects()[0].matrix())?;
    let product = ProductOutcomeSpace::new(a.space(), b.space())?;
    let mut effects = Vec::with_capacity(product.len());
    for x in a.labels() {
        let op = instrument.op(x)?;
        for by in b.effects() {
            effects.push(Effect::from_trusted(op.dual(by.matrix())));
        }
    }
    Ok(SubObservable::from_trusted(product.space().clone(), effects))
}

/// `(B|I|A)(y) = Ī*(b_y)`, summing over every outcome of `I` including the extension point.
pub fn sob_conditioned(
    b: &SubObservable,
    instrument: &Instrument,
    a: &SubObservable,
) -> Result<SubObservable> {
    check_measures_extension(a, instrument, Tolerance::DEFAULT)?;
    b.effects()[0].matrix().check_dim(a.effects()[0].matrix())?;
    let all = instrument.space().all();
    let effects = b
        .effects()
        .iter()
        .map(|e| Effect::from_trusted(instrument.dual_indices(&all, e.matrix())))
        .collect();
    Ok(SubObservable::from_trusted(b.space().clone(), effects))
}

/// `y ↦ Σ_{x∈Ω_A} I*(x)(b_y)`, the marginal of `A[I]B` over `Ω_A` only.
pub fn sob_conditioned_restricted(
    b: &SubObservable,
    instrument: &Instrument,
    a: &SubObservable,
) -> Result<SubObservable> {
    let joint = sob_seq_product(a, b, instrument)?;
    let product = ProductOutcomeSpace::new(a.space(), b.space())?;
    Ok(marginal_right(&joint, &product, &a.space().all()))
}

/// `Γ ↦ J(Δ × Γ)` for a joint sub-observable on a product space.
pub fn marginal_right(
    joint: &SubObservable,
    product: &ProductOutcomeSpace,
    left: &[usize],
) -> SubObservable {
    let dim = joint.dim();
    let effects = (0..product.right().len())
        .map(|j| {
            let mut acc = Matrix::zeros(dim);
            for &i in left {
                acc += joint.effects()[product.index(i, j)].matrix();
            }
            Effect::from_trusted(acc)
        })
        .collect();
    SubObservable::from_trusted(product.right().clone(), effects)
}

/// `I_a* ∘ I_b* = I_{a∘b}*`.
pub fn determined_seq_product(
    instrument: &Instrument,
    a: &Effect,
    b: &Effect,
) -> Result<SubObservable> {
    a.matrix().check_dim(b.matrix())?;
    instrument.determined_subobservable(&a.seq_product(b))
}

/// Largest residuals of the four dual identities for `I∘J` and `(J|I)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct CompositionResiduals {
    /// `(I∘J)_a*(x, y)` against `I*(x)[J*(y)(a)]`.
    pub product_dual: f64,
    /// `(I∘J)_I*(x, y)` against `I*(x)[Ĵ(y)]`.
    pub product_measured: f64,
    /// `(J|I)_a*(y)` against `I*(Ω_I)[J*(y)(a)]`.
    pub conditioned_dual: f64,
    /// `(J|I)_I*(y)` against `I*(Ω_I)[Ĵ(y)]`.
    pub conditioned_measured: f64,
}

impl CompositionResiduals {
    pub fn max(&self) -> f64 {
        self.product_dual
            .max(self.product_measured)
            .max(self.conditioned_dual)
            .max(self.conditioned_measured)
    }
}

/// Compares the composed instruments' duals with the nested single-instrument duals.
pub fn composition_duality_residuals(
    i: &Instrument,
    j: &Instrument,
    a: &Effect,
) -> Result<CompositionResiduals> {
    let ij = instr_seq_product(i, j)?;
    let cond = instr_conditioned(j, i)?;
    let product = ProductOutcomeSpace::new(i.space(), j.space())?;
    let id = Effect::identity(i.dim());
    let all = i.space().all();

    let ij_a = ij.determined_subobservable(a)?;
    let ij_id = ij.measured_observable();
    let cond_a = cond.determined_subobservable(a)?;
    let cond_id = cond.measured_observable();
    let j_a = j.determined_subobservable(a)?;
    let j_hat = j.determined_subobservable(&id)?;

    let mut r = CompositionResiduals {
        product_dual: 0.0,
        product_measured: 0.0,
        conditioned_dual: 0.0,
        conditioned_measured: 0.0,
    };
    for (x, op) in i.ops().iter().enumerate() {
        for y in 0..j.len() {
            let k = product.index(x, y);
            let nested = op.dual(j_a.effects()[y].matrix());
            r.product_dual = r.product_dual.max(ij_a.effects()[k].matrix().max_abs_diff(&nested));
            let nested = op.dual(j_hat.effects()[y].matrix());
            r.product_measured = r
                .product_measured
                .max(ij_id.effects()[k].matrix().max_abs_diff(&nested));
        }
    }
    for y in 0..j.len() {
        let nested = i.dual_indices(&all, j_a.effects()[y].matrix());
        r.conditioned_dual = r
            .conditioned_dual
            .max(cond_a.effects()[y].matrix().max_abs_diff(&nested));
        let nested = i.dual_indices(&all, j_hat.effects()[y].matrix());
        r.conditioned_measured = r
            .conditioned_measured
            .max(cond_id.effects()[y].matrix().max_abs_diff(&nested));
    }
    Ok(r)
}
