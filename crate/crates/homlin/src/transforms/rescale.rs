use std::sync::Arc;

use crate::circuit::tree::{input, Formula, Node};
use crate::circuit::Circuit;
use crate::poly::{Coeff, LinearForm, Var};

use super::{lift, require_formula, TransformError};

/// `c * f` by rescaling leaves: both children of a sum, the first child of a product.
pub fn rescale_tree(f: &Formula, c: &Coeff) -> Result<Option<Formula>, TransformError> {
    if c.is_zero() {
        return Ok(None);
    }
    if c.is_one() {
        return Ok(Some(f.clone()));
    }
    Ok(Some(match &**f {
        Node::Input { form, constant } => input(form.scale(c), constant * c),
        Node::Alpha => input(LinearForm::zero(), &Coeff::alpha(1) * c),
        Node::Z => input(LinearForm::term(Var::z(), c.clone()), Coeff::zero()),
        Node::Add(a, b, s) => {
            let a = rescale_tree(a, c)?.expect("nonzero scale");
            let b = rescale_tree(b, c)?.expect("nonzero scale");
            Arc::new(Node::Add(a, b, s.clone()))
        }
        Node::Mul2(a, b, s) => {
            let a = rescale_tree(a, c)?.expect("nonzero scale");
            Arc::new(Node::Mul2(a, b.clone(), s.clone()))
        }
        Node::Mul3(a, b, d) => {
            let a = rescale_tree(a, c)?.expect("nonzero scale");
            Arc::new(Node::Mul3(a, b.clone(), d.clone()))
        }
        Node::NegCube(..) => return Err(TransformError::NeedsRootExtraction),
    }))
}

pub fn rescale(c: &Circuit, a: &Coeff) -> Result<Circuit, TransformError> {
    require_formula(c, "rescale")?;
    lift(c, c.basis, |f| rescale_tree(f, a))
}
