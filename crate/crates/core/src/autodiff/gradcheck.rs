use super::params::{Bound, ParamStore};
use super::tape::{Tape, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Max over checked coordinates of
    /// `|analytic - numeric| / max(1, |analytic|, |numeric|)`.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates whose ±eps perturbation changed a hard selection.
    pub skipped: usize,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
}

/// Compares reverse-mode gradients of `f` against central differences.
///
/// `f` records a scalar loss on a fresh tape given the bound parameters.
/// Coordinates where either perturbed evaluation selects different indices
/// in a gather/top-k than the unperturbed one are skipped.
pub fn grad_check<F>(params: &ParamStore, eps: f64, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &Bound) -> Result<Var>,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }

    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let loss = f(&mut tape, &bound)?;
    let grads = tape.backward(loss)?;
    let analytic = bound.collect(&tape, &grads);
    let signature = tape.selection_signature();

    let evaluate = |p: &ParamStore| -> Result<(f64, Vec<Vec<usize>>)> {
        let mut tape = Tape::new();
        let bound = p.bind(&mut tape);
        let loss = f(&mut tape, &bound)?;
        Ok((tape.value(loss).item(), tape.selection_signature()))
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
        worst: None,
    };
    let mut work = params.clone();
    for id in params.ids() {
        for k in 0..params.get(id).len() {
            let original = params.get(id).data()[k];

            work.get_mut(id).data_mut()[k] = original + eps;
            let (plus, sig_plus) = evaluate(&work)?;
            work.get_mut(id).data_mut()[k] = original - eps;
            let (minus, sig_minus) = evaluate(&work)?;
            work.get_mut(id).data_mut()[k] = original;

            if sig_plus != signature || sig_minus != signature {
                report.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic.get(id).data()[k];
            let rel = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
            report.checked += 1;
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((params.name(id).to_string(), k));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Matrix;

    #[test]
    fn quadratic_form_matches_to_high_precision() {
        // f(x) = x^T A x with x a 3x1 parameter; gradient (A + A^T) x.
        let a = Matrix::from_rows(&[[2.0, -1.0, 0.5], [0.3, 1.0, 0.0], [-0.7, 0.2, 3.0]]);
        let mut params = ParamStore::new();
        params.insert("x", Matrix::from_rows(&[[0.4], [-1.2], [0.9]]));
        let report = grad_check(&params, 1e-5, |tape, bound| {
            let x = bound.var(params.id("x").unwrap());
            let av = tape.constant(a.clone());
            let ax = tape.matmul(av, x)?;
            let xt = tape.transpose(x);
            tape.matmul(xt, ax)
        })
        .unwrap();
        assert_eq!(report.checked, 3);
        assert!(report.max_rel_error < 1e-8, "{report:?}");
    }

    #[test]
    fn topk_gather_matches_when_selection_is_stable() {
        let mut params = ParamStore::new();
        params.insert(
            "h",
            Matrix::from_rows(&[[0.9, -0.1], [0.2, 0.6], [0.5, 0.3], [-0.4, 0.8]]),
        );
        params.insert("w", Matrix::from_rows(&[[0.7, -0.2], [0.1, 0.5]]));
        let report = grad_check(&params, 1e-5, |tape, bound| {
            let h = bound.var(params.id("h").unwrap());
            let w = bound.var(params.id("w").unwrap());
            let hw = tape.matmul(h, w)?;
            let t = tape.tanh(hw);
            let top = tape.topk_per_column(t, 2);
            let sq = tape.hadamard(top, top)?;
            Ok(tape.sum(sq))
        })
        .unwrap();
        assert!(report.checked > 0);
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn zero_step_is_rejected() {
        let params = ParamStore::new();
        let err = grad_check(&params, 0.0, |tape, _| {
            Ok(tape.constant(Matrix::scalar(0.0)))
        })
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
