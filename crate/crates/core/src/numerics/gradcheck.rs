use super::{Graph, ParamStore, Var};
use crate::error::{Error, Result};

/// Finite-difference formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// `(f(x+h) - f(x-h)) / 2h`
    Central,
    /// `(-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h`; fourth-order
    /// accurate, so a larger step keeps rounding noise down.
    FivePoint,
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub stencil: Stencil,
    pub step: f64,
    pub tolerance: f64,
    /// Lower bound on the relative-error denominator, so entries whose true
    /// gradient is ~0 are compared absolutely.
    pub floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            stencil: Stencil::FivePoint,
            step: 1e-4,
            tolerance: 1e-4,
            floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub frozen: bool,
    pub entries: usize,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub analytic_norm: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.params
            .iter()
            .filter(|p| !p.frozen)
            .map(|p| p.max_rel_err)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_err() < self.tolerance
    }

    pub fn worst(&self) -> Option<&ParamCheck> {
        self.params
            .iter()
            .filter(|p| !p.frozen)
            .max_by(|a, b| a.max_rel_err.total_cmp(&b.max_rel_err))
    }
}

/// Compares analytic gradients of the scalar built by `model_fn` against
/// finite differences, entry by entry, for every parameter in `params`.
///
/// `model_fn` must be deterministic; it runs on evaluation graphs, so dropout
/// is off. Frozen parameters are reported with their (zero) analytic gradient
/// and are not differenced.
pub fn grad_check<F>(model_fn: F, params: &ParamStore, cfg: GradCheckConfig) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph) -> Result<Var>,
{
    let eval = |store: &ParamStore| -> Result<f64> {
        let mut g = Graph::new(store);
        let out = model_fn(&mut g)?;
        Ok(g.value(out).get(0, 0))
    };

    let first = eval(params)?;
    let second = eval(params)?;
    if first.to_bits() != second.to_bits() {
        return Err(Error::NonDeterministic(format!(
            "two forward passes gave {first} and {second}"
        )));
    }

    let mut g = Graph::new(params);
    let loss = model_fn(&mut g)?;
    let analytic = g.backward(loss)?;

    let mut work = params.clone();
    let mut report = Vec::new();
    for (id, p) in params.iter() {
        let ana = analytic.get_or_zeros(id, &p.value);
        let mut check = ParamCheck {
            name: p.name.clone(),
            frozen: p.frozen,
            entries: p.value.len(),
            max_rel_err: 0.0,
            max_abs_err: 0.0,
            analytic_norm: ana.sq_norm().sqrt(),
        };
        if !p.frozen {
            for k in 0..p.value.len() {
                let orig = p.value.data()[k];
                let mut at = |offset: f64| -> Result<f64> {
                    work.value_mut(id).data_mut()[k] = orig + offset;
                    eval(&work)
                };
                let h = cfg.step;
                let numeric = match cfg.stencil {
                    Stencil::Central => (at(h)? - at(-h)?) / (2.0 * h),
                    Stencil::FivePoint => {
                        (-at(2.0 * h)? + 8.0 * at(h)? - 8.0 * at(-h)? + at(-2.0 * h)?) / (12.0 * h)
                    }
                };
                work.value_mut(id).data_mut()[k] = orig;
                let a = ana.data()[k];
                let abs = (a - numeric).abs();
                let rel = abs / a.abs().max(numeric.abs()).max(cfg.floor);
                check.max_abs_err = check.max_abs_err.max(abs);
                check.max_rel_err = check.max_rel_err.max(rel);
            }
        }
        report.push(check);
    }
    Ok(GradCheckReport {
        params: report,
        tolerance: cfg.tolerance,
    })
}
