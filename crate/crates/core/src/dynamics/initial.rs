//! Initial data sampled from constants or expressions in `x` and `L`.

use evalexpr::{
    build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables,
    DefaultNumericTypes, Function, HashMapContext, Value,
};

use super::SimState;
use crate::config::{InitialConfig, InitialValue};
use crate::error::{Error, Result};
use crate::graph::Network;

type Ctx = HashMapContext<DefaultNumericTypes>;

fn context(length: f64) -> Result<Ctx> {
    let mut ctx = Ctx::new();
    let err = |e: evalexpr::EvalexprError<DefaultNumericTypes>| Error::Expression(e.to_string());
    ctx.set_value("L".into(), Value::Float(length)).map_err(err)?;
    ctx.set_value("pi".into(), Value::Float(std::f64::consts::PI)).map_err(err)?;
    type Unary = (&'static str, fn(f64) -> f64);
    let unary: [Unary; 9] = [
        ("sin", f64::sin),
        ("cos", f64::cos),
        ("tan", f64::tan),
        ("exp", f64::exp),
        ("ln", f64::ln),
        ("sqrt", f64::sqrt),
        ("abs", f64::abs),
        ("sinh", f64::sinh),
        ("cosh", f64::cosh),
    ];
    for (name, f) in unary {
        ctx.set_function(
            name.into(),
            Function::new(move |arg: &Value<DefaultNumericTypes>| Ok(Value::Float(f(arg.as_number()?)))),
        )
        .map_err(err)?;
    }
    Ok(ctx)
}

/// Evaluates `value` at each point of `xs` on an arc of length `length`.
/// Expressions see `x`, `L`, `pi` and the usual elementary functions.
pub fn sample_expression(value: &InitialValue, xs: &[f64], length: f64) -> Result<Vec<f64>> {
    match value {
        InitialValue::Constant(c) => Ok(vec![*c; xs.len()]),
        InitialValue::Expression(text) => {
            let tree = build_operator_tree::<DefaultNumericTypes>(text)
                .map_err(|e| Error::Expression(format!("{text:?}: {e}")))?;
            let mut ctx = context(length)?;
            xs.iter()
                .map(|&x| {
                    ctx.set_value("x".into(), Value::Float(x))
                        .map_err(|e| Error::Expression(e.to_string()))?;
                    let y = tree
                        .eval_number_with_context(&ctx)
                        .map_err(|e| Error::Expression(format!("{text:?}: {e}")))?;
                    if y.is_finite() {
                        Ok(y)
                    } else {
                        Err(Error::Expression(format!("{text:?} is not finite at x = {x}")))
                    }
                })
                .collect()
        }
    }
}

/// `u`, `v` sampled at cell centres, `psi` at vertices; arcs without an
/// entry start at zero.
pub fn initial_state(net: &Network, initial: &[InitialConfig]) -> Result<SimState> {
    let mut state = SimState::zeros(net);
    for entry in initial {
        let i = net
            .arc_index(entry.arc)
            .ok_or_else(|| Error::Validation(format!("initial data for unknown arc {}", entry.arc)))?;
        let arc = &net.arcs()[i];
        let l = arc.params.length;
        let centres = arc.centres();
        state.u[i] = sample_expression(&entry.u, &centres, l)?;
        state.v[i] = sample_expression(&entry.v, &centres, l)?;
        state.psi[i] = sample_expression(&entry.psi, &arc.vertices(), l)?;
    }
    SimState::from_fields(net, 0.0, state.u, state.v, state.psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::single_arc;

    #[test]
    fn expression_sees_x_and_length() {
        let v = InitialValue::Expression("sin(pi * x / L)^2".into());
        let ys = sample_expression(&v, &[0.0, 1.0, 2.0], 2.0).unwrap();
        assert!(ys[0].abs() < 1e-15);
        assert!((ys[1] - 1.0).abs() < 1e-15);
        assert!(ys[2].abs() < 1e-15);
    }

    #[test]
    fn integer_literals_are_accepted() {
        let v = InitialValue::Expression("1 + 2 * x".into());
        assert_eq!(sample_expression(&v, &[0.5], 1.0).unwrap(), vec![2.0]);
    }

    #[test]
    fn bad_expression_is_reported() {
        let v = InitialValue::Expression("sin(".into());
        assert!(matches!(sample_expression(&v, &[0.0], 1.0), Err(Error::Expression(_))));
    }

    #[test]
    fn initial_state_fills_missing_arcs_with_zero() {
        let net = single_arc(1.0, 4);
        let s = initial_state(&net, &[]).unwrap();
        assert_eq!(s.u[0], vec![0.0; 4]);
        let s = initial_state(
            &net,
            &[InitialConfig {
                arc: 1,
                u: InitialValue::Constant(2.0),
                v: InitialValue::default(),
                psi: InitialValue::Expression("x".into()),
            }],
        )
        .unwrap();
        assert_eq!(s.mass_0, 2.0);
        assert!(s.psi_x[0].iter().all(|g| (g - 1.0).abs() < 1e-14));
    }
}
