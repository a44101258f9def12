//! Certified quadrature with the λ-parameterized three-point rule.
//!
//! `Q_λ = λ·(f(a)+f(b))/2 + (1−λ)·f((a+b)/2)` interpolates between the midpoint
//! (λ = 0), Simpson (λ = 1/3) and trapezoid (λ = 1) rules. When `|f″|` is
//! convex on `[a, b]`, [`rule::bound_first_order`] and [`rule::bound_power_mean`]
//! bound `|mean − Q_λ|` in closed form.
//!
//! * [`rule`]: the rule, its kernel and the closed-form bounds
//! * [`oracle`]: brute-force numerical checks of all of the above
//! * [`functions`]: expression language, jets, builtins, convexity probe
//! * [`composite`]: adaptive integration with a summed certificate
//! * [`means`]: special means and their rule-derived inequalities
//! * [`cli`]: the command implementations behind the `quadcert` binary

pub mod cli;
pub mod composite;
pub mod exec;
pub mod functions;
pub mod means;
pub mod oracle;
pub mod rule;

pub use composite::{integrate_certified, Certificate, LambdaPolicy};
pub use exec::Execution;
pub use functions::{Builtin, FunctionSpec};
pub use oracle::IntegrandSpec;
pub use rule::{EndpointCurvature, ErrorBound, Interval, LambdaRule, PowerExponent};
