//! Short spec strings for graphons, frequency densities and coupling ranges.

use std::fmt;

use kgraph::dynamics::InitialCondition;
use kgraph::frequency::FrequencyDistribution;
use kgraph::graphon::Graphon;

pub const GRAPHON_KINDS: &str = "constant:p, small_world:p:r, ring_indicator:r, ring_exp:kappa";
pub const FREQ_KINDS: &str = "cauchy:delta, gaussian:sigma";
pub const IC_KINDS: &str = "incoherent, wrapped_gaussian:concentration[:mean]";

fn split_numbers(spec: &str) -> Result<(&str, Vec<f64>), String> {
    let mut parts = spec.trim().split(':');
    let head = parts.next().unwrap_or_default();
    let nums = parts
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("{spec:?}: {p:?} is not a number"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((head, nums))
}

fn arity(spec: &str, nums: &[f64], want: &[usize]) -> Result<(), String> {
    if want.contains(&nums.len()) {
        Ok(())
    } else {
        Err(format!(
            "{spec:?} takes {want:?} parameter(s), got {}",
            nums.len()
        ))
    }
}

pub fn parse_graphon(spec: &str) -> Result<Graphon, String> {
    let (kind, nums) = split_numbers(spec)?;
    let built = match kind {
        "constant" => arity(spec, &nums, &[1]).map(|_| Graphon::constant(nums[0])),
        "small_world" => arity(spec, &nums, &[2]).map(|_| Graphon::small_world(nums[0], nums[1])),
        "ring_indicator" => arity(spec, &nums, &[1]).map(|_| Graphon::ring_indicator(nums[0])),
        "ring_exp" => arity(spec, &nums, &[1]).map(|_| Graphon::ring_exponential(nums[0])),
        other => {
            return Err(format!(
                "unknown graphon kind {other:?}; accepted: {GRAPHON_KINDS}"
            ))
        }
    }?;
    built.map_err(|e| format!("{spec:?}: {e}"))
}

pub fn parse_freq(spec: &str) -> Result<FrequencyDistribution, String> {
    let (kind, nums) = split_numbers(spec)?;
    let built = match kind {
        "cauchy" => arity(spec, &nums, &[1]).map(|_| FrequencyDistribution::cauchy(nums[0])),
        "gaussian" => arity(spec, &nums, &[1]).map(|_| FrequencyDistribution::gaussian(nums[0])),
        other => {
            return Err(format!(
                "unknown frequency kind {other:?}; accepted: {FREQ_KINDS}"
            ))
        }
    }?;
    built.map_err(|e| format!("{spec:?}: {e}"))
}

pub fn parse_initial(spec: &str) -> Result<InitialCondition, String> {
    let (kind, nums) = split_numbers(spec)?;
    match kind {
        "incoherent" => arity(spec, &nums, &[0]).map(|_| InitialCondition::Incoherent),
        "wrapped_gaussian" => {
            arity(spec, &nums, &[1, 2])?;
            if !(nums[0] > 0.0) {
                return Err(format!("{spec:?}: concentration must be positive"));
            }
            Ok(InitialCondition::WrappedGaussian {
                concentration: nums[0],
                mean: nums.get(1).copied().unwrap_or(0.0),
            })
        }
        other => Err(format!(
            "unknown initial condition {other:?}; accepted: {IC_KINDS}"
        )),
    }
}

/// Coupling strengths: a scalar or an inclusive `min:max:step` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingRange {
    Scalar(f64),
    Grid { min: f64, max: f64, step: f64 },
}

impl CouplingRange {
    pub fn parse(spec: &str) -> Result<Self, String> {
        let nums = spec
            .split(':')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("K {spec:?}: {p:?} is not a number"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(format!("K {spec:?}: values must be finite"));
        }
        match nums[..] {
            [k] => Ok(CouplingRange::Scalar(k)),
            [min, max, step] => {
                if !(step > 0.0) {
                    Err(format!("K {spec:?}: step must be positive"))
                } else if max < min {
                    Err(format!("K {spec:?}: empty range (max < min)"))
                } else {
                    Ok(CouplingRange::Grid { min, max, step })
                }
            }
            _ => Err(format!("K {spec:?}: expected a number or min:max:step")),
        }
    }

    /// Grid values `min + i·step` up to `max`, tolerating rounding at the end.
    pub fn values(&self) -> Vec<f64> {
        match *self {
            CouplingRange::Scalar(k) => vec![k],
            CouplingRange::Grid { min, max, step } => {
                let count = ((max - min) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| min + i as f64 * step).collect()
            }
        }
    }
}

impl fmt::Display for CouplingRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CouplingRange::Scalar(k) => write!(f, "{k}"),
            CouplingRange::Grid { min, max, step } => write!(f, "{min}:{max}:{step}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graphon_specs() {
        assert_eq!(
            parse_graphon("small_world:0.1:0.25").unwrap().label(),
            "small_world:0.1:0.25"
        );
        assert_eq!(parse_graphon(" ring_exp:3 ").unwrap().label(), "ring_exp:3");
        let err = parse_graphon("smallworld:0.1:0.25").unwrap_err();
        assert!(
            err.contains("small_world:p:r") && err.contains("ring_indicator"),
            "{err}"
        );
        assert!(parse_graphon("constant:1.5").is_err());
        assert!(parse_graphon("constant").is_err());
        assert!(parse_graphon("ring_indicator:x").is_err());
    }

    #[test]
    fn freq_specs() {
        assert_eq!(
            parse_freq("cauchy:0.5").unwrap().g0(),
            1.0 / (std::f64::consts::PI * 0.5)
        );
        assert!(parse_freq("gaussian:-1").is_err());
        assert!(parse_freq("lorentz:1")
            .unwrap_err()
            .contains("cauchy:delta"));
    }

    #[test]
    fn coupling_ranges() {
        let g = CouplingRange::parse("1.2:3.0:0.2").unwrap();
        let v = g.values();
        assert_eq!(v.len(), 10);
        assert!((v[9] - 3.0).abs() < 1e-12);
        assert_eq!(CouplingRange::parse("2").unwrap().values(), vec![2.0]);
        assert!(CouplingRange::parse("3.0:1.2:0.2")
            .unwrap_err()
            .contains("empty"));
        assert!(CouplingRange::parse("1:2:0").is_err());
        assert!(CouplingRange::parse("1:2").is_err());
    }

    #[test]
    fn initial_condition_specs() {
        assert!(matches!(
            parse_initial("incoherent"),
            Ok(InitialCondition::Incoherent)
        ));
        assert!(matches!(
            parse_initial("wrapped_gaussian:2:0.5"),
            Ok(InitialCondition::WrappedGaussian { concentration, mean }) if concentration == 2.0 && mean == 0.5
        ));
        assert!(parse_initial("wrapped_gaussian:0").is_err());
    }
}
