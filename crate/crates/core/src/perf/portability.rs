//! Harmonic-mean performance portability over a platform set.

use super::PerfError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlatformEfficiency {
    Supported(f64),
    Unsupported,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PortabilityInput {
    pub platforms: Vec<(String, PlatformEfficiency)>,
}

impl PortabilityInput {
    pub fn from_efficiencies(e: &[f64]) -> Self {
        PortabilityInput {
            platforms: e.iter().enumerate().map(|(n, &x)| (format!("p{n}"), PlatformEfficiency::Supported(x))).collect(),
        }
    }
}

/// `|H| / sum(1 / e_i)`, or 0 when any platform is unsupported.
///
/// A set of equal efficiencies returns that efficiency bit for bit, and the
/// result is invariant under reordering of the set.
pub fn pp_metric(input: &PortabilityInput) -> Result<f64, PerfError> {
    if input.platforms.is_empty() {
        return Err(PerfError::Invalid("empty platform set".into()));
    }
    let mut e = Vec::with_capacity(input.platforms.len());
    for (id, p) in &input.platforms {
        match *p {
            PlatformEfficiency::Unsupported => return Ok(0.0),
            PlatformEfficiency::Supported(x) if x == 0.0 => return Err(PerfError::ZeroEfficiency(id.clone())),
            PlatformEfficiency::Supported(x) if !(x > 0.0 && x.is_finite()) => {
                return Err(PerfError::Invalid(format!("efficiency {x} on `{id}`")))
            }
            PlatformEfficiency::Supported(x) => e.push(x),
        }
    }
    if e.iter().all(|x| *x == e[0]) {
        return Ok(e[0]);
    }
    // summed in sorted order so the result does not depend on platform order
    e.sort_by(f64::total_cmp);
    Ok(e.len() as f64 / e.iter().map(|x| 1.0 / x).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(pp_metric(&PortabilityInput::from_efficiencies(&[0.63])).unwrap(), 0.63);
        let p = pp_metric(&PortabilityInput::from_efficiencies(&[0.725, 0.5])).unwrap();
        assert!((p - 2.0 / (1.0 / 0.725 + 1.0 / 0.5)).abs() < 1e-15);
        assert!((p - 0.5918).abs() < 1e-4);
        let mut input = PortabilityInput::from_efficiencies(&[0.9, 0.8]);
        input.platforms.push(("gpu".into(), PlatformEfficiency::Unsupported));
        assert_eq!(pp_metric(&input).unwrap(), 0.0);
    }

    #[test]
    fn zero_is_an_error_not_unsupported() {
        let e = pp_metric(&PortabilityInput::from_efficiencies(&[0.5, 0.0])).unwrap_err();
        assert!(matches!(e, PerfError::ZeroEfficiency(id) if id == "p1"));
        assert!(pp_metric(&PortabilityInput::default()).is_err());
    }

    proptest! {
        #[test]
        fn harmonic_mean_bounds(e in prop::collection::vec(0.01f64..1.0, 1..12)) {
            let p = pp_metric(&PortabilityInput::from_efficiencies(&e)).unwrap();
            let min = e.iter().cloned().fold(f64::INFINITY, f64::min);
            let mean = e.iter().sum::<f64>() / e.len() as f64;
            prop_assert!(p >= min * (1.0 - 1e-15) && p <= mean * (1.0 + 1e-15));
            let mut rev = e.clone();
            rev.reverse();
            let q = pp_metric(&PortabilityInput::from_efficiencies(&rev)).unwrap();
            prop_assert_eq!(p, q);
        }

        #[test]
        fn equal_efficiencies(x in 0.001f64..1.0, n in 1usize..20) {
            prop_assert_eq!(pp_metric(&PortabilityInput::from_efficiencies(&vec![x; n])).unwrap(), x);
        }
    }
}
