//! Resolving an AR model from preset names or explicit coefficients.

use anyhow::anyhow;
use avgerr_ar::{ar6_benchmark, white_noise, ArModel};

use crate::fail::{input, Classify, CmdResult};

pub const PRESET_HELP: &str = "paper-ar6 (slowly decorrelating AR(6) benchmark) | white-noise";

/// Builds the model from `--preset` or `--coeffs`, applying any
/// `--noise-variance` / `--mean` overrides. Returns the model and a label
/// for series files and report headers.
pub fn resolve(
    preset: Option<&str>,
    coeffs: Option<Vec<f64>>,
    noise_variance: Option<f64>,
    mean: Option<f64>,
) -> CmdResult<(ArModel, String)> {
    let (base, label) = match preset {
        Some("paper-ar6") | Some("ar6") => {
            if coeffs.is_some() {
                log::warn!("--coeffs ignored: --preset paper-ar6 fixes the coefficients");
            }
            (ar6_benchmark(), "paper-ar6".to_string())
        }
        Some("white-noise") => {
            if coeffs.is_some() {
                log::warn!("--coeffs ignored: --preset white-noise has none");
            }
            (
                white_noise(noise_variance.unwrap_or(1.0)).classify()?,
                "white-noise".to_string(),
            )
        }
        Some(other) => {
            return Err(input(anyhow!(
                "unknown preset {other:?}; expected one of: {PRESET_HELP}"
            )))
        }
        None => match coeffs {
            Some(c) => (
                ArModel::new(c, noise_variance.unwrap_or(1.0)).classify()?,
                "ar".to_string(),
            ),
            None => {
                return Err(input(anyhow!(
                    "no model given; pass --preset ({PRESET_HELP}) or --coeffs a1,a2,..."
                )))
            }
        },
    };

    // noise-variance override on a coefficient preset re-validates the model
    let mut model = match (preset, noise_variance) {
        (Some("paper-ar6") | Some("ar6"), Some(nv)) => {
            ArModel::new(base.coeffs().to_vec(), nv).classify()?
        }
        _ => base,
    };
    if let Some(mu) = mean {
        model = model.with_mean(mu);
    }
    Ok((model, label))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_and_custom_coefficients_resolve() {
        let (m, label) = resolve(Some("paper-ar6"), None, None, None).unwrap();
        assert_eq!(m.order(), 6);
        assert_eq!(label, "paper-ar6");

        let (m, _) = resolve(Some("white-noise"), None, Some(4.0), Some(1.5)).unwrap();
        assert_eq!(m.order(), 0);
        assert_eq!(m.noise_variance(), 4.0);
        assert_eq!(m.mean(), 1.5);

        let (m, label) = resolve(None, Some(vec![0.5]), Some(2.0), None).unwrap();
        assert_eq!(m.coeffs(), &[0.5]);
        assert_eq!(m.noise_variance(), 2.0);
        assert_eq!(label, "ar");
    }

    #[test]
    fn unstable_and_unknown_inputs_are_invalid_input() {
        // a root on the unit circle is refused by the model constructor
        let err = resolve(None, Some(vec![0.5, 0.5]), None, None).unwrap_err();
        assert_eq!(err.code(), 2);
        let err = resolve(Some("mystery"), None, None, None).unwrap_err();
        assert_eq!(err.code(), 2);
        let err = resolve(None, None, None, None).unwrap_err();
        assert_eq!(err.code(), 2);
    }
}
