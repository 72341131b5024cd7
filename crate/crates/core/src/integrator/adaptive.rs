use crate::error::{Error, Result};
use crate::model::{
    build_hilbert_space, build_initial_state, default_truncation, DensityMatrix, InitialKind,
    SystemParams,
};

/// Times the default truncation may grow before a leakage error is returned.
pub const MAX_TRUNCATION_GROWTH: usize = 3;

/// Run `f` from the initial state of `params`.
///
/// An explicit `truncation` is used as given. Otherwise the run starts in the
/// default space and, each time the leakage guard trips, the offending mode
/// grows by half its size and `f` is repeated.
pub fn with_adaptive_truncation<T>(
    params: &SystemParams,
    kind: InitialKind,
    truncation: Option<&[usize]>,
    mut f: impl FnMut(&DensityMatrix) -> Result<T>,
) -> Result<T> {
    let start = |t: &[usize]| {
        let space = build_hilbert_space(params, t)?;
        build_initial_state(kind, params.initial_photon, &space)
    };
    if let Some(t) = truncation {
        return f(&start(t)?);
    }
    let mut t =
        vec![default_truncation(params.initial_photon, params.dimension()); params.dimension()];
    let mut grown = 0;
    loop {
        match f(&start(&t)?) {
            Err(Error::TruncationTooSmall { mode, .. }) if grown < MAX_TRUNCATION_GROWTH => {
                t[mode] += (t[mode] / 2).max(8);
                grown += 1;
            }
            other => return other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{run_to_decay, EvolutionConfig};

    #[test]
    fn grows_past_a_leaking_default() {
        // strong hopping and slow decay spread the walker past the default 25
        let p = SystemParams::one_d(2.0, 11.6, 0.0, 1.0, 0.0, 1);
        let c = EvolutionConfig::default();
        let mut sizes = Vec::new();
        let rec = with_adaptive_truncation(&p, InitialKind::Fock, None, |rho| {
            sizes.push(rho.space().truncations()[0]);
            run_to_decay(&p, rho, &c)
        })
        .unwrap();
        assert!(sizes.len() > 1, "{sizes:?}");
        assert_eq!(rec.truncations, vec![*sizes.last().unwrap()]);
        let fixed = with_adaptive_truncation(&p, InitialKind::Fock, Some(&[25]), |rho| {
            run_to_decay(&p, rho, &c)
        });
        assert!(matches!(fixed, Err(Error::TruncationTooSmall { .. })));
    }
}
