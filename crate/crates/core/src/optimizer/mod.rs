//! Learned circulant projections (CBE-opt).
//!
//! Alternates between the binary targets `B` (an exact sign step in the
//! signal domain) and the spectrum `r~ = F(r)` (a separable update in the
//! frequency domain, one small quartic per conjugate pair). Codes shorter
//! than `d` are handled by fixing the target columns `j >= k` at zero.

mod constraints;
mod objective;
mod quartic;
mod stats;

use num_complex::Complex64;
use rayon::prelude::*;

pub use constraints::PairConstraints;
pub use objective::{objective, orthogonality_penalty, spectral_objective, spectral_penalty};
pub use quartic::{dc_objective, pair_objective, solve_dc, solve_pair, GdSettings, SolverMode};
pub use stats::{accumulate_stats, update_b, FrequencyStats, TargetMatrix};

use stats::SpectralData;

use crate::dataio::DataMatrix;
use crate::dsp::{ifft, take_real, ComplexSpectrum};
use crate::embedding::{cbe_random, CirculantParams};
use crate::error::{check_len, CbeError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OptConfig {
    /// Weight of the orthogonality penalty.
    pub lambda: f64,
    /// Weight of the semi-supervised pair term; 0 disables it.
    pub mu: f64,
    pub k: usize,
    pub max_outer_iters: usize,
    pub objective_rel_tol: f64,
    pub gd: GdSettings,
    pub solver_mode: SolverMode,
    /// Use targets in `{-1/sqrt(d), 1/sqrt(d)}` instead of `{-1, 1}`.
    pub normalized_codes: bool,
}

impl OptConfig {
    pub fn new(k: usize) -> Self {
        Self {
            lambda: 1.0,
            mu: 0.0,
            k,
            max_outer_iters: 10,
            objective_rel_tol: 1e-4,
            gd: GdSettings::default(),
            solver_mode: SolverMode::RadialExact,
            normalized_codes: false,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(CbeError::invalid(format!(
                "lambda = {} must be >= 0",
                self.lambda
            )));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(CbeError::invalid(format!("mu = {} must be >= 0", self.mu)));
        }
        if self.k == 0 || self.k > d {
            return Err(CbeError::invalid(format!(
                "k = {} must be in 1..={d}",
                self.k
            )));
        }
        if !(self.gd.step_init > 0.0 && self.gd.backtrack > 0.0 && self.gd.backtrack < 1.0) {
            return Err(CbeError::invalid(
                "gradient-descent step settings out of range",
            ));
        }
        Ok(())
    }

    fn target_scale(&self, d: usize) -> f64 {
        if self.normalized_codes {
            1.0 / (d as f64).sqrt()
        } else {
            1.0
        }
    }
}

/// Optimizer state after the most recent half-step.
#[derive(Debug, Clone)]
pub struct OptState {
    pub r_spectrum: ComplexSpectrum,
    pub b: TargetMatrix,
    pub m_diag: Vec<f64>,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub a_diag: Vec<f64>,
    pub objective_trace: Vec<f64>,
}

impl OptState {
    fn stats(&self, mu: f64) -> FrequencyStats {
        FrequencyStats {
            m_diag: self.m_diag.clone(),
            h: self.h.clone(),
            g: self.g.clone(),
            a_diag: self.a_diag.clone(),
            mu,
        }
    }
}

/// New spectrum minimizing the frequency-domain objective for the current
/// `m`, `h`, `g`, `A`. Each index keeps its incumbent value if the solver
/// does not improve on it, so the objective never increases.
pub fn update_spectrum(state: &OptState, config: &OptConfig) -> Result<ComplexSpectrum> {
    let current = state.r_spectrum.values();
    let d = current.len();
    for (what, len) in [
        ("m", state.m_diag.len()),
        ("h", state.h.len()),
        ("g", state.g.len()),
        ("A", state.a_diag.len()),
    ] {
        check_len(what, d, len)?;
    }
    if d == 0 {
        return Err(CbeError::invalid("empty spectrum"));
    }
    let m: Vec<f64> = state
        .m_diag
        .iter()
        .zip(&state.a_diag)
        .map(|(m, a)| m + config.mu * a)
        .collect();
    let (h, g) = (&state.h, &state.g);
    let c_single = config.lambda * d as f64;
    let c_pair = 2.0 * c_single;

    let real_index = |i: usize| -> Result<f64> {
        let t = solve_dc(m[i], h[i], c_single)?;
        let incumbent = current[i].re;
        Ok(
            if dc_objective(m[i], h[i], c_single, t)
                <= dc_objective(m[i], h[i], c_single, incumbent)
            {
                t
            } else {
                incumbent
            },
        )
    };

    let pairs: Vec<usize> = (1..d.div_ceil(2)).collect();
    let solved = pairs
        .par_iter()
        .map(|&i| -> Result<(f64, f64)> {
            let j = d - i;
            let (ms, hs, gd) = (m[i] + m[j], h[i] + h[j], g[i] - g[j]);
            let warm = (current[i].re, current[i].im);
            let cand = solve_pair(ms, hs, gd, c_pair, config.solver_mode, warm, &config.gd)?;
            Ok(
                if pair_objective(ms, hs, gd, c_pair, cand)
                    <= pair_objective(ms, hs, gd, c_pair, warm)
                {
                    cand
                } else {
                    warm
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = vec![Complex64::new(0.0, 0.0); d];
    out[0] = Complex64::new(real_index(0)?, 0.0);
    for (&i, &(a, b)) in pairs.iter().zip(&solved) {
        out[i] = Complex64::new(a, b);
        out[d - i] = Complex64::new(a, -b);
    }
    if d.is_multiple_of(2) && d >= 2 {
        out[d / 2] = Complex64::new(real_index(d / 2)?, 0.0);
    }
    Ok(ComplexSpectrum::new(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStep {
    /// After the binary-target update.
    Targets,
    /// After the spectrum update.
    Spectrum,
}

impl TraceStep {
    pub fn name(self) -> &'static str {
        match self {
            TraceStep::Targets => "targets",
            TraceStep::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub step: TraceStep,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: CirculantParams,
    /// Parameters the optimization started from.
    pub init: CirculantParams,
    pub trace: Vec<TracePoint>,
    pub state: OptState,
}

impl TrainOutput {
    /// Objective of the random initialization with its optimal targets.
    pub fn initial_objective(&self) -> f64 {
        self.trace[0].objective
    }

    pub fn final_objective(&self) -> f64 {
        self.trace.last().unwrap().objective
    }
}

/// Learns `r` for data `x` (rows expected to be unit norm). The sign
/// diagonal and the starting `r` are the seeded random parameters; the
/// signs stay fixed throughout.
pub fn train(
    x: &DataMatrix,
    config: &OptConfig,
    constraints: &PairConstraints,
    seed: u64,
) -> Result<TrainOutput> {
    let d = x.d();
    if x.n() == 0 {
        return Err(CbeError::invalid("training data has no rows"));
    }
    if d == 0 || !d.is_power_of_two() {
        return Err(CbeError::invalid(format!("d = {d} is not a power of two")));
    }
    config.validate(d)?;
    constraints.validate(x.n())?;

    let init = cbe_random(d, config.k, seed)?;
    let spectral = SpectralData::new(x, Some(init.signs()))?;
    debug_assert_eq!((spectral.n(), spectral.d()), (x.n(), d));
    let m_diag = spectral.energy();
    let a_diag = spectral.pair_energy(constraints)?;
    let scale = config.target_scale(d);

    let mut spectrum = init.primary().spectrum().clone();
    let mut trace = Vec::new();
    let mut state: Option<OptState> = None;
    let mut last_spectrum_objective: Option<f64> = None;
    let mut iteration = 0;
    let mut converged = false;

    loop {
        let (b, _) = spectral.targets(spectrum.values(), config.k, scale)?;
        let (h, g) = spectral.linear_terms(&b)?;
        let mut st = OptState {
            r_spectrum: spectrum.clone(),
            b,
            m_diag: m_diag.clone(),
            h,
            g,
            a_diag: a_diag.clone(),
            objective_trace: state.take().map_or_else(Vec::new, |s| s.objective_trace),
        };
        let after_targets = spectral_objective(
            spectrum.values(),
            &st.stats(config.mu),
            st.b.frobenius_sq(),
            config.lambda,
        );
        trace.push(TracePoint {
            iteration,
            step: TraceStep::Targets,
            objective: after_targets,
        });
        st.objective_trace.push(after_targets);

        if converged || iteration >= config.max_outer_iters {
            state = Some(st);
            break;
        }

        spectrum = update_spectrum(&st, config)?;
        st.r_spectrum = spectrum.clone();
        let after_spectrum = spectral_objective(
            spectrum.values(),
            &st.stats(config.mu),
            st.b.frobenius_sq(),
            config.lambda,
        );
        trace.push(TracePoint {
            iteration,
            step: TraceStep::Spectrum,
            objective: after_spectrum,
        });
        st.objective_trace.push(after_spectrum);
        state = Some(st);
        iteration += 1;

        let previous = last_spectrum_objective.unwrap_or(after_targets);
        last_spectrum_objective = Some(after_spectrum);
        let rel = (previous - after_spectrum) / previous.abs().max(f64::MIN_POSITIVE);
        converged = rel < config.objective_rel_tol;
    }

    let params = if iteration == 0 {
        init.clone()
    } else {
        let r = take_real(&ifft(&spectrum)?)?;
        CirculantParams::new(r, init.signs().to_vec(), config.k)?
    };
    Ok(TrainOutput {
        params,
        init,
        trace,
        state: state.expect("at least one half-step ran"),
    })
}
