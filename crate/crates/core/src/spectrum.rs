//! The β-function `β(q) = P(σ, qf) − q P(σ, f)` and the entropy spectrum it
//! determines through `E(α) = inf_q (β(q) + qα)`.
//!
//! `α(q) = −β′(q)` is evaluated from the first-order eigenvalue perturbation
//! formula, the endpoints `α_min`, `α_max` exactly from extreme cycle means of
//! `f`, and interior spectrum values by solving `α(q*) = α`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::perron::{
    cycle_mean_extremes, perron, CycleMeans, ExpFamily, PerronOptions, PositiveMatrix,
};
use crate::shift::DEFAULT_WORD_CAP;
use crate::thermo::{GibbsState, Potential};

#[derive(Clone, Copy, Debug)]
pub struct SpectrumOptions {
    /// Largest `|q|` the root solver and the endpoint limits may use.
    pub q_cap: f64,
    /// Bisection stops at this bracket width before Newton takes over.
    pub bracket_width: f64,
    /// Newton stops when the step falls below this.
    pub newton_tol: f64,
    /// `α_max − α_min` at or below this means a point spectrum.
    pub degeneracy_tol: f64,
    /// Allowed mismatch between `β + qα` and the entropy of `μ_{qf}`.
    pub crosscheck_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            q_cap: 200.0,
            bracket_width: 1e-6,
            newton_tol: 1e-12,
            degeneracy_tol: 1e-10,
            crosscheck_tol: 1e-8,
        }
    }
}

/// Uniform grid `min, min + step, …` up to `max` inclusive (within half a step).
///
/// Panics unless `step > 0` and `max ≥ min`.
pub fn q_grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && max >= min, "invalid grid");
    let count = ((max - min) / step + 0.5).floor() as usize;
    (0..=count).map(|k| min + k as f64 * step).collect()
}

/// Default comparison grid `q ∈ [−20, 20]`, step 0.25.
pub fn default_grid() -> Vec<f64> {
    q_grid(-20.0, 20.0, 0.25)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaRange {
    pub min: f64,
    pub max: f64,
}

/// `β` and its derivatives for one potential (reduced to order 2).
#[derive(Clone, Debug)]
pub struct BetaFunction {
    potential: Potential,
    family: ExpFamily,
    pressure: f64,
    topological_entropy: f64,
    cycles: CycleMeans,
    perron: PerronOptions,
    options: SpectrumOptions,
}

impl BetaFunction {
    pub fn new(f: &Potential) -> Result<Self> {
        BetaFunction::with_options(f, SpectrumOptions::default())
    }

    pub fn with_options(f: &Potential, options: SpectrumOptions) -> Result<Self> {
        let potential = f.reduce(DEFAULT_WORD_CAP)?.potential;
        let family = potential.edge_family()?;
        let perron_opts = PerronOptions::default();
        let pressure = family.log_root(1.0, &perron_opts)?;
        let topological_entropy =
            perron(&PositiveMatrix::adjacency(potential.base()), &perron_opts)?
                .root
                .ln();
        let cycles = cycle_mean_extremes(potential.base(), &potential.edge_table()?);
        Ok(BetaFunction {
            potential,
            family,
            pressure,
            topological_entropy,
            cycles,
            perron: perron_opts,
            options,
        })
    }

    /// The order-2 potential the function was built from.
    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    pub fn topological_entropy(&self) -> f64 {
        self.topological_entropy
    }

    pub fn options(&self) -> &SpectrumOptions {
        &self.options
    }

    /// `P(σ, q f)`.
    pub fn pressure_at(&self, q: f64) -> Result<f64> {
        self.family.log_root(q, &self.perron)
    }

    pub fn beta(&self, q: f64) -> Result<f64> {
        Ok(self.pressure_at(q)? - q * self.pressure)
    }

    /// `α(q) = −β′(q) = P(σ, f) − d/dq P(σ, q f)`.
    pub fn alpha(&self, q: f64) -> Result<f64> {
        Ok(self.pressure - self.family.log_root_derivative(q, &self.perron)?)
    }

    /// `α(q)` as `Σ π_i P_ij (P(σ, f) − f_ij)` under the Gibbs measure of `q f`.
    pub fn alpha_by_measure(&self, q: f64) -> Result<f64> {
        let gibbs = self.gibbs_at(q)?;
        let table = self.potential.edge_table()?;
        let deficit: Vec<f64> = table.iter().map(|f| self.pressure - f).collect();
        Ok(gibbs.measure().integrate_edges(&deficit))
    }

    /// `β″(q)` by a central difference of `α`.
    pub fn beta_second(&self, q: f64) -> Result<f64> {
        let h = 1e-4 * q.abs().max(1.0);
        Ok(-(self.alpha(q + h)? - self.alpha(q - h)?) / (2.0 * h))
    }

    /// Perron and Gibbs data of `q f`.
    pub fn gibbs_at(&self, q: f64) -> Result<GibbsState> {
        GibbsState::new(&self.potential.scaled(q))
    }

    pub fn cycle_means(&self) -> &CycleMeans {
        &self.cycles
    }

    /// `α_min = P − max cycle mean`, `α_max = P − min cycle mean`.
    pub fn alpha_range(&self) -> AlphaRange {
        AlphaRange {
            min: self.pressure - self.cycles.max,
            max: self.pressure - self.cycles.min,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        let r = self.alpha_range();
        r.max - r.min <= self.options.degeneracy_tol
    }

    /// `E(α) = inf_q (β(q) + qα)`.
    pub fn entropy_spectrum(&self, alpha: f64) -> Result<SpectrumValue> {
        let range = self.alpha_range();
        let tol = self.options.degeneracy_tol;
        let point = |value, q, flags| SpectrumValue {
            alpha,
            value,
            q,
            flags,
        };

        if self.is_degenerate() {
            let on = (alpha - range.min).abs() <= tol;
            let value = if on { self.topological_entropy } else { 0.0 };
            let flags = SpectrumFlags {
                degenerate: true,
                outside_range: !on,
                ..SpectrumFlags::default()
            };
            return Ok(point(value, on.then_some(0.0), flags));
        }
        if alpha < range.min - tol || alpha > range.max + tol {
            let flags = SpectrumFlags {
                outside_range: true,
                ..SpectrumFlags::default()
            };
            return Ok(point(0.0, None, flags));
        }

        let at_min = (alpha - range.min).abs() <= tol;
        let at_max = (alpha - range.max).abs() <= tol;
        if at_min || at_max {
            // The infimum is approached as q → ±∞; report the value at the cap
            // and how far it moved since half the cap.
            let q = if at_min {
                self.options.q_cap
            } else {
                -self.options.q_cap
            };
            let far = self.beta(q)? + q * alpha;
            let near = self.beta(q / 2.0)? + q / 2.0 * alpha;
            let flags = SpectrumFlags {
                endpoint_extrapolated: true,
                extrapolation_gap: (far - near).abs(),
                ..SpectrumFlags::default()
            };
            return Ok(point(far.max(0.0), Some(q), flags));
        }

        let q = self.solve_alpha(alpha)?;
        Ok(point(
            self.beta(q)? + q * alpha,
            Some(q),
            SpectrumFlags::default(),
        ))
    }

    /// Finds `q` with `α(q) = target` by bracketing bisection and Newton.
    pub fn solve_alpha(&self, target: f64) -> Result<f64> {
        let cap = self.options.q_cap;
        let fail = |detail: String| Error::SolverFailure {
            alpha: target,
            detail,
        };

        // α is decreasing: α(lo) ≥ target ≥ α(hi).
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while self.alpha(hi)? > target {
            lo = hi;
            hi *= 2.0;
            if hi > cap {
                return Err(fail(format!("α({cap}) still exceeds the target")));
            }
        }
        while self.alpha(lo)? < target {
            hi = lo;
            lo *= 2.0;
            if lo < -cap {
                return Err(fail(format!("α(−{cap}) still below the target")));
            }
        }
        while hi - lo > self.options.bracket_width {
            let mid = 0.5 * (lo + hi);
            if self.alpha(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }

        let mut q = 0.5 * (lo + hi);
        for _ in 0..50 {
            let residual = self.alpha(q)? - target;
            if residual == 0.0 {
                break;
            }
            // α′ = −β″.
            let slope = -self.beta_second(q)?;
            let mut next = q - residual / slope;
            if !next.is_finite() || next <= lo || next >= hi {
                next = 0.5 * (lo + hi);
            }
            if residual > 0.0 {
                lo = lo.max(q);
            } else {
                hi = hi.min(q);
            }
            let step = (next - q).abs();
            q = next;
            if step <= self.options.newton_tol * q.abs().max(1.0) {
                break;
            }
        }
        Ok(q)
    }

    /// Samples `(q, α(q), β(q), E(α(q)))` on a sorted grid.
    pub fn sample(&self, grid: &[f64]) -> Result<SpectrumCurve> {
        if grid.windows(2).any(|p| p[0] > p[1]) {
            return Err(Error::Precondition("q grid must be sorted".into()));
        }
        let degenerate = self.is_degenerate();
        let samples = grid
            .par_iter()
            .map(|&q| {
                let alpha = self.alpha(q)?;
                let beta = self.beta(q)?;
                let entropy = beta + q * alpha;
                let entropy_rate = self.gibbs_at(q)?.measure().entropy_rate();
                Ok(SpectrumSample {
                    q,
                    alpha,
                    beta,
                    entropy,
                    entropy_rate,
                    crosscheck_failed: (entropy - entropy_rate).abs() > self.options.crosscheck_tol,
                    degenerate,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let range = self.alpha_range();
        Ok(SpectrumCurve {
            samples,
            alpha_min: range.min,
            alpha_max: range.max,
            degenerate,
            topological_entropy: self.topological_entropy,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpectrumFlags {
    pub degenerate: bool,
    pub outside_range: bool,
    /// Value is the limit at an endpoint of the α-range, evaluated at `±q_cap`.
    pub endpoint_extrapolated: bool,
    /// `|g(q_cap) − g(q_cap/2)|` for endpoint limits.
    pub extrapolation_gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumValue {
    pub alpha: f64,
    pub value: f64,
    /// The minimizing `q`, when one was used.
    pub q: Option<f64>,
    pub flags: SpectrumFlags,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumSample {
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `E(α(q)) = β(q) + q α(q)`.
    pub entropy: f64,
    /// `h(μ_{qf})`, which must agree with `entropy`.
    pub entropy_rate: f64,
    pub crosscheck_failed: bool,
    pub degenerate: bool,
}

impl SpectrumSample {
    /// Semicolon-separated flag names, empty when none apply.
    pub fn flags(&self) -> String {
        let mut flags = Vec::new();
        if self.degenerate {
            flags.push("degenerate");
        }
        if self.crosscheck_failed {
            flags.push("crosscheck_failed");
        }
        flags.join(";")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumCurve {
    pub samples: Vec<SpectrumSample>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub degenerate: bool,
    pub topological_entropy: f64,
}

impl SpectrumCurve {
    /// The sample with the largest spectrum value.
    pub fn peak(&self) -> Option<&SpectrumSample> {
        self.samples
            .iter()
            .max_by(|a, b| a.entropy.total_cmp(&b.entropy))
    }
}

pub fn beta(f: &Potential, q: f64) -> Result<f64> {
    BetaFunction::new(f)?.beta(q)
}

pub fn alpha(f: &Potential, q: f64) -> Result<f64> {
    BetaFunction::new(f)?.alpha(q)
}

pub fn alpha_range(f: &Potential) -> Result<AlphaRange> {
    Ok(BetaFunction::new(f)?.alpha_range())
}

pub fn entropy_spectrum(f: &Potential, alpha: f64) -> Result<SpectrumValue> {
    BetaFunction::new(f)?.entropy_spectrum(alpha)
}

pub fn sample_spectrum(f: &Potential, grid: &[f64]) -> Result<SpectrumCurve> {
    BetaFunction::new(f)?.sample(grid)
}

/// Why two spectra were declared different.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Witness {
    /// First grid point where `|β_f(q) − β_g(q)|` exceeds the tolerance.
    Beta { q: f64, gap: f64 },
    /// The β values agree on the grid but an endpoint of the α-range differs.
    AlphaRange {
        alpha_min_gap: f64,
        alpha_max_gap: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectraComparison {
    Equal { max_gap: f64 },
    Distinct(Witness),
}

impl SpectraComparison {
    pub fn is_equal(&self) -> bool {
        matches!(self, SpectraComparison::Equal { .. })
    }
}

/// Tolerance-based comparison of two entropy spectra through their β
/// functions on a grid and their exact α-ranges. Equality here is a
/// numerical verdict at `tol`, not a proof.
pub fn spectra_equal(
    f: &Potential,
    g: &Potential,
    grid: &[f64],
    tol: f64,
) -> Result<SpectraComparison> {
    let (bf, bg) = (BetaFunction::new(f)?, BetaFunction::new(g)?);
    let gaps = grid
        .par_iter()
        .map(|&q| Ok((q, (bf.beta(q)? - bg.beta(q)?).abs())))
        .collect::<Result<Vec<_>>>()?;
    if let Some(&(q, gap)) = gaps.iter().find(|(_, gap)| *gap > tol) {
        return Ok(SpectraComparison::Distinct(Witness::Beta { q, gap }));
    }
    let (rf, rg) = (bf.alpha_range(), bg.alpha_range());
    let (alpha_min_gap, alpha_max_gap) = ((rf.min - rg.min).abs(), (rf.max - rg.max).abs());
    if alpha_min_gap > tol || alpha_max_gap > tol {
        return Ok(SpectraComparison::Distinct(Witness::AlphaRange {
            alpha_min_gap,
            alpha_max_gap,
        }));
    }
    Ok(SpectraComparison::Equal {
        max_gap: gaps.iter().map(|(_, g)| *g).fold(0.0, f64::max),
    })
}
