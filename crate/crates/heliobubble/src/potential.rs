//! Defect-helium pair potentials V_S, V_Pσ, V_Pπ.
//!
//! Radii are in bohr and energies in hartree. Analytic Morse and
//! Lennard-Jones forms are provided for model work, plus a tabulated form
//! (cubic-spline interpolation) so externally computed curves can be dropped
//! in. No extrapolation below the first tabulated node: the repulsive core
//! dominates every integral, and guessing it silently is the classic way to
//! get plausible nonsense.

use num_traits::Float;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("pair potential requires r > 0, got {0}")]
    NonPositiveRadius(f64),
    #[error("r = {r} is below the first tabulated node {first}; no core extrapolation")]
    BelowTabulatedRange { r: f64, first: f64 },
    #[error("tabulated potential needs at least 4 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("tabulated radii must be strictly increasing: node {index} ({r}) does not exceed its predecessor")]
    NonMonotoneNodes { index: usize, r: f64 },
    #[error("non-finite node value at index {0}")]
    NonFiniteNode(usize),
    #[error("invalid potential parameter: {0}")]
    BadParameter(String),
    #[error("cannot read potential file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected two numeric columns, got {content:?}")]
    Parse { line: usize, content: String },
    #[error("line {line}: radius {r} repeats or decreases")]
    NonMonotoneLine { line: usize, r: f64 },
}

fn c<F: Float>(x: f64) -> F {
    F::from(x).unwrap()
}

/// Tabulated curve with not-a-knot cubic-spline interpolation. The spline
/// passes exactly through every node and is C² inside the tabulated range;
/// not-a-knot end conditions keep O(h⁴) accuracy up to the edges (a natural
/// spline would degrade to O(h²) there).
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCurve<F = crate::Real> {
    r: Vec<F>,
    v: Vec<F>,
    second: Vec<F>,
}

impl<F: Float> TabulatedCurve<F> {
    pub fn new(nodes: &[(F, F)]) -> Result<Self, PotentialError> {
        let n = nodes.len();
        if n < 4 {
            return Err(PotentialError::TooFewNodes(n));
        }
        for (i, &(r, v)) in nodes.iter().enumerate() {
            if !r.is_finite() || !v.is_finite() {
                return Err(PotentialError::NonFiniteNode(i));
            }
            if i > 0 && r <= nodes[i - 1].0 {
                return Err(PotentialError::NonMonotoneNodes {
                    index: i,
                    r: r.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        if nodes[0].0 <= F::zero() {
            return Err(PotentialError::BadParameter(
                "tabulated radii must be positive".into(),
            ));
        }
        let r: Vec<F> = nodes.iter().map(|&(r, _)| r).collect();
        let v: Vec<F> = nodes.iter().map(|&(_, v)| v).collect();
        let second = Self::solve_second_derivatives(&r, &v);
        Ok(Self { r, v, second })
    }

    /// Not-a-knot second derivatives M_i. The interior equations
    /// (h_{i-1}/6)M_{i-1} + ((h_{i-1}+h_i)/3)M_i + (h_i/6)M_{i+1} = d_i are
    /// closed by eliminating M_0 and M_{n-1} with the end conditions
    /// (third derivative continuous across the first and last interior
    /// node), leaving a tridiagonal system solved by the Thomas algorithm.
    fn solve_second_derivatives(r: &[F], v: &[F]) -> Vec<F> {
        let n = r.len();
        let m = n - 2; // unknowns M_1 .. M_{n-2}
        let h = |i: usize| r[i + 1] - r[i];
        let d = |i: usize| (v[i + 1] - v[i]) / h(i) - (v[i] - v[i - 1]) / h(i - 1);

        let six = c::<F>(6.0);
        let three = c::<F>(3.0);
        let mut sub = vec![F::zero(); m];
        let mut diag = vec![F::zero(); m];
        let mut sup = vec![F::zero(); m];
        let mut rhs = vec![F::zero(); m];

        for k in 0..m {
            let i = k + 1;
            sub[k] = h(i - 1) / six;
            diag[k] = (h(i - 1) + h(i)) / three;
            sup[k] = h(i) / six;
            rhs[k] = d(i);
        }
        // fold M_0 = ((h0+h1)M_1 - h0 M_2)/h1 into the first row
        let (h0, h1) = (h(0), h(1));
        diag[0] = (h0 + h1) * (h0 + h1 + h1) / (six * h1);
        sup[0] = (h1 * h1 - h0 * h0) / (six * h1);
        // fold M_{n-1} = ((h_{n-2}+h_{n-3})M_{n-2} - h_{n-2} M_{n-3})/h_{n-3}
        let (hl, hp) = (h(n - 2), h(n - 3));
        diag[m - 1] = (hl + hp) * (hl + hp + hp) / (six * hp);
        sub[m - 1] = (hp * hp - hl * hl) / (six * hp);

        // Thomas sweep
        for k in 1..m {
            let w = sub[k] / diag[k - 1];
            diag[k] = diag[k] - w * sup[k - 1];
            rhs[k] = rhs[k] - w * rhs[k - 1];
        }
        let mut interior = vec![F::zero(); m];
        interior[m - 1] = rhs[m - 1] / diag[m - 1];
        for k in (0..m - 1).rev() {
            interior[k] = (rhs[k] - sup[k] * interior[k + 1]) / diag[k];
        }

        let mut second = vec![F::zero(); n];
        second[1..=m].copy_from_slice(&interior);
        second[0] = ((h0 + h1) * interior[0] - h0 * interior[1]) / h1;
        second[n - 1] = ((hl + hp) * interior[m - 1] - hl * interior[m - 2]) / hp;
        second
    }

    pub fn first_node(&self) -> F {
        self.r[0]
    }

    pub fn last_node(&self) -> F {
        *self.r.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn interpolate(&self, x: F) -> F {
        // caller guarantees first_node <= x < last_node
        let i = self.r.partition_point(|&node| node <= x) - 1;
        let h = self.r[i + 1] - self.r[i];
        let a = self.r[i + 1] - x;
        let b = x - self.r[i];
        let six = c::<F>(6.0);
        (self.second[i] * a * a * a + self.second[i + 1] * b * b * b) / (six * h)
            + (self.v[i] / h - self.second[i] * h / six) * a
            + (self.v[i + 1] / h - self.second[i + 1] * h / six) * b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialForm<F = crate::Real> {
    /// D_e (e^{-2a(r-r_e)} - 2 e^{-a(r-r_e)}): depth D_e at r_e.
    Morse { d_e: F, r_e: F, a: F },
    /// ε [(r_m/r)¹² - 2 (r_m/r)⁶]: depth ε at r_m.
    LennardJones { epsilon: F, r_m: F },
    Tabulated(TabulatedCurve<F>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCurve<F = crate::Real> {
    form: PotentialForm<F>,
}

impl<F: Float> PotentialCurve<F> {
    pub fn morse(d_e: F, r_e: F, a: F) -> Result<Self, PotentialError> {
        if !(d_e > F::zero()) || !(r_e > F::zero()) || !(a > F::zero()) {
            return Err(PotentialError::BadParameter(
                "Morse needs d_e > 0, r_e > 0, a > 0".into(),
            ));
        }
        Ok(Self {
            form: PotentialForm::Morse { d_e, r_e, a },
        })
    }

    pub fn lennard_jones(epsilon: F, r_m: F) -> Result<Self, PotentialError> {
        if !(epsilon > F::zero()) || !(r_m > F::zero()) {
            return Err(PotentialError::BadParameter(
                "Lennard-Jones needs epsilon > 0, r_m > 0".into(),
            ));
        }
        Ok(Self {
            form: PotentialForm::LennardJones { epsilon, r_m },
        })
    }

    pub fn tabulated(nodes: &[(F, F)]) -> Result<Self, PotentialError> {
        Ok(Self {
            form: PotentialForm::Tabulated(TabulatedCurve::new(nodes)?),
        })
    }

    pub fn form(&self) -> &PotentialForm<F> {
        &self.form
    }

    pub fn morse_parameters(&self) -> Option<(F, F, F)> {
        match self.form {
            PotentialForm::Morse { d_e, r_e, a } => Some((d_e, r_e, a)),
            _ => None,
        }
    }

    /// V(r) in hartree. Tabulated curves reject r below their first node
    /// and are taken as zero beyond their last (tables should extend until
    /// the potential is negligible).
    pub fn evaluate(&self, r: F) -> Result<F, PotentialError> {
        if !(r > F::zero()) {
            return Err(PotentialError::NonPositiveRadius(
                r.to_f64().unwrap_or(f64::NAN),
            ));
        }
        match &self.form {
            PotentialForm::Morse { d_e, r_e, a } => {
                let y = (-(*a) * (r - *r_e)).exp();
                Ok(*d_e * (y * y - c::<F>(2.0) * y))
            }
            PotentialForm::LennardJones { epsilon, r_m } => {
                let x = (*r_m / r).powi(6);
                Ok(*epsilon * (x * x - c::<F>(2.0) * x))
            }
            PotentialForm::Tabulated(t) => {
                if r < t.first_node() {
                    return Err(PotentialError::BelowTabulatedRange {
                        r: r.to_f64().unwrap_or(f64::NAN),
                        first: t.first_node().to_f64().unwrap_or(f64::NAN),
                    });
                }
                if r > t.last_node() {
                    return Ok(F::zero());
                }
                if r == t.last_node() {
                    return Ok(*t.v.last().unwrap());
                }
                Ok(t.interpolate(r))
            }
        }
    }

    /// Well depth |V_min|.
    pub fn well_depth(&self) -> F {
        match &self.form {
            PotentialForm::Morse { d_e, .. } => *d_e,
            PotentialForm::LennardJones { epsilon, .. } => *epsilon,
            PotentialForm::Tabulated(t) => t
                .v
                .iter()
                .fold(F::zero(), |acc, &v| acc.max(v.abs())),
        }
    }

    /// Location of the well minimum (deepest node for tabulated curves).
    pub fn well_radius(&self) -> F {
        match &self.form {
            PotentialForm::Morse { r_e, .. } => *r_e,
            PotentialForm::LennardJones { r_m, .. } => *r_m,
            PotentialForm::Tabulated(t) => {
                let mut best = 0;
                for i in 1..t.len() {
                    if t.v[i] < t.v[best] {
                        best = i;
                    }
                }
                t.r[best]
            }
        }
    }

    /// Radius beyond which |V| < 10⁻⁶ of the well depth.
    pub fn long_range_cutoff(&self) -> F {
        self.decay_radius(2e6)
    }

    /// Radius beyond which |V| < 10⁻¹² of the well depth; integrals
    /// truncated here lose nothing at working precision.
    pub fn negligible_beyond(&self) -> F {
        self.decay_radius(2e12)
    }

    fn decay_radius(&self, inverse_fraction: f64) -> F {
        match &self.form {
            // tail dominated by 2 D e^{-a(r-r_e)}
            PotentialForm::Morse { r_e, a, .. } => *r_e + c::<F>(inverse_fraction.ln()) / *a,
            // tail dominated by 2 ε (r_m/r)^6
            PotentialForm::LennardJones { r_m, .. } => {
                *r_m * c::<F>(inverse_fraction.powf(1.0 / 6.0))
            }
            PotentialForm::Tabulated(t) => t.last_node(),
        }
    }
}

/// The three pair potentials entering the S- and P-state interaction
/// energies. The P-state pair (σ: orbital along the interatomic axis,
/// π: perpendicular) is fine-structure unresolved.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPotentialSet<F = crate::Real> {
    pub v_s: PotentialCurve<F>,
    pub v_p_sigma: PotentialCurve<F>,
    pub v_p_pi: PotentialCurve<F>,
}

impl PairPotentialSet {
    /// Uncalibrated Morse starting template: a shallow, far-out S well
    /// (Pauli repulsion from the diffuse 3s4s cloud) and a deeper, closer
    /// P-state pair. Intended as the calibration starting point.
    pub fn morse_template() -> Self {
        Self {
            v_s: PotentialCurve::morse(1.0e-5, 17.0, 0.50).unwrap(),
            v_p_sigma: PotentialCurve::morse(4.0e-6, 12.5, 0.55).unwrap(),
            v_p_pi: PotentialCurve::morse(1.2e-4, 10.0, 0.60).unwrap(),
        }
    }

    /// Morse set calibrated so the full model reproduces the target
    /// equilibrium radii (8.34 Å / 4.85 Å at saturated vapour pressure) and
    /// the 516.48 nm zero-pressure line. Frozen output of
    /// `calibrate_model_potentials` from `morse_template`.
    pub fn calibrated_default() -> Self {
        Self {
            v_s: PotentialCurve::morse(1.0e-5, 18.735749588101207, 0.50).unwrap(),
            v_p_sigma: PotentialCurve::morse(2.4414640486233749e-5, 13.661912231785976, 0.55)
                .unwrap(),
            v_p_pi: PotentialCurve::morse(7.3243921458701253e-4, 11.161912231785976, 0.60)
                .unwrap(),
        }
    }
}

/// Load a tabulated curve from two-column text: r [Å], V [hartree], '#'
/// comments and blank lines ignored. Radii are converted to bohr.
pub fn load_tabulated(path: impl AsRef<Path>) -> Result<PotentialCurve, PotentialError> {
    let text = std::fs::read_to_string(path)?;
    parse_tabulated(&text)
}

pub fn parse_tabulated(text: &str) -> Result<PotentialCurve, PotentialError> {
    let angstrom_per_bohr = crate::units::PhysicalConstants::default().angstrom_per_bohr();
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let data = raw.split('#').next().unwrap_or("").trim();
        if data.is_empty() {
            continue;
        }
        let mut cols = data.split_whitespace();
        let (r, v) = match (cols.next(), cols.next(), cols.next()) {
            (Some(r), Some(v), None) => (r, v),
            _ => {
                return Err(PotentialError::Parse {
                    line,
                    content: raw.to_string(),
                })
            }
        };
        let (r, v): (f64, f64) = match (r.parse(), v.parse()) {
            (Ok(r), Ok(v)) => (r, v),
            _ => {
                return Err(PotentialError::Parse {
                    line,
                    content: raw.to_string(),
                })
            }
        };
        let r_bohr = r / angstrom_per_bohr;
        if let Some(&(prev, _)) = nodes.last() {
            if r_bohr <= prev {
                return Err(PotentialError::NonMonotoneLine { line, r });
            }
        }
        nodes.push((r_bohr, v));
    }
    PotentialCurve::tabulated(&nodes)
}
