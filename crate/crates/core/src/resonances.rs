//! The predicted resonance multiset of a linear pseudo-Anosov map, in all
//! orientation-sign variants, plus extended-space additions and closed-form
//! resonance sums for the trace identity.
//!
//! For orientable foliations with signs `ε_h, ε_v` the spectrum is `{1}`
//! together with `ε_h^k ε_v^ℓ λ^{−k−ℓ} μ_i` over `k ≥ 1, ℓ ≥ 0` and the
//! homological eigenvalues `μ_i`; when the two signs agree this collapses to
//! `λ^{−n} μ_i` with multiplicity `n`. Coinciding values add their
//! multiplicities. In the non-orientable case the same twisted family splits
//! by the parity of `k + ℓ` between the invariant (`μ⁺`) and anti-invariant
//! (`μ⁻`) eigenvalue lists; that variant is pure arithmetic on user-supplied
//! data, no double cover is synthesized here.

use num::complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ResonanceError {
    #[error("eigenvalue modulus {0} outside the open window (1/lambda, lambda)")]
    PremiseViolation(f64),
    #[error("certified tail bound {bound} exceeds requested tolerance {tol}")]
    TailBoundTooLarge { bound: f64, tol: f64 },
}

/// Where a resonance entry came from: input eigenvalue index and the twist
/// exponents, or an extended-space singularity orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Provenance {
    /// The constant-functions resonance at 1.
    One,
    /// (eigenvalue index, k, l) for ε_h^k ε_v^ℓ λ^{−k−ℓ} μ_i.
    Twist(usize, u32, u32),
    /// (cycle index, j, root index): e^{2πi·r/p} λ^{−j} from a singularity
    /// orbit of length p.
    Extended(usize, u32, u32),
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceEntry {
    pub value_re: f64,
    pub value_im: f64,
    pub multiplicity: usize,
    pub provenance: Vec<Provenance>,
}

impl ResonanceEntry {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }
}

/// Finite resonance multiset above a modulus cutoff.
#[derive(Clone, Debug, Serialize)]
pub struct ResonanceSpectrum {
    pub entries: Vec<ResonanceEntry>,
    pub cutoff: f64,
    pub lambda: f64,
    pub eps_h: i8,
    pub eps_v: i8,
    pub orientable_foliations: bool,
    pub extended: bool,
    pub sigma_cycles: Vec<usize>,
    /// Human-readable notes for numerically merged coincidences.
    pub merge_notes: Vec<String>,
}

impl ResonanceSpectrum {
    pub fn total_multiplicity(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    pub fn multiplicity_at(&self, z: Complex64, tol: f64) -> usize {
        self.entries
            .iter()
            .filter(|e| (e.value() - z).norm() <= tol)
            .map(|e| e.multiplicity)
            .sum()
    }

    /// Entries whose modulus is within `tol` of `r`.
    pub fn entries_of_modulus(&self, r: f64, tol: f64) -> Vec<&ResonanceEntry> {
        self.entries
            .iter()
            .filter(|e| (e.value().norm() - r).abs() <= tol)
            .collect()
    }
}

/// Relative merge tolerance for coinciding resonance values.
const MERGE_TOL: f64 = 1e-10;

fn values_coincide(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= MERGE_TOL * a.norm().max(b.norm()).max(1e-300)
}

fn check_premise(lambda: f64, mu: &[(Complex64, usize)]) -> Result<(), ResonanceError> {
    for (z, _) in mu {
        let r = z.norm();
        if r <= 1.0 / lambda || r >= lambda {
            return Err(ResonanceError::PremiseViolation(r));
        }
    }
    Ok(())
}

fn merge(
    raw: Vec<(Complex64, usize, Provenance)>,
    cutoff: f64,
) -> (Vec<ResonanceEntry>, Vec<String>) {
    let mut entries: Vec<ResonanceEntry> = Vec::new();
    let mut notes = Vec::new();
    for (z, mult, prov) in raw {
        if z.norm() < cutoff {
            continue;
        }
        match entries.iter_mut().find(|e| values_coincide(e.value(), z)) {
            Some(e) => {
                if !e.provenance.contains(&prov) {
                    if e.provenance.len() == 1 {
                        notes.push(format!(
                            "superposition at ({:.12}, {:.12})",
                            e.value_re, e.value_im
                        ));
                    }
                    e.provenance.push(prov);
                }
                e.multiplicity += mult;
            }
            None => entries.push(ResonanceEntry {
                value_re: z.re,
                value_im: z.im,
                multiplicity: mult,
                provenance: vec![prov],
            }),
        }
    }
    entries.sort_by(|a, b| {
        let na = a.value().norm();
        let nb = b.value().norm();
        nb.partial_cmp(&na)
            .unwrap()
            .then(a.value_re.partial_cmp(&b.value_re).unwrap())
            .then(a.value_im.partial_cmp(&b.value_im).unwrap())
    });
    (entries, notes)
}

fn sign_pow(eps: i8, k: u32) -> f64 {
    if eps == 1 || k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ParityFilter {
    All,
    Even,
    Odd,
}

fn twisted_family(
    mu: &[(Complex64, usize)],
    lambda: f64,
    eps_h: i8,
    eps_v: i8,
    cutoff: f64,
    parity: ParityFilter,
    out: &mut Vec<(Complex64, usize, Provenance)>,
) {
    for (i, (m, d)) in mu.iter().enumerate() {
        let r = m.norm();
        // λ^{-(k+l)} r ≥ cutoff bounds k+l
        let n_max = (r / cutoff).ln() / lambda.ln();
        if n_max < 1.0 {
            continue;
        }
        let n_max = n_max.floor() as u32;
        for n in 1..=n_max {
            let keep = match parity {
                ParityFilter::All => true,
                ParityFilter::Even => n % 2 == 0,
                ParityFilter::Odd => n % 2 == 1,
            };
            if !keep {
                continue;
            }
            for k in 1..=n {
                let l = n - k;
                let scale = sign_pow(eps_h, k) * sign_pow(eps_v, l) * lambda.powi(-(n as i32));
                out.push((m * scale, *d, Provenance::Twist(i, k, l)));
            }
        }
    }
}

/// Resonance multiset for orientable foliations: `{1}` plus all sign-twisted
/// contractions of the homological eigenvalues, merged above `cutoff`.
pub fn enumerate_spectrum(
    xi: &[(Complex64, usize)],
    lambda: f64,
    eps_h: i8,
    eps_v: i8,
    cutoff: f64,
) -> Result<ResonanceSpectrum, ResonanceError> {
    assert!(cutoff > 0.0 && cutoff < 1.0, "cutoff must lie in (0,1)");
    check_premise(lambda, xi)?;
    let mut raw = vec![(Complex64::new(1.0, 0.0), 1usize, Provenance::One)];
    twisted_family(xi, lambda, eps_h, eps_v, cutoff, ParityFilter::All, &mut raw);
    let (entries, merge_notes) = merge(raw, cutoff);
    Ok(ResonanceSpectrum {
        entries,
        cutoff,
        lambda,
        eps_h,
        eps_v,
        orientable_foliations: true,
        extended: false,
        sigma_cycles: vec![],
        merge_notes,
    })
}

/// Non-orientable foliations: even-parity twists of the invariant
/// eigenvalues `μ⁺`, odd-parity twists of the anti-invariant `μ⁻`.
/// The inputs are user data; the output is invariant under the simultaneous
/// flip `(ε_h, ε_v, μ⁻) → (−ε_h, −ε_v, −μ⁻)` (lift independence).
pub fn enumerate_spectrum_nonorientable(
    mu_plus: &[(Complex64, usize)],
    mu_minus: &[(Complex64, usize)],
    lambda: f64,
    eps_h: i8,
    eps_v: i8,
    cutoff: f64,
) -> Result<ResonanceSpectrum, ResonanceError> {
    assert!(cutoff > 0.0 && cutoff < 1.0, "cutoff must lie in (0,1)");
    check_premise(lambda, mu_plus)?;
    check_premise(lambda, mu_minus)?;
    let mut raw = vec![(Complex64::new(1.0, 0.0), 1usize, Provenance::One)];
    twisted_family(
        mu_plus,
        lambda,
        eps_h,
        eps_v,
        cutoff,
        ParityFilter::Even,
        &mut raw,
    );
    let mut odd = Vec::new();
    twisted_family(
        mu_minus,
        lambda,
        eps_h,
        eps_v,
        cutoff,
        ParityFilter::Odd,
        &mut odd,
    );
    // provenance indices of the μ⁻ family continue past the μ⁺ ones
    let offset = mu_plus.len();
    for (z, d, p) in odd {
        let p = match p {
            Provenance::Twist(i, k, l) => Provenance::Twist(i + offset, k, l),
            other => other,
        };
        raw.push((z, d, p));
    }
    let (entries, merge_notes) = merge(raw, cutoff);
    Ok(ResonanceSpectrum {
        entries,
        cutoff,
        lambda,
        eps_h,
        eps_v,
        orientable_foliations: false,
        extended: false,
        sigma_cycles: vec![],
        merge_notes,
    })
}

/// Extended-space additions: for each `j ≥ 1` and each singularity orbit of
/// length `p`, the values `e^{2πi·r/p} λ^{−j}` (r = 0..p−1), each with
/// multiplicity `j`. This contributes `j·|Σ|` eigenvalues of modulus `λ^{−j}`
/// counted with multiplicity.
pub fn extended_additions(
    spec: &ResonanceSpectrum,
    sigma_cycles: &[usize],
    j_max: u32,
) -> ResonanceSpectrum {
    assert!(spec.orientable_foliations && !spec.extended);
    let lambda = spec.lambda;
    let mut raw: Vec<(Complex64, usize, Provenance)> = spec
        .entries
        .iter()
        .map(|e| (e.value(), e.multiplicity, e.provenance[0]))
        .collect();
    for (ci, &p) in sigma_cycles.iter().enumerate() {
        for j in 1..=j_max {
            let modulus = lambda.powi(-(j as i32));
            if modulus < spec.cutoff {
                break;
            }
            for r in 0..p {
                let angle = 2.0 * std::f64::consts::PI * r as f64 / p as f64;
                let z = Complex64::from_polar(modulus, angle);
                raw.push((z, j as usize, Provenance::Extended(ci, j, r as u32)));
            }
        }
    }
    let (entries, merge_notes) = merge(raw, spec.cutoff);
    ResonanceSpectrum {
        entries,
        cutoff: spec.cutoff,
        lambda,
        eps_h: spec.eps_h,
        eps_v: spec.eps_v,
        orientable_foliations: true,
        extended: true,
        sigma_cycles: sigma_cycles.to_vec(),
        merge_notes,
    }
}

/// Truncated Σ d_α αⁿ over the spectrum, with a certified geometric bound on
/// the discarded tail.
pub fn resonance_sum(
    spec: &ResonanceSpectrum,
    xi: &[(Complex64, usize)],
    n: u32,
) -> (Complex64, f64) {
    let mut acc = Complex64::new(0.0, 0.0);
    for e in &spec.entries {
        acc += e.value().powu(n) * e.multiplicity as f64;
    }
    // The enumeration is complete through twist order K(μ) = ⌊log(|μ|/cutoff)/log λ⌋;
    // the discarded tail Σ_{m>K} m λ^{-mn} |μ|^n is geometric.
    let mut tail = 0.0;
    let x = spec.lambda.powi(-(n as i32));
    for (m, d) in xi {
        let r = m.norm();
        let k = ((r / spec.cutoff).ln() / spec.lambda.ln()).floor().max(0.0) as i32;
        // Σ_{m > K} m x^m = x^{K+1} ((K+1)(1-x) + x) / (1-x)^2
        let xk = x.powi(k + 1);
        let s = xk * ((k as f64 + 1.0) * (1.0 - x) + x) / ((1.0 - x) * (1.0 - x));
        tail += *d as f64 * r.powi(n as i32) * s;
    }
    (acc, tail)
}

/// Closed form Σ d_α αⁿ =
/// (1 + (ε_h ε_v)ⁿ − (ε_hⁿ λⁿ + ε_vⁿ λ⁻ⁿ + Σ μ_iⁿ)) / ((1 − ε_hⁿ λⁿ)(1 − ε_vⁿ λ⁻ⁿ)).
/// When ε_h = ε_v the numerator is the familiar 2 − (λⁿ + λ⁻ⁿ + Σ μ_iⁿ).
pub fn closed_form_sum(
    xi: &[(Complex64, usize)],
    lambda: f64,
    eps_h: i8,
    eps_v: i8,
    n: u32,
) -> Complex64 {
    let eh = sign_pow(eps_h, n);
    let ev = sign_pow(eps_v, n);
    let ln_ = lambda.powi(n as i32);
    let mut mu_sum = Complex64::new(0.0, 0.0);
    for (m, d) in xi {
        mu_sum += m.powu(n) * *d as f64;
    }
    let numer = Complex64::new(1.0 + eh * ev - (eh * ln_ + ev / ln_), 0.0) - mu_sum;
    let denom = (1.0 - eh * ln_) * (1.0 - ev / ln_);
    numer / denom
}

/// Cutoff small enough that the certified tail bound at power `n` stays
/// below `tol` for the given eigenvalue list.
pub fn cutoff_for_tail(xi: &[(Complex64, usize)], lambda: f64, n: u32, tol: f64) -> f64 {
    let mut cutoff = 1e-2;
    for _ in 0..60 {
        let spec = enumerate_spectrum(xi, lambda, 1, 1, cutoff).expect("premise checked upstream");
        let (_, tail) = resonance_sum(&spec, xi, n);
        if tail < tol {
            return cutoff;
        }
        cutoff *= 0.5;
    }
    cutoff
}

/// Leading-order dimension counts for the flow-invariant distributions of
/// order ≥ −N: slope `2g−2+|Σ|` unrestricted (constants, the homological
/// families, the singularity classes and their derivatives), slope `2g−2`
/// when restricted to the closure of smooth functions.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct InvariantDistributionGrowth {
    pub slope: usize,
    /// exact low-order terms: constants plus, unrestricted, the |Σ|−1
    /// differences of singularity classes
    pub offset: usize,
    pub restricted: bool,
}

impl InvariantDistributionGrowth {
    pub fn dimension_estimate(&self, n_order: usize) -> usize {
        self.slope * n_order + self.offset
    }
}

pub fn invariant_distribution_dimension(
    genus: usize,
    card_sigma: usize,
    restricted: bool,
) -> InvariantDistributionGrowth {
    assert!(genus >= 1);
    let base = 2 * genus - 2;
    if restricted {
        InvariantDistributionGrowth {
            slope: base,
            offset: 1,
            restricted: true,
        }
    } else {
        InvariantDistributionGrowth {
            slope: base + card_sigma,
            offset: 1 + card_sigma.saturating_sub(1),
            restricted: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const LAMBDA: f64 = 5.828427124746190; // 3 + 2√2

    #[test]
    fn torus_spectrum_is_trivial() {
        for cutoff in [1e-3, 1e-6, 1e-12] {
            let spec = enumerate_spectrum(&[], 2.618033988749895, 1, 1, cutoff).unwrap();
            assert_eq!(spec.entries.len(), 1);
            assert_eq!(spec.entries[0].value(), c(1.0, 0.0));
            assert_eq!(spec.entries[0].multiplicity, 1);
        }
    }

    #[test]
    fn single_eigenvalue_multiplicity_ladder() {
        let mu = c(2.0, 0.0);
        let cutoff = 2.0 * LAMBDA.powi(-3) * 0.99;
        let spec = enumerate_spectrum(&[(mu, 1)], LAMBDA, 1, 1, cutoff).unwrap();
        // entries: 1, λ^{-1}μ (mult 1), λ^{-2}μ (mult 2), λ^{-3}μ (mult 3)
        assert_eq!(spec.total_multiplicity(), 1 + 1 + 2 + 3);
        for n in 1..=3 {
            let z = mu * LAMBDA.powi(-n);
            assert_eq!(spec.multiplicity_at(z, 1e-12), n as usize);
        }
    }

    #[test]
    fn superposition_adds_multiplicities() {
        // Ξ = {μ, λ^{-1}μ}: at λ^{-2}μ the multiplicities 2 and 1 add up.
        let mu = c(2.0, 0.0);
        let mu2 = mu / LAMBDA;
        let cutoff = 2.0 * LAMBDA.powi(-4);
        let spec = enumerate_spectrum(&[(mu, 1), (mu2, 1)], LAMBDA, 1, 1, cutoff).unwrap();
        assert_eq!(spec.multiplicity_at(mu * LAMBDA.powi(-2), 1e-10), 3);
        assert!(!spec.merge_notes.is_empty());
    }

    #[test]
    fn resonance_one_is_simple() {
        let spec = enumerate_spectrum(&[(c(2.0, 0.0), 1)], LAMBDA, 1, 1, 1e-6).unwrap();
        assert_eq!(spec.multiplicity_at(c(1.0, 0.0), 1e-12), 1);
    }

    #[test]
    fn closed_form_torus_equals_one() {
        for n in 1..=8 {
            let s = closed_form_sum(&[], 2.618033988749895, 1, 1, n);
            assert!((s - c(1.0, 0.0)).norm() < 1e-12, "n={n}: {s}");
            let s = closed_form_sum(&[], 2.618033988749895, -1, -1, n);
            assert!((s - c(1.0, 0.0)).norm() < 1e-12, "eps=-1, n={n}: {s}");
        }
    }

    #[test]
    fn closed_form_single_mu_display() {
        // n = 1, ε = +1: 1 − μ/((1−λ)(1−λ^{-1}))
        let mu = c(2.0, 0.0);
        let got = closed_form_sum(&[(mu, 1)], LAMBDA, 1, 1, 1);
        let expect = 1.0 - mu / ((1.0 - LAMBDA) * (1.0 - 1.0 / LAMBDA));
        assert!((got - expect).norm() < 1e-12);
    }

    #[test]
    fn truncated_matches_closed_form_within_tail() {
        let xi = [
            (c(2.618033988749895, 0.0), 1),
            (c(0.3819660112501051, 0.0), 1),
        ];
        for n in 1..=8 {
            let cutoff = cutoff_for_tail(&xi, LAMBDA, n, 1e-10);
            let spec = enumerate_spectrum(&xi, LAMBDA, 1, 1, cutoff).unwrap();
            let (trunc, tail) = resonance_sum(&spec, &xi, n);
            let closed = closed_form_sum(&xi, LAMBDA, 1, 1, n);
            assert!(
                (trunc - closed).norm() <= tail + 1e-9,
                "n={n}: |{trunc} - {closed}| > {tail}"
            );
        }
    }

    #[test]
    fn premise_violation_rejected() {
        let bad = [(c(LAMBDA * 1.1, 0.0), 1)];
        assert!(matches!(
            enumerate_spectrum(&bad, LAMBDA, 1, 1, 1e-3),
            Err(ResonanceError::PremiseViolation(_))
        ));
    }

    #[test]
    fn nonorientable_leading_entry_odd_parity() {
        // single μ⁻: leading entry λ^{-1}μ⁻ with multiplicity 1 (k=1, l=0)
        let mu_minus = [(c(1.5, 0.0), 1)];
        let spec = enumerate_spectrum_nonorientable(&[], &mu_minus, LAMBDA, 1, 1, 1e-4).unwrap();
        let lead = &spec.entries[1]; // sorted by modulus; entry 0 is 1
        assert!((lead.value() - c(1.5 / LAMBDA, 0.0)).norm() < 1e-12);
        assert_eq!(lead.multiplicity, 1);
        // k+l = 2 is even: nothing of the odd family at λ^{-2}μ⁻
        assert_eq!(
            spec.multiplicity_at(c(1.5 / LAMBDA / LAMBDA, 0.0), 1e-12),
            0
        );
    }

    #[test]
    fn nonorientable_lift_flip_invariance() {
        let mu_plus = [(c(1.2, 0.8), 1), (c(1.2, -0.8), 1)];
        let mu_minus = [(c(-1.7, 0.0), 1), (c(0.9, 0.4), 1), (c(0.9, -0.4), 1)];
        let a =
            enumerate_spectrum_nonorientable(&mu_plus, &mu_minus, LAMBDA, 1, -1, 1e-4).unwrap();
        let flipped: Vec<(Complex64, usize)> = mu_minus.iter().map(|(z, d)| (-z, *d)).collect();
        let b =
            enumerate_spectrum_nonorientable(&mu_plus, &flipped, LAMBDA, -1, 1, 1e-4).unwrap();
        assert_eq!(a.entries.len(), b.entries.len());
        for (ea, eb) in a.entries.iter().zip(&b.entries) {
            assert!((ea.value() - eb.value()).norm() < 1e-10);
            assert_eq!(ea.multiplicity, eb.multiplicity);
        }
    }

    #[test]
    fn nonorientable_even_family_subset_of_orientable() {
        let xi = [(c(2.0, 0.0), 1)];
        let all = enumerate_spectrum(&xi, LAMBDA, 1, 1, 1e-5).unwrap();
        let even = enumerate_spectrum_nonorientable(&xi, &[], LAMBDA, 1, 1, 1e-5).unwrap();
        for e in &even.entries {
            assert!(all.multiplicity_at(e.value(), 1e-12) >= e.multiplicity);
        }
        assert!(even.total_multiplicity() < all.total_multiplicity());
    }

    #[test]
    fn extended_counts_per_modulus() {
        let base = enumerate_spectrum(&[], LAMBDA, 1, 1, 1e-6).unwrap();
        // one fixed singularity: adds λ^{-j} with multiplicity j
        let ext = extended_additions(&base, &[1], 3);
        for j in 1..=3 {
            let r = LAMBDA.powi(-j);
            let total: usize = ext
                .entries_of_modulus(r, 1e-12)
                .iter()
                .map(|e| e.multiplicity)
                .sum();
            assert_eq!(total, j as usize, "j={j}");
        }
        // cycle of length 2: ±λ^{-1} each with multiplicity 1
        let ext = extended_additions(&base, &[2], 1);
        let r = 1.0 / LAMBDA;
        assert_eq!(ext.multiplicity_at(c(r, 0.0), 1e-12), 1);
        assert_eq!(ext.multiplicity_at(c(-r, 0.0), 1e-12), 1);
    }

    #[test]
    fn growth_slopes() {
        let g1 = invariant_distribution_dimension(1, 0, false);
        assert_eq!(g1.slope, 0);
        assert_eq!(g1.dimension_estimate(10), 1); // torus: only constants
        let unres = invariant_distribution_dimension(2, 1, false);
        let res = invariant_distribution_dimension(2, 1, true);
        assert_eq!(unres.slope, 3);
        assert_eq!(res.slope, 2);
        assert_eq!(unres.slope - res.slope, 1); // difference = |Σ|
    }
}
