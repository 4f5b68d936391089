//! Dilated entropy distance-generating function on perturbed treeplexes.
//!
//! On a perturbed simplex `{q : sum q = 1, q >= xi}` the entropy is composed
//! with the affine bijection `(q - xi) / (1 - n xi)` onto the standard simplex.
//! The treeplex function dilates that simplex function by each parent
//! sequence's mass and weighs simplex `j` by `gamma * beta_j`:
//!
//! ```text
//! d(q) = sum_j gamma beta_j q_{p_j} sum_{i in I_j} phi_i log phi_i,
//!        phi_i = (q_i / q_{p_j} - xi) / (1 - n_j xi)
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::treeplex::{check_simplex, Perturbation, Treeplex, TreeplexPoint};

/// Maps a point of the perturbed simplex onto the standard simplex.
pub fn perturb_map(q: &[f64], xi: f64) -> Result<Vec<f64>> {
    check_simplex(q.len(), xi)?;
    let c = 1.0 - q.len() as f64 * xi;
    Ok(q.iter().map(|&v| (v - xi) / c).collect())
}

/// Maps a point of the standard simplex into the perturbed simplex.
pub fn unperturb_map(q: &[f64], xi: f64) -> Result<Vec<f64>> {
    check_simplex(q.len(), xi)?;
    let c = 1.0 - q.len() as f64 * xi;
    Ok(q.iter().map(|&v| c * v + xi).collect())
}

/// Negative entropy `sum q_i log q_i`, with `0 log 0 = 0`.
pub fn entropy_value(q: &[f64]) -> f64 {
    q.iter().map(|&v| xlogx(v)).sum()
}

/// Gradient `1 + log q_i`; undefined when any entry is zero.
pub fn entropy_grad(q: &[f64]) -> Result<Vec<f64>> {
    q.iter()
        .map(|&v| {
            if v > 0.0 {
                Ok(1.0 + v.ln())
            } else {
                Err(Error::Domain(format!("entropy gradient at entry {v}")))
            }
        })
        .collect()
}

#[inline]
fn xlogx(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v * v.ln()
    }
}

/// Conjugate of the perturbed simplex entropy: value and maximizer of
/// `<g, q> - d(q)` over the perturbed simplex.
///
/// The maximizer is built as `(1 - n xi) softmax((1 - n xi) g) + xi`, so every
/// coordinate is at least `xi`.
pub fn perturbed_simplex_conjugate(g: &[f64], xi: f64) -> Result<(f64, Vec<f64>)> {
    check_simplex(g.len(), xi)?;
    let mut q = vec![0.0; g.len()];
    let value = conjugate_into(g, 1.0, xi, &mut q);
    Ok((value, q))
}

/// `scale * d*(g / scale)` for the perturbed simplex entropy, maximizer into `out`.
///
/// Log-sum-exp is shifted by the largest exponent.
#[inline]
fn conjugate_into(g: &[f64], scale: f64, xi: f64, out: &mut [f64]) -> f64 {
    let c = 1.0 - g.len() as f64 * xi;
    let mut m = f64::NEG_INFINITY;
    for (o, &v) in out.iter_mut().zip(g) {
        *o = c * v / scale;
        m = m.max(*o);
    }
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - m).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o = c * (*o / total) + xi;
    }
    scale * (m + total.ln()) + xi * g.iter().sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightScheme {
    /// Bottom-up recurrence with `beta_j = alpha_j` on roots and `2 alpha_j` elsewhere.
    Recurrence,
    /// `beta_j = 2 + sum_{r=1}^{d_j} 2^r (M_{Q_j,r} - 1)`.
    Convergence,
    /// Weights supplied by the caller.
    Explicit,
}

impl WeightScheme {
    pub fn name(self) -> &'static str {
        match self {
            WeightScheme::Recurrence => "recurrence",
            WeightScheme::Convergence => "convergence",
            WeightScheme::Explicit => "explicit",
        }
    }
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recurrence" => Ok(WeightScheme::Recurrence),
            "convergence" => Ok(WeightScheme::Convergence),
            _ => Err(Error::Config(format!("unknown weight scheme {s:?}"))),
        }
    }
}

/// Per-simplex weights of the dilated entropy, times a global scale `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct DgfWeights {
    beta: Vec<f64>,
    scheme: WeightScheme,
    gamma: f64,
}

impl DgfWeights {
    pub fn compute(t: &Treeplex, scheme: WeightScheme) -> DgfWeights {
        let beta = match scheme {
            WeightScheme::Recurrence => recurrence(t).1,
            WeightScheme::Convergence => convergence(t),
            WeightScheme::Explicit => vec![1.0; t.num_simplexes()],
        };
        DgfWeights {
            beta,
            scheme,
            gamma: 1.0,
        }
    }

    pub fn explicit(beta: Vec<f64>) -> Result<DgfWeights> {
        if beta.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::Argument("weights must be positive".into()));
        }
        Ok(DgfWeights {
            beta,
            scheme: WeightScheme::Explicit,
            gamma: 1.0,
        })
    }

    /// The convergence-scheme weights multiplied by `M_Q`, the form whose
    /// diameter-to-modulus ratio is at most [`entropy_diameter_bound`].
    pub fn diameter_form(t: &Treeplex) -> DgfWeights {
        DgfWeights::compute(t, WeightScheme::Convergence)
            .with_gamma(t.max_l1())
            .expect("M_Q >= 1")
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<DgfWeights> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Argument(format!(
                "weight scale must be positive, got {gamma}"
            )));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Unscaled `beta_j`.
    pub fn raw(&self) -> &[f64] {
        &self.beta
    }

    /// Effective weight `gamma * beta_j`.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.gamma * self.beta[j]
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// `scheme`, `gamma`, then one `j beta_j` line per simplex.
    pub fn to_text(&self) -> String {
        let mut out = format!("scheme {}\ngamma {}\n", self.scheme.name(), self.gamma);
        for (j, b) in self.beta.iter().enumerate() {
            let _ = writeln!(out, "{j} {b}");
        }
        out
    }

    fn check(&self, t: &Treeplex) -> Result<()> {
        if self.beta.len() != t.num_simplexes() {
            return Err(Error::Argument(format!(
                "{} weights for {} simplexes",
                self.beta.len(),
                t.num_simplexes()
            )));
        }
        Ok(())
    }
}

/// `(alpha, beta)` of the recurrence scheme.
pub fn recurrence(t: &Treeplex) -> (Vec<f64>, Vec<f64>) {
    let k = t.num_simplexes();
    let mut alpha = vec![0.0; k];
    let mut beta = vec![0.0; k];
    for s in t.simplexes().iter().rev() {
        let best = s
            .children
            .iter()
            .map(|kids| {
                kids.iter()
                    .map(|&c| alpha[c] * beta[c] / (beta[c] - alpha[c]))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        alpha[s.id] = 1.0 + best;
        beta[s.id] = if s.is_root() {
            alpha[s.id]
        } else {
            2.0 * alpha[s.id]
        };
    }
    (alpha, beta)
}

fn convergence(t: &Treeplex) -> Vec<f64> {
    t.simplexes()
        .iter()
        .map(|s| {
            2.0 + (1..=s.depth)
                .map(|r| 2f64.powi(r as i32) * (t.subtree_max_l1_cutoff(s.id, r) - 1.0))
                .sum::<f64>()
        })
        .collect()
}

fn check_point(t: &Treeplex, q: &[f64], what: &str) -> Result<()> {
    if q.len() != t.dim() {
        return Err(Error::Argument(format!(
            "{what} has length {} but treeplex dimension is {}",
            q.len(),
            t.dim()
        )));
    }
    Ok(())
}

/// Value of the dilated perturbed entropy. Boundary points are allowed
/// (`0 log 0 = 0`); points outside `Q^xi` are not.
pub fn treeplex_dgf_value(
    t: &Treeplex,
    q: &[f64],
    w: &DgfWeights,
    xi: Perturbation,
) -> Result<f64> {
    check_point(t, q, "point")?;
    w.check(t)?;
    xi.check(t)?;
    let xi = xi.value();
    let mut total = 0.0;
    for s in t.simplexes() {
        let m = t.parent_mass(s, q);
        if m <= 0.0 {
            if q[s.range.clone()].iter().any(|&v| v != 0.0) {
                return Err(Error::Domain(format!(
                    "simplex {} has mass under a zero parent",
                    s.id
                )));
            }
            continue;
        }
        let c = 1.0 - s.size() as f64 * xi;
        let mut local = 0.0;
        for &v in &q[s.range.clone()] {
            let phi = (v / m - xi) / c;
            if phi < -1e-12 {
                return Err(Error::Domain(format!(
                    "point lies outside the perturbed simplex {}",
                    s.id
                )));
            }
            local += xlogx(phi.max(0.0));
        }
        total += w.weight(s.id) * m * local;
    }
    Ok(total)
}

fn require_interior(t: &Treeplex, q: &[f64], xi: f64) -> Result<()> {
    for s in t.simplexes() {
        let m = t.parent_mass(s, q);
        if m <= 0.0 || q[s.range.clone()].iter().any(|&v| v - xi * m <= 0.0) {
            return Err(Error::Domain(format!(
                "point is not in the relative interior at simplex {}",
                s.id
            )));
        }
    }
    Ok(())
}

/// Gradient of [`treeplex_dgf_value`] at a relative-interior point.
pub fn treeplex_dgf_grad(
    t: &Treeplex,
    q: &[f64],
    w: &DgfWeights,
    xi: Perturbation,
) -> Result<Vec<f64>> {
    check_point(t, q, "point")?;
    w.check(t)?;
    xi.check(t)?;
    let xi = xi.value();
    require_interior(t, q, xi)?;
    let mut grad = vec![0.0; t.dim()];
    for s in t.simplexes() {
        let m = t.parent_mass(s, q);
        let c = 1.0 - s.size() as f64 * xi;
        let beta = w.weight(s.id);
        let mut parent_term = 0.0;
        for i in s.range.clone() {
            let phi = (q[i] / m - xi) / c;
            let log = phi.ln();
            grad[i] += beta * (log + 1.0) / c;
            parent_term += phi * log - (log + 1.0) * q[i] / (c * m);
        }
        if let Some(p) = s.parent {
            grad[p] += beta * parent_term;
        }
    }
    Ok(grad)
}

/// `h^T (Hessian of d) h` at a relative-interior point, in closed form:
///
/// ```text
/// sum_j sum_{i in I_j} gamma beta_j (h_i - h_{p_j} q_i / q_{p_j})^2 / ((1 - n_j xi)(q_i - xi q_{p_j}))
/// ```
///
/// This agrees with the true second derivative along directions that stay in
/// the affine hull of the treeplex.
pub fn hessian_quadratic(
    t: &Treeplex,
    q: &[f64],
    h: &[f64],
    w: &DgfWeights,
    xi: Perturbation,
) -> Result<f64> {
    check_point(t, q, "point")?;
    check_point(t, h, "direction")?;
    w.check(t)?;
    xi.check(t)?;
    let xi = xi.value();
    require_interior(t, q, xi)?;
    let mut total = 0.0;
    for s in t.simplexes() {
        let (m, hp) = match s.parent {
            Some(p) => (q[p], h[p]),
            None => (1.0, 0.0),
        };
        let c = 1.0 - s.size() as f64 * xi;
        let beta = w.weight(s.id);
        for i in s.range.clone() {
            let d = h[i] - hp * q[i] / m;
            total += beta * d * d / (c * (q[i] - xi * m));
        }
    }
    Ok(total)
}

/// `M_Q^2 2^(d_Q + 2) log m` with `m` the largest simplex size.
pub fn entropy_diameter_bound(t: &Treeplex) -> f64 {
    let mq = t.max_l1();
    mq * mq * 2f64.powi(t.depth() as i32 + 2) * (t.max_simplex_size() as f64).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedResponse {
    pub value: f64,
    pub point: TreeplexPoint,
}

/// `max_{q in Q^xi} <g, q> - mu d(q)` and its maximizer.
///
/// Bottom-up, each simplex solves a perturbed simplex conjugate on its own
/// gradient plus the optimal values of the subtrees below each branch; the
/// resulting behavioral maximizers are then scaled top-down by parent mass.
pub fn smoothed_best_response(
    t: &Treeplex,
    g: &[f64],
    w: &DgfWeights,
    xi: Perturbation,
    mu: f64,
) -> Result<SmoothedResponse> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Argument(format!(
            "smoothing parameter must be positive, got {mu}"
        )));
    }
    check_point(t, g, "gradient")?;
    w.check(t)?;
    xi.check(t)?;
    let xi = xi.value();
    let mut acc = g.to_vec();
    let mut point = vec![0.0; t.dim()];
    let mut value = 0.0;
    for s in t.simplexes().iter().rev() {
        let scale = mu * w.weight(s.id);
        let local = conjugate_into(
            &acc[s.range.clone()],
            scale,
            xi,
            &mut point[s.range.clone()],
        );
        match s.parent {
            Some(p) => acc[p] += local,
            None => value += local,
        }
    }
    for s in t.simplexes() {
        if let Some(p) = s.parent {
            let m = point[p];
            for v in &mut point[s.range.clone()] {
                *v *= m;
            }
        }
    }
    Ok(SmoothedResponse {
        value,
        point: TreeplexPoint(point),
    })
}

/// `min_{q in Q^xi} d(q)`.
pub fn dgf_min(t: &Treeplex, w: &DgfWeights, xi: Perturbation) -> Result<f64> {
    let zero = vec![0.0; t.dim()];
    Ok(-smoothed_best_response(t, &zero, w, xi, 1.0)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treeplex::SimplexSpec;

    fn simplex(n: usize) -> Treeplex {
        Treeplex::build(&[SimplexSpec::root(n)]).unwrap()
    }

    fn chain() -> Treeplex {
        Treeplex::build(&[SimplexSpec::root(2), SimplexSpec::child(2, 0, 0)]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn maps_at_vertex_and_center() {
        let v = unperturb_map(&[1.0, 0.0], 0.1).unwrap();
        assert!(close(v[0], 0.9, 1e-15) && close(v[1], 0.1, 1e-15));
        for xi in [0.0, 0.2, 0.45] {
            assert_eq!(perturb_map(&[0.5, 0.5], xi).unwrap(), vec![0.5, 0.5]);
            assert_eq!(unperturb_map(&[0.5, 0.5], xi).unwrap(), vec![0.5, 0.5]);
        }
        assert!(matches!(
            perturb_map(&[0.5, 0.5], 0.5),
            Err(Error::InfeasiblePerturbation { .. })
        ));
    }

    #[test]
    fn entropy_examples() {
        assert!(close(
            entropy_value(&[0.5, 0.5]),
            -std::f64::consts::LN_2,
            1e-15
        ));
        assert_eq!(entropy_value(&[1.0, 0.0]), 0.0);
        assert!(matches!(entropy_grad(&[1.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn conjugate_examples() {
        let (v, q) = perturbed_simplex_conjugate(&[0.0, 0.0], 0.1).unwrap();
        assert!(close(v, std::f64::consts::LN_2, 1e-15));
        assert_eq!(q, vec![0.5, 0.5]);

        let (v, q) = perturbed_simplex_conjugate(&[1.0, 0.0], 0.0).unwrap();
        assert!(close(v, 1.313_261_687_518_222_8, 1e-12));
        assert!(close(q[0], 0.731_058_578_630_004_9, 1e-12));
        assert!(close(q[1], 0.268_941_421_369_995_1, 1e-12));

        let (_, q) = perturbed_simplex_conjugate(&[1.0, 0.0], 0.1).unwrap();
        let e = 0.8f64.exp();
        assert!(close(q[0], 0.8 * e / (e + 1.0) + 0.1, 1e-15));

        assert!(perturbed_simplex_conjugate(&[1.0, 0.0, 0.0], 0.34).is_err());
    }

    #[test]
    fn weights_base_cases() {
        let w = DgfWeights::compute(&simplex(3), WeightScheme::Recurrence);
        assert_eq!(w.raw(), &[1.0]);
        let w = DgfWeights::compute(&simplex(3), WeightScheme::Convergence);
        assert_eq!(w.raw(), &[2.0]);

        let (alpha, beta) = recurrence(&chain());
        assert_eq!(alpha, vec![3.0, 1.0]);
        assert_eq!(beta, vec![3.0, 2.0]);

        // child: d = 0 -> 2; root: d = 1, M_{Q_0,1} = 2 -> 2 + 2 * (2 - 1)
        let w = DgfWeights::compute(&chain(), WeightScheme::Convergence);
        assert_eq!(w.raw(), &[4.0, 2.0]);
        assert!(w.clone().with_gamma(0.0).is_err());
        assert_eq!(w.with_gamma(0.5).unwrap().weight(0), 2.0);
    }

    #[test]
    fn weights_text_dump() {
        let w = DgfWeights::compute(&chain(), WeightScheme::Recurrence);
        assert_eq!(w.to_text(), "scheme recurrence\ngamma 1\n0 3\n1 2\n");
    }

    #[test]
    fn dgf_value_examples() {
        let t = simplex(2);
        let w = DgfWeights::compute(&t, WeightScheme::Recurrence);
        let xi = Perturbation::new(0.1).unwrap();
        let v = treeplex_dgf_value(&t, &[0.5, 0.5], &w, xi).unwrap();
        assert!(close(v, -std::f64::consts::LN_2, 1e-15));

        let t = simplex(3);
        let w = DgfWeights::compute(&t, WeightScheme::Recurrence);
        let q = [0.2, 0.3, 0.5];
        assert_eq!(
            treeplex_dgf_value(&t, &q, &w, Perturbation::NONE).unwrap(),
            entropy_value(&q)
        );
        assert!(treeplex_dgf_grad(&t, &[0.0, 0.5, 0.5], &w, Perturbation::NONE).is_err());
    }

    #[test]
    fn hessian_examples() {
        let t = simplex(2);
        let w = DgfWeights::compute(&t, WeightScheme::Recurrence);
        let q = [0.5, 0.5];
        assert_eq!(
            hessian_quadratic(&t, &q, &[0.0, 0.0], &w, Perturbation::NONE).unwrap(),
            0.0
        );
        let v = hessian_quadratic(&t, &q, &[1.0, -1.0], &w, Perturbation::NONE).unwrap();
        assert!(close(v, 4.0, 1e-15));
        assert!(hessian_quadratic(&t, &[1.0, 0.0], &[1.0, -1.0], &w, Perturbation::NONE).is_err());
    }

    #[test]
    fn diameter_bound_examples() {
        assert!(close(
            entropy_diameter_bound(&simplex(2)),
            4.0 * 2f64.ln(),
            1e-15
        ));
        assert!(close(
            entropy_diameter_bound(&simplex(7)),
            4.0 * 7f64.ln(),
            1e-15
        ));
    }

    #[test]
    fn smoothed_response_symmetric_and_limit() {
        let t = simplex(4);
        let w = DgfWeights::compute(&t, WeightScheme::Recurrence);
        let r = smoothed_best_response(&t, &[0.0; 4], &w, Perturbation::NONE, 2.5).unwrap();
        assert!(close(r.value, 2.5 * 4f64.ln(), 1e-14));
        assert!(r.point.iter().all(|&v| close(v, 0.25, 1e-15)));

        let g = [3.0, -1.0, 0.5, 2.0];
        let r = smoothed_best_response(&t, &g, &w, Perturbation::NONE, 1e6).unwrap();
        assert!(r.point.iter().all(|&v| close(v, 0.25, 1e-6)));

        assert!(matches!(
            smoothed_best_response(&t, &g, &w, Perturbation::NONE, 0.0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn smoothed_response_chain_is_feasible() {
        let t = chain();
        let w = DgfWeights::compute(&t, WeightScheme::Recurrence);
        let xi = Perturbation::new(0.2).unwrap();
        let r = smoothed_best_response(&t, &[5.0, -3.0, 40.0, -40.0], &w, xi, 0.01).unwrap();
        assert!(t.validate_point(&r.point, xi).unwrap());
        assert!(r.point[3] >= 0.2 * r.point[0]);
    }

    #[test]
    fn dgf_min_of_uniform_simplex() {
        let t = simplex(3);
        let w = DgfWeights::compute(&t, WeightScheme::Convergence);
        let m = dgf_min(&t, &w, Perturbation::new(0.1).unwrap()).unwrap();
        assert!(close(m, -2.0 * 3f64.ln(), 1e-14));
    }
}
