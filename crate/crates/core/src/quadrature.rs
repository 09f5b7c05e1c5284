//! One-dimensional and spherical quadrature rules.

use std::f64::consts::PI;

use nalgebra::Vector3;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Product rule on the unit sphere S² ⊂ R³: Gauss–Legendre in `cos ϑ` times the trapezoid rule in `φ`.
#[derive(Debug, Clone)]
pub struct AngularRule {
    nodes: Vec<Vector3<f64>>,
    weights: Vec<f64>,
    exactness_degree: usize,
}

impl AngularRule {
    /// Rule exact for all polynomials of degree `≤ exactness_degree` (at least 11).
    pub fn new(exactness_degree: usize) -> Self {
        let deg = exactness_degree.max(11);
        let n_polar = deg.div_ceil(2) + usize::from(deg % 2 == 0);
        let n_azimuth = deg + 1;
        let (z, wz) = gauss_legendre(n_polar);
        let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        let dphi = 2.0 * PI / n_azimuth as f64;
        for (zi, wi) in z.iter().zip(&wz) {
            let rho = (1.0 - zi * zi).sqrt();
            for k in 0..n_azimuth {
                // half-step offset keeps nodes off the coordinate planes
                let phi = (k as f64 + 0.5) * dphi;
                nodes.push(Vector3::new(rho * phi.cos(), rho * phi.sin(), *zi));
                weights.push(wi * dphi);
            }
        }
        AngularRule { nodes, weights, exactness_degree: 2 * n_polar - 1 }
    }

    pub fn nodes(&self) -> &[Vector3<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn exactness_degree(&self) -> usize {
        self.exactness_degree
    }

    /// `∫_{S²} f(ω) dS`.
    pub fn integrate(&self, f: impl Fn(&Vector3<f64>) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// `∫_{S²} f(r ω) dω` (not normalized by `4π`).
pub fn shell_average(f: impl Fn(&Vector3<f64>) -> f64, r: f64, rule: &AngularRule) -> f64 {
    rule.integrate(|w| f(&(w * r)))
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Result of a vector-valued adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub intervals: usize,
}

fn gk15<const N: usize>(f: &impl Fn(f64) -> [f64; N], a: f64, b: f64) -> ([f64; N], [f64; N]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    for n in 0..N {
        kron[n] = WGK[7] * fc[n];
        gauss[n] = WG[3] * fc[n];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for n in 0..N {
            kron[n] += WGK[j] * (f1[n] + f2[n]);
            if j % 2 == 1 {
                gauss[n] += WG[j / 2] * (f1[n] + f2[n]);
            }
        }
    }
    let mut value = [0.0; N];
    let mut err = [0.0; N];
    for n in 0..N {
        value[n] = kron[n] * h;
        err[n] = ((kron[n] - gauss[n]) * h).abs();
    }
    (value, err)
}

/// Globally adaptive Gauss–Kronrod (7/15) integration on `[a, b]`.
///
/// Bisects the interval with the largest error until the summed error of
/// every component is below `tol`, or an interval reaches `max_depth` halvings.
pub fn integrate_adaptive<const N: usize>(f: impl Fn(f64) -> [f64; N], a: f64, b: f64, tol: f64, max_depth: u32) -> QuadResult<N> {
    struct Piece<const N: usize> {
        a: f64,
        b: f64,
        depth: u32,
        value: [f64; N],
        error: [f64; N],
    }
    let worst = |e: &[f64; N]| e.iter().fold(0.0f64, |m, v| m.max(*v));
    let (value, error) = gk15(&f, a, b);
    let mut pieces = vec![Piece { a, b, depth: 0, value, error }];
    loop {
        let mut total_err = [0.0; N];
        for p in &pieces {
            for n in 0..N {
                total_err[n] += p.error[n];
            }
        }
        if worst(&total_err) <= tol {
            break;
        }
        let candidate = pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.depth < max_depth)
            .max_by(|x, y| worst(&x.1.error).total_cmp(&worst(&y.1.error)))
            .map(|(i, _)| i);
        let Some(i) = candidate else { break };
        let p = pieces.swap_remove(i);
        let m = 0.5 * (p.a + p.b);
        for (lo, hi) in [(p.a, m), (m, p.b)] {
            let (value, error) = gk15(&f, lo, hi);
            pieces.push(Piece { a: lo, b: hi, depth: p.depth + 1, value, error });
        }
        if pieces.len() > 4000 {
            break;
        }
    }
    // deterministic summation order
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for p in &pieces {
        for n in 0..N {
            value[n] += p.value[n];
            error[n] += p.error[n];
        }
    }
    QuadResult { value, error, intervals: pieces.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_rule_is_exact() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for d in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert_abs_diff_eq!(approx, exact, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn angular_rule_monomials() {
        let rule = AngularRule::new(11);
        assert!(rule.exactness_degree() >= 11);
        assert_abs_diff_eq!(rule.weights().iter().sum::<f64>(), 4.0 * PI, epsilon = 1e-13);
        assert_abs_diff_eq!(rule.integrate(|x| x[0]), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.integrate(|x| x[1] * x[1]), 4.0 * PI / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.integrate(|x| x[2].powi(4)), 4.0 * PI / 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.integrate(|x| x[0] * x[0] * x[1] * x[1]), 4.0 * PI / 15.0, epsilon = 1e-14);
    }

    #[test]
    fn shell_average_examples() {
        let rule = AngularRule::new(11);
        assert_abs_diff_eq!(shell_average(|x| x[0], 3.0, &rule), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(shell_average(|x| x.norm_squared(), 2.0, &rule), 16.0 * PI, epsilon = 1e-12);
        // ∫ cos²ϑ sinϑ dϑ dφ = 4π/3, by explicit spherical coordinates
        assert_abs_diff_eq!(shell_average(|x| x[0] * x[0], 1.0, &rule), 4.0 * PI / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let r = integrate_adaptive(|x| [1.0 / (1e-4 + x * x), x.cos()], -1.0, 1.0, 1e-10, 40);
        assert_abs_diff_eq!(r.value[0], 2.0 * (1.0f64 / 1e-2).atan() / 1e-2, epsilon = 1e-8);
        assert_abs_diff_eq!(r.value[1], 2.0 * 1f64.sin(), epsilon = 1e-12);
        assert!(r.error[0] < 1e-9);
    }
}
