//! Natural cubic splines on a uniform grid (interpolation of curvature
//! samples along a geodesic).

pub struct UniformSpline {
    t0: f64,
    dt: f64,
    vals: Vec<f64>,
    /// Second derivatives at the nodes.
    m: Vec<f64>,
}

impl UniformSpline {
    /// Not-a-knot cubic spline (natural fallback below 4 nodes); the
    /// not-a-knot ends keep full interior accuracy for smooth data.
    pub fn new(t0: f64, dt: f64, vals: Vec<f64>) -> UniformSpline {
        let n = vals.len();
        assert!(n >= 2);
        let mut m = vec![0.0; n];
        let r = |i: usize| 6.0 * (vals[i - 1] - 2.0 * vals[i] + vals[i + 1]) / (dt * dt);
        if n == 3 {
            // single interior equation with natural ends
            m[1] = r(1) / 6.0;
        } else if n >= 4 {
            // not-a-knot: m0 = 2 m1 - m2 and m_{n-1} = 2 m_{n-2} - m_{n-3};
            // eliminating them turns the first and last interior
            // equations into 6 m = rhs.
            m[1] = r(1) / 6.0;
            m[n - 2] = r(n - 2) / 6.0;
            let k = n.saturating_sub(4); // unknowns m_2 .. m_{n-3}
            if k > 0 {
                let mut rhs: Vec<f64> = (2..n - 2).map(r).collect();
                rhs[0] -= m[1];
                rhs[k - 1] -= m[n - 2];
                let mut diag = vec![4.0; k];
                for i in 1..k {
                    let w = 1.0 / diag[i - 1];
                    diag[i] -= w;
                    rhs[i] -= w * rhs[i - 1];
                }
                m[k + 1] = rhs[k - 1] / diag[k - 1];
                for i in (0..k - 1).rev() {
                    m[i + 2] = (rhs[i] - m[i + 3]) / diag[i];
                }
            }
            m[0] = 2.0 * m[1] - m[2];
            m[n - 1] = 2.0 * m[n - 2] - m[n - 3];
        }
        UniformSpline { t0, dt, vals, m }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.vals.len();
        let s = ((t - self.t0) / self.dt).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        let u = s - i as f64;
        let (v0, v1, m0, m1) = (self.vals[i], self.vals[i + 1], self.m[i], self.m[i + 1]);
        let dt2 = self.dt * self.dt;
        let a = v0;
        let b = v1 - v0 - dt2 * (2.0 * m0 + m1) / 6.0;
        let c = dt2 * m0 / 2.0;
        let d = dt2 * (m1 - m0) / 6.0;
        a + u * (b + u * (c + u * d))
    }
}
