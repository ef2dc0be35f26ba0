use super::PlantParams;

/// Dahl hysteresis model
/// `dF/dx = sigma |1 - (F/F_c) sgn(v)|^n sgn(1 - (F/F_c) sgn(v))`, with `sgn(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DahlParams {
    pub f_c: f64,
    pub sigma: f64,
    pub n: f64,
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl DahlParams {
    pub fn is_active(&self) -> bool {
        self.f_c > 0.0 && self.sigma > 0.0
    }

    pub fn clamp(&self, f: f64) -> f64 {
        if self.f_c > 0.0 {
            f.clamp(-self.f_c, self.f_c)
        } else {
            0.0
        }
    }

    /// `dF/dx` for motion in direction `direction` (its sign only).
    pub fn slope(&self, f: f64, direction: f64) -> f64 {
        if !self.is_active() {
            return 0.0;
        }
        let f = self.clamp(f);
        let g = 1.0 - f / self.f_c * sgn(direction);
        if self.n == 1.0 {
            self.sigma * g
        } else {
            self.sigma * g.abs().powf(self.n) * sgn(g)
        }
    }

    /// `dF/dt` at velocity `v`.
    pub fn rate(&self, f: f64, v: f64) -> f64 {
        if v == 0.0 {
            return 0.0;
        }
        self.slope(f, v) * v
    }

    /// Advance the state through a displacement `dx` of constant direction.
    /// Exact for `n = 1`; otherwise four RK4 sub-steps in displacement.
    pub fn advance(&self, f: f64, dx: f64) -> f64 {
        if !self.is_active() {
            return 0.0;
        }
        if dx == 0.0 {
            return self.clamp(f);
        }
        let s = sgn(dx);
        if self.n == 1.0 {
            let target = s * self.f_c;
            let f0 = self.clamp(f);
            return target + (f0 - target) * (-self.sigma * dx.abs() / self.f_c).exp();
        }
        let h = dx / 4.0;
        let mut y = self.clamp(f);
        for _ in 0..4 {
            let k1 = self.slope(y, s);
            let k2 = self.slope(y + h / 2.0 * k1, s);
            let k3 = self.slope(y + h / 2.0 * k2, s);
            let k4 = self.slope(y + h * k3, s);
            y = self.clamp(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        }
        y
    }
}

/// Time derivative of the Dahl state at endpoint velocity `v_e`.
/// Returns zero when `F_c = 0` (hysteresis disabled).
pub fn dahl_rate(f_d: f64, v_e: f64, params: &PlantParams) -> f64 {
    params.dahl().rate(f_d, v_e)
}
