/// Time series logged by [`simulate`](super::simulate), one entry per sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub dt: f64,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub x_e: Vec<f64>,
    pub v_e: Vec<f64>,
    pub f_p: Vec<f64>,
    pub f_e: Vec<f64>,
    pub f_a: Vec<f64>,
    pub f_d: Vec<f64>,
    pub f_cmp: Vec<f64>,
    pub f_ref: Vec<f64>,
}

impl SimTrace {
    pub const HEADER: [&'static str; 11] =
        ["t", "x", "v", "x_e", "v_e", "F_p", "F_e", "F_a", "F_d", "F_cmp", "F_ref"];

    pub(crate) fn with_capacity(dt: f64, n: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            dt,
            t: v(),
            x: v(),
            v: v(),
            x_e: v(),
            v_e: v(),
            f_p: v(),
            f_e: v(),
            f_a: v(),
            f_d: v(),
            f_cmp: v(),
            f_ref: v(),
        }
    }

    pub(crate) fn push(&mut self, row: [f64; 11]) {
        let cols = [
            &mut self.t,
            &mut self.x,
            &mut self.v,
            &mut self.x_e,
            &mut self.v_e,
            &mut self.f_p,
            &mut self.f_e,
            &mut self.f_a,
            &mut self.f_d,
            &mut self.f_cmp,
            &mut self.f_ref,
        ];
        for (c, val) in cols.into_iter().zip(row) {
            c.push(val);
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Row `i` in [`HEADER`](Self::HEADER) order.
    pub fn row(&self, i: usize) -> [f64; 11] {
        [
            self.t[i],
            self.x[i],
            self.v[i],
            self.x_e[i],
            self.v_e[i],
            self.f_p[i],
            self.f_e[i],
            self.f_a[i],
            self.f_d[i],
            self.f_cmp[i],
            self.f_ref[i],
        ]
    }

    pub fn rows(&self) -> impl Iterator<Item = [f64; 11]> + '_ {
        (0..self.len()).map(|i| self.row(i))
    }

    /// Index of the first sample at or after time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        self.t.partition_point(|&s| s < t - 1e-12)
    }
}
