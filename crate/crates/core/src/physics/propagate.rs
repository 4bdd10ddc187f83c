//! Fixed-step fourth-order Runge–Kutta propagation of four-level states.

use num_complex::Complex64 as C64;

pub type Ket = [C64; 4];
pub type Mat4 = [[C64; 4]; 4];

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// Phasors are re-evaluated exactly after this many steps to bound the
/// round-off of the multiplicative recurrence.
const RESYNC_STEPS: usize = 1024;

#[inline]
pub(crate) fn matvec(m: &Mat4, v: &Ket) -> Ket {
    let mut out = [ZERO; 4];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
    }
    out
}

/// `-i H ψ`
#[inline]
fn derivative(h: &Mat4, psi: &Ket) -> Ket {
    let hv = matvec(h, psi);
    hv.map(|z| C64::new(z.im, -z.re))
}

#[inline]
fn axpy(psi: &Ket, a: f64, k: &Ket) -> Ket {
    [psi[0] + k[0] * a, psi[1] + k[1] * a, psi[2] + k[2] * a, psi[3] + k[3] * a]
}

#[inline]
fn rk4_combine(psi: &mut Ket, h: f64, k1: &Ket, k2: &Ket, k3: &Ket, k4: &Ket) {
    let w = h / 6.0;
    for i in 0..4 {
        psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
    }
}

pub(crate) fn norm_sqr(psi: &Ket) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn zero_matrix() -> Mat4 {
    [[ZERO; 4]; 4]
}

/// One coupling `coeff · e^{iωt} |row⟩⟨col| + h.c.`, where `ω` is the
/// frequency of phasor `phasor`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coupling {
    pub phasor: usize,
    pub row: usize,
    pub col: usize,
    pub coeff: C64,
}

/// A Hamiltonian of the form `S + Σ_k (c_k e^{iω_k t} |r_k⟩⟨c_k| + h.c.)`
/// with a static Hermitian part `S`.
#[derive(Debug, Clone)]
pub(crate) struct PhasorHamiltonian {
    pub static_part: Mat4,
    pub frequencies: Vec<f64>,
    pub couplings: Vec<Coupling>,
}

impl PhasorHamiltonian {
    pub fn new(static_part: Mat4) -> Self {
        Self { static_part, frequencies: Vec::new(), couplings: Vec::new() }
    }

    /// Registers a phasor `e^{iωt}` and returns its index.
    pub fn phasor(&mut self, omega: f64) -> usize {
        self.frequencies.push(omega);
        self.frequencies.len() - 1
    }

    pub fn couple(&mut self, phasor: usize, row: usize, col: usize, coeff: f64) {
        self.couple_complex(phasor, row, col, C64::new(coeff, 0.0));
    }

    pub fn couple_complex(&mut self, phasor: usize, row: usize, col: usize, coeff: C64) {
        self.couplings.push(Coupling { phasor, row, col, coeff });
    }

    fn phasors_into(&self, t: f64, out: &mut [C64]) {
        for (p, &w) in out.iter_mut().zip(&self.frequencies) {
            *p = C64::from_polar(1.0, w * t);
        }
    }

    fn fill(&self, phasors: &[C64], out: &mut Mat4) {
        *out = self.static_part;
        for c in &self.couplings {
            let v = c.coeff * phasors[c.phasor];
            out[c.row][c.col] += v;
            out[c.col][c.row] += v.conj();
        }
    }

    pub fn matrix_at(&self, t: f64) -> Mat4 {
        let mut ph = vec![ZERO; self.frequencies.len()];
        self.phasors_into(t, &mut ph);
        let mut m = zero_matrix();
        self.fill(&ph, &mut m);
        m
    }

    /// Upper bound on the spectral radius: the largest absolute row sum of
    /// the envelope `|S| + Σ |c_k|`.
    pub fn spectral_bound(&self) -> f64 {
        let mut rows = [0.0f64; 4];
        for (r, row) in self.static_part.iter().enumerate() {
            rows[r] += row.iter().map(|z| z.norm()).sum::<f64>();
        }
        for c in &self.couplings {
            rows[c.row] += c.coeff.norm();
            rows[c.col] += c.coeff.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Largest oscillation frequency (cycles per ms) present in the
    /// dynamics: the fastest explicit phasor or the spectral bound,
    /// whichever is larger.
    pub fn max_frequency(&self) -> f64 {
        let fastest = self
            .frequencies
            .iter()
            .zip(0..)
            .filter(|(_, k)| self.couplings.iter().any(|c| c.phasor == *k))
            .map(|(w, _)| w.abs())
            .fold(0.0, f64::max);
        fastest.max(self.spectral_bound()) / (2.0 * std::f64::consts::PI)
    }

    /// Propagates `psi` from `t0` to `t1` in `steps` equal RK4 steps.
    pub fn propagate(&self, psi: &mut Ket, t0: f64, t1: f64, steps: usize) {
        let system = LaneSystem::<1>::new([self]).expect("a single lane always matches itself");
        let mut lanes = [*psi];
        system.propagate(&mut lanes, t0, t1, steps);
        *psi = lanes[0];
    }

    fn same_structure(&self, other: &Self) -> bool {
        self.frequencies == other.frequencies
            && self.couplings.len() == other.couplings.len()
            && self
                .couplings
                .iter()
                .zip(&other.couplings)
                .all(|(a, b)| (a.phasor, a.row, a.col) == (b.phasor, b.row, b.col))
            && (0..4).all(|r| {
                (0..4).all(|c| (self.static_part[r][c] == ZERO) == (other.static_part[r][c] == ZERO))
            })
    }
}

const MAX_PAIRS: usize = 6;

#[derive(Debug, Clone, Copy)]
enum Slot {
    Diagonal(usize),
    Upper(usize),
    Lower(usize),
}

#[derive(Debug, Clone, Copy)]
struct LaneTerm<const L: usize> {
    slot: Slot,
    phasor: usize,
    re: [f64; L],
    im: [f64; L],
}

/// Diagonal and upper-triangle values of `L` Hamiltonians sharing one
/// sparsity pattern.
#[derive(Debug, Clone, Copy)]
struct LaneValues<const L: usize> {
    diag: [[f64; L]; 4],
    re: [[f64; L]; MAX_PAIRS],
    im: [[f64; L]; MAX_PAIRS],
}

/// Split real/imaginary amplitudes of `L` states.
#[derive(Debug, Clone, Copy)]
struct LaneKet<const L: usize> {
    re: [[f64; L]; 4],
    im: [[f64; L]; 4],
}

impl<const L: usize> LaneKet<L> {
    fn from_kets(kets: &[Ket; L]) -> Self {
        let mut out = Self { re: [[0.0; L]; 4], im: [[0.0; L]; 4] };
        for (l, k) in kets.iter().enumerate() {
            for i in 0..4 {
                out.re[i][l] = k[i].re;
                out.im[i][l] = k[i].im;
            }
        }
        out
    }

    fn write(&self, kets: &mut [Ket; L]) {
        for (l, k) in kets.iter_mut().enumerate() {
            for i in 0..4 {
                k[i] = C64::new(self.re[i][l], self.im[i][l]);
            }
        }
    }

    #[inline(always)]
    fn axpy(&self, a: f64, k: &Self) -> Self {
        let mut out = *self;
        for i in 0..4 {
            for l in 0..L {
                out.re[i][l] = self.re[i][l] + k.re[i][l] * a;
                out.im[i][l] = self.im[i][l] + k.im[i][l] * a;
            }
        }
        out
    }
}

/// `L` phasor Hamiltonians with identical frequencies and coupling pattern,
/// integrated side by side. Every lane performs exactly the floating-point
/// operations of a single-lane run.
pub(crate) struct LaneSystem<const L: usize> {
    frequencies: Vec<f64>,
    base: LaneValues<L>,
    pairs: [(usize, usize); MAX_PAIRS],
    n_pairs: usize,
    terms: Vec<LaneTerm<L>>,
}

impl<const L: usize> LaneSystem<L> {
    /// `None` when the lanes do not share a structure.
    pub fn new(lanes: [&PhasorHamiltonian; L]) -> Option<Self> {
        let first = lanes[0];
        if !lanes.iter().all(|h| first.same_structure(h)) {
            return None;
        }
        let mut pairs = [(0, 0); MAX_PAIRS];
        let mut n_pairs = 0;
        let mut slot_of = |r: usize, c: usize| -> usize {
            let key = (r.min(c), r.max(c));
            match pairs[..n_pairs].iter().position(|&p| p == key) {
                Some(k) => k,
                None => {
                    pairs[n_pairs] = key;
                    n_pairs += 1;
                    n_pairs - 1
                }
            }
        };
        let mut base = LaneValues { diag: [[0.0; L]; 4], re: [[0.0; L]; MAX_PAIRS], im: [[0.0; L]; MAX_PAIRS] };
        for r in 0..4 {
            for c in r..4 {
                let k = if r == c || first.static_part[r][c] == ZERO { None } else { Some(slot_of(r, c)) };
                for (l, h) in lanes.iter().enumerate() {
                    let v = h.static_part[r][c];
                    match k {
                        None if r == c => base.diag[r][l] = v.re,
                        None => {}
                        Some(k) => {
                            base.re[k][l] = v.re;
                            base.im[k][l] = v.im;
                        }
                    }
                }
            }
        }
        let mut terms = Vec::with_capacity(first.couplings.len());
        for (j, c) in first.couplings.iter().enumerate() {
            let slot = if c.row == c.col {
                Slot::Diagonal(c.row)
            } else if c.row < c.col {
                Slot::Upper(slot_of(c.row, c.col))
            } else {
                Slot::Lower(slot_of(c.row, c.col))
            };
            let mut term = LaneTerm { slot, phasor: c.phasor, re: [0.0; L], im: [0.0; L] };
            for (l, h) in lanes.iter().enumerate() {
                term.re[l] = h.couplings[j].coeff.re;
                term.im[l] = h.couplings[j].coeff.im;
            }
            terms.push(term);
        }
        Some(Self { frequencies: first.frequencies.clone(), base, pairs, n_pairs, terms })
    }

    #[inline(always)]
    fn fill(&self, phasors: &[C64], out: &mut LaneValues<L>) {
        *out = self.base;
        for t in &self.terms {
            let p = phasors[t.phasor];
            match t.slot {
                Slot::Diagonal(i) => {
                    for l in 0..L {
                        out.diag[i][l] += 2.0 * (t.re[l] * p.re - t.im[l] * p.im);
                    }
                }
                Slot::Upper(k) => {
                    for l in 0..L {
                        out.re[k][l] += t.re[l] * p.re - t.im[l] * p.im;
                        out.im[k][l] += t.re[l] * p.im + t.im[l] * p.re;
                    }
                }
                Slot::Lower(k) => {
                    for l in 0..L {
                        out.re[k][l] += t.re[l] * p.re - t.im[l] * p.im;
                        out.im[k][l] -= t.re[l] * p.im + t.im[l] * p.re;
                    }
                }
            }
        }
    }

    /// `-i H ψ`
    #[inline(always)]
    fn derivative(&self, h: &LaneValues<L>, psi: &LaneKet<L>) -> LaneKet<L> {
        let mut re = [[0.0; L]; 4];
        let mut im = [[0.0; L]; 4];
        for i in 0..4 {
            for l in 0..L {
                re[i][l] = psi.re[i][l] * h.diag[i][l];
                im[i][l] = psi.im[i][l] * h.diag[i][l];
            }
        }
        for k in 0..self.n_pairs {
            let (r, c) = self.pairs[k];
            for l in 0..L {
                let (vr, vi) = (h.re[k][l], h.im[k][l]);
                re[r][l] += vr * psi.re[c][l] - vi * psi.im[c][l];
                im[r][l] += vr * psi.im[c][l] + vi * psi.re[c][l];
                re[c][l] += vr * psi.re[r][l] + vi * psi.im[r][l];
                im[c][l] += vr * psi.im[r][l] - vi * psi.re[r][l];
            }
        }
        // multiply by -i
        let mut out = LaneKet { re: im, im: re };
        for i in 0..4 {
            for l in 0..L {
                out.im[i][l] = -out.im[i][l];
            }
        }
        out
    }

    fn phasors_into(&self, t: f64, out: &mut [C64]) {
        for (p, &w) in out.iter_mut().zip(&self.frequencies) {
            *p = C64::from_polar(1.0, w * t);
        }
    }

    pub fn propagate(&self, kets: &mut [Ket; L], t0: f64, t1: f64, steps: usize) {
        if steps == 0 || t1 == t0 {
            return;
        }
        let h = (t1 - t0) / steps as f64;
        let n = self.frequencies.len();
        let half: Vec<C64> = self
            .frequencies
            .iter()
            .map(|&w| C64::from_polar(1.0, 0.5 * w * h))
            .collect();
        let mut ph = vec![ZERO; n];
        let mut ph_half = vec![ZERO; n];
        let mut h_start = self.base;
        let mut h_mid = self.base;
        let mut h_end = self.base;
        let mut psi = LaneKet::from_kets(kets);
        let w = h / 6.0;

        for s in 0..steps {
            if s % RESYNC_STEPS == 0 {
                self.phasors_into(t0 + s as f64 * h, &mut ph);
                self.fill(&ph, &mut h_start);
            }
            for k in 0..n {
                ph_half[k] = ph[k] * half[k];
                ph[k] = ph_half[k] * half[k];
            }
            self.fill(&ph_half, &mut h_mid);
            self.fill(&ph, &mut h_end);

            let k1 = self.derivative(&h_start, &psi);
            let k2 = self.derivative(&h_mid, &psi.axpy(0.5 * h, &k1));
            let k3 = self.derivative(&h_mid, &psi.axpy(0.5 * h, &k2));
            let k4 = self.derivative(&h_end, &psi.axpy(h, &k3));
            for i in 0..4 {
                for l in 0..L {
                    psi.re[i][l] += (k1.re[i][l] + (k2.re[i][l] + k3.re[i][l]) * 2.0 + k4.re[i][l]) * w;
                    psi.im[i][l] += (k1.im[i][l] + (k2.im[i][l] + k3.im[i][l]) * 2.0 + k4.im[i][l]) * w;
                }
            }

            std::mem::swap(&mut h_start, &mut h_end);
        }
        psi.write(kets);
    }
}

/// RK4 propagation for a Hamiltonian given as an arbitrary function of time.
pub(crate) fn propagate_with<F>(mut hamiltonian: F, psi: &mut Ket, t0: f64, t1: f64, steps: usize)
where
    F: FnMut(f64) -> Mat4,
{
    if steps == 0 || t1 == t0 {
        return;
    }
    let h = (t1 - t0) / steps as f64;
    let mut h_start = hamiltonian(t0);
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let h_mid = hamiltonian(t + 0.5 * h);
        let h_end = hamiltonian(t + h);
        let k1 = derivative(&h_start, psi);
        let k2 = derivative(&h_mid, &axpy(psi, 0.5 * h, &k1));
        let k3 = derivative(&h_mid, &axpy(psi, 0.5 * h, &k2));
        let k4 = derivative(&h_end, &axpy(psi, h, &k3));
        rk4_combine(psi, h, &k1, &k2, &k3, &k4);
        h_start = h_end;
    }
}

/// Number of equal steps of size at most `max_dt` covering `[t0, t1]`.
pub(crate) fn step_count(t0: f64, t1: f64, max_dt: f64) -> usize {
    let span = t1 - t0;
    if span <= 0.0 {
        return 0;
    }
    // guard against 1 ulp overshoot turning an exact multiple into n + 1
    let n = (span / max_dt * (1.0 - 1e-12)).ceil();
    (n as usize).max(1)
}
