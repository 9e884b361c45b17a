//! Measurement protocols: instrumental-matrix rows grouped into settings.
//!
//! Two families are provided. `pauli_protocol` measures every tensor product
//! of per-qubit Pauli observables (3^n settings of 2^n rank-1 projectors).
//! `mub_protocol` measures d+1 mutually unbiased bases: the computational
//! basis plus d character bases, built from the Weyl–Heisenberg formula for
//! odd prime d and from the Galois ring GR(4, m) for d = 2^m.
//!
//! Constructors renormalize so the decomposition of unity Σ_j Λ_j = I holds
//! with constant a = 1; row probabilities then form a single distribution.

use ndarray::{Array1, Array2};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eye, hermiticity_deviation, max_abs, outer, trace_product_re};
use crate::quantum::{DensityMatrix, StateVector};
use crate::scalar::Scalar;

/// Largest supported Hilbert dimension.
pub const MAX_DIM: usize = 16;

/// Dimensions with a full MUB construction: primes and powers of two up
/// to MAX_DIM.
pub const SUPPORTED_DIMS: [usize; 9] = [2, 3, 4, 5, 7, 8, 11, 13, 16];

/// One protocol row: measurement operator, setting membership and, for
/// rank-1 rows, the scaled ket x with Λ = x x⁺ (‖x‖² = row weight).
#[derive(Debug, Clone)]
pub struct ProtocolRow<T: Scalar> {
    pub operator: Array2<Complex<T>>,
    pub setting_id: usize,
    pub projector: Option<Array1<Complex<T>>>,
}

/// Measurement protocol with unity decomposition Σ_j Λ_j = I.
#[derive(Debug, Clone)]
pub struct MeasurementProtocol<T: Scalar> {
    dim: usize,
    n_settings: usize,
    rows: Vec<ProtocolRow<T>>,
}

impl<T: Scalar> MeasurementProtocol<T> {
    /// Validates row shapes, Hermiticity, projector consistency, the unity
    /// decomposition, and the per-setting sums Σ_setting Λ = I/n_settings.
    pub fn new(dim: usize, n_settings: usize, rows: Vec<ProtocolRow<T>>) -> Result<Self> {
        if dim < 2 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if n_settings == 0 || rows.is_empty() {
            return Err(Error::InvalidProtocol("no rows or settings".into()));
        }
        for (j, row) in rows.iter().enumerate() {
            if row.operator.nrows() != dim || row.operator.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.operator.nrows(),
                });
            }
            if row.setting_id >= n_settings {
                return Err(Error::InvalidProtocol(format!(
                    "row {j} references setting {} of {n_settings}",
                    row.setting_id
                )));
            }
            let herm = hermiticity_deviation(&row.operator);
            if herm > T::OP_TOL {
                return Err(Error::NotHermitian {
                    deviation: herm.to_f64().unwrap_or(f64::NAN),
                });
            }
            if let Some(x) = &row.projector {
                if x.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: x.len(),
                    });
                }
                let dev = max_abs(&(&row.operator - &outer(x, x)));
                if dev > T::real(1e-12).max(T::NORM_TOL) {
                    return Err(Error::InvalidProtocol(format!(
                        "row {j}: operator disagrees with projector (deviation {dev})"
                    )));
                }
            }
        }
        let proto = Self {
            dim,
            n_settings,
            rows,
        };
        let unity = proto.verify_unity_decomposition();
        if unity > T::OP_TOL {
            return Err(Error::InvalidProtocol(format!(
                "unity decomposition violated by {unity}"
            )));
        }
        let per = proto.per_setting_deviation();
        if per > T::OP_TOL {
            return Err(Error::InvalidProtocol(format!(
                "per-setting sums deviate from I/n_settings by {per}"
            )));
        }
        Ok(proto)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_settings(&self) -> usize {
        self.n_settings
    }

    pub fn rows(&self) -> &[ProtocolRow<T>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Row indices grouped by setting, in row order.
    pub fn setting_groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_settings];
        for (j, row) in self.rows.iter().enumerate() {
            groups[row.setting_id].push(j);
        }
        groups
    }

    /// Outcome probabilities λ_j = c⁺ Λ_j c, clamped to [0, ∞).
    pub fn probabilities(&self, state: &StateVector<T>) -> Result<Array1<T>> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: state.dim(),
            });
        }
        let c = state.amps();
        Ok(Array1::from_iter(self.rows.iter().map(|row| {
            let lam = match &row.projector {
                Some(x) => x
                    .iter()
                    .zip(c.iter())
                    .map(|(xi, ci)| xi.conj() * *ci)
                    .sum::<Complex<T>>()
                    .norm_sqr(),
                None => {
                    let v = row.operator.dot(c);
                    c.iter()
                        .zip(v.iter())
                        .map(|(a, b)| (a.conj() * *b).re)
                        .sum()
                }
            };
            lam.max(T::zero())
        })))
    }

    /// Outcome probabilities λ_j = Tr(Λ_j ρ), clamped to [0, ∞).
    pub fn probabilities_density(&self, rho: &DensityMatrix<T>) -> Result<Array1<T>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rho.dim(),
            });
        }
        Ok(Array1::from_iter(self.rows.iter().map(|row| {
            trace_product_re(&row.operator, rho.mat()).max(T::zero())
        })))
    }

    /// ‖Σ_j Λ_j − I‖_max.
    pub fn verify_unity_decomposition(&self) -> T {
        let mut sum: Array2<Complex<T>> = Array2::zeros((self.dim, self.dim));
        for row in &self.rows {
            sum = sum + &row.operator;
        }
        max_abs(&(&sum - &eye::<T>(self.dim)))
    }

    /// Max deviation of any setting's operator sum from I/n_settings.
    pub fn per_setting_deviation(&self) -> T {
        let w = T::one() / T::real(self.n_settings as f64);
        let target = eye::<T>(self.dim).mapv(|z| z * Complex::new(w, T::zero()));
        let mut worst = T::zero();
        for group in self.setting_groups() {
            let mut sum: Array2<Complex<T>> = Array2::zeros((self.dim, self.dim));
            for j in group {
                sum = sum + &self.rows[j].operator;
            }
            worst = worst.max(max_abs(&(&sum - &target)));
        }
        worst
    }

    /// Serializes to the interchange JSON schema.
    pub fn to_json(&self) -> Result<String> {
        let rows = self
            .rows
            .iter()
            .map(|row| RowJson {
                setting: row.setting_id,
                op: Some(MatrixJson {
                    re: matrix_part(&row.operator, |z| z.re),
                    im: matrix_part(&row.operator, |z| z.im),
                }),
                projector: row.projector.as_ref().map(|x| VectorJson {
                    re: x.iter().map(|z| z.re.to_f64().unwrap_or(f64::NAN)).collect(),
                    im: x.iter().map(|z| z.im.to_f64().unwrap_or(f64::NAN)).collect(),
                }),
            })
            .collect();
        let doc = ProtocolJson {
            dim: self.dim,
            n_settings: self.n_settings,
            rows,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Deserializes from the interchange JSON schema, revalidating.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProtocolJson = serde_json::from_str(text)?;
        let rows = doc
            .rows
            .into_iter()
            .map(|row| {
                let projector = row.projector.as_ref().map(|v| {
                    Array1::from_iter(
                        v.re.iter()
                            .zip(v.im.iter())
                            .map(|(&re, &im)| Complex::new(T::real(re), T::real(im))),
                    )
                });
                let operator = match (row.op, &projector) {
                    (Some(m), _) => {
                        let n = m.re.len();
                        Array2::from_shape_fn((n, n), |(i, j)| {
                            Complex::new(T::real(m.re[i][j]), T::real(m.im[i][j]))
                        })
                    }
                    (None, Some(x)) => outer(x, x),
                    (None, None) => {
                        return Err(Error::InvalidProtocol(
                            "row carries neither operator nor projector".into(),
                        ))
                    }
                };
                Ok(ProtocolRow {
                    operator,
                    setting_id: row.setting,
                    projector,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.dim, doc.n_settings, rows)
    }
}

#[derive(Serialize, Deserialize)]
struct ProtocolJson {
    dim: usize,
    n_settings: usize,
    rows: Vec<RowJson>,
}

#[derive(Serialize, Deserialize)]
struct RowJson {
    setting: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    op: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    projector: Option<VectorJson>,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct VectorJson {
    re: Vec<f64>,
    im: Vec<f64>,
}

fn matrix_part<T: Scalar>(m: &Array2<Complex<T>>, f: impl Fn(&Complex<T>) -> T) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| f(&m[(i, j)]).to_f64().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

/// Per-qubit Pauli eigenbases in setting order z < x < y; outcome 0 is the
/// +1 eigenvector.
fn pauli_eigenbases<T: Scalar>() -> [[Array1<Complex<T>>; 2]; 3] {
    let h = T::real(0.5).sqrt();
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let hr = Complex::new(h, T::zero());
    let hi = Complex::new(T::zero(), h);
    [
        [
            Array1::from_vec(vec![one, zero]),
            Array1::from_vec(vec![zero, one]),
        ],
        [
            Array1::from_vec(vec![hr, hr]),
            Array1::from_vec(vec![hr, -hr]),
        ],
        [
            Array1::from_vec(vec![hr, hi]),
            Array1::from_vec(vec![hr, -hi]),
        ],
    ]
}

/// Tensor-product Pauli protocol on n qubits: 3^n settings in lexicographic
/// per-qubit choice order, each with the 2^n joint eigenprojectors in
/// computational label order, weighted 1/3^n.
pub fn pauli_protocol<T: Scalar>(n_qubits: usize) -> Result<MeasurementProtocol<T>> {
    if n_qubits == 0 || 1usize << n_qubits > MAX_DIM {
        return Err(Error::UnsupportedDimension(1usize << n_qubits));
    }
    let dim = 1usize << n_qubits;
    let n_settings = 3usize.pow(n_qubits as u32);
    let bases = pauli_eigenbases::<T>();
    let sqrt_w = Complex::new(T::one() / T::real(n_settings as f64).sqrt(), T::zero());

    let mut rows = Vec::with_capacity(n_settings * dim);
    for setting in 0..n_settings {
        let mut choice = [0usize; 4];
        let mut rem = setting;
        for q in (0..n_qubits).rev() {
            choice[q] = rem % 3;
            rem /= 3;
        }
        for outcome in 0..dim {
            let mut ket = Array1::from_vec(vec![Complex::new(T::one(), T::zero())]);
            for q in 0..n_qubits {
                let bit = (outcome >> (n_qubits - 1 - q)) & 1;
                ket = kron_vec(&ket, &bases[choice[q]][bit]);
            }
            let x = ket.mapv(|z| z * sqrt_w);
            rows.push(ProtocolRow {
                operator: outer(&x, &x),
                setting_id: setting,
                projector: Some(x),
            });
        }
    }
    MeasurementProtocol::new(dim, n_settings, rows)
}

/// MUB protocol: d+1 orthonormal bases with all cross-basis overlaps
/// |⟨a|b⟩|² = 1/d, weighted 1/(d+1). Setting 0 is the computational basis.
pub fn mub_protocol<T: Scalar>(dim: usize) -> Result<MeasurementProtocol<T>> {
    let bases = mub_bases::<T>(dim)?;
    let n_settings = dim + 1;
    let sqrt_w = Complex::new(T::one() / T::real(n_settings as f64).sqrt(), T::zero());
    let mut rows = Vec::with_capacity(n_settings * dim);
    for (setting, basis) in bases.iter().enumerate() {
        for b in 0..dim {
            let x = Array1::from_iter((0..dim).map(|i| basis[(b, i)] * sqrt_w));
            rows.push(ProtocolRow {
                operator: outer(&x, &x),
                setting_id: setting,
                projector: Some(x),
            });
        }
    }
    MeasurementProtocol::new(dim, n_settings, rows)
}

/// The d+1 unbiased bases as matrices with basis vectors in rows.
fn mub_bases<T: Scalar>(dim: usize) -> Result<Vec<Array2<Complex<T>>>> {
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if dim.is_power_of_two() {
        Ok(mub_bases_pow2(dim.trailing_zeros() as usize))
    } else if is_prime(dim) {
        Ok(mub_bases_odd_prime(dim))
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..n).all(|k| n % k != 0)
}

/// Weyl–Heisenberg bases for odd prime d: v_{k,j}(x) = ω^{k·x² + j·x}/√d plus
/// the computational basis.
fn mub_bases_odd_prime<T: Scalar>(d: usize) -> Vec<Array2<Complex<T>>> {
    let norm = T::one() / T::real(d as f64).sqrt();
    let mut out = vec![Array2::eye(d)];
    for k in 0..d {
        let mut m = Array2::zeros((d, d));
        for j in 0..d {
            for x in 0..d {
                let e = (k * x * x + j * x) % d;
                let angle = T::real(2.0) * T::PI() * T::real(e as f64) / T::real(d as f64);
                m[(j, x)] = Complex::from_polar(norm, angle);
            }
        }
        out.push(m);
    }
    out
}

/// Galois-ring bases for d = 2^m: v_{a,b}(x) = i^{tr(a·x) + 2·tr₂(b·x)}/√d
/// over the Teichmüller representatives, plus the computational basis.
fn mub_bases_pow2<T: Scalar>(m: usize) -> Vec<Array2<Complex<T>>> {
    let d = 1usize << m;
    let gr = galois::Gr4::new(m);
    let lift = gr.teichmuller_table();
    let norm = T::one() / T::real(d as f64).sqrt();
    let i_pow = [
        Complex::new(norm, T::zero()),
        Complex::new(T::zero(), norm),
        Complex::new(-norm, T::zero()),
        Complex::new(T::zero(), -norm),
    ];

    let mut out = vec![Array2::eye(d)];
    for a_int in 0..d {
        let a = lift[a_int];
        let mut basis = Array2::zeros((d, d));
        for b_int in 0..d {
            for x_int in 0..d {
                let ax = gr.mul(a, lift[x_int]);
                let bx = galois::gf2_mul(b_int as u32, x_int as u32, m);
                let e = (gr.trace(ax) as u32 + 2 * galois::gf2_trace(bx, m)) % 4;
                basis[(b_int, x_int)] = i_pow[e as usize];
            }
        }
        out.push(basis);
    }
    out
}

fn kron_vec<T: Scalar>(a: &Array1<Complex<T>>, b: &Array1<Complex<T>>) -> Array1<Complex<T>> {
    let mut out = Array1::zeros(a.len() * b.len());
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// GF(2^m) and Galois-ring GR(4, m) arithmetic for the power-of-two MUBs.
mod galois {
    /// Primitive polynomials x+1, x²+x+1, x³+x+1, x⁴+x+1 as bit masks.
    const PRIM: [u32; 5] = [0, 0b11, 0b111, 0b1011, 0b10011];

    /// Carry-less multiplication in GF(2^m).
    pub fn gf2_mul(mut a: u32, mut b: u32, m: usize) -> u32 {
        let p = PRIM[m];
        let mut r = 0;
        while b != 0 {
            if b & 1 == 1 {
                r ^= a;
            }
            b >>= 1;
            a <<= 1;
            if (a >> m) & 1 == 1 {
                a ^= p;
            }
        }
        r
    }

    /// Field trace GF(2^m) → GF(2).
    pub fn gf2_trace(a: u32, m: usize) -> u32 {
        let mut t = 0;
        let mut x = a;
        for _ in 0..m {
            t ^= x;
            x = gf2_mul(x, x, m);
        }
        debug_assert!(t <= 1, "field trace must land in GF(2)");
        t
    }

    /// Coefficient vector mod 4, low → high, fixed capacity m ≤ 4.
    pub type El = [u8; 4];

    /// Galois ring GR(4, m): Z4[x] / h(x) with h the Hensel lift of PRIM[m].
    pub struct Gr4 {
        m: usize,
        h: [u8; 5],
    }

    impl Gr4 {
        pub fn new(m: usize) -> Self {
            assert!((1..=4).contains(&m));
            Self {
                m,
                h: hensel_lift(m),
            }
        }

        pub fn zero(&self) -> El {
            [0; 4]
        }

        pub fn one(&self) -> El {
            let mut e = [0; 4];
            e[0] = 1;
            e
        }

        /// The distinguished root ξ of h (degree-one coefficient for m > 1;
        /// in GR(4,1) = Z4 the lift of the field generator is 1).
        fn xi(&self) -> El {
            let mut e = [0; 4];
            if self.m == 1 {
                e[0] = 1;
            } else {
                e[1] = 1;
            }
            e
        }

        pub fn mul(&self, a: El, b: El) -> El {
            let m = self.m;
            let mut prod = [0i16; 7];
            for i in 0..m {
                if a[i] == 0 {
                    continue;
                }
                for j in 0..m {
                    prod[i + j] = (prod[i + j] + a[i] as i16 * b[j] as i16).rem_euclid(4);
                }
            }
            for d in (m..=(2 * m).saturating_sub(2)).rev() {
                let c = prod[d];
                if c != 0 {
                    prod[d] = 0;
                    for k in 0..m {
                        prod[d - m + k] = (prod[d - m + k] - c * self.h[k] as i16).rem_euclid(4);
                    }
                }
            }
            let mut out = [0u8; 4];
            for k in 0..m {
                out[k] = prod[k] as u8;
            }
            out
        }

        /// Teichmüller set {0} ∪ {ξ^j}, indexed by the matching field element
        /// (field generator x for m > 1, 1 for m = 1).
        pub fn teichmuller_table(&self) -> Vec<El> {
            let d = 1usize << self.m;
            let gen: u32 = if self.m > 1 { 2 } else { 1 };
            let mut lift = vec![None; d];
            lift[0] = Some(self.zero());
            let mut t = self.one();
            let mut fe: u32 = 1;
            for _ in 0..(d - 1) {
                debug_assert!(lift[fe as usize].is_none(), "generator order defect");
                lift[fe as usize] = Some(t);
                t = self.mul(t, self.xi());
                fe = gf2_mul(fe, gen, self.m);
            }
            lift.into_iter()
                .map(|e| e.expect("Teichmüller table is total"))
                .collect()
        }

        /// Ring trace Σ φ^k(a) ∈ Z4 for a in the Teichmüller set, with the
        /// Frobenius φ acting as squaring there.
        pub fn trace(&self, a: El) -> u8 {
            let mut s = self.zero();
            let mut t = a;
            for _ in 0..self.m {
                for k in 0..self.m {
                    s[k] = (s[k] + t[k]) % 4;
                }
                t = self.mul(t, t);
            }
            debug_assert!(
                s[1..self.m].iter().all(|&c| c == 0),
                "trace must be scalar, got {s:?}"
            );
            s[0]
        }
    }

    /// Hensel lift of PRIM[m] to Z4 by one Graeffe step:
    /// h(x²) = (−1)^m f(x) f(−x) mod 4.
    fn hensel_lift(m: usize) -> [u8; 5] {
        let f: Vec<i16> = (0..=m).map(|i| ((PRIM[m] >> i) & 1) as i16).collect();
        let fneg: Vec<i16> = f
            .iter()
            .enumerate()
            .map(|(i, &c)| (c * if i % 2 == 0 { 1 } else { -1 }).rem_euclid(4))
            .collect();
        let mut prod = vec![0i16; 2 * m + 1];
        for (i, &a) in f.iter().enumerate() {
            for (j, &b) in fneg.iter().enumerate() {
                prod[i + j] = (prod[i + j] + a * b).rem_euclid(4);
            }
        }
        let sign = if m % 2 == 0 { 1 } else { -1 };
        let mut h = [0u8; 5];
        for i in 0..=m {
            h[i] = (sign * prod[2 * i]).rem_euclid(4) as u8;
        }
        assert_eq!(h[m], 1, "lift must stay monic");
        h
    }

}
