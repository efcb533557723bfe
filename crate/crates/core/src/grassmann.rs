//! Finite Grassmann algebras with bitmask-keyed monomials.
//!
//! Monomials are stored as sets of generator indices in increasing order.
//! For lattice algebras the generators are interleaved as
//! `psi_0, psibar_0, psi_1, psibar_1, ...`; with this layout the paired
//! Berezin integral `prod_v d/dpsibar_v d/dpsi_v` equals the coefficient of
//! the top monomial.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{DirectedEdge, FiniteLattice};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Largest supported number of generators.
pub const MAX_GENERATORS: usize = 32;

pub type Mask = u64;

/// Sign of the reordering `m1 * m2` into canonical order (zero masks overlap
/// is the caller's business).
fn product_sign(m1: Mask, m2: Mask) -> bool {
    let mut swaps = 0u32;
    let mut rest = m2;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        swaps += (m1 >> j >> 1).count_ones();
    }
    swaps % 2 == 1
}

/// Element of the Grassmann algebra on `generators` generators.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannElement<T> {
    generators: usize,
    terms: BTreeMap<Mask, T>,
}

impl<T: Scalar> GrassmannElement<T> {
    fn check_size(generators: usize) -> Result<()> {
        if generators > MAX_GENERATORS {
            return Err(Error::Capacity(format!(
                "{generators} generators exceeds the cap of {MAX_GENERATORS}"
            )));
        }
        Ok(())
    }

    pub fn zero(generators: usize) -> Result<Self> {
        Self::check_size(generators)?;
        Ok(Self {
            generators,
            terms: BTreeMap::new(),
        })
    }

    pub fn constant(generators: usize, c: T) -> Result<Self> {
        let mut x = Self::zero(generators)?;
        x.push(0, c);
        Ok(x)
    }

    pub fn one(generators: usize) -> Result<Self> {
        Self::constant(generators, T::one())
    }

    pub fn generator(generators: usize, index: usize) -> Result<Self> {
        Self::monomial(generators, &[index])
    }

    /// Ordered product `xi_{i_1} xi_{i_2} ...`; repeated indices give zero.
    pub fn monomial(generators: usize, indices: &[usize]) -> Result<Self> {
        let mut x = Self::one(generators)?;
        for &i in indices {
            if i >= generators {
                return Err(Error::GeneratorOutOfRange {
                    index: i,
                    count: generators,
                });
            }
            let mut g = Self::zero(generators)?;
            g.push(1 << i, T::one());
            x = x.multiply(&g)?;
        }
        Ok(x)
    }

    /// Builds an element from `(mask, coefficient)` pairs.
    pub fn from_terms(generators: usize, terms: impl IntoIterator<Item = (Mask, T)>) -> Result<Self> {
        let mut x = Self::zero(generators)?;
        for (m, c) in terms {
            if generators < 64 && m >> generators != 0 {
                return Err(Error::GeneratorOutOfRange {
                    index: 63 - m.leading_zeros() as usize,
                    count: generators,
                });
            }
            x.push(m, c);
        }
        Ok(x)
    }

    fn push(&mut self, mask: Mask, c: T) {
        if c.is_exact_zero() {
            return;
        }
        match self.terms.get_mut(&mask) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_exact_zero() {
                    self.terms.remove(&mask);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(mask, c);
            }
        }
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn terms(&self) -> impl Iterator<Item = (Mask, &T)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mask: Mask) -> T {
        self.terms.get(&mask).cloned().unwrap_or_else(T::zero)
    }

    fn top_mask(&self) -> Mask {
        if self.generators == 64 {
            u64::MAX
        } else {
            (1u64 << self.generators) - 1
        }
    }

    fn same_algebra(&self, other: &Self) -> Result<()> {
        if self.generators != other.generators {
            return Err(Error::InvalidInput(format!(
                "algebras differ: {} vs {} generators",
                self.generators, other.generators
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_algebra(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.push(m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-T::one()))
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Self {
            generators: self.generators,
            terms: BTreeMap::new(),
        };
        for (m, v) in self.terms() {
            out.push(m, v.clone() * c.clone());
        }
        out
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.same_algebra(other)?;
        let mut out = Self {
            generators: self.generators,
            terms: BTreeMap::new(),
        };
        for (m1, c1) in self.terms() {
            for (m2, c2) in other.terms() {
                if m1 & m2 != 0 {
                    continue;
                }
                let v = c1.clone() * c2.clone();
                out.push(m1 | m2, if product_sign(m1, m2) { -v } else { v });
            }
        }
        Ok(out)
    }

    /// Left derivative with respect to generator `g`.
    pub fn derivative(&self, g: usize) -> Result<Self> {
        if g >= self.generators {
            return Err(Error::GeneratorOutOfRange {
                index: g,
                count: self.generators,
            });
        }
        let bit = 1u64 << g;
        let mut out = Self {
            generators: self.generators,
            terms: BTreeMap::new(),
        };
        for (m, c) in self.terms() {
            if m & bit == 0 {
                continue;
            }
            let before = (m & (bit - 1)).count_ones();
            let v = c.clone();
            out.push(m & !bit, if before % 2 == 1 { -v } else { v });
        }
        Ok(out)
    }

    /// Applies derivatives in sequence, `order[0]` first, and returns the
    /// constant term.
    pub fn derivative_sequence(&self, order: &[usize]) -> Result<T> {
        let mut x = self.clone();
        for &g in order {
            x = x.derivative(g)?;
        }
        Ok(x.coefficient(0))
    }

    /// Berezin integral over all generators, `d_M ... d_1`; equal to the
    /// top-monomial coefficient.
    pub fn berezin(&self) -> T {
        self.coefficient(self.top_mask())
    }

    /// Berezin integral of `self * other` without forming the product.
    pub fn berezin_of_product(&self, other: &Self) -> Result<T> {
        self.same_algebra(other)?;
        let top = self.top_mask();
        let mut acc = T::zero();
        for (m, c) in self.terms() {
            let comp = top & !m;
            if let Some(d) = other.terms.get(&comp) {
                let v = c.clone() * d.clone();
                acc = if product_sign(m, comp) { acc - v } else { acc + v };
            }
        }
        Ok(acc)
    }

    /// True if every monomial has even degree.
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|m| m.count_ones() % 2 == 0)
    }

    /// Degree-homogeneous parity: `Some(true)` for odd, `Some(false)` for
    /// even, `None` for mixed or zero.
    pub fn parity(&self) -> Option<bool> {
        let mut it = self.terms.keys().map(|m| m.count_ones() % 2 == 1);
        let first = it.next()?;
        it.all(|p| p == first).then_some(first)
    }

    /// `sum_k x^k / k!` for a nilpotent even element.
    pub fn exp_even(&self) -> Result<Self> {
        if !self.is_even() || self.terms.contains_key(&0) {
            return Err(Error::NotEvenNilpotent);
        }
        let mut result = Self::one(self.generators)?;
        let mut power = result.clone();
        for k in 1..=self.generators / 2 {
            power = power.multiply(self)?.scale(&(T::one() / T::from_i64(k as i64)));
            if power.is_empty() {
                break;
            }
            result = result.add(&power)?;
        }
        Ok(result)
    }
}

/// Interleaved generator layout for a set of lattice sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FermionLayout {
    sites: usize,
}

impl FermionLayout {
    pub fn new(sites: usize) -> Result<Self> {
        if 2 * sites > MAX_GENERATORS {
            return Err(Error::Capacity(format!(
                "{sites} sites need {} generators (cap {MAX_GENERATORS})",
                2 * sites
            )));
        }
        Ok(Self { sites })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn generators(&self) -> usize {
        2 * self.sites
    }

    pub fn psi(&self, v: usize) -> usize {
        2 * v
    }

    pub fn psibar(&self, v: usize) -> usize {
        2 * v + 1
    }

    /// Paired derivative order `prod_v d_psibar_v d_psi_v`, listed in
    /// application order.
    pub fn paired_order(&self) -> Vec<usize> {
        (0..self.sites)
            .rev()
            .flat_map(|v| [self.psi(v), self.psibar(v)])
            .collect()
    }

    /// `sum_{u,v} psi_u A(u,v) psibar_v`.
    pub fn quadratic_form<T: Scalar>(&self, a: &DenseMatrix<T>) -> Result<GrassmannElement<T>> {
        if a.rows() != self.sites || a.cols() != self.sites {
            return Err(Error::InvalidInput("matrix does not match the layout".into()));
        }
        let mut terms = Vec::new();
        for u in 0..self.sites {
            for v in 0..self.sites {
                let c = a[(u, v)].clone();
                if c.is_exact_zero() {
                    continue;
                }
                let (p, q) = (self.psi(u), self.psibar(v));
                let mask = (1u64 << p) | (1u64 << q);
                terms.push((mask, if p > q { -c } else { c }));
            }
        }
        GrassmannElement::from_terms(self.generators(), terms)
    }

    /// Linear combination `sum_v c_v psi_v` (or `psibar_v`).
    pub fn linear<T: Scalar>(&self, coeffs: &[(usize, T)], bar: bool) -> Result<GrassmannElement<T>> {
        let terms = coeffs.iter().map(|(v, c)| {
            let g = if bar { self.psibar(*v) } else { self.psi(*v) };
            (1u64 << g, c.clone())
        });
        GrassmannElement::from_terms(self.generators(), terms)
    }
}

/// Fermionic observables on a finite lattice (Dirichlet algebra: sites are
/// the lattice vertices, exterior sites vanish).
pub struct LatticeFields<'a> {
    lattice: &'a FiniteLattice,
    layout: FermionLayout,
}

impl<'a> LatticeFields<'a> {
    pub fn new(lattice: &'a FiniteLattice) -> Result<Self> {
        Ok(Self {
            lattice,
            layout: FermionLayout::new(lattice.len())?,
        })
    }

    pub fn layout(&self) -> FermionLayout {
        self.layout
    }

    /// `nabla psi(f) = psi(f+) - psi(f-)` (or the `psibar` version).
    pub fn gradient<T: Scalar>(&self, f: DirectedEdge, bar: bool) -> Result<GrassmannElement<T>> {
        let mut coeffs = vec![(f.tail, -T::one())];
        if let Some(tip) = self.lattice.tip(f) {
            coeffs.push((tip, T::one()));
        }
        self.layout.linear(&coeffs, bar)
    }

    /// `zeta_f = nabla psi(f) nabla psibar(f)`.
    pub fn zeta_edge<T: Scalar>(&self, f: DirectedEdge) -> Result<GrassmannElement<T>> {
        self.gradient::<T>(f, false)?.multiply(&self.gradient(f, true)?)
    }

    /// `zeta_S = prod_{f in S} zeta_f`.
    pub fn zeta<T: Scalar>(&self, edges: &[DirectedEdge]) -> Result<GrassmannElement<T>> {
        let mut x = GrassmannElement::one(self.layout.generators())?;
        for &f in edges {
            x = x.multiply(&self.zeta_edge(f)?)?;
        }
        Ok(x)
    }

    /// `X_v`: average of `zeta` over the edges at `v`.
    pub fn x_field<T: Scalar>(&self, v: usize) -> Result<GrassmannElement<T>> {
        let star = self.lattice.edge_star(v);
        let mut x = GrassmannElement::zero(self.layout.generators())?;
        for &f in &star {
            x = x.add(&self.zeta_edge(f)?)?;
        }
        Ok(x.scale(&(T::one() / T::from_i64(star.len() as i64))))
    }

    /// `Y_v = prod_f (1 - zeta_f)` over the edges at `v`.
    pub fn y_field<T: Scalar>(&self, v: usize) -> Result<GrassmannElement<T>> {
        let one = GrassmannElement::one(self.layout.generators())?;
        let mut y = one.clone();
        for f in self.lattice.edge_star(v) {
            y = y.multiply(&one.sub(&self.zeta_edge(f)?)?)?;
        }
        Ok(y)
    }

    /// `prod_{v in V} X_v Y_v`.
    pub fn xy_product<T: Scalar>(&self, vertices: &[usize]) -> Result<GrassmannElement<T>> {
        let mut x = GrassmannElement::one(self.layout.generators())?;
        for &v in vertices {
            x = x.multiply(&self.x_field(v)?)?.multiply(&self.y_field(v)?)?;
        }
        Ok(x)
    }
}

/// `<F>^0 = Berezin(exp(<psi, -Delta psibar>) F)`, optionally divided by
/// `det(-Delta)`.
pub fn dirichlet_state<T: Scalar>(
    f: &GrassmannElement<T>,
    lattice: &FiniteLattice,
    normalized: bool,
) -> Result<T> {
    let layout = FermionLayout::new(lattice.len())?;
    if f.generators() != layout.generators() {
        return Err(Error::InvalidInput("element is not in the lattice algebra".into()));
    }
    let a: DenseMatrix<T> = lattice.laplacian();
    let weight = layout.quadratic_form(&a)?.exp_even()?;
    let value = weight.berezin_of_product(f)?;
    if normalized {
        Ok(value / a.determinant())
    } else {
        Ok(value)
    }
}

/// Pinned state on the wired graph: Berezin over `Lambda^g` of
/// `psi_g psibar_g exp(<psi, -Delta^g psibar> + psi_g psibar_g) F`.
/// The ghost is the last site.
pub fn pinned_state<T: Scalar>(
    f: &GrassmannElement<T>,
    lattice: &FiniteLattice,
    normalized: bool,
) -> Result<T> {
    let n = lattice.len();
    let layout = FermionLayout::new(n + 1)?;
    let f = match f.generators() {
        g if g == 2 * n => GrassmannElement::from_terms(layout.generators(), f.terms().map(|(m, c)| (m, c.clone())))?,
        g if g == 2 * (n + 1) => f.clone(),
        _ => return Err(Error::InvalidInput("element is not in the wired algebra".into())),
    };
    let a: DenseMatrix<T> = lattice.wired_laplacian();
    let ghost = n;
    let pin = GrassmannElement::monomial(layout.generators(), &[layout.psi(ghost), layout.psibar(ghost)])?;
    let weight = layout.quadratic_form(&a)?.add(&pin)?.exp_even()?;
    let value = pin.multiply(&weight)?.berezin_of_product(&f)?;
    if normalized {
        let z = pin.multiply(&weight)?.berezin();
        Ok(value / z)
    } else {
        Ok(value)
    }
}

/// `det(A) det(A^{-T})_{IJ}`; zero when `|I| != |J|`.
pub fn wick_moment<T: Scalar>(a: &DenseMatrix<T>, i: &[usize], j: &[usize]) -> Result<T> {
    if i.len() != j.len() {
        return Ok(T::zero());
    }
    let inv_t = a.inverse()?.transpose();
    Ok(a.determinant() * inv_t.select(i, j).determinant())
}

/// `det(A) det(B A^{-1} C)`.
pub fn wick_bilinear<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>, c: &DenseMatrix<T>) -> Result<T> {
    let inner = b.mul(&a.inverse()?)?.mul(c)?;
    Ok(a.determinant() * inner.determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    type E = GrassmannElement<Rational>;

    fn q(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    #[test]
    fn anticommutation_and_pauli() {
        let x1 = E::generator(4, 0).unwrap();
        let x2 = E::generator(4, 1).unwrap();
        assert!(x1.multiply(&x1).unwrap().is_empty());
        let a = x2.multiply(&x1).unwrap();
        let b = x1.multiply(&x2).unwrap();
        assert_eq!(a, b.scale(&q(-1)));
    }

    #[test]
    fn product_of_pairs() {
        let one = E::one(4).unwrap();
        let a = one.add(&E::monomial(4, &[0, 1]).unwrap()).unwrap();
        let b = one.add(&E::monomial(4, &[2, 3]).unwrap()).unwrap();
        let p = a.multiply(&b).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.coefficient(0b1111), q(1));
        assert_eq!(p.coefficient(0b0011), q(1));
    }

    #[test]
    fn derivative_signs() {
        let x = E::monomial(3, &[0, 1]).unwrap();
        assert_eq!(x.derivative(0).unwrap(), E::generator(3, 1).unwrap());
        assert_eq!(x.derivative(1).unwrap(), E::generator(3, 0).unwrap().scale(&q(-1)));
        assert!(x.derivative(2).unwrap().is_empty());
        assert!(x.derivative(3).is_err());
    }

    #[test]
    fn exp_rules() {
        let zero = E::zero(2).unwrap();
        assert_eq!(zero.exp_even().unwrap(), E::one(2).unwrap());
        let x = E::monomial(2, &[0, 1]).unwrap();
        assert_eq!(x.exp_even().unwrap(), E::one(2).unwrap().add(&x).unwrap());
        assert_eq!(E::generator(2, 0).unwrap().exp_even(), Err(Error::NotEvenNilpotent));
        assert_eq!(E::one(2).unwrap().exp_even(), Err(Error::NotEvenNilpotent));
    }

    #[test]
    fn exp_matches_naive_series_2x2() {
        let layout = FermionLayout::new(2).unwrap();
        let a = DenseMatrix::from_rows(vec![vec![q(3), q(-1)], vec![q(2), q(5)]]).unwrap();
        let qf = layout.quadratic_form(&a).unwrap();
        let sq = qf.multiply(&qf).unwrap().scale(&Rational::from_ratio(1, 2));
        let naive = E::one(4).unwrap().add(&qf).unwrap().add(&sq).unwrap();
        assert_eq!(qf.exp_even().unwrap(), naive);
        assert_eq!(naive.berezin(), a.determinant());
    }

    #[test]
    fn paired_order_is_top_coefficient() {
        let layout = FermionLayout::new(3).unwrap();
        let a = DenseMatrix::from_fn(3, 3, |i, j| q((i * 3 + j) as i64 % 5 - 1));
        let e = layout.quadratic_form(&a).unwrap().exp_even().unwrap();
        assert_eq!(e.derivative_sequence(&layout.paired_order()).unwrap(), e.berezin());
        assert_eq!(e.berezin(), a.determinant());
    }

    #[test]
    fn berezin_of_product_matches() {
        let layout = FermionLayout::new(2).unwrap();
        let a = DenseMatrix::from_rows(vec![vec![q(2), q(1)], vec![q(1), q(3)]]).unwrap();
        let e = layout.quadratic_form(&a).unwrap().exp_even().unwrap();
        let f = E::monomial(4, &[layout.psi(1), layout.psibar(0)]).unwrap();
        assert_eq!(e.berezin_of_product(&f).unwrap(), e.multiply(&f).unwrap().berezin());
        assert_eq!(
            f.multiply(&e).unwrap().berezin(),
            wick_moment(&a, &[1], &[0]).unwrap()
        );
    }

    #[test]
    fn wick_unequal_lengths_vanish() {
        let a = DenseMatrix::<f64>::identity(3);
        assert_eq!(wick_moment(&a, &[0], &[0, 1]).unwrap(), 0.0);
        assert_eq!(wick_moment(&a, &[0], &[0]).unwrap(), 1.0);
    }

    #[test]
    fn mismatched_algebras() {
        let a = E::one(2).unwrap();
        let b = E::one(3).unwrap();
        assert!(a.multiply(&b).is_err());
        assert!(E::zero(MAX_GENERATORS + 1).is_err());
    }
}
